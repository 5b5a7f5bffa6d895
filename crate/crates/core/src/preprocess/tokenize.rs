use std::fmt;
use std::str::FromStr;

/// Built-in tokenizer rule sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TokenizerRules {
    /// Unicode-whitespace split, then every leading and trailing
    /// non-alphanumeric character becomes its own token. Internal
    /// punctuation (`state-of-the-art`, `don't`, `petri_net`) is kept.
    #[default]
    Default,
    /// Unicode-whitespace split only.
    Whitespace,
}

impl TokenizerRules {
    pub fn id(self) -> &'static str {
        match self {
            TokenizerRules::Default => "default",
            TokenizerRules::Whitespace => "whitespace",
        }
    }

    pub fn tokenize(self, text: &str) -> Vec<String> {
        match self {
            TokenizerRules::Whitespace => text.split_whitespace().map(str::to_string).collect(),
            TokenizerRules::Default => {
                let mut out = Vec::new();
                for chunk in text.split_whitespace() {
                    split_edges(chunk, &mut out);
                }
                out
            }
        }
    }
}

fn split_edges(chunk: &str, out: &mut Vec<String>) {
    let Some(first) = chunk.find(char::is_alphanumeric) else {
        out.extend(chunk.chars().map(String::from));
        return;
    };
    let last = chunk
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .expect("has an alphanumeric char");
    out.extend(chunk[..first].chars().map(String::from));
    out.push(chunk[first..last].to_string());
    out.extend(chunk[last..].chars().map(String::from));
}

impl fmt::Display for TokenizerRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TokenizerRules {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(TokenizerRules::Default),
            "whitespace" => Ok(TokenizerRules::Whitespace),
            other => Err(format!("unknown tokenizer rule set `{other}`")),
        }
    }
}

/// Rule sets for dropping special-character tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SpecialRules {
    /// Drops tokens without a single alphanumeric character.
    #[default]
    Default,
}

impl SpecialRules {
    pub fn id(self) -> &'static str {
        "default"
    }

    pub fn keep(self, token: &str) -> bool {
        token.chars().any(char::is_alphanumeric)
    }
}

impl FromStr for SpecialRules {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(SpecialRules::Default),
            other => Err(format!("unknown special-character rule set `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(s: &str) -> Vec<String> {
        TokenizerRules::Default.tokenize(s)
    }

    #[test]
    fn splits_edge_punctuation() {
        assert_eq!(tok("nets, nets!"), ["nets", ",", "nets", "!"]);
        assert_eq!(
            tok("Theory of Computation"),
            ["Theory", "of", "Computation"]
        );
        assert_eq!(tok("(hello)."), ["(", "hello", ")", "."]);
        assert_eq!(tok("..."), [".", ".", "."]);
    }

    #[test]
    fn keeps_internal_marks() {
        assert_eq!(
            tok("state-of-the-art petri_net don't"),
            ["state-of-the-art", "petri_net", "don't"]
        );
        assert_eq!(tok("_x_"), ["_", "x", "_"]);
    }

    #[test]
    fn unicode_whitespace_and_letters() {
        assert_eq!(tok("naïve\u{2003}café."), ["naïve", "café", "."]);
        assert!(tok("   ").is_empty());
        assert!(tok("").is_empty());
    }

    #[test]
    fn whitespace_rules() {
        assert_eq!(TokenizerRules::Whitespace.tokenize(" a, b "), ["a,", "b"]);
    }

    #[test]
    fn special_rules() {
        assert!(SpecialRules::Default.keep("a-"));
        assert!(!SpecialRules::Default.keep("--"));
    }
}
