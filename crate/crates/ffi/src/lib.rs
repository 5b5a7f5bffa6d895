//! C ABI over the wecstore catalog.
//!
//! Every function returns a [`WecStatus`]; on failure the message is
//! available from [`wec_last_error`] on the same thread until the next call.
//! Strings returned by the library are released with [`wec_string_free`],
//! catalogs with [`wec_catalog_close`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wecstore::catalog::CatalogError;
use wecstore::{
    get_vectors, parse_identifier, Catalog, Error, ImportOptions, Inputs, PhraseSetup,
    PipelineDescriptor, PipelineOptions, PreprocessCache, RetrieveOptions,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WecStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Identifier = 3,
    NotFound = 4,
    Duplicate = 5,
    Catalog = 6,
    Store = 7,
    Preprocess = 8,
    Io = 9,
    BufferTooSmall = 10,
    Other = 11,
    Panic = 12,
}

/// Opaque catalog handle.
pub struct WecCatalog {
    inner: Catalog,
    cache: PreprocessCache,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> WecStatus {
    match err {
        Error::Identifier(_) => WecStatus::Identifier,
        Error::Catalog(CatalogError::NotFound(_)) => WecStatus::NotFound,
        Error::Catalog(CatalogError::Duplicate(_)) => WecStatus::Duplicate,
        Error::Catalog(CatalogError::Store { .. }) | Error::Store(_) => WecStatus::Store,
        Error::Catalog(CatalogError::Pipeline { .. } | CatalogError::Phrase(_))
        | Error::Pipeline(_)
        | Error::Phrase(_) => WecStatus::Preprocess,
        Error::Catalog(CatalogError::Io(_)) | Error::Io(_) => WecStatus::Io,
        Error::Catalog(_) => WecStatus::Catalog,
        _ => WecStatus::Other,
    }
}

enum Failure {
    Status(WecStatus, String),
    Lib(Error),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Lib(e.into())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WecStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            WecStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Status(
            WecStatus::NullArgument,
            format!("`{name}` is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(WecStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn catalog_arg<'a>(p: *const WecCatalog) -> Result<&'a WecCatalog, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::Status(WecStatus::NullArgument, "`catalog` is null".into()))
}

fn null_out(name: &str) -> Failure {
    Failure::Status(WecStatus::NullArgument, format!("`{name}` is null"))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn wec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Opens the catalog at `root`.
///
/// # Safety
/// `root` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wec_catalog_open(
    root: *const c_char,
    create_if_missing: bool,
    out: *mut *mut WecCatalog,
) -> WecStatus {
    guard(|| {
        let root = str_arg(root, "root")?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        let inner = Catalog::open(root, create_if_missing)?;
        *out = Box::into_raw(Box::new(WecCatalog {
            inner,
            cache: PreprocessCache::new(),
        }));
        Ok(())
    })
}

/// Releases a catalog handle. Null is ignored.
///
/// # Safety
/// `catalog` must come from [`wec_catalog_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wec_catalog_close(catalog: *mut WecCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Registers `identifier` with its default pipeline and imports the text
/// file at `path`. `out_imported` may be null.
///
/// # Safety
/// Pointer arguments must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wec_catalog_import(
    catalog: *const WecCatalog,
    path: *const c_char,
    identifier: *const c_char,
    out_imported: *mut u64,
) -> WecStatus {
    guard(|| {
        let cat = catalog_arg(catalog)?;
        let path = str_arg(path, "path")?;
        let id = parse_identifier(str_arg(identifier, "identifier")?)?;
        let pipeline = PipelineDescriptor::for_identifier(&id, PipelineOptions::default());
        let report = cat.inner.import(
            path,
            &id,
            pipeline,
            PhraseSetup::None,
            ImportOptions::default(),
        )?;
        if !out_imported.is_null() {
            *out_imported = report.imported;
        }
        Ok(())
    })
}

/// Number of records in the WEC.
///
/// # Safety
/// Pointer arguments must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wec_catalog_vocab_size(
    catalog: *const WecCatalog,
    identifier: *const c_char,
    out: *mut u64,
) -> WecStatus {
    guard(|| {
        let cat = catalog_arg(catalog)?;
        let id = parse_identifier(str_arg(identifier, "identifier")?)?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = cat.inner.vocab_size(&id)?;
        Ok(())
    })
}

/// Vector length of the WEC.
///
/// # Safety
/// Pointer arguments must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wec_catalog_dims(
    catalog: *const WecCatalog,
    identifier: *const c_char,
    out: *mut usize,
) -> WecStatus {
    guard(|| {
        let cat = catalog_arg(catalog)?;
        let id = parse_identifier(str_arg(identifier, "identifier")?)?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = cat.inner.store(&id)?.dims();
        Ok(())
    })
}

/// Whether `word` has a vector.
///
/// # Safety
/// Pointer arguments must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wec_catalog_contains(
    catalog: *const WecCatalog,
    identifier: *const c_char,
    word: *const c_char,
    out: *mut bool,
) -> WecStatus {
    guard(|| {
        let cat = catalog_arg(catalog)?;
        let id = parse_identifier(str_arg(identifier, "identifier")?)?;
        let word = str_arg(word, "word")?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = cat.inner.contains(&id, word)?;
        Ok(())
    })
}

/// Copies the vector of `word` into `buf`. `out_dims` always receives the
/// vector length; a `buf_len` smaller than it gives `BufferTooSmall`.
/// A word without a vector gives `NotFound`.
///
/// # Safety
/// `buf` must hold `buf_len` floats; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wec_catalog_get_vector(
    catalog: *const WecCatalog,
    identifier: *const c_char,
    word: *const c_char,
    buf: *mut f32,
    buf_len: usize,
    out_dims: *mut usize,
) -> WecStatus {
    guard(|| {
        let cat = catalog_arg(catalog)?;
        let id = parse_identifier(str_arg(identifier, "identifier")?)?;
        let word = str_arg(word, "word")?;
        let store = cat.inner.store(&id)?;
        if !out_dims.is_null() {
            *out_dims = store.dims();
        }
        let v = store.get(word).ok_or_else(|| {
            Failure::Status(WecStatus::NotFound, format!("no vector for `{word}`"))
        })?;
        if buf.is_null() {
            return Err(null_out("buf"));
        }
        if buf_len < v.len() {
            return Err(Failure::Status(
                WecStatus::BufferTooSmall,
                format!("buffer holds {buf_len} floats, vector has {}", v.len()),
            ));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Runs a retrieval for `count` input units and returns the result as JSON
/// in `out_json` (free with [`wec_string_free`]). With `raw` each unit is a
/// sentence preprocessed per WEC; otherwise a whitespace-separated word list.
/// The handle's preprocessing cache is shared across calls.
///
/// # Safety
/// `units` must point to `count` valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn wec_get_vectors_json(
    catalog: *const WecCatalog,
    query: *const c_char,
    units: *const *const c_char,
    count: usize,
    raw: bool,
    in_order: bool,
    out_json: *mut *mut c_char,
) -> WecStatus {
    guard(|| {
        let cat = catalog_arg(catalog)?;
        let query = str_arg(query, "query")?;
        if out_json.is_null() {
            return Err(null_out("out_json"));
        }
        if units.is_null() && count > 0 {
            return Err(null_out("units"));
        }
        let mut lines = Vec::with_capacity(count);
        for i in 0..count {
            lines.push(str_arg(*units.add(i), "units[i]")?.to_string());
        }
        let options = RetrieveOptions {
            in_order,
            ..RetrieveOptions::default()
        };
        let res = if raw {
            get_vectors(&cat.inner, query, &cat.cache, Inputs::Raw(&lines), options)?
        } else {
            let tokens: Vec<Vec<String>> = lines
                .iter()
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect();
            get_vectors(
                &cat.inner,
                query,
                &cat.cache,
                Inputs::Tokens(&tokens),
                options,
            )?
        };
        let json = CString::new(res.to_json()).expect("JSON has no NUL");
        *out_json = json.into_raw();
        Ok(())
    })
}

/// Cosine distance of two vectors of length `len`. A zero vector gives
/// `Other` with an explanatory message.
///
/// # Safety
/// `a` and `b` must each hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn wec_cosine_distance(
    a: *const f32,
    b: *const f32,
    len: usize,
    out: *mut f64,
) -> WecStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null_out("a/b/out"));
        }
        let (a, b) = (
            std::slice::from_raw_parts(a, len),
            std::slice::from_raw_parts(b, len),
        );
        *out = wecstore::cosine_distance(a, b)?;
        Ok(())
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
