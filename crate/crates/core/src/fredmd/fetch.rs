use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::date::YearMonth;

pub const BASE_URL: &str = "https://files.stlouisfed.org/files/htdocs/fred-md";
pub const CURRENT_URL: &str = "https://files.stlouisfed.org/files/htdocs/fred-md/monthly/current.csv";

/// URL of a dated monthly vintage, or of the current one.
pub fn vintage_url(vintage: Option<YearMonth>) -> String {
    match vintage {
        Some(v) => format!("{BASE_URL}/monthly/{v}.csv"),
        None => CURRENT_URL.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("{url}: not found (404)")]
    NotFound { url: String },
    #[error("{url}: HTTP status {status}")]
    Status { url: String, status: u16 },
    #[error("{url}: {message}")]
    Network { url: String, message: String },
}

/// Minimal byte-fetching interface so the cache can be tested offline.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError>;
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("fetch failed and no valid cache entry exists: {0}")]
    Transport(#[from] TransportError),
    #[error("cache i/o at {path}: {source}")]
    Cache { path: PathBuf, source: io::Error },
    #[error("cannot derive a cache key from url `{0}`")]
    BadUrl(String),
}

static CACHE_LOCK: Mutex<()> = Mutex::new(());

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn cache_key(url: &str) -> Option<String> {
    let name = url.rsplit('/').next()?;
    let stem = name.strip_suffix(".csv").unwrap_or(name);
    (!stem.is_empty() && stem.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'))
        .then(|| stem.to_string())
}

fn read_valid(data: &Path, sidecar: &Path) -> Option<Vec<u8>> {
    let bytes = fs::read(data).ok()?;
    let expected = fs::read_to_string(sidecar).ok()?;
    (expected.trim() == sha256_hex(&bytes)).then_some(bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FetchError> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let wrap = |source| FetchError::Cache { path: path.to_path_buf(), source };
    fs::write(&tmp, bytes).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(wrap)
}

/// Return the bytes at `url`, serving from `cache_dir` when a checksum-valid
/// copy exists. A corrupted entry is refetched and overwritten.
pub fn fetch_fredmd(transport: &dyn Transport, url: &str, cache_dir: &Path) -> Result<Vec<u8>, FetchError> {
    let key = cache_key(url).ok_or_else(|| FetchError::BadUrl(url.to_string()))?;
    let data = cache_dir.join(format!("{key}.csv"));
    let sidecar = cache_dir.join(format!("{key}.csv.sha256"));
    let _guard = CACHE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(bytes) = read_valid(&data, &sidecar) {
        log::debug!("cache hit for {url}");
        return Ok(bytes);
    }
    if data.exists() {
        log::warn!("cache entry {} failed its checksum, refetching", data.display());
    }
    let bytes = transport.get(url)?;
    fs::create_dir_all(cache_dir).map_err(|source| FetchError::Cache { path: cache_dir.to_path_buf(), source })?;
    write_atomic(&data, &bytes)?;
    write_atomic(&sidecar, format!("{}\n", sha256_hex(&bytes)).as_bytes())?;
    Ok(bytes)
}

#[cfg(feature = "http")]
pub use http::HttpTransport;

#[cfg(feature = "http")]
mod http {
    use super::{Transport, TransportError};

    /// Blocking HTTPS transport.
    pub struct HttpTransport {
        client: reqwest::blocking::Client,
    }

    impl HttpTransport {
        pub fn new() -> Result<Self, TransportError> {
            let client = reqwest::blocking::Client::builder()
                .user_agent(concat!("marxbench/", env!("CARGO_PKG_VERSION")))
                .build()
                .map_err(|e| TransportError::Network { url: String::new(), message: e.to_string() })?;
            Ok(HttpTransport { client })
        }
    }

    impl Transport for HttpTransport {
        fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
            let network = |e: reqwest::Error| TransportError::Network { url: url.to_string(), message: e.to_string() };
            let resp = self.client.get(url).send().map_err(network)?;
            let status = resp.status().as_u16();
            match status {
                200..=299 => Ok(resp.bytes().map_err(network)?.to_vec()),
                404 => Err(TransportError::NotFound { url: url.to_string() }),
                _ => Err(TransportError::Status { url: url.to_string(), status }),
            }
        }
    }
}
