//! File formats: raw IQ captures, JSON documents and atomic writes.
//!
//! IQ files hold interleaved real/imaginary `f64` samples, little-endian,
//! with no header.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const SAMPLE_BYTES: usize = 16;

pub fn decode_iq(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(SAMPLE_BYTES) {
        return Err(Error::LengthMismatch {
            what: "bytes (a whole number of 16-byte samples)",
            expected: bytes.len() / SAMPLE_BYTES * SAMPLE_BYTES,
            actual: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(SAMPLE_BYTES)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

pub fn encode_iq(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * SAMPLE_BYTES);
    for s in samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

pub fn read_iq_file(path: &Path) -> Result<Vec<Complex64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_iq(&bytes)
}

pub fn write_iq_file(path: &Path, samples: &[Complex64]) -> Result<()> {
    write_atomic(path, &encode_iq(samples))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);

    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
