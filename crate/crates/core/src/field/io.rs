//! Binary field files.
//!
//! A file is one ASCII header line followed by `n^2` little-endian `f64`
//! pairs `(re, im)` in storage order:
//!
//! ```text
//! cgo-scatter-field v1 kind=scalar n=256 half_width=4 support_radius=1
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex;

use super::{GridSpec, ScalarField, SpectralField};
use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};

const MAGIC: &str = "cgo-scatter-field";

/// Which lattice a stored field lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Spectral,
}

impl FieldKind {
    fn tag(self) -> &'static str {
        match self {
            FieldKind::Scalar => "scalar",
            FieldKind::Spectral => "spectral",
        }
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    tmp.set_file_name(format!(".{}.partial", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn encode<T: Real>(kind: FieldKind, g: &GridSpec<T>, data: &[Complex<T>]) -> Vec<u8> {
    let header = format!(
        "{MAGIC} v1 kind={} n={} half_width={:?} support_radius={:?}\n",
        kind.tag(),
        g.n(),
        f64_of(g.half_width()),
        f64_of(g.support_radius())
    );
    let mut out = header.into_bytes();
    out.reserve(16 * data.len());
    for z in data {
        out.extend_from_slice(&f64_of(z.re).to_le_bytes());
        out.extend_from_slice(&f64_of(z.im).to_le_bytes());
    }
    out
}

pub fn encode_scalar<T: Real>(f: &ScalarField<T>) -> Vec<u8> {
    encode(FieldKind::Scalar, f.grid(), f.values())
}

pub fn encode_spectral<T: Real>(f: &SpectralField<T>) -> Vec<u8> {
    encode(FieldKind::Spectral, f.grid(), f.values())
}

pub fn write_scalar<T: Real>(path: &Path, f: &ScalarField<T>) -> Result<()> {
    write_atomic(path, &encode_scalar(f))
}

pub fn write_spectral<T: Real>(path: &Path, f: &SpectralField<T>) -> Result<()> {
    write_atomic(path, &encode_spectral(f))
}

fn decode<T: Real>(bytes: &[u8]) -> Result<(FieldKind, GridSpec<T>, Vec<Complex<T>>)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let mut words = header.split_whitespace();
    if words.next() != Some(MAGIC) || words.next() != Some("v1") {
        return Err(Error::Format("unknown header".into()));
    }
    let (mut kind, mut n, mut half, mut radius) = (None, None, None, None);
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| Error::Format(format!("bad token {w}")))?;
        let bad = |_| Error::Format(format!("bad value in {w}"));
        match k {
            "kind" => {
                kind = Some(match v {
                    "scalar" => FieldKind::Scalar,
                    "spectral" => FieldKind::Spectral,
                    _ => return Err(Error::Format(format!("unknown kind {v}"))),
                })
            }
            "n" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "half_width" => half = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "support_radius" => radius = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(Error::Format(format!("unknown key {k}"))),
        }
    }
    let missing = || Error::Format("incomplete header".into());
    let kind = kind.ok_or_else(missing)?;
    let grid = GridSpec::new(n.ok_or_else(missing)?, lit(half.ok_or_else(missing)?), lit(radius.ok_or_else(missing)?))?;
    let body = &bytes[nl + 1..];
    if body.len() != 16 * grid.len() {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", 16 * grid.len(), body.len())));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex::new(lit(re), lit(im))
        })
        .collect();
    Ok((kind, grid, data))
}

fn expect_kind(found: FieldKind, expected: FieldKind) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::KindMismatch { expected: expected.tag().into(), found: found.tag().into() })
    }
}

pub fn decode_scalar<T: Real>(bytes: &[u8]) -> Result<ScalarField<T>> {
    let (kind, g, data) = decode(bytes)?;
    expect_kind(kind, FieldKind::Scalar)?;
    ScalarField::from_vec(g, data)
}

pub fn decode_spectral<T: Real>(bytes: &[u8]) -> Result<SpectralField<T>> {
    let (kind, g, data) = decode(bytes)?;
    expect_kind(kind, FieldKind::Spectral)?;
    SpectralField::from_vec(g, data)
}

pub fn read_scalar<T: Real>(path: &Path) -> Result<ScalarField<T>> {
    decode_scalar(&fs::read(path)?)
}

pub fn read_spectral<T: Real>(path: &Path) -> Result<SpectralField<T>> {
    decode_spectral(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let g = GridSpec::<f64>::new(16, 2.5, 0.7).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new(a.exp() / 3.0, b.sin()));
        let back: ScalarField<f64> = decode_scalar(&encode_scalar(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn kind_is_checked() {
        let g = GridSpec::<f64>::new(16, 1.0, 0.2).unwrap();
        let s = SpectralField::<f64>::zeros(g);
        let err = decode_scalar::<f64>(&encode_spectral(&s)).unwrap_err();
        assert!(matches!(err, Error::KindMismatch { .. }));
    }

    #[test]
    fn truncated_payload_rejected() {
        let g = GridSpec::<f64>::new(16, 1.0, 0.2).unwrap();
        let mut bytes = encode_scalar(&ScalarField::<f64>::zeros(g));
        bytes.pop();
        assert!(decode_scalar::<f64>(&bytes).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_partial_file() {
        let dir = std::env::temp_dir().join(format!("cgo-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        let g = GridSpec::<f64>::new(16, 1.0, 0.2).unwrap();
        write_scalar(&path, &ScalarField::<f64>::zeros(g)).unwrap();
        let names: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
