//! Tensor file formats.
//!
//! `T3D`: the magic `T3D1`, three little-endian `u32` dims `(n1, n2, n3)`,
//! then `n1·n2·n3` little-endian `f64` values, face-major and row-major
//! within each face.
//!
//! CSV: a header line `n1,n2,n3`, then one value per line in the same order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DenseTensor3, Dims};
use crate::error::{Error, Result};

pub const T3D_MAGIC: &[u8; 4] = b"T3D1";

pub fn encode_t3d(t: &DenseTensor3) -> Vec<u8> {
    let d = t.dims();
    let mut out = Vec::with_capacity(16 + 8 * d.len());
    out.extend_from_slice(T3D_MAGIC);
    for n in [d.n1, d.n2, d.n3] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_t3d(bytes: &[u8]) -> Result<DenseTensor3> {
    let bad = |message: &str| Error::ParseError {
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < 16 || &bytes[..4] != T3D_MAGIC {
        return Err(bad("missing T3D1 header"));
    }
    let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let dims = Dims::new(dim(4), dim(8), dim(12));
    if dims.is_empty() {
        return Err(bad("zero dimension"));
    }
    let body = &bytes[16..];
    if body.len() != 8 * dims.len() {
        return Err(bad(&format!(
            "expected {} bytes of payload, found {}",
            8 * dims.len(),
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseTensor3::from_vec(dims, data)
}

pub fn write_t3d(path: &Path, t: &DenseTensor3) -> Result<()> {
    fs::write(path, encode_t3d(t)).map_err(|e| Error::io(path, e))
}

pub fn read_t3d(path: &Path) -> Result<DenseTensor3> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_t3d(&bytes)
}

pub fn encode_csv(t: &DenseTensor3) -> String {
    let d = t.dims();
    let mut out = format!("{},{},{}\n", d.n1, d.n2, d.n3);
    for v in t.data() {
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn decode_csv(text: &str) -> Result<DenseTensor3> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::ParseError {
        line: 1,
        message: "empty file".into(),
    })?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::ParseError {
            line: 1,
            message: format!("bad header `{header}`: {e}"),
        })?;
    let [n1, n2, n3] = dims[..] else {
        return Err(Error::ParseError {
            line: 1,
            message: format!("header needs three dims, got `{header}`"),
        });
    };
    let data = lines
        .map(|(no, l)| {
            l.trim().parse::<f64>().map_err(|e| Error::ParseError {
                line: no + 1,
                message: format!("`{l}`: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DenseTensor3::from_vec(Dims::new(n1, n2, n3), data)
}

pub fn write_csv(path: &Path, t: &DenseTensor3) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(encode_csv(t).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<DenseTensor3> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_csv(&text)
}

/// Reads either format, choosing by extension (`.csv` or anything else as T3D).
pub fn read_tensor(path: &Path) -> Result<DenseTensor3> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_csv(path),
        _ => read_t3d(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn t3d_layout_is_bit_exact() {
        let t = DenseTensor3::from_vec(Dims::new(1, 2, 1), vec![1.0, -2.5]).unwrap();
        let bytes = encode_t3d(&t);
        let mut expected = b"T3D1".to_vec();
        expected.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&(-2.5f64).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_t3d(b"T3D0\0\0\0\0").is_err());
        let t = DenseTensor3::zeros(2, 2, 2);
        let mut bytes = encode_t3d(&t);
        bytes.pop();
        assert!(decode_t3d(&bytes).is_err());
        assert!(decode_csv("2,2\n1\n").is_err());
        assert!(decode_csv("1,1,2\n1\nx\n").is_err());
        assert!(decode_csv("1,1,2\n1\n").is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = DenseTensor3::from_fn(2, 3, 2, |i, j, k| {
            i as f64 - 0.1 * j as f64 + k as f64 / 3.0
        });
        let bin = dir.path().join("x.t3d");
        let csv = dir.path().join("x.csv");
        write_t3d(&bin, &t).unwrap();
        write_csv(&csv, &t).unwrap();
        assert_eq!(read_tensor(&bin).unwrap(), t);
        assert_eq!(read_tensor(&csv).unwrap(), t);
    }

    proptest! {
        #[test]
        fn encodings_invert(n1 in 1usize..4, n2 in 1usize..4, n3 in 1usize..4,
                            seed in any::<u64>()) {
            let mut s = seed;
            let t = DenseTensor3::from_fn(n1, n2, n3, |_, _, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                (s >> 12) as f64 * 1e-9 - 1e3
            });
            prop_assert_eq!(&decode_t3d(&encode_t3d(&t)).unwrap(), &t);
            prop_assert_eq!(&decode_csv(&encode_csv(&t)).unwrap(), &t);
        }
    }
}
