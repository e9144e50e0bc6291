//! Minimal reader/writer for the NumPy `.npy` v1.0 container.
//!
//! Writers emit C-order little-endian arrays: `<f4` for loudness tensors and
//! `|u1` for occupancy images. The reader also accepts the other common
//! dtypes an external model might save predictions as.

use std::path::Path;

use crate::fsutil::write_atomic;
use crate::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";

/// Element storage of a decoded array.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
    Bool(Vec<bool>),
    I32(Vec<i32>),
    I64(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

impl NpyArray {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_f32(self) -> Result<Vec<f32>> {
        match self.data {
            NpyData::F32(v) => Ok(v),
            _ => Err(Error::format("npy", "expected a float32 array")),
        }
    }

    pub fn into_u8(self) -> Result<Vec<u8>> {
        match self.data {
            NpyData::U8(v) => Ok(v),
            _ => Err(Error::format("npy", "expected a uint8 array")),
        }
    }

    /// Values as 0/1 bytes; any integer, boolean or float dtype is accepted
    /// as long as every entry is exactly 0 or 1.
    pub fn to_binary(&self) -> Result<Vec<u8>> {
        let bit = |x: f64| {
            if x == 0.0 {
                Ok(0)
            } else if x == 1.0 {
                Ok(1)
            } else {
                Err(Error::format("npy", format!("expected a binary image, found value {x}")))
            }
        };
        match &self.data {
            NpyData::U8(v) => v.iter().map(|&x| bit(x as f64)).collect(),
            NpyData::Bool(v) => Ok(v.iter().map(|&b| b as u8).collect()),
            NpyData::I32(v) => v.iter().map(|&x| bit(x as f64)).collect(),
            NpyData::I64(v) => v.iter().map(|&x| bit(x as f64)).collect(),
            NpyData::F32(v) => v.iter().map(|&x| bit(x as f64)).collect(),
            NpyData::F64(v) => v.iter().map(|&x| bit(x)).collect(),
        }
    }
}

fn header(descr: &str, shape: &[usize]) -> Vec<u8> {
    let dims = match shape {
        [n] => format!("({n},)"),
        _ => format!("({})", shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")),
    };
    let dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {dims}, }}");
    // magic(6) + version(2) + length(2) + dict + padding + '\n' ≡ 0 (mod 64)
    let unpadded = 10 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    let mut out = Vec::with_capacity(unpadded + pad);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&((dict.len() + pad + 1) as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    out
}

fn check_shape(shape: &[usize], len: usize) -> Result<()> {
    if shape.iter().product::<usize>() != len {
        return Err(Error::Contract(format!("shape {shape:?} does not hold {len} values")));
    }
    Ok(())
}

pub fn encode_f32(shape: &[usize], values: &[f32]) -> Result<Vec<u8>> {
    check_shape(shape, values.len())?;
    let mut out = header("<f4", shape);
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn encode_u8(shape: &[usize], values: &[u8]) -> Result<Vec<u8>> {
    check_shape(shape, values.len())?;
    let mut out = header("|u1", shape);
    out.extend_from_slice(values);
    Ok(out)
}

pub fn write_f32(path: &Path, shape: &[usize], values: &[f32]) -> Result<()> {
    write_atomic(path, &encode_f32(shape, values)?)
}

pub fn write_u8(path: &Path, shape: &[usize], values: &[u8]) -> Result<()> {
    write_atomic(path, &encode_u8(shape, values)?)
}

pub fn read(path: &Path) -> Result<NpyArray> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format { what, detail } => Error::Format {
            what,
            detail: format!("{}: {detail}", path.display()),
        },
        other => other,
    })
}

pub fn decode(bytes: &[u8]) -> Result<NpyArray> {
    let bad = |d: &str| Error::format("npy", d.to_string());
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(bad("missing NUMPY magic"));
    }
    let (header_len, start) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => (
            u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
            12,
        ),
        v => return Err(bad(&format!("unsupported format version {v}"))),
    };
    let body = start + header_len;
    if bytes.len() < body {
        return Err(bad("truncated header"));
    }
    let dict = std::str::from_utf8(&bytes[start..body]).map_err(|_| bad("header is not text"))?;
    let descr = dict_value(dict, "descr").ok_or_else(|| bad("header lacks descr"))?;
    let descr = descr.trim_matches(|c| c == '\'' || c == '"');
    let fortran = dict_value(dict, "fortran_order").ok_or_else(|| bad("header lacks fortran_order"))?;
    if fortran != "False" {
        return Err(bad("Fortran-ordered arrays are not supported"));
    }
    let shape = parse_shape(dict).ok_or_else(|| bad("header lacks a valid shape"))?;
    let n: usize = shape.iter().product();
    let payload = &bytes[body..];
    let need = |width: usize| {
        if payload.len() == n * width {
            Ok(())
        } else {
            Err(bad(&format!("expected {} payload bytes, found {}", n * width, payload.len())))
        }
    };
    let data = match descr {
        "<f4" => {
            need(4)?;
            NpyData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        "<f8" => {
            need(8)?;
            NpyData::F64(payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        }
        "|u1" | "<u1" => {
            need(1)?;
            NpyData::U8(payload.to_vec())
        }
        "|b1" => {
            need(1)?;
            NpyData::Bool(payload.iter().map(|&b| b != 0).collect())
        }
        "<i4" => {
            need(4)?;
            NpyData::I32(payload.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        "<i8" => {
            need(8)?;
            NpyData::I64(payload.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect())
        }
        other => return Err(bad(&format!("unsupported dtype {other}"))),
    };
    Ok(NpyArray { shape, data })
}

/// Raw text of `'key': value` up to the next top-level comma.
fn dict_value<'a>(dict: &'a str, key: &str) -> Option<&'a str> {
    let at = dict.find(&format!("'{key}'"))?;
    let rest = dict[at + key.len() + 2..].trim_start().strip_prefix(':')?.trim_start();
    let end = rest.find([',', '}']).unwrap_or(rest.len());
    Some(rest[..end].trim())
}

fn parse_shape(dict: &str) -> Option<Vec<usize>> {
    let at = dict.find("'shape'")?;
    let rest = &dict[at..];
    let open = rest.find('(')?;
    let close = rest.find(')')?;
    rest[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}
