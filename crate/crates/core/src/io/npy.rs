//! Minimal NPY reader and writer for little-endian `float32`, C-order arrays.
//!
//! Writes version 1.0 files; reads 1.0 and 2.0 headers. Written headers are
//! space-padded to a 64-byte data offset, byte-compatible with `numpy.save`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// Writes `data` with the given shape as a version 1.0 NPY stream.
pub fn write_f32<W: Write>(w: &mut W, shape: &[usize], data: &[f32]) -> std::io::Result<()> {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    let header = header_string(shape);
    w.write_all(MAGIC)?;
    w.write_all(&[1, 0])?;
    w.write_all(&(header.len() as u16).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(data.len() * 4);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn header_string(shape: &[usize]) -> String {
    let dims = match shape {
        [d] => format!("({d},)"),
        _ => format!(
            "({})",
            shape.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut h = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {dims}, }}");
    // magic(6) + version(2) + length(2) + dict + '\n'
    let unpadded = 10 + h.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    h.extend(std::iter::repeat_n(' ', pad));
    h.push('\n');
    h
}

/// Reads an NPY stream of `<f4` values. Returns the shape and the flat data.
pub fn read_f32<R: Read>(r: &mut R) -> Result<(Vec<usize>, Vec<f32>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::format(format!("reading npy: {e}")))?;
    parse_f32(&bytes)
}

pub fn parse_f32(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f32>)> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::format("missing NPY magic"));
    }
    let (header_len, offset) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 => {
            if bytes.len() < 12 {
                return Err(Error::format("truncated NPY header"));
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        v => return Err(Error::format(format!("unsupported NPY version {v}.{}", bytes[7]))),
    };
    let end = offset + header_len;
    if bytes.len() < end {
        return Err(Error::format("truncated NPY header"));
    }
    let header =
        std::str::from_utf8(&bytes[offset..end]).map_err(|_| Error::format("NPY header is not ASCII"))?;
    let dict = HeaderDict::parse(header)?;
    if dict.descr != "<f4" {
        return Err(Error::format(format!(
            "unsupported dtype '{}', expected '<f4'",
            dict.descr
        )));
    }
    if dict.fortran_order {
        return Err(Error::format("Fortran-order arrays are not supported"));
    }
    let count: usize = dict.shape.iter().product();
    let payload = &bytes[end..];
    if payload.len() != count * 4 {
        return Err(Error::format(format!(
            "shape {:?} needs {} payload bytes, found {}",
            dict.shape,
            count * 4,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((dict.shape, data))
}

#[derive(Debug)]
struct HeaderDict {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

impl HeaderDict {
    /// Parses the Python dict literal numpy writes. Only the three standard
    /// keys are understood.
    fn parse(src: &str) -> Result<Self> {
        let body = src
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| Error::format("NPY header is not a dict"))?;
        let mut descr = None;
        let mut fortran_order = None;
        let mut shape = None;
        let mut rest = body.trim_start();
        while !rest.is_empty() {
            let (key, after) = take_quoted(rest)?;
            let after = after
                .trim_start()
                .strip_prefix(':')
                .ok_or_else(|| Error::format("expected ':' in NPY header"))?
                .trim_start();
            rest = match key {
                "descr" => {
                    let (v, r) = take_quoted(after)?;
                    descr = Some(v.to_string());
                    r
                }
                "fortran_order" => {
                    if let Some(r) = after.strip_prefix("False") {
                        fortran_order = Some(false);
                        r
                    } else if let Some(r) = after.strip_prefix("True") {
                        fortran_order = Some(true);
                        r
                    } else {
                        return Err(Error::format("bad fortran_order value"));
                    }
                }
                "shape" => {
                    let close = after
                        .find(')')
                        .ok_or_else(|| Error::format("unterminated shape tuple"))?;
                    let inner = after
                        .strip_prefix('(')
                        .ok_or_else(|| Error::format("shape is not a tuple"))?;
                    let dims = inner[..close - 1]
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            s.trim_end_matches('L')
                                .parse::<usize>()
                                .map_err(|_| Error::format(format!("bad dimension '{s}'")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    shape = Some(dims);
                    &after[close + 1..]
                }
                other => return Err(Error::format(format!("unexpected NPY header key '{other}'"))),
            };
            rest = rest.trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
            }
        }
        Ok(Self {
            descr: descr.ok_or_else(|| Error::format("NPY header lacks descr"))?,
            fortran_order: fortran_order.ok_or_else(|| Error::format("NPY header lacks fortran_order"))?,
            shape: shape.ok_or_else(|| Error::format("NPY header lacks shape"))?,
        })
    }
}

fn take_quoted(s: &str) -> Result<(&str, &str)> {
    let quote = s
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| Error::format("expected quoted string in NPY header"))?;
    let body = &s[1..];
    let end = body
        .find(quote)
        .ok_or_else(|| Error::format("unterminated string in NPY header"))?;
    Ok((&body[..end], &body[end + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(shape: &[usize], data: &[f32]) -> Vec<u8> {
        let mut out = Vec::new();
        write_f32(&mut out, shape, data).unwrap();
        out
    }

    #[test]
    fn header_is_aligned_and_terminated() {
        for shape in [vec![1usize], vec![16, 32, 32], vec![0, 4], vec![]] {
            let n = shape.iter().product::<usize>();
            let bytes = encode(&shape, &vec![0.0; n]);
            let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
            assert_eq!((10 + hlen) % 64, 0);
            assert_eq!(bytes[10 + hlen - 1], b'\n');
        }
    }

    #[test]
    fn exact_header_text() {
        let bytes = encode(&[2, 3, 4], &[0.0; 24]);
        let text = std::str::from_utf8(&bytes[10..]).unwrap();
        assert!(text.starts_with("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3, 4), }"));
        let bytes = encode(&[5], &[0.0; 5]);
        let text = std::str::from_utf8(&bytes[10..]).unwrap();
        assert!(text.contains("'shape': (5,)"));
    }

    #[test]
    fn parses_numpy_style_headers() {
        // Key order and spacing as numpy >= 1.x emits them, plus a reordered variant.
        for dict in [
            "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 1), }",
            "{'shape': (2, 1), 'fortran_order': False, 'descr': '<f4'}",
        ] {
            let mut bytes = MAGIC.to_vec();
            bytes.extend_from_slice(&[1, 0]);
            let h = format!("{dict}\n");
            bytes.extend_from_slice(&(h.len() as u16).to_le_bytes());
            bytes.extend_from_slice(h.as_bytes());
            bytes.extend_from_slice(&1.5f32.to_le_bytes());
            bytes.extend_from_slice(&(-2.0f32).to_le_bytes());
            let (shape, data) = parse_f32(&bytes).unwrap();
            assert_eq!(shape, vec![2, 1]);
            assert_eq!(data, vec![1.5, -2.0]);
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut bytes = encode(&[2], &[1.0, 2.0]);
        assert!(parse_f32(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(parse_f32(&bytes).is_err());
    }
}
