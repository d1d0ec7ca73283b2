//! Binary netpbm readers and writers: 8-bit P6 color images and 16-bit P5
//! grayscale maps (big-endian sample order, as the format requires).

use std::fs;
use std::path::Path;

use super::DataError;
use crate::map::SaliencyMap;
use crate::tensor::Tensor;

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn bad_format(path: &Path, detail: impl Into<String>) -> DataError {
    DataError::UnsupportedFormat {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Reads whitespace-separated header tokens, skipping `#` comments.
fn header_tokens(bytes: &[u8], count: usize, path: &Path) -> Result<(Vec<usize>, usize), DataError> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0usize;
    while tokens.len() < count {
        if i >= bytes.len() {
            return Err(DataError::Truncated {
                path: path.to_path_buf(),
            });
        }
        match bytes[i] {
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
                    i += 1;
                }
                let text = std::str::from_utf8(&bytes[start..i])
                    .map_err(|_| bad_format(path, "non-ASCII header"))?;
                let value: usize = text
                    .parse()
                    .map_err(|_| bad_format(path, format!("bad header token `{text}`")))?;
                tokens.push(value);
            }
        }
    }
    // Exactly one whitespace byte separates the header from the raster.
    if i >= bytes.len() {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
        });
    }
    i += 1;
    Ok((tokens, i))
}

/// Writes an RGB tensor `[3,H,W]` with values in `[0,1]` as binary PPM (P6).
pub fn write_ppm(path: &Path, image: &Tensor) -> Result<(), DataError> {
    let shape = image.shape();
    assert_eq!(shape.len(), 3, "write_ppm expects [3,H,W]");
    assert_eq!(shape[0], 3, "write_ppm expects 3 channels");
    let (h, w) = (shape[1], shape[2]);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    let data = image.data();
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let v = data[(c * h + y) * w + x];
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a binary PPM (P6) into a `[3,H,W]` tensor scaled to `[0,1]`.
pub fn read_ppm(path: &Path) -> Result<Tensor, DataError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    read_ppm_bytes(&bytes, path)
}

pub(crate) fn read_ppm_bytes(bytes: &[u8], path: &Path) -> Result<Tensor, DataError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(bad_format(path, "not a binary PPM (P6)"));
    }
    let (tokens, raster) = header_tokens(&bytes[2..], 3, path)?;
    let (w, h, maxval) = (tokens[0], tokens[1], tokens[2]);
    if maxval == 0 || maxval > 255 {
        return Err(bad_format(path, format!("unsupported maxval {maxval}")));
    }
    let raster = &bytes[2 + raster..];
    if raster.len() < 3 * w * h {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
        });
    }
    let mut data = vec![0.0; 3 * w * h];
    let scale = 1.0 / maxval as f64;
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                data[(c * h + y) * w + x] = raster[(y * w + x) * 3 + c] as f64 * scale;
            }
        }
    }
    Tensor::new(&[3, h, w], data).map_err(|_| bad_format(path, "inconsistent dimensions"))
}

/// Writes a map with values in `[0,1]` as 16-bit binary PGM (P5), scaled by 65535.
pub fn write_pgm16(path: &Path, map: &SaliencyMap) -> Result<(), DataError> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
    out.reserve(2 * w * h);
    for &v in map.values() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a binary PGM (P5), 8- or 16-bit, scaled to `[0,1]`.
pub fn read_pgm(path: &Path) -> Result<SaliencyMap, DataError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(bad_format(path, "not a binary PGM (P5)"));
    }
    let (tokens, raster) = header_tokens(&bytes[2..], 3, path)?;
    let (w, h, maxval) = (tokens[0], tokens[1], tokens[2]);
    if maxval == 0 || maxval > 65535 {
        return Err(bad_format(path, format!("unsupported maxval {maxval}")));
    }
    let raster = &bytes[2 + raster..];
    let wide = maxval > 255;
    let needed = w * h * if wide { 2 } else { 1 };
    if raster.len() < needed {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
        });
    }
    let scale = 1.0 / maxval as f64;
    let values: Vec<f64> = if wide {
        raster[..needed]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    } else {
        raster[..needed].iter().map(|&b| b as f64 * scale).collect()
    };
    SaliencyMap::new(w, h, values).map_err(|_| bad_format(path, "inconsistent dimensions"))
}
