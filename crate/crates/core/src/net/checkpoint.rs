//! Binary model checkpoint.
//!
//! Layout: magic `SALF`, format version as little-endian u32, then for each
//! parameter: name length (u32 LE) and UTF-8 bytes, rank (u32 LE), dims
//! (u32 LE each), raw f64 values little-endian. Parameters are written in
//! network order and read until end of file; round-trips are bit-exact.

use std::io::Read;
use std::path::Path;

use super::NetError;
use crate::tensor::{Parameter, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SALF";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, params: &[Parameter]) -> Result<(), NetError> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for p in params {
        let name = p.name.as_bytes();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(p.value.shape().len() as u32).to_le_bytes());
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| NetError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, Tensor)>, NetError> {
    let bytes = std::fs::read(path).map_err(|e| NetError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut cursor = bytes.as_slice();
    let mut magic = [0u8; 4];
    read_exact(&mut cursor, &mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NetError::Checkpoint {
            detail: format!("bad magic {magic:?}"),
        });
    }
    let version = read_u32(&mut cursor)?;
    if version != CHECKPOINT_VERSION {
        return Err(NetError::Checkpoint {
            detail: format!("unsupported version {version}"),
        });
    }
    let mut params = Vec::new();
    while !cursor.is_empty() {
        let name_len = read_u32(&mut cursor)? as usize;
        let mut name = vec![0u8; name_len];
        read_exact(&mut cursor, &mut name)?;
        let name = String::from_utf8(name).map_err(|_| NetError::Checkpoint {
            detail: "parameter name is not UTF-8".into(),
        })?;
        let rank = read_u32(&mut cursor)? as usize;
        if rank > 4 {
            return Err(NetError::Checkpoint {
                detail: format!("parameter `{name}` has rank {rank} > 4"),
            });
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut cursor)? as usize);
        }
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let mut b = [0u8; 8];
            read_exact(&mut cursor, &mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        let tensor = Tensor::new(&shape, data).map_err(|e| NetError::Checkpoint {
            detail: format!("parameter `{name}`: {e}"),
        })?;
        params.push((name, tensor));
    }
    Ok(params)
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8]) -> Result<(), NetError> {
    cursor.read_exact(buf).map_err(|_| NetError::Checkpoint {
        detail: "unexpected end of file".into(),
    })
}

fn read_u32(cursor: &mut &[u8]) -> Result<u32, NetError> {
    let mut b = [0u8; 4];
    read_exact(cursor, &mut b)?;
    Ok(u32::from_le_bytes(b))
}
