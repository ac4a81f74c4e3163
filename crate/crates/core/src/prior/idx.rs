//! IDX image files (the MNIST container): big-endian header
//! `00 00 08 03 | n | rows | cols`, followed by `n·rows·cols` unsigned bytes.
//!
//! Square images whose side is not a power of two are zero-padded
//! symmetrically to the next power of two (28×28 MNIST digits become 32×32).

use std::path::Path;

use super::ImageGrid;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const HEADER_LEN: u64 = 16;

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<Vec<ImageGrid>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes)
}

pub fn parse_idx(bytes: &[u8]) -> Result<Vec<ImageGrid>> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            expected: 4,
            actual: bytes.len() as u64,
            offset: 0,
        });
    }
    let magic = be_u32(bytes, 0);
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::MalformedMagic { found: magic });
    }
    if magic != IMAGE_MAGIC {
        return Err(Error::UnsupportedType { magic });
    }
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
            offset: 4,
        });
    }
    let count = be_u32(bytes, 4) as usize;
    let rows = be_u32(bytes, 8) as usize;
    let cols = be_u32(bytes, 12) as usize;
    let per_image = rows * cols;
    let expected = HEADER_LEN + (count * per_image) as u64;
    if (bytes.len() as u64) < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len() as u64,
            offset: HEADER_LEN,
        });
    }
    if rows != cols || rows == 0 {
        return Err(Error::invalid("dims", format!("only square images are supported, got {rows}x{cols}")));
    }
    let side = rows.next_power_of_two();
    let k = side.trailing_zeros();
    let pad = (side - rows) / 2;

    let payload = &bytes[HEADER_LEN as usize..expected as usize];
    payload
        .chunks_exact(per_image.max(1))
        .take(count)
        .map(|img| {
            let mut pixels = vec![0.0; side * side];
            for r in 0..rows {
                for c in 0..cols {
                    pixels[(r + pad) * side + c + pad] = f64::from(img[r * cols + c]) / 255.0;
                }
            }
            ImageGrid::new(k, pixels)
        })
        .collect()
}
