//! Binary record format shared by priors, training pairs and trajectories.
//!
//! ```text
//! "PDNZ" | u32 version = 1 | u32 width | u64 rows | rows·width f64
//!        | u32 source_len | source (utf-8)
//!        | u8 has_labels | [rows × (u32 len | utf-8)]
//! ```
//!
//! All integers and floats are little-endian.

use std::io::Write;
use std::path::Path;

use super::EmpiricalPrior;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PDNZ";
pub const FORMAT_VERSION: u32 = 1;

/// A rectangular table of `f64` rows with optional per-row labels.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordTable {
    pub width: usize,
    pub values: Vec<f64>,
    pub labels: Option<Vec<String>>,
    pub source: String,
}

impl RecordTable {
    pub fn rows(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.values.len() / self.width
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.values.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend(FORMAT_VERSION.to_le_bytes());
        out.extend((self.width as u32).to_le_bytes());
        out.extend((self.rows() as u64).to_le_bytes());
        for v in &self.values {
            out.extend(v.to_le_bytes());
        }
        out.extend((self.source.len() as u32).to_le_bytes());
        out.extend(self.source.as_bytes());
        match &self.labels {
            None => out.push(0),
            Some(labels) => {
                out.push(1);
                for l in labels {
                    out.extend((l.len() as u32).to_le_bytes());
                    out.extend(l.as_bytes());
                }
            }
        }
        out
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::Truncated {
                expected: (self.at + n) as u64,
                actual: self.bytes.len() as u64,
                offset: self.at as u64,
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::CorruptHeader(format!("invalid utf-8 at byte {}", self.at)))
    }
}

pub fn read_records(bytes: &[u8]) -> Result<RecordTable> {
    if bytes.len() < 20 {
        return Err(Error::CorruptHeader(format!("{} bytes is shorter than the 20-byte header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptHeader(format!("bad magic {:?}", &bytes[..4])));
    }
    let mut cur = Cursor { bytes, at: 4 };
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let width = cur.u32()? as usize;
    let rows = cur.u64()? as usize;
    let count = width
        .checked_mul(rows)
        .ok_or_else(|| Error::CorruptHeader(format!("{rows} rows of width {width} overflows")))?;
    if count.saturating_mul(8) > bytes.len() {
        return Err(Error::Truncated {
            expected: 20 + 8 * count as u64,
            actual: bytes.len() as u64,
            offset: 20,
        });
    }
    let values = cur
        .take(8 * count)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let source = cur.string()?;
    let labels = match cur.take(1)?[0] {
        0 => None,
        1 => Some((0..rows).map(|_| cur.string()).collect::<Result<Vec<_>>>()?),
        flag => return Err(Error::CorruptHeader(format!("label flag {flag} at byte {}", cur.at - 1))),
    };
    Ok(RecordTable {
        width,
        values,
        labels,
        source,
    })
}

pub fn save_records(path: impl AsRef<Path>, table: &RecordTable) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_records(path: impl AsRef<Path>) -> Result<RecordTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_records(&bytes)
}

pub fn write_prior(prior: &EmpiricalPrior) -> Vec<u8> {
    RecordTable {
        width: prior.dim(),
        values: prior.flat().to_vec(),
        labels: prior.labels().map(<[String]>::to_vec),
        source: prior.source().to_string(),
    }
    .to_bytes()
}

pub fn read_prior(bytes: &[u8]) -> Result<EmpiricalPrior> {
    let t = read_records(bytes)?;
    let prior = EmpiricalPrior::from_flat(t.width, t.values, t.source)?;
    match t.labels {
        Some(l) => prior.with_labels(l),
        None => Ok(prior),
    }
}

pub fn save_prior(path: impl AsRef<Path>, prior: &EmpiricalPrior) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_prior(prior)).map_err(|e| Error::io(path, e))
}

pub fn load_prior(path: impl AsRef<Path>) -> Result<EmpiricalPrior> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_prior(&bytes)
}

/// CSV export: a `dim,n` header row, a row with their values, then one atom per row.
pub fn write_prior_csv(path: impl AsRef<Path>, prior: &EmpiricalPrior) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("dim,n\n{},{}\n", prior.dim(), prior.len());
    for a in prior.atoms() {
        let row: Vec<String> = a.iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
