//! DPMF binary arrays: magic `DPMF`, version byte, rank byte, complex flag
//! byte, one little-endian `u64` per dimension, then row-major little-endian
//! `f64` data (complex values as interleaved `re, im`).

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DPMF";
pub const VERSION: u8 = 0x01;

#[derive(Debug, Clone, PartialEq)]
pub enum DpmfData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl DpmfData {
    fn len(&self) -> usize {
        match self {
            DpmfData::Real(v) => v.len(),
            DpmfData::Complex(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpmfArray {
    dims: Vec<usize>,
    data: DpmfData,
}

impl DpmfArray {
    pub fn new(dims: Vec<usize>, data: DpmfData) -> Result<Self> {
        if dims.is_empty() || dims.len() > u8::MAX as usize {
            return Err(Error::Format(format!("rank must lie in 1..=255, got {}", dims.len())));
        }
        let expected = dims.iter().try_fold(1usize, |a, d| a.checked_mul(*d));
        match expected {
            Some(n) if n == data.len() => Ok(DpmfArray { dims, data }),
            Some(n) => Err(Error::SizeMismatch { expected: n, found: data.len() }),
            None => Err(Error::Format("dimensions overflow".into())),
        }
    }

    pub fn real(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        DpmfArray::new(dims, DpmfData::Real(data))
    }

    pub fn complex(dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        DpmfArray::new(dims, DpmfData::Complex(data))
    }

    /// Stack equally long rows into a rank-2 array.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Format("rows differ in length".into()));
        }
        DpmfArray::real(vec![rows.len(), width], rows.concat())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &DpmfData {
        &self.data
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        let flag = u8::from(matches!(self.data, DpmfData::Complex(_)));
        w.write_all(&[VERSION, self.dims.len() as u8, flag])?;
        for d in &self.dims {
            w.write_all(&(*d as u64).to_le_bytes())?;
        }
        match &self.data {
            DpmfData::Real(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            DpmfData::Complex(v) => {
                for z in v {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 7];
        r.read_exact(&mut head).map_err(|_| Error::Format("truncated header".into()))?;
        if &head[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if head[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", head[4])));
        }
        let rank = head[5] as usize;
        let complex = match head[6] {
            0 => false,
            1 => true,
            f => return Err(Error::Format(format!("bad complex flag {f}"))),
        };
        let mut word = [0u8; 8];
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut word).map_err(|_| Error::Format("truncated dimensions".into()))?;
            let d =
                usize::try_from(u64::from_le_bytes(word)).map_err(|_| Error::Format("dimension too large".into()))?;
            dims.push(d);
        }
        let count = dims
            .iter()
            .try_fold(1usize, |a, d| a.checked_mul(*d))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let words = if complex { count * 2 } else { count };
        let mut raw = Vec::with_capacity(words);
        for _ in 0..words {
            r.read_exact(&mut word).map_err(|_| Error::Format("truncated data".into()))?;
            raw.push(f64::from_le_bytes(word));
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format("trailing bytes".into()));
        }
        let data = if complex {
            DpmfData::Complex(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
        } else {
            DpmfData::Real(raw)
        };
        DpmfArray::new(dims, data)
    }
}
