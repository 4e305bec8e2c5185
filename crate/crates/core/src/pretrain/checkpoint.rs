//! The `CKGE` embedding checkpoint.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |---|---|
//! | 4 | magic `CKGE` |
//! | 4 | version, u32 = 1 |
//! | 8 | n_entities, u64 |
//! | 8 | n_relations, u64 |
//! | 4 | dim, u32 |
//! | 4·dim·n_entities | entity rows, f32 |
//! | 4·dim·n_relations | relation rows, f32 |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{dim_err, Error, Result};
use crate::numeric::Tensor2D;

pub const MAGIC: &[u8; 4] = b"CKGE";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainCheckpoint {
    entities: Tensor2D,
    relations: Tensor2D,
}

impl PretrainCheckpoint {
    pub fn new(entities: Tensor2D, relations: Tensor2D) -> Result<Self> {
        if entities.cols() != relations.cols() {
            return Err(dim_err("entity vs relation table", entities.shape(), relations.shape()));
        }
        Ok(Self { entities, relations })
    }

    pub fn entities(&self) -> &Tensor2D {
        &self.entities
    }

    pub fn relations(&self) -> &Tensor2D {
        &self.relations
    }

    pub fn dim(&self) -> usize {
        self.entities.cols()
    }

    pub fn n_entities(&self) -> usize {
        self.entities.rows()
    }

    /// Size of the serialized form.
    pub fn file_len(&self) -> usize {
        HEADER_BYTES + 4 * self.dim() * (self.entities.rows() + self.relations.rows())
    }

    /// The checkpoint as it reads back from disk.
    pub fn downcast(&self) -> Self {
        let f = |t: &Tensor2D| t.map(|x| x as f32 as f64);
        Self {
            entities: f(&self.entities),
            relations: f(&self.relations),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let dim = u32::try_from(self.dim()).map_err(|_| Error::Format("embedding dim exceeds u32".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.entities.rows() as u64).to_le_bytes())?;
        w.write_all(&(self.relations.rows() as u64).to_le_bytes())?;
        w.write_all(&dim.to_le_bytes())?;
        write_f32s(&mut w, self.entities.data())?;
        write_f32s(&mut w, self.relations.data())?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.file_len());
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad checkpoint magic {magic:?}")));
        }
        let version = read_u32(&mut r, "version")?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let n_e = read_u64(&mut r, "n_entities")? as usize;
        let n_r = read_u64(&mut r, "n_relations")? as usize;
        let dim = read_u32(&mut r, "dim")? as usize;
        let entities = read_table(&mut r, n_e, dim, "entity rows")?;
        let relations = read_table(&mut r, n_r, dim, "relation rows")?;
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format("trailing bytes after checkpoint payload".into()));
        }
        Ok(Self { entities, relations })
    }
}

pub fn export_checkpoint(ckpt: &PretrainCheckpoint, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    ckpt.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PretrainCheckpoint> {
    PretrainCheckpoint::read_from(BufReader::new(File::open(path)?))
}

pub(crate) fn write_f32s(w: &mut impl Write, data: &[f64]) -> Result<()> {
    for &x in data {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated file while reading {what}")),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_table(r: &mut impl Read, rows: usize, cols: usize, what: &str) -> Result<Tensor2D> {
    let n = rows
        .checked_mul(cols)
        .filter(|n| *n <= (1 << 32))
        .ok_or_else(|| Error::Format(format!("implausible {what} shape {rows}x{cols}")))?;
    let mut bytes = vec![0u8; 4 * n];
    read_exact(r, &mut bytes, what)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Tensor2D::from_vec(rows, cols, data)
}
