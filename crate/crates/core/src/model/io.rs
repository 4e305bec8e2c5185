//! Binary model files.
//!
//! Little-endian throughout:
//!
//! | bytes | field |
//! |---|---|
//! | 4 | magic `KDCN` |
//! | 4 | u32 version = 1 |
//! | 4 | u32 metadata length `m` |
//! | m | UTF-8 `key=value` lines: `train.*`, `model.*`, `layout.n_cat_fields`, `layout.n_dense`, `kg_dim`, `cat.<row>` |
//! | 4 | u32 slot count `s` |
//! | s × (4 + len + 16) | manifest: u32 name length, name, u64 rows, u64 cols |
//! | 4·Σ rows·cols | f32 payloads in manifest order |
//!
//! Slots are the trainable parameters in name order followed by `dense.mean`
//! and `dense.std`. Optimizer moments are not stored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::network::{CatVocab, DenseStats, KdcnModel};
use crate::config::{set_train_key, split_line, train_pairs};
use crate::error::{Error, Result};
use crate::model::TrainConfig;
use crate::numeric::{ParamStore, Tensor2D};
use crate::pretrain::checkpoint::{read_exact, read_table, read_u32, read_u64, write_f32s};

pub const MODEL_MAGIC: &[u8; 4] = b"KDCN";
pub const MODEL_VERSION: u32 = 1;
const DENSE_MEAN: &str = "dense.mean";
const DENSE_STD: &str = "dense.std";

fn metadata(model: &KdcnModel) -> Result<String> {
    let mut out = String::new();
    for (k, v) in train_pairs(&model.config) {
        out.push_str(&format!("{k}={v}\n"));
    }
    out.push_str(&format!("layout.n_cat_fields={}\n", model.layout.n_cat_fields));
    out.push_str(&format!("layout.n_dense={}\n", model.layout.n_dense));
    out.push_str(&format!("kg_dim={}\n", model.kg_dim));
    for (i, name) in model.cat_vocab.names().iter().enumerate() {
        if name.contains('\n') || name.contains('\r') || name.trim() != name {
            return Err(Error::Format(format!("categorical value {name:?} cannot be stored")));
        }
        out.push_str(&format!("cat.{i}={name}\n"));
    }
    Ok(out)
}

fn slots(model: &KdcnModel) -> Vec<(String, Tensor2D)> {
    let mut out: Vec<(String, Tensor2D)> =
        model.params.iter().map(|(name, slot)| (name.to_owned(), slot.value.clone())).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.push((DENSE_MEAN.into(), Tensor2D::row_vector(model.dense_stats.mean.clone())));
    out.push((DENSE_STD.into(), Tensor2D::row_vector(model.dense_stats.std.clone())));
    out
}

pub fn write_model(model: &KdcnModel, mut w: impl Write) -> Result<()> {
    let meta = metadata(model)?;
    let slots = slots(model);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    w.write_all(&(slots.len() as u32).to_le_bytes())?;
    for (name, t) in &slots {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rows() as u64).to_le_bytes())?;
        w.write_all(&(t.cols() as u64).to_le_bytes())?;
    }
    for (_, t) in &slots {
        write_f32s(&mut w, t.data())?;
    }
    Ok(())
}

pub fn model_to_bytes(model: &KdcnModel) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    Ok(buf)
}

fn read_string(r: &mut impl Read, len: usize, what: &str) -> Result<String> {
    if len > 1 << 26 {
        return Err(Error::Format(format!("implausible {what} length {len}")));
    }
    let mut b = vec![0u8; len];
    read_exact(r, &mut b, what)?;
    String::from_utf8(b).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
}

fn meta_usize(v: &str, key: &str) -> Result<usize> {
    v.parse().map_err(|_| Error::Format(format!("metadata {key}: bad value {v:?}")))
}

pub fn read_model(mut r: impl Read) -> Result<KdcnModel> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected {MODEL_MAGIC:?}")));
    }
    let version = read_u32(&mut r, "version")?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let meta_len = read_u32(&mut r, "metadata length")? as usize;
    let meta = read_string(&mut r, meta_len, "metadata")?;

    let mut config = TrainConfig::default();
    let (mut n_cat_fields, mut n_dense, mut kg_dim) = (None, None, None);
    let mut cats: Vec<(usize, String)> = Vec::new();
    for line in meta.lines() {
        let (k, v) = match split_line(line) {
            None => continue,
            Some(Ok(kv)) => kv,
            Some(Err(m)) => return Err(Error::Format(format!("metadata: {m}"))),
        };
        match k {
            "layout.n_cat_fields" => n_cat_fields = Some(meta_usize(v, k)?),
            "layout.n_dense" => n_dense = Some(meta_usize(v, k)?),
            "kg_dim" => kg_dim = Some(meta_usize(v, k)?),
            _ => match k.strip_prefix("cat.") {
                Some(i) => cats.push((meta_usize(i, k)?, v.to_owned())),
                None => set_train_key(&mut config, k, v).map_err(|e| Error::Format(format!("metadata: {e}")))?,
            },
        }
    }
    let missing = |k: &str| Error::Format(format!("metadata lacks {k}"));
    let n_cat_fields = n_cat_fields.ok_or_else(|| missing("layout.n_cat_fields"))?;
    let n_dense = n_dense.ok_or_else(|| missing("layout.n_dense"))?;
    let kg_dim = kg_dim.ok_or_else(|| missing("kg_dim"))?;
    if cats.iter().enumerate().any(|(i, (j, _))| i != *j) {
        return Err(Error::Format("categorical rows are not numbered 0..n in order".into()));
    }
    let cat_vocab = CatVocab::from_names(cats.into_iter().map(|(_, n)| n).collect());
    config.validate().map_err(|e| Error::Format(format!("stored config: {e}")))?;

    let n_slots = read_u32(&mut r, "slot count")? as usize;
    let mut manifest = Vec::with_capacity(n_slots.min(4096));
    for _ in 0..n_slots {
        let len = read_u32(&mut r, "slot name length")? as usize;
        let name = read_string(&mut r, len, "slot name")?;
        let rows = read_u64(&mut r, "slot rows")? as usize;
        let cols = read_u64(&mut r, "slot cols")? as usize;
        manifest.push((name, rows, cols));
    }
    let mut params = ParamStore::new();
    let (mut mean, mut std) = (None, None);
    for (name, rows, cols) in manifest {
        let t = read_table(&mut r, rows, cols, &name)?;
        match name.as_str() {
            DENSE_MEAN => mean = Some(t.into_data()),
            DENSE_STD => std = Some(t.into_data()),
            _ => {
                if params.contains(&name) {
                    return Err(Error::Format(format!("duplicate slot {name}")));
                }
                params.insert(name, t)
            }
        }
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after model payload".into()));
    }
    let dense_stats = DenseStats {
        mean: mean.ok_or_else(|| missing(DENSE_MEAN))?,
        std: std.ok_or_else(|| missing(DENSE_STD))?,
    };
    let layout = KdcnModel::layout_for(&config, kg_dim, n_cat_fields, n_dense);
    let model = KdcnModel { config, layout, kg_dim, params, cat_vocab, dense_stats };
    model.check_slots().map_err(|e| Error::Format(format!("model slots: {e}")))?;
    Ok(model)
}

pub fn save_model(model: &KdcnModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<KdcnModel> {
    read_model(BufReader::new(File::open(path)?))
}
