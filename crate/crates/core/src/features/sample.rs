//! Labeled CTR samples and `samples.jsonl`.
//!
//! One JSON object per line:
//!
//! ```text
//! {"user_id":"u3","behaviors":[["i1","i7"],["i7"],[],["i2"]],
//!  "query":"summer dress","candidate_item":"i7",
//!  "categories":["dress","s2","female"],"dense":[59.0,120.0,4.5],"label":1}
//! ```
//!
//! `query_keywords` (a list of keyword names) may replace `query`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub user_id: String,
    pub behaviors: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_keywords: Option<Vec<String>>,
    pub candidate_item: String,
    pub categories: Vec<String>,
    pub dense: Vec<f64>,
    pub label: u8,
}

impl Sample {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.label > 1 {
            return Err(format!("label must be 0 or 1, found {}", self.label));
        }
        if self.query.is_none() && self.query_keywords.is_none() {
            return Err("sample needs `query` or `query_keywords`".into());
        }
        if self.dense.iter().any(|x| !x.is_finite()) {
            return Err("dense features must be finite".into());
        }
        Ok(())
    }

    pub fn clicked(&self) -> bool {
        self.label == 1
    }
}

pub fn write_samples(mut w: impl Write, samples: &[Sample]) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, s).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_samples(r: impl BufRead) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let s: Sample = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        s.validate().map_err(bad)?;
        out.push(s);
    }
    Ok(out)
}

pub fn save_samples(path: impl AsRef<Path>, samples: &[Sample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_samples(&mut w, samples)?;
    w.flush()?;
    Ok(())
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    read_samples(BufReader::new(File::open(path)?))
}
