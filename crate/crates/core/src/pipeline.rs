//! The stages behind the command-line tool, as functions over an output
//! directory.
//!
//! | file | written by |
//! |---|---|
//! | `events.jsonl`, `samples.jsonl` | [`gen_data`] |
//! | `triples.tsv`, `vocab.tsv` | [`gen_data`], [`build_kg`] |
//! | `ckg.ckpt`, `ckg.vocab.tsv`, `pretrain_loss.csv` | [`pretrain_stage`] |
//! | `models/<variant>.kdcn`, `models/<variant>.history.csv` | [`train_stage`] |
//! | `report.csv` | [`eval_stage`] |
//!
//! `ckg.vocab.tsv` maps checkpoint rows to entities. Samples are split
//! positionally into the first 80%, the next 10% and the rest.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::ckg::{
    ingest_events, load_triples, load_vocab, read_events, save_triples, save_vocab, write_events, Event, Graph, TripleSet,
    Vocabulary,
};
use crate::config::RunConfig;
use crate::datagen::{generate_samples, generate_world, ClickModel};
use crate::error::{Error, Result};
use crate::eval::{auc, epochs_to_threshold, EvalReport, ReportRow};
use crate::features::{load_samples, save_samples, Sample};
use crate::model::{
    fit, load_model, rank_candidates, save_model, Catalog, EncodedSample, EpochRecord, RankedItem, Resolver, Variant,
};
use crate::numeric::{streams, RngStream};
use crate::pretrain::{export_checkpoint, load_checkpoint, pretrain, PretrainCheckpoint};

/// File locations under one output directory.
#[derive(Debug, Clone)]
pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn events(&self) -> PathBuf {
        self.root.join("events.jsonl")
    }
    pub fn triples(&self) -> PathBuf {
        self.root.join("triples.tsv")
    }
    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.tsv")
    }
    pub fn samples(&self) -> PathBuf {
        self.root.join("samples.jsonl")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("ckg.ckpt")
    }
    pub fn checkpoint_vocab(&self) -> PathBuf {
        self.root.join("ckg.vocab.tsv")
    }
    pub fn pretrain_loss(&self) -> PathBuf {
        self.root.join("pretrain_loss.csv")
    }
    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }
    pub fn model(&self, v: Variant) -> PathBuf {
        self.models().join(format!("{v}.kdcn"))
    }
    pub fn history(&self, v: Variant) -> PathBuf {
        self.models().join(format!("{v}.history.csv"))
    }
    pub fn timing(&self, v: Variant) -> PathBuf {
        self.models().join(format!("{v}.seconds"))
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.csv")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn missing(path: &Path, stage: &str) -> Error {
    Error::Format(format!("{} not found; run `{stage}` first", path.display()))
}

fn require(path: &Path, stage: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(missing(path, stage))
    }
}

/// Positional 80/10/10 bounds: `(⌊0.8n⌋, ⌊0.8n⌋ + ⌊0.1n⌋)`.
pub fn split_bounds(n: usize) -> (usize, usize) {
    let train = n * 8 / 10;
    (train, train + n / 10)
}

pub fn load_events(path: &Path) -> Result<Vec<Event>> {
    read_events(BufReader::new(File::open(path)?))
}

/// Generates the world and its samples.
pub fn gen_data(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let world = generate_world(&cfg.world_config())?;
    let mut rng = RngStream::new(cfg.seed).substream(streams::SAMPLES);
    let splits = generate_samples(&world, cfg.n_samples, &ClickModel::from_world(&world), &mut rng);
    let samples: Vec<Sample> = splits.all().map(|g| g.sample.clone()).collect();
    fs::create_dir_all(&out.root)?;
    let mut w = create(&out.events())?;
    write_events(&mut w, &world.events)?;
    w.flush()?;
    save_triples(out.triples(), &world.triples)?;
    save_vocab(out.vocab(), world.triples.vocab())?;
    save_samples(out.samples(), &samples)?;
    Ok(())
}

/// Rebuilds the graph files from `events.jsonl`.
pub fn build_kg(out: &OutDir) -> Result<TripleSet> {
    require(&out.events(), "gen-data")?;
    let set = ingest_events(&load_events(&out.events())?);
    save_triples(out.triples(), &set)?;
    save_vocab(out.vocab(), set.vocab())?;
    Ok(set)
}

pub fn pretrain_stage(cfg: &RunConfig, out: &OutDir) -> Result<Vec<f64>> {
    require(&out.triples(), "build-kg")?;
    let triples = load_triples(out.triples())?;
    let g = Graph::from_triples(&triples);
    let outcome = pretrain(&triples, &g, &cfg.pretrain, &RngStream::new(cfg.seed))?;
    export_checkpoint(&outcome.checkpoint, out.checkpoint())?;
    save_vocab(out.checkpoint_vocab(), triples.vocab())?;
    let mut w = create(&out.pretrain_loss())?;
    writeln!(w, "epoch,loss")?;
    for (e, l) in outcome.epoch_losses.iter().enumerate() {
        writeln!(w, "{},{l:.6}", e + 1)?;
    }
    w.flush()?;
    Ok(outcome.epoch_losses)
}

/// Everything ranking and evaluation read from disk.
pub struct Assets {
    pub checkpoint: PretrainCheckpoint,
    pub vocab: Vocabulary,
    pub catalog: Catalog,
}

impl Assets {
    pub fn load(out: &OutDir) -> Result<Self> {
        require(&out.checkpoint(), "pretrain")?;
        require(&out.events(), "gen-data")?;
        let checkpoint = load_checkpoint(out.checkpoint())?;
        let vocab = load_vocab(out.checkpoint_vocab())?;
        if vocab.len() != checkpoint.n_entities() {
            return Err(Error::Format(format!(
                "checkpoint has {} entity rows but its vocabulary has {}",
                checkpoint.n_entities(),
                vocab.len()
            )));
        }
        let catalog = Catalog::from_events(&load_events(&out.events())?);
        Ok(Self { checkpoint, vocab, catalog })
    }

    pub fn resolver(&self, cfg: &RunConfig) -> Resolver {
        Resolver::new(&self.vocab, &self.catalog, cfg.train.model.m_q, cfg.train.model.n_t)
    }
}

/// Encoded train, validation and test splits of `samples.jsonl`.
pub fn encoded_splits(
    out: &OutDir,
    resolver: &Resolver,
) -> Result<(Vec<EncodedSample>, Vec<EncodedSample>, Vec<EncodedSample>)> {
    require(&out.samples(), "gen-data")?;
    let mut all = resolver.encode_all(&load_samples(out.samples())?)?;
    let (a, b) = split_bounds(all.len());
    let test = all.split_off(b);
    let valid = all.split_off(a);
    Ok((all, valid, test))
}

fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "epoch,train_loss,valid_auc")?;
    for r in history {
        let auc = r.valid_auc.map_or_else(String::new, |a| format!("{a:.4}"));
        writeln!(w, "{},{:.6},{auc}", r.epoch, r.train_loss)?;
    }
    w.flush()?;
    Ok(())
}

fn read_history(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, line)| {
            line.split(',').nth(1).and_then(|l| l.parse().ok()).ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("bad history row {line:?}"),
            })
        })
        .collect()
}

/// Trains every variant in `cfg.variants` with the run seed.
pub fn train_stage(cfg: &RunConfig, out: &OutDir, timing: bool) -> Result<Vec<(Variant, Vec<EpochRecord>)>> {
    let assets = Assets::load(out)?;
    let (train, valid, _) = encoded_splits(out, &assets.resolver(cfg))?;
    fs::create_dir_all(out.models())?;
    let mut done = Vec::new();
    for &v in &cfg.variants {
        let start = Instant::now();
        let fitted = fit(&train, &valid, &assets.checkpoint, &v.apply(&cfg.train), &RngStream::new(cfg.seed))?;
        let seconds = start.elapsed().as_secs_f64();
        save_model(&fitted.model, out.model(v))?;
        write_history(&out.history(v), &fitted.history)?;
        if timing {
            fs::write(out.timing(v), format!("{seconds:.3}\n"))?;
        }
        done.push((v, fitted.history));
    }
    Ok(done)
}

/// Test AUC of every trained variant. The convergence threshold is the
/// DCN variant's final training loss when that model is present.
pub fn eval_stage(cfg: &RunConfig, out: &OutDir, timing: bool) -> Result<EvalReport> {
    let assets = Assets::load(out)?;
    let (_, _, test) = encoded_splits(out, &assets.resolver(cfg))?;
    let labels: Vec<u8> = test.iter().map(|s| s.label as u8).collect();
    let trained: Vec<Variant> = Variant::ALL.into_iter().filter(|&v| out.model(v).exists()).collect();
    if trained.is_empty() {
        return Err(missing(&out.models(), "train"));
    }
    let threshold = if trained.contains(&Variant::Dcn) {
        read_history(&out.history(Variant::Dcn))?.last().copied()
    } else {
        None
    };
    let mut rows = Vec::new();
    for v in trained {
        let model = load_model(out.model(v))?;
        let scores = model.predict(&test, assets.checkpoint.entities())?;
        let history = read_history(&out.history(v))?;
        let wall_seconds = if timing {
            fs::read_to_string(out.timing(v)).ok().and_then(|s| s.trim().parse().ok())
        } else {
            None
        };
        rows.push(ReportRow {
            config: v.to_string(),
            test_auc: auc(&scores, &labels)?,
            final_train_loss: history.last().copied().unwrap_or(f64::NAN),
            epochs_to_threshold: threshold.and_then(|t| epochs_to_threshold(&history, t)),
            wall_seconds,
        });
    }
    let report = EvalReport::new(rows);
    let mut w = create(&out.report())?;
    report.write_csv(&mut w, timing)?;
    w.flush()?;
    Ok(report)
}

pub fn rank_stage(
    out: &OutDir,
    variant: Variant,
    user: &str,
    query: &str,
    candidates: &[String],
) -> Result<Vec<RankedItem>> {
    require(&out.model(variant), "train")?;
    let assets = Assets::load(out)?;
    let model = load_model(out.model(variant))?;
    let resolver = Resolver::new(&assets.vocab, &assets.catalog, model.config.model.m_q, model.config.model.n_t);
    rank_candidates(user, query, candidates, &model, &assets.checkpoint, &assets.catalog, &resolver)
}

/// `rank\titem\tp` table with probabilities to 4 places.
pub fn format_ranking(ranked: &[RankedItem]) -> String {
    let mut s = String::from("rank\titem\tp\n");
    for (i, r) in ranked.iter().enumerate() {
        s.push_str(&format!("{}\t{}\t{:.4}\n", i + 1, r.item, r.p));
    }
    s
}
