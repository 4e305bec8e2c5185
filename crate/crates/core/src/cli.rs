//! Command-line surface.
//!
//! `kdcn [--seed N] [--config FILE] [--out DIR] <command>`. Exit code 0 on
//! success, 1 for usage and configuration errors, 2 for data and format
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::Variant;
use crate::pipeline::{build_kg, eval_stage, format_ranking, gen_data, pretrain_stage, rank_stage, train_stage, OutDir};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kdcn", about = "Knowledge-enhanced deep cross network pipeline")]
struct Cli {
    /// Seed for every random stream; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory all stages read from and write to.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic world: events.jsonl, triples.tsv, samples.jsonl.
    GenData,
    /// Rebuild triples.tsv and vocab.tsv from events.jsonl.
    BuildKg,
    /// Pretrain entity embeddings: ckg.ckpt, ckg.vocab.tsv, pretrain_loss.csv.
    Pretrain,
    /// Train ranker variants: models/<variant>.kdcn and .history.csv.
    Train {
        /// Comma-separated variants; defaults to `train.variants`.
        #[arg(long)]
        variant: Option<String>,
        /// Also record training wall time per variant.
        #[arg(long)]
        timing: bool,
    },
    /// Compare every trained variant on the test split: report.csv.
    Eval {
        /// Add a wall_seconds column from recorded training times.
        #[arg(long)]
        timing: bool,
    },
    /// Score candidate items for one user and query.
    Rank {
        #[arg(long)]
        user: String,
        #[arg(long)]
        query: String,
        /// Comma-separated item names.
        #[arg(long)]
        candidates: String,
        #[arg(long, default_value = "kdcn")]
        variant: String,
    },
}

fn parse_variants(s: &str) -> Result<Vec<Variant>> {
    s.split(',')
        .map(|v| Variant::parse(v.trim()).ok_or_else(|| Error::Config(format!("unknown variant {v:?}"))))
        .collect()
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
            Error::Parse { line, message } => Error::Config(format!("{}:{line}: {message}", path.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = OutDir::new(cli.out);
    match cli.command {
        Command::GenData => {
            cfg.world.validate()?;
            gen_data(&cfg, &out)?;
            writeln!(stdout, "wrote {} samples to {}", cfg.n_samples, out.root.display())?;
        }
        Command::BuildKg => {
            let set = build_kg(&out)?;
            writeln!(stdout, "{} entities, {} triples", set.n_entities(), set.len())?;
        }
        Command::Pretrain => {
            cfg.pretrain.validate()?;
            let losses = pretrain_stage(&cfg, &out)?;
            if let Some(l) = losses.last() {
                writeln!(stdout, "final pretraining loss {l:.6}")?;
            }
        }
        Command::Train { variant, timing } => {
            if let Some(v) = variant {
                cfg.variants = parse_variants(&v)?;
            }
            cfg.validate()?;
            for (v, history) in train_stage(&cfg, &out, timing)? {
                let last = history.last().map_or(f64::NAN, |r| r.train_loss);
                writeln!(stdout, "{v}: {} epochs, final train loss {last:.6}", history.len())?;
            }
        }
        Command::Eval { timing } => {
            let report = eval_stage(&cfg, &out, timing)?;
            write!(stdout, "{}", report.to_csv(timing))?;
        }
        Command::Rank { user, query, candidates, variant } => {
            let variant = Variant::parse(&variant).ok_or_else(|| Error::Config(format!("unknown variant {variant:?}")))?;
            let candidates: Vec<String> =
                candidates.split(',').map(|c| c.trim().to_owned()).filter(|c| !c.is_empty()).collect();
            let ranked = rank_stage(&out, variant, &user, &query, &candidates)?;
            write!(stdout, "{}", format_ranking(&ranked))?;
        }
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("kdcn").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors() {
        let (code, _, err) = run_capture(&[]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"), "{err}");
        assert_eq!(run_capture(&["fly"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--seed", "x", "gen-data"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
        assert_eq!(run_capture(&["--config", "/nonexistent/kdcn.conf", "gen-data"]).0, EXIT_USAGE);
    }

    #[test]
    fn missing_inputs_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, _, err) = run_capture(&["--out", out, "pretrain"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.contains("build-kg"), "{err}");
        assert_eq!(run_capture(&["--out", out, "eval"]).0, EXIT_DATA);
    }
}
