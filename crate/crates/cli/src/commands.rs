use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use sors_core::data::{read_libsvm_file, ParseOptions};
use sors_core::{
    evaluate_retrieval, model_sparsity, read_model, split, write_model, Algorithm, EvalReport,
    LabeledDataset, Learner, SimilarityModel, SplitSpec, TripletSampler,
};

use crate::config::ExperimentConfig;

pub const CURVE_HEADER: &str = "iter,map,sparsity,mean_loss,seconds";
pub const BENCH_HEADER: &str = "algo,map,sparsity,train_seconds,nnz";

/// One learning-curve checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub iter: u64,
    pub map: f64,
    pub sparsity: f64,
    pub mean_loss: f64,
    /// Training time so far, excluding checkpoint evaluations.
    pub seconds: f64,
}

impl CurvePoint {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.3}",
            self.iter, self.map, self.sparsity, self.mean_loss, self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curve: Vec<CurvePoint>,
    pub report: EvalReport,
    pub model: SimilarityModel,
    pub train_seconds: f64,
    /// SHA-256 of the sampled `(anchor, positive, negative)` positions.
    pub stream_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub algo: Algorithm,
    pub map: f64,
    pub sparsity: f64,
    pub train_seconds: f64,
    pub nnz: usize,
    pub stream_digest: String,
}

/// Sampler seed derived from the experiment seed, so the split and the
/// triplet stream draw from unrelated generators.
fn sampler_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

pub fn load_dataset(path: &Path, options: &ParseOptions) -> Result<LabeledDataset> {
    read_libsvm_file(path, options).with_context(|| format!("loading dataset {}", path.display()))
}

fn load_split(cfg: &ExperimentConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let options = ParseOptions {
        dim: cfg.dim,
        zeros: cfg.zero_policy(),
    };
    let ds = load_dataset(&cfg.dataset, &options)?;
    let (train, test) = split(&ds, &cfg.split_spec()?)?;
    if test.is_empty() {
        bail!("the test split is empty; the dataset is too small to evaluate");
    }
    Ok((train, test))
}

struct StreamDigest(Sha256);

impl StreamDigest {
    fn new() -> Self {
        Self(Sha256::new())
    }

    fn push(&mut self, (a, p, n): (usize, usize, usize)) {
        for pos in [a, p, n] {
            self.0.update((pos as u64).to_le_bytes());
        }
    }

    fn hex(self) -> String {
        self.0.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Trains `algorithm` for `cfg.iters` steps, calling `checkpoint` every
/// `cfg.eval_every` steps and after the last one.
fn train_loop(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    train: &LabeledDataset,
    mut checkpoint: impl FnMut(u64, &Learner, f64) -> Result<()>,
) -> Result<(Learner, f64, String)> {
    let mut sampler = TripletSampler::new(train, sampler_seed(cfg.seed))
        .context("building the triplet sampler from the training split")?;
    let mut learner = Learner::new(cfg.learner_config(algorithm, train.dim()))?;
    let mut digest = StreamDigest::new();
    let mut seconds = 0.0;
    let mut clock = Instant::now();
    for iter in 1..=cfg.iters {
        let positions = sampler.next_positions();
        digest.push(positions);
        let (a, p, n) = positions;
        let triplet = sors_core::Triplet {
            anchor: train.features(a).clone(),
            positive: train.features(p).clone(),
            negative: train.features(n).clone(),
        };
        learner.step(&triplet)?;
        if iter % cfg.eval_every == 0 || iter == cfg.iters {
            seconds += clock.elapsed().as_secs_f64();
            checkpoint(iter, &learner, seconds)?;
            clock = Instant::now();
        }
    }
    Ok((learner, seconds, digest.hex()))
}

/// Loads, splits, trains and writes `curve.csv`, `model.txt` and
/// `report.json` into `cfg.out`.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let algorithm = cfg.algorithm()?;
    let (train_set, test_set) = load_split(cfg)?;
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;

    let mut curve = Vec::new();
    let (learner, train_seconds, stream_digest) =
        train_loop(cfg, algorithm, &train_set, |iter, learner, seconds| {
            let report = evaluate_retrieval(learner.model(), &test_set, &cfg.ks)?;
            let state = learner.state();
            curve.push(CurvePoint {
                iter,
                map: report.map,
                sparsity: report.sparsity,
                mean_loss: state.cumulative_loss / state.step_count as f64,
                seconds,
            });
            Ok(())
        })?;
    let report = evaluate_retrieval(learner.model(), &test_set, &cfg.ks)?;
    let model = learner.into_state().model;

    let mut csv = String::from(CURVE_HEADER);
    csv.push('\n');
    for point in &curve {
        csv.push_str(&point.csv_row());
        csv.push('\n');
    }
    write_file(&cfg.out.join("curve.csv"), csv.as_bytes())?;
    save_model(&model, &cfg.out.join("model.txt"))?;
    write_file(
        &cfg.out.join("report.json"),
        (serde_json::to_string_pretty(&report)? + "\n").as_bytes(),
    )?;
    write_file(
        &cfg.out.join("config.json"),
        (serde_json::to_string_pretty(cfg)? + "\n").as_bytes(),
    )?;

    Ok(TrainOutcome {
        curve,
        report,
        model,
        train_seconds,
        stream_digest,
    })
}

/// Runs every configured algorithm on the same split and the same seeded
/// triplet stream; writes `bench.csv` into `cfg.out`.
pub fn bench(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let (train_set, test_set) = load_split(cfg)?;
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let (learner, train_seconds, stream_digest) =
            train_loop(cfg, algorithm, &train_set, |_, _, _| Ok(()))?;
        let report = evaluate_retrieval(learner.model(), &test_set, &cfg.ks)?;
        eprintln!("{algorithm}: stream sha256 {stream_digest}");
        rows.push(BenchRow {
            algo: algorithm,
            map: report.map,
            sparsity: report.sparsity,
            train_seconds: (train_seconds * 1000.0).round() / 1000.0,
            nnz: learner.model().nnz(),
            stream_digest,
        });
    }
    write_file(&cfg.out.join("bench.csv"), bench_csv(&rows).as_bytes())?;
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    for r in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{:.3},{}",
            r.algo, r.map, r.sparsity, r.train_seconds, r.nnz
        );
    }
    csv
}

/// Which part of the dataset `evaluate` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalSplit {
    /// The held-out part of the seeded split, as produced by `train`.
    #[default]
    Test,
    /// Every item in the file.
    All,
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub model: PathBuf,
    pub dataset: PathBuf,
    pub split: EvalSplit,
    pub split_spec: SplitSpec,
    pub ks: Vec<usize>,
    pub parse: ParseOptions,
    /// Report a measured wall time; when false the field is zero so that
    /// repeated runs print identical bytes.
    pub timing: bool,
}

pub fn evaluate(args: &EvalArgs) -> Result<EvalReport> {
    let model = load_model(&args.model)?;
    let ds = load_dataset(&args.dataset, &args.parse)?;
    if model.dim() != ds.dim() {
        bail!(
            "model dimension {} does not match dataset dimension {} ({} vs {})",
            model.dim(),
            ds.dim(),
            args.model.display(),
            args.dataset.display()
        );
    }
    let test = match args.split {
        EvalSplit::Test => split(&ds, &args.split_spec)?.1,
        EvalSplit::All => ds,
    };
    let mut report = evaluate_retrieval(&model, &test, &args.ks)?;
    if !args.timing {
        report.wall_time_seconds = 0.0;
    }
    debug_assert_eq!(report.sparsity, model_sparsity(&model));
    Ok(report)
}

pub fn load_model(path: &Path) -> Result<SimilarityModel> {
    let file = File::open(path).with_context(|| format!("opening model {}", path.display()))?;
    read_model(file).with_context(|| format!("reading model {}", path.display()))
}

pub fn save_model(model: &SimilarityModel, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_model(model, BufWriter::new(file))
        .with_context(|| format!("writing model {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))
}
