//! Command-line experiment runner.
//!
//! Every run first resolves its flags into a [`RunConfig`] with all defaults
//! filled in and the split manifest attached, then executes from that config
//! alone. `rerun` feeds a saved `config.json` back through the same path, so
//! a replay writes byte-identical outputs.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::circuits::EmbeddingSpec;
use crate::data::{
    bundled_iris, fit_scaler, load_iris, select_binary, split, Dataset, LabeledSet, Scaler,
    ScalingMethod, SplitManifest,
};
use crate::error::{Error, Result};
use crate::hybrid::{refit_svm, train_qvk, QvkModel};
use crate::kernels::{gram_matrix, min_eigenvalue, KernelSpec};
use crate::metrics::Report;
use crate::report::write_json;
use crate::svm::{sign_label, SvmModel, TrainConfig};
use crate::variational::{train_qv, Batch, FitConfig, TrainingTrace, VarModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Caps the rayon pool used for circuit evaluation; `0` or unset means one
/// thread per core.
pub const THREADS_ENV: &str = "QSVM_LAB_THREADS";

#[derive(Parser)]
#[command(
    name = "qsvm-lab",
    version,
    about = "Quantum kernel and variational SVM experiments on Iris"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and evaluate it on the held-out split.
    Train(RunArgs),
    /// Gram matrix over training rows plus PSD diagnostics.
    KernelMatrix(RunArgs),
    /// Train QK, QV and QVK on one split and compare their indicators.
    Compare(RunArgs),
    /// Replay a run from its saved config.json.
    Rerun {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Iris CSV; the bundled copy is used when omitted.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Positive and negative species, comma separated.
    #[arg(long, default_value = "versicolor,virginica")]
    classes: String,
    /// Share of each class held out for testing.
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    test_fraction: f64,
    /// Seed for the split, SMO partner choice and θ initialization.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Model to train (train only; defaults to qk).
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Kernel for SVM models and kernel-matrix (default quantum; rbf for --model classical).
    #[arg(long, value_enum)]
    kernel: Option<KernelKind>,
    /// Estimate the quantum kernel with a SWAP test instead of the inversion test.
    #[arg(long)]
    swap_test: bool,
    /// Ansatz layers for qv and qvk (default 2).
    #[arg(long)]
    layers: Option<usize>,
    /// Learning rate (default 1.0 for qv, 0.1 for qvk).
    #[arg(long, allow_negative_numbers = true)]
    lr: Option<f64>,
    /// Training epochs for qv and qvk (default 60).
    #[arg(long)]
    epochs: Option<usize>,
    /// θ starts uniform in [-init_scale, init_scale] (default 0.01).
    #[arg(long, allow_negative_numbers = true)]
    init_scale: Option<f64>,
    /// Mini-batch size for the variational models (full batch when omitted).
    #[arg(long)]
    batch_size: Option<usize>,
    /// SVM box constraint.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    /// Freeze the trained QVK kernel and fit a standard SVM on it.
    #[arg(long)]
    refit_svm: bool,
    /// Polynomial kernel degree.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Additive constant of the inhomogeneous polynomial (default 1) or sigmoid (default 0) kernel.
    #[arg(long, allow_negative_numbers = true)]
    coef0: Option<f64>,
    /// RBF kernel width.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    gamma: f64,
    /// Sigmoid kernel slope.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    kappa: f64,
    /// Sigmoid kernel exponent.
    #[arg(long, default_value_t = 1)]
    exponent: u32,
    /// Feature scaling into rotation angles, fitted on the training rows.
    #[arg(long, value_enum, default_value_t = ScalingArg::Standard)]
    scaling: ScalingArg,
    /// kernel-matrix only: use the first N training rows.
    #[arg(long)]
    rows: Option<usize>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// SVM on a fixed quantum kernel.
    Qk,
    /// Variational classifier.
    Qv,
    /// Trainable-kernel expansion.
    Qvk,
    /// SVM on a classical kernel.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelKind {
    Quantum,
    Linear,
    Poly,
    PolyInhomogeneous,
    Rbf,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScalingArg {
    Standard,
    MinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Train,
    KernelMatrix,
    Compare,
}

/// A fully resolved run. Fields that do not apply to the command are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    /// `None` selects the bundled Iris file.
    pub dataset: Option<PathBuf>,
    /// Positive class first.
    pub classes: [String; 2],
    pub test_fraction: f64,
    pub seed: u64,
    pub scaling: ScalingMethod,
    pub model: Option<ModelKind>,
    pub kernel: Option<KernelSpec>,
    pub svm: Option<TrainConfig>,
    pub qv: Option<FitConfig>,
    pub qvk: Option<FitConfig>,
    pub refit_svm: bool,
    pub rows: Option<usize>,
    pub split: SplitManifest,
}

/// What `model.json` holds besides the scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedModel {
    Svm(SvmModel),
    Qv(VarModel),
    Qvk(QvkModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub scaler: Scaler,
    pub model: SavedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub kernel: String,
    pub size: usize,
    /// Dataset row of each matrix index.
    pub sample_ids: Vec<usize>,
    pub min_eigenvalue: f64,
    pub symmetry_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub split_seed: u64,
    pub columns: Vec<String>,
    pub reports: Vec<Report>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Failures print one line on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("qsvm-lab: {}", first.trim_start_matches("error: "));
            return EXIT_USAGE;
        }
    };
    match configure_threads().and_then(|()| dispatch(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("qsvm-lab: {}", e.to_string().replace('\n', " "));
            if e.is_user_error() {
                EXIT_USAGE
            } else {
                EXIT_INTERNAL
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Error::config(format!(
            "{THREADS_ENV} must be a non-negative integer, got `{raw}`"
        ))
    })?;
    // A pool that already exists (e.g. a second run in one process) is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    let (cfg, out) = match command {
        Command::Train(a) => {
            let out = a.out.clone();
            (resolve(CommandKind::Train, a)?, out)
        }
        Command::KernelMatrix(a) => {
            let out = a.out.clone();
            (resolve(CommandKind::KernelMatrix, a)?, out)
        }
        Command::Compare(a) => {
            let out = a.out.clone();
            (resolve(CommandKind::Compare, a)?, out)
        }
        Command::Rerun { config, out } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", config.display())))?;
            let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
                Error::config(format!("{} is not a run config: {e}", config.display()))
            })?;
            (cfg, out)
        }
    };
    execute(&cfg, &out)
}

fn parse_classes(raw: &str) -> Result<[String; 2]> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok([a.to_string(), b.to_string()]),
        _ => Err(Error::config(format!(
            "--classes expects two names as A,B, got `{raw}`"
        ))),
    }
}

fn load_dataset(path: Option<&Path>) -> Result<Dataset> {
    match path {
        Some(p) => load_iris(p),
        None => Ok(bundled_iris()),
    }
}

fn quantum_kernel(n_features: usize, swap_test: bool) -> KernelSpec {
    let embedding = EmbeddingSpec::new(n_features);
    if swap_test {
        KernelSpec::QuantumSwap { embedding }
    } else {
        KernelSpec::QuantumInversion { embedding }
    }
}

fn classical_kernel(kind: KernelKind, a: &RunArgs) -> KernelSpec {
    match kind {
        KernelKind::Linear => KernelSpec::Linear,
        KernelKind::Poly => KernelSpec::PolyHomogeneous { degree: a.degree },
        KernelKind::PolyInhomogeneous => KernelSpec::PolyInhomogeneous {
            degree: a.degree,
            r: a.coef0.unwrap_or(1.0),
        },
        KernelKind::Rbf => KernelSpec::Rbf { gamma: a.gamma },
        KernelKind::Sigmoid => KernelSpec::Sigmoid {
            k: a.kappa,
            c: a.coef0.unwrap_or(0.0),
            exponent: a.exponent,
        },
        KernelKind::Quantum => unreachable!("quantum kernels are built by quantum_kernel"),
    }
}

fn fit_config(base: FitConfig, a: &RunArgs) -> FitConfig {
    FitConfig {
        learning_rate: a.lr.unwrap_or(base.learning_rate),
        epochs: a.epochs.unwrap_or(base.epochs),
        layers: a.layers.unwrap_or(base.layers),
        batch: a.batch_size.map_or(Batch::Full, Batch::Size),
        seed: a.seed,
        init_scale: a.init_scale.unwrap_or(base.init_scale),
    }
}

fn kernel_for(
    kind: Option<KernelKind>,
    quantum_default: bool,
    a: &RunArgs,
    n_features: usize,
) -> Result<KernelSpec> {
    let kind = kind.unwrap_or(if quantum_default {
        KernelKind::Quantum
    } else {
        KernelKind::Rbf
    });
    if kind == KernelKind::Quantum {
        return Ok(quantum_kernel(n_features, a.swap_test));
    }
    if a.swap_test {
        return Err(Error::config(
            "--swap-test only applies to the quantum kernel",
        ));
    }
    Ok(classical_kernel(kind, a))
}

fn resolve(command: CommandKind, a: RunArgs) -> Result<RunConfig> {
    let classes = parse_classes(&a.classes)?;
    let dataset = match &a.dataset {
        Some(p) => Some(fs::canonicalize(p).map_err(|e| {
            Error::ingestion(p.display().to_string(), format!("cannot open dataset: {e}"))
        })?),
        None => None,
    };
    let ds = load_dataset(dataset.as_deref())?;
    let set = select_binary(&ds, &classes[0], &classes[1])?;
    let (_, _, manifest) = split(&set, a.test_fraction, a.seed)?;
    let n_features = set.n_features();

    let svm = TrainConfig {
        c: a.c,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let mut cfg = RunConfig {
        command,
        dataset,
        classes,
        test_fraction: a.test_fraction,
        seed: a.seed,
        scaling: match a.scaling {
            ScalingArg::Standard => ScalingMethod::Standard,
            ScalingArg::MinMax => ScalingMethod::MinMax,
        },
        model: None,
        kernel: None,
        svm: None,
        qv: None,
        qvk: None,
        refit_svm: a.refit_svm,
        rows: None,
        split: manifest,
    };

    if command != CommandKind::Train && a.model.is_some() {
        return Err(Error::config("--model only applies to the train command"));
    }
    if command != CommandKind::KernelMatrix && a.rows.is_some() {
        return Err(Error::config(
            "--rows only applies to the kernel-matrix command",
        ));
    }
    match command {
        CommandKind::Train => {
            let model = a.model.unwrap_or(ModelKind::Qk);
            cfg.model = Some(model);
            if a.refit_svm && model != ModelKind::Qvk {
                return Err(Error::config("--refit-svm only applies to --model qvk"));
            }
            match model {
                ModelKind::Qk | ModelKind::Classical => {
                    let quantum = model == ModelKind::Qk;
                    if quantum && a.kernel.is_some_and(|k| k != KernelKind::Quantum) {
                        return Err(Error::config(
                            "--model qk uses the quantum kernel; use --model classical",
                        ));
                    }
                    if !quantum && a.kernel == Some(KernelKind::Quantum) {
                        return Err(Error::config(
                            "--model classical needs a classical --kernel",
                        ));
                    }
                    cfg.kernel = Some(kernel_for(a.kernel, quantum, &a, n_features)?);
                    cfg.svm = Some(svm);
                }
                ModelKind::Qv | ModelKind::Qvk => {
                    if a.kernel.is_some() || a.swap_test {
                        return Err(Error::config(
                            "--kernel and --swap-test apply to SVM models only",
                        ));
                    }
                    if model == ModelKind::Qv {
                        cfg.qv = Some(fit_config(FitConfig::for_qv(), &a));
                    } else {
                        cfg.qvk = Some(fit_config(FitConfig::for_qvk(), &a));
                        if a.refit_svm {
                            cfg.svm = Some(svm);
                        }
                    }
                }
            }
        }
        CommandKind::KernelMatrix => {
            if a.refit_svm {
                return Err(Error::config("--refit-svm does not apply to kernel-matrix"));
            }
            cfg.kernel = Some(kernel_for(a.kernel, true, &a, n_features)?);
            cfg.rows = Some(a.rows.unwrap_or(cfg.split.train.len()));
        }
        CommandKind::Compare => {
            if a.kernel.is_some_and(|k| k != KernelKind::Quantum) {
                return Err(Error::config(
                    "compare always uses the quantum kernel for QK",
                ));
            }
            cfg.kernel = Some(quantum_kernel(n_features, a.swap_test));
            cfg.svm = Some(svm);
            cfg.qv = Some(fit_config(FitConfig::for_qv(), &a));
            cfg.qvk = Some(fit_config(FitConfig::for_qvk(), &a));
        }
    }
    Ok(cfg)
}

/// Scaled train/test sets and the scaler fitted on the training side.
struct Prepared {
    train: LabeledSet,
    test: LabeledSet,
    scaler: Scaler,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let ds = load_dataset(cfg.dataset.as_deref())?;
    let set = select_binary(&ds, &cfg.classes[0], &cfg.classes[1])?;
    let (train, test) = cfg.split.apply(&set)?;
    let scaler = fit_scaler(&train.features, cfg.scaling)?;
    Ok(Prepared {
        train: train.with_features(scaler.apply(&train.features)?),
        test: test.with_features(scaler.apply(&test.features)?),
        scaler,
    })
}

fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| Error::config(format!("run config is missing `{name}`")))
}

/// Runs a resolved config and writes its outputs into `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = prepare(cfg)?;
    fs::create_dir_all(out)?;
    match cfg.command {
        CommandKind::Train => execute_train(cfg, &data, out)?,
        CommandKind::KernelMatrix => execute_kernel_matrix(cfg, &data, out)?,
        CommandKind::Compare => execute_compare(cfg, &data, out)?,
    }
    write_json(&out.join("split.json"), &cfg.split)?;
    write_json(&out.join("config.json"), cfg)
}

fn labels_of(scores: &[f64]) -> Vec<i8> {
    scores.iter().map(|&s| sign_label(s)).collect()
}

fn write_trace(path: &Path, trace: &TrainingTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn fit_svm(cfg: &RunConfig, data: &Prepared) -> Result<SvmModel> {
    let kernel = require(&cfg.kernel, "kernel")?.clone();
    SvmModel::fit(
        &data.train.features,
        &data.train.labels,
        kernel,
        require(&cfg.svm, "svm")?,
    )
}

fn execute_train(cfg: &RunConfig, data: &Prepared, out: &Path) -> Result<()> {
    let model = require(&cfg.model, "model")?;
    let (name, saved, scores) = match model {
        ModelKind::Qk | ModelKind::Classical => {
            let svm = fit_svm(cfg, data)?;
            let scores = svm.decision_values(&data.test.features)?;
            let name = if *model == ModelKind::Qk {
                "qk"
            } else {
                "classical"
            };
            (name, SavedModel::Svm(svm), scores)
        }
        ModelKind::Qv => {
            let (qv, trace) = train_qv(&data.train, &data.test, require(&cfg.qv, "qv")?)?;
            write_trace(&out.join("trace.csv"), &trace)?;
            let scores = qv.scores(&data.test.features)?;
            ("qv", SavedModel::Qv(qv), scores)
        }
        ModelKind::Qvk => {
            let (qvk, trace) = train_qvk(&data.train, &data.test, require(&cfg.qvk, "qvk")?)?;
            write_trace(&out.join("trace.csv"), &trace)?;
            if cfg.refit_svm {
                let svm = refit_svm(&qvk, &data.train, require(&cfg.svm, "svm")?)?;
                let scores = svm.decision_values(&data.test.features)?;
                ("qvk_refit", SavedModel::Svm(svm), scores)
            } else {
                let scores = qvk.scores(&data.test.features)?;
                ("qvk", SavedModel::Qvk(qvk), scores)
            }
        }
    };
    let report = Report::new(name, cfg.seed, &data.test.labels, &labels_of(&scores))?;
    write_json(&out.join("report.json"), &report)?;
    let file = ModelFile {
        scaler: data.scaler.clone(),
        model: saved,
    };
    write_json(&out.join("model.json"), &file)
}

fn execute_kernel_matrix(cfg: &RunConfig, data: &Prepared, out: &Path) -> Result<()> {
    let kernel = require(&cfg.kernel, "kernel")?;
    let rows = *require(&cfg.rows, "rows")?;
    if rows == 0 || rows > data.train.len() {
        return Err(Error::config(format!(
            "--rows must lie in 1..={}, got {rows}",
            data.train.len()
        )));
    }
    let gram = gram_matrix(&data.train.features[..rows], kernel)?
        .with_sample_ids(data.train.rows[..rows].to_vec())?;
    let mut w = BufWriter::new(File::create(out.join("gram.csv"))?);
    gram.write_csv(&mut w)?;
    w.flush()?;
    let psd = PsdReport {
        kernel: kernel.name().to_string(),
        size: gram.size(),
        sample_ids: gram.sample_ids().to_vec(),
        min_eigenvalue: min_eigenvalue(&gram)?,
        symmetry_residual: gram.symmetry_residual(),
    };
    write_json(&out.join("psd.json"), &psd)
}

fn execute_compare(cfg: &RunConfig, data: &Prepared, out: &Path) -> Result<()> {
    let test = &data.test;
    let qk = fit_svm(cfg, data)?;
    let qk_report = Report::new(
        "qk",
        cfg.seed,
        &test.labels,
        &labels_of(&qk.decision_values(&test.features)?),
    )?;

    let (qv, qv_trace) = train_qv(&data.train, test, require(&cfg.qv, "qv")?)?;
    write_trace(&out.join("trace_qv.csv"), &qv_trace)?;
    let qv_report = Report::new(
        "qv",
        cfg.seed,
        &test.labels,
        &labels_of(&qv.scores(&test.features)?),
    )?;

    let (qvk, qvk_trace) = train_qvk(&data.train, test, require(&cfg.qvk, "qvk")?)?;
    write_trace(&out.join("trace_qvk.csv"), &qvk_trace)?;
    let qvk_scores = if cfg.refit_svm {
        refit_svm(&qvk, &data.train, require(&cfg.svm, "svm")?)?.decision_values(&test.features)?
    } else {
        qvk.scores(&test.features)?
    };
    let qvk_name = if cfg.refit_svm { "qvk_refit" } else { "qvk" };
    let qvk_report = Report::new(qvk_name, cfg.seed, &test.labels, &labels_of(&qvk_scores))?;

    let comparison = Comparison {
        split_seed: cfg.seed,
        columns: ["accuracy", "precision", "recall", "specificity", "f1"]
            .map(String::from)
            .to_vec(),
        reports: vec![qk_report, qv_report, qvk_report],
    };
    write_json(&out.join("comparison.json"), &comparison)
}
