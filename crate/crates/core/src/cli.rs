//! Command-line surface tying the pipeline together:
//! simulate -> aggregate -> analyze -> train -> evaluate/sweep -> predict.
//!
//! Exit codes: 0 success, 1 runtime/data error, 2 usage error. Reports go to
//! stdout; diagnostics go to stderr.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    emit_report_csv, feature_noise_report, render_report_table, ReportTarget,
};
use crate::eval::{
    cross_validate, emit_curve_csv, sweep_forest_trees, sweep_svm_c, EvalReport, ExpandOrder,
    Expansion, FittedPreprocess, ForestTrainer, Preprocess, SvmTrainer, Trainer,
    DEFAULT_C_GRID, DEFAULT_TREE_GRID,
};
use crate::features::Standardizer;
use crate::forest::ForestModel;
use crate::simulator::{
    emit_scenario_config, generate, parse_scenario_config, standard_benchmark_scenario,
};
use crate::svm::{default_gamma, SvmHyperparams, SvmModel};
use crate::telemetry::{
    aggregate_windows, dataset_summary, emit_dataset_csv, emit_samples_csv, emit_windows_csv,
    label_windows, parse_dataset_csv, parse_samples, parse_windows_csv, Dataset, Instance,
    DEFAULT_NOISE_THRESHOLD, DEFAULT_WINDOW_LEN,
};

/// On-disk model container: versioned, human-inspectable JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub standardizer: Standardizer,
    pub expansion: Expansion,
    pub expand_order: ExpandOrder,
    pub payload: ModelPayload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Svm,
    Forest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelPayload {
    Svm(SvmModel),
    Forest(ForestModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl ModelFile {
    pub fn validate(&self) -> Result<(), String> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            ));
        }
        match (&self.model_kind, &self.payload) {
            (ModelKind::Svm, ModelPayload::Svm(_)) | (ModelKind::Forest, ModelPayload::Forest(_)) => {
                Ok(())
            }
            _ => Err("model_kind does not match payload kind".to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExpandArg {
    None,
    Quadratic,
}

impl From<ExpandArg> for Expansion {
    fn from(e: ExpandArg) -> Self {
        match e {
            ExpandArg::None => Expansion::None,
            ExpandArg::Quadratic => Expansion::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    StandardizeThenExpand,
    ExpandThenStandardize,
}

impl From<OrderArg> for ExpandOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::StandardizeThenExpand => ExpandOrder::StandardizeThenExpand,
            OrderArg::ExpandThenStandardize => ExpandOrder::ExpandThenStandardize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    NoiseCpu,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    C,
    Trees,
}

#[derive(Parser)]
#[command(
    name = "nnd",
    version,
    about = "Noisy-neighbor detection toolkit: synthetic telemetry, windowed labeling, \
             dependence analysis, SVM/forest training and cross-validated evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic telemetry from a scenario config
    #[command(group(ArgGroup::new("scenario").required(true).args(["config", "standard_benchmark"])))]
    Simulate {
        /// Scenario config file (flat key = value format)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the built-in fixed benchmark scenario (seed 42)
        #[arg(long)]
        standard_benchmark: bool,
        /// Output path for the raw telemetry CSV
        #[arg(long)]
        out: PathBuf,
        /// Output path for the ground truth JSON (default: <out>.truth.json)
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Also write the effective scenario config to this path
        #[arg(long)]
        emit_config: Option<PathBuf>,
    },
    /// Aggregate raw telemetry into labeled windows
    Aggregate {
        /// Raw telemetry CSV
        #[arg(long)]
        input: PathBuf,
        /// Output CSV (labeled dataset, or windows if --keep-noise)
        #[arg(long)]
        out: PathBuf,
        /// Window length in seconds
        #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
        window: f64,
        /// Label threshold on mean noise CPU (percent)
        #[arg(long, default_value_t = DEFAULT_NOISE_THRESHOLD)]
        noise_threshold: f64,
        /// Keep the noise column (emit pre-label windows CSV instead)
        #[arg(long)]
        keep_noise: bool,
    },
    /// Per-feature correlation and MIC against the noise signal
    Analyze {
        /// Windows CSV (aggregate --keep-noise output)
        #[arg(long)]
        input: PathBuf,
        /// Measure dependence against the raw noise CPU or the binary label
        #[arg(long, value_enum, default_value_t = TargetArg::NoiseCpu)]
        target: TargetArg,
        /// Threshold used when --target label
        #[arg(long, default_value_t = DEFAULT_NOISE_THRESHOLD)]
        noise_threshold: f64,
        /// Also write the report as CSV to this path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train a model on a labeled dataset and write a model file
    Train {
        /// Labeled dataset CSV
        #[arg(long)]
        input: PathBuf,
        /// Output model file (JSON)
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// k-fold cross-validation report
    Evaluate {
        /// Labeled dataset CSV
        #[arg(long)]
        input: PathBuf,
        /// Number of folds
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Stratify folds by class
        #[arg(long)]
        stratified: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Cross-validated hyperparameter sweep, written as a curve CSV
    Sweep {
        /// Labeled dataset CSV
        #[arg(long)]
        input: PathBuf,
        /// Which hyperparameter to sweep
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated grid values (strictly increasing); built-in default grid if omitted
        #[arg(long)]
        values: Option<String>,
        /// Output curve CSV
        #[arg(long)]
        out: PathBuf,
        /// Kernel width for the C sweep (default 1/9, the expanded dimension)
        #[arg(long)]
        gamma: Option<f64>,
        /// Number of folds
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Master seed for fold shuffling and training
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Apply a trained model; writes a labeled dataset CSV with predictions
    Predict {
        /// Model file written by `train`
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV to classify (labels present are ignored)
        #[arg(long)]
        input: PathBuf,
        /// Output CSV of per-window predicted labels
        #[arg(long)]
        out: PathBuf,
    },
}

/// Model/hyperparameter flags shared by `train` and `evaluate`.
#[derive(Debug, clap::Args)]
struct ModelArgs {
    /// Model family
    #[arg(long, value_enum)]
    model: ModelKind,
    /// SVM regularization constant (default 3.8^2, the best reported value)
    #[arg(long, default_value_t = 14.44)]
    c: f64,
    /// Gaussian kernel width (default 1/dimension after expansion)
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of trees in the forest
    #[arg(long, default_value_t = 300)]
    trees: usize,
    /// Minimum samples per leaf
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    /// Master seed for all randomness in this invocation
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Feature expansion (default: quadratic for svm, none for forest)
    #[arg(long, value_enum)]
    expand: Option<ExpandArg>,
    /// Whether standardization happens before or after expansion
    #[arg(long, value_enum, default_value_t = OrderArg::StandardizeThenExpand)]
    expand_order: OrderArg,
}

impl ModelArgs {
    fn preprocess(&self) -> Preprocess {
        let expansion = match self.expand {
            Some(e) => e.into(),
            None => match self.model {
                ModelKind::Svm => Expansion::Quadratic,
                ModelKind::Forest => Expansion::None,
            },
        };
        Preprocess {
            expansion,
            order: self.expand_order.into(),
        }
    }

    fn effective_gamma(&self, prep: &Preprocess) -> f64 {
        self.gamma.unwrap_or(match prep.expansion {
            Expansion::Quadratic => default_gamma(9),
            Expansion::None => default_gamma(3),
        })
    }
}

/// Parses argv and runs the requested subcommand. Returns the process exit
/// code; never panics on bad input.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/version to stdout (exit 0) and usage errors
            // to stderr (exit 2)
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Simulate {
            config,
            standard_benchmark,
            out,
            truth,
            emit_config,
        } => {
            let scenario = if standard_benchmark {
                standard_benchmark_scenario()
            } else {
                let path = config.expect("clap group guarantees one scenario source");
                parse_scenario_config(&read_file(&path)?).map_err(|e| e.to_string())?
            };
            let (samples, ground_truth) = generate(&scenario).map_err(|e| e.to_string())?;
            write_file(&out, &emit_samples_csv(&samples))?;
            let truth_path = truth.unwrap_or_else(|| {
                let mut p = out.as_os_str().to_owned();
                p.push(".truth.json");
                PathBuf::from(p)
            });
            let truth_json = serde_json::to_string_pretty(&ground_truth)
                .map_err(|e| format!("cannot serialize ground truth: {e}"))?;
            write_file(&truth_path, &(truth_json + "\n"))?;
            if let Some(path) = emit_config {
                write_file(&path, &emit_scenario_config(&scenario))?;
            }
            println!(
                "wrote {} samples to {} (truth: {})",
                samples.len(),
                out.display(),
                truth_path.display()
            );
            Ok(())
        }
        Command::Aggregate {
            input,
            out,
            window,
            noise_threshold,
            keep_noise,
        } => {
            let samples = parse_samples(&read_file(&input)?).map_err(|e| e.to_string())?;
            let windows = aggregate_windows(&samples, window).map_err(|e| e.to_string())?;
            if keep_noise {
                write_file(&out, &emit_windows_csv(&windows))?;
                println!(
                    "wrote {} windows (noise column retained) to {}",
                    windows.len(),
                    out.display()
                );
            } else {
                let dataset = label_windows(&windows, noise_threshold).map_err(|e| e.to_string())?;
                write_file(&out, &emit_dataset_csv(&dataset))?;
                let (n, positives) = dataset_summary(&dataset);
                println!(
                    "wrote {n} labeled windows to {} ({positives} positive, {:.1}%)",
                    out.display(),
                    if n == 0 { 0.0 } else { 100.0 * positives as f64 / n as f64 }
                );
            }
            Ok(())
        }
        Command::Analyze {
            input,
            target,
            noise_threshold,
            csv,
        } => {
            let windows = parse_windows_csv(&read_file(&input)?).map_err(|e| e.to_string())?;
            let report_target = match target {
                TargetArg::NoiseCpu => ReportTarget::NoiseCpu,
                TargetArg::Label => ReportTarget::BinaryLabel {
                    threshold: noise_threshold,
                },
            };
            let report =
                feature_noise_report(&windows, report_target).map_err(|e| e.to_string())?;
            print!("{}", render_report_table(&report));
            if let Some(path) = csv {
                write_file(&path, &emit_report_csv(&report))?;
            }
            Ok(())
        }
        Command::Train { input, out, model } => {
            let dataset = parse_dataset_csv(&read_file(&input)?).map_err(|e| e.to_string())?;
            let model_file = train_model(&dataset, &model)?;
            let json = serde_json::to_string_pretty(&model_file)
                .map_err(|e| format!("cannot serialize model: {e}"))?;
            write_file(&out, &(json + "\n"))?;
            println!(
                "trained {:?} on {} instances, wrote {}",
                model.model,
                dataset.instances.len(),
                out.display()
            );
            Ok(())
        }
        Command::Evaluate {
            input,
            k,
            stratified,
            model,
        } => {
            let dataset = parse_dataset_csv(&read_file(&input)?).map_err(|e| e.to_string())?;
            let prep = model.preprocess();
            let report = match model.model {
                ModelKind::Svm => {
                    let trainer = SvmTrainer {
                        hyper: SvmHyperparams::new(model.c, model.effective_gamma(&prep)),
                    };
                    cross_validate(&trainer, &dataset, &prep, k, model.seed, stratified)
                }
                ModelKind::Forest => {
                    let trainer = ForestTrainer {
                        n_trees: model.trees,
                        min_leaf: model.min_leaf,
                    };
                    cross_validate(&trainer, &dataset, &prep, k, model.seed, stratified)
                }
            }
            .map_err(|e| e.to_string())?;
            print!("{}", render_eval_report(&report));
            Ok(())
        }
        Command::Sweep {
            input,
            param,
            values,
            out,
            gamma,
            k,
            seed,
        } => {
            let dataset = parse_dataset_csv(&read_file(&input)?).map_err(|e| e.to_string())?;
            let curve = match param {
                SweepParam::C => {
                    let grid: Vec<f64> = match &values {
                        Some(list) => parse_grid(list)?,
                        None => DEFAULT_C_GRID.to_vec(),
                    };
                    sweep_svm_c(&dataset, &grid, gamma.unwrap_or(default_gamma(9)), k, seed)
                }
                SweepParam::Trees => {
                    let grid: Vec<usize> = match &values {
                        Some(list) => parse_grid::<f64>(list)?
                            .into_iter()
                            .map(|v| {
                                if v.fract() == 0.0 && v >= 1.0 {
                                    Ok(v as usize)
                                } else {
                                    Err(format!("tree counts must be positive integers, got {v}"))
                                }
                            })
                            .collect::<Result<_, _>>()?,
                        None => DEFAULT_TREE_GRID.to_vec(),
                    };
                    sweep_forest_trees(&dataset, &grid, k, seed)
                }
            }
            .map_err(|e| e.to_string())?;
            write_file(&out, &emit_curve_csv(&curve))?;
            println!("wrote {}-point sweep curve to {}", curve.rows.len(), out.display());
            Ok(())
        }
        Command::Predict { model, input, out } => {
            let model_file: ModelFile = serde_json::from_str(&read_file(&model)?)
                .map_err(|e| format!("cannot parse model file: {e}"))?;
            model_file.validate()?;
            let dataset = parse_dataset_csv(&read_file(&input)?).map_err(|e| e.to_string())?;
            let fitted = FittedPreprocess {
                spec: Preprocess {
                    expansion: model_file.expansion,
                    order: model_file.expand_order,
                },
                standardizer: model_file.standardizer.clone(),
            };
            let predictions: Result<Vec<Instance>, String> = dataset
                .instances
                .iter()
                .map(|inst| {
                    let x = fitted.transform(&inst.features)?;
                    let label = match &model_file.payload {
                        ModelPayload::Svm(m) => {
                            crate::svm::predict(m, &x).map_err(|e| e.to_string())?
                        }
                        ModelPayload::Forest(m) => {
                            crate::forest::predict_forest(m, &x).map_err(|e| e.to_string())?
                        }
                    };
                    Ok(Instance { label, ..*inst })
                })
                .collect();
            let predicted = Dataset {
                instances: predictions?,
                provenance: format!("predictions on {}", input.display()),
            };
            write_file(&out, &emit_dataset_csv(&predicted))?;
            let (n, positives) = dataset_summary(&predicted);
            println!(
                "wrote {n} predictions to {} ({positives} flagged noisy)",
                out.display()
            );
            Ok(())
        }
    }
}

fn train_model(dataset: &Dataset, args: &ModelArgs) -> Result<ModelFile, String> {
    if dataset.instances.is_empty() {
        return Err("dataset is empty".to_string());
    }
    let prep = args.preprocess();
    let rows: Vec<Vec<f64>> = dataset
        .instances
        .iter()
        .map(|i| i.features.to_vec())
        .collect();
    let labels: Vec<i8> = dataset.instances.iter().map(|i| i.label).collect();
    let fitted = prep.fit(&rows)?;
    let x: Result<Vec<Vec<f64>>, String> = rows.iter().map(|r| fitted.transform(r)).collect();
    let x = x?;
    let payload = match args.model {
        ModelKind::Svm => {
            let trainer = SvmTrainer {
                hyper: SvmHyperparams::new(args.c, args.effective_gamma(&prep)),
            };
            ModelPayload::Svm(trainer.train(&x, &labels, args.seed)?)
        }
        ModelKind::Forest => {
            let trainer = ForestTrainer {
                n_trees: args.trees,
                min_leaf: args.min_leaf,
            };
            ModelPayload::Forest(trainer.train(&x, &labels, args.seed)?)
        }
    };
    Ok(ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model_kind: args.model,
        standardizer: fitted.standardizer,
        expansion: prep.expansion,
        expand_order: prep.order,
        payload,
    })
}

fn parse_grid<T: std::str::FromStr>(list: &str) -> Result<Vec<T>, String> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid grid value {s:?}"))
        })
        .collect()
}

/// Human-readable cross-validation report.
pub fn render_eval_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", report.model_descriptor);
    let _ = writeln!(out, "fold     tp     fp     tn     fn");
    for (f, c) in report.per_fold.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<4} {:>6} {:>6} {:>6} {:>6}",
            f, c.true_positives, c.false_positives, c.true_negatives, c.false_negatives
        );
    }
    let c = &report.pooled;
    let _ = writeln!(
        out,
        "pool {:>6} {:>6} {:>6} {:>6}",
        c.true_positives, c.false_positives, c.true_negatives, c.false_negatives
    );
    let _ = writeln!(
        out,
        "precision = {:.4}  recall = {:.4}  f1 = {:.4}",
        report.precision, report.recall, report.f1
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_file_round_trip_and_validation() {
        let dataset = Dataset {
            instances: (0..20)
                .map(|i| Instance {
                    window_start: i as f64 * 30.0,
                    features: [
                        if i % 2 == 0 { 60.0 } else { 20.0 },
                        5.0 + i as f64 * 0.1,
                        3.0,
                    ],
                    label: if i % 2 == 0 { 1 } else { -1 },
                    sample_count: 3,
                })
                .collect(),
            provenance: String::new(),
        };
        let args = ModelArgs {
            model: ModelKind::Forest,
            c: 14.44,
            gamma: None,
            trees: 3,
            min_leaf: 1,
            seed: 5,
            expand: None,
            expand_order: OrderArg::StandardizeThenExpand,
        };
        let model = train_model(&dataset, &args).unwrap();
        model.validate().unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.format_version, 1);
        assert!(matches!(back.payload, ModelPayload::Forest(_)));

        // kind/payload mismatch is rejected
        let mut bad = back;
        bad.model_kind = ModelKind::Svm;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn svm_training_uses_expansion_defaults() {
        let dataset = Dataset {
            instances: (0..16)
                .map(|i| Instance {
                    window_start: i as f64 * 30.0,
                    features: [if i % 2 == 0 { 70.0 } else { 10.0 }, 4.0 + i as f64, 1.0],
                    label: if i % 2 == 0 { 1 } else { -1 },
                    sample_count: 3,
                })
                .collect(),
            provenance: String::new(),
        };
        let args = ModelArgs {
            model: ModelKind::Svm,
            c: 4.0,
            gamma: None,
            trees: 300,
            min_leaf: 1,
            seed: 1,
            expand: None,
            expand_order: OrderArg::StandardizeThenExpand,
        };
        let model = train_model(&dataset, &args).unwrap();
        assert_eq!(model.expansion, Expansion::Quadratic);
        match &model.payload {
            ModelPayload::Svm(m) => assert!((m.gamma - 1.0 / 9.0).abs() < 1e-12),
            _ => panic!("expected svm payload"),
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid::<f64>("1, 2.5, 4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert!(parse_grid::<f64>("1,x").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(dispatch(["nnd", "frobnicate"]), 2);
        assert_eq!(dispatch(["nnd"]), 2);
        assert_eq!(dispatch(["nnd", "train", "--bogus-flag"]), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(dispatch(["nnd", "--help"]), 0);
        for sub in [
            "simulate",
            "aggregate",
            "analyze",
            "train",
            "evaluate",
            "sweep",
            "predict",
        ] {
            assert_eq!(dispatch(["nnd", sub, "--help"]), 0, "help for {sub}");
        }
    }

    #[test]
    fn missing_file_exits_1() {
        assert_eq!(
            dispatch([
                "nnd",
                "aggregate",
                "--input",
                "/nonexistent/raw.csv",
                "--out",
                "/nonexistent/out.csv"
            ]),
            1
        );
    }

    #[test]
    fn report_rendering_shape() {
        let report = EvalReport {
            per_fold: vec![crate::eval::ConfusionCounts {
                true_positives: 3,
                false_positives: 1,
                true_negatives: 5,
                false_negatives: 1,
            }],
            pooled: crate::eval::ConfusionCounts {
                true_positives: 3,
                false_positives: 1,
                true_negatives: 5,
                false_negatives: 1,
            },
            precision: 0.75,
            recall: 0.75,
            f1: 0.75,
            model_descriptor: "forest trees=3".to_string(),
        };
        let text = render_eval_report(&report);
        assert!(text.contains("model: forest trees=3"));
        assert!(text.contains("precision = 0.7500"));
        assert!(text.lines().count() >= 4);
    }
}
