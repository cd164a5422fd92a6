//! Command-line front end: `bench`, `fit`, `predict`, `gen-data`, `inspect`.
//!
//! Exit codes: 0 success, 1 fatal error, 2 benchmark finished with at least
//! one failed cell (the report is still written).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    correlation_matrix, generate_ecological, load_csv, load_features_csv, save_csv, split_indices, Dataset,
    ScalingParams, SyntheticSpec, DEFAULT_TARGET,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    rank_algorithms, run_benchmark, Algorithm, BenchmarkOptions, BenchmarkReport, FittedModel, Pipeline,
    ProcessKind,
};
use crate::margin_instance::KernelSpec;
use crate::neural::{fit_mlp, MlpConfig};
use crate::trees::{fit_random_forest, ForestParams};

pub const DEFAULT_SEED: u64 = 42;
pub const MODEL_FORMAT: &str = "ecoclass-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "ecoclass", version, about = "Compare eight supervised classifiers on tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score classifiers under resubstitution (I), holdout (II) and k-fold CV (III).
    Bench(BenchArgs),
    /// Fit one classifier on a dataset and save it.
    Fit(FitArgs),
    /// Apply a saved model to a feature CSV.
    Predict(PredictArgs),
    /// Write a synthetic sea-bed sampling dataset.
    GenData(GenDataArgs),
    /// Print per-feature statistics, class counts and the correlation matrix.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataSource {
    /// CSV file with a header row.
    #[arg(long, value_name = "PATH", conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Name of the class column.
    #[arg(long, value_name = "NAME", default_value = DEFAULT_TARGET)]
    pub label: String,
    /// Use the built-in synthetic generator instead of a file.
    #[arg(long)]
    pub synthetic: bool,
    /// Rows per class for the synthetic generator.
    #[arg(long, value_name = "INT", default_value_t = 10)]
    pub n_per_class: usize,
    /// Synthetic classes with means at least 5 spreads apart.
    #[arg(long, requires = "synthetic")]
    pub separated: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Hyper {
    /// Neighbors for k-NN.
    #[arg(long, value_name = "INT")]
    pub k: Option<usize>,
    /// Trees in the random forest.
    #[arg(long, value_name = "INT")]
    pub trees: Option<usize>,
    /// Features tried per forest split.
    #[arg(long, value_name = "INT")]
    pub m_try: Option<usize>,
    /// Depth cap for the decision tree.
    #[arg(long, value_name = "INT")]
    pub max_depth: Option<usize>,
    /// Hidden units of the neural network.
    #[arg(long, value_name = "INT")]
    pub hidden: Option<usize>,
    /// Training epochs of the neural network.
    #[arg(long, value_name = "INT")]
    pub epochs: Option<usize>,
    /// SVM cost.
    #[arg(long, value_name = "REAL")]
    pub cost: Option<f64>,
    /// RBF gamma (default 1/p).
    #[arg(long, value_name = "REAL")]
    pub gamma: Option<f64>,
}

impl Hyper {
    fn apply(&self, alg: Algorithm) -> Algorithm {
        match alg {
            Algorithm::Knn { k } => Algorithm::Knn { k: self.k.unwrap_or(k) },
            Algorithm::RandomForest(mut p) => {
                p.n_trees = self.trees.unwrap_or(p.n_trees);
                p.m_try = self.m_try.or(p.m_try);
                Algorithm::RandomForest(p)
            }
            Algorithm::DecisionTree(mut p) => {
                p.max_depth = self.max_depth.or(p.max_depth);
                Algorithm::DecisionTree(p)
            }
            Algorithm::NeuralNet(mut c) => {
                c.hidden = self.hidden.unwrap_or(c.hidden);
                c.epochs = self.epochs.unwrap_or(c.epochs);
                Algorithm::NeuralNet(c)
            }
            Algorithm::Svm(mut p) => {
                p.cost = self.cost.unwrap_or(p.cost);
                if let Some(gamma) = self.gamma {
                    p.kernel = Some(KernelSpec::Rbf { gamma });
                }
                Algorithm::Svm(p)
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Markdown,
    Csv,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Comma-separated subset of DT,RF,ANN,SVM,LDA,KNN,LR,NB.
    #[arg(long, value_name = "CSV-LIST", value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    /// Comma-separated subset of I,II,III.
    #[arg(long, value_name = "CSV-LIST", value_delimiter = ',')]
    pub processes: Option<Vec<String>>,
    #[arg(long, value_name = "REAL", default_value_t = 0.75)]
    pub train_fraction: f64,
    #[arg(long, value_name = "INT", default_value_t = 3)]
    pub folds: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report destination; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Record per-cell wall time (reports are then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: DataSource,
    /// One of DT,RF,ANN,SVM,LDA,KNN,LR,NB.
    #[arg(long)]
    pub algorithm: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Training trace CSV: per-epoch SSE (ANN) or error by tree count (RF).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Discriminant scores CSV for LDA.
    #[arg(long, value_name = "PATH")]
    pub scores: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Feature CSV; the model's target column is ignored if present.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Predictions CSV; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_name = "INT", default_value_t = 10)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Class means at least 5 spreads apart.
    #[arg(long)]
    pub separated: bool,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Standardize before summarizing.
    #[arg(long)]
    pub standardize: bool,
    /// Also write the summary to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Saved model: the fitted pipeline plus enough schema to validate inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub target: String,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub pipeline: Pipeline,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::InvalidParameter(format!("{} is not an {MODEL_FORMAT} file", path.display())));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &(serde_json::to_string(self)? + "\n"))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Load or synthesize the dataset; returns it with a description of its origin.
pub fn load_source(source: &DataSource, seed: u64) -> Result<(Dataset, String)> {
    if let Some(path) = &source.data {
        let ds = load_csv(path, &source.label)?;
        return Ok((ds, path.display().to_string()));
    }
    let spec = synthetic_spec(source.n_per_class, seed, source.separated);
    let ds = generate_ecological(&spec)?;
    let kind = if source.separated { "synthetic-separated" } else { "synthetic" };
    Ok((ds, format!("{kind}(n_per_class={}, seed={seed})", source.n_per_class)))
}

fn synthetic_spec(n_per_class: usize, seed: u64, separated: bool) -> SyntheticSpec {
    if separated {
        SyntheticSpec { n_per_class, ..SyntheticSpec::well_separated(seed) }
    } else {
        SyntheticSpec { n_per_class, seed, ..SyntheticSpec::default() }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Bench(a) => cmd_bench(&a),
        Command::Fit(a) => cmd_fit(&a).map(|()| 0),
        Command::Predict(a) => cmd_predict(&a).map(|()| 0),
        Command::GenData(a) => cmd_gen_data(&a).map(|()| 0),
        Command::Inspect(a) => cmd_inspect(&a).map(|()| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let (ds, source) = load_source(&args.source, args.seed)?;
    let algorithms: Vec<Algorithm> = match &args.algorithms {
        Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        None => Algorithm::all(),
    };
    let algorithms: Vec<Algorithm> = algorithms.into_iter().map(|a| args.hyper.apply(a)).collect();
    let processes: Vec<ProcessKind> = match &args.processes {
        Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        None => ProcessKind::all(),
    };
    let processes: Vec<ProcessKind> = processes
        .into_iter()
        .map(|p| match p {
            ProcessKind::Holdout { .. } => ProcessKind::Holdout { train_fraction: args.train_fraction },
            ProcessKind::CrossValidation { .. } => ProcessKind::CrossValidation { folds: args.folds },
            other => other,
        })
        .collect();
    for p in &processes {
        p.validate(ds.n_samples())?;
    }

    let report = run_benchmark(
        &ds,
        &source,
        &algorithms,
        &processes,
        args.seed,
        BenchmarkOptions { timing: args.timing },
    )?;
    let text = render_report(&report, args.format)?;
    emit(args.out.as_deref(), &text)?;

    // Rankings go to stderr when the report itself is on stdout.
    let ranking = ranking_text(&report)?;
    if let Some(path) = &args.out {
        print!("{ranking}");
        println!("report written to {}", path.display());
    } else {
        eprint!("{ranking}");
    }
    for row in report.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "cell {} / process {} failed: {}",
            row.algorithm,
            row.process,
            row.error.as_deref().unwrap_or("")
        );
    }
    Ok(if report.failed_cells() > 0 { 2 } else { 0 })
}

pub fn render_report(report: &BenchmarkReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => report.to_json()?,
        Format::Markdown => report.to_markdown(),
        Format::Csv => report.to_csv(),
    })
}

fn ranking_text(report: &BenchmarkReport) -> Result<String> {
    let mut out = format!("seed {}\n", report.seed);
    for kind in &report.processes {
        let ranked = rank_algorithms(report, kind.label())?;
        let accs: Vec<String> = ranked
            .iter()
            .map(|name| {
                let acc = report
                    .rows_for(kind.label())
                    .find(|r| &r.algorithm == name)
                    .and_then(|r| r.accuracy)
                    .map_or_else(|| "failed".to_string(), |a| format!("{a:.4}"));
                format!("{name} ({acc})")
            })
            .collect();
        out.push_str(&format!("process {} ranking: {}\n", kind.label(), accs.join(" > ")));
    }
    Ok(out)
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let (ds, _) = load_source(&args.source, args.seed)?;
    let algorithm = args.hyper.apply(args.algorithm.parse()?);
    if ds.n_samples() < 2 {
        return Err(Error::InvalidDataset("fit needs at least 2 rows".into()));
    }
    let scaling = ScalingParams::fit(&ds);
    let scaled = scaling.transform(&ds)?;

    let mut report = String::new();
    let model = match &algorithm {
        Algorithm::NeuralNet(cfg) => {
            let (model, trace) = fit_mlp(&scaled, &MlpConfig { seed: args.seed, ..cfg.clone() })?;
            report.push_str(&format!("{}\n", trace.caption()));
            if let Some(path) = &args.trace {
                write_text(path, &trace.to_csv())?;
            }
            FittedModel::NeuralNet(model)
        }
        other => other.fit(&scaled, args.seed)?,
    };
    report.push_str(&describe_model(&model, &ds, &scaled)?);

    if let (Algorithm::RandomForest(params), Some(path)) = (&algorithm, &args.trace) {
        write_text(path, &forest_trace_csv(&ds, params, args.seed, &model)?)?;
    }
    if let (FittedModel::Lda(lda), Some(path)) = (&model, &args.scores) {
        let mut csv = String::from("row,class");
        for k in 0..lda.discriminant_axes.len() {
            csv.push_str(&format!(",LD{}", k + 1));
        }
        csv.push('\n');
        for (i, (row, &label)) in scaled.rows().zip(ds.labels()).enumerate() {
            let z = lda.transform(row)?;
            let z: Vec<String> = z.iter().map(f64::to_string).collect();
            csv.push_str(&format!("{i},{},{}\n", ds.class_names()[label], z.join(",")));
        }
        write_text(path, &csv)?;
    }

    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        algorithm,
        seed: args.seed,
        target: ds.target_name().to_string(),
        feature_names: ds.feature_names().to_vec(),
        class_names: ds.class_names().to_vec(),
        pipeline: Pipeline { scaling, model },
    };
    file.save(&args.out)?;
    print!("{report}");
    println!("model written to {}", args.out.display());
    Ok(())
}

/// Error rate against the number of trees: on the training rows, and on a
/// 25% holdout for a forest grown on the other 75%.
fn forest_trace_csv(ds: &Dataset, params: &ForestParams, seed: u64, model: &FittedModel) -> Result<String> {
    let FittedModel::RandomForest(forest) = model else {
        return Err(Error::InvalidParameter("forest trace needs a forest".into()));
    };
    let scaled = ScalingParams::fit(ds).transform(ds)?;
    let resub = forest.error_trace(&scaled)?;
    let (train, test) = split_indices(ds, 0.75, seed, false)?;
    let train = ds.subset(&train);
    let scaling = ScalingParams::fit(&train);
    let holdout_forest = fit_random_forest(&scaling.transform(&train)?, &ForestParams { seed, ..params.clone() })?;
    let holdout = holdout_forest.error_trace(&scaling.transform(&ds.subset(&test))?)?;
    let mut csv = String::from("n_trees,resubstitution_error,holdout_error\n");
    for (t, (a, b)) in resub.iter().zip(&holdout).enumerate() {
        csv.push_str(&format!("{},{a},{b}\n", t + 1));
    }
    Ok(csv)
}

fn describe_model(model: &FittedModel, ds: &Dataset, scaled: &Dataset) -> Result<String> {
    let names = ds.feature_names();
    let mut out = String::new();
    match model {
        FittedModel::DecisionTree(t) => {
            out.push_str(&format!("decision tree: depth {}, {} leaves (standardized units)\n", t.depth(), t.root.n_leaves()));
            out.push_str(&t.root.render(names, ds.class_names()));
        }
        FittedModel::RandomForest(f) => {
            out.push_str(&format!("random forest: {} trees, m_try {}\n", f.trees.len(), f.m_try));
            out.push_str("Variable\tMeanDecreaseGini\n");
            for (name, v) in names.iter().zip(&f.importance) {
                out.push_str(&format!("{name}\t{v:.7}\n"));
            }
        }
        FittedModel::NeuralNet(m) => {
            out.push_str(&format!("neural network: {}-{}-{} (sigmoid hidden, linear output)\n", m.n_inputs, m.n_hidden, m.n_outputs));
        }
        FittedModel::Svm(m) => {
            out.push_str(&m.summary(ds.class_names()).to_table());
            out.push('\n');
        }
        FittedModel::Lda(m) => {
            let axes: Vec<String> = (1..=m.discriminant_axes.len()).map(|k| format!("LD{k}")).collect();
            out.push_str(&format!("Variable\t{}\n", axes.join("\t")));
            for (name, coefs) in m.coefficient_table(names) {
                let c: Vec<String> = coefs.iter().map(|v| format!("{v:.8}")).collect();
                out.push_str(&format!("{name}\t{}\n", c.join("\t")));
            }
            let priors: Vec<String> =
                ds.class_names().iter().zip(&m.priors).map(|(c, p)| format!("{c}={p:.4}")).collect();
            out.push_str(&format!("priors: {}\n", priors.join(", ")));
        }
        FittedModel::Knn(m) => {
            out.push_str(&format!("k-nearest neighbors: k = {}, {} stored rows\n", m.k, m.labels.len()));
        }
        FittedModel::LogisticRegression(m) => {
            out.push_str(&format!("logistic regression: {} iterations, final loss {:.6}\n", m.iterations, m.final_loss));
        }
        FittedModel::NaiveBayes(m) => {
            let priors: Vec<String> =
                ds.class_names().iter().zip(&m.priors).map(|(c, p)| format!("{c}={p:.4}")).collect();
            out.push_str(&format!("gaussian naive bayes: priors {}\n", priors.join(", ")));
        }
    }
    let correct = scaled.rows().zip(scaled.labels()).filter(|(x, &y)| model.predict(x).ok() == Some(y)).count();
    out.push_str(&format!("training accuracy: {:.4}\n", correct as f64 / scaled.n_samples() as f64));
    Ok(out)
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let (names, rows) = load_features_csv(&args.data, Some(&model.target))?;
    let expected = model.feature_names.len();
    if names.len() != expected {
        return Err(Error::InvalidDataset(format!(
            "model expects p = {expected} feature columns ({}), input has {}",
            model.feature_names.join(","),
            names.len()
        )));
    }
    let mut out = String::from("prediction\n");
    for row in &rows {
        let k = model.pipeline.predict(row)?;
        out.push_str(&model.class_names[k]);
        out.push('\n');
    }
    emit(args.out.as_deref(), &out)
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let ds = generate_ecological(&synthetic_spec(args.n_per_class, args.seed, args.separated))?;
    save_csv(&ds, &args.out)?;
    println!("{} rows written to {}", ds.n_samples(), args.out.display());
    Ok(())
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let (ds, source) = load_source(&args.source, args.seed)?;
    let ds = if args.standardize { crate::dataset::standardize(&ds)?.0 } else { ds };
    let text = inspect_text(&ds, &source);
    if let Some(path) = &args.out {
        write_text(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

/// Per-feature statistics, class counts and correlation matrix as CSV blocks.
pub fn inspect_text(ds: &Dataset, source: &str) -> String {
    let mut out = format!("# {source}: {} rows, {} features\n", ds.n_samples(), ds.n_features());
    out.push_str("feature,mean,std,min,max\n");
    let scaling = ScalingParams::fit(ds);
    for (j, name) in ds.feature_names().iter().enumerate() {
        let col = ds.column(j);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.push_str(&format!("{name},{},{},{min},{max}\n", scaling.means[j], scaling.std_devs[j]));
    }
    out.push_str("\nclass,count\n");
    for (name, count) in ds.class_names().iter().zip(ds.class_counts()) {
        out.push_str(&format!("{name},{count}\n"));
    }
    out.push_str(&format!("\ncorrelation,{}\n", ds.feature_names().join(",")));
    for (name, row) in ds.feature_names().iter().zip(correlation_matrix(ds)) {
        let r: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&format!("{name},{}\n", r.join(",")));
    }
    out
}
