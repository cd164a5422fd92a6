//! Benchmark harness: fit each classifier under resubstitution, a single
//! holdout split, and k-fold cross-validation, and collect the confusion
//! matrix based measures into a comparison report.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{k_fold, split_indices, Dataset, ScalingParams};
use crate::error::{Error, Result};
use crate::linear_prob::{
    fit_lda, fit_logistic, fit_naive_bayes, LdaModel, LogisticConfig, LogisticModel, NaiveBayesModel,
};
use crate::margin_instance::{fit_knn, fit_svm_multiclass, KnnModel, SvmMulticlassModel, SvmParams};
use crate::metrics::{confusion_matrix, macro_aggregate, measures, ConfusionMatrix};
use crate::neural::{fit_mlp, MlpConfig, MlpModel};
use crate::seed::{derive_seed, tag};
use crate::trees::{
    fit_decision_tree, fit_random_forest, DecisionTreeModel, ForestModel, ForestParams, TreeParams,
};

pub const DEFAULT_KNN_K: usize = 5;

/// A classifier and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params")]
pub enum Algorithm {
    #[serde(rename = "DT")]
    DecisionTree(TreeParams),
    #[serde(rename = "RF")]
    RandomForest(ForestParams),
    #[serde(rename = "ANN")]
    NeuralNet(MlpConfig),
    #[serde(rename = "SVM")]
    Svm(SvmParams),
    #[serde(rename = "LDA")]
    Lda,
    #[serde(rename = "KNN")]
    Knn { k: usize },
    #[serde(rename = "LR")]
    LogisticRegression(LogisticConfig),
    #[serde(rename = "NB")]
    NaiveBayes,
}

impl Algorithm {
    pub const CODES: [&'static str; 8] = ["DT", "RF", "ANN", "SVM", "LDA", "KNN", "LR", "NB"];

    pub fn code(&self) -> &'static str {
        match self {
            Algorithm::DecisionTree(_) => "DT",
            Algorithm::RandomForest(_) => "RF",
            Algorithm::NeuralNet(_) => "ANN",
            Algorithm::Svm(_) => "SVM",
            Algorithm::Lda => "LDA",
            Algorithm::Knn { .. } => "KNN",
            Algorithm::LogisticRegression(_) => "LR",
            Algorithm::NaiveBayes => "NB",
        }
    }

    /// All eight classifiers with default hyperparameters, in report order.
    pub fn all() -> Vec<Algorithm> {
        Self::CODES.iter().map(|c| c.parse().expect("known code")).collect()
    }

    /// Fit on `ds` as given (no scaling). `seed` drives any randomness.
    pub fn fit(&self, ds: &Dataset, seed: u64) -> Result<FittedModel> {
        Ok(match self {
            Algorithm::DecisionTree(p) => FittedModel::DecisionTree(fit_decision_tree(ds, p)?),
            Algorithm::RandomForest(p) => {
                FittedModel::RandomForest(fit_random_forest(ds, &ForestParams { seed, ..p.clone() })?)
            }
            Algorithm::NeuralNet(c) => {
                FittedModel::NeuralNet(fit_mlp(ds, &MlpConfig { seed, ..c.clone() })?.0)
            }
            Algorithm::Svm(p) => {
                let model = fit_svm_multiclass(ds, p)?;
                if !model.converged() {
                    return Err(Error::Numerical("SVM solver hit its iteration cap".into()));
                }
                FittedModel::Svm(model)
            }
            Algorithm::Lda => FittedModel::Lda(fit_lda(ds)?),
            Algorithm::Knn { k } => FittedModel::Knn(fit_knn(ds, *k)?),
            Algorithm::LogisticRegression(c) => FittedModel::LogisticRegression(fit_logistic(ds, c)?),
            Algorithm::NaiveBayes => FittedModel::NaiveBayes(fit_naive_bayes(ds)?),
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "DT" => Algorithm::DecisionTree(TreeParams::default()),
            "RF" => Algorithm::RandomForest(ForestParams::default()),
            "ANN" | "MLP" => Algorithm::NeuralNet(MlpConfig::default()),
            "SVM" => Algorithm::Svm(SvmParams::default()),
            "LDA" => Algorithm::Lda,
            "KNN" | "K-NN" => Algorithm::Knn { k: DEFAULT_KNN_K },
            "LR" => Algorithm::LogisticRegression(LogisticConfig::default()),
            "NB" => Algorithm::NaiveBayes,
            other => return Err(Error::InvalidParameter(format!("unknown algorithm `{other}`"))),
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A trained classifier of any of the eight kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model")]
pub enum FittedModel {
    DecisionTree(DecisionTreeModel),
    RandomForest(ForestModel),
    NeuralNet(MlpModel),
    Svm(SvmMulticlassModel),
    Lda(LdaModel),
    Knn(KnnModel),
    LogisticRegression(LogisticModel),
    NaiveBayes(NaiveBayesModel),
}

impl FittedModel {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            FittedModel::DecisionTree(m) => m.predict(x),
            FittedModel::RandomForest(m) => m.predict(x),
            FittedModel::NeuralNet(m) => m.predict(x),
            FittedModel::Svm(m) => m.predict(x),
            FittedModel::Lda(m) => m.predict(x),
            FittedModel::Knn(m) => m.predict(x),
            FittedModel::LogisticRegression(m) => m.predict(x),
            FittedModel::NaiveBayes(m) => m.predict(x),
        }
    }
}

/// Scaling fitted on the training rows followed by a model fitted on the
/// scaled rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub scaling: ScalingParams,
    pub model: FittedModel,
}

impl Pipeline {
    pub fn fit(ds: &Dataset, algorithm: &Algorithm, seed: u64) -> Result<Self> {
        let scaling = ScalingParams::fit(ds);
        let scaled = scaling.transform(ds)?;
        let model = algorithm.fit(&scaled, seed)?;
        Ok(Self { scaling, model })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.model.predict(&self.scaling.transform_row(x)?)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<usize>> {
        ds.rows().map(|x| self.predict(x)).collect()
    }
}

/// How a classifier is scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProcessKind {
    /// Train and test on every row (process I).
    Resubstitution,
    /// One seeded split (process II, 75% train by default).
    Holdout { train_fraction: f64 },
    /// Pooled out-of-fold predictions (process III, 3 folds by default).
    CrossValidation { folds: usize },
}

impl ProcessKind {
    pub const HOLDOUT: ProcessKind = ProcessKind::Holdout { train_fraction: 0.75 };
    pub const CV: ProcessKind = ProcessKind::CrossValidation { folds: 3 };

    pub fn all() -> Vec<ProcessKind> {
        vec![ProcessKind::Resubstitution, Self::HOLDOUT, Self::CV]
    }

    /// Roman numeral used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            ProcessKind::Resubstitution => "I",
            ProcessKind::Holdout { .. } => "II",
            ProcessKind::CrossValidation { .. } => "III",
        }
    }

    pub fn description(&self) -> String {
        match self {
            ProcessKind::Resubstitution => "resubstitution (whole data set for training and testing)".into(),
            ProcessKind::Holdout { train_fraction } => {
                format!("holdout ({:.0}% train / {:.0}% test)", train_fraction * 100.0, (1.0 - train_fraction) * 100.0)
            }
            ProcessKind::CrossValidation { folds } => format!("{folds}-fold cross-validation"),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            ProcessKind::Holdout { train_fraction } if !(train_fraction > 0.0 && train_fraction < 1.0) => {
                Err(Error::InvalidParameter(format!("train fraction {train_fraction} outside (0, 1)")))
            }
            ProcessKind::CrossValidation { folds } if folds < 2 || folds > n => {
                Err(Error::InvalidParameter(format!("{folds} folds outside [2, {n}]")))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" | "RESUBSTITUTION" => Ok(ProcessKind::Resubstitution),
            "II" | "2" | "HOLDOUT" => Ok(Self::HOLDOUT),
            "III" | "3" | "CV" => Ok(Self::CV),
            other => Err(Error::InvalidParameter(format!("unknown process `{other}`"))),
        }
    }
}

/// Predictions for every scored row, with the row's true label.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessOutcome {
    pub actual: Vec<usize>,
    pub predicted: Vec<usize>,
    pub confusion: ConfusionMatrix,
}

/// Seed for the model of one (algorithm, process) cell, given the seed that
/// drives the process's partition.
pub fn model_seed(process_seed: u64, algorithm: &Algorithm) -> u64 {
    derive_seed(process_seed, &[tag(algorithm.code())])
}

/// Seed of a process's partition within a benchmark. It does not depend on
/// the algorithm, so every algorithm sees the same splits.
pub fn process_seed(master_seed: u64, kind: &ProcessKind) -> u64 {
    derive_seed(master_seed, &[tag(kind.label())])
}

/// Score one algorithm under one process. Scaling is always fitted on the
/// training rows only.
pub fn run_process(ds: &Dataset, algorithm: &Algorithm, kind: &ProcessKind, seed: u64) -> Result<ProcessOutcome> {
    kind.validate(ds.n_samples())?;
    let mseed = model_seed(seed, algorithm);
    let (actual, predicted) = match *kind {
        ProcessKind::Resubstitution => {
            let pipe = Pipeline::fit(ds, algorithm, mseed)?;
            (ds.labels().to_vec(), pipe.predict_dataset(ds)?)
        }
        ProcessKind::Holdout { train_fraction } => {
            let (train, test) = split_indices(ds, train_fraction, seed, false)?;
            let pipe = Pipeline::fit(&ds.subset(&train), algorithm, mseed)?;
            let test = ds.subset(&test);
            (test.labels().to_vec(), pipe.predict_dataset(&test)?)
        }
        ProcessKind::CrossValidation { folds } => {
            let plan = k_fold(ds, folds, seed)?;
            let mut actual = Vec::with_capacity(ds.n_samples());
            let mut predicted = Vec::with_capacity(ds.n_samples());
            for (f, fold) in plan.folds.iter().enumerate() {
                let train = ds.subset(&plan.complement(f));
                let pipe = Pipeline::fit(&train, algorithm, derive_seed(mseed, &[f as u64]))
                    .map_err(|e| Error::InvalidDataset(format!("fold {}: {e}", f + 1)))?;
                let test = ds.subset(fold);
                actual.extend_from_slice(test.labels());
                predicted.extend(pipe.predict_dataset(&test)?);
            }
            (actual, predicted)
        }
    };
    let confusion = confusion_matrix(&actual, &predicted, ds.n_classes())?;
    Ok(ProcessOutcome { actual, predicted, confusion })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub target: String,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
}

impl DatasetSummary {
    pub fn of(ds: &Dataset, source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            n_samples: ds.n_samples(),
            n_features: ds.n_features(),
            n_classes: ds.n_classes(),
            target: ds.target_name().to_string(),
            feature_names: ds.feature_names().to_vec(),
            class_names: ds.class_names().to_vec(),
            class_counts: ds.class_counts(),
        }
    }
}

/// One (algorithm, process) cell. Measures are absent when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub process: String,
    pub seed: u64,
    pub tp: Option<f64>,
    pub fp: Option<f64>,
    pub tn: Option<f64>,
    #[serde(rename = "fn")]
    pub fn_: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
    pub f_score: Option<f64>,
    /// Wall-clock time, only recorded when timing is requested.
    pub wall_ms: Option<f64>,
    pub n_scored: usize,
    /// Raw confusion counts, rows = actual, columns = predicted.
    pub confusion: Option<Vec<Vec<u64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl ReportRow {
    fn from_outcome(algorithm: &Algorithm, kind: &ProcessKind, seed: u64, outcome: Result<ProcessOutcome>) -> Self {
        let mut row = ReportRow {
            algorithm: algorithm.code().to_string(),
            process: kind.label().to_string(),
            seed,
            tp: None,
            fp: None,
            tn: None,
            fn_: None,
            recall: None,
            precision: None,
            accuracy: None,
            f_score: None,
            wall_ms: None,
            n_scored: 0,
            confusion: None,
            error: None,
        };
        let scored = outcome.and_then(|o| {
            let agg = macro_aggregate(&o.confusion)?;
            let m = measures(&agg)?;
            Ok((o, agg, m))
        });
        match scored {
            Ok((o, agg, m)) => {
                row.tp = Some(agg.tp);
                row.fp = Some(agg.fp);
                row.tn = Some(agg.tn);
                row.fn_ = Some(agg.fn_);
                row.recall = Some(m.recall);
                row.precision = Some(m.precision);
                row.accuracy = Some(m.accuracy);
                row.f_score = Some(m.f_score);
                row.n_scored = o.confusion.total() as usize;
                row.confusion = Some(o.confusion.counts().to_vec());
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BenchmarkOptions {
    /// Record wall-clock time per cell. Makes reports non-reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub dataset_summary: DatasetSummary,
    pub processes: Vec<ProcessKind>,
    pub rows: Vec<ReportRow>,
}

/// Every algorithm under every process. Cells run in parallel; each cell's
/// randomness depends only on (master seed, process, algorithm).
pub fn run_benchmark(
    ds: &Dataset,
    source: &str,
    algorithms: &[Algorithm],
    processes: &[ProcessKind],
    master_seed: u64,
    options: BenchmarkOptions,
) -> Result<BenchmarkReport> {
    if algorithms.is_empty() || processes.is_empty() {
        return Err(Error::InvalidParameter("need at least one algorithm and one process".into()));
    }
    let cells: Vec<(&ProcessKind, &Algorithm)> =
        processes.iter().flat_map(|p| algorithms.iter().map(move |a| (p, a))).collect();
    let rows = cells
        .par_iter()
        .map(|&(kind, alg)| {
            let seed = process_seed(master_seed, kind);
            let start = Instant::now();
            let outcome = run_process(ds, alg, kind, seed);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let mut row = ReportRow::from_outcome(alg, kind, seed, outcome);
            if options.timing {
                row.wall_ms = Some(elapsed);
            }
            row
        })
        .collect();
    Ok(BenchmarkReport {
        seed: master_seed,
        dataset_summary: DatasetSummary::of(ds, source),
        processes: processes.to_vec(),
        rows,
    })
}

impl BenchmarkReport {
    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn rows_for(&self, process: &str) -> impl Iterator<Item = &ReportRow> + '_ {
        let process = process.to_string();
        self.rows.iter().filter(move |r| r.process == process)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Long format: one line per cell, columns in table order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "seed,algorithm,process,tp,fp,tn,fn,recall,precision,accuracy,f_score,wall_ms,error\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let err = r.error.as_deref().unwrap_or("").replace('"', "'");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"\n",
                self.seed,
                r.algorithm,
                r.process,
                opt(r.tp),
                opt(r.fp),
                opt(r.tn),
                opt(r.fn_),
                opt(r.recall),
                opt(r.precision),
                opt(r.accuracy),
                opt(r.f_score),
                opt(r.wall_ms),
                err
            ));
        }
        out
    }

    /// One table per process.
    pub fn to_markdown(&self) -> String {
        let s = &self.dataset_summary;
        let mut out = format!(
            "# Classifier benchmark\n\nseed: {}\n\ndataset: {} ({} rows, {} features, {} classes: {})\n",
            self.seed,
            s.source,
            s.n_samples,
            s.n_features,
            s.n_classes,
            s.class_names.join(", ")
        );
        let f4 = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        for kind in &self.processes {
            out.push_str(&format!("\n## Process {}: {}\n\n", kind.label(), kind.description()));
            out.push_str("| Algorithm | T_p | F_p | T_n | F_n | Recall / Sensitivity | Precision | Accuracy | F-Score |\n");
            out.push_str("|---|---|---|---|---|---|---|---|---|\n");
            for r in self.rows_for(kind.label()) {
                if let Some(err) = &r.error {
                    out.push_str(&format!("| {} | error: {} | | | | | | | |\n", r.algorithm, err.replace('|', "/")));
                    continue;
                }
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                    r.algorithm,
                    f4(r.tp),
                    f4(r.fp),
                    f4(r.tn),
                    f4(r.fn_),
                    f4(r.recall),
                    f4(r.precision),
                    f4(r.accuracy),
                    f4(r.f_score)
                ));
            }
        }
        out
    }
}

/// Algorithms scored under `process`, best first: accuracy, then F-score,
/// then name. Failed cells come last, by name.
pub fn rank_algorithms(report: &BenchmarkReport, process: &str) -> Result<Vec<String>> {
    let mut rows: Vec<&ReportRow> = report.rows_for(process).collect();
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!("process `{process}` not in report")));
    }
    let key = |r: &ReportRow| (r.accuracy.unwrap_or(f64::NEG_INFINITY), r.f_score.unwrap_or(f64::NEG_INFINITY));
    rows.sort_by(|a, b| {
        let (aa, af) = key(a);
        let (ba, bf) = key(b);
        ba.total_cmp(&aa).then(bf.total_cmp(&af)).then_with(|| a.algorithm.cmp(&b.algorithm))
    });
    Ok(rows.into_iter().map(|r| r.algorithm.clone()).collect())
}
