//! Labeled tabular data: CSV I/O, standardization, seeded splits and a
//! synthetic generator for the sea-bed sampling schema (five species counts,
//! depth, pollution, temperature; sediment type as the target).

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Default name of the target column in generated data.
pub const DEFAULT_TARGET: &str = "sediment";

/// Dense row-major feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let p = feature_names.len();
        let mut flat = Vec::with_capacity(features.len() * p);
        for (i, row) in features.iter().enumerate() {
            if row.len() != p {
                return Err(Error::RaggedRow { row: i, expected: p, found: row.len() });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(flat, labels, feature_names, class_names)
    }

    pub fn from_flat(
        features: Vec<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let p = feature_names.len();
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        if p == 0 {
            return Err(Error::InvalidDataset("no features".into()));
        }
        if features.len() != n * p {
            return Err(Error::InvalidDataset(format!(
                "feature buffer has {} values, expected {n}x{p}",
                features.len()
            )));
        }
        let c = class_names.len();
        if c < 2 {
            return Err(Error::TooFewClasses(c));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::LabelOutOfRange { label: bad, classes: c });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column `{}`",
                pos / p,
                feature_names[pos % p]
            )));
        }
        Ok(Self {
            features,
            labels,
            n_features: p,
            feature_names,
            class_names,
            target_name: DEFAULT_TARGET.to_string(),
        })
    }

    pub fn with_target_name(mut self, name: impl Into<String>) -> Self {
        self.target_name = name.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order. Class names are kept even if a class
    /// ends up absent from the subset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            target_name: self.target_name.clone(),
        }
    }

    /// Same labels and names, new feature values (row-major, same shape).
    pub(crate) fn with_features(&self, features: Vec<f64>) -> Dataset {
        debug_assert_eq!(features.len(), self.features.len());
        Dataset { features, ..self.clone() }
    }
}

/// Read a CSV with a header row. `label_column` is the class target; every
/// other column must be numeric. Class indices follow first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

pub fn read_csv<R: std::io::Read>(reader: R, label_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_pos: Vec<usize> =
        header.iter().enumerate().filter(|(_, h)| *h == label_column).map(|(i, _)| i).collect();
    let label_idx = match label_pos.as_slice() {
        [] => return Err(Error::MissingLabelColumn(label_column.to_string())),
        [i] => *i,
        _ => return Err(Error::DuplicateLabelColumn(label_column.to_string())),
    };
    let feature_names: Vec<String> =
        header.iter().enumerate().filter(|&(i, _)| i != label_idx).map(|(_, h)| h.clone()).collect();

    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow { row, expected: header.len(), found: record.len() });
        }
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                let name = cell.trim().to_string();
                let next = class_names.len();
                let idx = *class_index.entry(name.clone()).or_insert_with(|| {
                    class_names.push(name);
                    next
                });
                labels.push(idx);
            } else {
                features.push(parse_cell(cell, row, &header[col])?);
            }
        }
    }
    if class_names.len() < 2 {
        return Err(Error::TooFewClasses(class_names.len()));
    }
    Ok(Dataset::from_flat(features, labels, feature_names, class_names)?
        .with_target_name(label_column))
}

/// Read a feature-only CSV (as used for prediction). If `drop_column` names a
/// header column, that column is ignored.
pub fn load_features_csv(
    path: impl AsRef<Path>,
    drop_column: Option<&str>,
) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let skip = drop_column.and_then(|d| header.iter().position(|h| h == d));
    let names =
        header.iter().enumerate().filter(|&(i, _)| Some(i) != skip).map(|(_, h)| h.clone()).collect();
    let mut rows = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow { row, expected: header.len(), found: record.len() });
        }
        let values = record
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != skip)
            .map(|(i, cell)| parse_cell(cell, row, &header[i]))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok((names, rows))
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Write features then the label column (as class names). Floats use 17
/// significant digits so a reload is bit-exact.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, file)
}

pub fn write_csv<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(&ds.target_name);
    wtr.write_record(&header)?;
    for (i, row) in ds.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|&v| format_g17(v)).collect();
        rec.push(ds.class_names[ds.labels[i]].clone());
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// `%.17g`-style formatting: 17 significant digits, trailing zeros trimmed,
/// scientific notation outside [1e-5, 1e17).
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (16 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Per-column location and scale used by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl ScalingParams {
    pub fn fit(ds: &Dataset) -> Self {
        let n = ds.n_samples() as f64;
        let p = ds.n_features();
        let mut means = vec![0.0; p];
        for row in ds.rows() {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut ss = vec![0.0; p];
        for row in ds.rows() {
            for j in 0..p {
                let d = row[j] - means[j];
                ss[j] += d * d;
            }
        }
        let denom = (n - 1.0).max(1.0);
        let std_devs = ss.into_iter().map(|s| (s / denom).sqrt()).collect();
        Self { means, std_devs }
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), found: x.len() });
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { 0.0 })
            .collect())
    }

    pub fn inverse_row(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), found: z.len() });
        }
        Ok(z.iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect())
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n_features() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: ds.n_features(),
            });
        }
        let mut out = Vec::with_capacity(ds.features.len());
        for row in ds.rows() {
            out.extend(self.transform_row(row)?);
        }
        Ok(ds.with_features(out))
    }
}

/// Center each column and scale to unit sample standard deviation.
/// Zero-variance columns become all zeros.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, ScalingParams)> {
    if ds.n_samples() < 2 {
        return Err(Error::InvalidDataset("standardize needs at least 2 samples".into()));
    }
    let params = ScalingParams::fit(ds);
    Ok((params.transform(ds)?, params))
}

/// Shuffle row indices and cut at `floor(train_fraction * n)` (at least 1).
pub fn train_test_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, train_fraction, seed, false)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Index form of [`train_test_split`]; with `stratified` each class is cut
/// separately and the pieces are concatenated in class order.
pub fn split_indices(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = ds.n_samples();
    if n < 2 {
        return Err(Error::InvalidParameter("split needs at least 2 samples".into()));
    }
    let mut rng = seed::rng(seed);
    if !stratified {
        let n_train = train_size(n, train_fraction);
        if n_train >= n {
            return Err(Error::InvalidParameter(format!(
                "train fraction {train_fraction} leaves no test rows for n={n}"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let test = idx.split_off(n_train);
        return Ok((idx, test));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..n).filter(|&i| ds.labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng);
        let cut = ((train_fraction * members.len() as f64).floor() as usize).min(members.len());
        test.extend_from_slice(&members[cut..]);
        members.truncate(cut);
        train.extend(members);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "stratified split with fraction {train_fraction} empties one side"
        )));
    }
    Ok((train, test))
}

fn train_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).floor() as usize).max(1)
}

/// Disjoint folds covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// All indices not in fold `f`, ascending.
    pub fn complement(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Shuffle `0..n` and deal it into `k` contiguous folds; the first `n % k`
/// folds get one extra index.
pub fn k_fold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    k_fold_indices(ds.n_samples(), k, seed)
}

pub fn k_fold_indices(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("k={k} outside [2, {n}]")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = idx[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(FoldPlan { folds })
}

/// Pearson correlation between every pair of columns. Constant columns get
/// zero correlation with everything else and 1 on the diagonal.
pub fn correlation_matrix(ds: &Dataset) -> Vec<Vec<f64>> {
    let p = ds.n_features();
    let n = ds.n_samples() as f64;
    let cols: Vec<Vec<f64>> = (0..p).map(|j| ds.column(j)).collect();
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut out = vec![vec![0.0; p]; p];
    for i in 0..p {
        out[i][i] = 1.0;
        for j in 0..i {
            let r = if norms[i] > 0.0 && norms[j] > 0.0 {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}

/// Feature names of the generated ecological table.
pub const ECOLOGICAL_FEATURES: [&str; 8] =
    ["a", "b", "c", "d", "e", "depth", "pollution", "temperature"];
const ECOLOGICAL_CLASSES: [&str; 3] = ["C", "G", "S"];

/// Parameters of [`generate_ecological`]. Means and spreads are per class,
/// in [`ECOLOGICAL_FEATURES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub class_means: Vec<[f64; 8]>,
    pub class_spreads: Vec<[f64; 8]>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        // Clay, gravel and sand stations: overlapping but distinguishable.
        Self {
            n_per_class: 10,
            class_means: vec![
                [4.0, 6.0, 3.0, 2.0, 5.0, 60.0, 5.0, 11.0],
                [8.0, 3.0, 5.0, 6.0, 2.0, 45.0, 3.0, 12.5],
                [2.0, 9.0, 6.0, 4.0, 8.0, 75.0, 7.5, 10.0],
            ],
            class_spreads: vec![[2.0, 2.0, 2.0, 2.0, 2.0, 12.0, 1.5, 1.2]; 3],
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn n_classes(&self) -> usize {
        self.class_means.len()
    }

    /// Spec with `n_classes` classes whose means step by `separation` spreads
    /// along every feature.
    /// Means are offset from a fixed base so every drawn value stays positive.
    pub fn separated(n_classes: usize, n_per_class: usize, separation: f64, seed: u64) -> Self {
        let spread = [1.0, 1.0, 1.0, 1.0, 1.0, 4.0, 0.5, 0.5];
        let base = [3.0, 3.0, 3.0, 3.0, 3.0, 30.0, 2.0, 8.0];
        let class_means = (0..n_classes)
            .map(|k| {
                let mut m = base;
                for (f, v) in m.iter_mut().enumerate() {
                    *v += k as f64 * separation * spread[f];
                }
                m
            })
            .collect();
        Self { n_per_class, class_means, class_spreads: vec![spread; n_classes], seed }
    }

    /// The default three-class schema with class means at least 5 spreads apart.
    pub fn well_separated(seed: u64) -> Self {
        Self::separated(3, 10, 6.0, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::InvalidParameter("n_per_class must be positive".into()));
        }
        if self.class_means.len() < 2 {
            return Err(Error::InvalidParameter("need at least 2 classes".into()));
        }
        if self.class_spreads.len() != self.class_means.len() {
            return Err(Error::InvalidParameter(format!(
                "{} class means but {} spreads",
                self.class_means.len(),
                self.class_spreads.len()
            )));
        }
        let bad = self
            .class_spreads
            .iter()
            .flatten()
            .chain(self.class_means.iter().flatten())
            .any(|v| !v.is_finite())
            || self.class_spreads.iter().flatten().any(|&s| s < 0.0);
        if bad {
            return Err(Error::InvalidParameter("means must be finite, spreads finite and >= 0".into()));
        }
        Ok(())
    }
}

const MIN_DEPTH_M: f64 = 0.5;
const MIN_POLLUTION: f64 = 0.05;

/// Draw `n_per_class` stations per class. Species counts are rounded and
/// clipped at zero; depth and pollution are clipped to small positive floors.
pub fn generate_ecological(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let c = spec.n_classes();
    let mut features = Vec::with_capacity(c * spec.n_per_class * 8);
    let mut labels = Vec::with_capacity(c * spec.n_per_class);
    for class in 0..c {
        let dists: Vec<Normal<f64>> = spec.class_means[class]
            .iter()
            .zip(&spec.class_spreads[class])
            .map(|(&m, &s)| Normal::new(m, s).expect("validated spread"))
            .collect();
        for _ in 0..spec.n_per_class {
            for (f, d) in dists.iter().enumerate() {
                let v = d.sample(&mut rng);
                let v = match f {
                    0..=4 => v.round().max(0.0),
                    5 => v.max(MIN_DEPTH_M),
                    6 => v.max(MIN_POLLUTION),
                    _ => v,
                };
                features.push(v);
            }
            labels.push(class);
        }
    }
    let class_names = (0..c)
        .map(|k| ECOLOGICAL_CLASSES.get(k).map_or_else(|| format!("K{k}"), |s| s.to_string()))
        .collect();
    Dataset::from_flat(
        features,
        labels,
        ECOLOGICAL_FEATURES.iter().map(|s| s.to_string()).collect(),
        class_names,
    )
}
