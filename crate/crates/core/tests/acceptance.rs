//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{blobs, dual_gap, noise, relative_error, rng, sq_dist};
use ecoclass::dataset::{generate_ecological, k_fold_indices, split_indices};
use ecoclass::evaluation::{run_process, Algorithm, ProcessKind};
use ecoclass::linear_prob::{fit_lda, fit_naive_bayes, loss_and_gradient, LdaModel};
use ecoclass::margin_instance::{fit_knn, fit_svm_binary, fit_svm_multiclass, KernelSpec, SvmParams};
use ecoclass::metrics::{measures, BinaryAggregates};
use ecoclass::neural::{sse_and_gradient, MlpModel};
use ecoclass::trees::{entropy, fit_decision_tree, fit_random_forest, information_gain, ForestParams, TreeParams};
use ecoclass::{Dataset, SyntheticSpec};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn table_rows() -> Vec<(&'static str, [f64; 4], [f64; 4])> {
    vec![
        ("DT", [0.9151, 0.0848, 0.7615, 0.2384], [0.7932, 0.91519, 0.83836, 0.8498]),
        ("RF", [0.9887, 0.0112, 0.8976, 0.1023], [0.9061, 0.98873, 0.94317, 0.9456]),
        ("ANN", [0.8653, 0.1346, 0.7131, 0.2868], [0.7510, 0.86532, 0.789235, 0.8041]),
        ("SVM", [0.8966, 0.1033, 0.7866, 0.2134], [0.8077, 0.89663, 0.841615, 0.8498]),
        ("LDA", [0.9987, 0.0012, 0.9325, 0.0675], [0.9366, 0.9987, 0.9656, 0.9667]),
        ("K-NN", [0.8913, 0.1086, 0.7231, 0.2769], [0.7629, 0.89134, 0.80722, 0.8221]),
        ("LR", [0.9028, 0.0971, 0.7718, 0.2281], [0.7982, 0.90287, 0.83737, 0.8473]),
        ("NB", [0.9907, 0.0092, 0.9123, 0.087], [0.9186, 0.99074, 0.95152, 0.9533]),
    ]
}

fn metrics_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for (name, [tp, fp, tn, fn_], expected) in table_rows() {
        let m = measures(&BinaryAggregates::new(tp, fp, tn, fn_)).map_err(|e| e.to_string())?;
        let got = [m.recall, m.precision, m.accuracy, m.f_score];
        for (g, e) in got.iter().zip(expected) {
            let d = (g - e).abs();
            worst = worst.max(d);
            ensure(d < 1e-3, || format!("{name}: got {got:?}, printed {expected:?}"))?;
        }
    }
    Ok(format!("8 rows, max deviation {worst:.2e}"))
}

fn svm_defaults() -> Check {
    let ds = generate_ecological(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    ensure(ds.n_features() == 8, || "generated data is not 8-feature".into())?;
    let m = fit_svm_multiclass(&ds, &SvmParams::default()).map_err(|e| e.to_string())?;
    ensure(m.kernel == KernelSpec::Rbf { gamma: 0.125 }, || format!("kernel {:?}", m.kernel))?;
    ensure(m.cost == 1.0, || format!("cost {}", m.cost))?;
    ensure(m.machines.len() == 3 && m.pairs == vec![(0, 1), (0, 2), (1, 2)], || format!("pairs {:?}", m.pairs))?;
    let table = m.summary(ds.class_names()).to_table();
    let keys: Vec<&str> = table.lines().map(|l| l.split('\t').next().unwrap_or("")).collect();
    let expected = [
        "SVM-Type",
        "SVM-Kernel",
        "Cost",
        "Gamma",
        "Number of Support Vectors",
        "Number of Classes",
        "Levels",
    ];
    ensure(keys == expected, || format!("summary keys {keys:?}"))?;
    for line in ["SVM-Type\tC-classification", "SVM-Kernel\tradial", "Cost\t1", "Gamma\t0.125", "Number of Classes\t3", "Levels\tC, G, S"] {
        ensure(table.lines().any(|l| l == line), || format!("missing `{line}` in\n{table}"))?;
    }
    Ok(format!("rbf gamma 0.125, cost 1, 3 machines, {} support vectors", m.total_support_vectors()))
}

fn knn_oracle(train: &Dataset, k: usize, q: &[f64]) -> usize {
    let d: Vec<f64> = train.rows().map(|r| sq_dist(r, q)).collect();
    let mut taken = vec![false; d.len()];
    let mut votes = vec![0usize; train.n_classes()];
    for _ in 0..k {
        let mut best = usize::MAX;
        for i in 0..d.len() {
            if !taken[i] && (best == usize::MAX || d[i] < d[best]) {
                best = i;
            }
        }
        taken[best] = true;
        votes[train.labels()[best]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}

fn nb_direct(train: &Dataset, x: &[f64]) -> Vec<f64> {
    let n = train.n_samples() as f64;
    let joint: Vec<f64> = (0..train.n_classes())
        .map(|c| {
            let rows: Vec<&[f64]> = train.rows().zip(train.labels()).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
            let m = rows.len() as f64;
            let mut prod = m / n;
            for (f, &xf) in x.iter().enumerate() {
                let mean = rows.iter().map(|r| r[f]).sum::<f64>() / m;
                let var = rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / m;
                prod *= (-(xf - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            }
            prod
        })
        .collect();
    let z: f64 = joint.iter().sum();
    joint.iter().map(|j| j / z).collect()
}

fn brute_force() -> Check {
    let mut r = rng(3);
    let mut queries = 0;
    for (seed, k) in [(1u64, 1usize), (2, 3), (3, 5), (4, 7)] {
        // Integer grid coordinates make distance ties common.
        let base = noise(40, 3, 2, 4.0, seed);
        let rows: Vec<Vec<f64>> = base.rows().map(|x| x.iter().map(|v| v.round()).collect()).collect();
        let train = Dataset::new(rows, base.labels().to_vec(), base.feature_names().to_vec(), base.class_names().to_vec())
            .map_err(|e| e.to_string())?;
        let model = fit_knn(&train, k).map_err(|e| e.to_string())?;
        for _ in 0..150 {
            let q: Vec<f64> = (0..2).map(|_| r.random_range(-5i32..=5) as f64 / 2.0).collect();
            let got = model.predict(&q).map_err(|e| e.to_string())?;
            let want = knn_oracle(&train, k, &q);
            ensure(got == want, || format!("k={k} query {q:?}: model {got}, oracle {want}"))?;
            queries += 1;
        }
    }

    let train = blobs(15, 3, 3, 1.5, 9);
    let nb = fit_naive_bayes(&train).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..60 {
        let x: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..4.0)).collect();
        let got = nb.posterior(&x).map_err(|e| e.to_string())?;
        let want = nb_direct(&train, &x);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    ensure(worst < 1e-10, || format!("NB posterior deviation {worst:e}"))?;

    let two = Dataset::new(vec![vec![1.0, -2.0], vec![3.0, 4.0]], vec![0, 1], common::names("x", 2), common::names("c", 2))
        .map_err(|e| e.to_string())?;
    let mut boundary: f64 = 0.0;
    for kernel in [KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.3 }] {
        let params = SvmParams { cost: 100.0, kernel: Some(kernel), tolerance: 1e-10, ..Default::default() };
        let m = fit_svm_binary(&two, &params).map_err(|e| e.to_string())?;
        boundary = boundary.max(m.decision_value(&[2.0, 1.0]).map_err(|e| e.to_string())?.abs());
    }
    ensure(boundary < 1e-6, || format!("decision value at midpoint {boundary:e}"))?;
    Ok(format!("{queries} k-NN queries, NB max deviation {worst:.1e}, SVM midpoint |f| {boundary:.1e}"))
}

fn gradient_checks() -> Check {
    let h = 1e-5;
    let mut r = rng(11);
    let ds = noise(25, 3, 4, 2.0, 5);
    let mut worst_lr: f64 = 0.0;
    for _ in 0..12 {
        let mut w: Vec<Vec<f64>> = (0..3).map(|_| (0..5).map(|_| r.random_range(-1.5..1.5)).collect()).collect();
        w[2] = vec![0.0; 5];
        let (_, grad) = loss_and_gradient(&w, &ds);
        ensure(grad[2].iter().all(|&g| g == 0.0), || "reference row gradient is not zero".into())?;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for c in 0..2 {
            for j in 0..5 {
                let mut plus = w.clone();
                plus[c][j] += h;
                let mut minus = w.clone();
                minus[c][j] -= h;
                numeric.push((loss_and_gradient(&plus, &ds).0 - loss_and_gradient(&minus, &ds).0) / (2.0 * h));
                analytic.push(grad[c][j]);
            }
        }
        worst_lr = worst_lr.max(relative_error(&analytic, &numeric));
    }
    ensure(worst_lr < 1e-4, || format!("logistic relative error {worst_lr:e}"))?;

    let mut worst_mlp: f64 = 0.0;
    for _ in 0..12 {
        let mut model = MlpModel::zeros(4, 5, 3);
        let theta: Vec<f64> = (0..model.n_params()).map(|_| r.random_range(-1.0..1.0)).collect();
        model.set_params(&theta).map_err(|e| e.to_string())?;
        let (_, analytic) = sse_and_gradient(&model, &ds).map_err(|e| e.to_string())?;
        let mut numeric = Vec::with_capacity(theta.len());
        for k in 0..theta.len() {
            let eval = |delta: f64| {
                let mut t = theta.clone();
                t[k] += delta;
                let mut m = model.clone();
                m.set_params(&t).unwrap();
                sse_and_gradient(&m, &ds).unwrap().0
            };
            numeric.push((eval(h) - eval(-h)) / (2.0 * h));
        }
        worst_mlp = worst_mlp.max(relative_error(&analytic, &numeric));
    }
    ensure(worst_mlp < 1e-4, || format!("MLP relative error {worst_mlp:e}"))?;
    Ok(format!("12 points each, max relative error LR {worst_lr:.1e}, MLP {worst_mlp:.1e}"))
}

fn tree_suite() -> Check {
    let e = entropy(&[5, 5]).map_err(|e| e.to_string())?;
    ensure(e == 1.0, || format!("entropy([5,5]) = {e}"))?;

    let mut r = rng(21);
    let mut min_gain = f64::INFINITY;
    for _ in 0..1000 {
        let c = r.random_range(2..5);
        let parts = r.random_range(2..5);
        let partition: Vec<Vec<usize>> = (0..parts).map(|_| (0..c).map(|_| r.random_range(0..8)).collect()).collect();
        let parent: Vec<usize> = (0..c).map(|k| partition.iter().map(|p| p[k]).sum()).collect();
        if parent.iter().sum::<usize>() == 0 || partition.iter().any(|p| p.iter().sum::<usize>() == 0) {
            continue;
        }
        min_gain = min_gain.min(information_gain(&parent, &partition).map_err(|e| e.to_string())?);
    }
    ensure(min_gain >= -1e-12, || format!("negative gain {min_gain:e}"))?;

    for seed in 0..5 {
        let ds = noise(40, 3, 3, 1.0, 100 + seed);
        let tree = fit_decision_tree(&ds, &TreeParams::default()).map_err(|e| e.to_string())?;
        for (x, &y) in ds.rows().zip(ds.labels()) {
            ensure(tree.predict(x).unwrap() == y, || format!("tree misfits training row (seed {seed})"))?;
        }
    }

    let ds = blobs(12, 3, 4, 1.0, 8);
    let forest = fit_random_forest(&ds, &ForestParams { n_trees: 51, seed: 4, ..Default::default() }).map_err(|e| e.to_string())?;
    let queries = noise(100, 3, 4, 3.0, 77);
    for x in ds.rows().chain(queries.rows()) {
        let mut votes = vec![0usize; 3];
        for t in &forest.trees {
            votes[t.predict(x).unwrap()] += 1;
        }
        let top = *votes.iter().max().unwrap();
        let mode = votes.iter().position(|&v| v == top).unwrap();
        ensure(forest.predict(x).unwrap() == mode, || "forest prediction differs from vote mode".into())?;
    }
    Ok(format!("min gain {min_gain:.1e}, 5 consistent sets fitted exactly, 136 forest votes checked"))
}

fn random_unit(r: &mut impl Rng, p: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(r)).collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

fn lda_suite() -> Check {
    let ds = blobs(15, 3, 4, 1.2, 31);
    let model = fit_lda(&ds).map_err(|e| e.to_string())?;
    let ld1 = &model.discriminant_axes[0];
    let best = model.fisher_ratio(ld1).map_err(|e| e.to_string())?;
    let mut r = rng(32);
    for _ in 0..1000 {
        let s = model.fisher_ratio(&random_unit(&mut r, 4)).unwrap();
        ensure(s <= best * (1.0 + 1e-12), || format!("random direction {s} beats LD1 {best}"))?;
    }

    let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let same = LdaModel::from_moments(vec![vec![1.0, 2.0]; 2], identity.clone(), vec![0.5, 0.5]).map_err(|e| e.to_string())?;
    let d0 = same.mahalanobis_sq(0, 1).map_err(|e| e.to_string())?;
    ensure(d0.abs() < 1e-12, || format!("equal means give {d0}"))?;
    let offset = LdaModel::from_moments(vec![vec![0.0, 0.0], vec![3.0, 4.0]], identity, vec![0.5, 0.5]).map_err(|e| e.to_string())?;
    let d25 = offset.mahalanobis_sq(0, 1).map_err(|e| e.to_string())?;
    ensure((d25 - 25.0).abs() < 1e-12, || format!("offset (3,4) gives {d25}"))?;

    let a = [[2.0, 0.5, 0.0, -1.0], [0.3, 1.5, 0.2, 0.0], [0.0, -0.4, 3.0, 0.1], [1.0, 0.0, 0.0, 0.7]];
    let b = [10.0, -3.0, 0.5, 7.0];
    let moved: Vec<Vec<f64>> = ds
        .rows()
        .map(|x| (0..4).map(|i| (0..4).map(|j| a[i][j] * x[j]).sum::<f64>() + b[i]).collect())
        .collect();
    let moved = Dataset::new(moved, ds.labels().to_vec(), ds.feature_names().to_vec(), ds.class_names().to_vec())
        .map_err(|e| e.to_string())?;
    let other = fit_lda(&moved).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        worst = worst.max((model.mahalanobis_sq(i, j).unwrap() - other.mahalanobis_sq(i, j).unwrap()).abs());
    }
    ensure(worst < 1e-6, || format!("affine change moves distance by {worst:e}"))?;
    Ok(format!("LD1 ratio {best:.4} beats 1000 directions, distances 0 / 25, affine drift {worst:.1e}"))
}

fn svm_feasibility() -> Check {
    let mut fitted = 0;
    let mut worst_eq: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for seed in 0..4 {
        let problems = [blobs(30, 2, 3, 1.0, 40 + seed), noise(60, 2, 3, 2.0, 50 + seed)];
        for ds in &problems {
            for kernel in [KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.5 }] {
                for cost in [0.1, 1.0, 10.0] {
                    let m = fit_svm_binary(ds, &SvmParams { cost, kernel: Some(kernel), ..Default::default() })
                        .map_err(|e| e.to_string())?;
                    if !m.converged {
                        continue;
                    }
                    fitted += 1;
                    ensure(m.alphas.iter().all(|&a| (0.0..=cost).contains(&a)), || "alpha outside [0, C]".into())?;
                    let eq = m.equality_residual();
                    let rows: Vec<&[f64]> = ds.rows().collect();
                    let gap = dual_gap(&rows, &m.targets, &m.alphas, cost, |x, y| ecoclass::margin_instance::kernel_eval(&kernel, x, y).unwrap());
                    worst_eq = worst_eq.max(eq);
                    worst_gap = worst_gap.max(gap).max(m.kkt_violation);
                }
            }
        }
    }
    ensure(fitted > 0, || "no converged model".into())?;
    ensure(worst_eq < 1e-6, || format!("|sum a y| = {worst_eq:e}"))?;
    ensure(worst_gap < 1e-3, || format!("KKT violation {worst_gap:e}"))?;
    Ok(format!("{fitted} converged 60-sample models, |sum a y| <= {worst_eq:.1e}, KKT <= {worst_gap:.4e}"))
}

fn run_bench(args: &[&str], out: &std::path::Path) -> std::result::Result<Value, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_ecoclass"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.code() == Some(0), || {
        format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
    })?;
    serde_json::from_slice(&std::fs::read(out).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let report = run_bench(&["bench", "--synthetic", "--seed", "42"], &a)?;
    run_bench(&["bench", "--synthetic", "--seed", "42"], &b)?;
    ensure(std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap(), || "reports differ between runs".into())?;
    ensure(report["seed"] == 42, || "seed missing from report".into())?;
    let rows = report["rows"].as_array().ok_or("no rows")?;
    ensure(rows.len() == 24, || format!("{} rows", rows.len()))?;
    for row in rows {
        for key in ["tp", "fp", "tn", "fn", "recall", "precision", "accuracy", "f_score"] {
            let v = row[key].as_f64().ok_or_else(|| format!("{key} missing in {row}"))?;
            ensure((0.0..=1.0).contains(&v), || format!("{key} = {v} in {row}"))?;
        }
    }

    let sep = dir.path().join("sep.json");
    let report = run_bench(&["bench", "--synthetic", "--separated", "--seed", "42", "--processes", "I"], &sep)?;
    let mut lowest: f64 = 1.0;
    for row in report["rows"].as_array().ok_or("no rows")? {
        let acc = row["accuracy"].as_f64().ok_or("accuracy missing")?;
        lowest = lowest.min(acc);
        ensure(acc >= 0.90, || format!("{} process I accuracy {acc}", row["algorithm"]))?;
    }
    Ok(format!("24 cells in [0,1], identical rerun, separated process I accuracy >= {lowest:.4}"))
}

fn protocol() -> Check {
    let ds = generate_ecological(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let (train, test) = split_indices(&ds, 0.75, 42, false).map_err(|e| e.to_string())?;
    ensure((train.len(), test.len()) == (22, 8), || format!("split {}/{}", train.len(), test.len()))?;
    let plan = k_fold_indices(30, 3, 42).map_err(|e| e.to_string())?;
    let mut sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
    sizes.sort_unstable();
    ensure(sizes == [10, 10, 10], || format!("fold sizes {sizes:?}"))?;
    let mut all: Vec<usize> = plan.folds.concat();
    all.sort_unstable();
    ensure(all == (0..30).collect::<Vec<_>>(), || "folds do not partition 0..30".into())?;
    for alg in [Algorithm::Lda, Algorithm::NaiveBayes, "KNN".parse().unwrap(), "DT".parse().unwrap()] {
        let out = run_process(&ds, &alg, &ProcessKind::CV, 42).map_err(|e| e.to_string())?;
        ensure(out.confusion.total() == 30, || format!("{alg}: pooled total {}", out.confusion.total()))?;
    }
    Ok("split 22/8, folds {10,10,10}, pooled CV totals 30".into())
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 9] = [
        ("metrics oracle", Duration::from_secs(1), metrics_oracle),
        ("SVM defaults", Duration::from_secs(1), svm_defaults),
        ("brute-force oracles", Duration::from_secs(10), brute_force),
        ("gradient checks", Duration::from_secs(10), gradient_checks),
        ("tree suite", Duration::from_secs(10), tree_suite),
        ("LDA suite", Duration::from_secs(5), lda_suite),
        ("SVM feasibility", Duration::from_secs(10), svm_feasibility),
        ("end-to-end benchmark", Duration::from_secs(30), end_to_end),
        ("evaluation protocol", Duration::from_secs(1), protocol),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let verdict = match result {
            Ok(detail) if elapsed <= *budget => format!("PASS  {detail}"),
            Ok(detail) => format!("FAIL  over time budget {budget:?}; {detail}"),
            Err(why) => format!("FAIL  {why}"),
        };
        if verdict.starts_with("FAIL") {
            failed += 1;
        }
        println!("criterion {} ({name}, {:.2}s): {verdict}", i + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
