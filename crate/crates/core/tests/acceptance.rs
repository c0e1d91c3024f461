//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{exact_central_difference, random_labels, random_scores, reference_example_metrics, reference_mean_accuracy, relative_error, rng};
use dai::dataset::{benchmark_matrix, exact_positive_ratio};
use dai::experiment::{run_benchmark, BenchmarkConfig};
use dai::metrics::{example_based, mean_accuracy};
use dai::optimizer::{find_scale_for_fraction, gradient, hinge_term, integerize, optimize, BalanceConfig, ReplicationCounts};
use dai::resample::materialize;
use num_rational::Ratio;
use rand::Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn gradient_correctness() -> Outcome {
    let mut r = rng(101);
    let cfg = BalanceConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let density = r.gen_range(0.1..0.6);
        let a = random_labels(&mut r, 50, 8, density);
        let w: Vec<f64> = (0..50).map(|_| r.gen_range(0.1..2.0)).collect();
        let g = gradient(&w, &a, &cfg).map_err(|e| e.to_string())?;
        for i in 0..w.len() {
            worst = worst.max(relative_error(g[i], exact_central_difference(&a, &w, i, 1e-6, 0.6, cfg.lambda)));
        }
    }
    let detail = format!("worst relative error {worst:.2e} over 20 instances");
    if worst <= 1e-6 { Ok(detail) } else { Err(detail) }
}

fn materialization_exactness() -> Outcome {
    let mut r = rng(102);
    for case in 0..100 {
        let (m, n) = (r.gen_range(1..=40), r.gen_range(1..=8));
        let density = r.gen_range(0.05..0.95);
        let a = random_labels(&mut r, m, n, density);
        let mut counts: Vec<u64> = (0..m).map(|_| r.gen_range(0..6)).collect();
        if counts.iter().all(|&c| c == 0) {
            counts[r.gen_range(0..m)] = 1;
        }
        let (expanded, _) = materialize(&a, &ReplicationCounts::new(counts.clone()).unwrap()).map_err(|e| e.to_string())?;
        let exact = exact_positive_ratio(&a, &counts).map_err(|e| e.to_string())?;
        let rows = expanded.n_samples() as u64;
        for (j, want) in exact.iter().enumerate() {
            let positives = (0..expanded.n_samples()).filter(|&i| expanded.get(i, j) == 1).count() as u64;
            if Ratio::new(positives, rows) != *want {
                return Err(format!("case {case}, label {j}: {positives}/{rows} != {want}"));
            }
        }
    }
    Ok("100 pairs equal under rational arithmetic".into())
}

fn balance_improvement() -> Outcome {
    let a = benchmark_matrix();
    let cfg = BalanceConfig::default();
    let weights = optimize(&a, &cfg).map_err(|e| e.to_string())?;
    let counts = integerize(&weights, cfg.scale_constant).map_err(|e| e.to_string())?;
    let (expanded, _) = materialize(&a, &counts).map_err(|e| e.to_string())?;
    let (before, after) = (a.column_means(), expanded.column_means());
    let stuck: Vec<usize> = (0..before.len()).filter(|&j| before[j] < 0.6 && after[j] <= before[j]).collect();
    let detail = format!(
        "std {:.4} -> {:.4}, min {:.4} -> {:.4}, labels not raised: {stuck:?}",
        before.std_dev(),
        after.std_dev(),
        before.min(),
        after.min()
    );
    if stuck.is_empty() && after.std_dev() < before.std_dev() { Ok(detail) } else { Err(detail) }
}

fn subset_size() -> Outcome {
    let a = benchmark_matrix();
    let weights = optimize(&a, &BalanceConfig::default()).map_err(|e| e.to_string())?;
    let choice = find_scale_for_fraction(&weights, 0.4, a.n_samples()).map_err(|e| e.to_string())?;
    let detail = format!("fraction {:.4} at scale {:.4}", choice.achieved_fraction, choice.scale);
    if (choice.achieved_fraction - 0.4).abs() <= 0.05 { Ok(detail) } else { Err(detail) }
}

fn metrics_oracle() -> Outcome {
    let mut r = rng(105);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let (m, n) = (r.gen_range(1..=64), r.gen_range(1..=16));
        let density = [0.02, 0.3, 0.7, 0.98][case % 4];
        let labels = random_labels(&mut r, m, n, density);
        let preds = random_scores(&mut r, &labels);
        let (ma, _) = mean_accuracy(&preds, &labels).map_err(|e| e.to_string())?;
        let ex = example_based(&preds, &labels).map_err(|e| e.to_string())?;
        worst = worst.max((ma - reference_mean_accuracy(&labels, &preds)).abs());
        for (got, want) in [ex.accuracy, ex.precision, ex.recall, ex.f1].into_iter().zip(reference_example_metrics(&labels, &preds)) {
            worst = worst.max((got - want).abs());
        }
    }
    let detail = format!("worst absolute difference {worst:.2e} over 200 pairs");
    if worst <= 1e-12 { Ok(detail) } else { Err(detail) }
}

fn downstream_improvement() -> Outcome {
    let config = BenchmarkConfig::default();
    let mut wins = 0;
    let (mut base_sum, mut dai_sum) = (0.0, 0.0);
    let mut cells = Vec::new();
    for seed in 1..=5 {
        let outcome = run_benchmark(&config, seed).map_err(|e| e.to_string())?;
        let base = outcome.report("baseline").unwrap().mean_accuracy;
        let dai = outcome.report("dai").unwrap().mean_accuracy;
        wins += usize::from(dai > base);
        base_sum += base;
        dai_sum += dai;
        cells.push(format!("{base:.4}->{dai:.4}"));
    }
    let detail = format!(
        "wins {wins}/5, mean mA {:.4} -> {:.4} [{}]",
        base_sum / 5.0,
        dai_sum / 5.0,
        cells.join(" ")
    );
    if wins >= 4 && dai_sum > base_sum { Ok(detail) } else { Err(detail) }
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    for out in ["run1", "run2"] {
        let status = Command::new(env!("CARGO_BIN_EXE_dai"))
            .args(["demo", "--seed", "7", "--out", out])
            .current_dir(dir.path())
            .env("SOURCE_DATE_EPOCH", "1700000000")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
    }
    let mut names: Vec<String> = fs::read_dir(dir.path().join("run1"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let other = fs::read_dir(dir.path().join("run2")).map_err(|e| e.to_string())?.count();
    if other != names.len() {
        return Err(format!("file sets differ: {} vs {other}", names.len()));
    }
    for name in &names {
        let a = fs::read(dir.path().join("run1").join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(dir.path().join("run2").join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs"));
        }
    }
    Ok(format!("{} files identical: {}", names.len(), names.join(", ")))
}

fn scale_invariance() -> Outcome {
    let mut r = rng(108);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m, n) = (r.gen_range(1..=60), r.gen_range(1..=12));
        let density = r.gen_range(0.05..0.95);
        let a = random_labels(&mut r, m, n, density);
        let w: Vec<f64> = (0..m).map(|_| r.gen_range(0.01..5.0)).collect();
        let tripled: Vec<f64> = w.iter().map(|x| 3.0 * x).collect();
        let targets: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..0.9)).collect();
        let h = hinge_term(&w, &a, &targets).map_err(|e| e.to_string())?;
        let h3 = hinge_term(&tripled, &a, &targets).map_err(|e| e.to_string())?;
        worst = worst.max((h - h3).abs());
    }
    let detail = format!("worst absolute difference {worst:.2e} over 100 instances");
    if worst <= 1e-12 { Ok(detail) } else { Err(detail) }
}

const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, name: "gradient matches central differences", budget: Duration::from_secs(1), check: gradient_correctness },
    Criterion { id: 2, name: "materialization is exact", budget: Duration::from_secs(1), check: materialization_exactness },
    Criterion { id: 3, name: "balance improves on the benchmark matrix", budget: Duration::from_secs(10), check: balance_improvement },
    Criterion { id: 4, name: "subset size reaches 0.4 of the source", budget: Duration::from_secs(10), check: subset_size },
    Criterion { id: 5, name: "metrics match brute-force definitions", budget: Duration::from_secs(1), check: metrics_oracle },
    Criterion { id: 6, name: "alternating training beats the baseline", budget: Duration::from_secs(120), check: downstream_improvement },
    Criterion { id: 7, name: "demo output is deterministic", budget: Duration::from_secs(120), check: determinism },
    Criterion { id: 8, name: "hinge term is scale invariant", budget: Duration::from_secs(1), check: scale_invariance },
];

fn main() {
    let mut failures = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        failures += usize::from(!pass);
        println!(
            "{} [{}] {} ({detail}; {:.2}s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/{} passed", CRITERIA.len() - failures, CRITERIA.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
