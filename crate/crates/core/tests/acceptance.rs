//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use inftda::dgauss::{self, NoiseScale};
use inftda::eval::{baseline_noisy_table, bound_experiment, utility_bound};
use inftda::intopt;
use inftda::model::{contingency, Dataset, LevelMap, Schema};
use inftda::rng::SeedKey;
use inftda::{run, NoiseMode, PrivacyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn random_dataset(rng: &mut ChaCha8Rng, max_d: usize, max_size: usize, max_n: usize) -> Dataset {
    let d = rng.gen_range(1..=max_d);
    let sizes: Vec<usize> = (0..d).map(|_| rng.gen_range(2..=max_size)).collect();
    let n = rng.gen_range(1..=max_n);
    // Skew toward low indices so the data is sparse with uneven counts.
    let records = (0..n)
        .map(|_| {
            sizes
                .iter()
                .map(|&s| {
                    let a = rng.gen_range(0..s as u32);
                    let b = rng.gen_range(0..s as u32);
                    a.min(b)
                })
                .collect()
        })
        .collect();
    Dataset::new(Schema::with_domain_sizes(&sizes).unwrap(), records).unwrap()
}

/// Rolls level `k + 1` up by dropping the last coordinate.
fn roll_up(level: &LevelMap, k: usize) -> LevelMap {
    let mut out = LevelMap::new();
    for (p, c) in level {
        *out.entry(p[..k].to_vec()).or_insert(0) += c;
    }
    out
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:?}, limit {limit:?}"))
    }
}

fn ac1_zero_noise_identity() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..20 {
        let ds = random_dataset(&mut rng, 4, 5, 200);
        let d = ds.schema().depth();
        let params = PrivacyParams::parse("1", d).unwrap();
        let tree =
            run(&ds, &params, SeedKey::from_u64(i), NoiseMode::Zero).map_err(|e| e.to_string())?;
        let truth = contingency(&ds);
        for k in 0..=d {
            if tree.level(k) != Some(&truth.prefix_counts(k).unwrap()) {
                return Err(format!(
                    "dataset {i}: level {k} differs from the true counts"
                ));
            }
        }
        if tree.to_table().unwrap() != truth {
            return Err(format!("dataset {i}: leaf table differs"));
        }
    }
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!("20 datasets exact at every level in {took:?}"))
}

fn ac2_mass_and_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rhos = ["0.1", "1", "10"];
    for i in 0..100u64 {
        let ds = random_dataset(&mut rng, 4, 5, 200);
        let d = ds.schema().depth();
        let n = ds.len() as u64;
        let params = PrivacyParams::parse(rhos[i as usize % 3], d).unwrap();
        let tree = run(
            &ds,
            &params,
            SeedKey::from_u64(1000 + i),
            NoiseMode::DiscreteGaussian,
        )
        .map_err(|e| e.to_string())?;
        let table = tree.to_table().unwrap();
        if table.total() != n {
            return Err(format!("run {i}: leaf total {} != n = {n}", table.total()));
        }
        if tree.level(0) != Some(&LevelMap::from([(vec![], n)])) {
            return Err(format!("run {i}: root is not n"));
        }
        for k in 0..=d {
            let level = tree.level(k).unwrap();
            if level.values().any(|&c| c == 0) {
                return Err(format!("run {i}: zero count stored at level {k}"));
            }
            if k < d && roll_up(tree.level(k + 1).unwrap(), k) != *level {
                return Err(format!(
                    "run {i}: level {} does not aggregate to level {k}",
                    k + 1
                ));
            }
        }
    }
    Ok("100 runs: total = n, counts >= 0, every level consistent".into())
}

fn ac3_intopt_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..1000 {
        let m = rng.gen_range(1..=6);
        let x: Vec<i64> = (0..m).map(|_| rng.gen_range(-8..=8)).collect();
        let c = rng.gen_range(0..=30u64);
        let sol = intopt::solve(&x, c).unwrap();
        let best = intopt::brute_force(&x, c).unwrap();
        if sol.y.iter().sum::<u64>() != c {
            return Err(format!("instance {i} {x:?} c={c}: sum(y) != c"));
        }
        let obj = x
            .iter()
            .zip(&sol.y)
            .map(|(&a, &b)| (a - b as i64).unsigned_abs())
            .max()
            .unwrap();
        if obj != sol.objective || obj != best {
            return Err(format!(
                "instance {i} {x:?} c={c}: objective {obj} (reported {}), oracle {best}",
                sol.objective
            ));
        }
    }
    let took = within(Duration::from_secs(5), started)?;
    Ok(format!("1000 instances optimal and feasible in {took:?}"))
}

fn ac4_discrete_gaussian() -> Outcome {
    let started = Instant::now();
    const N: usize = 100_000;
    let mut notes = Vec::new();
    for sigma_sq in [1u64, 4, 25] {
        let scale = NoiseScale::from_integer(sigma_sq).unwrap();
        let mut rng = SeedKey::from_u64(40 + sigma_sq).stream();
        let xs = dgauss::sample_vector(&scale, N, &mut rng).map_err(|e| e.to_string())?;
        let nf = N as f64;
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / nf;
        let m2 = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / nf;
        let m4 = xs.iter().map(|&x| (x as f64 - mean).powi(4)).sum::<f64>() / nf;
        let var = m2 * nf / (nf - 1.0);
        let se = ((m4 - m2 * m2) / nf).sqrt();
        let s2 = sigma_sq as f64;
        if var > s2 + 4.0 * se {
            return Err(format!(
                "sigma^2={sigma_sq}: variance {var:.4} > {s2} + 4*{se:.4}"
            ));
        }
        let sigma = s2.sqrt();
        for t in 1..=(5.0 * sigma) as i64 {
            let bound = (-((t * t) as f64) / (2.0 * s2)).exp();
            let band = 4.0 * (bound * (1.0 - bound) / nf).sqrt();
            let tail = xs.iter().filter(|&&x| x >= t).count() as f64 / nf;
            if tail > bound + band {
                return Err(format!(
                    "sigma^2={sigma_sq}, t={t}: Pr[Z>=t]={tail} > {bound} + {band}"
                ));
            }
        }
        notes.push(format!("var({sigma_sq})={var:.3}"));
        if sigma_sq == 1 {
            // Truncated-series normalization of exp(-z^2/2).
            let norm: f64 = (-20i64..=20).map(|z| (-((z * z) as f64) / 2.0).exp()).sum();
            let p0 = 1.0 / norm;
            if (p0 - 0.39894).abs() > 1e-5 {
                return Err(format!("oracle Pr[Z=0] = {p0}"));
            }
            let hits = xs.iter().filter(|&&x| x == 0).count() as f64 / nf;
            if (hits - p0).abs() > 0.01 {
                return Err(format!("Pr[Z=0] = {hits}, expected {p0} +/- 0.01"));
            }
            notes.push(format!("Pr[Z=0]={hits:.4}"));
        }
    }
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!("{} in {took:?}", notes.join(", ")))
}

fn ac5_utility_bound() -> Outcome {
    let started = Instant::now();
    let sizes = [4usize, 4, 4];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let records = (0..1000)
        .map(|_| {
            sizes
                .iter()
                .map(|&s| rng.gen_range(0..s as u32).min(rng.gen_range(0..s as u32)))
                .collect()
        })
        .collect();
    let ds = Dataset::new(Schema::with_domain_sizes(&sizes).unwrap(), records).unwrap();
    let params = PrivacyParams::parse("1", 3).unwrap();
    let report = bound_experiment(&ds, &params, 0.05, 100, 5, NoiseMode::DiscreteGaussian)
        .map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for level in &report.levels[1..] {
        let expected = utility_bound(level.level, 3, 1.0, 0.05, &sizes).unwrap();
        if (level.bound - expected).abs() > 1e-9 {
            return Err(format!(
                "k={}: bound {} != {expected}",
                level.level, level.bound
            ));
        }
        if level.pass_rate < 0.95 {
            return Err(format!(
                "k={}: pass rate {} < 0.95 (worst error {}, bound {:.2})",
                level.level, level.pass_rate, level.max_abs_error, level.bound
            ));
        }
        notes.push(format!(
            "k={} rate={:.2} worst={} bound={:.1}",
            level.level, level.pass_rate, level.max_abs_error, level.bound
        ));
    }
    let took = within(Duration::from_secs(60), started)?;
    Ok(format!(
        "{}; joint={:.2}; {took:?}",
        notes.join(", "),
        report.joint_pass_rate
    ))
}

fn run_binary(
    dir: &Path,
    input: &Path,
    out_name: &str,
    threads: &str,
) -> Result<(Vec<u8>, Vec<u8>), String> {
    let output = dir.join(out_name);
    let status = Command::new(env!("CARGO_BIN_EXE_inftda"))
        .args([
            "run",
            "--rho",
            "1/2",
            "--seed",
            "20260101",
            "--format",
            "table",
            "--threads",
            threads,
        ])
        .arg("--input")
        .arg(input)
        .arg("--output")
        .arg(&output)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let csv = std::fs::read(&output).map_err(|e| e.to_string())?;
    let json = std::fs::read(output.with_extension("report.json")).map_err(|e| e.to_string())?;
    Ok((csv, json))
}

fn ac6_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut text = String::from("region,age,job,income\n");
    let cols: [&[&str]; 4] = [
        &["north", "south", "east", "west"],
        &["young", "adult", "senior"],
        &["a", "b", "c", "d", "e"],
        &["low", "mid", "high"],
    ];
    for _ in 0..500 {
        let row: Vec<&str> = cols.iter().map(|c| c[rng.gen_range(0..c.len())]).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let input = dir.path().join("input.csv");
    std::fs::write(&input, text).map_err(|e| e.to_string())?;
    let first = run_binary(dir.path(), &input, "a.csv", "1")?;
    let second = run_binary(dir.path(), &input, "b.csv", "1")?;
    let wide = run_binary(dir.path(), &input, "c.csv", "4")?;
    if first != second {
        return Err("two runs with --threads 1 differ".into());
    }
    if first != wide {
        return Err("--threads 1 and --threads 4 differ".into());
    }
    Ok(format!(
        "CSV ({} bytes) and JSON ({} bytes) identical across runs and thread counts",
        first.0.len(),
        first.1.len()
    ))
}

fn ac7_baseline_contrast() -> Outcome {
    let sizes = [6usize; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let records = (0..100)
        .map(|_| sizes.iter().map(|&s| rng.gen_range(0..s as u32)).collect())
        .collect();
    let ds = Dataset::new(Schema::with_domain_sizes(&sizes).unwrap(), records).unwrap();
    let truth = contingency(&ds);
    let params = PrivacyParams::parse("1", 4).unwrap();
    let mut negative = 0;
    for seed in 0..100u64 {
        let key = SeedKey::from_u64(seed);
        let dense = baseline_noisy_table(&truth, params.rho(), key, NoiseMode::DiscreteGaussian)
            .map_err(|e| e.to_string())?;
        if dense.has_negative() {
            negative += 1;
        }
        let tree =
            run(&ds, &params, key, NoiseMode::DiscreteGaussian).map_err(|e| e.to_string())?;
        let table = tree.to_table().unwrap();
        // Counts are unsigned; also confirm nothing was wrapped and mass is kept.
        if table.total() != 100 || table.counts().values().any(|&c| c == 0 || c > 100) {
            return Err(format!(
                "seed {seed}: private table is not a valid non-negative table"
            ));
        }
    }
    if negative < 95 {
        return Err(format!(
            "baseline had negative cells in only {negative}/100 seeds"
        ));
    }
    Ok(format!(
        "baseline negative in {negative}/100 seeds; private tables never negative"
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("AC1 zero-noise identity", ac1_zero_noise_identity),
        ("AC2 mass and consistency", ac2_mass_and_consistency),
        ("AC3 projection oracle equivalence", ac3_intopt_oracle),
        ("AC4 discrete Gaussian statistics", ac4_discrete_gaussian),
        ("AC5 utility bound experiment", ac5_utility_bound),
        ("AC6 determinism", ac6_determinism),
        ("AC7 baseline contrast", ac7_baseline_contrast),
    ];
    let mut results = BTreeMap::new();
    for (name, check) in criteria {
        let outcome = check();
        match &outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => println!("[FAIL] {name}: {detail}"),
        }
        results.insert(name, outcome.is_ok());
    }
    let failed = results.values().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
