//! Experiment orchestration: validated configs, per-replication seed
//! derivation, parallel sweeps with deterministic output files, and the
//! verification battery behind the `verify` command.
//!
//! Determinism contract: statistic output files are bit-identical across
//! re-runs with the same config and seed, independent of the worker count.
//! Rows are sorted by `(n, seed)` before writing; the manifest additionally
//! records wall-clock time and is exempt from that contract.

use crate::degree::{
    degree_tail_curve, sample_d_infty_exact, sample_d_infty_paper, sample_indegree_torus,
    DegreeSample,
};
use crate::field::{fitness_at, mix_pair, FieldSpec, TailIndex, LN_MU, MU};
use crate::stats::{
    estimate_mu, fit_distance_regime, frechet_limit_part1, frechet_limit_part2, ks_two_sample,
    quantile, RegimeFit, ScanRow, ScanTable, StatsError,
};
use crate::walk::{coalescence_time, coalescence_time_traced, limit_walker_trajectory,
    step_offset_moments};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Degree,
    Coalesce,
    Scan,
    LimitWalk,
    Verify,
}

/// Which indegree sampler the `degree` command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    Torus,
    LimitExact,
    LimitPaper,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub delta: f64,
    pub n_values: Vec<u64>,
    pub reps: u64,
    pub seed: u64,
    /// Censoring-cap override for coalescence commands, layer budget for
    /// limit walks. `None` applies the per-regime default.
    pub cap: Option<u64>,
    pub out: PathBuf,
    /// Worker threads; 0 uses the machine default.
    pub workers: usize,
    pub trace: bool,
    pub variant: DegreeMode,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensorRate {
    pub n: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub wall_clock_secs: f64,
    pub summary: BTreeMap<String, serde_json::Value>,
    pub censoring: Vec<CensorRate>,
    pub failed_checks: u64,
}

impl RunManifest {
    pub fn max_censor_rate(&self) -> f64 {
        self.censoring.iter().map(|c| c.rate).fold(0.0, f64::max)
    }
}

/// Seed for one replication: a fixed-master bijection of the replication
/// index, so distinct replications never share a field.
pub fn derive_seed(master: u64, replication: u64) -> u64 {
    mix_pair(master, replication)
}

/// Default censoring cap per distance regime, generous against the
/// theoretical scale of the meeting layer.
pub fn default_cap(delta: f64, n: u64) -> u64 {
    let nf = n as f64;
    let raw = if delta >= 2.0 {
        64.0 * nf * nf
    } else if delta > 1.0 {
        64.0 * nf.powf(delta)
    } else if delta == 1.0 {
        16.0 * (nf.ln() / LN_MU) + 64.0
    } else {
        8.0 * (nf.ln().ln() / (1.0 / delta).ln()) + 64.0
    };
    if raw.is_finite() && raw >= 1.0 {
        raw.ceil() as u64
    } else {
        64
    }
}

fn validate(config: &ExperimentConfig) -> Result<TailIndex, HarnessError> {
    let delta = TailIndex::new(config.delta)
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    if config.reps == 0 {
        return Err(HarnessError::Usage("reps must be at least 1".into()));
    }
    let needs_torus = matches!(config.command, Command::Coalesce | Command::Scan)
        || (config.command == Command::Degree && config.variant == DegreeMode::Torus);
    if needs_torus {
        if config.n_values.is_empty() {
            return Err(HarnessError::Usage("torus commands need at least one --n".into()));
        }
        if config.n_values.iter().any(|&n| n == 0) {
            return Err(HarnessError::Usage("torus sizes must be at least 1".into()));
        }
    }
    if config.command == Command::Scan {
        if config.delta == 2.0 {
            return Err(HarnessError::Usage(
                "delta = 2 is excluded from distance-regime scans".into(),
            ));
        }
        let mut ns = config.n_values.clone();
        ns.sort_unstable();
        ns.dedup();
        if ns.len() < 3 {
            return Err(HarnessError::Usage("scan needs at least 3 distinct --n values".into()));
        }
        if config.reps < 100 {
            return Err(HarnessError::Usage("scan needs at least 100 replications".into()));
        }
        if config.n_values.iter().any(|&n| n < 2) {
            return Err(HarnessError::Usage("scan torus sizes must be at least 2".into()));
        }
    }
    Ok(delta)
}

fn write_csv<I: IntoIterator<Item = String>>(
    path: &Path,
    header: &str,
    rows: I,
) -> std::io::Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    std::fs::write(path, text)
}

fn json_f64(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Runs one experiment: validates the config, executes the command on a
/// dedicated worker pool, writes the output files, and returns the manifest
/// (also written as `manifest.json`).
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, HarnessError> {
    let delta = validate(config)?;
    std::fs::create_dir_all(&config.out)?;
    let started = std::time::Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Usage(format!("worker pool: {e}")))?;

    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        wall_clock_secs: 0.0,
        summary: BTreeMap::new(),
        censoring: Vec::new(),
        failed_checks: 0,
    };

    pool.install(|| match config.command {
        Command::Degree => run_degree(config, delta, &mut manifest),
        Command::Coalesce => run_coalesce(config, delta, &mut manifest),
        Command::Scan => run_scan(config, delta, &mut manifest),
        Command::LimitWalk => run_limit_walk(config, delta, &mut manifest),
        Command::Verify => run_verify(config, &mut manifest),
    })?;

    manifest.wall_clock_secs = started.elapsed().as_secs_f64();
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(config.out.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

fn degree_sample_row(s: &DegreeSample, delta: f64, n: u64) -> String {
    format!("{},{},{},{},{}", s.variant.label(), delta, n, s.seed, s.count)
}

fn run_degree(
    config: &ExperimentConfig,
    delta: TailIndex,
    manifest: &mut RunManifest,
) -> Result<(), HarnessError> {
    // Groups of (n, samples); limit variants form a single group with n = 0.
    let mut groups: Vec<(u64, Vec<DegreeSample>)> = Vec::new();
    match config.variant {
        DegreeMode::Torus => {
            let mut ns = config.n_values.clone();
            ns.sort_unstable();
            for (ni, &n) in ns.iter().enumerate() {
                let base = ni as u64 * config.reps;
                let samples: Vec<DegreeSample> = (0..config.reps)
                    .into_par_iter()
                    .map(|k| {
                        let seed = derive_seed(config.seed, base + k);
                        let spec = FieldSpec::torus(seed, delta, n).expect("validated");
                        sample_indegree_torus(&spec)
                    })
                    .collect();
                groups.push((n, samples));
            }
        }
        DegreeMode::LimitExact | DegreeMode::LimitPaper => {
            let exact = config.variant == DegreeMode::LimitExact;
            let samples: Vec<DegreeSample> = (0..config.reps)
                .into_par_iter()
                .map(|k| {
                    let seed = derive_seed(config.seed, k);
                    if exact {
                        sample_d_infty_exact(delta, seed)
                    } else {
                        sample_d_infty_paper(delta, seed)
                    }
                })
                .collect();
            groups.push((0, samples));
        }
    }

    let mut sample_rows = Vec::new();
    let mut tail_rows = Vec::new();
    let mut curve_points = 0usize;
    let mut total = 0u64;
    let mut count_sum = 0u64;
    for (n, samples) in &mut groups {
        samples.sort_by_key(|s| s.seed);
        total += samples.len() as u64;
        count_sum += samples.iter().map(|s| s.count).sum::<u64>();
        for s in samples.iter() {
            sample_rows.push(degree_sample_row(s, config.delta, *n));
        }
        if let Ok(curve) = degree_tail_curve(samples) {
            let label = samples[0].variant.label();
            for (s, y) in curve {
                tail_rows.push(format!("{},{},{},{},{}", label, config.delta, n, s, y));
                curve_points += 1;
            }
        }
    }
    write_csv(&config.out.join("samples.csv"), "variant,delta,n,seed,count", sample_rows)?;
    write_csv(
        &config.out.join("tail.csv"),
        "variant,delta,n,s,neg_log_survival",
        tail_rows,
    )?;
    manifest.summary.insert("samples".into(), total.into());
    manifest
        .summary
        .insert("mean_count".into(), json_f64(count_sum as f64 / total as f64));
    manifest.summary.insert("tail_curve_points".into(), (curve_points as u64).into());
    Ok(())
}

// Shared coalescence sweep for the coalesce and scan commands.
fn sweep_coalescence(
    config: &ExperimentConfig,
    delta: TailIndex,
) -> (Vec<ScanRow>, Vec<CensorRate>) {
    let mut ns = config.n_values.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut rows: Vec<ScanRow> = Vec::with_capacity(ns.len() * config.reps as usize);
    let mut censoring = Vec::with_capacity(ns.len());
    for (ni, &n) in ns.iter().enumerate() {
        let cap = config.cap.unwrap_or_else(|| default_cap(config.delta, n));
        let base = ni as u64 * config.reps;
        let mut group: Vec<ScanRow> = (0..config.reps)
            .into_par_iter()
            .map(|k| {
                let seed = derive_seed(config.seed, base + k);
                let spec = FieldSpec::torus(seed, delta, n).expect("validated");
                let res = coalescence_time(&spec, cap);
                ScanRow {
                    delta: config.delta,
                    n,
                    seed,
                    stat: res.h_n.unwrap_or(cap) as f64,
                    censored: res.censored(),
                }
            })
            .collect();
        group.sort_by_key(|r| r.seed);
        let rate =
            group.iter().filter(|r| r.censored).count() as f64 / group.len() as f64;
        censoring.push(CensorRate { n, rate });
        rows.extend(group);
    }
    (rows, censoring)
}

fn summarize_rows(rows: &[ScanRow], manifest: &mut RunManifest) {
    let mut by_n: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r.stat);
    }
    let mut medians = serde_json::Map::new();
    for (n, mut stats) in by_n {
        stats.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        medians.insert(n.to_string(), json_f64(quantile(&stats, 0.5)));
    }
    manifest.summary.insert("median_h".into(), serde_json::Value::Object(medians));
}

fn write_trace(config: &ExperimentConfig, delta: TailIndex) -> Result<(), HarnessError> {
    // Per-layer trace of replication 0 at the smallest torus size.
    let n = *config.n_values.iter().min().expect("validated");
    let seed = derive_seed(config.seed, 0);
    let cap = config.cap.unwrap_or_else(|| default_cap(config.delta, n));
    let spec = FieldSpec::torus(seed, delta, n).expect("validated");
    let (_, trace) = coalescence_time_traced(&spec, cap);
    write_csv(
        &config.out.join("trace.csv"),
        "layer,pos_left,pos_right,fit_left,fit_right",
        trace.iter().map(|t| {
            format!("{},{},{},{},{}", t.layer, t.pos_left, t.pos_right, t.fit_left, t.fit_right)
        }),
    )?;
    Ok(())
}

fn run_coalesce(
    config: &ExperimentConfig,
    delta: TailIndex,
    manifest: &mut RunManifest,
) -> Result<(), HarnessError> {
    let (rows, censoring) = sweep_coalescence(config, delta);
    write_csv(
        &config.out.join("coalesce.csv"),
        "delta,n,seed,h_n,censored",
        rows.iter().map(|r| format!("{},{},{},{},{}", r.delta, r.n, r.seed, r.stat, r.censored)),
    )?;
    if config.trace {
        write_trace(config, delta)?;
    }
    summarize_rows(&rows, manifest);
    manifest.censoring = censoring;
    Ok(())
}

fn run_scan(
    config: &ExperimentConfig,
    delta: TailIndex,
    manifest: &mut RunManifest,
) -> Result<(), HarnessError> {
    let (rows, censoring) = sweep_coalescence(config, delta);
    let table = ScanTable::from_rows(rows).expect("derived seeds are collision-free");
    table.write_csv(&config.out.join("scan.csv"))?;
    match fit_distance_regime(&table, delta) {
        Ok(fit) => {
            let json = serde_json::to_string_pretty(&fit).expect("fit serializes");
            std::fs::write(config.out.join("fit.json"), json + "\n")?;
            record_fit(&fit, manifest);
        }
        Err(StatsError::ExcessCensoring(rate)) => {
            manifest.summary.insert(
                "fit_skipped".into(),
                format!("excess censoring: {rate:.4}").into(),
            );
        }
        Err(other) => return Err(HarnessError::Usage(other.to_string())),
    }
    if config.trace {
        write_trace(config, delta)?;
    }
    summarize_rows(table.rows(), manifest);
    manifest.censoring = censoring;
    Ok(())
}

fn record_fit(fit: &RegimeFit, manifest: &mut RunManifest) {
    manifest
        .summary
        .insert("regime".into(), serde_json::to_value(fit.regime).expect("regime"));
    manifest.summary.insert("scale".into(), json_f64(fit.scale));
    manifest.summary.insert("goodness".into(), json_f64(fit.goodness));
}

fn run_limit_walk(
    config: &ExperimentConfig,
    delta: TailIndex,
    manifest: &mut RunManifest,
) -> Result<(), HarnessError> {
    let h_max = config.cap.unwrap_or(500);
    let mut rows: Vec<(u64, f64, f64)> = (0..config.reps)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(config.seed, k);
            let rec = limit_walker_trajectory(delta, seed, h_max);
            let last = rec.steps.last().unwrap();
            let gap = (last.log_fitness - h_max as f64).abs() / (h_max as f64).powf(2.0 / 3.0);
            (seed, last.log_fitness, gap)
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    write_csv(
        &config.out.join("walk.csv"),
        "delta,seed,h_max,g_final,gap_ratio",
        rows.iter()
            .map(|(seed, g, gap)| format!("{},{},{},{},{}", config.delta, seed, h_max, g, gap)),
    )?;
    if config.trace {
        let rec = limit_walker_trajectory(delta, derive_seed(config.seed, 0), h_max);
        write_csv(
            &config.out.join("walk_trace.csv"),
            "seed,layer,position,fitness,log_fitness",
            rec.steps.iter().map(|s| {
                format!("{},{},{},{},{}", rec.seed, s.layer, s.position, s.fitness, s.log_fitness)
            }),
        )?;
    }
    let mean_gap = rows.iter().map(|r| r.2).sum::<f64>() / rows.len() as f64;
    manifest.summary.insert("h_max".into(), h_max.into());
    manifest.summary.insert("mean_gap_ratio".into(), json_f64(mean_gap));
    Ok(())
}

/// The verification battery: the module-level statistical oracles at their
/// default budgets. Prints one pass/fail line per check.
pub fn verify_battery(seed: u64) -> Vec<VerifyCheck> {
    let mut checks = Vec::new();

    // Max-stability: max of m Frechet(delta) draws vs m^(1/delta) * F.
    {
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for (ci, &d) in [0.5, 1.0, 3.0].iter().enumerate() {
            for (mi, &m) in [2u64, 10, 100].iter().enumerate() {
                let delta = TailIndex::new(d).unwrap();
                let spec = FieldSpec::integers(mix_pair(seed, (ci * 3 + mi) as u64), delta);
                let draws = 100_000u64;
                let maxes: Vec<f64> = (0..draws)
                    .into_par_iter()
                    .map(|k| {
                        (0..m)
                            .map(|j| fitness_at(&spec, (k * m + j) as i64, 0))
                            .fold(0.0, f64::max)
                    })
                    .collect();
                let scale = (m as f64).powf(1.0 / d);
                let reference: Vec<f64> = (0..draws)
                    .into_par_iter()
                    .map(|k| scale * fitness_at(&spec, k as i64, 1))
                    .collect();
                let ks = ks_two_sample(&maxes, &reference).unwrap();
                if ks > worst {
                    worst = ks;
                    detail = format!("worst KS {ks:.5} at m={m}, delta={d}");
                }
            }
        }
        checks.push(VerifyCheck { name: "max_stability", passed: worst < 0.01, detail });
    }

    // Record law P(R >= m) = 1/m via chi-square on 1e6 excursions.
    {
        let samples = 1_000_000u64;
        let rights: Vec<i64> = (0..samples)
            .into_par_iter()
            .map(|k| {
                crate::degree::sample_excursion(
                    TailIndex::new(1.0).unwrap(),
                    derive_seed(mix_pair(seed, 0x0dd), k),
                )
                .right
            })
            .collect();
        let chi2 = record_law_chi_square(&rights);
        checks.push(VerifyCheck {
            name: "excursion_record_law",
            passed: chi2 < 36.19086912927004,
            detail: format!("chi-square {chi2:.3} over 20 bins (crit 36.191 at p=0.01)"),
        });
    }

    // Step variance (phi^2 - 1) / 12 at phi in {3, 5, 21}.
    {
        let mut worst_rel: f64 = 0.0;
        let mut detail = String::new();
        for (f, phi) in [(0.4, 3u64), (2.0, 5), (9.5, 21)] {
            let (_, var) =
                step_offset_moments(f, TailIndex::new(1.0).unwrap(), 100_000, mix_pair(seed, phi));
            let want = (phi * phi - 1) as f64 / 12.0;
            let rel = (var - want).abs() / want;
            if rel > worst_rel {
                worst_rel = rel;
                detail = format!("worst |var-w|/w = {rel:.4} at phi={phi} (var {var:.4})");
            }
        }
        checks.push(VerifyCheck { name: "step_variance", passed: worst_rel < 0.05, detail });
    }

    // Quadrature limits of the two Frechet integrals.
    {
        let p1a = frechet_limit_part1(1e6, TailIndex::new(1.5).unwrap()).unwrap();
        let p1b = frechet_limit_part1(1e6, TailIndex::new(3.0).unwrap()).unwrap();
        let p2a = frechet_limit_part2(1e8, TailIndex::new(1.5).unwrap(), 1.0).unwrap();
        let p2b = frechet_limit_part2(1e8, TailIndex::new(1.5).unwrap(), 0.5).unwrap();
        let ok = (p1a - 0.4).abs() < 1e-3
            && (p1b - 0.25).abs() < 1e-3
            && (p2a - 4.0).abs() < 5e-2
            && (p2b - 2.8284271247461903).abs() < 5e-2;
        checks.push(VerifyCheck {
            name: "frechet_limits",
            passed: ok,
            detail: format!("part1 {p1a:.6}/{p1b:.6}, part2 {p2a:.4}/{p2b:.4}"),
        });
    }

    // Monte Carlo mu against the compiled constant.
    {
        let est = estimate_mu(10_000_000, mix_pair(seed, 0xe5));
        let gap = (est.value - MU).abs();
        checks.push(VerifyCheck {
            name: "mu_estimate",
            passed: gap < 0.01,
            detail: format!("estimate {:.5} +- {:.5}, constant {MU:.5}", est.value, est.std_error),
        });
    }

    checks
}

/// Chi-square statistic of observed right-record positions against
/// `P(R = m) = 1/(m(m+1))` on bins `1..=19` plus the `R >= 20` tail.
pub fn record_law_chi_square(rights: &[i64]) -> f64 {
    let n = rights.len() as f64;
    let mut obs = [0u64; 20];
    for &r in rights {
        let idx = if r >= 20 { 19 } else { (r - 1) as usize };
        obs[idx] += 1;
    }
    let mut chi2 = 0.0;
    for (i, &o) in obs.iter().enumerate() {
        let m = (i + 1) as f64;
        let p = if i == 19 { 1.0 / 20.0 } else { 1.0 / (m * (m + 1.0)) };
        let e = p * n;
        chi2 += (o as f64 - e) * (o as f64 - e) / e;
    }
    chi2
}

fn run_verify(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), HarnessError> {
    let checks = verify_battery(config.seed);
    let failed = checks.iter().filter(|c| !c.passed).count() as u64;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    manifest
        .summary
        .insert("checks".into(), serde_json::to_value(&checks).expect("checks"));
    manifest.failed_checks = failed;
    Ok(())
}
