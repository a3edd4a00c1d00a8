//! Scan tables of distance statistics and the four distance-regime fits.

use super::{quantile, StatsError};
use crate::field::{TailIndex, LN_MU};
use serde::Serialize;
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

/// One replication of a scanned statistic. Censored rows carry the cap as
/// their statistic value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub delta: f64,
    pub n: u64,
    pub seed: u64,
    pub stat: f64,
    pub censored: bool,
}

/// Grid of `(delta, n, seed) -> statistic`; duplicates are rejected.
#[derive(Debug, Clone, Default)]
pub struct ScanTable {
    rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn new() -> Self {
        ScanTable { rows: Vec::new() }
    }

    pub fn push(&mut self, row: ScanRow) -> Result<(), StatsError> {
        if self
            .rows
            .iter()
            .any(|r| r.delta == row.delta && r.n == row.n && r.seed == row.seed)
        {
            return Err(StatsError::DuplicateRow { delta: row.delta, n: row.n, seed: row.seed });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn from_rows(rows: Vec<ScanRow>) -> Result<Self, StatsError> {
        let mut seen = HashSet::with_capacity(rows.len());
        for r in &rows {
            if !seen.insert((r.delta.to_bits(), r.n, r.seed)) {
                return Err(StatsError::DuplicateRow { delta: r.delta, n: r.n, seed: r.seed });
            }
        }
        Ok(ScanTable { rows })
    }

    pub fn rows(&self) -> &[ScanRow] {
        &self.rows
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("delta,n,seed,stat,censored\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.delta, r.n, r.seed, r.stat, r.censored));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv_string())
    }

    pub fn from_csv_str(text: &str) -> Result<Self, StatsError> {
        let mut lines = text.lines();
        match lines.next() {
            Some("delta,n,seed,stat,censored") => {}
            other => {
                return Err(StatsError::MalformedCsv(format!("bad header {other:?}")));
            }
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(StatsError::MalformedCsv(format!("line {}: {line}", k + 2)));
            }
            let parse_err = |what: &str| StatsError::MalformedCsv(format!("line {}: {what}", k + 2));
            rows.push(ScanRow {
                delta: fields[0].parse().map_err(|_| parse_err("delta"))?,
                n: fields[1].parse().map_err(|_| parse_err("n"))?,
                seed: fields[2].parse().map_err(|_| parse_err("seed"))?,
                stat: fields[3].parse().map_err(|_| parse_err("stat"))?,
                censored: fields[4].parse().map_err(|_| parse_err("censored"))?,
            });
        }
        Self::from_rows(rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self, StatsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StatsError::MalformedCsv(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }
}

/// The four tail-index regimes of the typical distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    LogN,
    LogLogN,
    PowerDelta,
    Power2,
}

/// Per-torus-size summary entering a regime fit. `value` is the regime
/// statistic: a ratio for the ratio regimes, an additive offset for the
/// log-log regime.
#[derive(Debug, Clone, Serialize)]
pub struct PerScale {
    pub n: u64,
    pub value: f64,
    pub mean: f64,
    pub median: f64,
    pub iqr: f64,
    pub censor_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeFit {
    pub regime: Regime,
    /// Scale of the statistic at the largest torus size; multiplies along
    /// with the raw statistic values.
    pub scale: f64,
    /// Flatness of the regime statistic across the grid, in `[0,1]`:
    /// min/max of the per-size values (ratio regimes) or of the IQRs
    /// (log-log regime). 1 means perfectly stable.
    pub goodness: f64,
    pub censoring_rate: f64,
    pub per_n: Vec<PerScale>,
}

/// Fits the distance statistic in `table` to the regime selected by `delta`:
/// mean/log_mu(N) at delta = 1, median - log_{1/delta} ln(N) below 1, and
/// median over N^delta (resp. N^2) between 1 and 2 (resp. above 2).
pub fn fit_distance_regime(table: &ScanTable, delta: TailIndex) -> Result<RegimeFit, StatsError> {
    let d = delta.get();
    if d == 2.0 {
        return Err(StatsError::DeltaTwoExcluded);
    }
    let rows: Vec<&ScanRow> = table.rows().iter().filter(|r| r.delta == d).collect();
    let mut by_n: BTreeMap<u64, Vec<&ScanRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r);
    }
    if by_n.len() < 3 {
        return Err(StatsError::InsufficientData(format!(
            "need at least 3 distinct torus sizes, got {}",
            by_n.len()
        )));
    }
    if let Some((&n, _)) = by_n.iter().find(|(_, v)| v.len() < 100) {
        return Err(StatsError::InsufficientData(format!(
            "need at least 100 replications per size, n={n} has fewer"
        )));
    }
    if by_n.keys().any(|&n| n < 2) {
        return Err(StatsError::InsufficientData("torus sizes must be at least 2".into()));
    }

    let regime = if d == 1.0 {
        Regime::LogN
    } else if d < 1.0 {
        Regime::LogLogN
    } else if d < 2.0 {
        Regime::PowerDelta
    } else {
        Regime::Power2
    };

    let mut per_n = Vec::with_capacity(by_n.len());
    let mut censored_total = 0usize;
    let mut total = 0usize;
    for (&n, group) in &by_n {
        let mut stats: Vec<f64> = group.iter().map(|r| r.stat).collect();
        stats.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let censored = group.iter().filter(|r| r.censored).count();
        let censor_rate = censored as f64 / group.len() as f64;
        if censor_rate >= 0.05 {
            return Err(StatsError::ExcessCensoring(censor_rate));
        }
        censored_total += censored;
        total += group.len();
        let mean = stats.iter().sum::<f64>() / stats.len() as f64;
        let median = quantile(&stats, 0.5);
        let iqr = quantile(&stats, 0.75) - quantile(&stats, 0.25);
        let nf = n as f64;
        let value = match regime {
            Regime::LogN => mean / (nf.ln() / LN_MU),
            Regime::LogLogN => median - nf.ln().ln() / (1.0 / d).ln(),
            Regime::PowerDelta => median / nf.powf(d),
            Regime::Power2 => median / (nf * nf),
        };
        per_n.push(PerScale { n, value, mean, median, iqr, censor_rate });
    }

    let goodness = match regime {
        Regime::LogLogN => {
            let max = per_n.iter().map(|p| p.iqr).fold(f64::MIN, f64::max);
            let min = per_n.iter().map(|p| p.iqr).fold(f64::MAX, f64::min);
            if max == 0.0 {
                1.0
            } else {
                (min / max).max(0.0)
            }
        }
        _ => {
            let max = per_n.iter().map(|p| p.value).fold(f64::MIN, f64::max);
            let min = per_n.iter().map(|p| p.value).fold(f64::MAX, f64::min);
            if min <= 0.0 {
                0.0
            } else {
                min / max
            }
        }
    };
    let last = per_n.last().unwrap();
    let scale = match regime {
        Regime::LogLogN => last.median,
        _ => last.value,
    };
    Ok(RegimeFit {
        regime,
        scale,
        goodness,
        censoring_rate: censored_total as f64 / total as f64,
        per_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{stream_uniform, TailIndex};

    fn ti(d: f64) -> TailIndex {
        TailIndex::new(d).unwrap()
    }

    fn synth_table(delta: f64, ns: &[u64], reps: u64, stat: impl Fn(u64, u64) -> f64) -> ScanTable {
        let mut rows = Vec::new();
        for &n in ns {
            for k in 0..reps {
                let seed = n.wrapping_mul(1_000_003).wrapping_add(k);
                rows.push(ScanRow { delta, n, seed, stat: stat(n, k), censored: false });
            }
        }
        ScanTable::from_rows(rows).unwrap()
    }

    #[test]
    fn exact_log_ratio_gives_unit_values() {
        let t = synth_table(1.0, &[1 << 10, 1 << 12, 1 << 14], 120, |n, _| {
            (n as f64).ln() / LN_MU
        });
        let fit = fit_distance_regime(&t, ti(1.0)).unwrap();
        assert_eq!(fit.regime, Regime::LogN);
        for p in &fit.per_n {
            assert!((p.value - 1.0).abs() < 1e-12);
        }
        assert!((fit.goodness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_quadratic_fits_power_two_regime() {
        let t = synth_table(3.0, &[32, 64, 128], 200, |n, k| {
            let noise = 0.9 + 0.2 * stream_uniform(7, n, k);
            0.05 * (n as f64) * (n as f64) * noise
        });
        let fit = fit_distance_regime(&t, ti(3.0)).unwrap();
        assert_eq!(fit.regime, Regime::Power2);
        let spread = 1.0 / fit.goodness;
        assert!(spread < 1.2, "ratio spread was {spread}");
    }

    #[test]
    fn rejects_delta_two_and_insufficient_data() {
        let t = synth_table(2.0, &[32, 64, 128], 120, |n, _| n as f64);
        assert!(matches!(fit_distance_regime(&t, ti(2.0)), Err(StatsError::DeltaTwoExcluded)));
        let small = synth_table(1.0, &[32, 64], 120, |n, _| n as f64);
        assert!(matches!(
            fit_distance_regime(&small, ti(1.0)),
            Err(StatsError::InsufficientData(_))
        ));
        let thin = synth_table(1.0, &[32, 64, 128], 50, |n, _| n as f64);
        assert!(matches!(
            fit_distance_regime(&thin, ti(1.0)),
            Err(StatsError::InsufficientData(_))
        ));
    }

    #[test]
    fn rejects_excess_censoring() {
        let mut rows = Vec::new();
        for &n in &[32u64, 64, 128] {
            for k in 0..200u64 {
                rows.push(ScanRow {
                    delta: 1.0,
                    n,
                    seed: k,
                    stat: 10.0,
                    censored: k % 10 == 0, // 10%
                });
            }
        }
        let t = ScanTable::from_rows(rows).unwrap();
        assert!(matches!(fit_distance_regime(&t, ti(1.0)), Err(StatsError::ExcessCensoring(_))));
    }

    #[test]
    fn scale_equivariance() {
        for d in [1.0, 0.5, 1.5, 3.0] {
            let base = synth_table(d, &[32, 64, 128], 150, |n, k| {
                (n as f64).sqrt() * (1.0 + 0.3 * stream_uniform(3, n, k))
            });
            let scaled = ScanTable::from_rows(
                base.rows()
                    .iter()
                    .map(|r| ScanRow { stat: 7.0 * r.stat, ..*r })
                    .collect(),
            )
            .unwrap();
            let f1 = fit_distance_regime(&base, ti(d)).unwrap();
            let f2 = fit_distance_regime(&scaled, ti(d)).unwrap();
            assert!((f2.scale / f1.scale - 7.0).abs() < 1e-9, "delta={d}");
            assert!((f2.goodness - f1.goodness).abs() < 1e-9, "delta={d}");
        }
    }

    #[test]
    fn csv_round_trip_and_duplicate_rejection() {
        let t = synth_table(0.5, &[4, 8, 16], 100, |n, k| (n + k) as f64 * 0.25);
        let text = t.to_csv_string();
        assert!(text.starts_with("delta,n,seed,stat,censored\n"));
        assert!(!text.contains('\r'));
        let back = ScanTable::from_csv_str(&text).unwrap();
        assert_eq!(back.rows(), t.rows());

        let mut dup = ScanTable::new();
        let row = ScanRow { delta: 1.0, n: 4, seed: 9, stat: 1.0, censored: false };
        dup.push(row).unwrap();
        assert!(matches!(dup.push(row), Err(StatsError::DuplicateRow { .. })));
    }
}
