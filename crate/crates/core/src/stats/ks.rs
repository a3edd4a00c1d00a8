//! Kolmogorov–Smirnov statistics, one- and two-sample.

use super::StatsError;

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}

/// Sup-distance between the empirical CDF of `xs` and the analytic CDF `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let v = sorted_copy(xs);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let c = cdf(x);
        d = d.max(((i + 1) as f64 / n - c).abs());
        d = d.max((i as f64 / n - c).abs());
    }
    Ok(d)
}

/// Sup-distance between the empirical CDFs of two samples.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let a = sorted_copy(xs);
    let b = sorted_copy(ys);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        // Advance both past every occurrence of the current value so that
        // tied observations are handled symmetrically.
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::stream_uniform;
    use proptest::prelude::*;

    #[test]
    fn identical_samples_have_zero_distance() {
        let xs = [0.3, 1.2, -0.5, 2.0];
        assert_eq!(ks_two_sample(&xs, &xs).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_have_distance_one() {
        let xs = [0.0, 0.5, 1.0];
        let ys = [2.0, 2.5, 3.0];
        assert_eq!(ks_two_sample(&xs, &ys).unwrap(), 1.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(StatsError::EmptySample));
        assert_eq!(ks_one_sample(&[], |x| x), Err(StatsError::EmptySample));
    }

    #[test]
    fn uniform_sample_is_close_to_uniform_cdf() {
        let xs: Vec<f64> = (0..100_000).map(|k| stream_uniform(5, 1, k)).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 0.01, "KS distance was {d}");
    }

    proptest! {
        #[test]
        fn two_sample_is_symmetric(
            xs in prop::collection::vec(-1e3f64..1e3, 1..60),
            ys in prop::collection::vec(-1e3f64..1e3, 1..60),
        ) {
            let d1 = ks_two_sample(&xs, &ys).unwrap();
            let d2 = ks_two_sample(&ys, &xs).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-15);
        }

        #[test]
        fn invariant_under_common_increasing_transform(
            xs in prop::collection::vec(-20f64..20.0, 1..60),
            ys in prop::collection::vec(-20f64..20.0, 1..60),
        ) {
            let t = |v: f64| v.exp() + v;
            let txs: Vec<f64> = xs.iter().map(|&v| t(v)).collect();
            let tys: Vec<f64> = ys.iter().map(|&v| t(v)).collect();
            let d1 = ks_two_sample(&xs, &ys).unwrap();
            let d2 = ks_two_sample(&txs, &tys).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
        }
    }
}
