//! Shape classification for negative log-survival curves of degree tails.

use super::StatsError;

/// The three distinguishable growth shapes of `-log P(D > s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailShape {
    Linear,
    Log,
    SLogS,
}

/// Least-squares fit of `y` against each of `{s, ln s, s ln s}` through the
/// origin with a free scale; returns the shape with the smallest residual.
pub fn classify_tail_shape(curve: &[(f64, f64)]) -> Result<TailShape, StatsError> {
    if curve.len() < 8 {
        return Err(StatsError::InsufficientData(format!(
            "tail classification needs at least 8 support points, got {}",
            curve.len()
        )));
    }
    let y0 = curve[0].1;
    if curve.iter().all(|&(_, y)| y == y0) {
        return Err(StatsError::DegenerateCurve);
    }
    let shapes: [(TailShape, fn(f64) -> f64); 3] = [
        (TailShape::Linear, |s| s),
        (TailShape::Log, f64::ln),
        (TailShape::SLogS, |s| s * s.ln()),
    ];
    let mut best = (TailShape::Linear, f64::INFINITY);
    for (shape, g) in shapes {
        let mut sgy = 0.0;
        let mut sgg = 0.0;
        for &(s, y) in curve {
            let gv = g(s);
            sgy += gv * y;
            sgg += gv * gv;
        }
        let a = if sgg > 0.0 { sgy / sgg } else { 0.0 };
        let sse: f64 = curve.iter().map(|&(s, y)| (y - a * g(s)).powi(2)).sum();
        if sse < best.1 {
            best = (shape, sse);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::stream_uniform;

    fn curve_from(f: impl Fn(f64) -> f64, n: usize) -> Vec<(f64, f64)> {
        (1..=n).map(|s| (s as f64, f(s as f64))).collect()
    }

    #[test]
    fn recovers_exact_shapes() {
        assert_eq!(classify_tail_shape(&curve_from(|s| 3.0 * s, 12)).unwrap(), TailShape::Linear);
        assert_eq!(classify_tail_shape(&curve_from(|s| 2.0 * s.ln(), 12)).unwrap(), TailShape::Log);
        assert_eq!(
            classify_tail_shape(&curve_from(|s| 0.5 * s * s.ln(), 12)).unwrap(),
            TailShape::SLogS
        );
    }

    #[test]
    fn rejects_short_and_degenerate_curves() {
        let short = curve_from(|s| s, 7);
        assert!(matches!(classify_tail_shape(&short), Err(StatsError::InsufficientData(_))));
        let flat: Vec<(f64, f64)> = (1..=10).map(|s| (s as f64, 2.0)).collect();
        assert_eq!(classify_tail_shape(&flat), Err(StatsError::DegenerateCurve));
    }

    #[test]
    fn robust_to_ten_percent_multiplicative_noise() {
        let gens: [(TailShape, fn(f64) -> f64); 3] = [
            (TailShape::Linear, |s| 2.5 * s),
            (TailShape::Log, |s| 1.5 * s.ln()),
            (TailShape::SLogS, |s| 0.8 * s * s.ln()),
        ];
        for (k, (want, g)) in gens.iter().enumerate() {
            let mut hits = 0;
            for trial in 0..100u64 {
                let curve: Vec<(f64, f64)> = (1..=20)
                    .map(|s| {
                        let noise =
                            1.0 + 0.2 * (stream_uniform(trial, k as u64, s as u64) - 0.5);
                        (s as f64, g(s as f64) * noise)
                    })
                    .collect();
                if classify_tail_shape(&curve).unwrap() == *want {
                    hits += 1;
                }
            }
            assert!(hits >= 95, "shape {want:?} recovered only {hits}/100 times");
        }
    }
}
