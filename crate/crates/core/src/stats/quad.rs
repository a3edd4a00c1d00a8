//! Adaptive quadrature and the two Fréchet limit integrals used by the
//! stable-regime analysis.
//!
//! Both improper integrals are brought onto finite intervals with the
//! substitution `t = 1/x` (which turns the Fréchet density kernel
//! `x^-2 exp(-1/x) dx` into `exp(-t) dt`), and split at the integrand kinks
//! before any subdivision happens.

use super::StatsError;
use crate::field::TailIndex;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<f64, StatsError> {
    assert!(a.is_finite() && b.is_finite() && b >= a);
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, abs_tol, 60)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, StatsError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(StatsError::QuadratureNonConvergence);
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// `a * E[(1 - (a/F)^(1/delta))_+]` for a unit Fréchet `F`, by quadrature to
/// absolute tolerance `1e-8`. Converges to `1/(delta+1)` as `a` grows.
pub fn frechet_limit_part1(a: f64, delta: TailIndex) -> Result<f64, StatsError> {
    assert!(a > 0.0, "a must be positive");
    let d = delta.get();
    assert!(d > 1.0, "part 1 requires delta > 1");
    // a * int_a^inf (1 - (a/x)^{1/d}) x^-2 e^{-1/x} dx. With t = 1/x the
    // positive-part kink at x = a becomes the boundary t = 1/a, and the
    // further substitution s = (a t)^{1/d} flattens the boundary cusp that
    // would otherwise exhaust the subdivision budget:
    //   = d * int_0^1 (1 - s) s^{d-1} exp(-s^d / a) ds.
    let g = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            d * (1.0 - s) * s.powf(d - 1.0) * (-(s.powf(d)) / a).exp()
        }
    };
    adaptive_quadrature(g, 0.0, 1.0, 1e-8)
}

/// `a * E[eta^2 /\ (F/a)^(2/delta)]` for a unit Fréchet `F`, by quadrature.
/// Converges to `2 eta^(2-delta) / (2-delta)` as `a` grows.
pub fn frechet_limit_part2(a: f64, delta: TailIndex, eta: f64) -> Result<f64, StatsError> {
    assert!(a > 0.0, "a must be positive");
    assert!(eta > 0.0, "eta must be positive");
    let d = delta.get();
    assert!(d > 1.0 && d < 2.0, "part 2 requires delta in (1,2)");
    // In t = 1/x coordinates the kink x = a eta^delta sits at t_star.
    let t_star = eta.powf(-d) / a;
    let flat = |t: f64| a * eta * eta * (-t).exp();
    let p1 = adaptive_quadrature(flat, 0.0, t_star, 5e-9)?;

    // Tail piece a^{1-k} int_{t*}^inf t^-k e^-t dt with k = 2/delta in (1,2).
    // The substitution u = t^-q, q = k-1, flattens the t -> 0 blow-up into
    // the bounded integrand exp(-u^(-1/q)).
    let kappa = 2.0 / d;
    let q = kappa - 1.0;
    let prefactor = a.powf(1.0 - kappa) / q;
    let u_star = t_star.powf(-q);
    let g = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            (-(u.powf(-1.0 / q))).exp()
        }
    };
    let p2 = prefactor * adaptive_quadrature(g, 0.0, u_star, 5e-9 / prefactor.max(1e-300))?;
    Ok(p1 + p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TailIndex;

    fn ti(d: f64) -> TailIndex {
        TailIndex::new(d).unwrap()
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let v = adaptive_quadrature(|x| x * x, 0.0, 3.0, 1e-10).unwrap();
        assert!((v - 9.0).abs() < 1e-9);
        let v = adaptive_quadrature(|x| (-x).exp(), 0.0, 50.0, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn part1_reaches_limit_values() {
        let v = frechet_limit_part1(1e6, ti(1.5)).unwrap();
        assert!((v - 0.4).abs() < 1e-3, "delta=1.5 gave {v}");
        let v = frechet_limit_part1(1e6, ti(3.0)).unwrap();
        assert!((v - 0.25).abs() < 1e-3, "delta=3 gave {v}");
    }

    #[test]
    fn part1_approach_is_monotone_in_a() {
        for d in [1.5, 2.5, 4.0] {
            let target = 1.0 / (d + 1.0);
            let mut prev_gap = f64::INFINITY;
            for a in [1e2, 1e4, 1e6] {
                let gap = (frechet_limit_part1(a, ti(d)).unwrap() - target).abs();
                assert!(gap < prev_gap, "gap not shrinking at a={a}, delta={d}");
                prev_gap = gap;
            }
        }
    }

    #[test]
    fn part2_reaches_limit_values() {
        let v = frechet_limit_part2(1e8, ti(1.5), 1.0).unwrap();
        assert!((v - 4.0).abs() < 5e-2, "eta=1 gave {v}");
        let v = frechet_limit_part2(1e8, ti(1.5), 0.5).unwrap();
        assert!((v - 2.8284271247461903).abs() < 5e-2, "eta=0.5 gave {v}");
    }

    #[test]
    fn part2_is_increasing_in_eta() {
        let lo = frechet_limit_part2(1e8, ti(1.5), 0.5).unwrap();
        let hi = frechet_limit_part2(1e8, ti(1.5), 1.0).unwrap();
        assert!(hi > lo);
    }
}
