//! Indegree samplers: the exact indegree of a fixed torus node, and the
//! limiting indegree on the integers in two variants — the set-builder
//! formula used by the theory (an upper bound) and the exact arrow-rule
//! count.
//!
//! All samplers read the same deterministic field, so the two limit
//! variants are coupled pathwise for every seed.

use crate::field::{field_bits52, fitness_at, FieldSpec, Lattice, TailIndex};
use crate::layer::build_layer_arrows;
use crate::stats::StatsError;

/// Provenance of a degree draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeVariant {
    Torus(u64),
    LimitExact,
    LimitPaper,
}

impl DegreeVariant {
    pub fn label(&self) -> &'static str {
        match self {
            DegreeVariant::Torus(_) => "torus",
            DegreeVariant::LimitExact => "limit_exact",
            DegreeVariant::LimitPaper => "limit_paper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeSample {
    pub count: u64,
    pub variant: DegreeVariant,
    pub seed: u64,
}

/// Nearest layer-0 positions left and right of the origin with a strictly
/// larger fitness, together with the origin fitness itself.
#[derive(Debug, Clone, Copy)]
pub struct Excursion {
    pub left: i64,
    pub right: i64,
    pub origin_fitness: f64,
    spec: FieldSpec,
}

impl Excursion {
    /// Layer-0 fitness inside the excursion, recomputed from the field.
    pub fn layer0_fitness(&self, i: i64) -> f64 {
        assert!(self.left <= i && i <= self.right);
        fitness_at(&self.spec, i, 0)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }
}

// Termination is almost sure; a scan this long means the field is broken.
const EXCURSION_CAP: i64 = 1_000_000_000;

/// Scans layer 0 of the limit field outward from the origin until the first
/// strictly larger fitness is found on each side.
pub fn sample_excursion(delta: TailIndex, seed: u64) -> Excursion {
    let spec = FieldSpec::integers(seed, delta);
    let b0 = field_bits52(&spec, 0, 0);
    let scan = |dir: i64| -> i64 {
        for m in 1..EXCURSION_CAP {
            if field_bits52(&spec, dir * m, 0) > b0 {
                return dir * m;
            }
        }
        panic!("excursion scan exceeded {EXCURSION_CAP} nodes; field defect");
    };
    Excursion {
        left: scan(-1),
        right: scan(1),
        origin_fitness: fitness_at(&spec, 0, 0),
        spec,
    }
}

// D_inf^L = #{i in [L,0): -i-1 < F_{i,-1} <= -L+i-1} and the mirrored
// right-hand count, exactly as the limit construction writes them.
pub(crate) fn paper_counts(left: i64, right: i64, fit: impl Fn(i64) -> f64) -> (u64, u64) {
    let mut dl = 0;
    for i in left..0 {
        let f = fit(i);
        if ((-i - 1) as f64) < f && f <= ((-left + i - 1) as f64) {
            dl += 1;
        }
    }
    let mut dr = 0;
    for i in 1..=right {
        let f = fit(i);
        if ((i - 1) as f64) < f && f <= (right - i - 1) as f64 {
            dr += 1;
        }
    }
    (dl, dr)
}

// Exact arrow-rule count on the integers: source i sends its arrow to the
// origin iff the origin is visible and the window stops short of both
// records, i.e. |i| <= ceil(F_{i,-1}) <= min(i-L, R-i) - 1. The origin
// source i = 0 obeys the same rule.
pub(crate) fn exact_count(left: i64, right: i64, fit: impl Fn(i64) -> f64) -> u64 {
    let mut count = 0;
    for i in (left + 1)..right {
        let rf = fit(i).ceil();
        let lo = i.unsigned_abs() as f64;
        let hi = ((i - left).min(right - i) - 1) as f64;
        if rf >= lo && rf <= hi {
            count += 1;
        }
    }
    count
}

/// Limiting indegree by the theory's formula: `1 + D_inf^L + D_inf^R`.
pub fn sample_d_infty_paper(delta: TailIndex, seed: u64) -> DegreeSample {
    let exc = sample_excursion(delta, seed);
    let spec = exc.spec;
    let (dl, dr) = paper_counts(exc.left, exc.right, |i| fitness_at(&spec, i, -1));
    DegreeSample { count: 1 + dl + dr, variant: DegreeVariant::LimitPaper, seed }
}

/// Limiting indegree by the exact arrow rule applied on the integers.
/// Pathwise at most the paper-formula count on the same seed.
pub fn sample_d_infty_exact(delta: TailIndex, seed: u64) -> DegreeSample {
    let exc = sample_excursion(delta, seed);
    let spec = exc.spec;
    let count = exact_count(exc.left, exc.right, |i| fitness_at(&spec, i, -1));
    DegreeSample { count, variant: DegreeVariant::LimitExact, seed }
}

/// Indegree of node `(0,0)` on the torus: the number of layer `-1` sources
/// whose arrow lands on node 0.
///
/// Counted through the record structure of layer 0 (expected `O(log N)`
/// field evaluations) instead of materializing both layers; the brute-force
/// arrow build is kept as [`indegree_torus_brute`] and the two agree on
/// every field.
pub fn sample_indegree_torus(spec: &FieldSpec) -> DegreeSample {
    let n = match spec.lattice {
        Lattice::Torus(n) => n,
        Lattice::Integers => panic!("torus indegree sampling requires a torus field"),
    };
    let variant = DegreeVariant::Torus(n);
    let seed = spec.seed;
    if n == 1 {
        return DegreeSample { count: 1, variant, seed };
    }
    let b0 = field_bits52(spec, 0, 0);
    let find = |dir: i64| (1..n as i64).find(|&m| field_bits52(spec, dir * m, 0) > b0);
    let left = find(-1).map(|m| -m);
    let right = find(1);

    let count = match (left, right) {
        (None, None) => {
            // The origin holds the layer-0 maximum: every source that sees
            // it points to it.
            (0..n as i64)
                .filter(|&i| {
                    let d = (i as u64).min(n - i as u64);
                    fitness_at(spec, i, -1).ceil() >= d as f64
                })
                .count() as u64
        }
        (Some(l), Some(r)) => exact_count(l, r, |i| fitness_at(spec, i, -1)),
        // A record visible from one direction is visible from the other.
        _ => unreachable!("one-sided record on a torus"),
    };
    DegreeSample { count, variant, seed }
}

/// Reference indegree sampler: materializes layers `-1` and `0`, builds all
/// arrows of layer `-1`, and counts the sources targeting node 0.
pub fn indegree_torus_brute(spec: &FieldSpec) -> DegreeSample {
    let n = spec.torus_size().expect("torus indegree sampling requires a torus field");
    let count = build_layer_arrows(spec, -1).iter().filter(|&&t| t == 0).count() as u64;
    DegreeSample { count, variant: DegreeVariant::Torus(n), seed: spec.seed }
}

/// Empirical `(s, -ln P(D > s))` on the integer support, truncated where
/// fewer than 20 samples exceed `s`.
pub fn degree_tail_curve(samples: &[DegreeSample]) -> Result<Vec<(f64, f64)>, StatsError> {
    if samples.len() < 10_000 {
        return Err(StatsError::InsufficientData(format!(
            "tail curve estimation needs at least 1e4 samples, got {}",
            samples.len()
        )));
    }
    let mut counts: Vec<u64> = samples.iter().map(|s| s.count).collect();
    counts.sort_unstable();
    let n = counts.len();
    let mut curve = Vec::new();
    let mut s = 1u64;
    loop {
        let exceed = n - counts.partition_point(|&c| c <= s);
        if exceed < 20 {
            break;
        }
        curve.push((s as f64, -((exceed as f64 / n as f64).ln())));
        s += 1;
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{stream_uniform, TailIndex};
    use crate::stats::{ks_two_sample, simple_linear_fit};
    use rayon::prelude::*;

    fn ti(d: f64) -> TailIndex {
        TailIndex::new(d).unwrap()
    }

    #[test]
    fn excursion_brackets_the_origin() {
        for seed in 0..2000 {
            let exc = sample_excursion(ti(1.0), seed);
            assert!(exc.left <= -1 && exc.right >= 1);
            assert!(exc.layer0_fitness(exc.left) > exc.origin_fitness);
            assert!(exc.layer0_fitness(exc.right) > exc.origin_fitness);
            for i in (exc.left + 1)..exc.right {
                if i != 0 {
                    assert!(exc.layer0_fitness(i) < exc.origin_fitness);
                }
            }
        }
    }

    #[test]
    fn record_law_matches_one_over_m() {
        // P(R >= m) = 1/m, checked within three standard errors.
        let n = 200_000u64;
        let rights: Vec<i64> =
            (0..n).into_par_iter().map(|s| sample_excursion(ti(1.0), s).right).collect();
        for m in 1..=20i64 {
            let p = 1.0 / m as f64;
            let freq = rights.iter().filter(|&&r| r >= m).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * se + 1e-9, "m={m}: freq={freq} expected={p}");
        }
    }

    #[test]
    fn left_and_right_records_have_the_same_law() {
        let n = 100_000u64;
        let (lefts, rights): (Vec<f64>, Vec<f64>) = (0..n)
            .into_par_iter()
            .map(|s| {
                let e = sample_excursion(ti(1.0), s);
                ((-e.left) as f64, e.right as f64)
            })
            .unzip();
        let d = ks_two_sample(&lefts, &rights).unwrap();
        assert!(d < 0.01, "KS distance was {d}");
    }

    #[test]
    fn paper_counting_matches_hand_example() {
        // Excursion (L, R) = (-3, 2) with layer -1 fitnesses pinned by hand:
        // only i = -1 satisfies 0 < F <= 1 on the left, nothing on the right.
        let fit = |i: i64| match i {
            -3 => 5.0,
            -2 => 0.3,
            -1 => 0.7,
            0 => 2.2,
            1 => 9.9,
            2 => 0.1,
            _ => unreachable!(),
        };
        assert_eq!(paper_counts(-3, 2, fit), (1, 0));
        assert_eq!(exact_count(-3, 2, fit), 1);
    }

    #[test]
    fn tight_excursion_has_trivial_counts() {
        // L = -1, R = 1: both paper index ranges are unsatisfiable and even
        // the origin source fails the exact rule.
        let fit = |_: i64| 0.9;
        assert_eq!(paper_counts(-1, 1, fit), (0, 0));
        assert_eq!(exact_count(-1, 1, fit), 0);
        let mut found = false;
        for seed in 0..50_000 {
            let exc = sample_excursion(ti(1.0), seed);
            if exc.left == -1 && exc.right == 1 {
                assert_eq!(sample_d_infty_paper(ti(1.0), seed).count, 1);
                assert_eq!(sample_d_infty_exact(ti(1.0), seed).count, 0);
                found = true;
                break;
            }
        }
        assert!(found, "no (-1, 1) excursion in the seed range");
    }

    #[test]
    fn paper_count_dominates_exact_count_pathwise() {
        for d in [0.5, 1.0, 2.0] {
            for seed in 0..10_000 {
                let paper = sample_d_infty_paper(ti(d), seed).count;
                let exact = sample_d_infty_exact(ti(d), seed).count;
                assert!(paper >= 1);
                assert!(exact <= paper, "seed={seed} delta={d}: {exact} > {paper}");
            }
        }
    }

    #[test]
    fn torus_sampler_equals_brute_force_arrows() {
        for n in [1u64, 2, 3, 4, 5, 8, 17, 33, 64, 257] {
            for seed in 0..200 {
                let spec = FieldSpec::torus(seed, ti(1.0), n).unwrap();
                let fast = sample_indegree_torus(&spec);
                let brute = indegree_torus_brute(&spec);
                assert_eq!(fast, brute, "n={n} seed={seed}");
            }
        }
        // Heavy tails stress the whole-torus windows.
        for seed in 0..200 {
            let spec = FieldSpec::torus(seed, ti(0.4), 33).unwrap();
            assert_eq!(sample_indegree_torus(&spec), indegree_torus_brute(&spec));
        }
    }

    #[test]
    fn single_node_torus_has_indegree_one() {
        let spec = FieldSpec::torus(77, ti(1.0), 1).unwrap();
        assert_eq!(sample_indegree_torus(&spec).count, 1);
    }

    #[test]
    fn torus_mean_indegree_is_one() {
        // Each node emits exactly one arrow, so E[D_N] = 1 for every N.
        let n = 10_000u64;
        let reps = 100_000u64;
        let total: u64 = (0..reps)
            .into_par_iter()
            .map(|k| {
                let spec = FieldSpec::torus(k, ti(1.0), n).unwrap();
                sample_indegree_torus(&spec).count
            })
            .sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean indegree was {mean}");
    }

    #[test]
    fn limit_exact_is_close_to_large_torus_degree() {
        let reps = 20_000u64;
        let torus: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|k| {
                let spec = FieldSpec::torus(k, ti(1.0), 10_000).unwrap();
                sample_indegree_torus(&spec).count as f64
            })
            .collect();
        let limit: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|k| sample_d_infty_exact(ti(1.0), k.wrapping_add(1 << 32)).count as f64)
            .collect();
        let d = ks_two_sample(&torus, &limit).unwrap();
        assert!(d < 0.03, "KS distance was {d}");
    }

    #[test]
    fn tail_curve_truncates_and_errors() {
        let ones: Vec<DegreeSample> = (0..10_000)
            .map(|seed| DegreeSample { count: 1, variant: DegreeVariant::LimitExact, seed })
            .collect();
        assert!(degree_tail_curve(&ones).unwrap().is_empty());
        assert!(matches!(
            degree_tail_curve(&ones[..100]),
            Err(StatsError::InsufficientData(_))
        ));
    }

    #[test]
    fn geometric_tail_curve_has_log_two_slope() {
        // P(D > s) = 2^-(s+1) for D = floor(-log2 u).
        let samples: Vec<DegreeSample> = (0..1_000_000u64)
            .map(|k| {
                let u = stream_uniform(13, 0x6eea, k);
                DegreeSample {
                    count: (-u.log2()).floor() as u64,
                    variant: DegreeVariant::LimitExact,
                    seed: k,
                }
            })
            .collect();
        let curve = degree_tail_curve(&samples).unwrap();
        assert!(curve.len() >= 10);
        let xs: Vec<f64> = curve.iter().map(|&(s, _)| s).collect();
        let ys: Vec<f64> = curve.iter().map(|&(_, y)| y).collect();
        let (slope, _) = simple_linear_fit(&xs, &ys);
        let ln2 = std::f64::consts::LN_2;
        assert!((slope - ln2).abs() < 0.05 * ln2, "slope was {slope}");
    }

    #[test]
    fn samplers_are_deterministic() {
        let spec = FieldSpec::torus(5, ti(1.0), 1000).unwrap();
        assert_eq!(sample_indegree_torus(&spec), sample_indegree_torus(&spec));
        assert_eq!(
            sample_d_infty_paper(ti(0.5), 11).count,
            sample_d_infty_paper(ti(0.5), 11).count
        );
    }
}
