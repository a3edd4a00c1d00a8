//! Deterministic Fréchet fitness field indexed by `(node, layer)`.
//!
//! Every random quantity in the simulator derives from a counter-style
//! avalanche mixer over `(seed, node, layer)`, so any coordinate of an
//! effectively infinite field can be evaluated lazily, in any order, from
//! any thread, and always reproduces the same value. There is no stream
//! state anywhere.

use thiserror::Error;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Growth base of the log-fitness scale: `exp(E[ln(2F)]) = 2 e^gamma` for a
/// unit Fréchet draw `F`. Derived once from the Monte Carlo oracle in the
/// test suite and cross-checked against the closed form.
pub const MU: f64 = 3.562_144_835_980_396;

/// Natural log of [`MU`], i.e. `ln 2 + gamma`.
pub const LN_MU: f64 = 1.270_362_845_461_478_2;

#[inline]
pub fn mu() -> f64 {
    MU
}

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("tail index must be a positive finite real, got {0}")]
    InvalidTailIndex(f64),
    #[error("torus size must be at least 1")]
    EmptyTorus,
}

/// Tail exponent of the Fréchet fitness law, `P(F <= s) = exp(-s^-delta)`.
///
/// Any positive value is accepted for raw sampling; `delta = 2` is rejected
/// later, by the distance-regime fit, where the theory excludes it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailIndex(f64);

impl TailIndex {
    pub fn new(delta: f64) -> Result<Self, FieldError> {
        if delta.is_finite() && delta > 0.0 {
            Ok(TailIndex(delta))
        } else {
            Err(FieldError::InvalidTailIndex(delta))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Node set of one layer: a discrete torus of `N` nodes, or all of the
/// integers (the local limit of the torus as `N` grows).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    Torus(u64),
    Integers,
}

/// Complete description of a fitness field. Field values are a pure function
/// of `(seed, i mod N, h)` in torus mode and of `(seed, i, h)` in limit mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub seed: u64,
    pub delta: TailIndex,
    pub lattice: Lattice,
}

impl FieldSpec {
    pub fn torus(seed: u64, delta: TailIndex, n: u64) -> Result<Self, FieldError> {
        if n == 0 {
            return Err(FieldError::EmptyTorus);
        }
        Ok(FieldSpec { seed, delta, lattice: Lattice::Torus(n) })
    }

    pub fn integers(seed: u64, delta: TailIndex) -> Self {
        FieldSpec { seed, delta, lattice: Lattice::Integers }
    }

    pub fn torus_size(&self) -> Option<u64> {
        match self.lattice {
            Lattice::Torus(n) => Some(n),
            Lattice::Integers => None,
        }
    }

    /// Reduces a node index to its canonical representative.
    #[inline]
    pub fn reduce(&self, i: i64) -> i64 {
        match self.lattice {
            Lattice::Torus(n) => i.rem_euclid(n as i64),
            Lattice::Integers => i,
        }
    }
}

// Stafford variant 13 of the splitmix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// Sign-preserving injection of signed coordinates into the mixer input;
// the limit model uses layers and node indices on all of the integers.
#[inline]
fn zigzag(v: i64) -> u64 {
    (v.wrapping_shl(1) ^ (v >> 63)) as u64
}

/// Combines a master seed with a replication or stream counter. For a fixed
/// `a`, the map `b -> mix_pair(a, b)` is a composition of bijections, hence
/// collision-free.
#[inline]
pub(crate) fn mix_pair(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b ^ 0x9e37_79b9_7f4a_7c15))
}

// Domain tags keeping auxiliary draws disjoint from field coordinates.
const LANE_FIELD: u64 = 0xa076_1d64_78bd_642f;

/// Raw 64-bit field output at a reduced coordinate.
#[inline]
pub(crate) fn field_bits(seed: u64, i: i64, h: i64) -> u64 {
    let mut z = mix64(seed ^ LANE_FIELD);
    z = mix64(z ^ zigzag(i));
    mix64(z ^ zigzag(h))
}

/// Top 52 bits of the field output; fitness is strictly increasing in this
/// value, so window maxima can be resolved by integer comparison alone.
#[inline]
pub(crate) fn field_bits52(spec: &FieldSpec, i: i64, h: i64) -> u64 {
    field_bits(spec.seed, spec.reduce(i), h) >> 12
}

/// `(k + 0.5) / 2^52` over the top 52 bits: `k + 0.5` is exactly
/// representable below 2^52, so the result is always strictly inside
/// `(0,1)` and the Fréchet quantile never degenerates.
#[inline]
pub(crate) fn bits52_to_unit(bits52: u64) -> f64 {
    (bits52 as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// Uniform deviate of the field at `(i, h)`.
pub fn uniform_at(spec: &FieldSpec, i: i64, h: i64) -> f64 {
    bits52_to_unit(field_bits52(spec, i, h))
}

/// Auxiliary deterministic uniform stream, disjoint from the field lanes.
/// `stream` tags the purpose (walker starts, trajectory draws, estimators),
/// `k` is the draw counter.
pub fn stream_uniform(seed: u64, stream: u64, k: u64) -> f64 {
    let mut z = mix64(seed ^ stream ^ 0xd6e8_feb8_6659_fd93);
    z = mix64(z ^ k);
    bits52_to_unit(z >> 12)
}

/// Inverse of the Fréchet law `P(F <= s) = exp(-s^-delta)`.
///
/// Strictly increasing in `u`. Callers must supply `u` strictly inside
/// `(0,1)`; anything else is a programming error.
pub fn frechet_quantile(u: f64, delta: TailIndex) -> f64 {
    assert!(u > 0.0 && u < 1.0, "uniform deviate must lie in (0,1), got {u}");
    (-u.ln()).powf(-1.0 / delta.get())
}

/// Fitness of node `(i, h)`: the Fréchet quantile of the field deviate.
pub fn fitness_at(spec: &FieldSpec, i: i64, h: i64) -> f64 {
    frechet_quantile(uniform_at(spec, i, h), spec.delta)
}

/// Number of nodes visible on the next layer: `1 + 2*ceil(f)`.
///
/// Always odd and at least 3. Uses the mathematical ceiling with no epsilon
/// nudging; a fitness landing exactly on an integer has probability zero.
pub fn scope(f: f64) -> u64 {
    assert!(f > 0.0, "scope requires a positive fitness");
    let c = f.ceil();
    if c >= 9.223_372_036_854_776e18 {
        u64::MAX
    } else {
        1 + 2 * (c as u64)
    }
}

/// Log-fitness `log_mu(2 f^delta)`, computed as `(ln 2 + delta ln f) / ln mu`
/// so that astronomically large fitnesses stay representable.
pub fn log_fitness(f: f64, delta: TailIndex) -> f64 {
    assert!(f > 0.0, "log_fitness requires a positive fitness");
    (std::f64::consts::LN_2 + delta.get() * f.ln()) / LN_MU
}
