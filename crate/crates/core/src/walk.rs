//! Arrow-following walkers: two-walker coalescence on the torus (the typical
//! distance) and single-walker limit-model trajectories (the log-fitness
//! growth regimes).
//!
//! Torus walkers scan their visibility window lazily against the shared
//! deterministic field; maxima are resolved on the raw 53-bit field output,
//! which orders exactly like fitness. Limit trajectories follow the field
//! by direct window scan while the scope is tractable and switch to the
//! max-stability recursion in log space once it is not; the two phases have
//! the same law, and the switch is what makes 500-layer critical runs and
//! doubly-exponential heavy-tail runs feasible at all.

use crate::field::{
    bits52_to_unit, field_bits52, fitness_at, frechet_quantile, log_fitness, mix_pair,
    stream_uniform, FieldSpec, Lattice, TailIndex, LN_MU,
};
use crate::layer::fitness_radius;

const STREAM_START: u64 = 0xe703_7ed1_a0b4_28db;
const STREAM_TRAJ_MAX: u64 = 0x8ebc_6af0_9c88_c6e3;
const STREAM_TRAJ_POS: u64 = 0x5899_65cc_7537_4cc3;

// Largest window radius the limit-mode walkers scan node by node.
const LIMIT_SCAN_MAX: f64 = 16_777_216.0;
// Radius at which limit trajectories switch to the log-space recursion.
const TRAJ_SCAN_MAX: f64 = 65_536.0;

/// One walker: a node position, its fitness, and the current layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerState {
    pub position: i64,
    pub fitness: f64,
    pub layer: i64,
}

/// Walker sitting on `position` in layer 0.
pub fn walker_start(spec: &FieldSpec, position: i64) -> WalkerState {
    let position = spec.reduce(position);
    WalkerState { position, fitness: fitness_at(spec, position, 0), layer: 0 }
}

// Window maximum on a torus layer by raw field bits: returns (node, bits52).
// Ties resolve to the smaller torus distance from the center, then the
// smaller node index, mirroring the scan contract of the argmax module.
fn window_max_bits(spec: &FieldSpec, n: u64, h: i64, center: u64, radius: u64) -> (u64, u64) {
    let whole = radius >= n || 2 * radius + 1 >= n;
    let (start, len) = if whole {
        (0i64, n)
    } else {
        (center as i64 - radius as i64, 2 * radius + 1)
    };
    let mut best = (0u64, 0u64, u64::MAX); // (pos, bits, dist)
    let mut found = false;
    let mut p = start.rem_euclid(n as i64) as u64;
    for _ in 0..len {
        let bits = field_bits52(spec, p as i64, h);
        let diff = p.abs_diff(center);
        let dist = diff.min(n - diff);
        let better = !found
            || bits > best.1
            || (bits == best.1 && (dist < best.2 || (dist == best.2 && p < best.0)));
        if better {
            best = (p, bits, dist);
            found = true;
        }
        p += 1;
        if p == n {
            p = 0;
        }
    }
    (best.0, best.1)
}

/// One application of the arrow rule: the walker moves to the argmax of the
/// next layer over the window of radius `ceil(fitness)`, capped at the whole
/// torus.
pub fn walker_step(spec: &FieldSpec, state: &WalkerState) -> WalkerState {
    let h = state.layer + 1;
    match spec.lattice {
        Lattice::Torus(n) => {
            let radius = fitness_radius(state.fitness, n);
            let (pos, bits) = window_max_bits(spec, n, h, state.position as u64, radius);
            WalkerState {
                position: pos as i64,
                fitness: frechet_quantile(bits52_to_unit(bits), spec.delta),
                layer: h,
            }
        }
        Lattice::Integers => {
            let c = state.fitness.ceil();
            assert!(
                c <= LIMIT_SCAN_MAX,
                "limit-mode scope too large for a direct scan; use limit_walker_trajectory"
            );
            let r = c as i64;
            let mut best = (state.position, 0u64, u64::MAX);
            let mut found = false;
            for j in (state.position - r)..=(state.position + r) {
                let bits = field_bits52(spec, j, h);
                let dist = j.abs_diff(state.position);
                let better = !found
                    || bits > best.1
                    || (bits == best.1 && (dist < best.2 || (dist == best.2 && j < best.0)));
                if better {
                    best = (j, bits, dist);
                    found = true;
                }
            }
            WalkerState {
                position: best.0,
                fitness: frechet_quantile(bits52_to_unit(best.1), spec.delta),
                layer: h,
            }
        }
    }
}

/// Outcome of one two-walker coalescence run. `h_n` is the first layer at
/// which the walkers occupy the same node, or `None` if they have not met by
/// the censoring cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalescenceResult {
    pub h_n: Option<u64>,
    pub cap: u64,
    pub meet_position: Option<u64>,
    pub start_left: u64,
    pub start_right: u64,
}

impl CoalescenceResult {
    pub fn censored(&self) -> bool {
        self.h_n.is_none()
    }
}

/// One row of an optional per-layer trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub layer: u64,
    pub pos_left: u64,
    pub pos_right: u64,
    pub fit_left: f64,
    pub fit_right: f64,
}

/// First meeting layer of the walker from node 0 and the walker from a
/// uniformly drawn start, both following arrows through the same field.
pub fn coalescence_time(spec: &FieldSpec, cap: u64) -> CoalescenceResult {
    run_coalescence(spec, cap, false).0
}

/// Same as [`coalescence_time`], additionally recording the per-layer trace.
pub fn coalescence_time_traced(spec: &FieldSpec, cap: u64) -> (CoalescenceResult, Vec<TraceRow>) {
    run_coalescence(spec, cap, true)
}

fn run_coalescence(spec: &FieldSpec, cap: u64, want_trace: bool) -> (CoalescenceResult, Vec<TraceRow>) {
    let n = spec.torus_size().expect("coalescence runs on a torus field");
    assert!(cap >= 1, "censoring cap must be at least 1");
    // The second start comes from a reserved stream of the same seed, so a
    // whole replication reproduces from one integer. All n nodes, including
    // 0, are eligible.
    let start_right = (stream_uniform(spec.seed, STREAM_START, 0) * n as f64).floor() as u64;
    let mut left = (0u64, fitness_at(spec, 0, 0));
    let mut right = (start_right, fitness_at(spec, start_right as i64, 0));
    let mut trace = Vec::new();
    let mut layer = 0u64;
    loop {
        if want_trace {
            trace.push(TraceRow {
                layer,
                pos_left: left.0,
                pos_right: right.0,
                fit_left: left.1,
                fit_right: right.1,
            });
        }
        if left.0 == right.0 {
            let res = CoalescenceResult {
                h_n: Some(layer),
                cap,
                meet_position: Some(left.0),
                start_left: 0,
                start_right,
            };
            return (res, trace);
        }
        if layer == cap {
            let res = CoalescenceResult {
                h_n: None,
                cap,
                meet_position: None,
                start_left: 0,
                start_right,
            };
            return (res, trace);
        }
        let h = layer as i64 + 1;
        let ra = fitness_radius(left.1, n);
        let rb = fitness_radius(right.1, n);
        let whole_a = ra >= n || 2 * ra + 1 >= n;
        let whole_b = rb >= n || 2 * rb + 1 >= n;
        if whole_a && whole_b {
            // Identical whole-torus windows: both walkers pick the global
            // argmax of the next layer and meet there.
            let (pos, bits) = window_max_bits(spec, n, h, 0, n);
            let fit = frechet_quantile(bits52_to_unit(bits), spec.delta);
            if want_trace {
                trace.push(TraceRow {
                    layer: layer + 1,
                    pos_left: pos,
                    pos_right: pos,
                    fit_left: fit,
                    fit_right: fit,
                });
            }
            let res = CoalescenceResult {
                h_n: Some(layer + 1),
                cap,
                meet_position: Some(pos),
                start_left: 0,
                start_right,
            };
            return (res, trace);
        }
        let (pa, ba) = window_max_bits(spec, n, h, left.0, ra);
        let (pb, bb) = window_max_bits(spec, n, h, right.0, rb);
        left = (pa, frechet_quantile(bits52_to_unit(ba), spec.delta));
        right = (pb, frechet_quantile(bits52_to_unit(bb), spec.delta));
        layer += 1;
    }
}

/// One recorded layer of a limit-model trajectory. Position and fitness are
/// exact while the direct-scan phase lasts; afterwards the position is an
/// f64 integer combination and the fitness may saturate to infinity, while
/// the log-fitness stays exact throughout.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryStep {
    pub layer: u64,
    pub position: f64,
    pub fitness: f64,
    pub log_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub delta: TailIndex,
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
}

enum TrajPhase {
    Scan { pos: i64, fit: f64 },
    Log { pos: f64, ln_fit: f64 },
}

/// Limit-model walker from node 0, recording `(position, fitness, G_h)` for
/// `h_max` layers. Uses the field directly while `ceil(F) <= 65536` and the
/// distribution-exact recursion `F' = (phi(F) F_1)^{1/delta}` in log space
/// beyond that.
pub fn limit_walker_trajectory(delta: TailIndex, seed: u64, h_max: u64) -> TrajectoryRecord {
    assert!(h_max >= 1);
    let spec = FieldSpec::integers(seed, delta);
    let d = delta.get();
    let g_of = |ln_fit: f64| (std::f64::consts::LN_2 + d * ln_fit) / LN_MU;

    let f0 = fitness_at(&spec, 0, 0);
    let mut phase = TrajPhase::Scan { pos: 0, fit: f0 };
    let mut steps = Vec::with_capacity(h_max as usize + 1);
    steps.push(TrajectoryStep {
        layer: 0,
        position: 0.0,
        fitness: f0,
        log_fitness: log_fitness(f0, delta),
    });

    for h in 0..h_max {
        // One-way door: field coordinates are meaningless after the first
        // recursion step, so the scan phase never resumes.
        if let TrajPhase::Scan { pos, fit } = phase {
            if fit.ceil() > TRAJ_SCAN_MAX {
                phase = TrajPhase::Log { pos: pos as f64, ln_fit: fit.ln() };
            }
        }
        phase = match phase {
            TrajPhase::Scan { pos, fit } => {
                let state = WalkerState { position: pos, fitness: fit, layer: h as i64 };
                let next = walker_step(&spec, &state);
                steps.push(TrajectoryStep {
                    layer: h + 1,
                    position: next.position as f64,
                    fitness: next.fitness,
                    log_fitness: log_fitness(next.fitness, delta),
                });
                TrajPhase::Scan { pos: next.position, fit: next.fitness }
            }
            TrajPhase::Log { pos, ln_fit } => {
                // ln phi(F): exact while ceil(F) stays exactly representable,
                // and ln(2F) beyond that, where the +1 and the ceiling sit
                // below f64 resolution anyway.
                let ln_phi = if ln_fit < 34.5 {
                    // e^34.5 < 2^52
                    (2.0 * ln_fit.exp().ceil() + 1.0).ln()
                } else {
                    std::f64::consts::LN_2 + ln_fit
                };
                let u1 = stream_uniform(seed, STREAM_TRAJ_MAX, h + 1);
                let ln_f1 = -(-u1.ln()).ln();
                let new_ln_fit = (ln_phi + ln_f1) / d;

                let u2 = stream_uniform(seed, STREAM_TRAJ_POS, h + 1);
                let ceil_f = ln_fit.exp().ceil();
                let width = 2.0 * ceil_f + 1.0;
                let new_pos = pos + (u2 * width).floor() - ceil_f;

                steps.push(TrajectoryStep {
                    layer: h + 1,
                    position: new_pos,
                    fitness: new_ln_fit.exp(),
                    log_fitness: g_of(new_ln_fit),
                });
                TrajPhase::Log { pos: new_pos, ln_fit: new_ln_fit }
            }
        };
    }
    TrajectoryRecord { delta, seed, steps }
}

/// Empirical mean and variance of the signed one-step displacement of a
/// torus walker conditioned on its current fitness, over fresh next-layer
/// fields. The torus is sized so the window never wraps.
pub fn step_offset_moments(f: f64, delta: TailIndex, samples: u64, seed: u64) -> (f64, f64) {
    assert!(f > 0.0 && f.ceil() < 1e6, "conditioning fitness must keep the window scannable");
    assert!(samples >= 1);
    let radius = f.ceil() as i64;
    let n = (4 * (2 * radius + 1)).max(8) as u64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for k in 0..samples {
        let spec = FieldSpec::torus(mix_pair(seed, k), delta, n).unwrap();
        // Walker pinned at node 0 with the imposed fitness; scan layer 1.
        let mut best = (0i64, 0u64, u64::MAX);
        let mut found = false;
        for j in -radius..=radius {
            let bits = field_bits52(&spec, j, 1);
            let dist = j.unsigned_abs();
            let better = !found
                || bits > best.1
                || (bits == best.1 && (dist < best.2 || (dist == best.2 && j < best.0)));
            if better {
                best = (j, bits, dist);
                found = true;
            }
        }
        let off = best.0 as f64;
        sum += off;
        sumsq += off * off;
    }
    let m = samples as f64;
    let mean = sum / m;
    (mean, sumsq / m - mean * mean)
}
