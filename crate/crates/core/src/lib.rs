//! Monte Carlo simulator and statistical test harness for layered
//! max-linkage random networks.
//!
//! The model: layers of `N` nodes (a torus, or all of the integers in the
//! local limit), every node carrying an i.i.d. Fréchet fitness. Each node
//! links to the maximum-fitness node within a window on the next layer whose
//! radius is the ceiling of its own fitness. The tail index of the fitness
//! law drives both the indegree tail and the growth of graph distances, and
//! this crate measures both at desk scale:
//!
//! - [`field`] — the deterministic, lazily evaluated fitness field;
//! - [`layer`] — circular window argmax and the arrow map between layers;
//! - [`degree`] — indegree samplers on the torus and on the integers;
//! - [`walk`] — two-walker coalescence (the typical distance) and
//!   limit-model log-fitness trajectories;
//! - [`stats`] — KS distances, tail-shape classification, distance-regime
//!   fits, and the Fréchet limit integrals;
//! - [`harness`] — experiment configs, parallel sweeps, CSV/JSON output,
//!   and the verification battery.

pub mod degree;
pub mod field;
pub mod harness;
pub mod layer;
pub mod stats;
pub mod walk;

pub use degree::{DegreeSample, DegreeVariant, Excursion};
pub use field::{FieldSpec, Lattice, TailIndex, MU};
pub use harness::{derive_seed, run, Command, DegreeMode, ExperimentConfig, RunManifest};
pub use layer::{LayerView, WindowIndex};
pub use stats::{RegimeFit, ScanRow, ScanTable, StatsError, TailShape};
pub use walk::{CoalescenceResult, TrajectoryRecord, WalkerState};
