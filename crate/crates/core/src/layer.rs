//! Window-argmax machinery on circular layers and the arrow map from each
//! node to the maximum-fitness node visible on the next layer.
//!
//! Windows with `2r + 1 >= N` wrap into the whole torus. Exact fitness ties
//! have probability zero under the hash field but can occur in synthetic
//! layers; they resolve to the candidate closest to the window center, then
//! to the smaller node index.

use crate::field::{fitness_at, FieldSpec, Lattice};

/// Materialized fitness values of one torus layer.
#[derive(Debug, Clone)]
pub struct LayerView {
    pub layer: i64,
    values: Vec<f64>,
}

impl LayerView {
    /// Evaluates the whole layer of a torus field.
    pub fn materialize(spec: &FieldSpec, layer: i64) -> Self {
        let n = spec.torus_size().expect("layer materialization requires a torus field");
        let values = (0..n as i64).map(|i| fitness_at(spec, i, layer)).collect();
        LayerView { layer, values }
    }

    /// Wraps externally supplied values (used by tests and synthetic data).
    pub fn from_values(layer: i64, values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        LayerView { layer, values }
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, i: u64) -> f64 {
        self.values[i as usize]
    }
}

#[inline]
fn torus_distance(n: u64, a: u64, b: u64) -> u64 {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Argmax of fitness over the circular window of the given radius, by linear
/// scan. This is the reference contract for all faster paths.
pub fn window_argmax(view: &LayerView, center: u64, radius: u64) -> u64 {
    let n = view.len();
    assert!(center < n);
    let whole = radius >= n || 2 * radius + 1 >= n;
    let (start, len) = if whole {
        (0i64, n)
    } else {
        (center as i64 - radius as i64, 2 * radius + 1)
    };
    let mut best_i = 0u64;
    let mut best_v = f64::NEG_INFINITY;
    let mut best_d = u64::MAX;
    let mut p = start.rem_euclid(n as i64) as u64;
    for _ in 0..len {
        let v = view.value(p);
        let d = torus_distance(n, p, center);
        if v > best_v || (v == best_v && (d < best_d || (d == best_d && p < best_i))) {
            best_v = v;
            best_d = d;
            best_i = p;
        }
        p += 1;
        if p == n {
            p = 0;
        }
    }
    best_i
}

/// Sparse-table range argmax over a layer, built on the values doubled
/// end-to-end so circular windows become contiguous ranges.
pub struct WindowIndex<'a> {
    view: &'a LayerView,
    n: usize,
    // table[level][j] = doubled index of the max over [j, j + 2^level).
    levels: Vec<Vec<u32>>,
}

impl<'a> WindowIndex<'a> {
    pub fn build(view: &'a LayerView) -> Self {
        let n = view.len() as usize;
        assert!(n <= u32::MAX as usize / 2, "layer too large for the index");
        let m = 2 * n;
        let value = |di: u32| view.value((di as usize % n) as u64);
        let mut levels: Vec<Vec<u32>> = Vec::new();
        levels.push((0..m as u32).collect());
        let mut width = 1usize;
        while 2 * width <= m {
            let prev = levels.last().unwrap();
            let mut cur = Vec::with_capacity(m - 2 * width + 1);
            for j in 0..=(m - 2 * width) {
                let a = prev[j];
                let b = prev[j + width];
                // Ties keep the smaller doubled index.
                cur.push(if value(b) > value(a) { b } else { a });
            }
            levels.push(cur);
            width *= 2;
        }
        WindowIndex { view, n, levels }
    }

    #[inline]
    fn value(&self, di: u32) -> f64 {
        self.view.value((di as usize % self.n) as u64)
    }

    // Range argmax on doubled coordinates, inclusive bounds.
    fn range_best(&self, lo: usize, hi: usize) -> u32 {
        debug_assert!(lo <= hi && hi < 2 * self.n);
        let len = hi - lo + 1;
        let k = usize::BITS - 1 - len.leading_zeros();
        let a = self.levels[k as usize][lo];
        let b = self.levels[k as usize][hi + 1 - (1 << k)];
        if self.value(b) > self.value(a) {
            b
        } else {
            a
        }
    }

    /// O(1) circular window argmax; equal to [`window_argmax`] on every
    /// window. Exact ties trigger a scan fallback to honor the tie-break.
    pub fn window_argmax(&self, center: u64, radius: u64) -> u64 {
        let n = self.n as u64;
        debug_assert!(center < n);
        let whole = radius >= n || 2 * radius + 1 >= n;
        let (lo, hi) = if whole {
            (0usize, self.n - 1)
        } else {
            let start = (center as i64 - radius as i64).rem_euclid(n as i64) as usize;
            (start, start + 2 * radius as usize)
        };
        let best = self.range_best(lo, hi);
        let v = self.value(best);
        let tied = (best as usize > lo && self.value(self.range_best(lo, best as usize - 1)) == v)
            || ((best as usize) < hi && self.value(self.range_best(best as usize + 1, hi)) == v);
        if tied {
            return window_argmax(self.view, center, radius);
        }
        best as u64 % n
    }
}

// Ceil of a fitness as a window radius, saturated so the torus cap applies.
#[inline]
pub(crate) fn fitness_radius(f: f64, n: u64) -> u64 {
    let c = f.ceil();
    if c >= n as f64 {
        n
    } else {
        c as u64
    }
}

/// Target of the arrow out of `(i, h)`: the argmax of layer `h+1` over the
/// window of radius `ceil(F_{i,h})`, capped at the whole torus.
pub fn arrow(spec: &FieldSpec, i: i64, h: i64) -> i64 {
    let f = fitness_at(spec, i, h);
    match spec.lattice {
        Lattice::Torus(n) => {
            let radius = fitness_radius(f, n);
            let center = spec.reduce(i);
            let whole = 2 * radius + 1 >= n;
            let (start, len) = if whole {
                (0i64, n)
            } else {
                (center - radius as i64, 2 * radius + 1)
            };
            let mut best: Option<(f64, u64, u64)> = None;
            let mut p = start.rem_euclid(n as i64) as u64;
            for _ in 0..len {
                let v = fitness_at(spec, p as i64, h + 1);
                let d = torus_distance(n, p, center as u64);
                let better = match best {
                    None => true,
                    Some((bv, bd, bi)) => {
                        v > bv || (v == bv && (d < bd || (d == bd && p < bi)))
                    }
                };
                if better {
                    best = Some((v, d, p));
                }
                p += 1;
                if p == n {
                    p = 0;
                }
            }
            best.unwrap().2 as i64
        }
        Lattice::Integers => {
            let c = f.ceil();
            assert!(c < 4.0e9, "limit-mode arrow scan requires a tractable scope");
            let radius = c as i64;
            let mut best = (f64::NEG_INFINITY, 0u64, i);
            for j in (i - radius)..=(i + radius) {
                let v = fitness_at(spec, j, h + 1);
                let d = j.abs_diff(i);
                if v > best.0 || (v == best.0 && (d < best.1 || (d == best.1 && j < best.2))) {
                    best = (v, d, j);
                }
            }
            best.2
        }
    }
}

/// Arrow targets of a whole torus layer: one index build over layer `h+1`,
/// one O(1) query per source.
pub fn build_layer_arrows(spec: &FieldSpec, h: i64) -> Vec<u64> {
    let n = spec.torus_size().expect("building layer arrows requires a torus field");
    let next = LayerView::materialize(spec, h + 1);
    let index = WindowIndex::build(&next);
    (0..n as i64)
        .map(|i| {
            let radius = fitness_radius(fitness_at(spec, i, h), n);
            index.window_argmax(i as u64, radius)
        })
        .collect()
}
