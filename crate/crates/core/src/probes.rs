//! Test fields: band-limited Gaussian fields and deterministic probes.
//!
//! Band-limited fields are defined as continuous functions (finite cosine
//! series compatible with Neumann conditions), so the same probe can be
//! sampled on several grids for refinement studies.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::field::VectorField;
use crate::grid::{Grid, MAX_DIM};
use crate::rng;

/// Highest cosine mode used by default.
pub const DEFAULT_KMAX: usize = 3;

const PROBE_TAG: u32 = 0xB17D;

#[derive(Debug, Clone, PartialEq)]
pub struct BandLimitedProbe {
    m: usize,
    lengths: Vec<f64>,
    modes: Vec<([usize; MAX_DIM], Vec<Complex64>)>,
}

impl BandLimitedProbe {
    /// Probe number `index` of the run with the given seed. Mode
    /// `(k_0, k_1)` carries a complex Gaussian amplitude damped by
    /// `1 / (1 + |k|^2)`.
    pub fn draw(lengths: &[f64], m: usize, kmax: usize, seed: u64, index: u32) -> Self {
        let d = lengths.len();
        let mut r = rng::stream(seed, rng::stream_id(PROBE_TAG, index));
        let mut modes = Vec::new();
        let k1max = if d == 2 { kmax } else { 0 };
        for k0 in 0..=kmax {
            for k1 in 0..=k1max {
                let damp = 1.0 / (1.0 + (k0 * k0 + k1 * k1) as f64);
                let amp = (0..m).map(|_| rng::complex_normal(&mut r) * damp).collect();
                modes.push(([k0, k1], amp));
            }
        }
        BandLimitedProbe {
            m,
            lengths: lengths.to_vec(),
            modes,
        }
    }

    pub fn eval(&self, x: [f64; MAX_DIM], out: &mut [Complex64]) {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (k, amp) in &self.modes {
            let mut basis = 1.0;
            for (axis, l) in self.lengths.iter().enumerate() {
                basis *= (PI * k[axis] as f64 * x[axis] / l).cos();
            }
            for (o, a) in out.iter_mut().zip(amp) {
                *o += a * basis;
            }
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> VectorField {
        VectorField::from_fn(grid.clone(), self.m, |x, v| self.eval(x, v))
    }
}

/// Largest mode resolved with wavelength at least `4h` on `grid`.
pub fn resolved_kmax(grid: &Grid) -> usize {
    grid.nodes_per_axis()
        .iter()
        .map(|&n| (n.saturating_sub(1)) / 2)
        .min()
        .unwrap_or(0)
}

/// Band-limited probes `0..count` on `grid`.
pub fn band_limited_fields(grid: &Arc<Grid>, m: usize, count: usize, seed: u64) -> Vec<VectorField> {
    let kmax = DEFAULT_KMAX.min(resolved_kmax(grid));
    (0..count)
        .map(|i| BandLimitedProbe::draw(grid.lengths(), m, kmax, seed, i as u32).sample(grid))
        .collect()
}

/// Constants, coordinate interpolants and single cosine modes. All
/// structured probes are bounded away from zero.
pub fn structured_fields(grid: &Arc<Grid>, m: usize) -> Vec<VectorField> {
    let d = grid.dim();
    let l = grid.lengths().to_vec();
    let last = d - 1;
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();

    let mut e0 = vec![Complex64::new(0.0, 0.0); m];
    e0[0] = Complex64::new(1.0, 0.0);
    out.push(VectorField::constant(grid.clone(), &e0));

    out.push(VectorField::from_fn(grid.clone(), m, |x, v| {
        v[0] = Complex64::new(1.0 + x[0] / l[0], 0.0);
        if m > 1 {
            v[1] = i * (x[last] / l[last]);
        }
    }));

    out.push(VectorField::from_fn(grid.clone(), m, |x, v| {
        v[0] = Complex64::new(1.5 + (PI * x[0] / l[0]).cos(), 0.0);
        if m > 1 {
            v[1] = i * 0.5 * (PI * x[last] / l[last]).cos();
        }
    }));

    if d == 2 {
        out.push(VectorField::from_fn(grid.clone(), m, |x, v| {
            let s = (PI * x[0] / l[0]).cos() * (PI * x[1] / l[1]).cos();
            v[0] = Complex64::new(2.0 + s, 0.5 * s);
            if m > 1 {
                v[m - 1] += Complex64::new(0.0, 0.7 * (2.0 * PI * x[1] / l[1]).cos());
            }
        }));
    }
    out
}
