//! Vector-valued fields on a grid and the pointwise maps acting on them.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::sum::{compensated, CompensatedSum};

/// An exponent `p` in `(1, inf)` together with its dual `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PExponent {
    p: f64,
    q: f64,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(LabError::invalid(format!("exponent must lie in (1, inf), got {p}")));
        }
        let q = p / (p - 1.0);
        Ok(PExponent { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dual(&self) -> PExponent {
        PExponent { p: self.q, q: self.p }
    }
}

impl TryFrom<f64> for PExponent {
    type Error = LabError;
    fn try_from(p: f64) -> Result<Self> {
        PExponent::new(p)
    }
}

impl From<PExponent> for f64 {
    fn from(e: PExponent) -> f64 {
        e.p
    }
}

/// One value in `C^m` per grid node, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Arc<Grid>,
    m: usize,
    values: Vec<Complex64>,
}

#[inline]
pub(crate) fn norm_h(v: &[Complex64]) -> f64 {
    // hypot-style scaling is unnecessary at the magnitudes used here
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(x, y)_H`, linear in `x` and conjugate-linear in `y`.
#[inline]
pub(crate) fn inner_h(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, m: usize, values: Vec<Complex64>) -> Result<Self> {
        if m == 0 {
            return Err(LabError::invalid("field dimension m must be at least 1"));
        }
        if values.len() != grid.node_count() * m {
            return Err(LabError::shape(format!(
                "expected {} values ({} nodes x m = {}), got {}",
                grid.node_count() * m,
                grid.node_count(),
                m,
                values.len()
            )));
        }
        Ok(VectorField { grid, m, values })
    }

    pub fn zeros(grid: Arc<Grid>, m: usize) -> Self {
        let n = grid.node_count() * m;
        VectorField {
            grid,
            m,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Field whose value at every node is `value`.
    pub fn constant(grid: Arc<Grid>, value: &[Complex64]) -> Self {
        let n = grid.node_count();
        let values = (0..n).flat_map(|_| value.iter().copied()).collect();
        VectorField {
            grid,
            m: value.len(),
            values,
        }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn<F>(grid: Arc<Grid>, m: usize, mut f: F) -> Self
    where
        F: FnMut([f64; crate::grid::MAX_DIM], &mut [Complex64]),
    {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.node_count() * m];
        for (i, chunk) in values.chunks_mut(m).enumerate() {
            f(grid.coords(i), chunk);
        }
        VectorField { grid, m, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn node(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn nodes(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.values.chunks_exact(self.m)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn check_compatible(&self, other: &VectorField) -> Result<()> {
        if self.m != other.m {
            return Err(LabError::shape(format!(
                "field dimensions differ: {} vs {}",
                self.m, other.m
            )));
        }
        if !(Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid) {
            return Err(LabError::shape("fields live on different grids"));
        }
        Ok(())
    }

    /// Pointwise H-norms.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.nodes().map(norm_h).collect()
    }

    pub fn map_nodes<F>(&self, mut f: F) -> VectorField
    where
        F: FnMut(&[Complex64], &mut [Complex64]),
    {
        let mut out = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (src, dst) in self.nodes().zip(out.chunks_exact_mut(self.m)) {
            f(src, dst);
        }
        VectorField {
            grid: self.grid.clone(),
            m: self.m,
            values: out,
        }
    }

    pub fn scale(&self, lambda: Complex64) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            m: self.m,
            values: self.values.iter().map(|z| z * lambda).collect(),
        }
    }

    pub fn scale_real(&self, lambda: f64) -> VectorField {
        self.scale(Complex64::new(lambda, 0.0))
    }

    /// `self + alpha * other`; panics on incompatible shapes.
    pub fn axpy(&self, alpha: Complex64, other: &VectorField) -> VectorField {
        assert_eq!(self.values.len(), other.values.len(), "axpy shape mismatch");
        VectorField {
            grid: self.grid.clone(),
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    /// `sum_i w_i ||u_i||_H^p`, no validation.
    pub(crate) fn pth_power_sum(&self, p: f64) -> f64 {
        let w = self.grid.weights();
        let mut acc = CompensatedSum::default();
        for (i, v) in self.nodes().enumerate() {
            let r = norm_h(v);
            if r > 0.0 {
                acc.add(w[i] * r.powf(p));
            }
        }
        acc.value()
    }

    /// Weighted mean-free check helper: `sum_i w_i u_i`.
    pub fn weighted_sum(&self) -> Vec<Complex64> {
        let w = self.grid.weights();
        (0..self.m)
            .map(|a| {
                let re = compensated(self.nodes().enumerate().map(|(i, v)| w[i] * v[a].re));
                let im = compensated(self.nodes().enumerate().map(|(i, v)| w[i] * v[a].im));
                Complex64::new(re, im)
            })
            .collect()
    }
}

/// `(sum_i w_i ||u_i||_H^p)^{1/p}`.
pub fn lp_norm(u: &VectorField, p: PExponent) -> Result<f64> {
    lp_norm_raw(u, p.p())
}

/// L_p norm for any finite `p >= 1`.
pub fn lp_norm_raw(u: &VectorField, p: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(LabError::invalid("field contains non-finite values"));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(LabError::invalid(format!(
            "norm exponent must be finite and >= 1, got {p}"
        )));
    }
    Ok(u.pth_power_sum(p).powf(1.0 / p))
}

pub fn l2_norm(u: &VectorField) -> Result<f64> {
    lp_norm_raw(u, 2.0)
}

/// Weighted Hermitian inner product `sum_i w_i (u_i, v_i)_H`.
pub fn l2_inner(u: &VectorField, v: &VectorField) -> Result<Complex64> {
    u.check_compatible(v)?;
    let w = u.grid.weights();
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for (i, (a, b)) in u.nodes().zip(v.nodes()).enumerate() {
        let z = inner_h(a, b) * w[i];
        re.add(z.re);
        im.add(z.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Pointwise `u_i / ||u_i||_H`, and zero where `u_i = 0`.
pub fn sgn_field(u: &VectorField) -> VectorField {
    u.map_nodes(|src, dst| {
        let r = norm_h(src);
        if r > 0.0 {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s / r;
            }
        }
    })
}

/// Pointwise `||u_i||_H^{p-1} sgn(u_i)`, evaluated as zero where `u_i = 0`
/// for every `p > 1`.
pub fn duality_map(u: &VectorField, p: PExponent) -> VectorField {
    let e = p.p() - 1.0;
    u.map_nodes(|src, dst| {
        let r = norm_h(src);
        if r > 0.0 {
            let f = r.powf(e) / r;
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s * f;
            }
        }
    })
}

/// Pointwise `||u_i||_H^{p-2} u_i` (zero at zeros).
pub fn power_map(u: &VectorField, p: PExponent) -> VectorField {
    let e = p.p() - 2.0;
    u.map_nodes(|src, dst| {
        let r = norm_h(src);
        if r > 0.0 {
            let f = r.powf(e);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s * f;
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponent_duality() {
        let e = PExponent::new(3.0).unwrap();
        assert!((1.0 / e.p() + 1.0 / e.q() - 1.0).abs() < 1e-15);
        assert!(PExponent::new(1.0).is_err());
        assert!(PExponent::new(f64::INFINITY).is_err());
        assert_eq!(e.dual().dual(), e);
    }

    #[test]
    fn lp_norm_examples() {
        let g = Arc::new(Grid::unit(&[5, 4]).unwrap());
        let zero = VectorField::zeros(g.clone(), 3);
        assert_eq!(lp_norm(&zero, PExponent::new(3.0).unwrap()).unwrap(), 0.0);

        let one = VectorField::constant(g, &[c(1.0, 0.0)]);
        for p in [1.2, 2.0, 5.5] {
            let n = lp_norm(&one, PExponent::new(p).unwrap()).unwrap();
            assert!((n - 1.0).abs() < 1e-14);
        }

        let g2 = Arc::new(Grid::unit(&[2]).unwrap());
        let u = VectorField::new(g2, 1, vec![c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        let n = lp_norm(&u, PExponent::new(2.0).unwrap()).unwrap();
        assert!((n - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_rejects_nan() {
        let g = Arc::new(Grid::unit(&[2]).unwrap());
        let u = VectorField::new(g, 1, vec![c(f64::NAN, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(
            lp_norm(&u, PExponent::new(2.0).unwrap()),
            Err(LabError::InvalidInput(_))
        ));
    }

    #[test]
    fn inner_product_examples() {
        let g = Arc::new(Grid::unit(&[1]).unwrap());
        let u = VectorField::new(g.clone(), 2, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let v = VectorField::new(g.clone(), 2, vec![c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(l2_inner(&u, &v).unwrap(), c(0.0, 0.0));

        let g = Arc::new(Grid::unit(&[4, 4]).unwrap());
        let one = VectorField::constant(g.clone(), &[c(1.0, 0.0)]);
        assert!((l2_inner(&one, &one).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let a = VectorField::constant(g.clone(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let b = VectorField::constant(g.clone(), &[c(0.0, 0.0), c(0.0, 3.0)]);
        assert_eq!(l2_inner(&a, &b).unwrap(), c(0.0, 0.0));
        let other = VectorField::constant(g, &[c(1.0, 0.0)]);
        assert!(l2_inner(&a, &other).is_err());
    }

    #[test]
    fn sign_map_examples() {
        let g = Arc::new(Grid::unit(&[3]).unwrap());
        let u = VectorField::new(g, 1, vec![c(0.0, 0.0), c(3.0, -4.0), c(0.6, 0.8)]).unwrap();
        let s = sgn_field(&u);
        assert_eq!(s.values()[0], c(0.0, 0.0));
        assert!((s.values()[1] - c(0.6, -0.8)).norm() < 1e-16);
        assert!((s.values()[2] - c(0.6, 0.8)).norm() < 1e-16);
    }

    #[test]
    fn duality_map_examples() {
        let g = Arc::new(Grid::unit(&[3]).unwrap());
        let u = VectorField::new(g, 1, vec![c(2.0, 0.0), c(0.0, 0.0), c(-0.5, 1.5)]).unwrap();
        let two = duality_map(&u, PExponent::new(2.0).unwrap());
        for (a, b) in two.values().iter().zip(u.values()) {
            assert!((a - b).norm() < 1e-15);
        }
        let three = duality_map(&u, PExponent::new(3.0).unwrap());
        assert!((three.values()[0] - c(4.0, 0.0)).norm() < 1e-15);
        // zero stays zero even where the exponent is negative
        let small = duality_map(&u, PExponent::new(1.3).unwrap());
        assert_eq!(small.values()[1], c(0.0, 0.0));
        assert!(small.is_finite());
    }
}
