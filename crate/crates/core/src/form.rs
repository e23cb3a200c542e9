//! Discrete sesquilinear form
//! `a(u, v) = sum_{k,l} int (c_kl d_l u, d_k v)_H dx`
//! with Q1 nodal elements, one-point (cell-center) quadrature and natural
//! Neumann boundary conditions.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coefficients::{raw_constants, CoefficientField, EllipticityConstants};
use crate::error::{LabError, Result};
use crate::field::VectorField;
use crate::grid::{Grid, MAX_DIM};
use crate::sum::CompensatedSum;

/// Compressed sparse row matrix over `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Largest `|r - c|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| (v - self.get(c, r).conj()).norm() <= tol))
    }
}

/// Assembled form together with the lumped mass and the coefficient
/// constants.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    grid: Arc<Grid>,
    m: usize,
    matrix: CsrMatrix,
    mass: Vec<f64>,
    constants: EllipticityConstants,
}

impl FormMatrix {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Trapezoid weights replicated `m` times.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn constants(&self) -> EllipticityConstants {
        self.constants
    }

    pub fn check_field(&self, u: &VectorField) -> Result<()> {
        if u.m() != self.m || *u.grid().as_ref() != *self.grid {
            return Err(LabError::shape("field does not match the form's grid or m"));
        }
        Ok(())
    }
}

/// Weight of corner offset `off` in the cell-center derivative along `axis`.
fn gradient_weight(grid: &Grid, off: [u8; MAX_DIM], axis: usize) -> f64 {
    let d = grid.dim();
    let sign = if off[axis] == 1 { 1.0 } else { -1.0 };
    sign / grid.spacing(axis) / (1u32 << (d - 1)) as f64
}

pub fn assemble_form(c: &CoefficientField) -> Result<FormMatrix> {
    let grid = c.grid().clone();
    let d = grid.dim();
    let m = c.m();
    let vol = grid.cell_volume();
    let size = grid.node_count() * m;

    let triplets: Vec<(usize, usize, Complex64)> = (0..grid.cell_count())
        .into_par_iter()
        .flat_map_iter(|cell| {
            let corners = grid.cell_corners(cell);
            let g: Vec<[f64; MAX_DIM]> = corners
                .iter()
                .map(|&(_, off)| {
                    let mut w = [0.0; MAX_DIM];
                    for (k, wk) in w.iter_mut().enumerate().take(d) {
                        *wk = gradient_weight(&grid, off, k);
                    }
                    w
                })
                .collect();
            let mut local = Vec::with_capacity(corners.len() * corners.len() * m * m);
            for (ia, &(na, _)) in corners.iter().enumerate() {
                for (ib, &(nb, _)) in corners.iter().enumerate() {
                    for a in 0..m {
                        for b in 0..m {
                            let mut v = Complex64::new(0.0, 0.0);
                            for k in 0..d {
                                for l in 0..d {
                                    v += c.entry(cell, k, l, a, b) * (g[ia][k] * g[ib][l]);
                                }
                            }
                            // row: test function (conjugated slot), column: trial
                            local.push((na * m + a, nb * m + b, v * vol));
                        }
                    }
                }
            }
            local
        })
        .collect();

    let matrix = CsrMatrix::from_triplets(size, triplets);
    let mass = grid.weights().iter().flat_map(|&w| std::iter::repeat_n(w, m)).collect();
    Ok(FormMatrix {
        grid,
        m,
        matrix,
        mass,
        constants: raw_constants(c),
    })
}

/// `a(u, v) = v^* A u`: linear in `u`, conjugate-linear in `v`.
pub fn apply_form(a: &FormMatrix, u: &VectorField, v: &VectorField) -> Result<Complex64> {
    a.check_field(u)?;
    a.check_field(v)?;
    let au = a.matrix.matvec(u.values());
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for (x, y) in au.iter().zip(v.values()) {
        let z = x * y.conj();
        re.add(z.re);
        im.add(z.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Cell-center gradients used by the assembly: entry
/// `(cell * d + k) * m + a` is `D_k u_a` on `cell`.
pub fn cell_gradients(u: &VectorField) -> Result<Vec<Complex64>> {
    let grid = u.grid();
    if !grid.has_cells() {
        return Err(LabError::invalid("gradients need at least two nodes per axis"));
    }
    let d = grid.dim();
    let m = u.m();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.cell_count() * d * m];
    for cell in 0..grid.cell_count() {
        for (node, off) in grid.cell_corners(cell) {
            let val = u.node(node);
            for k in 0..d {
                let w = gradient_weight(grid, off, k);
                for a in 0..m {
                    out[(cell * d + k) * m + a] += val[a] * w;
                }
            }
        }
    }
    Ok(out)
}

/// `sum_cells |cell| sum_k ||D_k u||_H^2`.
pub fn gradient_energy(u: &VectorField) -> Result<f64> {
    let g = cell_gradients(u)?;
    let vol = u.grid().cell_volume();
    Ok(vol * g.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_coefficients, Family};
    use crate::rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(grid: &Arc<Grid>, m: usize, seed: u64) -> VectorField {
        let mut r = rng::stream(seed, 1);
        let vals = (0..grid.node_count() * m)
            .map(|_| rng::complex_normal(&mut r))
            .collect();
        VectorField::new(grid.clone(), m, vals).unwrap()
    }

    #[test]
    fn linear_interpolant_energy_1d() {
        let g = Arc::new(Grid::unit(&[11]).unwrap());
        let coef = make_coefficients(g.clone(), 1, &Family::VectorLaplacian { scale: 1.0 }, 0).unwrap();
        let a = assemble_form(&coef).unwrap();
        let u = VectorField::from_fn(g.clone(), 1, |x, v| v[0] = c(x[0], 0.0));
        let v = VectorField::from_fn(g, 1, |x, v| v[0] = c(2.0 * x[0], 0.0));
        assert!((apply_form(&a, &u, &u).unwrap() - c(1.0, 0.0)).norm() < 1e-13);
        assert!((apply_form(&a, &u, &v).unwrap() - c(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn constants_in_kernel() {
        let g = Arc::new(Grid::unit(&[6, 7]).unwrap());
        let fam = Family::Random {
            ratio: 0.3,
            seed: Some(5),
            varying: true,
            bound: 2.0,
        };
        let coef = make_coefficients(g.clone(), 2, &fam, 0).unwrap();
        let a = assemble_form(&coef).unwrap();
        let one = VectorField::constant(g, &[c(1.0, -2.0), c(0.5, 0.0)]);
        let au = a.matrix().matvec(one.values());
        assert!(au.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn symmetric_real_coefficients_give_hermitian_matrix() {
        let g = Arc::new(Grid::unit(&[5, 4]).unwrap());
        let coef = make_coefficients(g, 2, &Family::VectorLaplacian { scale: 1.5 }, 0).unwrap();
        let a = assemble_form(&coef).unwrap();
        assert!(a.matrix().is_hermitian(1e-13));
    }

    #[test]
    fn sesquilinearity_and_hermitian_swap() {
        let g = Arc::new(Grid::unit(&[5, 5]).unwrap());
        let coef = make_coefficients(g.clone(), 1, &Family::VectorLaplacian { scale: 1.0 }, 0).unwrap();
        let a = assemble_form(&coef).unwrap();
        let u = random_field(&g, 1, 1);
        let v = random_field(&g, 1, 2);
        let lam = c(0.3, -1.7);
        let base = apply_form(&a, &u, &v).unwrap();
        assert!((apply_form(&a, &u.scale(lam), &v).unwrap() - lam * base).norm() < 1e-12);
        assert!((apply_form(&a, &u, &v.scale(lam)).unwrap() - lam.conj() * base).norm() < 1e-12);
        assert!((apply_form(&a, &v, &u).unwrap() - base.conj()).norm() < 1e-12);
    }

    #[test]
    fn garding_and_continuity_hold() {
        let g = Arc::new(Grid::unit(&[9, 8]).unwrap());
        for (fam, m) in [
            (
                Family::Antisymmetric {
                    b: Some(2.0),
                    ratio: None,
                },
                2,
            ),
            (
                Family::Random {
                    ratio: 0.2,
                    seed: Some(1),
                    varying: true,
                    bound: 3.0,
                },
                3,
            ),
        ] {
            let coef = make_coefficients(g.clone(), m, &fam, 0).unwrap();
            let a = assemble_form(&coef).unwrap();
            let k = a.constants();
            for s in 0..10 {
                let u = random_field(&g, m, 10 + s);
                let v = random_field(&g, m, 100 + s);
                let eu = gradient_energy(&u).unwrap();
                let ev = gradient_energy(&v).unwrap();
                let auu = apply_form(&a, &u, &u).unwrap().re;
                assert!(auu >= k.mu * eu - 1e-10 * eu.max(1.0));
                let auv = apply_form(&a, &u, &v).unwrap().norm();
                assert!(auv <= k.big_m * (eu * ev).sqrt() * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn stencil_touches_only_neighbours() {
        let g = Arc::new(Grid::unit(&[6, 6]).unwrap());
        let coef = make_coefficients(g.clone(), 2, &Family::VectorLaplacian { scale: 1.0 }, 0).unwrap();
        let a = assemble_form(&coef).unwrap();
        for r in 0..a.matrix().dim() {
            let ni = g.multi_index(r / 2);
            for (cidx, _) in a.matrix().row(r) {
                let nj = g.multi_index(cidx / 2);
                assert!(ni[0].abs_diff(nj[0]) <= 1 && ni[1].abs_diff(nj[1]) <= 1);
            }
        }
        assert!(a.matrix().bandwidth() <= (6 + 1) * 2 + 1);
    }
}
