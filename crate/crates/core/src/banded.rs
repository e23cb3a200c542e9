//! Banded LU for shifted form matrices `diag(mass) + theta A`.
//!
//! The Hermitian part of these matrices is positive definite (positive
//! lumped mass plus an accretive form), so elimination without pivoting
//! cannot hit a zero pivot. Solves are polished by iterative refinement
//! against the sparse matrix until the relative residual drops below the
//! requested tolerance.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::form::CsrMatrix;

pub const MAX_REFINEMENTS: usize = 8;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    band: Vec<Complex64>,
}

impl BandedLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    /// Factors `diag(shift) + theta * a`.
    pub fn factor(a: &CsrMatrix, shift: &[f64], theta: f64) -> Result<Self> {
        let n = a.dim();
        if shift.len() != n {
            return Err(LabError::shape("shift length differs from matrix dimension"));
        }
        let bw = a.bandwidth();
        let width = 2 * bw + 1;
        let mut lu = BandedLu {
            n,
            bw,
            band: vec![Complex64::new(0.0, 0.0); n * width],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                let k = lu.idx(r, c);
                lu.band[k] += v * theta;
            }
            let k = lu.idx(r, r);
            lu.band[k] += shift[r];
        }
        for k in 0..n {
            let piv = lu.band[lu.idx(k, k)];
            if !(piv.norm() > 0.0 && piv.re.is_finite() && piv.im.is_finite()) {
                return Err(LabError::NumericalFailure {
                    context: format!("banded LU pivot {k}"),
                    iterations: k,
                    residual: piv.norm(),
                });
            }
            let end = (k + bw + 1).min(n);
            for i in k + 1..end {
                let ik = lu.idx(i, k);
                if lu.band[ik] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let l = lu.band[ik] / piv;
                lu.band[ik] = l;
                let kk = lu.idx(k, k);
                let ii = lu.idx(i, k);
                // row k and row i are contiguous in j for j in k+1..end
                for off in 1..end - k {
                    let ukj = lu.band[kk + off];
                    lu.band[ii + off] -= l * ukj;
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// One forward/backward substitution.
    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = self.n;
        let bw = self.bw;
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut s = x[i];
            for j in start..i {
                s -= self.band[self.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + bw + 1).min(n);
            let mut s = x[i];
            for j in i + 1..end {
                s -= self.band[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.band[self.idx(i, i)];
        }
    }
}

/// Factorization plus the sparse operator it was built from, for residuals.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    lu: BandedLu,
    a: CsrMatrix,
    shift: Vec<f64>,
    theta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub relative_residual: f64,
    pub refinements: usize,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl ShiftedSolver {
    pub fn new(a: &CsrMatrix, shift: &[f64], theta: f64) -> Result<Self> {
        Ok(ShiftedSolver {
            lu: BandedLu::factor(a, shift, theta)?,
            a: a.clone(),
            shift: shift.to_vec(),
            theta,
        })
    }

    /// `(diag(shift) + theta A) x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.a.matvec(x);
        for ((yi, xi), s) in y.iter_mut().zip(x).zip(&self.shift) {
            *yi = *yi * self.theta + xi * s;
        }
        y
    }

    pub fn solve(&self, b: &[Complex64], rel_tol: f64) -> Result<(Vec<Complex64>, SolveStats)> {
        let bnorm = norm2(b);
        let mut x = b.to_vec();
        self.lu.solve_in_place(&mut x);
        if bnorm == 0.0 {
            return Ok((
                x,
                SolveStats {
                    relative_residual: 0.0,
                    refinements: 0,
                },
            ));
        }
        let mut rel = f64::INFINITY;
        for it in 0..=MAX_REFINEMENTS {
            let ax = self.apply(&x);
            let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = norm2(&r) / bnorm;
            if rel <= rel_tol {
                return Ok((
                    x,
                    SolveStats {
                        relative_residual: rel,
                        refinements: it,
                    },
                ));
            }
            self.lu.solve_in_place(&mut r);
            for (xi, ri) in x.iter_mut().zip(&r) {
                *xi += ri;
            }
        }
        Err(LabError::NumericalFailure {
            context: "shifted linear solve".into(),
            iterations: MAX_REFINEMENTS,
            residual: rel,
        })
    }
}
