//! Coefficient fields `c_kl(x)` and their ellipticity constants.
//!
//! A coefficient field stores, for every grid cell, the `(dm) x (dm)` block
//! matrix `C(x) = [c_kl(x)]` row-major: entry `(k m + a, l m + b)` is
//! `(c_kl)_{ab}`. With `xi = (xi_1, ..., xi_d)` stacked, the ellipticity
//! condition reads `Re (C xi, xi) >= mu |xi|^2` and the bound reads
//! `|C xi| <= M |xi|`.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityConstants {
    pub mu: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
}

impl EllipticityConstants {
    pub fn ratio(&self) -> f64 {
        self.mu / self.big_m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    grid: Arc<Grid>,
    m: usize,
    blocks: Vec<Complex64>,
}

/// Coefficient families understood by [`make_coefficients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `c_kl = scale * delta_kl * I_m`.
    VectorLaplacian {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `C = I + b K` with `K` real, skew-symmetric, singular values in
    /// `{0, 1}`; `mu/M = 1/sqrt(1 + b^2)`. Give either `b` or `ratio`.
    Antisymmetric {
        #[serde(default)]
        b: Option<f64>,
        #[serde(default)]
        ratio: Option<f64>,
    },
    /// Random normal blocks `C = M Q diag(lambda) Q*` with spectrum shaped
    /// so that `min Re lambda = ratio` and `max |lambda| = 1`.
    Random {
        ratio: f64,
        #[serde(default)]
        seed: Option<u64>,
        /// Draw an independent block per cell instead of one global block.
        #[serde(default)]
        varying: bool,
        #[serde(default = "one")]
        bound: f64,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl CoefficientField {
    /// `blocks` holds `cell_count` row-major `(dm) x (dm)` matrices.
    pub fn new(grid: Arc<Grid>, m: usize, blocks: Vec<Complex64>) -> Result<Self> {
        if m == 0 {
            return Err(LabError::invalid("m must be at least 1"));
        }
        if !grid.has_cells() {
            return Err(LabError::invalid("coefficient fields need at least two nodes per axis"));
        }
        let dm = grid.dim() * m;
        if blocks.len() != grid.cell_count() * dm * dm {
            return Err(LabError::shape(format!(
                "expected {} cells of {dm}x{dm} blocks, got {} entries",
                grid.cell_count(),
                blocks.len()
            )));
        }
        if blocks.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(LabError::invalid("coefficients must be finite"));
        }
        Ok(CoefficientField { grid, m, blocks })
    }

    /// Same block in every cell.
    pub fn uniform(grid: Arc<Grid>, m: usize, block: &DMatrix<Complex64>) -> Result<Self> {
        let dm = grid.dim() * m;
        if block.nrows() != dm || block.ncols() != dm {
            return Err(LabError::shape(format!("block must be {dm}x{dm}")));
        }
        let row_major: Vec<Complex64> = (0..dm)
            .flat_map(|r| (0..dm).map(move |c| (r, c)))
            .map(|(r, c)| block[(r, c)])
            .collect();
        let blocks = (0..grid.cell_count()).flat_map(|_| row_major.iter().copied()).collect();
        CoefficientField::new(grid, m, blocks)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn block_size(&self) -> usize {
        self.grid.dim() * self.m
    }

    pub fn raw_blocks(&self) -> &[Complex64] {
        &self.blocks
    }

    /// Row-major block of cell `c`.
    pub fn block_slice(&self, c: usize) -> &[Complex64] {
        let n = self.block_size() * self.block_size();
        &self.blocks[c * n..(c + 1) * n]
    }

    pub fn block(&self, c: usize) -> DMatrix<Complex64> {
        let dm = self.block_size();
        DMatrix::from_row_slice(dm, dm, self.block_slice(c))
    }

    /// `(c_kl)_{ab}` in cell `c`.
    pub fn entry(&self, c: usize, k: usize, l: usize, a: usize, b: usize) -> Complex64 {
        let dm = self.block_size();
        self.block_slice(c)[(k * self.m + a) * dm + l * self.m + b]
    }
}

/// `(lambda_min(Re C), ||C||_2)` for one block.
pub fn block_constants(block: &DMatrix<Complex64>) -> EllipticityConstants {
    let herm = (block + block.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mu = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let big_m = block.singular_values().iter().copied().fold(0.0, f64::max);
    EllipticityConstants { mu, big_m }
}

/// Minimum over cells of `lambda_min(Re C(x))` and maximum of `||C(x)||_2`.
///
/// Non-elliptic fields yield [`LabError::NonElliptic`] carrying the
/// constants.
pub fn ellipticity_constants(c: &CoefficientField) -> Result<EllipticityConstants> {
    let consts = raw_constants(c);
    if consts.mu > 0.0 {
        Ok(consts)
    } else {
        Err(LabError::NonElliptic { constants: consts })
    }
}

/// Constants without the ellipticity check.
pub fn raw_constants(c: &CoefficientField) -> EllipticityConstants {
    let n = c.block_size() * c.block_size();
    let mut mu = f64::INFINITY;
    let mut big_m: f64 = 0.0;
    let mut last: Option<(&[Complex64], EllipticityConstants)> = None;
    for cell in 0..c.grid.cell_count() {
        let slice = &c.blocks[cell * n..(cell + 1) * n];
        let k = match last {
            Some((prev, k)) if prev == slice => k,
            _ => {
                let k = block_constants(&c.block(cell));
                last = Some((slice, k));
                k
            }
        };
        mu = mu.min(k.mu);
        big_m = big_m.max(k.big_m);
    }
    EllipticityConstants { mu, big_m }
}

/// Real skew matrix pairing index `j` with `j + floor(n/2)`.
pub fn pairing_skew(n: usize) -> DMatrix<Complex64> {
    let half = n / 2;
    let mut k = DMatrix::zeros(n, n);
    for j in 0..half {
        k[(j, j + half)] = Complex64::new(1.0, 0.0);
        k[(j + half, j)] = Complex64::new(-1.0, 0.0);
    }
    k
}

pub fn antisymmetric_block(d: usize, m: usize, b: f64) -> DMatrix<Complex64> {
    let n = d * m;
    DMatrix::identity(n, n) + pairing_skew(n) * Complex64::new(b, 0.0)
}

/// `b` giving `mu/M = ratio` for the antisymmetric family.
pub fn antisymmetric_b_for_ratio(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(LabError::InfeasibleRatio(ratio));
    }
    Ok((1.0 / (ratio * ratio) - 1.0).max(0.0).sqrt())
}

fn random_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng::complex_normal(rng));
    let qr = g.qr();
    let (q, r) = qr.unpack();
    // fix the phases so Q is Haar distributed
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Random normal block with `lambda_min(Re C) = ratio * bound` and
/// `||C||_2 = bound`.
pub fn random_block<R: rand::Rng + ?Sized>(
    n: usize,
    ratio: f64,
    bound: f64,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(LabError::InfeasibleRatio(ratio));
    }
    if !(bound.is_finite() && bound > 0.0) {
        return Err(LabError::invalid("coefficient bound must be positive"));
    }
    let rim = |re: f64| (1.0 - re * re).max(0.0).sqrt();
    let mut eigs = Vec::with_capacity(n);
    if n == 1 {
        eigs.push(Complex64::new(ratio, rim(ratio)));
    } else {
        eigs.push(Complex64::new(1.0, 0.0));
        let y = rim(ratio) * rng::uniform(rng, -1.0, 1.0);
        eigs.push(Complex64::new(ratio, y));
        for _ in 2..n {
            let re = rng::uniform(rng, ratio, 1.0);
            let im = rim(re) * rng::uniform(rng, -1.0, 1.0);
            eigs.push(Complex64::new(re, im));
        }
    }
    let q = random_unitary(n, rng);
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigs));
    Ok(&q * diag * q.adjoint() * Complex64::new(bound, 0.0))
}

/// Builds a coefficient field on `grid` with `m` components.
///
/// `seed` is used by the random family when the family itself carries no
/// seed.
pub fn make_coefficients(grid: Arc<Grid>, m: usize, family: &Family, seed: u64) -> Result<CoefficientField> {
    let d = grid.dim();
    let n = d * m;
    match family {
        Family::VectorLaplacian { scale } => {
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(LabError::invalid("Laplacian scale must be positive"));
            }
            let block = DMatrix::<Complex64>::identity(n, n) * Complex64::new(*scale, 0.0);
            CoefficientField::uniform(grid, m, &block)
        }
        Family::Antisymmetric { b, ratio } => {
            let b = match (b, ratio) {
                (Some(b), None) => *b,
                (None, Some(r)) => antisymmetric_b_for_ratio(*r)?,
                _ => return Err(LabError::invalid("antisymmetric family needs exactly one of b, ratio")),
            };
            if !b.is_finite() {
                return Err(LabError::invalid("b must be finite"));
            }
            if n < 2 && b != 0.0 {
                return Err(LabError::invalid("antisymmetric perturbation needs d*m >= 2"));
            }
            CoefficientField::uniform(grid, m, &antisymmetric_block(d, m, b))
        }
        Family::Random {
            ratio,
            seed: own,
            varying,
            bound,
        } => {
            let mut rng = rng::stream(own.unwrap_or(seed), rng::stream_id(0xC0EF, 0));
            if *varying {
                let cells = grid.cell_count();
                let mut blocks = Vec::with_capacity(cells * n * n);
                for _ in 0..cells {
                    let blk = random_block(n, *ratio, *bound, &mut rng)?;
                    for r in 0..n {
                        for c in 0..n {
                            blocks.push(blk[(r, c)]);
                        }
                    }
                }
                CoefficientField::new(grid, m, blocks)
            } else {
                let blk = random_block(n, *ratio, *bound, &mut rng)?;
                CoefficientField::uniform(grid, m, &blk)
            }
        }
        Family::File { path } => {
            let c = crate::io::read_coefficients(path, &grid)?;
            if c.m() != m {
                return Err(LabError::shape(format!(
                    "coefficient file has m = {}, config asks for {m}",
                    c.m()
                )));
            }
            Ok(c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize) -> Arc<Grid> {
        Arc::new(Grid::unit(&[n, n]).unwrap())
    }

    #[test]
    fn laplacian_constants() {
        for m in 1..=3 {
            let c = make_coefficients(grid2(4), m, &Family::VectorLaplacian { scale: 1.0 }, 0).unwrap();
            let k = ellipticity_constants(&c).unwrap();
            assert!((k.mu - 1.0).abs() < 1e-14 && (k.big_m - 1.0).abs() < 1e-14);
            let c = make_coefficients(grid2(4), m, &Family::VectorLaplacian { scale: 2.0 }, 0).unwrap();
            let k = ellipticity_constants(&c).unwrap();
            assert!((k.mu - 2.0).abs() < 1e-14 && (k.big_m - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn antisymmetric_scalar_2d() {
        for b in [0.3, 1.0, 4.0] {
            let c = make_coefficients(
                grid2(3),
                1,
                &Family::Antisymmetric {
                    b: Some(b),
                    ratio: None,
                },
                0,
            )
            .unwrap();
            // c = [[1, b], [-b, 1]]
            assert_eq!(c.entry(0, 0, 1, 0, 0), Complex64::new(b, 0.0));
            assert_eq!(c.entry(0, 1, 0, 0, 0), Complex64::new(-b, 0.0));
            let k = ellipticity_constants(&c).unwrap();
            assert!((k.mu - 1.0).abs() < 1e-12);
            assert!((k.big_m - (1.0 + b * b).sqrt()).abs() < 1e-12);
        }
        let c = make_coefficients(
            grid2(3),
            2,
            &Family::Antisymmetric {
                b: Some(1.0),
                ratio: None,
            },
            0,
        )
        .unwrap();
        let k = ellipticity_constants(&c).unwrap();
        assert!((k.ratio() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn antisymmetric_needs_two_components() {
        let g = Arc::new(Grid::unit(&[5]).unwrap());
        let fam = Family::Antisymmetric {
            b: Some(1.0),
            ratio: None,
        };
        assert!(make_coefficients(g.clone(), 1, &fam, 0).is_err());
        let c = make_coefficients(g, 3, &fam, 0).unwrap();
        let k = ellipticity_constants(&c).unwrap();
        assert!((k.ratio() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn random_family_hits_ratio() {
        for (d, m) in [(1, 1), (1, 3), (2, 1), (2, 2), (2, 3)] {
            let g = Arc::new(if d == 1 {
                Grid::unit(&[5]).unwrap()
            } else {
                Grid::unit(&[4, 3]).unwrap()
            });
            for ratio in [0.1, 0.5, 1.0] {
                for varying in [false, true] {
                    let fam = Family::Random {
                        ratio,
                        seed: Some(9),
                        varying,
                        bound: 1.5,
                    };
                    let c = make_coefficients(g.clone(), m, &fam, 0).unwrap();
                    let k = ellipticity_constants(&c).unwrap();
                    assert!((k.ratio() - ratio).abs() < 1e-6, "d={d} m={m} ratio={ratio}: {k:?}");
                    assert!((k.big_m - 1.5).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn infeasible_ratio_rejected() {
        let fam = Family::Random {
            ratio: 1.5,
            seed: None,
            varying: false,
            bound: 1.0,
        };
        assert!(matches!(
            make_coefficients(grid2(3), 1, &fam, 0),
            Err(LabError::InfeasibleRatio(_))
        ));
        assert!(antisymmetric_b_for_ratio(1.2).is_err());
        assert!((antisymmetric_b_for_ratio(0.5f64.sqrt()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_elliptic_reports_constants() {
        let g = grid2(3);
        let block = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let c = CoefficientField::uniform(g, 1, &block).unwrap();
        match ellipticity_constants(&c) {
            Err(LabError::NonElliptic { constants }) => {
                assert!((constants.mu + 1.0).abs() < 1e-14);
                assert!((constants.big_m - 1.0).abs() < 1e-14);
            }
            other => panic!("expected non-elliptic, got {other:?}"),
        }
    }

    #[test]
    fn constants_invariant_under_refinement() {
        let fam = Family::Random {
            ratio: 0.4,
            seed: Some(3),
            varying: false,
            bound: 1.0,
        };
        let a = ellipticity_constants(&make_coefficients(grid2(5), 2, &fam, 0).unwrap()).unwrap();
        let b = ellipticity_constants(&make_coefficients(grid2(17), 2, &fam, 0).unwrap()).unwrap();
        assert!((a.mu - b.mu).abs() < 1e-14 && (a.big_m - b.big_m).abs() < 1e-14);
    }
}
