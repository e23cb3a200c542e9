//! Orthogonal projection of `L_2(Omega, H)` onto the unit ball of
//! `L_p(Omega, H)`.
//!
//! The normal cone at a boundary point `u` is the ray through the duality
//! map `||u||^{p-1} sgn u`, so `f = Pf + t ||Pf||^{p-1} sgn Pf` for a single
//! multiplier `t >= 0`. At every node `Pf` is therefore a nonnegative
//! multiple `rho_i sgn f_i` of `f_i`, where `rho_i + t rho_i^{p-1} = ||f_i||`.
//! The multiplier solves the scalar equation `sum_i w_i rho_i(t)^p = 1`,
//! whose left side is continuous and strictly decreasing in `t`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{l2_inner, lp_norm, norm_h, PExponent, VectorField};
use crate::grid::Grid;
use crate::rng;
use crate::sum::CompensatedSum;

pub const OUTER_TOL: f64 = 1e-12;
pub const INNER_TOL: f64 = 1e-14;
pub const OUTER_MAX_ITER: usize = 200;
pub const INNER_MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub projected: VectorField,
    pub multiplier: f64,
    /// `|sum w rho^p - 1|` when the constraint is active, zero otherwise.
    pub outer_residual: f64,
    /// Largest scaled residual of the per-node radial equations.
    pub inner_residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

/// Diagnostics without the field, for JSON output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProjectionSummary {
    pub t: f64,
    pub outer_residual: f64,
    pub inner_residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

impl ProjectionResult {
    pub fn summary(&self) -> ProjectionSummary {
        ProjectionSummary {
            t: self.multiplier,
            outer_residual: self.outer_residual,
            inner_residual: self.inner_residual,
            outer_iterations: self.outer_iterations,
            inner_iterations: self.inner_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RadialRoot {
    pub rho: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Unique `rho` in `[0, s]` with `rho + t rho^{p-1} = s`.
pub fn pointwise_radial_solve(s: f64, t: f64, p: PExponent, tol: f64) -> Result<f64> {
    radial_root(s, t, p.p(), tol).map(|r| r.rho)
}

pub(crate) fn radial_root(s: f64, t: f64, p: f64, tol: f64) -> Result<RadialRoot> {
    if !(s.is_finite() && t.is_finite()) || s < 0.0 || t < 0.0 {
        return Err(LabError::invalid(format!(
            "radial solve needs finite nonnegative s and t, got s = {s}, t = {t}"
        )));
    }
    if s == 0.0 {
        return Ok(RadialRoot {
            rho: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    if t == 0.0 {
        return Ok(RadialRoot {
            rho: s,
            residual: 0.0,
            iterations: 0,
        });
    }
    let e = p - 1.0;
    let phi = |rho: f64| rho + t * rho.powf(e) - s;
    let scale = s.max(1.0);
    let target = tol * scale;

    // Both s and (s/t)^{1/(p-1)} bound the root from above.
    let mut hi = s.min((s / t).powf(1.0 / e));
    let mut lo = 0.0;
    let mut rho = hi;
    let mut val = phi(rho);
    if val.abs() <= target {
        return Ok(RadialRoot {
            rho,
            residual: val.abs() / scale,
            iterations: 0,
        });
    }
    for it in 1..=INNER_MAX_ITER {
        if val > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        let deriv = 1.0 + t * e * rho.powf(e - 1.0);
        let newton = rho - val / deriv;
        rho = if deriv.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        val = phi(rho);
        if val.abs() <= target {
            return Ok(RadialRoot {
                rho,
                residual: val.abs() / scale,
                iterations: it,
            });
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            // bracket collapsed to adjacent floats; rounding bounds the residual
            let best = if phi(lo).abs() < phi(hi).abs() { lo } else { hi };
            let r = phi(best).abs();
            return Ok(RadialRoot {
                rho: best,
                residual: r / scale,
                iterations: it,
            });
        }
    }
    Err(LabError::NumericalFailure {
        context: "radial solve".into(),
        iterations: INNER_MAX_ITER,
        residual: val.abs() / scale,
    })
}

struct RadialState {
    rho: Vec<f64>,
    excess: f64,
    slope: f64,
    inner_residual: f64,
    inner_iterations: usize,
}

/// Evaluates `g(t) = sum w rho^p - 1` and `g'(t)`.
fn evaluate(norms: &[f64], weights: &[f64], t: f64, p: f64) -> Result<RadialState> {
    let mut rho = Vec::with_capacity(norms.len());
    let mut mass = CompensatedSum::default();
    let mut slope = CompensatedSum::default();
    let mut inner_residual: f64 = 0.0;
    let mut inner_iterations = 0;
    for (&s, &w) in norms.iter().zip(weights) {
        let root = radial_root(s, t, p, INNER_TOL)?;
        inner_residual = inner_residual.max(root.residual);
        inner_iterations += root.iterations;
        let r = root.rho;
        if r > 0.0 {
            let rp1 = r.powf(p - 1.0);
            mass.add(w * rp1 * r);
            // d rho / dt = -rho^{p-1} / (1 + t (p-1) rho^{p-2})
            let drho = -rp1 / (1.0 + t * (p - 1.0) * rp1 / r);
            slope.add(w * p * rp1 * drho);
        }
        rho.push(r);
    }
    Ok(RadialState {
        rho,
        excess: mass.value() - 1.0,
        slope: slope.value(),
        inner_residual,
        inner_iterations,
    })
}

/// Projects `f` onto `{ u : ||u||_p <= 1 }` in the weighted L_2 geometry.
///
/// `tol` bounds `|sum w rho^p - 1|` for active constraints; pass
/// [`OUTER_TOL`] for the default.
pub fn project_onto_lp_ball(f: &VectorField, p: PExponent, tol: f64) -> Result<ProjectionResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(LabError::invalid("projection tolerance must be positive"));
    }
    let norm = lp_norm(f, p)?;
    if norm <= 1.0 {
        return Ok(ProjectionResult {
            projected: f.clone(),
            multiplier: 0.0,
            outer_residual: 0.0,
            inner_residual: 0.0,
            outer_iterations: 0,
            inner_iterations: 0,
        });
    }
    let pp = p.p();
    let norms = f.pointwise_norms();
    let weights = f.grid().weights();

    let mut outer = 0usize;
    let mut inner_total = 0usize;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut state = evaluate(&norms, weights, hi, pp)?;
    inner_total += state.inner_iterations;
    // grow the bracket until g(hi) < 0
    while state.excess >= 0.0 {
        outer += 1;
        if outer > OUTER_MAX_ITER {
            return Err(LabError::NumericalFailure {
                context: "bracketing the projection multiplier".into(),
                iterations: outer,
                residual: state.excess,
            });
        }
        lo = hi;
        hi *= 4.0;
        state = evaluate(&norms, weights, hi, pp)?;
        inner_total += state.inner_iterations;
    }

    // Safeguarded Newton, starting from the bisection midpoint.
    let mut t = 0.5 * (lo + hi);
    loop {
        outer += 1;
        state = evaluate(&norms, weights, t, pp)?;
        inner_total += state.inner_iterations;
        if state.excess.abs() <= tol {
            break;
        }
        if outer >= OUTER_MAX_ITER {
            return Err(LabError::NumericalFailure {
                context: "projection multiplier".into(),
                iterations: outer,
                residual: state.excess.abs(),
            });
        }
        if state.excess > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            if state.excess.abs() <= tol.max(1e-10) {
                break;
            }
            return Err(LabError::NumericalFailure {
                context: "projection multiplier (bracket collapsed)".into(),
                iterations: outer,
                residual: state.excess.abs(),
            });
        }
        let newton = t - state.excess / state.slope;
        t = if state.slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }

    let rho = &state.rho;
    let projected = {
        let mut k = 0;
        f.map_nodes(|src, dst| {
            let s = norm_h(src);
            if s > 0.0 {
                let scale = rho[k] / s;
                for (d, z) in dst.iter_mut().zip(src) {
                    *d = z * scale;
                }
            }
            k += 1;
        })
    };
    Ok(ProjectionResult {
        projected,
        multiplier: t,
        outer_residual: state.excess.abs(),
        inner_residual: state.inner_residual,
        outer_iterations: outer,
        inner_iterations: inner_total,
    })
}

/// Random element of the unit L_p ball: a Gaussian field rescaled to a
/// uniformly drawn radius in `[0, 1]`.
pub fn random_ball_element<R: Rng + ?Sized>(grid: &Arc<Grid>, m: usize, p: PExponent, rng: &mut R) -> VectorField {
    let n = grid.node_count() * m;
    let values: Vec<Complex64> = (0..n).map(|_| rng::complex_normal(rng)).collect();
    let g = VectorField::new(grid.clone(), m, values).expect("shape by construction");
    let norm = g.pth_power_sum(p.p()).powf(1.0 / p.p());
    let radius: f64 = rng.random();
    if norm > 0.0 {
        g.scale_real(radius / norm)
    } else {
        g
    }
}

/// `max_v Re (f - Pf, v - Pf)` over `samples` random `v` in the ball, with
/// `v = Pf` always included. Non-positive for an exact projection.
pub fn variational_residual(
    f: &VectorField,
    result: &ProjectionResult,
    p: PExponent,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let pf = &result.projected;
    f.check_compatible(pf)?;
    let h = f.sub(pf);
    let mut rng = rng::stream(seed, rng::stream_id(0x5052, 0));
    // v = Pf contributes exactly zero
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let v = random_ball_element(f.grid(), f.m(), p, &mut rng);
        let r = l2_inner(&h, &v.sub(pf))?.re;
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::l2_norm;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn radial_examples() {
        let p2 = PExponent::new(2.0).unwrap();
        let p3 = PExponent::new(3.0).unwrap();
        assert_eq!(pointwise_radial_solve(2.5, 0.0, p3, 1e-14).unwrap(), 2.5);
        assert!((pointwise_radial_solve(3.0, 2.0, p2, 1e-14).unwrap() - 1.0).abs() < 1e-14);
        assert!((pointwise_radial_solve(2.0, 1.0, p3, 1e-14).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(pointwise_radial_solve(0.0, 5.0, p3, 1e-14).unwrap(), 0.0);
        assert!(pointwise_radial_solve(-1.0, 1.0, p3, 1e-14).is_err());
        assert!(pointwise_radial_solve(1.0, -1.0, p3, 1e-14).is_err());
    }

    #[test]
    fn radial_small_p_is_stiff_but_solved() {
        let p = PExponent::new(1.05).unwrap();
        for &(s, t) in &[(1e-8, 1e3), (1e-3, 10.0), (5.0, 1e6), (1e3, 1e-3)] {
            let rho = pointwise_radial_solve(s, t, p, 1e-14).unwrap();
            assert!((0.0..=s).contains(&rho));
            let r = rho + t * rho.powf(p.p() - 1.0) - s;
            assert!(r.abs() <= 1e-13 * s.max(1.0), "s={s} t={t} r={r}");
        }
    }

    #[test]
    fn inside_ball_is_fixed() {
        let g = Arc::new(Grid::unit(&[4]).unwrap());
        let f = VectorField::new(g, 1, vec![c(0.5), c(-0.2), c(0.1), c(0.9)]).unwrap();
        let r = project_onto_lp_ball(&f, PExponent::new(4.0).unwrap(), OUTER_TOL).unwrap();
        assert_eq!(r.multiplier, 0.0);
        assert_eq!(r.projected, f);
        let res = variational_residual(&f, &r, PExponent::new(4.0).unwrap(), 20, 1).unwrap();
        assert!(res <= 0.0);
    }

    #[test]
    fn hilbert_ball_is_radial_scaling() {
        let g = Arc::new(Grid::unit(&[6, 5]).unwrap());
        let mut rng = rng::stream(11, 0);
        let vals = (0..g.node_count() * 2)
            .map(|_| rng::complex_normal(&mut rng) * 3.0)
            .collect();
        let f = VectorField::new(g, 2, vals).unwrap();
        let p = PExponent::new(2.0).unwrap();
        let r = project_onto_lp_ball(&f, p, OUTER_TOL).unwrap();
        let expect = f.scale_real(1.0 / l2_norm(&f).unwrap());
        let err = l2_norm(&r.projected.sub(&expect)).unwrap();
        assert!(err <= 1e-12, "err = {err}");
        let res = variational_residual(&f, &r, p, 1000, 3).unwrap();
        assert!(res <= 1e-10, "residual {res}");
    }

    #[test]
    fn two_node_quartic_matches_grid_search() {
        // f = (2, 1), w = (1/2, 1/2), p = 4
        let g = Arc::new(Grid::unit(&[2]).unwrap());
        let f = VectorField::new(g, 1, vec![c(2.0), c(1.0)]).unwrap();
        let r = project_onto_lp_ball(&f, PExponent::new(4.0).unwrap(), OUTER_TOL).unwrap();
        // Brute force over the boundary curve 0.5 u1^4 + 0.5 u2^4 = 1 at
        // resolution 1e-4 in u1.
        let limit = 2f64.powf(0.25);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let steps = (2.0 * limit / 1e-4) as i64;
        for k in 0..=steps {
            let u1 = -limit + k as f64 * 1e-4;
            let rest = (2.0 - u1.powi(4)).max(0.0).powf(0.25);
            for u2 in [rest, -rest] {
                let obj = 0.5 * (2.0 - u1).powi(2) + 0.5 * (1.0 - u2).powi(2);
                if obj < best.0 {
                    best = (obj, u1, u2);
                }
            }
        }
        let v = r.projected.values();
        assert!((v[0].re - best.1).abs() < 1e-3);
        assert!((v[1].re - best.2).abs() < 1e-3);
    }
}
