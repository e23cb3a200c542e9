//! Time stepping for `W u' = -A u` and L_p norm trajectories.

use serde::{Deserialize, Serialize};

use crate::banded::ShiftedSolver;
use crate::error::{LabError, Result};
use crate::field::{lp_norm, PExponent, VectorField};
use crate::form::FormMatrix;

/// Relative residual demanded of every linear solve.
pub const SOLVE_TOL: f64 = 1e-12;

/// Ratios above `1 + REPORT_TOL` are flagged as contraction failures.
pub const REPORT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
}

impl StepperConfig {
    pub fn new(scheme: Scheme, dt: f64, horizon: f64) -> Result<Self> {
        let cfg = StepperConfig { scheme, dt, horizon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(LabError::invalid("dt must be positive"));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(LabError::invalid("horizon must be finite and at least dt"));
        }
        Ok(())
    }

    /// Number of steps of size `dt` needed to reach the horizon.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// A factorised one-step map for a fixed form and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    scheme: Scheme,
    dt: f64,
    m: usize,
    grid: std::sync::Arc<crate::grid::Grid>,
    mass: Vec<f64>,
    lhs: ShiftedSolver,
    /// `W - dt/2 A` for Crank-Nicolson right-hand sides.
    explicit: Option<ShiftedSolverRhs>,
}

#[derive(Debug, Clone)]
struct ShiftedSolverRhs {
    a: crate::form::CsrMatrix,
    theta: f64,
}

impl Stepper {
    pub fn new(a: &FormMatrix, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(LabError::invalid("dt must be positive"));
        }
        let theta = match scheme {
            Scheme::ImplicitEuler => dt,
            Scheme::CrankNicolson => 0.5 * dt,
        };
        let lhs = ShiftedSolver::new(a.matrix(), a.mass(), theta)?;
        let explicit = match scheme {
            Scheme::ImplicitEuler => None,
            Scheme::CrankNicolson => Some(ShiftedSolverRhs {
                a: a.matrix().clone(),
                theta: -0.5 * dt,
            }),
        };
        Ok(Stepper {
            scheme,
            dt,
            m: a.m(),
            grid: a.grid().clone(),
            mass: a.mass().to_vec(),
            lhs,
            explicit,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, u: &VectorField) -> Result<VectorField> {
        if u.m() != self.m || **u.grid() != *self.grid {
            return Err(LabError::shape("field does not match the stepper"));
        }
        let x = u.values();
        let rhs: Vec<_> = match &self.explicit {
            None => x.iter().zip(&self.mass).map(|(xi, w)| xi * w).collect(),
            Some(e) => {
                let ax = e.a.matvec(x);
                x.iter()
                    .zip(&self.mass)
                    .zip(&ax)
                    .map(|((xi, w), axi)| xi * w + axi * e.theta)
                    .collect()
            }
        };
        let (next, _) = self.lhs.solve(&rhs, SOLVE_TOL)?;
        VectorField::new(u.grid().clone(), self.m, next)
    }
}

/// One step of `cfg.scheme` with step size `cfg.dt`.
pub fn step(a: &FormMatrix, u: &VectorField, cfg: &StepperConfig) -> Result<VectorField> {
    cfg.validate()?;
    a.check_field(u)?;
    Stepper::new(a, cfg.scheme, cfg.dt)?.step(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub scheme: Scheme,
    pub dt: f64,
    pub times: Vec<f64>,
    pub p_values: Vec<f64>,
    /// `ratios[j][k] = ||u(t_k)||_{p_j} / ||u_0||_{p_j}`.
    pub ratios: Vec<Vec<f64>>,
    pub worst: Vec<f64>,
    /// Exponents whose worst ratio exceeds `1 + REPORT_TOL`.
    pub flagged: Vec<f64>,
}

impl TrajectoryReport {
    pub fn worst_ratio(&self) -> f64 {
        self.worst.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with a `time` column and one ratio column per exponent.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time");
        for p in &self.p_values {
            s.push_str(&format!(",ratio_p{p}"));
        }
        s.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{t:.17e}"));
            for r in &self.ratios {
                s.push_str(&format!(",{:.17e}", r[k]));
            }
            s.push('\n');
        }
        s
    }
}

/// Evolves `u0` and records L_p norm ratios after every step.
pub fn evolve_and_measure(
    a: &FormMatrix,
    u0: &VectorField,
    p_list: &[PExponent],
    cfg: &StepperConfig,
) -> Result<TrajectoryReport> {
    cfg.validate()?;
    a.check_field(u0)?;
    let stepper = Stepper::new(a, cfg.scheme, cfg.dt)?;
    evolve_with(&stepper, u0, p_list, cfg.steps())
}

/// As [`evolve_and_measure`] with a prebuilt stepper.
pub fn evolve_with(
    stepper: &Stepper,
    u0: &VectorField,
    p_list: &[PExponent],
    steps: usize,
) -> Result<TrajectoryReport> {
    if u0.is_zero() {
        return Err(LabError::invalid("initial field must be nonzero"));
    }
    let initial: Vec<f64> = p_list.iter().map(|&p| lp_norm(u0, p)).collect::<Result<_>>()?;
    let mut ratios = vec![Vec::with_capacity(steps); p_list.len()];
    let mut times = Vec::with_capacity(steps);
    let mut u = u0.clone();
    for k in 1..=steps {
        u = stepper.step(&u)?;
        times.push(k as f64 * stepper.dt());
        for (j, &p) in p_list.iter().enumerate() {
            ratios[j].push(lp_norm(&u, p)? / initial[j]);
        }
    }
    let worst: Vec<f64> = ratios.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect();
    let flagged = p_list
        .iter()
        .zip(&worst)
        .filter(|(_, &w)| w > 1.0 + REPORT_TOL)
        .map(|(p, _)| p.p())
        .collect();
    Ok(TrajectoryReport {
        scheme: stepper.scheme(),
        dt: stepper.dt(),
        times,
        p_values: p_list.iter().map(|p| p.p()).collect(),
        ratios,
        worst,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_coefficients, Family};
    use crate::field::l2_norm;
    use crate::form::assemble_form;
    use crate::grid::Grid;
    use crate::rng;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn laplacian(g: &Arc<Grid>, m: usize) -> FormMatrix {
        let c = make_coefficients(g.clone(), m, &Family::VectorLaplacian { scale: 1.0 }, 0).unwrap();
        assemble_form(&c).unwrap()
    }

    #[test]
    fn constants_are_stationary() {
        let g = Arc::new(Grid::unit(&[7, 6]).unwrap());
        let a = laplacian(&g, 2);
        let u = VectorField::constant(g, &[Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)]);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let cfg = StepperConfig::new(scheme, 0.1, 0.1).unwrap();
            let v = step(&a, &u, &cfg).unwrap();
            for (x, y) in v.values().iter().zip(u.values()) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn steps_are_l2_nonexpansive_and_conserve_mass() {
        let g = Arc::new(Grid::unit(&[9, 9]).unwrap());
        let c = make_coefficients(
            g.clone(),
            2,
            &Family::Antisymmetric {
                b: Some(3.0),
                ratio: None,
            },
            0,
        )
        .unwrap();
        let a = assemble_form(&c).unwrap();
        let mut r = rng::stream(4, 0);
        let vals = (0..g.node_count() * 2).map(|_| rng::complex_normal(&mut r)).collect();
        let u = VectorField::new(g, 2, vals).unwrap();
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let cfg = StepperConfig::new(scheme, 0.01, 0.01).unwrap();
            let v = step(&a, &u, &cfg).unwrap();
            assert!(l2_norm(&v).unwrap() <= l2_norm(&u).unwrap() * (1.0 + 1e-10));
            let (m0, m1) = (u.weighted_sum(), v.weighted_sum());
            for (x, y) in m0.iter().zip(&m1) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_initial_data_keeps_unit_ratios() {
        let g = Arc::new(Grid::unit(&[17]).unwrap());
        let a = laplacian(&g, 1);
        let u = VectorField::constant(g, &[Complex64::new(2.0, 0.0)]);
        let ps = [PExponent::new(1.5).unwrap(), PExponent::new(7.0).unwrap()];
        let cfg = StepperConfig::new(Scheme::ImplicitEuler, 0.01, 0.05).unwrap();
        let rep = evolve_and_measure(&a, &u, &ps, &cfg).unwrap();
        assert_eq!(rep.times.len(), 5);
        for r in rep.ratios.iter().flatten() {
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert!(rep.flagged.is_empty());
    }

    #[test]
    fn zero_initial_field_rejected() {
        let g = Arc::new(Grid::unit(&[5]).unwrap());
        let a = laplacian(&g, 1);
        let u = VectorField::zeros(g, 1);
        let cfg = StepperConfig::new(Scheme::ImplicitEuler, 0.1, 0.1).unwrap();
        assert!(evolve_and_measure(&a, &u, &[PExponent::new(2.0).unwrap()], &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::new(Scheme::ImplicitEuler, 0.0, 1.0).is_err());
        assert!(StepperConfig::new(Scheme::ImplicitEuler, 0.2, 0.1).is_err());
        assert_eq!(StepperConfig::new(Scheme::ImplicitEuler, 0.1, 0.3).unwrap().steps(), 3);
    }

    #[test]
    fn csv_layout() {
        let rep = TrajectoryReport {
            scheme: Scheme::ImplicitEuler,
            dt: 0.5,
            times: vec![0.5, 1.0],
            p_values: vec![2.0, 3.0],
            ratios: vec![vec![1.0, 0.9], vec![0.8, 0.7]],
            worst: vec![1.0, 0.8],
            flagged: vec![],
        };
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,ratio_p2,ratio_p3");
        assert_eq!(lines.len(), 3);
    }
}
