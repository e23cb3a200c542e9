//! Time stepping and the dissipativity functional checked against dense
//! linear algebra and quadrature.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use lplab::coefficients::{make_coefficients, Family};
use lplab::criterion::dissipativity_gap;
use lplab::field::{PExponent, VectorField};
use lplab::form::{assemble_form, FormMatrix};
use lplab::semigroup::{Scheme, Stepper};
use lplab::Grid;

/// Dense `A` and `W` of a form.
struct Dense {
    a: DMatrix<Complex64>,
    w: DMatrix<Complex64>,
}

fn dense(form: &FormMatrix) -> Dense {
    let n = form.matrix().dim();
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for r in 0..n {
        for (c, v) in form.matrix().row(r) {
            a[(r, c)] = v;
        }
    }
    let w = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        form.mass().iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    Dense { a, w }
}

impl Dense {
    /// Solves `(W + theta A) x = (W - phi A) u`.
    fn theta_step(&self, u: &VectorField, theta: f64, phi: f64) -> Vec<Complex64> {
        let x = DVector::from_column_slice(u.values());
        let lhs = &self.w + &self.a * Complex64::new(theta, 0.0);
        let rhs = (&self.w - &self.a * Complex64::new(phi, 0.0)) * x;
        lhs.lu().solve(&rhs).expect("nonsingular").iter().copied().collect()
    }

    /// `exp(-t W^{-1} A) u`.
    fn exact(&self, u: &VectorField, t: f64) -> Vec<Complex64> {
        let winv = self.w.map(|z| if z.re != 0.0 { z.inv() } else { z });
        let g = (winv * &self.a) * Complex64::new(-t, 0.0);
        (g.exp() * DVector::from_column_slice(u.values()))
            .iter()
            .copied()
            .collect()
    }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn smooth_field(grid: &Arc<Grid>, m: usize) -> VectorField {
    VectorField::from_fn(grid.clone(), m, |x, out| {
        for (a, o) in out.iter_mut().enumerate() {
            let k = (a + 1) as f64;
            *o = Complex64::new(
                (PI * k * x[0]).sin() + 0.3 * (2.0 * PI * x[x.len() - 1]).cos(),
                0.2 * (PI * x[0] * k).cos(),
            );
        }
    })
}

fn forms() -> Vec<FormMatrix> {
    let g1 = Arc::new(Grid::unit(&[33]).unwrap());
    let g2 = Arc::new(Grid::unit(&[6, 7]).unwrap());
    vec![
        assemble_form(&make_coefficients(g1.clone(), 1, &Family::VectorLaplacian { scale: 1.0 }, 0).unwrap()).unwrap(),
        assemble_form(
            &make_coefficients(
                g1,
                2,
                &Family::Random {
                    ratio: 0.5,
                    seed: None,
                    varying: true,
                    bound: 1.0,
                },
                3,
            )
            .unwrap(),
        )
        .unwrap(),
        assemble_form(
            &make_coefficients(
                g2,
                2,
                &Family::Antisymmetric {
                    b: Some(1.0),
                    ratio: None,
                },
                0,
            )
            .unwrap(),
        )
        .unwrap(),
    ]
}

#[test]
fn single_steps_match_dense_resolvents() {
    for a in forms() {
        let s = dense(&a);
        let u = smooth_field(a.grid(), a.m());
        for dt in [1e-3, 0.05] {
            let ie = Stepper::new(&a, Scheme::ImplicitEuler, dt).unwrap().step(&u).unwrap();
            let oracle = s.theta_step(&u, dt, 0.0);
            assert!(max_diff(ie.values(), &oracle) < 1e-10, "implicit Euler, dt {dt}");
            let cn = Stepper::new(&a, Scheme::CrankNicolson, dt).unwrap().step(&u).unwrap();
            let oracle = s.theta_step(&u, 0.5 * dt, 0.5 * dt);
            assert!(max_diff(cn.values(), &oracle) < 1e-10, "Crank-Nicolson, dt {dt}");
        }
    }
}

fn error_at(a: &FormMatrix, s: &Dense, u: &VectorField, scheme: Scheme, dt: f64, horizon: f64) -> f64 {
    let st = Stepper::new(a, scheme, dt).unwrap();
    let steps = (horizon / dt).round() as usize;
    let mut v = u.clone();
    for _ in 0..steps {
        v = st.step(&v).unwrap();
    }
    let exact = s.exact(u, horizon);
    max_diff(v.values(), &exact)
}

#[test]
fn schemes_converge_to_the_matrix_exponential() {
    let grid = Arc::new(Grid::unit(&[17]).unwrap());
    let a = assemble_form(
        &make_coefficients(
            grid.clone(),
            2,
            &Family::Random {
                ratio: 0.8,
                seed: None,
                varying: false,
                bound: 1.0,
            },
            11,
        )
        .unwrap(),
    )
    .unwrap();
    let s = dense(&a);
    let u = smooth_field(&grid, 2);
    let horizon = 0.04;
    for (scheme, min_order) in [(Scheme::ImplicitEuler, 0.9), (Scheme::CrankNicolson, 1.9)] {
        let errs: Vec<f64> = [4e-3, 2e-3, 1e-3, 5e-4]
            .iter()
            .map(|&dt| error_at(&a, &s, &u, scheme, dt, horizon))
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= min_order, "{scheme:?}: errors {errs:?}");
        }
    }
}

/// `3 int u^2 u'^2 / int u^4` for `u = 1 + sin(2 pi x) / 2`, by composite
/// Gauss-Legendre quadrature.
fn gap_quadrature() -> f64 {
    let nodes = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    let weights = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let panels = 200;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..panels {
        let (a, b) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
        for (t, w) in nodes.iter().zip(&weights) {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
            let u = 1.0 + 0.5 * (2.0 * PI * x).sin();
            let du = PI * (2.0 * PI * x).cos();
            num += 0.5 * (b - a) * w * 3.0 * u * u * du * du;
            den += 0.5 * (b - a) * w * u.powi(4);
        }
    }
    num / den
}

#[test]
fn laplacian_gap_converges_to_quadrature() {
    let exact = gap_quadrature();
    let p = PExponent::new(4.0).unwrap();
    let mut errs = Vec::new();
    for n in [64usize, 128, 256, 512] {
        let grid = Arc::new(Grid::unit(&[n + 1]).unwrap());
        let a = assemble_form(&make_coefficients(grid.clone(), 1, &Family::VectorLaplacian { scale: 1.0 }, 0).unwrap())
            .unwrap();
        let u = VectorField::from_fn(grid, 1, |x, out| {
            out[0] = Complex64::new(1.0 + 0.5 * (2.0 * PI * x[0]).sin(), 0.0)
        });
        errs.push((dissipativity_gap(&a, &u, p).unwrap() - exact).abs() / exact);
    }
    assert!(errs[3] < 1e-4, "{errs:?}");
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
    }
}
