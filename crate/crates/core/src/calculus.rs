//! Finite-difference checks of the truncation chain rule and the norm
//! derivative, plus probes of strict convexity of L_p and the equality
//! cases of Young's and Hölder's inequalities and of the triangle
//! inequality in `H`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criterion::test_function_gradient;
use crate::error::{LabError, Result};
use crate::field::{inner_h, lp_norm, norm_h, PExponent, VectorField};
use crate::grid::Grid;
use crate::rng;

type Point = [f64; 2];

/// Closed-form fields on `[0, 1]^d` with analytic gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothProbe {
    Constant {
        d: usize,
        value: Vec<Complex64>,
    },
    /// `offset + sum_k slope_k x_k`.
    Affine {
        offset: Vec<Complex64>,
        slopes: Vec<Vec<Complex64>>,
    },
    /// `u_a = offset_a + amp_a sin(w_a . x + phase_a)`.
    Trig {
        d: usize,
        offset: Vec<Complex64>,
        amp: Vec<Complex64>,
        freq: Vec<Point>,
        phase: Vec<f64>,
    },
    /// `(cos w x_0, sin w x_0)`, constant H-norm one.
    Circle {
        d: usize,
        omega: f64,
    },
    /// Scalar `|x - c|^2 + floor`.
    Paraboloid {
        d: usize,
        center: Point,
        floor: f64,
    },
}

impl SmoothProbe {
    pub fn dim(&self) -> usize {
        match self {
            SmoothProbe::Constant { d, .. }
            | SmoothProbe::Trig { d, .. }
            | SmoothProbe::Circle { d, .. }
            | SmoothProbe::Paraboloid { d, .. } => *d,
            SmoothProbe::Affine { slopes, .. } => slopes.len(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            SmoothProbe::Constant { value, .. } => value.len(),
            SmoothProbe::Affine { offset, .. } | SmoothProbe::Trig { offset, .. } => offset.len(),
            SmoothProbe::Circle { .. } => 2,
            SmoothProbe::Paraboloid { .. } => 1,
        }
    }

    /// Random trigonometric probe bounded away from zero.
    pub fn random_trig(d: usize, m: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, rng::stream_id(0xCA1C, 0));
        let mut offset = Vec::with_capacity(m);
        let mut amp = Vec::with_capacity(m);
        let mut freq = Vec::with_capacity(m);
        let mut phase = Vec::with_capacity(m);
        for a in 0..m {
            let base = if a == 0 { 2.5 } else { 0.0 };
            offset.push(Complex64::new(base, 0.0) + rng::complex_normal(&mut r) * 0.3);
            amp.push(rng::complex_normal(&mut r) * 0.5);
            let mut w = [0.0; 2];
            for wk in w.iter_mut().take(d) {
                *wk = rng::uniform(&mut r, 1.0, 4.0);
            }
            freq.push(w);
            phase.push(rng::uniform(&mut r, 0.0, std::f64::consts::TAU));
        }
        SmoothProbe::Trig {
            d,
            offset,
            amp,
            freq,
            phase,
        }
    }

    /// Value and gradient (`d` blocks of `m`) at `x`.
    pub fn eval(&self, x: Point) -> (Vec<Complex64>, Vec<Complex64>) {
        let d = self.dim();
        let m = self.m();
        let zero = Complex64::new(0.0, 0.0);
        match self {
            SmoothProbe::Constant { value, .. } => (value.clone(), vec![zero; d * m]),
            SmoothProbe::Affine { offset, slopes } => {
                let mut v = offset.clone();
                for (k, s) in slopes.iter().enumerate() {
                    for (va, sa) in v.iter_mut().zip(s) {
                        *va += sa * x[k];
                    }
                }
                (v, slopes.iter().flatten().copied().collect())
            }
            SmoothProbe::Trig {
                offset,
                amp,
                freq,
                phase,
                ..
            } => {
                let mut v = vec![zero; m];
                let mut g = vec![zero; d * m];
                for a in 0..m {
                    let arg: f64 = (0..d).map(|k| freq[a][k] * x[k]).sum::<f64>() + phase[a];
                    v[a] = offset[a] + amp[a] * arg.sin();
                    for k in 0..d {
                        g[k * m + a] = amp[a] * (freq[a][k] * arg.cos());
                    }
                }
                (v, g)
            }
            SmoothProbe::Circle { omega, .. } => {
                let t = omega * x[0];
                let v = vec![Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0)];
                let mut g = vec![zero; d * 2];
                g[0] = Complex64::new(-omega * t.sin(), 0.0);
                g[1] = Complex64::new(omega * t.cos(), 0.0);
                (v, g)
            }
            SmoothProbe::Paraboloid { center, floor, .. } => {
                let r2: f64 = (0..d).map(|k| (x[k] - center[k]).powi(2)).sum();
                let g = (0..d).map(|k| Complex64::new(2.0 * (x[k] - center[k]), 0.0)).collect();
                (vec![Complex64::new(r2 + floor, 0.0)], g)
            }
        }
    }
}

/// `v = (||u||^alpha ^ cap) u` and its gradient
/// `alpha 1[||u||^alpha < cap] ||u||^alpha Re(sgn u, d_k u) sgn u
///  + (||u||^alpha ^ cap) d_k u`.
/// The indicator is false on the kink `||u||^alpha = cap`.
pub fn truncate_field(
    value: &[Complex64],
    gradient: &[Complex64],
    alpha: f64,
    cap: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if !(alpha > 0.0) || !(cap > 0.0) {
        return Err(LabError::invalid("truncation needs alpha > 0 and M > 0"));
    }
    let m = value.len();
    if m == 0 || !gradient.len().is_multiple_of(m) {
        return Err(LabError::shape("gradient must consist of d blocks of length m"));
    }
    let r = norm_h(value);
    if r == 0.0 {
        let z = Complex64::new(0.0, 0.0);
        return Ok((vec![z; m], vec![z; gradient.len()]));
    }
    let ra = r.powf(alpha);
    let f = ra.min(cap);
    let active = ra < cap;
    let sgn: Vec<Complex64> = value.iter().map(|z| z / r).collect();
    let v = value.iter().map(|z| z * f).collect();
    let dv = gradient
        .chunks_exact(m)
        .flat_map(|dk| {
            let dn = inner_h(&sgn, dk).re;
            let radial = if active { alpha * ra * dn } else { 0.0 };
            dk.iter()
                .zip(&sgn)
                .map(move |(g, s)| s * radial + g * f)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok((v, dv))
}

fn lattice(d: usize, h: f64) -> Vec<Point> {
    let n = (1.0 / h).round() as usize;
    match d {
        1 => (0..=n).map(|i| [i as f64 * h, 0.0]).collect(),
        _ => (0..=n)
            .flat_map(|i| (0..=n).map(move |j| [i as f64 * h, j as f64 * h]))
            .collect(),
    }
}

fn shifted(x: Point, axis: usize, delta: f64) -> Point {
    let mut y = x;
    y[axis] += delta;
    y
}

fn max_gradient_norm(probe: &SmoothProbe, pts: &[Point]) -> f64 {
    pts.iter().map(|&x| norm_h(&probe.eval(x).1)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRuleResidual {
    /// Max over stencils that stay on one side of the kink.
    pub smooth: f64,
    /// Discrete L1 norm `h^d sum |err|` over stencils crossing the kink.
    pub kink: f64,
    pub kink_points: usize,
}

/// Compares the analytic derivative of the truncated field with central
/// differences of step `h` on the lattice `h Z^d` in `[0, 1]^d`. Stencils
/// `x +- 2h e_k` that straddle the kink, and points where
/// `||u|| <= 10 h max |grad u|`, are excluded from the smooth residual.
pub fn chain_rule_residual(probe: &SmoothProbe, alpha: f64, cap: f64, h: f64) -> Result<ChainRuleResidual> {
    let d = probe.dim();
    let pts = lattice(d, h);
    let delta = 10.0 * h * max_gradient_norm(probe, &pts);
    let trunc = |x: Point| -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let (u, du) = probe.eval(x);
        truncate_field(&u, &du, alpha, cap)
    };
    let side = |x: Point| norm_h(&probe.eval(x).0).powf(alpha) < cap;
    let mut smooth: f64 = 0.0;
    let mut kink = 0.0;
    let mut kink_points = 0;
    let m = probe.m();
    for &x in &pts {
        let u = probe.eval(x).0;
        if norm_h(&u) <= delta {
            continue;
        }
        let (_, dv) = trunc(x)?;
        for k in 0..d {
            let s0 = side(x);
            let crosses = [-2.0, -1.0, 1.0, 2.0].iter().any(|&j| side(shifted(x, k, j * h)) != s0);
            let (vp, _) = trunc(shifted(x, k, h))?;
            let (vm, _) = trunc(shifted(x, k, -h))?;
            let err: f64 = (0..m)
                .map(|a| ((vp[a] - vm[a]) / (2.0 * h) - dv[k * m + a]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if crosses {
                kink += err * h.powi(d as i32);
                kink_points += 1;
            } else {
                smooth = smooth.max(err);
            }
        }
    }
    Ok(ChainRuleResidual {
        smooth,
        kink,
        kink_points,
    })
}

/// Max `|Re(sgn u, d_k u) - central difference of ||u||_H|` over lattice
/// points with `||u|| > 10 h max |grad u|`.
pub fn norm_gradient_residual(probe: &SmoothProbe, h: f64) -> f64 {
    let d = probe.dim();
    let pts = lattice(d, h);
    let delta = 10.0 * h * max_gradient_norm(probe, &pts);
    let m = probe.m();
    let norm_at = |x: Point| norm_h(&probe.eval(x).0);
    let mut worst: f64 = 0.0;
    for &x in &pts {
        let (u, du) = probe.eval(x);
        let r = norm_h(&u);
        if r <= delta {
            continue;
        }
        let sgn: Vec<Complex64> = u.iter().map(|z| z / r).collect();
        for k in 0..d {
            let analytic = inner_h(&sgn, &du[k * m..(k + 1) * m]).re;
            let fd = (norm_at(shifted(x, k, h)) - norm_at(shifted(x, k, -h))) / (2.0 * h);
            worst = worst.max((analytic - fd).abs());
        }
    }
    worst
}

/// `log2(r_i / r_{i+1})` for residuals at successively halved step sizes.
pub fn observed_orders(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Largest deviation between the truncation derivative with `M = inf`,
/// `alpha = p - 2` and the test-function gradient used by the pointwise
/// integrand, over the lattice points of `probe`.
pub fn truncation_identity_defect(probe: &SmoothProbe, p: f64, h: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in lattice(probe.dim(), h) {
        let (u, du) = probe.eval(x);
        let (_, dv) = truncate_field(&u, &du, p - 2.0, f64::INFINITY)?;
        let t = test_function_gradient(&u, &du, p);
        for (a, b) in dv.iter().zip(&t) {
            worst = worst.max((a - b).norm() / b.norm().max(1.0));
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// convexity and equality cases

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub p: f64,
    pub trials: usize,
    /// `min (2 - ||u + v||_p)` over random unit pairs.
    pub min_slack: f64,
    /// `||u - v||_p` of the minimising pair.
    pub min_slack_distance: f64,
    /// Pairs with `||u - v||_p >= 1e-6` and slack `<= 0`.
    pub violations: usize,
    /// `(eps, slack, distance)` along `v = (u + eps w) / ||u + eps w||`.
    pub trend: Vec<(f64, f64, f64)>,
    pub trend_monotone: bool,
}

fn unit_random(grid: &Arc<Grid>, m: usize, p: PExponent, r: &mut rng::LabRng) -> Result<VectorField> {
    let vals = (0..grid.node_count() * m).map(|_| rng::complex_normal(r)).collect();
    let u = VectorField::new(grid.clone(), m, vals)?;
    let n = lp_norm(&u, p)?;
    Ok(u.scale_real(1.0 / n))
}

/// Samples unit pairs on a 16-node grid of `[0, 1]`.
pub fn strict_convexity_probe(p: f64, m: usize, trials: usize, seed: u64) -> Result<ConvexityReport> {
    let pe = PExponent::new(p)?;
    if m == 0 {
        return Err(LabError::invalid("m must be at least 1"));
    }
    let grid = Arc::new(Grid::unit(&[16])?);
    let mut r = rng::stream(seed, rng::stream_id(0xC0A7, 0));
    let mut min_slack = f64::INFINITY;
    let mut min_dist = f64::NAN;
    let mut violations = 0;
    for _ in 0..trials {
        let u = unit_random(&grid, m, pe, &mut r)?;
        let v = unit_random(&grid, m, pe, &mut r)?;
        let slack = 2.0 - lp_norm(&u.add(&v), pe)?;
        let dist = lp_norm(&u.sub(&v), pe)?;
        if dist >= 1e-6 && slack <= 0.0 {
            violations += 1;
        }
        if slack < min_slack {
            min_slack = slack;
            min_dist = dist;
        }
    }
    let u = unit_random(&grid, m, pe, &mut r)?;
    let w = unit_random(&grid, m, pe, &mut r)?;
    let mut trend = Vec::new();
    for e in 1..=5 {
        let eps = 10f64.powi(-e);
        let raw = u.axpy(Complex64::new(eps, 0.0), &w);
        let v = raw.scale_real(1.0 / lp_norm(&raw, pe)?);
        let slack = 2.0 - lp_norm(&u.add(&v), pe)?;
        let dist = lp_norm(&u.sub(&v), pe)?;
        trend.push((eps, slack, dist));
    }
    let trend_monotone = trend
        .windows(2)
        .all(|w| w[1].1 < w[0].1 && w[1].2 < w[0].2 && w[1].1 > 0.0);
    Ok(ConvexityReport {
        p,
        trials,
        min_slack,
        min_slack_distance: min_dist,
        violations,
        trend,
        trend_monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungCheck {
    /// `a^p / p + b^q / q - a b`.
    pub slack: f64,
    /// `|a^p - b^q| <= tol * max(1, a^p, b^q)`.
    pub equality: bool,
    /// Floating-point error bound on `slack`, including the rounding of
    /// `q = p / (p - 1)` amplified through `b^q`.
    pub allowance: f64,
}

pub fn young_equality_check(a: f64, b: f64, p: f64, tol: f64) -> Result<YoungCheck> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(LabError::invalid("Young's inequality needs a, b >= 0"));
    }
    let pe = PExponent::new(p)?;
    let q = pe.q();
    let ap = a.powf(p);
    let bq = b.powf(q);
    let slack = ap / p + bq / q - a * b;
    let equality = (ap - bq).abs() <= tol * ap.max(bq).max(1.0);
    let scale = (ap / p + bq / q).max(a * b);
    let sens = |x: f64, px: f64| if x > 0.0 { px * (x.ln().abs() + 1.0) } else { 0.0 };
    let allowance = f64::EPSILON * (4.0 * scale + sens(a, ap) + sens(b, bq));
    Ok(YoungCheck {
        slack,
        equality,
        allowance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoelderVerdict {
    /// `int ||f|| ||g||`.
    pub pairing: f64,
    /// `||f||_p ||g||_q`.
    pub bound: f64,
    pub equality: bool,
    pub lambda: Option<f64>,
    /// `max |(||f||^p - lambda ||g||^q)| / max ||f||^p`.
    pub residual: Option<f64>,
}

/// Detects the Hölder equality case and fits `||f||^p = lambda ||g||^q`
/// by weighted least squares.
pub fn hoelder_equality_probe(f: &VectorField, g: &VectorField, p: f64, tol: f64) -> Result<HoelderVerdict> {
    let pe = PExponent::new(p)?;
    f.check_compatible(g)?;
    if f.is_zero() || g.is_zero() {
        return Err(LabError::invalid("Hölder probe needs nonzero fields"));
    }
    let w = f.grid().weights();
    let nf = f.pointwise_norms();
    let ng = g.pointwise_norms();
    let pairing: f64 = (0..nf.len()).map(|i| w[i] * nf[i] * ng[i]).sum();
    let bound = lp_norm(f, pe)? * lp_norm(g, pe.dual())?;
    let equality = pairing >= (1.0 - tol) * bound;
    if !equality {
        return Ok(HoelderVerdict {
            pairing,
            bound,
            equality,
            lambda: None,
            residual: None,
        });
    }
    let fp: Vec<f64> = nf.iter().map(|x| x.powf(pe.p())).collect();
    let gq: Vec<f64> = ng.iter().map(|x| x.powf(pe.q())).collect();
    let num: f64 = (0..fp.len()).map(|i| w[i] * fp[i] * gq[i]).sum();
    let den: f64 = (0..fp.len()).map(|i| w[i] * gq[i] * gq[i]).sum();
    let lambda = num / den;
    let scale = fp.iter().copied().fold(0.0, f64::max);
    let residual = (0..fp.len())
        .map(|i| (fp[i] - lambda * gq[i]).abs())
        .fold(0.0, f64::max)
        / scale;
    Ok(HoelderVerdict {
        pairing,
        bound,
        equality,
        lambda: Some(lambda),
        residual: Some(residual),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelismVerdict {
    /// `||xi + eta|| = ||xi|| + ||eta||` within `tol` and `eta != 0`.
    pub triggered: bool,
    pub lambda: Option<f64>,
    /// `||xi - lambda eta|| / (||xi|| + ||eta||)`.
    pub deviation: Option<f64>,
    pub pass: bool,
}

/// Equality in the triangle inequality forces `xi = lambda eta` with
/// `lambda >= 0`. The deviation tolerance is `4 sqrt(tol)` because the
/// triangle defect is quadratic in the angle.
pub fn parallelism_check(xi: &[Complex64], eta: &[Complex64], tol: f64) -> Result<ParallelismVerdict> {
    if xi.len() != eta.len() {
        return Err(LabError::shape("vectors must have equal length"));
    }
    let nx = norm_h(xi);
    let ne = norm_h(eta);
    let sum: Vec<Complex64> = xi.iter().zip(eta).map(|(a, b)| a + b).collect();
    let total = nx + ne;
    let triggered = ne > 0.0 && (total - norm_h(&sum)).abs() <= tol * total;
    if !triggered {
        return Ok(ParallelismVerdict {
            triggered,
            lambda: None,
            deviation: None,
            pass: true,
        });
    }
    let lambda = nx / ne;
    let diff: Vec<Complex64> = xi.iter().zip(eta).map(|(a, b)| a - b * lambda).collect();
    let deviation = norm_h(&diff) / total;
    Ok(ParallelismVerdict {
        triggered,
        lambda: Some(lambda),
        deviation: Some(deviation),
        pass: deviation <= 4.0 * tol.sqrt(),
    })
}

// ---------------------------------------------------------------------------
// default suite

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub h: f64,
    pub residual: f64,
    /// Order measured against the previous (coarser) row of the same check.
    pub order: Option<f64>,
    pub target_order: Option<f64>,
    pub pass: bool,
}

pub const ORDER_TOLERANCE: f64 = 0.3;

fn order_rows(name: &str, hs: &[f64], residuals: &[f64], target: f64) -> Vec<CheckRow> {
    let orders = observed_orders(residuals);
    hs.iter()
        .zip(residuals)
        .enumerate()
        .map(|(i, (&h, &r))| {
            let order = if i == 0 { None } else { Some(orders[i - 1]) };
            CheckRow {
                check: name.to_string(),
                h,
                residual: r,
                order,
                target_order: Some(target),
                pass: order.is_none_or(|o| (o - target).abs() <= ORDER_TOLERANCE),
            }
        })
        .collect()
}

fn bound_rows(name: &str, hs: &[f64], residuals: &[f64], bound: f64) -> Vec<CheckRow> {
    hs.iter()
        .zip(residuals)
        .map(|(&h, &r)| CheckRow {
            check: name.to_string(),
            h,
            residual: r,
            order: None,
            target_order: None,
            pass: r <= bound,
        })
        .collect()
}

/// The default refinement study over step sizes `hs` (successively halved).
pub fn verification_suite(hs: &[f64], seed: u64) -> Result<Vec<CheckRow>> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut rows = Vec::new();

    let linear = SmoothProbe::Affine {
        offset: vec![c(1.0)],
        slopes: vec![vec![c(1.0)]],
    };
    let r: Vec<f64> = hs
        .iter()
        .map(|&h| chain_rule_residual(&linear, 2.0, 1e6, h).map(|x| x.smooth))
        .collect::<Result<_>>()?;
    rows.extend(order_rows("chain_rule/linear_alpha2", hs, &r, 2.0));

    let trig = SmoothProbe::random_trig(2, 3, seed);
    let r: Vec<f64> = hs
        .iter()
        .map(|&h| chain_rule_residual(&trig, 1.5, 1e6, h).map(|x| x.smooth))
        .collect::<Result<_>>()?;
    rows.extend(order_rows("chain_rule/trig_m3_alpha1.5", hs, &r, 2.0));

    let bowl = SmoothProbe::Paraboloid {
        d: 2,
        center: [0.5, 0.5],
        floor: 0.2,
    };
    let res: Vec<ChainRuleResidual> = hs
        .iter()
        .map(|&h| chain_rule_residual(&bowl, 1.0, 0.3, h))
        .collect::<Result<_>>()?;
    let smooth: Vec<f64> = res.iter().map(|x| x.smooth).collect();
    let kink: Vec<f64> = res.iter().map(|x| x.kink).collect();
    rows.extend(order_rows("chain_rule/kinked_smooth_part", hs, &smooth, 2.0));
    rows.extend(order_rows("chain_rule/kinked_band_l1", hs, &kink, 1.0));

    let constant = SmoothProbe::Constant {
        d: 2,
        value: vec![c(0.3), Complex64::new(0.0, 2.0)],
    };
    let r: Vec<f64> = hs
        .iter()
        .map(|&h| chain_rule_residual(&constant, 1.0, 1.0, h).map(|x| x.smooth))
        .collect::<Result<_>>()?;
    rows.extend(bound_rows("chain_rule/constant", hs, &r, 1e-14));

    let circle = SmoothProbe::Circle { d: 1, omega: 3.0 };
    let r: Vec<f64> = hs.iter().map(|&h| norm_gradient_residual(&circle, h)).collect();
    rows.extend(bound_rows("norm_gradient/circle", hs, &r, 1e-12));

    let r: Vec<f64> = hs.iter().map(|&h| norm_gradient_residual(&trig, h)).collect();
    rows.extend(order_rows("norm_gradient/trig_m3", hs, &r, 2.0));

    let r: Vec<f64> = hs.iter().map(|&h| norm_gradient_residual(&bowl, h)).collect();
    // central differences are exact on quadratics
    rows.extend(bound_rows("norm_gradient/positive_quadratic", hs, &r, 1e-11));

    for p in [2.5, 4.0, 7.0] {
        let defect = truncation_identity_defect(&trig, p, hs[0])?;
        rows.push(CheckRow {
            check: format!("identity/truncation_vs_test_gradient_p{p}"),
            h: hs[0],
            residual: defect,
            order: None,
            target_order: None,
            pass: defect <= 1e-14,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn truncation_examples() {
        // x at x = 1/2, alpha = 1, M = 10: v = x^2, v' = 1
        let (v, dv) = truncate_field(&[c(0.5)], &[c(1.0)], 1.0, 10.0).unwrap();
        assert!((v[0] - c(0.25)).norm() < 1e-16);
        assert!((dv[0] - c(1.0)).norm() < 1e-16);
        // fully truncated: derivative is M du
        let (_, dv) = truncate_field(&[c(3.0)], &[c(2.0)], 1.0, 1.5).unwrap();
        assert!((dv[0] - c(3.0)).norm() < 1e-15);
        // kink point takes the truncated side
        let (_, dv) = truncate_field(&[c(2.0)], &[c(1.0)], 1.0, 2.0).unwrap();
        assert!((dv[0] - c(2.0)).norm() < 1e-15);
        let (v, dv) = truncate_field(&[c(0.0), c(0.0)], &[c(1.0), c(2.0)], 2.0, 1.0).unwrap();
        assert!(v.iter().chain(&dv).all(|z| z.norm() == 0.0));
        assert!(truncate_field(&[c(1.0)], &[c(1.0)], 0.0, 1.0).is_err());
        assert!(truncate_field(&[c(1.0)], &[c(1.0)], 1.0, -1.0).is_err());
    }

    #[test]
    fn literal_factor_fails_the_difference_check() {
        // With the second summand scaled by (||u|| ^ M) instead of
        // (||u||^alpha ^ M), the derivative of v = ||u||^alpha u is wrong.
        let probe = SmoothProbe::Affine {
            offset: vec![c(1.0)],
            slopes: vec![vec![c(1.0)]],
        };
        let alpha = 2.0;
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for x in lattice(1, 0.05) {
            let (u, du) = probe.eval(x);
            let r = norm_h(&u);
            let literal = alpha * r.powf(alpha) * du[0].re + r * du[0].re;
            let vp = (u[0].re + h).powf(alpha + 1.0);
            let vm = (u[0].re - h).powf(alpha + 1.0);
            worst = worst.max((literal - (vp - vm) / (2.0 * h)).abs());
        }
        assert!(worst > 0.5);
        let ok = chain_rule_residual(&probe, alpha, 1e6, 1.0 / 64.0).unwrap();
        assert!(ok.smooth < 1e-3);
    }

    #[test]
    fn linear_probe_second_order() {
        let probe = SmoothProbe::Affine {
            offset: vec![c(1.0)],
            slopes: vec![vec![c(1.0)]],
        };
        let r: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&h| chain_rule_residual(&probe, 2.0, 1e6, h).unwrap().smooth)
            .collect();
        let o = observed_orders(&r)[0];
        assert!((o - 2.0).abs() < 0.1, "order {o}");
    }

    #[test]
    fn norm_gradient_examples() {
        let circle = SmoothProbe::Circle { d: 1, omega: 1.0 };
        assert!(norm_gradient_residual(&circle, 1.0 / 128.0) <= 1e-12);
        // positive scalar: d||u|| = du exactly, so only the FD error of u remains
        let lin = SmoothProbe::Affine {
            offset: vec![c(2.0)],
            slopes: vec![vec![c(1.0)]],
        };
        assert!(norm_gradient_residual(&lin, 1.0 / 64.0) < 1e-12);
    }

    #[test]
    fn young_examples() {
        let y = young_equality_check(1.0, 1.0, 3.0, 1e-12).unwrap();
        assert!(y.equality && y.slack.abs() < 1e-15);
        let y = young_equality_check(2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!(!y.equality && (y.slack - 0.5).abs() < 1e-15);
        let p = 3.3;
        let q = p / (p - 1.0);
        let y = young_equality_check(2f64.powf(1.0 / p), 2f64.powf(1.0 / q), p, 1e-12).unwrap();
        assert!(y.equality && y.slack.abs() <= 1e-14);
        assert!(young_equality_check(-1.0, 1.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn convexity_examples() {
        let g = Arc::new(Grid::unit(&[4]).unwrap());
        let p2 = PExponent::new(2.0).unwrap();
        // disjoint supports, unit norm in L2 with weights (1/6, 1/3, 1/3, 1/6)
        let u = VectorField::new(g.clone(), 1, vec![c(6f64.sqrt()), c(0.0), c(0.0), c(0.0)]).unwrap();
        let v = VectorField::new(g, 1, vec![c(0.0), c(0.0), c(0.0), c(6f64.sqrt())]).unwrap();
        assert!((lp_norm(&u.add(&v), p2).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(lp_norm(&u.sub(&u), p2).unwrap() == 0.0);
        assert!((lp_norm(&u.add(&u), p2).unwrap() - 2.0).abs() < 1e-14);

        let rep = strict_convexity_probe(4.0, 2, 200, 1).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.min_slack > 0.0);
        assert!(rep.trend_monotone, "{:?}", rep.trend);
    }

    #[test]
    fn hoelder_examples() {
        let g = Arc::new(Grid::unit(&[33]).unwrap());
        let p = 3.0;
        let f = VectorField::from_fn(g.clone(), 1, |x, v| v[0] = c(1.0 + x[0] * x[0]));
        let gg = f.map_nodes(|s, d| d[0] = c(norm_h(s).powf(p - 1.0)));
        let v = hoelder_equality_probe(&f, &gg, p, 1e-12).unwrap();
        assert!(v.equality);
        assert!((v.lambda.unwrap() - 1.0).abs() < 1e-12);
        assert!(v.residual.unwrap() <= 1e-10);

        let a = VectorField::from_fn(g.clone(), 1, |x, v| v[0] = c(if x[0] < 0.5 { 1.0 } else { 0.0 }));
        let b = VectorField::from_fn(g.clone(), 1, |x, v| v[0] = c(if x[0] > 0.5 { 1.0 } else { 0.0 }));
        let v = hoelder_equality_probe(&a, &b, p, 1e-12).unwrap();
        assert_eq!(v.pairing, 0.0);
        assert!(!v.equality);
        assert!(hoelder_equality_probe(&a, &VectorField::zeros(g, 1), p, 1e-12).is_err());
    }

    #[test]
    fn parallelism_examples() {
        let eta = [Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)];
        let xi: Vec<Complex64> = eta.iter().map(|z| z * 2.0).collect();
        let v = parallelism_check(&xi, &eta, 1e-12).unwrap();
        assert!(v.triggered && v.pass);
        assert!((v.lambda.unwrap() - 2.0).abs() < 1e-14);

        let v = parallelism_check(&[c(1.0), c(0.0)], &[c(0.0), c(1.0)], 1e-12).unwrap();
        assert!(!v.triggered);

        let xi: Vec<Complex64> = eta.iter().map(|z| z * (1.0 + 1e-12)).collect();
        let v = parallelism_check(&xi, &eta, 1e-12).unwrap();
        assert!(v.triggered && v.pass);
    }
}
