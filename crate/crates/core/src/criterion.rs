//! Contractivity tests: the admissible exponent interval driven by `mu/M`,
//! the dissipativity functional `Re a(u, ||u||^{p-2} u)`, its pointwise
//! integrand, certification runs, counterexample search and the Sobolev
//! comparison interval.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{ellipticity_constants, CoefficientField, EllipticityConstants};
use crate::error::{LabError, Result};
use crate::field::{duality_map, inner_h, lp_norm, norm_h, power_map, PExponent, VectorField};
use crate::form::{apply_form, assemble_form, FormMatrix};
use crate::grid::Grid;
use crate::probes::{self, BandLimitedProbe};
use crate::rng;
use crate::semigroup::{evolve_with, Scheme, Stepper, StepperConfig, REPORT_TOL};

/// Default `kappa` in the discrete dissipativity tolerance `kappa h^2`.
pub const DEFAULT_KAPPA: f64 = 1.0;

// ---------------------------------------------------------------------------
// exponent intervals

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBound {
    Finite(f64),
    /// Every exponent above `p_minus` is admissible.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PInterval {
    /// Lower endpoint; `1.0` (open) when the interval is unbounded.
    pub p_minus: f64,
    pub p_plus: UpperBound,
    pub ratio: f64,
}

impl PInterval {
    pub fn is_unbounded(&self) -> bool {
        matches!(self.p_plus, UpperBound::Unbounded)
    }

    pub fn contains(&self, p: f64) -> bool {
        match self.p_plus {
            UpperBound::Unbounded => p > 1.0,
            UpperBound::Finite(hi) => p >= self.p_minus && p <= hi,
        }
    }

    pub fn p_plus_finite(&self) -> Option<f64> {
        match self.p_plus {
            UpperBound::Finite(v) => Some(v),
            UpperBound::Unbounded => None,
        }
    }
}

impl fmt::Display for PInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p_plus {
            UpperBound::Finite(hi) => write!(f, "[{:.7}, {:.7}]", self.p_minus, hi),
            UpperBound::Unbounded => write!(f, "(1, inf)"),
        }
    }
}

/// `s = |(p - 2) / p|`.
pub fn distortion(p: f64) -> f64 {
    ((p - 2.0) / p).abs()
}

/// Right-hand side `2 s + s^2` of the exponent condition.
pub fn condition_rhs(p: f64) -> f64 {
    let s = distortion(p);
    2.0 * s + s * s
}

/// Whether `ratio >= 2 s + s^2` for exponent `p`.
pub fn condition_holds(ratio: f64, p: f64) -> bool {
    ratio >= condition_rhs(p)
}

/// Closed-form solution of `ratio >= 2 s + s^2` for any positive ratio.
pub fn admissible_p_interval_for_ratio(ratio: f64) -> Result<PInterval> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(LabError::invalid(format!("mu/M must be positive, got {ratio}")));
    }
    let s = (1.0 + ratio).sqrt() - 1.0;
    if s >= 1.0 {
        return Ok(PInterval {
            p_minus: 1.0,
            p_plus: UpperBound::Unbounded,
            ratio,
        });
    }
    Ok(PInterval {
        p_minus: 2.0 / (1.0 + s),
        p_plus: UpperBound::Finite(2.0 / (1.0 - s)),
        ratio,
    })
}

pub fn admissible_p_interval(consts: &EllipticityConstants) -> Result<PInterval> {
    if !(consts.mu > 0.0) || consts.mu > consts.big_m {
        return Err(LabError::invalid(format!(
            "need 0 < mu <= M, got mu = {}, M = {}",
            consts.mu, consts.big_m
        )));
    }
    admissible_p_interval_for_ratio(consts.ratio())
}

/// Open interval with rational endpoints; `None` stands for infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SobolevInterval {
    pub d: u32,
    /// `(numerator, denominator)` of the lower endpoint.
    pub lower: (u64, u64),
    pub upper: Option<(u64, u64)>,
}

impl SobolevInterval {
    pub fn lower_f64(&self) -> f64 {
        self.lower.0 as f64 / self.lower.1 as f64
    }

    pub fn upper_f64(&self) -> Option<f64> {
        self.upper.map(|(a, b)| a as f64 / b as f64)
    }
}

fn reduced(num: u64, den: u64) -> (u64, u64) {
    let mut a = num;
    let mut b = den;
    while b != 0 {
        (a, b) = (b, a % b);
    }
    (num / a, den / a)
}

/// `(2d/(d+2), 2d/(d-2))` for `d >= 3` and `(1, inf)` for `d <= 2`.
pub fn sobolev_comparison_interval(d: u32) -> Result<SobolevInterval> {
    match d {
        0 => Err(LabError::invalid("dimension must be at least 1")),
        1 | 2 => Ok(SobolevInterval {
            d,
            lower: (1, 1),
            upper: None,
        }),
        _ => {
            let d64 = d as u64;
            Ok(SobolevInterval {
                d,
                lower: reduced(2 * d64, d64 + 2),
                upper: Some(reduced(2 * d64, d64 - 2)),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalComparison {
    pub contractive: PInterval,
    pub sobolev: SobolevInterval,
    /// Closed contractive interval lies inside the open Sobolev interval.
    pub contained: bool,
}

/// Compares the contractive interval with the Sobolev interval in
/// dimension `d` endpoint by endpoint.
pub fn compare_intervals(contractive: &PInterval, d: u32) -> Result<IntervalComparison> {
    let sobolev = sobolev_comparison_interval(d)?;
    let lower_ok = sobolev.lower_f64() < contractive.p_minus || (sobolev.lower == (1, 1) && contractive.p_minus >= 1.0);
    let upper_ok = match (sobolev.upper_f64(), contractive.p_plus) {
        (None, _) => true,
        (Some(_), UpperBound::Unbounded) => false,
        (Some(hi), UpperBound::Finite(p)) => p < hi,
    };
    Ok(IntervalComparison {
        contractive: *contractive,
        sobolev,
        contained: lower_ok && upper_ok,
    })
}

// ---------------------------------------------------------------------------
// dissipativity functional

/// `Re a(u, ||u||^{p-2} u) / ||u||_p^p`.
pub fn dissipativity_gap(a: &FormMatrix, u: &VectorField, p: PExponent) -> Result<f64> {
    gap_with(a, u, p, power_map(u, p))
}

/// Same quantity with the test function written as `||u||^{p-1} sgn u`.
pub fn dissipativity_gap_via_duality(a: &FormMatrix, u: &VectorField, p: PExponent) -> Result<f64> {
    gap_with(a, u, p, duality_map(u, p))
}

fn gap_with(a: &FormMatrix, u: &VectorField, p: PExponent, test: VectorField) -> Result<f64> {
    a.check_field(u)?;
    let norm = lp_norm(u, p)?;
    if norm == 0.0 {
        return Err(LabError::invalid("dissipativity gap needs a nonzero field"));
    }
    let num = apply_form(a, u, &test)?.re;
    Ok(num / norm.powf(p.p()))
}

// ---------------------------------------------------------------------------
// pointwise integrand

/// Gradient of the test function `||u||^{p-2} u` at one point:
/// `||u||^{p-2} (d_k u + (p-2) (d_k ||u||) sgn u)` with
/// `d_k ||u|| = Re (sgn u, d_k u)`. `gradient` is `d` blocks of `m`.
pub fn test_function_gradient(value: &[Complex64], gradient: &[Complex64], p: f64) -> Vec<Complex64> {
    let m = value.len();
    let r = norm_h(value);
    if r == 0.0 {
        return if p == 2.0 {
            gradient.to_vec()
        } else {
            vec![Complex64::new(0.0, 0.0); gradient.len()]
        };
    }
    let sgn: Vec<Complex64> = value.iter().map(|z| z / r).collect();
    let factor = r.powf(p - 2.0);
    gradient
        .chunks_exact(m)
        .flat_map(|dk| {
            let dnorm = inner_h(&sgn, dk).re;
            dk.iter()
                .zip(&sgn)
                .map(move |(g, s)| (g + s * ((p - 2.0) * dnorm)) * factor)
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `sum_{k,l} Re (c_kl d_l u, T_k)_H` for stacked vectors of length `dm`.
fn block_pairing(block: &DMatrix<Complex64>, grad: &[Complex64], test: &[Complex64]) -> f64 {
    let n = grad.len();
    let mut acc = 0.0;
    for r in 0..n {
        let mut cg = Complex64::new(0.0, 0.0);
        for c in 0..n {
            cg += block[(r, c)] * grad[c];
        }
        acc += (cg * test[r].conj()).re;
    }
    acc
}

/// Value of the integrand `sum Re (c_kl d_l u, ||u||^{p-2}(d_k u + (p-2)
/// (d_k ||u||) sgn u))_H` at one point. At `u = 0` the value is taken as
/// zero for `p != 2`.
pub fn pointwise_integrand_gap(
    block: &DMatrix<Complex64>,
    value: &[Complex64],
    gradient: &[Complex64],
    p: PExponent,
) -> Result<f64> {
    check_point_shapes(block, value, gradient)?;
    let test = test_function_gradient(value, gradient, p.p());
    Ok(block_pairing(block, gradient, &test))
}

fn check_point_shapes(block: &DMatrix<Complex64>, value: &[Complex64], gradient: &[Complex64]) -> Result<()> {
    let m = value.len();
    if m == 0 || !gradient.len().is_multiple_of(m) || block.nrows() != gradient.len() || block.ncols() != gradient.len()
    {
        return Err(LabError::shape("block must be (dm)x(dm) with d gradients of length m"));
    }
    if value
        .iter()
        .chain(gradient)
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(LabError::invalid("value and gradient must be finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseCertificate {
    pub value: f64,
    /// `(mu - 2 M s - M s^2) sum_k ||d_k v||^2` with
    /// `v = ||u||^{(p-2)/2} u`.
    pub lower_bound: f64,
    /// `M |grad u| |T|`, an upper bound for `|value|`.
    pub scale: f64,
}

/// Integrand together with the lower bound from the `mu/M` estimate.
pub fn pointwise_certificate(
    block: &DMatrix<Complex64>,
    consts: &EllipticityConstants,
    value: &[Complex64],
    gradient: &[Complex64],
    p: PExponent,
) -> Result<PointwiseCertificate> {
    check_point_shapes(block, value, gradient)?;
    let pp = p.p();
    let test = test_function_gradient(value, gradient, pp);
    let v = block_pairing(block, gradient, &test);
    let r = norm_h(value);
    let s = distortion(pp);
    let coeff = consts.mu - 2.0 * consts.big_m * s - consts.big_m * s * s;
    let energy_v = if r > 0.0 {
        // d_k v = ||u||^{(p-2)/2} (d_k u + (p-2)/2 (d_k ||u||) sgn u)
        let m = value.len();
        let sgn: Vec<Complex64> = value.iter().map(|z| z / r).collect();
        let f = r.powf(0.5 * (pp - 2.0));
        gradient
            .chunks_exact(m)
            .map(|dk| {
                let dn = inner_h(&sgn, dk).re;
                dk.iter()
                    .zip(&sgn)
                    .map(|(g, sg)| ((g + sg * (0.5 * (pp - 2.0) * dn)) * f).norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    } else if pp == 2.0 {
        gradient.iter().map(|z| z.norm_sqr()).sum()
    } else {
        0.0
    };
    let scale = consts.big_m * norm_h(gradient) * norm_h(&test);
    Ok(PointwiseCertificate {
        value: v,
        lower_bound: coeff * energy_v,
        scale,
    })
}

// ---------------------------------------------------------------------------
// certification

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationVerdict {
    pub p: f64,
    pub dissipativity_pass: bool,
    pub evolution_pass: bool,
    pub passed: bool,
    pub worst_gap: f64,
    pub gap_tolerance: f64,
    pub worst_ratio: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub h: f64,
    /// False only if dissipativity passed while some trajectory grew.
    pub forward_consistent: bool,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub kappa: f64,
    pub include_structured: bool,
    /// Run trajectories (the dissipativity check is always run).
    pub evolve: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            kappa: DEFAULT_KAPPA,
            include_structured: true,
            evolve: true,
        }
    }
}

pub fn gap_tolerance(kappa: f64, grid: &Grid) -> f64 {
    let h = grid.max_spacing();
    kappa * h * h
}

/// Probe set used by certification: structured probes followed by
/// `n_samples` band-limited fields.
pub fn certification_probes(
    grid: &Arc<Grid>,
    m: usize,
    n_samples: usize,
    seed: u64,
    structured: bool,
) -> Vec<VectorField> {
    let mut fields = if structured {
        probes::structured_fields(grid, m)
    } else {
        Vec::new()
    };
    fields.extend(probes::band_limited_fields(grid, m, n_samples, seed));
    fields
}

pub fn certify_contractivity(
    c: &CoefficientField,
    p: PExponent,
    n_samples: usize,
    seed: u64,
    cfg: &StepperConfig,
) -> Result<CertificationVerdict> {
    certify_with(c, p, n_samples, seed, cfg, &CertifyOptions::default())
}

/// Verdicts always use implicit Euler; `cfg.scheme` is ignored here.
pub fn certify_with(
    c: &CoefficientField,
    p: PExponent,
    n_samples: usize,
    seed: u64,
    cfg: &StepperConfig,
    opts: &CertifyOptions,
) -> Result<CertificationVerdict> {
    cfg.validate()?;
    ellipticity_constants(c)?;
    let form = assemble_form(c)?;
    let stepper = if opts.evolve {
        Some(Stepper::new(&form, Scheme::ImplicitEuler, cfg.dt)?)
    } else {
        None
    };
    certify_on_form(&form, stepper.as_ref(), p, n_samples, seed, cfg.steps(), opts)
}

/// Certification against a prebuilt form (and optionally a stepper whose
/// factorization is shared across exponents).
pub fn certify_on_form(
    form: &FormMatrix,
    stepper: Option<&Stepper>,
    p: PExponent,
    n_samples: usize,
    seed: u64,
    steps: usize,
    opts: &CertifyOptions,
) -> Result<CertificationVerdict> {
    let grid = form.grid().clone();
    let fields = certification_probes(&grid, form.m(), n_samples, seed, opts.include_structured);
    let results: Vec<(f64, f64)> = fields
        .par_iter()
        .map(|u| -> Result<(f64, f64)> {
            let gap = dissipativity_gap(form, u, p)?;
            let ratio = match stepper {
                Some(s) => evolve_with(s, u, &[p], steps)?.worst[0],
                None => 0.0,
            };
            Ok((gap, ratio))
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = results.iter().map(|r| r.0).collect();
    let worst_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_ratio = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let tol = gap_tolerance(opts.kappa, &grid);
    let dissipativity_pass = worst_gap >= -tol;
    let evolution_pass = worst_ratio <= 1.0 + REPORT_TOL;
    Ok(CertificationVerdict {
        p: p.p(),
        dissipativity_pass,
        evolution_pass,
        passed: dissipativity_pass && evolution_pass,
        worst_gap,
        gap_tolerance: tol,
        worst_ratio,
        sample_count: fields.len(),
        seed,
        h: grid.max_spacing(),
        forward_consistent: !(dissipativity_pass && stepper.is_some() && !evolution_pass),
        gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub n: usize,
    pub h: f64,
    pub min_gap: f64,
    /// `max(0, -min_gap)`.
    pub floor: f64,
}

/// Minimum dissipativity gap of the same continuous probes on a sequence
/// of grids. `make` builds the coefficients on each grid.
pub fn refinement_trend<F>(
    ns: &[usize],
    d: usize,
    m: usize,
    p: PExponent,
    n_samples: usize,
    seed: u64,
    make: F,
) -> Result<Vec<RefinementLevel>>
where
    F: Fn(Arc<Grid>) -> Result<CoefficientField>,
{
    ns.iter()
        .map(|&n| {
            let grid = Arc::new(Grid::unit(&vec![n + 1; d])?);
            let form = assemble_form(&make(grid.clone())?)?;
            let kmax = probes::DEFAULT_KMAX;
            let gaps: Vec<f64> = (0..n_samples)
                .into_par_iter()
                .map(|i| {
                    let u = BandLimitedProbe::draw(grid.lengths(), m, kmax, seed, i as u32).sample(&grid);
                    dissipativity_gap(&form, &u, p)
                })
                .collect::<Result<_>>()?;
            let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(RefinementLevel {
                n,
                h: grid.max_spacing(),
                min_gap,
                floor: (-min_gap).max(0.0),
            })
        })
        .collect()
}

/// Whether the negative part of the gap floor shrinks by at least `factor`
/// per refinement. Floors below `negligible` count as converged.
pub fn floor_shrinks(levels: &[RefinementLevel], factor: f64, negligible: f64) -> bool {
    levels.windows(2).all(|w| {
        let (a, b) = (w[0].floor, w[1].floor);
        b <= negligible || b * factor <= a
    })
}

// ---------------------------------------------------------------------------
// counterexample search

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub p: f64,
    pub best_gap: f64,
    pub witness: VectorField,
    pub evaluations: usize,
    pub baseline_gaps: Vec<f64>,
    pub threshold: f64,
    /// `best_gap < -threshold`: discrete L_p-dissipativity is refuted.
    pub refutes: bool,
    pub seed: u64,
}

const SEARCH_BASELINE_RANDOM: usize = 8;

struct ModeParam {
    lengths: Vec<f64>,
    m: usize,
    modes: Vec<[usize; 2]>,
}

impl ModeParam {
    fn dim(&self) -> usize {
        2 * self.m * self.modes.len()
    }

    fn field(&self, grid: &Arc<Grid>, x: &[f64]) -> VectorField {
        let m = self.m;
        VectorField::from_fn(grid.clone(), m, |pt, v| {
            for z in v.iter_mut() {
                *z = Complex64::new(0.0, 0.0);
            }
            for (j, k) in self.modes.iter().enumerate() {
                let mut basis = 1.0;
                for (axis, l) in self.lengths.iter().enumerate() {
                    basis *= (std::f64::consts::PI * k[axis] as f64 * pt[axis] / l).cos();
                }
                for a in 0..m {
                    let o = 2 * (j * m + a);
                    v[a] += Complex64::new(x[o], x[o + 1]) * basis;
                }
            }
        })
    }
}

/// Minimises the dissipativity gap over band-limited fields: a baseline of
/// structured and random probes, then a (1+1) evolution strategy for half
/// of `budget` gap evaluations and finite-difference gradient descent for
/// the rest. Failure to find a negative gap proves nothing.
pub fn search_counterexample(
    c: &CoefficientField,
    p: PExponent,
    budget: usize,
    seed: u64,
    kappa: f64,
) -> Result<SearchReport> {
    let form = assemble_form(c)?;
    let grid = form.grid().clone();
    let m = form.m();
    let threshold = gap_tolerance(kappa, &grid);

    let mut baseline = probes::structured_fields(&grid, m);
    let kmax = probes::DEFAULT_KMAX.min(probes::resolved_kmax(&grid)).max(1);
    let draws: Vec<BandLimitedProbe> = (0..SEARCH_BASELINE_RANDOM)
        .map(|i| BandLimitedProbe::draw(grid.lengths(), m, kmax, seed, i as u32))
        .collect();
    baseline.extend(draws.iter().map(|d| d.sample(&grid)));
    let baseline_gaps: Vec<f64> = baseline
        .iter()
        .map(|u| dissipativity_gap(&form, u, p))
        .collect::<Result<_>>()?;
    let (mut best_idx, mut best_gap) = (0, f64::INFINITY);
    for (i, &g) in baseline_gaps.iter().enumerate() {
        if g < best_gap {
            best_idx = i;
            best_gap = g;
        }
    }
    let mut witness = baseline[best_idx].clone();
    let mut evaluations = 0usize;

    if budget > 0 {
        let d = grid.dim();
        let k1max = if d == 2 { kmax } else { 0 };
        let modes: Vec<[usize; 2]> = (0..=kmax).flat_map(|k0| (0..=k1max).map(move |k1| [k0, k1])).collect();
        let param = ModeParam {
            lengths: grid.lengths().to_vec(),
            m,
            modes,
        };
        // start from the best random draw, re-expressed in the mode basis
        let start_probe = {
            let random_gaps = &baseline_gaps[baseline.len() - SEARCH_BASELINE_RANDOM..];
            let j = random_gaps
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j)
                .unwrap_or(0);
            j as u32
        };
        let mut x = {
            // redraw the same stream to recover the amplitudes
            let mut r = rng::stream(seed, rng::stream_id(0xB17D, start_probe));
            let mut x = vec![0.0; param.dim()];
            for (j, k) in param.modes.iter().enumerate() {
                let damp = 1.0 / (1.0 + (k[0] * k[0] + k[1] * k[1]) as f64);
                for a in 0..m {
                    let z = rng::complex_normal(&mut r) * damp;
                    x[2 * (j * m + a)] = z.re;
                    x[2 * (j * m + a) + 1] = z.im;
                }
            }
            x
        };
        let objective = |x: &[f64]| -> f64 {
            let u = param.field(&grid, x);
            dissipativity_gap(&form, &u, p).unwrap_or(f64::INFINITY)
        };
        let mut fx = objective(&x);
        evaluations += 1;
        let mut r = rng::stream(seed, rng::stream_id(0x5EA2, 0));
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut sigma = 0.3 * norm(&x) / (param.dim() as f64).sqrt();
        let es_budget = budget / 2;
        while evaluations < es_budget {
            let cand: Vec<f64> = x.iter().map(|xi| xi + sigma * rng::normal(&mut r)).collect();
            let fc = objective(&cand);
            evaluations += 1;
            if fc < fx {
                x = cand;
                fx = fc;
                sigma *= 1.5;
            } else {
                sigma *= 0.9;
            }
        }
        // gradient phase
        let mut step = 0.1 * norm(&x);
        while evaluations + param.dim() < budget {
            let hstep = 1e-6 * norm(&x).max(1e-3);
            let mut grad = vec![0.0; param.dim()];
            for i in 0..param.dim() {
                let mut xp = x.clone();
                xp[i] += hstep;
                grad[i] = (objective(&xp) - fx) / hstep;
                evaluations += 1;
            }
            let gn = norm(&grad);
            if !(gn > 0.0 && gn.is_finite()) {
                break;
            }
            let mut improved = false;
            while evaluations < budget && step > 1e-12 {
                let cand: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g / gn).collect();
                let fc = objective(&cand);
                evaluations += 1;
                if fc < fx {
                    x = cand;
                    fx = fc;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if fx < best_gap {
            best_gap = fx;
            witness = param.field(&grid, &x);
        }
    }

    Ok(SearchReport {
        p: p.p(),
        best_gap,
        witness,
        evaluations,
        baseline_gaps,
        threshold,
        refutes: best_gap < -threshold,
        seed,
    })
}
