//! Experiment configuration, orchestration and persistence for the `lab`
//! binary.
//!
//! Each run writes into `<out>/<subcommand>-<hash12>-seed<seed>/`:
//! `verdicts.json` (deterministic), `run.json` (adds tool version and wall
//! clock) and CSV tables whose first line is `# config_hash=..., seed=...`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::calculus;
use crate::coefficients::{ellipticity_constants, make_coefficients, CoefficientField, EllipticityConstants, Family};
use crate::criterion::{
    admissible_p_interval, certify_on_form, compare_intervals, search_counterexample, CertifyOptions,
    IntervalComparison, PInterval, UpperBound, DEFAULT_KAPPA,
};
use crate::error::{LabError, Result};
use crate::field::{lp_norm, PExponent, VectorField};
use crate::form::assemble_form;
use crate::grid::{Grid, GridSpec};
use crate::io;
use crate::probes::{self, BandLimitedProbe};
use crate::projection::{project_onto_lp_ball, OUTER_TOL};
use crate::semigroup::{evolve_with, Scheme, Stepper, StepperConfig, REPORT_TOL};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Either the literal string `"auto-interval"` or a list of exponents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "PSelectionRepr", into = "PSelectionRepr")]
pub enum PSelection {
    #[default]
    AutoInterval,
    List(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PSelectionRepr {
    Name(String),
    List(Vec<f64>),
}

impl TryFrom<PSelectionRepr> for PSelection {
    type Error = String;

    fn try_from(r: PSelectionRepr) -> std::result::Result<Self, String> {
        match r {
            PSelectionRepr::Name(s) if s == "auto-interval" => Ok(PSelection::AutoInterval),
            PSelectionRepr::Name(s) => Err(format!("unknown p selection {s:?}")),
            PSelectionRepr::List(v) => Ok(PSelection::List(v)),
        }
    }
}

impl From<PSelection> for PSelectionRepr {
    fn from(p: PSelection) -> Self {
        match p {
            PSelection::AutoInterval => PSelectionRepr::Name("auto-interval".into()),
            PSelection::List(v) => PSelectionRepr::List(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub field: PathBuf,
    pub p: f64,
    #[serde(default = "default_project_tol")]
    pub tol: f64,
}

fn default_project_tol() -> f64 {
    OUTER_TOL
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    /// Initial field file; band-limited probe 0 when absent.
    #[serde(default)]
    pub initial: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculusConfig {
    #[serde(default = "default_hs")]
    pub hs: Vec<f64>,
    #[serde(default = "default_convexity_trials")]
    pub convexity_trials: usize,
    #[serde(default = "default_young_draws")]
    pub young_draws: usize,
}

impl Default for CalculusConfig {
    fn default() -> Self {
        CalculusConfig {
            hs: default_hs(),
            convexity_trials: default_convexity_trials(),
            young_draws: default_young_draws(),
        }
    }
}

fn default_hs() -> Vec<f64> {
    vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]
}

fn default_convexity_trials() -> usize {
    1000
}

fn default_young_draws() -> usize {
    100_000
}

fn default_m() -> usize {
    1
}

fn default_stepper() -> StepperConfig {
    StepperConfig {
        scheme: Scheme::ImplicitEuler,
        dt: 0.01,
        horizon: 0.1,
    }
}

fn default_samples() -> usize {
    32
}

fn default_budget() -> usize {
    200
}

fn default_family() -> Family {
    Family::VectorLaplacian { scale: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_family")]
    pub coefficients: Family,
    #[serde(default)]
    pub p: PSelection,
    #[serde(default = "default_stepper")]
    pub stepper: StepperConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default = "default_budget")]
    pub search_budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<ProjectConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calculus: Option<CalculusConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::from_spec(&self.grid)?;
        if self.m == 0 {
            return Err(LabError::invalid("m must be at least 1"));
        }
        self.stepper.validate()?;
        if let PSelection::List(ps) = &self.p {
            if ps.is_empty() {
                return Err(LabError::invalid("p list must not be empty"));
            }
            for &p in ps {
                PExponent::new(p)?;
            }
        }
        if let Some(k) = self.kappa {
            if !(k.is_finite() && k >= 0.0) {
                return Err(LabError::invalid("kappa must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(DEFAULT_KAPPA)
    }

    /// SHA-256 of the canonical JSON of the config without its output
    /// directory, hex encoded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A config together with the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config = ExperimentConfig::from_json(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Experiment { config, base_dir })
    }

    pub fn new(config: ExperimentConfig, base_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        Ok(Experiment {
            config,
            base_dir: base_dir.into(),
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::from_spec(&self.config.grid)?))
    }

    fn coefficients(&self, grid: &Arc<Grid>) -> Result<CoefficientField> {
        let family = match &self.config.coefficients {
            Family::File { path } => Family::File {
                path: self.resolve(path),
            },
            f => f.clone(),
        };
        make_coefficients(grid.clone(), self.config.m, &family, self.config.seed)
    }

    fn out_root(&self) -> PathBuf {
        match &self.config.out {
            Some(o) => self.resolve(o),
            None => PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Certify,
    Interval,
    Project,
    Evolve,
    Search,
    VerifyCalculus,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Certify => "certify",
            Subcommand::Interval => "interval",
            Subcommand::Project => "project",
            Subcommand::Evolve => "evolve",
            Subcommand::Search => "search",
            Subcommand::VerifyCalculus => "verify-calculus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub subcommand: Subcommand,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    #[serde(default)]
    pub constants: Option<EllipticityConstants>,
    #[serde(default)]
    pub interval: Option<PInterval>,
    #[serde(default)]
    pub comparison: Option<IntervalComparison>,
    pub verdicts: Value,
    pub artifacts: Vec<String>,
    /// Every asserted check passed.
    pub passed: bool,
    pub run_dir: PathBuf,
    pub version: String,
    pub wall_clock_seconds: f64,
}

impl RunRecord {
    /// The record without tool version, wall clock and run directory.
    pub fn deterministic_view(&self) -> Value {
        let mut config = self.config.clone();
        config.out = None;
        json!({
            "subcommand": self.subcommand,
            "config": config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "constants": self.constants,
            "interval": self.interval,
            "comparison": self.comparison,
            "verdicts": self.verdicts,
            "artifacts": self.artifacts,
            "passed": self.passed,
        })
    }
}

struct RunContext {
    dir: PathBuf,
    hash: String,
    seed: u64,
    artifacts: Vec<String>,
}

impl RunContext {
    fn create(exp: &Experiment, sub: Subcommand) -> Result<Self> {
        let hash = exp.config.hash();
        let seed = exp.config.seed;
        let dir = exp
            .out_root()
            .join(format!("{}-{}-seed{}", sub.name(), &hash[..12], seed));
        fs::create_dir_all(&dir)?;
        Ok(RunContext {
            dir,
            hash,
            seed,
            artifacts: Vec::new(),
        })
    }

    fn csv_header(&self) -> String {
        format!("# config_hash={}, seed={}\n", self.hash, self.seed)
    }

    fn write_csv(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), format!("{}{}", self.csv_header(), body))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_field(&mut self, name: &str, u: &VectorField) -> Result<()> {
        io::write_field(&self.dir.join(name), u)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

struct Outcome {
    constants: Option<EllipticityConstants>,
    interval: Option<PInterval>,
    comparison: Option<IntervalComparison>,
    verdicts: Value,
    passed: bool,
}

fn finish(exp: &Experiment, sub: Subcommand, ctx: RunContext, out: Outcome, start: Instant) -> Result<RunRecord> {
    let mut artifacts = ctx.artifacts.clone();
    artifacts.push("verdicts.json".into());
    artifacts.push("run.json".into());
    let record = RunRecord {
        subcommand: sub,
        config: exp.config.clone(),
        config_hash: ctx.hash.clone(),
        seed: ctx.seed,
        constants: out.constants,
        interval: out.interval,
        comparison: out.comparison,
        verdicts: out.verdicts,
        artifacts,
        passed: out.passed,
        run_dir: ctx.dir.clone(),
        version: VERSION.to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let det = serde_json::to_string_pretty(&record.deterministic_view())?;
    fs::write(ctx.dir.join("verdicts.json"), det + "\n")?;
    fs::write(ctx.dir.join("run.json"), serde_json::to_string_pretty(&record)? + "\n")?;
    Ok(record)
}

/// Exponents for a run plus whether each lies in the admissible interval.
pub fn exponents_for(selection: &PSelection, interval: &PInterval) -> Vec<(f64, bool)> {
    match selection {
        PSelection::List(ps) => ps.iter().map(|&p| (p, interval.contains(p))).collect(),
        PSelection::AutoInterval => match interval.p_plus {
            UpperBound::Finite(hi) => {
                let lo = interval.p_minus;
                let below = 1.0 + 0.9 * (lo - 1.0);
                vec![(lo, true), (2.0, true), (hi, true), (below, false), (hi * 1.1, false)]
            }
            UpperBound::Unbounded => vec![(1.1, true), (2.0, true), (10.0, true)],
        },
    }
}

fn setup_interval(
    exp: &Experiment,
    grid: &Arc<Grid>,
) -> Result<(CoefficientField, EllipticityConstants, PInterval, IntervalComparison)> {
    let c = exp.coefficients(grid)?;
    let consts = ellipticity_constants(&c)?;
    let interval = admissible_p_interval(&consts)?;
    let comparison = compare_intervals(&interval, grid.dim() as u32)?;
    Ok((c, consts, interval, comparison))
}

pub fn run_interval(exp: &Experiment) -> Result<RunRecord> {
    let start = Instant::now();
    let sub = Subcommand::Interval;
    let grid = exp.grid()?;
    let (_, consts, interval, comparison) = setup_interval(exp, &grid)?;
    let mut ctx = RunContext::create(exp, sub)?;
    let mut body = String::from("d,sobolev_lower,sobolev_upper,p_minus,p_plus,contained\n");
    let mut rows = Vec::new();
    for d in 1..=20u32 {
        let cmp = compare_intervals(&interval, d)?;
        let fmt_rat = |r: Option<(u64, u64)>| r.map_or("inf".to_string(), |(a, b)| format!("{a}/{b}"));
        let hi = interval
            .p_plus_finite()
            .map_or("inf".to_string(), |v| format!("{v:.17e}"));
        body.push_str(&format!(
            "{d},{},{},{:.17e},{hi},{}\n",
            fmt_rat(Some(cmp.sobolev.lower)),
            fmt_rat(cmp.sobolev.upper),
            interval.p_minus,
            cmp.contained
        ));
        rows.push(cmp);
    }
    ctx.write_csv("comparison.csv", &body)?;
    let out = Outcome {
        constants: Some(consts),
        interval: Some(interval),
        comparison: Some(comparison),
        verdicts: json!({ "interval": interval.to_string(), "by_dimension": rows }),
        passed: true,
    };
    finish(exp, sub, ctx, out, start)
}

pub fn run_certify(exp: &Experiment) -> Result<RunRecord> {
    let start = Instant::now();
    let sub = Subcommand::Certify;
    let cfg = &exp.config;
    let grid = exp.grid()?;
    let (c, consts, interval, comparison) = setup_interval(exp, &grid)?;
    let form = assemble_form(&c)?;
    let stepper = Stepper::new(&form, Scheme::ImplicitEuler, cfg.stepper.dt)?;
    let opts = CertifyOptions {
        kappa: cfg.kappa(),
        ..CertifyOptions::default()
    };
    let mut ctx = RunContext::create(exp, sub)?;
    let mut verdicts = Vec::new();
    let mut summary =
        String::from("p,inside,passed,dissipativity_pass,evolution_pass,worst_gap,gap_tolerance,worst_ratio,samples\n");
    let mut gaps_csv = String::from("p,probe,gap\n");
    let mut passed = true;
    for (p, inside) in exponents_for(&cfg.p, &interval) {
        let pe = PExponent::new(p)?;
        let v = certify_on_form(
            &form,
            Some(&stepper),
            pe,
            cfg.samples,
            cfg.seed,
            cfg.stepper.steps(),
            &opts,
        )?;
        if inside && !v.passed {
            passed = false;
        }
        summary.push_str(&format!(
            "{:.17e},{inside},{},{},{},{:.17e},{:.17e},{:.17e},{}\n",
            p,
            v.passed,
            v.dissipativity_pass,
            v.evolution_pass,
            v.worst_gap,
            v.gap_tolerance,
            v.worst_ratio,
            v.sample_count
        ));
        for (i, g) in v.gaps.iter().enumerate() {
            gaps_csv.push_str(&format!("{p:.17e},{i},{g:.17e}\n"));
        }
        verdicts.push(json!({ "inside_interval": inside, "asserted": inside, "verdict": v }));
    }
    ctx.write_csv("certify.csv", &summary)?;
    ctx.write_csv("gaps.csv", &gaps_csv)?;
    let out = Outcome {
        constants: Some(consts),
        interval: Some(interval),
        comparison: Some(comparison),
        verdicts: Value::Array(verdicts),
        passed,
    };
    finish(exp, sub, ctx, out, start)
}

fn extension_of(path: &Path) -> String {
    path.extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bin".into())
}

pub fn run_project(exp: &Experiment) -> Result<RunRecord> {
    let start = Instant::now();
    let sub = Subcommand::Project;
    let pc = exp
        .config
        .project
        .as_ref()
        .ok_or_else(|| LabError::invalid("config has no `project` section"))?;
    let input = exp.resolve(&pc.field);
    let bytes = fs::read(&input)?;
    let json_fmt = extension_of(&input).eq_ignore_ascii_case("json");
    let f = io::decode_field(&bytes, json_fmt)?;
    let p = PExponent::new(pc.p)?;
    let mut ctx = RunContext::create(exp, sub)?;
    let name = format!("projected.{}", extension_of(&input));
    let result = project_onto_lp_ball(&f, p, pc.tol)?;
    if result.multiplier == 0.0 {
        ctx.write_bytes(&name, &bytes)?;
    } else {
        ctx.write_field(&name, &result.projected)?;
    }
    let s = result.summary();
    let norm_in = lp_norm(&f, p)?;
    let norm_out = lp_norm(&result.projected, p)?;
    let out = Outcome {
        constants: None,
        interval: None,
        comparison: None,
        verdicts: json!({
            "t": s.t,
            "residuals": { "outer": s.outer_residual, "inner": s.inner_residual },
            "iterations": { "outer": s.outer_iterations, "inner": s.inner_iterations },
            "input_norm": norm_in,
            "output_norm": norm_out,
            "inside_ball": result.multiplier == 0.0,
        }),
        passed: true,
    };
    finish(exp, sub, ctx, out, start)
}

pub fn run_evolve(exp: &Experiment) -> Result<RunRecord> {
    let start = Instant::now();
    let sub = Subcommand::Evolve;
    let cfg = &exp.config;
    let grid = exp.grid()?;
    let (c, consts, interval, comparison) = setup_interval(exp, &grid)?;
    let form = assemble_form(&c)?;
    let u0 = match cfg.evolve.as_ref().and_then(|e| e.initial.as_ref()) {
        Some(path) => {
            let u = io::read_field(&exp.resolve(path))?;
            form.check_field(&u)?;
            u
        }
        None => {
            let kmax = probes::DEFAULT_KMAX.min(probes::resolved_kmax(&grid));
            BandLimitedProbe::draw(grid.lengths(), cfg.m, kmax, cfg.seed, 0).sample(&grid)
        }
    };
    let ps = exponents_for(&cfg.p, &interval);
    let pe: Vec<PExponent> = ps.iter().map(|&(p, _)| PExponent::new(p)).collect::<Result<_>>()?;
    let stepper = Stepper::new(&form, cfg.stepper.scheme, cfg.stepper.dt)?;
    let rep = evolve_with(&stepper, &u0, &pe, cfg.stepper.steps())?;
    let mut ctx = RunContext::create(exp, sub)?;
    ctx.write_csv("trajectory.csv", &rep.to_csv())?;
    let asserted = cfg.stepper.scheme == Scheme::ImplicitEuler;
    let mut passed = true;
    let mut per_p = Vec::new();
    for (j, &(p, inside)) in ps.iter().enumerate() {
        let r = &rep.ratios[j];
        let monotone = r.windows(2).all(|w| w[1] <= w[0] * (1.0 + REPORT_TOL)) && r[0] <= 1.0 + REPORT_TOL;
        let contracts = rep.worst[j] <= 1.0 + REPORT_TOL;
        if asserted && inside && !contracts {
            passed = false;
        }
        per_p.push(json!({
            "p": p,
            "inside_interval": inside,
            "asserted": asserted && inside,
            "worst_ratio": rep.worst[j],
            "final_ratio": r.last().copied(),
            "monotone": monotone,
            "contracts": contracts,
        }));
    }
    let out = Outcome {
        constants: Some(consts),
        interval: Some(interval),
        comparison: Some(comparison),
        verdicts: json!({ "scheme": rep.scheme, "dt": rep.dt, "steps": rep.times.len(), "exponents": per_p }),
        passed,
    };
    finish(exp, sub, ctx, out, start)
}

pub fn run_search(exp: &Experiment) -> Result<RunRecord> {
    let start = Instant::now();
    let sub = Subcommand::Search;
    let cfg = &exp.config;
    let grid = exp.grid()?;
    let (c, consts, interval, comparison) = setup_interval(exp, &grid)?;
    let mut ctx = RunContext::create(exp, sub)?;
    let mut body = String::from("p,inside,best_gap,threshold,refutes,evaluations\n");
    let mut reports = Vec::new();
    for (i, (p, inside)) in exponents_for(&cfg.p, &interval).into_iter().enumerate() {
        let rep = search_counterexample(&c, PExponent::new(p)?, cfg.search_budget, cfg.seed, cfg.kappa())?;
        body.push_str(&format!(
            "{p:.17e},{inside},{:.17e},{:.17e},{},{}\n",
            rep.best_gap, rep.threshold, rep.refutes, rep.evaluations
        ));
        let wname = format!("witness_{i}.json");
        ctx.write_field(&wname, &rep.witness)?;
        reports.push(json!({
            "p": p,
            "inside_interval": inside,
            "best_gap": rep.best_gap,
            "threshold": rep.threshold,
            "refutes": rep.refutes,
            "evaluations": rep.evaluations,
            "baseline_gaps": rep.baseline_gaps,
            "witness": wname,
        }));
    }
    ctx.write_csv("search.csv", &body)?;
    let out = Outcome {
        constants: Some(consts),
        interval: Some(interval),
        comparison: Some(comparison),
        verdicts: Value::Array(reports),
        passed: true,
    };
    finish(exp, sub, ctx, out, start)
}

pub fn run_verify_calculus(exp: &Experiment) -> Result<RunRecord> {
    let start = Instant::now();
    let sub = Subcommand::VerifyCalculus;
    let cfg = &exp.config;
    let cc = cfg.calculus.clone().unwrap_or_default();
    let rows = calculus::verification_suite(&cc.hs, cfg.seed)?;
    let mut passed = rows.iter().all(|r| r.pass);
    let mut ctx = RunContext::create(exp, sub)?;
    let mut body = String::from("check,h,residual,order,target_order,pass\n");
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6}"));
    for r in &rows {
        body.push_str(&format!(
            "{},{:.17e},{:.17e},{},{},{}\n",
            r.check,
            r.h,
            r.residual,
            opt(r.order),
            opt(r.target_order),
            r.pass
        ));
    }
    ctx.write_csv("calculus.csv", &body)?;

    let mut convexity = Vec::new();
    for p in [1.3, 2.0, 4.0] {
        let rep = calculus::strict_convexity_probe(p, 2, cc.convexity_trials, cfg.seed)?;
        passed &= rep.violations == 0;
        convexity.push(rep);
    }
    let young = young_sweep(cc.young_draws, cfg.seed)?;
    passed &= young.min_slack >= 0.0 && young.mismatches == 0;
    let out = Outcome {
        constants: None,
        interval: None,
        comparison: None,
        verdicts: json!({ "rows": rows, "convexity": convexity, "young": young }),
        passed,
    };
    finish(exp, sub, ctx, out, start)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungSweep {
    pub draws: usize,
    /// Smallest slack after subtracting the rounding allowance.
    pub min_slack: f64,
    /// Draws where the equality flag disagrees with a vanishing slack.
    pub mismatches: usize,
}

/// Young's inequality on random `(a, b, p)`, half of them on the equality
/// curve `b = a^{p-1}`.
pub fn young_sweep(draws: usize, seed: u64) -> Result<YoungSweep> {
    use crate::rng;
    let mut r = rng::stream(seed, rng::stream_id(0x7005, 0));
    let mut min_slack = f64::INFINITY;
    let mut mismatches = 0;
    for i in 0..draws {
        let p = rng::uniform(&mut r, 1.05, 8.0);
        let a = rng::uniform(&mut r, 0.0, 3.0);
        let b = if i % 2 == 0 {
            a.powf(p - 1.0)
        } else {
            rng::uniform(&mut r, 0.0, 3.0)
        };
        let y = calculus::young_equality_check(a, b, p, 1e-12)?;
        min_slack = min_slack.min(y.slack + y.allowance);
        let near_zero = y.slack.abs() <= 1e-9 * (a * b).max(1.0);
        if y.equality && !near_zero {
            mismatches += 1;
        }
    }
    Ok(YoungSweep {
        draws,
        min_slack,
        mismatches,
    })
}

pub fn run(exp: &Experiment, sub: Subcommand) -> Result<RunRecord> {
    match sub {
        Subcommand::Certify => run_certify(exp),
        Subcommand::Interval => run_interval(exp),
        Subcommand::Project => run_project(exp),
        Subcommand::Evolve => run_evolve(exp),
        Subcommand::Search => run_search(exp),
        Subcommand::VerifyCalculus => run_verify_calculus(exp),
    }
}

/// Thread pool sized by `LAB_THREADS` (all cores when unset or invalid).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = std::env::var("LAB_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| LabError::invalid(format!("thread pool: {e}")))
}
