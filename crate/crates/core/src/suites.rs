//! Named property suites: each runs a batch of probes and reports the worst
//! observed value against its limit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Solver, SolverParams};
use crate::error::HarnessError;
use crate::estimates::{self, ConstantsLedger, ScanCell};
use crate::exec::{self, Execution};
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::harness;
use crate::spectral::{self, NormConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    /// Pass iff `value ≤ limit`.
    AtMost,
    /// Pass iff `value ≥ limit`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub label: String,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl SuiteCheck {
    pub fn new(label: impl Into<String>, value: f64, bound: Bound, limit: f64) -> Self {
        let pass = match bound {
            Bound::AtMost => value <= limit,
            Bound::AtLeast => value >= limit,
        };
        SuiteCheck {
            label: label.into(),
            value,
            limit,
            bound,
            pass,
        }
    }
}

impl std::fmt::Display for SuiteCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        write!(
            f,
            "[{}] {}: {:.6e} (need {} {:.3e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.label,
            self.value,
            op,
            self.limit
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: String,
    pub checks: Vec<SuiteCheck>,
    /// Per-cell worst ratios of the per-mode scan, when the suite runs one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<ScanCell>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            schema: "fracns.suite.v1".into(),
            suite: suite.into(),
            checks: Vec::new(),
            cells: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn cells_csv(&self) -> String {
        let mut out = String::from("alpha,beta,delta,worst_ratio\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{:e}\n", c.alpha, c.beta, c.delta, c.worst_ratio));
        }
        out
    }
}

pub const SUITES: [&str; 4] = ["lemma32", "interpolation", "energy", "scaling"];

/// Runs a suite by name with its default size; `None` for unknown names.
pub fn run_named(name: &str, seed: u64, exec: Execution) -> Option<Result<SuiteReport, HarnessError>> {
    Some(match name {
        "lemma32" => lemma32(&Lemma32Options { seed, ..Default::default() }, exec),
        "interpolation" => interpolation(&InterpolationOptions { seed, ..Default::default() }, exec),
        "energy" => energy(&EnergyOptions::default(), exec),
        "scaling" => scaling(&ScalingOptions::default(), exec),
        _ => return None,
    })
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn random_vector_field(grid: GridSpec, rng: &mut ChaCha8Rng, project: bool) -> Result<SpectralField, HarnessError> {
    let slope = uniform(rng, 1.0, 4.0);
    let cutoff = rng.random_range(1..=grid.dealias_cutoff().max(1));
    let u = harness::random_field(grid, rng, slope, cutoff, false)?;
    Ok(if project { spectral::leray_project(&u) } else { u })
}

fn stream(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma32Options {
    pub alphas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub betas_per_cell: usize,
    pub k_max: u32,
    pub random_fields: usize,
    pub grid_n: usize,
    pub seed: u64,
    pub ledger: ConstantsLedger,
}

impl Default for Lemma32Options {
    fn default() -> Self {
        Lemma32Options {
            alphas: (0..=10).map(|i| 0.75 + 0.05 * i as f64).collect(),
            deltas: (1..=10).map(|i| 0.1 * i as f64).collect(),
            betas_per_cell: 6,
            k_max: 128,
            random_fields: 1000,
            grid_n: 32,
            seed: 0,
            ledger: ConstantsLedger::default(),
        }
    }
}

/// Per-mode scan over the parameter grid plus field-level checks on random
/// divergence-free fields with random admissible orders.
pub fn lemma32(opts: &Lemma32Options, exec: Execution) -> Result<SuiteReport, HarnessError> {
    let mut rep = SuiteReport::new("lemma32");
    let cells = estimates::permode_grid_search(
        &opts.alphas,
        &opts.deltas,
        opts.betas_per_cell,
        opts.k_max,
        &opts.ledger,
        exec,
    )?;
    let worst_scan = cells.iter().map(|c| c.worst_ratio).fold(0.0, f64::max);
    rep.checks.push(SuiteCheck::new(
        format!("per-mode scan worst ratio over {} cells, k_max={}", cells.len(), opts.k_max),
        worst_scan,
        Bound::AtMost,
        1.0,
    ));
    rep.cells = cells;

    let grid = GridSpec::new(opts.grid_n)?;
    let ratios = exec::map_range(exec, opts.random_fields, |i| -> Result<f64, HarnessError> {
        let mut rng = stream(opts.seed, i);
        let u = random_vector_field(grid, &mut rng, true)?;
        let alpha = uniform(&mut rng, 0.75, 1.25);
        let delta = uniform(&mut rng, 0.0, 1.0).max(1e-3);
        let beta = uniform(&mut rng, (alpha - 0.5 * delta).max(0.5 * delta), alpha);
        let s = uniform(&mut rng, 0.0, 2.0);
        Ok(estimates::frac_lap_diff_check(&u, alpha, beta, delta, s, &opts.ledger)?.ratio)
    });
    let mut worst = 0.0f64;
    for r in ratios {
        worst = worst.max(r?);
    }
    rep.checks.push(SuiteCheck::new(
        format!("field-level worst ratio over {} random fields at N={}", opts.random_fields, opts.grid_n),
        worst,
        Bound::AtMost,
        1.0,
    ));
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationOptions {
    pub fields: usize,
    pub grid_n: usize,
    pub seed: u64,
}

impl Default for InterpolationOptions {
    fn default() -> Self {
        InterpolationOptions {
            fields: 1000,
            grid_n: 16,
            seed: 0,
        }
    }
}

/// Relative margin `(rhs − lhs)/rhs`.
fn margin(sides: (f64, f64)) -> f64 {
    let (lhs, rhs) = sides;
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (rhs - lhs) / rhs
    }
}

/// Both interpolation inequalities on random fields (worst margin) and on
/// single modes (worst relative gap from equality).
pub fn interpolation(opts: &InterpolationOptions, exec: Execution) -> Result<SuiteReport, HarnessError> {
    let mut rep = SuiteReport::new("interpolation");
    let grid = GridSpec::new(opts.grid_n)?;
    let results = exec::map_range(exec, opts.fields, |i| -> Result<[f64; 4], HarnessError> {
        let mut rng = stream(opts.seed, i);
        let u = random_vector_field(grid, &mut rng, false)?;
        let beta = uniform(&mut rng, 0.75, 1.5);
        let s = uniform(&mut rng, (1.0 - beta).max(0.0), 1.0);
        let grad = margin(spectral::gradient_interpolation(&u, s, beta));
        let crit = margin(spectral::critical_interpolation(&u, beta));

        let mut single = SpectralField::zeros(grid);
        let top = grid.dealias_cutoff();
        let k = loop {
            let k = [0, 1, 2].map(|_| rng.random_range(-top..=top));
            if k != [0, 0, 0] {
                break k;
            }
        };
        let c = Complex64::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0));
        single.set_mode(k, [c, c * 0.5, Complex64::default()])?;
        let eq_grad = margin(spectral::gradient_interpolation(&single, s, beta)).abs();
        let eq_crit = margin(spectral::critical_interpolation(&single, beta)).abs();
        Ok([grad, crit, eq_grad, eq_crit])
    });
    let mut worst = [f64::INFINITY, f64::INFINITY, 0.0, 0.0];
    for r in results {
        let r = r?;
        worst[0] = worst[0].min(r[0]);
        worst[1] = worst[1].min(r[1]);
        worst[2] = worst[2].max(r[2]);
        worst[3] = worst[3].max(r[3]);
    }
    let n = opts.fields;
    rep.checks.push(SuiteCheck::new(
        format!("gradient interpolation worst margin over {n} fields"),
        worst[0],
        Bound::AtLeast,
        -1e-12,
    ));
    rep.checks.push(SuiteCheck::new(
        format!("critical interpolation worst margin over {n} fields"),
        worst[1],
        Bound::AtLeast,
        -1e-12,
    ));
    rep.checks.push(SuiteCheck::new(
        format!("gradient interpolation single-mode equality gap over {n} modes"),
        worst[2],
        Bound::AtMost,
        1e-12,
    ));
    rep.checks.push(SuiteCheck::new(
        format!("critical interpolation single-mode equality gap over {n} modes"),
        worst[3],
        Bound::AtMost,
        1e-12,
    ));
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyOptions {
    pub grid_n: usize,
    pub alpha: f64,
    pub t_end: f64,
    pub dts: (f64, f64),
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions {
            grid_n: 32,
            alpha: 1.25,
            t_end: 0.5,
            dts: (2e-3, 1e-3),
        }
    }
}

/// Energy-equality defect at two step sizes, plus the exactness of the
/// linear flow and the structural invariants along the finer run.
pub fn energy(opts: &EnergyOptions, exec: Execution) -> Result<SuiteReport, HarnessError> {
    let mut rep = SuiteReport::new("energy");
    let grid = GridSpec::new(opts.grid_n)?;
    let u0 = harness::taylor_green(grid);
    let params = |dt: f64| SolverParams {
        alpha: opts.alpha,
        dt,
        t_end: opts.t_end,
        ..SolverParams::default()
    };
    let coarse = Solver::with_execution(grid, params(opts.dts.0), exec)?.run(&u0)?;
    let fine = Solver::with_execution(grid, params(opts.dts.1), exec)?.run(&u0)?;
    let (d0, d1) = (dynamics::energy_budget_check(&coarse), dynamics::energy_budget_check(&fine));
    rep.checks.push(SuiteCheck::new(
        format!("energy defect ratio dt={} vs dt={} ({d0:.3e} / {d1:.3e})", opts.dts.0, opts.dts.1),
        d0 / d1,
        Bound::AtLeast,
        12.0,
    ));
    let last = fine.final_state.as_ref().expect("run keeps final state");
    rep.checks.push(SuiteCheck::new(
        "final divergence residual",
        last.divergence_residual(),
        Bound::AtMost,
        1e-10,
    ));
    let mean = (0..3).map(|c| last.component(c)[0].norm()).fold(0.0, f64::max);
    rep.checks.push(SuiteCheck::new("final zero-mode magnitude", mean, Bound::AtMost, 0.0));

    rep.checks.push(SuiteCheck::new(
        "linear flow relative error at t_end",
        linear_exactness_error(grid, opts.alpha, exec)?,
        Bound::AtMost,
        1e-12,
    ));
    Ok(rep)
}

/// Worst relative error of the linear flow against `e^{−|k|^{2α}t}u₀` over
/// several step sizes.
pub fn linear_exactness_error(grid: GridSpec, alpha: f64, exec: Execution) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u0 = random_vector_field(grid, &mut rng, true)?;
    let t_end = 0.7;
    let exact = u0.map_modes(|k2| (-k2.powf(alpha) * t_end).exp());
    let scale = spectral::sobolev_norm(&exact, NormConvention::L2);
    let mut worst = 0.0f64;
    for dt in [0.7, 0.1, 0.013, 1e-3] {
        let p = SolverParams {
            alpha,
            dt,
            t_end,
            nonlinear: false,
            ..SolverParams::default()
        };
        let rep = Solver::with_execution(grid, p, exec)?.run(&u0)?;
        let got = rep.final_state.expect("run keeps final state");
        let err = spectral::sobolev_norm(&(&got - &exact), NormConvention::L2) / scale;
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingOptions {
    pub grid_n: usize,
    pub alpha: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            grid_n: 32,
            alpha: 1.25,
            t_end: 0.5,
            dt: 5e-3,
        }
    }
}

/// Scaling-symmetry defects: identity (`r = 1`), linear flow and the full
/// system at `r = 2`.
pub fn scaling(opts: &ScalingOptions, exec: Execution) -> Result<SuiteReport, HarnessError> {
    let mut rep = SuiteReport::new("scaling");
    let grid = GridSpec::new(opts.grid_n)?;
    let u0 = harness::taylor_green(grid);
    let params = SolverParams {
        alpha: opts.alpha,
        dt: opts.dt,
        t_end: opts.t_end,
        ..SolverParams::default()
    };
    let id = harness::scaling_symmetry_check(&u0, 1, &params, exec)?;
    rep.checks.push(SuiteCheck::new("r=1 defect", id.defect, Bound::AtMost, 1e-14));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let small = GridSpec::new(16)?;
    let w0 = random_vector_field(small, &mut rng, true)?;
    let linear = SolverParams {
        nonlinear: false,
        ..params.clone()
    };
    let lin = harness::scaling_symmetry_check(&w0, 2, &linear, exec)?;
    rep.checks.push(SuiteCheck::new("linear r=2 defect", lin.defect, Bound::AtMost, 1e-12));

    let full = harness::scaling_symmetry_check(&u0, 2, &params, exec)?;
    rep.checks.push(SuiteCheck::new(
        format!("Taylor-Green r=2 defect (N={} vs {})", full.fine_n, full.coarse_n),
        full.defect,
        Bound::AtMost,
        1e-6,
    ));
    Ok(rep)
}
