//! Initial data, paired stability experiments, embedding-constant
//! calibration and the scaling-symmetry check.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{RunStatus, Solver, SolverParams, SHELL_ENERGY_LIMIT};
use crate::error::{EstimateError, HarnessError, SpectralError};
use crate::estimates::{self, ConstantsLedger, ForcingSeries, GronwallSpec, RadiusValue};
use crate::exec::{self, Execution};
use crate::fft::Fft3;
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::snapshot;
use crate::spectral::{self, NormConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumKind {
    TaylorGreen,
    RandomDivfree,
    File,
}

/// Rescaling target `‖u‖_{H^order} = value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetNorm {
    pub order: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSpec {
    pub kind: DatumKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_norm: Option<TargetNorm>,
    #[serde(default)]
    pub seed: u64,
    /// Random kind: `|û(k)| ∝ |k|^{−slope}`.
    #[serde(default = "default_slope")]
    pub spectrum_slope: f64,
    /// Random kind: largest `max_i |k_i|` excited; defaults to half the dealias cutoff.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<i64>,
    /// File kind: snapshot path (binary, or JSON by extension).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_slope() -> f64 {
    2.0
}

impl DatumSpec {
    pub fn taylor_green() -> Self {
        DatumSpec {
            kind: DatumKind::TaylorGreen,
            target_norm: None,
            seed: 0,
            spectrum_slope: default_slope(),
            cutoff: None,
            path: None,
        }
    }

    pub fn random(seed: u64) -> Self {
        DatumSpec {
            kind: DatumKind::RandomDivfree,
            seed,
            ..Self::taylor_green()
        }
    }

    pub fn with_target(mut self, order: f64, value: f64) -> Self {
        self.target_norm = Some(TargetNorm { order, value });
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if let Some(t) = self.target_norm {
            if !(t.value > 0.0 && t.value.is_finite()) {
                return Err(HarnessError::InvalidDatum(format!(
                    "target norm must be positive, got {}",
                    t.value
                )));
            }
            if !(t.order >= 0.0 && t.order.is_finite()) {
                return Err(HarnessError::InvalidDatum(format!(
                    "target order must be nonnegative, got {}",
                    t.order
                )));
            }
        }
        if !self.spectrum_slope.is_finite() {
            return Err(HarnessError::InvalidDatum("spectrum_slope must be finite".into()));
        }
        if self.kind == DatumKind::File && self.path.is_none() {
            return Err(HarnessError::InvalidDatum("file datum needs a path".into()));
        }
        Ok(())
    }
}

/// `(sin x₁ cos x₂ cos x₃, −cos x₁ sin x₂ cos x₃, 0)` from its eight exact
/// Fourier coefficients `(−i k₁/8, i k₂/8, 0)`, `k ∈ {±1}³`.
pub fn taylor_green(grid: GridSpec) -> SpectralField {
    let mut u = SpectralField::zeros(grid);
    for k2 in [-1i64, 1] {
        for k3 in [-1i64, 1] {
            let k = [1, k2, k3];
            let c = [
                Complex64::new(0.0, -0.125),
                Complex64::new(0.0, 0.125 * k2 as f64),
                Complex64::default(),
            ];
            u.set_mode(k, c).expect("unit modes fit every grid");
        }
    }
    u.set_divergence_free(true);
    u
}

/// True for the representative of each `±k` pair (first nonzero entry positive).
fn is_positive_half(k: [i64; 3]) -> bool {
    k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Gaussian coefficients shaped by `|k|^{−slope}` on `max|k_i| ≤ cutoff`,
/// Hermitian by construction. Only component 0 is filled when `scalar`.
pub fn random_field<R: Rng>(
    grid: GridSpec,
    rng: &mut R,
    slope: f64,
    cutoff: i64,
    scalar: bool,
) -> Result<SpectralField, HarnessError> {
    let half = (grid.n() / 2) as i64;
    if cutoff < 1 || cutoff >= half {
        return Err(HarnessError::InvalidDatum(format!(
            "cutoff {cutoff} outside [1, {}]",
            half - 1
        )));
    }
    let mut u = SpectralField::zeros(grid);
    for i in 0..grid.len() {
        let k = grid.mode(i);
        if !is_positive_half(k) || grid.max_abs_k(i) > cutoff {
            continue;
        }
        let amp = grid.k_sq(i).powf(-0.5 * slope);
        let mut v = [Complex64::default(); 3];
        for (c, z) in v.iter_mut().enumerate() {
            if scalar && c > 0 {
                break;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = Complex64::new(re, im) * amp;
        }
        u.set_mode(k, v)?;
    }
    Ok(u)
}

/// Rescales `u` so that `‖u‖_{H^order} = value` exactly.
pub fn rescale_to_norm(u: &SpectralField, target: TargetNorm) -> Result<SpectralField, HarnessError> {
    let norm = spectral::sobolev_norm(u, NormConvention::Inhomogeneous(target.order));
    if norm == 0.0 {
        return Err(HarnessError::InvalidDatum(
            "cannot rescale a zero field to a positive norm".into(),
        ));
    }
    Ok(u.scaled(target.value / norm))
}

pub fn default_cutoff(grid: &GridSpec) -> i64 {
    (grid.dealias_cutoff() / 2).max(1)
}

pub fn make_datum(spec: &DatumSpec, grid: GridSpec) -> Result<SpectralField, HarnessError> {
    spec.validate()?;
    let u = match spec.kind {
        DatumKind::TaylorGreen => taylor_green(grid),
        DatumKind::RandomDivfree => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let cutoff = spec.cutoff.unwrap_or_else(|| default_cutoff(&grid));
            let raw = random_field(grid, &mut rng, spec.spectrum_slope, cutoff, false)?;
            spectral::leray_project(&raw)
        }
        DatumKind::File => {
            let path = spec.path.as_ref().expect("validated");
            let snap = snapshot::load(path)?;
            if snap.field.grid().n() != grid.n() {
                return Err(SpectralError::GridMismatch.into());
            }
            let mut f = snap.field;
            if !f.is_divergence_free() {
                f = spectral::leray_project(&f);
            }
            f
        }
    };
    match spec.target_norm {
        Some(t) => rescale_to_norm(&u, t),
        None => Ok(u),
    }
}

/// Parameters shared by both runs of a paired experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySetup {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub s: f64,
    #[serde(default = "one")]
    pub delta: f64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub mollifier_eps: f64,
    #[serde(default)]
    pub ledger: ConstantsLedger,
}

fn one() -> f64 {
    1.0
}

impl StabilitySetup {
    fn solver_params(&self, order: f64) -> SolverParams {
        SolverParams {
            alpha: order,
            mollifier_eps: self.mollifier_eps,
            dt: self.dt,
            t_end: self.t_end,
            record_orders: vec![self.s],
            ..SolverParams::default()
        }
    }

    pub fn check_admissible(&self) -> Result<(), HarnessError> {
        estimates::check_admissible(self.alpha, self.beta, self.s, self.delta).map_err(|e| match e {
            EstimateError::Inadmissible(m) => HarnessError::Inadmissible(m),
            other => HarnessError::Inadmissible(other.to_string()),
        })
    }
}

pub const STABILITY_SCHEMA: &str = "fracns.stability.v1";
/// Relative slack of the domination test.
pub const DOMINATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema: String,
    pub setup: StabilitySetup,
    pub times: Vec<f64>,
    /// `f(t) = ‖u(t) − v(t)‖²_{H^s}`.
    pub f_series: Vec<f64>,
    /// Comparison-ODE solution `F(t)`.
    pub bound_series: Vec<f64>,
    pub bound_blowup_time: Option<f64>,
    pub dominated: bool,
    pub first_violation_time: Option<f64>,
    pub u_status: RunStatus,
    pub v_status: RunStatus,
    /// Set when a run stopped with an error (e.g. an unresolvable CFL limit).
    pub failure: Option<String>,
    pub forcing: ForcingSeries,
    pub gamma: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl StabilityReport {
    pub fn max_f(&self) -> f64 {
        self.f_series.iter().copied().fold(0.0, f64::max)
    }

    pub fn final_f(&self) -> f64 {
        self.f_series.last().copied().unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f,bound,grad_forcing,high_forcing\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}\n",
                self.times[i],
                self.f_series[i],
                self.bound_series[i],
                self.forcing.gradient[i],
                self.forcing.high[i]
            ));
        }
        out
    }
}

fn status_of(solver: &Solver, u: &SpectralField) -> Option<RunStatus> {
    let h1 = spectral::sobolev_norm(u, NormConvention::Inhomogeneous(1.0));
    if !(h1 <= solver.params().blowup_threshold) {
        return Some(RunStatus::BlowupDetected);
    }
    if solver.shell_fraction(u) > SHELL_ENERGY_LIMIT {
        return Some(RunStatus::ResolutionExhausted);
    }
    None
}

/// Runs `u` (order α) and `v` (order β) in lockstep, measures
/// `f = ‖u − v‖²_{H^s}` and the forcing norms of `u`, and compares `f`
/// with the comparison-ODE bound built from the calculators.
pub fn stability_experiment(
    u0: &SpectralField,
    v0: &SpectralField,
    setup: &StabilitySetup,
    exec: Execution,
) -> Result<StabilityReport, HarnessError> {
    setup.check_admissible()?;
    if u0.grid() != v0.grid() {
        return Err(SpectralError::GridMismatch.into());
    }
    let grid = *u0.grid();
    let su = Solver::with_execution(grid, setup.solver_params(setup.alpha), exec)?;
    let sv = Solver::with_execution(grid, setup.solver_params(setup.beta), exec)?;
    let (s, hi) = (setup.s, setup.s + setup.alpha + setup.delta);

    let mut times = Vec::new();
    let mut f_series = Vec::new();
    let mut forcing = ForcingSeries::zeros(Vec::new());
    let mut u_status = RunStatus::Completed;
    let mut v_status = RunStatus::Completed;
    let mut failure = None;

    let mut a = su.stepper(u0.clone());
    let mut b = sv.stepper(v0.clone());
    loop {
        let (u, v) = (a.state(), b.state());
        times.push(a.time());
        f_series.push(spectral::sobolev_norm_sq(&(u - v), NormConvention::Inhomogeneous(s)));
        forcing
            .gradient
            .push(spectral::weighted_energy(u, |k2| (1.0 + k2).powf(s) * k2));
        forcing
            .high
            .push(spectral::sobolev_norm_sq(u, NormConvention::Inhomogeneous(hi)));
        if let Some(st) = status_of(&su, u) {
            u_status = st;
        }
        if let Some(st) = status_of(&sv, v) {
            v_status = st;
        }
        if u_status != RunStatus::Completed || v_status != RunStatus::Completed || a.is_done() {
            break;
        }
        if let Err(e) = a.advance().and_then(|_| b.advance()) {
            failure = Some(e.to_string());
            break;
        }
    }
    forcing.times = times.clone();

    let spec = GronwallSpec::from_calculators(s, setup.alpha, setup.beta, setup.delta, &setup.ledger, forcing)?;
    let bound = estimates::gronwall_bound(&spec, f_series[0])?;
    let first_violation_time = times
        .iter()
        .zip(f_series.iter().zip(&bound.values))
        .find(|(_, (f, big_f))| **f > **big_f * (1.0 + DOMINATION_SLACK))
        .map(|(t, _)| *t);
    Ok(StabilityReport {
        schema: STABILITY_SCHEMA.into(),
        setup: setup.clone(),
        times,
        f_series,
        bound_series: bound.values,
        bound_blowup_time: bound.blowup_time,
        dominated: first_violation_time.is_none(),
        first_violation_time,
        u_status,
        v_status,
        failure,
        gamma: spec.gamma,
        c0: spec.c0,
        c1: spec.c1,
        c2: spec.c2,
        forcing: spec.forcing,
    })
}

/// One entry of an experiment ensemble: `v₀ = u₀ + perturbation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityCase {
    pub name: String,
    pub grid: GridSpec,
    pub datum: DatumSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<DatumSpec>,
    pub setup: StabilitySetup,
}

impl StabilityCase {
    pub fn data(&self) -> Result<(SpectralField, SpectralField), HarnessError> {
        let u0 = make_datum(&self.datum, self.grid)?;
        let v0 = match &self.perturbation {
            Some(p) => &u0 + &make_datum(p, self.grid)?,
            None => u0.clone(),
        };
        Ok((u0, v0))
    }

    pub fn run(&self, exec: Execution) -> Result<StabilityReport, HarnessError> {
        self.setup.check_admissible()?;
        let (u0, v0) = self.data()?;
        stability_experiment(&u0, &v0, &self.setup, exec)
    }
}

/// Runs independent cases concurrently; results keep the input order.
/// Cases run single-threaded internally when the ensemble is parallel.
pub fn stability_suite(
    cases: &[StabilityCase],
    exec: Execution,
) -> Vec<Result<StabilityReport, HarnessError>> {
    let inner = if exec.is_parallel() && cases.len() > 1 {
        Execution::Sequential
    } else {
        exec
    };
    exec::map_slice(exec, cases, |c| c.run(inner))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub perturbation: f64,
    pub beta: f64,
    /// `‖u₀ − v₀‖_{H^δ} + |α − β|`.
    pub distance: f64,
    pub dominated: bool,
    pub max_f: f64,
    /// `log₁₀(distance / ε₅₄)`.
    pub log10_conservatism_54: f64,
    /// `distance / ε_local`.
    pub conservatism_local: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub schema: String,
    pub m: f64,
    pub delta: f64,
    pub epsilon_54: RadiusValue,
    pub epsilon_local: f64,
    pub rows: Vec<ProbeRow>,
}

/// Ladder of `(perturbation size in H^δ, β)` pairs around a datum of order α.
pub fn epsilon_probe(
    u0: &SpectralField,
    setup: &StabilitySetup,
    ladder: &[(f64, f64)],
    seed: u64,
    exec: Execution,
) -> Result<ProbeTable, HarnessError> {
    let delta = setup.delta;
    let m = spectral::sobolev_norm(u0, NormConvention::Inhomogeneous(delta));
    let eps54 = estimates::epsilon_54(m, delta, &setup.ledger)?;

    let grid = *u0.grid();
    let inner = if exec.is_parallel() && ladder.len() > 1 {
        Execution::Sequential
    } else {
        exec
    };
    let results = exec::map_slice(exec, ladder, |&(size, beta)| {
        let setup = StabilitySetup {
            beta,
            ..setup.clone()
        };
        let v0 = if size > 0.0 {
            let p = make_datum(&DatumSpec::random(seed).with_target(delta, size), grid)?;
            u0 + &p
        } else {
            u0.clone()
        };
        stability_experiment(u0, &v0, &setup, inner).map(|r| (size, beta, r))
    });

    let mut rows = Vec::with_capacity(ladder.len());
    let mut local = f64::INFINITY;
    for res in results {
        let (size, beta, rep) = res?;
        let n_s1 = trapezoid(&rep.times, &rep.forcing.gradient)
            + trapezoid(&rep.times, &rep.forcing.high);
        let eps_local = estimates::epsilon_local(
            &estimates::LocalRadiusInputs {
                s: setup.s,
                alpha: setup.alpha,
                beta,
                delta,
                horizon: setup.t_end,
                norm_s1: n_s1,
                norm_high: rep.forcing.high_integral(),
            },
            &setup.ledger,
        )?;
        local = local.min(eps_local);
        let distance = size + (setup.alpha - beta).abs();
        rows.push(ProbeRow {
            perturbation: size,
            beta,
            distance,
            dominated: rep.dominated,
            max_f: rep.max_f(),
            log10_conservatism_54: distance.log10() - eps54.log10_value,
            conservatism_local: distance / eps_local,
        });
    }
    Ok(ProbeTable {
        schema: "fracns.epsilon_probe.v1".into(),
        m,
        delta,
        epsilon_54: eps54,
        epsilon_local: local,
        rows,
    })
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    pub p: f64,
    pub estimate: f64,
    /// Running maximum after each trial.
    pub running_max: Vec<f64>,
}

/// `‖f‖_{L^p} / ‖f‖_{Ḣ^α}` for a scalar field stored in component 0, with
/// the `L^p` norm by grid quadrature.
pub fn embedding_ratio(f: &SpectralField, alpha: f64, fft: &Fft3) -> f64 {
    let p = 6.0 / (3.0 - 2.0 * alpha);
    let mut buf = f.component(0).to_vec();
    fft.inverse(&mut buf);
    let cell = f.grid().spacing().powi(3);
    let lp = (cell * buf.iter().map(|z| z.re.abs().powf(p)).sum::<f64>()).powf(1.0 / p);
    let h = spectral::weighted_energy(f, |k2| k2.powf(alpha)).sqrt();
    lp / h
}

/// Running maximum of the discrete embedding ratio over random mean-free
/// scalar fields; trial 0 is `sin x₁`.
pub fn calibrate_embedding(
    alpha: f64,
    grid: GridSpec,
    trials: usize,
    seed: u64,
) -> Result<Calibration, HarnessError> {
    if !(alpha > 0.0 && alpha < 1.5) {
        return Err(HarnessError::Estimate(EstimateError::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 3/2)",
        }));
    }
    let fft = Fft3::new(grid.n(), Execution::Sequential);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut running_max = Vec::with_capacity(trials);
    let top = grid.dealias_cutoff().max(1);
    for trial in 0..trials {
        let f = if trial == 0 {
            let mut f = SpectralField::zeros(grid);
            f.set_mode([1, 0, 0], [Complex64::new(0.0, -0.5), Complex64::default(), Complex64::default()])?;
            f
        } else {
            let slope = rng.random_range(alpha..alpha + 3.0);
            let cutoff = rng.random_range(1..=top);
            random_field(grid, &mut rng, slope, cutoff, true)?
        };
        best = best.max(embedding_ratio(&f, alpha, &fft));
        running_max.push(best);
    }
    Ok(Calibration {
        alpha,
        p: 6.0 / (3.0 - 2.0 * alpha),
        estimate: best,
        running_max,
    })
}

/// `u_r(x) = r^{2α−1} u(r x)`: mode `k` moves to `r k` on `target`.
pub fn rescale(u: &SpectralField, alpha: f64, r: usize, target: GridSpec) -> Result<SpectralField, HarnessError> {
    let src = *u.grid();
    let factor = (r as f64).powf(2.0 * alpha - 1.0);
    let mut out = SpectralField::zeros(target);
    for i in 1..src.len() {
        let c = u.coeff(i);
        if c.iter().all(|z| *z == Complex64::default()) {
            continue;
        }
        let k = src.mode(i).map(|x| x * r as i64);
        let j = target
            .index_of(k)
            .filter(|&j| target.in_mask(j))
            .ok_or(SpectralError::RescaleAliasing(k))?;
        for (comp, z) in c.iter().enumerate() {
            out.component_mut(comp)[j] = z * factor;
        }
    }
    out.set_divergence_free(u.is_divergence_free());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub r: usize,
    pub coarse_n: usize,
    pub fine_n: usize,
    pub defect: f64,
    pub coarse_status: RunStatus,
    pub fine_status: RunStatus,
}

/// Simulates `u₀` to `T` on its grid and the rescaled datum to `T/r^{2α}` on
/// an `r`-times finer grid (step `dt/r^{2α}`, mollifier `ε/r`), and returns
/// the relative L² defect between the rescaled coarse and the fine result.
pub fn scaling_symmetry_check(
    u0: &SpectralField,
    r: usize,
    params: &SolverParams,
    exec: Execution,
) -> Result<ScalingReport, HarnessError> {
    if r == 0 {
        return Err(HarnessError::InvalidDatum("r must be positive".into()));
    }
    let coarse = *u0.grid();
    let fine = GridSpec::with_dealias(coarse.n() * r, coarse.dealias_fraction())?;
    let time_scale = (r as f64).powf(2.0 * params.alpha);
    let fine_params = SolverParams {
        dt: params.effective_dt() / time_scale,
        t_end: params.t_end / time_scale,
        mollifier_eps: params.mollifier_eps / r as f64,
        ..params.clone()
    };
    let v0 = rescale(u0, params.alpha, r, fine)?;
    let a = Solver::with_execution(coarse, params.clone(), exec)?.run(u0)?;
    let b = Solver::with_execution(fine, fine_params, exec)?.run(&v0)?;
    let ua = rescale(a.final_state.as_ref().expect("run keeps final state"), params.alpha, r, fine)?;
    let ub = b.final_state.as_ref().expect("run keeps final state");
    let diff = spectral::sobolev_norm(&(&ua - ub), NormConvention::L2);
    let scale = spectral::sobolev_norm(ub, NormConvention::L2);
    let defect = if scale == 0.0 { diff } else { diff / scale };
    Ok(ScalingReport {
        r,
        coarse_n: coarse.n(),
        fine_n: fine.n(),
        defect,
        coarse_status: a.status,
        fine_status: b.status,
    })
}
