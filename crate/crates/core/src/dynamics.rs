//! Time integration of the mollified fractional Navier-Stokes system.
//!
//! The linear part `−(−Δ)^α` is handled exactly by an integrating factor and
//! the projected nonlinearity `−P[((φ_ε * u)·∇)u]` is advanced with classical
//! RK4 (Lawson's IF-RK4). Pressure is never formed: the Leray projection
//! replaces `∇p`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::exec::{self, Execution};
use crate::fft::Fft3;
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::spectral::{self, NormConvention};

/// Largest admissible advective Courant number `dt · max|u| · N/2`.
pub const MAX_COURANT: f64 = 0.5;
/// Fraction of energy in the outermost retained shell that flags under-resolution.
pub const SHELL_ENERGY_LIMIT: f64 = 0.01;
const MAX_SUBDIVISIONS: u32 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub alpha: f64,
    #[serde(default)]
    pub mollifier_eps: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "yes")]
    pub dealias_on: bool,
    #[serde(default = "default_orders")]
    pub record_orders: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    /// When false the quadratic term is dropped (linear fractional heat flow).
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

fn yes() -> bool {
    true
}

fn default_orders() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn default_threshold() -> f64 {
    1e6
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            alpha: 1.25,
            mollifier_eps: 0.0,
            dt: 1e-3,
            t_end: 1.0,
            dealias_on: true,
            record_orders: default_orders(),
            blowup_threshold: default_threshold(),
            nonlinear: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidParams(m));
        if !(self.alpha > 0.0 && self.alpha < 1.5) {
            return bad(format!("alpha must lie in (0, 3/2), got {}", self.alpha));
        }
        if !(self.mollifier_eps >= 0.0 && self.mollifier_eps.is_finite()) {
            return bad(format!("mollifier_eps must be >= 0, got {}", self.mollifier_eps));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.dt > self.t_end {
            return bad(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end));
        }
        if self.record_orders.is_empty() {
            return bad("record_orders must not be empty".into());
        }
        if self.record_orders.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("record_orders must be nonnegative".into());
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blowup_threshold must be positive".into());
        }
        Ok(())
    }

    /// Number of logged steps; the effective step is `t_end / steps()`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.t_end / self.steps() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupDetected,
    ResolutionExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub order: f64,
    pub values: Vec<f64>,
}

/// Time series of one run. Every logged step carries the energy
/// `½‖u‖²`, the dissipation rate `‖(−Δ)^{α/2}u‖²` and its running integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub schema: String,
    pub grid: GridSpec,
    pub params: SolverParams,
    pub status: RunStatus,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation_rate: Vec<f64>,
    pub dissipation_integral: Vec<f64>,
    pub sobolev_norms: Vec<NormSeries>,
    #[serde(skip)]
    pub final_state: Option<SpectralField>,
}

pub const TRAJECTORY_SCHEMA: &str = "fracns.trajectory.v1";

impl TrajectoryReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,energy,dissipation_integral");
        for s in &self.sobolev_norms {
            out.push_str(&format!(",h_s{}", s.order));
        }
        out.push('\n');
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e}",
                self.times[i], self.energy[i], self.dissipation_integral[i]
            ));
            for s in &self.sobolev_norms {
                out.push_str(&format!(",{:e}", s.values[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Cumulative integral of uniformly sampled `f` at every sample, fourth
/// order throughout: composite Simpson on even indices, Simpson plus the 3/8
/// rule on odd ones, and a cubic fit for the first interval.
pub fn cumulative_quadrature(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        return out;
    }
    // Simpson partial sums over [0, t_{2m}].
    let mut even = vec![0.0; n];
    let mut i = 2;
    while i < n {
        even[i] = even[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
        i += 2;
    }
    out[1] = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    for i in 2..n {
        out[i] = if i % 2 == 0 {
            even[i]
        } else {
            even[i - 3] + 3.0 * h / 8.0 * (f[i - 3] + 3.0 * f[i - 2] + 3.0 * f[i - 1] + f[i])
        };
    }
    out
}

/// Largest deviation from the energy equality
/// `½‖u(t)‖² + ∫₀ᵗ ‖(−Δ)^{α/2}u‖² = ½‖u₀‖²` along a report.
pub fn energy_budget_check(rep: &TrajectoryReport) -> f64 {
    let Some(&e0) = rep.energy.first() else {
        return 0.0;
    };
    rep.energy
        .iter()
        .zip(&rep.dissipation_integral)
        .map(|(e, d)| (e + d - e0).abs())
        .fold(0.0, f64::max)
}

/// Precomputed operators for one grid and parameter set.
#[derive(Debug, Clone)]
pub struct Solver {
    grid: GridSpec,
    params: SolverParams,
    fft: Fft3,
    dt: f64,
    symbol: Vec<f64>,
    half: Vec<f64>,
    full: Vec<f64>,
    mollifier: Option<Vec<f64>>,
    /// Wavevector per mode, zeroed outside the retained set.
    kvec: Vec<[f64; 3]>,
}

impl Solver {
    pub fn new(grid: GridSpec, params: SolverParams) -> Result<Self, DynamicsError> {
        Self::with_execution(grid, params, Execution::default())
    }

    pub fn with_execution(
        grid: GridSpec,
        params: SolverParams,
        exec: Execution,
    ) -> Result<Self, DynamicsError> {
        params.validate()?;
        let dt = params.effective_dt();
        let symbol: Vec<f64> = (0..grid.len())
            .map(|i| {
                let k2 = grid.k_sq(i);
                if k2 == 0.0 {
                    0.0
                } else {
                    k2.powf(params.alpha)
                }
            })
            .collect();
        let (half, full) = factors(&symbol, dt);
        let mollifier = (params.mollifier_eps > 0.0).then(|| {
            let e2 = params.mollifier_eps * params.mollifier_eps;
            (0..grid.len())
                .map(|i| (-0.5 * e2 * grid.k_sq(i)).exp())
                .collect()
        });
        let kvec = (0..grid.len())
            .map(|i| {
                if params.dealias_on && !grid.in_mask(i) {
                    [0.0; 3]
                } else {
                    grid.k_vec(i)
                }
            })
            .collect();
        Ok(Solver {
            kvec,
            grid,
            fft: Fft3::new(grid.n(), exec),
            params,
            dt,
            symbol,
            half,
            full,
            mollifier,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `−P[((φ_ε * u)·∇)u]`, dealiased when enabled.
    pub fn nonlinear_term(&self, u: &SpectralField) -> SpectralField {
        self.nonlinear_with_speed(u).0
    }

    /// Nonlinear term together with `max_x |u(x)|`.
    fn nonlinear_with_speed(&self, u: &SpectralField) -> (SpectralField, f64) {
        let g = self.grid;
        let exec = self.fft.execution();
        let to_phys = |c: &[Complex64], m: Option<&[f64]>| {
            let mut buf: Vec<Complex64> = match m {
                Some(m) => c.iter().zip(m).map(|(z, w)| z * w).collect(),
                None => c.to_vec(),
            };
            self.fft.inverse(&mut buf);
            buf.into_iter().map(|z| z.re).collect::<Vec<f64>>()
        };
        let field: Vec<Vec<f64>> = (0..3).map(|c| to_phys(u.component(c), None)).collect();
        let advect: Option<Vec<Vec<f64>>> = self.mollifier.as_ref().map(|m| {
            (0..3)
                .map(|c| to_phys(u.component(c), Some(m)))
                .collect()
        });
        let advect = advect.as_ref().unwrap_or(&field);

        let speed = exec::chunked_max(exec, g.len(), |i| {
            (field[0][i] * field[0][i] + field[1][i] * field[1][i] + field[2][i] * field[2][i])
                .sqrt()
        });

        // Divergence form: ((ũ·∇)u)_i = ∂_j(ũ_j u_i) since div ũ = 0.
        let symmetric = self.mollifier.is_none();
        let mut flux: [[Option<Vec<Complex64>>; 3]; 3] = Default::default();
        for i in 0..3 {
            for j in 0..3 {
                if symmetric && j < i {
                    continue;
                }
                let mut p: Vec<Complex64> = vec![Complex64::default(); g.len()];
                let (a, b) = (&advect[j], &field[i]);
                exec::for_each_chunk_mut(exec, &mut p, exec::REDUCTION_CHUNK, |ci, chunk| {
                    let base = ci * exec::REDUCTION_CHUNK;
                    for (o, z) in chunk.iter_mut().enumerate() {
                        *z = Complex64::new(a[base + o] * b[base + o], 0.0);
                    }
                });
                self.fft.forward(&mut p);
                flux[i][j] = Some(p);
            }
        }
        let get = |i: usize, j: usize| -> &Vec<Complex64> {
            if symmetric && j < i {
                flux[j][i].as_ref().expect("upper triangle computed")
            } else {
                flux[i][j].as_ref().expect("flux computed")
            }
        };

        // −i k_j (ũ_j u_i)^, then (I − kkᵀ/|k|²) per mode; dropped modes carry k = 0.
        let mut comps: [Vec<Complex64>; 3] = Default::default();
        for c in &mut comps {
            *c = vec![Complex64::default(); g.len()];
        }
        let rows: [[&Vec<Complex64>; 3]; 3] =
            std::array::from_fn(|i| std::array::from_fn(|j| get(i, j)));
        let [c0, c1, c2] = &mut comps;
        for (m, k) in self.kvec.iter().enumerate().skip(1) {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue;
            }
            let n: [Complex64; 3] = std::array::from_fn(|i| {
                let div = k[0] * rows[i][0][m] + k[1] * rows[i][1][m] + k[2] * rows[i][2][m];
                Complex64::new(div.im, -div.re)
            });
            let dot = (k[0] * n[0] + k[1] * n[1] + k[2] * n[2]) / k2;
            c0[m] = n[0] - k[0] * dot;
            c1[m] = n[1] - k[1] * dot;
            c2[m] = n[2] - k[2] * dot;
        }
        let out = SpectralField::from_components(g, comps, true)
            .expect("components sized from the grid");
        (out, speed)
    }

    fn apply(factor: &[f64], u: &SpectralField) -> SpectralField {
        let mut out = u.clone();
        for c in 0..3 {
            for (z, f) in out.component_mut(c).iter_mut().zip(factor) {
                *z *= f;
            }
        }
        out
    }

    fn courant(&self, speed: f64, dt: f64) -> f64 {
        dt * speed * (self.grid.n() / 2) as f64
    }

    /// One IF-RK4 step of the configured size.
    pub fn step(&self, u: &SpectralField) -> Result<SpectralField, DynamicsError> {
        self.step_with(u, self.dt, &self.half, &self.full)
    }

    fn step_with(
        &self,
        u: &SpectralField,
        h: f64,
        half: &[f64],
        full: &[f64],
    ) -> Result<SpectralField, DynamicsError> {
        if !self.params.nonlinear {
            return Ok(Self::apply(full, u));
        }
        let (n1, speed) = self.nonlinear_with_speed(u);
        let courant = self.courant(speed, h);
        if courant > MAX_COURANT {
            return Err(DynamicsError::Cfl { courant, dt: h });
        }
        let eu = Self::apply(half, u);

        let mut a = u.clone();
        a.axpy(0.5 * h, &n1);
        let a = Self::apply(half, &a);
        let n2 = self.nonlinear_term(&a);

        let mut b = eu.clone();
        b.axpy(0.5 * h, &n2);
        let n3 = self.nonlinear_term(&b);

        let mut c = Self::apply(full, u);
        c.axpy(h, &Self::apply(half, &n3));
        let n4 = self.nonlinear_term(&c);

        let mut out = Self::apply(full, u);
        out.axpy(h / 6.0, &Self::apply(full, &n1));
        let mut mid = n2;
        mid.axpy(1.0, &n3);
        out.axpy(h / 3.0, &Self::apply(half, &mid));
        out.axpy(h / 6.0, &n4);
        out.set_divergence_free(true);
        Ok(out)
    }

    /// Advances by `h`, halving the step recursively on CFL rejection.
    fn advance_by(&self, u: &SpectralField, h: f64, depth: u32) -> Result<SpectralField, DynamicsError> {
        let result = if h == self.dt {
            self.step_with(u, h, &self.half, &self.full)
        } else {
            let (half, full) = factors(&self.symbol, h);
            self.step_with(u, h, &half, &full)
        };
        match result {
            Err(DynamicsError::Cfl { .. }) if depth < MAX_SUBDIVISIONS => {
                let mid = self.advance_by(u, 0.5 * h, depth + 1)?;
                self.advance_by(&mid, 0.5 * h, depth + 1)
            }
            other => other,
        }
    }

    pub fn stepper(&self, u0: SpectralField) -> Stepper<'_> {
        Stepper {
            solver: self,
            state: u0,
            index: 0,
        }
    }

    /// Integrates to `t_end`, stopping early on blow-up or under-resolution.
    pub fn run(&self, u0: &SpectralField) -> Result<TrajectoryReport, DynamicsError> {
        if u0.grid() != &self.grid {
            return Err(crate::error::SpectralError::GridMismatch.into());
        }
        let mut rep = TrajectoryReport {
            schema: TRAJECTORY_SCHEMA.into(),
            grid: self.grid,
            params: self.params.clone(),
            status: RunStatus::Completed,
            times: Vec::new(),
            energy: Vec::new(),
            dissipation_rate: Vec::new(),
            dissipation_integral: Vec::new(),
            sobolev_norms: self
                .params
                .record_orders
                .iter()
                .map(|&order| NormSeries {
                    order,
                    values: Vec::new(),
                })
                .collect(),
            final_state: None,
        };
        let mut st = self.stepper(u0.clone());
        loop {
            let d = self.diagnostics(st.state());
            rep.times.push(st.time());
            rep.energy.push(d.energy);
            rep.dissipation_rate.push(d.dissipation_rate);
            for (series, v) in rep.sobolev_norms.iter_mut().zip(&d.norms) {
                series.values.push(*v);
            }
            if !(d.h1 <= self.params.blowup_threshold) {
                rep.status = RunStatus::BlowupDetected;
                break;
            }
            if d.shell_fraction > SHELL_ENERGY_LIMIT {
                rep.status = RunStatus::ResolutionExhausted;
                break;
            }
            if st.is_done() {
                break;
            }
            st.advance()?;
        }
        rep.dissipation_integral = cumulative_quadrature(&rep.dissipation_rate, self.dt);
        rep.final_state = Some(st.into_state());
        Ok(rep)
    }

    pub fn diagnostics(&self, u: &SpectralField) -> Diagnostics {
        let energy = 0.5 * spectral::sobolev_norm_sq(u, NormConvention::L2);
        let dissipation_rate = spectral::weighted_energy(u, |k2| {
            if k2 == 0.0 {
                0.0
            } else {
                k2.powf(self.params.alpha)
            }
        });
        let norms = self
            .params
            .record_orders
            .iter()
            .map(|&s| spectral::sobolev_norm(u, NormConvention::Inhomogeneous(s)))
            .collect();
        let h1 = spectral::sobolev_norm(u, NormConvention::Inhomogeneous(1.0));
        Diagnostics {
            energy,
            dissipation_rate,
            norms,
            h1,
            shell_fraction: self.shell_fraction(u),
        }
    }

    /// Share of `‖u‖²` carried by the outermost retained shell.
    pub fn shell_fraction(&self, u: &SpectralField) -> f64 {
        let g = self.grid;
        let edge = if self.params.dealias_on {
            g.dealias_cutoff()
        } else {
            (g.n() / 2) as i64 - 1
        };
        let total = spectral::sobolev_norm_sq(u, NormConvention::L2);
        if total == 0.0 {
            return 0.0;
        }
        let mut shell = 0.0;
        for i in 0..g.len() {
            if g.max_abs_k(i) >= edge {
                let c = u.coeff(i);
                shell += c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr();
            }
        }
        spectral::VOLUME * shell / total
    }
}

fn factors(symbol: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    (
        symbol.iter().map(|l| (-0.5 * l * h).exp()).collect(),
        symbol.iter().map(|l| (-l * h).exp()).collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub energy: f64,
    pub dissipation_rate: f64,
    pub norms: Vec<f64>,
    pub h1: f64,
    pub shell_fraction: f64,
}

/// Step-by-step driver over the logged time grid.
pub struct Stepper<'a> {
    solver: &'a Solver,
    state: SpectralField,
    index: usize,
}

impl Stepper<'_> {
    pub fn state(&self) -> &SpectralField {
        &self.state
    }

    pub fn into_state(self) -> SpectralField {
        self.state
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn time(&self) -> f64 {
        self.index as f64 * self.solver.dt
    }

    pub fn is_done(&self) -> bool {
        self.index >= self.solver.params.steps()
    }

    pub fn advance(&mut self) -> Result<(), DynamicsError> {
        self.state = self.solver.advance_by(&self.state, self.solver.dt, 0)?;
        self.index += 1;
        Ok(())
    }
}

/// Convenience wrapper: `−P[((φ_ε * u)·∇)u]` with 2/3 dealiasing.
pub fn nonlinear_term(u: &SpectralField, eps: f64) -> Result<SpectralField, DynamicsError> {
    let params = SolverParams {
        mollifier_eps: eps,
        ..SolverParams::default()
    };
    Ok(Solver::new(*u.grid(), params)?.nonlinear_term(u))
}

pub fn step(u: &SpectralField, params: &SolverParams) -> Result<SpectralField, DynamicsError> {
    Solver::new(*u.grid(), params.clone())?.step(u)
}

pub fn run(u0: &SpectralField, params: &SolverParams) -> Result<TrajectoryReport, DynamicsError> {
    Solver::new(*u0.grid(), params.clone())?.run(u0)
}
