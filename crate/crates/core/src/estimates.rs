//! Closed-form constants, stability radii and singular-time bounds, plus the
//! comparison-ODE integrator and numerical probes of the difference bounds.

use std::f64::consts::{E, LN_10};

use serde::{Deserialize, Serialize};

use crate::error::EstimateError;
use crate::exec::{self, Execution};
use crate::field::SpectralField;
use crate::spectral;

/// Universal constants entering every bound. `C_A` is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsLedger {
    #[serde(default = "one")]
    pub c_bar: f64,
    #[serde(default = "one")]
    pub d_bar: f64,
    #[serde(default = "sqrt_ten")]
    pub c2_lemma: f64,
    /// Override for the `H^k` Gronwall constant; defaults to `C₁` at `s = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1_k: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn sqrt_ten() -> f64 {
    10f64.sqrt()
}

impl Default for ConstantsLedger {
    fn default() -> Self {
        ConstantsLedger {
            c_bar: 1.0,
            d_bar: 1.0,
            c2_lemma: sqrt_ten(),
            c1_k: None,
        }
    }
}

impl ConstantsLedger {
    pub fn validate(&self) -> Result<(), EstimateError> {
        if !(self.c_bar >= 1.0 && self.c_bar.is_finite()) {
            return Err(out_of_range("c_bar", self.c_bar, "[1, ∞)"));
        }
        if !(self.d_bar >= 1.0 && self.d_bar.is_finite()) {
            return Err(out_of_range("d_bar", self.d_bar, "[1, ∞)"));
        }
        if !(self.c2_lemma > 0.0 && self.c2_lemma.is_finite()) {
            return Err(out_of_range("c2_lemma", self.c2_lemma, "(0, ∞)"));
        }
        if let Some(c) = self.c1_k {
            if !(c > 0.0 && c.is_finite()) {
                return Err(out_of_range("c1_k", c, "(0, ∞)"));
            }
        }
        Ok(())
    }

    /// `C_A = 8 D̄² C̄⁴`.
    pub fn c_a(&self) -> f64 {
        8.0 * self.d_bar.powi(2) * self.c_bar.powi(4)
    }
}

fn out_of_range(name: &'static str, value: f64, range: &'static str) -> EstimateError {
    EstimateError::OutOfRange { name, value, range }
}

/// `γ(s, β) = (6β − 5 + 2s)/(4β − 5 + 2s)`.
pub fn gamma_exponent(s: f64, beta: f64) -> Result<f64, EstimateError> {
    let den = 4.0 * beta - 5.0 + 2.0 * s;
    if !(den > 0.0) {
        return Err(EstimateError::Inadmissible(format!(
            "4β − 5 + 2s = {den} must be positive (s = {s}, β = {beta})"
        )));
    }
    Ok((6.0 * beta - 5.0 + 2.0 * s) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C0Branch {
    /// `s < 1`, with commutator terms.
    Fractional,
    /// `s = 1`.
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C0Value {
    pub value: f64,
    pub branch: C0Branch,
    /// `(12(1+D̄)C̄²)^{5/(s−(5/2−2β))}`.
    pub cap: f64,
    /// `value ≤ 2·cap`.
    pub within_cap: bool,
}

/// Power-law constant `C₀(s, β)` of the difference inequality.
pub fn constant_c0(s: f64, beta: f64, ledger: &ConstantsLedger) -> Result<C0Value, EstimateError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(out_of_range("s", s, "[0, 1]"));
    }
    let d = 4.0 * beta - 5.0 + 2.0 * s;
    gamma_exponent(s, beta)?;
    let (cb, db) = (ledger.c_bar, ledger.d_bar);
    let (value, branch) = if s == 1.0 {
        let v = (1.0 - 3.0 / (4.0 * beta))
            * (6.0 * cb.powf(1.5 / beta) / beta).powf(4.0 * beta / (4.0 * beta - 3.0));
        (v, C0Branch::Gradient)
    } else {
        let v = ((1.0 + db) * cb * cb).powf(4.0 * beta / d)
            * (12.0 * (5.0 - 2.0 * s) / (4.0 * beta)).powf((5.0 - 2.0 * s) / d);
        (v, C0Branch::Fractional)
    };
    let cap = (12.0 * (1.0 + db) * cb * cb).powf(5.0 / (s - (2.5 - 2.0 * beta)));
    Ok(C0Value {
        value,
        branch,
        cap,
        within_cap: value <= 2.0 * cap,
    })
}

/// `C₁ = 6[3(1+D̄)²C̄⁴ + 2C̄⁶]`.
pub fn constant_c1(ledger: &ConstantsLedger) -> f64 {
    let (cb, db) = (ledger.c_bar, ledger.d_bar);
    6.0 * (3.0 * (1.0 + db).powi(2) * cb.powi(4) + 2.0 * cb.powi(6))
}

/// Constant of the `H^k` variant; configurable, defaulting to [`constant_c1`].
pub fn constant_c1_k(k: u32, ledger: &ConstantsLedger) -> Result<f64, EstimateError> {
    if k == 0 {
        return Err(out_of_range("k", 0.0, "integers ≥ 1"));
    }
    Ok(ledger.c1_k.unwrap_or_else(|| constant_c1(ledger)))
}

/// Checks `|α−β| ≤ ½ min{δ, ½(s − (5/2 − 2α))}` together with the ranges of
/// `α`, `β`, `s` and `δ` under which the difference inequality is stated.
pub fn check_admissible(alpha: f64, beta: f64, s: f64, delta: f64) -> Result<(), EstimateError> {
    let fail = |m: String| Err(EstimateError::Inadmissible(m));
    if !(alpha > 0.75 && alpha <= 1.25) {
        return fail(format!("α = {alpha} outside (3/4, 5/4]"));
    }
    if !(beta > 0.75 && beta <= 1.25) {
        return fail(format!("β = {beta} outside (3/4, 5/4]"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return fail(format!("δ = {delta} outside (0, 1]"));
    }
    let gap = s - (2.5 - 2.0 * alpha);
    if !(gap > 0.0 && s <= 1.0) {
        return fail(format!("s = {s} outside (5/2 − 2α, 1]"));
    }
    let radius = 0.5 * delta.min(0.5 * gap);
    if (alpha - beta).abs() > radius {
        return fail(format!(
            "|α − β| = {} exceeds {radius}",
            (alpha - beta).abs()
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// True when the orders were supplied with `β > α` and swapped.
    pub swapped: bool,
}

fn diff_orders(alpha: f64, beta: f64, delta: f64) -> Result<(f64, f64, bool), EstimateError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(out_of_range("delta", delta, "(0, 1]"));
    }
    let (a, b, swapped) = if beta > alpha {
        (beta, alpha, true)
    } else {
        (alpha, beta, false)
    };
    if !(b >= 0.5 * delta) || !a.is_finite() {
        return Err(EstimateError::Inadmissible(format!(
            "need δ/2 ≤ β ≤ α, got α = {a}, β = {b}, δ = {delta}"
        )));
    }
    Ok((a, b, swapped))
}

/// Field-level check of
/// `‖[(−Δ)^α − (−Δ)^β]u‖_{H^s} ≤ C₂ (α−β)^δ ‖u‖_{H^{s+2α+δ}}`.
pub fn frac_lap_diff_check(
    u: &SpectralField,
    alpha: f64,
    beta: f64,
    delta: f64,
    s: f64,
    ledger: &ConstantsLedger,
) -> Result<DiffCheck, EstimateError> {
    let (a, b, swapped) = diff_orders(alpha, beta, delta)?;
    if !(s >= 0.0) {
        return Err(out_of_range("s", s, "[0, ∞)"));
    }
    let lhs = spectral::weighted_energy(u, |k2| {
        let d = k2.powf(a) - k2.powf(b);
        (1.0 + k2).powf(s) * d * d
    })
    .sqrt();
    let rhs = ledger.c2_lemma
        * (a - b).powf(delta)
        * spectral::sobolev_norm(u, spectral::NormConvention::Inhomogeneous(s + 2.0 * a + delta));
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(DiffCheck {
        lhs,
        rhs,
        ratio,
        swapped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub worst_ratio: f64,
    /// `|k|²` attaining the worst ratio (0 when every ratio vanishes).
    pub worst_k_sq: u64,
}

/// Maximum over integers `1 ≤ |k|² ≤ k_max²` of
/// `(|k|^{2α} − |k|^{2β})² / [C₂² (α−β)^{2δ} (1+|k|²)^{2α+δ}]`.
pub fn permode_diff_bound_scan(
    alpha: f64,
    beta: f64,
    delta: f64,
    k_max: u32,
    ledger: &ConstantsLedger,
) -> Result<ScanResult, EstimateError> {
    let (a, b, _) = diff_orders(alpha, beta, delta)?;
    let mut worst = ScanResult {
        worst_ratio: 0.0,
        worst_k_sq: 0,
    };
    if a == b {
        return Ok(worst);
    }
    let scale = ledger.c2_lemma.powi(2) * (a - b).powf(2.0 * delta);
    for k2 in 1..=(k_max as u64).pow(2) {
        let x = k2 as f64;
        let d = x.powf(a) - x.powf(b);
        let r = d * d / (scale * (1.0 + x).powf(2.0 * a + delta));
        if r > worst.worst_ratio {
            worst = ScanResult {
                worst_ratio: r,
                worst_k_sq: k2,
            };
        }
    }
    Ok(worst)
}

/// One cell of a per-mode grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub worst_ratio: f64,
}

/// Per-mode scan over `α ∈ alphas`, `δ ∈ deltas` and `betas_per_cell`
/// equispaced `β ∈ [max{α − δ/2, δ/2}, α]`.
pub fn permode_grid_search(
    alphas: &[f64],
    deltas: &[f64],
    betas_per_cell: usize,
    k_max: u32,
    ledger: &ConstantsLedger,
    exec: Execution,
) -> Result<Vec<ScanCell>, EstimateError> {
    let mut cells = Vec::new();
    for &alpha in alphas {
        for &delta in deltas {
            for j in 0..betas_per_cell {
                let frac = if betas_per_cell > 1 {
                    j as f64 / (betas_per_cell - 1) as f64
                } else {
                    0.0
                };
                let lo = (alpha - 0.5 * delta).max(0.5 * delta);
                cells.push((alpha, alpha - (alpha - lo) * frac, delta));
            }
        }
    }
    exec::map_slice(exec, &cells, |&(alpha, beta, delta)| {
        permode_diff_bound_scan(alpha, beta, delta, k_max, ledger).map(|r| ScanCell {
            alpha,
            beta,
            delta,
            worst_ratio: r.worst_ratio,
        })
    })
    .into_iter()
    .collect()
}

/// Forcing norms sampled on the logged time grid of the reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingSeries {
    pub times: Vec<f64>,
    /// `‖Du(t)‖²_{H^s}`.
    pub gradient: Vec<f64>,
    /// `‖u(t)‖²_{H^{s+α+δ}}`.
    pub high: Vec<f64>,
}

impl ForcingSeries {
    pub fn zeros(times: Vec<f64>) -> Self {
        let n = times.len();
        ForcingSeries {
            times,
            gradient: vec![0.0; n],
            high: vec![0.0; n],
        }
    }

    fn validate(&self) -> Result<(), EstimateError> {
        let gap = |m: String| Err(EstimateError::ForcingGap(m));
        if self.times.is_empty() {
            return gap("empty time grid".into());
        }
        if self.gradient.len() != self.times.len() || self.high.len() != self.times.len() {
            return gap(format!(
                "{} times but {} / {} forcing samples",
                self.times.len(),
                self.gradient.len(),
                self.high.len()
            ));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return gap("times must be strictly increasing".into());
        }
        if self
            .gradient
            .iter()
            .chain(&self.high)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return gap("forcing samples must be finite and nonnegative".into());
        }
        Ok(())
    }

    /// Trapezoidal `∫ high dt` over the grid.
    pub fn high_integral(&self) -> f64 {
        trapezoid(&self.times, &self.high)
    }

    /// Trapezoidal `∫ (gradient + high) dt` over the grid.
    pub fn total_integral(&self) -> f64 {
        trapezoid(&self.times, &self.gradient) + self.high_integral()
    }
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum()
}

/// Comparison ODE `F' = C₀F^γ + C₁ g(t) F + C₂|α−β|^δ h(t)` with
/// `g = ‖Du‖²_{H^s} + ‖u‖²_{H^{s+α+δ}}` and `h = ‖u‖²_{H^{s+α+δ}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallSpec {
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub forcing: ForcingSeries,
}

impl GronwallSpec {
    /// Builds the spec from the calculators after checking admissibility.
    pub fn from_calculators(
        s: f64,
        alpha: f64,
        beta: f64,
        delta: f64,
        ledger: &ConstantsLedger,
        forcing: ForcingSeries,
    ) -> Result<Self, EstimateError> {
        check_admissible(alpha, beta, s, delta)?;
        ledger.validate()?;
        Ok(GronwallSpec {
            s,
            alpha,
            beta,
            delta,
            gamma: gamma_exponent(s, beta)?,
            c0: constant_c0(s, beta, ledger)?.value,
            c1: constant_c1(ledger),
            c2: ledger.c2_lemma,
            forcing,
        })
    }

    fn source_weight(&self) -> f64 {
        self.c2 * (self.alpha - self.beta).abs().powf(self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallBound {
    pub times: Vec<f64>,
    /// `F(t)`; `+∞` from the first logged time past the escape.
    pub values: Vec<f64>,
    pub blowup_time: Option<f64>,
}

const ESCAPE_VALUE: f64 = 1e200;
const STEP_FRACTION: f64 = 0.02;
const MAX_SUBSTEPS: usize = 10_000_000;

/// Remaining lifetime `F^{1−γ}/(C₀(γ−1))` of `F' = C₀F^γ` from `F`.
pub fn pure_power_horizon(f: f64, c0: f64, gamma: f64) -> f64 {
    if f <= 0.0 || c0 <= 0.0 || gamma <= 1.0 {
        return f64::INFINITY;
    }
    f.powf(1.0 - gamma) / (c0 * (gamma - 1.0))
}

/// Initial value whose pure-power solution escapes exactly at `t`:
/// `((γ−1)C₀t)^{−1/(γ−1)}`.
pub fn pure_power_cap(c0: f64, gamma: f64, t: f64) -> f64 {
    ((gamma - 1.0) * c0 * t).powf(-1.0 / (gamma - 1.0))
}

/// Integrates the comparison ODE on the forcing grid with adaptive RK4
/// substeps and linear interpolation of the forcing.
pub fn gronwall_bound(spec: &GronwallSpec, f0: f64) -> Result<GronwallBound, EstimateError> {
    spec.forcing.validate()?;
    if !(f0 >= 0.0 && f0.is_finite()) {
        return Err(out_of_range("f0", f0, "[0, ∞)"));
    }
    if !(spec.gamma > 1.0) {
        return Err(out_of_range("gamma", spec.gamma, "(1, ∞)"));
    }
    let fs = &spec.forcing;
    let src = spec.source_weight();
    let rhs = |f: f64, g: f64, h: f64| {
        let f = f.max(0.0);
        spec.c0 * f.powf(spec.gamma) + spec.c1 * g * f + src * h
    };

    let n = fs.times.len();
    let mut values = Vec::with_capacity(n);
    values.push(f0);
    let mut f = f0;
    let mut blowup_time = None;
    let mut substeps = 0usize;
    'outer: for i in 1..n {
        let (t0, t1) = (fs.times[i - 1], fs.times[i]);
        let span = t1 - t0;
        let g0 = fs.gradient[i - 1] + fs.high[i - 1];
        let g1 = fs.gradient[i] + fs.high[i];
        let (h0, h1) = (fs.high[i - 1], fs.high[i]);
        let lerp = |a: f64, b: f64, tau: f64| a + (b - a) * (tau / span);
        let gmax = g0.max(g1);
        let mut tau = 0.0;
        while tau < span {
            let horizon = pure_power_horizon(f, spec.c0, spec.gamma);
            if f > ESCAPE_VALUE || !f.is_finite() || horizon < 1e-12 * (1.0 + t0 + tau) {
                let extra = if horizon.is_finite() { horizon } else { 0.0 };
                blowup_time = Some(t0 + tau + extra);
                break 'outer;
            }
            let rate = spec.c0 * spec.gamma * f.max(0.0).powf(spec.gamma - 1.0) + spec.c1 * gmax;
            let mut h = (span - tau).min(0.25 * span);
            if rate > 0.0 {
                h = h.min(STEP_FRACTION / rate);
            }
            substeps += 1;
            if substeps > MAX_SUBSTEPS {
                return Err(EstimateError::ForcingGap(
                    "comparison ODE too stiff for the substep budget".into(),
                ));
            }
            let (ga, gm, gb) = (lerp(g0, g1, tau), lerp(g0, g1, tau + 0.5 * h), lerp(g0, g1, tau + h));
            let (ha, hm, hb) = (lerp(h0, h1, tau), lerp(h0, h1, tau + 0.5 * h), lerp(h0, h1, tau + h));
            let k1 = rhs(f, ga, ha);
            let k2 = rhs(f + 0.5 * h * k1, gm, hm);
            let k3 = rhs(f + 0.5 * h * k2, gm, hm);
            let k4 = rhs(f + h * k3, gb, hb);
            f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            tau = if span - (tau + h) < 1e-15 * span { span } else { tau + h };
        }
        values.push(f);
    }
    values.resize(n, f64::INFINITY);
    Ok(GronwallBound {
        times: fs.times.clone(),
        values,
        blowup_time,
    })
}

/// Inputs of the local stability radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalRadiusInputs {
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub horizon: f64,
    /// `‖u‖²_{L²([0,T], H^{s+1})}`.
    pub norm_s1: f64,
    /// `‖u‖²_{L²([0,T], H^{s+α+δ})}`.
    pub norm_high: f64,
}

/// `min{δ/2, ¼(s − (5/2 − 2α)), max{1, C₂ n_high}(C₀(γ−1)T)^{−1/(γ−1)} e^{−C₁(n_{s+1} + n_high)}}`.
pub fn epsilon_local(inp: &LocalRadiusInputs, ledger: &ConstantsLedger) -> Result<f64, EstimateError> {
    check_admissible(inp.alpha, inp.beta, inp.s, inp.delta)?;
    if !(inp.horizon > 0.0) {
        return Err(out_of_range("T", inp.horizon, "(0, ∞)"));
    }
    if !(inp.norm_s1 >= 0.0 && inp.norm_high >= 0.0) {
        return Err(out_of_range("forcing norm", inp.norm_s1.min(inp.norm_high), "[0, ∞)"));
    }
    let gamma = gamma_exponent(inp.s, inp.beta)?;
    let c0 = constant_c0(inp.s, inp.beta, ledger)?.value;
    let c1 = constant_c1(ledger);
    let third = (ledger.c2_lemma * inp.norm_high).max(1.0)
        * (c0 * (gamma - 1.0) * inp.horizon).powf(-1.0 / (gamma - 1.0))
        * (-c1 * (inp.norm_s1 + inp.norm_high)).exp();
    Ok((0.5 * inp.delta)
        .min(0.25 * (inp.s - (2.5 - 2.0 * inp.alpha)))
        .min(third))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusValue {
    /// `ε` itself; 0 when it underflows.
    pub value: f64,
    pub log10_value: f64,
    /// Which term attains the minimum: `quarter` for `(δ/4)^{1/δ}`.
    pub branch: RadiusBranch,
    pub underflow: bool,
    /// The exponential factor overflowed even in the log domain.
    pub overflow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusBranch {
    Quarter,
    Exponential,
}

fn ln_1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Global stability radius at the critical order, evaluated in the log
/// domain:
/// `min{(δ/4)^{1/δ}, X^{−1/δ}}`,
/// `X = 48D̄C̄² e^{M^{5/2}C̄³/e} max{2C₂M²A, 1} e^{144D̄²C̄⁶M²A}`,
/// `A = 1 + M⁴e^{C_A M²}`.
pub fn epsilon_54(m: f64, delta: f64, ledger: &ConstantsLedger) -> Result<RadiusValue, EstimateError> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(out_of_range("M", m, "[0, ∞)"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(out_of_range("delta", delta, "(0, 1]"));
    }
    ledger.validate()?;
    let (cb, db, c2) = (ledger.c_bar, ledger.d_bar, ledger.c2_lemma);
    let ln_a = if m == 0.0 {
        0.0
    } else {
        ln_1p_exp(4.0 * m.ln() + ledger.c_a() * m * m)
    };
    let ln_max = if m == 0.0 {
        0.0
    } else {
        ((2.0 * c2).ln() + 2.0 * m.ln() + ln_a).max(0.0)
    };
    let ln_last = (144.0 * db * db * cb.powi(6) * m * m).ln() + ln_a;
    let last = if m == 0.0 { 0.0 } else { ln_last.exp() };
    let ln_x = 48f64.ln() + db.ln() + 2.0 * cb.ln() + m.powf(2.5) * cb.powi(3) / E + ln_max + last;

    let ln_quarter = (0.25 * delta).ln() / delta;
    let ln_exp = -ln_x / delta;
    let (ln_eps, branch) = if ln_quarter <= ln_exp {
        (ln_quarter, RadiusBranch::Quarter)
    } else {
        (ln_exp, RadiusBranch::Exponential)
    };
    let value = ln_eps.exp();
    Ok(RadiusValue {
        value,
        log10_value: ln_eps / LN_10,
        branch,
        underflow: value == 0.0 || (value < f64::MIN_POSITIVE && ln_eps.is_finite()),
        overflow: !ln_x.is_finite(),
    })
}

/// Leray-type smoothness horizon from the gradient:
/// `C̄^{−6/(4α−3)} ‖∇u₀‖^{−4α/(4α−3)}`.
pub fn leray_time_h1(grad_norm: f64, alpha: f64, ledger: &ConstantsLedger) -> Result<f64, EstimateError> {
    if !(alpha > 0.75 && alpha <= 1.25) {
        return Err(out_of_range("alpha", alpha, "(3/4, 5/4]"));
    }
    if !(grad_norm > 0.0 && grad_norm.is_finite()) {
        return Err(out_of_range("grad_norm", grad_norm, "(0, ∞)"));
    }
    let d = 4.0 * alpha - 3.0;
    Ok(ledger.c_bar.powf(-6.0 / d) * grad_norm.powf(-4.0 * alpha / d))
}

/// `C₁(α) = (1+D̄)^{−4α/(6α−5)} C̄^{(4α−10)/(6α−5)}`.
pub fn leray_halpha_constant(alpha: f64, ledger: &ConstantsLedger) -> f64 {
    let d = 6.0 * alpha - 5.0;
    (1.0 + ledger.d_bar).powf(-4.0 * alpha / d) * ledger.c_bar.powf((4.0 * alpha - 10.0) / d)
}

/// Smoothness horizon from the critical-order norm:
/// `C₁(α) ‖(−Δ)^{α/2}u₀‖^{−4α/(6α−5)}`.
pub fn leray_time_halpha(
    halpha_norm: f64,
    alpha: f64,
    ledger: &ConstantsLedger,
) -> Result<f64, EstimateError> {
    if !(alpha > 5.0 / 6.0 && alpha < 1.0) {
        return Err(out_of_range("alpha", alpha, "(5/6, 1)"));
    }
    if !(halpha_norm > 0.0 && halpha_norm.is_finite()) {
        return Err(out_of_range("halpha_norm", halpha_norm, "(0, ∞)"));
    }
    Ok(leray_halpha_constant(alpha, ledger) * halpha_norm.powf(-4.0 * alpha / (6.0 * alpha - 5.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TstarBranch {
    Ipodissipative,
    Hyperdissipative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TstarValue {
    /// Infimum of the admissible regularization times.
    pub threshold: f64,
    pub branch: TstarBranch,
    /// `((5−4α)/2 · C̄³ M^{2α})^{2/(5−4α)}` for `α ≥ 1`.
    pub cap: Option<f64>,
    /// `cap ≤ threshold`, which holds with ratio `(5−4α)^{2/(5−4α)}` at any ledger.
    pub cap_below_threshold: Option<bool>,
}

/// Eventual regularization time for data with `‖u₀‖_{L²} ≤ M`.
pub fn tstar(m: f64, alpha: f64, ledger: &ConstantsLedger) -> Result<TstarValue, EstimateError> {
    if !(alpha > 5.0 / 6.0 && alpha < 1.25) {
        return Err(out_of_range("alpha", alpha, "(5/6, 5/4)"));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(out_of_range("M", m, "(0, ∞)"));
    }
    let q = 5.0 - 4.0 * alpha;
    let mpow = m.powf(4.0 * alpha / q);
    if alpha < 1.0 {
        let c1 = leray_halpha_constant(alpha, ledger);
        let threshold = mpow * 2f64.powf(-2.0 * alpha / q) * c1.powf(-(6.0 * alpha - 5.0) / q);
        return Ok(TstarValue {
            threshold,
            branch: TstarBranch::Ipodissipative,
            cap: None,
            cap_below_threshold: None,
        });
    }
    // C₂^{−(4α−3)} = C̄⁶ for C₂ = C̄^{−6/(4α−3)}.
    let threshold = mpow * 2f64.powf(-2.0 / q) * ledger.c_bar.powf(6.0 / q);
    let cap = (0.5 * q * ledger.c_bar.powi(3) * m.powf(2.0 * alpha)).powf(2.0 / q);
    Ok(TstarValue {
        threshold,
        branch: TstarBranch::Hyperdissipative,
        cap: Some(cap),
        cap_below_threshold: Some(cap <= threshold * (1.0 + 1e-12)),
    })
}

/// Integrability condition that makes a Leray-Hopf solution unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum WeakStrongRegime {
    /// `v ∈ L²((0,T), L^p)` with `p = 3/(α−1)` (`∞` at `α = 1`).
    Lebesgue { space_exponent: f64 },
    /// `(−Δ)^{(1−α)/2} v ∈ L²((0,T), L^∞)`.
    FractionalBounded,
    /// Both `(−Δ)^{(1−α)/2} v ∈ L²L^∞` and `v ∈ L²L^{3/α}`.
    Combined { space_exponent: f64 },
}

pub fn weak_strong_regime(alpha: f64) -> Result<WeakStrongRegime, EstimateError> {
    if !(alpha > 0.0 && alpha < 1.5) {
        return Err(out_of_range("alpha", alpha, "(0, 3/2)"));
    }
    Ok(if alpha >= 1.0 {
        WeakStrongRegime::Lebesgue {
            space_exponent: if alpha == 1.0 {
                f64::INFINITY
            } else {
                3.0 / (alpha - 1.0)
            },
        }
    } else if alpha >= 0.75 {
        WeakStrongRegime::FractionalBounded
    } else {
        WeakStrongRegime::Combined {
            space_exponent: 3.0 / alpha,
        }
    })
}
