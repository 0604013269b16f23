//! Energy bookkeeping and verification of the closed-loop estimates: the
//! boundary dissipation law, the x-multiplier (smoothing) identity, the
//! weighted trace identity, exponential decay fits, and the empirical
//! observability constant with its derived decay envelope.

use crate::error::{KpError, Result};
use crate::grid::{norm_sq, StateField};
use crate::operators::{
    boundary_traces, integral_dxinv_uy_sq, integral_ux_sq, integral_x_weighted_sq, FeedbackConfig,
    Traces,
};
use crate::stepper::SimulationRun;

/// Absolute floor used in relative residuals so fully decayed trajectories
/// do not divide by zero.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR)
}

/// Per-step energy and boundary-trace history of a run.  Columns match the
/// CSV schema (t, E, I_ux0, I_top, I_nloc, dEdt, rhs, residual).
#[derive(Debug, Clone, Default)]
pub struct EnergyTrace {
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub i_ux0: Vec<f64>,
    pub i_top: Vec<f64>,
    pub i_nloc: Vec<f64>,
    pub dedt: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual: Vec<f64>,
}

impl EnergyTrace {
    pub fn with_capacity(n: usize) -> EnergyTrace {
        EnergyTrace {
            t: Vec::with_capacity(n),
            e: Vec::with_capacity(n),
            i_ux0: Vec::with_capacity(n),
            i_top: Vec::with_capacity(n),
            i_nloc: Vec::with_capacity(n),
            dedt: Vec::with_capacity(n),
            rhs: Vec::with_capacity(n),
            residual: Vec::with_capacity(n),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push_row(
        &mut self,
        t: f64,
        e: f64,
        i_ux0: f64,
        i_top: f64,
        i_nloc: f64,
        dedt: f64,
        rhs: f64,
        residual: f64,
    ) {
        self.t.push(t);
        self.e.push(e);
        self.i_ux0.push(i_ux0);
        self.i_top.push(i_top);
        self.i_nloc.push(i_nloc);
        self.dedt.push(dedt);
        self.rhs.push(rhs);
        self.residual.push(residual);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Two-sided comparison of an identity, with the grid/step parameters of the
/// run it was evaluated on.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// |lhs - rhs| / max(|lhs|, |rhs|, 1e-14)
    pub residual: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
}

/// Exponential fit E(t) ~ E(t0) e^{-r (t - t0)} over a window.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub r: f64,
    pub kappa_fit: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
}

/// Empirical observability constant over a sample of initial data, and the
/// constants of the derived decay envelope.
#[derive(Debug, Clone)]
pub struct ObservabilityReport {
    /// per-sample R(u0) = time-integrated boundary terms / ||u0||^2
    pub ratios: Vec<f64>,
    pub c_obs: f64,
    pub gamma: f64,
    pub theta: f64,
    pub kappa: f64,
    pub t_horizon: f64,
    /// max over samples and steps of E(t) gamma e^{theta t} / E(0); the
    /// envelope E(t) <= (1/gamma) e^{-theta t} E(0) holds iff this is <= 1
    pub envelope_max_excess: f64,
}

/// E = (1/2) ||u||^2 in the discrete L2 norm.
pub fn energy(u: &StateField) -> f64 {
    0.5 * norm_sq(u)
}

/// Right-hand side of the dissipation law
/// dE/dt = -(1-alpha^2)/2 I_ux0 - (1/2) I_nloc - beta I_top.
pub fn dissipation_rhs(traces: &Traces, cfg: &FeedbackConfig) -> f64 {
    -(1.0 - cfg.alpha * cfg.alpha) / 2.0 * traces.i_ux0
        - 0.5 * traces.i_nloc
        - cfg.beta * traces.i_top
}

/// Dissipation constant C = min{(1 - alpha^2)/2, beta}.
pub fn dissipation_constant(cfg: &FeedbackConfig) -> f64 {
    ((1.0 - cfg.alpha * cfg.alpha) / 2.0).min(cfg.beta)
}

fn require_stride_one(run: &SimulationRun) -> Result<()> {
    if run.stride != 1 {
        return Err(KpError::Diagnostic(format!(
            "identity checks need every snapshot (stride 1), run has stride {}",
            run.stride
        )));
    }
    Ok(())
}

fn report(name: &'static str, lhs: f64, rhs: f64, run: &SimulationRun) -> IdentityReport {
    IdentityReport {
        name,
        lhs,
        rhs,
        residual: relative_residual(lhs, rhs),
        nx: run.snapshots[0].grid().nx(),
        ny: run.snapshots[0].grid().ny(),
        dt: run.scheme.dt,
    }
}

/// Trapezoid quadrature in time over per-snapshot values.
fn time_trapz(dt: f64, values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dt * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Midpoint quadrature in time over per-interval values (one value per step,
/// evaluated on the half-step state).
fn time_midpoint(dt: f64, values: &[f64]) -> f64 {
    dt * values.iter().sum::<f64>()
}

/// Evaluates `f` on every half-step state (u_n + u_{n+1})/2 of a stride-1
/// run.  The trapezoidal scheme is neutrally stable on the skew part of the
/// generator, so under-resolved dispersive content survives as a mode whose
/// sign flips every step: it cancels in the half-step averages but enters
/// step-endpoint values of quadratic functionals with full weight.  The
/// midpoint samples are also the discretely consistent ones: the scheme
/// satisfies ||u_{n+1}||^2 - ||u_n||^2 = 2 dt <A u_mid, u_mid> exactly.
fn midpoint_samples<F>(run: &SimulationRun, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&StateField) -> Result<f64>,
{
    let mut out = Vec::with_capacity(run.snapshots.len().saturating_sub(1));
    for w in run.snapshots.windows(2) {
        let mid = w[0].add_scaled(1.0, &w[1])?.scaled(0.5);
        out.push(f(&mid)?);
    }
    Ok(out)
}

/// Worst per-step residual of the dissipation law over a run.
pub fn check_dissipation_identity(run: &SimulationRun) -> Result<IdentityReport> {
    require_stride_one(run)?;
    let tr = &run.trace;
    if tr.len() < 2 {
        return Err(KpError::Diagnostic("trace too short".into()));
    }
    // last row has no difference quotient
    let mut worst = 0usize;
    for n in 0..tr.len() - 1 {
        if tr.residual[n] > tr.residual[worst] {
            worst = n;
        }
    }
    Ok(report(
        "dissipation",
        tr.dedt[worst],
        tr.rhs[worst],
        run,
    ))
}

/// Evaluates both sides of the x-multiplier identity
///   (3/2) int_0^T int u_x^2 + (1/2) int_0^T int (dxinv u_y)^2
///     = (1/2) int x (u0^2 - u(T)^2) + (1/2) int_0^T int u^2
///       + (L/2) int_0^T int u_x^2(L,y) - beta int_0^T int x u^2(x,L),
/// with u_x(L,y) = alpha u_x(0,y) through the feedback relation.
pub fn morawetz_identity_check(run: &SimulationRun) -> Result<IdentityReport> {
    require_stride_one(run)?;
    let grid = run.snapshots[0].grid().clone();
    let cfg = run.config;
    let dt = run.scheme.dt;
    let l = grid.l();

    let n = run.snapshots.len().saturating_sub(1);
    let mut ux2 = Vec::with_capacity(n);
    let mut nloc2 = Vec::with_capacity(n);
    let mut u2 = Vec::with_capacity(n);
    let mut uxl2 = Vec::with_capacity(n);
    let mut xtop2 = Vec::with_capacity(n);
    midpoint_samples(run, |u| {
        ux2.push(integral_ux_sq(u, &grid, &cfg)?);
        nloc2.push(integral_dxinv_uy_sq(u, &grid, &cfg)?);
        u2.push(norm_sq(u));
        let tr = boundary_traces(u, &grid, &cfg)?;
        uxl2.push(cfg.alpha * cfg.alpha * tr.i_ux0);
        let xw: Vec<f64> = (0..=grid.nx())
            .map(|i| grid.x(i) * tr.u_top[i] * tr.u_top[i])
            .collect();
        xtop2.push(grid.trapz_x(&xw));
        Ok(0.0)
    })?;

    let lhs = 1.5 * time_midpoint(dt, &ux2) + 0.5 * time_midpoint(dt, &nloc2);
    let rhs = 0.5
        * (integral_x_weighted_sq(run.initial_state()) - integral_x_weighted_sq(run.final_state()))
        + 0.5 * time_midpoint(dt, &u2)
        + 0.5 * l * time_midpoint(dt, &uxl2)
        - cfg.beta * time_midpoint(dt, &xtop2);
    Ok(report("morawetz", lhs, rhs, run))
}

/// Checks the smoothing estimate
///   int_0^T ||u||^2_{H^1_x} <= [T + (2/3)(L + T + max{alpha^2, 2 beta} L / (2C))] ||u0||^2
/// with C the dissipation constant.  Satisfied iff lhs <= rhs.
pub fn kato_bound_check(run: &SimulationRun) -> Result<IdentityReport> {
    require_stride_one(run)?;
    let grid = run.snapshots[0].grid().clone();
    let cfg = run.config;
    let dt = run.scheme.dt;
    let t_final = run.scheme.t_final;
    let l = grid.l();

    let h1x =
        midpoint_samples(run, |u| Ok(norm_sq(u) + integral_ux_sq(u, &grid, &cfg)?))?;
    let lhs = time_midpoint(dt, &h1x);
    let c = dissipation_constant(&cfg);
    let coef = t_final
        + (2.0 / 3.0)
            * (l + t_final
                + (cfg.alpha * cfg.alpha).max(2.0 * cfg.beta) * l / (2.0 * c));
    let rhs = coef * norm_sq(run.initial_state());
    Ok(report("kato-bound", lhs, rhs, run))
}

/// Evaluates both sides of the weighted trace identity
///   T ||u0||^2 = int_0^T ||u||^2 + 2 beta int (T-t) I_top
///       + (1-alpha^2) int (T-t) I_ux0 + int (T-t) I_nloc.
pub fn trazos_identity_check(run: &SimulationRun) -> Result<IdentityReport> {
    require_stride_one(run)?;
    let cfg = run.config;
    let dt = run.scheme.dt;
    let t_final = run.scheme.t_final;
    let tr = &run.trace;

    let grid = run.snapshots[0].grid().clone();
    let mut u2 = Vec::with_capacity(run.snapshots.len());
    for u in &run.snapshots {
        u2.push(norm_sq(u));
    }
    // weighted flux (1-a^2) I_ux0 + I_nloc + 2 beta I_top on the half-step
    // states, weight T - t_{n+1/2}; with the trapezoid-in-time ||u||^2 term
    // this is the exact Abel summation of the per-step energy identity.
    let mut flux = Vec::with_capacity(run.snapshots.len().saturating_sub(1));
    midpoint_samples(run, |u| {
        let b = boundary_traces(u, &grid, &cfg)?;
        flux.push(
            (1.0 - cfg.alpha * cfg.alpha) * b.i_ux0 + b.i_nloc + 2.0 * cfg.beta * b.i_top,
        );
        Ok(0.0)
    })?;
    let wflux: Vec<f64> = flux
        .iter()
        .zip(&tr.t)
        .map(|(&f, &t)| (t_final - (t + 0.5 * dt)) * f)
        .collect();
    let lhs = t_final * norm_sq(run.initial_state());
    let rhs = time_trapz(dt, &u2) + time_midpoint(dt, &wflux);
    Ok(report("trazos", lhs, rhs, run))
}

/// Least-squares line on (t, ln E) over [t0, t1]; r = -slope,
/// kappa_fit = exp(intercept at t0) / E(0).
pub fn fit_decay(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayFit> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Err(KpError::Diagnostic(format!(
            "empty fit window [{t0}, {t1}]"
        )));
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &e) in trace.t.iter().zip(&trace.e) {
        if t >= t0 && t <= t1 {
            if e <= 0.0 {
                return Err(KpError::Diagnostic(format!(
                    "nonpositive energy {e} at t = {t} inside the fit window"
                )));
            }
            ts.push(t);
            ys.push(e.ln());
        }
    }
    if ts.len() < 3 {
        return Err(KpError::Diagnostic(format!(
            "fit window [{t0}, {t1}] contains {} samples, need >= 3",
            ts.len()
        )));
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for (&t, &y) in ts.iter().zip(&ys) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let r_squared = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    let e0 = trace.e.first().copied().unwrap_or(1.0);
    Ok(DecayFit {
        r: -slope,
        kappa_fit: intercept.exp() / e0,
        window,
        r_squared,
    })
}

/// R(u0) for a finished run: time-integrated boundary observations over
/// ||u0||^2.
pub fn observability_ratio(run: &SimulationRun) -> Result<f64> {
    require_stride_one(run)?;
    let grid = run.snapshots[0].grid().clone();
    let cfg = run.config;
    let total = midpoint_samples(run, |u| {
        let b = boundary_traces(u, &grid, &cfg)?;
        Ok(b.i_ux0 + b.i_top + b.i_nloc)
    })?;
    let denom = norm_sq(run.initial_state());
    if denom <= 0.0 {
        return Err(KpError::Diagnostic(
            "observability ratio undefined for zero initial datum".into(),
        ));
    }
    Ok(time_midpoint(run.scheme.dt, &total) / denom)
}

/// Aggregates per-sample ratios into the empirical observability constant
/// C_obs = 1 / min R and the derived envelope constants
/// gamma = C/(1+C), theta = (1/T) ln(1 + 1/C), kappa = 1/gamma.
/// Also measures the worst envelope excess over every sampled trajectory.
pub fn estimate_observability(runs: &[SimulationRun]) -> Result<ObservabilityReport> {
    if runs.is_empty() {
        return Err(KpError::Diagnostic("empty observability sample".into()));
    }
    let t_horizon = runs[0].scheme.t_final;
    let mut ratios = Vec::with_capacity(runs.len());
    for run in runs {
        ratios.push(observability_ratio(run)?);
    }
    let min_r = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_r > 0.0) {
        return Err(KpError::Diagnostic(format!(
            "nonpositive minimum observability ratio {min_r}"
        )));
    }
    let c_obs = 1.0 / min_r;
    let gamma = c_obs / (1.0 + c_obs);
    let theta = (1.0 + 1.0 / c_obs).ln() / t_horizon;
    let kappa = 1.0 / gamma;

    let mut envelope_max_excess: f64 = 0.0;
    for run in runs {
        let e0 = run.trace.e[0];
        if e0 <= 0.0 {
            continue;
        }
        for (&t, &e) in run.trace.t.iter().zip(&run.trace.e) {
            let excess = e * gamma * (theta * t).exp() / e0;
            envelope_max_excess = envelope_max_excess.max(excess);
        }
    }
    Ok(ObservabilityReport {
        ratios,
        c_obs,
        gamma,
        theta,
        kappa,
        t_horizon,
        envelope_max_excess,
    })
}
