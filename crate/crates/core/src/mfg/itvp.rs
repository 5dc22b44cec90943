//! Damped Picard iteration on the coupled forward/backward system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostWeights, ValueVector};
use crate::ode::step_count;
use crate::simplex::SimplexState;

use super::game::terminal_values;
use super::integrate::{backward_counted, forward_on_grid};
use super::trajectory::{Trajectory, ValueDrivenRates};

/// Terminal condition for the value path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// `ψ_i = f_i(x_i(T))`, re-evaluated on every sweep.
    #[default]
    Congestion,
    /// A fixed terminal value vector.
    Fixed(ValueVector),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ItvpConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Weight on the new forward pass when relaxing, in (0, 1].
    pub relaxation: f64,
    /// Sup-norm tolerance on the change of the distribution path.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub terminal: Terminal,
}

impl Default for ItvpConfig {
    fn default() -> Self {
        ItvpConfig {
            horizon: 10.0,
            dt: 1e-3,
            relaxation: 0.5,
            tolerance: 1e-9,
            max_iterations: 500,
            terminal: Terminal::Congestion,
        }
    }
}

impl ItvpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be >= 0", self.horizon));
        }
        if !(self.dt > 0.0) || (self.horizon > 0.0 && self.dt > self.horizon) {
            return bad(format!("step {} must lie in (0, T]", self.dt));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad(format!("relaxation {} must lie in (0, 1]", self.relaxation));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be > 0", self.tolerance));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".into());
        }
        if let Terminal::Fixed(v) = self.terminal {
            if !v.is_finite() {
                return bad("terminal values must be finite".into());
            }
        }
        Ok(())
    }
}

/// Result of [`solve_itvp`]; `trajectory` carries both paths.
#[derive(Debug, Clone)]
pub struct ItvpSolution {
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// Sup-norm gap between the last sweep's input path and the undamped
    /// forward pass it produced.
    pub last_change: f64,
    /// `sup |forward(v(x)) - x|` for the returned pair.
    pub residual: f64,
    pub converged: bool,
    /// Stage evaluations outside the `v1, v2 <= v3` regime in the final
    /// backward pass.
    pub regime_violations: usize,
}

impl ItvpSolution {
    pub fn values(&self) -> &[ValueVector] {
        self.trajectory.values.as_deref().expect("solutions carry values")
    }
}

fn psi(cfg: &ItvpConfig, x_end: &SimplexState, w: &CostWeights) -> ValueVector {
    match cfg.terminal {
        Terminal::Congestion => terminal_values(x_end, w),
        Terminal::Fixed(v) => v,
    }
}

/// One backward/forward sweep: value path for `x`, then the distribution it
/// induces from `x0`.
fn sweep(
    x0: SimplexState,
    x: &Trajectory,
    w: &CostWeights,
    cfg: &ItvpConfig,
) -> Result<(Trajectory, Trajectory, usize)> {
    let (with_v, general) = backward_counted(psi(cfg, &x.final_state(), w), x, w)?;
    let values = with_v.values.as_deref().expect("backward pass fills values");
    let rates = ValueDrivenRates::new(&with_v.times, values, *w);
    let next = forward_on_grid(x0, &rates, x.times.clone())?;
    Ok((with_v, next, general))
}

/// Solves the initial-terminal value problem on `[0, T]` by damped Picard
/// iteration on the distribution path.
///
/// On failure to converge the error carries the last iterate.
pub fn solve_itvp(x0: SimplexState, w: &CostWeights, cfg: &ItvpConfig) -> Result<ItvpSolution> {
    cfg.validate()?;
    w.validate()?;
    let (steps, h) = step_count(cfg.horizon, cfg.dt);
    let mut x = Trajectory::constant(Trajectory::grid(0.0, h, steps), x0);
    let mut last_change = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        let (_, next, _) = sweep(x0, &x, w, cfg)?;
        last_change = next.sup_distance(&x);
        log::debug!("itvp sweep {it}: change {last_change:e}");
        if last_change < cfg.tolerance {
            return finish(x0, next, w, cfg, it, last_change, true);
        }
        for (xk, xn) in x.states.iter_mut().zip(&next.states) {
            *xk = xn.mix(xk, cfg.relaxation);
        }
    }
    let last = finish(x0, x, w, cfg, cfg.max_iterations, last_change, false)?;
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        last_change,
        last: Box::new(last),
    })
}

fn finish(
    x0: SimplexState,
    x: Trajectory,
    w: &CostWeights,
    cfg: &ItvpConfig,
    iterations: usize,
    last_change: f64,
    converged: bool,
) -> Result<ItvpSolution> {
    let (with_v, check, general) = sweep(x0, &x, w, cfg)?;
    Ok(ItvpSolution {
        residual: check.sup_distance(&with_v),
        trajectory: with_v,
        iterations,
        last_change,
        converged,
        regime_violations: general,
    })
}
