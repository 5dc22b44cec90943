use crate::error::{Error, Result};
use crate::model::{CostWeights, ValueVector};
use crate::ode::{step_count, Rk4};
use crate::simplex::SimplexState;

use super::game::{hjb_rhs, kolmogorov_raw, Regime};
use super::trajectory::{RateSchedule, Trajectory};

/// Largest excursion outside the simplex tolerated at an RK4 stage.
pub const STAGE_SLACK: f64 = 1e-6;

fn check_params(horizon: f64, dt: f64) -> Result<()> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be >= 0")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("step {dt} must be > 0")));
    }
    if horizon > 0.0 && dt > horizon {
        return Err(Error::InvalidParameter(format!(
            "step {dt} exceeds the horizon {horizon}"
        )));
    }
    Ok(())
}

/// RK4 integration of the reduced forward equation on `[0, horizon]`, with
/// `x3 = 1 - x1 - x2` at every step.
pub fn integrate_forward(
    x0: SimplexState,
    rates: &dyn RateSchedule,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    check_params(horizon, dt)?;
    let (steps, h) = step_count(horizon, dt);
    forward_on_grid(x0, rates, Trajectory::grid(0.0, h, steps))
}

pub(crate) fn forward_on_grid(
    x0: SimplexState,
    rates: &dyn RateSchedule,
    times: Vec<f64>,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(times.len());
    states.push(x0);
    let mut y = [x0.x1(), x0.x2()];
    let mut rk = Rk4::new(2);
    for k in 1..times.len() {
        let t = times[k - 1];
        let h = times[k] - t;
        rk.step(t, h, &mut y, |s, y, dy| {
            let x3 = 1.0 - y[0] - y[1];
            let excess = [-y[0], -y[1], -x3].into_iter().fold(f64::NEG_INFINITY, f64::max);
            if !(excess <= STAGE_SLACK) {
                return Err(Error::StepTooLarge {
                    time: s,
                    excess: if excess.is_nan() { f64::INFINITY } else { excess },
                });
            }
            let d = kolmogorov_raw(y[0], y[1], &rates.rates(s));
            dy[0] = d[0];
            dy[1] = d[1];
            Ok(())
        })?;
        let x = SimplexState::from_reduced(y[0], y[1], STAGE_SLACK)
            .map_err(|excess| Error::StepTooLarge { time: times[k], excess })?;
        y = [x.x1(), x.x2()];
        states.push(x);
    }
    Ok(Trajectory {
        times,
        states,
        values: None,
    })
}

/// Backward RK4 of the value dynamics from `v(T) = psi` along `x_traj`;
/// the distribution is linearly interpolated at stage midpoints.
///
/// Returns `x_traj` with its value path filled in.
pub fn integrate_backward(psi: ValueVector, x_traj: &Trajectory, w: &CostWeights) -> Result<Trajectory> {
    backward_counted(psi, x_traj, w).map(|(t, _)| t)
}

/// As [`integrate_backward`], also counting stage evaluations that fell
/// outside the `v1, v2 <= v3` regime.
pub(crate) fn backward_counted(
    psi: ValueVector,
    x_traj: &Trajectory,
    w: &CostWeights,
) -> Result<(Trajectory, usize)> {
    if x_traj.is_empty() {
        return Err(Error::InvalidParameter("empty distribution path".into()));
    }
    let n = x_traj.len();
    let mut values = vec![ValueVector::default(); n];
    values[n - 1] = psi;
    let mut general = 0usize;
    let mut v = psi.0.to_vec();
    let mut rk = Rk4::new(3);
    let end = x_traj.end();
    for k in (0..n - 1).rev() {
        // reverse time s = T - t, dv/ds = H = -v̇
        let s0 = end - x_traj.times[k + 1];
        let h = x_traj.times[k + 1] - x_traj.times[k];
        rk.step(s0, h, &mut v, |s, v, dv| {
            let x = x_traj.state_at(end - s);
            let x = SimplexState::from_reduced(x[0], x[1], STAGE_SLACK)
                .map_err(|excess| Error::StepTooLarge { time: end - s, excess })?;
            let (d, regime) = hjb_rhs(&x, &ValueVector([v[0], v[1], v[2]]), w);
            if regime == Regime::General {
                general += 1;
            }
            for i in 0..3 {
                dv[i] = -d[i];
            }
            Ok(())
        })?;
        let vk = ValueVector([v[0], v[1], v[2]]);
        if !vk.is_finite() {
            return Err(Error::StepTooLarge {
                time: x_traj.times[k],
                excess: f64::INFINITY,
            });
        }
        values[k] = vk;
    }
    if general > 0 {
        log::warn!("value path left the v1, v2 <= v3 regime at {general} stage evaluations; general Hamiltonian used");
    }
    let mut out = x_traj.clone();
    out.values = Some(values);
    Ok((out, general))
}
