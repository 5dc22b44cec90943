use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::csv_row;
use crate::model::{CostWeights, RateMatrix, State, ValueVector};
use crate::simplex::SimplexState;

use super::game::rates_from_values;

/// Distribution (and optionally value) path on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SimplexState>,
    pub values: Option<Vec<ValueVector>>,
}

impl Trajectory {
    /// Uniform grid of `steps + 1` points on `[t0, t0 + steps * h]`.
    pub(crate) fn grid(t0: f64, h: f64, steps: usize) -> Vec<f64> {
        (0..=steps).map(|k| t0 + k as f64 * h).collect()
    }

    /// Constant distribution on the given grid.
    pub fn constant(times: Vec<f64>, x: SimplexState) -> Self {
        let states = vec![x; times.len()];
        Trajectory {
            times,
            states,
            values: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn initial_state(&self) -> SimplexState {
        self.states[0]
    }

    pub fn final_state(&self) -> SimplexState {
        *self.states.last().expect("non-empty trajectory")
    }

    pub fn initial_value(&self) -> Option<ValueVector> {
        self.values.as_ref().map(|v| v[0])
    }

    /// Largest componentwise distance between two distribution paths on the
    /// same grid.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sup_distance(b))
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of the distribution at `t` (clamped to the grid).
    pub fn state_at(&self, t: f64) -> [f64; 3] {
        let (k, s) = locate(&self.times, t);
        lerp3(self.states[k].as_array(), self.states[(k + 1).min(self.len() - 1)].as_array(), s)
    }

    /// Linear interpolation of the value at `t`; `None` without values.
    pub fn value_at(&self, t: f64) -> Option<ValueVector> {
        let values = self.values.as_ref()?;
        let (k, s) = locate(&self.times, t);
        Some(ValueVector(lerp3(values[k].0, values[(k + 1).min(self.len() - 1)].0, s)))
    }

    /// CSV with header `t,x1,x2,x3,v1,v2,v3`; value columns are empty when the
    /// trajectory carries no values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x1,x2,x3,v1,v2,v3\n");
        for k in 0..self.len() {
            let x = self.states[k].as_array();
            let mut row = csv_row([self.times[k], x[0], x[1], x[2]]);
            match &self.values {
                Some(v) => {
                    row.push(',');
                    row.push_str(&csv_row(v[k].0));
                }
                None => row.push_str(",,,"),
            }
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Grid interval containing `t` and the fractional position in it.
pub(crate) fn locate(times: &[f64], t: f64) -> (usize, f64) {
    let n = times.len();
    if n < 2 || t <= times[0] {
        return (0, 0.0);
    }
    if t >= times[n - 1] {
        return (n - 2, 1.0);
    }
    let k = times.partition_point(|&s| s <= t) - 1;
    let s = (t - times[k]) / (times[k + 1] - times[k]);
    (k, s)
}

fn lerp3(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i] + s * (b[i] - a[i]))
}

/// Time-dependent transition rates for forward integration and path sampling.
pub trait RateSchedule: Sync {
    fn rates(&self, t: f64) -> RateMatrix;

    /// Upper bound on the exit rate from `state` over the whole horizon, if
    /// known. Path sampling needs it for thinning.
    fn exit_bound(&self, _state: State) -> Option<f64> {
        None
    }
}

impl<F> RateSchedule for F
where
    F: Fn(f64) -> RateMatrix + Sync,
{
    fn rates(&self, t: f64) -> RateMatrix {
        self(t)
    }
}

/// Time-invariant rates.
#[derive(Debug, Clone, Copy)]
pub struct ConstantRates(pub RateMatrix);

impl RateSchedule for ConstantRates {
    fn rates(&self, _t: f64) -> RateMatrix {
        self.0
    }

    fn exit_bound(&self, state: State) -> Option<f64> {
        Some(self.0.exit_rate(state))
    }
}

/// Best-response rates `β* = ρ* + w*` along a value path, with `v` linearly
/// interpolated between grid points.
#[derive(Debug, Clone)]
pub struct ValueDrivenRates<'a> {
    times: &'a [f64],
    values: &'a [ValueVector],
    weights: CostWeights,
    bounds: [f64; 3],
}

impl<'a> ValueDrivenRates<'a> {
    pub fn new(times: &'a [f64], values: &'a [ValueVector], weights: CostWeights) -> Self {
        // Each rate is a convex piecewise-linear function of v, and v is linear
        // on each grid interval, so the grid maxima bound the exit rates.
        let mut bounds = [0.0f64; 3];
        for v in values {
            let b = rates_from_values(v, &weights);
            for s in State::ALL {
                bounds[s.index()] = bounds[s.index()].max(b.exit_rate(s));
            }
        }
        ValueDrivenRates {
            times,
            values,
            weights,
            bounds,
        }
    }

    /// Rates along the value path of `traj`.
    pub fn from_trajectory(traj: &'a Trajectory, weights: CostWeights) -> Result<Self> {
        let values = traj.values.as_deref().ok_or_else(|| {
            Error::InvalidParameter("trajectory carries no value path".into())
        })?;
        Ok(Self::new(&traj.times, values, weights))
    }
}

impl RateSchedule for ValueDrivenRates<'_> {
    fn rates(&self, t: f64) -> RateMatrix {
        let (k, s) = locate(self.times, t);
        let a = self.values[k].0;
        let b = self.values[(k + 1).min(self.values.len() - 1)].0;
        rates_from_values(&ValueVector(lerp3(a, b, s)), &self.weights)
    }

    fn exit_bound(&self, state: State) -> Option<f64> {
        Some(self.bounds[state.index()])
    }
}
