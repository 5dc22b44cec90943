//! Per-node `(s, z, r)` probability triples and their trajectories, shared by
//! the swarm and epidemic models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::csv_row;
use crate::ode::{step_count, Rk4};

/// Tolerance on `s_i + z_i + r_i = 1` at construction.
pub const TRIPLE_TOL: f64 = 1e-9;
/// Largest excursion outside `[0, 1]` tolerated at an RK4 stage.
pub const STAGE_SLACK: f64 = 1e-6;

/// `s_i`, `z_i`, `r_i`: probability that node `i` is in state 2, 3 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTriple {
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
}

impl NodeTriple {
    /// Validated triple: equal lengths, entries in `[0, 1]`, per-node sums 1.
    pub fn new(s: Vec<f64>, z: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        let t = NodeTriple { s, z, r };
        t.validate()?;
        Ok(t)
    }

    /// `z = 1 - s - r`.
    pub fn from_s_r(s: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if s.len() != r.len() {
            return Err(Error::InvalidParameter("s and r differ in length".into()));
        }
        let z = s.iter().zip(&r).map(|(a, b)| 1.0 - a - b).collect();
        Self::new(s, z, r)
    }

    /// The same `(s, z, r)` at every node.
    pub fn uniform(n: usize, s: f64, z: f64, r: f64) -> Result<Self> {
        Self::new(vec![s; n], vec![z; n], vec![r; n])
    }

    pub fn zeros(n: usize) -> Self {
        NodeTriple {
            s: vec![0.0; n],
            z: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.s.len();
        if self.z.len() != n || self.r.len() != n {
            return Err(Error::InvalidParameter("s, z, r differ in length".into()));
        }
        for i in 0..n {
            for v in [self.s[i], self.z[i], self.r[i]] {
                if !(v >= -TRIPLE_TOL && v <= 1.0 + TRIPLE_TOL) {
                    return Err(Error::OutOfRange { index: i, value: v });
                }
            }
            let sum = self.s[i] + self.z[i] + self.r[i];
            if (sum - 1.0).abs() > TRIPLE_TOL {
                return Err(Error::InvalidParameter(format!(
                    "node {}: s + z + r = {sum}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Smallest and largest entry over all nodes and components.
    pub fn range(&self) -> (f64, f64) {
        self.s
            .iter()
            .chain(&self.z)
            .chain(&self.r)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn sup_distance(&self, other: &NodeTriple) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        d(&self.s, &other.s).max(d(&self.z, &other.z)).max(d(&self.r, &other.r))
    }

    /// Largest absolute entry, e.g. of a derivative triple.
    pub fn sup_norm(&self) -> f64 {
        self.s
            .iter()
            .chain(&self.z)
            .chain(&self.r)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.len());
        v.extend_from_slice(&self.s);
        v.extend_from_slice(&self.z);
        v.extend_from_slice(&self.r);
        v
    }

    pub(crate) fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 3;
        NodeTriple {
            s: y[..n].to_vec(),
            z: y[n..2 * n].to_vec(),
            r: y[2 * n..].to_vec(),
        }
    }
}

/// Node triples on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<NodeTriple>,
}

impl NetworkTrajectory {
    pub fn final_state(&self) -> &NodeTriple {
        self.states.last().expect("non-empty trajectory")
    }

    /// Smallest and largest entry over the whole trajectory.
    pub fn range(&self) -> (f64, f64) {
        self.states
            .iter()
            .map(NodeTriple::range)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }

    /// Per-node maximum of `z` over the trajectory.
    pub fn peak_z(&self) -> Vec<f64> {
        let n = self.states[0].len();
        (0..n)
            .map(|i| self.states.iter().map(|s| s.z[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// State at the grid point closest to `t`.
    pub fn state_near(&self, t: f64) -> &NodeTriple {
        let k = self.times.partition_point(|&s| s < t).min(self.times.len() - 1);
        let k = if k > 0 && (t - self.times[k - 1]).abs() <= (self.times[k] - t).abs() {
            k - 1
        } else {
            k
        };
        &self.states[k]
    }

    /// CSV `t,s_1..s_n,z_1..z_n,r_1..r_n`.
    pub fn to_csv(&self) -> String {
        self.to_csv_every(1)
    }

    /// As [`Self::to_csv`] but keeping every `stride`-th row (and the last).
    pub fn to_csv_every(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let last = self.times.len().saturating_sub(1);
        let n = self.states.first().map_or(0, NodeTriple::len);
        let mut header = vec!["t".to_string()];
        for c in ["s", "z", "r"] {
            header.extend((1..=n).map(|i| format!("{c}_{i}")));
        }
        let mut out = header.join(",");
        out.push('\n');
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            if k % stride != 0 && k != last {
                continue;
            }
            out.push_str(&csv_row(std::iter::once(*t).chain(x.to_flat())));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// RK4 on `[0, horizon]` for a per-node right-hand side.
///
/// `rhs(step, state, out)` writes `(ṡ, ż, ṙ)`; `step` is the index of the
/// RK4 step in progress, so rate schedules can be held constant within a
/// step. Stage states more than [`STAGE_SLACK`] outside `[0, 1]` abort with
/// `StepTooLarge`.
pub fn integrate_network<F>(state0: &NodeTriple, horizon: f64, dt: f64, mut rhs: F) -> Result<NetworkTrajectory>
where
    F: FnMut(usize, &NodeTriple, &mut NodeTriple),
{
    state0.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need horizon >= 0 and dt > 0, got {horizon}, {dt}"
        )));
    }
    let (steps, h) = step_count(horizon, dt);
    let n = state0.len();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(state0.clone());
    let mut y = state0.to_flat();
    let mut rk = Rk4::new(3 * n);
    let mut out = NodeTriple::zeros(n);
    for k in 0..steps {
        let t = k as f64 * h;
        rk.step(t, h, &mut y, |s, y, dy| {
            let worst = y.iter().map(|&v| (-v).max(v - 1.0)).fold(f64::NEG_INFINITY, f64::max);
            if !(worst <= STAGE_SLACK) {
                return Err(Error::StepTooLarge {
                    time: s,
                    excess: if worst.is_nan() { f64::INFINITY } else { worst },
                });
            }
            let x = NodeTriple::from_flat(y);
            rhs(k, &x, &mut out);
            dy[..n].copy_from_slice(&out.s);
            dy[n..2 * n].copy_from_slice(&out.z);
            dy[2 * n..].copy_from_slice(&out.r);
            Ok(())
        })?;
        times.push((k + 1) as f64 * h);
        states.push(NodeTriple::from_flat(&y));
    }
    Ok(NetworkTrajectory { times, states })
}
