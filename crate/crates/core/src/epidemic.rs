//! Virus / failure propagation on a network: the swarm model without
//! cross-inhibition, its stability threshold and the SIR limit.
//!
//! `s` and `r` are the two susceptible types (states 2 and 1), `z` is infected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::json_pretty;
use crate::graph::Graph;
use crate::model::{Congestion, CostWeights, State};
use crate::grid::AttackSchedule;
use crate::network::{integrate_network, NetworkTrajectory, NodeTriple};
use crate::ode::{step_count, Rk4};
use crate::parallel::par_map;
use crate::stationary::ReducedValue;

/// Default epidemic horizon and step.
pub const EPIDEMIC_HORIZON: f64 = 200.0;
pub const EPIDEMIC_DT: f64 = 0.01;
/// Threshold on the (cycle-averaged) `|ż|∞` below which a run counts as settled.
pub const STALENESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    /// Infection rates.
    pub beta13: f64,
    pub beta23: f64,
    /// Recovery rates.
    pub beta31: f64,
    pub beta32: f64,
    pub graph: Graph,
}

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.rates() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// All rates positive on a strongly connected graph.
    pub fn check_hypotheses(&self) -> Result<()> {
        self.validate()?;
        if let Some((name, _)) = self.rates().into_iter().find(|(_, v)| *v <= 0.0) {
            return Err(Error::HypothesisViolated(format!("{name} must be > 0")));
        }
        if !self.graph.is_strongly_connected() {
            return Err(Error::HypothesisViolated("graph is not strongly connected".into()));
        }
        Ok(())
    }

    fn rates(&self) -> [(&'static str, f64); 4] {
        [
            ("beta13", self.beta13),
            ("beta23", self.beta23),
            ("beta31", self.beta31),
            ("beta32", self.beta32),
        ]
    }

    pub fn with_infection_rates(&self, beta13: f64, beta23: f64) -> Self {
        EpidemicParams {
            beta13,
            beta23,
            ..self.clone()
        }
    }
}

fn rhs_with(x: &NodeTriple, g: &Graph, b13: f64, b23: f64, b31: f64, b32: f64, out: &mut NodeTriple) {
    let az = g.apply(&x.z);
    for i in 0..x.len() {
        let ds = -b23 * x.s[i] * az[i] + b32 * x.z[i];
        let dr = -b13 * x.r[i] * az[i] + b31 * x.z[i];
        out.s[i] = ds;
        out.r[i] = dr;
        out.z[i] = -(ds + dr);
    }
}

/// Network model right-hand side; per node `(ṡ + ṙ) + ż == 0` exactly.
pub fn virus_network_rhs(x: &NodeTriple, p: &EpidemicParams) -> NodeTriple {
    let mut out = NodeTriple::zeros(x.len());
    rhs_with(x, &p.graph, p.beta13, p.beta23, p.beta31, p.beta32, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirusMapping {
    /// `(−β31, −β32)`.
    pub y_star: ReducedValue,
    /// `β31 / (β13 x3)`, so that `Γ13⁻¹ (v3 − v1)⁺ = β13 x3`.
    pub gamma13: f64,
}

impl VirusMapping {
    /// Weights with `R31 = R32 = 1` and the mapped `Γ13`; other arcs keep
    /// unit (or large, for 1↔2) costs.
    pub fn weights(&self, congestion: Congestion) -> Result<CostWeights> {
        let mut w = CostWeights::uniform(1.0, 1.0, congestion)?;
        w.set_gamma(State::CommittedA, State::Uncommitted, self.gamma13);
        w.validate()?;
        Ok(w)
    }
}

pub fn mfg_to_virus_map(p: &EpidemicParams, x3: f64) -> Result<VirusMapping> {
    p.validate()?;
    if !(p.beta31 > 0.0) {
        return Err(Error::DegenerateMapping("β31 = 0 gives a zero disturbance cost".into()));
    }
    let gamma13 = p.beta31 / (p.beta13 * x3);
    if !(gamma13 > 0.0 && gamma13.is_finite()) {
        return Err(Error::DegenerateMapping(format!(
            "Γ13 = {gamma13} is not a positive cost (x3 = {x3}, β13 = {})",
            p.beta13
        )));
    }
    Ok(VirusMapping {
        y_star: ReducedValue::new(-p.beta31, -p.beta32),
        gamma13,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// Per node: `(β31 + β32) − (β23 s*ᵢ + β13 (1 − s*ᵢ)) (A1)ᵢ`.
    pub margins: Vec<f64>,
}

/// Threshold test at the disease-free equilibrium `(s*, 0, 1 − s*)`:
/// stable when every margin is positive.
pub fn stability_condition(s_star: &[f64], p: &EpidemicParams) -> Result<StabilityReport> {
    if s_star.len() != p.graph.node_count() {
        return Err(Error::InvalidParameter(format!(
            "s* has {} entries, graph has {} nodes",
            s_star.len(),
            p.graph.node_count()
        )));
    }
    for (index, &value) in s_star.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
    }
    let cure = p.beta31 + p.beta32;
    let margins: Vec<f64> = s_star
        .iter()
        .zip(p.graph.degrees())
        .map(|(&s, d)| cure - (p.beta23 * s * d + p.beta13 * (1.0 - s) * d))
        .collect();
    Ok(StabilityReport {
        stable: margins.iter().all(|&m| m > 0.0),
        margins,
    })
}

/// Linearization of the infected mass about `(s*, 0, 1 − s*)`:
/// `ż = (β23 s* + β13 (1 − s*)) ∘ Az − (β31 + β32) z`.
pub fn linearized_infection_rhs(z: &[f64], s_star: &[f64], p: &EpidemicParams) -> Vec<f64> {
    let az = p.graph.apply(z);
    let cure = p.beta31 + p.beta32;
    (0..z.len())
        .map(|i| (p.beta23 * s_star[i] + p.beta13 * (1.0 - s_star[i])) * az[i] - cure * z[i])
        .collect()
}

/// `|z|∞` along the linearized dynamics, one entry per step (plus the start).
pub fn simulate_linearized(z0: &[f64], s_star: &[f64], p: &EpidemicParams, horizon: f64, dt: f64) -> Result<Vec<f64>> {
    stability_condition(s_star, p)?;
    let (steps, h) = step_count(horizon, dt);
    let mut z = z0.to_vec();
    let mut rk = Rk4::new(z.len());
    let sup = |z: &[f64]| z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut norms = vec![sup(&z)];
    for k in 0..steps {
        rk.step(k as f64 * h, h, &mut z, |_, z, dz| {
            dz.copy_from_slice(&linearized_infection_rhs(z, s_star, p));
            Ok(())
        })?;
        norms.push(sup(&z));
    }
    Ok(norms)
}

/// SIR limit: `ṡ = −β23 s∘Az`, `ż = β23 s∘Az − β31 z`, `ṙ = β31 z`.
pub fn sir_limit_rhs(x: &NodeTriple, beta23: f64, beta31: f64, g: &Graph) -> NodeTriple {
    let mut out = NodeTriple::zeros(x.len());
    sir_into(x, beta23, beta31, g, &mut out);
    out
}

fn sir_into(x: &NodeTriple, beta23: f64, beta31: f64, g: &Graph, out: &mut NodeTriple) {
    let az = g.apply(&x.z);
    for i in 0..x.len() {
        let infect = beta23 * x.s[i] * az[i];
        let cure = beta31 * x.z[i];
        out.s[i] = -infect;
        out.r[i] = cure;
        out.z[i] = -(out.s[i] + out.r[i]);
    }
}

pub fn simulate_sir(state0: &NodeTriple, beta23: f64, beta31: f64, g: &Graph, horizon: f64, dt: f64) -> Result<NetworkTrajectory> {
    integrate_network(state0, horizon, dt, |_, x, out| sir_into(x, beta23, beta31, g, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicRun {
    pub trajectory: NetworkTrajectory,
    /// Final infection probabilities `z(T)`.
    pub steady_state: Vec<f64>,
    /// Whether the cycle-averaged `|ż|∞` at `T` is below [`STALENESS_TOL`].
    pub settled: bool,
    /// That cycle-averaged rate.
    pub final_rate: f64,
}

/// Integrates the network model with `β13`, `β23` scaled by the schedule's
/// factor at every step (one step is one iteration). The schedule's own base
/// rates are not consulted.
pub fn simulate_epidemic(
    state0: &NodeTriple,
    p: &EpidemicParams,
    sched: &AttackSchedule,
    horizon: f64,
    dt: f64,
) -> Result<EpidemicRun> {
    p.validate()?;
    sched.validate()?;
    if state0.len() != p.graph.node_count() {
        return Err(Error::InvalidParameter(format!(
            "state has {} nodes, graph has {}",
            state0.len(),
            p.graph.node_count()
        )));
    }
    let trajectory = integrate_network(state0, horizon, dt, |k, x, out| {
        let f = sched.factor(k as u64);
        rhs_with(x, &p.graph, f * p.beta13, f * p.beta23, p.beta31, p.beta32, out);
    })?;
    let steady_state = trajectory.final_state().z.clone();
    let last = trajectory.states.len() - 1;
    let back = (sched.cycle() as usize).min(last);
    let final_rate = if back == 0 {
        0.0
    } else {
        let earlier = &trajectory.states[last - back].z;
        let span = trajectory.times[last] - trajectory.times[last - back];
        steady_state
            .iter()
            .zip(earlier)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / span
    };
    Ok(EpidemicRun {
        trajectory,
        steady_state,
        settled: final_rate < STALENESS_TOL,
        final_rate,
    })
}

pub fn simulate_epidemic_batch(
    starts: &[NodeTriple],
    p: &EpidemicParams,
    sched: &AttackSchedule,
    horizon: f64,
    dt: f64,
    jobs: usize,
) -> Vec<Result<EpidemicRun>> {
    par_map(starts, jobs, |s| simulate_epidemic(s, p, sched, horizon, dt))
}

#[derive(Serialize)]
struct NodeInfection {
    node: usize,
    infection: f64,
}

/// `[{"node": 1, "infection": …}, …]`.
pub fn steady_state_json(z: &[f64]) -> String {
    let rows: Vec<NodeInfection> = z
        .iter()
        .enumerate()
        .map(|(i, &infection)| NodeInfection { node: i + 1, infection })
        .collect();
    json_pretty(&serde_json::to_value(rows).expect("plain data serializes"))
}

pub fn write_steady_state(z: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, steady_state_json(z)).map_err(|e| Error::io(path, e))
}
