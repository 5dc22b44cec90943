//! Second-order Kuramoto model of bus frequencies under infection-driven
//! attack disturbances, and the attack schedules.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::{csv_row, g12};
use crate::graph::Graph;
use crate::ode::Rk4;

/// Nominal grid frequency in Hz.
pub const NOMINAL_HZ: f64 = 50.0;
/// Default band of acceptable frequencies, Hz.
pub const DEFAULT_BAND: [f64; 2] = [49.5, 50.5];
/// Default grid step; one step is one "iteration".
pub const GRID_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// `sum_j sin(θi − θj)` over every bus.
    #[default]
    AllToAll,
    /// `sum_j a_ij sin(θi − θj)` over the network edges.
    Adjacency,
}

/// Homogeneous swing-equation parameters, in a frame rotating at 50 Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OscillatorParams {
    pub omega: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub coupling: CouplingKind,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        OscillatorParams {
            omega: 0.0,
            m: 1.0,
            d: 0.1,
            k: 10.0,
            coupling: CouplingKind::AllToAll,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.m > 0.0 && self.d >= 0.0 && self.k >= 0.0;
        if !ok || ![self.omega, self.m, self.d, self.k].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "oscillator parameters need M > 0, D >= 0, K >= 0 (got M={}, D={}, K={})",
                self.m, self.d, self.k
            )));
        }
        Ok(())
    }

    pub fn coupling<'a>(&self, graph: &'a Graph) -> Coupling<'a> {
        match self.coupling {
            CouplingKind::AllToAll => Coupling::AllToAll,
            CouplingKind::Adjacency => Coupling::Adjacency(graph),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Coupling<'a> {
    AllToAll,
    Adjacency(&'a Graph),
}

impl Coupling<'_> {
    fn weight(&self, i: usize, j: usize) -> f64 {
        match self {
            Coupling::AllToAll => 1.0,
            Coupling::Adjacency(g) => g.a(i, j),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorState {
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
}

impl OscillatorState {
    /// All buses in phase at the nominal frequency.
    pub fn synchronized(n: usize) -> Self {
        OscillatorState {
            theta: vec![0.0; n],
            theta_dot: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Bus frequencies in Hz.
    pub fn frequencies(&self) -> Vec<f64> {
        self.theta_dot.iter().map(|w| NOMINAL_HZ + w / (2.0 * PI)).collect()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.theta_dot).copied().collect()
    }

    fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 2;
        OscillatorState {
            theta: y[..n].to_vec(),
            theta_dot: y[n..].to_vec(),
        }
    }
}

fn rhs_flat(y: &[f64], p: &OscillatorParams, coupling: &Coupling, zeta: &[f64], dy: &mut [f64]) {
    let n = zeta.len();
    let (theta, theta_dot) = y.split_at(n);
    let gain = p.k / (n as f64 * p.m);
    for i in 0..n {
        let pull: f64 = (0..n)
            .map(|j| coupling.weight(i, j) * (theta[i] - theta[j]).sin())
            .sum();
        dy[i] = theta_dot[i];
        dy[n + i] = p.omega / p.m - gain * pull - p.d / p.m * theta_dot[i] + zeta[i];
    }
}

/// `(θ̇, θ̈)` with θ̈ᵢ = ω/M − K/(NM) Σⱼ sin(θᵢ − θⱼ) − (D/M) θ̇ᵢ + ζᵢ.
pub fn kuramoto_rhs(
    state: &OscillatorState,
    p: &OscillatorParams,
    coupling: &Coupling,
    zeta: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(zeta.len(), state.len(), "one disturbance per bus");
    let y = state.to_flat();
    let mut dy = vec![0.0; y.len()];
    rhs_flat(&y, p, coupling, zeta, &mut dy);
    let n = state.len();
    (dy[..n].to_vec(), dy[n..].to_vec())
}

/// `½M Σ θ̇ᵢ² + K/(2N) Σᵢⱼ wᵢⱼ (1 − cos(θᵢ − θⱼ))`; non-increasing when
/// ω = 0 and ζ = 0.
pub fn kuramoto_energy(state: &OscillatorState, p: &OscillatorParams, coupling: &Coupling) -> f64 {
    let n = state.len();
    let kinetic: f64 = 0.5 * p.m * state.theta_dot.iter().map(|w| w * w).sum::<f64>();
    let mut potential = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                potential += coupling.weight(i, j) * (1.0 - (state.theta[i] - state.theta[j]).cos());
            }
        }
    }
    kinetic + p.k / (2.0 * n as f64) * potential
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Sequential,
    ContinuousLowRate,
}

/// How an attack scales the infection rates over time and how strongly an
/// infected bus is disturbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub kind: AttackKind,
    /// Normal `(β13, β23)`.
    pub base_rates: [f64; 2],
    pub burst_multiplier: f64,
    /// Bursts land on iterations divisible by this.
    pub burst_period: u64,
    /// Iterations between disturbance redraws.
    pub sample_interval: u64,
    pub k_hat: f64,
    /// rad per time unit.
    pub omega_hat: f64,
}

impl AttackSchedule {
    pub fn continuous_low_rate() -> Self {
        AttackSchedule {
            kind: AttackKind::ContinuousLowRate,
            base_rates: [0.13, 0.13],
            burst_multiplier: 5.0,
            burst_period: 5,
            sample_interval: 150,
            k_hat: 1.0,
            omega_hat: PI / 4.0,
        }
    }

    pub fn sequential() -> Self {
        AttackSchedule {
            kind: AttackKind::Sequential,
            sample_interval: 100,
            k_hat: 1.5,
            ..Self::continuous_low_rate()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates_ok = self.base_rates.iter().all(|b| *b >= 0.0 && b.is_finite());
        if !rates_ok
            || !(self.burst_multiplier >= 1.0 && self.burst_multiplier.is_finite())
            || self.burst_period < 1
            || self.sample_interval < 1
            || !(self.k_hat.is_finite() && self.omega_hat.is_finite())
        {
            return Err(Error::InvalidParameter(
                "attack schedule needs rates >= 0, multiplier >= 1, intervals >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Magnitude `k̂ ω̂` of the disturbance on an attacked bus.
    pub fn strength(&self) -> f64 {
        self.k_hat * self.omega_hat
    }

    /// Multiplier on the infection rates at `iteration`.
    pub fn factor(&self, iteration: u64) -> f64 {
        match self.kind {
            AttackKind::Sequential if iteration % self.burst_period == 0 => self.burst_multiplier,
            _ => 1.0,
        }
    }

    /// Length of one rate cycle, in iterations.
    pub fn cycle(&self) -> u64 {
        match self.kind {
            AttackKind::Sequential => self.burst_period,
            AttackKind::ContinuousLowRate => 1,
        }
    }
}

/// `(β13, β23)` in force at `iteration`.
pub fn schedule_rates(sched: &AttackSchedule, iteration: u64) -> (f64, f64) {
    let [b13, b23] = sched.base_rates;
    let f = sched.factor(iteration);
    (b13 * f, b23 * f)
}

/// Stream for the disturbance draw of sampling epoch `epoch`.
pub fn disturbance_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    rng
}

/// One draw of `ζ`: bus `i` is attacked with probability `infection[i]` and
/// then pushed by `±k̂ω̂` with a fair sign.
pub fn sample_disturbance(infection: &[f64], sched: &AttackSchedule, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_probabilities(infection)?;
    let strength = sched.strength();
    Ok(infection
        .iter()
        .map(|&p| {
            // both draws always happen so the stream layout never depends on outcomes
            let u: f64 = rng.gen();
            let up: bool = rng.gen();
            if u < p {
                if up {
                    strength
                } else {
                    -strength
                }
            } else {
                0.0
            }
        })
        .collect())
}

fn check_probabilities(v: &[f64]) -> Result<()> {
    for (index, &value) in v.iter().enumerate() {
        if !(-1e-9..=1.0 + 1e-9).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<OscillatorState>,
}

impl OscillatorTrajectory {
    pub fn final_state(&self) -> &OscillatorState {
        self.states.last().expect("trajectory has the initial state")
    }

    pub fn frequencies(&self) -> FrequencyTrace {
        FrequencyTrace {
            times: self.times.clone(),
            hz: self.states.iter().map(|s| s.frequencies()).collect(),
        }
    }
}

/// Integrates the swing equations for `iterations` RK4 steps of `dt`;
/// `zeta(k)` is the disturbance held during step `k`.
pub fn simulate_oscillators(
    state0: &OscillatorState,
    p: &OscillatorParams,
    coupling: &Coupling,
    iterations: u64,
    dt: f64,
    mut zeta: impl FnMut(u64) -> Vec<f64>,
) -> Result<OscillatorTrajectory> {
    p.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    if state0.theta_dot.len() != state0.len() {
        return Err(Error::InvalidParameter("theta and theta_dot lengths differ".into()));
    }
    if let Coupling::Adjacency(g) = coupling {
        if g.node_count() != state0.len() {
            return Err(Error::InvalidParameter(format!(
                "graph has {} buses, state has {}",
                g.node_count(),
                state0.len()
            )));
        }
    }
    let mut y = state0.to_flat();
    let mut rk = Rk4::new(y.len());
    let mut times = vec![0.0];
    let mut states = vec![state0.clone()];
    for k in 0..iterations {
        let z = zeta(k);
        rk.step(k as f64 * dt, dt, &mut y, |_, y, dy| {
            rhs_flat(y, p, coupling, &z, dy);
            Ok(())
        })?;
        times.push((k + 1) as f64 * dt);
        states.push(OscillatorState::from_flat(&y));
    }
    Ok(OscillatorTrajectory { times, states })
}

/// Runs the grid from synchrony with `ζ` redrawn from `infection` every
/// `sample_interval` iterations and held in between.
pub fn simulate_grid(
    infection: &[f64],
    p: &OscillatorParams,
    graph: &Graph,
    sched: &AttackSchedule,
    iterations: u64,
    dt: f64,
    seed: u64,
) -> Result<OscillatorTrajectory> {
    sched.validate()?;
    check_probabilities(infection)?;
    if graph.node_count() != infection.len() {
        return Err(Error::InvalidParameter(format!(
            "graph has {} buses, infection vector has {}",
            graph.node_count(),
            infection.len()
        )));
    }
    let coupling = p.coupling(graph);
    let mut held = vec![0.0; infection.len()];
    let mut failure = None;
    let traj = simulate_oscillators(
        &OscillatorState::synchronized(infection.len()),
        p,
        &coupling,
        iterations,
        dt,
        |k| {
            if k % sched.sample_interval == 0 {
                let epoch = k / sched.sample_interval;
                match sample_disturbance(infection, sched, &mut disturbance_rng(seed, epoch)) {
                    Ok(z) => held = z,
                    Err(e) => failure = Some(e),
                }
            }
            held.clone()
        },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Per-bus frequencies in Hz over time.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    pub times: Vec<f64>,
    /// `hz[k][i]`: bus `i` at `times[k]`.
    pub hz: Vec<Vec<f64>>,
}

impl FrequencyTrace {
    pub fn node_count(&self) -> usize {
        self.hz.first().map_or(0, |r| r.len())
    }

    pub fn to_csv(&self) -> String {
        let n = self.node_count();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",f_{i}"));
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.hz) {
            out.push_str(&g12(*t));
            out.push(',');
            out.push_str(&csv_row(row.iter().copied()));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionStats {
    /// 1-based bus id.
    pub node: usize,
    /// Largest `|f − 50|`, Hz.
    pub peak_deviation: f64,
    /// Each sample outside the band counts for one step of duration.
    pub time_outside: f64,
}

/// Peak deviation from 50 Hz and time spent outside `band`, per bus.
pub fn frequency_excursion_stats(trace: &FrequencyTrace, band: [f64; 2]) -> Result<Vec<ExcursionStats>> {
    if !(band[0] < band[1]) {
        return Err(Error::InvalidParameter(format!("band {band:?} must have low < high")));
    }
    let dt = match trace.times.as_slice() {
        [a, b, ..] => b - a,
        _ => 0.0,
    };
    let mut stats: Vec<ExcursionStats> = (0..trace.node_count())
        .map(|i| ExcursionStats {
            node: i + 1,
            peak_deviation: 0.0,
            time_outside: 0.0,
        })
        .collect();
    for row in &trace.hz {
        for (s, &f) in stats.iter_mut().zip(row) {
            s.peak_deviation = s.peak_deviation.max((f - NOMINAL_HZ).abs());
            if f < band[0] || f > band[1] {
                s.time_outside += dt;
            }
        }
    }
    Ok(stats)
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_substitution() {
        let p = OscillatorParams {
            omega: 0.0,
            m: 1.0,
            d: 0.0,
            k: 2.0,
            coupling: CouplingKind::AllToAll,
        };
        let s = OscillatorState {
            theta: vec![0.0, PI / 2.0],
            theta_dot: vec![0.0, 0.0],
        };
        let (_, acc) = kuramoto_rhs(&s, &p, &Coupling::AllToAll, &[0.0, 0.0]);
        // sin(0 − π/2) = −1 enters with a minus sign
        assert!((acc[0] - 1.0).abs() < 1e-15);
        assert!((acc[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn in_phase_only_damps() {
        let p = OscillatorParams::default();
        let s = OscillatorState {
            theta: vec![0.3; 4],
            theta_dot: vec![1.0, -2.0, 0.5, 0.0],
        };
        let (_, acc) = kuramoto_rhs(&s, &p, &Coupling::AllToAll, &[0.0; 4]);
        for (a, w) in acc.iter().zip(&s.theta_dot) {
            assert_eq!(*a, -0.1 * w);
        }
    }

    #[test]
    fn table_rates() {
        let low = AttackSchedule::continuous_low_rate();
        let seq = AttackSchedule::sequential();
        assert_eq!(schedule_rates(&low, 5), (0.13, 0.13));
        assert_eq!(schedule_rates(&low, 1234), (0.13, 0.13));
        assert_eq!(schedule_rates(&seq, 5), (0.65, 0.65));
        assert_eq!(schedule_rates(&seq, 7), (0.13, 0.13));
    }

    #[test]
    fn disturbance_extremes() {
        let sched = AttackSchedule::continuous_low_rate();
        let mut rng = disturbance_rng(1, 0);
        assert!(sample_disturbance(&[0.0; 5], &sched, &mut rng).unwrap().iter().all(|&z| z == 0.0));
        let z = sample_disturbance(&[1.0; 5], &sched, &mut rng).unwrap();
        assert!(z.iter().all(|&z| z.abs() == sched.strength()));
        assert!(sample_disturbance(&[1.5], &sched, &mut rng).is_err());
    }

    #[test]
    fn zero_iterations_is_initial_state() {
        let g = Graph::path(3);
        let t = simulate_grid(&[0.5; 3], &OscillatorParams::default(), &g, &AttackSchedule::sequential(), 0, GRID_DT, 3).unwrap();
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.final_state(), &OscillatorState::synchronized(3));
    }

    #[test]
    fn excursion_examples() {
        let flat = FrequencyTrace {
            times: vec![0.0, 0.01, 0.02],
            hz: vec![vec![50.0]; 3],
        };
        let s = frequency_excursion_stats(&flat, DEFAULT_BAND).unwrap();
        assert_eq!((s[0].peak_deviation, s[0].time_outside), (0.0, 0.0));
        let spike = FrequencyTrace {
            times: vec![0.0, 0.01, 0.02],
            hz: vec![vec![50.0], vec![50.6], vec![50.0]],
        };
        let s = frequency_excursion_stats(&spike, DEFAULT_BAND).unwrap();
        assert!((s[0].peak_deviation - 0.6).abs() < 1e-12);
        assert!((s[0].time_outside - 0.01).abs() < 1e-15);
        assert!(frequency_excursion_stats(&spike, [50.5, 49.5]).is_err());
    }

    #[test]
    fn same_seed_same_run() {
        let g = Graph::walpole();
        let inf = vec![0.4; 11];
        let p = OscillatorParams::default();
        let a = simulate_grid(&inf, &p, &g, &AttackSchedule::sequential(), 300, GRID_DT, 9).unwrap();
        let b = simulate_grid(&inf, &p, &g, &AttackSchedule::sequential(), 300, GRID_DT, 9).unwrap();
        assert_eq!(a, b);
    }
}
