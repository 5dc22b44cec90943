//! Honeybee collective decision-making: the mean-field evolutionary model and
//! the finite network model with neighbour-mediated and spontaneous rates.
//!
//! State 1 (`r`) and state 2 (`s`) are the two nest options, state 3 (`z`)
//! is uncommitted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Congestion, CostWeights, State, LARGE_COST};
use crate::network::{integrate_network, NetworkTrajectory, NodeTriple};
use crate::parallel::par_map;
use crate::simplex::SimplexState;
use crate::stationary::ReducedValue;

/// Rates of the mean-field evolutionary model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmParams {
    /// Spontaneous commitment 3 → 1, 3 → 2.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Recruitment (waggle dance) gains.
    pub r1: f64,
    pub r2: f64,
    /// Cross-inhibition gains; `sigma_j` is exerted by bees committed to `j`.
    pub sigma1: f64,
    pub sigma2: f64,
    /// Spontaneous abandonment 1 → 3, 2 → 3.
    pub alpha1: f64,
    pub alpha2: f64,
}

impl SwarmParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma1, self.gamma2, self.r1, self.r2, self.sigma1, self.sigma2, self.alpha1, self.alpha2,
        ];
        if all.iter().all(|v| *v >= 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("swarm rates must be finite and >= 0".into()))
        }
    }

    /// Rate 3 → 1 at distribution `x`.
    pub fn commit1(&self, x: &SimplexState) -> f64 {
        self.gamma1 + self.r1 * x.x1()
    }

    pub fn commit2(&self, x: &SimplexState) -> f64 {
        self.gamma2 + self.r2 * x.x2()
    }

    /// Rate 1 → 3 at distribution `x`.
    pub fn abandon1(&self, x: &SimplexState) -> f64 {
        self.alpha1 + self.sigma2 * x.x2()
    }

    pub fn abandon2(&self, x: &SimplexState) -> f64 {
        self.alpha2 + self.sigma1 * x.x1()
    }
}

/// Mean-field evolutionary model; the components sum to exactly 0.
pub fn honeybee_meanfield_rhs(x: &SimplexState, p: &SwarmParams) -> [f64; 3] {
    let d1 = x.x3() * p.commit1(x) - x.x1() * p.abandon1(x);
    let d2 = x.x3() * p.commit2(x) - x.x2() * p.abandon2(x);
    [d1, d2, -(d1 + d2)]
}

/// Game parameters that reproduce the swarm rates at a given distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmMapping {
    /// `y* = (-γ1 - r1 x1, -γ2 - r2 x2)`.
    pub y_star: ReducedValue,
    /// `Γ13 = (γ1 + r1 x1) / (α1 + σ2 x2)`.
    pub gamma13: f64,
    /// `Γ23 = (γ2 + r2 x2) / (α2 + σ1 x1)`.
    pub gamma23: f64,
}

impl SwarmMapping {
    /// Weights with `R31 = R32 = 1` and the mapped `Γ13`, `Γ23`; the
    /// remaining arcs keep unit (or large, for 1↔2) costs.
    pub fn weights(&self, congestion: Congestion) -> Result<CostWeights> {
        let mut w = CostWeights::uniform(1.0, 1.0, congestion)?;
        w.set_gamma(State::CommittedA, State::Uncommitted, self.gamma13);
        w.set_gamma(State::CommittedB, State::Uncommitted, self.gamma23);
        debug_assert_eq!(w.r(State::CommittedA, State::CommittedB), LARGE_COST);
        w.validate()?;
        Ok(w)
    }
}

pub fn mfg_to_swarm_map(p: &SwarmParams, x: &SimplexState) -> Result<SwarmMapping> {
    p.validate()?;
    let (c1, c2) = (p.commit1(x), p.commit2(x));
    let (a1, a2) = (p.abandon1(x), p.abandon2(x));
    for (name, v) in [("α1 + σ2 x2", a1), ("α2 + σ1 x1", a2), ("γ1 + r1 x1", c1), ("γ2 + r2 x2", c2)] {
        if !(v > 0.0) {
            return Err(Error::DegenerateMapping(format!(
                "{name} = {v}; the disturbance cost would not be a positive number"
            )));
        }
    }
    Ok(SwarmMapping {
        y_star: ReducedValue::new(-c1, -c2),
        gamma13: c1 / a1,
        gamma23: c2 / a2,
    })
}

/// One coefficient per arc of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcRates {
    pub b13: f64,
    pub b31: f64,
    pub b23: f64,
    pub b32: f64,
}

impl ArcRates {
    pub fn all(v: f64) -> Self {
        ArcRates {
            b13: v,
            b31: v,
            b23: v,
            b32: v,
        }
    }

    fn values(&self) -> [f64; 4] {
        [self.b13, self.b31, self.b23, self.b32]
    }
}

/// Network swarm model: `beta_prime` scales neighbour-mediated transitions,
/// `beta_doubleprime` spontaneous ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSwarmParams {
    pub beta_prime: ArcRates,
    pub beta_doubleprime: ArcRates,
    pub graph: Graph,
}

impl NetworkSwarmParams {
    /// Rates must be finite and >= 0. Strict positivity and strong
    /// connectivity are the hypotheses of the equilibrium/stability results
    /// and are checked by [`Self::check_hypotheses`].
    pub fn validate(&self) -> Result<()> {
        let v = self.beta_prime.values().into_iter().chain(self.beta_doubleprime.values());
        for x in v {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!("swarm rate {x} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn check_hypotheses(&self) -> Result<()> {
        self.validate()?;
        let v = self.beta_prime.values().into_iter().chain(self.beta_doubleprime.values());
        if v.into_iter().any(|x| x <= 0.0) {
            return Err(Error::HypothesisViolated("all β′, β″ must be > 0".into()));
        }
        if !self.graph.is_strongly_connected() {
            return Err(Error::HypothesisViolated("graph is not strongly connected".into()));
        }
        Ok(())
    }
}

/// Network swarm right-hand side written into `out`; per node
/// `(ṡ + ṙ) + ż == 0` exactly.
pub fn swarm_network_rhs_into(x: &NodeTriple, p: &NetworkSwarmParams, out: &mut NodeTriple) {
    let (bp, bd) = (&p.beta_prime, &p.beta_doubleprime);
    let a_s = p.graph.apply(&x.s);
    let a_r = p.graph.apply(&x.r);
    for i in 0..x.len() {
        let (s, z, r) = (x.s[i], x.z[i], x.r[i]);
        let ds = -bp.b23 * s * a_r[i] + bp.b32 * z * a_s[i] - bd.b23 * s + bd.b32 * z;
        let dr = -bp.b13 * r * a_s[i] + bp.b31 * z * a_r[i] - bd.b13 * r + bd.b31 * z;
        out.s[i] = ds;
        out.r[i] = dr;
        out.z[i] = -(ds + dr);
    }
}

pub fn swarm_network_rhs(x: &NodeTriple, p: &NetworkSwarmParams) -> NodeTriple {
    let mut out = NodeTriple::zeros(x.len());
    swarm_network_rhs_into(x, p, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwarmVerdict {
    AsymptoticallyStable,
    Saddle,
    Inconclusive,
}

/// Which equilibrium candidate an entry describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwarmPoint {
    /// `s = 1, r = 0`: everyone committed to option 2.
    ConsensusS,
    /// `s = 0, r = 1`: everyone committed to option 1.
    ConsensusR,
    /// `s = r = 1/(2 + k)` at every node.
    Symmetric { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmEquilibrium {
    pub point: SwarmPoint,
    pub state: NodeTriple,
    /// Sup-norm of the right-hand side at `state`.
    pub residual: f64,
    /// `residual < 1e-12`.
    pub is_equilibrium: bool,
    pub verdict: SwarmVerdict,
}

/// Residual below which a candidate counts as an equilibrium.
pub const SWARM_EQUILIBRIUM_TOL: f64 = 1e-12;

/// Per-node 2×2 Jacobian in `(s, r)` at the candidate, in the form used by
/// the stability argument (degree `d` standing in for `(A 1)_i`).
pub fn candidate_jacobian(point: SwarmPoint, p: &NetworkSwarmParams, d: f64) -> [[f64; 2]; 2] {
    let (bp, bd) = (&p.beta_prime, &p.beta_doubleprime);
    match point {
        SwarmPoint::ConsensusS => [
            [-bd.b23 - bd.b32, -bp.b23 * d - bp.b32 * d - bd.b32],
            [-bd.b31, -bp.b13 * d - bd.b13 - bd.b31],
        ],
        SwarmPoint::ConsensusR => [
            [-bp.b23 * d - bd.b23 - bd.b32, -bd.b32],
            [-bp.b13 * d - bp.b31 * d - bd.b31, -bd.b13 - bd.b31],
        ],
        SwarmPoint::Symmetric { .. } => {
            let top = -bp.b32 * d - bd.b32;
            let bottom = -bp.b31 * d - bd.b31;
            [[top, top], [bottom, bottom]]
        }
    }
}

fn verdict(point: SwarmPoint, p: &NetworkSwarmParams) -> SwarmVerdict {
    let degrees = p.graph.degrees();
    match point {
        SwarmPoint::ConsensusS | SwarmPoint::ConsensusR => {
            // diagonal entries dominating the off-diagonal ones in each row
            let dominant = degrees.iter().all(|&d| {
                let j = candidate_jacobian(point, p, d);
                j[0][0].abs() > j[0][1].abs() && j[1][1].abs() > j[1][0].abs()
            });
            if dominant {
                SwarmVerdict::AsymptoticallyStable
            } else {
                SwarmVerdict::Saddle
            }
        }
        SwarmPoint::Symmetric { .. } => {
            let negative = degrees.iter().all(|&d| {
                let j = candidate_jacobian(point, p, d);
                j[0][0] + j[1][1] < 0.0
            });
            if negative {
                SwarmVerdict::AsymptoticallyStable
            } else {
                SwarmVerdict::Inconclusive
            }
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Candidate equilibria with residuals and stability verdicts.
///
/// The two consensus points are always listed. They are exact equilibria only
/// when the spontaneous abandonment rates `β″23` (resp. `β″13`) vanish; the
/// residual and `is_equilibrium` report this. With `k`, the symmetric point
/// `s = r = 1/(2+k)` is added; it requires `β′23 = k β′32`, `β″23 = k β″32`
/// and, for the `r` equation, `β′13 = k β′31`, `β″13 = k β″31`.
pub fn swarm_equilibria(p: &NetworkSwarmParams, k: Option<f64>) -> Result<Vec<SwarmEquilibrium>> {
    p.validate()?;
    let n = p.graph.node_count();
    let mut points = vec![
        (SwarmPoint::ConsensusS, NodeTriple::uniform(n, 1.0, 0.0, 0.0)?),
        (SwarmPoint::ConsensusR, NodeTriple::uniform(n, 0.0, 0.0, 1.0)?),
    ];
    if let Some(k) = k {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("connectivity k = {k} must be >= 0")));
        }
        let (bp, bd) = (&p.beta_prime, &p.beta_doubleprime);
        let pairs = [
            ("β′23 = k β′32", bp.b23, bp.b32),
            ("β″23 = k β″32", bd.b23, bd.b32),
            ("β′13 = k β′31", bp.b13, bp.b31),
            ("β″13 = k β″31", bd.b13, bd.b31),
        ];
        for (name, lhs, base) in pairs {
            if !close(lhs, k * base) {
                return Err(Error::HypothesisViolated(format!(
                    "{name} fails: {lhs} vs {}",
                    k * base
                )));
            }
        }
        let c = 1.0 / (2.0 + k);
        points.push((SwarmPoint::Symmetric { k }, NodeTriple::uniform(n, c, 1.0 - 2.0 * c, c)?));
    }
    Ok(points
        .into_iter()
        .map(|(point, state)| {
            let residual = swarm_network_rhs(&state, p).sup_norm();
            SwarmEquilibrium {
                point,
                residual,
                is_equilibrium: residual < SWARM_EQUILIBRIUM_TOL,
                verdict: verdict(point, p),
                state,
            }
        })
        .collect())
}

/// Default network-model step.
pub const SWARM_DT: f64 = 1e-2;

pub fn simulate_swarm(state0: &NodeTriple, p: &NetworkSwarmParams, horizon: f64, dt: f64) -> Result<NetworkTrajectory> {
    p.validate()?;
    if state0.len() != p.graph.node_count() {
        return Err(Error::InvalidParameter(format!(
            "state has {} nodes, graph has {}",
            state0.len(),
            p.graph.node_count()
        )));
    }
    integrate_network(state0, horizon, dt, |_, x, out| swarm_network_rhs_into(x, p, out))
}

/// Independent runs from several initial conditions on up to `jobs` threads.
pub fn simulate_swarm_batch(
    starts: &[NodeTriple],
    p: &NetworkSwarmParams,
    horizon: f64,
    dt: f64,
    jobs: usize,
) -> Vec<Result<NetworkTrajectory>> {
    par_map(starts, jobs, |s| simulate_swarm(s, p, horizon, dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(graph: Graph) -> NetworkSwarmParams {
        NetworkSwarmParams {
            beta_prime: ArcRates {
                b13: 0.4,
                b31: 0.3,
                b23: 0.5,
                b32: 0.2,
            },
            beta_doubleprime: ArcRates {
                b13: 0.05,
                b31: 0.07,
                b23: 0.03,
                b32: 0.02,
            },
            graph,
        }
    }

    #[test]
    fn meanfield_examples() {
        let p = SwarmParams {
            gamma1: 0.3,
            gamma2: 0.2,
            r1: 1.0,
            r2: 1.0,
            sigma1: 0.5,
            sigma2: 0.5,
            alpha1: 0.1,
            alpha2: 0.1,
        };
        let d = honeybee_meanfield_rhs(&SimplexState::new(0., 0., 1.).unwrap(), &p);
        assert_eq!(d[0], 0.3);
        assert_eq!(d[1], 0.2);
        assert_eq!(d.iter().sum::<f64>(), 0.0);
        let sym = SwarmParams { gamma2: 0.3, ..p };
        let d = honeybee_meanfield_rhs(&SimplexState::new(0.2, 0.2, 0.6).unwrap(), &sym);
        assert_eq!(d[0], d[1]);
    }

    #[test]
    fn swarm_map_examples() {
        let p = SwarmParams {
            gamma1: 0.1,
            gamma2: 0.1,
            r1: 1.0,
            r2: 1.0,
            sigma1: 0.2,
            sigma2: 0.2,
            alpha1: 0.1,
            alpha2: 0.1,
        };
        let x = SimplexState::new(0.2, 0.3, 0.5).unwrap();
        let m = mfg_to_swarm_map(&p, &x).unwrap();
        assert!((m.y_star.y1 + 0.3).abs() < 1e-15);
        let bad = SwarmParams { alpha1: 0.0, sigma2: 0.0, ..p };
        assert!(matches!(mfg_to_swarm_map(&bad, &x), Err(Error::DegenerateMapping(_))));
    }

    #[test]
    fn boundary_derivatives() {
        let p = params(Graph::path(4));
        let d = swarm_network_rhs(&NodeTriple::uniform(4, 1.0, 0.0, 0.0).unwrap(), &p);
        assert!(d.s.iter().all(|&v| v == -0.03));
        let z = vec![0.1, 0.4, 0.2, 0.7];
        let r: Vec<f64> = z.iter().map(|v| 1.0 - v).collect();
        let x = NodeTriple::new(vec![0.0; 4], z.clone(), r).unwrap();
        let d = swarm_network_rhs(&x, &p);
        for i in 0..4 {
            assert_eq!(d.s[i], 0.02 * z[i]);
        }
    }

    #[test]
    fn mass_is_conserved_exactly() {
        let p = params(Graph::complete(3));
        let x = NodeTriple::new(vec![0.1, 0.5, 0.3], vec![0.6, 0.2, 0.3], vec![0.3, 0.3, 0.4]).unwrap();
        let d = swarm_network_rhs(&x, &p);
        for i in 0..3 {
            assert_eq!(d.s[i] + d.r[i] + d.z[i], 0.0);
        }
    }

    #[test]
    fn symmetric_equilibrium_needs_both_arc_pairs() {
        let mut p = params(Graph::path(3));
        p.beta_prime = ArcRates {
            b13: 0.4,
            b31: 0.2,
            b23: 0.4,
            b32: 0.2,
        };
        p.beta_doubleprime = ArcRates {
            b13: 0.06,
            b31: 0.03,
            b23: 0.06,
            b32: 0.03,
        };
        let eq = swarm_equilibria(&p, Some(2.0)).unwrap();
        let sym = &eq[2];
        assert!(sym.is_equilibrium, "residual {}", sym.residual);
        assert!((sym.state.s[0] - 0.25).abs() < 1e-15);
        p.beta_prime.b13 = 0.5;
        assert!(matches!(swarm_equilibria(&p, Some(2.0)), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn consensus_residual_equals_spontaneous_rate() {
        let p = params(Graph::path(3));
        let eq = swarm_equilibria(&p, None).unwrap();
        assert_eq!(eq[0].residual, 0.03);
        assert!(!eq[0].is_equilibrium);
        let mut q = p.clone();
        q.beta_doubleprime.b23 = 0.0;
        q.beta_doubleprime.b13 = 0.0;
        let eq = swarm_equilibria(&q, None).unwrap();
        assert_eq!(eq[0].residual, 0.0);
        assert_eq!(eq[1].residual, 0.0);
    }
}
