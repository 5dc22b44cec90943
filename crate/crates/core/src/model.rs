//! Shared model types: states of the chain, transition rates, cost weights and
//! value vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cost assigned to the direct 1↔2 arcs so that they are never worth taking.
pub const LARGE_COST: f64 = 1e6;

/// One of the three states of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    /// State 1, committed to option A.
    CommittedA,
    /// State 2, committed to option B.
    CommittedB,
    /// State 3, uncommitted.
    Uncommitted,
}

impl State {
    pub const ALL: [State; 3] = [State::CommittedA, State::CommittedB, State::Uncommitted];

    /// 0-based index.
    pub fn index(self) -> usize {
        match self {
            State::CommittedA => 0,
            State::CommittedB => 1,
            State::Uncommitted => 2,
        }
    }

    /// 1-based label as used in reports.
    pub fn label(self) -> usize {
        self.index() + 1
    }

    pub fn from_index(i: usize) -> Option<State> {
        State::ALL.get(i).copied()
    }

    pub fn from_label(label: usize) -> Option<State> {
        label.checked_sub(1).and_then(State::from_index)
    }
}

/// Transition rates `beta[i][j]` from state `i` to state `j`.
///
/// Only the arcs 1↔3 and 2↔3 exist; `beta[0][1]` and `beta[1][0]` are always 0.
/// The diagonal is unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    beta: [[f64; 3]; 3],
}

impl RateMatrix {
    pub const ZERO: RateMatrix = RateMatrix {
        beta: [[0.0; 3]; 3],
    };

    /// Rates on the four arcs of the chain.
    pub fn from_arcs(b13: f64, b31: f64, b23: f64, b32: f64) -> Result<Self> {
        for (name, v) in [("b13", b13), ("b31", b31), ("b23", b23), ("b32", b32)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "transition rate {name} = {v} must be finite and nonnegative"
                )));
            }
        }
        Ok(Self::from_arcs_unchecked(b13, b31, b23, b32))
    }

    pub(crate) fn from_arcs_unchecked(b13: f64, b31: f64, b23: f64, b32: f64) -> Self {
        let mut beta = [[0.0; 3]; 3];
        beta[0][2] = b13;
        beta[2][0] = b31;
        beta[1][2] = b23;
        beta[2][1] = b32;
        RateMatrix { beta }
    }

    /// Builds a matrix from full rows; the 1↔2 entries and the diagonal are dropped.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_arcs(rows[0][2], rows[2][0], rows[1][2], rows[2][1])
    }

    pub fn get(&self, from: State, to: State) -> f64 {
        self.beta[from.index()][to.index()]
    }

    pub fn b13(&self) -> f64 {
        self.beta[0][2]
    }
    pub fn b31(&self) -> f64 {
        self.beta[2][0]
    }
    pub fn b23(&self) -> f64 {
        self.beta[1][2]
    }
    pub fn b32(&self) -> f64 {
        self.beta[2][1]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.beta
    }

    /// Total exit rate from `state`.
    pub fn exit_rate(&self, state: State) -> f64 {
        let i = state.index();
        (0..3).filter(|&j| j != i).map(|j| self.beta[i][j]).sum()
    }

    /// Generator matrix: off-diagonal rates with `q_ii = -sum_{j != i} q_ij`.
    pub fn generator(&self) -> [[f64; 3]; 3] {
        let mut q = self.beta;
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = 0.0;
            row[i] = -row.iter().sum::<f64>();
        }
        q
    }
}

/// Linear congestion terms `f_i(x) = q_i * x`.
///
/// `q_i > 0` is crowd-averse (a crowded state costs more), `q_i < 0` crowd-seeking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Congestion {
    pub q: [f64; 3],
}

impl Congestion {
    pub const NONE: Congestion = Congestion { q: [0.0; 3] };

    pub fn linear(q: [f64; 3]) -> Self {
        Congestion { q }
    }

    pub fn eval(&self, state: State, mass: f64) -> f64 {
        self.q[state.index()] * mass
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&q| q == 0.0)
    }
}

impl Default for Congestion {
    /// Crowd-averse, with the uncommitted state twice as congestion-sensitive.
    fn default() -> Self {
        Congestion { q: [1.0, 1.0, 2.0] }
    }
}

/// Diagonal control-cost matrices `R_i`, disturbance-cost matrices `Gamma_i`
/// and congestion terms.
///
/// `control[i][j]` is the `j`-th diagonal entry of `R_i`; likewise for
/// `disturbance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub control: [[f64; 3]; 3],
    pub disturbance: [[f64; 3]; 3],
    #[serde(default)]
    pub congestion: Congestion,
}

impl CostWeights {
    pub fn new(
        control: [[f64; 3]; 3],
        disturbance: [[f64; 3]; 3],
        congestion: Congestion,
    ) -> Result<Self> {
        let w = CostWeights {
            control,
            disturbance,
            congestion,
        };
        w.validate()?;
        Ok(w)
    }

    /// Same cost `r` on every control arc and `gamma` on every disturbance arc;
    /// the 1↔2 arcs get [`LARGE_COST`].
    pub fn uniform(r: f64, gamma: f64, congestion: Congestion) -> Result<Self> {
        let mut control = [[r; 3]; 3];
        let mut disturbance = [[gamma; 3]; 3];
        for m in [&mut control, &mut disturbance] {
            m[0][1] = LARGE_COST;
            m[1][0] = LARGE_COST;
        }
        Self::new(control, disturbance, congestion)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("R", &self.control), ("Gamma", &self.disturbance)] {
            for (i, row) in m.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "{name}_{}{} = {v} must be strictly positive",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        if !self.congestion.q.iter().all(|q| q.is_finite()) {
            return Err(Error::InvalidParameter(
                "congestion coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    /// `R_{from,to}`.
    pub fn r(&self, from: State, to: State) -> f64 {
        self.control[from.index()][to.index()]
    }

    /// `Gamma_{from,to}`.
    pub fn gamma(&self, from: State, to: State) -> f64 {
        self.disturbance[from.index()][to.index()]
    }

    pub fn set_r(&mut self, from: State, to: State, value: f64) {
        self.control[from.index()][to.index()] = value;
    }

    pub fn set_gamma(&mut self, from: State, to: State, value: f64) {
        self.disturbance[from.index()][to.index()] = value;
    }

    /// `f_i(x_i)`.
    pub fn congestion_cost(&self, state: State, mass: f64) -> f64 {
        self.congestion.eval(state, mass)
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights::uniform(1.0, 1.0, Congestion::default()).expect("default weights are valid")
    }
}

/// Value function `(v1, v2, v3)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct ValueVector(pub [f64; 3]);

impl ValueVector {
    pub fn new(v1: f64, v2: f64, v3: f64) -> Self {
        ValueVector([v1, v2, v3])
    }

    pub fn get(&self, state: State) -> f64 {
        self.0[state.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `y = (v1 - v3, v2 - v3)`.
    pub fn reduced(&self) -> [f64; 2] {
        [self.0[0] - self.0[2], self.0[1] - self.0[2]]
    }
}

impl From<[f64; 3]> for ValueVector {
    fn from(v: [f64; 3]) -> Self {
        ValueVector(v)
    }
}

impl From<ValueVector> for [f64; 3] {
    fn from(v: ValueVector) -> Self {
        v.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_matrix_drops_direct_arcs() {
        let m = RateMatrix::from_rows([[0.0, 5.0, 1.0], [7.0, 0.0, 2.0], [3.0, 4.0, 0.0]]).unwrap();
        assert_eq!(m.get(State::CommittedA, State::CommittedB), 0.0);
        assert_eq!(m.get(State::CommittedB, State::CommittedA), 0.0);
        assert_eq!(m.b13(), 1.0);
        assert_eq!(m.b32(), 4.0);
        let q = m.generator();
        for row in q {
            assert_eq!(row.iter().sum::<f64>(), 0.0);
        }
        assert_eq!(q[2][2], -7.0);
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(RateMatrix::from_arcs(-1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn weights_reject_nonpositive() {
        let mut w = CostWeights::default();
        w.set_r(State::Uncommitted, State::CommittedA, 0.0);
        assert!(w.validate().is_err());
    }

    #[test]
    fn default_weights_discourage_direct_arcs() {
        let w = CostWeights::default();
        assert!(w.r(State::CommittedA, State::CommittedB) >= 1e6);
        assert!(w.gamma(State::CommittedB, State::CommittedA) >= 1e6);
    }

    #[test]
    fn state_labels_round_trip() {
        for s in State::ALL {
            assert_eq!(State::from_label(s.label()), Some(s));
        }
        assert_eq!(State::from_label(0), None);
        assert_eq!(State::from_label(4), None);
    }
}
