//! Best responses, Hamiltonian and the forward/backward right-hand sides.

use serde::{Deserialize, Serialize};

use crate::model::{CostWeights, RateMatrix, State, ValueVector};
use crate::simplex::SimplexState;

/// `Δ_i v = (v1 - v_i, v2 - v_i, v3 - v_i)`.
pub fn difference_operator(v: &ValueVector, i: State) -> [f64; 3] {
    let vi = v.get(i);
    v.0.map(|vj| vj - vi)
}

fn neg(a: f64) -> f64 {
    a.min(0.0)
}

fn pos(a: f64) -> f64 {
    a.max(0.0)
}

/// `ρ_i* = -R_i^{-1} [Δ_i v]^-`. The `i`-th entry is left at 0; its
/// bookkeeping value is minus the sum of the others.
pub fn optimal_control(v: &ValueVector, i: State, w: &CostWeights) -> [f64; 3] {
    let d = difference_operator(v, i);
    let mut rho = [0.0; 3];
    for j in State::ALL {
        if j != i {
            // `-neg(.)` is >= 0; `+ 0.0` folds a signed zero into +0
            rho[j.index()] = -neg(d[j.index()]) / w.r(i, j) + 0.0;
        }
    }
    rho
}

/// `w_i* = Γ_i^{-1} [Δ_i v]^+`.
pub fn worst_disturbance(v: &ValueVector, i: State, w: &CostWeights) -> [f64; 3] {
    let d = difference_operator(v, i);
    let mut out = [0.0; 3];
    for j in State::ALL {
        if j != i {
            out[j.index()] = pos(d[j.index()]) / w.gamma(i, j);
        }
    }
    out
}

/// Closed-form Hamiltonian
/// `-½ (Δv)^-ᵀ R_i^{-1} (Δv)^- + ½ (Δv)^+ᵀ Γ_i^{-1} (Δv)^+ + f_i(x_i)`.
pub fn hamiltonian(x: &SimplexState, v: &ValueVector, i: State, w: &CostWeights) -> f64 {
    let d = difference_operator(v, i);
    let mut h = w.congestion_cost(i, x.get(i.index()));
    for j in State::ALL {
        if j == i {
            continue;
        }
        let dj = d[j.index()];
        h += -0.5 * neg(dj).powi(2) / w.r(i, j) + 0.5 * pos(dj).powi(2) / w.gamma(i, j);
    }
    h
}

/// The inf-sup objective `½‖ρ‖²_R + f_i - ½‖w‖²_Γ + (ρ + w)ᵀ Δ_i v` at given
/// controls. At the best responses it equals [`hamiltonian`].
pub fn hamiltonian_objective(
    x: &SimplexState,
    v: &ValueVector,
    i: State,
    w: &CostWeights,
    rho: &[f64; 3],
    dist: &[f64; 3],
) -> f64 {
    let d = difference_operator(v, i);
    let mut h = w.congestion_cost(i, x.get(i.index()));
    for j in State::ALL {
        if j == i {
            continue;
        }
        let k = j.index();
        h += 0.5 * w.r(i, j) * rho[k] * rho[k] - 0.5 * w.gamma(i, j) * dist[k] * dist[k]
            + (rho[k] + dist[k]) * d[k];
    }
    h
}

/// Which form of the value dynamics was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `v1, v2 <= v3`: specialized dynamics with the 1↔2 arcs dropped.
    Specialized,
    /// Outside the regime; the general closed-form Hamiltonian was used.
    General,
}

pub fn in_regime(v: &ValueVector) -> bool {
    v.0[0] <= v.0[2] && v.0[1] <= v.0[2]
}

/// `v̇ = -H`. Inside the regime `v1, v2 <= v3` the specialized form (1↔2 arcs
/// dropped) is used; outside it the general form, flagged as [`Regime::General`].
pub fn hjb_rhs(x: &SimplexState, v: &ValueVector, w: &CostWeights) -> ([f64; 3], Regime) {
    if in_regime(v) {
        let [v1, v2, v3] = v.0;
        let a = State::CommittedA;
        let b = State::CommittedB;
        let u = State::Uncommitted;
        let h1 = 0.5 * (v3 - v1).powi(2) / w.gamma(a, u) + w.congestion_cost(a, x.x1());
        let h2 = 0.5 * (v3 - v2).powi(2) / w.gamma(b, u) + w.congestion_cost(b, x.x2());
        let h3 = -0.5 * ((v1 - v3).powi(2) / w.r(u, a) + (v2 - v3).powi(2) / w.r(u, b))
            + w.congestion_cost(u, x.x3());
        ([-h1, -h2, -h3], Regime::Specialized)
    } else {
        let h = State::ALL.map(|i| -hamiltonian(x, v, i, w));
        (h, Regime::General)
    }
}

/// Equilibrium rates `β* = ρ* + w*` on the four arcs; direct 1↔2 rates are 0.
pub fn rates_from_values(v: &ValueVector, w: &CostWeights) -> RateMatrix {
    let arc = |i: State, j: State| {
        optimal_control(v, i, w)[j.index()] + worst_disturbance(v, i, w)[j.index()]
    };
    use State::*;
    RateMatrix::from_arcs_unchecked(
        arc(CommittedA, Uncommitted),
        arc(Uncommitted, CommittedA),
        arc(CommittedB, Uncommitted),
        arc(Uncommitted, CommittedB),
    )
}

/// Forward (Kolmogorov) right-hand side; the components sum to exactly 0.
pub fn kolmogorov_rhs(x: &SimplexState, beta: &RateMatrix) -> [f64; 3] {
    kolmogorov_raw(x.x1(), x.x2(), beta)
}

/// Same as [`kolmogorov_rhs`] on raw reduced coordinates, `x3 = 1 - x1 - x2`.
pub(crate) fn kolmogorov_raw(x1: f64, x2: f64, beta: &RateMatrix) -> [f64; 3] {
    let x3 = 1.0 - x1 - x2;
    let d1 = x3 * beta.b31() - x1 * beta.b13();
    let d2 = x3 * beta.b32() - x2 * beta.b23();
    [d1, d2, -(d1 + d2)]
}

/// Terminal values `ψ_i = f_i(x_i(T))`.
pub fn terminal_values(x: &SimplexState, w: &CostWeights) -> ValueVector {
    ValueVector(State::ALL.map(|i| w.congestion_cost(i, x.get(i.index()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Congestion;

    fn identity_weights(q: [f64; 3]) -> CostWeights {
        CostWeights::uniform(1.0, 1.0, Congestion::linear(q)).unwrap()
    }

    #[test]
    fn difference_operator_examples() {
        assert_eq!(difference_operator(&ValueVector::new(1., 1., 1.), State::CommittedB), [0.; 3]);
        assert_eq!(
            difference_operator(&ValueVector::new(0., 2., 3.), State::Uncommitted),
            [-3., -1., 0.]
        );
        assert_eq!(
            difference_operator(&ValueVector::new(5., 5., 7.), State::CommittedA),
            [0., 0., 2.]
        );
    }

    #[test]
    fn optimal_control_examples() {
        let w = identity_weights([0.; 3]);
        assert_eq!(optimal_control(&ValueVector::new(4., 4., 4.), State::CommittedA, &w), [0.; 3]);
        assert_eq!(
            optimal_control(&ValueVector::new(0., 2., 3.), State::Uncommitted, &w),
            [3., 1., 0.]
        );
    }

    #[test]
    fn hamiltonian_examples() {
        let w = identity_weights([0.; 3]);
        let x = SimplexState::UNIFORM;
        assert_eq!(hamiltonian(&x, &ValueVector::new(2., 2., 2.), State::CommittedA, &w), 0.0);
        assert_eq!(hamiltonian(&x, &ValueVector::new(0., 0., 2.), State::Uncommitted, &w), -4.0);
    }

    #[test]
    fn hjb_examples() {
        let w = identity_weights([0.; 3]);
        let x = SimplexState::UNIFORM;
        let (d, regime) = hjb_rhs(&x, &ValueVector::new(0., 0., 1.), &w);
        assert_eq!(regime, Regime::Specialized);
        assert_eq!(d[0], -0.5);
        assert_eq!(d[1], -0.5);

        let w = identity_weights([1., 2., 3.]);
        let (d, _) = hjb_rhs(&x, &ValueVector::new(5., 5., 5.), &w);
        for i in 0..3 {
            assert!((d[i] + (i as f64 + 1.0) / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hjb_flags_regime_violation() {
        let w = identity_weights([0.; 3]);
        let (_, regime) = hjb_rhs(&SimplexState::UNIFORM, &ValueVector::new(2., 0., 1.), &w);
        assert_eq!(regime, Regime::General);
    }

    #[test]
    fn kolmogorov_examples() {
        let b = RateMatrix::from_arcs(0., 2., 0., 1.).unwrap();
        let x = SimplexState::new(0., 0., 1.).unwrap();
        assert_eq!(kolmogorov_rhs(&x, &b), [2., 1., -3.]);
        let b = RateMatrix::from_arcs(0.7, 0.7, 0.7, 0.7).unwrap();
        let d = kolmogorov_rhs(&SimplexState::UNIFORM, &b);
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn rates_in_regime() {
        let mut w = identity_weights([0.; 3]);
        w.set_gamma(State::CommittedA, State::Uncommitted, 2.0);
        w.set_r(State::Uncommitted, State::CommittedB, 4.0);
        let b = rates_from_values(&ValueVector::new(-1., -2., 0.), &w);
        assert_eq!(b.b13(), 0.5);
        assert_eq!(b.b31(), 1.0);
        assert_eq!(b.b23(), 2.0);
        assert_eq!(b.b32(), 0.5);
    }
}
