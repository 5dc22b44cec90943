//! Points of the probability simplex over the three states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance accepted on the component sum at construction.
pub const CONSTRUCTION_TOL: f64 = 1e-9;
/// Most negative component accepted (and clamped) at construction.
pub const NEGATIVE_TOL: f64 = 1e-12;

/// Population distribution `(x1, x2, x3)` across committed-to-A, committed-to-B
/// and uncommitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SimplexState([f64; 3]);

impl SimplexState {
    pub const UNIFORM: SimplexState = SimplexState([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);

    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        make_simplex(x1, x2, x3)
    }

    pub fn from_array(x: [f64; 3]) -> Result<Self> {
        make_simplex(x[0], x[1], x[2])
    }

    /// Builds a state from the reduced coordinates `(x1, x2)` with `x3 = 1 - x1 - x2`.
    ///
    /// Components below zero by at most `slack` are clamped; anything worse is
    /// reported back as the excess so integrators can raise `StepTooLarge`.
    pub(crate) fn from_reduced(x1: f64, x2: f64, slack: f64) -> std::result::Result<Self, f64> {
        let x3 = 1.0 - x1 - x2;
        let worst = [x1, x2, x3]
            .iter()
            .map(|&c| (-c).max(c - 1.0))
            .fold(f64::NEG_INFINITY, f64::max);
        if !worst.is_finite() || worst > slack {
            return Err(if worst.is_finite() { worst } else { f64::INFINITY });
        }
        Ok(Self::normalized([x1, x2, x3]))
    }

    fn normalized(x: [f64; 3]) -> Self {
        let c = x.map(|v| v.clamp(0.0, 1.0));
        let sum = c[0] + c[1] + c[2];
        if sum == 1.0 {
            return SimplexState(c);
        }
        let a = c[0] / sum;
        let b = c[1] / sum;
        // keep the sum at 1 up to a single rounding
        let rest = (1.0 - a - b).max(0.0);
        SimplexState([a, b, rest])
    }

    pub fn x1(&self) -> f64 {
        self.0[0]
    }

    pub fn x2(&self) -> f64 {
        self.0[1]
    }

    pub fn x3(&self) -> f64 {
        self.0[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    /// Mass in state `i` (0-based).
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn sup_distance(&self, other: &SimplexState) -> f64 {
        (0..3)
            .map(|k| (self.0[k] - other.0[k]).abs())
            .fold(0.0, f64::max)
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &SimplexState, lambda: f64) -> SimplexState {
        let x = [0, 1, 2].map(|k| lambda * self.0[k] + (1.0 - lambda) * other.0[k]);
        Self::normalized(x)
    }
}

impl TryFrom<[f64; 3]> for SimplexState {
    type Error = Error;

    fn try_from(x: [f64; 3]) -> Result<Self> {
        Self::from_array(x)
    }
}

impl From<SimplexState> for [f64; 3] {
    fn from(s: SimplexState) -> Self {
        s.0
    }
}

/// Validates and normalizes a probability triple.
pub fn make_simplex(x1: f64, x2: f64, x3: f64) -> Result<SimplexState> {
    let sum = x1 + x2 + x3;
    let bad = || Error::NotASimplex { x1, x2, x3, sum };
    if ![x1, x2, x3].iter().all(|c| c.is_finite()) {
        return Err(bad());
    }
    if x1 < -NEGATIVE_TOL || x2 < -NEGATIVE_TOL || x3 < -NEGATIVE_TOL {
        return Err(bad());
    }
    if (sum - 1.0).abs() > CONSTRUCTION_TOL {
        return Err(bad());
    }
    Ok(SimplexState::normalized([x1, x2, x3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_valid() {
        let s = make_simplex(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        assert!((s.x1() + s.x2() + s.x3() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_is_valid() {
        let s = make_simplex(0.0, 1.0, 0.0).unwrap();
        assert_eq!(s.as_array(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_sum() {
        assert!(matches!(
            make_simplex(0.5, 0.6, 0.2),
            Err(Error::NotASimplex { .. })
        ));
    }

    #[test]
    fn rejects_negative() {
        assert!(make_simplex(-1e-6, 0.5, 0.5 + 1e-6).is_err());
        // tiny negatives are clamped
        let s = make_simplex(-1e-13, 0.5, 0.5).unwrap();
        assert_eq!(s.x1(), 0.0);
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let s = make_simplex(0.2, 0.3, 0.5 + 5e-10).unwrap();
        assert!((s.x1() + s.x2() + s.x3() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn serde_rejects_invalid() {
        assert!(serde_json::from_str::<SimplexState>("[0.5, 0.6, 0.2]").is_err());
        let s: SimplexState = serde_json::from_str("[0.2, 0.3, 0.5]").unwrap();
        assert_eq!(s.x2(), 0.3);
    }
}
