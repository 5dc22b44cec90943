//! Reduced value dynamics `y = (v1 - v3, v2 - v3)`, stationary equilibria,
//! their classification, and the long-horizon convergence study.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::csv_row;
use crate::mfg::{hamiltonian, rates_from_values, solve_itvp, ItvpConfig, Terminal};
use crate::model::{CostWeights, State, ValueVector};
use crate::ode::step_count;
use crate::parallel::par_map;
use crate::simplex::SimplexState;

/// Residual below which a point counts as a stationary point of the reduced system.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedValue {
    pub y1: f64,
    pub y2: f64,
}

impl ReducedValue {
    pub fn new(y1: f64, y2: f64) -> Self {
        ReducedValue { y1, y2 }
    }

    /// Value vector normalized to `v3 = 0`.
    pub fn to_values(self) -> ValueVector {
        ValueVector::new(self.y1, self.y2, 0.0)
    }
}

impl From<[f64; 2]> for ReducedValue {
    fn from(y: [f64; 2]) -> Self {
        ReducedValue { y1: y[0], y2: y[1] }
    }
}

/// `ẏ1 = -½ a11 y1² - ½ a12 y2² + c1`, `ẏ2 = -½ a21 y1² - ½ a22 y2² + c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCoefficients {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ReducedCoefficients {
    pub fn new(a: [f64; 4], c: [f64; 2]) -> Result<Self> {
        let k = ReducedCoefficients {
            a11: a[0],
            a12: a[1],
            a21: a[2],
            a22: a[3],
            c1: c[0],
            c2: c[1],
        };
        k.validate()?;
        Ok(k)
    }

    /// Coefficients induced by the cost weights at a fixed distribution.
    pub fn from_weights(w: &CostWeights, x: &SimplexState) -> Self {
        use State::*;
        let f = |s: State| w.congestion_cost(s, x.get(s.index()));
        ReducedCoefficients {
            a11: 1.0 / w.gamma(CommittedA, Uncommitted) + 1.0 / w.r(Uncommitted, CommittedA),
            a12: 1.0 / w.r(Uncommitted, CommittedB),
            a21: 1.0 / w.r(Uncommitted, CommittedA),
            a22: 1.0 / w.gamma(CommittedB, Uncommitted) + 1.0 / w.r(Uncommitted, CommittedB),
            c1: f(Uncommitted) - f(CommittedA),
            c2: f(Uncommitted) - f(CommittedB),
        }
    }

    /// Requires `a11 > a21 >= 0` and `a22 > a12 >= 0`, all finite.
    pub fn validate(&self) -> Result<()> {
        let all = [self.a11, self.a12, self.a21, self.a22, self.c1, self.c2];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("reduced coefficients must be finite".into()));
        }
        if !(self.a21 >= 0.0 && self.a11 > self.a21 && self.a12 >= 0.0 && self.a22 > self.a12) {
            return Err(Error::InvalidParameter(format!(
                "need a11 > a21 >= 0 and a22 > a12 >= 0, got a = ({}, {}, {}, {})",
                self.a11, self.a12, self.a21, self.a22
            )));
        }
        Ok(())
    }

    pub fn determinant(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }
}

pub fn reduced_rhs(y: &ReducedValue, k: &ReducedCoefficients) -> [f64; 2] {
    let (u, w) = (y.y1 * y.y1, y.y2 * y.y2);
    [
        -0.5 * k.a11 * u - 0.5 * k.a12 * w + k.c1,
        -0.5 * k.a21 * u - 0.5 * k.a22 * w + k.c2,
    ]
}

fn sup2(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Squared coordinates `(u, w) = (y1², y2²)` of the four stationary points,
/// from the linear system `½ a11 u + ½ a12 w = c1`, `½ a21 u + ½ a22 w = c2`.
pub fn squared_roots(k: &ReducedCoefficients) -> Result<(f64, f64)> {
    let det = k.determinant();
    let scale = (k.a11 * k.a22).abs().max((k.a12 * k.a21).abs()).max(f64::MIN_POSITIVE);
    if det.abs() <= 1e-12 * scale {
        return Err(Error::Degenerate { determinant: det });
    }
    // Cramer's rule on the halved system
    let u = 2.0 * (k.c1 * k.a22 - k.a12 * k.c2) / det;
    let w = 2.0 * (k.a11 * k.c2 - k.a21 * k.c1) / det;
    if u < 0.0 || w < 0.0 {
        return Err(Error::NoRealEquilibrium { u, w });
    }
    Ok((u, w))
}

/// The third-quadrant stationary point `(-√u, -√w)`.
pub fn stationary_y(k: &ReducedCoefficients) -> Result<ReducedValue> {
    k.validate()?;
    let (u, w) = squared_roots(k)?;
    Ok(ReducedValue::new(-u.sqrt(), -w.sqrt()))
}

/// All four sign combinations `(±√u, ±√w)`.
pub fn all_stationary_points(k: &ReducedCoefficients) -> Result<[ReducedValue; 4]> {
    k.validate()?;
    let (u, w) = squared_roots(k)?;
    let (a, b) = (u.sqrt(), w.sqrt());
    Ok([
        ReducedValue::new(-a, -b),
        ReducedValue::new(a, b),
        ReducedValue::new(-a, b),
        ReducedValue::new(a, -b),
    ])
}

/// The ellipse-intersection relation between the two coordinates of a
/// stationary point: `y1² = (a22 - a12)/(a11 - a21) · y2² + 2 (c1 - c2)/(a11 - a21)`,
/// i.e. `y1² = Γ13 Γ23⁻¹ y2² + 2 Γ13 (f2 - f1)`. Returns `|y1² - rhs|`.
pub fn ellipse_relation_gap(y: &ReducedValue, k: &ReducedCoefficients) -> f64 {
    let g13 = k.a11 - k.a21;
    let rhs = (k.a22 - k.a12) / g13 * y.y2 * y.y2 + 2.0 * (k.c1 - k.c2) / g13;
    (y.y1 * y.y1 - rhs).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    StableNode,
    UnstableNode,
    Saddle,
    CenterOrDegenerate,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::StableNode => "stable node",
            Stability::UnstableNode => "unstable node",
            Stability::Saddle => "saddle",
            Stability::CenterOrDegenerate => "center/degenerate",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// `J = [[a11 y1, a12 y2], [a21 y1, a22 y2]]`: the linearization of the value
/// dynamics in reverse time (`s = T - t`), the direction in which they are
/// integrated from the terminal condition.
pub fn reduced_jacobian(y: &ReducedValue, k: &ReducedCoefficients) -> [[f64; 2]; 2] {
    [[k.a11 * y.y1, k.a12 * y.y2], [k.a21 * y.y1, k.a22 * y.y2]]
}

/// Trace/determinant classification of a stationary point under
/// [`reduced_jacobian`].
pub fn classify_equilibrium(y: &ReducedValue, k: &ReducedCoefficients) -> Result<Stability> {
    let residual = sup2(reduced_rhs(y, k));
    if !(residual < EQUILIBRIUM_TOL) {
        return Err(Error::NotAnEquilibrium { residual });
    }
    let j = reduced_jacobian(y, k);
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // written as a sum of squares plus a cross term to avoid cancellation
    let disc = (j[0][0] - j[1][1]).powi(2) + 4.0 * j[0][1] * j[1][0];
    Ok(if det < 0.0 {
        Stability::Saddle
    } else if det > 0.0 && disc > 0.0 && tr < 0.0 {
        Stability::StableNode
    } else if det > 0.0 && disc > 0.0 && tr > 0.0 {
        Stability::UnstableNode
    } else {
        Stability::CenterOrDegenerate
    })
}

/// Sup-norm residual of the reduced forward equation at `(x1, x2)`.
fn kolmogorov_residual(x1: f64, x2: f64, b: &crate::model::RateMatrix) -> [f64; 2] {
    let x3 = 1.0 - x1 - x2;
    [x3 * b.b31() - x1 * b.b13(), x3 * b.b32() - x2 * b.b23()]
}

const DISTRIBUTION_TOL: f64 = 1e-10;

/// Stationary distribution of the chain driven by the best responses to
/// `v = (y1, y2, 0)`: damped Newton in the `(x1, x2)` triangle, falling back
/// to a nested bisection sweep.
pub fn stationary_distribution(w: &CostWeights, y: &ReducedValue) -> Result<SimplexState> {
    let b = rates_from_values(&y.to_values(), w);
    if let Some(x) = newton_distribution(&b) {
        return Ok(x);
    }
    sweep_distribution(&b)
}

fn newton_distribution(b: &crate::model::RateMatrix) -> Option<SimplexState> {
    let j = [
        [-b.b31() - b.b13(), -b.b31()],
        [-b.b32(), -b.b32() - b.b23()],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det.abs() > 1e-300) {
        return None;
    }
    let mut x = [1.0 / 3.0, 1.0 / 3.0];
    for _ in 0..50 {
        let r = kolmogorov_residual(x[0], x[1], b);
        if sup2(r) < DISTRIBUTION_TOL {
            return SimplexState::new(x[0], x[1], 1.0 - x[0] - x[1]).ok();
        }
        let dx = [
            (r[0] * j[1][1] - r[1] * j[0][1]) / det,
            (j[0][0] * r[1] - j[1][0] * r[0]) / det,
        ];
        let mut lambda = 1.0;
        loop {
            let c = [x[0] - lambda * dx[0], x[1] - lambda * dx[1]];
            let inside = c[0] >= 0.0 && c[1] >= 0.0 && c[0] + c[1] <= 1.0;
            if inside && sup2(kolmogorov_residual(c[0], c[1], b)) < sup2(r) {
                x = c;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return None;
            }
        }
    }
    None
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) && fm != 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sweep_distribution(b: &crate::model::RateMatrix) -> Result<SimplexState> {
    if State::ALL.iter().all(|&s| b.exit_rate(s) == 0.0) {
        return Err(Error::NoRoot("all rates vanish; every distribution is stationary".into()));
    }
    // inner: root of ẋ2 in x2 on [0, 1 - x1]; outer: sign change of ẋ1 along it
    let inner = |x1: f64| -> Option<f64> {
        let hi = 1.0 - x1;
        let f = |x2: f64| kolmogorov_residual(x1, x2, b)[1];
        let (f0, f1) = (f(0.0), f(hi));
        if f0 == 0.0 {
            return Some(0.0);
        }
        if f1 == 0.0 {
            return Some(hi);
        }
        ((f0 < 0.0) != (f1 < 0.0)).then(|| bisect(0.0, hi, f))
    };
    let outer = |x1: f64| inner(x1).map(|x2| kolmogorov_residual(x1, x2, b)[0]);
    const N: usize = 1000;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=N {
        let x1 = i as f64 / N as f64;
        let Some(g) = outer(x1) else {
            prev = None;
            continue;
        };
        let hit = if g == 0.0 {
            Some(x1)
        } else if let Some((p, gp)) = prev {
            ((gp < 0.0) != (g < 0.0)).then(|| bisect(p, x1, |s| outer(s).unwrap_or(f64::NAN)))
        } else {
            None
        };
        if let Some(x1) = hit {
            let x2 = inner(x1).ok_or_else(|| Error::NoRoot("inner bisection lost its bracket".into()))?;
            let r = sup2(kolmogorov_residual(x1, x2, b));
            if r < DISTRIBUTION_TOL {
                return SimplexState::new(x1, x2, 1.0 - x1 - x2);
            }
            return Err(Error::NoRoot(format!("sweep converged to residual {r:e}")));
        }
        prev = Some((x1, g));
    }
    Err(Error::NoRoot("no sign change of the forward dynamics in the simplex".into()))
}

/// `inf_λ ‖v - v_ref + λ 1‖₂`: the Euclidean norm after removing the mean.
pub fn seminorm_sharp(v: &ValueVector, v_ref: &ValueVector) -> f64 {
    let d = [0, 1, 2].map(|i| v.0[i] - v_ref.0[i]);
    let mean = (d[0] + d[1] + d[2]) / 3.0;
    d.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt()
}

/// A stationary mean-field equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarySolution {
    pub x_hat: SimplexState,
    pub y_star: ReducedValue,
    /// Values normalized to `v3 = 0`.
    pub v_bar: ValueVector,
    /// Common value of the three Hamiltonians at `(x̂, v̄)`.
    pub kappa: f64,
    pub stability: Stability,
    pub coefficients: ReducedCoefficients,
    /// Sup-norm residual of the reduced value dynamics at `y_star`.
    pub residual: f64,
}

/// Stationary equilibrium for the given weights.
///
/// In the regime `v1, v2 < v3` the stationary distribution depends on `y`
/// only through the ratios `x1/x3 = Γ13/R31`, `x2/x3 = Γ23/R32`, so it is
/// found first and `y*` then solves the reduced system at that distribution.
pub fn stationary_equilibrium(w: &CostWeights) -> Result<StationarySolution> {
    w.validate()?;
    let probe = stationary_distribution(w, &ReducedValue::new(-1.0, -1.0))?;
    let k = ReducedCoefficients::from_weights(w, &probe);
    let y = stationary_y(&k)?;
    if !(y.y1 < 0.0 && y.y2 < 0.0) {
        return Err(Error::NoRealEquilibrium {
            u: y.y1 * y.y1,
            w: y.y2 * y.y2,
        });
    }
    let x_hat = stationary_distribution(w, &y)?;
    let k = ReducedCoefficients::from_weights(w, &x_hat);
    let y = stationary_y(&k)?;
    let stability = classify_equilibrium(&y, &k)?;
    let v_bar = y.to_values();
    Ok(StationarySolution {
        x_hat,
        y_star: y,
        v_bar,
        kappa: hamiltonian(&x_hat, &v_bar, State::Uncommitted, w),
        stability,
        coefficients: k,
        residual: sup2(reduced_rhs(&y, &k)),
    })
}

/// Midpoint deviations for one horizon of the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub horizon: f64,
    /// `max_i |x_i^T(0) - x̄_i|`.
    pub dx_sup: f64,
    /// `‖v^T(0) - v̄‖_#`.
    pub dv_sharp: f64,
    pub iterations: usize,
}

/// For each `T`, solves the game on a window of length `2T` started from
/// `x0` and samples the midpoint (time 0 of the symmetric window `[-T, T]`).
///
/// `base` supplies step, tolerance, relaxation, iteration cap and terminal
/// condition; its horizon is ignored. Horizons run on up to `jobs` threads.
pub fn convergence_study(
    x0: SimplexState,
    w: &CostWeights,
    horizons: &[f64],
    base: &ItvpConfig,
    jobs: usize,
) -> Result<Vec<ConvergenceRecord>> {
    if horizons.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidParameter("horizons must be strictly increasing".into()));
    }
    if horizons.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("horizons must be finite and >= 0".into()));
    }
    let stationary = stationary_equilibrium(w)?;
    let one = |t_half: f64| -> Result<ConvergenceRecord> {
        let (half_steps, h) = step_count(t_half, base.dt);
        let cfg = ItvpConfig {
            horizon: 2.0 * half_steps as f64 * h,
            dt: if half_steps == 0 { base.dt } else { h },
            ..*base
        };
        let sol = solve_itvp(x0, w, &cfg)?;
        let mid = sol.trajectory.len() / 2;
        Ok(ConvergenceRecord {
            horizon: t_half,
            dx_sup: sol.trajectory.states[mid].sup_distance(&stationary.x_hat),
            dv_sharp: seminorm_sharp(&sol.values()[mid], &stationary.v_bar),
            iterations: sol.iterations,
        })
    };
    par_map(horizons, jobs, |&t| one(t)).into_iter().collect()
}

/// Terminal condition pinned at the stationary values, for runs started at
/// the stationary distribution.
pub fn stationary_terminal(s: &StationarySolution) -> Terminal {
    Terminal::Fixed(s.v_bar)
}

/// CSV `T,dx_sup,dv_sharp`.
pub fn study_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from("T,dx_sup,dv_sharp\n");
    for r in records {
        out.push_str(&csv_row([r.horizon, r.dx_sup, r.dv_sharp]));
        out.push('\n');
    }
    out
}

pub fn write_study_csv(records: &[ConvergenceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, study_csv(records)).map_err(|e| Error::io(path, e))
}
