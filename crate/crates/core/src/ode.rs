//! Fixed-step classical Runge–Kutta.

use crate::error::Result;

/// Scratch space for RK4 steps on a state of fixed length.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    ///
    /// `f(t, y, dy)` writes the derivative into `dy`; it may reject a stage
    /// state (e.g. one that left the admissible set), which aborts the step.
    pub fn step<F>(&mut self, t: f64, h: f64, y: &mut [f64], mut f: F) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        debug_assert_eq!(n, self.k1.len());
        f(t, y, &mut self.k1)?;
        for i in 0..n {
            self.stage[i] = y[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.stage, &mut self.k2)?;
        for i in 0..n {
            self.stage[i] = y[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.stage, &mut self.k3)?;
        for i in 0..n {
            self.stage[i] = y[i] + h * self.k3[i];
        }
        f(t + h, &self.stage, &mut self.k4)?;
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Number of steps and the effective step so that `steps * h == horizon`.
pub fn step_count(horizon: f64, dt: f64) -> (usize, f64) {
    if horizon <= 0.0 {
        return (0, 0.0);
    }
    // tolerate T/dt landing a hair above an integer
    let n = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    (n, horizon / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |h: f64| {
            let (n, h) = step_count(1.0, h);
            let mut rk = Rk4::new(1);
            let mut y = [1.0];
            for k in 0..n {
                rk.step(k as f64 * h, h, &mut y, |_, y, dy| {
                    dy[0] = -y[0];
                    Ok(())
                })
                .unwrap();
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn step_count_divides_horizon() {
        assert_eq!(step_count(10.0, 1e-3).0, 10_000);
        assert_eq!(step_count(1.0, 0.3).0, 4);
        assert_eq!(step_count(0.0, 0.1).0, 0);
    }
}
