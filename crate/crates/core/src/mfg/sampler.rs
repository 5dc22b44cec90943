//! Exact simulation of a single agent's time-inhomogeneous chain by thinning.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CostWeights, State};
use crate::simplex::SimplexState;

use super::trajectory::{RateSchedule, Trajectory, ValueDrivenRates};

/// Jump times and visited states; `states[k + 1]` is entered at `jump_times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentPath {
    pub jump_times: Vec<f64>,
    pub states: Vec<State>,
}

impl AgentPath {
    pub fn state_at(&self, t: f64) -> State {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.states[k]
    }

    pub fn first_jump(&self) -> Option<f64> {
        self.jump_times.first().copied()
    }
}

/// Generator for agent `index` under a run seed: the seed fixes the key and
/// the agent index selects the stream, so agents are independent of how
/// work is split across threads.
pub fn agent_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples a path on `[t0, t1]` from `i0` by thinning against the schedule's
/// exit-rate bounds.
pub fn sample_path<R: Rng + ?Sized>(
    rates: &dyn RateSchedule,
    t0: f64,
    t1: f64,
    i0: State,
    rng: &mut R,
) -> Result<AgentPath> {
    let bounds = State::ALL.map(|s| rates.exit_bound(s));
    if bounds.iter().any(|b| b.is_none()) {
        return Err(Error::InvalidParameter(
            "rate schedule has no exit-rate bound for thinning".into(),
        ));
    }
    let bounds = bounds.map(|b| b.unwrap_or(0.0));
    let mut path = AgentPath {
        jump_times: Vec::new(),
        states: vec![i0],
    };
    let mut state = i0;
    let mut t = t0;
    loop {
        let bound = bounds[state.index()];
        if bound <= 0.0 {
            break;
        }
        let u: f64 = rng.gen();
        t -= (1.0 - u).ln() / bound;
        if t > t1 {
            break;
        }
        let beta = rates.rates(t);
        let out: [f64; 3] = State::ALL.map(|j| if j == state { 0.0 } else { beta.get(state, j) });
        let total: f64 = out.iter().sum();
        let accept: f64 = rng.gen::<f64>() * bound;
        if accept >= total {
            continue;
        }
        // `accept` is uniform on [0, total) given acceptance: reuse it to pick
        // the destination
        let mut acc = 0.0;
        let mut next = state;
        for j in State::ALL {
            acc += out[j.index()];
            if out[j.index()] > 0.0 && accept < acc {
                next = j;
                break;
            }
        }
        state = next;
        path.jump_times.push(t);
        path.states.push(state);
    }
    Ok(path)
}

/// One agent following the best-response rates along `traj`'s value path.
pub fn sample_agent_path(traj: &Trajectory, w: &CostWeights, i0: State, seed: u64) -> Result<AgentPath> {
    let rates = ValueDrivenRates::from_trajectory(traj, *w)?;
    sample_path(&rates, traj.start(), traj.end(), i0, &mut agent_rng(seed, 0))
}

fn draw_state<R: Rng + ?Sized>(x0: &SimplexState, rng: &mut R) -> State {
    let u: f64 = rng.gen();
    if u < x0.x1() {
        State::CommittedA
    } else if u < x0.x1() + x0.x2() {
        State::CommittedB
    } else {
        State::Uncommitted
    }
}

/// `n` agents with initial states drawn from `x0`, agent `k` on stream `k`.
/// Work is split over `jobs` threads; the output does not depend on `jobs`.
pub fn sample_population(
    rates: &dyn RateSchedule,
    t0: f64,
    t1: f64,
    x0: &SimplexState,
    n: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<AgentPath>> {
    let jobs = jobs.clamp(1, n.max(1));
    let chunk = n.div_ceil(jobs).max(1);
    let one = |k: usize| {
        let mut rng = agent_rng(seed, k as u64);
        let i0 = draw_state(x0, &mut rng);
        sample_path(rates, t0, t1, i0, &mut rng)
    };
    let parts: Vec<Result<Vec<AgentPath>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .step_by(chunk)
            .map(|start| {
                let end = (start + chunk).min(n);
                scope.spawn(move || (start..end).map(one).collect::<Result<Vec<_>>>())
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Fraction of paths in each state at time `t`.
pub fn empirical_distribution(paths: &[AgentPath], t: f64) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for p in paths {
        counts[p.state_at(t).index()] += 1;
    }
    let n = paths.len().max(1) as f64;
    counts.map(|c| c as f64 / n)
}
