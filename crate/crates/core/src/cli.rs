//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::epidemic::{
    simulate_epidemic, stability_condition, steady_state_json, EpidemicParams, EPIDEMIC_DT, EPIDEMIC_HORIZON,
};
use crate::error::{Error, Result};
use crate::fmt::json_pretty;
use crate::graph::Graph;
use crate::grid::{
    frequency_excursion_stats, simulate_grid, AttackSchedule, OscillatorParams, DEFAULT_BAND, GRID_DT,
};
use crate::mfg::{solve_itvp, ItvpConfig};
use crate::model::CostWeights;
use crate::network::NodeTriple;
use crate::scenario::{bucket_histogram, write_scenario, InitialCondition, ScenarioConfig, MANIFEST};
use crate::simplex::SimplexState;
use crate::stationary::{
    all_stationary_points, classify_equilibrium, convergence_study, ellipse_relation_gap, reduced_rhs,
    stationary_equilibrium, stationary_y, study_csv, ReducedCoefficients,
};
use crate::swarm::{simulate_swarm, swarm_equilibria, ArcRates, NetworkSwarmParams, SWARM_DT};

#[derive(Debug, Parser)]
#[command(name = "mfgnet", version, about = "Robust three-state mean-field games on networks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file; every key is optional unless noted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "MFGNET_OUT", default_value = "mfgnet-out")]
    pub out: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the initial-terminal value problem.
    ///
    /// Config keys: `x0` ([x1,x2,x3], default [0.3,0.3,0.4]); `weights`
    /// ({control, disturbance: 3x3, congestion: {q}}); `itvp` ({horizon, dt,
    /// relaxation, tolerance, max_iterations, terminal: "congestion" |
    /// {"fixed": [v1,v2,v3]}}).
    /// Writes trajectory.csv and solution.json.
    MfgSolve,
    /// Stationary equilibrium and its stability.
    ///
    /// Config keys: either `weights` (as for mfg-solve) or `coefficients`
    /// ({a: [a11,a12,a21,a22], c: [c1,c2]}) for the reduced system directly.
    /// Writes stationary.json.
    Stationary,
    /// Distance to the stationary equilibrium at the midpoint of growing windows.
    ///
    /// Config keys: `x0` (default [0.6,0.1,0.3]); `weights`; `horizons`
    /// (default [5,10,20,40]); `itvp` (step, tolerance, ...; horizon ignored).
    /// Writes study.csv and study.json.
    Convergence,
    /// Honeybee swarm network model.
    ///
    /// Config keys: `graph` (edge-list path, default bundled Walpole);
    /// `beta_prime`, `beta_doubleprime` ({b13,b31,b23,b32}); `initial`
    /// ([[s,z,r], ...] per node, default random from `seed`); `horizon`
    /// (default 50); `dt` (default 0.01); `k` (optional symmetric-point
    /// connectivity); `record_interval` (default 0.1); `seed`.
    /// Writes swarm.csv and equilibria.json.
    SwarmSim,
    /// Virus propagation network model.
    ///
    /// Config keys: `graph`; `beta13`, `beta23`, `beta31`, `beta32`
    /// (default 0.13, 0.13, 0.1, 0.1); `initial` ("walpole-node11" or
    /// [[s,z,r], ...], default the preset); `schedule` (attack schedule,
    /// scales the infection rates; default continuous low rate); `horizon`
    /// (default 200); `dt` (default 0.01); `record_interval` (default 0.1).
    /// Writes epidemic.csv, steady_state.json and stability.json.
    VirusSim,
    /// Kuramoto grid under attack disturbances.
    ///
    /// Config keys: `graph`; `infection` (per-node probabilities) or
    /// `infection_file` (a steady_state.json); `oscillator` ({omega, M, D, K,
    /// coupling: "all_to_all" | "adjacency"}); `schedule` ({kind, base_rates,
    /// burst_multiplier, burst_period, sample_interval, k_hat, omega_hat});
    /// `iterations` (default 1000); `dt` (default 0.01); `band` (default
    /// [49.5, 50.5]); `seed`.
    /// Writes frequency.csv and excursions.json.
    GridSim,
    /// Epidemic → histograms → grid pipeline.
    ///
    /// Config keys: `graph`; `initial` (required); `schedule` (required);
    /// `epidemic` ({beta31, beta32, horizon, steady_horizon, dt,
    /// record_interval}); `oscillator`; `grid` ({iterations, dt, band});
    /// `seed`; `replications`.
    /// Writes a manifest and six data files.
    Scenario,
    /// Four-bucket infection histogram.
    ///
    /// Config: `{"infection": [...]}` or a steady_state.json array.
    /// Writes histogram.json.
    Buckets,
}

/// Parses arguments, runs, and maps the outcome to the exit status:
/// 0 success, 1 domain error (JSON on stderr), 2 usage error.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.common.verbose { "debug" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(&cli) {
        Ok(summary) => {
            print!("{}", json_pretty(&summary));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprint!("{}", json_pretty(&body));
            ExitCode::from(1)
        }
    }
}

/// Runs one command, writing its files under `--out`; returns the summary
/// printed on stdout.
pub fn dispatch(cli: &Cli) -> Result<Value> {
    let c = &cli.common;
    let cfg = c.config.as_deref();
    match cli.command {
        Command::MfgSolve => mfg_solve(load(cfg)?, &c.out),
        Command::Stationary => stationary(load(cfg)?, &c.out),
        Command::Convergence => convergence(load(cfg)?, &c.out, c.jobs),
        Command::SwarmSim => swarm_sim(load(cfg)?, cfg, &c.out, c.seed),
        Command::VirusSim => virus_sim(load(cfg)?, cfg, &c.out),
        Command::GridSim => grid_sim(load(cfg)?, cfg, &c.out, c.seed),
        Command::Scenario => {
            let path = cfg.ok_or_else(|| Error::InvalidParameter("scenario needs --config".into()))?;
            let mut sc = ScenarioConfig::load(path)?;
            if let Some(s) = c.seed {
                sc.seed = s;
            }
            let entries = write_scenario(&sc, &c.out, c.jobs)?;
            Ok(json!({ "manifest": c.out.join(MANIFEST), "files": entries.len() }))
        }
        Command::Buckets => {
            let path = cfg.ok_or_else(|| Error::InvalidParameter("buckets needs --config".into()))?;
            buckets(read_json(path)?, &c.out)
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

/// Resolves a path from a config file against the file's directory.
fn relative_to(config: Option<&Path>, p: &Path) -> PathBuf {
    match config.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn load_graph(config: Option<&Path>, p: &Option<PathBuf>) -> Result<Graph> {
    match p {
        Some(p) => Graph::load(relative_to(config, p)),
        None => Ok(Graph::walpole()),
    }
}

fn write(out: &Path, name: &str, body: &str) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(name);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MfgSolveConfig {
    x0: SimplexState,
    weights: CostWeights,
    itvp: ItvpConfig,
}

impl Default for MfgSolveConfig {
    fn default() -> Self {
        MfgSolveConfig {
            x0: SimplexState::new(0.3, 0.3, 0.4).expect("valid"),
            weights: CostWeights::default(),
            itvp: ItvpConfig::default(),
        }
    }
}

fn mfg_solve(cfg: MfgSolveConfig, out: &Path) -> Result<Value> {
    let sol = solve_itvp(cfg.x0, &cfg.weights, &cfg.itvp)?;
    write(out, "trajectory.csv", &sol.trajectory.to_csv())?;
    let summary = json!({
        "iterations": sol.iterations,
        "converged": sol.converged,
        "last_change": sol.last_change,
        "residual": sol.residual,
        "regime_violations": sol.regime_violations,
        "x_T": sol.trajectory.final_state(),
        "v_0": sol.trajectory.initial_value(),
    });
    write(out, "solution.json", &json_pretty(&summary))?;
    Ok(summary)
}

#[derive(Debug, Deserialize)]
struct Coefficients {
    a: [f64; 4],
    c: [f64; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationaryConfig {
    weights: Option<CostWeights>,
    coefficients: Option<Coefficients>,
}

fn stationary(cfg: StationaryConfig, out: &Path) -> Result<Value> {
    let summary = match (cfg.weights, cfg.coefficients) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter("give either `weights` or `coefficients`".into()));
        }
        (None, Some(c)) => {
            let k = ReducedCoefficients::new(c.a, c.c)?;
            let y = stationary_y(&k)?;
            let stability = classify_equilibrium(&y, &k)?;
            let r = reduced_rhs(&y, &k);
            let points: Vec<Value> = all_stationary_points(&k)?
                .iter()
                .map(|p| {
                    let verdict = classify_equilibrium(p, &k).map(|s| s.label());
                    json!({ "y": [p.y1, p.y2], "stability": verdict.ok() })
                })
                .collect();
            json!({
                "y_star": [y.y1, y.y2],
                "stability": stability.label(),
                "residual": r[0].abs().max(r[1].abs()),
                "ellipse_relation_gap": ellipse_relation_gap(&y, &k),
                "all_points": points,
            })
        }
        (w, None) => {
            let s = stationary_equilibrium(&w.unwrap_or_default())?;
            json!({
                "y_star": [s.y_star.y1, s.y_star.y2],
                "stability": s.stability.label(),
                "x_hat": s.x_hat,
                "v_bar": s.v_bar,
                "kappa": s.kappa,
                "residual": s.residual,
                "coefficients": s.coefficients,
            })
        }
    };
    write(out, "stationary.json", &json_pretty(&summary))?;
    Ok(summary)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConvergenceConfig {
    x0: SimplexState,
    weights: CostWeights,
    horizons: Vec<f64>,
    itvp: ItvpConfig,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            x0: SimplexState::new(0.6, 0.1, 0.3).expect("valid"),
            weights: CostWeights::default(),
            horizons: vec![5.0, 10.0, 20.0, 40.0],
            itvp: ItvpConfig {
                tolerance: 1e-11,
                ..ItvpConfig::default()
            },
        }
    }
}

fn convergence(cfg: ConvergenceConfig, out: &Path, jobs: usize) -> Result<Value> {
    let records = convergence_study(cfg.x0, &cfg.weights, &cfg.horizons, &cfg.itvp, jobs)?;
    write(out, "study.csv", &study_csv(&records))?;
    let summary = json!({ "records": records });
    write(out, "study.json", &json_pretty(&summary))?;
    Ok(summary)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SwarmConfig {
    graph: Option<PathBuf>,
    beta_prime: ArcRates,
    beta_doubleprime: ArcRates,
    initial: Option<Vec<[f64; 3]>>,
    horizon: f64,
    dt: f64,
    k: Option<f64>,
    record_interval: f64,
    seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            graph: None,
            beta_prime: ArcRates::all(0.5),
            beta_doubleprime: ArcRates::all(0.05),
            initial: None,
            horizon: 50.0,
            dt: SWARM_DT,
            k: None,
            record_interval: 0.1,
            seed: 0,
        }
    }
}

/// Uniform point of the simplex per node, as `(s, z, r)`.
pub fn random_triple(n: usize, rng: &mut impl Rng) -> NodeTriple {
    let mut x = NodeTriple::zeros(n);
    for i in 0..n {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        x.s[i] = lo;
        x.z[i] = hi - lo;
        x.r[i] = 1.0 - hi;
    }
    x
}

fn swarm_sim(cfg: SwarmConfig, path: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<Value> {
    let graph = load_graph(path, &cfg.graph)?;
    let n = graph.node_count();
    let p = NetworkSwarmParams {
        beta_prime: cfg.beta_prime,
        beta_doubleprime: cfg.beta_doubleprime,
        graph,
    };
    let x0 = match cfg.initial {
        Some(rows) => InitialCondition::Nodes(rows).resolve(n)?,
        None => random_triple(n, &mut ChaCha8Rng::seed_from_u64(seed.unwrap_or(cfg.seed))),
    };
    let traj = simulate_swarm(&x0, &p, cfg.horizon, cfg.dt)?;
    let stride = (cfg.record_interval / cfg.dt).round().max(1.0) as usize;
    write(out, "swarm.csv", &traj.to_csv_every(stride))?;
    let eq = swarm_equilibria(&p, cfg.k)?;
    let hypotheses = p.check_hypotheses().err().map(|e| e.to_string());
    let (lo, hi) = traj.range();
    let summary = json!({
        "final": traj.final_state(),
        "range": [lo, hi],
        "hypotheses_violated": hypotheses,
        "equilibria": eq,
    });
    write(out, "equilibria.json", &json_pretty(&summary))?;
    Ok(summary)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VirusConfig {
    graph: Option<PathBuf>,
    beta13: f64,
    beta23: f64,
    beta31: f64,
    beta32: f64,
    initial: InitialCondition,
    schedule: AttackSchedule,
    horizon: f64,
    dt: f64,
    record_interval: f64,
}

impl Default for VirusConfig {
    fn default() -> Self {
        VirusConfig {
            graph: None,
            beta13: 0.13,
            beta23: 0.13,
            beta31: 0.1,
            beta32: 0.1,
            initial: InitialCondition::Preset(crate::scenario::WALPOLE_NODE11.into()),
            schedule: AttackSchedule::continuous_low_rate(),
            horizon: EPIDEMIC_HORIZON,
            dt: EPIDEMIC_DT,
            record_interval: 0.1,
        }
    }
}

fn virus_sim(cfg: VirusConfig, path: Option<&Path>, out: &Path) -> Result<Value> {
    let graph = load_graph(path, &cfg.graph)?;
    let x0 = cfg.initial.resolve(graph.node_count())?;
    let p = EpidemicParams {
        beta13: cfg.beta13,
        beta23: cfg.beta23,
        beta31: cfg.beta31,
        beta32: cfg.beta32,
        graph,
    };
    let run = simulate_epidemic(&x0, &p, &cfg.schedule, cfg.horizon, cfg.dt)?;
    let stride = (cfg.record_interval / cfg.dt).round().max(1.0) as usize;
    write(out, "epidemic.csv", &run.trajectory.to_csv_every(stride))?;
    write(out, "steady_state.json", &steady_state_json(&run.steady_state))?;
    // threshold at the disease-free point with the same split between s and r
    let end = run.trajectory.final_state();
    let s_star: Vec<f64> = (0..end.len())
        .map(|i| {
            let m = end.s[i] + end.r[i];
            if m > 0.0 {
                (end.s[i] / m).clamp(0.0, 1.0)
            } else {
                0.5
            }
        })
        .collect();
    let threshold = stability_condition(&s_star, &p)?;
    let summary = json!({
        "settled": run.settled,
        "final_rate": run.final_rate,
        "steady_state": run.steady_state,
        "s_star": s_star,
        "stable": threshold.stable,
        "margins": threshold.margins,
    });
    write(out, "stability.json", &json_pretty(&summary))?;
    Ok(summary)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridConfig {
    graph: Option<PathBuf>,
    infection: Option<Vec<f64>>,
    infection_file: Option<PathBuf>,
    oscillator: OscillatorParams,
    schedule: AttackSchedule,
    iterations: u64,
    dt: f64,
    band: [f64; 2],
    seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            graph: None,
            infection: None,
            infection_file: None,
            oscillator: OscillatorParams::default(),
            schedule: AttackSchedule::continuous_low_rate(),
            iterations: 1000,
            dt: GRID_DT,
            band: DEFAULT_BAND,
            seed: 0,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InfectionInput {
    Plain { infection: Vec<f64> },
    Keyed(Vec<KeyedInfection>),
}

#[derive(Deserialize)]
struct KeyedInfection {
    node: usize,
    infection: f64,
}

impl InfectionInput {
    fn into_vec(self) -> Result<Vec<f64>> {
        match self {
            InfectionInput::Plain { infection } => Ok(infection),
            InfectionInput::Keyed(mut rows) => {
                rows.sort_by_key(|r| r.node);
                if rows.iter().enumerate().any(|(i, r)| r.node != i + 1) {
                    return Err(Error::InvalidParameter("node ids must be 1..=n, each once".into()));
                }
                Ok(rows.into_iter().map(|r| r.infection).collect())
            }
        }
    }
}

fn grid_sim(cfg: GridConfig, path: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<Value> {
    let graph = load_graph(path, &cfg.graph)?;
    let infection = match (cfg.infection, &cfg.infection_file) {
        (Some(v), None) => v,
        (None, Some(f)) => read_json::<InfectionInput>(&relative_to(path, f))?.into_vec()?,
        (None, None) => vec![0.0; graph.node_count()],
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter("give either `infection` or `infection_file`".into()));
        }
    };
    let seed = seed.unwrap_or(cfg.seed);
    let traj = simulate_grid(&infection, &cfg.oscillator, &graph, &cfg.schedule, cfg.iterations, cfg.dt, seed)?;
    let trace = traj.frequencies();
    write(out, "frequency.csv", &trace.to_csv())?;
    let stats = frequency_excursion_stats(&trace, cfg.band)?;
    let summary = json!({ "seed": seed, "band": cfg.band, "nodes": stats });
    write(out, "excursions.json", &json_pretty(&summary))?;
    Ok(summary)
}

fn buckets(input: InfectionInput, out: &Path) -> Result<Value> {
    let h = bucket_histogram(&input.into_vec()?)?;
    let summary = json!({ "edges": crate::scenario::BUCKET_EDGES, "counts": h.counts });
    write(out, "histogram.json", &json_pretty(&summary))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let e = Cli::try_parse_from(["mfgnet", "frobnicate"]).unwrap_err();
        assert!(e.use_stderr());
    }

    #[test]
    fn keyed_infection_input() {
        let v: InfectionInput = serde_json::from_str(r#"[{"node":2,"infection":0.5},{"node":1,"infection":0.1}]"#).unwrap();
        assert_eq!(v.into_vec().unwrap(), vec![0.1, 0.5]);
        let v: InfectionInput = serde_json::from_str(r#"{"infection":[0.3]}"#).unwrap();
        assert_eq!(v.into_vec().unwrap(), vec![0.3]);
    }
}
