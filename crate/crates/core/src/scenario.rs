//! End-to-end attack experiment: epidemic on the bus network, infection
//! histograms, then the grid driven by the steady-state infection.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::epidemic::{simulate_epidemic, steady_state_json, EpidemicParams, EpidemicRun, EPIDEMIC_DT};
use crate::error::{Error, Result};
use crate::fmt::json_pretty;
use crate::graph::Graph;
use crate::grid::{
    frequency_excursion_stats, simulate_grid, AttackSchedule, ExcursionStats, OscillatorParams, DEFAULT_BAND, GRID_DT,
};
use crate::network::NodeTriple;
use crate::parallel::par_map;

pub const WALPOLE_NODE11: &str = "walpole-node11";

/// Bucket edges: `[0, .25)`, `[.25, .5)`, `[.5, .75)`, `[.75, 1]`.
pub const BUCKET_EDGES: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectionHistogram {
    pub counts: [usize; 4],
}

impl InfectionHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Nodes in bucket `from` or higher.
    pub fn at_least(&self, from: usize) -> usize {
        self.counts[from.min(4)..].iter().sum()
    }

    /// First-order dominance: at least as many nodes at or above every edge.
    pub fn dominates(&self, other: &InfectionHistogram) -> bool {
        self.total() == other.total() && (1..4).all(|k| self.at_least(k) >= other.at_least(k))
    }
}

pub fn bucket_histogram(infection: &[f64]) -> Result<InfectionHistogram> {
    let mut counts = [0usize; 4];
    for (index, &value) in infection.iter().enumerate() {
        if !(-1e-9..=1.0 + 1e-9).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
        counts[BUCKET_EDGES.partition_point(|&e| e <= value)] += 1;
    }
    Ok(InfectionHistogram { counts })
}

/// Starting condition of the epidemic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialCondition {
    /// Named preset, e.g. `"walpole-node11"`.
    Preset(String),
    /// One `[s, z, r]` triple per node.
    Nodes(Vec<[f64; 3]>),
}

impl InitialCondition {
    pub fn resolve(&self, n: usize) -> Result<NodeTriple> {
        match self {
            InitialCondition::Preset(name) if name == WALPOLE_NODE11 => {
                if n != 11 {
                    return Err(Error::InvalidParameter(format!(
                        "preset {WALPOLE_NODE11} needs 11 nodes, graph has {n}"
                    )));
                }
                walpole_node11()
            }
            InitialCondition::Preset(name) => Err(Error::InvalidParameter(format!("unknown preset `{name}`"))),
            InitialCondition::Nodes(rows) => {
                if rows.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "{} initial triples for {n} nodes",
                        rows.len()
                    )));
                }
                NodeTriple::new(
                    rows.iter().map(|t| t[0]).collect(),
                    rows.iter().map(|t| t[1]).collect(),
                    rows.iter().map(|t| t[2]).collect(),
                )
            }
        }
    }
}

/// Node 11 infected, nodes 1–5 in state 1 (`r = 1`), nodes 6–10 in state 2 (`s = 1`).
pub fn walpole_node11() -> Result<NodeTriple> {
    let mut x = NodeTriple::zeros(11);
    for i in 0..5 {
        x.r[i] = 1.0;
        x.s[i + 5] = 1.0;
    }
    x.z[10] = 1.0;
    x.validate()?;
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicSettings {
    /// Recovery rates; the infection rates come from the schedule's base rates.
    pub beta31: f64,
    pub beta32: f64,
    /// Histogram snapshots are taken at `horizon / 2` and `horizon`.
    pub horizon: f64,
    /// The run continues to here; `z` at this time feeds the grid.
    pub steady_horizon: f64,
    pub dt: f64,
    /// Time between rows of the epidemic CSV.
    pub record_interval: f64,
}

impl Default for EpidemicSettings {
    fn default() -> Self {
        EpidemicSettings {
            beta31: 0.1,
            beta32: 0.1,
            horizon: 10.0,
            steady_horizon: 200.0,
            dt: EPIDEMIC_DT,
            record_interval: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub iterations: u64,
    pub dt: f64,
    pub band: [f64; 2],
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            iterations: 1000,
            dt: GRID_DT,
            band: DEFAULT_BAND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Edge-list file; the bundled Walpole network when absent. Relative
    /// paths resolve against the config file's directory.
    #[serde(default)]
    pub graph: Option<PathBuf>,
    pub initial: InitialCondition,
    pub schedule: AttackSchedule,
    #[serde(default)]
    pub epidemic: EpidemicSettings,
    #[serde(default)]
    pub oscillator: OscillatorParams,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub seed: u64,
    /// Independent grid runs with seeds `seed, seed + 1, …`.
    #[serde(default = "one")]
    pub replications: usize,
}

fn one() -> usize {
    1
}

impl ScenarioConfig {
    pub fn walpole_node11(schedule: AttackSchedule) -> Self {
        ScenarioConfig {
            graph: None,
            initial: InitialCondition::Preset(WALPOLE_NODE11.into()),
            schedule,
            epidemic: EpidemicSettings::default(),
            oscillator: OscillatorParams::default(),
            grid: GridSettings::default(),
            seed: 0,
            replications: 1,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        if let (Some(g), Some(dir)) = (&cfg.graph, path.parent()) {
            if g.is_relative() {
                cfg.graph = Some(dir.join(g));
            }
        }
        Ok(cfg)
    }

    pub fn load_graph(&self) -> Result<Graph> {
        match &self.graph {
            Some(p) => Graph::load(p),
            None => Ok(Graph::walpole()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.oscillator.validate()?;
        let e = &self.epidemic;
        let times_ok = e.horizon >= 0.0 && e.steady_horizon >= e.horizon && e.dt > 0.0 && e.record_interval > 0.0;
        if !times_ok || !e.steady_horizon.is_finite() {
            return Err(Error::InvalidParameter(
                "epidemic needs 0 <= horizon <= steady_horizon and positive dt, record_interval".into(),
            ));
        }
        if !(self.grid.dt > 0.0) || !(self.grid.band[0] < self.grid.band[1]) {
            return Err(Error::InvalidParameter("grid needs dt > 0 and band low < high".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        Ok(())
    }

    fn epidemic_params(&self, graph: Graph) -> EpidemicParams {
        EpidemicParams {
            beta13: self.schedule.base_rates[0],
            beta23: self.schedule.base_rates[1],
            beta31: self.epidemic.beta31,
            beta32: self.epidemic.beta32,
            graph,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    /// Snapshot at `horizon / 2`.
    pub mid: InfectionHistogram,
    /// Snapshot at `horizon`.
    pub end: InfectionHistogram,
    /// At `steady_horizon`.
    pub steady: InfectionHistogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReplication {
    pub seed: u64,
    pub stats: Vec<ExcursionStats>,
    pub frequency_csv: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub epidemic: EpidemicRun,
    pub histograms: Histograms,
    pub replications: Vec<GridReplication>,
}

/// Runs the pipeline without touching the file system.
pub fn run_scenario(cfg: &ScenarioConfig, jobs: usize) -> Result<ScenarioReport> {
    cfg.validate()?;
    let graph = cfg.load_graph()?;
    let x0 = cfg.initial.resolve(graph.node_count())?;
    let p = cfg.epidemic_params(graph.clone());
    p.validate()?;
    let e = &cfg.epidemic;
    let epidemic = simulate_epidemic(&x0, &p, &cfg.schedule, e.steady_horizon, e.dt)?;
    let at = |t: f64| bucket_histogram(&epidemic.trajectory.state_near(t).z);
    let histograms = Histograms {
        mid: at(e.horizon / 2.0)?,
        end: at(e.horizon)?,
        steady: bucket_histogram(&epidemic.steady_state)?,
    };
    if !epidemic.settled {
        log::warn!(
            "epidemic not settled at t = {}: |dz/dt| ~ {:e}",
            e.steady_horizon,
            epidemic.final_rate
        );
    }
    let seeds: Vec<u64> = (0..cfg.replications as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    let replications = par_map(&seeds, jobs, |&seed| -> Result<GridReplication> {
        let traj = simulate_grid(
            &epidemic.steady_state,
            &cfg.oscillator,
            &graph,
            &cfg.schedule,
            cfg.grid.iterations,
            cfg.grid.dt,
            seed,
        )?;
        let trace = traj.frequencies();
        Ok(GridReplication {
            seed,
            stats: frequency_excursion_stats(&trace, cfg.grid.band)?,
            frequency_csv: trace.to_csv(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioReport {
        epidemic,
        histograms,
        replications,
    })
}

/// Data files written by [`write_scenario`], in manifest order.
pub const SCENARIO_FILES: [&str; 6] = [
    "config.json",
    "epidemic.csv",
    "steady_state.json",
    "histograms.json",
    "frequency.csv",
    "excursions.json",
];
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Runs the scenario and writes the bundle into `out`. With several
/// replications each one gets its own `rep-<k>` subdirectory for the grid
/// files. A failure after the epidemic stage still leaves a manifest with
/// `"status": "partial"`.
pub fn write_scenario(cfg: &ScenarioConfig, out: &Path, jobs: usize) -> Result<Vec<ManifestEntry>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut entries = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = out.join(&name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
        entries.push(ManifestEntry {
            file: name,
            sha256: hex(&Sha256::digest(body.as_bytes())),
            bytes: body.len(),
        });
        Ok(())
    };
    put(SCENARIO_FILES[0].into(), json_pretty(&serde_json::to_value(cfg).expect("config serializes")))?;
    let report = run_scenario(cfg, jobs);
    let result = report.and_then(|r| {
        let stride = (cfg.epidemic.record_interval / cfg.epidemic.dt).round().max(1.0) as usize;
        put(SCENARIO_FILES[1].into(), r.epidemic.trajectory.to_csv_every(stride))?;
        put(SCENARIO_FILES[2].into(), steady_state_json(&r.epidemic.steady_state))?;
        let h = json!({
            "edges": BUCKET_EDGES,
            "mid": { "t": cfg.epidemic.horizon / 2.0, "counts": r.histograms.mid.counts },
            "end": { "t": cfg.epidemic.horizon, "counts": r.histograms.end.counts },
            "steady": {
                "t": cfg.epidemic.steady_horizon,
                "counts": r.histograms.steady.counts,
                "settled": r.epidemic.settled,
                "final_rate": r.epidemic.final_rate,
            },
        });
        put(SCENARIO_FILES[3].into(), json_pretty(&h))?;
        let single = r.replications.len() == 1;
        for (k, rep) in r.replications.iter().enumerate() {
            let prefix = if single { String::new() } else { format!("rep-{k}/") };
            put(format!("{prefix}{}", SCENARIO_FILES[4]), rep.frequency_csv.clone())?;
            let stats = json!({ "seed": rep.seed, "band": cfg.grid.band, "nodes": rep.stats });
            put(format!("{prefix}{}", SCENARIO_FILES[5]), json_pretty(&stats))?;
        }
        Ok(())
    });
    let status = match &result {
        Ok(()) => json!({ "status": "complete" }),
        Err(e) => json!({ "status": "partial", "error": { "kind": e.kind(), "message": e.to_string() } }),
    };
    let mut manifest = status;
    manifest["files"] = serde_json::to_value(&entries).expect("entries serialize");
    let path = out.join(MANIFEST);
    std::fs::write(&path, json_pretty(&manifest)).map_err(|e| Error::io(&path, e))?;
    result.map(|()| entries)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_examples() {
        assert_eq!(bucket_histogram(&[0.1, 0.3, 0.6, 0.9]).unwrap().counts, [1, 1, 1, 1]);
        assert_eq!(bucket_histogram(&[0.0; 11]).unwrap().counts, [11, 0, 0, 0]);
        assert_eq!(bucket_histogram(&[0.25]).unwrap().counts, [0, 1, 0, 0]);
        assert_eq!(bucket_histogram(&[1.0]).unwrap().counts, [0, 0, 0, 1]);
        assert!(matches!(bucket_histogram(&[1.1]), Err(Error::OutOfRange { index: 0, .. })));
    }

    #[test]
    fn dominance() {
        let low = InfectionHistogram { counts: [5, 5, 1, 0] };
        let high = InfectionHistogram { counts: [3, 6, 2, 0] };
        assert!(high.dominates(&low));
        assert!(!low.dominates(&high));
    }

    #[test]
    fn preset_layout() {
        let x = walpole_node11().unwrap();
        assert_eq!(x.z[10], 1.0);
        assert_eq!(x.r[0..5], [1.0; 5]);
        assert_eq!(x.s[5..10], [1.0; 5]);
    }

    #[test]
    fn config_round_trip() {
        let cfg = ScenarioConfig::walpole_node11(AttackSchedule::sequential());
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let nodes: InitialCondition = serde_json::from_str("[[1,0,0],[0,1,0]]").unwrap();
        assert_eq!(nodes.resolve(2).unwrap().z, vec![0.0, 1.0]);
    }
}
