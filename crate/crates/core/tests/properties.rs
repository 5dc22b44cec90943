//! Randomized invariants and scalar-loop oracles.

use proptest::prelude::*;

use mfgnet::epidemic::{stability_condition, virus_network_rhs, EpidemicParams};
use mfgnet::grid::{kuramoto_energy, simulate_oscillators, CouplingKind, OscillatorParams, OscillatorState};
use mfgnet::mfg::{integrate_forward, ConstantRates};
use mfgnet::network::NodeTriple;
use mfgnet::stationary::{classify_equilibrium, stationary_y, ReducedCoefficients, Stability};
use mfgnet::swarm::{swarm_equilibria, swarm_network_rhs, ArcRates, NetworkSwarmParams};
use mfgnet::{make_simplex, Graph, RateMatrix};

fn triple(n: usize) -> impl Strategy<Value = NodeTriple> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), n).prop_map(|pairs| {
        let mut t = NodeTriple::zeros(pairs.len());
        for (i, (a, b)) in pairs.into_iter().enumerate() {
            let (lo, hi) = (a.min(b), a.max(b));
            t.s[i] = lo;
            t.z[i] = hi - lo;
            t.r[i] = 1.0 - hi;
        }
        t
    })
}

fn arcs() -> impl Strategy<Value = ArcRates> {
    (0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64).prop_map(|(b13, b31, b23, b32)| ArcRates { b13, b31, b23, b32 })
}

/// Edge subsets of the 5-node complete graph, kept connected by a path.
fn small_graph() -> impl Strategy<Value = Graph> {
    prop::collection::vec(any::<bool>(), 10).prop_map(|mask| {
        let mut edges = vec![(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0)];
        let extra = [(1, 3), (1, 4), (1, 5), (2, 4), (2, 5), (3, 5)];
        for (k, &(i, j)) in extra.iter().enumerate() {
            if mask[k] {
                edges.push((i, j, 1.0));
            }
        }
        Graph::from_undirected_edges(5, &edges).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swarm_rhs_matches_scalar_loop(x in triple(4), bp in arcs(), bd in arcs()) {
        let g = Graph::path(4);
        let p = NetworkSwarmParams { beta_prime: bp, beta_doubleprime: bd, graph: g.clone() };
        let out = swarm_network_rhs(&x, &p);
        for i in 0..4 {
            let (mut as_, mut ar) = (0.0, 0.0);
            for j in 0..4 {
                as_ += g.a(i, j) * x.s[j];
                ar += g.a(i, j) * x.r[j];
            }
            let ds = -bp.b23 * x.s[i] * ar + bp.b32 * x.z[i] * as_ - bd.b23 * x.s[i] + bd.b32 * x.z[i];
            let dr = -bp.b13 * x.r[i] * as_ + bp.b31 * x.z[i] * ar - bd.b13 * x.r[i] + bd.b31 * x.z[i];
            prop_assert!((out.s[i] - ds).abs() < 1e-14);
            prop_assert!((out.r[i] - dr).abs() < 1e-14);
            prop_assert!((out.z[i] + ds + dr).abs() < 1e-14);
        }
    }

    #[test]
    fn virus_rhs_matches_scalar_loop(x in triple(4), b in arcs()) {
        let g = Graph::path(4);
        let p = EpidemicParams { beta13: b.b13, beta23: b.b23, beta31: b.b31, beta32: b.b32, graph: g.clone() };
        let out = virus_network_rhs(&x, &p);
        for i in 0..4 {
            let az: f64 = (0..4).map(|j| g.a(i, j) * x.z[j]).sum();
            let ds = -b.b23 * x.s[i] * az + b.b32 * x.z[i];
            let dr = -b.b13 * x.r[i] * az + b.b31 * x.z[i];
            prop_assert!((out.s[i] - ds).abs() < 1e-14);
            prop_assert!((out.r[i] - dr).abs() < 1e-14);
            prop_assert_eq!((out.s[i] + out.r[i]) + out.z[i], 0.0);
        }
    }

    #[test]
    fn forward_runs_stay_on_the_simplex(
        b in arcs(),
        (a, c) in (0.0..1.0f64, 0.0..1.0f64),
    ) {
        let (x1, x2) = (a.min(c), a.max(c) - a.min(c));
        let x0 = make_simplex(x1, x2, 1.0 - x1 - x2).unwrap();
        let m = ConstantRates(RateMatrix::from_arcs(b.b13, b.b31, b.b23, b.b32).unwrap());
        let traj = integrate_forward(x0, &m, 10.0, 1e-2).unwrap();
        for x in &traj.states {
            let s: f64 = x.as_array().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-10);
            prop_assert!(x.as_array().iter().all(|&v| v >= -1e-12));
        }
    }

    #[test]
    fn stronger_disturbance_pulls_y1_towards_the_axis(
        (r31, r32, g13, g23) in (0.3..3.0f64, 0.3..3.0f64, 0.3..3.0f64, 0.3..3.0f64),
        (c1, c2) in (0.2..2.0f64, 0.2..2.0f64),
        bump in 0.01..0.5f64,
    ) {
        // Γ13⁻¹ enters a11 only
        let base = [1.0 / g13 + 1.0 / r31, 1.0 / r32, 1.0 / r31, 1.0 / g23 + 1.0 / r32];
        let k0 = ReducedCoefficients::new(base, [c1, c2]).unwrap();
        let mut bumped = base;
        bumped[0] += bump;
        let k1 = ReducedCoefficients::new(bumped, [c1, c2]).unwrap();
        if let (Ok(y0), Ok(y1)) = (stationary_y(&k0), stationary_y(&k1)) {
            prop_assert!(y1.y1.abs() < y0.y1.abs());
        }
    }

    #[test]
    fn third_quadrant_root_is_a_stable_node(
        (r31, r32, g13, g23) in (0.2..5.0f64, 0.2..5.0f64, 0.2..5.0f64, 0.2..5.0f64),
        (c1, c2) in (-1.0..3.0f64, -1.0..3.0f64),
    ) {
        let a = [1.0 / g13 + 1.0 / r31, 1.0 / r32, 1.0 / r31, 1.0 / g23 + 1.0 / r32];
        let k = ReducedCoefficients::new(a, [c1, c2]).unwrap();
        if let Ok(y) = stationary_y(&k) {
            if y.y1 < 0.0 && y.y2 < 0.0 {
                prop_assert_eq!(classify_equilibrium(&y, &k).unwrap(), Stability::StableNode);
            }
        }
    }

    #[test]
    fn adding_an_edge_never_raises_a_margin(g in small_graph(), s in prop::collection::vec(0.0..1.0f64, 5),
                                            i in 0usize..5, j in 0usize..5) {
        prop_assume!(i != j && g.a(i, j) == 0.0);
        let p = EpidemicParams { beta13: 0.07, beta23: 0.11, beta31: 0.1, beta32: 0.1, graph: g.clone() };
        let before = stability_condition(&s, &p).unwrap();
        let q = EpidemicParams { graph: g.with_edge(i, j, 1.0).unwrap(), ..p };
        let after = stability_condition(&s, &q).unwrap();
        for (a, b) in after.margins.iter().zip(&before.margins) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn symmetric_point_is_an_equilibrium(k in 0.05..10.0f64, scale in 0.1..2.0f64) {
        let p = NetworkSwarmParams {
            beta_prime: ArcRates { b13: scale * k, b31: scale, b23: scale * k, b32: scale },
            beta_doubleprime: ArcRates { b13: 0.1 * k, b31: 0.1, b23: 0.1 * k, b32: 0.1 },
            graph: Graph::walpole(),
        };
        let eqs = swarm_equilibria(&p, Some(k)).unwrap();
        let sym = eqs.last().unwrap();
        prop_assert!(sym.residual < 1e-12, "residual {}", sym.residual);
        prop_assert!((sym.state.z[0] - k / (2.0 + k)).abs() < 1e-15);
    }

    #[test]
    fn undisturbed_energy_never_increases(
        theta in prop::collection::vec(-1.5..1.5f64, 6),
        omega in prop::collection::vec(-1.0..1.0f64, 6),
        adjacency in any::<bool>(),
    ) {
        let g = Graph::path(6);
        let p = OscillatorParams {
            coupling: if adjacency { CouplingKind::Adjacency } else { CouplingKind::AllToAll },
            ..OscillatorParams::default()
        };
        let c = p.coupling(&g);
        let start = OscillatorState { theta, theta_dot: omega };
        let traj = simulate_oscillators(&start, &p, &c, 500, 0.01, |_| vec![0.0; 6]).unwrap();
        let e: Vec<f64> = traj.states.iter().map(|s| kuramoto_energy(s, &p, &c)).collect();
        for w in e.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
        }
    }
}

#[test]
fn disease_free_family_is_exactly_fixed() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let g = Graph::walpole();
    let p = EpidemicParams { beta13: 0.13, beta23: 0.13, beta31: 0.1, beta32: 0.1, graph: g };
    for _ in 0..100 {
        let s: Vec<f64> = (0..11).map(|_| rng.gen()).collect();
        let r: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
        let x = NodeTriple::new(s, vec![0.0; 11], r).unwrap();
        assert_eq!(virus_network_rhs(&x, &p).sup_norm(), 0.0);
    }
}

#[test]
fn better_connected_buses_get_infected_more() {
    use mfgnet::epidemic::simulate_epidemic;
    use mfgnet::grid::AttackSchedule;
    use mfgnet::scenario::walpole_node11;
    let g = Graph::walpole();
    let p = EpidemicParams { beta13: 0.13, beta23: 0.13, beta31: 0.1, beta32: 0.1, graph: g.clone() };
    let run = simulate_epidemic(&walpole_node11().unwrap(), &p, &AttackSchedule::continuous_low_rate(), 200.0, 0.01)
        .unwrap();
    let d = g.degrees();
    let z = &run.steady_state;
    // Spearman rank correlation between degree and steady infection
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut m = k;
            while m + 1 < idx.len() && v[idx[m + 1]] == v[idx[k]] {
                m += 1;
            }
            for &i in &idx[k..=m] {
                r[i] = (k + m) as f64 / 2.0;
            }
            k = m + 1;
        }
        r
    };
    let (rd, rz) = (rank(&d), rank(z));
    let mean = (d.len() - 1) as f64 / 2.0;
    let cov: f64 = rd.iter().zip(&rz).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let var = |r: &[f64]| r.iter().map(|a| (a - mean).powi(2)).sum::<f64>();
    let rho = cov / (var(&rd) * var(&rz)).sqrt();
    assert!(rho > 0.5, "rank correlation {rho}");
    assert!(z[6] > z[0]);
}
