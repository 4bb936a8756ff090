//! Cross-module invariants checked against independent oracles and
//! randomized inputs with fixed seeds.

mod common;

use muleplan_core::energy::{lifetime, subtree_sizes, RadioParams};
use muleplan_core::graph::{k_dom_set, mst, power_graph, HopMatrix};
use muleplan_core::ilp::{brute_oracle, export_lp, IlpInstance};
use muleplan_core::multi::{find_clusters, MultiConfig, PartitionPlanner};
use muleplan_core::planner::{find_cps, gp_plan, validate_plan, PlanConfig};
use muleplan_core::rdvt::rdvt_plan;
use muleplan_core::topology::Topology;
use muleplan_core::tsp::christofides;
use muleplan_core::types::{NodeId, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mst_matches_enumeration_on_random_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let n = rng.gen_range(2..=6);
        let mut w = vec![vec![0.0f64; n]; n];
        #[allow(clippy::needless_range_loop)] // symmetric fill reads clearer indexed
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.gen_range(1.0..100.0);
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        let vs: Vec<NodeId> = (0..n).map(NodeId).collect();
        let weight = |a: NodeId, b: NodeId| w[a.0][b.0];
        let tree = mst(&vs, weight, NodeId(0)).unwrap();
        let best = common::brute_min_spanning_weight(&vs, weight);
        assert!(
            (tree.total_weight() - best).abs() < 1e-9,
            "kruskal {} vs enumeration {}",
            tree.total_weight(),
            best
        );
    }
}

#[test]
fn unit_square_mst_weight_is_three() {
    let pts = [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ];
    let vs: Vec<NodeId> = (0..4).map(NodeId).collect();
    let weight = |a: NodeId, b: NodeId| pts[a.0].dist(&pts[b.0]);
    assert_eq!(common::brute_min_spanning_weight(&vs, weight), 3.0);
    assert_eq!(mst(&vs, weight, NodeId(0)).unwrap().total_weight(), 3.0);
}

#[test]
fn tour_is_never_shorter_than_its_spanning_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.gen_range(3..=12);
        let topo = common::random_topology(&mut rng, n, 100.0, 150.0);
        let metric = topo.metric_closure(1.0);
        let vs: Vec<NodeId> = (0..n).map(NodeId).collect();
        let tour = christofides(&metric, &vs, NodeId(0));
        let tree = mst(&vs, |a, b| metric.get(a, b), NodeId(0)).unwrap();
        assert!(tour.length >= tree.total_weight() - 1e-9);
    }
}

#[test]
fn greedy_domset_is_at_least_the_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let n = rng.gen_range(4..=11);
        let g = common::random_connected_graph(&mut rng, n, 0.2);
        let k = rng.gen_range(1..=3);
        let greedy = k_dom_set(&g, k).len();
        let minimum = common::brute_min_k_domset(&g, k);
        assert!(greedy >= minimum, "greedy {greedy} below minimum {minimum}");
    }
}

#[test]
fn find_cps_at_diameter_is_the_sink_alone() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..20 {
        let n = rng.gen_range(3..=20);
        let topo = common::random_topology(&mut rng, n, 100.0, 60.0);
        let g = topo.comm_graph();
        let hop = HopMatrix::compute(&g);
        let k = hop.diameter() as usize;
        assert_eq!(find_cps(&g, &hop, &topo, k.max(1)), vec![topo.sink()]);
    }
}

#[test]
fn rdvt_every_prefix_fits_the_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let n = rng.gen_range(4..=16);
        let topo = common::random_topology(&mut rng, n, 100.0, 60.0);
        let metric = topo.metric_closure(1.0);
        let budget = rng.gen_range(0.0..300.0);
        let cfg = PlanConfig::new(budget, 1, 1.0).unwrap();
        let plan = rdvt_plan(&topo, &cfg).unwrap();
        for prefix_len in 1..=plan.caching_points.len() {
            let prefix = &plan.caching_points[..prefix_len];
            let tour = christofides(&metric, prefix, topo.sink());
            assert!(
                tour.length <= budget || prefix_len == 1,
                "prefix of {prefix_len} breaks the budget"
            );
        }
    }
}

#[test]
fn rdvt_visits_everything_under_double_tree_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..25 {
        let n = rng.gen_range(3..=8);
        let topo = common::random_topology(&mut rng, n, 100.0, 160.0);
        let all: Vec<NodeId> = topo.node_ids().collect();
        let metric = topo.metric_closure(1.0);
        let tree = mst(&all, |a, b| metric.get(a, b), topo.sink()).unwrap();
        let cfg = PlanConfig::new(2.0 * tree.total_weight(), 1, 1.0).unwrap();
        let plan = rdvt_plan(&topo, &cfg).unwrap();
        assert_eq!(plan.caching_points.len(), n, "budget 2*MST should cover all");
    }
}

#[test]
fn partitions_cover_the_network_exactly_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..10 {
        let n = rng.gen_range(8..=24);
        let topo = common::random_topology(&mut rng, n, 100.0, 70.0);
        let g = topo.comm_graph();
        let hop = HopMatrix::compute(&g);
        let c = rng.gen_range(1..=3.min(n));
        let clustering = find_clusters(&g, &hop, &topo, c, trial as u64);
        let mut seen = vec![0usize; n];
        for (ci, &center) in clustering.centers.iter().enumerate() {
            assert_eq!(clustering.membership[center.0], ci);
            for v in clustering.cluster_members(ci) {
                seen[v.0] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}

#[test]
fn mp_partition_plans_validate_in_their_subtopologies() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for seed in 0..6u64 {
        let n = rng.gen_range(10..=20);
        let topo = common::random_topology(&mut rng, n, 100.0, 80.0);
        let mc = MultiConfig {
            elements: 2,
            budget: 150.0,
            k_max: n,
            speed: 1.0,
            seed,
        };
        let Ok(parts) = muleplan_core::multi::mp_plan(&topo, &mc, PartitionPlanner::Gp) else {
            continue; // clustering may legitimately fail to split connectedly
        };
        let cfg = PlanConfig::new(mc.budget, mc.k_max, mc.speed).unwrap();
        let mut all: Vec<NodeId> = parts.iter().flat_map(|p| p.nodes.clone()).collect();
        all.sort();
        assert_eq!(all, topo.node_ids().collect::<Vec<_>>());
        for p in &parts {
            assert!(validate_plan(&p.plan, &p.topology, &cfg).is_empty());
        }
    }
}

#[test]
fn subtree_sizes_equal_depth_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..20 {
        let n = rng.gen_range(4..=25);
        let topo = common::random_topology(&mut rng, n, 100.0, 80.0);
        let cfg = PlanConfig::new(rng.gen_range(0.0..400.0), n, 1.0).unwrap();
        let plan = gp_plan(&topo, &cfg).unwrap();
        let total: usize = subtree_sizes(&plan).iter().sum();
        let depths: usize = (0..n)
            .map(|v| plan.forest.depth(NodeId(v)) as usize + 1)
            .sum();
        assert_eq!(total, depths);
    }
}

#[test]
fn oracle_objective_survives_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..12 {
        let n = rng.gen_range(3..=6);
        let topo = common::random_topology(&mut rng, n, 100.0, 120.0);
        let budget = rng.gen_range(0.0..400.0);
        let k = rng.gen_range(1..=3);
        let inst = IlpInstance::from_topology(&topo, 1.0, budget, k, None);
        let Ok(inst) = inst else { continue };
        let base = brute_oracle(&inst);

        // relabel by rotation: new id = (old + 1) mod n
        let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let relabeled: Vec<Point> = {
            let mut pts = vec![Point::new(0.0, 0.0); n];
            for old in 0..n {
                pts[perm[old]] = topo.position(NodeId(old));
            }
            pts
        };
        let topo2 = Topology::new(relabeled, NodeId(perm[topo.sink().0]), topo.comm_range()).unwrap();
        let inst2 = IlpInstance::from_topology(&topo2, 1.0, budget, k, None).unwrap();
        let other = brute_oracle(&inst2);
        match (base, other) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.assignment_hops, b.assignment_hops);
                assert!((a.travel_time - b.travel_time).abs() < 1e-9);
            }
            (Err(_), Err(_)) => {}
            (a, b) => panic!("feasibility changed under relabeling: {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn exported_lp_reparses_under_the_grammar() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..6 {
        let n = rng.gen_range(2..=7);
        let topo = common::random_topology(&mut rng, n, 100.0, 150.0);
        let inst = IlpInstance::from_topology(&topo, 1.0, 100.0, 2, None).unwrap();
        let text = export_lp(&inst);
        let stats = common::parse_lp(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        // y and x binaries, z integers
        assert_eq!(stats.binaries, 2 * n * (n - 1));
        assert_eq!(stats.generals, n);
        assert_eq!(stats.bounds, n);
    }
}

#[test]
fn gp_assignment_cost_never_beats_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut compared = 0;
    for _ in 0..15 {
        let n = rng.gen_range(4..=8);
        let topo = common::random_topology(&mut rng, n, 100.0, 90.0);
        let budget = rng.gen_range(50.0..350.0);
        let cfg = PlanConfig::new(budget, n, 1.0).unwrap();
        let Ok(plan) = gp_plan(&topo, &cfg) else { continue };
        let inst =
            IlpInstance::from_topology(&topo, 1.0, budget, plan.achieved_k, None).unwrap();
        let oracle = brute_oracle(&inst).expect("oracle must be feasible when gp is");
        let hop = HopMatrix::compute(&topo.comm_graph());
        let plan_obj = (plan.assignment_hop_total(&hop), plan.tour.length);
        assert!(
            oracle.assignment_hops < plan_obj.0
                || (oracle.assignment_hops == plan_obj.0
                    && oracle.travel_time <= plan_obj.1 + 1e-9),
            "oracle {:?} worse than gp {:?}",
            oracle.objective(),
            plan_obj
        );
        compared += 1;
    }
    assert!(compared >= 5, "too few feasible comparisons: {compared}");
}

#[test]
fn gp_lifetime_is_deterministic_across_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let topo = common::random_topology(&mut rng, 30, 200.0, 80.0);
    let cfg = PlanConfig::new(200.0, 30, 1.0).unwrap();
    let a = gp_plan(&topo, &cfg).unwrap();
    let b = gp_plan(&topo, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        lifetime(&a, &RadioParams::micaz()),
        lifetime(&b, &RadioParams::micaz())
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_closure_triangle_inequality(
        pts in prop::collection::vec((0.0f64..500.0, 0.0f64..500.0), 3..12),
        speed in 0.5f64..4.0,
    ) {
        let nodes: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let n = nodes.len();
        let Ok(topo) = Topology::new(nodes, NodeId(0), 1e6) else { return Ok(()) };
        let m = topo.metric_closure(speed);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((m.get(NodeId(i), NodeId(j)) - m.get(NodeId(j), NodeId(i))).abs() == 0.0);
                for l in 0..n {
                    prop_assert!(
                        m.get(NodeId(i), NodeId(j))
                            <= m.get(NodeId(i), NodeId(l)) + m.get(NodeId(l), NodeId(j)) + 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn power_graph_is_monotone_in_k(seed in 0u64..500, n in 3usize..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_connected_graph(&mut rng, n, 0.15);
        prop_assert_eq!(power_graph(&g, 1), g.clone());
        let mut previous = g.clone();
        for k in 2..=4 {
            let gk = power_graph(&g, k);
            for v in 0..n {
                for &u in previous.neighbors(NodeId(v)) {
                    prop_assert!(gk.has_edge(NodeId(v), u), "edge lost when k grew");
                }
            }
            previous = gk;
        }
    }

    #[test]
    fn hop_matrix_is_symmetric_with_triangle(seed in 0u64..500, n in 2usize..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_connected_graph(&mut rng, n, 0.1);
        let h = HopMatrix::compute(&g);
        for i in 0..n {
            prop_assert_eq!(h.get(NodeId(i), NodeId(i)), 0);
            for j in 0..n {
                prop_assert_eq!(h.get(NodeId(i), NodeId(j)), h.get(NodeId(j), NodeId(i)));
                for l in 0..n {
                    let (a, b, c) = (
                        h.get(NodeId(i), NodeId(j)) as u64,
                        h.get(NodeId(i), NodeId(l)) as u64,
                        h.get(NodeId(l), NodeId(j)) as u64,
                    );
                    prop_assert!(a <= b + c);
                }
            }
        }
    }

    #[test]
    fn topology_text_round_trip(
        pts in prop::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 2..20),
        sink_pick in 0usize..20,
    ) {
        let nodes: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let sink = NodeId(sink_pick % nodes.len());
        let Ok(topo) = Topology::new(nodes, sink, 2000.0) else { return Ok(()) };
        let back = Topology::from_text(&topo.to_text()).unwrap();
        prop_assert_eq!(topo, back);
    }
}
