use proptest::prelude::*;
use uavbs_core::config::{ServiceClass, SimConfig};
use uavbs_core::geometry::Point2;
use uavbs_core::planner::{allocate_resources, first_tier, Planner, ResourceRequest};
use uavbs_core::radio::{dbm_to_mw, hata_path_loss, mw_to_dbm};
use uavbs_core::scenario::generate_nodes;
use uavbs_core::Exec;

fn class(rb: u32, bits: f64, deadline: f64) -> ServiceClass {
    ServiceClass {
        name: "c".into(),
        rb_demand: rb,
        packet_bits: bits,
        deadline_s: deadline,
    }
}

#[test]
fn tighter_deadline_does_not_free_capacity() {
    // A holds every block for 0.9 s; B and C would each need 0.5 s.
    let slow = class(2, 0.9 * 2.0 * 180e3, 1.0);
    let fast = class(2, 0.5 * 2.0 * 180e3, 1.0);
    fn reqs<'a>(a: &'a ServiceClass, fast: &'a ServiceClass) -> Vec<ResourceRequest<'a>> {
        vec![
            ResourceRequest {
                node_id: 0,
                sinr_db: 0.1,
                cqi: 4,
                service: a,
            },
            ResourceRequest {
                node_id: 1,
                sinr_db: 0.0,
                cqi: 4,
                service: fast,
            },
            ResourceRequest {
                node_id: 2,
                sinr_db: 0.0,
                cqi: 4,
                service: fast,
            },
        ]
    }
    let base = allocate_resources(&reqs(&slow, &fast), 2, 180e3, 1, 1.0);
    let tight_class = class(2, slow.packet_bits, 0.5);
    let tight = allocate_resources(&reqs(&tight_class, &fast), 2, 180e3, 1, 1.0);
    let served = |g: &[uavbs_core::planner::Grant]| g.iter().filter(|g| g.served).count();
    assert!(served(&tight) <= served(&base));
    assert!(!tight[0].served);
    assert_eq!(tight[0].rb_allocated, 2);
}

fn arb_requests() -> impl Strategy<Value = Vec<(f64, u8, usize)>> {
    prop::collection::vec((-12.0..30.0f64, 0u8..15, 0usize..3), 1..60)
}

fn classes() -> Vec<ServiceClass> {
    vec![class(1, 4000.0, 1.0), class(2, 16000.0, 0.5), class(3, 40000.0, 0.8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn served_count_falls_with_stricter_deadlines(
        reqs in arb_requests(),
        rb in 1u32..12,
        scale in prop::collection::vec(0.05..1.0f64, 3),
    ) {
        let loose = classes();
        let strict: Vec<ServiceClass> = loose
            .iter()
            .zip(&scale)
            .map(|(c, s)| class(c.rb_demand, c.packet_bits, c.deadline_s * s))
            .collect();
        let build = |cls: &[ServiceClass]| -> usize {
            let r: Vec<ResourceRequest<'_>> = reqs
                .iter()
                .enumerate()
                .map(|(i, &(sinr, cqi, c))| ResourceRequest { node_id: i as u64, sinr_db: sinr, cqi, service: &cls[c] })
                .collect();
            allocate_resources(&r, rb, 180e3, 1, 1.0).iter().filter(|g| g.served).count()
        };
        prop_assert!(build(&strict) <= build(&loose));
    }

    #[test]
    fn served_count_falls_with_higher_cqi_min(reqs in arb_requests(), rb in 1u32..12, lo in 0u8..14, step in 0u8..5) {
        let cls = classes();
        let r: Vec<ResourceRequest<'_>> = reqs
            .iter()
            .enumerate()
            .map(|(i, &(sinr, cqi, c))| ResourceRequest { node_id: i as u64, sinr_db: sinr, cqi, service: &cls[c] })
            .collect();
        let hi = lo.saturating_add(step).min(14);
        let a = allocate_resources(&r, rb, 180e3, lo, 1.0).iter().filter(|g| g.served).count();
        let b = allocate_resources(&r, rb, 180e3, hi, 1.0).iter().filter(|g| g.served).count();
        prop_assert!(b <= a);
    }

    #[test]
    fn grants_respect_the_block_budget(reqs in arb_requests(), rb in 1u32..12) {
        let cls = classes();
        let r: Vec<ResourceRequest<'_>> = reqs
            .iter()
            .enumerate()
            .map(|(i, &(sinr, cqi, c))| ResourceRequest { node_id: i as u64, sinr_db: sinr, cqi, service: &cls[c] })
            .collect();
        let g = allocate_resources(&r, rb, 180e3, 1, 1.0);
        // total block-seconds never exceed the window
        let busy: f64 = r
            .iter()
            .zip(&g)
            .filter(|(_, g)| g.rb_allocated > 0)
            .map(|(q, _)| {
                let rate = 180e3 * f64::from(q.service.rb_demand) * (1.0 + 10f64.powf(q.sinr_db / 10.0)).log2();
                f64::from(q.service.rb_demand) * q.service.packet_bits / rate
            })
            .sum();
        prop_assert!(busy <= f64::from(rb) * 1.0 + 1e-9);
        for (q, g) in r.iter().zip(&g) {
            prop_assert!(g.rb_allocated == 0 || g.rb_allocated == q.service.rb_demand);
            if g.served {
                prop_assert!(g.latency_s <= q.service.deadline_s && q.cqi >= 1);
            }
        }
    }
}

fn cfg(name: &str) -> SimConfig {
    SimConfig::default().named_scenario(name).unwrap()
}

#[test]
fn selection_returns_the_smallest_feasible_count() {
    for (name, seed) in [("small-100", 1), ("small-500", 2), ("medium-200", 3)] {
        let c = cfg(name);
        let nodes = generate_nodes(&c, seed);
        let sel = Planner::new(&c, Exec::Parallel).select_uav_count(&nodes, seed).unwrap();
        let ks: Vec<usize> = sel.evals.iter().map(|e| e.k).collect();
        assert_eq!(ks, (1..=ks.len()).collect::<Vec<_>>());
        if sel.feasible {
            assert_eq!(sel.k_star, ks.len());
            assert!(sel.chosen().feasible);
            assert!(sel.evals[..ks.len() - 1].iter().all(|e| !e.feasible));
        }
    }
}

#[test]
fn single_uav_sees_only_terrestrial_interference() {
    let mut c = cfg("small-100");
    let nodes = generate_nodes(&c, 5);
    for enabled in [false, true] {
        c.scenario.neighbor_tier_enabled = enabled;
        let p = Planner::new(&c, Exec::Sequential);
        let e = p.evaluate_deployment(&nodes, 1, 5).unwrap();
        let tier = first_tier(&c);
        assert_eq!(tier.len(), if enabled { 6 } else { 0 });
        for (r, n) in e.per_node.iter().zip(&nodes) {
            let a = n.antenna();
            let expect_mw: f64 = tier
                .iter()
                .map(|b| {
                    dbm_to_mw(
                        b.tx_dbm - hata_path_loss(c.radio.f_mhz, a.distance(&b.position), b.position.z, a.z).unwrap(),
                    )
                })
                .sum();
            if enabled {
                assert!((r.link.interference_dbm - mw_to_dbm(expect_mw)).abs() < 1e-9);
            } else {
                assert_eq!(r.link.interference_dbm, f64::NEG_INFINITY);
            }
        }
    }
}

#[test]
fn two_separated_blobs_are_both_served() {
    let mut c = cfg("medium-40");
    c.scenario.neighbor_tier_enabled = false;
    let mut nodes = generate_nodes(&c, 9);
    for (i, n) in nodes.iter_mut().enumerate() {
        let (cx, cy) = if i % 2 == 0 { (200.0, 200.0) } else { (1800.0, 1800.0) };
        n.position = Point2::new(cx + (i as f64 * 7.0) % 50.0, cy + (i as f64 * 13.0) % 50.0);
    }
    let e = Planner::new(&c, Exec::Sequential)
        .evaluate_deployment(&nodes, 2, 1)
        .unwrap();
    assert_eq!(e.n_served, nodes.len());
    assert!(e.separation_ok);
    // the far blob contributes little interference
    for r in &e.per_node {
        assert!(r.link.sinr_db > 20.0, "SINR {}", r.link.sinr_db);
    }
    let uav_gap = e.uavs[0].position.distance(&e.uavs[1].position);
    assert!(uav_gap > 2000.0);
}

#[test]
fn results_do_not_depend_on_exec_mode() {
    let c = cfg("small-200");
    let nodes = generate_nodes(&c, 4);
    let a = Planner::new(&c, Exec::Sequential).select_uav_count(&nodes, 4).unwrap();
    let b = Planner::new(&c, Exec::Parallel).select_uav_count(&nodes, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn evaluation_rejects_out_of_range_k() {
    let c = cfg("small-50");
    let nodes = generate_nodes(&c, 4);
    let p = Planner::new(&c, Exec::Sequential);
    assert!(p.evaluate_deployment(&nodes, 0, 1).is_err());
    assert!(p.evaluate_deployment(&nodes, c.k_max + 1, 1).is_err());
}
