use proptest::prelude::*;
use uavbs_core::config::SimConfig;
use uavbs_core::geometry::Point2;
use uavbs_core::mobility::{advance_all, step_node, MobilityBounds};
use uavbs_core::scenario::generate_nodes;
use uavbs_core::seed::rng_from;
use uavbs_core::Exec;

fn small(n: usize) -> SimConfig {
    SimConfig::default().named_scenario(&format!("small-{n}")).unwrap()
}

#[test]
fn sequential_and_parallel_agree() {
    let cfg = small(200);
    let nodes = generate_nodes(&cfg, 3);
    let a = advance_all(&nodes, 60.0, 1.0, &cfg.scenario, &cfg.mobility, 9, Exec::Sequential).unwrap();
    let b = advance_all(&nodes, 60.0, 1.0, &cfg.scenario, &cfg.mobility, 9, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn duration_must_be_whole_steps() {
    let cfg = small(10);
    let nodes = generate_nodes(&cfg, 3);
    assert!(advance_all(&nodes, 2.5, 1.0, &cfg.scenario, &cfg.mobility, 9, Exec::Sequential).is_err());
    assert!(advance_all(&nodes, 3.0, 0.0, &cfg.scenario, &cfg.mobility, 9, Exec::Sequential).is_err());
}

#[test]
fn zero_duration_is_identity() {
    let cfg = small(20);
    let nodes = generate_nodes(&cfg, 3);
    let same = advance_all(&nodes, 0.0, 1.0, &cfg.scenario, &cfg.mobility, 9, Exec::Sequential).unwrap();
    assert_eq!(nodes, same);
}

#[test]
fn sampled_speeds_and_pauses_stay_in_bounds() {
    let b = MobilityBounds::default();
    let mut rng = rng_from(5);
    for _ in 0..10_000 {
        let v = b.draw_speed(&mut rng);
        let p = b.draw_pause(&mut rng);
        assert!((1.0..=3.0).contains(&v));
        assert!((0.0..=1.0).contains(&p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Each step keeps the node on the farm and moves it by `speed * dt`
    /// at most; a moving node that does not reach its waypoint moves by
    /// exactly that much.
    #[test]
    fn steps_respect_speed_and_bounds(seed in any::<u64>(), side in 50.0..5000.0f64, dt in 0.1..5.0f64) {
        let mut cfg = SimConfig::default();
        cfg.scenario.side_m = side;
        cfg.scenario.n_nodes = 5;
        let nodes = generate_nodes(&cfg, seed);
        let mut rng = rng_from(seed ^ 1);
        for mut n in nodes {
            for _ in 0..50 {
                let next = step_node(&n, dt, &cfg.scenario, &cfg.mobility, &mut rng);
                let moved = n.position.distance(&next.position);
                prop_assert!(cfg.scenario.contains(&next.position));
                prop_assert!(cfg.scenario.contains(&next.waypoint));
                prop_assert!(moved <= n.speed_mps * dt + 1e-9);
                if n.pause_remaining_s > 0.0 {
                    prop_assert_eq!(moved, 0.0);
                } else if next.position != n.waypoint {
                    prop_assert!((moved - n.speed_mps * dt).abs() < 1e-6);
                }
                prop_assert!(next.speed_mps >= cfg.mobility.v_min && next.speed_mps <= cfg.mobility.v_max);
                prop_assert!(next.pause_remaining_s >= 0.0 && next.pause_remaining_s <= cfg.mobility.pause_max);
                n = next;
            }
        }
    }

    #[test]
    fn advance_is_deterministic(seed in any::<u64>(), stream in any::<u64>()) {
        let cfg = small(15);
        let nodes = generate_nodes(&cfg, seed);
        let a = advance_all(&nodes, 30.0, 1.0, &cfg.scenario, &cfg.mobility, stream, Exec::Sequential).unwrap();
        let b = advance_all(&nodes, 30.0, 1.0, &cfg.scenario, &cfg.mobility, stream, Exec::Sequential).unwrap();
        prop_assert_eq!(&a, &b);
        for (before, after) in nodes.iter().zip(&a) {
            prop_assert!(before.position.distance(&after.position) <= cfg.mobility.v_max * 30.0 + 1e-9);
        }
    }
}

#[test]
fn node_lands_on_a_near_waypoint() {
    let cfg = small(1);
    let mut n = generate_nodes(&cfg, 1).remove(0);
    n.position = Point2::new(10.0, 10.0);
    n.waypoint = Point2::new(11.0, 10.0);
    n.speed_mps = 2.0;
    n.pause_remaining_s = 0.0;
    let next = step_node(&n, 1.0, &cfg.scenario, &cfg.mobility, &mut rng_from(0));
    assert_eq!(next.position, Point2::new(11.0, 10.0));
}
