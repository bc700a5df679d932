use proptest::prelude::*;
use uavbs_core::clustering::{check_separation, crp_cluster, elbow_scan, kmeans, wcss, Assignment, CrpParams, Method};
use uavbs_core::config::KMeansSettings;
use uavbs_core::geometry::Point2;
use uavbs_core::seed::rng_from;
use uavbs_core::Exec;

use rand::Rng;

/// Optimal WCSS by trying every labelling that uses all `k` labels.
pub fn brute_force_wcss(points: &[Point2], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut used = vec![false; k];
        labels.iter().for_each(|&l| used[l] = true);
        if used.iter().all(|&u| u) {
            let mut sum = vec![(0.0, 0.0, 0usize); k];
            for (p, &l) in points.iter().zip(&labels) {
                sum[l].0 += p.x;
                sum[l].1 += p.y;
                sum[l].2 += 1;
            }
            let cost: f64 = points
                .iter()
                .zip(&labels)
                .map(|(p, &l)| {
                    let (sx, sy, c) = sum[l];
                    let (mx, my) = (sx / c as f64, sy / c as f64);
                    (p.x - mx).powi(2) + (p.y - my).powi(2)
                })
                .sum();
            best = best.min(cost);
        }
        // next labelling in base k
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

fn random_points(seed: u64, n: usize, scale: f64) -> Vec<Point2> {
    let mut rng = rng_from(seed);
    (0..n)
        .map(|_| Point2::new(rng.gen::<f64>() * scale, rng.gen::<f64>() * scale))
        .collect()
}

#[test]
fn kmeans_reaches_the_brute_force_optimum() {
    let settings = KMeansSettings::default();
    let mut hits = 0;
    let total = 100;
    for inst in 0..total {
        let n = 3 + inst % 6;
        let k = 1 + inst % 3;
        let pts = random_points(1000 + inst as u64, n, 1.0);
        let got = kmeans(&pts, k, inst as u64, &settings, Exec::Sequential).unwrap().wcss;
        let opt = brute_force_wcss(&pts, k);
        assert!(got >= opt - 1e-9, "k-means below the optimum: {got} < {opt}");
        if (got - opt).abs() <= 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "optimal on {hits} of {total}");
}

#[test]
fn kmeans_is_independent_of_exec_mode() {
    let pts = random_points(4, 300, 1000.0);
    let s = KMeansSettings::default();
    let a = kmeans(&pts, 7, 11, &s, Exec::Sequential).unwrap();
    let b = kmeans(&pts, 7, 11, &s, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn kmeans_rejects_bad_k() {
    let pts = random_points(4, 5, 1.0);
    let s = KMeansSettings::default();
    assert!(kmeans(&pts, 0, 1, &s, Exec::Sequential).is_err());
    assert!(kmeans(&pts, 6, 1, &s, Exec::Sequential).is_err());
}

#[test]
fn two_blobs_split_cleanly() {
    let mut pts = random_points(1, 20, 10.0);
    pts.extend(
        random_points(2, 20, 10.0)
            .into_iter()
            .map(|p| Point2::new(p.x + 500.0, p.y)),
    );
    let a = kmeans(&pts, 2, 3, &KMeansSettings::default(), Exec::Sequential).unwrap();
    assert!(a.labels[..20].iter().all(|&l| l == a.labels[0]));
    assert!(a.labels[20..].iter().all(|&l| l == a.labels[20]));
    assert_ne!(a.labels[0], a.labels[20]);
    assert!(check_separation(&a.centroids, 200.0).ok);
}

#[test]
fn separation_is_inclusive() {
    let c = [Point2::new(0.0, 0.0), Point2::new(200.0, 0.0)];
    assert!(check_separation(&c, 200.0).ok);
    let c = [Point2::new(0.0, 0.0), Point2::new(199.0, 0.0), Point2::new(1000.0, 0.0)];
    let r = check_separation(&c, 200.0);
    assert!(!r.ok);
    assert_eq!(r.violations.len(), 1);
}

#[test]
fn plain_crp_matches_the_harmonic_sum() {
    let n = 100;
    let params = CrpParams {
        a: 2.0,
        lambda_m: f64::INFINITY,
    };
    let pts = random_points(8, n, 1000.0);
    let seeds = 500;
    let mean = (0..seeds)
        .map(|s| crp_cluster(&pts, &params, s).unwrap().k as f64)
        .sum::<f64>()
        / seeds as f64;
    let expected: f64 = (0..n).map(|i| 2.0 / (2.0 + i as f64)).sum();
    assert!((mean - expected).abs() < 0.5, "mean {mean} vs {expected}");
}

#[test]
fn crp_is_seed_deterministic() {
    let pts = random_points(8, 80, 1000.0);
    let p = CrpParams {
        a: 2.0,
        lambda_m: 250.0,
    };
    assert_eq!(crp_cluster(&pts, &p, 5).unwrap(), crp_cluster(&pts, &p, 5).unwrap());
}

fn check_assignment(a: &Assignment, pts: &[Point2]) -> Result<(), TestCaseError> {
    prop_assert!(a.check_invariants(pts).is_ok());
    prop_assert_eq!(a.cluster_sizes().iter().sum::<usize>(), pts.len());
    prop_assert!(a.cluster_sizes().iter().all(|&s| s > 0));
    let w = wcss(pts, &a.labels, &a.centroids).unwrap();
    prop_assert!((w - a.wcss).abs() <= 1e-9 * w.max(1.0));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kmeans_assignments_are_consistent(seed in any::<u64>(), n in 5usize..80, k in 1usize..6) {
        let pts = random_points(seed, n, 1000.0);
        let a = kmeans(&pts, k.min(n), seed, &KMeansSettings::default(), Exec::Sequential).unwrap();
        prop_assert_eq!(a.method, Method::KMeans);
        prop_assert_eq!(a.k, k.min(n));
        check_assignment(&a, &pts)?;
        // every point sits with its nearest centroid after convergence
        for (p, &l) in pts.iter().zip(&a.labels) {
            let own = p.distance_sq(&a.centroids[l]);
            prop_assert!(a.centroids.iter().all(|c| p.distance_sq(c) >= own - 1e-6));
        }
    }

    #[test]
    fn crp_assignments_are_consistent(seed in any::<u64>(), n in 1usize..120, lambda in 10.0..5000.0f64) {
        let pts = random_points(seed, n, 1000.0);
        let a = crp_cluster(&pts, &CrpParams { a: 2.0, lambda_m: lambda }, seed).unwrap();
        prop_assert_eq!(a.method, Method::Crp);
        check_assignment(&a, &pts)?;
    }

    #[test]
    fn elbow_never_increases(seed in any::<u64>(), n in 10usize..60) {
        let pts = random_points(seed, n, 1000.0);
        let ks: Vec<usize> = (1..=8).collect();
        let scan = elbow_scan(&pts, &ks, seed, &KMeansSettings::default(), Exec::Sequential).unwrap();
        prop_assert_eq!(scan.len(), 8);
        for w in scan.windows(2) {
            prop_assert!(w[1].wcss <= w[0].wcss);
        }
    }
}
