//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use rand::Rng;
use serde::Serialize;

use super::{cluster_means, distinct_count, wcss, Assignment, Method};
use crate::config::KMeansSettings;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::par::Exec;
use crate::seed::{child_rng, Stream};

/// Nearest centroid; ties go to the lowest index.
fn nearest(p: &Point2, centroids: &[Point2]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, q) in centroids.iter().enumerate() {
        let d = p.distance_sq(q);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[Point2], centroids: &[Point2], labels: &mut [usize]) {
    for (l, p) in labels.iter_mut().zip(points) {
        *l = nearest(p, centroids).0;
    }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &[Point2], centroids: &mut [Point2], labels: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = points[a].distance_sq(&centroids[labels[a]]);
                let db = points[b].distance_sq(&centroids[labels[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= number of points");
        labels[donor] = empty;
        centroids[empty] = points[donor];
    }
}

fn plus_plus_init<R: Rng>(points: &[Point2], k: usize, rng: &mut R) -> Vec<Point2> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| p.distance_sq(&centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut idx = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    idx = Some(i);
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            idx.expect("positive total weight")
        } else {
            // only reachable if every point sits on a centroid
            d2.iter().position(|&w| w > 0.0).unwrap_or(0)
        };
        let c = points[pick];
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(p.distance_sq(&c));
        }
        centroids.push(c);
    }
    centroids
}

/// Runs Lloyd iterations from `init` and returns the result together with the
/// WCSS after every centroid update.
pub fn lloyd_trace(points: &[Point2], init: Vec<Point2>, max_iter: usize, tol: f64) -> (Assignment, Vec<f64>) {
    let k = init.len();
    let mut centroids = init;
    let mut labels = vec![0; points.len()];
    let mut trace = Vec::new();
    assign(points, &centroids, &mut labels);
    repair_empty(points, &mut centroids, &mut labels);
    for iter in 0..max_iter {
        let means = cluster_means(points, &labels, k);
        let shift = centroids
            .iter()
            .zip(&means)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max);
        centroids = means;
        trace.push(wcss(points, &labels, &centroids).expect("labels in range"));
        if shift < tol || iter + 1 == max_iter {
            break;
        }
        assign(points, &centroids, &mut labels);
        repair_empty(points, &mut centroids, &mut labels);
    }
    let wcss = *trace.last().expect("max_iter >= 1");
    (
        Assignment {
            k,
            labels,
            centroids,
            wcss,
            method: Method::KMeans,
        },
        trace,
    )
}

fn check_k(points: &[Point2], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::Argument(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }
    Ok(())
}

/// Keeps the lowest WCSS; earlier candidates win ties.
fn best_of(candidates: impl IntoIterator<Item = Assignment>) -> Option<Assignment> {
    candidates.into_iter().fold(None, |best, a| match best {
        Some(b) if b.wcss <= a.wcss => Some(b),
        _ => Some(a),
    })
}

/// Best of `settings.n_init` k-means++ restarts. Restart `r` draws from the
/// stream `(seed, r)`.
pub fn kmeans(points: &[Point2], k: usize, seed: u64, settings: &KMeansSettings, exec: Exec) -> Result<Assignment> {
    check_k(points, k)?;
    let runs = exec.map_range(settings.n_init.max(1), |r| {
        let mut rng = child_rng(seed, Stream::KMeans, r as u64);
        let init = plus_plus_init(points, k, &mut rng);
        lloyd_trace(points, init, settings.max_iter, settings.tol).0
    });
    Ok(best_of(runs).expect("at least one restart"))
}

/// Single Lloyd run from explicit starting centroids.
pub fn kmeans_from(points: &[Point2], init: Vec<Point2>, settings: &KMeansSettings) -> Result<Assignment> {
    check_k(points, init.len())?;
    Ok(lloyd_trace(points, init, settings.max_iter, settings.tol).0)
}

/// Extends `centroids` to `k` by repeatedly adding the point farthest from
/// the current set.
fn extend_farthest(points: &[Point2], mut centroids: Vec<Point2>, k: usize) -> Vec<Point2> {
    while centroids.len() < k {
        let far = points
            .iter()
            .map(|p| (p, super::kmeans::nearest(p, &centroids).1))
            .fold((points[0], -1.0), |acc, (p, d)| if d > acc.1 { (*p, d) } else { acc });
        centroids.push(far.0);
    }
    centroids
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElbowPoint {
    pub k: usize,
    pub wcss: f64,
}

/// WCSS for every `k` in `k_range`. Each entry is the best of the k-means++
/// restarts and one extra run seeded with the previous entry's centroids plus
/// the farthest points, which makes the curve non-increasing in `k`.
pub fn elbow_scan(
    points: &[Point2],
    k_range: &[usize],
    seed: u64,
    settings: &KMeansSettings,
    exec: Exec,
) -> Result<Vec<ElbowPoint>> {
    if k_range.is_empty() {
        return Err(Error::Argument("empty k range".into()));
    }
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut out = Vec::with_capacity(ks.len());
    let mut prev: Option<Assignment> = None;
    for k in ks {
        let fresh = kmeans(
            points,
            k,
            crate::seed::child_seed(seed, Stream::Elbow, k as u64),
            settings,
            exec,
        )?;
        let best = match prev.take() {
            Some(p) => {
                let init = extend_farthest(points, p.centroids, k);
                let nested = lloyd_trace(points, init, settings.max_iter, settings.tol).0;
                best_of([fresh, nested]).expect("two candidates")
            }
            None => fresh,
        };
        out.push(ElbowPoint { k, wcss: best.wcss });
        prev = Some(best);
    }
    Ok(out)
}
