//! Partitioning ground nodes into UAV service areas.

mod crp;
mod kmeans;

pub use crp::{crp_cluster, CrpParams};
pub use kmeans::{elbow_scan, kmeans, kmeans_from, lloyd_trace, ElbowPoint};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    KMeans,
    Crp,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::KMeans => "kmeans",
            Method::Crp => "crp",
        })
    }
}

/// A clustering of ground nodes. `labels[i]` is the cluster of point `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Point2>,
    pub wcss: f64,
    pub method: Method,
}

impl Assignment {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Indices of the members of every cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Checks shape and cluster occupancy against `points`. For k-means it
    /// also verifies that every centroid is its cluster mean.
    pub fn check_invariants(&self, points: &[Point2]) -> Result<()> {
        if self.labels.len() != points.len() || self.centroids.len() != self.k {
            return Err(Error::Argument("assignment shape does not match points".into()));
        }
        if self.labels.iter().any(|&l| l >= self.k) {
            return Err(Error::Argument("label out of range".into()));
        }
        if self.cluster_sizes().contains(&0) {
            return Err(Error::Argument("empty cluster".into()));
        }
        let recomputed = wcss(points, &self.labels, &self.centroids)?;
        if (recomputed - self.wcss).abs() > 1e-6 * recomputed.max(1.0) {
            return Err(Error::Argument(format!("stored WCSS {} != {}", self.wcss, recomputed)));
        }
        if self.method == Method::KMeans {
            for (c, m) in self.centroids.iter().zip(cluster_means(points, &self.labels, self.k)) {
                if c.distance(&m) > 1e-9 * (1.0 + m.x.abs().max(m.y.abs())) {
                    return Err(Error::Argument("centroid is not the cluster mean".into()));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn cluster_means(points: &[Point2], labels: &[usize], k: usize) -> Vec<Point2> {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.x;
        sums[l].1 += p.y;
        sums[l].2 += 1;
    }
    sums.into_iter()
        .map(|(x, y, n)| {
            let n = n.max(1) as f64;
            Point2::new(x / n, y / n)
        })
        .collect()
}

/// Within-cluster sum of squares `sum_i |p_i - c(label_i)|^2`.
pub fn wcss(points: &[Point2], labels: &[usize], centroids: &[Point2]) -> Result<f64> {
    if labels.len() != points.len() {
        return Err(Error::Argument(format!(
            "{} labels for {} points",
            labels.len(),
            points.len()
        )));
    }
    points.iter().zip(labels).try_fold(0.0, |acc, (p, &l)| {
        centroids
            .get(l)
            .map(|c| acc + p.distance_sq(c))
            .ok_or_else(|| Error::Argument(format!("label {l} out of range for {} centroids", centroids.len())))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub ok: bool,
    /// `(i, j, distance)` for every centroid pair closer than the minimum.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Checks that all centroid pairs are at least `d_min_m` apart. The
/// boundary is inclusive.
pub fn check_separation(centroids: &[Point2], d_min_m: f64) -> SeparationReport {
    let mut violations = Vec::new();
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            let d = centroids[i].distance(&centroids[j]);
            if d < d_min_m * (1.0 - 1e-12) {
                violations.push((i, j, d));
            }
        }
    }
    SeparationReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// Number of distinct positions, the upper bound on a useful cluster count.
pub fn distinct_count(points: &[Point2]) -> usize {
    let mut keys: Vec<(u64, u64)> = points
        .iter()
        .map(|p| ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wcss_examples() {
        let p = [Point2::new(3.0, 4.0)];
        assert_eq!(wcss(&p, &[0], &[Point2::new(3.0, 4.0)]).unwrap(), 0.0);
        let p = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)];
        assert_eq!(wcss(&p, &[0, 0], &[Point2::new(1.0, 0.0)]).unwrap(), 2.0);
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 2.0),
            Point2::new(2.0, 2.0),
        ];
        assert_eq!(wcss(&sq, &[0; 4], &[Point2::new(1.0, 1.0)]).unwrap(), 8.0);
        assert!(wcss(&p, &[0, 1], &[Point2::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn separation_rules() {
        assert!(check_separation(&[Point2::new(1.0, 1.0)], 50.0).ok);
        let r = check_separation(&[Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)], 50.0);
        assert!(!r.ok);
        assert_eq!(r.violations.len(), 1);
        assert_eq!((r.violations[0].0, r.violations[0].1), (0, 1));
        let line: Vec<Point2> = (0..6).map(|i| Point2::new(50.0 * i as f64, 0.0)).collect();
        assert!(check_separation(&line, 50.0).ok);
    }

    #[test]
    fn distinct_points() {
        let p = [Point2::new(0.0, 0.0), Point2::new(-0.0, 0.0), Point2::new(1.0, 0.0)];
        assert_eq!(distinct_count(&p), 2);
    }
}
