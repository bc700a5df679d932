//! Distance-dependent Chinese Restaurant Process clustering.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{wcss, Assignment, Method};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::seed::{child_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrpParams {
    /// Concentration: weight of opening a new cluster.
    pub a: f64,
    /// Decay scale of the distance kernel `exp(-d / lambda)`. An infinite
    /// value disables the kernel (plain CRP).
    pub lambda_m: f64,
}

impl CrpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::validation("crp.a", "must be positive"));
        }
        if !(self.lambda_m > 0.0) {
            return Err(Error::validation("crp.lambda_m", "must be positive"));
        }
        Ok(())
    }
}

/// Seats points one at a time in input order. Point `i` joins cluster `c`
/// with weight `|c| * exp(-|p_i - centroid_c| / lambda)` or opens a new
/// cluster with weight `a`. Centroids are running means.
pub fn crp_cluster(points: &[Point2], params: &CrpParams, seed: u64) -> Result<Assignment> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::Argument("CRP needs at least one point".into()));
    }
    let mut rng = child_rng(seed, Stream::Crp, 0);
    let mut labels = Vec::with_capacity(points.len());
    let mut centroids: Vec<Point2> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for p in points {
        weights.clear();
        weights.extend(
            centroids
                .iter()
                .zip(&sizes)
                .map(|(c, &n)| n as f64 * (-p.distance(c) / params.lambda_m).exp()),
        );
        let total: f64 = weights.iter().sum::<f64>() + params.a;
        let mut u = rng.gen::<f64>() * total;
        let mut table = centroids.len();
        for (c, &w) in weights.iter().enumerate() {
            if u < w {
                table = c;
                break;
            }
            u -= w;
        }
        if table == centroids.len() {
            centroids.push(*p);
            sizes.push(1);
        } else {
            let n = sizes[table] as f64 + 1.0;
            let c = &mut centroids[table];
            c.x += (p.x - c.x) / n;
            c.y += (p.y - c.y) / n;
            sizes[table] += 1;
        }
        labels.push(table);
    }
    let wcss = wcss(points, &labels, &centroids)?;
    Ok(Assignment {
        k: centroids.len(),
        labels,
        centroids,
        wcss,
        method: Method::Crp,
    })
}
