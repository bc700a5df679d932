use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{FarmScenario, ServiceClass, SimConfig};
use crate::geometry::{Point2, Point3};
use crate::mobility::uniform_point;
use crate::seed::{child_rng, Stream};

/// A tagged animal: kinematic state plus its service class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundNode {
    pub id: u64,
    pub position: Point2,
    pub height_m: f64,
    pub waypoint: Point2,
    pub speed_mps: f64,
    pub pause_remaining_s: f64,
    /// Index into the scenario's service mix.
    pub service: usize,
}

impl GroundNode {
    pub fn antenna(&self) -> Point3 {
        self.position.with_height(self.height_m)
    }

    pub fn service_class<'a>(&self, farm: &'a FarmScenario) -> &'a ServiceClass {
        &farm.service_mix[self.service].class
    }
}

/// Draws the initial node population. Pure in `(config, seed)`.
pub fn generate_nodes(config: &SimConfig, seed: u64) -> Vec<GroundNode> {
    let farm = &config.scenario;
    let mut rng = child_rng(seed, Stream::Population, 0);
    let cumulative: Vec<f64> = farm
        .service_mix
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s.fraction;
            Some(*acc)
        })
        .collect();
    (0..farm.n_nodes)
        .map(|i| {
            let position = uniform_point(&mut rng, farm.side_m);
            let u: f64 = rng.gen::<f64>() * cumulative.last().copied().unwrap_or(1.0);
            let service = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
            let waypoint = uniform_point(&mut rng, farm.side_m);
            let speed_mps = config.mobility.draw_speed(&mut rng);
            GroundNode {
                id: i as u64,
                position,
                height_m: config.radio.node_height_m,
                waypoint,
                speed_mps,
                pause_remaining_s: 0.0,
                service,
            }
        })
        .collect()
}
