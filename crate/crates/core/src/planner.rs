//! UAV-count selection: cluster, place one UAV per cluster, schedule
//! resource blocks, and test the coverage and separation criteria for each
//! candidate count.

use serde::Serialize;

use crate::clustering::{self, check_separation, crp_cluster, Assignment, CrpParams};
use crate::config::{ServiceClass, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3};
use crate::par::Exec;
use crate::radio::{access_sinr, backhaul_sinr, shannon_throughput, LinkBudget, TerrestrialBs, CQI_LEVELS};
use crate::scenario::GroundNode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UavBs {
    pub id: usize,
    pub position: Point3,
    pub tx_dbm: f64,
    pub capacity_rb: u32,
}

/// One UAV per cluster, hovering over the centroid.
pub fn place_uavs(assignment: &Assignment, uav_height_m: f64, tx_dbm: f64, capacity_rb: u32) -> Vec<UavBs> {
    assignment
        .centroids
        .iter()
        .enumerate()
        .map(|(id, c)| UavBs {
            id,
            position: c.with_height(uav_height_m),
            tx_dbm,
            capacity_rb,
        })
        .collect()
}

/// The six co-channel neighbour BSs around the on-farm BS, or nothing when
/// the tier is disabled.
pub fn first_tier(cfg: &SimConfig) -> Vec<TerrestrialBs> {
    let farm = &cfg.scenario;
    if !farm.neighbor_tier_enabled {
        return Vec::new();
    }
    let centre = farm.bs_position();
    let r = farm.neighbor_tier_distance();
    (0..6)
        .map(|i| {
            let theta = std::f64::consts::FRAC_PI_3 * i as f64;
            TerrestrialBs {
                position: Point3::new(centre.x + r * theta.cos(), centre.y + r * theta.sin(), farm.bs_height_m),
                tx_dbm: cfg.radio.bs_tx_dbm,
            }
        })
        .collect()
}

/// A node waiting for resources on one UAV.
#[derive(Debug, Clone, Copy)]
pub struct ResourceRequest<'a> {
    pub node_id: u64,
    pub sinr_db: f64,
    pub cqi: u8,
    pub service: &'a ServiceClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grant {
    pub rb_allocated: u32,
    /// Queueing wait plus transmission time; infinite when nothing was
    /// granted.
    pub latency_s: f64,
    pub served: bool,
}

/// Schedules one UAV's resource blocks over a window of `window_s`
/// seconds.
///
/// Nodes are taken in descending SINR order (node id breaks ties). Each one
/// needs `rb_demand` blocks for `packet_bits / rate` seconds, where `rate` is
/// the Shannon rate over those blocks, and is placed on the blocks that free
/// up earliest. A node is granted when its transmission fits inside the
/// window; granted nodes keep their blocks even if they finish after their
/// own deadline, so tightening a deadline never frees capacity for others.
/// A granted node counts as served when it meets its deadline with a CQI
/// of at least `cqi_min`.
pub fn allocate_resources(
    requests: &[ResourceRequest<'_>],
    rb_per_channel: u32,
    rb_bw_hz: f64,
    cqi_min: u8,
    window_s: f64,
) -> Vec<Grant> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| {
        requests[b]
            .sinr_db
            .total_cmp(&requests[a].sinr_db)
            .then(requests[a].node_id.cmp(&requests[b].node_id))
    });
    let mut free_at = vec![0.0f64; rb_per_channel as usize];
    let mut slots: Vec<usize> = (0..free_at.len()).collect();
    let mut grants = vec![
        Grant {
            rb_allocated: 0,
            latency_s: f64::INFINITY,
            served: false,
        };
        requests.len()
    ];
    for i in order {
        let req = &requests[i];
        let demand = req.service.rb_demand as usize;
        if demand > free_at.len() {
            continue;
        }
        let rate = shannon_throughput(
            f64::from(req.service.rb_demand) * rb_bw_hz,
            10f64.powf(req.sinr_db / 10.0),
        );
        let tx_time = req.service.packet_bits / rate;
        slots.sort_by(|&a, &b| free_at[a].total_cmp(&free_at[b]).then(a.cmp(&b)));
        let start = free_at[slots[demand - 1]];
        let finish = start + tx_time;
        if !(finish <= window_s) {
            continue;
        }
        for &s in &slots[..demand] {
            free_at[s] = finish;
        }
        grants[i] = Grant {
            rb_allocated: req.service.rb_demand,
            latency_s: finish,
            served: finish <= req.service.deadline_s && req.cqi >= cqi_min,
        };
    }
    grants
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRecord {
    pub node_id: u64,
    pub serving_uav: usize,
    pub link: LinkBudget,
    pub rb_allocated: u32,
    pub latency_s: f64,
    pub served: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentEval {
    pub k: usize,
    pub assignment: Assignment,
    pub uavs: Vec<UavBs>,
    pub per_node: Vec<NodeRecord>,
    /// Backhaul budget per UAV; `None` if the UAV sits exactly on the BS.
    pub backhaul: Vec<Option<LinkBudget>>,
    pub n_served: usize,
    pub total_latency_s: f64,
    pub separation_ok: bool,
    pub backhaul_ok: bool,
    pub feasible: bool,
    pub efficiency: f64,
}

impl DeploymentEval {
    pub fn served_fraction(&self) -> f64 {
        self.n_served as f64 / self.per_node.len().max(1) as f64
    }

    pub fn cqi_histogram(&self) -> [usize; CQI_LEVELS] {
        let mut h = [0; CQI_LEVELS];
        for r in &self.per_node {
            h[r.link.cqi as usize] += 1;
        }
        h
    }

    pub fn summary(&self) -> EvalSummary {
        let n = self.per_node.len().max(1) as f64;
        EvalSummary {
            method: self.assignment.method.to_string(),
            k: self.k,
            n_nodes: self.per_node.len(),
            n_served: self.n_served,
            served_fraction: self.served_fraction(),
            total_latency_s: self.total_latency_s,
            mean_sinr_db: self.per_node.iter().map(|r| r.link.sinr_db).sum::<f64>() / n,
            wcss: self.assignment.wcss,
            separation_ok: self.separation_ok,
            backhaul_ok: self.backhaul_ok,
            feasible: self.feasible,
            efficiency: self.efficiency,
            cluster_sizes: self.assignment.cluster_sizes(),
            cqi_histogram: self.cqi_histogram().to_vec(),
        }
    }
}

/// Scalar view of a [`DeploymentEval`], used in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub method: String,
    pub k: usize,
    pub n_nodes: usize,
    pub n_served: usize,
    pub served_fraction: f64,
    pub total_latency_s: f64,
    pub mean_sinr_db: f64,
    pub wcss: f64,
    pub separation_ok: bool,
    pub backhaul_ok: bool,
    pub feasible: bool,
    pub efficiency: f64,
    pub cluster_sizes: Vec<usize>,
    pub cqi_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub k_star: usize,
    /// False when no candidate met the criteria; `k_star` then maximises
    /// the served count.
    pub feasible: bool,
    /// Every evaluated candidate, ascending in k.
    pub evals: Vec<DeploymentEval>,
}

impl Selection {
    pub fn chosen(&self) -> &DeploymentEval {
        self.evals
            .iter()
            .find(|e| e.k == self.k_star)
            .expect("chosen k was evaluated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyRatio {
    pub value: f64,
    /// Set when the baseline served nobody and the ratio is infinite.
    pub baseline_zero: bool,
}

/// `(served_p / k_p) / (served_crp / k_crp)`.
pub fn efficiency_ratio(eval_p: &DeploymentEval, eval_crp: &DeploymentEval) -> EfficiencyRatio {
    let ep = eval_p.n_served as f64 / eval_p.k as f64;
    let ec = eval_crp.n_served as f64 / eval_crp.k as f64;
    if eval_crp.n_served == 0 {
        return EfficiencyRatio {
            value: if ep > 0.0 { f64::INFINITY } else { f64::NAN },
            baseline_zero: true,
        };
    }
    EfficiencyRatio {
        value: ep / ec,
        baseline_zero: false,
    }
}

/// Evaluates deployments for one farm configuration.
#[derive(Debug, Clone)]
pub struct Planner<'a> {
    cfg: &'a SimConfig,
    farm_bs: TerrestrialBs,
    tier: Vec<TerrestrialBs>,
    exec: Exec,
}

impl<'a> Planner<'a> {
    pub fn new(cfg: &'a SimConfig, exec: Exec) -> Self {
        let bs = cfg.scenario.bs_position();
        Self {
            cfg,
            farm_bs: TerrestrialBs {
                position: bs.with_height(cfg.scenario.bs_height_m),
                tx_dbm: cfg.radio.bs_tx_dbm,
            },
            tier: first_tier(cfg),
            exec,
        }
    }

    pub fn config(&self) -> &SimConfig {
        self.cfg
    }

    pub fn interfering_bs(&self) -> &[TerrestrialBs] {
        &self.tier
    }

    /// Evaluates an existing clustering: link budgets first, then the
    /// scheduler and the feasibility checks.
    pub fn evaluate_assignment(&self, nodes: &[GroundNode], assignment: Assignment) -> Result<DeploymentEval> {
        if assignment.labels.len() != nodes.len() {
            return Err(Error::Argument("assignment does not cover the node list".into()));
        }
        let radio = &self.cfg.radio;
        let uavs = place_uavs(&assignment, radio.uav_height_m, radio.uav_tx_dbm, radio.rb_per_channel);
        let positions: Vec<Point3> = uavs.iter().map(|u| u.position).collect();

        let links = self.exec.map_range(nodes.len(), |i| {
            let serving = assignment.labels[i];
            let others: Vec<Point3> = positions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != serving)
                .map(|(_, p)| *p)
                .collect();
            access_sinr(nodes[i].antenna(), positions[serving], &others, &self.tier, radio)
        });
        let links: Vec<LinkBudget> = links.into_iter().collect::<Result<_>>()?;

        let mut grants = vec![None; nodes.len()];
        for members in assignment.members() {
            let requests: Vec<ResourceRequest<'_>> = members
                .iter()
                .map(|&i| ResourceRequest {
                    node_id: nodes[i].id,
                    sinr_db: links[i].sinr_db,
                    cqi: links[i].cqi,
                    service: nodes[i].service_class(&self.cfg.scenario),
                })
                .collect();
            let g = allocate_resources(
                &requests,
                radio.rb_per_channel,
                radio.rb_bw_hz,
                self.cfg.planner.cqi_min,
                self.cfg.planner.scheduling_window_s,
            );
            for (&i, g) in members.iter().zip(g) {
                grants[i] = Some(g);
            }
        }

        let per_node: Vec<NodeRecord> = nodes
            .iter()
            .zip(&links)
            .zip(grants)
            .zip(&assignment.labels)
            .map(|(((n, link), g), &label)| {
                let g = g.expect("every node belongs to a cluster");
                NodeRecord {
                    node_id: n.id,
                    serving_uav: label,
                    link: *link,
                    rb_allocated: g.rb_allocated,
                    latency_s: g.latency_s,
                    served: g.served,
                }
            })
            .collect();

        let backhaul: Vec<Option<LinkBudget>> = positions
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let others: Vec<Point3> = positions
                    .iter()
                    .enumerate()
                    .filter(|&(o, _)| o != j)
                    .map(|(_, q)| *q)
                    .collect();
                backhaul_sinr(*p, &self.farm_bs, &self.tier, &others, radio).ok()
            })
            .collect();
        let backhaul_ok = backhaul
            .iter()
            .all(|b| b.is_some_and(|b| b.cqi >= self.cfg.planner.cqi_min));
        for (j, b) in backhaul.iter().enumerate() {
            match b {
                Some(b) => log::trace!("UAV {j} backhaul SINR {:.2} dB (CQI {})", b.sinr_db, b.cqi),
                None => log::debug!("UAV {j} sits on the terrestrial BS; backhaul undefined"),
            }
        }

        let n_served = per_node.iter().filter(|r| r.served).count();
        let total_latency_s = per_node.iter().filter(|r| r.served).map(|r| r.latency_s).sum();
        let separation_ok = check_separation(&assignment.centroids, radio.d_min_separation_m).ok;
        let coverage_ok = n_served as f64 >= self.cfg.coverage_target * nodes.len() as f64 - 1e-9;
        let feasible = separation_ok && coverage_ok && (backhaul_ok || !self.cfg.planner.gate_backhaul);
        let k = assignment.k;
        Ok(DeploymentEval {
            k,
            assignment,
            uavs,
            per_node,
            backhaul,
            n_served,
            total_latency_s,
            separation_ok,
            backhaul_ok,
            feasible,
            efficiency: n_served as f64 / k as f64,
        })
    }

    /// k-means with `k` clusters, then the full evaluation.
    pub fn evaluate_deployment(&self, nodes: &[GroundNode], k: usize, seed: u64) -> Result<DeploymentEval> {
        if k < 1 || k > self.cfg.k_max {
            return Err(Error::Argument(format!("k = {k} outside [1, {}]", self.cfg.k_max)));
        }
        let points = positions(nodes);
        let assignment = clustering::kmeans(&points, k, seed, &self.cfg.kmeans, self.exec)?;
        self.evaluate_assignment(nodes, assignment)
    }

    /// Tries k = 1, 2, ... and stops at the first feasible count. When none
    /// up to `k_max` is feasible, picks the count serving the most nodes
    /// (smallest k on ties).
    pub fn select_uav_count(&self, nodes: &[GroundNode], seed: u64) -> Result<Selection> {
        let points = positions(nodes);
        let k_cap = self.cfg.k_max.min(clustering_capacity(&points));
        let mut evals = Vec::new();
        for k in 1..=k_cap {
            let eval = self.evaluate_deployment(nodes, k, seed)?;
            let feasible = eval.feasible;
            evals.push(eval);
            if feasible {
                return Ok(Selection {
                    k_star: k,
                    feasible: true,
                    evals,
                });
            }
        }
        let best = evals
            .iter()
            .fold(None::<&DeploymentEval>, |acc, e| match acc {
                Some(b) if b.n_served >= e.n_served => Some(b),
                _ => Some(e),
            })
            .map(|e| e.k)
            .unwrap_or(1);
        Ok(Selection {
            k_star: best,
            feasible: false,
            evals,
        })
    }

    pub fn crp_params(&self) -> CrpParams {
        CrpParams {
            a: self.cfg.crp.a,
            lambda_m: self.cfg.crp_lambda_m(),
        }
    }

    /// The CRP baseline: cluster count emerges from the process.
    pub fn evaluate_crp_deployment(&self, nodes: &[GroundNode], seed: u64) -> Result<DeploymentEval> {
        let assignment = crp_cluster(&positions(nodes), &self.crp_params(), seed)?;
        self.evaluate_assignment(nodes, assignment)
    }
}

pub fn positions(nodes: &[GroundNode]) -> Vec<Point2> {
    nodes.iter().map(|n| n.position).collect()
}

fn clustering_capacity(points: &[Point2]) -> usize {
    crate::clustering::distinct_count(points)
}
