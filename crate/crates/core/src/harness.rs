//! Replication loop over the scenario grid, with per-scenario aggregation.
//!
//! A replication draws a fresh node population, then walks the horizon in
//! reclustering epochs. Every epoch selects a UAV count with the k-means
//! planner and evaluates the CRP baseline on the same snapshot. The count
//! reported for the replication is the largest one any epoch needed.

use serde::Serialize;

use crate::clustering::{distinct_count, elbow_scan, ElbowPoint};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::mobility::advance_all;
use crate::par::Exec;
use crate::planner::{efficiency_ratio, positions, EfficiencyRatio, EvalSummary, Planner};
use crate::radio::CQI_LEVELS;
use crate::scenario::generate_nodes;
use crate::seed::{child_seed, replication_seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub t_s: f64,
    pub k_star: usize,
    pub feasible: bool,
    /// The selected k-means deployment.
    pub kmeans: EvalSummary,
    pub crp: EvalSummary,
    pub ratio: EfficiencyRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub scenario_id: String,
    pub replication: usize,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Elbow scan on the initial snapshot.
    pub elbow: Vec<ElbowPoint>,
    /// Largest selected count over all epochs.
    pub final_k: usize,
    /// Every epoch reached the coverage target.
    pub all_feasible: bool,
}

impl ReplicationReport {
    pub fn initial(&self) -> &EpochRecord {
        &self.epochs[0]
    }
}

/// Runs replication `r` of the scenario described by `cfg`.
pub fn run_replication(cfg: &SimConfig, r: usize, exec: Exec) -> Result<ReplicationReport> {
    let seed = replication_seed(cfg.master_seed, &cfg.scenario.id, r as u64);
    let planner = Planner::new(cfg, exec);
    let mut nodes = generate_nodes(cfg, seed);

    let points = positions(&nodes);
    let k_hi = cfg.k_max.min(distinct_count(&points));
    let ks: Vec<usize> = (1..=k_hi).collect();
    let elbow = elbow_scan(&points, &ks, child_seed(seed, Stream::Elbow, 0), &cfg.kmeans, exec)?;

    let n_epochs = cfg.epoch_count();
    let mut epochs = Vec::with_capacity(n_epochs);
    for e in 0..n_epochs {
        if e > 0 {
            let stream = child_seed(seed, Stream::Mobility, e as u64);
            nodes = advance_all(
                &nodes,
                cfg.recluster_period_s,
                cfg.dt_s,
                &cfg.scenario,
                &cfg.mobility,
                stream,
                exec,
            )?;
        }
        let snapshot_seed = child_seed(seed, Stream::KMeans, e as u64);
        let selection = planner.select_uav_count(&nodes, snapshot_seed)?;
        let crp = planner.evaluate_crp_deployment(&nodes, child_seed(seed, Stream::Crp, e as u64))?;
        let chosen = selection.chosen();
        epochs.push(EpochRecord {
            epoch: e,
            t_s: e as f64 * cfg.recluster_period_s,
            k_star: selection.k_star,
            feasible: selection.feasible,
            kmeans: chosen.summary(),
            crp: crp.summary(),
            ratio: efficiency_ratio(chosen, &crp),
        });
    }
    let final_k = epochs.iter().map(|e| e.k_star).max().unwrap_or(0);
    let all_feasible = epochs.iter().all(|e| e.feasible);
    log::debug!("{} rep {r}: k* = {final_k}", cfg.scenario.id);
    Ok(ReplicationReport {
        scenario_id: cfg.scenario.id.clone(),
        replication: r,
        seed,
        epochs,
        elbow,
        final_k,
        all_feasible,
    })
}

/// Sample mean and standard deviation (n - 1 denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub scenario_id: String,
    pub farm: String,
    pub side_m: f64,
    pub n_nodes: usize,
    pub replications: usize,
    pub failed: usize,
    /// Per-replication count (max over epochs).
    pub k_star: Stat,
    /// Count chosen on the initial snapshot only.
    pub k_initial: Stat,
    pub served_initial: Stat,
    pub served_fraction: Stat,
    pub feasible_fraction: f64,
    pub crp_k: Stat,
    pub crp_served: Stat,
    /// Mean over replications with a non-zero baseline.
    pub efficiency_ratio: Stat,
    pub ratio_baseline_zero: usize,
    /// Mean WCSS per k, over replications whose scan reached that k.
    pub elbow: Vec<(usize, Stat)>,
    /// Summed CQI counts on the initial snapshot.
    pub cqi_kmeans: Vec<usize>,
    pub cqi_crp: Vec<usize>,
}

/// Outcome of one grid cell: the replications that succeeded, in index
/// order, and the failures.
#[derive(Debug)]
pub struct ScenarioRun {
    pub cfg: SimConfig,
    pub farm: String,
    pub reports: Vec<ReplicationReport>,
    pub failures: Vec<(usize, Error)>,
}

impl ScenarioRun {
    pub fn summary(&self) -> ScenarioSummary {
        summarize(&self.cfg, &self.farm, &self.reports, self.failures.len())
    }
}

pub fn summarize(cfg: &SimConfig, farm: &str, reports: &[ReplicationReport], failed: usize) -> ScenarioSummary {
    let col = |f: &dyn Fn(&ReplicationReport) -> f64| Stat::of(&reports.iter().map(f).collect::<Vec<_>>());
    let n = cfg.scenario.n_nodes as f64;
    let ratios: Vec<f64> = reports
        .iter()
        .map(|r| r.initial().ratio)
        .filter(|x| !x.baseline_zero)
        .map(|x| x.value)
        .collect();
    let k_top = reports.iter().map(|r| r.elbow.len()).max().unwrap_or(0);
    let elbow = (1..=k_top)
        .map(|k| {
            let w: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.elbow.iter().find(|p| p.k == k).map(|p| p.wcss))
                .collect();
            (k, Stat::of(&w))
        })
        .collect();
    let mut cqi_kmeans = vec![0; CQI_LEVELS];
    let mut cqi_crp = vec![0; CQI_LEVELS];
    for r in reports {
        for (acc, v) in cqi_kmeans.iter_mut().zip(&r.initial().kmeans.cqi_histogram) {
            *acc += v;
        }
        for (acc, v) in cqi_crp.iter_mut().zip(&r.initial().crp.cqi_histogram) {
            *acc += v;
        }
    }
    ScenarioSummary {
        scenario_id: cfg.scenario.id.clone(),
        farm: farm.to_string(),
        side_m: cfg.scenario.side_m,
        n_nodes: cfg.scenario.n_nodes,
        replications: reports.len(),
        failed,
        k_star: col(&|r| r.final_k as f64),
        k_initial: col(&|r| r.initial().k_star as f64),
        served_initial: col(&|r| r.initial().kmeans.n_served as f64),
        served_fraction: col(&|r| r.initial().kmeans.n_served as f64 / n),
        feasible_fraction: reports.iter().filter(|r| r.all_feasible).count() as f64 / reports.len().max(1) as f64,
        crp_k: col(&|r| r.initial().crp.k as f64),
        crp_served: col(&|r| r.initial().crp.n_served as f64),
        efficiency_ratio: Stat::of(&ratios),
        ratio_baseline_zero: reports.len() - ratios.len(),
        elbow,
        cqi_kmeans,
        cqi_crp,
    }
}

/// Runs `cfg.n_replications` replications of one scenario.
pub fn run_scenario(cfg: &SimConfig, exec: Exec) -> ScenarioRun {
    let farm = farm_name(cfg);
    let results = exec.map_range(cfg.n_replications, |r| run_replication(cfg, r, Exec::Sequential));
    collect(cfg.clone(), farm, results)
}

fn farm_name(cfg: &SimConfig) -> String {
    cfg.grid
        .farms
        .iter()
        .find(|f| f.side_m == cfg.scenario.side_m)
        .map(|f| f.name.clone())
        .unwrap_or_else(|| format!("{}m", cfg.scenario.side_m))
}

fn collect(cfg: SimConfig, farm: String, results: Vec<Result<ReplicationReport>>) -> ScenarioRun {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                log::error!("{} replication {r} failed: {e}", cfg.scenario.id);
                failures.push((r, e));
            }
        }
    }
    ScenarioRun {
        cfg,
        farm,
        reports,
        failures,
    }
}

/// Every cell of the grid, in farm-major order.
pub fn grid_configs(base: &SimConfig) -> Vec<(String, SimConfig)> {
    base.grid
        .farms
        .iter()
        .flat_map(|farm| {
            base.grid
                .node_counts
                .iter()
                .map(move |&n| (farm.name.clone(), base.for_scenario(farm, n)))
        })
        .collect()
}

#[derive(Debug)]
pub struct Experiment {
    pub base: SimConfig,
    pub runs: Vec<ScenarioRun>,
}

impl Experiment {
    pub fn is_partial(&self) -> bool {
        self.runs.iter().any(|r| !r.failures.is_empty())
    }

    pub fn summaries(&self) -> Vec<ScenarioSummary> {
        self.runs.iter().map(ScenarioRun::summary).collect()
    }

    pub fn find(&self, scenario_id: &str) -> Option<&ScenarioRun> {
        self.runs.iter().find(|r| r.cfg.scenario.id == scenario_id)
    }
}

/// Runs the given scenarios. All `(scenario, replication)` pairs form a
/// single job list so the pool stays busy across cells; results are
/// regrouped in input order, so the output does not depend on `exec`.
pub fn run_experiment(base: &SimConfig, scenarios: Vec<(String, SimConfig)>, exec: Exec) -> Result<Experiment> {
    for (_, cfg) in &scenarios {
        cfg.validate()?;
    }
    // Big scenarios first keeps the tail short.
    let mut jobs: Vec<(usize, usize, f64)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, (_, cfg))| {
            let cost = cfg.scenario.n_nodes as f64 * cfg.scenario.side_m;
            (0..cfg.n_replications).map(move |r| (s, r, cost))
        })
        .collect();
    jobs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let results = exec.map(&jobs, |&(s, r, _)| {
        run_replication(&scenarios[s].1, r, Exec::Sequential)
    });

    let mut per_scenario: Vec<Vec<Option<Result<ReplicationReport>>>> = scenarios
        .iter()
        .map(|(_, cfg)| (0..cfg.n_replications).map(|_| None).collect())
        .collect();
    for (&(s, r, _), res) in jobs.iter().zip(results) {
        per_scenario[s][r] = Some(res);
    }
    let runs = scenarios
        .into_iter()
        .zip(per_scenario)
        .map(|((farm, cfg), slots)| {
            let results = slots.into_iter().map(|s| s.expect("every job ran")).collect();
            collect(cfg, farm, results)
        })
        .collect();
    Ok(Experiment {
        base: base.clone(),
        runs,
    })
}

/// The full default grid.
pub fn run_grid(base: &SimConfig, exec: Exec) -> Result<Experiment> {
    run_experiment(base, grid_configs(base), exec)
}
