//! CSV and JSON writers.
//!
//! Every file is UTF-8 with a header row. Floats use the shortest
//! representation that round-trips, so two runs with the same seed produce
//! identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::clustering::Assignment;
use crate::error::{Error, Result};
use crate::harness::{Experiment, ScenarioSummary};
use crate::planner::{DeploymentEval, EvalSummary, UavBs};
use crate::radio::{access_sinr, LinkBudget, RadioParams, TerrestrialBs, CQI_LEVELS};
use crate::scenario::GroundNode;

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let wrap = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    for row in rows {
        w.serialize(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes headers and raw records, for tables whose width depends on the
/// data.
fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let wrap = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct AssignmentRow {
    node_id: u64,
    x_m: f64,
    y_m: f64,
    label: usize,
}

/// `node_id,x_m,y_m,label`
pub fn write_assignment_csv(path: &Path, nodes: &[GroundNode], assignment: &Assignment) -> Result<()> {
    if nodes.len() != assignment.labels.len() {
        return Err(Error::Argument("assignment does not match the node list".into()));
    }
    write_rows(
        path,
        nodes.iter().zip(&assignment.labels).map(|(n, &label)| AssignmentRow {
            node_id: n.id,
            x_m: n.position.x,
            y_m: n.position.y,
            label,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkTraceRow {
    pub node_id: u64,
    pub uav_id: usize,
    pub serving: bool,
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub rx_dbm: f64,
    pub interference_dbm: f64,
    pub noise_dbm: f64,
    /// SINR the node would see if this UAV served it.
    pub sinr_db: f64,
    pub cqi: u8,
}

/// One row per node and UAV pair.
pub fn link_trace(
    nodes: &[GroundNode],
    labels: &[usize],
    uavs: &[UavBs],
    tier: &[TerrestrialBs],
    radio: &RadioParams,
) -> Result<Vec<LinkTraceRow>> {
    let mut rows = Vec::with_capacity(nodes.len() * uavs.len());
    for (node, &label) in nodes.iter().zip(labels) {
        let antenna = node.antenna();
        for u in uavs {
            let others: Vec<_> = uavs.iter().filter(|o| o.id != u.id).map(|o| o.position).collect();
            let link: LinkBudget = access_sinr(antenna, u.position, &others, tier, radio)?;
            rows.push(LinkTraceRow {
                node_id: node.id,
                uav_id: u.id,
                serving: u.id == label,
                distance_m: antenna.distance(&u.position),
                path_loss_db: link.path_loss_db,
                rx_dbm: link.rx_dbm,
                interference_dbm: link.interference_dbm,
                noise_dbm: link.noise_dbm,
                sinr_db: link.sinr_db,
                cqi: link.cqi,
            });
        }
    }
    Ok(rows)
}

pub fn write_link_trace_csv(path: &Path, rows: &[LinkTraceRow]) -> Result<()> {
    write_rows(path, rows)
}

#[derive(Serialize)]
struct NodeRow {
    node_id: u64,
    x_m: f64,
    y_m: f64,
    serving_uav: usize,
    path_loss_db: f64,
    rx_dbm: f64,
    interference_dbm: f64,
    noise_dbm: f64,
    sinr_db: f64,
    cqi: u8,
    rb_allocated: u32,
    latency_s: f64,
    served: bool,
}

/// One row per node of an evaluated deployment.
pub fn write_deployment_csv(path: &Path, nodes: &[GroundNode], eval: &DeploymentEval) -> Result<()> {
    write_rows(
        path,
        eval.per_node.iter().zip(nodes).map(|(r, n)| NodeRow {
            node_id: r.node_id,
            x_m: n.position.x,
            y_m: n.position.y,
            serving_uav: r.serving_uav,
            path_loss_db: r.link.path_loss_db,
            rx_dbm: r.link.rx_dbm,
            interference_dbm: r.link.interference_dbm,
            noise_dbm: r.link.noise_dbm,
            sinr_db: r.link.sinr_db,
            cqi: r.link.cqi,
            rb_allocated: r.rb_allocated,
            latency_s: r.latency_s,
            served: r.served,
        }),
    )
}

/// JSON document describing one deployment.
#[derive(Debug, Serialize)]
pub struct DeploymentDoc<'a> {
    pub scenario_id: &'a str,
    pub summary: EvalSummary,
    pub uavs: &'a [UavBs],
    pub backhaul: &'a [Option<LinkBudget>],
}

pub fn write_deployment_json(path: &Path, scenario_id: &str, eval: &DeploymentEval) -> Result<()> {
    write_json(
        path,
        &DeploymentDoc {
            scenario_id,
            summary: eval.summary(),
            uavs: &eval.uavs,
            backhaul: &eval.backhaul,
        },
    )
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    scenario_id: &'a str,
    farm: &'a str,
    side_m: f64,
    n_nodes: usize,
    replications: usize,
    failed: usize,
    k_star_mean: f64,
    k_star_std: f64,
    k_star_min: f64,
    k_star_max: f64,
    k_initial_mean: f64,
    served_initial_mean: f64,
    served_fraction_mean: f64,
    feasible_fraction: f64,
    crp_k_mean: f64,
    crp_served_mean: f64,
    efficiency_ratio_mean: f64,
    ratio_baseline_zero: usize,
}

impl<'a> From<&'a ScenarioSummary> for SummaryRow<'a> {
    fn from(s: &'a ScenarioSummary) -> Self {
        SummaryRow {
            scenario_id: &s.scenario_id,
            farm: &s.farm,
            side_m: s.side_m,
            n_nodes: s.n_nodes,
            replications: s.replications,
            failed: s.failed,
            k_star_mean: s.k_star.mean,
            k_star_std: s.k_star.std,
            k_star_min: s.k_star.min,
            k_star_max: s.k_star.max,
            k_initial_mean: s.k_initial.mean,
            served_initial_mean: s.served_initial.mean,
            served_fraction_mean: s.served_fraction.mean,
            feasible_fraction: s.feasible_fraction,
            crp_k_mean: s.crp_k.mean,
            crp_served_mean: s.crp_served.mean,
            efficiency_ratio_mean: s.efficiency_ratio.mean,
            ratio_baseline_zero: s.ratio_baseline_zero,
        }
    }
}

#[derive(Serialize)]
struct ReplicationRow<'a> {
    scenario_id: &'a str,
    replication: usize,
    seed: u64,
    final_k: usize,
    all_feasible: bool,
    k_initial: usize,
    served_initial: usize,
    crp_k: usize,
    crp_served: usize,
    efficiency_ratio: f64,
}

#[derive(Serialize)]
struct ElbowRow<'a> {
    scenario_id: &'a str,
    k: usize,
    wcss_mean: f64,
    wcss_std: f64,
    replications: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    master_seed: u64,
    seed_rule: &'static str,
    population: &'static str,
    k_reported: &'static str,
    partial: bool,
    scenarios: Vec<&'a str>,
    failures: Vec<String>,
    files: Vec<ManifestFile>,
    config: serde_json::Value,
}

#[derive(Serialize)]
struct ManifestFile {
    name: &'static str,
    description: &'static str,
}

pub const REPORT_FILES: [(&str, &str); 6] = [
    (
        "summary.csv",
        "one row per scenario: aggregate UAV counts, service, and baseline comparison",
    ),
    ("replications.csv", "one row per scenario and replication"),
    ("elbow.csv", "mean WCSS per scenario and k on the initial snapshot"),
    (
        "cqi_histogram.csv",
        "CQI counts on the initial snapshot, summed over replications",
    ),
    ("summary.json", "the summary rows with full statistics"),
    ("manifest.json", "this file"),
];

/// Writes every aggregate report into `dir` and returns the paths.
pub fn write_reports(dir: &Path, exp: &Experiment) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summaries = exp.summaries();
    let path = |name: &str| dir.join(name);

    write_rows(&path("summary.csv"), summaries.iter().map(SummaryRow::from))?;

    let reps = exp.runs.iter().flat_map(|run| {
        run.reports.iter().map(|r| {
            let init = r.initial();
            ReplicationRow {
                scenario_id: &r.scenario_id,
                replication: r.replication,
                seed: r.seed,
                final_k: r.final_k,
                all_feasible: r.all_feasible,
                k_initial: init.k_star,
                served_initial: init.kmeans.n_served,
                crp_k: init.crp.k,
                crp_served: init.crp.n_served,
                efficiency_ratio: init.ratio.value,
            }
        })
    });
    write_rows(&path("replications.csv"), reps)?;

    let elbow = summaries.iter().flat_map(|s| {
        s.elbow.iter().map(move |(k, st)| ElbowRow {
            scenario_id: &s.scenario_id,
            k: *k,
            wcss_mean: st.mean,
            wcss_std: st.std,
            replications: st.n,
        })
    });
    write_rows(&path("elbow.csv"), elbow)?;

    let mut header = vec!["scenario_id".to_string(), "method".to_string()];
    header.extend((0..CQI_LEVELS).map(|c| format!("cqi_{c}")));
    let mut rows = Vec::new();
    for s in &summaries {
        for (method, counts) in [("kmeans", &s.cqi_kmeans), ("crp", &s.cqi_crp)] {
            let mut row = vec![s.scenario_id.clone(), method.to_string()];
            row.extend(counts.iter().map(|c| c.to_string()));
            rows.push(row);
        }
    }
    write_table(&path("cqi_histogram.csv"), &header, &rows)?;

    write_json(&path("summary.json"), &summaries)?;

    let failures = exp
        .runs
        .iter()
        .flat_map(|run| {
            run.failures
                .iter()
                .map(move |(r, e)| format!("{} replication {r}: {e}", run.cfg.scenario.id))
        })
        .collect();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: exp.base.master_seed,
        seed_rule: "replication r of scenario s uses master_seed XOR splitmix64(fnv1a(s) + r)",
        population: "node positions, services, and mobility are redrawn for every replication",
        k_reported: "largest selected UAV count over all reclustering epochs",
        partial: exp.is_partial(),
        scenarios: exp.runs.iter().map(|r| r.cfg.scenario.id.as_str()).collect(),
        failures,
        files: REPORT_FILES
            .iter()
            .map(|&(name, description)| ManifestFile { name, description })
            .collect(),
        config: serde_json::to_value(&exp.base).map_err(|e| Error::Serialize(e.to_string()))?,
    };
    write_json(&path("manifest.json"), &manifest)?;

    Ok(REPORT_FILES.iter().map(|(n, _)| path(n)).collect())
}

/// `scenario_id,k,wcss` for a single elbow scan.
pub fn write_elbow_csv(path: &Path, scenario_id: &str, scan: &[crate::clustering::ElbowPoint]) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        scenario_id: &'a str,
        k: usize,
        wcss: f64,
    }
    write_rows(
        path,
        scan.iter().map(|p| Row {
            scenario_id,
            k: p.k,
            wcss: p.wcss,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub scenario_id: String,
    pub replication: usize,
    pub kmeans_k: usize,
    pub kmeans_served: usize,
    pub crp_k: usize,
    pub crp_served: usize,
    pub efficiency_ratio: f64,
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    write_rows(path, rows)
}
