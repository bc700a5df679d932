//! `uavbs`: command-line front end for the UAV base-station planner.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uavbs_core::clustering::{distinct_count, elbow_scan};
use uavbs_core::export;
use uavbs_core::harness::{grid_configs, run_experiment};
use uavbs_core::planner::{efficiency_ratio, positions, Planner};
use uavbs_core::scenario::generate_nodes;
use uavbs_core::seed::{child_seed, replication_seed, Stream};
use uavbs_core::{load_config, Error, Exec, SimConfig};

#[derive(Parser, Debug)]
#[command(
    name = "uavbs",
    version,
    about = "Size UAV base-station fleets for mobile IoT nodes on a farm"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Replications per scenario, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    reps: Option<usize>,
    /// Output directory.
    #[arg(
        long,
        global = true,
        value_name = "DIR",
        env = "UAVBS_OUT_DIR",
        default_value = "out"
    )]
    out: PathBuf,
    /// Scenario such as `small-100` or `medium` (farm size with the
    /// config's node count). `run` accepts it several times.
    #[arg(long, global = true, value_name = "NAME")]
    scenario: Vec<String>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replicated experiment over the grid (or the named scenarios).
    Run,
    /// Plan one snapshot and export the chosen deployment.
    Plan,
    /// WCSS against UAV count on the initial snapshot.
    Elbow,
    /// k-means planner against the CRP baseline.
    Compare,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            let doc = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{doc}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Error> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => load_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = c.reps {
        cfg.n_replications = r;
    }
    cfg.validate()?;
    let exec = if c.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Run => run(&cfg, &c.scenario, &c.out, exec),
        Command::Plan => plan(&single(&cfg, &c.scenario)?, &c.out, exec),
        Command::Elbow => elbow(&single(&cfg, &c.scenario)?, &c.out, exec),
        Command::Compare => compare(&single(&cfg, &c.scenario)?, &c.out, exec),
    }
}

/// The one scenario a snapshot command works on: the named one, or the
/// config's own scenario.
fn single(cfg: &SimConfig, names: &[String]) -> Result<SimConfig, Error> {
    match names {
        [] => Ok(cfg.clone()),
        [name] => cfg.named_scenario(name),
        _ => Err(Error::Argument("this command takes at most one --scenario".into())),
    }
}

fn run(cfg: &SimConfig, names: &[String], out: &Path, exec: Exec) -> Result<ExitCode, Error> {
    let scenarios = if names.is_empty() {
        grid_configs(cfg)
    } else {
        names
            .iter()
            .map(|n| {
                let s = cfg.named_scenario(n)?;
                let farm = n.split('-').next().unwrap_or(n).to_string();
                Ok((farm, s))
            })
            .collect::<Result<_, Error>>()?
    };
    log::info!(
        "running {} scenario(s) x {} replication(s)",
        scenarios.len(),
        cfg.n_replications
    );
    let exp = run_experiment(cfg, scenarios, exec)?;
    let files = export::write_reports(out, &exp)?;
    for s in exp.summaries() {
        log::info!(
            "{}: mean k* {:.2} (sd {:.2}), CRP k {:.2}, efficiency ratio {:.2}",
            s.scenario_id,
            s.k_star.mean,
            s.k_star.std,
            s.crp_k.mean,
            s.efficiency_ratio.mean
        );
    }
    for f in files {
        println!("{}", f.display());
    }
    if exp.is_partial() {
        let failed: Vec<String> = exp
            .runs
            .iter()
            .flat_map(|r| {
                r.failures
                    .iter()
                    .map(move |(i, e)| format!("{}#{i}: {e}", r.cfg.scenario.id))
            })
            .collect();
        let doc = serde_json::json!({ "error": { "kind": "partial", "message": "some replications failed", "failures": failed } });
        eprintln!("{doc}");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn plan(cfg: &SimConfig, out: &Path, exec: Exec) -> Result<ExitCode, Error> {
    let seed = replication_seed(cfg.master_seed, &cfg.scenario.id, 0);
    let nodes = generate_nodes(cfg, seed);
    let planner = Planner::new(cfg, exec);
    let selection = planner.select_uav_count(&nodes, child_seed(seed, Stream::KMeans, 0))?;
    let eval = selection.chosen();
    let id = &cfg.scenario.id;
    log::info!(
        "{id}: k* = {} ({}), {} of {} nodes served",
        selection.k_star,
        if selection.feasible {
            "feasible"
        } else {
            "coverage target missed"
        },
        eval.n_served,
        nodes.len()
    );
    export::write_assignment_csv(&out.join("assignment.csv"), &nodes, &eval.assignment)?;
    let trace = export::link_trace(
        &nodes,
        &eval.assignment.labels,
        &eval.uavs,
        planner.interfering_bs(),
        &cfg.radio,
    )?;
    export::write_link_trace_csv(&out.join("link_trace.csv"), &trace)?;
    export::write_deployment_csv(&out.join("deployment.csv"), &nodes, eval)?;
    export::write_deployment_json(&out.join("deployment.json"), id, eval)?;
    let sweep: Vec<_> = selection.evals.iter().map(|e| e.summary()).collect();
    export::write_json(&out.join("sweep.json"), &sweep)?;
    for name in [
        "assignment.csv",
        "link_trace.csv",
        "deployment.csv",
        "deployment.json",
        "sweep.json",
    ] {
        println!("{}", out.join(name).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn elbow(cfg: &SimConfig, out: &Path, exec: Exec) -> Result<ExitCode, Error> {
    let seed = replication_seed(cfg.master_seed, &cfg.scenario.id, 0);
    let nodes = generate_nodes(cfg, seed);
    let points = positions(&nodes);
    let ks: Vec<usize> = (1..=cfg.k_max.min(distinct_count(&points))).collect();
    let scan = elbow_scan(&points, &ks, child_seed(seed, Stream::Elbow, 0), &cfg.kmeans, exec)?;
    let path = out.join("elbow.csv");
    export::write_elbow_csv(&path, &cfg.scenario.id, &scan)?;
    for p in &scan {
        log::info!("k = {:>2}: WCSS {:.4e}", p.k, p.wcss);
    }
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn compare(cfg: &SimConfig, out: &Path, exec: Exec) -> Result<ExitCode, Error> {
    let planner = Planner::new(cfg, exec);
    let mut rows = Vec::with_capacity(cfg.n_replications);
    for r in 0..cfg.n_replications {
        let seed = replication_seed(cfg.master_seed, &cfg.scenario.id, r as u64);
        let nodes = generate_nodes(cfg, seed);
        let sel = planner.select_uav_count(&nodes, child_seed(seed, Stream::KMeans, 0))?;
        let crp = planner.evaluate_crp_deployment(&nodes, child_seed(seed, Stream::Crp, 0))?;
        let ratio = efficiency_ratio(sel.chosen(), &crp);
        rows.push(export::CompareRow {
            scenario_id: cfg.scenario.id.clone(),
            replication: r,
            kmeans_k: sel.k_star,
            kmeans_served: sel.chosen().n_served,
            crp_k: crp.k,
            crp_served: crp.n_served,
            efficiency_ratio: ratio.value,
        });
    }
    let path = out.join("compare.csv");
    export::write_compare_csv(&path, &rows)?;
    let n = rows.len() as f64;
    let finite: Vec<f64> = rows
        .iter()
        .map(|r| r.efficiency_ratio)
        .filter(|v| v.is_finite())
        .collect();
    log::info!(
        "{}: k-means k {:.2}, CRP k {:.2}, mean efficiency ratio {:.2}",
        cfg.scenario.id,
        rows.iter().map(|r| r.kmeans_k as f64).sum::<f64>() / n,
        rows.iter().map(|r| r.crp_k as f64).sum::<f64>() / n,
        finite.iter().sum::<f64>() / finite.len().max(1) as f64
    );
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}
