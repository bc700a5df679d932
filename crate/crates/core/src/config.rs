//! Simulation configuration and the TOML document that carries it.
//!
//! Every field has a default, so an empty document is a valid config. See
//! `configs/default.toml` at the repository root for the annotated schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mobility::MobilityBounds;
use crate::radio::RadioParams;

/// A class of traffic carried by ground nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceClass {
    pub name: String,
    /// Resource blocks the node transmits on while sending one report.
    pub rb_demand: u32,
    pub packet_bits: f64,
    /// Largest tolerable per-report delay.
    pub deadline_s: f64,
}

impl ServiceClass {
    pub fn validate(&self) -> Result<()> {
        if self.rb_demand < 1 {
            return Err(Error::validation(
                "service_mix.rb_demand",
                format!("class `{}` needs at least 1 RB", self.name),
            ));
        }
        if !(self.packet_bits > 0.0 && self.packet_bits.is_finite()) {
            return Err(Error::validation(
                "service_mix.packet_bits",
                format!("class `{}`: must be positive", self.name),
            ));
        }
        if !(self.deadline_s > 0.0 && self.deadline_s.is_finite()) {
            return Err(Error::validation(
                "service_mix.deadline_s",
                format!("class `{}`: must be positive", self.name),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceShare {
    #[serde(flatten)]
    pub class: ServiceClass,
    pub fraction: f64,
}

pub fn default_service_mix() -> Vec<ServiceShare> {
    vec![
        ServiceShare {
            class: ServiceClass {
                name: "gps-tracking".into(),
                rb_demand: 1,
                packet_bits: 4_000.0,
                deadline_s: 1.0,
            },
            fraction: 0.7,
        },
        ServiceShare {
            class: ServiceClass {
                name: "health-telemetry".into(),
                rb_demand: 2,
                packet_bits: 16_000.0,
                deadline_s: 0.5,
            },
            fraction: 0.3,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FarmScenario {
    pub id: String,
    pub side_m: f64,
    /// On-farm terrestrial BS. `None` places it at the farm centre.
    pub bs_position: Option<Point2>,
    pub bs_height_m: f64,
    pub n_nodes: usize,
    pub service_mix: Vec<ServiceShare>,
    /// Adds a ring of six co-channel terrestrial BSs around the on-farm BS.
    pub neighbor_tier_enabled: bool,
    /// Ring radius. `None` means three farm sides.
    pub neighbor_tier_distance_m: Option<f64>,
}

impl Default for FarmScenario {
    fn default() -> Self {
        Self {
            id: "small".into(),
            side_m: 1000.0,
            bs_position: None,
            bs_height_m: 100.0,
            n_nodes: 100,
            service_mix: default_service_mix(),
            neighbor_tier_enabled: DEFAULT_NEIGHBOR_TIER_ENABLED,
            neighbor_tier_distance_m: DEFAULT_NEIGHBOR_TIER_DISTANCE_M,
        }
    }
}

pub const DEFAULT_NEIGHBOR_TIER_ENABLED: bool = true;
pub const DEFAULT_NEIGHBOR_TIER_DISTANCE_M: Option<f64> = Some(5000.0);

impl FarmScenario {
    pub fn bs_position(&self) -> Point2 {
        self.bs_position
            .unwrap_or(Point2::new(self.side_m / 2.0, self.side_m / 2.0))
    }

    pub fn neighbor_tier_distance(&self) -> f64 {
        self.neighbor_tier_distance_m.unwrap_or(3.0 * self.side_m)
    }

    pub fn contains(&self, p: &Point2) -> bool {
        (0.0..=self.side_m).contains(&p.x) && (0.0..=self.side_m).contains(&p.y)
    }

    /// Same scenario on a farm of a different size and population.
    pub fn resized(&self, id: impl Into<String>, side_m: f64, n_nodes: usize) -> Self {
        let mut s = self.clone();
        s.id = id.into();
        s.side_m = side_m;
        s.n_nodes = n_nodes;
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_m > 0.0 && self.side_m.is_finite()) {
            return Err(Error::validation(
                "scenario.side_m",
                format!("must be positive, got {}", self.side_m),
            ));
        }
        if !self.contains(&self.bs_position()) {
            return Err(Error::validation(
                "scenario.bs_position",
                "must lie inside the farm square",
            ));
        }
        if !(self.bs_height_m > 0.0) {
            return Err(Error::validation("scenario.bs_height_m", "must be positive"));
        }
        if self.n_nodes < 1 {
            return Err(Error::validation("scenario.n_nodes", "must be at least 1"));
        }
        if self.service_mix.is_empty() {
            return Err(Error::validation(
                "scenario.service_mix",
                "at least one service class is required",
            ));
        }
        let mut total = 0.0;
        for share in &self.service_mix {
            share.class.validate()?;
            if !(share.fraction >= 0.0) {
                return Err(Error::validation(
                    "service_mix.fraction",
                    format!("class `{}`: negative share", share.class.name),
                ));
            }
            total += share.fraction;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "scenario.service_mix",
                format!("fractions sum to {total}, expected 1"),
            ));
        }
        if !(self.neighbor_tier_distance() > 0.0) {
            return Err(Error::validation(
                "scenario.neighbor_tier_distance_m",
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// k-means solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansSettings {
    pub n_init: usize,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid move, meters.
    pub tol: f64,
}

impl Default for KMeansSettings {
    fn default() -> Self {
        Self {
            n_init: 10,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrpSettings {
    pub a: f64,
    /// Distance decay scale. `None` means a quarter of the farm side.
    pub lambda_m: Option<f64>,
}

impl Default for CrpSettings {
    fn default() -> Self {
        Self {
            a: 2.0,
            lambda_m: Some(1000.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    /// Lowest CQI that counts as a usable link.
    pub cqi_min: u8,
    /// Also require every UAV's backhaul CQI to reach `cqi_min`.
    pub gate_backhaul: bool,
    /// Length of one scheduling round. A transmission must fit inside it to
    /// be granted blocks.
    pub scheduling_window_s: f64,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self {
            cqi_min: 1,
            gate_backhaul: false,
            scheduling_window_s: 1.0,
        }
    }
}

/// A named farm size in the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarmSize {
    pub name: String,
    pub side_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub farms: Vec<FarmSize>,
    pub node_counts: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            farms: vec![
                FarmSize {
                    name: "small".into(),
                    side_m: 1000.0,
                },
                FarmSize {
                    name: "medium".into(),
                    side_m: 2000.0,
                },
                FarmSize {
                    name: "large".into(),
                    side_m: 5000.0,
                },
            ],
            node_counts: vec![50, 100, 200, 500, 800, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub master_seed: u64,
    pub n_replications: usize,
    pub k_max: usize,
    pub coverage_target: f64,
    pub dt_s: f64,
    pub horizon_s: f64,
    pub recluster_period_s: f64,
    /// CQI threshold file replacing `radio.cqi_thresholds_db`. Relative
    /// paths resolve against the directory of the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cqi_table: Option<PathBuf>,
    pub scenario: FarmScenario,
    pub mobility: MobilityBounds,
    pub radio: RadioParams,
    pub planner: PlannerSettings,
    pub kmeans: KMeansSettings,
    pub crp: CrpSettings,
    pub grid: GridSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            master_seed: 2022,
            n_replications: 30,
            k_max: 30,
            coverage_target: 0.95,
            dt_s: 1.0,
            horizon_s: 600.0,
            recluster_period_s: 30.0,
            cqi_table: None,
            scenario: FarmScenario::default(),
            mobility: MobilityBounds::default(),
            radio: RadioParams::default(),
            planner: PlannerSettings::default(),
            kmeans: KMeansSettings::default(),
            crp: CrpSettings::default(),
            grid: GridSpec::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) {
            return Err(Error::validation("dt_s", "must be positive"));
        }
        if !(self.dt_s <= self.recluster_period_s) {
            return Err(Error::validation("recluster_period_s", "must be at least dt_s"));
        }
        if !(self.recluster_period_s <= self.horizon_s) {
            return Err(Error::validation("horizon_s", "must be at least recluster_period_s"));
        }
        if !is_multiple(self.recluster_period_s, self.dt_s) {
            return Err(Error::validation(
                "recluster_period_s",
                "must be an integer multiple of dt_s",
            ));
        }
        if !(self.coverage_target > 0.0 && self.coverage_target <= 1.0) {
            return Err(Error::validation(
                "coverage_target",
                format!("must lie in (0, 1], got {}", self.coverage_target),
            ));
        }
        if self.k_max < 1 {
            return Err(Error::validation("k_max", "must be at least 1"));
        }
        if self.n_replications < 1 {
            return Err(Error::validation("n_replications", "must be at least 1"));
        }
        if self.kmeans.n_init < 1 || self.kmeans.max_iter < 1 || !(self.kmeans.tol >= 0.0) {
            return Err(Error::validation(
                "kmeans",
                "n_init and max_iter must be >= 1, tol >= 0",
            ));
        }
        if !(self.crp.a > 0.0) {
            return Err(Error::validation("crp.a", "must be positive"));
        }
        if let Some(l) = self.crp.lambda_m {
            if !(l > 0.0) {
                return Err(Error::validation("crp.lambda_m", "must be positive"));
            }
        }
        if !(self.planner.scheduling_window_s > 0.0 && self.planner.scheduling_window_s.is_finite()) {
            return Err(Error::validation("planner.scheduling_window_s", "must be positive"));
        }
        if usize::from(self.planner.cqi_min) >= crate::radio::CQI_LEVELS {
            return Err(Error::validation("planner.cqi_min", "must be at most 14"));
        }
        if self.grid.farms.iter().any(|f| !(f.side_m > 0.0)) || self.grid.node_counts.contains(&0) {
            return Err(Error::validation("grid", "farm sides and node counts must be positive"));
        }
        self.scenario.validate()?;
        self.mobility.validate()?;
        self.radio.validate()?;
        if (self.radio.bs_height_m - self.scenario.bs_height_m).abs() > 0.0 {
            return Err(Error::validation(
                "radio.bs_height_m",
                "must equal scenario.bs_height_m (set one or both to the same value)",
            ));
        }
        Ok(())
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(src: &str, origin: &Path) -> Result<Self> {
        let mut cfg: SimConfig = toml::from_str(src).map_err(|e| Error::ConfigParse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.harmonize(src);
        if let Some(table) = &cfg.cqi_table {
            let path = origin.parent().unwrap_or(Path::new("")).join(table);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            cfg.radio.cqi_thresholds_db = crate::radio::parse_cqi_table(&text)?;
        }
        if cfg.mobility.direction_interval_deg.is_some() {
            log::warn!(
                "mobility.direction_interval_deg is accepted but ignored: nodes follow Random Waypoint, which picks destinations, not headings"
            );
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Copies the BS height set in one section to the other when only one
    /// of them appears in the document.
    fn harmonize(&mut self, src: &str) {
        let doc: toml::Table = match src.parse() {
            Ok(t) => t,
            Err(_) => return,
        };
        let has = |section: &str| {
            doc.get(section)
                .and_then(|s| s.as_table())
                .is_some_and(|t| t.contains_key("bs_height_m"))
        };
        match (has("scenario"), has("radio")) {
            (true, false) => self.radio.bs_height_m = self.scenario.bs_height_m,
            (false, true) => self.scenario.bs_height_m = self.radio.bs_height_m,
            _ => {}
        }
    }

    /// Config for one cell of the experiment grid.
    pub fn for_scenario(&self, farm: &FarmSize, n_nodes: usize) -> SimConfig {
        let mut cfg = self.clone();
        cfg.scenario = self
            .scenario
            .resized(format!("{}-{}", farm.name, n_nodes), farm.side_m, n_nodes);
        cfg
    }

    /// Resolves `name` (`small`, `medium-500`, ...) against the grid.
    pub fn named_scenario(&self, name: &str) -> Result<SimConfig> {
        let (farm_name, count) = match name.rsplit_once('-') {
            Some((f, n)) if n.chars().all(|c| c.is_ascii_digit()) && !n.is_empty() => {
                (f, Some(n.parse::<usize>().map_err(|e| Error::Argument(e.to_string()))?))
            }
            _ => (name, None),
        };
        let farm = self
            .grid
            .farms
            .iter()
            .find(|f| f.name == farm_name)
            .ok_or_else(|| Error::Argument(format!("unknown scenario `{name}`")))?;
        let cfg = self.for_scenario(farm, count.unwrap_or(self.scenario.n_nodes));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn epoch_count(&self) -> usize {
        (self.horizon_s / self.recluster_period_s + 1e-9).floor() as usize + 1
    }

    pub fn crp_lambda_m(&self) -> f64 {
        self.crp.lambda_m.unwrap_or(self.scenario.side_m / 4.0)
    }
}

pub(crate) fn is_multiple(duration: f64, step: f64) -> bool {
    let ratio = duration / step;
    (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0)
}

/// Loads and validates a config file.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimConfig::from_toml_str(&src, path)
}
