//! Propagation and link-quality math.
//!
//! Ground access links (UAV to node) use the Okumura-Hata small-city model
//! with the open-area correction; backhaul links (terrestrial BS to UAV) use
//! a log-distance gain `omega * d^-eta`. Powers are carried in dBm at the API
//! boundary and summed in milliwatts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;
pub const CQI_LEVELS: usize = 15;

const HATA_MIN_MHZ: f64 = 150.0;
const HATA_MAX_MHZ: f64 = 1500.0;

const CQI_TABLE_SRC: &str = include_str!("../data/cqi_thresholds.csv");

/// Parses the shipped CQI threshold table.
pub fn default_cqi_thresholds() -> Vec<f64> {
    parse_cqi_table(CQI_TABLE_SRC).expect("shipped CQI table is well formed")
}

/// Parses a CQI table: one dB value per line, `#` comments allowed.
pub fn parse_cqi_table(src: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(CQI_LEVELS - 1);
    for (i, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::validation("cqi_thresholds_db", format!("line {}: `{line}` is not a number", i + 1)))?;
        out.push(v);
    }
    validate_cqi_thresholds(&out)?;
    Ok(out)
}

pub fn validate_cqi_thresholds(t: &[f64]) -> Result<()> {
    if t.len() != CQI_LEVELS - 1 {
        return Err(Error::validation(
            "cqi_thresholds_db",
            format!("expected {} thresholds, got {}", CQI_LEVELS - 1, t.len()),
        ));
    }
    if t.iter().any(|v| !v.is_finite()) || t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation(
            "cqi_thresholds_db",
            "thresholds must be finite and strictly ascending",
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub f_mhz: f64,
    pub bs_tx_dbm: f64,
    pub uav_tx_dbm: f64,
    pub bs_height_m: f64,
    pub uav_height_m: f64,
    pub node_height_m: f64,
    /// Path-loss exponent of the BS/UAV log-distance model.
    pub eta: f64,
    /// Linear path gain at 1 m for the BS/UAV model. `None` selects the
    /// free-space value `(c / (4 pi f))^2`.
    pub omega_ref: Option<f64>,
    pub antenna_gain_db: f64,
    pub noise_figure_db: f64,
    pub channel_bw_hz: f64,
    pub rb_bw_hz: f64,
    pub rb_per_channel: u32,
    pub cqi_thresholds_db: Vec<f64>,
    pub d_min_separation_m: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            f_mhz: 1500.0,
            bs_tx_dbm: 45.0,
            uav_tx_dbm: 20.0,
            bs_height_m: 100.0,
            uav_height_m: 100.0,
            node_height_m: 1.5,
            eta: 2.0,
            omega_ref: None,
            antenna_gain_db: 0.0,
            noise_figure_db: 9.0,
            channel_bw_hz: 20e6,
            rb_bw_hz: 180e3,
            rb_per_channel: 8,
            cqi_thresholds_db: default_cqi_thresholds(),
            d_min_separation_m: 200.0,
        }
    }
}

impl RadioParams {
    pub fn omega(&self) -> f64 {
        self.omega_ref.unwrap_or_else(|| free_space_omega(self.f_mhz))
    }

    pub fn validate(&self) -> Result<()> {
        if !(HATA_MIN_MHZ..=HATA_MAX_MHZ).contains(&self.f_mhz) {
            return Err(Error::validation(
                "radio.f_mhz",
                format!("{} MHz outside [150, 1500]", self.f_mhz),
            ));
        }
        for (field, v) in [
            ("radio.bs_height_m", self.bs_height_m),
            ("radio.uav_height_m", self.uav_height_m),
            ("radio.node_height_m", self.node_height_m),
            ("radio.channel_bw_hz", self.channel_bw_hz),
            ("radio.rb_bw_hz", self.rb_bw_hz),
            ("radio.eta", self.eta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(field, format!("must be positive, got {v}")));
            }
        }
        if let Some(w) = self.omega_ref {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::validation(
                    "radio.omega_ref",
                    format!("must be positive, got {w}"),
                ));
            }
        }
        if self.rb_per_channel == 0 {
            return Err(Error::validation("radio.rb_per_channel", "must be at least 1"));
        }
        if f64::from(self.rb_per_channel) * self.rb_bw_hz > self.channel_bw_hz * (1.0 + 1e-12) {
            return Err(Error::validation(
                "radio.rb_per_channel",
                format!(
                    "{} RBs of {} Hz exceed the {} Hz channel",
                    self.rb_per_channel, self.rb_bw_hz, self.channel_bw_hz
                ),
            ));
        }
        if !(self.d_min_separation_m >= 0.0) {
            return Err(Error::validation("radio.d_min_separation_m", "must be non-negative"));
        }
        validate_cqi_thresholds(&self.cqi_thresholds_db)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// `(c / (4 pi f))^2`: free-space path gain at 1 m.
pub fn free_space_omega(f_mhz: f64) -> f64 {
    let lambda_over_4pi = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f_mhz * 1e6);
    lambda_over_4pi * lambda_over_4pi
}

/// Hata model specialised for one frequency and antenna-height pair:
/// `PL = intercept + slope * log10(d_km)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HataModel {
    intercept_db: f64,
    slope_db: f64,
}

impl HataModel {
    pub fn new(f_mhz: f64, tx_height_m: f64, rx_height_m: f64) -> Result<Self> {
        if !(HATA_MIN_MHZ..=HATA_MAX_MHZ).contains(&f_mhz) {
            return Err(Error::Domain(format!(
                "Hata model frequency {f_mhz} MHz outside [150, 1500]"
            )));
        }
        if !(tx_height_m > 0.0 && rx_height_m > 0.0) {
            return Err(Error::Domain(format!(
                "antenna heights must be positive (tx {tx_height_m} m, rx {rx_height_m} m)"
            )));
        }
        let lf = f_mhz.log10();
        let lh = tx_height_m.log10();
        // small/medium city mobile-antenna correction
        let a_hm = (1.1 * lf - 0.7) * rx_height_m - (1.56 * lf - 0.8);
        let urban = 69.55 + 26.16 * lf - 13.82 * lh - a_hm;
        // open-area correction; linear 18.33 log f term
        let open = -4.78 * lf * lf + 18.33 * lf - 40.94;
        Ok(Self {
            intercept_db: urban + open,
            slope_db: 44.9 - 6.55 * lh,
        })
    }

    /// Path loss in dB at `distance_m` (>= 1 m). Sub-kilometre distances
    /// extrapolate the same log-distance law.
    pub fn loss_db(&self, distance_m: f64) -> f64 {
        self.intercept_db + self.slope_db * (distance_m / 1000.0).log10()
    }

    pub fn slope_db_per_decade(&self) -> f64 {
        self.slope_db
    }
}

/// Okumura-Hata open-area path loss in dB.
pub fn hata_path_loss(f_mhz: f64, distance_m: f64, tx_height_m: f64, rx_height_m: f64) -> Result<f64> {
    if !(distance_m >= 1.0) {
        return Err(Error::Domain(format!("Hata distance {distance_m} m below 1 m")));
    }
    Ok(HataModel::new(f_mhz, tx_height_m, rx_height_m)?.loss_db(distance_m))
}

/// Linear path gain `omega_ref * d^-eta`.
pub fn free_space_gain(distance_m: f64, eta: f64, omega_ref: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance_m}")));
    }
    Ok(omega_ref * distance_m.powf(-eta))
}

pub fn noise_power_dbm(bw_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bw_hz.log10() + noise_figure_db
}

/// Number of thresholds strictly below `sinr_db`.
pub fn cqi_from_sinr(sinr_db: f64, thresholds: &[f64]) -> u8 {
    thresholds.partition_point(|&t| t < sinr_db) as u8
}

/// Shannon capacity `bw * log2(1 + sinr)` in bit/s.
pub fn shannon_throughput(bw_hz: f64, sinr_linear: f64) -> f64 {
    bw_hz * sinr_linear.ln_1p() / std::f64::consts::LN_2
}

/// One link's power budget. `interference_dbm` is `-inf` when no interferer
/// contributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub tx_dbm: f64,
    pub antenna_gain_db: f64,
    pub path_loss_db: f64,
    pub rx_dbm: f64,
    pub interference_dbm: f64,
    pub noise_dbm: f64,
    pub sinr_db: f64,
    pub cqi: u8,
}

impl LinkBudget {
    fn from_powers(
        tx_dbm: f64,
        antenna_gain_db: f64,
        path_loss_db: f64,
        interference_mw: f64,
        noise_dbm: f64,
        thresholds: &[f64],
    ) -> Self {
        let rx_dbm = tx_dbm + antenna_gain_db - path_loss_db;
        let sinr_lin = dbm_to_mw(rx_dbm) / (interference_mw + dbm_to_mw(noise_dbm));
        let sinr_db = linear_to_db(sinr_lin);
        Self {
            tx_dbm,
            antenna_gain_db,
            path_loss_db,
            rx_dbm,
            interference_dbm: mw_to_dbm(interference_mw),
            noise_dbm,
            sinr_db,
            cqi: cqi_from_sinr(sinr_db, thresholds),
        }
    }

    pub fn sinr_linear(&self) -> f64 {
        db_to_linear(self.sinr_db)
    }
}

/// A terrestrial base station: position (antenna height in `z`) and power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrestrialBs {
    pub position: Point3,
    pub tx_dbm: f64,
}

fn ensure_distinct(rx: &Point3, tx: &Point3, what: &str) -> Result<f64> {
    let d = rx.distance(tx);
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::Domain(format!("{what} coincides with the receiver")))
    }
}

/// SINR at a UAV on its backhaul link from the terrestrial BS. Every term
/// uses the log-distance gain; noise is taken over the full channel.
pub fn backhaul_sinr(
    uav: Point3,
    bs: &TerrestrialBs,
    interfering_bs: &[TerrestrialBs],
    interfering_uavs: &[Point3],
    params: &RadioParams,
) -> Result<LinkBudget> {
    let omega = params.omega();
    let gain = |tx: &Point3, what: &str| -> Result<f64> {
        free_space_gain(ensure_distinct(&uav, tx, what)?, params.eta, omega)
    };
    let path_loss_db = -linear_to_db(gain(&bs.position, "serving BS")?);
    let g = db_to_linear(params.antenna_gain_db);
    let mut interference_mw = 0.0;
    for other in interfering_bs {
        interference_mw += dbm_to_mw(other.tx_dbm) * g * gain(&other.position, "interfering BS")?;
    }
    let uav_tx_mw = dbm_to_mw(params.uav_tx_dbm);
    for other in interfering_uavs {
        interference_mw += uav_tx_mw * g * gain(other, "interfering UAV")?;
    }
    Ok(LinkBudget::from_powers(
        bs.tx_dbm,
        params.antenna_gain_db,
        path_loss_db,
        interference_mw,
        noise_power_dbm(params.channel_bw_hz, params.noise_figure_db),
        &params.cqi_thresholds_db,
    ))
}

/// SINR at a ground node served by `serving_uav`. Signal and all
/// interferers follow the Hata model over 3-D slant distance; noise is taken
/// over one resource block.
pub fn access_sinr(
    node: Point3,
    serving_uav: Point3,
    other_uavs: &[Point3],
    interfering_bs: &[TerrestrialBs],
    params: &RadioParams,
) -> Result<LinkBudget> {
    let hata = |tx: &Point3, what: &str| -> Result<f64> {
        let d = ensure_distinct(&node, tx, what)?.max(1.0);
        Ok(HataModel::new(params.f_mhz, tx.z, node.z)?.loss_db(d))
    };
    let path_loss_db = hata(&serving_uav, "serving UAV")?;
    let g_db = params.antenna_gain_db;
    let mut interference_mw = 0.0;
    for other in other_uavs {
        interference_mw += dbm_to_mw(params.uav_tx_dbm + g_db - hata(other, "interfering UAV")?);
    }
    for other in interfering_bs {
        interference_mw += dbm_to_mw(other.tx_dbm + g_db - hata(&other.position, "interfering BS")?);
    }
    Ok(LinkBudget::from_powers(
        params.uav_tx_dbm,
        g_db,
        path_loss_db,
        interference_mw,
        noise_power_dbm(params.rb_bw_hz, params.noise_figure_db),
        &params.cqi_thresholds_db,
    ))
}
