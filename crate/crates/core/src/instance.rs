//! Deployment instances: the planning area, candidate sites and every radio,
//! traffic and backhaul parameter the solver needs.
//!
//! Instances are plain data. They are validated on construction and on load,
//! and never mutated afterwards.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that the area tiles into subareas.
const GRID_TOL: f64 = 1e-9;

/// Rectangular planning area split into square subareas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSpec {
    /// meters
    pub width: f64,
    /// meters
    pub height: f64,
    /// meters
    pub subarea_side: f64,
}

impl AreaSpec {
    pub fn new(width: f64, height: f64, subarea_side: f64) -> Result<Self> {
        let area = AreaSpec { width, height, subarea_side };
        area.validate()?;
        Ok(area)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("area.width", self.width),
            ("area.height", self.height),
            ("area.subarea_side", self.subarea_side),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be a positive finite length, got {v}")));
            }
        }
        for (name, v) in [("area.width", self.width), ("area.height", self.height)] {
            let cells = v / self.subarea_side;
            if (cells - cells.round()).abs() > GRID_TOL * cells.max(1.0) || cells.round() < 1.0 {
                return Err(Error::validation(
                    name,
                    format!("{v} m is not an integer multiple of subarea_side {} m", self.subarea_side),
                ));
            }
        }
        Ok(())
    }

    pub fn cols(&self) -> usize {
        (self.width / self.subarea_side).round() as usize
    }

    pub fn rows(&self) -> usize {
        (self.height / self.subarea_side).round() as usize
    }

    /// Number of subareas `S`.
    pub fn subarea_count(&self) -> usize {
        self.cols() * self.rows()
    }

    /// Area of one subarea in m².
    pub fn subarea_area(&self) -> f64 {
        self.subarea_side * self.subarea_side
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }
}

/// Centers of all subareas in row-major order (x varies fastest).
pub fn subarea_centers(area: &AreaSpec) -> Vec<(f64, f64)> {
    let side = area.subarea_side;
    let (cols, rows) = (area.cols(), area.rows());
    let mut out = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            out.push(((c as f64 + 0.5) * side, (r as f64 + 0.5) * side));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SiteKind {
    /// Site without fiber; hosts a small cell backhauled over mmW.
    ScCandidate,
    /// Fiber-connected site; hosts a backhaul aggregate node.
    BanCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub cost: f64,
    pub kind: SiteKind,
}

impl Site {
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Log-distance path loss with LOS/NLOS states and lognormal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub pathloss_exp_los: f64,
    pub pathloss_exp_nlos: f64,
    pub shadow_sigma_los_db: f64,
    pub shadow_sigma_nlos_db: f64,
    /// LOS probability decay, 1/m.
    pub beta_los: f64,
    pub carrier_hz: f64,
    pub ref_dist_m: f64,
}

impl ChannelParams {
    /// 73 GHz urban access link.
    pub fn access_73ghz() -> Self {
        ChannelParams {
            pathloss_exp_los: 2.0,
            pathloss_exp_nlos: 3.3,
            shadow_sigma_los_db: 5.2,
            shadow_sigma_nlos_db: 7.6,
            beta_los: 0.046,
            carrier_hz: 73e9,
            ref_dist_m: 1.0,
        }
    }

    /// 73 GHz urban backhaul link.
    pub fn backhaul_73ghz() -> Self {
        ChannelParams {
            pathloss_exp_los: 2.0,
            pathloss_exp_nlos: 3.5,
            shadow_sigma_los_db: 4.2,
            shadow_sigma_nlos_db: 7.9,
            beta_los: 0.046,
            carrier_hz: 73e9,
            ref_dist_m: 1.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        crate::radio::SPEED_OF_LIGHT / self.carrier_hz
    }

    fn validate(&self, field: &str) -> Result<()> {
        let checks = [
            ("pathloss_exp_los", self.pathloss_exp_los, 1.0, "must be >= 1"),
            ("pathloss_exp_nlos", self.pathloss_exp_nlos, 1.0, "must be >= 1"),
        ];
        for (name, v, min, why) in checks {
            if !(v.is_finite() && v >= min) {
                return Err(Error::validation(format!("{field}.{name}"), format!("{why}, got {v}")));
            }
        }
        for (name, v) in [
            ("shadow_sigma_los_db", self.shadow_sigma_los_db),
            ("shadow_sigma_nlos_db", self.shadow_sigma_nlos_db),
            ("beta_los", self.beta_los),
            ("carrier_hz", self.carrier_hz),
            ("ref_dist_m", self.ref_dist_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{field}.{name}"), format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Access SNR threshold γ.
    pub snr_threshold_db: f64,
    /// Maximum outage probability p_oa at a covered subarea center.
    pub outage_max: f64,
    pub backhaul_bandwidth_hz: f64,
    pub backhaul_snr_threshold_db: f64,
    /// Combined transmit and receive antenna gain of a backhaul link.
    #[serde(default)]
    pub backhaul_gain_db: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power_dbm: 30.0,
            noise_dbm: -74.0,
            snr_threshold_db: -10.0,
            outage_max: 0.1,
            backhaul_bandwidth_hz: 1e9,
            backhaul_snr_threshold_db: -10.0,
            backhaul_gain_db: 40.0,
        }
    }
}

impl RadioParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radio.tx_power_dbm", self.tx_power_dbm),
            ("radio.noise_dbm", self.noise_dbm),
            ("radio.snr_threshold_db", self.snr_threshold_db),
            ("radio.backhaul_snr_threshold_db", self.backhaul_snr_threshold_db),
            ("radio.backhaul_gain_db", self.backhaul_gain_db),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        if !(self.outage_max > 0.0 && self.outage_max < 1.0) {
            return Err(Error::validation("radio.outage_max", format!("must lie in (0, 1), got {}", self.outage_max)));
        }
        if !(self.backhaul_bandwidth_hz.is_finite() && self.backhaul_bandwidth_hz > 0.0) {
            return Err(Error::validation("radio.backhaul_bandwidth_hz", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserParams {
    /// PPP intensity, users per m².
    pub density_per_m2: f64,
    /// Constant per-user rate demand, bit/s.
    pub rate_demand_bps: f64,
    /// Maximum blocking probability p_bb on a backhaul link.
    pub block_prob_max: f64,
}

impl Default for UserParams {
    fn default() -> Self {
        UserParams { density_per_m2: 200e-6, rate_demand_bps: 100e6, block_prob_max: 0.05 }
    }
}

impl UserParams {
    fn validate(&self) -> Result<()> {
        if !(self.density_per_m2.is_finite() && self.density_per_m2 >= 0.0) {
            return Err(Error::validation("users.density_per_m2", "must be >= 0"));
        }
        if !(self.rate_demand_bps.is_finite() && self.rate_demand_bps > 0.0) {
            return Err(Error::validation("users.rate_demand_bps", "must be > 0"));
        }
        if !(self.block_prob_max > 0.0 && self.block_prob_max < 1.0) {
            return Err(Error::validation(
                "users.block_prob_max",
                format!("must lie in (0, 1), got {}", self.block_prob_max),
            ));
        }
        Ok(())
    }
}

/// Fixed capacity for one BAN→SCBS link; replaces the computed value and
/// makes the link available regardless of distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityOverride {
    pub ban_id: u32,
    pub sc_id: u32,
    pub capacity_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub area: AreaSpec,
    pub sc_sites: Vec<Site>,
    pub ban_sites: Vec<Site>,
    pub access_channel: ChannelParams,
    pub backhaul_channel: ChannelParams,
    pub radio: RadioParams,
    pub users: UserParams,
    /// Maximum number of SCBSs one BAN can backhaul.
    pub nb_max: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capacity_overrides: Vec<CapacityOverride>,
}

impl Instance {
    pub fn subarea_count(&self) -> usize {
        self.area.subarea_count()
    }

    pub fn site_count(&self) -> usize {
        self.sc_sites.len() + self.ban_sites.len()
    }

    /// Total cost of opening every candidate site.
    pub fn total_cost(&self) -> f64 {
        self.sc_sites.iter().chain(&self.ban_sites).map(|s| s.cost).fold(0.0, |a, c| a + c)
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        if self.nb_max < 1 {
            return Err(Error::validation("nb_max", "must be >= 1"));
        }
        self.access_channel.validate("access_channel")?;
        self.backhaul_channel.validate("backhaul_channel")?;
        self.radio.validate()?;
        self.users.validate()?;

        let mut ids = HashSet::new();
        for (list, kind, name) in [
            (&self.sc_sites, SiteKind::ScCandidate, "sc_sites"),
            (&self.ban_sites, SiteKind::BanCandidate, "ban_sites"),
        ] {
            for (i, s) in list.iter().enumerate() {
                let field = format!("{name}[{i}]");
                if s.kind != kind {
                    return Err(Error::validation(field, format!("kind must be {kind:?}")));
                }
                if !(s.x.is_finite() && s.y.is_finite() && self.area.contains(s.x, s.y)) {
                    return Err(Error::validation(
                        field,
                        format!(
                            "site {} at ({}, {}) lies outside the {}x{} m area",
                            s.id, s.x, s.y, self.area.width, self.area.height
                        ),
                    ));
                }
                if !(s.cost.is_finite() && s.cost >= 0.0) {
                    return Err(Error::validation(field, format!("cost must be >= 0, got {}", s.cost)));
                }
                if !ids.insert(s.id) {
                    return Err(Error::validation(field, format!("duplicate site id {}", s.id)));
                }
            }
        }

        for (i, o) in self.capacity_overrides.iter().enumerate() {
            let field = format!("capacity_overrides[{i}]");
            if !self.ban_sites.iter().any(|s| s.id == o.ban_id) {
                return Err(Error::validation(field, format!("unknown BAN id {}", o.ban_id)));
            }
            if !self.sc_sites.iter().any(|s| s.id == o.sc_id) {
                return Err(Error::validation(field, format!("unknown SCBS id {}", o.sc_id)));
            }
            if !(o.capacity_bps.is_finite() && o.capacity_bps >= 0.0) {
                return Err(Error::validation(field, "capacity_bps must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Instance::from_json(&text)
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, instance.to_json()).map_err(|e| Error::io(path, e))
}

/// Parameters shared by every generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBundle {
    pub access_channel: ChannelParams,
    pub backhaul_channel: ChannelParams,
    pub radio: RadioParams,
    pub users: UserParams,
    pub nb_max: u32,
    pub sc_cost: f64,
    pub ban_cost: f64,
}

impl Default for ParamBundle {
    fn default() -> Self {
        ParamBundle {
            access_channel: ChannelParams::access_73ghz(),
            backhaul_channel: ChannelParams::backhaul_73ghz(),
            radio: RadioParams::default(),
            users: UserParams::default(),
            nb_max: 3,
            sc_cost: 1.0,
            ban_cost: 10.0,
        }
    }
}

/// Place `n_ban` BAN candidates and `n_sc` SCBS candidates on distinct
/// subarea centers.
///
/// The subarea order is one seeded shuffle; BANs take the first `n_ban`
/// positions and SCBSs the next `n_sc`. For a fixed seed, growing `n_sc`
/// therefore only appends candidates. BAN ids are `0..n_ban`, SCBS ids follow.
pub fn generate_instance(
    area: AreaSpec,
    n_sc: usize,
    n_ban: usize,
    seed: u64,
    defaults: &ParamBundle,
) -> Result<Instance> {
    area.validate()?;
    let centers = subarea_centers(&area);
    let wanted = n_sc + n_ban;
    if wanted > centers.len() {
        return Err(Error::validation(
            "site count",
            format!("{wanted} sites requested but the area only has {} subareas", centers.len()),
        ));
    }
    let mut order: Vec<usize> = (0..centers.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let site = |id: usize, slot: usize, cost: f64, kind: SiteKind| {
        let (x, y) = centers[order[slot]];
        Site { id: id as u32, x, y, cost, kind }
    };
    let ban_sites = (0..n_ban).map(|k| site(k, k, defaults.ban_cost, SiteKind::BanCandidate)).collect();
    let sc_sites = (0..n_sc)
        .map(|i| site(n_ban + i, n_ban + i, defaults.sc_cost, SiteKind::ScCandidate))
        .collect();

    let inst = Instance {
        area,
        sc_sites,
        ban_sites,
        access_channel: defaults.access_channel,
        backhaul_channel: defaults.backhaul_channel,
        radio: defaults.radio,
        users: defaults.users,
        nb_max: defaults.nb_max,
        capacity_overrides: Vec::new(),
    };
    inst.validate()?;
    Ok(inst)
}
