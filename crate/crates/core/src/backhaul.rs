//! Wireless backhaul: link capacity, Poisson blocking probability and the
//! per-link subarea budget `N_ki` derived from it.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::instance::{ChannelParams, Instance, RadioParams, UserParams};
use crate::radio::{self, CoverageThresholds, SnrModel};

/// Upper limit for uncapped budget searches.
pub const MAX_SUBAREAS: u32 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulLink {
    /// Index into `Instance::ban_sites`.
    pub ban: usize,
    /// Index into `Instance::sc_sites`.
    pub sc: usize,
    pub ban_id: u32,
    pub sc_id: u32,
    pub distance_m: f64,
    pub capacity_bps: f64,
    /// Most subareas the SCBS may cover while backhauled over this link.
    pub n_ki: u32,
}

/// Shannon capacity `W log2(1 + snr)`.
pub fn shannon_capacity(bandwidth_hz: f64, snr_db: f64) -> f64 {
    bandwidth_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// Capacity of a BAN→SCBS link at distance `d`, from the LOS-weighted mean
/// path loss. `None` when `d` exceeds `max_range`.
pub fn link_capacity(d: f64, channel: &ChannelParams, radio: &RadioParams, max_range: f64) -> Result<Option<f64>> {
    let lb = radio::link_budget(d, channel, &SnrModel::backhaul(radio))?;
    if d > max_range {
        return Ok(None);
    }
    let loss = lb.p_los * lb.mean_pathloss_los_db + (1.0 - lb.p_los) * lb.mean_pathloss_nlos_db;
    let snr_db = radio.tx_power_dbm + radio.backhaul_gain_db - loss - radio.noise_dbm;
    Ok(Some(shannon_capacity(radio.backhaul_bandwidth_hz, snr_db)))
}

/// `P(Q >= m)` for `Q ~ Poisson(lambda)`.
pub fn poisson_tail(lambda: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let ln_lambda = lambda.ln();
    let pmf = |q: u64| (-lambda + q as f64 * ln_lambda - ln_gamma(q as f64 + 1.0)).exp();
    if (m as f64) <= lambda {
        let lower: f64 = (0..m).map(pmf).sum();
        return (1.0 - lower).clamp(0.0, 1.0);
    }
    // Upper tail past the mode: terms shrink geometrically with ratio
    // lambda/(q+1), which bounds the remainder.
    let mut term = pmf(m);
    let mut sum = 0.0;
    let mut q = m;
    loop {
        sum += term;
        let ratio = lambda / (q + 1) as f64;
        let remainder = term * ratio / (1.0 - ratio);
        if remainder < 1e-12 * 1e-4 || term == 0.0 {
            break;
        }
        term *= ratio;
        q += 1;
    }
    sum.clamp(0.0, 1.0)
}

/// Users needed to exhaust a link: `ceil(C / R_u)`, at least one.
pub fn blocking_threshold(capacity_bps: f64, rate_demand_bps: f64) -> u64 {
    let ratio = capacity_bps / rate_demand_bps;
    ((ratio - 1e-9).ceil().max(1.0)) as u64
}

/// Probability that the aggregate constant-rate demand of `Poisson(mean_users)`
/// users reaches the link capacity.
pub fn blocking_probability(mean_users: f64, capacity_bps: f64, rate_demand_bps: f64) -> Result<f64> {
    if !(mean_users >= 0.0 && capacity_bps >= 0.0 && rate_demand_bps > 0.0) {
        return Err(Error::Domain(format!(
            "blocking probability needs mean_users >= 0, capacity >= 0, rate > 0; got {mean_users}, {capacity_bps}, {rate_demand_bps}"
        )));
    }
    Ok(poisson_tail(mean_users, blocking_threshold(capacity_bps, rate_demand_bps)))
}

pub fn max_subareas(capacity_bps: f64, users: &UserParams, subarea_area_m2: f64) -> u32 {
    max_subareas_capped(capacity_bps, users, subarea_area_m2, MAX_SUBAREAS)
}

/// Largest `n <= cap` with `blocking(λ_u·Δs·n) <= p_bb`.
pub fn max_subareas_capped(capacity_bps: f64, users: &UserParams, subarea_area_m2: f64, cap: u32) -> u32 {
    let per_subarea = users.density_per_m2 * subarea_area_m2;
    let m = blocking_threshold(capacity_bps, users.rate_demand_bps);
    let ok = |n: u32| poisson_tail(per_subarea * n as f64, m) <= users.block_prob_max;
    if cap == 0 || !ok(1) {
        return 0;
    }
    // blocking is nondecreasing in n: gallop to a failing point, then bisect
    let mut good = 1u32;
    let mut bad = None;
    let mut probe = 2u32;
    while probe <= cap {
        if ok(probe) {
            good = probe;
            probe = probe.saturating_mul(2);
        } else {
            bad = Some(probe);
            break;
        }
    }
    let Some(mut bad) = bad else {
        return if ok(cap) { cap } else { bisect(good, cap, ok) };
    };
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

// `good` passes, `hi` fails: find the last passing value.
fn bisect(mut good: u32, mut bad: u32, ok: impl Fn(u32) -> bool) -> u32 {
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Backhaul links and coverage radii for an instance, computed once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTable {
    pub links: Vec<BackhaulLink>,
    /// Link indices per SCBS candidate, ordered by BAN index.
    pub by_sc: Vec<Vec<usize>>,
    /// Link indices per BAN candidate, ordered by SCBS index.
    pub by_ban: Vec<Vec<usize>>,
    pub thresholds: CoverageThresholds,
    pub sc_access_radius: Vec<f64>,
    pub ban_access_radius: Vec<f64>,
}

impl LinkTable {
    pub fn link(&self, ban: usize, sc: usize) -> Option<&BackhaulLink> {
        self.by_sc
            .get(sc)?
            .iter()
            .map(|&l| &self.links[l])
            .find(|l| l.ban == ban)
    }

    pub fn links_of_sc(&self, sc: usize) -> impl Iterator<Item = &BackhaulLink> {
        self.by_sc[sc].iter().map(move |&l| &self.links[l])
    }
}

/// One link per (BAN, SCBS) pair within backhaul range, or named in a
/// capacity override. Budgets are capped at the subarea count.
pub fn build_links(instance: &Instance) -> LinkTable {
    let thresholds = radio::coverage_thresholds(instance);
    let cap = instance.subarea_count() as u32;
    let delta_s = instance.area.subarea_area();
    let ch = &instance.backhaul_channel;

    let mut links = Vec::new();
    let mut by_sc = vec![Vec::new(); instance.sc_sites.len()];
    let mut by_ban = vec![Vec::new(); instance.ban_sites.len()];
    for (k, ban) in instance.ban_sites.iter().enumerate() {
        for (i, sc) in instance.sc_sites.iter().enumerate() {
            let distance_m = ban.distance_to(sc.x, sc.y);
            let overridden = instance
                .capacity_overrides
                .iter()
                .find(|o| o.ban_id == ban.id && o.sc_id == sc.id)
                .map(|o| o.capacity_bps);
            let capacity = match overridden {
                Some(c) => Some(c),
                None => link_capacity(distance_m.max(ch.ref_dist_m), ch, &instance.radio, thresholds.d_max_backhaul_m)
                    .expect("distance is positive")
                    .filter(|_| distance_m <= thresholds.d_max_backhaul_m),
            };
            let Some(capacity_bps) = capacity else { continue };
            let n_ki = max_subareas_capped(capacity_bps, &instance.users, delta_s, cap);
            by_sc[i].push(links.len());
            by_ban[k].push(links.len());
            links.push(BackhaulLink { ban: k, sc: i, ban_id: ban.id, sc_id: sc.id, distance_m, capacity_bps, n_ki });
        }
    }
    LinkTable {
        links,
        by_sc,
        by_ban,
        thresholds,
        sc_access_radius: vec![thresholds.d_max_access_m; instance.sc_sites.len()],
        ban_access_radius: vec![thresholds.d_max_access_m; instance.ban_sites.len()],
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::instance::{generate_instance, AreaSpec, ParamBundle, Site, SiteKind};

    #[test]
    fn shannon_unit_snr() {
        assert_abs_diff_eq!(shannon_capacity(1e9, 0.0), 1e9, epsilon = 1e-3);
    }

    #[test]
    fn capacity_at_50m_and_out_of_range() {
        let radio = RadioParams::default();
        let ch = ChannelParams::backhaul_73ghz();
        // Shannon formula on the LOS-weighted path loss, evaluated separately.
        let c = link_capacity(50.0, &ch, &radio, 131.5).unwrap().unwrap();
        assert_abs_diff_eq!(c / 1e6, 5798.62, epsilon = 0.5);
        assert!(link_capacity(150.0, &ch, &radio, 131.5).unwrap().is_none());
        assert!(link_capacity(0.0, &ch, &radio, 131.5).is_err());
    }

    #[test]
    fn blocking_reference_values() {
        assert_eq!(blocking_probability(0.0, 5e8, 1e8).unwrap(), 0.0);
        let oracle = 1.0 - (-2f64).exp() * (1.0 + 2.0 + 2.0 + 4.0 / 3.0 + 2.0 / 3.0);
        assert_abs_diff_eq!(blocking_probability(2.0, 5e8, 1e8).unwrap(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.0527, epsilon = 1e-4);
        assert!(blocking_probability(500.0, 5e8, 1e8).unwrap() > 1.0 - 1e-12);
        // below one user's demand: any user blocks
        assert_abs_diff_eq!(blocking_probability(0.5, 5e7, 1e8).unwrap(), 1.0 - (-0.5f64).exp(), epsilon = 1e-12);
        assert!(blocking_probability(-1.0, 5e8, 1e8).is_err());
    }

    #[test]
    fn tail_for_large_means() {
        // log-space pmf keeps working where exp(-lambda) underflows
        let p = poisson_tail(2000.0, 2100);
        assert!(p > 0.0 && p < 0.02, "{p}");
        assert!(poisson_tail(2000.0, 1900) > 0.98);
    }

    #[test]
    fn worked_budget_point() {
        let users = UserParams { density_per_m2: 0.02 / 100.0, rate_demand_bps: 1e8, block_prob_max: 0.05 };
        assert_eq!(max_subareas(5e8, &users, 100.0), 98);
    }

    #[test]
    fn budget_degenerate_and_monotone() {
        let users = UserParams { density_per_m2: 0.01, rate_demand_bps: 1e8, block_prob_max: 0.05 };
        // one user per subarea and capacity below one demand: P(Q>=1) = 0.63 > p_bb
        assert_eq!(max_subareas(5e7, &users, 100.0), 0);
        let mut prev = 0;
        for c in [1e8, 2e8, 4e8, 8e8, 1.6e9, 3.2e9] {
            let n = max_subareas(c, &users, 100.0);
            assert!(n >= prev);
            prev = n;
        }
        let none = UserParams { density_per_m2: 0.0, ..users };
        assert_eq!(max_subareas_capped(1.0, &none, 100.0, 37), 37);
    }

    fn two_site_instance(gap: f64) -> Instance {
        let mut inst =
            generate_instance(AreaSpec::new(400.0, 400.0, 10.0).unwrap(), 0, 0, 0, &ParamBundle::default()).unwrap();
        inst.ban_sites.push(Site { id: 0, x: 5.0, y: 5.0, cost: 10.0, kind: SiteKind::BanCandidate });
        inst.sc_sites.push(Site { id: 1, x: 5.0 + gap, y: 5.0, cost: 1.0, kind: SiteKind::ScCandidate });
        inst.validate().unwrap();
        inst
    }

    #[test]
    fn single_link_construction() {
        let table = build_links(&two_site_instance(5.0));
        assert_eq!(table.links.len(), 1);
        assert_eq!(table.by_sc[0], vec![0]);
        let l = &table.links[0];
        assert_eq!(l.n_ki, 1600);

        let far = build_links(&two_site_instance(390.0));
        assert!(far.links.is_empty());
        assert!(far.by_sc[0].is_empty());
    }

    #[test]
    fn overrides_take_precedence() {
        let mut inst = two_site_instance(390.0);
        inst.capacity_overrides.push(crate::instance::CapacityOverride { ban_id: 0, sc_id: 1, capacity_bps: 5e8 });
        inst.users.density_per_m2 = 0.02 / 100.0;
        let table = build_links(&inst);
        assert_eq!(table.links.len(), 1);
        assert_eq!(table.links[0].n_ki, 98);
    }

    #[test]
    fn link_budgets_recompute() {
        let inst = generate_instance(AreaSpec::new(200.0, 200.0, 10.0).unwrap(), 20, 3, 5, &ParamBundle {
            users: UserParams { density_per_m2: 0.05, ..UserParams::default() },
            ..ParamBundle::default()
        })
        .unwrap();
        let table = build_links(&inst);
        assert!(!table.links.is_empty());
        for l in &table.links {
            let n = max_subareas_capped(l.capacity_bps, &inst.users, 100.0, inst.subarea_count() as u32);
            assert_eq!(n, l.n_ki);
        }
    }
}
