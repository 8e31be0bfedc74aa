//! Millimeter-wave propagation: log-distance path loss, exponential LOS
//! probability, SNR outage over LOS state and lognormal shadowing, and the
//! reduction of the outage constraint to a coverage distance.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::instance::{ChannelParams, Instance, RadioParams};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Resolution of the coverage-distance scan, meters.
pub const SCAN_STEP_M: f64 = 0.1;

/// Mean (shadowing-free) received SNR statistics of one link at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub mean_pathloss_los_db: f64,
    pub mean_pathloss_nlos_db: f64,
    pub p_los: f64,
    pub mean_snr_los_db: f64,
    pub mean_snr_nlos_db: f64,
}

/// Transmitter/receiver figures that turn path loss into SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrModel {
    /// Transmit power plus any antenna gain, dBm.
    pub eirp_dbm: f64,
    pub noise_dbm: f64,
    pub threshold_db: f64,
}

impl SnrModel {
    pub fn access(radio: &RadioParams) -> Self {
        SnrModel { eirp_dbm: radio.tx_power_dbm, noise_dbm: radio.noise_dbm, threshold_db: radio.snr_threshold_db }
    }

    pub fn backhaul(radio: &RadioParams) -> Self {
        SnrModel {
            eirp_dbm: radio.tx_power_dbm + radio.backhaul_gain_db,
            noise_dbm: radio.noise_dbm,
            threshold_db: radio.backhaul_snr_threshold_db,
        }
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be positive and finite, got {d}")))
    }
}

/// `20 log10(4π d0 / λ) + 10 n log10(d / d0)`; distances below `d0` are
/// clamped to `d0`.
pub fn mean_path_loss(d: f64, channel: &ChannelParams, los: bool) -> Result<f64> {
    check_distance(d)?;
    let d0 = channel.ref_dist_m;
    let n = if los { channel.pathloss_exp_los } else { channel.pathloss_exp_nlos };
    let fspl = 20.0 * (4.0 * std::f64::consts::PI * d0 / channel.wavelength()).log10();
    Ok(fspl + 10.0 * n * (d.max(d0) / d0).log10())
}

pub fn p_los(d: f64, channel: &ChannelParams) -> f64 {
    (-channel.beta_los * d.max(0.0)).exp()
}

pub fn link_budget(d: f64, channel: &ChannelParams, snr: &SnrModel) -> Result<LinkBudget> {
    let los = mean_path_loss(d, channel, true)?;
    let nlos = mean_path_loss(d, channel, false)?;
    Ok(LinkBudget {
        mean_pathloss_los_db: los,
        mean_pathloss_nlos_db: nlos,
        p_los: p_los(d, channel),
        mean_snr_los_db: snr.eirp_dbm - los - snr.noise_dbm,
        mean_snr_nlos_db: snr.eirp_dbm - nlos - snr.noise_dbm,
    })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// P(SNR < threshold) for a generic SNR model.
pub fn outage_with(d: f64, channel: &ChannelParams, snr: &SnrModel) -> Result<f64> {
    let lb = link_budget(d, channel, snr)?;
    let los = normal_cdf((snr.threshold_db - lb.mean_snr_los_db) / channel.shadow_sigma_los_db);
    let nlos = normal_cdf((snr.threshold_db - lb.mean_snr_nlos_db) / channel.shadow_sigma_nlos_db);
    Ok((lb.p_los * los + (1.0 - lb.p_los) * nlos).clamp(0.0, 1.0))
}

/// Access-link outage probability at distance `d`.
pub fn outage_probability(d: f64, channel: &ChannelParams, radio: &RadioParams) -> Result<f64> {
    outage_with(d, channel, &SnrModel::access(radio))
}

/// Largest grid distance `D` (grid `d0 + k·0.1 m`) such that every grid
/// point up to `D` has outage at most `outage_max`. Returns 0 when even `d0`
/// fails and `cap` when the scan passes `cap`.
pub fn coverage_distance_with(channel: &ChannelParams, snr: &SnrModel, outage_max: f64, cap: f64) -> f64 {
    let d0 = channel.ref_dist_m;
    let mut last_ok = 0.0;
    for k in 0u64.. {
        let d = d0 + k as f64 * SCAN_STEP_M;
        if d > cap {
            return cap;
        }
        let p = outage_with(d, channel, snr).expect("scan distances are positive");
        if p > outage_max {
            return last_ok;
        }
        last_ok = d;
    }
    unreachable!()
}

pub fn coverage_distance(channel: &ChannelParams, radio: &RadioParams, cap: f64) -> f64 {
    coverage_distance_with(channel, &SnrModel::access(radio), radio.outage_max, cap)
}

pub fn backhaul_distance(channel: &ChannelParams, radio: &RadioParams, cap: f64) -> f64 {
    coverage_distance_with(channel, &SnrModel::backhaul(radio), radio.outage_max, cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageThresholds {
    pub d_max_access_m: f64,
    pub d_max_backhaul_m: f64,
}

/// Thresholds for an instance; the scan is capped at the area diagonal.
pub fn coverage_thresholds(instance: &Instance) -> CoverageThresholds {
    let cap = instance.area.diagonal();
    CoverageThresholds {
        d_max_access_m: coverage_distance(&instance.access_channel, &instance.radio, cap),
        d_max_backhaul_m: backhaul_distance(&instance.backhaul_channel, &instance.radio, cap),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn access() -> ChannelParams {
        ChannelParams::access_73ghz()
    }

    #[test]
    fn path_loss_reference_values() {
        // 20·log10(4π·1 m / (c / 73 GHz)), evaluated independently.
        assert_abs_diff_eq!(mean_path_loss(1.0, &access(), true).unwrap(), 69.7142, epsilon = 1e-3);
        assert_abs_diff_eq!(mean_path_loss(100.0, &access(), true).unwrap(), 109.7142, epsilon = 1e-3);
        let a = mean_path_loss(1.0, &access(), true).unwrap();
        let b = mean_path_loss(1.0, &access(), false).unwrap();
        assert_eq!(a, b);
        // below d0 clamps
        assert_eq!(mean_path_loss(0.3, &access(), false).unwrap(), b);
        assert!(mean_path_loss(0.0, &access(), true).is_err());
        assert!(mean_path_loss(-2.0, &access(), true).is_err());
    }

    #[test]
    fn los_probability() {
        assert_eq!(p_los(0.0, &access()), 1.0);
        assert_abs_diff_eq!(p_los(100.0, &access()), 0.010_052, epsilon = 1e-6);
        let mut prev = 1.0;
        for k in 0..2000 {
            let p = p_los(k as f64 * 0.5, &access());
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn outage_reference_values() {
        let radio = RadioParams::default();
        // mixture evaluated with scipy.stats.norm at 100 m
        assert_abs_diff_eq!(outage_probability(100.0, &access(), &radio).unwrap(), 0.989_892, epsilon = 1e-5);
        assert!(outage_probability(1e-6, &access(), &radio).unwrap() < 1e-9);
        assert!(outage_probability(0.0, &access(), &radio).is_err());
    }

    #[test]
    fn outage_monotone_on_scan_grid() {
        let radio = RadioParams::default();
        for (ch, snr) in [
            (access(), SnrModel::access(&radio)),
            (ChannelParams::backhaul_73ghz(), SnrModel::backhaul(&radio)),
        ] {
            let mut prev = 0.0;
            for k in 0..6000 {
                let d = 1.0 + k as f64 * SCAN_STEP_M;
                let p = outage_with(d, &ch, &snr).unwrap();
                assert!(p.is_finite() && (0.0..=1.0).contains(&p));
                assert!(p >= prev - 1e-15, "non-monotone at {d}");
                prev = p;
            }
        }
    }

    #[test]
    fn coverage_distance_cases() {
        let radio = RadioParams::default();
        let d = coverage_distance(&access(), &radio, 565.0);
        // scan with scipy: last grid point with p_out <= 0.1
        assert_abs_diff_eq!(d, 14.2, epsilon = 1e-9);
        assert!((10.0..=20.0).contains(&d));
        assert!(outage_probability(d, &access(), &radio).unwrap() <= 0.1);
        assert!(outage_probability(d + SCAN_STEP_M, &access(), &radio).unwrap() > 0.1);

        let vacuous = RadioParams { outage_max: 1.0, ..radio };
        assert_eq!(coverage_distance(&access(), &vacuous, 565.0), 565.0);

        let hopeless = RadioParams { tx_power_dbm: -80.0, ..radio };
        assert_eq!(coverage_distance(&access(), &hopeless, 565.0), 0.0);
    }

    #[test]
    fn backhaul_gain_extends_range() {
        let radio = RadioParams::default();
        let bh = ChannelParams::backhaul_73ghz();
        assert_abs_diff_eq!(backhaul_distance(&bh, &radio, 1000.0), 131.5, epsilon = 1e-9);
        let no_gain = RadioParams { backhaul_gain_db: 0.0, ..radio };
        assert!(backhaul_distance(&bh, &no_gain, 1000.0) < 20.0);
    }
}
