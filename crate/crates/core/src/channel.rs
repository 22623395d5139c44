//! Link gains, bandwidth shares, Shannon rates and client participation cost.
//!
//! Units: gains are linear power ratios, bandwidth is Hz, rates are bit/s
//! except where a function says Mbit/s. Participation cost uses the
//! cost-unit convention `alpha` per Mbit/s and `beta` per MB.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::contract::TypeGrid;
use crate::error::{Error, Result};
use crate::mobility::Point;

/// Thermal noise floor of -174 dBm/Hz in W/Hz.
pub const THERMAL_NOISE_PSD: f64 = 3.981_071_705_534_972e-21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Client transmit power, W.
    pub tx_power: f64,
    /// Licensed band of each cluster, Hz.
    pub bandwidth_per_cluster: f64,
    pub pathloss_exponent: f64,
    /// Linear gain at the 1 m reference distance.
    pub pathloss_ref_gain: f64,
    /// Distances are clamped up to this value, m.
    pub min_distance: f64,
    /// Rayleigh block fading; when off, `|h|^2 = 1`.
    pub fading: bool,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            noise_psd: THERMAL_NOISE_PSD,
            tx_power: 0.1,
            bandwidth_per_cluster: 10e6,
            pathloss_exponent: 3.0,
            pathloss_ref_gain: 1e-3,
            min_distance: 1.0,
            fading: true,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Vec<String> {
        let fields = [
            ("noise_psd", self.noise_psd),
            ("tx_power", self.tx_power),
            ("bandwidth_per_cluster", self.bandwidth_per_cluster),
            ("pathloss_exponent", self.pathloss_exponent),
            ("pathloss_ref_gain", self.pathloss_ref_gain),
            ("min_distance", self.min_distance),
        ];
        fields
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(name, v)| format!("link.{name} must be strictly positive, got {v}"))
            .collect()
    }
}

/// Deterministic distance-based gain `ref_gain * d^-exponent`, with `d`
/// clamped to `min_distance`.
pub fn path_gain(params: &LinkParams, distance: f64) -> f64 {
    let d = distance.max(params.min_distance);
    params.pathloss_ref_gain * d.powf(-params.pathloss_exponent)
}

/// Rayleigh power gain `|h|^2 ~ Exp(1)`, or exactly 1 with fading off.
pub fn fading_power<R: Rng + ?Sized>(params: &LinkParams, rng: &mut R) -> f64 {
    if params.fading {
        Exp1.sample(rng)
    } else {
        1.0
    }
}

/// Channel gain between a server site and a client.
pub fn channel_gain<R: Rng + ?Sized>(params: &LinkParams, server: Point, client: Point, rng: &mut R) -> f64 {
    path_gain(params, server.distance(&client)) * fading_power(params, rng)
}

/// Shannon rate `B log2(1 + pG / (N0 B))` in bit/s.
pub fn shannon_rate(bandwidth: f64, tx_power: f64, gain: f64, noise_psd: f64) -> f64 {
    bandwidth * (1.0 + snr(bandwidth, tx_power, gain, noise_psd)).log2()
}

pub fn snr(bandwidth: f64, tx_power: f64, gain: f64, noise_psd: f64) -> f64 {
    tx_power * gain / (noise_psd * bandwidth)
}

/// Equal split of a cluster's band among `participants`.
pub fn bandwidth_share(total_bandwidth: f64, participants: usize) -> Result<f64> {
    if participants == 0 {
        return Err(Error::EmptyShare);
    }
    Ok(total_bandwidth / participants as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientProfile {
    /// Cost per Mbit/s of upload rate.
    pub alpha: f64,
    /// Cost per MB of training data.
    pub beta: f64,
    /// Training data required this slot, MB.
    pub data_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientCostReport {
    /// Upload rate, Mbit/s.
    pub rate: f64,
    pub cost: f64,
    /// Participation type, the reciprocal of `cost`.
    pub type_value: f64,
    /// Zero-based level on the type grid (values above the top level are
    /// clipped to it).
    pub type_index: usize,
}

/// `alpha * rate + beta * data_size` with `rate` in Mbit/s.
pub fn participation_cost(profile: &ClientProfile, rate_mbps: f64) -> Result<f64> {
    let cost = profile.alpha * rate_mbps + profile.beta * profile.data_size;
    if cost > 0.0 && cost.is_finite() {
        Ok(cost)
    } else {
        Err(Error::DegenerateCost)
    }
}

/// Full cost report for a client, classified on `grid`.
pub fn cost_report(profile: &ClientProfile, rate_mbps: f64, grid: &TypeGrid) -> Result<ClientCostReport> {
    let cost = participation_cost(profile, rate_mbps)?;
    let type_value = 1.0 / cost;
    Ok(ClientCostReport {
        rate: rate_mbps,
        cost,
        type_value,
        type_index: grid.level_of(type_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn no_fading() -> LinkParams {
        LinkParams {
            fading: false,
            ..LinkParams::default()
        }
    }

    #[test]
    fn reference_distance_gives_reference_gain() {
        let p = no_fading();
        let g = channel_gain(&p, Point::new(0.0, 0.0), Point::new(1.0, 0.0), &mut seeded(0));
        assert_eq!(g, p.pathloss_ref_gain);
    }

    #[test]
    fn square_law_at_ten_metres() {
        let p = LinkParams {
            pathloss_exponent: 2.0,
            ..no_fading()
        };
        let g = channel_gain(&p, Point::new(0.0, 0.0), Point::new(6.0, 8.0), &mut seeded(0));
        assert!((g - p.pathloss_ref_gain / 100.0).abs() < 1e-18);
    }

    #[test]
    fn distance_is_clamped() {
        let p = no_fading();
        assert_eq!(path_gain(&p, 0.0), p.pathloss_ref_gain);
        assert_eq!(path_gain(&p, 0.3), p.pathloss_ref_gain);
    }

    #[test]
    fn rayleigh_power_has_unit_mean() {
        let p = LinkParams::default();
        let mut rng = seeded(2024);
        let n = 100_000;
        let mean = (0..n).map(|_| fading_power(&p, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn shannon_examples() {
        // SNR 1 -> one bit per Hz
        let r = shannon_rate(1e6, 1.0, 1e-6, 1e-12);
        assert!((r - 1e6).abs() < 1e-6);
        assert_eq!(shannon_rate(1e6, 0.0, 1.0, 1e-12), 0.0);
        // SNR 3 -> log2(4) = 2
        let r = shannon_rate(1e6, 3.0, 1e-6, 1e-12);
        assert!((r - 2e6).abs() < 1e-6);
    }

    #[test]
    fn bandwidth_split() {
        assert_eq!(bandwidth_share(10e6, 5).unwrap(), 2e6);
        assert_eq!(bandwidth_share(10e6, 1).unwrap(), 10e6);
        assert!(matches!(bandwidth_share(10e6, 0), Err(Error::EmptyShare)));
        for k in 1..200 {
            let s = bandwidth_share(7.3e6, k).unwrap();
            assert!((s * k as f64 - 7.3e6).abs() < 1e-6);
        }
    }

    #[test]
    fn cost_examples() {
        let grid = TypeGrid::new(vec![0.1, 0.2, 1.0]).unwrap();
        let r = cost_report(
            &ClientProfile {
                alpha: 1.0,
                beta: 1.0,
                data_size: 3.0,
            },
            2.0,
            &grid,
        )
        .unwrap();
        assert_eq!(r.cost, 5.0);
        assert!((r.type_value - 0.2).abs() < 1e-15);
        assert_eq!(r.type_index, 1);

        let r = cost_report(
            &ClientProfile {
                alpha: 1.0,
                beta: 0.0,
                data_size: 3.0,
            },
            1.0,
            &grid,
        )
        .unwrap();
        assert_eq!((r.cost, r.type_value, r.type_index), (1.0, 1.0, 2));
    }

    #[test]
    fn zero_cost_is_an_error() {
        let p = ClientProfile {
            alpha: 1.0,
            beta: 0.0,
            data_size: 10.0,
        };
        assert!(matches!(participation_cost(&p, 0.0), Err(Error::DegenerateCost)));
    }

    #[test]
    fn larger_cost_means_smaller_type() {
        let mut rng = seeded(8);
        for _ in 0..1000 {
            let a = ClientProfile {
                alpha: rng.random_range(1e-4..2e-3),
                beta: rng.random_range(0.0..3e-3),
                data_size: rng.random_range(100.0..200.0),
            };
            let b = ClientProfile {
                alpha: rng.random_range(1e-4..2e-3),
                beta: rng.random_range(0.0..3e-3),
                data_size: rng.random_range(100.0..200.0),
            };
            let ra = rng.random_range(0.0..50.0);
            let rb = rng.random_range(0.0..50.0);
            let (ca, cb) = (participation_cost(&a, ra).unwrap(), participation_cost(&b, rb).unwrap());
            if ca > cb {
                assert!(1.0 / ca < 1.0 / cb);
            }
        }
    }

    proptest! {
        #[test]
        fn rate_increases_with_gain_and_power(
            bw in 1e3f64..1e8,
            p in 1e-3f64..10.0,
            g in 1e-12f64..1e-3,
            k in 1.01f64..10.0,
        ) {
            let base = shannon_rate(bw, p, g, THERMAL_NOISE_PSD);
            prop_assert!(base >= 0.0);
            prop_assert!(shannon_rate(bw, p, g * k, THERMAL_NOISE_PSD) > base);
            prop_assert!(shannon_rate(bw, p * k, g, THERMAL_NOISE_PSD) > base);
        }

        #[test]
        fn cost_increases_with_rate_and_data(
            alpha in 1e-4f64..1e-2,
            beta in 1e-4f64..1e-2,
            d in 1.0f64..500.0,
            r in 0.0f64..100.0,
            dr in 0.01f64..10.0,
        ) {
            let p = ClientProfile { alpha, beta, data_size: d };
            let base = participation_cost(&p, r).unwrap();
            prop_assert!(participation_cost(&p, r + dr).unwrap() > base);
            let bigger = ClientProfile { data_size: d + dr, ..p };
            prop_assert!(participation_cost(&bigger, r).unwrap() > base);
        }
    }
}
