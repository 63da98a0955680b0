//! Maximum biased-received-power tier selection between the satellite and
//! the nearest UAV, and Monte Carlo association probabilities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{pathloss_free_space, pathloss_uav, LinkBudget};
use crate::error::{Error, Result};
use crate::geometry::{los_probability, sample_nearest_with, LosModelParams, Region, TierProcess};
use crate::mc::run_trials;

/// Tier identifiers, ordered so that ties go to the smaller id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Satellite,
    Uav,
}

impl Tier {
    pub fn name(&self) -> &'static str {
        match self {
            Tier::Satellite => "satellite",
            Tier::Uav => "uav",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationConfig {
    /// Satellite budget; `bias` holds φ_S.
    pub satellite: LinkBudget,
    /// Slant range to the satellite in metres.
    pub satellite_distance_m: f64,
    /// UAV budget; `bias` holds φ_U.
    pub uav: LinkBudget,
    pub uav_los: LosModelParams,
    /// When set, the satellite is admissible only if the serving UAV link
    /// is not LOS.
    pub los_gate: bool,
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<()> {
        self.satellite.validate()?;
        self.uav.validate()?;
        self.uav_los.validate()?;
        crate::error::check(
            "satellite.distance",
            self.satellite_distance_m,
            |v| v > 0.0,
            "distance > 0",
        )
    }
}

/// What a user sees of one tier's best node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierCandidate {
    pub tier: Tier,
    /// Biased received power P·φ·G·PL, without fading.
    pub metric: f64,
}

/// Argmax of the biased received power; ties go to the smaller tier id.
pub fn associate(candidates: &[TierCandidate]) -> Result<Tier> {
    let mut best: Option<TierCandidate> = None;
    for c in candidates {
        if !(c.metric.is_finite() && c.metric >= 0.0) {
            continue;
        }
        best = match best {
            None => Some(*c),
            Some(b) if c.metric > b.metric || (c.metric == b.metric && c.tier < b.tier) => Some(*c),
            keep => keep,
        };
    }
    best.map(|c| c.tier).ok_or(Error::NoAdmissibleTier)
}

/// Metrics of the satellite and the UAV at 3D distance `d` and altitude `z`.
/// The UAV uses the LOS-probability-weighted pathloss.
pub fn candidates(cfg: &AssociationConfig, uav: Option<(f64, f64)>) -> Result<Vec<TierCandidate>> {
    let mut out = vec![TierCandidate {
        tier: Tier::Satellite,
        metric: cfg.satellite.biased_power() * pathloss_free_space(&cfg.satellite, cfg.satellite_distance_m)?,
    }];
    if let Some((d, z)) = uav {
        out.push(TierCandidate {
            tier: Tier::Uav,
            metric: cfg.uav.biased_power() * pathloss_uav(&cfg.uav, d, z, &cfg.uav_los)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationProbabilities {
    pub satellite: f64,
    pub uav: f64,
    pub trials: usize,
}

/// Fraction of sampled UAV fields in which each tier wins. The serving UAV
/// is the one nearest in 3D.
pub fn association_probability(
    cfg: &AssociationConfig,
    uav_tier: &TierProcess,
    region: &Region,
    trials: usize,
    seed: u64,
) -> Result<AssociationProbabilities> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    cfg.validate()?;
    uav_tier.validate()?;
    region.validate()?;
    let picks = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| -> Result<Tier> {
        let geom = sample_nearest_with(uav_tier, region, rng).map(|p| (p.distance(), p.z));
        let mut cands = candidates(cfg, geom)?;
        if cfg.los_gate {
            if let Some((d, z)) = geom {
                let los = rng.random::<f64>() < los_probability(d, z, &cfg.uav_los)?;
                if los {
                    cands.retain(|c| c.tier != Tier::Satellite);
                }
            }
        }
        associate(&cands)
    });
    let mut uav = 0usize;
    for p in picks {
        if p? == Tier::Uav {
            uav += 1;
        }
    }
    let pu = uav as f64 / trials as f64;
    Ok(AssociationProbabilities {
        satellite: (trials - uav) as f64 / trials as f64,
        uav: pu,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(phi_u_db: f64) -> AssociationConfig {
        let mut uav = LinkBudget::single_slope(0.1, 100.0, 10f64.powf(phi_u_db / 10.0), 28e9, 4e-11, 2.5);
        uav.nlos_pathloss_exponent = 3.5;
        uav.excess_loss_los = 10f64.powf(-0.1);
        uav.excess_loss_nlos = 0.01;
        AssociationConfig {
            satellite: LinkBudget::single_slope(100.0, 1000.0, 1.0, 2e9, 4e-14, 2.0),
            satellite_distance_m: 600e3,
            uav,
            uav_los: LosModelParams::default(),
            los_gate: false,
        }
    }

    #[test]
    fn bias_breaks_equal_metrics() {
        let a = TierCandidate {
            tier: Tier::Satellite,
            metric: 1.0,
        };
        let b = TierCandidate {
            tier: Tier::Uav,
            metric: 1.0,
        };
        assert_eq!(associate(&[b, a]).unwrap(), Tier::Satellite);
        let b10 = TierCandidate { metric: 10.0, ..b };
        assert_eq!(associate(&[a, b10]).unwrap(), Tier::Uav);
        assert_eq!(associate(&[b]).unwrap(), Tier::Uav);
        assert!(matches!(associate(&[]), Err(Error::NoAdmissibleTier)));
    }

    #[test]
    fn scaling_leaves_choice_unchanged() {
        let c = [
            TierCandidate {
                tier: Tier::Satellite,
                metric: 3e-12,
            },
            TierCandidate {
                tier: Tier::Uav,
                metric: 5e-12,
            },
        ];
        let scaled: Vec<_> = c
            .iter()
            .map(|x| TierCandidate {
                metric: x.metric * 7e5,
                ..*x
            })
            .collect();
        assert_eq!(associate(&c).unwrap(), associate(&scaled).unwrap());
    }

    #[test]
    fn no_uavs_means_satellite() {
        let p = association_probability(
            &cfg(10.0),
            &TierProcess::aerial(0.0, 10.0, 500.0),
            &Region::new(5000.0, 0.0).unwrap(),
            200,
            1,
        )
        .unwrap();
        assert_eq!(p.satellite, 1.0);
        assert_eq!(p.uav, 0.0);
    }

    #[test]
    fn probabilities_sum_to_one_and_grow_with_bias() {
        let tier = TierProcess::aerial(15e-6, 10.0, 500.0);
        let region = Region::new(5000.0, 0.0).unwrap();
        let lo = association_probability(&cfg(0.0), &tier, &region, 2000, 3).unwrap();
        let hi = association_probability(&cfg(10.0), &tier, &region, 2000, 3).unwrap();
        assert_eq!(lo.satellite + lo.uav, 1.0);
        assert!(hi.uav >= lo.uav);
    }
}
