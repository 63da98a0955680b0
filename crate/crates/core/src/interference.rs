//! Aggregate interference: PGFL Laplace transforms, Campbell cumulants, the
//! moment-matched Gamma surrogate and a Monte Carlo sampler.
//!
//! An interferer at horizontal distance r and altitude z contributes
//! P·φ·G·h·ξ·(c/4πf)²·d^{−β} with unit-mean Nakagami h. Aerial tiers split
//! into LOS and NLOS sub-processes by independent thinning with the
//! elevation-angle LOS probability.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::{LinkBudget, NakagamiParams};
use crate::error::{check, Error, Result};
use crate::geometry::{AltitudePolicy, LinkMark, LosModelParams, PointFieldRealization, Region, TierProcess};
use crate::quad::{geometric_breaks, integrate, integrate_with_breaks, QuadOptions};
use crate::special::{gamma_p, ln_gamma};

/// A tier of interferers as seen by the receiver at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererTier {
    pub process: TierProcess,
    pub budget: LinkBudget,
    pub fading: NakagamiParams,
    /// LOS model for aerial tiers; `None` means every link uses the LOS branch.
    pub los: Option<LosModelParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterferenceMoments {
    pub mean_w: f64,
    pub variance_w2: f64,
}

/// One realization of the aggregate interference, split by link state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterferenceSample {
    pub los_w: f64,
    pub nlos_w: f64,
}

impl InterferenceSample {
    pub fn total(&self) -> f64 {
        self.los_w + self.nlos_w
    }
}

fn radial_breaks(lo: f64, hi: f64) -> Vec<f64> {
    if lo > 0.0 {
        geometric_breaks(lo, hi)
    } else {
        let mut b = vec![0.0];
        b.extend(geometric_breaks(hi * 1e-4, hi));
        b
    }
}

impl InterfererTier {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        self.budget.validate()?;
        if let Some(los) = &self.los {
            los.validate()?;
            if !self.process.altitude.is_aerial() {
                return Err(Error::invalid("los", "LOS thinning requires an aerial tier"));
            }
        }
        Ok(())
    }

    /// LOS probability and the (LOS, NLOS) mean received powers at (r, z).
    pub fn branches(&self, r: f64, z: f64) -> (f64, f64, f64) {
        let d = (r * r + z * z).sqrt();
        let p = self.budget.biased_power();
        match &self.los {
            None => (1.0, p * self.budget.pathloss_los(d), 0.0),
            Some(los) => {
                let elev = z.atan2(r).to_degrees();
                (
                    los.at_elevation(elev),
                    p * self.budget.pathloss_los(d),
                    p * self.budget.pathloss_nlos(d),
                )
            }
        }
    }

    fn altitude_average<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        match self.process.altitude {
            AltitudePolicy::Ground => Ok(f(0.0)),
            AltitudePolicy::Fixed(z) => Ok(f(z)),
            AltitudePolicy::Uniform { min_m, max_m } => {
                if max_m == min_m {
                    return Ok(f(min_m));
                }
                let opts = QuadOptions {
                    rel_tol: tol,
                    abs_tol: 0.0,
                    max_intervals: 200,
                };
                Ok(integrate(&f, min_m, max_m, opts)?.value / (max_m - min_m))
            }
        }
    }

    /// 2πλ ∫_{r_lo}^{R_c} E_z[g(r, z)] r dr for each of the LOS and NLOS branches.
    fn radial_integral<G>(&self, region: &Region, r_min: f64, tol: f64, g: G) -> Result<(f64, f64)>
    where
        G: Fn(f64, f64, f64, f64, f64) -> (f64, f64),
    {
        let lo = r_min.max(region.guard_radius_m);
        if self.process.density == 0.0 || lo >= region.radius_m {
            return Ok((0.0, 0.0));
        }
        let inner_tol = (tol * 0.1).max(1e-13);
        let opts = QuadOptions {
            rel_tol: tol,
            abs_tol: 0.0,
            max_intervals: 4000,
        };
        let breaks = radial_breaks(lo, region.radius_m);
        let branch = |which: usize| -> Result<f64> {
            let err = std::cell::Cell::new(None);
            let q = integrate_with_breaks(
                |r| {
                    let v = self.altitude_average(
                        |z| {
                            let (p, pl, pn) = self.branches(r, z);
                            let (a, b) = g(r, z, p, pl, pn);
                            if which == 0 {
                                a
                            } else {
                                b
                            }
                        },
                        inner_tol,
                    );
                    match v {
                        Ok(v) => v * r,
                        Err(e) => {
                            err.set(Some(e));
                            0.0
                        }
                    }
                },
                &breaks,
                opts,
            )?;
            if let Some(e) = err.take() {
                return Err(e);
            }
            Ok(2.0 * std::f64::consts::PI * self.process.density * q.value)
        };
        let los = branch(0)?;
        let nlos = if self.los.is_some() { branch(1)? } else { 0.0 };
        Ok((los, nlos))
    }

    /// (ln ℒ_LOS(s), ln ℒ_NLOS(s)) for interferers beyond horizontal distance `r_min`.
    pub fn log_laplace_split(&self, s: f64, region: &Region, r_min: f64, tol: f64) -> Result<(f64, f64)> {
        check("s", s, |v| v >= 0.0, "s >= 0")?;
        if s == 0.0 {
            return Ok((0.0, 0.0));
        }
        let h = self.fading;
        let (a, b) = self.radial_integral(region, r_min, tol, |_, _, p, pl, pn| {
            (p * h.one_minus_laplace(s * pl), (1.0 - p) * h.one_minus_laplace(s * pn))
        })?;
        Ok((-a, -b))
    }

    /// ℒ_I(s) = E[e^{−sI}] over interferers beyond the guard radius.
    pub fn laplace(&self, s: f64, region: &Region, tol: f64) -> Result<f64> {
        self.laplace_beyond(s, region, 0.0, tol)
    }

    pub fn laplace_beyond(&self, s: f64, region: &Region, r_min: f64, tol: f64) -> Result<f64> {
        let (a, b) = self.log_laplace_split(s, region, r_min, tol)?;
        Ok((a + b).exp())
    }

    /// j-th cumulant κ_j = 2πλ ∫ E[h^j] E_z[p P_L^j + (1−p) P_N^j] r dr.
    pub fn cumulant(&self, j: u32, region: &Region, r_min: f64, tol: f64) -> Result<f64> {
        if j == 0 {
            return Err(Error::invalid("j", "cumulant order starts at 1"));
        }
        if region.guard_radius_m.max(r_min) == 0.0 && !self.process.altitude.is_aerial() && self.process.density > 0.0 {
            return Err(Error::invalid(
                "region.guard_radius",
                "interference moments diverge for ground interferers arbitrarily close to the receiver; set a guard radius > 0",
            ));
        }
        let ji = j as i32;
        let (a, b) = self.radial_integral(region, r_min, tol, |_, _, p, pl, pn| {
            (p * pl.powi(ji), (1.0 - p) * pn.powi(ji))
        })?;
        Ok(self.fading.moment(j) * (a + b))
    }

    pub fn moments(&self, region: &Region, tol: f64) -> Result<InterferenceMoments> {
        self.moments_beyond(region, 0.0, tol)
    }

    pub fn moments_beyond(&self, region: &Region, r_min: f64, tol: f64) -> Result<InterferenceMoments> {
        Ok(InterferenceMoments {
            mean_w: self.cumulant(1, region, r_min, tol)?,
            variance_w2: self.cumulant(2, region, r_min, tol)?,
        })
    }

    /// Raw moments E[I^n], n = 0..=order, from the cumulants by
    /// μ'_n = Σ_{k=1}^{n} C(n−1, k−1) κ_k μ'_{n−k}. Values are in units of
    /// `unit` (e.g. σ²) to keep high orders representable.
    pub fn raw_moments(&self, order: usize, unit: f64, region: &Region, r_min: f64, tol: f64) -> Result<Vec<f64>> {
        let mut seq = self.moment_sequence(unit, *region, r_min, tol)?;
        let mut mu = vec![1.0];
        for _ in 0..order {
            mu.push(seq.next_moment()?);
        }
        Ok(mu)
    }

    /// Lazily evaluated raw moments of I/unit.
    pub fn moment_sequence(&self, unit: f64, region: Region, r_min: f64, tol: f64) -> Result<MomentSequence> {
        check("unit", unit, |v| v > 0.0, "unit > 0")?;
        // Scale powers first so high orders neither underflow nor overflow.
        let mut scaled = *self;
        scaled.budget.tx_power_w /= unit;
        Ok(MomentSequence {
            tier: scaled,
            region,
            r_min,
            tol,
            kappa: Vec::new(),
            mu: vec![1.0],
        })
    }

    /// Interference of a sampled field from points strictly beyond horizontal
    /// distance `r_min` and outside the guard radius. Aerial fields must carry
    /// LOS marks when the tier has a LOS model.
    pub fn field_interference(
        &self,
        field: &PointFieldRealization,
        region: &Region,
        r_min: f64,
        rng: &mut ChaCha8Rng,
    ) -> InterferenceSample {
        let p = self.budget.biased_power();
        let mut out = InterferenceSample::default();
        for (i, pt) in field.points.iter().enumerate() {
            let r = pt.horizontal();
            let h = self.fading.sample(rng);
            if r <= r_min || r < region.guard_radius_m {
                continue;
            }
            let d = pt.distance();
            let los = self.los.is_none() || field.marks.get(i).copied() == Some(LinkMark::Los);
            if los {
                out.los_w += p * h * self.budget.pathloss_los(d);
            } else {
                out.nlos_w += p * h * self.budget.pathloss_nlos(d);
            }
        }
        out
    }

    /// Draws one interference realization directly (radii, altitudes, marks
    /// and fading), skipping the planar angle, which does not affect power.
    pub fn sample(&self, region: &Region, r_min: f64, rng: &mut ChaCha8Rng) -> InterferenceSample {
        let mean = self.process.density * region.area();
        let count = if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        };
        let mut out = InterferenceSample::default();
        for _ in 0..count {
            let r = region.radius_m * rng.random::<f64>().sqrt();
            let z = match self.process.altitude {
                AltitudePolicy::Ground => 0.0,
                AltitudePolicy::Fixed(z) => z,
                AltitudePolicy::Uniform { min_m, max_m } => min_m + (max_m - min_m) * rng.random::<f64>(),
            };
            let u: f64 = rng.random();
            let h = self.fading.sample(rng);
            if r <= r_min || r < region.guard_radius_m {
                continue;
            }
            let (p_los, pl, pn) = self.branches(r, z);
            if u < p_los {
                out.los_w += h * pl;
            } else {
                out.nlos_w += h * pn;
            }
        }
        out
    }
}

/// Raw moments μ'_n = Σ_{k=1}^{n} C(n−1, k−1) κ_k μ'_{n−k} built one order at
/// a time from the Campbell cumulants.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    tier: InterfererTier,
    region: Region,
    r_min: f64,
    tol: f64,
    kappa: Vec<f64>,
    mu: Vec<f64>,
}

impl MomentSequence {
    /// Next raw moment, starting at order one.
    pub fn next_moment(&mut self) -> Result<f64> {
        let n = self.mu.len();
        self.kappa
            .push(self.tier.cumulant(n as u32, &self.region, self.r_min, self.tol)?);
        let mut acc = 0.0;
        let mut binom = 1.0; // C(n−1, k−1)
        for k in 1..=n {
            if k > 1 {
                binom *= (n - k + 1) as f64 / (k - 1) as f64;
            }
            acc += binom * self.kappa[k - 1] * self.mu[n - k];
        }
        self.mu.push(acc);
        Ok(acc)
    }

    pub fn order(&self) -> usize {
        self.mu.len() - 1
    }
}

/// Gamma(k, η) surrogate for the aggregate interference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaInterferenceModel {
    pub shape: f64,
    pub scale: f64,
}

impl GammaInterferenceModel {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        check("gamma.shape", shape, |v| v > 0.0, "shape > 0")?;
        check("gamma.scale", scale, |v| v > 0.0, "scale > 0")?;
        Ok(Self { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn laplace(&self, s: f64) -> f64 {
        (-self.shape * (s * self.scale).ln_1p()).exp()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let k = self.shape;
        ((k - 1.0) * y.ln() - y / self.scale - ln_gamma(k) - k * self.scale.ln()).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        gamma_p(self.shape, y / self.scale).unwrap_or(1.0)
    }

    /// E[f(I)] by quadrature. The substitution I = η u^{1/k} removes the
    /// integrable singularity of the density at zero when k < 1.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        let k = self.shape;
        let eta = self.scale;
        let norm = (-ln_gamma(k + 1.0)).exp();
        let opts = QuadOptions {
            rel_tol: tol,
            abs_tol: 0.0,
            max_intervals: 4000,
        };
        let q = crate::quad::integrate_to_infinity(
            |u| {
                let t = u.powf(1.0 / k);
                f(eta * t) * (-t).exp()
            },
            0.0,
            opts,
        )?;
        Ok(norm * q.value)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        rand_distr::Gamma::new(self.shape, self.scale)
            .map(|g| g.sample(rng))
            .unwrap_or(0.0)
    }
}

/// Second-order moment match: k = E²/Var, η = Var/E.
pub fn gamma_fit(m: &InterferenceMoments) -> Result<GammaInterferenceModel> {
    check("variance", m.variance_w2, |v| v > 0.0, "variance > 0 (use a point mass for degenerate interference)")?;
    check("mean", m.mean_w, |v| v > 0.0, "mean > 0")?;
    GammaInterferenceModel::new(m.mean_w * m.mean_w / m.variance_w2, m.variance_w2 / m.mean_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_field, thin_by_los};
    use crate::mc::{run_trials, trial_rng, Estimate};

    fn ground_tier(density: f64) -> InterfererTier {
        InterfererTier {
            process: TierProcess::ground(density),
            budget: LinkBudget::single_slope(1.0, 1.0, 1.0, 2.4e9, 1e-13, 3.5),
            fading: NakagamiParams::new(1).unwrap(),
            los: None,
        }
    }

    fn uav_tier(density: f64) -> InterfererTier {
        let mut budget = LinkBudget::single_slope(0.1, 100.0, 10.0, 28e9, 1e-11, 2.5);
        budget.nlos_pathloss_exponent = 3.5;
        budget.excess_loss_los = 10f64.powf(-0.1);
        budget.excess_loss_nlos = 0.01;
        InterfererTier {
            process: TierProcess::aerial(density, 10.0, 500.0),
            budget,
            fading: NakagamiParams::new(2).unwrap(),
            los: Some(LosModelParams::default()),
        }
    }

    fn small_region() -> Region {
        Region::new(2000.0, 100.0).unwrap()
    }

    #[test]
    fn laplace_trivial_cases() {
        let region = small_region();
        let g = ground_tier(15e-6);
        assert_eq!(g.laplace(0.0, &region, 1e-9).unwrap(), 1.0);
        assert_eq!(ground_tier(0.0).laplace(1e9, &region, 1e-9).unwrap(), 1.0);
        assert!(g.laplace(-1.0, &region, 1e-9).is_err());
        // p_LOS ≡ 0: the LOS factor is 1
        let mut u = uav_tier(15e-6);
        u.los = Some(LosModelParams { nu1: 89.9, nu2: 50.0 });
        let mean = u.moments(&region, 1e-9).unwrap().mean_w;
        let (a, _) = u.log_laplace_split(1.0 / mean, &region, 0.0, 1e-9).unwrap();
        assert!(a.abs() < 1e-12);
    }

    #[test]
    fn laplace_monotone_and_log_convex() {
        let region = small_region();
        for tier in [ground_tier(15e-6), uav_tier(15e-6)] {
            let mean = tier.moments(&region, 1e-9).unwrap().mean_w;
            let s: Vec<f64> = (0..9).map(|k| 10f64.powf(-2.0 + 0.5 * k as f64) / mean).collect();
            let l: Vec<f64> = s.iter().map(|&s| tier.laplace(s, &region, 1e-9).unwrap()).collect();
            for w in l.windows(2) {
                assert!(w[1] < w[0] && w[1] > 0.0);
            }
            // log-convexity on an evenly spaced grid
            let h = 0.2 / mean;
            let f = |s: f64| tier.laplace(s, &region, 1e-10).unwrap().ln();
            for k in 1..6 {
                let x = k as f64 * h;
                assert!(f(x - h) + f(x + h) - 2.0 * f(x) >= -1e-12);
            }
        }
    }

    #[test]
    fn denser_or_more_biased_tier_lowers_laplace() {
        let region = small_region();
        let base = ground_tier(15e-6);
        let s = 1.0 / base.moments(&region, 1e-9).unwrap().mean_w;
        let l0 = base.laplace(s, &region, 1e-9).unwrap();
        assert!(ground_tier(30e-6).laplace(s, &region, 1e-9).unwrap() < l0);
        let mut biased = base;
        biased.budget.bias = 2.0;
        assert!(biased.laplace(s, &region, 1e-9).unwrap() < l0);
    }

    #[test]
    fn moments_scale_linearly_in_density() {
        let region = small_region();
        assert_eq!(ground_tier(0.0).moments(&region, 1e-9).unwrap(), InterferenceMoments::default());
        for (a, b) in [(ground_tier(20e-6), ground_tier(10e-6)), (uav_tier(20e-6), uav_tier(10e-6))] {
            let ma = a.moments(&region, 1e-10).unwrap();
            let mb = b.moments(&region, 1e-10).unwrap();
            assert!((ma.mean_w / mb.mean_w - 2.0).abs() < 1e-9);
            assert!((ma.variance_w2 / mb.variance_w2 - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_mean_closed_form() {
        // κ1 = 2πλ P K ∫ r^{1−β} dr over [g, R]
        let region = small_region();
        let t = ground_tier(15e-6);
        let k = t.budget.friis_factor();
        let beta = 3.5;
        let integral = (region.guard_radius_m.powf(2.0 - beta) - region.radius_m.powf(2.0 - beta)) / (beta - 2.0);
        let expected = 2.0 * std::f64::consts::PI * 15e-6 * k * integral;
        let got = t.cumulant(1, &region, 0.0, 1e-12).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-10);
        // Rayleigh: κ2 uses E[h²] = 2
        let integral2 = (region.guard_radius_m.powf(2.0 - 2.0 * beta) - region.radius_m.powf(2.0 - 2.0 * beta)) / (2.0 * beta - 2.0);
        let expected2 = 2.0 * 2.0 * std::f64::consts::PI * 15e-6 * k * k * integral2;
        let got2 = t.cumulant(2, &region, 0.0, 1e-12).unwrap();
        assert!(((got2 - expected2) / expected2).abs() < 1e-10);
    }

    #[test]
    fn ground_moments_need_guard() {
        let region = Region::new(2000.0, 0.0).unwrap();
        assert!(ground_tier(1e-5).moments(&region, 1e-9).is_err());
    }

    #[test]
    fn raw_moments_from_cumulants() {
        let region = small_region();
        let t = ground_tier(15e-6);
        let mu = t.raw_moments(3, 1e-12, &region, 0.0, 1e-11).unwrap();
        let k1 = t.cumulant(1, &region, 0.0, 1e-11).unwrap() / 1e-12;
        let k2 = t.cumulant(2, &region, 0.0, 1e-11).unwrap() / 1e-24;
        let k3 = t.cumulant(3, &region, 0.0, 1e-11).unwrap() / 1e-36;
        assert_eq!(mu[0], 1.0);
        assert!((mu[1] - k1).abs() <= 1e-12 * k1);
        assert!((mu[2] - (k2 + k1 * k1)).abs() <= 1e-12 * mu[2]);
        let m3 = k3 + 3.0 * k2 * k1 + k1.powi(3);
        assert!((mu[3] - m3).abs() <= 1e-12 * m3);
    }

    #[test]
    fn gamma_fit_round_trip() {
        let g = gamma_fit(&InterferenceMoments { mean_w: 2.0, variance_w2: 4.0 }).unwrap();
        assert_eq!((g.shape, g.scale), (1.0, 2.0));
        let g = gamma_fit(&InterferenceMoments { mean_w: 3.0, variance_w2: 3.0 }).unwrap();
        assert_eq!((g.shape, g.scale), (3.0, 1.0));
        let m = InterferenceMoments { mean_w: 1.7e-11, variance_w2: 3.3e-22 };
        let g = gamma_fit(&m).unwrap();
        assert!((g.mean() - m.mean_w).abs() <= 1e-15 * m.mean_w);
        assert!((g.variance() - m.variance_w2).abs() <= 1e-15 * m.variance_w2);
        assert!(gamma_fit(&InterferenceMoments { mean_w: 1.0, variance_w2: 0.0 }).is_err());
    }

    #[test]
    fn gamma_expectation_matches_closed_forms() {
        for &(k, eta) in &[(0.3, 2.0), (1.0, 1.0), (4.5, 1e-11)] {
            let g = GammaInterferenceModel::new(k, eta).unwrap();
            let one = g.expectation(|_| 1.0, 1e-10).unwrap();
            assert!((one - 1.0).abs() < 1e-9);
            let mean = g.expectation(|y| y, 1e-10).unwrap();
            assert!(((mean - g.mean()) / g.mean()).abs() < 1e-9);
            let s = 0.7 / eta;
            let l = g.expectation(|y| (-s * y).exp(), 1e-10).unwrap();
            assert!(((l - g.laplace(s)) / g.laplace(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn field_interference_single_point_and_empty() {
        let region = small_region();
        let t = ground_tier(0.0);
        let empty = sample_field(&t.process, &region, 1).unwrap();
        let mut rng = trial_rng(1, 0);
        assert_eq!(t.field_interference(&empty, &region, 0.0, &mut rng).total(), 0.0);
        let mut det = ground_tier(1e-5);
        det.fading = NakagamiParams::new(1).unwrap();
        let field = PointFieldRealization {
            points: vec![crate::geometry::Point { x: 300.0, y: 400.0, z: 0.0 }],
            marks: vec![],
            seed: 0,
        };
        // Average over fading draws approaches P·PL(500).
        let n = 200_000;
        let mean = (0..n)
            .map(|_| det.field_interference(&field, &region, 0.0, &mut rng).total())
            .sum::<f64>()
            / n as f64;
        let expected = det.budget.biased_power() * det.budget.pathloss_los(500.0);
        assert!(((mean - expected) / expected).abs() < 0.01);
    }

    #[test]
    fn los_nlos_split_sums_to_total() {
        let region = small_region();
        let t = uav_tier(30e-6);
        let field = thin_by_los(&sample_field(&t.process, &region, 3).unwrap(), &LosModelParams::default(), 3).unwrap();
        let mut rng = trial_rng(3, 2);
        let s = t.field_interference(&field, &region, 0.0, &mut rng);
        assert!(s.los_w > 0.0 && s.nlos_w > 0.0);
        assert_eq!(s.total(), s.los_w + s.nlos_w);
    }

    #[test]
    fn mc_matches_laplace_and_moments_small_region() {
        let region = small_region();
        for tier in [ground_tier(15e-6), uav_tier(15e-6)] {
            let draws: Vec<f64> = run_trials(40_000, 77, |rng, _| tier.sample(&region, 0.0, rng).total());
            let m = tier.moments(&region, 1e-10).unwrap();
            let est = Estimate::from_samples(&draws);
            assert!((est.mean - m.mean_w).abs() < 4.0 * est.std_error, "{} vs {}", est.mean, m.mean_w);
            for &c in &[0.1, 1.0, 10.0] {
                let s = c / m.mean_w;
                let mc = draws.iter().map(|&i| (-s * i).exp()).sum::<f64>() / draws.len() as f64;
                let an = tier.laplace(s, &region, 1e-9).unwrap();
                assert!(((mc - an) / an).abs() < 0.03, "s={c}/E[I]: {mc} vs {an}");
            }
        }
    }

    #[test]
    fn direct_sampler_matches_field_sampler() {
        let region = small_region();
        let t = uav_tier(15e-6);
        let direct: Vec<f64> = run_trials(20_000, 5, |rng, _| t.sample(&region, 0.0, rng).total());
        let via_field: Vec<f64> = run_trials(20_000, 6, |rng, _| {
            let field = crate::geometry::sample_field_with(&t.process, &region, rng);
            let mut f = field;
            f.marks = crate::geometry::thin_marks(&f.points, t.los.as_ref().unwrap(), rng).unwrap();
            t.field_interference(&f, &region, 0.0, rng).total()
        });
        let a = Estimate::from_samples(&direct);
        let b = Estimate::from_samples(&via_field);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * se);
    }
}
