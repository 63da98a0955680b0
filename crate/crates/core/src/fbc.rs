//! Finite-blocklength decoding error, its linearized form, the satellite
//! closed form under a Gamma interference surrogate, the UAV outage-based
//! error, and outage probability/capacity.

use std::cell::Cell;
use std::f64::consts::{LN_2, PI};

use rand_chacha::ChaCha8Rng;

use crate::channel::{capacity_dispersion, pathloss_uav, NakagamiParams, ShadowedRicianParams};
use crate::error::{check, Error, Result};
use crate::geometry::Region;
use crate::interference::{GammaInterferenceModel, InterfererTier};
use crate::mc::{run_trials, Estimate};
use crate::quad::{integrate, integrate_with_breaks, QuadOptions};
use crate::special::{binomial, hyp2f1, ln_gamma, q_function};

/// Hard cap on the terms of each closed-form series.
pub const THEOREM_SERIES_CAP: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbcSpec {
    pub blocklength: u32,
    /// Coding rate in bits per channel use.
    pub rate: f64,
    pub target_error: f64,
}

impl FbcSpec {
    pub fn new(blocklength: u32, rate: f64, target_error: f64) -> Result<Self> {
        let s = Self {
            blocklength,
            rate,
            target_error,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocklength == 0 {
            return Err(Error::invalid("fbc.blocklength", "must be >= 1"));
        }
        check("fbc.rate", self.rate, |v| v > 0.0, "rate > 0")?;
        check("fbc.target_error", self.target_error, |v| v > 0.0 && v < 1.0, "0 < epsilon < 1")
    }

    /// SINR threshold 2^R − 1.
    pub fn threshold(&self) -> f64 {
        self.rate.exp2() - 1.0
    }

    pub fn sqrt_n(&self) -> f64 {
        (self.blocklength as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationConstants {
    pub theta: f64,
    pub zeta_low: f64,
    pub zeta_up: f64,
}

pub fn linearization_constants(spec: &FbcSpec) -> LinearizationConstants {
    let theta = 1.0 / (2.0 * PI * ((2.0 * spec.rate).exp2() - 1.0).sqrt());
    let half = 1.0 / (2.0 * theta * spec.sqrt_n());
    let g0 = spec.threshold();
    LinearizationConstants {
        theta,
        zeta_low: (g0 - half).max(0.0),
        zeta_up: g0 + half,
    }
}

/// Piecewise-linear surrogate of Q(√n (C(γ) − R)/√V(γ)).
pub fn psi(gamma: f64, consts: &LinearizationConstants, spec: &FbcSpec) -> f64 {
    if gamma <= consts.zeta_low {
        1.0
    } else if gamma >= consts.zeta_up {
        0.0
    } else {
        (0.5 - consts.theta * spec.sqrt_n() * (gamma - spec.threshold())).clamp(0.0, 1.0)
    }
}

/// Normal-approximation error at a single SINR value.
pub fn epsilon_normal_at(spec: &FbcSpec, gamma: f64) -> f64 {
    let cd = capacity_dispersion(gamma);
    if cd.dispersion <= 0.0 {
        return if cd.capacity_bits < spec.rate { 1.0 } else { 0.0 };
    }
    q_function(spec.sqrt_n() * (cd.capacity_bits - spec.rate) / cd.dispersion.sqrt())
}

/// Sample mean of the normal-approximation error over SINR draws.
pub fn epsilon_normal(spec: &FbcSpec, sinr_samples: &[f64]) -> Result<f64> {
    if sinr_samples.is_empty() {
        return Err(Error::invalid("sinr_samples", "need at least one sample"));
    }
    Ok(crate::mc::compensated_sum(sinr_samples.iter().map(|&g| epsilon_normal_at(spec, g))) / sinr_samples.len() as f64)
}

/// E[Ψ(γ)] for an SINR law given by its CDF:
/// F(ζl) + (1/2 + ϑ√nγ₀)(F(ζu) − F(ζl)) − ϑ√n ∫_{ζl}^{ζu} x dF(x),
/// with the Stieltjes integral taken by parts.
pub fn epsilon_linearized<F>(cdf: F, spec: &FbcSpec, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let c = linearization_constants(spec);
    let k = c.theta * spec.sqrt_n();
    let fl = cdf(c.zeta_low)?;
    let fu = cdf(c.zeta_up)?;
    let failure = Cell::new(None);
    let opts = QuadOptions {
        rel_tol: tol,
        abs_tol: tol * 1e-3 * (c.zeta_up - c.zeta_low),
        max_intervals: 4000,
    };
    let area = integrate(
        |x| match cdf(x) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        c.zeta_low,
        c.zeta_up,
        opts,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let first_moment = c.zeta_up * fu - c.zeta_low * fl - area.value;
    let eps = fl + (0.5 + k * spec.threshold()) * (fu - fl) - k * first_moment;
    Ok(eps.clamp(0.0, 1.0))
}

/// SINR γ = A·X/(I + σ²) of a satellite link with shadowed-Rician X and
/// Gamma-distributed interference I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteSinrModel {
    pub fading: ShadowedRicianParams,
    pub interference: GammaInterferenceModel,
    /// A = P·φ·G·PL in watts.
    pub signal_w: f64,
    pub noise_w: f64,
}

impl SatelliteSinrModel {
    /// Interference-limited CDF (noise dropped) as the double series
    /// (α/β) Σ_i (m)_i (δ/β)^i / i! · P[N ≥ i+1], N ~ NegBin(k, w),
    /// w = uη/(1+uη), u = βx/A.
    pub fn cdf_series(&self, x: f64, tol: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::domain("sinr_cdf", format!("x = {x} < 0")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        let sr = &self.fading;
        let beta = sr.fade_rate();
        let ratio = sr.delta() / beta;
        let m = sr.m as f64;
        let k = self.interference.shape;
        let ue = beta * x / self.signal_w * self.interference.scale;
        let w = ue / (1.0 + ue);
        let tails = negbin_upper_tails(k, w, tol)?;
        let mut coef = 1.0;
        let mut sum = 0.0;
        for i in 0..THEOREM_SERIES_CAP {
            let fi = i as f64;
            let tail = tails.at(i);
            sum += coef * tail;
            let q = (m + fi + 1.0) / (fi + 2.0) * ratio;
            let next = coef * (m + fi) / (fi + 1.0) * ratio;
            if q < 1.0 && next * tail / (1.0 - q) <= tol * sum {
                return Ok((sr.alpha() / beta * sum).clamp(0.0, 1.0));
            }
            if sum == 0.0 && tail == 0.0 {
                return Ok(0.0);
            }
            coef = next;
        }
        Err(Error::SeriesCapExceeded {
            series: "satellite sinr cdf (i)",
            cap: THEOREM_SERIES_CAP,
        })
    }

    /// CDF by numerical expectation over the Gamma interference, noise included:
    /// E_I[F_X(x (I + σ²)/A)].
    pub fn cdf_quadrature(&self, x: f64, tol: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::domain("sinr_cdf", format!("x = {x} < 0")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let failure = Cell::new(None);
        let v = self.interference.expectation(
            |y| match self.fading.cdf_finite(x * (y + self.noise_w) / self.signal_w) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            },
            tol,
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(v.clamp(0.0, 1.0))
    }

    /// Λ = ∫_{ζl}^{ζu} x f_γ(x) dx of the interference-limited SINR, in closed
    /// form through ₂F₁(l+k+1, l+2; l+3; −ζη(β−δ)/A).
    pub fn first_moment_window(&self, zeta_low: f64, zeta_up: f64) -> Result<f64> {
        let sr = &self.fading;
        let a = self.signal_w;
        let k = self.interference.shape;
        let eta = self.interference.scale;
        let rate = sr.fade_rate() - sr.delta();
        let delta = sr.delta();
        let m = sr.m;
        let mut total = 0.0;
        let mut binom = 1.0; // C(m−1, l)
        for l in 0..m {
            if l > 0 {
                binom *= (m - l) as f64 / l as f64;
            }
            let lf = l as f64;
            // (η/A) (δη/A)^l Γ(l+k+1) / (Γ(k) l! (l+2))
            let log_c = (eta / a).ln() + lf * (delta * eta / a).ln() + ln_gamma(lf + k + 1.0)
                - ln_gamma(k)
                - ln_gamma(lf + 1.0);
            let coef = binom * log_c.exp() / (lf + 2.0);
            let piece = |zeta: f64| -> Result<f64> {
                if zeta <= 0.0 {
                    return Ok(0.0);
                }
                let z = -zeta * eta * rate / a;
                Ok(zeta.powf(lf + 2.0) * hyp2f1(lf + k + 1.0, lf + 2.0, lf + 3.0, z)?)
            };
            total += coef * (piece(zeta_up)? - piece(zeta_low)?);
        }
        Ok(sr.alpha() * total)
    }
}

/// Upper tails P[N ≥ i+1] of a negative binomial with shape k and success
/// weight w, P[N = j] = Γ(k+j)/(Γ(k) j!) (1−w)^k w^j.
struct NegBinTails {
    /// `values[i]` = P[N ≥ i+1]
    values: Vec<f64>,
    /// Tail used beyond the tabulated range (non-increasing).
    complement_mode: bool,
    k: f64,
    w: f64,
}

impl NegBinTails {
    fn at(&self, i: usize) -> f64 {
        if let Some(v) = self.values.get(i) {
            return *v;
        }
        if self.complement_mode {
            // Extend 1 − CDF lazily; rarely reached.
            let mut pmf = (self.k * (-self.w).ln_1p()).exp();
            let mut cdf = pmf;
            for j in 0..i {
                pmf *= (self.k + j as f64) / (j as f64 + 1.0) * self.w;
                cdf += pmf;
            }
            (1.0 - cdf).max(0.0)
        } else {
            0.0
        }
    }
}

fn negbin_upper_tails(k: f64, w: f64, tol: f64) -> Result<NegBinTails> {
    let p0 = (k * (-w).ln_1p()).exp();
    if w > 0.5 {
        // Tails near one: 1 − Σ_{j≤i} pmf(j) is accurate.
        let mut values = Vec::new();
        let mut pmf = p0;
        let mut cdf = p0;
        for j in 0..THEOREM_SERIES_CAP {
            values.push((1.0 - cdf).max(0.0));
            pmf *= (k + j as f64) / (j as f64 + 1.0) * w;
            cdf += pmf;
        }
        return Ok(NegBinTails {
            values,
            complement_mode: true,
            k,
            w,
        });
    }
    // Small tails: tabulate the pmf until the geometric remainder is
    // negligible, then accumulate backwards so no cancellation occurs.
    let mut pmf = vec![p0];
    loop {
        let j = pmf.len() - 1;
        let jf = j as f64;
        let next = pmf[j] * (k + jf) / (jf + 1.0) * w;
        let q = (k + jf + 1.0) / (jf + 2.0) * w;
        pmf.push(next);
        if q < 1.0 && next / (1.0 - q) <= tol * 1e-3 * pmf.iter().skip(1).sum::<f64>().max(f64::MIN_POSITIVE) {
            break;
        }
        if next == 0.0 {
            break;
        }
        if pmf.len() > 4 * THEOREM_SERIES_CAP {
            return Err(Error::SeriesCapExceeded {
                series: "satellite sinr cdf (j)",
                cap: THEOREM_SERIES_CAP,
            });
        }
    }
    let mut values = vec![0.0; pmf.len()];
    let mut acc = 0.0;
    for j in (1..pmf.len()).rev() {
        acc += pmf[j];
        values[j - 1] = acc;
    }
    Ok(NegBinTails {
        values,
        complement_mode: false,
        k,
        w,
    })
}

/// Closed-form decoding error of the interference-limited satellite link.
pub fn epsilon_satellite_theorem1(model: &SatelliteSinrModel, spec: &FbcSpec, tol: f64) -> Result<f64> {
    let c = linearization_constants(spec);
    let k = c.theta * spec.sqrt_n();
    let fl = model.cdf_series(c.zeta_low, tol)?;
    let fu = model.cdf_series(c.zeta_up, tol)?;
    let lambda = model.first_moment_window(c.zeta_low, c.zeta_up)?;
    Ok((fl + (0.5 + k * spec.threshold()) * (fu - fl) - k * lambda).clamp(0.0, 1.0))
}

/// High-SNR decoding error with the linear fading CDF F(x) ≈ αx, so that
/// F_γ(x) ≈ K x with K = α E[I]/A.
pub fn epsilon_satellite_asymptotic(model: &SatelliteSinrModel, spec: &FbcSpec) -> f64 {
    let c = linearization_constants(spec);
    let k = c.theta * spec.sqrt_n();
    let slope = model.fading.alpha() * model.interference.mean() / model.signal_w;
    let (zl, zu) = (c.zeta_low, c.zeta_up);
    let eps = slope * (zl + (0.5 + k * spec.threshold()) * (zu - zl) - 0.5 * k * (zu * zu - zl * zl));
    eps.clamp(0.0, 1.0)
}

/// UAV downlink: the serving UAV at horizontal distance r0 and altitude
/// `serving_altitude_m`, interfered by the rest of the UAV tier beyond r0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavLink {
    pub interferers: InterfererTier,
    pub region: Region,
    pub serving_altitude_m: f64,
}

impl UavLink {
    /// The serving distance replaces the guard radius as the exclusion zone.
    pub fn interference_region(&self) -> Region {
        Region {
            guard_radius_m: 0.0,
            ..self.region
        }
    }

    pub fn serving_pathloss(&self, r0: f64) -> Result<f64> {
        self.serving_pathloss_at(r0, self.serving_altitude_m)
    }

    /// Pathloss of a serving UAV at horizontal distance r0 and altitude z.
    pub fn serving_pathloss_at(&self, r0: f64, z: f64) -> Result<f64> {
        let d = (r0 * r0 + z * z).sqrt();
        let b = &self.interferers.budget;
        match &self.interferers.los {
            Some(los) => pathloss_uav(b, d, z, los),
            None => Ok(b.pathloss_los(d)),
        }
    }

    /// A = P·φ·G·PL of the serving link.
    pub fn signal_w(&self, r0: f64) -> Result<f64> {
        self.signal_w_at(r0, self.serving_altitude_m)
    }

    pub fn signal_w_at(&self, r0: f64, z: f64) -> Result<f64> {
        Ok(self.interferers.budget.biased_power() * self.serving_pathloss_at(r0, z)?)
    }

    pub fn fading(&self) -> NakagamiParams {
        self.interferers.fading
    }

    /// Σ_ℓ (−1)^ℓ C(Γ,ℓ) e^{−s_ℓσ²} ℒ_I(s_ℓ), s_ℓ = ℓηγ₀/A.
    pub fn epsilon_given_distance(&self, spec: &FbcSpec, r0: f64, tol: f64) -> Result<f64> {
        let a = self.signal_w(r0)?;
        let g = self.fading().m;
        let eta = self.fading().eta();
        let noise = self.interferers.budget.noise_power_w;
        let region = self.interference_region();
        let mut sum = 0.0;
        for l in 0..=g {
            let s = l as f64 * eta * spec.threshold() / a;
            let lap = if l == 0 {
                1.0
            } else {
                self.interferers.laplace_beyond(s, &region, r0, tol)?
            };
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binomial(g as f64, l) * (-s * noise).exp() * lap;
        }
        Ok(sum.clamp(0.0, 1.0))
    }

    /// Error averaged over the distance to the horizontally nearest UAV; an
    /// empty region counts as failure.
    pub fn epsilon_averaged(&self, spec: &FbcSpec, tol: f64) -> Result<f64> {
        let lambda = self.interferers.process.density;
        let radius = self.region.radius_m;
        if lambda == 0.0 {
            return Ok(1.0);
        }
        let typical = 1.0 / (PI * lambda).sqrt();
        let mut breaks = vec![0.0];
        let mut x = 0.125 * typical;
        while x < radius.min(8.0 * typical) {
            breaks.push(x);
            x *= 2.0;
        }
        breaks.push(radius);
        let failure = Cell::new(None);
        let inner_tol = (tol * 0.01).max(1e-12);
        let q = integrate_with_breaks(
            |r| {
                let pdf = 2.0 * PI * lambda * r * (-lambda * PI * r * r).exp();
                if pdf == 0.0 {
                    return 0.0;
                }
                match self.epsilon_given_distance(spec, r, inner_tol) {
                    Ok(e) => e * pdf,
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            },
            &breaks,
            QuadOptions {
                rel_tol: tol,
                abs_tol: tol * 1e-3,
                max_intervals: 2000,
            },
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let empty = (-lambda * PI * radius * radius).exp();
        Ok((q.value + empty).clamp(0.0, 1.0))
    }

    /// Monte Carlo P[γ < 2^R − 1] at serving distance r0 with exact Nakagami
    /// fading on the serving link.
    pub fn mc_outage_given_distance(&self, spec: &FbcSpec, r0: f64, trials: usize, seed: u64) -> Result<Estimate> {
        let a = self.signal_w(r0)?;
        let region = self.interference_region();
        let noise = self.interferers.budget.noise_power_w;
        let g0 = spec.threshold();
        let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| {
            let i = self.interferers.sample(&region, r0, rng).total();
            let h = self.fading().sample(rng);
            if a * h / (i + noise) < g0 {
                1.0
            } else {
                0.0
            }
        });
        Ok(Estimate::from_samples(&draws))
    }

    /// Monte Carlo of the closed-form conditional outage
    /// (1 − e^{−ηγ₀(I+σ²)/A})^Γ over sampled interference.
    pub fn mc_bound_given_distance(&self, spec: &FbcSpec, r0: f64, trials: usize, seed: u64) -> Result<Estimate> {
        let a = self.signal_w(r0)?;
        let region = self.interference_region();
        let noise = self.interferers.budget.noise_power_w;
        let fading = self.fading();
        let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| {
            let i = self.interferers.sample(&region, r0, rng).total();
            outage_uav(fading, spec, &LinkState::new(a, i, noise))
        });
        Ok(Estimate::from_samples(&draws))
    }
}

/// Deterministic link state: signal A = P·φ·G·PL, interference and noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub signal_w: f64,
    pub interference_w: f64,
    pub noise_w: f64,
}

impl LinkState {
    pub fn new(signal_w: f64, interference_w: f64, noise_w: f64) -> Self {
        Self {
            signal_w,
            interference_w,
            noise_w,
        }
    }

    /// Fading gain at which the SINR equals `gamma`.
    fn gain_for(&self, gamma: f64) -> f64 {
        gamma * (self.interference_w + self.noise_w) / self.signal_w
    }
}

/// P[X < (2^R−1)(I+σ²)/A] with the exact shadowed-Rician CDF.
pub fn outage_satellite(sr: &ShadowedRicianParams, spec: &FbcSpec, link: &LinkState) -> Result<f64> {
    sr.cdf(link.gain_for(spec.threshold()), 1e-12)
}

/// High-SNR satellite outage α(2^R−1)(I+σ²)/A, capped at one.
pub fn outage_satellite_high_snr(sr: &ShadowedRicianParams, spec: &FbcSpec, link: &LinkState) -> f64 {
    (sr.alpha() * link.gain_for(spec.threshold())).min(1.0)
}

/// UAV outage {1 − exp(−η(2^R−1)(I+σ²)/A)}^Γ.
pub fn outage_uav(fading: NakagamiParams, spec: &FbcSpec, link: &LinkState) -> f64 {
    let t = fading.eta() * link.gain_for(spec.threshold());
    (-(-t).exp_m1()).powi(fading.m as i32)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    check("epsilon", epsilon, |v| v > 0.0 && v < 1.0, "0 < epsilon < 1")
}

/// Largest rate whose satellite outage (exact CDF) stays at ε:
/// log₂(1 + F⁻¹(ε)·A/(I+σ²)), inverting the CDF numerically.
pub fn outage_capacity_satellite(sr: &ShadowedRicianParams, epsilon: f64, link: &LinkState) -> Result<f64> {
    check_epsilon(epsilon)?;
    let x = invert_cdf(|x| sr.cdf(x, 1e-13), epsilon)?;
    Ok((x * link.signal_w / (link.interference_w + link.noise_w)).ln_1p() / LN_2)
}

/// High-SNR closed form log₂(1 + εA/(α(I+σ²))).
pub fn outage_capacity_satellite_high_snr(sr: &ShadowedRicianParams, epsilon: f64, link: &LinkState) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok((epsilon * link.signal_w / (sr.alpha() * (link.interference_w + link.noise_w))).ln_1p() / LN_2)
}

/// UAV closed form log₂(1 − A/(η(I+σ²))·ln(1 − ε^{1/Γ})).
pub fn outage_capacity_uav(fading: NakagamiParams, epsilon: f64, link: &LinkState) -> Result<f64> {
    check_epsilon(epsilon)?;
    let inner = -(-(epsilon.powf(1.0 / fading.m as f64))).ln_1p();
    Ok((link.signal_w / (fading.eta() * (link.interference_w + link.noise_w)) * inner).ln_1p() / LN_2)
}

/// Solves F(x) = p for a nondecreasing CDF on [0, ∞) by bracketing and bisection.
pub fn invert_cdf<F: Fn(f64) -> Result<f64>>(cdf: F, p: f64) -> Result<f64> {
    let mut hi = 1.0;
    let mut tries = 0;
    while cdf(hi)? < p {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::Bracketing(format!("CDF never reaches {p}")));
        }
    }
    let mut lo = 0.0;
    if cdf(lo)? >= p {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
