//! ε-effective capacity, its high-SINR forms for both tiers, and the
//! delay-bound violation probability.
//!
//! The service rate of a block is the outage capacity C^ε(I) of the link at
//! the current interference level, so every expectation below is over I.
//! Capacities are reported in bits per block of n channel uses.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{capacity_dispersion, ShadowedRicianParams};
use crate::error::{check, Error, Result};
use crate::fbc::{
    invert_cdf, outage_capacity_satellite_high_snr, outage_capacity_uav, FbcSpec, LinkState, SatelliteSinrModel,
    UavLink,
};
use crate::geometry::sample_field_with;
use crate::interference::{gamma_fit, GammaInterferenceModel};
use crate::mc::{compensated_sum, run_trials};
use crate::special::{binomial, q_inverse};

/// Default truncation of the UAV binomial series.
pub const UAV_SERIES_CAP: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosSpec {
    /// θ, per bit.
    pub qos_exponent: f64,
    /// D^th in channel uses.
    pub delay_bound: f64,
    /// Probability δ that the queue is non-empty.
    pub nonempty_prob: f64,
    /// Q^th in bits; reported, never used in a computation.
    pub overflow_threshold: f64,
}

impl Default for QosSpec {
    fn default() -> Self {
        Self {
            qos_exponent: 0.01,
            delay_bound: 100.0,
            nonempty_prob: 1.0,
            overflow_threshold: 1000.0,
        }
    }
}

impl QosSpec {
    pub fn new(qos_exponent: f64, delay_bound: f64, nonempty_prob: f64) -> Result<Self> {
        let q = Self {
            qos_exponent,
            delay_bound,
            nonempty_prob,
            ..Self::default()
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        check("qos.theta", self.qos_exponent, |v| v > 0.0, "theta > 0")?;
        check("qos.delay_bound", self.delay_bound, |v| v > 0.0, "delay bound > 0")?;
        check("qos.nonempty_prob", self.nonempty_prob, |v| v > 0.0 && v <= 1.0, "0 < delta <= 1")?;
        check("qos.overflow_threshold", self.overflow_threshold, |v| v >= 0.0, "threshold >= 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcMethod {
    ExactMc,
    ExactQuadrature,
    AsymptoticQuadrature,
    AsymptoticSeries,
}

impl EcMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EcMethod::ExactMc => "exact-mc",
            EcMethod::ExactQuadrature => "exact-quadrature",
            EcMethod::AsymptoticQuadrature => "asymptotic-quadrature",
            EcMethod::AsymptoticSeries => "asymptotic-series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCapacityResult {
    /// Bits per block.
    pub value: f64,
    /// θn/ln 2.
    pub theta_tilde: f64,
    pub method: EcMethod,
}

pub fn theta_tilde(theta: f64, blocklength: u32) -> f64 {
    theta * blocklength as f64 / LN_2
}

fn check_theta(theta: f64) -> Result<()> {
    check(
        "theta",
        theta,
        |v| v > 0.0,
        "theta > 0 (use effective_capacity_small_theta for the limit)",
    )
}

fn check_error_prob(epsilon: f64) -> Result<()> {
    check("epsilon", epsilon, |v| (0.0..=1.0).contains(&v), "0 <= epsilon <= 1")
}

fn check_open_epsilon(epsilon: f64) -> Result<()> {
    check("epsilon", epsilon, |v| v > 0.0 && v < 1.0, "0 < epsilon < 1")
}

/// −(1/θ) ln{ε + (1−ε) e^{log_y}}, summed in the log domain.
fn ec_from_log_mgf(theta: f64, epsilon: f64, log_y: f64) -> f64 {
    let a = if epsilon > 0.0 { epsilon.ln() } else { f64::NEG_INFINITY };
    let b = if epsilon < 1.0 {
        (-epsilon).ln_1p() + log_y
    } else {
        f64::NEG_INFINITY
    };
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let lse = hi + ((a - hi).exp() + (b - hi).exp()).ln();
    (-lse / theta).max(0.0)
}

/// ln of the sample mean of e^{−θ n R_i}.
fn log_mean_exp(theta: f64, n: u32, rates: &[f64]) -> f64 {
    let t = theta * n as f64;
    let lmax = rates.iter().map(|&r| -t * r).fold(f64::NEG_INFINITY, f64::max);
    let s = compensated_sum(rates.iter().map(|&r| (-t * r - lmax).exp()));
    lmax + (s / rates.len() as f64).ln()
}

/// ε-effective capacity −(1/θ) ln{ε + (1−ε) E[e^{−θnR}]} over rate samples
/// (bits per channel use).
pub fn effective_capacity(
    theta: f64,
    spec: &FbcSpec,
    rates: &[f64],
    epsilon: f64,
) -> Result<EffectiveCapacityResult> {
    check_theta(theta)?;
    check_error_prob(epsilon)?;
    if rates.is_empty() {
        return Err(Error::invalid("rates", "need at least one rate sample"));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::invalid("rates", format!("rate {r} is not a finite nonnegative value")));
    }
    Ok(EffectiveCapacityResult {
        value: ec_from_log_mgf(theta, epsilon, log_mean_exp(theta, spec.blocklength, rates)),
        theta_tilde: theta_tilde(theta, spec.blocklength),
        method: EcMethod::ExactMc,
    })
}

/// θ → 0 limit (1−ε)·n·E[R].
pub fn effective_capacity_small_theta(spec: &FbcSpec, rates: &[f64], epsilon: f64) -> Result<f64> {
    check_error_prob(epsilon)?;
    if rates.is_empty() {
        return Err(Error::invalid("rates", "need at least one rate sample"));
    }
    let mean = compensated_sum(rates.iter().copied()) / rates.len() as f64;
    Ok((1.0 - epsilon) * spec.blocklength as f64 * mean)
}

/// EC with E_I[(1 + g/(I+σ²))^{−θ̃}] taken by quadrature over a Gamma
/// interference law; `g` is the rate numerator so that R = log₂(1 + g/(I+σ²)).
fn ec_over_gamma(
    theta: f64,
    spec: &FbcSpec,
    epsilon: f64,
    gm: &GammaInterferenceModel,
    numerator: f64,
    noise: f64,
    tol: f64,
    method: EcMethod,
) -> Result<EffectiveCapacityResult> {
    let tt = theta_tilde(theta, spec.blocklength);
    let y = gm.expectation(|i| (-tt * (numerator / (i + noise)).ln_1p()).exp(), tol)?;
    Ok(EffectiveCapacityResult {
        value: ec_from_log_mgf(theta, epsilon, y.ln()),
        theta_tilde: tt,
        method,
    })
}

/// High-SINR satellite EC with rate log₂(1 + εA/(α(I+σ²))), averaged over the
/// model's Gamma interference by quadrature.
pub fn effective_capacity_satellite_asymptotic(
    theta: f64,
    spec: &FbcSpec,
    model: &SatelliteSinrModel,
    epsilon: f64,
    tol: f64,
) -> Result<EffectiveCapacityResult> {
    check_theta(theta)?;
    check_error_prob(epsilon)?;
    if epsilon == 1.0 {
        return Ok(EffectiveCapacityResult {
            value: 0.0,
            theta_tilde: theta_tilde(theta, spec.blocklength),
            method: EcMethod::AsymptoticQuadrature,
        });
    }
    let g = epsilon * model.signal_w / model.fading.alpha();
    ec_over_gamma(
        theta,
        spec,
        epsilon,
        &model.interference,
        g,
        model.noise_w,
        tol,
        EcMethod::AsymptoticQuadrature,
    )
}

/// Satellite EC with the exact outage capacity log₂(1 + F⁻¹(ε)A/(I+σ²)).
pub fn effective_capacity_satellite(
    theta: f64,
    spec: &FbcSpec,
    model: &SatelliteSinrModel,
    epsilon: f64,
    tol: f64,
) -> Result<EffectiveCapacityResult> {
    check_theta(theta)?;
    check_open_epsilon(epsilon)?;
    let x = invert_cdf(|x| model.fading.cdf(x, 1e-13), epsilon)?;
    ec_over_gamma(
        theta,
        spec,
        epsilon,
        &model.interference,
        x * model.signal_w,
        model.noise_w,
        tol,
        EcMethod::ExactQuadrature,
    )
}

/// Rate samples of the high-SINR satellite outage capacity over Gamma draws.
pub fn satellite_rate_samples(
    sr: &ShadowedRicianParams,
    model: &SatelliteSinrModel,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_open_epsilon(epsilon)?;
    let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| {
        let i = model.interference.sample(rng);
        outage_capacity_satellite_high_snr(sr, epsilon, &LinkState::new(model.signal_w, i, model.noise_w))
    });
    draws.into_iter().collect()
}

/// UAV outage-capacity samples at serving distance r0 over sampled
/// interference fields.
pub fn uav_rate_samples(link: &UavLink, r0: f64, epsilon: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    check_open_epsilon(epsilon)?;
    let a = link.signal_w(r0)?;
    let noise = link.interferers.budget.noise_power_w;
    let region = link.interference_region();
    let fading = link.fading();
    let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| {
        let i = link.interferers.sample(&region, r0, rng).total();
        outage_capacity_uav(fading, epsilon, &LinkState::new(a, i, noise))
    });
    draws.into_iter().collect()
}

/// Per-trial rates of the satellite link alone and of the better of the
/// satellite and UAV links, with independent interference on each.
#[derive(Debug, Clone, PartialEq)]
pub struct TierRateSamples {
    pub satellite: Vec<f64>,
    pub uav: Vec<f64>,
    pub best: Vec<f64>,
}

/// Horizontal distance of the serving UAV in a Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServingDistance {
    Fixed(f64),
    /// A full UAV field per trial: the nearest UAV in 3D serves and every
    /// other UAV interferes. Trials without a UAV have rate zero on that tier.
    Nearest,
}

/// Draws satellite interference from the model's Gamma law and UAV
/// interference from the UAV field beyond the serving distance; rates are
/// the exact outage capacities at ε.
pub fn tier_rate_samples(
    model: &SatelliteSinrModel,
    link: &UavLink,
    serving: ServingDistance,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<TierRateSamples> {
    check_open_epsilon(epsilon)?;
    let x = invert_cdf(|x| model.fading.cdf(x, 1e-13), epsilon)?;
    let noise_u = link.interferers.budget.noise_power_w;
    let region = link.interference_region();
    let fading = link.fading();
    let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| -> Result<(f64, f64)> {
        let i_s = model.interference.sample(rng);
        let rs = (x * model.signal_w / (i_s + model.noise_w)).ln_1p() / LN_2;
        let (a_u, i_u) = match serving {
            ServingDistance::Fixed(r0) => {
                if r0 >= region.radius_m {
                    return Ok((rs, 0.0));
                }
                (link.signal_w(r0)?, link.interferers.sample(&region, r0, rng).total())
            }
            ServingDistance::Nearest => {
                let field = sample_field_with(&link.interferers.process, &region, rng);
                let Some(k) = field.nearest() else {
                    return Ok((rs, 0.0));
                };
                let p = field.points[k];
                let mut i_u = 0.0;
                for (j, q) in field.points.iter().enumerate() {
                    let u: f64 = rng.random();
                    let h = fading.sample(rng);
                    if j == k {
                        continue;
                    }
                    let (p_los, pl, pn) = link.interferers.branches(q.horizontal(), q.z);
                    i_u += h * if u < p_los { pl } else { pn };
                }
                (link.signal_w_at(p.horizontal(), p.z)?, i_u)
            }
        };
        let ru = outage_capacity_uav(fading, epsilon, &LinkState::new(a_u, i_u, noise_u))?;
        Ok((rs, ru))
    });
    let mut out = TierRateSamples {
        satellite: Vec::with_capacity(trials),
        uav: Vec::with_capacity(trials),
        best: Vec::with_capacity(trials),
    };
    for d in draws {
        let (rs, ru) = d?;
        out.satellite.push(rs);
        out.uav.push(ru);
        out.best.push(rs.max(ru));
    }
    Ok(out)
}

/// −ln(1 − ε^{1/Γ}).
fn uav_outage_constant(link: &UavLink, epsilon: f64) -> f64 {
    -(-(epsilon.powf(1.0 / link.fading().m as f64))).ln_1p()
}

/// UAV EC at serving distance r0 from the exact rate
/// log₂(1 + cA/(η(I+σ²))), with the interference replaced by its
/// moment-matched Gamma surrogate.
pub fn effective_capacity_uav_quadrature(
    theta: f64,
    spec: &FbcSpec,
    link: &UavLink,
    r0: f64,
    epsilon: f64,
    tol: f64,
) -> Result<EffectiveCapacityResult> {
    check_theta(theta)?;
    check_open_epsilon(epsilon)?;
    let a = link.signal_w(r0)?;
    let noise = link.interferers.budget.noise_power_w;
    let g = uav_outage_constant(link, epsilon) * a / link.fading().eta();
    let moments = link
        .interferers
        .moments_beyond(&link.interference_region(), r0, (tol * 0.1).max(1e-12))?;
    if moments.mean_w == 0.0 {
        let tt = theta_tilde(theta, spec.blocklength);
        let log_y = -tt * (g / noise).ln_1p();
        return Ok(EffectiveCapacityResult {
            value: ec_from_log_mgf(theta, epsilon, log_y),
            theta_tilde: tt,
            method: EcMethod::ExactQuadrature,
        });
    }
    let gm = gamma_fit(&moments)?;
    ec_over_gamma(theta, spec, epsilon, &gm, g, noise, tol, EcMethod::ExactQuadrature)
}

/// High-SINR UAV EC at serving distance r0 through the binomial series
/// (ησ²/(cA))^θ̃ Σ_ℓ C(θ̃, ℓ) E[(I/σ²)^ℓ], with Campbell moments.
///
/// Fails with `SeriesDivergence` once the terms start growing.
pub fn effective_capacity_uav_series(
    theta: f64,
    spec: &FbcSpec,
    link: &UavLink,
    r0: f64,
    epsilon: f64,
    series_cap: usize,
    tol: f64,
) -> Result<EffectiveCapacityResult> {
    check_theta(theta)?;
    check_open_epsilon(epsilon)?;
    let a = link.signal_w(r0)?;
    let noise = link.interferers.budget.noise_power_w;
    let c = uav_outage_constant(link, epsilon);
    let tt = theta_tilde(theta, spec.blocklength);
    let mut seq = link
        .interferers
        .moment_sequence(noise, link.interference_region(), r0, (tol * 0.1).max(1e-12))?;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    let mut converged = false;
    for l in 1..=series_cap {
        let coef = binomial(tt, l as u32);
        if coef == 0.0 {
            converged = true;
            break;
        }
        let term = coef * seq.next_moment()?;
        sum += term;
        if term.abs() <= tol * sum.abs() {
            converged = true;
            break;
        }
        // Past the binomial's own peak the terms must shrink.
        if l as f64 > tt + 1.0 && term.abs() > prev {
            return Err(Error::SeriesDivergence {
                series: "uav effective capacity",
                index: l,
            });
        }
        prev = term.abs();
    }
    if !converged {
        return Err(Error::SeriesCapExceeded {
            series: "uav effective capacity",
            cap: series_cap,
        });
    }
    if !(sum > 0.0) {
        return Err(Error::SeriesDivergence {
            series: "uav effective capacity",
            index: seq.order(),
        });
    }
    let log_y = tt * (link.fading().eta() * noise / (c * a)).ln() + sum.ln();
    Ok(EffectiveCapacityResult {
        value: ec_from_log_mgf(theta, epsilon, log_y),
        theta_tilde: tt,
        method: EcMethod::AsymptoticSeries,
    })
}

/// UAV EC by the binomial series, falling back to quadrature of the exact
/// form when the series does not converge.
pub fn effective_capacity_uav(
    theta: f64,
    spec: &FbcSpec,
    link: &UavLink,
    r0: f64,
    epsilon: f64,
    series_cap: usize,
    tol: f64,
) -> Result<EffectiveCapacityResult> {
    match effective_capacity_uav_series(theta, spec, link, r0, epsilon, series_cap, tol) {
        Err(e @ (Error::SeriesDivergence { .. } | Error::SeriesCapExceeded { .. })) => {
            log::warn!("{e}; falling back to quadrature");
            effective_capacity_uav_quadrature(theta, spec, link, r0, epsilon, tol)
        }
        other => other,
    }
}

/// δ·exp(−θ R D^th) with the rate of `spec`, capped at one.
pub fn delay_violation_probability(qos: &QosSpec, spec: &FbcSpec) -> f64 {
    (qos.nonempty_prob * (-qos.qos_exponent * spec.rate * qos.delay_bound).exp()).min(1.0)
}

/// Normal-approximation coding rate C(γ) − √(V(γ)/n)·Q⁻¹(ε), floored at zero.
pub fn normal_approx_rate(gamma: f64, blocklength: u32, epsilon: f64) -> Result<f64> {
    check_open_epsilon(epsilon)?;
    if blocklength == 0 {
        return Err(Error::invalid("blocklength", "must be >= 1"));
    }
    let cd = capacity_dispersion(gamma);
    Ok((cd.capacity_bits - (cd.dispersion / blocklength as f64).sqrt() * q_inverse(epsilon)?).max(0.0))
}
