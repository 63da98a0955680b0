//! Fading laws, pathloss, SINR and the capacity/dispersion pair.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check, Error, Result};
use crate::geometry::{los_probability, LosModelParams};
use crate::special::{gamma, gamma_p, hyp1f1_integer, pochhammer};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Hard cap on CDF series terms.
pub const SERIES_TERM_CAP: usize = 200;

/// Shadowed-Rician power gain |h|² = |A + B|² with a Nakagami-m LOS amplitude
/// A (E[A²] = `omega`) and complex Gaussian multipath B (E[|B|²] = 2`b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowedRicianParams {
    pub omega: f64,
    pub b: f64,
    pub m: u32,
}

impl Default for ShadowedRicianParams {
    /// Average shadowing.
    fn default() -> Self {
        Self {
            omega: 0.835,
            b: 0.126,
            m: 10,
        }
    }
}

impl ShadowedRicianParams {
    pub fn new(omega: f64, b: f64, m: u32) -> Result<Self> {
        let p = Self { omega, b, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check("shadowed_rician.omega", self.omega, |v| v > 0.0, "omega > 0")?;
        check("shadowed_rician.b", self.b, |v| v > 0.0, "b > 0")?;
        if self.m == 0 {
            return Err(Error::invalid("shadowed_rician.m", "m must be a positive integer"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        let tb = 2.0 * self.b;
        let m = self.m as f64;
        (tb * m / (tb * m + self.omega)).powf(m) / tb
    }

    pub fn fade_rate(&self) -> f64 {
        1.0 / (2.0 * self.b)
    }

    pub fn delta(&self) -> f64 {
        let tb = 2.0 * self.b;
        self.omega / (tb * (tb * self.m as f64 + self.omega))
    }

    pub fn mean(&self) -> f64 {
        self.omega + 2.0 * self.b
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::domain("shadowed_rician_pdf", format!("x = {x} < 0")));
        }
        Ok(self.alpha() * (-self.fade_rate() * x).exp() * hyp1f1_integer(self.m, self.delta() * x)?)
    }

    /// CDF by the incomplete-gamma series, truncated once the geometric tail
    /// bound falls below `tol` relative to the partial sum.
    pub fn cdf(&self, x: f64, tol: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::domain("shadowed_rician_cdf", format!("x = {x} < 0")));
        }
        if !(tol > 0.0 && tol < 1e-3) {
            return Err(Error::invalid("tol", format!("{tol} outside (0, 1e-3)")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        let beta = self.fade_rate();
        let ratio = self.delta() / beta;
        let m = self.m as f64;
        let y = beta * x;
        let scale = self.alpha() / beta;
        // coefficient (m)_i r^i / i!
        let mut coef = 1.0;
        let mut sum = 0.0;
        for i in 0..SERIES_TERM_CAP {
            let fi = i as f64;
            let p = gamma_p(fi + 1.0, y)?;
            sum += coef * p;
            let q = (m + fi + 1.0) / (fi + 2.0) * ratio;
            let next = coef * (m + fi) / (fi + 1.0) * ratio;
            if q < 1.0 {
                // The remaining terms are bounded by a geometric series; the
                // incomplete-gamma factors are ≤ P(i+1, y) and decrease in i.
                let tail = next * p / (1.0 - q);
                if tail <= tol * sum {
                    return Ok((scale * sum).min(1.0));
                }
            }
            coef = next;
        }
        Err(Error::SeriesCapExceeded {
            series: "shadowed_rician_cdf",
            cap: SERIES_TERM_CAP,
        })
    }

    /// CDF through the terminating form available for integer m:
    /// α Σ_{l<m} C(m−1,l) δ^l/l! · γ(l+1, (β−δ)x)/(β−δ)^{l+1}.
    pub fn cdf_finite(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::domain("shadowed_rician_cdf", format!("x = {x} < 0")));
        }
        let rate = self.fade_rate() - self.delta();
        let delta = self.delta();
        let m = self.m;
        let mut sum = 0.0;
        // coef = C(m−1,l) (δ/rate)^l; the l! of γ(l+1, ·) cancels.
        let mut coef = 1.0;
        for l in 0..m {
            if l > 0 {
                coef *= (m - l) as f64 / l as f64 * delta / rate;
            }
            sum += coef * gamma_p(l as f64 + 1.0, rate * x)?;
        }
        Ok((self.alpha() * sum / rate).min(1.0))
    }

    /// E[|h|^{2j}] from the terminating form of the pdf.
    pub fn moment(&self, j: u32) -> f64 {
        let rate = self.fade_rate() - self.delta();
        let delta = self.delta();
        let m = self.m;
        let mut sum = 0.0;
        let mut coef = 1.0;
        for l in 0..m {
            if l > 0 {
                coef *= (m - l) as f64 / l as f64 * delta / rate;
            }
            // ∫ x^j x^l e^{−rate x} dx / l! = (l+1)_j / rate^{j+1}
            sum += coef * pochhammer(l as f64 + 1.0, j) / rate.powi(j as i32 + 1);
        }
        self.alpha() * sum
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let shadow = NakagamiParams { m: self.m }.sample(rng);
        let los = (self.omega * shadow).sqrt();
        let sd = self.b.sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let re = los + sd * re;
        let im = sd * im;
        re * re + im * im
    }
}

/// Nakagami-m power gain: Gamma(m, 1/m), unit mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    pub m: u32,
}

impl NakagamiParams {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("nakagami.m", "m must be a positive integer"));
        }
        Ok(Self { m })
    }

    /// E[h^j].
    pub fn moment(&self, j: u32) -> f64 {
        let m = self.m as f64;
        pochhammer(m, j) / m.powi(j as i32)
    }

    /// E[e^{−t h}].
    pub fn laplace(&self, t: f64) -> f64 {
        let m = self.m as f64;
        (-m * (t / m).ln_1p()).exp()
    }

    /// 1 − E[e^{−t h}], accurate for small t.
    pub fn one_minus_laplace(&self, t: f64) -> f64 {
        let m = self.m as f64;
        -(-m * (t / m).ln_1p()).exp_m1()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        gamma_p(self.m as f64, self.m as f64 * x).unwrap_or(1.0)
    }

    /// Sum of m unit exponentials scaled by 1/m.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut prod = 1.0;
        for _ in 0..self.m {
            prod *= 1.0 - rng.random::<f64>();
        }
        -prod.ln() / self.m as f64
    }

    /// Constant of the tight lower bound on the Gamma CDF used for UAV
    /// outage: η = m (m!)^{−1/m}.
    pub fn eta(&self) -> f64 {
        let m = self.m as f64;
        m * gamma(m + 1.0).powf(-1.0 / m)
    }
}

/// Per-tier link budget. Terrestrial and satellite links use the LOS fields
/// only; aerial links mix LOS and NLOS branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_w: f64,
    /// Linear gain (transmit × receive).
    pub antenna_gain: f64,
    /// Linear association bias.
    pub bias: f64,
    pub carrier_hz: f64,
    pub noise_power_w: f64,
    pub pathloss_exponent: f64,
    pub nlos_pathloss_exponent: f64,
    pub excess_loss_los: f64,
    pub excess_loss_nlos: f64,
}

impl LinkBudget {
    pub fn single_slope(
        tx_power_w: f64,
        antenna_gain: f64,
        bias: f64,
        carrier_hz: f64,
        noise_power_w: f64,
        pathloss_exponent: f64,
    ) -> Self {
        Self {
            tx_power_w,
            antenna_gain,
            bias,
            carrier_hz,
            noise_power_w,
            pathloss_exponent,
            nlos_pathloss_exponent: pathloss_exponent,
            excess_loss_los: 1.0,
            excess_loss_nlos: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check("tx_power", self.tx_power_w, |v| v > 0.0, "power > 0")?;
        check("antenna_gain", self.antenna_gain, |v| v > 0.0, "gain > 0")?;
        check("bias", self.bias, |v| v > 0.0, "bias > 0")?;
        check("carrier", self.carrier_hz, |v| v > 0.0, "frequency > 0")?;
        check("noise_power", self.noise_power_w, |v| v > 0.0, "noise > 0")?;
        let in_range = |v: f64| (2.0..=6.0).contains(&v);
        check("pathloss_exponent", self.pathloss_exponent, in_range, "2 <= beta <= 6")?;
        check("nlos_pathloss_exponent", self.nlos_pathloss_exponent, in_range, "2 <= beta <= 6")?;
        check("excess_loss_los", self.excess_loss_los, |v| v > 0.0, "excess loss > 0")?;
        check("excess_loss_nlos", self.excess_loss_nlos, |v| v > 0.0, "excess loss > 0")
    }

    /// P·φ·G.
    pub fn biased_power(&self) -> f64 {
        self.tx_power_w * self.bias * self.antenna_gain
    }

    /// (c / 4πf)².
    pub fn friis_factor(&self) -> f64 {
        let k = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * self.carrier_hz);
        k * k
    }

    pub fn pathloss_los(&self, distance_m: f64) -> f64 {
        self.excess_loss_los * self.friis_factor() * distance_m.powf(-self.pathloss_exponent)
    }

    pub fn pathloss_nlos(&self, distance_m: f64) -> f64 {
        self.excess_loss_nlos * self.friis_factor() * distance_m.powf(-self.nlos_pathloss_exponent)
    }
}

pub fn pathloss_free_space(budget: &LinkBudget, distance_m: f64) -> Result<f64> {
    check("distance", distance_m, |v| v > 0.0, "distance > 0")?;
    Ok(budget.friis_factor() * distance_m.powf(-budget.pathloss_exponent))
}

/// LOS-probability-weighted pathloss of an aerial link.
pub fn pathloss_uav(budget: &LinkBudget, distance_m: f64, altitude_m: f64, los: &LosModelParams) -> Result<f64> {
    let p = los_probability(distance_m, altitude_m, los)?;
    Ok(p * budget.pathloss_los(distance_m) + (1.0 - p) * budget.pathloss_nlos(distance_m))
}

/// Which noise power enters the SINR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseConvention {
    /// The budget's σ².
    #[default]
    Explicit,
    /// Powers already normalized by σ² (unit noise).
    Unit,
}

impl NoiseConvention {
    pub fn noise(&self, budget: &LinkBudget) -> f64 {
        match self {
            NoiseConvention::Explicit => budget.noise_power_w,
            NoiseConvention::Unit => 1.0,
        }
    }
}

pub fn sinr(budget: &LinkBudget, fading_gain: f64, pathloss: f64, interference_w: f64) -> f64 {
    budget.biased_power() * fading_gain * pathloss / (interference_w + budget.noise_power_w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityDispersion {
    pub capacity_bits: f64,
    pub dispersion: f64,
}

pub fn capacity_dispersion(gamma: f64) -> CapacityDispersion {
    let g = gamma.max(0.0);
    let inv = 1.0 / (1.0 + g);
    CapacityDispersion {
        capacity_bits: g.ln_1p() / std::f64::consts::LN_2,
        dispersion: 1.0 - inv * inv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::trial_rng;
    use crate::quad::{integrate, integrate_to_infinity, QuadOptions};

    fn reference() -> ShadowedRicianParams {
        ShadowedRicianParams::new(1.0, 0.25, 3).unwrap()
    }

    #[test]
    fn derived_parameters() {
        let p = reference();
        // α = 2·(1.5/2.5)³, β = 2, δ = 1/(0.5·2.5)
        assert!((p.alpha() - 2.0 * 0.6f64.powi(3)).abs() < 1e-15);
        assert_eq!(p.fade_rate(), 2.0);
        assert!((p.delta() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pdf_special_cases() {
        let p = reference();
        assert!((p.pdf(0.0).unwrap() - p.alpha()).abs() < 1e-15);
        let one = ShadowedRicianParams::new(0.7, 0.3, 1).unwrap();
        for &x in &[0.1, 1.0, 3.0] {
            let expected = one.alpha() * (-(one.fade_rate() - one.delta()) * x).exp();
            assert!((one.pdf(x).unwrap() - expected).abs() < 1e-14);
        }
        assert!(p.pdf(-1.0).is_err());
    }

    #[test]
    fn pdf_normalizes() {
        let p = reference();
        let q = integrate_to_infinity(|x| p.pdf(x).unwrap(), 0.0, QuadOptions::default()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-8, "{}", q.value);
        let mean = integrate_to_infinity(|x| x * p.pdf(x).unwrap(), 0.0, QuadOptions::default()).unwrap();
        assert!((mean.value - p.mean()).abs() < 1e-8);
        assert!((p.moment(1) - p.mean()).abs() < 1e-12);
        let second = integrate_to_infinity(|x| x * x * p.pdf(x).unwrap(), 0.0, QuadOptions::default()).unwrap();
        assert!((second.value - p.moment(2)).abs() < 1e-8);
    }

    #[test]
    fn cdf_matches_pdf_quadrature() {
        let p = reference();
        let oracle = integrate(|x| p.pdf(x).unwrap(), 0.0, 0.5, QuadOptions::with_rel_tol(1e-13)).unwrap();
        assert!((p.cdf(0.5, 1e-10).unwrap() - oracle.value).abs() < 1e-6);
        assert!((p.cdf(0.5, 1e-10).unwrap() - oracle.value).abs() < 1e-10);
        assert_eq!(p.cdf(0.0, 1e-10).unwrap(), 0.0);
        assert!((p.cdf(60.0, 1e-10).unwrap() - 1.0).abs() < 1e-10);
        assert!(p.cdf(-0.1, 1e-10).is_err());
        assert!(p.cdf(0.5, 0.1).is_err());
    }

    #[test]
    fn series_and_finite_cdf_agree() {
        for p in [reference(), ShadowedRicianParams::default(), ShadowedRicianParams::new(0.279, 0.063, 2).unwrap()] {
            for &x in &[1e-4, 0.01, 0.3, 1.0, 2.5, 8.0] {
                let a = p.cdf(x, 1e-12).unwrap();
                let b = p.cdf_finite(x).unwrap();
                assert!((a - b).abs() < 1e-11, "{p:?} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cdf_derivative_matches_pdf() {
        let p = ShadowedRicianParams::default();
        let h = 1e-6;
        for k in 1..40 {
            let x = 0.05 * k as f64;
            let d = (p.cdf(x + h, 1e-12).unwrap() - p.cdf(x - h, 1e-12).unwrap()) / (2.0 * h);
            assert!((d - p.pdf(x).unwrap()).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn shadowed_rician_sampler_mean_and_cdf() {
        let p = ShadowedRicianParams::default();
        let mut rng = trial_rng(4, 0);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - p.mean()).abs() < 0.01 * p.mean());
        let below = draws.iter().filter(|&&x| x < 0.5).count() as f64 / n as f64;
        let f = p.cdf(0.5, 1e-10).unwrap();
        assert!((below - f).abs() < 4.0 * (f * (1.0 - f) / n as f64).sqrt());
    }

    #[test]
    fn nakagami_sampler_ks() {
        for m in [1u32, 2, 3] {
            let nk = NakagamiParams::new(m).unwrap();
            let mut rng = trial_rng(10 + m as u64, 0);
            let mut draws: Vec<f64> = (0..100_000).map(|_| nk.sample(&mut rng)).collect();
            draws.sort_by(f64::total_cmp);
            let n = draws.len() as f64;
            let ks = draws
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = nk.cdf(x);
                    (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "m={m} ks={ks}");
        }
    }

    #[test]
    fn nakagami_moments_and_eta() {
        let nk = NakagamiParams::new(2).unwrap();
        assert_eq!(nk.moment(1), 1.0);
        assert!((nk.moment(2) - 1.5).abs() < 1e-15);
        assert!((nk.laplace(1.0) - 1.0 / 2.25).abs() < 1e-15);
        assert!((NakagamiParams::new(1).unwrap().eta() - 1.0).abs() < 1e-15);
        assert!((nk.eta() - 2.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!(NakagamiParams::new(0).is_err());
    }

    #[test]
    fn pathloss_values() {
        let unit = LinkBudget::single_slope(1.0, 1.0, 1.0, SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI), 1e-12, 2.0);
        assert!((pathloss_free_space(&unit, 7.0).unwrap() - 1.0 / 49.0).abs() < 1e-15);
        let b4 = LinkBudget::single_slope(1.0, 1.0, 1.0, 2e9, 1e-12, 4.0);
        let ratio = pathloss_free_space(&b4, 10.0).unwrap() / pathloss_free_space(&b4, 20.0).unwrap();
        assert!((ratio - 16.0).abs() < 1e-12);
        assert!(pathloss_free_space(&b4, 0.0).is_err());
        // Independent high-precision evaluation.
        let g = LinkBudget::single_slope(1.0, 1.0, 1.0, 2.4e9, 1e-12, 3.5);
        let pl = pathloss_free_space(&g, 100.0).unwrap();
        assert!(((pl - 9.880_961_210_318_490e-12) / pl).abs() < 1e-12);
    }

    #[test]
    fn uav_pathloss_mixture() {
        let mut b = LinkBudget::single_slope(1.0, 1.0, 1.0, 28e9, 1e-12, 2.5);
        b.nlos_pathloss_exponent = 3.5;
        b.excess_loss_nlos = 0.1;
        let los = LosModelParams::default();
        let pl = pathloss_uav(&b, 300.0, 100.0, &los).unwrap();
        assert!(((pl - 1.561_785_477_373_673e-13) / pl).abs() < 1e-12, "{pl}");
        // identical branches reduce to the free-space law
        let same = LinkBudget::single_slope(1.0, 1.0, 1.0, 28e9, 1e-12, 3.0);
        let a = pathloss_uav(&same, 300.0, 100.0, &los).unwrap();
        assert!((a - pathloss_free_space(&same, 300.0).unwrap()).abs() < 1e-25);
    }

    #[test]
    fn sinr_and_capacity() {
        let b = LinkBudget::single_slope(2.0, 1.0, 1.0, 2e9, 1.0, 2.0);
        assert_eq!(sinr(&b, 0.0, 1.0, 3.0), 0.0);
        assert_eq!(sinr(&b, 1.0, 1.0, 1.0), 1.0);
        let cd = capacity_dispersion(1.0);
        assert_eq!(cd.capacity_bits, 1.0);
        assert_eq!(cd.dispersion, 0.75);
        assert_eq!(capacity_dispersion(0.0).capacity_bits, 0.0);
        assert_eq!(capacity_dispersion(0.0).dispersion, 0.0);
        let mut prev = capacity_dispersion(0.0);
        for k in 1..50 {
            let cur = capacity_dispersion(0.5 * k as f64);
            assert!(cur.capacity_bits > prev.capacity_bits && cur.dispersion > prev.dispersion);
            prev = cur;
        }
    }

    #[test]
    fn mc_mean_sinr_matches_analytic() {
        let b = LinkBudget::single_slope(1.0, 1.0, 1.0, 2e9, 1e-3, 2.0);
        let p = ShadowedRicianParams::default();
        let mut rng = trial_rng(21, 0);
        let n = 200_000;
        let mean = (0..n).map(|_| sinr(&b, p.sample(&mut rng), 1e-2, 1e-3)).sum::<f64>() / n as f64;
        let analytic = p.mean() * 1e-2 / 2e-3;
        assert!(((mean - analytic) / analytic).abs() < 0.01);
    }
}
