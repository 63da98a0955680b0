//! Scenario configuration: a flat `key = value` file with dotted keys.
//!
//! ```text
//! # comment
//! uav.density = 15e-6
//! uav.bias_db = 10
//! sweep.param = uav.density
//! sweep.values = 1e-6, 5e-6, 10e-6
//! ```
//!
//! Every key has a default, so an empty file is a complete scenario. Gains,
//! biases and excess losses are given in dB; everything else is SI.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::association::AssociationConfig;
use crate::channel::{pathloss_free_space, LinkBudget, NakagamiParams, ShadowedRicianParams};
use crate::error::{Error, Result};
use crate::fbc::{FbcSpec, SatelliteSinrModel, UavLink};
use crate::geometry::{AltitudePolicy, LosModelParams, Region, TierProcess};
use crate::interference::{gamma_fit, InterfererTier};
use crate::qos::QosSpec;

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub region_radius_m: f64,
    pub region_guard_m: f64,

    pub ground_density: f64,
    pub ground_power_w: f64,
    pub ground_gain_db: f64,
    pub ground_frequency_hz: f64,
    pub ground_exponent: f64,
    pub ground_fading_m: u32,

    pub satellite_power_w: f64,
    pub satellite_gain_db: f64,
    pub satellite_bias_db: f64,
    pub satellite_frequency_hz: f64,
    pub satellite_distance_m: f64,
    pub satellite_exponent: f64,
    pub satellite_noise_w: f64,
    pub satellite_omega: f64,
    pub satellite_b: f64,
    pub satellite_m: u32,

    pub uav_density: f64,
    pub uav_power_w: f64,
    pub uav_gain_db: f64,
    pub uav_bias_db: f64,
    pub uav_frequency_hz: f64,
    pub uav_exponent_los: f64,
    pub uav_exponent_nlos: f64,
    pub uav_excess_los_db: f64,
    pub uav_excess_nlos_db: f64,
    pub uav_noise_w: f64,
    pub uav_fading_m: u32,
    pub uav_altitude_min_m: f64,
    pub uav_altitude_max_m: f64,
    /// 0 selects the altitude midpoint.
    pub uav_serving_altitude_m: f64,
    /// 0 selects the mean nearest-neighbour distance 1/(2√λ_U).
    pub uav_serving_distance_m: f64,
    pub uav_nu1: f64,
    pub uav_nu2: f64,

    pub fbc_blocklength: u32,
    pub fbc_rate: f64,
    pub fbc_epsilon: f64,

    pub qos_theta: f64,
    pub qos_delay_bound: f64,
    pub qos_nonempty_prob: f64,
    pub qos_overflow_threshold: f64,

    pub association_los_gate: bool,

    pub run_seed: u64,
    pub run_trials: usize,
    pub run_tol: f64,

    pub sweep: Option<Sweep>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            region_radius_m: 10_000.0,
            region_guard_m: 200.0,
            ground_density: 15e-6,
            ground_power_w: 1.0,
            ground_gain_db: 0.0,
            ground_frequency_hz: 2.4e9,
            ground_exponent: 3.5,
            ground_fading_m: 1,
            satellite_power_w: 100.0,
            satellite_gain_db: 30.0,
            satellite_bias_db: 0.0,
            satellite_frequency_hz: 2e9,
            satellite_distance_m: 600e3,
            satellite_exponent: 2.0,
            satellite_noise_w: 4e-14,
            satellite_omega: 0.835,
            satellite_b: 0.126,
            satellite_m: 10,
            uav_density: 15e-6,
            uav_power_w: 0.1,
            uav_gain_db: 20.0,
            uav_bias_db: 10.0,
            uav_frequency_hz: 28e9,
            uav_exponent_los: 2.5,
            uav_exponent_nlos: 3.5,
            uav_excess_los_db: -1.0,
            uav_excess_nlos_db: -20.0,
            uav_noise_w: 4e-12,
            uav_fading_m: 2,
            uav_altitude_min_m: 10.0,
            uav_altitude_max_m: 500.0,
            uav_serving_altitude_m: 0.0,
            uav_serving_distance_m: 0.0,
            uav_nu1: 9.61,
            uav_nu2: 0.16,
            fbc_blocklength: 200,
            fbc_rate: 1.0,
            fbc_epsilon: 1e-3,
            qos_theta: 0.01,
            qos_delay_bound: 100.0,
            qos_nonempty_prob: 1.0,
            qos_overflow_threshold: 1000.0,
            association_los_gate: false,
            run_seed: 1,
            run_trials: 20_000,
            run_tol: 1e-8,
            sweep: None,
        }
    }
}

fn cfg_err(line: Option<usize>, key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: Some(key.to_string()),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| cfg_err(None, key, format!("`{v}` is not a number")))
}

fn parse_u32(key: &str, v: &str) -> Result<u32> {
    let x = parse_f64(key, v)?;
    if x.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&x) {
        return Err(cfg_err(None, key, format!("`{v}` is not a nonnegative integer")));
    }
    Ok(x as u32)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(cfg_err(None, key, format!("`{other}` is not a boolean"))),
    }
}

macro_rules! scalar_keys {
    ($( $key:literal => $field:ident : $kind:ident ),* $(,)?) => {
        /// Every scalar key accepted in a scenario file.
        pub const KEYS: &[&str] = &[$($key),*];

        impl Scenario {
            /// Sets one scalar parameter from its text form.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $($key => { self.$field = scalar_keys!(@parse $kind, key, value)?; })*
                    _ => return Err(cfg_err(None, key, "unknown key")),
                }
                Ok(())
            }

            /// Canonical `(key, value)` pairs, in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$(($key, scalar_keys!(@show $kind, self.$field))),*]
            }
        }
    };
    (@parse f64, $k:expr, $v:expr) => { parse_f64($k, $v) };
    (@parse u32, $k:expr, $v:expr) => { parse_u32($k, $v) };
    (@parse u64, $k:expr, $v:expr) => { parse_u32($k, $v).map(u64::from) };
    (@parse usize, $k:expr, $v:expr) => { parse_u32($k, $v).map(|x| x as usize) };
    (@parse bool, $k:expr, $v:expr) => { parse_bool($k, $v) };
    (@show f64, $x:expr) => { format!("{:e}", $x) };
    (@show $other:ident, $x:expr) => { $x.to_string() };
}

scalar_keys! {
    "region.radius" => region_radius_m: f64,
    "region.guard_radius" => region_guard_m: f64,
    "ground.density" => ground_density: f64,
    "ground.power" => ground_power_w: f64,
    "ground.gain_db" => ground_gain_db: f64,
    "ground.frequency" => ground_frequency_hz: f64,
    "ground.exponent" => ground_exponent: f64,
    "ground.fading_m" => ground_fading_m: u32,
    "satellite.power" => satellite_power_w: f64,
    "satellite.gain_db" => satellite_gain_db: f64,
    "satellite.bias_db" => satellite_bias_db: f64,
    "satellite.frequency" => satellite_frequency_hz: f64,
    "satellite.distance" => satellite_distance_m: f64,
    "satellite.exponent" => satellite_exponent: f64,
    "satellite.noise" => satellite_noise_w: f64,
    "satellite.omega" => satellite_omega: f64,
    "satellite.b" => satellite_b: f64,
    "satellite.m" => satellite_m: u32,
    "uav.density" => uav_density: f64,
    "uav.power" => uav_power_w: f64,
    "uav.gain_db" => uav_gain_db: f64,
    "uav.bias_db" => uav_bias_db: f64,
    "uav.frequency" => uav_frequency_hz: f64,
    "uav.exponent_los" => uav_exponent_los: f64,
    "uav.exponent_nlos" => uav_exponent_nlos: f64,
    "uav.excess_los_db" => uav_excess_los_db: f64,
    "uav.excess_nlos_db" => uav_excess_nlos_db: f64,
    "uav.noise" => uav_noise_w: f64,
    "uav.fading_m" => uav_fading_m: u32,
    "uav.altitude_min" => uav_altitude_min_m: f64,
    "uav.altitude_max" => uav_altitude_max_m: f64,
    "uav.serving_altitude" => uav_serving_altitude_m: f64,
    "uav.serving_distance" => uav_serving_distance_m: f64,
    "uav.los_nu1" => uav_nu1: f64,
    "uav.los_nu2" => uav_nu2: f64,
    "fbc.blocklength" => fbc_blocklength: u32,
    "fbc.rate" => fbc_rate: f64,
    "fbc.epsilon" => fbc_epsilon: f64,
    "qos.theta" => qos_theta: f64,
    "qos.delay_bound" => qos_delay_bound: f64,
    "qos.nonempty_prob" => qos_nonempty_prob: f64,
    "qos.overflow_threshold" => qos_overflow_threshold: f64,
    "association.los_gate" => association_los_gate: bool,
    "run.seed" => run_seed: u64,
    "run.trials" => run_trials: usize,
    "run.tol" => run_tol: f64,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses scenario text; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sc = Scenario::default();
        let mut sweep_param: Option<(usize, String)> = None;
        let mut sweep_values: Option<(usize, Vec<f64>)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: Some(line_no),
                    key: None,
                    reason: format!("expected `key = value`, found `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Config {
                    line: Some(line_no),
                    key: None,
                    reason: "empty key".into(),
                });
            }
            let with_line = |e: Error| match e {
                Error::Config { key, reason, .. } => Error::Config {
                    line: Some(line_no),
                    key,
                    reason,
                },
                other => other,
            };
            match key {
                "sweep.param" => sweep_param = Some((line_no, value.to_string())),
                "sweep.values" => {
                    let vals = value
                        .split(',')
                        .map(|v| parse_f64(key, v))
                        .collect::<Result<Vec<_>>>()
                        .map_err(with_line)?;
                    sweep_values = Some((line_no, vals));
                }
                _ => sc.set(key, value).map_err(with_line)?,
            }
        }
        match (sweep_param, sweep_values) {
            (None, None) => {}
            (Some((l, _)), None) => return Err(cfg_err(Some(l), "sweep.values", "sweep.param needs sweep.values")),
            (None, Some((l, _))) => return Err(cfg_err(Some(l), "sweep.param", "sweep.values needs sweep.param")),
            (Some((l, param)), Some((_, values))) => {
                sc.set_sweep(&param, values).map_err(|e| match e {
                    Error::Config { key, reason, .. } => Error::Config {
                        line: Some(l),
                        key,
                        reason,
                    },
                    other => other,
                })?;
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn set_sweep(&mut self, param: &str, values: Vec<f64>) -> Result<()> {
        if !KEYS.contains(&param) || param.starts_with("run.") {
            return Err(cfg_err(None, param, "not a sweepable parameter"));
        }
        if values.is_empty() {
            return Err(cfg_err(None, "sweep.values", "sweep list is empty"));
        }
        // Every value must type-check for the target key.
        let mut probe = self.clone();
        for v in &values {
            probe.set(param, &v.to_string())?;
        }
        self.sweep = Some(Sweep {
            param: param.to_string(),
            values,
        });
        Ok(())
    }

    /// Copy with `key` set to the numeric `value`.
    pub fn with(&self, key: &str, value: f64) -> Result<Scenario> {
        let mut s = self.clone();
        s.set(key, &value.to_string())?;
        s.validate()?;
        Ok(s)
    }

    /// Checks every invariant and reports the first failing key.
    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, reason: &str| Err(cfg_err(None, key, reason.to_string()));
        let pos = [
            ("region.radius", self.region_radius_m),
            ("ground.power", self.ground_power_w),
            ("ground.frequency", self.ground_frequency_hz),
            ("satellite.power", self.satellite_power_w),
            ("satellite.frequency", self.satellite_frequency_hz),
            ("satellite.distance", self.satellite_distance_m),
            ("satellite.noise", self.satellite_noise_w),
            ("uav.power", self.uav_power_w),
            ("uav.frequency", self.uav_frequency_hz),
            ("uav.noise", self.uav_noise_w),
            ("uav.altitude_min", self.uav_altitude_min_m),
            ("qos.theta", self.qos_theta),
            ("qos.delay_bound", self.qos_delay_bound),
            ("fbc.rate", self.fbc_rate),
            ("run.tol", self.run_tol),
        ];
        for (k, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return fail(k, "must be > 0");
            }
        }
        for (k, v) in [("ground.density", self.ground_density), ("uav.density", self.uav_density)] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(k, "must be >= 0");
            }
        }
        if !(self.region_guard_m >= 0.0 && self.region_guard_m < self.region_radius_m) {
            return fail("region.guard_radius", "must satisfy 0 <= guard < radius");
        }
        if self.uav_altitude_max_m < self.uav_altitude_min_m {
            return fail("uav.altitude_max", "must be >= uav.altitude_min");
        }
        if !(self.uav_serving_altitude_m >= 0.0) {
            return fail("uav.serving_altitude", "must be >= 0 (0 = midpoint)");
        }
        if !(self.uav_serving_distance_m >= 0.0) {
            return fail("uav.serving_distance", "must be >= 0 (0 = mean nearest distance)");
        }
        if !(self.fbc_epsilon > 0.0 && self.fbc_epsilon < 1.0) {
            return fail("fbc.epsilon", "must be in (0, 1)");
        }
        if self.fbc_blocklength == 0 {
            return fail("fbc.blocklength", "must be >= 1");
        }
        if !(self.qos_nonempty_prob > 0.0 && self.qos_nonempty_prob <= 1.0) {
            return fail("qos.nonempty_prob", "must be in (0, 1]");
        }
        if self.run_trials == 0 {
            return fail("run.trials", "must be >= 1");
        }
        for (k, m) in [
            ("ground.fading_m", self.ground_fading_m),
            ("uav.fading_m", self.uav_fading_m),
            ("satellite.m", self.satellite_m),
        ] {
            if m == 0 {
                return fail(k, "must be >= 1");
            }
        }
        let wrap = |key: &'static str, r: Result<()>| {
            r.map_err(|e| cfg_err(None, key, e.to_string()))
        };
        wrap("satellite", self.satellite_budget().validate())?;
        wrap("satellite", self.shadowed_rician().validate())?;
        wrap("ground", self.ground_tier().validate())?;
        wrap("uav", self.uav_tier().validate())?;
        Ok(())
    }

    /// SHA-256 of the canonical key/value dump (including the sweep), hex.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        h.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Deterministic text form; parsing it yields an equal scenario.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        if let Some(sw) = &self.sweep {
            let vals: Vec<String> = sw.values.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "sweep.param = {}", sw.param);
            let _ = writeln!(out, "sweep.values = {}", vals.join(", "));
        }
        out
    }

    pub fn region(&self) -> Region {
        Region {
            radius_m: self.region_radius_m,
            guard_radius_m: self.region_guard_m,
        }
    }

    pub fn shadowed_rician(&self) -> ShadowedRicianParams {
        ShadowedRicianParams {
            omega: self.satellite_omega,
            b: self.satellite_b,
            m: self.satellite_m,
        }
    }

    pub fn satellite_budget(&self) -> LinkBudget {
        LinkBudget::single_slope(
            self.satellite_power_w,
            db(self.satellite_gain_db),
            db(self.satellite_bias_db),
            self.satellite_frequency_hz,
            self.satellite_noise_w,
            self.satellite_exponent,
        )
    }

    /// A = P·φ·G·PL of the satellite link.
    pub fn satellite_signal_w(&self) -> Result<f64> {
        let b = self.satellite_budget();
        Ok(b.biased_power() * pathloss_free_space(&b, self.satellite_distance_m)?)
    }

    /// Ground base stations as seen by the satellite user: they transmit
    /// with the satellite tier's bias in the interference term.
    pub fn ground_tier(&self) -> InterfererTier {
        InterfererTier {
            process: TierProcess::ground(self.ground_density),
            budget: LinkBudget::single_slope(
                self.ground_power_w,
                db(self.ground_gain_db),
                db(self.satellite_bias_db),
                self.ground_frequency_hz,
                self.satellite_noise_w,
                self.ground_exponent,
            ),
            fading: NakagamiParams { m: self.ground_fading_m },
            los: None,
        }
    }

    pub fn uav_budget(&self) -> LinkBudget {
        let mut b = LinkBudget::single_slope(
            self.uav_power_w,
            db(self.uav_gain_db),
            db(self.uav_bias_db),
            self.uav_frequency_hz,
            self.uav_noise_w,
            self.uav_exponent_los,
        );
        b.nlos_pathloss_exponent = self.uav_exponent_nlos;
        b.excess_loss_los = db(self.uav_excess_los_db);
        b.excess_loss_nlos = db(self.uav_excess_nlos_db);
        b
    }

    pub fn uav_altitude(&self) -> AltitudePolicy {
        if self.uav_altitude_max_m == self.uav_altitude_min_m {
            AltitudePolicy::Fixed(self.uav_altitude_min_m)
        } else {
            AltitudePolicy::Uniform {
                min_m: self.uav_altitude_min_m,
                max_m: self.uav_altitude_max_m,
            }
        }
    }

    pub fn uav_process(&self) -> TierProcess {
        TierProcess {
            density: self.uav_density,
            altitude: self.uav_altitude(),
        }
    }

    pub fn los_model(&self) -> LosModelParams {
        LosModelParams {
            nu1: self.uav_nu1,
            nu2: self.uav_nu2,
        }
    }

    pub fn uav_tier(&self) -> InterfererTier {
        InterfererTier {
            process: self.uav_process(),
            budget: self.uav_budget(),
            fading: NakagamiParams { m: self.uav_fading_m },
            los: Some(self.los_model()),
        }
    }

    pub fn uav_serving_altitude(&self) -> f64 {
        if self.uav_serving_altitude_m > 0.0 {
            self.uav_serving_altitude_m
        } else {
            0.5 * (self.uav_altitude_min_m + self.uav_altitude_max_m)
        }
    }

    pub fn uav_link(&self) -> UavLink {
        UavLink {
            interferers: self.uav_tier(),
            region: Region {
                radius_m: self.region_radius_m,
                guard_radius_m: 0.0,
            },
            serving_altitude_m: self.uav_serving_altitude(),
        }
    }

    /// Horizontal distance of the serving UAV for fixed-distance metrics.
    pub fn uav_serving_distance(&self) -> f64 {
        if self.uav_serving_distance_m > 0.0 {
            self.uav_serving_distance_m
        } else if self.uav_density > 0.0 {
            0.5 / self.uav_density.sqrt()
        } else {
            self.region_radius_m
        }
    }

    pub fn fbc_spec(&self) -> Result<FbcSpec> {
        FbcSpec::new(self.fbc_blocklength, self.fbc_rate, self.fbc_epsilon)
    }

    pub fn qos_spec(&self) -> QosSpec {
        QosSpec {
            qos_exponent: self.qos_theta,
            delay_bound: self.qos_delay_bound,
            nonempty_prob: self.qos_nonempty_prob,
            overflow_threshold: self.qos_overflow_threshold,
        }
    }

    /// Satellite SINR model with the ground interference replaced by its
    /// moment-matched Gamma surrogate.
    pub fn satellite_model(&self) -> Result<SatelliteSinrModel> {
        let moments = self.ground_tier().moments(&self.region(), self.run_tol.max(1e-12))?;
        Ok(SatelliteSinrModel {
            fading: self.shadowed_rician(),
            interference: gamma_fit(&moments)?,
            signal_w: self.satellite_signal_w()?,
            noise_w: self.satellite_noise_w,
        })
    }

    pub fn association_config(&self) -> AssociationConfig {
        AssociationConfig {
            satellite: self.satellite_budget(),
            satellite_distance_m: self.satellite_distance_m,
            uav: self.uav_budget(),
            uav_los: self.los_model(),
            los_gate: self.association_los_gate,
        }
    }
}
