//! Metric evaluation, validation suites and the canned figure datasets.
//!
//! Everything returns a [`ResultTable`] that renders to CSV. Monte Carlo
//! columns use the scenario's `run.seed` and `run.trials`; the same seed is
//! reused at every sweep point so that trends are not masked by noise.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::association::association_probability;
use crate::error::{Error, Result};
use crate::fbc::{
    epsilon_linearized, epsilon_normal_at, epsilon_satellite_asymptotic, epsilon_satellite_theorem1,
    linearization_constants, outage_capacity_satellite, outage_capacity_satellite_high_snr, outage_capacity_uav,
    outage_satellite, outage_satellite_high_snr, outage_uav, psi, FbcSpec, LinkState, SatelliteSinrModel, UavLink,
};
use crate::geometry::{sample_field_with, Region};
use crate::interference::{gamma_fit, InterfererTier};
use crate::mc::{run_trials, Estimate};
use crate::qos::{
    delay_violation_probability, effective_capacity, effective_capacity_satellite,
    effective_capacity_satellite_asymptotic, effective_capacity_small_theta, effective_capacity_uav,
    effective_capacity_uav_quadrature, effective_capacity_uav_series, normal_approx_rate, tier_rate_samples,
    ServingDistance, UAV_SERIES_CAP,
};
use crate::scenario::Scenario;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Shortest round-trip decimal, switching to scientific notation below 1e-3
/// (and above 1e15).
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x.abs() < 1e-3 || x.abs() >= 1e15 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Written as `# key=value` lines ahead of the header.
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    /// Stamps the scenario hash, seed and tool version.
    pub fn stamp(&mut self, sc: &Scenario) {
        self.metadata.retain(|(k, _)| !matches!(k.as_str(), "scenario_hash" | "seed" | "version"));
        self.metadata.push(("scenario_hash".into(), sc.hash()));
        self.metadata.push(("seed".into(), sc.run_seed.to_string()));
        self.metadata.push(("version".into(), VERSION.into()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(
                "row",
                format!("{} cells for {} columns", row.len(), self.columns.len()),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column by name; text cells read as NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(x) => *x,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn text_column(&self, name: &str) -> Option<Vec<String>> {
        let i = self.index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(x) => format_number(*x),
                    Cell::Text(s) => s.clone(),
                })
                .collect(),
        )
    }

    /// Rows whose numeric cells in `keys` equal the given values.
    pub fn select(&self, keys: &[(&str, f64)]) -> ResultTable {
        let idx: Vec<(usize, f64)> = keys.iter().filter_map(|(k, v)| self.index(k).map(|i| (i, *v))).collect();
        let rows = self
            .rows
            .iter()
            .filter(|r| idx.iter().all(|&(i, v)| matches!(r[i], Cell::Num(x) if x == v)))
            .cloned()
            .collect();
        ResultTable {
            columns: self.columns.clone(),
            rows,
            metadata: self.metadata.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let header: Vec<String> = self.columns.iter().map(|c| escape(c)).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_number(*x),
                    Cell::Text(s) => escape(s),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),* }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),*];

            pub fn name(&self) -> &'static str {
                match self { $($name::$variant => $text),* }
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)*
                    _ => {
                        let known: Vec<&str> = $name::ALL.iter().map(|x| x.name()).collect();
                        Err(Error::invalid(stringify!($name), format!("unknown `{s}`; expected one of {}", known.join(", "))))
                    }
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

named_enum!(Metric {
    AssociationProb => "association-prob",
    EpsilonSat => "epsilon-sat",
    EpsilonUav => "epsilon-uav",
    OutageProb => "outage-prob",
    OutageCapacity => "outage-capacity",
    EffectiveCapacity => "effective-capacity",
    DelayViolation => "delay-violation",
    Laplace => "laplace",
    Moments => "moments",
});

named_enum!(Suite {
    LaplaceVsMc => "laplace-vs-mc",
    MomentsVsMc => "moments-vs-mc",
    Theorem1VsQuadrature => "theorem1-vs-quadrature",
    OutageRoundtrip => "outage-roundtrip",
    EcLimits => "ec-limits",
});

named_enum!(Figure {
    Fig2 => "fig2",
    Fig3 => "fig3",
    Fig4 => "fig4",
    Fig5 => "fig5",
    Fig6 => "fig6",
    Fig7 => "fig7",
    Fig8 => "fig8",
    Fig9 => "fig9",
});

/// Sweep points of a scenario: `(sweep value, scenario)` pairs, or the
/// scenario itself when no sweep is configured.
pub fn sweep_points(sc: &Scenario) -> Result<Vec<(Option<f64>, Scenario)>> {
    match &sc.sweep {
        None => Ok(vec![(None, sc.clone())]),
        Some(sw) => sw
            .values
            .iter()
            .map(|&v| {
                let mut s = sc.with(&sw.param, v)?;
                s.sweep = None;
                Ok((Some(v), s))
            })
            .collect(),
    }
}

struct Rows {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

/// Evaluates `metric` at every sweep point. With `oracle` set, Monte Carlo
/// counterparts and their standard errors are added.
pub fn run_metric(sc: &Scenario, metric: Metric, oracle: bool) -> Result<ResultTable> {
    sc.validate()?;
    let mut table: Option<ResultTable> = None;
    for (value, point) in sweep_points(sc)? {
        let part = metric_rows(&point, metric, oracle)?;
        let t = table.get_or_insert_with(|| {
            let mut cols: Vec<&str> = Vec::new();
            if let Some(sw) = &sc.sweep {
                cols.push(sw.param.as_str());
            }
            cols.extend(part.columns.iter().copied());
            ResultTable::new(&cols)
        });
        for r in part.rows {
            let mut row = Vec::with_capacity(r.len() + 1);
            if let Some(v) = value {
                row.push(Cell::Num(v));
            }
            row.extend(r);
            t.push(row)?;
        }
    }
    let mut t = table.ok_or_else(|| Error::invalid("sweep.values", "no sweep points"))?;
    t.metadata.push(("metric".into(), metric.name().into()));
    t.stamp(sc);
    Ok(t)
}

fn nums(xs: &[f64]) -> Vec<Cell> {
    xs.iter().map(|&x| Cell::Num(x)).collect()
}

fn seed_for(sc: &Scenario, stream: u64) -> u64 {
    sc.run_seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Interference fields checked by the Laplace and moment oracles: ground
/// interferers outside the guard radius, and the UAVs beyond the serving
/// UAV's horizontal distance.
fn interference_tiers(sc: &Scenario) -> [(&'static str, InterfererTier, Region, f64); 2] {
    let link = sc.uav_link();
    [
        ("ground", sc.ground_tier(), sc.region(), 0.0),
        ("uav", sc.uav_tier(), link.interference_region(), sc.uav_serving_distance()),
    ]
}

/// Log-spaced s-grid over the three decades [0.01, 10]/E[I]. Further out
/// ℒ drops below what 1e5 fields can resolve to a few percent.
pub fn laplace_grid(mean_w: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / (points - 1) as f64) / mean_w)
        .collect()
}

/// Monte Carlo draws of one tier's aggregate interference from points
/// beyond horizontal distance `r_min`.
pub fn interference_draws(tier: &InterfererTier, region: &Region, r_min: f64, trials: usize, seed: u64) -> Vec<f64> {
    run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| tier.sample(region, r_min, rng).total())
}

fn metric_rows(sc: &Scenario, metric: Metric, oracle: bool) -> Result<Rows> {
    let tol = sc.run_tol;
    let trials = sc.run_trials;
    let seed = sc.run_seed;
    let spec = sc.fbc_spec()?;
    let eps = sc.fbc_epsilon;
    let mut columns: Vec<&'static str>;
    let mut rows = Vec::new();
    match metric {
        Metric::AssociationProb => {
            let p = association_probability(&sc.association_config(), &sc.uav_process(), &sc.region(), trials, seed)?;
            columns = vec!["p_uav", "p_satellite", "std_error"];
            let se = (p.uav * (1.0 - p.uav) / trials as f64).sqrt();
            rows.push(nums(&[p.uav, p.satellite, se]));
        }
        Metric::EpsilonSat => {
            let m = sc.satellite_model()?;
            columns = vec!["epsilon_sat", "epsilon_sat_asymptotic"];
            let mut row = vec![epsilon_satellite_theorem1(&m, &spec, tol)?, epsilon_satellite_asymptotic(&m, &spec)];
            if oracle {
                columns.extend(["mc", "mc_std_error", "mc_normal", "mc_normal_std_error"]);
                let (lin, normal) = satellite_epsilon_mc(sc, &m, &spec, trials, seed)?;
                row.extend([lin.mean, lin.std_error, normal.mean, normal.std_error]);
            }
            rows.push(nums(&row));
        }
        Metric::EpsilonUav => {
            let link = sc.uav_link();
            columns = vec!["epsilon_uav"];
            let mut row = vec![link.epsilon_averaged(&spec, tol.max(1e-10))?];
            if oracle {
                columns.extend(["mc", "mc_std_error"]);
                let e = uav_epsilon_mc(&link, &spec, trials, seed);
                row.extend([e.mean, e.std_error]);
            }
            rows.push(nums(&row));
        }
        Metric::OutageProb => {
            let m = sc.satellite_model()?;
            let link = sc.uav_link();
            let r0 = sc.uav_serving_distance();
            columns = vec!["outage_sat", "outage_uav"];
            let mut row = vec![
                m.cdf_quadrature(spec.threshold(), tol.max(1e-12))?,
                link.epsilon_given_distance(&spec, r0, tol.max(1e-12))?,
            ];
            if oracle {
                columns.extend(["mc_sat", "mc_sat_std_error", "mc_uav", "mc_uav_std_error"]);
                let s = satellite_outage_mc(sc, &spec, trials, seed)?;
                let u = link.mc_bound_given_distance(&spec, r0, trials, seed_for(sc, 1))?;
                row.extend([s.mean, s.std_error, u.mean, u.std_error]);
            }
            rows.push(nums(&row));
        }
        Metric::OutageCapacity => {
            let m = sc.satellite_model()?;
            let (sat, uav) = mean_links(sc, &m)?;
            let link = sc.uav_link();
            columns = vec!["capacity_sat", "capacity_sat_high_snr", "capacity_uav"];
            let mut row = vec![
                outage_capacity_satellite(&m.fading, eps, &sat)?,
                outage_capacity_satellite_high_snr(&m.fading, eps, &sat)?,
                outage_capacity_uav(link.fading(), eps, &uav)?,
            ];
            if oracle {
                columns.extend(["mc_sat"]);
                let mut x: Vec<f64> = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| m.fading.sample(rng));
                x.sort_by(f64::total_cmp);
                let k = ((eps * trials as f64).ceil() as usize).clamp(1, trials) - 1;
                let g = x[k] * sat.signal_w / (sat.interference_w + sat.noise_w);
                row.push(g.ln_1p() / std::f64::consts::LN_2);
            }
            rows.push(nums(&row));
        }
        Metric::EffectiveCapacity => {
            let m = sc.satellite_model()?;
            let link = sc.uav_link();
            let r0 = sc.uav_serving_distance();
            let theta = sc.qos_theta;
            let uav = effective_capacity_uav(theta, &spec, &link, r0, eps, UAV_SERIES_CAP, tol)?;
            columns = vec!["ec_sat", "ec_sat_asymptotic", "ec_uav", "ec_uav_method"];
            let mut row = vec![
                Cell::Num(effective_capacity_satellite(theta, &spec, &m, eps, tol)?.value),
                Cell::Num(effective_capacity_satellite_asymptotic(theta, &spec, &m, eps, tol)?.value),
                Cell::Num(uav.value),
                Cell::from(uav.method.name()),
            ];
            if oracle {
                columns.extend([
                    "mc_sat",
                    "mc_sat_std_error",
                    "mc_uav",
                    "mc_uav_std_error",
                    "mc_with_uav",
                    "mc_with_uav_std_error",
                ]);
                let fixed = tier_rate_samples(&m, &link, ServingDistance::Fixed(r0), eps, trials, seed)?;
                let nearest = tier_rate_samples(&m, &link, ServingDistance::Nearest, eps, trials, seed_for(sc, 1))?;
                for rates in [&nearest.satellite, &fixed.uav, &nearest.best] {
                    let (v, se) = ec_estimate(theta, &spec, rates, eps)?;
                    row.extend([Cell::Num(v), Cell::Num(se)]);
                }
            }
            rows.push(row);
        }
        Metric::DelayViolation => {
            let m = sc.satellite_model()?;
            let (rs, ru) = delay_rates(sc, &m, &spec)?;
            let q = sc.qos_spec();
            columns = vec!["rate_sat", "p_sat", "rate_uav", "p_uav"];
            let p = |r: f64| -> Result<f64> { Ok(delay_violation_probability(&q, &FbcSpec { rate: r, ..spec })) };
            rows.push(nums(&[rs, p(rs)?, ru, p(ru)?]));
        }
        Metric::Laplace => {
            columns = vec!["tier", "s", "laplace"];
            if oracle {
                columns.extend(["mc", "mc_std_error"]);
            }
            for (k, (name, tier, region, r_min)) in interference_tiers(sc).into_iter().enumerate() {
                let mean = tier.moments_beyond(&region, r_min, tol.max(1e-12))?.mean_w;
                let grid = laplace_grid(mean, 7);
                let draws = if oracle {
                    interference_draws(&tier, &region, r_min, trials, seed_for(sc, k as u64))
                } else {
                    Vec::new()
                };
                for s in grid {
                    let mut row = vec![Cell::from(name), Cell::Num(s), Cell::Num(tier.laplace_beyond(s, &region, r_min, tol)?)];
                    if oracle {
                        let e = Estimate::from_samples(&draws.iter().map(|i| (-s * i).exp()).collect::<Vec<_>>());
                        row.extend([Cell::Num(e.mean), Cell::Num(e.std_error)]);
                    }
                    rows.push(row);
                }
            }
        }
        Metric::Moments => {
            columns = vec!["tier", "mean", "variance"];
            if oracle {
                columns.extend(["mc_mean", "mc_mean_std_error", "mc_variance"]);
            }
            for (k, (name, tier, region, r_min)) in interference_tiers(sc).into_iter().enumerate() {
                let mo = tier.moments_beyond(&region, r_min, tol.max(1e-12))?;
                let mut row = vec![Cell::from(name), Cell::Num(mo.mean_w), Cell::Num(mo.variance_w2)];
                if oracle {
                    let e = Estimate::from_samples(&interference_draws(&tier, &region, r_min, trials, seed_for(sc, k as u64)));
                    row.extend([Cell::Num(e.mean), Cell::Num(e.std_error), Cell::Num(e.variance())]);
                }
                rows.push(row);
            }
        }
    }
    Ok(Rows { columns, rows })
}

/// Satellite and UAV link states at the mean interference level; the UAV
/// serves from the scenario's serving distance.
fn mean_links(sc: &Scenario, m: &SatelliteSinrModel) -> Result<(LinkState, LinkState)> {
    let link = sc.uav_link();
    let r0 = sc.uav_serving_distance();
    let iu = link
        .interferers
        .moments_beyond(&link.interference_region(), r0, sc.run_tol.max(1e-12))?
        .mean_w;
    Ok((
        LinkState::new(m.signal_w, m.interference.mean(), m.noise_w),
        LinkState::new(link.signal_w(r0)?, iu, link.interferers.budget.noise_power_w),
    ))
}

/// Normal-approximation rates of both tiers at their mean SINR.
fn delay_rates(sc: &Scenario, m: &SatelliteSinrModel, spec: &FbcSpec) -> Result<(f64, f64)> {
    let (sat, uav) = mean_links(sc, m)?;
    let gs = sat.signal_w * m.fading.mean() / (sat.interference_w + sat.noise_w);
    let gu = uav.signal_w / (uav.interference_w + uav.noise_w);
    Ok((
        normal_approx_rate(gs, spec.blocklength, spec.target_error)?,
        normal_approx_rate(gu, spec.blocklength, spec.target_error)?,
    ))
}

/// EC of rate samples with a delta-method standard error.
pub fn ec_estimate(theta: f64, spec: &FbcSpec, rates: &[f64], eps: f64) -> Result<(f64, f64)> {
    let v = effective_capacity(theta, spec, rates, eps)?.value;
    let t = theta * spec.blocklength as f64;
    let top = rates.iter().map(|&r| -t * r).fold(f64::NEG_INFINITY, f64::max);
    let scaled = Estimate::from_samples(&rates.iter().map(|&r| (-t * r - top).exp()).collect::<Vec<_>>());
    let denom = eps * (-top).exp() + (1.0 - eps) * scaled.mean;
    let se = (1.0 - eps) * scaled.std_error / (theta * denom);
    Ok((v, if se.is_finite() { se } else { 0.0 }))
}

/// Monte Carlo of the satellite decoding error over shadowed-Rician draws
/// and sampled ground fields: E[Ψ(γ)] with the interference-limited SINR, and
/// the normal approximation with noise included.
fn satellite_epsilon_mc(
    sc: &Scenario,
    m: &SatelliteSinrModel,
    spec: &FbcSpec,
    trials: usize,
    seed: u64,
) -> Result<(Estimate, Estimate)> {
    let tier = sc.ground_tier();
    let region = sc.region();
    let c = linearization_constants(spec);
    let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| {
        let x = m.fading.sample(rng);
        let i = tier.sample(&region, 0.0, rng).total();
        let lin = if i > 0.0 { psi(m.signal_w * x / i, &c, spec) } else { 0.0 };
        (lin, epsilon_normal_at(spec, m.signal_w * x / (i + m.noise_w)))
    });
    let (a, b): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    Ok((Estimate::from_samples(&a), Estimate::from_samples(&b)))
}

fn satellite_outage_mc(sc: &Scenario, spec: &FbcSpec, trials: usize, seed: u64) -> Result<Estimate> {
    let m = sc.satellite_model()?;
    let tier = sc.ground_tier();
    let region = sc.region();
    let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| {
        let x = m.fading.sample(rng);
        let i = tier.sample(&region, 0.0, rng).total();
        if m.signal_w * x / (i + m.noise_w) < spec.threshold() {
            1.0
        } else {
            0.0
        }
    });
    Ok(Estimate::from_samples(&draws))
}

/// Monte Carlo of the distance-averaged UAV error: a full UAV field per
/// trial, served by the horizontally nearest UAV at the serving altitude,
/// scored with the same fading bound as the closed form. Empty fields fail.
pub fn uav_epsilon_mc(link: &UavLink, spec: &FbcSpec, trials: usize, seed: u64) -> Estimate {
    let tier = &link.interferers;
    let region = link.interference_region();
    let fading = link.fading();
    let noise = tier.budget.noise_power_w;
    let draws = run_trials(trials, seed, |rng: &mut ChaCha8Rng, _| {
        let field = sample_field_with(&tier.process, &region, rng);
        let Some(k) = (0..field.len()).min_by(|&a, &b| {
            field.points[a]
                .horizontal()
                .total_cmp(&field.points[b].horizontal())
        }) else {
            return 1.0;
        };
        let r0 = field.points[k].horizontal();
        let mut i = 0.0;
        for (j, q) in field.points.iter().enumerate() {
            let u: f64 = rng.random();
            let h = fading.sample(rng);
            if j == k {
                continue;
            }
            let (p_los, pl, pn) = tier.branches(q.horizontal(), q.z);
            i += h * if u < p_los { pl } else { pn };
        }
        match link.signal_w(r0) {
            Ok(a) => outage_uav(fading, spec, &LinkState::new(a, i, noise)),
            Err(_) => 1.0,
        }
    });
    Estimate::from_samples(&draws)
}

/// Outcome of a validation suite: one row per check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub table: ResultTable,
    pub passed: bool,
}

struct Checks {
    suite: Suite,
    table: ResultTable,
    passed: bool,
}

impl Checks {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            table: ResultTable::new(&["suite", "check", "measured", "tolerance", "status"]),
            passed: true,
        }
    }

    fn add(&mut self, check: String, measured: f64, tolerance: f64) {
        let ok = measured <= tolerance;
        self.passed &= ok;
        self.push(check, measured, tolerance, if ok { "PASS" } else { "FAIL" });
    }

    /// Reported without affecting the verdict.
    fn info(&mut self, check: String, measured: f64, tolerance: f64) {
        self.push(check, measured, tolerance, "INFO");
    }

    fn push(&mut self, check: String, measured: f64, tolerance: f64, status: &str) {
        self.table.rows.push(vec![
            Cell::from(self.suite.name()),
            Cell::Text(check),
            Cell::Num(measured),
            Cell::Num(tolerance),
            Cell::from(status),
        ]);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Runs one validation suite on the scenario.
pub fn run_validation(sc: &Scenario, suite: Suite) -> Result<ValidationReport> {
    sc.validate()?;
    let mut c = Checks::new(suite);
    let tol = sc.run_tol;
    let trials = sc.run_trials;
    match suite {
        Suite::LaplaceVsMc => {
            for (k, (name, tier, region, r_min)) in interference_tiers(sc).into_iter().enumerate() {
                let mean = tier.moments_beyond(&region, r_min, tol.max(1e-12))?.mean_w;
                let draws = interference_draws(&tier, &region, r_min, trials, seed_for(sc, k as u64));
                for s in laplace_grid(mean, 7) {
                    let an = tier.laplace_beyond(s, &region, r_min, tol)?;
                    let mc = crate::mc::compensated_sum(draws.iter().map(|i| (-s * i).exp())) / trials as f64;
                    c.add(format!("{name} s={}", format_number(s)), rel(mc, an), 0.03);
                }
            }
        }
        Suite::MomentsVsMc => {
            for (k, (name, tier, region, r_min)) in interference_tiers(sc).into_iter().enumerate() {
                let mo = tier.moments_beyond(&region, r_min, tol.max(1e-12))?;
                let e = Estimate::from_samples(&interference_draws(&tier, &region, r_min, trials, seed_for(sc, k as u64)));
                c.add(format!("{name} mean"), rel(e.mean, mo.mean_w), 0.02);
                c.add(format!("{name} variance"), rel(e.variance(), mo.variance_w2), 0.02);
            }
        }
        Suite::Theorem1VsQuadrature => {
            let m = sc.satellite_model()?;
            let eps = sc.fbc_epsilon;
            for n in [100u32, 200, 400, 800, 1000] {
                for r in [0.5, 1.0] {
                    let spec = FbcSpec::new(n, r, eps)?;
                    let closed = epsilon_satellite_theorem1(&m, &spec, 1e-8)?;
                    let free = SatelliteSinrModel { noise_w: 0.0, ..m };
                    let quad = epsilon_linearized(|x| free.cdf_quadrature(x, 1e-10), &spec, 1e-9)?;
                    c.add(format!("n={n} R={r}"), (closed - quad).abs(), 1e-3);
                }
            }
        }
        Suite::OutageRoundtrip => {
            let m = sc.satellite_model()?;
            let (sat, uav) = mean_links(sc, &m)?;
            let fading = sc.uav_link().fading();
            let n = sc.fbc_blocklength;
            for eps in [1e-4, 1e-3, 1e-2] {
                let cs = outage_capacity_satellite(&m.fading, eps, &sat)?;
                let p = outage_satellite(&m.fading, &FbcSpec::new(n, cs, eps)?, &sat)?;
                c.add(format!("satellite eps={}", format_number(eps)), (p - eps).abs(), 1e-3);
                let ch = outage_capacity_satellite_high_snr(&m.fading, eps, &sat)?;
                let p = outage_satellite_high_snr(&m.fading, &FbcSpec::new(n, ch, eps)?, &sat);
                c.add(format!("satellite high-snr eps={}", format_number(eps)), (p - eps).abs(), 1e-3);
                let cu = outage_capacity_uav(fading, eps, &uav)?;
                let p = outage_uav(fading, &FbcSpec::new(n, cu, eps)?, &uav);
                c.add(format!("uav eps={}", format_number(eps)), (p - eps).abs(), 1e-3);
            }
        }
        Suite::EcLimits => ec_limit_checks(sc, &mut c)?,
    }
    let mut table = c.table;
    table.metadata.push(("suite".into(), suite.name().into()));
    table.stamp(sc);
    Ok(ValidationReport {
        table,
        passed: c.passed,
    })
}

/// θ grid {1e-4, 3e-4, …, 1} for the monotonicity check.
pub const EC_THETA_GRID: [f64; 9] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0];

/// High-SINR operating point at which the UAV binomial series converges:
/// sparse UAVs at 10 m, the serving UAV 5 m away, ε = 0.1.
pub fn uav_series_reference(sc: &Scenario) -> Result<Scenario> {
    sc.with("uav.density", 5e-7)?
        .with("uav.altitude_min", 10.0)?
        .with("uav.altitude_max", 10.0)?
        .with("uav.serving_altitude", 10.0)?
        .with("uav.serving_distance", 5.0)
}

fn ec_limit_checks(sc: &Scenario, c: &mut Checks) -> Result<()> {
    let tol = sc.run_tol;
    let spec = sc.fbc_spec()?;
    let eps = sc.fbc_epsilon;
    let m = sc.satellite_model()?;
    let link = sc.uav_link();
    let r0 = sc.uav_serving_distance();

    let sat = |theta: f64| effective_capacity_satellite(theta, &spec, &m, eps, tol).map(|r| r.value);
    let uav = |theta: f64| effective_capacity_uav_quadrature(theta, &spec, &link, r0, eps, tol).map(|r| r.value);
    for (name, f) in [("satellite", &sat as &dyn Fn(f64) -> Result<f64>), ("uav", &uav)] {
        let vals = EC_THETA_GRID.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        let worst = vals
            .windows(2)
            .map(|w| ((w[1] - w[0]) / w[0].abs().max(1e-300)).max(0.0))
            .fold(0.0, f64::max);
        c.add(format!("{name} nonincreasing in theta"), worst, 1e-9);
    }

    // First-order limit against (1−ε)·n·E[R] by quadrature over the surrogate.
    let x = crate::fbc::invert_cdf(|x| m.fading.cdf(x, 1e-13), eps)?;
    let mean_rate = m
        .interference
        .expectation(|i| (x * m.signal_w / (i + m.noise_w)).ln_1p() / std::f64::consts::LN_2, tol)?;
    let target = (1.0 - eps) * spec.blocklength as f64 * mean_rate;
    c.add("satellite theta=1e-6 vs (1-eps)nE[R]".into(), rel(sat(1e-6)?, target), 0.01);
    let a = link.signal_w(r0)?;
    let noise = link.interferers.budget.noise_power_w;
    let gu = -(-(eps.powf(1.0 / link.fading().m as f64))).ln_1p() * a / link.fading().eta();
    let gm = gamma_fit(&link.interferers.moments_beyond(&link.interference_region(), r0, tol.max(1e-12))?)?;
    let mean_rate_u = gm.expectation(|i| (gu / (i + noise)).ln_1p() / std::f64::consts::LN_2, tol)?;
    let target_u = (1.0 - eps) * spec.blocklength as f64 * mean_rate_u;
    c.add("uav theta=1e-6 vs (1-eps)nE[R]".into(), rel(uav(1e-6)?, target_u), 0.01);
    let rates = crate::qos::satellite_rate_samples(&m.fading, &m, eps, sc.run_trials, sc.run_seed)?;
    let small = effective_capacity_small_theta(&spec, &rates, eps)?;
    let mc = effective_capacity(1e-6, &spec, &rates, eps)?.value;
    c.add("sample theta=1e-6 vs small-theta limit".into(), rel(mc, small), 0.01);

    // Binomial series against quadrature where the high-SINR form holds.
    let refsc = uav_series_reference(sc)?;
    let rlink = refsc.uav_link();
    let rr0 = refsc.uav_serving_distance();
    let ln2 = std::f64::consts::LN_2;
    for tt in [1.0, 2.0] {
        let rspec = FbcSpec::new(refsc.fbc_blocklength, refsc.fbc_rate, 0.1)?;
        let theta = tt * ln2 / rspec.blocklength as f64;
        let s = effective_capacity_uav_series(theta, &rspec, &rlink, rr0, 0.1, UAV_SERIES_CAP, tol)?;
        let q = effective_capacity_uav_quadrature(theta, &rspec, &rlink, rr0, 0.1, tol)?;
        c.add(format!("uav series vs quadrature theta~={tt} (reference point)"), rel(s.value, q.value), 0.02);
    }
    let theta = 0.001;
    match effective_capacity_uav_series(theta, &spec, &link, r0, eps, UAV_SERIES_CAP, tol) {
        Ok(s) => {
            let q = effective_capacity_uav_quadrature(theta, &spec, &link, r0, eps, tol)?;
            c.info("uav series vs quadrature theta=0.001 (scenario)".into(), rel(s.value, q.value), 0.02);
        }
        Err(e @ (Error::SeriesDivergence { .. } | Error::SeriesCapExceeded { .. })) => {
            log::info!("scenario point: {e}");
            c.info("uav series vs quadrature theta=0.001 (scenario, series diverges)".into(), f64::NAN, 0.02);
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Altitude at which the UAV trend figures pin every UAV.
pub const TREND_ALTITUDE_M: f64 = 20.0;
/// Altitude of the with/without UAV comparison.
pub const COMPARISON_ALTITUDE_M: f64 = 30.0;

fn pinned(sc: &Scenario, z: f64) -> Result<Scenario> {
    sc.with("uav.altitude_min", z)?
        .with("uav.altitude_max", z)?
        .with("uav.serving_altitude", z)
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|i| {
            let v = 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64);
            // Four significant digits so axis values print cleanly.
            format!("{v:.3e}").parse().unwrap_or(v)
        })
        .collect()
}

/// Builds one canned figure dataset from the scenario's parameters.
pub fn run_figure(sc: &Scenario, fig: Figure) -> Result<ResultTable> {
    sc.validate()?;
    let tol = sc.run_tol;
    let trials = sc.run_trials;
    let seed = sc.run_seed;
    let mut t;
    match fig {
        Figure::Fig2 => {
            t = ResultTable::new(&["uav_density", "uav_bias_db", "p_uav", "p_satellite", "std_error"]);
            for bias in [0.0, 10.0] {
                for lam in [1.5e-6, 3e-6, 6e-6, 15e-6, 30e-6, 60e-6, 150e-6] {
                    let s = sc.with("uav.bias_db", bias)?.with("uav.density", lam)?;
                    let p = association_probability(&s.association_config(), &s.uav_process(), &s.region(), trials, seed)?;
                    let se = (p.uav * (1.0 - p.uav) / trials as f64).sqrt();
                    t.push(nums(&[lam, bias, p.uav, p.satellite, se]))?;
                }
            }
        }
        Figure::Fig3 => {
            t = ResultTable::new(&["uav_density", "uav_gain_db", "altitude", "epsilon_uav"]);
            let base = pinned(sc, TREND_ALTITUDE_M)?;
            let spec = base.fbc_spec()?;
            for gain in [10.0, 20.0, 30.0] {
                for lam in [3e-6, 7.5e-6, 15e-6, 30e-6, 60e-6] {
                    let s = base.with("uav.gain_db", gain)?.with("uav.density", lam)?;
                    let e = s.uav_link().epsilon_averaged(&spec, tol.max(1e-10))?;
                    t.push(nums(&[lam, gain, TREND_ALTITUDE_M, e]))?;
                }
            }
        }
        Figure::Fig4 => {
            t = ResultTable::new(&["epsilon", "altitude", "capacity_uav"]);
            for z in [50.0, 100.0, 200.0] {
                let s = pinned(sc, z)?;
                let m = s.satellite_model()?;
                let (_, uav) = mean_links(&s, &m)?;
                for eps in log_grid(1e-4, 1e-1, 7) {
                    t.push(nums(&[eps, z, outage_capacity_uav(s.uav_link().fading(), eps, &uav)?]))?;
                }
            }
        }
        Figure::Fig5 => {
            t = ResultTable::new(&["epsilon", "ground_density", "capacity_sat", "capacity_sat_high_snr"]);
            for lam in [5e-6, 15e-6, 30e-6] {
                let s = sc.with("ground.density", lam)?;
                let m = s.satellite_model()?;
                let (sat, _) = mean_links(&s, &m)?;
                for eps in log_grid(1e-4, 1e-1, 7) {
                    t.push(nums(&[
                        eps,
                        lam,
                        outage_capacity_satellite(&m.fading, eps, &sat)?,
                        outage_capacity_satellite_high_snr(&m.fading, eps, &sat)?,
                    ]))?;
                }
            }
        }
        Figure::Fig6 => {
            t = ResultTable::new(&["blocklength", "ground_density", "p_sat", "p_uav"]);
            for lam in [5e-6, 15e-6, 30e-6] {
                let s = sc.with("ground.density", lam)?;
                let m = s.satellite_model()?;
                let q = s.qos_spec();
                for n in (1..=10).map(|k| 100 * k) {
                    let spec = FbcSpec::new(n, s.fbc_rate, s.fbc_epsilon)?;
                    let (rs, ru) = delay_rates(&s, &m, &spec)?;
                    t.push(nums(&[
                        n as f64,
                        lam,
                        delay_violation_probability(&q, &FbcSpec { rate: rs, ..spec }),
                        delay_violation_probability(&q, &FbcSpec { rate: ru, ..spec }),
                    ]))?;
                }
            }
        }
        Figure::Fig7 => {
            t = ResultTable::new(&["theta", "blocklength", "p_sat", "p_uav"]);
            let m = sc.satellite_model()?;
            for n in [200u32, 800] {
                let spec = FbcSpec::new(n, sc.fbc_rate, sc.fbc_epsilon)?;
                let (rs, ru) = delay_rates(sc, &m, &spec)?;
                for theta in log_grid(1e-3, 1e-1, 9) {
                    let q = crate::qos::QosSpec {
                        qos_exponent: theta,
                        ..sc.qos_spec()
                    };
                    t.push(nums(&[
                        theta,
                        n as f64,
                        delay_violation_probability(&q, &FbcSpec { rate: rs, ..spec }),
                        delay_violation_probability(&q, &FbcSpec { rate: ru, ..spec }),
                    ]))?;
                }
            }
        }
        Figure::Fig8 => {
            t = ResultTable::new(&["blocklength", "epsilon", "theta", "altitude", "ec_uav"]);
            for z in [TREND_ALTITUDE_M, 100.0] {
                let s = pinned(sc, z)?;
                let link = s.uav_link();
                let r0 = s.uav_serving_distance();
                for eps in [1e-4, 1e-3] {
                    for theta in [0.01, 0.001] {
                        for n in [100u32, 200, 400, 600, 800, 1000] {
                            let spec = FbcSpec::new(n, s.fbc_rate, eps)?;
                            let ec = effective_capacity_uav_quadrature(theta, &spec, &link, r0, eps, tol)?;
                            t.push(nums(&[n as f64, eps, theta, z, ec.value]))?;
                        }
                    }
                }
            }
        }
        Figure::Fig9 => {
            t = ResultTable::new(&[
                "blocklength",
                "epsilon",
                "theta",
                "ec_without_uav",
                "ec_without_uav_std_error",
                "ec_with_uav",
                "ec_with_uav_std_error",
                "ratio",
            ]);
            let s = pinned(sc, COMPARISON_ALTITUDE_M)?;
            let m = s.satellite_model()?;
            let link = s.uav_link();
            for eps in [1e-4, 1e-3] {
                let rates = tier_rate_samples(&m, &link, ServingDistance::Nearest, eps, trials, seed)?;
                for theta in [0.01, 0.001] {
                    for n in [100u32, 200, 400, 600, 800, 1000] {
                        let spec = FbcSpec::new(n, s.fbc_rate, eps)?;
                        let (wo, wo_se) = ec_estimate(theta, &spec, &rates.satellite, eps)?;
                        let (w, w_se) = ec_estimate(theta, &spec, &rates.best, eps)?;
                        t.push(nums(&[n as f64, eps, theta, wo, wo_se, w, w_se, w / wo]))?;
                    }
                }
            }
        }
    }
    t.metadata.push(("figure".into(), fig.name().into()));
    t.stamp(sc);
    Ok(t)
}
