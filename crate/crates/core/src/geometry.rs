//! Poisson point fields around a typical user at the origin, link distances
//! and the elevation-angle LOS model for aerial nodes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{check, Error, Result};
use crate::mc::trial_rng;

/// Disk of radius `radius_m` centered on the user.
///
/// Interferers closer than `guard_radius_m` (horizontally) are ignored by the
/// interference models, which keeps every interference moment finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub radius_m: f64,
    pub guard_radius_m: f64,
}

impl Region {
    pub fn new(radius_m: f64, guard_radius_m: f64) -> Result<Self> {
        let r = Self {
            radius_m,
            guard_radius_m,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        check("region.radius", self.radius_m, |v| v > 0.0, "radius > 0")?;
        check(
            "region.guard_radius",
            self.guard_radius_m,
            |v| v >= 0.0 && v < self.radius_m,
            "0 <= guard < radius",
        )
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius_m * self.radius_m
    }
}

impl Default for Region {
    fn default() -> Self {
        Self {
            radius_m: 10_000.0,
            guard_radius_m: 200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AltitudePolicy {
    /// Points on the ground plane.
    Ground,
    /// Altitude drawn uniformly in `[min_m, max_m]` per point.
    Uniform { min_m: f64, max_m: f64 },
    /// Every point at the same altitude.
    Fixed(f64),
}

impl AltitudePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AltitudePolicy::Ground => Ok(()),
            AltitudePolicy::Uniform { min_m, max_m } => {
                check("altitude.min", min_m, |v| v > 0.0, "H_min > 0")?;
                check("altitude.max", max_m, |v| v >= min_m, "H_max >= H_min")
            }
            AltitudePolicy::Fixed(z) => check("altitude", z, |v| v > 0.0, "altitude > 0"),
        }
    }

    pub fn is_aerial(&self) -> bool {
        !matches!(self, AltitudePolicy::Ground)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            AltitudePolicy::Ground => 0.0,
            AltitudePolicy::Uniform { min_m, max_m } => min_m + (max_m - min_m) * rng.random::<f64>(),
            AltitudePolicy::Fixed(z) => z,
        }
    }
}

/// Homogeneous PPP of one tier. `density` is per m² of horizontal area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierProcess {
    pub density: f64,
    pub altitude: AltitudePolicy,
}

impl TierProcess {
    pub fn ground(density: f64) -> Self {
        Self {
            density,
            altitude: AltitudePolicy::Ground,
        }
    }

    pub fn aerial(density: f64, min_m: f64, max_m: f64) -> Self {
        Self {
            density,
            altitude: AltitudePolicy::Uniform { min_m, max_m },
        }
    }

    pub fn validate(&self) -> Result<()> {
        check("density", self.density, |v| v >= 0.0, "density >= 0")?;
        self.altitude.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub fn horizontal(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Distance to the user at the origin.
    pub fn distance(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMark {
    Los,
    Nlos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFieldRealization {
    pub points: Vec<Point>,
    /// Per-point LOS marks; empty until the field is thinned.
    pub marks: Vec<LinkMark>,
    pub seed: u64,
}

impl PointFieldRealization {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_marked(&self) -> bool {
        !self.points.is_empty() && self.marks.len() == self.points.len()
    }

    /// Index of the point closest to the user in 3D.
    pub fn nearest(&self) -> Option<usize> {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance().total_cmp(&b.1.distance()))
            .map(|(i, _)| i)
    }
}

/// Samples the tier's points on the region disk. Deterministic in `seed`.
pub fn sample_field(tier: &TierProcess, region: &Region, seed: u64) -> Result<PointFieldRealization> {
    tier.validate()?;
    region.validate()?;
    let mut rng = trial_rng(seed, 0);
    let mut field = sample_field_with(tier, region, &mut rng);
    field.seed = seed;
    Ok(field)
}

/// Samples a field from an existing stream; used inside Monte Carlo trials.
/// Parameters are assumed validated.
pub fn sample_field_with(tier: &TierProcess, region: &Region, rng: &mut ChaCha8Rng) -> PointFieldRealization {
    let mean = tier.density * region.area();
    let count = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let r = region.radius_m * rng.random::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        let z = tier.altitude.sample(rng);
        points.push(Point {
            x: r * phi.cos(),
            y: r * phi.sin(),
            z,
        });
    }
    PointFieldRealization {
        points,
        marks: Vec::new(),
        seed: 0,
    }
}

/// Nearest point (in 3D) of a field on the region disk, without sampling the
/// whole disk when it is not needed: points are drawn on an inner disk first,
/// and the outer annulus is only sampled if it could still hold a closer one.
pub fn sample_nearest_with(tier: &TierProcess, region: &Region, rng: &mut ChaCha8Rng) -> Option<Point> {
    let poisson = |mean: f64, rng: &mut ChaCha8Rng| {
        if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        }
    };
    let draw = |inner: f64, outer: f64, rng: &mut ChaCha8Rng| -> Option<Point> {
        let count = poisson(tier.density * std::f64::consts::PI * (outer * outer - inner * inner), rng);
        let mut best: Option<Point> = None;
        for _ in 0..count {
            let r = (inner * inner + (outer * outer - inner * inner) * rng.random::<f64>()).sqrt();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            let p = Point {
                x: r * phi.cos(),
                y: r * phi.sin(),
                z: tier.altitude.sample(rng),
            };
            if best.is_none_or(|b| p.distance() < b.distance()) {
                best = Some(p);
            }
        }
        best
    };
    let typical = if tier.density > 0.0 {
        4.0 / (std::f64::consts::PI * tier.density).sqrt()
    } else {
        region.radius_m
    };
    let rho = typical.min(region.radius_m);
    let inner = draw(0.0, rho, rng);
    if rho >= region.radius_m || inner.is_some_and(|p| p.distance() <= rho) {
        return inner;
    }
    match (inner, draw(rho, region.radius_m, rng)) {
        (Some(a), Some(b)) => Some(if b.distance() < a.distance() { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Environment constants of the elevation-angle LOS model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosModelParams {
    pub nu1: f64,
    pub nu2: f64,
}

impl Default for LosModelParams {
    /// Urban constants.
    fn default() -> Self {
        Self {
            nu1: 9.61,
            nu2: 0.16,
        }
    }
}

impl LosModelParams {
    pub fn validate(&self) -> Result<()> {
        check("los.nu1", self.nu1, |v| v > 0.0, "nu1 > 0")?;
        check("los.nu2", self.nu2, |v| v > 0.0, "nu2 > 0")
    }

    /// LOS probability at elevation angle `elevation_deg`.
    pub fn at_elevation(&self, elevation_deg: f64) -> f64 {
        1.0 / (1.0 + self.nu1 * (-self.nu2 * (elevation_deg - self.nu1)).exp())
    }
}

/// Elevation angle in degrees of a node at `altitude_m` seen from `distance_m`.
pub fn elevation_deg(distance_m: f64, altitude_m: f64) -> Result<f64> {
    if !(altitude_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::invalid("altitude", format!("{altitude_m} must be > 0")));
    }
    // Allow rounding when the node is directly overhead.
    if altitude_m > distance_m * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "altitude",
            format!("altitude {altitude_m} m exceeds link distance {distance_m} m"),
        ));
    }
    let ground = (distance_m * distance_m - altitude_m * altitude_m).max(0.0).sqrt();
    Ok(altitude_m.atan2(ground).to_degrees())
}

pub fn los_probability(distance_m: f64, altitude_m: f64, params: &LosModelParams) -> Result<f64> {
    Ok(params.at_elevation(elevation_deg(distance_m, altitude_m)?))
}

/// Marks each aerial point LOS independently with its LOS probability.
pub fn thin_by_los(
    field: &PointFieldRealization,
    params: &LosModelParams,
    seed: u64,
) -> Result<PointFieldRealization> {
    params.validate()?;
    let mut rng = trial_rng(seed, 1);
    let mut out = field.clone();
    out.marks = thin_marks(&field.points, params, &mut rng)?;
    Ok(out)
}

pub fn thin_marks(points: &[Point], params: &LosModelParams, rng: &mut ChaCha8Rng) -> Result<Vec<LinkMark>> {
    points
        .iter()
        .map(|p| {
            let pl = los_probability(p.distance(), p.z, params)?;
            Ok(if rng.random::<f64>() < pl {
                LinkMark::Los
            } else {
                LinkMark::Nlos
            })
        })
        .collect()
}
