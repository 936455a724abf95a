//! Circular-orbit propagation over a rotating spherical Earth.
//!
//! Everything lives in one Earth-centred inertial frame: the z axis is the
//! rotation axis and, at `t = 0`, the x axis points at longitude 0. Satellites
//! move on Keplerian circles, stations ride the Earth at the sidereal rate.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{QcsError, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Standard gravitational parameter of the Earth, m^3/s^2.
pub const EARTH_MU: f64 = 3.986_004_418e14;
/// Sidereal rotation rate, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;
/// Default visibility mask, expressed as a maximum zenith angle.
pub const DEFAULT_MAX_ZENITH_DEG: f64 = 82.0;

pub type Position = Vector3<f64>;

/// A station fixed to the Earth's surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStation {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub altitude_m: f64,
}

impl GroundStation {
    pub fn new(name: impl Into<String>, lat_deg: f64, lon_deg: f64) -> Result<Self> {
        let gs = GroundStation { name: name.into(), lat_deg, lon_deg, altitude_m: 0.0 };
        gs.validate()?;
        Ok(gs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.lat_deg) {
            return Err(QcsError::Config(format!(
                "station {}: latitude {} outside [-90, 90]",
                self.name, self.lat_deg
            )));
        }
        if !(-180.0..=180.0).contains(&self.lon_deg) {
            return Err(QcsError::Config(format!(
                "station {}: longitude {} outside [-180, 180]",
                self.name, self.lon_deg
            )));
        }
        if !self.altitude_m.is_finite() {
            return Err(QcsError::Config(format!("station {}: altitude not finite", self.name)));
        }
        Ok(())
    }

    /// Inertial position at time `t`.
    pub fn position(&self, t: f64) -> Position {
        ground_position(self, t)
    }
}

/// One orbital plane populated by equally spaced satellites.
///
/// `tilt_deg` rotates the plane away from a polar orbit, so the geometric
/// inclination is `90 - tilt`: tilt 0 is polar, tilt 90 is equatorial and
/// prograde, and opposite tilts give mirror-image planes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularOrbit {
    pub altitude_m: f64,
    pub tilt_deg: f64,
    pub raan_deg: f64,
    pub phase_deg: f64,
    pub n_satellites: usize,
}

impl CircularOrbit {
    pub fn new(
        altitude_m: f64,
        tilt_deg: f64,
        raan_deg: f64,
        phase_deg: f64,
        n_satellites: usize,
    ) -> Result<Self> {
        let orbit = CircularOrbit { altitude_m, tilt_deg, raan_deg, phase_deg, n_satellites };
        orbit.validate()?;
        Ok(orbit)
    }

    /// Equatorial, prograde orbit with a single satellite.
    pub fn equatorial(altitude_m: f64, phase_deg: f64) -> Result<Self> {
        Self::new(altitude_m, 90.0, 0.0, phase_deg, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_m > 0.0 && self.altitude_m.is_finite()) {
            return Err(QcsError::Config(format!("orbit altitude must be > 0, got {}", self.altitude_m)));
        }
        if self.n_satellites == 0 {
            return Err(QcsError::Config("orbit must hold at least one satellite".into()));
        }
        for (what, v) in [("tilt", self.tilt_deg), ("raan", self.raan_deg), ("phase", self.phase_deg)] {
            if !v.is_finite() {
                return Err(QcsError::Config(format!("orbit {what} must be finite")));
            }
        }
        Ok(())
    }

    pub fn radius_m(&self) -> f64 {
        EARTH_RADIUS_M + self.altitude_m
    }

    pub fn inclination_deg(&self) -> f64 {
        90.0 - self.tilt_deg
    }

    pub fn period_s(&self) -> f64 {
        orbital_period(self)
    }
}

/// Period of a circular orbit from Kepler's third law.
pub fn orbital_period(orbit: &CircularOrbit) -> f64 {
    period_at_altitude(orbit.altitude_m)
}

pub fn period_at_altitude(altitude_m: f64) -> f64 {
    let r = EARTH_RADIUS_M + altitude_m;
    TAU * (r * r * r / EARTH_MU).sqrt()
}

/// Inertial position of satellite `sat_index` of `orbit` at time `t`.
pub fn satellite_position(orbit: &CircularOrbit, sat_index: usize, t: f64) -> Result<Position> {
    if sat_index >= orbit.n_satellites {
        return Err(QcsError::SatelliteIndex { index: sat_index, count: orbit.n_satellites });
    }
    Ok(satellite_position_unchecked(orbit, sat_index, t))
}

fn satellite_position_unchecked(orbit: &CircularOrbit, sat_index: usize, t: f64) -> Position {
    let slot = orbit.phase_deg.to_radians() + TAU * sat_index as f64 / orbit.n_satellites as f64;
    // Reduce the elapsed fraction first so t = k*T lands on exactly the same angle.
    let turns = (t / orbit.period_s()).rem_euclid(1.0);
    let u = slot + TAU * turns;
    let inc = orbit.inclination_deg().to_radians();
    let raan = orbit.raan_deg.to_radians();
    let r = orbit.radius_m();

    let (su, cu) = u.sin_cos();
    let (si, ci) = inc.sin_cos();
    let (so, co) = raan.sin_cos();
    let xp = r * cu;
    let yp = r * su * ci;
    let zp = r * su * si;
    Vector3::new(xp * co - yp * so, xp * so + yp * co, zp)
}

pub fn sidereal_day_s() -> f64 {
    TAU / EARTH_ROTATION_RAD_S
}

/// Inertial position of a ground station at time `t`.
pub fn ground_position(gs: &GroundStation, t: f64) -> Position {
    let r = EARTH_RADIUS_M + gs.altitude_m;
    let lat = gs.lat_deg.to_radians();
    let turns = (t / sidereal_day_s()).rem_euclid(1.0);
    let lon = gs.lon_deg.to_radians() + TAU * turns;
    let (slat, clat) = lat.sin_cos();
    let (slon, clon) = lon.sin_cos();
    Vector3::new(r * clat * clon, r * clat * slon, r * slat)
}

/// Line-of-sight geometry between one satellite and one station.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkGeometry {
    pub distance_m: f64,
    pub zenith_angle_rad: f64,
    pub visible: bool,
}

/// Geometry between a satellite and a station position. The station's local
/// vertical is the radial direction of the spherical Earth.
pub fn link_geometry_between(sat_pos: &Position, gs_pos: &Position, max_zenith_rad: f64) -> LinkGeometry {
    let los = sat_pos - gs_pos;
    let distance_m = los.norm();
    let zenith_angle_rad = if distance_m == 0.0 {
        0.0
    } else {
        let cos_z = los.dot(gs_pos) / (distance_m * gs_pos.norm());
        cos_z.clamp(-1.0, 1.0).acos()
    };
    let mask = max_zenith_rad.min(FRAC_PI_2);
    LinkGeometry { distance_m, zenith_angle_rad, visible: zenith_angle_rad <= mask }
}

pub fn link_geometry(sat_pos: &Position, gs: &GroundStation, t: f64, max_zenith_rad: f64) -> LinkGeometry {
    link_geometry_between(sat_pos, &gs.position(t), max_zenith_rad)
}

/// Slant range to a satellite at `altitude_m` seen at central angle `gamma_rad`
/// from the sub-satellite point.
pub fn slant_range(altitude_m: f64, gamma_rad: f64) -> f64 {
    let r = EARTH_RADIUS_M;
    let rs = r + altitude_m;
    (r * r + rs * rs - 2.0 * r * rs * gamma_rad.cos()).sqrt()
}

/// Zenith angle of a satellite at `altitude_m` seen at central angle `gamma_rad`.
pub fn zenith_at_central_angle(altitude_m: f64, gamma_rad: f64) -> f64 {
    let r = EARTH_RADIUS_M;
    let rs = r + altitude_m;
    let l = slant_range(altitude_m, gamma_rad);
    if l == 0.0 {
        return 0.0;
    }
    ((rs * gamma_rad.cos() - r) / l).clamp(-1.0, 1.0).acos()
}

/// Great-circle angle between two stations (their positions at t = 0).
pub fn central_angle_rad(a: &GroundStation, b: &GroundStation) -> f64 {
    let pa = a.position(0.0);
    let pb = b.position(0.0);
    (pa.dot(&pb) / (pa.norm() * pb.norm())).clamp(-1.0, 1.0).acos()
}

/// A set of orbits with a stable flat satellite index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constellation {
    pub orbits: Vec<CircularOrbit>,
}

impl Constellation {
    pub fn new(orbits: Vec<CircularOrbit>) -> Result<Self> {
        for o in &orbits {
            o.validate()?;
        }
        Ok(Constellation { orbits })
    }

    pub fn n_satellites(&self) -> usize {
        self.orbits.iter().map(|o| o.n_satellites).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_satellites() == 0
    }

    /// (orbit, index within orbit) for every satellite, in flat-index order.
    pub fn satellites(&self) -> Vec<(usize, usize)> {
        self.orbits
            .iter()
            .enumerate()
            .flat_map(|(oi, o)| (0..o.n_satellites).map(move |k| (oi, k)))
            .collect()
    }

    pub fn position(&self, sat_id: usize, t: f64) -> Result<Position> {
        let mut id = sat_id;
        for o in &self.orbits {
            if id < o.n_satellites {
                return Ok(satellite_position_unchecked(o, id, t));
            }
            id -= o.n_satellites;
        }
        Err(QcsError::SatelliteIndex { index: sat_id, count: self.n_satellites() })
    }

    /// Positions of every satellite at time `t`, in flat-index order.
    pub fn positions(&self, t: f64) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.n_satellites());
        for o in &self.orbits {
            for k in 0..o.n_satellites {
                out.push(satellite_position_unchecked(o, k, t));
            }
        }
        out
    }
}

/// Number of samples on the grid `0, step, 2 step, ...` covering `[0, span)`.
pub fn sample_count(span_s: f64, step_s: f64) -> usize {
    let n = (span_s / step_s).round() as usize;
    n.max(1)
}

/// Writes `t_s,sat_id,gs_name,distance_m,zenith_deg,visible` rows for every
/// sample, satellite and station.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    constellation: &Constellation,
    stations: &[GroundStation],
    span_s: f64,
    step_s: f64,
    max_zenith_rad: f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "sat_id", "gs_name", "distance_m", "zenith_deg", "visible"])?;
    for k in 0..sample_count(span_s, step_s) {
        let t = k as f64 * step_s;
        let sats = constellation.positions(t);
        for gs in stations {
            let gpos = gs.position(t);
            for (id, sp) in sats.iter().enumerate() {
                let g = link_geometry_between(sp, &gpos, max_zenith_rad);
                w.write_record(&[
                    t.to_string(),
                    id.to_string(),
                    gs.name.clone(),
                    g.distance_m.to_string(),
                    g.zenith_angle_rad.to_degrees().to_string(),
                    g.visible.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overhead_satellite() {
        let orbit = CircularOrbit::equatorial(500e3, 0.0).unwrap();
        let gs = GroundStation::new("eq", 0.0, 0.0).unwrap();
        let sat = satellite_position(&orbit, 0, 0.0).unwrap();
        let g = link_geometry(&sat, &gs, 0.0, DEFAULT_MAX_ZENITH_DEG.to_radians());
        assert!((g.distance_m - 500e3).abs() < 1e-6);
        assert!(g.zenith_angle_rad.abs() < 1e-9);
        assert!(g.visible);
    }

    #[test]
    fn far_side_hidden() {
        let orbit = CircularOrbit::equatorial(500e3, 180.0).unwrap();
        let gs = GroundStation::new("eq", 0.0, 0.0).unwrap();
        let sat = satellite_position(&orbit, 0, 0.0).unwrap();
        assert!(!link_geometry(&sat, &gs, 0.0, FRAC_PI_2).visible);
    }

    #[test]
    fn bad_index() {
        let orbit = CircularOrbit::new(500e3, 50.0, 0.0, 0.0, 3).unwrap();
        assert!(matches!(satellite_position(&orbit, 3, 0.0), Err(QcsError::SatelliteIndex { .. })));
    }

    #[test]
    fn rejects_bad_station() {
        assert!(GroundStation::new("x", 91.0, 0.0).is_err());
        assert!(GroundStation::new("x", 0.0, -181.0).is_err());
    }
}
