//! Entangled-pair link budget: Gaussian-beam capture, secant-law atmosphere
//! and detector efficiencies combined into ebit rates.

use serde::{Deserialize, Serialize};

use crate::error::{QcsError, Result};
use crate::geo::{self, LinkGeometry, DEFAULT_MAX_ZENITH_DEG};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Source on the satellite, traveling photon received on the ground.
    Down,
    /// Source on the ground, traveling photon received by the satellite.
    Up,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Down => "down",
            Direction::Up => "up",
        }
    }
}

/// Hardware and channel knobs of every satellite-ground link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Pair generation rate of each source, pairs/s.
    pub source_rate: f64,
    pub wavelength_m: f64,
    pub sat_aperture_m: f64,
    /// Fraction of the satellite aperture filled by the outgoing beam.
    pub sat_fill_factor: f64,
    pub ground_aperture_m: f64,
    pub detector_eff_sat: f64,
    pub detector_eff_ground: f64,
    /// Atmospheric transmittance looking straight up.
    pub zenith_transmittance: f64,
    /// Links beyond this zenith angle carry no rate.
    pub max_zenith_deg: f64,
    /// Extra beam spread from pointing error, rad. Adds in quadrature.
    pub pointing_jitter_rad: f64,
    /// Far-field half-angle divergence of the uplink beam; `None` means
    /// diffraction-limited from the ground aperture.
    pub uplink_divergence_rad: Option<f64>,
    /// Same for the downlink beam leaving the satellite.
    pub downlink_divergence_rad: Option<f64>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            source_rate: 1e7,
            wavelength_m: 810e-9,
            sat_aperture_m: 0.10,
            sat_fill_factor: 0.8,
            ground_aperture_m: 0.60,
            detector_eff_sat: 0.5,
            detector_eff_ground: 0.5,
            zenith_transmittance: 0.8,
            max_zenith_deg: DEFAULT_MAX_ZENITH_DEG,
            pointing_jitter_rad: 0.0,
            uplink_divergence_rad: None,
            downlink_divergence_rad: Some(3e-6),
        }
    }
}

impl ChannelParams {
    /// Purely diffraction-limited beams in both directions.
    pub fn diffraction_limited() -> Self {
        ChannelParams { downlink_divergence_rad: None, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("sat_fill_factor", self.sat_fill_factor),
            ("detector_eff_sat", self.detector_eff_sat),
            ("detector_eff_ground", self.detector_eff_ground),
            ("zenith_transmittance", self.zenith_transmittance),
        ];
        for (name, v) in unit {
            if !(v > 0.0 && v <= 1.0) {
                return Err(QcsError::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        let positive = [
            ("source_rate", self.source_rate),
            ("wavelength_m", self.wavelength_m),
            ("sat_aperture_m", self.sat_aperture_m),
            ("ground_aperture_m", self.ground_aperture_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QcsError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.max_zenith_deg > 0.0 && self.max_zenith_deg <= 90.0) {
            return Err(QcsError::Config(format!(
                "max_zenith_deg must lie in (0, 90], got {}",
                self.max_zenith_deg
            )));
        }
        if !(self.pointing_jitter_rad >= 0.0) {
            return Err(QcsError::Config("pointing_jitter_rad must be >= 0".into()));
        }
        for (name, v) in [
            ("uplink_divergence_rad", self.uplink_divergence_rad),
            ("downlink_divergence_rad", self.downlink_divergence_rad),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(QcsError::Config(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn max_zenith_rad(&self) -> f64 {
        self.max_zenith_deg.to_radians()
    }

    /// Beam waist radius at the transmitter for the given direction.
    pub fn waist_m(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Down => self.sat_fill_factor * self.sat_aperture_m / 2.0,
            Direction::Up => self.ground_aperture_m / 2.0,
        }
    }

    pub fn receiver_aperture_m(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Down => self.ground_aperture_m,
            Direction::Up => self.sat_aperture_m,
        }
    }

    /// Far-field half-angle divergence actually used for `direction`.
    pub fn divergence_rad(&self, direction: Direction) -> f64 {
        let custom = match direction {
            Direction::Down => self.downlink_divergence_rad,
            Direction::Up => self.uplink_divergence_rad,
        };
        custom.unwrap_or_else(|| diffraction_divergence(self.waist_m(direction), self.wavelength_m))
    }

    pub fn detector_product(&self) -> f64 {
        self.detector_eff_sat * self.detector_eff_ground
    }

    /// Free-space capture fraction at slant range `distance_m`.
    pub fn eta_freespace(&self, distance_m: f64, direction: Direction) -> f64 {
        let w0 = self.waist_m(direction);
        let theta = self.divergence_rad(direction);
        let spread = theta * theta + self.pointing_jitter_rad * self.pointing_jitter_rad;
        let w2 = w0 * w0 + spread * distance_m * distance_m;
        capture_fraction(self.receiver_aperture_m(direction) / 2.0, w2)
    }
}

/// Half-angle divergence of a diffraction-limited Gaussian beam.
pub fn diffraction_divergence(waist_m: f64, wavelength_m: f64) -> f64 {
    wavelength_m / (std::f64::consts::PI * waist_m)
}

fn capture_fraction(rx_radius: f64, beam_radius_sq: f64) -> f64 {
    -(-2.0 * rx_radius * rx_radius / beam_radius_sq).exp_m1()
}

/// Fraction of a Gaussian beam collected by a circular receiver.
///
/// `tx_diameter` is the filled transmit diameter, so the waist radius is
/// half of it.
pub fn eta_freespace(distance_m: f64, tx_diameter: f64, rx_diameter: f64, wavelength_m: f64) -> f64 {
    let w0 = tx_diameter / 2.0;
    let rayleigh = std::f64::consts::PI * w0 * w0 / wavelength_m;
    let ratio = distance_m / rayleigh;
    let w2 = w0 * w0 * (1.0 + ratio * ratio);
    capture_fraction(rx_diameter / 2.0, w2)
}

/// Secant-law atmospheric transmittance, zero past `max_zenith_rad`.
pub fn eta_atmosphere(zenith_rad: f64, zenith_transmittance: f64, max_zenith_rad: f64) -> f64 {
    if zenith_rad > max_zenith_rad || zenith_rad >= std::f64::consts::FRAC_PI_2 {
        return 0.0;
    }
    zenith_transmittance.powf(1.0 / zenith_rad.cos())
}

/// Ebit rate delivered over one link. Invisible geometry gives 0.
pub fn ebit_rate(geom: &LinkGeometry, params: &ChannelParams, direction: Direction) -> f64 {
    if !geom.visible {
        return 0.0;
    }
    rate_at(geom.distance_m, geom.zenith_angle_rad, params, direction)
}

/// Rate for a given slant range and zenith angle, visibility mask included.
pub fn rate_at(distance_m: f64, zenith_rad: f64, params: &ChannelParams, direction: Direction) -> f64 {
    let atm = eta_atmosphere(zenith_rad, params.zenith_transmittance, params.max_zenith_rad());
    if atm == 0.0 {
        return 0.0;
    }
    params.source_rate * params.eta_freespace(distance_m, direction) * atm * params.detector_product()
}

/// Rate towards a satellite at `altitude_m` displaced by `gamma_rad` of central
/// angle from the station.
pub fn rate_at_central_angle(params: &ChannelParams, altitude_m: f64, gamma_rad: f64, direction: Direction) -> f64 {
    let l = geo::slant_range(altitude_m, gamma_rad);
    let z = geo::zenith_at_central_angle(altitude_m, gamma_rad);
    rate_at(l, z, params, direction)
}

/// Both directions of one satellite-station geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkRates {
    pub downlink_ebits_per_s: f64,
    pub uplink_ebits_per_s: f64,
    pub downlink_loss_db: f64,
    pub uplink_loss_db: f64,
}

pub fn link_rates(geom: &LinkGeometry, params: &ChannelParams) -> LinkRates {
    let down = ebit_rate(geom, params, Direction::Down);
    let up = ebit_rate(geom, params, Direction::Up);
    LinkRates {
        downlink_ebits_per_s: down,
        uplink_ebits_per_s: up,
        downlink_loss_db: loss_db(down, params.source_rate),
        uplink_loss_db: loss_db(up, params.source_rate),
    }
}

/// Loss in dB relative to the source rate; a zero rate is infinite loss.
pub fn loss_db(rate: f64, source_rate: f64) -> f64 {
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        -10.0 * (rate / source_rate).log10()
    }
}

pub fn db_to_transmittance(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_limit() {
        let p = ChannelParams {
            detector_eff_sat: 1.0,
            detector_eff_ground: 1.0,
            zenith_transmittance: 1.0,
            ..ChannelParams::default()
        };
        let r = p.source_rate * 1.0 * eta_atmosphere(0.0, 1.0, 1.0) * p.detector_product();
        assert_eq!(r, 1e7);
    }

    #[test]
    fn atmosphere_cutoff() {
        let mask = 60f64.to_radians();
        assert_eq!(eta_atmosphere(0.0, 0.5, mask), 0.5);
        assert!((eta_atmosphere(60f64.to_radians() - 1e-12, 0.5, mask) - 0.25).abs() < 1e-9);
        assert_eq!(eta_atmosphere(61f64.to_radians(), 0.5, mask), 0.0);
    }

    #[test]
    fn loss_sentinel() {
        assert_eq!(loss_db(1e7, 1e7), 0.0);
        assert!((loss_db(1e3, 1e7) - 40.0).abs() < 1e-12);
        assert!(loss_db(0.0, 1e7).is_infinite());
    }
}
