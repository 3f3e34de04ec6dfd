//! Acquisition geometry and the moving-target range-history model.
//!
//! All angles are radians and all lengths meters; degrees exist only at the
//! CLI boundary. The slow-time origin is the start of the acquisition, with
//! the along-track coordinate `x = V t`.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("geometry field `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("incidence angle must lie in (0, pi/2), got {0} rad")]
    BadIncidence(f64),
    #[error("prf {prf} Hz must be at least the Doppler bandwidth {doppler} Hz")]
    PrfBelowDoppler { prf: f64, doppler: f64 },
    #[error("geometry field `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("platform velocity must be nonzero to form motion ratios")]
    ZeroVelocity,
}

/// Radar acquisition constants for a staring-spotlight X-band geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarGeometry {
    /// Electromagnetic wavelength (m).
    pub wavelength_em: f64,
    /// Platform velocity V (m/s).
    pub platform_velocity: f64,
    /// Reference range R0 at t = 0 (m).
    pub reference_range: f64,
    /// Zero-Doppler distance r (m).
    pub zero_doppler_range: f64,
    /// Physical antenna aperture length (m).
    pub antenna_length: f64,
    /// Distance d between two along-track acquisitions (m).
    pub sample_spacing: f64,
    /// Pulse count N.
    pub pulse_count: u64,
    /// Incidence angle (rad).
    pub incidence_angle: f64,
    /// Total chirp bandwidth (Hz).
    pub chirp_bandwidth: f64,
    /// Total Doppler bandwidth (Hz).
    pub doppler_bandwidth: f64,
    /// Pulse repetition frequency (Hz).
    pub prf: f64,
    /// Observation duration T (s).
    pub acquisition_duration: f64,
}

impl RadarGeometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let positives = [
            ("wavelength_em", self.wavelength_em),
            ("platform_velocity", self.platform_velocity),
            ("reference_range", self.reference_range),
            ("zero_doppler_range", self.zero_doppler_range),
            ("antenna_length", self.antenna_length),
            ("sample_spacing", self.sample_spacing),
            ("chirp_bandwidth", self.chirp_bandwidth),
            ("doppler_bandwidth", self.doppler_bandwidth),
            ("prf", self.prf),
            ("acquisition_duration", self.acquisition_duration),
        ];
        for (name, value) in positives {
            if !value.is_finite() {
                return Err(GeometryError::NonFinite(name));
            }
            if value <= 0.0 {
                return Err(GeometryError::NonPositive(name));
            }
        }
        if self.pulse_count == 0 {
            return Err(GeometryError::NonPositive("pulse_count"));
        }
        if !self.incidence_angle.is_finite() {
            return Err(GeometryError::NonFinite("incidence_angle"));
        }
        if self.incidence_angle <= 0.0 || self.incidence_angle >= FRAC_PI_2 {
            return Err(GeometryError::BadIncidence(self.incidence_angle));
        }
        if self.prf < self.doppler_bandwidth {
            return Err(GeometryError::PrfBelowDoppler {
                prf: self.prf,
                doppler: self.doppler_bandwidth,
            });
        }
        Ok(())
    }

    /// Synthetic aperture length `L_sa = 2 N d`.
    pub fn synthetic_aperture(&self) -> f64 {
        2.0 * self.pulse_count as f64 * self.sample_spacing
    }
}

impl Default for RadarGeometry {
    /// X-band staring-spotlight values: 450 MHz chirp, 22 kHz Doppler band,
    /// PRF twice the Doppler band, 6 m antenna, 7 km/s platform at 650 km.
    /// The carrier wavelength defaults to 0.031 m (X-band) and is
    /// configurable because the acquisition table never states it.
    fn default() -> Self {
        Self {
            wavelength_em: 0.031,
            platform_velocity: 7000.0,
            reference_range: 650_000.0,
            zero_doppler_range: 650_000.0,
            antenna_length: 6.0,
            sample_spacing: 0.159,
            pulse_count: 4096,
            incidence_angle: 35f64.to_radians(),
            chirp_bandwidth: 450e6,
            doppler_bandwidth: 22e3,
            prf: 44e3,
            acquisition_duration: 14.0,
        }
    }
}

/// Kinematic state of a point target at slow-time zero.
///
/// Positions are scene coordinates (meters from the canvas origin along
/// range and azimuth); velocities and accelerations are ground-frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetState {
    pub range_position: f64,
    pub azimuth_position: f64,
    pub v_r: f64,
    pub v_a: f64,
    pub a_r: f64,
    pub a_a: f64,
}

impl TargetState {
    pub fn stationary(range_position: f64, azimuth_position: f64) -> Self {
        Self {
            range_position,
            azimuth_position,
            ..Self::default()
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.v_r == 0.0 && self.v_a == 0.0 && self.a_r == 0.0 && self.a_a == 0.0
    }

    /// Soft check of the Taylor regime |v| << V. Not an error: slow targets
    /// outside the regime still evaluate, the expansion just degrades.
    pub fn within_taylor_regime(&self, geom: &RadarGeometry) -> bool {
        let limit = 0.05 * geom.platform_velocity;
        self.v_r.abs() <= limit && self.v_a.abs() <= limit
    }
}

/// Dimensionless displacement ratios of the second-order range model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEpsilons {
    /// v_r / V, from range velocity.
    pub eps_r1: f64,
    /// a_r R0 / V^2, from range acceleration.
    pub eps_r2: f64,
    /// v_a / V, from azimuth velocity.
    pub eps_c1: f64,
}

impl MotionEpsilons {
    pub fn is_zero(&self) -> bool {
        self.eps_r1 == 0.0 && self.eps_r2 == 0.0 && self.eps_c1 == 0.0
    }
}

/// Exact slant-range history
/// `R(t) = sqrt((V t - S_a)^2 + (R0 - S_r)^2)` with
/// `S_r = v_r t + a_r t^2 / 2` and `S_a = v_a t + a_a t^2 / 2`.
///
/// Total on finite inputs; intended for `t` within the acquisition but
/// evaluable anywhere (the symmetry properties use negative t).
pub fn exact_range_history(target: &TargetState, geom: &RadarGeometry, t: f64) -> f64 {
    let s_r = target.v_r * t + 0.5 * target.a_r * t * t;
    let s_a = target.v_a * t + 0.5 * target.a_a * t * t;
    let along = geom.platform_velocity * t - s_a;
    let across = geom.reference_range - s_r;
    (along * along + across * across).sqrt()
}

/// Second-order range model in the along-track coordinate `x = V t`:
/// `R(x) = R0 - eps_r1 x + [(1 - eps_c1)^2 - eps_r2] x^2 / (2 R0)`.
pub fn approx_range_history(target: &TargetState, geom: &RadarGeometry, x: f64) -> f64 {
    let eps = motion_epsilons(target, geom)
        .expect("validated geometry has nonzero platform velocity");
    let quad = (1.0 - eps.eps_c1).powi(2) - eps.eps_r2;
    geom.reference_range - eps.eps_r1 * x + quad * x * x / (2.0 * geom.reference_range)
}

/// Displacement ratios eps_r1 = v_r/V, eps_r2 = a_r R0/V^2, eps_c1 = v_a/V.
pub fn motion_epsilons(
    target: &TargetState,
    geom: &RadarGeometry,
) -> Result<MotionEpsilons, GeometryError> {
    let v = geom.platform_velocity;
    if v == 0.0 {
        return Err(GeometryError::ZeroVelocity);
    }
    Ok(MotionEpsilons {
        eps_r1: target.v_r / v,
        eps_r2: target.a_r * geom.reference_range / (v * v),
        eps_c1: target.v_a / v,
    })
}

/// Quantities derived from the geometry constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedGeometry {
    /// Azimuth electromagnetic footprint `L = lambda r / d_a` (m).
    pub footprint: f64,
    /// Synthetic aperture `L_sa = 2 N d` (m).
    pub synthetic_aperture: f64,
    /// Doppler bandwidth `B_cD = 4 N d / (lambda r)`.
    pub doppler_bandwidth: f64,
    /// Azimuth resolution `delta_D = lambda r / (2 L_sa)` (m).
    pub azimuth_resolution: f64,
}

pub fn derived_geometry(geom: &RadarGeometry) -> DerivedGeometry {
    let l_sa = geom.synthetic_aperture();
    let lambda_r = geom.wavelength_em * geom.zero_doppler_range;
    DerivedGeometry {
        footprint: lambda_r / geom.antenna_length,
        synthetic_aperture: l_sa,
        doppler_bandwidth: 4.0 * geom.pulse_count as f64 * geom.sample_spacing / lambda_r,
        azimuth_resolution: lambda_r / (2.0 * l_sa),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> RadarGeometry {
        RadarGeometry::default()
    }

    #[test]
    fn default_geometry_is_valid() {
        geom().validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut g = geom();
        g.prf = 10e3;
        assert!(matches!(
            g.validate(),
            Err(GeometryError::PrfBelowDoppler { .. })
        ));
        let mut g = geom();
        g.incidence_angle = 1.6;
        assert!(matches!(g.validate(), Err(GeometryError::BadIncidence(_))));
        let mut g = geom();
        g.chirp_bandwidth = -1.0;
        assert!(matches!(
            g.validate(),
            Err(GeometryError::NonPositive("chirp_bandwidth"))
        ));
    }

    #[test]
    fn stationary_range_at_zero_is_reference() {
        let t = TargetState::stationary(0.0, 0.0);
        assert_eq!(exact_range_history(&t, &geom(), 0.0), 650_000.0);
    }

    #[test]
    fn stationary_range_after_one_second_is_pythagorean() {
        let t = TargetState::stationary(0.0, 0.0);
        let r = exact_range_history(&t, &geom(), 1.0);
        let expect = (7000.0f64.powi(2) + 650_000.0f64.powi(2)).sqrt();
        assert!((r - expect).abs() < 1e-9);
        assert!((r - 650_037.69).abs() < 0.01);
    }

    #[test]
    fn moving_target_exact_vs_approx_at_two_seconds() {
        // v_r = 10 m/s, t = 2 s: direct evaluation of both routes. The
        // second-order model sits above the exact square root by the quartic
        // remainder, ~0.0129 m at x = 14 km.
        let target = TargetState {
            v_r: 10.0,
            ..TargetState::default()
        };
        let g = geom();
        let exact = exact_range_history(&target, &g, 2.0);
        let expect_exact = (14000.0f64.powi(2) + 649_980.0f64.powi(2)).sqrt();
        assert!((exact - expect_exact).abs() < 1e-9);
        let approx = approx_range_history(&target, &g, 14_000.0);
        assert!(approx > exact, "second-order model sits above the root");
        assert!((approx - exact).abs() < 0.02);
        assert!(((approx - exact) - 0.0129).abs() < 5e-4);
    }

    #[test]
    fn approx_range_without_motion_is_quadratic() {
        let t = TargetState::stationary(0.0, 0.0);
        let g = geom();
        for &x in &[0.0, 13.0, -650.0, 4000.0] {
            let expect = 650_000.0 + x * x / (2.0 * 650_000.0);
            assert!((approx_range_history(&t, &g, x) - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn approx_range_agrees_with_exact_for_slow_mover() {
        let target = TargetState {
            v_r: 7.0,
            ..TargetState::default()
        };
        let g = geom();
        let approx = approx_range_history(&target, &g, 7000.0);
        assert!((approx - 650_030.69).abs() < 0.01);
        let exact = exact_range_history(&target, &g, 1.0);
        assert!((approx - exact).abs() < 0.05);
    }

    #[test]
    fn epsilons_from_definitions() {
        let g = geom();
        let zero = motion_epsilons(&TargetState::default(), &g).unwrap();
        assert!(zero.is_zero());

        let t = TargetState {
            v_r: 7.0,
            ..TargetState::default()
        };
        let eps = motion_epsilons(&t, &g).unwrap();
        assert!((eps.eps_r1 - 1.0e-3).abs() < 1e-15);

        let t = TargetState {
            a_r: 0.98,
            ..TargetState::default()
        };
        let eps = motion_epsilons(&t, &g).unwrap();
        assert!((eps.eps_r2 - 0.013).abs() < 1e-12);
    }

    #[test]
    fn epsilons_reject_zero_velocity() {
        let mut g = geom();
        g.platform_velocity = 0.0;
        assert_eq!(
            motion_epsilons(&TargetState::default(), &g),
            Err(GeometryError::ZeroVelocity)
        );
    }

    #[test]
    fn derived_footprint_matches_hand_value() {
        let g = geom();
        let d = derived_geometry(&g);
        assert!((d.footprint - 0.031 * 650_000.0 / 6.0).abs() < 1e-9);
        assert!((d.footprint - 3358.3).abs() < 0.1);
    }

    #[test]
    fn doubling_pulses_doubles_aperture_and_halves_resolution() {
        let g = geom();
        let mut g2 = g.clone();
        g2.pulse_count *= 2;
        let d = derived_geometry(&g);
        let d2 = derived_geometry(&g2);
        assert!((d2.synthetic_aperture - 2.0 * d.synthetic_aperture).abs() < 1e-9);
        assert!((d2.azimuth_resolution - 0.5 * d.azimuth_resolution).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_resolution_product_is_unity() {
        // B_cD * delta_D = [4 N d / (lambda r)] [lambda r / (2 * 2 N d)] = 1
        // when the resolution range equals the zero-Doppler range.
        let d = derived_geometry(&geom());
        let product = d.doppler_bandwidth * d.azimuth_resolution;
        assert!((product - 1.0).abs() < 1e-9);
    }

    #[test]
    fn taylor_remainder_bound_over_aperture() {
        // Stationary target: approx - exact <= x^4/(8 R0^3) * 1.1 plus an
        // allowance for f64 rounding of the 650 km square root.
        let t = TargetState::stationary(0.0, 0.0);
        let g = geom();
        let l_half = g.synthetic_aperture() / 2.0;
        let rounding = 8.0 * f64::EPSILON * g.reference_range;
        let mut hit_bound = false;
        for i in -40..=40 {
            let x = l_half * i as f64 / 40.0;
            let diff = approx_range_history(&t, &g, x) - exact_range_history(&t, &g, x / g.platform_velocity);
            let bound = x.powi(4) / (8.0 * g.reference_range.powi(3)) * 1.1;
            assert!(
                diff <= bound + rounding,
                "x={x}: diff {diff} above bound {bound}"
            );
            if diff > rounding {
                hit_bound = true;
            }
        }
        assert!(hit_bound, "sweep never left the rounding floor");
    }

    #[test]
    fn exact_range_is_even_in_time_without_acceleration() {
        // With v_r = a_r = a_a = 0 the along-track separation is
        // (V - v_a) t, so R(t) = R(-t) for any azimuth velocity.
        let g = geom();
        let t = TargetState {
            v_a: 13.0,
            azimuth_position: 3.0,
            ..TargetState::default()
        };
        for &time in &[0.3, 1.7, 6.4] {
            let a = exact_range_history(&t, &g, time);
            let b = exact_range_history(&t, &g, -time);
            assert!((a - b).abs() < 1e-9);
        }
    }
}
