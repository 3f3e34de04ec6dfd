//! Spring-mass vibration model driving the simulated scatterer micro-motion.
//!
//! A mass hangs between tensioned spring halves of stretched length `L`
//! (rest length `L0`, elastic constant `elastic_k`). The transverse restoring
//! force is exact in [`exact_force`], cubic to second order in
//! [`cubic_force`], and the damped/forced equation of motion
//!
//! ```text
//! r'' + damping * r' + omega0^2 (1 + nonlin * |r|^2) r = f(t) / mass
//! ```
//!
//! is integrated with a fixed-step classical 4th-order scheme so repeated
//! runs are bit-reproducible.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OscillatorError {
    #[error("spring field `{0}` violates its bound")]
    BadParam(&'static str),
    #[error("step too large: dt * omega0 = {0} must stay below 0.1")]
    StepTooLarge(f64),
    #[error("trajectory times must be strictly increasing and match displacements")]
    BadTrajectory,
}

/// Spring-mass parameters. `omega0` and the geometric cubic coefficient are
/// recomputed from the stored lengths so they can never drift out of sync.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringParams {
    /// Suspended mass (kg).
    pub mass: f64,
    /// Tensioned half-spring length L (m).
    pub length_tensioned: f64,
    /// Rest length L0 (m), 0 <= L0 <= L.
    pub length_rest: f64,
    /// Elastic constant of each spring segment (N/m).
    pub elastic_k: f64,
    /// Linear damping coefficient (1/s).
    pub damping: f64,
    nonlin_override: Option<f64>,
}

impl SpringParams {
    pub fn new(
        mass: f64,
        length_tensioned: f64,
        length_rest: f64,
        elastic_k: f64,
        damping: f64,
    ) -> Result<Self, OscillatorError> {
        if !(mass > 0.0) {
            return Err(OscillatorError::BadParam("mass"));
        }
        if !(length_tensioned > 0.0) {
            return Err(OscillatorError::BadParam("length_tensioned"));
        }
        if !(length_rest >= 0.0) || length_rest > length_tensioned {
            return Err(OscillatorError::BadParam("length_rest"));
        }
        if !(elastic_k > 0.0) {
            return Err(OscillatorError::BadParam("elastic_k"));
        }
        if !(damping >= 0.0) {
            return Err(OscillatorError::BadParam("damping"));
        }
        Ok(Self {
            mass,
            length_tensioned,
            length_rest,
            elastic_k,
            damping,
            nonlin_override: None,
        })
    }

    /// Replace the geometric cubic coefficient with an explicit value.
    pub fn with_nonlin_coeff(mut self, coeff: f64) -> Self {
        self.nonlin_override = Some(coeff);
        self
    }

    /// Natural frequency: omega0^2 = (4 k / m) (L - L0) / L.
    pub fn omega0(&self) -> f64 {
        let l = self.length_tensioned;
        (4.0 * self.elastic_k / self.mass * (l - self.length_rest) / l).sqrt()
    }

    /// Cubic stiffness coefficient (1/m^2) entering `omega0^2 (1 + c |r|^2)`.
    /// Defaults to the geometric expression `2 L0 (L - L0) / L^2`.
    pub fn nonlin_coeff(&self) -> f64 {
        self.nonlin_override.unwrap_or_else(|| {
            let l = self.length_tensioned;
            2.0 * self.length_rest * (l - self.length_rest) / (l * l)
        })
    }

    /// The linear restoring term vanishes as L approaches L0 and the cubic
    /// term takes over.
    pub fn nonlinearity_dominates(&self) -> bool {
        let l = self.length_tensioned;
        (l - self.length_rest) / l < 1e-9
    }
}

/// Sampled two-degree-of-freedom displacement history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    displacements: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, displacements: Vec<[f64; 2]>) -> Result<Self, OscillatorError> {
        if times.len() != displacements.len() || times.is_empty() {
            return Err(OscillatorError::BadTrajectory);
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OscillatorError::BadTrajectory);
        }
        if times.iter().any(|t| !t.is_finite())
            || displacements.iter().any(|d| !d[0].is_finite() || !d[1].is_finite())
        {
            return Err(OscillatorError::BadTrajectory);
        }
        Ok(Self {
            times,
            displacements,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn displacements(&self) -> &[[f64; 2]] {
        &self.displacements
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation of the displacement at `t`; clamps outside the
    /// sampled span.
    pub fn sample(&self, t: f64) -> [f64; 2] {
        if t <= self.start_time() {
            return self.displacements[0];
        }
        if t >= self.end_time() {
            return *self.displacements.last().unwrap();
        }
        let idx = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.displacements[i],
            Err(i) => i,
        };
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (d0, d1) = (self.displacements[idx - 1], self.displacements[idx]);
        let w = (t - t0) / (t1 - t0);
        [d0[0] + w * (d1[0] - d0[0]), d0[1] + w * (d1[1] - d0[1])]
    }
}

/// Exact transverse restoring force `F = -4 k r (1 - L0 / sqrt(L^2 + 4 r^2))`.
pub fn exact_force(r: f64, p: &SpringParams) -> f64 {
    let l = p.length_tensioned;
    -4.0 * p.elastic_k * r * (1.0 - p.length_rest / (l * l + 4.0 * r * r).sqrt())
}

/// Cubic restoring force, the series of [`exact_force`] through third order:
/// `F = -4 k (L - L0) (r/L) - 8 k L0 (r/L)^3`. At L = L0 the linear term is
/// exactly zero and only the cubic remains ([`SpringParams::nonlinearity_dominates`]).
pub fn cubic_force(r: f64, p: &SpringParams) -> f64 {
    let l = p.length_tensioned;
    let u = r / l;
    -4.0 * p.elastic_k * (l - p.length_rest) * u - 8.0 * p.elastic_k * p.length_rest * u * u * u
}

/// Reduced linear closed form
/// `r(t) = (a cos(omega0 t), b sin(omega0 t)) exp(-damping t / 2)`.
pub fn closed_form_linear(a: f64, b: f64, p: &SpringParams, t: f64) -> [f64; 2] {
    let w = p.omega0();
    let envelope = (-p.damping * t / 2.0).exp();
    [a * (w * t).cos() * envelope, b * (w * t).sin() * envelope]
}

/// Specific energy of the undamped unforced system,
/// `E = |v|^2/2 + omega0^2 |r|^2 / 2 + omega0^2 nonlin |r|^4 / 4`.
/// Conserved by the exact dynamics; used as an integration diagnostic.
pub fn specific_energy(p: &SpringParams, r: [f64; 2], v: [f64; 2]) -> f64 {
    let w2 = p.omega0().powi(2);
    let r2 = r[0] * r[0] + r[1] * r[1];
    let v2 = v[0] * v[0] + v[1] * v[1];
    0.5 * v2 + 0.5 * w2 * r2 + 0.25 * w2 * p.nonlin_coeff() * r2 * r2
}

/// Built-in forcing terms. `f(t)` returns newtons on the two transverse axes.
#[derive(Debug, Clone)]
pub enum Forcing {
    Zero,
    /// `amplitude * cos(omega t + phase)` on each axis.
    Sinusoid {
        amplitude: [f64; 2],
        omega: f64,
        phase: f64,
    },
    /// Seeded random-phase multisine confined to [f_lo, f_hi] Hz; smooth in
    /// t, so the integrator can evaluate it at half steps.
    BandNoise {
        amplitude: f64,
        f_lo: f64,
        f_hi: f64,
        tones: usize,
        seed: u64,
    },
}

impl Forcing {
    fn build(&self) -> Box<dyn Fn(f64) -> [f64; 2] + Send + Sync> {
        match self {
            Forcing::Zero => Box::new(|_| [0.0, 0.0]),
            Forcing::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                let (a, w, ph) = (*amplitude, *omega, *phase);
                Box::new(move |t| {
                    let c = (w * t + ph).cos();
                    [a[0] * c, a[1] * c]
                })
            }
            Forcing::BandNoise {
                amplitude,
                f_lo,
                f_hi,
                tones,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut unit = move || rng.next_u64() as f64 / u64::MAX as f64;
                let n = (*tones).max(1);
                let mut freqs = Vec::with_capacity(n);
                let mut phases = Vec::with_capacity(n);
                for _ in 0..n {
                    freqs.push(f_lo + (f_hi - f_lo) * unit());
                    phases.push([
                        2.0 * std::f64::consts::PI * unit(),
                        2.0 * std::f64::consts::PI * unit(),
                    ]);
                }
                let scale = amplitude / (n as f64).sqrt();
                Box::new(move |t| {
                    let mut out = [0.0, 0.0];
                    for (f, ph) in freqs.iter().zip(phases.iter()) {
                        let arg = 2.0 * std::f64::consts::PI * f * t;
                        out[0] += (arg + ph[0]).cos();
                        out[1] += (arg + ph[1]).cos();
                    }
                    [out[0] * scale, out[1] * scale]
                })
            }
        }
    }
}

/// One integration sample: time, displacement, velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscState {
    pub t: f64,
    pub r: [f64; 2],
    pub v: [f64; 2],
}

/// Integrate the damped, forced oscillator with classical RK4 from state
/// `(r0, v0)` over `steps` fixed steps of `dt`, returning the full state
/// history (`steps + 1` samples, the first at t = 0).
pub fn integrate_states<F>(
    p: &SpringParams,
    forcing: F,
    r0: [f64; 2],
    v0: [f64; 2],
    dt: f64,
    steps: usize,
) -> Result<Vec<OscState>, OscillatorError>
where
    F: Fn(f64) -> [f64; 2],
{
    if !(dt > 0.0) {
        return Err(OscillatorError::BadParam("dt"));
    }
    let stability = dt * p.omega0();
    if stability >= 0.1 {
        return Err(OscillatorError::StepTooLarge(stability));
    }

    let w2 = p.omega0().powi(2);
    let nonlin = p.nonlin_coeff();
    let lambda = p.damping;
    let inv_mass = 1.0 / p.mass;

    let accel = |t: f64, r: [f64; 2], v: [f64; 2]| -> [f64; 2] {
        let f = forcing(t);
        let r2 = r[0] * r[0] + r[1] * r[1];
        let stiff = w2 * (1.0 + nonlin * r2);
        [
            f[0] * inv_mass - lambda * v[0] - stiff * r[0],
            f[1] * inv_mass - lambda * v[1] - stiff * r[1],
        ]
    };

    let mut states = Vec::with_capacity(steps + 1);
    let mut r = r0;
    let mut v = v0;
    states.push(OscState { t: 0.0, r, v });

    for step in 0..steps {
        let t = step as f64 * dt;
        let a1 = accel(t, r, v);
        let (r2, v2) = offset_state(r, v, v, a1, 0.5 * dt);
        let a2 = accel(t + 0.5 * dt, r2, v2);
        let (r3, v3) = offset_state(r, v, v2, a2, 0.5 * dt);
        let a3 = accel(t + 0.5 * dt, r3, v3);
        let (r4, v4) = offset_state(r, v, v3, a3, dt);
        let a4 = accel(t + dt, r4, v4);

        for i in 0..2 {
            r[i] += dt / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            v[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        states.push(OscState {
            t: (step + 1) as f64 * dt,
            r,
            v,
        });
    }

    Ok(states)
}

/// [`integrate_states`] reduced to the sampled displacement trajectory.
pub fn integrate_forced<F>(
    p: &SpringParams,
    forcing: F,
    r0: [f64; 2],
    v0: [f64; 2],
    dt: f64,
    steps: usize,
) -> Result<Trajectory, OscillatorError>
where
    F: Fn(f64) -> [f64; 2],
{
    let states = integrate_states(p, forcing, r0, v0, dt, steps)?;
    Trajectory::new(
        states.iter().map(|s| s.t).collect(),
        states.iter().map(|s| s.r).collect(),
    )
}

#[inline]
fn offset_state(
    r: [f64; 2],
    v: [f64; 2],
    dr: [f64; 2],
    dv: [f64; 2],
    h: f64,
) -> ([f64; 2], [f64; 2]) {
    (
        [r[0] + h * dr[0], r[1] + h * dr[1]],
        [v[0] + h * dv[0], v[1] + h * dv[1]],
    )
}

/// Integrate with a built-in [`Forcing`] preset.
pub fn integrate_preset(
    p: &SpringParams,
    forcing: &Forcing,
    r0: [f64; 2],
    v0: [f64; 2],
    dt: f64,
    steps: usize,
) -> Result<Trajectory, OscillatorError> {
    let f = forcing.build();
    integrate_forced(p, |t| f(t), r0, v0, dt, steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SpringParams {
        SpringParams::new(1.0, 1.0, 0.5, 1.0, 0.0).unwrap()
    }

    #[test]
    fn force_is_odd_and_zero_at_origin() {
        let p = params();
        assert_eq!(exact_force(0.0, &p), 0.0);
        assert_eq!(cubic_force(0.0, &p), 0.0);
        for &r in &[1e-3, 0.05, 0.3] {
            assert!((exact_force(-r, &p) + exact_force(r, &p)).abs() < 1e-15);
        }
    }

    #[test]
    fn cubic_matches_exact_at_small_displacement() {
        let p = params();
        let r = 0.01;
        let exact = exact_force(r, &p);
        let cubic = cubic_force(r, &p);
        assert!((exact - cubic).abs() / exact.abs() < 1e-3);
    }

    #[test]
    fn cubic_linear_coefficient_is_minus_m_omega0_sq() {
        let p = params();
        let r = 1e-9;
        let slope = cubic_force(r, &p) / r;
        assert!((slope + p.mass * p.omega0().powi(2)).abs() < 1e-6);
    }

    #[test]
    fn equal_lengths_kill_linear_term() {
        let p = SpringParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(p.nonlinearity_dominates());
        assert_eq!(p.omega0(), 0.0);
        let r = 0.1;
        // purely cubic: -8 k L0 (r/L)^3
        assert!((cubic_force(r, &p) + 8.0 * 0.1f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn small_r_ratio_sweep() {
        let p = params();
        for i in 1..=20 {
            let r = 0.01 * i as f64 / 20.0;
            let exact = exact_force(r, &p);
            let cubic = cubic_force(r, &p);
            assert!(
                (exact - cubic).abs() / exact.abs() <= 1e-3,
                "ratio failed at r = {r}"
            );
        }
    }

    #[test]
    fn closed_form_start_and_ellipse() {
        let p = params();
        let w = p.omega0();
        let quarter = std::f64::consts::FRAC_PI_2 / w;
        let at0 = closed_form_linear(0.3, 0.7, &p, 0.0);
        assert_eq!(at0, [0.3, 0.0]);
        let q1 = closed_form_linear(0.3, 0.7, &p, quarter);
        assert!(q1[0].abs() < 1e-12 && (q1[1] - 0.7).abs() < 1e-12);
        let q2 = closed_form_linear(0.3, 0.7, &p, 2.0 * quarter);
        assert!((q2[0] + 0.3).abs() < 1e-12 && q2[1].abs() < 1e-12);
    }

    #[test]
    fn damped_envelope_decays_per_period() {
        let p = SpringParams::new(1.0, 1.0, 0.5, 1.0, 0.11).unwrap();
        let w = p.omega0();
        let period = 2.0 * std::f64::consts::PI / w;
        let t = 0.37;
        let r1 = closed_form_linear(1.0, 0.0, &p, t);
        let r2 = closed_form_linear(1.0, 0.0, &p, t + period);
        let ratio = r2[0] / r1[0];
        let expect = (-p.damping * period / 2.0).exp();
        assert!((ratio - expect).abs() < 1e-9);
    }

    #[test]
    fn integrator_matches_closed_form_over_ten_periods() {
        let p = params();
        let w = p.omega0();
        let linear = p.with_nonlin_coeff(0.0);
        let (a, b) = (0.02, 0.05);
        let dt = 0.01 / w;
        let steps = (10.0 * 2.0 * std::f64::consts::PI / w / dt).ceil() as usize;
        let traj = integrate_forced(&linear, |_| [0.0, 0.0], [a, 0.0], [0.0, b * w], dt, steps)
            .unwrap();
        let scale = a.max(b);
        let mut worst = 0.0f64;
        for (t, d) in traj.times().iter().zip(traj.displacements()) {
            let expect = closed_form_linear(a, b, &linear, *t);
            let err = ((d[0] - expect[0]).powi(2) + (d[1] - expect[1]).powi(2)).sqrt() / scale;
            worst = worst.max(err);
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn equilibrium_stays_at_rest() {
        let p = params();
        let traj =
            integrate_forced(&p, |_| [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], 0.01, 200).unwrap();
        assert!(traj
            .displacements()
            .iter()
            .all(|d| d[0] == 0.0 && d[1] == 0.0));
    }

    #[test]
    fn duffing_energy_is_conserved() {
        let p = params();
        let w = p.omega0();
        let dt = 0.01 / w;
        let steps = (10.0 * 2.0 * std::f64::consts::PI / w / dt).ceil() as usize;
        let r0 = [0.2, 0.0];
        let v0 = [0.0, 0.1];
        let e0 = specific_energy(&p, r0, v0);
        let states = integrate_states(&p, |_| [0.0, 0.0], r0, v0, dt, steps).unwrap();
        let worst = states
            .iter()
            .map(|s| (specific_energy(&p, s.r, s.v) - e0).abs() / e0)
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "energy drift {worst}");
    }

    #[test]
    fn step_guard_rejects_large_dt() {
        let p = params();
        let dt = 0.2 / p.omega0();
        let err = integrate_forced(&p, |_| [0.0, 0.0], [0.1, 0.0], [0.0, 0.0], dt, 10);
        assert!(matches!(err, Err(OscillatorError::StepTooLarge(_))));
    }

    #[test]
    fn phase_space_separation_is_stable() {
        let p = params().with_nonlin_coeff(0.0);
        let w = p.omega0();
        let dt = 0.01 / w;
        let steps = (10.0 * 2.0 * std::f64::consts::PI / w / dt).ceil() as usize;
        let d0 = 1e-8;
        let t1 = integrate_forced(&p, |_| [0.0, 0.0], [0.1, 0.0], [0.0, 0.0], dt, steps).unwrap();
        let t2 =
            integrate_forced(&p, |_| [0.0, 0.0], [0.1 + d0, 0.0], [0.0, 0.0], dt, steps).unwrap();
        let a = t1.displacements().last().unwrap();
        let b = t2.displacements().last().unwrap();
        let sep = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!((sep / d0 - 1.0).abs() < 1e-4, "separation ratio {}", sep / d0);
    }

    #[test]
    fn driven_resonance_amplitude() {
        let p = SpringParams::new(1.0, 1.0, 0.5, 1.0, 0.05)
            .unwrap()
            .with_nonlin_coeff(0.0);
        let w = p.omega0();
        let f0 = 1e-3;
        let forcing = move |t: f64| [f0 * (w * t).cos(), 0.0];
        let dt = 0.05 / w;
        let total = 100.0 / p.damping;
        let steps = (total / dt).ceil() as usize;
        let traj = integrate_forced(&p, forcing, [0.0, 0.0], [0.0, 0.0], dt, steps).unwrap();
        let period_samples = (2.0 * std::f64::consts::PI / w / dt).ceil() as usize;
        let tail = &traj.displacements()[traj.len() - period_samples..];
        let peak = tail.iter().map(|d| d[0].abs()).fold(0.0, f64::max);
        let expect = f0 / (p.mass * p.damping * w);
        assert!(
            (peak - expect).abs() / expect < 0.1,
            "steady amplitude {peak} vs {expect}"
        );
    }

    #[test]
    fn band_noise_forcing_is_deterministic() {
        let f = Forcing::BandNoise {
            amplitude: 1.0,
            f_lo: 1.0,
            f_hi: 5.0,
            tones: 8,
            seed: 7,
        };
        let a = f.build();
        let b = f.build();
        for i in 0..10 {
            let t = i as f64 * 0.01;
            assert_eq!(a(t), b(t));
        }
    }

    #[test]
    fn trajectory_sampling_interpolates() {
        let traj = Trajectory::new(
            vec![0.0, 1.0, 2.0],
            vec![[0.0, 0.0], [1.0, -1.0], [3.0, 0.0]],
        )
        .unwrap();
        assert_eq!(traj.sample(0.5), [0.5, -0.5]);
        assert_eq!(traj.sample(1.0), [1.0, -1.0]);
        assert_eq!(traj.sample(5.0), [3.0, 0.0]);
        assert_eq!(traj.sample(-1.0), [0.0, 0.0]);
    }

    #[test]
    fn trajectory_rejects_disorder() {
        assert!(Trajectory::new(vec![0.0, 0.0], vec![[0.0; 2], [0.0; 2]]).is_err());
        assert!(Trajectory::new(vec![0.0], vec![]).is_err());
    }
}
