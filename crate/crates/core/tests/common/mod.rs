#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use sfwm_core::constants::omega_from_wavelength;
use sfwm_core::design::{phasematch_solve, PhasematchedPair};
use sfwm_core::dispersion::{Fiber, FiberSpec};
use sfwm_core::grid::Grid;
use sfwm_core::spectral::PumpSpec;
use sfwm_core::temporal::{closed_form_frequency_axis, jta_numeric, jti_closed_form, ClosedFormParams, DEFAULT_PAD_FACTOR};

pub const CORE_RADIUS: f64 = 0.68e-6;
pub const AIR_FILL: f64 = 0.5;
/// Assumed nonlinear coefficient (W⁻¹m⁻¹) of the prototype fiber.
pub const GAMMA: f64 = 0.07;
pub const AVG_POWER: f64 = 0.3;
pub const REP_RATE: f64 = 1e5;
pub const CS_D2_LINEWIDTH: f64 = 2.0 * PI * 5.22e6;

pub fn pump_omega() -> f64 {
    omega_from_wavelength(1.064e-6)
}

pub fn spec(length: f64) -> FiberSpec {
    FiberSpec::new(CORE_RADIUS, AIR_FILL, length, GAMMA).unwrap()
}

pub fn fiber(length: f64) -> Fiber {
    Fiber::tabulated(spec(length)).unwrap()
}

/// 300 mW at 0.1 MHz, σ_I = 0.164 GHz.
pub fn narrow_pump() -> PumpSpec {
    PumpSpec::pulsed(pump_omega(), 1.64e8, AVG_POWER, REP_RATE).unwrap()
}

pub fn pair(fiber: &Fiber) -> PhasematchedPair {
    phasematch_solve(fiber, &narrow_pump()).unwrap()
}

/// Largest pointwise deviation, relative to the peak, between the closed form
/// and the transformed Gaussian-mode JSA, over the central 512² time samples.
pub fn closed_form_error(p: &ClosedFormParams) -> f64 {
    let axis = closed_form_frequency_axis(p, 0.37).unwrap();
    let jsa = Grid::from_fn(axis, axis, |a, b| Complex64::new(p.jsa(a, b), 0.0));
    let jti = jta_numeric(&jsa, DEFAULT_PAD_FACTOR).unwrap().intensity();
    let n = jti.axis_0.len();
    let c = n / 2;
    let peak = jti_closed_form(0.0, 0.0, p);
    let scale = peak / jti.values[[c, c]];
    let half = 256.min(c);
    let mut worst = 0.0f64;
    for i in c - half..(c + half).min(n) {
        for j in c - half..(c + half).min(n) {
            let (ts, ti) = (jti.axis_0.value(i), jti.axis_1.value(j));
            let want = jti_closed_form((ts - ti) / SQRT_2, (ts + ti) / SQRT_2, p);
            worst = worst.max((jti.values[[i, j]] * scale - want).abs() / peak);
        }
    }
    worst
}
