mod common;

use common::*;
use sfwm_core::design::reflectivity_from_finesse;
use sfwm_core::grid::{Axis, IntensityGrid};
use sfwm_core::spectral::{
    jsa, mode_spacing, CavitySpec, Configuration, FilterSpec, JsaQuadrature, Mirror, PumpSpec, Topology,
};
use sfwm_core::temporal::{jti_numeric, mode_amplitudes, rotate_to_sum_diff, round_trip_time, time_difference_marginal};

/// JTI of the 1 cm source with σ = 80 GHz and 5Δω filters.
fn jti(config: Configuration, r: f64, points: usize) -> (IntensityGrid, f64) {
    let fiber = fiber(0.01);
    let pm = pair(&fiber);
    let pump = PumpSpec::new(pump_omega(), 8e10, 0.0, AVG_POWER, REP_RATE).unwrap();
    let width_s = 5.0 * mode_spacing(&fiber, Topology::Linear, pm.omega_s).unwrap();
    let width_i = 5.0 * mode_spacing(&fiber, Topology::Linear, pm.omega_i).unwrap();
    let filter = FilterSpec::new(pm.omega_s, pm.omega_i, width_s, width_i).unwrap();
    let step = width_s.max(width_i) / (points - 1) as f64;
    let axis_s = Axis::centered(pm.omega_s, step, points).unwrap();
    let axis_i = Axis::centered(pm.omega_i, step, points).unwrap();
    let m = Mirror::lossless(r).unwrap();
    let (s, i) = match config {
        Configuration::Csi => (Some(m), Some(m)),
        Configuration::Cs => (Some(m), None),
        _ => unreachable!(),
    };
    let cavity = CavitySpec::new(s, i, Topology::Linear)
        .unwrap()
        .tuned(&fiber, pm.omega_s, pm.omega_i)
        .unwrap();
    let g = jsa(axis_s, axis_i, &fiber, &pump, &cavity, Some(&filter), JsaQuadrature::default()).unwrap();
    let t = round_trip_time(&fiber, Topology::Linear, pm.omega_s).unwrap();
    (jti_numeric(&g.grid, 4).unwrap(), t)
}

#[test]
fn cs_time_difference_is_one_sided() {
    let (grid, t) = jti(Configuration::Cs, 0.8, 201);
    let marginal = time_difference_marginal(&rotate_to_sum_diff(&grid).unwrap());
    let mut before = 0.0;
    let mut after = 0.0;
    for (&x, &v) in marginal.time_difference.iter().zip(&marginal.value) {
        if x < -0.5 * t {
            before += v;
        } else if x > 0.5 * t {
            after += v;
        }
    }
    assert!(before.min(after) < 0.02 * before.max(after), "{before} vs {after}");
}

#[test]
fn csi_time_difference_is_two_sided() {
    let (grid, t) = jti(Configuration::Csi, 0.8, 201);
    let marginal = time_difference_marginal(&rotate_to_sum_diff(&grid).unwrap());
    let peaks = marginal.peaks(0.05);
    assert!(peaks.iter().any(|&p| p < -0.5 * t) && peaks.iter().any(|&p| p > 0.5 * t));
}

#[test]
fn more_finesse_means_more_temporal_modes() {
    let counts: Vec<usize> = [20.0, 80.0, 320.0]
        .iter()
        .map(|&f| {
            let (grid, t) = jti(Configuration::Csi, reflectivity_from_finesse(f).unwrap(), 401);
            mode_amplitudes(&grid, t, 1e-2).unwrap().count_above(1e-2)
        })
        .collect();
    assert!(counts[0] < counts[1] && counts[1] < counts[2], "{counts:?}");
}

#[test]
fn grid_too_small_for_the_mode_matrix_is_reported() {
    let (grid, t) = jti(Configuration::Csi, 0.8, 201);
    let err = mode_amplitudes(&grid, t, 1e-12).unwrap_err();
    assert!(err.to_string().contains("grid too small"), "{err}");
}
