mod common;

use common::*;
use sfwm_core::constants::omega_from_wavelength;
use sfwm_core::design::{design_report, phasematch_solve, required_finesse, DesignOverrides, TransitionTarget};
use sfwm_core::dispersion::{Fiber, FiberSpec};
use sfwm_core::error::Error;
use sfwm_core::spectral::{finesse_coefficient, mode_spacing, Topology};

fn cesium() -> TransitionTarget {
    TransitionTarget::new(omega_from_wavelength(0.852e-6), CS_D2_LINEWIDTH).unwrap()
}

#[test]
fn five_centimetre_cavity_for_the_cesium_line() {
    let fiber = fiber(0.05);
    let ws = pair(&fiber).omega_s;
    let need = required_finesse(CS_D2_LINEWIDTH, &fiber, Topology::Linear, ws).unwrap();
    assert_eq!((need.r2 * 1e3).round() / 1e3, 0.992);
    // The quoted spacing 1.35e10 rad/s and width 2π x 5.22 MHz fix the finesse.
    let quoted = (2.0 * 1.35e10 / (std::f64::consts::PI * CS_D2_LINEWIDTH)).powi(2);
    assert!((need.finesse / quoted - 1.0).abs() < 0.01, "{} vs {quoted}", need.finesse);
    let back = finesse_coefficient(need.r2).unwrap();
    assert!((back / need.finesse - 1.0).abs() < 1e-9);
}

#[test]
fn report_meets_its_own_targets() {
    let report = design_report(&fiber(0.05), &narrow_pump(), &cesium(), 0.05, DesignOverrides::default()).unwrap();
    assert!((report.mode_width_s / CS_D2_LINEWIDTH - 1.0).abs() < 1e-6);
    assert_eq!(report.sigma_i, 5.0 * report.mode_width_s);
    assert_eq!(report.omega_s + report.omega_i, 2.0 * report.omega_p);
    assert!(report.phasematch_residual < 1e-6);
    assert!(report.target_detuning.abs() < 0.02 * report.omega_s);
    let flux = report.flux.as_ref().unwrap();
    assert!(flux.rate > 0.0 && flux.ratio > 1.0);
}

#[test]
fn report_is_reproducible() {
    let run = || {
        design_report(&fiber(0.05), &narrow_pump(), &cesium(), 0.05, DesignOverrides::default())
            .unwrap()
            .to_key_value()
    };
    assert_eq!(run(), run());
}

#[test]
fn linewidth_wider_than_spacing_is_infeasible() {
    let fiber = fiber(0.01);
    let ws = pair(&fiber).omega_s;
    let spacing = mode_spacing(&fiber, Topology::Linear, ws).unwrap();
    let target = TransitionTarget::new(omega_from_wavelength(0.852e-6), 2.0 * spacing).unwrap();
    let overrides = DesignOverrides {
        skip_flux: true,
        ..Default::default()
    };
    match design_report(&fiber, &narrow_pump(), &target, 0.01, overrides) {
        Err(Error::Infeasible(m)) => {
            assert!(m.starts_with("required_finesse:"), "{m}");
            assert!(m.contains("longer cavity"), "{m}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn strong_self_phase_modulation_prevents_phasematching() {
    let fiber = Fiber::tabulated(FiberSpec::new(CORE_RADIUS, AIR_FILL, 0.01, 10.0).unwrap()).unwrap();
    match phasematch_solve(&fiber, &narrow_pump()) {
        Err(Error::Infeasible(m)) => assert!(m.contains("no phasematched pair"), "{m}"),
        other => panic!("{other:?}"),
    }
}
