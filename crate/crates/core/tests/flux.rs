mod common;

use common::*;
use sfwm_core::error::Error;
use sfwm_core::flux::{cw_integrand, flux_cw, flux_pulsed, flux_ratio_sweep, FluxOptions, Zone};
use sfwm_core::spectral::{
    mode_spacing, mode_width, CavitySpec, Configuration, FilterSpec, Mode, Topology,
};

fn tuned(config: Configuration, r: f64) -> (sfwm_core::dispersion::Fiber, CavitySpec, FilterSpec) {
    let fiber = fiber(0.01);
    let pm = pair(&fiber);
    let cavity = CavitySpec::lossless(config, r, Topology::Linear)
        .unwrap()
        .tuned(&fiber, pm.omega_s, pm.omega_i)
        .unwrap();
    let filter = FilterSpec::around_modes(&fiber, Topology::Linear, pm.omega_s, pm.omega_i, 1).unwrap();
    (fiber, cavity, filter)
}

#[test]
fn open_mirrors_give_unit_ratio() {
    for config in [Configuration::Csi, Configuration::Cs] {
        let (fiber, cavity, filter) = tuned(config, 0.0);
        let r = flux_pulsed(&fiber, &narrow_pump(), &cavity, &filter, &FluxOptions::default()).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-6, "{config:?}: {}", r.ratio);
    }
    let (fiber, _, filter) = tuned(Configuration::Csi, 0.0);
    let r = flux_pulsed(&fiber, &narrow_pump(), &CavitySpec::none(), &filter, &FluxOptions::default()).unwrap();
    assert_eq!(r.rate, r.reference_rate_nc);
}

#[test]
fn cw_rate_scales_with_power_squared() {
    let (fiber, cavity, filter) = tuned(Configuration::Csi, 0.8);
    let w = pump_omega();
    let one = flux_cw(&fiber, w, 0.3, &cavity, &filter, &FluxOptions::default()).unwrap();
    let two = flux_cw(&fiber, w, 0.6, &cavity, &filter, &FluxOptions::default()).unwrap();
    assert!((two.rate / one.rate / 4.0 - 1.0).abs() < 1e-4, "{}", two.rate / one.rate);
}

#[test]
fn pulsed_rate_scales_with_power_squared_without_spm() {
    let fiber = sfwm_core::dispersion::Fiber::tabulated(spec(0.01).with_gamma(0.0, GAMMA)).unwrap();
    let pm = pair(&fiber);
    let cavity = CavitySpec::lossless(Configuration::Csi, 0.8, Topology::Linear)
        .unwrap()
        .tuned(&fiber, pm.omega_s, pm.omega_i)
        .unwrap();
    let filter = FilterSpec::around_modes(&fiber, Topology::Linear, pm.omega_s, pm.omega_i, 1).unwrap();
    let base = narrow_pump();
    let mut doubled = base;
    doubled.avg_power *= 2.0;
    let a = flux_pulsed(&fiber, &base, &cavity, &filter, &FluxOptions::default()).unwrap();
    let b = flux_pulsed(&fiber, &doubled, &cavity, &filter, &FluxOptions::default()).unwrap();
    assert!((b.rate / a.rate / 4.0 - 1.0).abs() < 1e-12);
}

#[test]
fn cw_integrand_is_symmetric_about_the_pump() {
    let fiber = fiber(0.01);
    let wp = pump_omega();
    for offset in [1e11, 3.7e12, 8.8e14] {
        let w = wp + offset;
        let (_, a) = cw_integrand(&fiber, wp, 0.3, &CavitySpec::none(), w).unwrap();
        let (_, b) = cw_integrand(&fiber, wp, 0.3, &CavitySpec::none(), 2.0 * wp - w).unwrap();
        // 2ω_p − (2ω_p − ω) differs from ω by rounding.
        assert!(((a - b) / a).abs() < 1e-9, "{offset:e}: {a:e} vs {b:e}");
    }
}

#[test]
fn sweep_annotates_zones_and_keeps_going_after_errors() {
    let (fiber, cavity, filter) = tuned(Configuration::Csi, 0.8);
    let pm = pair(&fiber);
    let dw = mode_width(&fiber, &cavity, Mode::Signal, pm.omega_s).unwrap();
    let spacing = mode_spacing(&fiber, Topology::Linear, pm.omega_s).unwrap();
    let sigmas = [0.5 * dw, -1.0, 3.0 * dw, 4.0 * spacing];
    let sweep = flux_ratio_sweep(&fiber, &narrow_pump(), &cavity, &sigmas, &filter, &FluxOptions::default()).unwrap();
    assert_eq!(sweep.boundaries.0, dw);
    assert!((sweep.boundaries.1 / spacing - std::f64::consts::SQRT_2).abs() < 1e-15);
    let zones: Vec<Zone> = sweep.points.iter().map(|p| p.zone).collect();
    assert_eq!(zones[0], Zone::Narrowband);
    assert_eq!(zones[2], Zone::Intermediate);
    assert_eq!(zones[3], Zone::Broadband);
    assert!(matches!(sweep.points[1].result, Err(Error::Domain { .. })));
    let ratios = sweep.ratios();
    assert!(ratios[0].unwrap() > ratios[2].unwrap() && ratios[2].unwrap() > ratios[3].unwrap());
    let csv = sweep.to_csv();
    assert!(csv.starts_with("sigma_I_rad_per_s,rate_pairs_per_s,rate_nc_pairs_per_s,ratio\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn single_and_multi_mode_curves_agree_qualitatively() {
    let (fiber, cavity, single) = tuned(Configuration::Csi, 0.8);
    let pm = pair(&fiber);
    let multi = FilterSpec::around_modes(&fiber, Topology::Linear, pm.omega_s, pm.omega_i, 5).unwrap();
    let dw = mode_width(&fiber, &cavity, Mode::Signal, pm.omega_s).unwrap();
    let edge = std::f64::consts::SQRT_2 * mode_spacing(&fiber, Topology::Linear, pm.omega_s).unwrap();
    let sigmas: Vec<f64> = (0..4).map(|k| 1.5 * dw * (0.7 * edge / (1.5 * dw)).powf(k as f64 / 3.0)).collect();
    for filter in [single, multi] {
        let sweep = flux_ratio_sweep(&fiber, &narrow_pump(), &cavity, &sigmas, &filter, &FluxOptions::default()).unwrap();
        let r: Vec<f64> = sweep.ratios().into_iter().map(Option::unwrap).collect();
        assert!(r.windows(2).all(|w| w[0] > w[1]), "{r:?}");
    }
}

#[test]
fn cs_sweep_stays_near_one() {
    let (fiber, cavity, filter) = tuned(Configuration::Cs, 0.8);
    let pm = pair(&fiber);
    let spacing = mode_spacing(&fiber, Topology::Linear, pm.omega_s).unwrap();
    let sigmas: Vec<f64> = (0..6).map(|k| 1e-3 * spacing * 10f64.powi(k)).collect();
    let sweep = flux_ratio_sweep(&fiber, &narrow_pump(), &cavity, &sigmas, &filter, &FluxOptions::default()).unwrap();
    for r in sweep.ratios() {
        let r = r.unwrap();
        assert!((0.8..=1.2).contains(&r), "{r}");
    }
}

#[test]
fn unconverged_quadrature_reports_its_estimate() {
    let (fiber, cavity, filter) = tuned(Configuration::Csi, 0.8);
    let options = FluxOptions {
        rel_tol: 1e-300,
        max_doublings: 1,
        ..FluxOptions::default()
    };
    match flux_pulsed(&fiber, &narrow_pump(), &cavity, &filter, &options) {
        Err(Error::Numerical { detail, .. }) => assert!(detail.contains("relative change"), "{detail}"),
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn repeated_evaluation_is_bit_identical() {
    let (fiber, cavity, filter) = tuned(Configuration::Csi, 0.8);
    let a = flux_pulsed(&fiber, &narrow_pump(), &cavity, &filter, &FluxOptions::default()).unwrap();
    let b = flux_pulsed(&fiber, &narrow_pump(), &cavity, &filter, &FluxOptions::default()).unwrap();
    assert_eq!(a, b);
}
