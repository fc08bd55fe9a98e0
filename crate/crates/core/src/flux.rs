//! Emitted pair flux for pulsed and CW pumping, cavity/no-cavity ratio
//! sweeps, and the geometric model of the enhancement.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::constants::SPEED_OF_LIGHT;
use crate::dispersion::Fiber;
use crate::error::{Error, Result};
use crate::grid::fmt_f64;
use crate::numeric::{bisect, ladder, relative_change, GaussLegendreRule, Panels};
use crate::spectral::{
    airy, check_jsa_quadrature, mode_spacing, mode_width, round_trip_phase, CavitySpec, FilterSpec,
    JsaEvaluator, JsaQuadrature, Mode, PumpSpec,
};

/// Quadrature settings for the flux integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxOptions {
    /// Pump-frequency quadrature inside F.
    pub jsa: JsaQuadrature,
    pub nodes_per_panel: usize,
    /// Growth factor of the breakpoint ladders around sharp features.
    pub ladder_factor: f64,
    /// Panel-doubling acceptance threshold.
    pub rel_tol: f64,
    pub max_doublings: usize,
}

impl Default for FluxOptions {
    fn default() -> Self {
        Self {
            jsa: JsaQuadrature {
                nodes: 41,
                half_width: 5.0,
            },
            nodes_per_panel: 12,
            ladder_factor: 8.0,
            rel_tol: 1e-4,
            max_doublings: 3,
        }
    }
}

/// How a flux value was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMeta {
    pub window_s: (f64, f64),
    pub window_i: (f64, f64),
    pub outer_panels: usize,
    /// Largest inner panel count over the outer nodes.
    pub inner_panels: usize,
    pub nodes_per_panel: usize,
    pub jsa_nodes: usize,
    /// Node-doubling change of F at probe points.
    pub jsa_relative_change: f64,
    pub doublings: usize,
    /// Panel-doubling change of the cavity rate at the accepted level.
    pub relative_change: f64,
    /// Same for the reference rate.
    pub relative_change_nc: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxResult {
    /// Pairs per second.
    pub rate: f64,
    /// Same source without mirrors.
    pub reference_rate_nc: f64,
    pub ratio: f64,
    pub quadrature: QuadratureMeta,
}

/// Resonance frequencies of `mode` inside `band`, solving Δ(ω) = 2πm.
pub fn resonances(fiber: &Fiber, cavity: &CavitySpec, mode: Mode, band: (f64, f64)) -> Result<Vec<f64>> {
    if !cavity.is_resonant(mode) {
        return Ok(Vec::new());
    }
    let phase = |w: f64| round_trip_phase(w, mode, fiber, cavity);
    let (lo, hi) = band;
    let (p_lo, p_hi) = (phase(lo)?, phase(hi)?);
    let m_lo = (p_lo / (2.0 * PI)).ceil() as i64;
    let m_hi = (p_hi / (2.0 * PI)).floor() as i64;
    let mut out = Vec::new();
    for m in m_lo..=m_hi {
        let target = 2.0 * PI * m as f64;
        out.push(bisect(|w| phase(w).map_or(f64::NAN, |p| p - target), lo, hi)?);
    }
    Ok(out)
}

/// ω·k′(ω)/n²(ω).
fn mode_weight(fiber: &Fiber, omega: f64) -> Result<f64> {
    let n = fiber.n_eff(omega)?;
    Ok(omega * fiber.k_prime(omega)? / (n * n))
}

struct Features {
    res_s: Vec<f64>,
    res_i: Vec<f64>,
    width: f64,
}

fn features(fiber: &Fiber, cavity: &CavitySpec, filter: &FilterSpec) -> Result<Features> {
    let res_s = resonances(fiber, cavity, Mode::Signal, filter.signal_band())?;
    let res_i = resonances(fiber, cavity, Mode::Idler, filter.idler_band())?;
    let mut width = f64::INFINITY;
    for (mode, center) in [(Mode::Signal, filter.center_s), (Mode::Idler, filter.center_i)] {
        if cavity.is_resonant(mode) && cavity.mirror(mode).finesse() > 0.0 {
            width = width.min(mode_width(fiber, cavity, mode, center)?);
        }
    }
    Ok(Features { res_s, res_i, width })
}

fn ladders(
    centers: impl IntoIterator<Item = f64>,
    first: f64,
    factor: f64,
    reach: f64,
) -> Vec<f64> {
    centers
        .into_iter()
        .flat_map(|c| ladder(c, first, factor, reach))
        .collect()
}

/// Pulsed-pump pair rate through the filter window, with the reference rate
/// of the same source without mirrors evaluated on the same nodes.
pub fn flux_pulsed(
    fiber: &Fiber,
    pump: &PumpSpec,
    cavity: &CavitySpec,
    filter: &FilterSpec,
    options: &FluxOptions,
) -> Result<FluxResult> {
    cavity.validate()?;
    pump.validate()?;
    let eval = JsaEvaluator::new(fiber, pump, options.jsa)?;
    let rule = GaussLegendreRule::new(options.nodes_per_panel);
    let feats = features(fiber, cavity, filter)?;
    let (s_lo, s_hi) = filter.signal_band();
    let (i_lo, i_hi) = filter.idler_band();
    let wo = pump.omega0;
    let sigma = pump.sigma;
    let factor = options.ladder_factor;
    let reach_s = s_hi - s_lo;
    let reach_i = i_hi - i_lo;
    let sharp = feats.width.min(sigma);

    let mut outer_points = ladders(feats.res_s.iter().copied(), 0.5 * feats.width, factor, reach_s);
    outer_points.extend(ladders(
        feats.res_i.iter().map(|r| 2.0 * wo - r),
        0.5 * sharp,
        factor,
        reach_s,
    ));
    outer_points.extend(ladders([2.0 * wo - i_lo, 2.0 * wo - i_hi], 0.5 * sigma, factor, reach_s));
    let outer = Panels::new(s_lo, s_hi, outer_points);

    let inner_fixed = ladders(feats.res_i.iter().copied(), 0.5 * feats.width, factor, reach_i);
    let inner_panels = |ws: f64| -> Panels {
        let mut pts = inner_fixed.clone();
        pts.extend(ladder(2.0 * wo - ws, 0.5 * sigma, factor, reach_i));
        Panels::new(i_lo, i_hi, pts)
    };

    let level = |doublings: usize| -> Result<(f64, f64, usize, usize, usize)> {
        let mut out_p = outer.clone();
        for _ in 0..doublings {
            out_p = out_p.doubled();
        }
        let nodes = out_p.nodes(&rule);
        let rows: Vec<(f64, f64, usize, usize)> = nodes
            .par_iter()
            .map(|&(ws, w_s)| -> Result<(f64, f64, usize, usize)> {
                let mut in_p = inner_panels(ws);
                for _ in 0..doublings {
                    in_p = in_p.doubled();
                }
                let a_s = airy(ws, Mode::Signal, fiber, cavity)?;
                let m_s = mode_weight(fiber, ws)?;
                let ks = fiber.k(ws)?;
                let mut cav = 0.0;
                let mut nc = 0.0;
                let inner_nodes = in_p.nodes(&rule);
                for &(wi, w_i) in &inner_nodes {
                    let f2 = eval.eval_sum(ws + wi, ks + fiber.k(wi)?)?.norm_sqr();
                    let base = w_i * mode_weight(fiber, wi)? * f2;
                    nc += base;
                    cav += base * airy(wi, Mode::Idler, fiber, cavity)?;
                }
                Ok((w_s * m_s * a_s * cav, w_s * m_s * nc, inner_nodes.len(), in_p.len()))
            })
            .collect::<Result<_>>()?;
        let cav = rows.iter().map(|r| r.0).sum();
        let nc = rows.iter().map(|r| r.1).sum();
        let evals = rows.iter().map(|r| r.2).sum();
        let max_inner = rows.iter().map(|r| r.3).max().unwrap_or(0);
        Ok((cav, nc, evals, out_p.len(), max_inner))
    };

    let (mut cav, mut nc, mut evals, _, _) = level(0)?;
    let mut accepted = None;
    for d in 1..=options.max_doublings {
        let (c2, n2, e2, outer_count, inner_count) = level(d)?;
        evals += e2;
        let (rc, rn) = (relative_change(cav, c2), relative_change(nc, n2));
        cav = c2;
        nc = n2;
        if rc <= options.rel_tol && rn <= options.rel_tol {
            accepted = Some((d, rc, rn, outer_count, inner_count));
            break;
        }
        if d == options.max_doublings {
            return Err(Error::numerical(
                "flux_pulsed",
                format!(
                    "panel doubling did not converge: relative change {rc:e} (cavity), {rn:e} (reference) after {d} doublings"
                ),
            ));
        }
    }
    let (doublings, rc, rn, outer_count, inner_count) = accepted.ok_or_else(|| {
        Error::numerical("flux_pulsed", "max_doublings must be at least 1")
    })?;

    let jsa_check = check_jsa_quadrature(
        fiber,
        pump,
        options.jsa,
        &[
            (filter.center_s, filter.center_i),
            (filter.center_s, 2.0 * wo - filter.center_s),
        ],
    )?;
    let n0 = fiber.n_eff(wo)?;
    let prefactor = 32.0 * SPEED_OF_LIGHT.powi(2) * n0 * n0 * fiber.length().powi(2)
        * fiber.gamma_fwm().powi(2)
        * pump.avg_power.powi(2)
        / (PI.powi(3) * wo * wo * sigma * sigma * pump.rep_rate);
    Ok(FluxResult {
        rate: prefactor * cav,
        reference_rate_nc: prefactor * nc,
        ratio: cav / nc,
        quadrature: QuadratureMeta {
            window_s: (s_lo, s_hi),
            window_i: (i_lo, i_hi),
            outer_panels: outer_count,
            inner_panels: inner_count,
            nodes_per_panel: options.nodes_per_panel,
            jsa_nodes: options.jsa.nodes,
            jsa_relative_change: jsa_check.relative_change,
            doublings,
            relative_change: rc,
            relative_change_nc: rn,
            evaluations: evals,
        },
    })
}

/// Integrand of the CW rate at signal frequency `omega` (idler 2ω_p − ω),
/// with and without the Airy factors.
pub fn cw_integrand(
    fiber: &Fiber,
    omega_p: f64,
    avg_power: f64,
    cavity: &CavitySpec,
    omega: f64,
) -> Result<(f64, f64)> {
    let wi = 2.0 * omega_p - omega;
    let dk = 2.0 * fiber.k(omega_p)? - fiber.k(omega)? - fiber.k(wi)? - 2.0 * fiber.gamma() * avg_power;
    let y = 0.5 * fiber.length() * dk;
    let sinc = if y == 0.0 { 1.0 } else { y.sin() / y };
    let base = mode_weight(fiber, omega)? * mode_weight(fiber, wi)? * sinc * sinc;
    let cav = base * airy(omega, Mode::Signal, fiber, cavity)? * airy(wi, Mode::Idler, fiber, cavity)?;
    Ok((cav, base))
}

/// Monochromatic-pump pair rate. The pump is `omega_p` with average power `p`.
pub fn flux_cw(
    fiber: &Fiber,
    omega_p: f64,
    avg_power: f64,
    cavity: &CavitySpec,
    filter: &FilterSpec,
    options: &FluxOptions,
) -> Result<FluxResult> {
    cavity.validate()?;
    let (s_lo, s_hi) = filter.signal_band();
    let (i_lo, i_hi) = filter.idler_band();
    let lo = s_lo.max(2.0 * omega_p - i_hi);
    let hi = s_hi.min(2.0 * omega_p - i_lo);
    if !(hi > lo) {
        return Err(Error::Contract(format!(
            "filter windows admit no energy-conserving pair for omega_p = {omega_p:e} rad/s"
        )));
    }
    let feats = features(fiber, cavity, filter)?;
    let mut points = ladders(feats.res_s.iter().copied(), 0.5 * feats.width, options.ladder_factor, hi - lo);
    points.extend(ladders(
        feats.res_i.iter().map(|r| 2.0 * omega_p - r),
        0.5 * feats.width,
        options.ladder_factor,
        hi - lo,
    ));
    let panels = Panels::new(lo, hi, points);
    let rule = GaussLegendreRule::new(options.nodes_per_panel);

    let level = |p: &Panels| -> Result<(f64, f64)> {
        let nodes = p.nodes(&rule);
        let parts: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|&(w, wt)| -> Result<(f64, f64)> {
                let (cav, base) = cw_integrand(fiber, omega_p, avg_power, cavity, w)?;
                Ok((wt * cav, wt * base))
            })
            .collect::<Result<_>>()?;
        Ok((parts.iter().map(|x| x.0).sum(), parts.iter().map(|x| x.1).sum()))
    };

    let mut current = panels;
    let (mut cav, mut nc) = level(&current)?;
    let mut evals = current.len() * rule.len();
    let mut accepted = None;
    let mut last = (f64::INFINITY, f64::INFINITY);
    for d in 1..=options.max_doublings {
        current = current.doubled();
        let (c2, n2) = level(&current)?;
        evals += current.len() * rule.len();
        let (rc, rn) = (relative_change(cav, c2), relative_change(nc, n2));
        cav = c2;
        nc = n2;
        last = (rc, rn);
        if rc <= options.rel_tol && rn <= options.rel_tol {
            accepted = Some((d, rc, rn));
            break;
        }
    }
    let (doublings, rc, rn) = accepted.ok_or_else(|| {
        Error::numerical(
            "flux_cw",
            format!(
                "panel doubling did not converge: relative change {:e} (cavity), {:e} (reference)",
                last.0, last.1
            ),
        )
    })?;
    let n_p = fiber.n_eff(omega_p)?;
    let prefactor = 32.0 * SPEED_OF_LIGHT.powi(2) * n_p * n_p * fiber.length().powi(2)
        * fiber.gamma_fwm().powi(2)
        * avg_power.powi(2)
        / (PI * omega_p * omega_p);
    Ok(FluxResult {
        rate: prefactor * cav,
        reference_rate_nc: prefactor * nc,
        ratio: cav / nc,
        quadrature: QuadratureMeta {
            window_s: (lo, hi),
            window_i: (2.0 * omega_p - hi, 2.0 * omega_p - lo),
            outer_panels: current.len(),
            inner_panels: 0,
            nodes_per_panel: options.nodes_per_panel,
            jsa_nodes: 0,
            jsa_relative_change: 0.0,
            doublings,
            relative_change: rc,
            relative_change_nc: rn,
            evaluations: evals,
        },
    })
}

/// Bandwidth regimes of the enhancement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    /// σ_I > √2·Δω
    Broadband,
    /// δω < σ_I < √2·Δω
    Intermediate,
    /// σ_I < δω
    Narrowband,
}

impl Zone {
    pub fn classify(sigma_i: f64, width: f64, spacing: f64) -> Self {
        if sigma_i > SQRT_2 * spacing {
            Zone::Broadband
        } else if sigma_i > width {
            Zone::Intermediate
        } else {
            Zone::Narrowband
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Zone::Broadband => "i",
            Zone::Intermediate => "ii",
            Zone::Narrowband => "iii",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sigma_i: f64,
    pub zone: Zone,
    pub result: std::result::Result<FluxResult, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxSweep {
    pub points: Vec<SweepPoint>,
    /// Zone boundaries δω and √2·Δω (rad/s).
    pub boundaries: (f64, f64),
}

impl FluxSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma_I_rad_per_s,rate_pairs_per_s,rate_nc_pairs_per_s,ratio\n");
        for p in &self.points {
            if let Ok(r) = &p.result {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(p.sigma_i),
                    fmt_f64(r.rate),
                    fmt_f64(r.reference_rate_nc),
                    fmt_f64(r.ratio)
                );
            }
        }
        out
    }

    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.result.as_ref().ok().map(|r| r.ratio)).collect()
    }
}

/// Evaluates [`flux_pulsed`] at each σ_I at constant average power. Failed
/// points keep their error and the sweep continues.
pub fn flux_ratio_sweep(
    fiber: &Fiber,
    pump: &PumpSpec,
    cavity: &CavitySpec,
    sigma_list: &[f64],
    filter: &FilterSpec,
    options: &FluxOptions,
) -> Result<FluxSweep> {
    let (mode, center) = if cavity.is_resonant(Mode::Signal) || !cavity.is_resonant(Mode::Idler) {
        (Mode::Signal, filter.center_s)
    } else {
        (Mode::Idler, filter.center_i)
    };
    let spacing = mode_spacing(fiber, cavity.topology, center)?;
    let width = if cavity.is_resonant(mode) {
        mode_width(fiber, cavity, mode, center)?
    } else {
        0.0
    };
    let points = sigma_list
        .iter()
        .map(|&s| SweepPoint {
            sigma_i: s,
            zone: Zone::classify(s, width, spacing),
            result: pump
                .with_sigma_i(s)
                .and_then(|p| flux_pulsed(fiber, &p, cavity, filter, options)),
        })
        .collect();
    Ok(FluxSweep {
        points,
        boundaries: (width, SQRT_2 * spacing),
    })
}

/// Cavity configurations covered by the geometric model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeomConfig {
    Csi,
    Cs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomModelInputs {
    pub r2_mag: f64,
    pub delta_omega: f64,
    pub mode_spacing: f64,
    pub sigma_i: f64,
    pub config: GeomConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomModelOutput {
    pub a: f64,
    pub zone: Zone,
    /// The ratio estimate valid in `zone` (Cs: the same in every zone).
    pub xi: f64,
    /// Zone-i value ξ₁ (Csi only).
    pub xi1: Option<f64>,
    /// Enhancement E = ξ₃(σ_I → 0)/ξ₁ (Csi only).
    pub enhancement: Option<f64>,
}

impl GeomModelOutput {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "a={}", fmt_f64(self.a));
        let _ = writeln!(out, "zone={}", self.zone.label());
        let _ = writeln!(out, "xi={}", fmt_f64(self.xi));
        if let Some(x) = self.xi1 {
            let _ = writeln!(out, "xi1={}", fmt_f64(x));
        }
        if let Some(e) = self.enhancement {
            let _ = writeln!(out, "E={}", fmt_f64(e));
        }
        out
    }
}

fn validate_geom(i: &GeomModelInputs) -> Result<()> {
    if !(i.r2_mag > 0.0 && i.r2_mag < 1.0) {
        return Err(Error::domain("r2", i.r2_mag, "(0, 1)"));
    }
    if !(i.delta_omega > 0.0 && i.delta_omega < i.mode_spacing) {
        return Err(Error::domain("delta_omega", i.delta_omega, "(0, Delta_omega)"));
    }
    if !(i.sigma_i >= 0.0) {
        return Err(Error::domain("sigma_I", i.sigma_i, "[0, inf)"));
    }
    Ok(())
}

/// a_Csi = ((1+r)/(1−r))².
pub fn area_factor_csi(r: f64) -> f64 {
    ((1.0 + r) / (1.0 - r)).powi(2)
}

/// a_Cs = (1+r)/(1−r).
pub fn area_factor_cs(r: f64) -> f64 {
    (1.0 + r) / (1.0 - r)
}

/// ξ₁ = (1+r)²/(4πr).
pub fn xi1(r: f64) -> f64 {
    (1.0 + r).powi(2) / (4.0 * PI * r)
}

/// ξ₂ = aπδω²/(4σ_I(√2Δω − σ_I/2)), defined for δω < σ_I < √2Δω.
pub fn xi2(a: f64, delta_omega: f64, mode_spacing: f64, sigma_i: f64) -> Result<f64> {
    if !(sigma_i > delta_omega && sigma_i < SQRT_2 * mode_spacing) {
        return Err(Error::domain("sigma_I", sigma_i, "zone ii: (delta_omega, sqrt(2) Delta_omega)"));
    }
    Ok(a * PI * delta_omega.powi(2) / (4.0 * sigma_i * (SQRT_2 * mode_spacing - 0.5 * sigma_i)))
}

/// ξ₃ = aδω/(√2Δω − σ_I/2), defined for σ_I < δω.
pub fn xi3(a: f64, delta_omega: f64, mode_spacing: f64, sigma_i: f64) -> Result<f64> {
    if !(sigma_i >= 0.0 && sigma_i < delta_omega) {
        return Err(Error::domain("sigma_I", sigma_i, "zone iii: [0, delta_omega)"));
    }
    Ok(a * delta_omega / (SQRT_2 * mode_spacing - 0.5 * sigma_i))
}

/// Area-ratio estimate of N/N_nc.
pub fn geom_model(inputs: &GeomModelInputs) -> Result<GeomModelOutput> {
    validate_geom(inputs)?;
    let GeomModelInputs {
        r2_mag: r,
        delta_omega: dw,
        mode_spacing: big,
        sigma_i: s,
        config,
    } = *inputs;
    let zone = Zone::classify(s, dw, big);
    match config {
        GeomConfig::Cs => {
            let a = area_factor_cs(r);
            Ok(GeomModelOutput {
                a,
                zone,
                xi: a * dw / big,
                xi1: None,
                enhancement: None,
            })
        }
        GeomConfig::Csi => {
            let a = area_factor_csi(r);
            let x1 = xi1(r);
            let xi = match zone {
                Zone::Broadband => x1,
                Zone::Intermediate => xi2(a, dw, big, s)?,
                Zone::Narrowband => xi3(a, dw, big, s)?,
            };
            Ok(GeomModelOutput {
                a,
                zone,
                xi,
                xi1: Some(x1),
                enhancement: Some(xi3(a, dw, big, 0.0)? / x1),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::mode_width_from;

    #[test]
    fn geometric_values() {
        assert!((area_factor_csi(0.8) - 81.0).abs() < 1e-12);
        assert!((area_factor_cs(0.8) - 9.0).abs() < 1e-12);
        assert!((xi1(0.8) - 0.3223).abs() < 1e-4);
    }

    #[test]
    fn enhancement_equals_sqrt_two_finesse() {
        for r in [0.8, 0.992, 0.998] {
            let f = crate::spectral::finesse_coefficient(r).unwrap();
            let big = 1e10;
            let out = geom_model(&GeomModelInputs {
                r2_mag: r,
                delta_omega: mode_width_from(big, f),
                mode_spacing: big,
                sigma_i: 0.0,
                config: GeomConfig::Csi,
            })
            .unwrap();
            let e = out.enhancement.unwrap();
            assert!(((e - (2.0 * f).sqrt()) / e).abs() < 1e-12);
        }
    }

    #[test]
    fn zone_checks() {
        assert!(xi2(81.0, 1.0, 10.0, 0.5).is_err());
        assert!(xi3(81.0, 1.0, 10.0, 2.0).is_err());
        assert!(xi2(81.0, 1.0, 10.0, 2.0).is_ok());
        assert_eq!(Zone::classify(20.0, 1.0, 10.0), Zone::Broadband);
        assert_eq!(Zone::classify(5.0, 1.0, 10.0), Zone::Intermediate);
        assert_eq!(Zone::classify(0.5, 1.0, 10.0), Zone::Narrowband);
    }
}
