//! Source design: phasematching, cavity finesse for a target linewidth, and
//! the combined design report.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::dispersion::Fiber;
use crate::error::{Error, Result};
use crate::flux::{flux_pulsed, FluxOptions, FluxResult};
use crate::grid::fmt_f64;
use crate::numeric::bisect;
use crate::spectral::{
    finesse_coefficient, mode_spacing, mode_width_from, CavitySpec, Configuration, FilterSpec, Mirror,
    PumpSpec, Topology,
};

/// Points of the sign scan preceding bisection.
pub const PHASEMATCH_SCAN_POINTS: usize = 2000;

/// CW degenerate-pump mismatch 2k(ω_p) − k(ω_s) − k(2ω_p − ω_s) − 2γP.
pub fn degenerate_mismatch(omega_s: f64, fiber: &Fiber, omega_p: f64, peak_power: f64) -> Result<f64> {
    let idler = 2.0 * omega_p - omega_s;
    Ok(2.0 * fiber.k(omega_p)? - fiber.k(omega_s)? - fiber.k(idler)? - 2.0 * fiber.gamma() * peak_power)
}

/// Phasematched signal/idler pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasematchedPair {
    pub omega_s: f64,
    pub omega_i: f64,
    /// |Δk| at the returned root (rad/m).
    pub residual: f64,
}

/// Solves Δk(ω_s, 2ω_p − ω_s, ω_p) = 0 for ω_s > ω_p and returns the root
/// farthest from the pump.
pub fn phasematch_solve(fiber: &Fiber, pump: &PumpSpec) -> Result<PhasematchedPair> {
    let wp = pump.omega0;
    let (band_lo, band_hi) = fiber.band();
    let lo = wp * (1.0 + 1e-4);
    let hi = band_hi.min(2.0 * wp - band_lo) * (1.0 - 1e-9);
    if !(hi > lo) {
        return Err(Error::Infeasible(format!(
            "pump at {wp:e} rad/s leaves no room for a signal inside the band [{band_lo:e}, {band_hi:e}]"
        )));
    }
    let f = |ws: f64| degenerate_mismatch(ws, fiber, wp, pump.peak_power);
    let n = PHASEMATCH_SCAN_POINTS;
    let grid: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
    let values: Vec<Option<f64>> = grid.iter().map(|&w| f(w).ok()).collect();
    let mut best: Option<f64> = None;
    for j in 0..n - 1 {
        if let (Some(a), Some(b)) = (values[j], values[j + 1]) {
            if a == 0.0 || a.signum() != b.signum() {
                let root = bisect(|w| f(w).unwrap_or(f64::NAN), grid[j], grid[j + 1])?;
                if best.is_none_or(|r| (root - wp).abs() > (r - wp).abs()) {
                    best = Some(root);
                }
            }
        }
    }
    let omega_s = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no phasematched pair: no sign change of the mismatch for omega_s in [{lo:e}, {hi:e}] rad/s"
        ))
    })?;
    Ok(PhasematchedPair {
        omega_s,
        omega_i: 2.0 * wp - omega_s,
        residual: f(omega_s)?.abs(),
    })
}

/// Coefficient of finesse and reflectivity giving a target mode width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinesseRequirement {
    pub finesse: f64,
    pub r2: f64,
    pub mode_spacing: f64,
}

/// Inverse of 𝒻 = 4r/(1−r)² on [0, 1).
pub fn reflectivity_from_finesse(finesse: f64) -> Result<f64> {
    if !(finesse >= 0.0 && finesse.is_finite()) {
        return Err(Error::domain("finesse", finesse, "[0, inf)"));
    }
    if finesse == 0.0 {
        return Ok(0.0);
    }
    Ok(((1.0 + finesse).sqrt() - 1.0).powi(2) / finesse)
}

/// 𝒻 = (2Δω/(π·δω))² for a target linewidth at `omega`, and the matching r₂.
pub fn required_finesse(
    target_linewidth: f64,
    fiber: &Fiber,
    topology: Topology,
    omega: f64,
) -> Result<FinesseRequirement> {
    if !(target_linewidth > 0.0) {
        return Err(Error::domain("linewidth", target_linewidth, "(0, inf) rad/s"));
    }
    let spacing = mode_spacing(fiber, topology, omega)?;
    if target_linewidth >= spacing {
        return Err(Error::Infeasible(format!(
            "linewidth {target_linewidth:e} rad/s is not below the mode spacing {spacing:e} rad/s; use a longer cavity"
        )));
    }
    let finesse = (2.0 * spacing / (PI * target_linewidth)).powi(2);
    Ok(FinesseRequirement {
        finesse,
        r2: reflectivity_from_finesse(finesse)?,
        mode_spacing: spacing,
    })
}

/// Atomic transition the signal photon should match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionTarget {
    pub omega_target: f64,
    /// Linewidth (rad/s).
    pub linewidth: f64,
}

impl TransitionTarget {
    pub fn new(omega_target: f64, linewidth: f64) -> Result<Self> {
        if !(linewidth > 0.0) {
            return Err(Error::domain("linewidth", linewidth, "(0, inf) rad/s"));
        }
        if !(omega_target > 0.0) {
            return Err(Error::domain("omega_target", omega_target, "(0, inf) rad/s"));
        }
        Ok(Self {
            omega_target,
            linewidth,
        })
    }
}

/// Optional departures from the derived design.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesignOverrides {
    /// Use this reflectivity instead of the one derived from the linewidth.
    pub r2: Option<f64>,
    /// Use this pump bandwidth instead of 5·δω.
    pub sigma_i: Option<f64>,
    /// Skip the flux prediction.
    pub skip_flux: bool,
}

/// Ratio σ_I/δω recommended for maximal absolute flux.
pub const RECOMMENDED_SIGMA_I_OVER_WIDTH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub omega_p: f64,
    pub omega_s: f64,
    pub omega_i: f64,
    pub phasematch_residual: f64,
    /// ω_s − ω_target (rad/s).
    pub target_detuning: f64,
    pub length: f64,
    pub finesse: f64,
    pub r2: f64,
    /// Finesse required by the target linewidth (before any override).
    pub required_finesse: f64,
    pub required_r2: f64,
    pub mode_spacing_s: f64,
    pub mode_spacing_i: f64,
    pub mode_width_s: f64,
    pub mode_width_i: f64,
    pub sigma_i: f64,
    pub peak_power: f64,
    pub flux: Option<FluxResult>,
}

impl DesignReport {
    /// Flat key=value document.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: f64| {
            let _ = writeln!(out, "{k}={}", fmt_f64(v));
        };
        put("omega_p_rad_per_s", self.omega_p);
        put("omega_s_rad_per_s", self.omega_s);
        put("omega_i_rad_per_s", self.omega_i);
        put("lambda_s_m", crate::constants::wavelength_from_omega(self.omega_s));
        put("lambda_i_m", crate::constants::wavelength_from_omega(self.omega_i));
        put("phasematch_residual_rad_per_m", self.phasematch_residual);
        put("target_detuning_rad_per_s", self.target_detuning);
        put("length_m", self.length);
        put("required_finesse", self.required_finesse);
        put("required_r2", self.required_r2);
        put("finesse", self.finesse);
        put("r2", self.r2);
        put("mode_spacing_s_rad_per_s", self.mode_spacing_s);
        put("mode_spacing_i_rad_per_s", self.mode_spacing_i);
        put("mode_width_s_rad_per_s", self.mode_width_s);
        put("mode_width_i_rad_per_s", self.mode_width_i);
        put("sigma_I_rad_per_s", self.sigma_i);
        put("peak_power_W", self.peak_power);
        if let Some(f) = &self.flux {
            put("rate_pairs_per_s", f.rate);
            put("rate_nc_pairs_per_s", f.reference_rate_nc);
            put("ratio", f.ratio);
        }
        out
    }
}

/// Phasematches the fiber, sizes a Csi cavity of length `length` for the
/// target linewidth on the signal, recommends σ_I = 5·δω and predicts the
/// pulsed flux through single-mode filters.
pub fn design_report(
    fiber: &Fiber,
    pump: &PumpSpec,
    target: &TransitionTarget,
    length: f64,
    overrides: DesignOverrides,
) -> Result<DesignReport> {
    let stage = |s: &'static str| move |e: Error| prefix(s, e);
    let fiber = fiber.with_length(length)?;
    let pair = phasematch_solve(&fiber, pump).map_err(stage("phasematch"))?;
    let need = required_finesse(target.linewidth, &fiber, Topology::Linear, pair.omega_s)
        .map_err(stage("required_finesse"))?;
    let r2 = overrides.r2.unwrap_or(need.r2);
    let finesse = finesse_coefficient(r2).map_err(stage("finesse"))?;
    let spacing_i = mode_spacing(&fiber, Topology::Linear, pair.omega_i).map_err(stage("mode_spacing"))?;
    let width_s = mode_width_from(need.mode_spacing, finesse);
    let width_i = mode_width_from(spacing_i, finesse);
    let sigma_i = overrides.sigma_i.unwrap_or(RECOMMENDED_SIGMA_I_OVER_WIDTH * width_s);
    let pulsed = pump.with_sigma_i(sigma_i).map_err(stage("pump"))?;
    let flux = if overrides.skip_flux {
        None
    } else {
        let mirror = Mirror::lossless(r2).map_err(stage("cavity"))?;
        let cavity = CavitySpec::new(Some(mirror), Some(mirror), Topology::Linear)
            .and_then(|c| c.tuned(&fiber, pair.omega_s, pair.omega_i))
            .map_err(stage("cavity"))?;
        let filter = FilterSpec::around_modes(&fiber, Topology::Linear, pair.omega_s, pair.omega_i, 1)
            .map_err(stage("filter"))?;
        debug_assert_eq!(cavity.configuration(), Configuration::Csi);
        Some(
            flux_pulsed(&fiber, &pulsed, &cavity, &filter, &FluxOptions::default())
                .map_err(stage("flux"))?,
        )
    };
    Ok(DesignReport {
        omega_p: pump.omega0,
        omega_s: pair.omega_s,
        omega_i: pair.omega_i,
        phasematch_residual: pair.residual,
        target_detuning: pair.omega_s - target.omega_target,
        length,
        finesse,
        r2,
        required_finesse: need.finesse,
        required_r2: need.r2,
        mode_spacing_s: need.mode_spacing,
        mode_spacing_i: spacing_i,
        mode_width_s: width_s,
        mode_width_i: width_i,
        sigma_i,
        peak_power: pulsed.peak_power,
        flux,
    })
}

fn prefix(stage: &'static str, e: Error) -> Error {
    match e {
        Error::Numerical { stage: inner, detail } => Error::Numerical {
            stage,
            detail: format!("{inner}: {detail}"),
        },
        Error::Infeasible(m) => Error::Infeasible(format!("{stage}: {m}")),
        Error::Contract(m) => Error::Contract(format!("{stage}: {m}")),
        other => other,
    }
}
