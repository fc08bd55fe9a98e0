//! Pump envelope, cavity-free joint spectral amplitude, cavity transfer
//! functions and the cavity-modified joint spectral intensity.

use std::f64::consts::{LN_2, PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::SPEED_OF_LIGHT;
use crate::dispersion::Fiber;
use crate::error::{Error, Result};
use crate::grid::{AmplitudeGrid, Axis, Grid, IntensityGrid};
use crate::numeric::GaussLegendreRule;

/// σ_I / σ for the Gaussian envelope exp(−(ω−ω₀)²/σ²).
pub fn intensity_fwhm_factor() -> f64 {
    (2.0 * LN_2).sqrt()
}

/// Intensity-FWHM pulse duration of a transform-limited Gaussian pulse.
pub fn pulse_duration(sigma_i: f64) -> f64 {
    4.0 * LN_2 / sigma_i
}

/// Gaussian pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    /// Centre angular frequency ω₀ (rad/s).
    pub omega0: f64,
    /// Amplitude bandwidth σ (rad/s).
    pub sigma: f64,
    /// Peak power P (W).
    pub peak_power: f64,
    /// Average power p (W).
    pub avg_power: f64,
    /// Repetition rate R (Hz).
    pub rep_rate: f64,
}

impl PumpSpec {
    pub fn new(omega0: f64, sigma: f64, peak_power: f64, avg_power: f64, rep_rate: f64) -> Result<Self> {
        let pump = Self {
            omega0,
            sigma,
            peak_power,
            avg_power,
            rep_rate,
        };
        pump.validate()?;
        Ok(pump)
    }

    /// Pulsed pump specified by intensity FWHM σ_I and average power; the peak
    /// power is p/(R·τ_p) with τ_p the transform-limited pulse duration.
    pub fn pulsed(omega0: f64, sigma_i: f64, avg_power: f64, rep_rate: f64) -> Result<Self> {
        if !(sigma_i > 0.0) {
            return Err(Error::domain("sigma_I", sigma_i, "(0, inf) rad/s"));
        }
        if !(rep_rate > 0.0) {
            return Err(Error::domain("rep_rate", rep_rate, "(0, inf) Hz"));
        }
        let peak = avg_power / (rep_rate * pulse_duration(sigma_i));
        Self::new(omega0, sigma_i / intensity_fwhm_factor(), peak, avg_power, rep_rate)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::domain("omega0", self.omega0, "(0, inf) rad/s"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain("sigma", self.sigma, "(0, inf) rad/s"));
        }
        if !(self.peak_power >= 0.0 && self.peak_power.is_finite()) {
            return Err(Error::domain("peak_power", self.peak_power, "[0, inf) W"));
        }
        if !(self.avg_power >= 0.0 && self.avg_power.is_finite()) {
            return Err(Error::domain("avg_power", self.avg_power, "[0, inf) W"));
        }
        if !(self.rep_rate > 0.0 && self.rep_rate.is_finite()) {
            return Err(Error::domain("rep_rate", self.rep_rate, "(0, inf) Hz"));
        }
        Ok(())
    }

    /// Intensity FWHM bandwidth σ_I = √(2 ln 2)·σ.
    pub fn sigma_i(&self) -> f64 {
        intensity_fwhm_factor() * self.sigma
    }

    pub fn pulse_duration(&self) -> f64 {
        pulse_duration(self.sigma_i())
    }

    /// Same average power and repetition rate at a new bandwidth.
    pub fn with_sigma_i(&self, sigma_i: f64) -> Result<Self> {
        Self::pulsed(self.omega0, sigma_i, self.avg_power, self.rep_rate)
    }
}

/// α(ω) = exp(−(ω−ω₀)²/σ²).
pub fn pump_envelope(omega: f64, pump: &PumpSpec) -> Complex64 {
    let x = (omega - pump.omega0) / pump.sigma;
    Complex64::new((-x * x).exp(), 0.0)
}

/// Δk(ω_s, ω_i, ω) = k(ω) + k(ω_s+ω_i−ω) − k(ω_s) − k(ω_i) − 2γP.
pub fn phase_mismatch(omega_s: f64, omega_i: f64, omega: f64, fiber: &Fiber, pump: &PumpSpec) -> Result<f64> {
    let pair = fiber.k(omega_s)? + fiber.k(omega_i)?;
    let pumps = fiber.k(omega)? + fiber.k(omega_s + omega_i - omega)?;
    Ok(pumps - pair - 2.0 * fiber.gamma() * pump.peak_power)
}

/// sinc(y)·e^{iy} with sinc(0) = 1.
fn sinc_phase(y: f64) -> Complex64 {
    if y == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (s, c) = y.sin_cos();
    let sinc = s / y;
    Complex64::new(sinc * c, sinc * s)
}

/// Pump-frequency quadrature used for F(ω_s, ω_i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsaQuadrature {
    /// Gauss–Legendre nodes (odd counts keep a node on the window centre).
    pub nodes: usize,
    /// Half-width of the window in units of σ.
    pub half_width: f64,
}

impl Default for JsaQuadrature {
    fn default() -> Self {
        Self {
            nodes: 201,
            half_width: 5.0,
        }
    }
}

impl JsaQuadrature {
    pub fn doubled(&self) -> Self {
        Self {
            nodes: 2 * self.nodes - 1,
            half_width: self.half_width,
        }
    }
}

/// Evaluates F(ω_s, ω_i) for a fixed fiber, pump and quadrature.
///
/// Writing ω = S/2 + x with S = ω_s + ω_i,
/// F = e^{−(S−2ω₀)²/(2σ²)} ∫ e^{−2x²/σ²} sinc(LΔk/2) e^{iLΔk/2} dx,
/// and the integrand depends on x only through k(S/2+x) + k(S/2−x), so only
/// the non-negative half of the nodes is evaluated.
#[derive(Debug, Clone)]
pub struct JsaEvaluator {
    fiber: Fiber,
    pump: PumpSpec,
    quadrature: JsaQuadrature,
    half_nodes: Vec<(f64, f64)>,
}

impl JsaEvaluator {
    pub fn new(fiber: &Fiber, pump: &PumpSpec, quadrature: JsaQuadrature) -> Result<Self> {
        pump.validate()?;
        if quadrature.nodes < 2 || !(quadrature.half_width > 0.0) {
            return Err(Error::Contract(format!("invalid pump quadrature {quadrature:?}")));
        }
        let rule = GaussLegendreRule::new(quadrature.nodes);
        let half = quadrature.half_width * pump.sigma;
        let mut half_nodes: Vec<(f64, f64)> = rule
            .mapped(-half, half)
            .filter(|&(x, _)| x >= -1e-12 * half)
            .map(|(x, w)| if x.abs() <= 1e-12 * half { (0.0, w) } else { (x, 2.0 * w) })
            .collect();
        half_nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, w) in &mut half_nodes {
            let g = *x / pump.sigma;
            *w *= (-2.0 * g * g).exp();
        }
        Ok(Self {
            fiber: fiber.clone(),
            pump: *pump,
            quadrature,
            half_nodes,
        })
    }

    pub fn quadrature(&self) -> JsaQuadrature {
        self.quadrature
    }

    pub fn fiber(&self) -> &Fiber {
        &self.fiber
    }

    pub fn pump(&self) -> &PumpSpec {
        &self.pump
    }

    pub fn eval(&self, omega_s: f64, omega_i: f64) -> Result<Complex64> {
        let s = omega_s + omega_i;
        let q = self.fiber.k(omega_s)? + self.fiber.k(omega_i)?;
        self.eval_sum(s, q)
    }

    /// F as a function of S = ω_s + ω_i and q = k(ω_s) + k(ω_i).
    pub(crate) fn eval_sum(&self, s: f64, q: f64) -> Result<Complex64> {
        let half_l = 0.5 * self.fiber.length();
        let shift = 2.0 * self.fiber.gamma() * self.pump.peak_power;
        let mid = 0.5 * s;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, w) in &self.half_nodes {
            let p = self.fiber.k(mid + x)? + self.fiber.k(mid - x)?;
            acc += w * sinc_phase(half_l * (p - q - shift));
        }
        let d = (s - 2.0 * self.pump.omega0) / self.pump.sigma;
        Ok(acc * (-0.5 * d * d).exp())
    }
}

/// Cavity-free joint spectral amplitude F(ω_s, ω_i) with the default quadrature.
pub fn jsa_no_cavity(omega_s: f64, omega_i: f64, fiber: &Fiber, pump: &PumpSpec) -> Result<Complex64> {
    JsaEvaluator::new(fiber, pump, JsaQuadrature::default())?.eval(omega_s, omega_i)
}

/// Which SFWM photon a cavity quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Topology {
    /// Two mirrors a fiber length apart.
    #[default]
    Linear,
    /// Ring of circulation length equal to the fiber length.
    Ring,
}

impl Topology {
    /// Length entering the round-trip phase β = k·L_eff.
    pub fn effective_length(self, length: f64) -> f64 {
        match self {
            Topology::Linear => length,
            Topology::Ring => 0.5 * length,
        }
    }
}

/// Output-mirror parameters for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mirror {
    pub r2_mag: f64,
    pub t2_mag: f64,
    /// Reflection phase of the input mirror δ₁ (rad).
    pub delta1: f64,
    /// Reflection phase of the output mirror δ₂ (rad).
    pub delta2: f64,
}

impl Mirror {
    /// No cavity effect: r₂ = 0, t₂ = 1.
    pub const TRANSPARENT: Mirror = Mirror {
        r2_mag: 0.0,
        t2_mag: 1.0,
        delta1: 0.0,
        delta2: 0.0,
    };

    /// Lossless mirror, t₂ = sqrt(1 − r₂²).
    pub fn lossless(r2_mag: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r2_mag) {
            return Err(Error::domain("r2", r2_mag, "[0, 1)"));
        }
        Ok(Self {
            r2_mag,
            t2_mag: (1.0 - r2_mag * r2_mag).sqrt(),
            delta1: 0.0,
            delta2: 0.0,
        })
    }

    pub fn with_phases(mut self, delta1: f64, delta2: f64) -> Self {
        self.delta1 = delta1;
        self.delta2 = delta2;
        self
    }

    pub fn finesse(&self) -> f64 {
        4.0 * self.r2_mag / (1.0 - self.r2_mag).powi(2)
    }

    /// |t₂|²/(1 − |r₂|)², the on-resonance value of the Airy function.
    pub fn peak(&self) -> f64 {
        (self.t2_mag / (1.0 - self.r2_mag)).powi(2)
    }

    /// |t₂|²/(1 + |r₂|)², the antiresonance value.
    pub fn trough(&self) -> f64 {
        (self.t2_mag / (1.0 + self.r2_mag)).powi(2)
    }

    fn validate(&self, mode: &str) -> Result<()> {
        if !(0.0..1.0).contains(&self.r2_mag) {
            return Err(Error::Contract(format!("{mode}: r2 = {} outside [0, 1)", self.r2_mag)));
        }
        if !(0.0..=1.0).contains(&self.t2_mag) {
            return Err(Error::Contract(format!("{mode}: t2 = {} outside [0, 1]", self.t2_mag)));
        }
        if self.t2_mag.powi(2) + self.r2_mag.powi(2) > 1.0 + 1e-12 {
            return Err(Error::Contract(format!(
                "{mode}: |t2|^2 + |r2|^2 = {} exceeds 1",
                self.t2_mag.powi(2) + self.r2_mag.powi(2)
            )));
        }
        if !self.delta1.is_finite() || !self.delta2.is_finite() {
            return Err(Error::Contract(format!("{mode}: non-finite reflection phase")));
        }
        Ok(())
    }
}

/// Which SFWM modes the cavity is resonant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Configuration {
    None,
    Cs,
    Ci,
    Csi,
}

impl Configuration {
    pub fn label(self) -> &'static str {
        match self {
            Configuration::None => "none",
            Configuration::Cs => "Cs",
            Configuration::Ci => "Ci",
            Configuration::Csi => "Csi",
        }
    }
}

/// Cavity surrounding the nonlinear fiber. The pump is never resonant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    pub signal: Mirror,
    pub idler: Mirror,
    pub resonant_s: bool,
    pub resonant_i: bool,
    pub topology: Topology,
}

impl CavitySpec {
    /// No cavity at all.
    pub fn none() -> Self {
        Self {
            signal: Mirror::TRANSPARENT,
            idler: Mirror::TRANSPARENT,
            resonant_s: false,
            resonant_i: false,
            topology: Topology::Linear,
        }
    }

    /// Cavity with the given mirrors; `None` marks a non-resonant mode.
    pub fn new(signal: Option<Mirror>, idler: Option<Mirror>, topology: Topology) -> Result<Self> {
        let cavity = Self {
            signal: signal.unwrap_or(Mirror::TRANSPARENT),
            idler: idler.unwrap_or(Mirror::TRANSPARENT),
            resonant_s: signal.is_some(),
            resonant_i: idler.is_some(),
            topology,
        };
        cavity.validate()?;
        Ok(cavity)
    }

    /// Lossless mirrors of equal reflectivity on the resonant modes.
    pub fn lossless(configuration: Configuration, r2_mag: f64, topology: Topology) -> Result<Self> {
        let m = Mirror::lossless(r2_mag)?;
        let (s, i) = match configuration {
            Configuration::None => (None, None),
            Configuration::Cs => (Some(m), None),
            Configuration::Ci => (None, Some(m)),
            Configuration::Csi => (Some(m), Some(m)),
        };
        Self::new(s, i, topology)
    }

    pub fn validate(&self) -> Result<()> {
        for (mode, m, resonant) in [
            ("signal", &self.signal, self.resonant_s),
            ("idler", &self.idler, self.resonant_i),
        ] {
            m.validate(mode)?;
            if !resonant && (m.r2_mag != 0.0 || m.t2_mag != 1.0) {
                return Err(Error::Contract(format!(
                    "{mode} is not resonant but has r2 = {}, t2 = {} (must be 0 and 1)",
                    m.r2_mag, m.t2_mag
                )));
            }
            if self.topology == Topology::Ring && m.delta1 != 0.0 {
                return Err(Error::Contract(format!(
                    "{mode}: a ring cavity has no input mirror, delta1 must be 0"
                )));
            }
        }
        Ok(())
    }

    pub fn mirror(&self, mode: Mode) -> &Mirror {
        match mode {
            Mode::Signal => &self.signal,
            Mode::Idler => &self.idler,
        }
    }

    pub fn is_resonant(&self, mode: Mode) -> bool {
        match mode {
            Mode::Signal => self.resonant_s,
            Mode::Idler => self.resonant_i,
        }
    }

    pub fn configuration(&self) -> Configuration {
        match (self.resonant_s, self.resonant_i) {
            (false, false) => Configuration::None,
            (true, false) => Configuration::Cs,
            (false, true) => Configuration::Ci,
            (true, true) => Configuration::Csi,
        }
    }

    /// Sets δ₁ = 0 and δ₂ so that the resonant modes peak at the given frequencies.
    pub fn tuned(mut self, fiber: &Fiber, omega_s: f64, omega_i: f64) -> Result<Self> {
        if self.resonant_s {
            let offset = resonance_phase_offset(omega_s, fiber, self.topology)?;
            self.signal = self.signal.with_phases(0.0, offset);
        }
        if self.resonant_i {
            let offset = resonance_phase_offset(omega_i, fiber, self.topology)?;
            self.idler = self.idler.with_phases(0.0, offset);
        }
        Ok(self)
    }

    /// The same cavity with both mirrors replaced by transparent ones.
    pub fn without_mirrors(&self) -> Self {
        Self {
            topology: self.topology,
            ..Self::none()
        }
    }
}

/// Coefficient of finesse 4r/(1−r)².
pub fn finesse_coefficient(r2_mag: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r2_mag) {
        return Err(Error::domain("r2", r2_mag, "[0, 1)"));
    }
    Ok(4.0 * r2_mag / (1.0 - r2_mag).powi(2))
}

/// Round-trip phase Δ = 2k(ω)·L_eff + δ₁ + δ₂.
pub fn round_trip_phase(omega: f64, mode: Mode, fiber: &Fiber, cavity: &CavitySpec) -> Result<f64> {
    let m = cavity.mirror(mode);
    let l = cavity.topology.effective_length(fiber.length());
    Ok(2.0 * fiber.k(omega)? * l + m.delta1 + m.delta2)
}

/// Airy intensity factor 𝒜_μ(ω); identically 1 for a non-resonant mode.
pub fn airy(omega: f64, mode: Mode, fiber: &Fiber, cavity: &CavitySpec) -> Result<f64> {
    if !cavity.is_resonant(mode) {
        return Ok(1.0);
    }
    let m = cavity.mirror(mode);
    let s = (0.5 * round_trip_phase(omega, mode, fiber, cavity)?).sin();
    Ok(m.peak() / (1.0 + m.finesse() * s * s))
}

/// Complex cavity amplitude A_μ(ω) = t₂/(1 − |r₂|e^{iΔ}); 1 for a non-resonant mode.
pub fn cavity_amplitude(omega: f64, mode: Mode, fiber: &Fiber, cavity: &CavitySpec) -> Result<Complex64> {
    if !cavity.is_resonant(mode) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let m = cavity.mirror(mode);
    let delta = round_trip_phase(omega, mode, fiber, cavity)?;
    Ok(m.t2_mag / (1.0 - m.r2_mag * Complex64::from_polar(1.0, delta)))
}

/// δ₁ + δ₂ in [0, 2π) placing a resonance at `omega_target`.
pub fn resonance_phase_offset(omega_target: f64, fiber: &Fiber, topology: Topology) -> Result<f64> {
    let beta = fiber.k(omega_target)? * topology.effective_length(fiber.length());
    let offset = (-2.0 * beta).rem_euclid(TAU);
    Ok(if offset >= TAU { 0.0 } else { offset })
}

/// Free spectral range Δω = πc/(L_eff·n_eff(ω₀)).
pub fn mode_spacing(fiber: &Fiber, topology: Topology, center_omega: f64) -> Result<f64> {
    let l = topology.effective_length(fiber.length());
    Ok(PI * SPEED_OF_LIGHT / (l * fiber.n_eff(center_omega)?))
}

/// Actual distance between adjacent resonances near ω₀, π/(L_eff·k′(ω₀)).
///
/// Differs from [`mode_spacing`] by the ratio of group to phase index; a
/// filter this wide holds exactly one cavity mode.
pub fn resonance_spacing(fiber: &Fiber, topology: Topology, center_omega: f64) -> Result<f64> {
    let l = topology.effective_length(fiber.length());
    Ok(PI / (l * fiber.k_prime(center_omega)?))
}

/// Resonance FWHM δω = 2Δω/(π√𝒻).
pub fn mode_width(fiber: &Fiber, cavity: &CavitySpec, mode: Mode, center_omega: f64) -> Result<f64> {
    let finesse = cavity.mirror(mode).finesse();
    if !cavity.is_resonant(mode) || finesse == 0.0 {
        return Err(Error::domain("finesse", finesse, "mode has no cavity width (non-resonant)"));
    }
    Ok(mode_width_from(mode_spacing(fiber, cavity.topology, center_omega)?, finesse))
}

/// δω = 2Δω/(π√𝒻).
pub fn mode_width_from(mode_spacing: f64, finesse: f64) -> f64 {
    2.0 * mode_spacing / (PI * finesse.sqrt())
}

/// Rectangular band-pass filters on both photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub center_s: f64,
    pub center_i: f64,
    /// Full widths (rad/s).
    pub width_s: f64,
    pub width_i: f64,
}

impl FilterSpec {
    pub fn new(center_s: f64, center_i: f64, width_s: f64, width_i: f64) -> Result<Self> {
        if !(width_s > 0.0) || !(width_i > 0.0) {
            return Err(Error::Contract(format!(
                "filter widths must be positive, got {width_s:e}, {width_i:e}"
            )));
        }
        Ok(Self {
            center_s,
            center_i,
            width_s,
            width_i,
        })
    }

    /// Windows `modes` resonances wide on each photon, centred on
    /// (`center_s`, `center_i`). `modes = 1` keeps a single cavity mode.
    pub fn around_modes(
        fiber: &Fiber,
        topology: Topology,
        center_s: f64,
        center_i: f64,
        modes: u32,
    ) -> Result<Self> {
        let n = f64::from(modes);
        Self::new(
            center_s,
            center_i,
            n * resonance_spacing(fiber, topology, center_s)?,
            n * resonance_spacing(fiber, topology, center_i)?,
        )
    }

    pub fn passes(&self, omega_s: f64, omega_i: f64) -> bool {
        (omega_s - self.center_s).abs() <= 0.5 * self.width_s
            && (omega_i - self.center_i).abs() <= 0.5 * self.width_i
    }

    pub fn signal_band(&self) -> (f64, f64) {
        (self.center_s - 0.5 * self.width_s, self.center_s + 0.5 * self.width_s)
    }

    pub fn idler_band(&self) -> (f64, f64) {
        (self.center_i - 0.5 * self.width_i, self.center_i + 0.5 * self.width_i)
    }
}

/// Node-doubling diagnostic of the pump-frequency quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureCheck {
    pub nodes: usize,
    pub half_width_sigmas: f64,
    /// Largest change, relative to the largest |F| probed, when the node count is doubled.
    pub relative_change: f64,
    pub converged: bool,
}

/// Node-doubling threshold for F.
pub const JSA_TOLERANCE: f64 = 1e-8;

/// Compares F with `quadrature` and with doubled nodes at the given points.
pub fn check_jsa_quadrature(
    fiber: &Fiber,
    pump: &PumpSpec,
    quadrature: JsaQuadrature,
    points: &[(f64, f64)],
) -> Result<QuadratureCheck> {
    let coarse = JsaEvaluator::new(fiber, pump, quadrature)?;
    let fine = JsaEvaluator::new(fiber, pump, quadrature.doubled())?;
    let mut scale = 0.0f64;
    let mut diff = 0.0f64;
    for &(ws, wi) in points {
        let a = coarse.eval(ws, wi)?;
        let b = fine.eval(ws, wi)?;
        scale = scale.max(b.norm());
        diff = diff.max((a - b).norm());
    }
    let relative_change = if diff == 0.0 { 0.0 } else { diff / scale };
    Ok(QuadratureCheck {
        nodes: quadrature.nodes,
        half_width_sigmas: quadrature.half_width,
        relative_change,
        converged: relative_change <= JSA_TOLERANCE,
    })
}

/// A spectral grid with the cavity configuration and quadrature diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralOutput<T> {
    pub grid: Grid<T>,
    pub configuration: Configuration,
    pub filtered: bool,
    pub quadrature: QuadratureCheck,
}

fn probe_points(axis_s: &Axis, axis_i: &Axis) -> Vec<(f64, f64)> {
    let pick = |a: &Axis, f: f64| a.value(((a.len() - 1) as f64 * f).round() as usize);
    let mut pts = Vec::new();
    for fs in [0.25, 0.5, 0.75] {
        for fi in [0.25, 0.5, 0.75] {
            pts.push((pick(axis_s, fs), pick(axis_i, fi)));
        }
    }
    pts
}

fn check_filter(axis_s: &Axis, axis_i: &Axis, filter: Option<&FilterSpec>) -> Result<()> {
    if let Some(f) = filter {
        let (s0, s1) = f.signal_band();
        let (i0, i1) = f.idler_band();
        let tol_s = 0.5 * axis_s.step();
        let tol_i = 0.5 * axis_i.step();
        if s0 < axis_s.start() - tol_s
            || s1 > axis_s.stop() + tol_s
            || i0 < axis_i.start() - tol_i
            || i1 > axis_i.stop() + tol_i
        {
            return Err(Error::Contract(format!(
                "filter window [{s0:e}, {s1:e}] x [{i0:e}, {i1:e}] exceeds the grid axes"
            )));
        }
    }
    Ok(())
}

fn evaluate_grid<T: Send + Clone + Default>(
    axis_s: Axis,
    axis_i: Axis,
    filter: Option<&FilterSpec>,
    point: impl Fn(usize, usize, f64, f64) -> Result<T> + Sync,
) -> Result<Grid<T>> {
    let rows: Vec<Vec<T>> = (0..axis_s.len())
        .into_par_iter()
        .map(|i| {
            let ws = axis_s.value(i);
            (0..axis_i.len())
                .map(|j| {
                    let wi = axis_i.value(j);
                    if filter.is_some_and(|f| !f.passes(ws, wi)) {
                        Ok(T::default())
                    } else {
                        point(i, j, ws, wi)
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let values = Array2::from_shape_fn((axis_s.len(), axis_i.len()), |(i, j)| rows[i][j].clone());
    Grid::new(axis_s, axis_i, values)
}

/// Cavity-free amplitude F on a grid (masked by the filter if given).
pub fn jsa_no_cavity_grid(
    axis_s: Axis,
    axis_i: Axis,
    fiber: &Fiber,
    pump: &PumpSpec,
    filter: Option<&FilterSpec>,
    quadrature: JsaQuadrature,
) -> Result<SpectralOutput<Complex64>> {
    jsa(axis_s, axis_i, fiber, pump, &CavitySpec::none(), filter, quadrature)
}

/// Cavity-modified amplitude G_si = F·A_s·A_i on a grid.
pub fn jsa(
    axis_s: Axis,
    axis_i: Axis,
    fiber: &Fiber,
    pump: &PumpSpec,
    cavity: &CavitySpec,
    filter: Option<&FilterSpec>,
    quadrature: JsaQuadrature,
) -> Result<SpectralOutput<Complex64>> {
    cavity.validate()?;
    check_filter(&axis_s, &axis_i, filter)?;
    let eval = JsaEvaluator::new(fiber, pump, quadrature)?;
    let a_s = axis_s
        .values()
        .iter()
        .map(|&w| cavity_amplitude(w, Mode::Signal, fiber, cavity))
        .collect::<Result<Vec<_>>>()?;
    let a_i = axis_i
        .values()
        .iter()
        .map(|&w| cavity_amplitude(w, Mode::Idler, fiber, cavity))
        .collect::<Result<Vec<_>>>()?;
    let grid: AmplitudeGrid = evaluate_grid(axis_s, axis_i, filter, |i, j, ws, wi| {
        Ok(eval.eval(ws, wi)? * a_s[i] * a_i[j])
    })?;
    Ok(SpectralOutput {
        grid,
        configuration: cavity.configuration(),
        filtered: filter.is_some(),
        quadrature: check_jsa_quadrature(fiber, pump, quadrature, &probe_points(&axis_s, &axis_i))?,
    })
}

/// Joint spectral intensity S = |F|²·𝒜_s·𝒜_i on a grid.
pub fn jsi(
    axis_s: Axis,
    axis_i: Axis,
    fiber: &Fiber,
    pump: &PumpSpec,
    cavity: &CavitySpec,
    filter: Option<&FilterSpec>,
    quadrature: JsaQuadrature,
) -> Result<SpectralOutput<f64>> {
    cavity.validate()?;
    check_filter(&axis_s, &axis_i, filter)?;
    let eval = JsaEvaluator::new(fiber, pump, quadrature)?;
    let airy_s = axis_s
        .values()
        .iter()
        .map(|&w| airy(w, Mode::Signal, fiber, cavity))
        .collect::<Result<Vec<_>>>()?;
    let airy_i = axis_i
        .values()
        .iter()
        .map(|&w| airy(w, Mode::Idler, fiber, cavity))
        .collect::<Result<Vec<_>>>()?;
    let grid: IntensityGrid = evaluate_grid(axis_s, axis_i, filter, |i, j, ws, wi| {
        Ok(eval.eval(ws, wi)?.norm_sqr() * airy_s[i] * airy_i[j])
    })?;
    Ok(SpectralOutput {
        grid,
        configuration: cavity.configuration(),
        filtered: filter.is_some(),
        quadrature: check_jsa_quadrature(fiber, pump, quadrature, &probe_points(&axis_s, &axis_i))?,
    })
}

/// The cavity's Airy pattern 𝒜_s(ω_s)·𝒜_i(ω_i) on a grid.
pub fn airy_grid(axis_s: Axis, axis_i: Axis, fiber: &Fiber, cavity: &CavitySpec) -> Result<IntensityGrid> {
    let a_s = axis_s
        .values()
        .iter()
        .map(|&w| airy(w, Mode::Signal, fiber, cavity))
        .collect::<Result<Vec<_>>>()?;
    let a_i = axis_i
        .values()
        .iter()
        .map(|&w| airy(w, Mode::Idler, fiber, cavity))
        .collect::<Result<Vec<_>>>()?;
    let values = Array2::from_shape_fn((axis_s.len(), axis_i.len()), |(i, j)| a_s[i] * a_i[j]);
    Grid::new(axis_s, axis_i, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::omega_from_wavelength;
    use crate::dispersion::{FiberSpec, FrozenIndex};
    use std::sync::Arc;

    fn fiber() -> Fiber {
        Fiber::tabulated(FiberSpec::new(0.68e-6, 0.5, 0.01, 0.0).unwrap()).unwrap()
    }

    fn pump() -> PumpSpec {
        PumpSpec::new(omega_from_wavelength(1.064e-6), 8e10, 0.0, 0.0, 1e6).unwrap()
    }

    #[test]
    fn envelope_convention() {
        let p = pump();
        assert_eq!(pump_envelope(p.omega0, &p).re, 1.0);
        let e = pump_envelope(p.omega0 + p.sigma, &p).re;
        assert!((e - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(pump_envelope(p.omega0 + 3e10, &p), pump_envelope(p.omega0 - 3e10, &p));
        assert!((p.sigma_i() - (2.0 * LN_2).sqrt() * p.sigma).abs() == 0.0);
    }

    #[test]
    fn pulse_duration_matches_worked_example() {
        let tp = pulse_duration(0.164e9);
        assert!((tp - 16.9e-9).abs() < 0.05e-9, "{tp}");
        let p = PumpSpec::pulsed(1.77e15, 0.164e9, 0.3, 1e5).unwrap();
        assert!((p.peak_power - 0.3 / (1e5 * tp)).abs() < 1e-12);
    }

    #[test]
    fn phase_mismatch_identities() {
        let f = fiber();
        let mut p = pump();
        let w0 = p.omega0;
        assert_eq!(phase_mismatch(w0, w0, w0, &f, &p).unwrap(), 0.0);
        let (ws, wi, w) = (w0 * 1.2, w0 * 0.85, w0 * 1.01);
        assert_eq!(
            phase_mismatch(ws, wi, w, &f, &p).unwrap(),
            phase_mismatch(wi, ws, w, &f, &p).unwrap()
        );
        let fiber_g = f.with_length(0.01).unwrap();
        let spec = fiber_g.spec().with_gamma(0.5, 0.5);
        let fg = Fiber::tabulated(spec).unwrap();
        p.peak_power = 1.0;
        assert_eq!(phase_mismatch(w0, w0, w0, &fg, &p).unwrap(), -1.0);
    }

    #[test]
    fn finesse_values() {
        assert!((finesse_coefficient(0.8).unwrap() - 80.0).abs() < 1e-12);
        assert_eq!(finesse_coefficient(0.0).unwrap(), 0.0);
        assert!(finesse_coefficient(1.0).is_err());
    }

    #[test]
    fn airy_extremes_for_lossless_mirror() {
        let f = fiber();
        let w = omega_from_wavelength(0.852e-6);
        let cav = CavitySpec::lossless(Configuration::Cs, 0.8, Topology::Linear)
            .unwrap()
            .tuned(&f, w, w)
            .unwrap();
        let peak = airy(w, Mode::Signal, &f, &cav).unwrap();
        assert!((peak - 9.0).abs() < 1e-12 * 9.0);
        assert_eq!(airy(w, Mode::Idler, &f, &cav).unwrap(), 1.0);
        let dw = mode_spacing(&f, Topology::Linear, w).unwrap();
        // Half a phase-index spacing advances the round-trip phase by π·n_g/n,
        // not π, so the value sits slightly above the true minimum 1/9.
        let trough = airy(w + 0.5 * dw, Mode::Signal, &f, &cav).unwrap();
        let n_ratio = f.k_prime(w).unwrap() * SPEED_OF_LIGHT / f.n_eff(w).unwrap();
        let predicted = 9.0 / (1.0 + 80.0 * (0.5 * PI * n_ratio).sin().powi(2));
        assert!(((trough - predicted) / predicted).abs() < 1e-3, "{trough} vs {predicted}");
        assert!(trough >= 1.0 / 9.0 * (1.0 - 1e-12));
    }

    #[test]
    fn half_spacing_is_antiresonance_for_constant_index() {
        let spec = FiberSpec::new(0.68e-6, 0.5, 0.01, 0.0).unwrap();
        let f = Fiber::with_model(spec, Arc::new(FrozenIndex { n: 1.4 })).unwrap();
        let w = omega_from_wavelength(0.852e-6);
        let cav = CavitySpec::lossless(Configuration::Cs, 0.8, Topology::Linear)
            .unwrap()
            .tuned(&f, w, w)
            .unwrap();
        let dw = mode_spacing(&f, Topology::Linear, w).unwrap();
        let trough = airy(w + 0.5 * dw, Mode::Signal, &f, &cav).unwrap();
        assert!((trough - 1.0 / 9.0).abs() < 1e-9 / 9.0, "{trough}");
    }

    #[test]
    fn amplitude_and_intensity_agree() {
        let f = fiber();
        let w = omega_from_wavelength(0.852e-6);
        let cav = CavitySpec::lossless(Configuration::Csi, 0.9, Topology::Ring)
            .unwrap()
            .tuned(&f, w, w)
            .unwrap();
        for d in [0.0, 1e9, 3.3e9, 2e10] {
            let a = cavity_amplitude(w + d, Mode::Signal, &f, &cav).unwrap().norm_sqr();
            let b = airy(w + d, Mode::Signal, &f, &cav).unwrap();
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn frozen_index_airy_is_periodic() {
        let spec = FiberSpec::new(0.68e-6, 0.5, 0.01, 0.0).unwrap();
        let f = Fiber::with_model(spec, Arc::new(FrozenIndex { n: 1.4 })).unwrap();
        let w = omega_from_wavelength(0.852e-6);
        let cav = CavitySpec::lossless(Configuration::Cs, 0.8, Topology::Linear)
            .unwrap()
            .tuned(&f, w, w)
            .unwrap();
        let dw = mode_spacing(&f, Topology::Linear, w).unwrap();
        for x in [0.1, 0.37, 0.5] {
            let a = airy(w + x * dw, Mode::Signal, &f, &cav).unwrap();
            let b = airy(w + (x + 1.0) * dw, Mode::Signal, &f, &cav).unwrap();
            assert!(((a - b) / a).abs() < 1e-9);
        }
    }

    #[test]
    fn mode_spacing_and_width_scaling() {
        let f = fiber();
        let w = omega_from_wavelength(0.852e-6);
        let d1 = mode_spacing(&f, Topology::Linear, w).unwrap();
        let d2 = mode_spacing(&f.with_length(0.02).unwrap(), Topology::Linear, w).unwrap();
        assert!((d1 / d2 - 2.0).abs() < 1e-14);
        let n = f.n_eff(w).unwrap();
        assert!((d1 - PI * SPEED_OF_LIGHT / (0.01 * n)).abs() < 1e-6);
        let cav = CavitySpec::lossless(Configuration::Cs, 0.8, Topology::Linear).unwrap();
        let width = mode_width(&f, &cav, Mode::Signal, w).unwrap();
        assert!((width / d1 - 2.0 / (PI * 80f64.sqrt())).abs() < 1e-14);
        assert!(mode_width(&f, &cav, Mode::Idler, w).is_err());
    }

    #[test]
    fn jsa_symmetric_and_converged() {
        let f = fiber();
        let p = pump();
        let ws = omega_from_wavelength(0.852e-6);
        let wi = 2.0 * p.omega0 - ws + 2e10;
        let a = jsa_no_cavity(ws, wi, &f, &p).unwrap();
        let b = jsa_no_cavity(wi, ws, &f, &p).unwrap();
        assert_eq!(a, b);
        let check = check_jsa_quadrature(&f, &p, JsaQuadrature::default(), &[(ws, wi)]).unwrap();
        assert!(check.converged, "{check:?}");
    }

    #[test]
    fn cavity_validation() {
        let mut c = CavitySpec::lossless(Configuration::Cs, 0.8, Topology::Linear).unwrap();
        c.idler.r2_mag = 0.1;
        assert!(c.validate().is_err());
        let mut r = CavitySpec::lossless(Configuration::Csi, 0.8, Topology::Ring).unwrap();
        r.signal.delta1 = 0.3;
        assert!(r.validate().is_err());
    }
}
