//! Step-index fiber dispersion: material index, effective index of the
//! fundamental mode, propagation constant and group slowness.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::constants::{
    omega_from_wavelength, BESSEL_J0_FIRST_ZERO, SELLMEIER_B, SELLMEIER_C,
    SELLMEIER_MAX_WAVELENGTH, SELLMEIER_MIN_WAVELENGTH, SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::numeric::{bisect, ChebyshevTable};
use crate::special::{j0_over_j1, k0_over_k1};

/// Below this normalized frequency the fundamental mode is treated as unguided.
pub const MIN_V_NUMBER: f64 = 0.5;

/// Relative finite-difference step used for k′.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// How the air-filled cladding index is derived from the silica index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CladdingRule {
    /// n_clad = f·1 + (1 − f)·n_silica
    #[default]
    LinearIndex,
    /// n_clad = sqrt(f·1 + (1 − f)·n_silica²)
    Permittivity,
}

/// Eigenvalue equation solved for the fundamental mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeEquation {
    /// Exact HE₁₁ equation of the step-index fiber.
    #[default]
    Vector,
    /// Weak-guidance LP₀₁ equation.
    Scalar,
}

/// Step-index model of the fiber plus its length and nonlinear coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    /// Core radius (m).
    pub core_radius: f64,
    /// Air-fill fraction of the cladding, in [0, 1].
    pub air_fill_fraction: f64,
    /// Cavity (fiber) length L (m).
    pub length: f64,
    /// Self/cross-phase nonlinear coefficient γ (W⁻¹·m⁻¹).
    pub gamma: f64,
    /// SFWM nonlinear coefficient γ_fwm (W⁻¹·m⁻¹).
    pub gamma_fwm: f64,
    pub cladding: CladdingRule,
    pub mode_equation: ModeEquation,
}

impl FiberSpec {
    /// Fiber with γ_fwm = γ and the default cladding rule and mode equation.
    pub fn new(core_radius: f64, air_fill_fraction: f64, length: f64, gamma: f64) -> Result<Self> {
        let spec = Self {
            core_radius,
            air_fill_fraction,
            length,
            gamma,
            gamma_fwm: gamma,
            cladding: CladdingRule::default(),
            mode_equation: ModeEquation::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.core_radius > 0.0 && self.core_radius.is_finite()) {
            return Err(Error::domain("core_radius", self.core_radius, "(0, inf) m"));
        }
        if !(0.0..=1.0).contains(&self.air_fill_fraction) {
            return Err(Error::domain(
                "air_fill_fraction",
                self.air_fill_fraction,
                "[0, 1]",
            ));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::domain("length", self.length, "(0, inf) m"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain("gamma", self.gamma, "[0, inf) 1/(W m)"));
        }
        if !(self.gamma_fwm >= 0.0 && self.gamma_fwm.is_finite()) {
            return Err(Error::domain("gamma_fwm", self.gamma_fwm, "[0, inf) 1/(W m)"));
        }
        Ok(())
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    pub fn with_gamma(mut self, gamma: f64, gamma_fwm: f64) -> Self {
        self.gamma = gamma;
        self.gamma_fwm = gamma_fwm;
        self
    }

    pub fn with_model(mut self, cladding: CladdingRule, mode_equation: ModeEquation) -> Self {
        self.cladding = cladding;
        self.mode_equation = mode_equation;
        self
    }
}

/// One evaluation of the dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub omega: f64,
    pub n_eff: f64,
    pub k: f64,
    pub k_prime: f64,
}

/// Refractive index of fused silica at a vacuum wavelength (m).
pub fn silica_index(wavelength: f64) -> Result<f64> {
    if !(SELLMEIER_MIN_WAVELENGTH..=SELLMEIER_MAX_WAVELENGTH).contains(&wavelength) {
        return Err(Error::domain(
            "wavelength",
            wavelength,
            format!("[{SELLMEIER_MIN_WAVELENGTH:e}, {SELLMEIER_MAX_WAVELENGTH:e}] m"),
        ));
    }
    let l2 = (wavelength * 1e6).powi(2);
    let sum: f64 = SELLMEIER_B
        .iter()
        .zip(SELLMEIER_C)
        .map(|(b, c)| b * l2 / (l2 - c * c))
        .sum();
    Ok((1.0 + sum).sqrt())
}

/// Cladding index for a silica index `n_silica` and air-fill fraction `f`.
pub fn cladding_index(n_silica: f64, air_fill_fraction: f64, rule: CladdingRule) -> f64 {
    let f = air_fill_fraction;
    match rule {
        CladdingRule::LinearIndex => f + (1.0 - f) * n_silica,
        CladdingRule::Permittivity => (f + (1.0 - f) * n_silica * n_silica).sqrt(),
    }
}

/// Core and cladding indices at `omega`.
pub fn core_and_cladding(omega: f64, fiber: &FiberSpec) -> Result<(f64, f64)> {
    let wavelength = crate::constants::wavelength_from_omega(omega);
    let n1 = silica_index(wavelength)?;
    Ok((n1, cladding_index(n1, fiber.air_fill_fraction, fiber.cladding)))
}

/// Normalized frequency V = k₀·a·sqrt(n₁² − n₂²).
pub fn v_number(omega: f64, fiber: &FiberSpec) -> Result<f64> {
    let (n1, n2) = core_and_cladding(omega, fiber)?;
    Ok(omega / SPEED_OF_LIGHT * fiber.core_radius * (n1 * n1 - n2 * n2).sqrt())
}

/// Angular-frequency window of the material model.
pub fn material_band() -> (f64, f64) {
    (
        omega_from_wavelength(SELLMEIER_MAX_WAVELENGTH),
        omega_from_wavelength(SELLMEIER_MIN_WAVELENGTH),
    )
}

/// Effective index of the fundamental mode.
pub fn effective_index(omega: f64, fiber: &FiberSpec) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::domain("omega", omega, "(0, inf) rad/s"));
    }
    let (n1, n2) = core_and_cladding(omega, fiber)?;
    let k0 = omega / SPEED_OF_LIGHT;
    let a = fiber.core_radius;
    let v = k0 * a * (n1 * n1 - n2 * n2).sqrt();
    if !(v > MIN_V_NUMBER) {
        return Err(Error::ModeCutoff {
            omega,
            reason: format!("V = {v:.4e} below {MIN_V_NUMBER}"),
        });
    }
    let upper = v.min(BESSEL_J0_FIRST_ZERO);
    let rho = (n2 / n1).powi(2);
    let g = |u: f64| -> f64 {
        let w = (v * v - u * u).sqrt();
        match fiber.mode_equation {
            ModeEquation::Scalar => u / j0_over_j1(u) - w / k0_over_k1(w),
            ModeEquation::Vector => {
                let (p, q) = (1.0 / (u * u), 1.0 / (w * w));
                let aj = j0_over_j1(u) / u - p;
                let bk = -k0_over_k1(w) / w - q;
                (aj + bk) * (aj + rho * bk) - (p + q) * (p + rho * q)
            }
        }
    };

    // The fundamental mode is the first sign change scanned from small u.
    let mut samples: Vec<f64> = (1..64).map(|j| upper * j as f64 / 64.0).collect();
    samples.extend((2..=15).map(|e| upper * (1.0 - 10f64.powi(-e))));
    let mut prev_u = samples[0];
    let mut prev_g = g(prev_u);
    let mut bracket = None;
    for &u in &samples[1..] {
        let gu = g(u);
        if prev_g.is_finite() && gu.is_finite() && prev_g.signum() != gu.signum() {
            bracket = Some((prev_u, u));
            break;
        }
        prev_u = u;
        prev_g = gu;
    }
    let (lo, hi) = bracket.ok_or_else(|| {
        Error::numerical(
            "effective_index",
            format!("no eigenvalue bracket on (0, {upper:.6}) at omega = {omega:e}, V = {v:.6}"),
        )
    })?;
    let u = bisect(g, lo, hi)?;
    let n_eff = (n1 * n1 - (u / (a * k0)).powi(2)).sqrt();
    Ok(n_eff)
}

/// Propagation constant k = n_eff·ω/c.
pub fn wavenumber(omega: f64, fiber: &FiberSpec) -> Result<f64> {
    Ok(effective_index(omega, fiber)? * omega / SPEED_OF_LIGHT)
}

/// Finite-difference stencil for k′.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    ThreePoint,
    FivePoint,
}

/// k′ = dk/dω with a chosen stencil and relative step.
pub fn group_slowness_with(
    omega: f64,
    fiber: &FiberSpec,
    stencil: Stencil,
    relative_step: f64,
) -> Result<f64> {
    let h = relative_step * omega;
    let k = |x: f64| {
        wavenumber(x, fiber).map_err(|e| match e {
            Error::ModeCutoff { .. } | Error::Domain { .. } => Error::numerical(
                "group_slowness",
                format!("stencil point {x:e} rad/s too close to the guided-band edge: {e}"),
            ),
            other => other,
        })
    };
    match stencil {
        Stencil::ThreePoint => Ok((k(omega + h)? - k(omega - h)?) / (2.0 * h)),
        Stencil::FivePoint => {
            let (m2, m1, p1, p2) = (k(omega - 2.0 * h)?, k(omega - h)?, k(omega + h)?, k(omega + 2.0 * h)?);
            Ok((m2 - p2 + 8.0 * (p1 - m1)) / (12.0 * h))
        }
    }
}

/// Group slowness k′ = dk/dω (five-point stencil, step 1e-6·ω).
pub fn group_slowness(omega: f64, fiber: &FiberSpec) -> Result<f64> {
    group_slowness_with(omega, fiber, Stencil::FivePoint, DEFAULT_FD_STEP)
}

/// A dispersion relation k(ω) with group slowness.
pub trait Dispersion: Send + Sync {
    fn effective_index(&self, omega: f64) -> Result<f64>;

    fn group_slowness(&self, omega: f64) -> Result<f64>;

    fn wavenumber(&self, omega: f64) -> Result<f64> {
        Ok(self.effective_index(omega)? * omega / SPEED_OF_LIGHT)
    }

    /// Frequency window (rad/s) where the relation is defined.
    fn band(&self) -> (f64, f64);

    fn name(&self) -> &'static str;
}

impl Dispersion for FiberSpec {
    fn effective_index(&self, omega: f64) -> Result<f64> {
        effective_index(omega, self)
    }

    fn group_slowness(&self, omega: f64) -> Result<f64> {
        group_slowness(omega, self)
    }

    fn band(&self) -> (f64, f64) {
        material_band()
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}

/// Frequency-independent index. Cavity resonances become exactly periodic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenIndex {
    pub n: f64,
}

impl Dispersion for FrozenIndex {
    fn effective_index(&self, _omega: f64) -> Result<f64> {
        Ok(self.n)
    }

    fn group_slowness(&self, _omega: f64) -> Result<f64> {
        Ok(self.n / SPEED_OF_LIGHT)
    }

    fn band(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn name(&self) -> &'static str {
        "frozen"
    }
}

const TABLE_PANEL_RATIO: f64 = 1.02;
const TABLE_DEGREE: usize = 16;

/// Piecewise-Chebyshev interpolant of n_eff and k′ built lazily from the
/// exact solver. Each panel is computed once from fixed nodes, so results do
/// not depend on evaluation order or thread count.
pub struct DispersionTable {
    spec: FiberSpec,
    edges: Vec<f64>,
    log_lo: f64,
    log_step: f64,
    panels: Vec<OnceLock<std::result::Result<Panel, Error>>>,
}

struct Panel {
    n_eff: ChebyshevTable,
    k_prime: ChebyshevTable,
}

impl DispersionTable {
    pub fn new(spec: FiberSpec) -> Self {
        let (lo, hi) = material_band();
        let (lo, hi) = (lo * (1.0 + 1e-5), hi * (1.0 - 1e-5));
        let edges = ChebyshevTable::edges(lo, hi, TABLE_PANEL_RATIO);
        let count = edges.len() - 1;
        let log_step = (hi / lo).ln() / count as f64;
        Self {
            spec,
            log_lo: lo.ln(),
            log_step,
            panels: (0..count).map(|_| OnceLock::new()).collect(),
            edges,
        }
    }

    fn panel(&self, omega: f64) -> Result<&Panel> {
        let (lo, hi) = (self.edges[0], *self.edges.last().unwrap());
        if !(lo..=hi).contains(&omega) {
            return Err(Error::domain("omega", omega, format!("[{lo:e}, {hi:e}] rad/s")));
        }
        let count = self.panels.len();
        let mut i = (((omega.ln() - self.log_lo) / self.log_step).floor() as usize).min(count - 1);
        while i > 0 && omega < self.edges[i] {
            i -= 1;
        }
        while i + 1 < count && omega > self.edges[i + 1] {
            i += 1;
        }
        self.panels[i]
            .get_or_init(|| self.build_panel(i))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn build_panel(&self, i: usize) -> Result<Panel> {
        let (a, b) = (self.edges[i], self.edges[i + 1]);
        let nodes = ChebyshevTable::panel_nodes(a, b, TABLE_DEGREE);
        let mut n = Vec::with_capacity(nodes.len());
        let mut kp = Vec::with_capacity(nodes.len());
        for &x in &nodes {
            n.push(effective_index(x, &self.spec)?);
            kp.push(group_slowness(x, &self.spec)?);
        }
        let edges = vec![a, b];
        Ok(Panel {
            n_eff: ChebyshevTable::from_samples(edges.clone(), vec![n]),
            k_prime: ChebyshevTable::from_samples(edges, vec![kp]),
        })
    }
}

impl fmt::Debug for DispersionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let built = self.panels.iter().filter(|p| p.get().is_some()).count();
        f.debug_struct("DispersionTable")
            .field("spec", &self.spec)
            .field("panels", &self.panels.len())
            .field("built", &built)
            .finish()
    }
}

impl Dispersion for DispersionTable {
    fn effective_index(&self, omega: f64) -> Result<f64> {
        Ok(self.panel(omega)?.n_eff.eval(omega))
    }

    fn group_slowness(&self, omega: f64) -> Result<f64> {
        Ok(self.panel(omega)?.k_prime.eval(omega))
    }

    fn band(&self) -> (f64, f64) {
        (self.edges[0], *self.edges.last().unwrap())
    }

    fn name(&self) -> &'static str {
        "tabulated"
    }
}

/// A fiber together with the dispersion model used to evaluate it.
#[derive(Clone)]
pub struct Fiber {
    spec: FiberSpec,
    model: Arc<dyn Dispersion>,
}

impl Fiber {
    /// Every query runs the eigenvalue solver.
    pub fn exact(spec: FiberSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            model: Arc::new(spec),
        })
    }

    /// Queries go through a lazily built interpolation table of the exact model.
    pub fn tabulated(spec: FiberSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            model: Arc::new(DispersionTable::new(spec)),
        })
    }

    pub fn with_model(spec: FiberSpec, model: Arc<dyn Dispersion>) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, model })
    }

    pub fn spec(&self) -> &FiberSpec {
        &self.spec
    }

    pub fn model_name(&self) -> &'static str {
        self.model.name()
    }

    pub fn length(&self) -> f64 {
        self.spec.length
    }

    pub fn gamma(&self) -> f64 {
        self.spec.gamma
    }

    pub fn gamma_fwm(&self) -> f64 {
        self.spec.gamma_fwm
    }

    pub fn band(&self) -> (f64, f64) {
        self.model.band()
    }

    /// Same dispersion model, different length.
    pub fn with_length(&self, length: f64) -> Result<Self> {
        let spec = self.spec.with_length(length);
        spec.validate()?;
        Ok(Self {
            spec,
            model: Arc::clone(&self.model),
        })
    }

    pub fn n_eff(&self, omega: f64) -> Result<f64> {
        self.model.effective_index(omega)
    }

    pub fn k(&self, omega: f64) -> Result<f64> {
        self.model.wavenumber(omega)
    }

    pub fn k_prime(&self, omega: f64) -> Result<f64> {
        self.model.group_slowness(omega)
    }

    pub fn sample(&self, omega: f64) -> Result<DispersionSample> {
        let n_eff = self.n_eff(omega)?;
        Ok(DispersionSample {
            omega,
            n_eff,
            k: n_eff * omega / SPEED_OF_LIGHT,
            k_prime: self.k_prime(omega)?,
        })
    }
}

impl fmt::Debug for Fiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fiber")
            .field("spec", &self.spec)
            .field("model", &self.model.name())
            .finish()
    }
}
