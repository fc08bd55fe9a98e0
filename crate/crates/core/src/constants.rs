//! Physical constants and the fused-silica material model.

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Three-term Sellmeier fit for fused silica, wavelengths in
/// micrometres: n² − 1 = Σ Bᵢ λ² / (λ² − Cᵢ²).
pub const SELLMEIER_B: [f64; 3] = [0.696_166_3, 0.407_942_6, 0.897_479_4];
/// Resonance wavelengths Cᵢ (µm) paired with [`SELLMEIER_B`].
pub const SELLMEIER_C: [f64; 3] = [0.068_404_3, 0.116_241_4, 9.896_161];

/// Validity window of the Sellmeier fit (m).
pub const SELLMEIER_MIN_WAVELENGTH: f64 = 0.21e-6;
pub const SELLMEIER_MAX_WAVELENGTH: f64 = 6.7e-6;

/// Nonlinear refractive index of fused silica (m²/W), used only by the
/// optional effective-area estimate of γ.
pub const SILICA_N2: f64 = 2.6e-20;

/// First zero of J₀.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Angular frequency (rad/s) of light with vacuum wavelength `wavelength` (m).
pub fn omega_from_wavelength(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

/// Vacuum wavelength (m) of angular frequency `omega` (rad/s).
pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}
