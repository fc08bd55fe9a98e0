//! Joint temporal amplitude and intensity, time-sum/time-difference views,
//! temporal mode amplitudes and the closed-form Gaussian-mode JTI.

use std::f64::consts::{SQRT_2, TAU};

use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dispersion::Fiber;
use crate::error::{Error, Result};
use crate::grid::{AmplitudeGrid, Axis, Grid, IntensityGrid};
use crate::spectral::Topology;

/// Default zero-padding factor of [`jta_numeric`].
pub const DEFAULT_PAD_FACTOR: usize = 4;

/// Padded transform length: the next power of two ≥ `pad_factor · max(n₀, n₁)`.
pub fn padded_len(n0: usize, n1: usize, pad_factor: usize) -> usize {
    (pad_factor.max(1) * n0.max(n1)).next_power_of_two()
}

/// 2-D Fourier transform of a spectral amplitude grid,
/// f̃(t_s, t_i) = (1/2π) ∫∫ G(ω_s, ω_i) e^{−i(ν_s t_s + ν_i t_i)} dω_s dω_i,
/// with ν measured from each axis centre. Both axes are zero padded to a
/// common power-of-two length; the time axes are t_m = (m − N/2)·2π/(N·dω).
/// The discrete normalization makes Σ|f̃|²dt_s dt_i = Σ|G|²dω_s dω_i exactly.
pub fn jta_numeric(jsa: &AmplitudeGrid, pad_factor: usize) -> Result<AmplitudeGrid> {
    if pad_factor < 1 {
        return Err(Error::Contract("pad factor must be at least 1".into()));
    }
    let (n0, n1) = jsa.values.dim();
    let n = padded_len(n0, n1, pad_factor);
    let (d0, d1) = (jsa.axis_0.step(), jsa.axis_1.step());
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for ((i, j), v) in jsa.values.indexed_iter() {
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        buf[i * n + j] = v * sign;
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let transform_rows = |b: &mut Vec<Complex64>| {
        b.par_chunks_mut(n).for_each(|row| fft.process(row));
    };
    transform_rows(&mut buf);
    let mut buf = transpose(&buf, n);
    transform_rows(&mut buf);
    let buf = transpose(&buf, n);
    let mut data = Array2::from_shape_vec((n, n), buf)
        .map_err(|e| Error::numerical("jta_numeric", e.to_string()))?;

    // Undo the centring of the frequency samples at index (n−1)/2.
    let twist = |len: usize| -> Vec<Complex64> {
        let c = 0.5 * (len as f64 - 1.0);
        (0..n)
            .map(|m| Complex64::from_polar(1.0, TAU * c * (m as f64 - (n / 2) as f64) / n as f64))
            .collect()
    };
    let (p0, p1) = (twist(n0), twist(n1));
    let scale = d0 * d1 / TAU;
    for ((i, j), v) in data.indexed_iter_mut() {
        *v *= p0[i] * p1[j] * scale;
    }

    let dt0 = TAU / (n as f64 * d0);
    let dt1 = TAU / (n as f64 * d1);
    let half = (n / 2) as f64;
    Grid::new(
        Axis::from_step(-half * dt0, dt0, n)?,
        Axis::from_step(-half * dt1, dt1, n)?,
        data,
    )
}

fn transpose(buf: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = buf[i * n + j];
        }
    }
    out
}

/// Joint temporal intensity |f̃|².
pub fn jti_numeric(jsa: &AmplitudeGrid, pad_factor: usize) -> Result<IntensityGrid> {
    Ok(jta_numeric(jsa, pad_factor)?.intensity())
}

/// Cavity round-trip time T = 2·L_eff·k′(ω) (ring: circulation time L_r·k′).
pub fn round_trip_time(fiber: &Fiber, topology: Topology, omega: f64) -> Result<f64> {
    Ok(2.0 * topology.effective_length(fiber.length()) * fiber.k_prime(omega)?)
}

fn bilinear(grid: &IntensityGrid, x: f64, y: f64) -> f64 {
    let fx = (x - grid.axis_0.start()) / grid.axis_0.step();
    let fy = (y - grid.axis_1.start()) / grid.axis_1.step();
    let (n0, n1) = grid.values.dim();
    if fx < 0.0 || fy < 0.0 || fx > (n0 - 1) as f64 || fy > (n1 - 1) as f64 {
        return 0.0;
    }
    let i = (fx.floor() as usize).min(n0 - 2);
    let j = (fy.floor() as usize).min(n1 - 2);
    let (u, v) = (fx - i as f64, fy - j as f64);
    let g = &grid.values;
    (1.0 - u) * (1.0 - v) * g[[i, j]]
        + u * (1.0 - v) * g[[i + 1, j]]
        + (1.0 - u) * v * g[[i, j + 1]]
        + u * v * g[[i + 1, j + 1]]
}

/// Resamples a square JTI onto t_± = (t_s ± t_i)/√2 (axis 0: t₊, axis 1: t₋)
/// by bilinear interpolation, keeping the input step and extent.
pub fn rotate_to_sum_diff(jti: &IntensityGrid) -> Result<IntensityGrid> {
    let (a0, a1) = (jti.axis_0, jti.axis_1);
    if a0.len() != a1.len() || (a0.step() - a1.step()).abs() > 1e-12 * a0.step() {
        return Err(Error::Contract(
            "rotation needs a square grid with equal steps on both axes".into(),
        ));
    }
    let axis = Axis::from_step(0.5 * (a0.start() + a1.start()), a0.step(), a0.len())?;
    let rows: Vec<Vec<f64>> = (0..axis.len())
        .into_par_iter()
        .map(|p| {
            let tp = axis.value(p);
            (0..axis.len())
                .map(|m| {
                    let tm = axis.value(m);
                    bilinear(jti, (tp + tm) / SQRT_2, (tp - tm) / SQRT_2)
                })
                .collect()
        })
        .collect();
    let values = Array2::from_shape_fn((axis.len(), axis.len()), |(i, j)| rows[i][j]);
    Grid::new(axis, axis, values)
}

/// Time-difference marginal on the t_s − t_i axis, normalized to unit peak.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    /// t_s − t_i (s).
    pub time_difference: Vec<f64>,
    pub value: Vec<f64>,
}

impl Marginal {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_minus_s,value\n");
        for (t, v) in self.time_difference.iter().zip(&self.value) {
            out.push_str(&format!("{},{}\n", crate::grid::fmt_f64(*t), crate::grid::fmt_f64(*v)));
        }
        out
    }

    /// Local maxima above `threshold` (relative to the unit peak), as times.
    pub fn peaks(&self, threshold: f64) -> Vec<f64> {
        let v = &self.value;
        (1..v.len().saturating_sub(1))
            .filter(|&k| v[k] >= threshold && v[k] > v[k - 1] && v[k] >= v[k + 1])
            .map(|k| self.time_difference[k])
            .collect()
    }
}

/// Integrates a rotated JTI (axis 0: t₊, axis 1: t₋) over t₊ by the trapezoid
/// rule. The result is reported against t_s − t_i = √2·t₋.
pub fn time_difference_marginal(jti_rot: &IntensityGrid) -> Marginal {
    let (np, nm) = jti_rot.values.dim();
    let dp = jti_rot.axis_0.step();
    let mut value: Vec<f64> = (0..nm)
        .map(|m| {
            let col = jti_rot.values.column(m);
            let inner: f64 = col.iter().sum();
            dp * (inner - 0.5 * (col[0] + col[np - 1]))
        })
        .collect();
    let peak = value.iter().copied().fold(0.0f64, f64::max);
    if peak > 0.0 {
        value.iter_mut().for_each(|v| *v /= peak);
    }
    Marginal {
        time_difference: (0..nm).map(|m| SQRT_2 * jti_rot.axis_1.value(m)).collect(),
        value,
    }
}

/// Weights |C_ij|² of the temporal emission modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAmplitudeMatrix {
    /// `values[[i, j]]`: signal in round trip i, idler in round trip j.
    pub values: Array2<f64>,
    pub round_trip_time: f64,
    /// (t_s, t_i) of the centre of cell (0, 0).
    pub origin: (f64, f64),
}

impl ModeAmplitudeMatrix {
    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Largest share of the mass held by row 0 or column 0.
    pub fn single_row_fraction(&self) -> f64 {
        let total = self.total();
        let row: f64 = self.values.row(0).sum();
        let col: f64 = self.values.column(0).sum();
        row.max(col) / total
    }

    /// Entries grouped by i + j.
    pub fn anti_diagonal(&self, order: usize) -> Vec<f64> {
        let (n0, n1) = self.values.dim();
        (0..=order)
            .filter(|&i| i < n0 && order - i < n1)
            .map(|i| self.values[[i, order - i]])
            .collect()
    }

    pub fn count_above(&self, relative: f64) -> usize {
        let max = self.values.iter().copied().fold(0.0f64, f64::max);
        self.values.iter().filter(|&&v| v >= relative * max).count()
    }
}

/// Integrates the JTI over cells of side T centred at
/// (t_s0 + iT, t_i0 + jT), i, j ≥ 0, where (t_s0, t_i0) is the global maximum.
/// The matrix is truncated where every entry beyond is below `cutoff` times the
/// largest entry.
pub fn mode_amplitudes(jti: &IntensityGrid, round_trip_time: f64, cutoff: f64) -> Result<ModeAmplitudeMatrix> {
    if !(round_trip_time > 0.0) {
        return Err(Error::Contract(format!("round-trip time must be positive, got {round_trip_time:e}")));
    }
    let (a0, a1) = (jti.axis_0, jti.axis_1);
    let (i0, j0) = jti.argmax();
    let origin = (a0.value(i0), a1.value(j0));
    let t = round_trip_time;
    let cells_0 = ((a0.stop() - origin.0 + 0.5 * t) / t).floor().max(0.0) as usize;
    let cells_1 = ((a1.stop() - origin.1 + 0.5 * t) / t).floor().max(0.0) as usize;
    if cells_0 == 0 || cells_1 == 0 {
        return Err(Error::Contract(format!(
            "grid does not contain one full cell of side {t:e} s after the maximum"
        )));
    }
    let mut full = Array2::<f64>::zeros((cells_0, cells_1));
    let cell_area = a0.step() * a1.step();
    for ((i, j), &v) in jti.values.indexed_iter() {
        let ci = ((a0.value(i) - origin.0) / t + 0.5).floor();
        let cj = ((a1.value(j) - origin.1) / t + 0.5).floor();
        if ci >= 0.0 && cj >= 0.0 && (ci as usize) < cells_0 && (cj as usize) < cells_1 {
            full[[ci as usize, cj as usize]] += v * cell_area;
        }
    }
    let max = full.iter().copied().fold(0.0f64, f64::max);
    let keep = |axis: usize, len: usize| -> usize {
        (0..len)
            .rev()
            .find(|&k| full.index_axis(NdAxis(axis), k).iter().any(|&v| v >= cutoff * max))
            .map_or(1, |k| k + 1)
    };
    let (k0, k1) = (keep(0, cells_0), keep(1, cells_1));
    if k0 == cells_0 || k1 == cells_1 {
        let needed = (k0.max(k1) + 1) as f64 * t;
        return Err(Error::Contract(format!(
            "grid too small: cells above cutoff reach the grid edge; need at least {needed:e} s after the maximum on both axes"
        )));
    }
    Ok(ModeAmplitudeMatrix {
        values: full.slice(ndarray::s![..k0, ..k1]).to_owned(),
        round_trip_time: t,
        origin,
    })
}

/// Parameters of the closed-form JTI of Gaussian cavity modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormParams {
    /// Mode width δω (rad/s).
    pub delta_omega: f64,
    /// Mode spacing Δω (rad/s).
    pub mode_spacing: f64,
    /// Pump bandwidth σ (rad/s).
    pub sigma: f64,
    /// Filter half-width in modes.
    pub m: u32,
}

impl ClosedFormParams {
    pub fn new(delta_omega: f64, mode_spacing: f64, sigma: f64, m: u32) -> Result<Self> {
        for (name, v) in [("delta_omega", delta_omega), ("Delta_omega", mode_spacing), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "(0, inf) rad/s"));
            }
        }
        Ok(Self {
            delta_omega,
            mode_spacing,
            sigma,
            m,
        })
    }

    /// Correlation time τ_c = √2/δω.
    pub fn tau_c(&self) -> f64 {
        SQRT_2 / self.delta_omega
    }

    /// Time-sum width τ = τ_c·sqrt(δω² + σ²)/σ.
    pub fn tau(&self) -> f64 {
        self.tau_c() * self.delta_omega.hypot(self.sigma) / self.sigma
    }

    /// Approximate JSA: Gaussian modes at lΔω, mΔω (|l|, |m| ≤ M) under the pump band.
    pub fn jsa(&self, nu_s: f64, nu_i: f64) -> f64 {
        let m = self.m as i64;
        let mode = |nu: f64| -> f64 {
            (-m..=m)
                .map(|l| {
                    let x = (nu - l as f64 * self.mode_spacing) / self.delta_omega;
                    (-x * x).exp()
                })
                .sum()
        };
        let s = (nu_s + nu_i) / self.sigma;
        (-0.5 * s * s).exp() * mode(nu_s) * mode(nu_i)
    }
}

/// |Σ_{l=−M}^{M} e^{2ily}|² = sin²((2M+1)y)/sin²(y), finite everywhere.
fn dirichlet_squared(m: u32, y: f64) -> f64 {
    let d: f64 = 1.0 + 2.0 * (1..=m).map(|l| (2.0 * l as f64 * y).cos()).sum::<f64>();
    d * d
}

/// Closed-form JTI of the Gaussian-mode JSA, with the Dirichlet quotients
/// evaluated through their finite sums (so removable singularities take
/// their limits, (2M+1)²).
pub fn jti_closed_form(t_minus: f64, t_plus: f64, p: &ClosedFormParams) -> f64 {
    let (tc, tau) = (p.tau_c(), p.tau());
    let kappa = (tc / tau).powi(2);
    let envelope = (-(t_minus / tc).powi(2) - (t_plus / tau).powi(2)).exp();
    let y = p.mode_spacing / (2.0 * SQRT_2);
    envelope
        * dirichlet_squared(p.m, y * (t_minus - kappa * t_plus))
        * dirichlet_squared(p.m, y * (t_minus + kappa * t_plus))
}

/// Closed-form JTI sampled on (t_s, t_i) axes.
pub fn jti_closed_form_grid(axis_s: Axis, axis_i: Axis, p: &ClosedFormParams) -> IntensityGrid {
    Grid::from_fn(axis_s, axis_i, |ts, ti| {
        jti_closed_form((ts - ti) / SQRT_2, (ts + ti) / SQRT_2, p)
    })
}

/// Frequency grid suited to transforming [`ClosedFormParams::jsa`]: covers
/// ±(MΔω + 6δω) with step ≤ `max_step_fraction`·δω·τ_c/τ (so the time window
/// holds the wider of the two envelopes), an odd point count so the centre is
/// sampled.
pub fn closed_form_frequency_axis(p: &ClosedFormParams, max_step_fraction: f64) -> Result<Axis> {
    let half = p.m as f64 * p.mode_spacing + 6.0 * p.delta_omega;
    let step = max_step_fraction * p.delta_omega * p.tau_c() / p.tau();
    let steps = (2.0 * half / step).ceil() as usize;
    let steps = steps + steps % 2;
    Axis::new(-half, half, steps + 1)
}

/// Peak-normalizes `grid` so its value at `index` equals `value`.
pub fn rescale_at(grid: &mut IntensityGrid, index: (usize, usize), value: f64) {
    let s = value / grid.values[[index.0, index.1]];
    grid.values.mapv_inplace(|v| v * s);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_jsa(n: usize, step: f64, s0: f64, s1: f64) -> AmplitudeGrid {
        let a0 = Axis::centered(1e15, step, n).unwrap();
        let a1 = Axis::centered(2e15, step, n).unwrap();
        Grid::from_fn(a0, a1, |x, y| {
            let u = (x - 1e15) / s0;
            let v = (y - 2e15) / s1;
            Complex64::new((-0.5 * (u * u + v * v)).exp(), 0.0)
        })
    }

    #[test]
    fn parseval_is_exact() {
        let jsa = gaussian_jsa(65, 1e9, 8e9, 5e9);
        let jta = jta_numeric(&jsa, 4).unwrap();
        let spectral = jsa.intensity().total();
        let temporal = jta.intensity().total();
        assert!(((spectral - temporal) / spectral).abs() < 1e-10);
    }

    #[test]
    fn gaussian_maps_to_reciprocal_width() {
        let (s0, s1) = (8e9, 5e9);
        let jsa = gaussian_jsa(257, 0.5e9, s0, s1);
        let jta = jta_numeric(&jsa, 4).unwrap();
        let a0 = jta.axis_0;
        let a1 = jta.axis_1;
        let c0 = a0.nearest(0.0).unwrap();
        let c1 = a1.nearest(0.0).unwrap();
        let peak = jta.values[[c0, c1]].norm();
        // |f̃(t)| ∝ exp(−t²σ²/2): σ_t = 1/σ_ω.
        for k in [3usize, 10, 20] {
            let t = a0.value(c0 + k);
            let want = (-0.5 * (t * s0).powi(2)).exp();
            assert!((jta.values[[c0 + k, c1]].norm() / peak - want).abs() < 1e-10);
            let t = a1.value(c1 + k);
            let want = (-0.5 * (t * s1).powi(2)).exp();
            assert!((jta.values[[c0, c1 + k]].norm() / peak - want).abs() < 1e-10);
        }
        let analytic = s0 * s1;
        assert!((peak - analytic).abs() < 1e-9 * analytic);
    }

    #[test]
    fn rotation_preserves_isotropic_gaussian_and_mass() {
        let a = Axis::centered(0.0, 1.0, 101).unwrap();
        let g = Grid::from_fn(a, a, |x, y| (-(x * x + y * y) / 200.0).exp());
        let r = rotate_to_sum_diff(&g).unwrap();
        assert!(((r.total() - g.total()) / g.total()).abs() < 1e-3);
        for (i, j) in [(50, 50), (60, 45), (30, 70)] {
            assert!((r.values[[i, j]] - g.values[[i, j]]).abs() < 2e-3);
        }
    }

    #[test]
    fn closed_form_limits() {
        for m in 0..4 {
            let p = ClosedFormParams::new(1e9, 1e10, 2e9, m).unwrap();
            let n = (2 * m + 1) as f64;
            assert!((jti_closed_form(0.0, 0.0, &p) - n.powi(4)).abs() < 1e-9 * n.powi(4));
        }
        let p = ClosedFormParams::new(1e9, 1e10, 2e9, 0).unwrap();
        let (tm, tp) = (3e-10, -7e-10);
        let want = (-(tm / p.tau_c()).powi(2) - (tp / p.tau()).powi(2)).exp();
        assert!((jti_closed_form(tm, tp, &p) - want).abs() < 1e-15);
        assert_eq!(p.tau_c(), SQRT_2 / 1e9);
    }

    #[test]
    fn closed_form_is_continuous_at_removable_points() {
        let p = ClosedFormParams::new(1e9, 1e10, 2e9, 2).unwrap();
        // First zero of the denominator along t₋ with t₊ = 0.
        let t0 = 2.0 * SQRT_2 * PI / p.mode_spacing;
        let at = jti_closed_form(t0, 0.0, &p);
        let near = jti_closed_form(t0 * (1.0 + 1e-9), 0.0, &p);
        assert!(((at - near) / at).abs() < 1e-6);
    }
}
