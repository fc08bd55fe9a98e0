//! Uniform axes and 2-D sampled data.

use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniformly spaced, strictly increasing axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    start: f64,
    step: f64,
    len: usize,
}

impl Axis {
    /// `len` points from `start` to `stop` inclusive.
    pub fn new(start: f64, stop: f64, len: usize) -> Result<Self> {
        if len < 2 || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::Contract(format!(
                "axis needs len >= 2 and start < stop, got [{start:e}, {stop:e}] x {len}"
            )));
        }
        Ok(Self {
            start,
            step: (stop - start) / (len - 1) as f64,
            len,
        })
    }

    pub fn from_step(start: f64, step: f64, len: usize) -> Result<Self> {
        if len < 2 || !(step > 0.0) || !start.is_finite() || !step.is_finite() {
            return Err(Error::Contract(format!(
                "axis needs len >= 2 and step > 0, got step {step:e} x {len}"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Axis of `len` points centred on `center`.
    pub fn centered(center: f64, step: f64, len: usize) -> Result<Self> {
        Self::from_step(center - step * (len as f64 - 1.0) / 2.0, step, len)
    }

    /// Checks that explicit samples are uniform to relative 1e-9 and builds the axis.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Contract("axis needs at least two samples".into()));
        }
        let axis = Self::new(samples[0], samples[samples.len() - 1], samples.len())?;
        for (i, &s) in samples.iter().enumerate() {
            if (s - axis.value(i)).abs() > 1e-9 * axis.step {
                return Err(Error::Contract(format!(
                    "axis is not uniform at index {i}: {s:e} vs {:e}",
                    axis.value(i)
                )));
            }
        }
        Ok(axis)
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.stop())
    }

    /// Index of the sample nearest to `x`, if inside the axis.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let i = ((x - self.start) / self.step).round();
        (i >= 0.0 && i < self.len as f64).then_some(i as usize)
    }
}

/// Values sampled on the product of two uniform axes; `values[[i, j]]`
/// belongs to `(axis_0[i], axis_1[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub axis_0: Axis,
    pub axis_1: Axis,
    pub values: Array2<T>,
}

/// Real, non-negative intensity samples.
pub type IntensityGrid = Grid<f64>;
/// Complex amplitude samples.
pub type AmplitudeGrid = Grid<Complex64>;

impl<T: Clone> Grid<T> {
    pub fn new(axis_0: Axis, axis_1: Axis, values: Array2<T>) -> Result<Self> {
        if values.dim() != (axis_0.len(), axis_1.len()) {
            return Err(Error::Contract(format!(
                "grid values {:?} do not match axes {} x {}",
                values.dim(),
                axis_0.len(),
                axis_1.len()
            )));
        }
        Ok(Self {
            axis_0,
            axis_1,
            values,
        })
    }

    pub fn from_fn(axis_0: Axis, axis_1: Axis, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let values =
            Array2::from_shape_fn((axis_0.len(), axis_1.len()), |(i, j)| f(axis_0.value(i), axis_1.value(j)));
        Self {
            axis_0,
            axis_1,
            values,
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            axis_0: self.axis_0,
            axis_1: self.axis_1,
            values: self.values.map(f),
        }
    }
}

impl Grid<f64> {
    /// Σ values · step₀ · step₁.
    pub fn total(&self) -> f64 {
        self.values.sum() * self.axis_0.step() * self.axis_1.step()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest sample (first one on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut max = f64::NEG_INFINITY;
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > max {
                max = v;
                best = (i, j);
            }
        }
        best
    }

    pub fn to_csv(&self, header: [&str; 2]) -> String {
        let mut out = String::with_capacity(64 * self.values.len());
        let _ = writeln!(out, "{},{},value", header[0], header[1]);
        for ((i, j), v) in self.values.indexed_iter() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_f64(self.axis_0.value(i)),
                fmt_f64(self.axis_1.value(j)),
                fmt_f64(*v)
            );
        }
        out
    }
}

impl Grid<Complex64> {
    pub fn intensity(&self) -> Grid<f64> {
        self.map(|z| z.norm_sqr())
    }

    pub fn to_csv(&self, header: [&str; 2]) -> String {
        let mut out = String::with_capacity(96 * self.values.len());
        let _ = writeln!(out, "{},{},re,im", header[0], header[1]);
        for ((i, j), v) in self.values.indexed_iter() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(self.axis_0.value(i)),
                fmt_f64(self.axis_1.value(j)),
                fmt_f64(v.re),
                fmt_f64(v.im)
            );
        }
        out
    }
}

/// Locale-free rendering with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_endpoints_and_lookup() {
        let a = Axis::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(a.step(), 0.5);
        assert_eq!(a.stop(), 1.0);
        assert_eq!(a.nearest(0.3), Some(3));
        assert_eq!(a.nearest(2.0), None);
        assert!(Axis::new(1.0, 0.0, 5).is_err());
        let c = Axis::centered(10.0, 1.0, 4).unwrap();
        assert_eq!(c.values(), vec![8.5, 9.5, 10.5, 11.5]);
    }

    #[test]
    fn non_uniform_samples_rejected() {
        assert!(Axis::from_samples(&[0.0, 1.0, 2.5]).is_err());
        assert!(Axis::from_samples(&[0.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let a = Axis::new(0.0, 1.0, 2).unwrap();
        let g = Grid::from_fn(a, a, |x, y| x + y / 3.0);
        let csv = g.to_csv(["omega_s_rad_per_s", "omega_i_rad_per_s"]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "omega_s_rad_per_s,omega_i_rad_per_s,value");
        assert_eq!(lines.len(), 5);
        let last: f64 = lines[4].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(last, 1.0 + 1.0 / 3.0);
    }
}
