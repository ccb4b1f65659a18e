//! Sinusoidal joint excitation and finite-difference differentiation.

use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidJoint {
    /// Centre position, rad.
    pub theta0: f64,
    /// rad
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// rad
    pub phase: f64,
}

/// `theta(t) = theta0 + A sin(2 pi f t + phase)` per actuated joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidSpec {
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub sample_rate: f64,
    pub joints: Vec<SinusoidJoint>,
}

/// Sampled joint trajectory, samples by joints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub q: DMatrix<f64>,
    pub dq: DMatrix<f64>,
    pub ddq: DMatrix<f64>,
}

// Irrational ratios between joint frequencies (0.1 * sqrt of successive primes)
// keep the joints from ever re-synchronising.
const PRIMES: [f64; 10] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0];

impl SinusoidSpec {
    pub fn samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    /// Default training excitation: 100 s at 500 Hz (50 000 samples).
    pub fn training_default(dof: usize) -> Self {
        SinusoidSpec {
            duration: 100.0,
            sample_rate: 500.0,
            joints: (0..dof)
                .map(|j| SinusoidJoint {
                    theta0: [0.0, -1.2, 1.0, -0.5, 0.6, 0.3, -0.2, 0.4][j % 8],
                    amplitude: [1.0, 0.8, 0.9, 1.2, 1.1, 1.3, 1.0, 0.9][j % 8],
                    frequency: 0.1 * PRIMES[j % PRIMES.len()].sqrt(),
                    phase: 0.3 * j as f64,
                })
                .collect(),
        }
    }

    /// Held-out excitation: 60 s, different frequencies and phases.
    pub fn testing_default(dof: usize) -> Self {
        let mut spec = Self::training_default(dof);
        spec.duration = 60.0;
        for (j, joint) in spec.joints.iter_mut().enumerate() {
            joint.frequency *= 1.13;
            joint.phase += 1.0 + 0.17 * j as f64;
            joint.amplitude *= 0.9;
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::invalid(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(Error::invalid(format!("sample rate must be > 0, got {}", self.sample_rate)));
        }
        if self.joints.is_empty() {
            return Err(Error::invalid("sinusoid spec has no joints"));
        }
        let finite = |j: &SinusoidJoint| [j.theta0, j.amplitude, j.frequency, j.phase].iter().all(|v| v.is_finite());
        if let Some(i) = self.joints.iter().position(|j| !finite(j)) {
            return Err(Error::invalid(format!("sinusoid parameters of joint {} are not finite", i + 1)));
        }
        let f_max = self.joints.iter().map(|j| j.frequency.abs()).fold(0.0, f64::max);
        if self.sample_rate <= 2.0 * f_max {
            log::warn!(
                "sample rate {} Hz is at or below twice the highest joint frequency {} Hz",
                self.sample_rate,
                f_max
            );
        }
        Ok(())
    }
}

/// Samples the excitation with exact analytic derivatives.
pub fn generate_sinusoid(spec: &SinusoidSpec) -> Result<Trajectory> {
    spec.validate()?;
    let n = spec.samples();
    let dof = spec.joints.len();
    let t: Vec<f64> = (0..n).map(|k| k as f64 / spec.sample_rate).collect();
    let mut q = DMatrix::zeros(n, dof);
    let mut dq = DMatrix::zeros(n, dof);
    let mut ddq = DMatrix::zeros(n, dof);
    for (j, joint) in spec.joints.iter().enumerate() {
        let omega = TAU * joint.frequency;
        for (k, &tk) in t.iter().enumerate() {
            let (s, c) = (omega * tk + joint.phase).sin_cos();
            q[(k, j)] = joint.theta0 + joint.amplitude * s;
            dq[(k, j)] = joint.amplitude * omega * c;
            ddq[(k, j)] = -joint.amplitude * omega * omega * s;
        }
    }
    Ok(Trajectory { t, q, dq, ddq })
}

/// Second-order finite differences on (possibly non-uniform) timestamps:
/// three-point central formula inside, three-point one-sided formulas at
/// the ends, plain divided difference when only two samples exist.
pub fn differentiate(values: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    if n != t.len() {
        return Err(Error::invalid(format!("{n} values but {} timestamps", t.len())));
    }
    if n < 2 {
        return Err(Error::invalid(format!("differentiation needs at least 2 samples, got {n}")));
    }
    if let Some(k) = t.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!("timestamps not strictly increasing at sample {}", k + 1)));
    }
    if n == 2 {
        let d = (values[1] - values[0]) / (t[1] - t[0]);
        return Ok(vec![d, d]);
    }
    let mut out = vec![0.0; n];
    for k in 1..n - 1 {
        let h0 = t[k] - t[k - 1];
        let h1 = t[k + 1] - t[k];
        out[k] = -h1 / (h0 * (h0 + h1)) * values[k - 1] + (h1 - h0) / (h0 * h1) * values[k]
            + h0 / (h1 * (h0 + h1)) * values[k + 1];
    }
    // One-sided: derivative of the quadratic through the first (last) three points.
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    out[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * values[0] + (h0 + h1) / (h0 * h1) * values[1]
        - h0 / (h1 * (h0 + h1)) * values[2];
    let (h0, h1) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
    out[n - 1] = h1 / (h0 * (h0 + h1)) * values[n - 3] - (h0 + h1) / (h0 * h1) * values[n - 2]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * values[n - 1];
    Ok(out)
}

/// Differentiates every column of `values` (samples by channels) against
/// `t`. Rows may come in any order; they are sorted by timestamp first and
/// the derivatives are returned in the original row order. A single sample
/// has no derivative and yields zeros.
pub fn differentiate_columns(values: &DMatrix<f64>, t: &[f64]) -> Result<DMatrix<f64>> {
    let n = values.nrows();
    if n != t.len() {
        return Err(Error::invalid(format!("{n} rows but {} timestamps", t.len())));
    }
    if n < 2 {
        return Ok(DMatrix::zeros(n, values.ncols()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let sorted_t: Vec<f64> = order.iter().map(|&k| t[k]).collect();
    let mut out = DMatrix::zeros(n, values.ncols());
    for c in 0..values.ncols() {
        let column: Vec<f64> = order.iter().map(|&k| values[(k, c)]).collect();
        for (d, &k) in differentiate(&column, &sorted_t)?.into_iter().zip(&order) {
            out[(k, c)] = d;
        }
    }
    Ok(out)
}

pub fn load_sinusoid_spec(path: impl AsRef<Path>) -> Result<SinusoidSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec: SinusoidSpec = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    spec.validate().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(spec)
}

pub fn sinusoid_spec_to_toml(spec: &SinusoidSpec) -> String {
    toml::to_string(spec).expect("sinusoid spec serializes")
}

pub fn save_sinusoid_spec(spec: &SinusoidSpec, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path.as_ref(), sinusoid_spec_to_toml(spec).as_bytes())
}
