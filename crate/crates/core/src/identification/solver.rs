use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fits with a condition estimate above this emit a warning.
pub const CONDITION_WARNING: f64 = 1e8;

/// A parameter counts as identifiable when its unit vector has a null-space
/// component below this norm.
pub const IDENTIFIABLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeastSquaresReport {
    pub solution: Vec<f64>,
    pub residual_rms: f64,
    pub rank: usize,
    /// Ratio of the largest to the smallest retained singular value;
    /// `None` when the design matrix is zero.
    pub condition_estimate: Option<f64>,
    /// Per parameter: whether the data determine it uniquely.
    pub identifiable: Vec<bool>,
    pub warnings: Vec<String>,
    pub n_samples: usize,
    pub n_params: usize,
}

impl LeastSquaresReport {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.n_params
    }
}

/// Minimum-norm least-squares solution of `design * x = targets`.
///
/// Tall systems are reduced with a QR factorisation first; the triangular
/// factor (or the design itself when there are fewer samples than
/// parameters) is then decomposed with an SVD. Singular values below
/// `s_max * max(m, n) * eps` are treated as zero.
pub fn fit_least_squares(design: &DMatrix<f64>, targets: &[f64]) -> Result<LeastSquaresReport> {
    let (m, n) = design.shape();
    if m == 0 {
        return Err(Error::invalid("least squares needs at least one sample"));
    }
    if targets.len() != m {
        return Err(Error::invalid(format!("{m} design rows but {} targets", targets.len())));
    }
    if let Some(k) = design.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "design matrix has a non-finite entry at row {}, column {}",
            k % m,
            k / m
        )));
    }
    if let Some(k) = targets.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("target {k} is not finite")));
    }
    let b = DVector::from_column_slice(targets);
    let mut warnings = Vec::new();
    if n == 0 {
        return Ok(LeastSquaresReport {
            solution: vec![],
            residual_rms: b.norm() / (m as f64).sqrt(),
            rank: 0,
            condition_estimate: None,
            identifiable: vec![],
            warnings,
            n_samples: m,
            n_params: 0,
        });
    }

    let (reduced, rhs) = if m >= n {
        let qr = design.clone().qr();
        let mut qtb = b.clone();
        qr.q_tr_mul(&mut qtb);
        (qr.r(), qtb.rows(0, n).into_owned())
    } else {
        warnings.push(format!("underdetermined: {m} samples for {n} parameters"));
        (design.clone(), b.clone())
    };
    let svd = reduced.svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
    let sigma = &svd.singular_values;
    let s_max = sigma.max();
    let tol = s_max * (m.max(n) as f64) * f64::EPSILON;
    let retained: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > tol && sigma[k] > 0.0).collect();
    let rank = retained.len();

    let mut x = DVector::zeros(n);
    for &k in &retained {
        let coeff = u.column(k).dot(&rhs) / sigma[k];
        x += v_t.row(k).transpose() * coeff;
    }

    // Null space: right singular vectors not retained, including the
    // directions missing from V when the design has fewer rows than columns.
    let mut null_norm_sq = vec![1.0; n];
    for &k in &retained {
        for (p, acc) in null_norm_sq.iter_mut().enumerate() {
            *acc -= v_t[(k, p)] * v_t[(k, p)];
        }
    }
    let identifiable = null_norm_sq.iter().map(|s| s.max(0.0).sqrt() < IDENTIFIABLE_TOL).collect();

    let condition_estimate = (rank > 0).then(|| {
        let smallest = retained.iter().map(|&k| sigma[k]).fold(f64::INFINITY, f64::min);
        s_max / smallest
    });
    if rank < n {
        warnings.push(format!("rank deficient: rank {rank} of {n}; minimum-norm solution returned"));
    }
    if let Some(c) = condition_estimate {
        if c > CONDITION_WARNING {
            warnings.push(format!("ill-conditioned: condition estimate {c:.3e}"));
        }
    }
    for w in &warnings {
        log::debug!("least squares: {w}");
    }

    let residual = design * &x - &b;
    Ok(LeastSquaresReport {
        solution: x.iter().copied().collect(),
        residual_rms: residual.norm() / (m as f64).sqrt(),
        rank,
        condition_estimate,
        identifiable,
        warnings,
        n_samples: m,
        n_params: n,
    })
}
