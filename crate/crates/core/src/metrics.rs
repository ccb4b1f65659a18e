//! Error metrics and model evaluation.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::datasets::{write_atomic, OperationalDataset};
use crate::error::{Error, Result};
use crate::identification::TrainedModel;
use crate::kinematics::JointState;
use crate::power::{power_series_from_meas, predict_meas, predict_power, MeasSource, PowerPrediction, PowerSeries};
use crate::dynamics::inverse_dynamics;

fn check_pair(real: &[f64], est: &[f64]) -> Result<()> {
    if real.is_empty() {
        return Err(Error::invalid("metric of an empty series"));
    }
    if real.len() != est.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: {} real vs {} estimated",
            real.len(),
            est.len()
        )));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(real: &[f64], est: &[f64]) -> Result<f64> {
    check_pair(real, est)?;
    let ss: f64 = real.iter().zip(est).map(|(r, e)| (r - e) * (r - e)).sum();
    Ok((ss / real.len() as f64).sqrt())
}

/// RMSE as a percentage of the range of the real series.
pub fn rmse_pct(real: &[f64], est: &[f64]) -> Result<f64> {
    let e = rmse(real, est)?;
    let (lo, hi) = real
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::UndefinedMetric(
            "RMSE% divides by the range of the real series, which is constant (zero range)".into(),
        ));
    }
    Ok(e / range * 100.0)
}

/// Coefficient of determination `1 - SS_res / SS_tot`; may be negative.
pub fn r_squared(real: &[f64], est: &[f64]) -> Result<f64> {
    check_pair(real, est)?;
    let mean = real.iter().sum::<f64>() / real.len() as f64;
    let ss_tot: f64 = real.iter().map(|r| (r - mean) * (r - mean)).sum();
    if !(ss_tot > 0.0) {
        return Err(Error::UndefinedMetric("r-squared of a real series with zero variance".into()));
    }
    let ss_res: f64 = real.iter().zip(est).map(|(r, e)| (r - e) * (r - e)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Pooled RMSE over all joints and samples, and the mean of the per-joint
/// RMSE percentages. Inputs are samples by joints.
pub fn rmse_dynamic(real: &DMatrix<f64>, est: &DMatrix<f64>) -> Result<(f64, f64)> {
    if real.shape() != est.shape() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} real vs {:?} estimated",
            real.shape(),
            est.shape()
        )));
    }
    if real.is_empty() {
        return Err(Error::invalid("metric of an empty series"));
    }
    let pooled = (real - est).norm_squared() / real.len() as f64;
    let mut pct = 0.0;
    for j in 0..real.ncols() {
        let r: Vec<f64> = real.column(j).iter().copied().collect();
        let e: Vec<f64> = est.column(j).iter().copied().collect();
        pct += rmse_pct(&r, &e).map_err(|err| match err {
            Error::UndefinedMetric(m) => Error::UndefinedMetric(format!("joint {}: {m}", j + 1)),
            other => other,
        })?;
    }
    Ok((pooled.sqrt(), pct / real.ncols() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicMetrics {
    /// Pooled RMSE over joints, A or N m.
    pub rmse: f64,
    /// Mean per-joint RMSE%; `None` when some joint channel is constant.
    pub rmse_pct: Option<f64>,
    pub per_joint_rmse: Vec<f64>,
    pub per_joint_rmse_pct: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerMetrics {
    /// W
    pub rmse: f64,
    pub rmse_pct: Option<f64>,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub n_samples: usize,
    /// Absent when the dataset has no measured joint channels.
    pub dynamic: Option<DynamicMetrics>,
    /// Absent when the dataset has no power column.
    pub power: Option<PowerMetrics>,
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(m)) => {
            log::warn!("{m}; reported as NA");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn dynamic_metrics(real: &DMatrix<f64>, est: &DMatrix<f64>) -> Result<DynamicMetrics> {
    let mut per_joint_rmse = Vec::new();
    let mut per_joint_rmse_pct = Vec::new();
    for j in 0..real.ncols() {
        let r: Vec<f64> = real.column(j).iter().copied().collect();
        let e: Vec<f64> = est.column(j).iter().copied().collect();
        per_joint_rmse.push(rmse(&r, &e)?);
        per_joint_rmse_pct.push(defined(rmse_pct(&r, &e))?);
    }
    let pooled = ((real - est).norm_squared() / real.len() as f64).sqrt();
    let pct = per_joint_rmse_pct
        .iter()
        .copied()
        .sum::<Option<f64>>()
        .map(|s| s / real.ncols() as f64);
    Ok(DynamicMetrics {
        rmse: pooled,
        rmse_pct: pct,
        per_joint_rmse,
        per_joint_rmse_pct,
    })
}

pub fn power_metrics(real: &[f64], est: &[f64]) -> Result<PowerMetrics> {
    Ok(PowerMetrics {
        rmse: rmse(real, est)?,
        rmse_pct: defined(rmse_pct(real, est))?,
        r_squared: defined(r_squared(real, est))?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub report: EvaluationReport,
    /// Joint currents or torques predicted by the dynamic model.
    pub meas_pred: DMatrix<f64>,
    pub power: PowerSeries,
}

/// Evaluates a trained model on a dataset.
///
/// Joint channels are predicted by inverse dynamics; power by the power
/// model driven by the dataset's measured channels (or the predicted ones
/// when the dataset has none). Metrics are computed for whatever the dataset
/// measures.
pub fn test_model(model: &TrainedModel, dataset: &OperationalDataset, clamp: bool) -> Result<TestOutcome> {
    dataset.check_dof(model.robot.dof())?;
    let meas_pred = predict_meas(model, dataset)?;
    let (inputs, source) = match &dataset.meas {
        Some(m) => (m.clone(), MeasSource::Dataset),
        None => (meas_pred.clone(), MeasSource::DynamicModel),
    };
    let power = power_series_from_meas(model, dataset, inputs, source, clamp)?;
    let n = dataset.len();
    let dynamic = match (&dataset.meas, n) {
        (Some(real), n) if n > 0 => Some(dynamic_metrics(real, &meas_pred)?),
        _ => None,
    };
    let power_metrics = match (&dataset.power, n) {
        (Some(real), n) if n > 0 => Some(power_metrics(real, &power.totals())?),
        _ => None,
    };
    Ok(TestOutcome {
        report: EvaluationReport {
            n_samples: n,
            dynamic,
            power: power_metrics,
        },
        meas_pred,
        power,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointPrediction {
    pub power: PowerPrediction,
    pub meas: Vec<f64>,
}

/// Single-state prediction. A lone sample has no time derivative, so the
/// inductive term uses `di/dt = 0`.
pub fn pc_model(model: &TrainedModel, state: &JointState, clamp: bool) -> Result<PointPrediction> {
    let dof = model.robot.dof();
    if state.dof() != dof || state.dq.len() != dof || state.ddq.len() != dof {
        return Err(Error::invalid(format!(
            "state has {} joints, model {} has {dof}",
            state.dof(),
            model.name
        )));
    }
    let meas = inverse_dynamics(&model.robot, &model.dynamic, state)?;
    let power = predict_power(&model.power, &model.power_context(), &meas, &vec![0.0; dof], &state.dq, clamp)?;
    Ok(PointPrediction { power, meas })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// CSV table with one row per split:
/// `split,n,RMSE_D,%RMSE_D,RMSE [W],RMSE%,r2`. Absent metrics are `NA`.
pub fn report_table(rows: &[(&str, &EvaluationReport)]) -> String {
    let mut out = String::from("split,n,RMSE_D,%RMSE_D,RMSE [W],RMSE%,r2\n");
    for (split, r) in rows {
        let d = r.dynamic.as_ref();
        let p = r.power.as_ref();
        let _ = writeln!(
            out,
            "{split},{},{},{},{},{},{}",
            r.n_samples,
            cell(d.map(|d| d.rmse)),
            cell(d.and_then(|d| d.rmse_pct)),
            cell(p.map(|p| p.rmse)),
            cell(p.and_then(|p| p.rmse_pct)),
            cell(p.and_then(|p| p.r_squared)),
        );
    }
    out
}

pub fn save_report_table(rows: &[(&str, &EvaluationReport)], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), report_table(rows).as_bytes())
}
