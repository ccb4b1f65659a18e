//! Electrical power model evaluation.
//!
//! Total power is a constant draw plus four terms per joint:
//!
//! ```text
//! P = P_c + sum_j ( L_j i_j di_j/dt + R_j i_j^2 + kt_j dq_j i_j + kMD_j |i_j| )
//! ```
//!
//! For torque-sensing robots `i_j = tau_j / k_m,j`. Negative totals
//! (regeneration) can optionally be clamped to zero, modelling a braking
//! resistor that dissipates returned energy.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::datasets::{differentiate_columns, write_atomic, OperationalDataset, RobotDescription};
use crate::dynamics::{inverse_dynamics, MotorConstants, SensorKind};
use crate::error::{Error, Result};
use crate::identification::TrainedModel;
use crate::regressor::{power_regressor_row, BackEmfForm, PowerParameters};

/// Everything besides the parameters and the motion that the power model needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerContext {
    pub sensor: SensorKind,
    /// Required for torque sensors; ignored for current sensors.
    pub motors: Option<MotorConstants>,
    pub emf: BackEmfForm,
}

impl PowerContext {
    /// Uses the robot's torque constants, or unit constants when it has none.
    pub fn for_robot(robot: &RobotDescription, emf: BackEmfForm) -> Self {
        PowerContext {
            sensor: robot.sensor_kind,
            motors: Some(robot.power_motor_constants()),
            emf,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPrediction {
    /// Reported total, W. Equals `raw_total` unless clamped.
    pub total: f64,
    /// Sum of all components before clamping.
    pub raw_total: f64,
    pub constant: f64,
    pub inductive: Vec<f64>,
    pub resistive: Vec<f64>,
    pub back_emf: Vec<f64>,
    pub driver: Vec<f64>,
    pub clamped: bool,
}

impl PowerPrediction {
    pub fn component_sum(&self) -> f64 {
        self.constant
            + self.inductive.iter().sum::<f64>()
            + self.resistive.iter().sum::<f64>()
            + self.back_emf.iter().sum::<f64>()
            + self.driver.iter().sum::<f64>()
    }
}

/// Evaluates the power model for one sample.
///
/// `meas` are currents or torques per the context's sensor kind,
/// `derivatives` their time derivatives.
pub fn predict_power(
    params: &PowerParameters,
    ctx: &PowerContext,
    meas: &[f64],
    derivatives: &[f64],
    dq: &[f64],
    clamp: bool,
) -> Result<PowerPrediction> {
    let dof = meas.len();
    if params.dof() != dof {
        return Err(Error::invalid(format!(
            "power parameters are for {} joints, inputs have {dof}",
            params.dof()
        )));
    }
    let row = power_regressor_row(meas, derivatives, dq, ctx.sensor, ctx.motors.as_ref(), ctx.emf)?;
    let terms: Vec<f64> = row.coefficients.iter().zip(&params.values).map(|(a, b)| a * b).collect();
    // Summed in regressor order, so the raw total equals the row-parameter product.
    let raw_total: f64 = terms.iter().sum();
    let pick = |k: usize| -> Vec<f64> { (0..dof).map(|j| terms[1 + 4 * j + k]).collect() };
    let clamped = clamp && raw_total < 0.0;
    Ok(PowerPrediction {
        total: if clamped { 0.0 } else { raw_total },
        raw_total,
        constant: terms[0],
        inductive: pick(0),
        resistive: pick(1),
        back_emf: pick(2),
        driver: pick(3),
        clamped,
    })
}

/// Where the joint channel feeding the power model came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasSource {
    Dataset,
    DynamicModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub t: Vec<f64>,
    pub predictions: Vec<PowerPrediction>,
    /// Joint currents or torques used as model inputs.
    pub meas: DMatrix<f64>,
    pub source: MeasSource,
}

impl PowerSeries {
    pub fn totals(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.total).collect()
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

/// Joint currents or torques predicted by the identified dynamic model.
pub fn predict_meas(model: &TrainedModel, dataset: &OperationalDataset) -> Result<DMatrix<f64>> {
    dataset.check_dof(model.robot.dof())?;
    let dof = dataset.dof();
    let rows: Vec<Vec<f64>> = (0..dataset.len())
        .into_par_iter()
        .map(|k| inverse_dynamics(&model.robot, &model.dynamic, &dataset.state(k)))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(dataset.len(), dof, |r, c| rows[r][c]))
}

/// Power predictions for every sample of a dataset.
///
/// Uses the dataset's measured currents or torques when present, otherwise
/// those predicted by the model's dynamic part. Time derivatives come from
/// finite differences on the timestamps.
pub fn predict_power_series(model: &TrainedModel, dataset: &OperationalDataset, clamp: bool) -> Result<PowerSeries> {
    dataset.check_dof(model.robot.dof())?;
    let (meas, source) = match &dataset.meas {
        Some(m) => (m.clone(), MeasSource::Dataset),
        None => (predict_meas(model, dataset)?, MeasSource::DynamicModel),
    };
    power_series_from_meas(model, dataset, meas, source, clamp)
}

pub(crate) fn power_series_from_meas(
    model: &TrainedModel,
    dataset: &OperationalDataset,
    meas: DMatrix<f64>,
    source: MeasSource,
    clamp: bool,
) -> Result<PowerSeries> {
    let derivatives = differentiate_columns(&meas, &dataset.t)?;
    let ctx = model.power_context();
    let predictions = (0..dataset.len())
        .into_par_iter()
        .map(|k| {
            let m: Vec<f64> = meas.row(k).iter().copied().collect();
            let d: Vec<f64> = derivatives.row(k).iter().copied().collect();
            let dq: Vec<f64> = dataset.dq.row(k).iter().copied().collect();
            predict_power(&model.power, &ctx, &m, &d, &dq, clamp)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerSeries {
        t: dataset.t.clone(),
        predictions,
        meas,
        source,
    })
}

/// Per-sample export: `t, P_pred, [P_meas,] P_raw, P_c`, then per joint
/// `inductive_j, resistive_j, back_emf_j, driver_j`, then `clamped` (0/1).
pub fn write_prediction_csv(series: &PowerSeries, measured: Option<&[f64]>, writer: impl std::io::Write) -> Result<()> {
    let to_err = |e: csv::Error| Error::Numerical(format!("prediction export failed: {e}"));
    if let Some(m) = measured {
        if m.len() != series.len() {
            return Err(Error::invalid(format!(
                "{} measured power samples for {} predictions",
                m.len(),
                series.len()
            )));
        }
    }
    let dof = series.meas.ncols();
    let mut header = vec!["t".to_string(), "P_pred".to_string()];
    if measured.is_some() {
        header.push("P_meas".into());
    }
    header.push("P_raw".into());
    header.push("P_c".into());
    for j in 1..=dof {
        for name in ["inductive", "resistive", "back_emf", "driver"] {
            header.push(format!("{name}_{j}"));
        }
    }
    header.push("clamped".into());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&header).map_err(to_err)?;
    for (k, p) in series.predictions.iter().enumerate() {
        let mut rec = vec![series.t[k].to_string(), p.total.to_string()];
        if let Some(m) = measured {
            rec.push(m[k].to_string());
        }
        rec.push(p.raw_total.to_string());
        rec.push(p.constant.to_string());
        for j in 0..dof {
            for v in [p.inductive[j], p.resistive[j], p.back_emf[j], p.driver[j]] {
                rec.push(v.to_string());
            }
        }
        rec.push(u8::from(p.clamped).to_string());
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Numerical(format!("prediction export failed: {e}")))?;
    Ok(())
}

pub fn save_prediction_csv(series: &PowerSeries, measured: Option<&[f64]>, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_prediction_csv(series, measured, &mut buf)?;
    write_atomic(path.as_ref(), &buf)
}
