//! Least-squares identification of the dynamic and power models and the
//! end-to-end training pipeline.

mod model;
mod solver;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use model::{FitSummary, ModelStore, TrainedModel, TrainingMeta, FORMAT_VERSION};
pub use solver::{fit_least_squares, LeastSquaresReport, CONDITION_WARNING, IDENTIFIABLE_TOL};

use crate::datasets::{differentiate_columns, OperationalDataset, RobotDescription};
use crate::error::{Error, Result};
use crate::kinematics::forward_recursion;
use crate::power::PowerContext;
use crate::regressor::{
    build_layout, power_regressor_row, regressor_row_with, BackEmfForm, DynamicParameters, ParameterLayout,
    PowerParameters, RegressorRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainOptions {
    /// Adds the tool force and moment to every joint's unknowns.
    pub estimate_payload: bool,
    pub emf: BackEmfForm,
}

fn meas_of(dataset: &OperationalDataset) -> Result<&DMatrix<f64>> {
    dataset
        .meas
        .as_ref()
        .ok_or_else(|| Error::schema("dataset has no meas_* channels (joint current or torque)"))
}

/// Regressor rows of every joint for every sample, `rows[sample][joint]`.
///
/// Samples are processed in parallel; each result lands at its own index, so
/// the output does not depend on the thread count.
pub fn regressor_rows(
    robot: &RobotDescription,
    dataset: &OperationalDataset,
    layout: &ParameterLayout,
) -> Result<Vec<Vec<RegressorRow>>> {
    layout.check_robot(robot)?;
    dataset.check_dof(robot.dof())?;
    (0..dataset.len())
        .into_par_iter()
        .map(|k| {
            let state = dataset.state(k);
            let kin = forward_recursion(robot, &state, &robot.gravity)?;
            Ok((0..robot.dof())
                .map(|j| regressor_row_with(robot, &kin, j, layout, state.dq[j]))
                .collect())
        })
        .collect()
}

/// Fits every joint's unknowns independently: targets are the measured
/// channel minus the known offset, design columns the regressor
/// coefficients.
pub fn train_dynamic_model(
    robot: &RobotDescription,
    dataset: &OperationalDataset,
    layout: &ParameterLayout,
) -> Result<(DynamicParameters, Vec<LeastSquaresReport>)> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let meas = meas_of(dataset)?;
    let rows = regressor_rows(robot, dataset, layout)?;
    let n = dataset.len();
    let reports: Vec<LeastSquaresReport> = (0..robot.dof())
        .into_par_iter()
        .map(|j| {
            let design = DMatrix::from_fn(n, layout.count(j), |r, c| rows[r][j].coefficients[c]);
            let targets: Vec<f64> = (0..n).map(|r| meas[(r, j)] - rows[r][j].known_offset).collect();
            fit_least_squares(&design, &targets).map_err(|e| match e {
                Error::InvalidArgument(m) => Error::invalid(format!("joint {}: {m}", j + 1)),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let values = reports.iter().map(|r| r.solution.clone()).collect();
    Ok((DynamicParameters::new(layout.clone(), values)?, reports))
}

/// Power regressor matrix, one row per sample. Current or torque
/// derivatives come from finite differences on the timestamps.
pub fn power_design(ctx: &PowerContext, dataset: &OperationalDataset) -> Result<DMatrix<f64>> {
    let meas = meas_of(dataset)?;
    let derivatives = differentiate_columns(meas, &dataset.t)?;
    let rows: Vec<Vec<f64>> = (0..dataset.len())
        .into_par_iter()
        .map(|k| {
            let m: Vec<f64> = meas.row(k).iter().copied().collect();
            let d: Vec<f64> = derivatives.row(k).iter().copied().collect();
            let dq: Vec<f64> = dataset.dq.row(k).iter().copied().collect();
            power_regressor_row(&m, &d, &dq, ctx.sensor, ctx.motors.as_ref(), ctx.emf).map(|r| r.coefficients)
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

pub fn train_power_model(
    robot: &RobotDescription,
    dataset: &OperationalDataset,
    emf: BackEmfForm,
) -> Result<(PowerParameters, LeastSquaresReport)> {
    dataset.check_dof(robot.dof())?;
    if dataset.len() < 2 {
        return Err(Error::invalid(format!(
            "power training needs at least 2 samples for current derivatives, got {}",
            dataset.len()
        )));
    }
    let power = dataset
        .power
        .as_ref()
        .ok_or_else(|| Error::schema("dataset has no power column; it is required to train the power model"))?;
    let design = power_design(&PowerContext::for_robot(robot, emf), dataset)?;
    let report = fit_least_squares(&design, power)?;
    Ok((PowerParameters::new(report.solution.clone())?, report))
}

/// Full training: layout, per-joint dynamic fits, power fit.
pub fn gen_train_model(
    robot: &RobotDescription,
    dataset: &OperationalDataset,
    name: &str,
    options: TrainOptions,
) -> Result<TrainedModel> {
    robot.validate()?;
    dataset.check_dof(robot.dof())?;
    let layout = build_layout(robot, options.estimate_payload);
    log::info!(
        "training {name}: {} samples, {} dynamic unknowns over {} joints",
        dataset.len(),
        layout.total_count(),
        robot.dof()
    );
    let (dynamic, joint_reports) = train_dynamic_model(robot, dataset, &layout)?;
    for (j, r) in joint_reports.iter().enumerate() {
        log::info!("joint {}: rank {}/{}, condition {:?}", j + 1, r.rank, r.n_params, r.condition_estimate);
        for w in &r.warnings {
            log::info!("joint {}: {w}", j + 1);
        }
    }
    let (power, power_report) = train_power_model(robot, dataset, options.emf)?;
    log::info!("power: rank {}/{}", power_report.rank, power_report.n_params);
    let meta = TrainingMeta::new(dataset, &layout, &joint_reports, &power_report);
    if meta.underdetermined {
        log::warn!("model {name}: fewer samples than unknowns for at least one fit");
    }
    Ok(TrainedModel::new(name, robot.clone(), dynamic, power, options.emf, meta))
}
