//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or invalid argument, 3 unreadable or
//! malformed input, 4 numerical failure or undefined metric. Errors are
//! printed to stderr as a single line `error[<code>]: <message>`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::datasets::{
    load_dataset, load_ground_truth, load_robot_description, load_sinusoid_spec, save_dataset, synth_generate,
    NoiseSpec, SynthConfig,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::identification::{gen_train_model, TrainOptions, TrainedModel};
use crate::kinematics::JointState;
use crate::metrics::{pc_model, save_report_table, test_model, EvaluationReport};
use crate::power::save_prediction_csv;
use crate::regressor::{BackEmfForm, PowerParameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmfArg {
    Signed,
    Abs,
}

impl From<EmfArg> for BackEmfForm {
    fn from(e: EmfArg) -> Self {
        match e {
            EmfArg::Signed => BackEmfForm::Signed,
            EmfArg::Abs => BackEmfForm::Abs,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "robot-energy", version, about = "Train and evaluate robot dynamic and power models")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identify dynamic and power parameters from a dataset.
    GenTrain {
        #[arg(long)]
        robot: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Output model file (JSON).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "model")]
        name: String,
        /// Estimate a constant tool force and moment per joint.
        #[arg(long)]
        estimate_payload: bool,
        #[arg(long, value_enum, default_value = "signed")]
        emf: EmfArg,
    },
    /// Evaluate a trained model on a dataset.
    Test {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Output metrics table (CSV).
        #[arg(long)]
        report: PathBuf,
        /// Per-sample power prediction export (CSV).
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Also report metrics on the training dataset.
        #[arg(long)]
        train_dataset: Option<PathBuf>,
        /// Report negative (regenerative) power as is instead of clamping to 0.
        #[arg(long)]
        no_clamp: bool,
    },
    /// Predict power and joint currents or torques for a single state.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Joint positions, comma separated (rad).
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, allow_hyphen_values = true)]
        dq: String,
        #[arg(long, allow_hyphen_values = true)]
        ddq: String,
        #[arg(long)]
        no_clamp: bool,
    },
    /// Generate a synthetic dataset from ground-truth parameters.
    Synth {
        #[arg(long)]
        robot: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian noise as a fraction of each channel's RMS (0.01 = 1%).
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_enum, default_value = "signed")]
        emf: EmfArg,
    },
    /// Write bundled robot descriptions, excitation specs and ground truths.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses a vector literal such as `0.1,-0.2,0` or `[0.1, -0.2, 0]`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let body = text.trim();
    let body = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .unwrap_or(body);
    if body.trim().is_empty() {
        return Err(Error::invalid(format!("empty vector literal {text:?}")));
    }
    body.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("malformed vector literal {text:?}: bad entry {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::invalid(format!("vector literal {text:?} has a non-finite entry")))
            }
        })
        .collect()
}

fn sig4(v: f64) -> String {
    format!("{v:.4e}")
}

/// Text printed by `predict`, shared with the library-parity tests.
pub fn format_point_prediction(model: &TrainedModel, state: &JointState, clamp: bool) -> Result<String> {
    let p = pc_model(model, state, clamp)?;
    let unit = match model.robot.sensor_kind {
        crate::dynamics::SensorKind::Current => "A",
        crate::dynamics::SensorKind::Torque => "N m",
    };
    let mut out = format!("power_W {:.6}\n", p.power.total);
    if p.power.clamped {
        out.push_str(&format!("power_raw_W {:.6}\n", p.power.raw_total));
    }
    for (j, m) in p.meas.iter().enumerate() {
        out.push_str(&format!("meas_{} {:.6} {unit}\n", j + 1, m));
    }
    Ok(out)
}

fn summarize_report(split: &str, r: &EvaluationReport, out: &mut dyn Write) -> std::io::Result<()> {
    let na = |v: Option<f64>| v.map_or("NA".to_string(), sig4);
    writeln!(
        out,
        "{split}: n={} RMSE_D={} %RMSE_D={} RMSE_W={} RMSE%={} r2={}",
        r.n_samples,
        na(r.dynamic.as_ref().map(|d| d.rmse)),
        na(r.dynamic.as_ref().and_then(|d| d.rmse_pct)),
        na(r.power.as_ref().map(|p| p.rmse)),
        na(r.power.as_ref().and_then(|p| p.rmse_pct)),
        na(r.power.as_ref().and_then(|p| p.r_squared)),
    )
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn execute(config: CliConfig, out: &mut dyn Write) -> Result<()> {
    match config.command {
        Command::GenTrain {
            robot,
            dataset,
            out: model_out,
            name,
            estimate_payload,
            emf,
        } => {
            let robot = load_robot_description(&robot)?;
            let data = load_dataset(&dataset, robot.dof())?;
            let options = TrainOptions {
                estimate_payload,
                emf: emf.into(),
            };
            let model = gen_train_model(&robot, &data, &name, options)?;
            model.save(&model_out)?;
            writeln!(out, "model {} ({} samples) -> {}", model.name, data.len(), model_out.display()).map_err(io_out)?;
            for (j, fit) in model.meta.joint_fits.iter().enumerate() {
                writeln!(
                    out,
                    "joint {}: params={} rank={} identifiable={} residual_rms={} cond={}",
                    j + 1,
                    fit.n_params,
                    fit.rank,
                    fit.identifiable,
                    sig4(fit.residual_rms),
                    fit.condition_estimate.map_or("NA".into(), sig4)
                )
                .map_err(io_out)?;
            }
            let fit = &model.meta.power_fit;
            writeln!(
                out,
                "power: params={} rank={} residual_rms={} cond={}",
                fit.n_params,
                fit.rank,
                sig4(fit.residual_rms),
                fit.condition_estimate.map_or("NA".into(), sig4)
            )
            .map_err(io_out)?;
            let labels = PowerParameters::labels(model.robot.dof());
            let kp: Vec<String> = labels
                .iter()
                .zip(&model.power.values)
                .map(|(l, v)| format!("{l}={}", sig4(*v)))
                .collect();
            writeln!(out, "K_P ({}): {}", model.power.values.len(), kp.join(" ")).map_err(io_out)?;
        }
        Command::Test {
            model,
            dataset,
            report,
            predictions,
            train_dataset,
            no_clamp,
        } => {
            let model = TrainedModel::load(&model)?;
            let dof = model.robot.dof();
            let data = load_dataset(&dataset, dof)?;
            let mut reports = Vec::new();
            if let Some(path) = &train_dataset {
                let train = load_dataset(path, dof)?;
                reports.push(("Training", test_model(&model, &train, !no_clamp)?.report));
            }
            let outcome = test_model(&model, &data, !no_clamp)?;
            if let Some(path) = &predictions {
                save_prediction_csv(&outcome.power, data.power.as_deref(), path)?;
            }
            reports.push(("Testing", outcome.report));
            let rows: Vec<(&str, &EvaluationReport)> = reports.iter().map(|(s, r)| (*s, r)).collect();
            save_report_table(&rows, &report)?;
            for (split, r) in &rows {
                summarize_report(split, r, out).map_err(io_out)?;
            }
        }
        Command::Predict {
            model,
            q,
            dq,
            ddq,
            no_clamp,
        } => {
            let model = TrainedModel::load(&model)?;
            let state = JointState::new(parse_vector(&q)?, parse_vector(&dq)?, parse_vector(&ddq)?)?;
            if state.dof() != model.robot.dof() {
                return Err(Error::invalid(format!(
                    "state has {} joints, model {} has {}",
                    state.dof(),
                    model.name,
                    model.robot.dof()
                )));
            }
            out.write_all(format_point_prediction(&model, &state, !no_clamp)?.as_bytes())
                .map_err(io_out)?;
        }
        Command::Synth {
            robot,
            spec,
            truth,
            out: data_out,
            seed,
            noise,
            emf,
        } => {
            if !(noise >= 0.0) || !noise.is_finite() {
                return Err(Error::invalid(format!("--noise must be finite and >= 0, got {noise}")));
            }
            let robot = load_robot_description(&robot)?;
            let spec = load_sinusoid_spec(&spec)?;
            let truth = load_ground_truth(&truth)?;
            let config = SynthConfig {
                noise: if noise > 0.0 { NoiseSpec::RelativeToRms(noise) } else { NoiseSpec::None },
                seed,
                emf: emf.into(),
            };
            let data = synth_generate(
                &robot,
                &truth.dynamic_parameters(&robot)?,
                &truth.power.to_parameters(),
                &spec,
                &config,
            )?;
            save_dataset(&data, &data_out)?;
            writeln!(out, "{} samples -> {}", data.len(), data_out.display()).map_err(io_out)?;
        }
        Command::Fixtures { out: dir } => {
            for path in fixtures::write_all(&dir)? {
                writeln!(out, "{}", path.display()).map_err(io_out)?;
            }
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid usage")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "error[usage]: {first}");
            return 2;
        }
    };
    match execute(config, out) {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error[{}]: {line}", e.code());
            e.exit_code()
        }
    }
}
