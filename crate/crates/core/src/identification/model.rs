//! Trained model and its JSON file form.
//!
//! The document is a single JSON object:
//!
//! | field            | content                                              |
//! |------------------|------------------------------------------------------|
//! | `format_version` | integer, currently 1; checked before anything else   |
//! | `name`           | model identifier                                     |
//! | `robot`          | full robot description (convention, gravity, sensor) |
//! | `dynamic`        | `layout` (ordered unknowns) and per-joint `values`   |
//! | `power`          | `[P_c, L_1, R_1, kt_1, kMD_1, ...]`                  |
//! | `emf`            | back-EMF form used in training, `signed` or `abs`    |
//! | `meta`           | sample count, time range, fit diagnostics            |
//!
//! Unknown fields are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LeastSquaresReport;
use crate::datasets::{write_atomic, OperationalDataset, RobotDescription};
use crate::error::{Error, Result};
use crate::power::PowerContext;
use crate::regressor::{BackEmfForm, DynamicParameters, ParameterLayout, PowerParameters};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    pub n_params: usize,
    pub rank: usize,
    pub residual_rms: f64,
    pub condition_estimate: Option<f64>,
    pub identifiable: usize,
    pub warnings: Vec<String>,
}

impl From<&LeastSquaresReport> for FitSummary {
    fn from(r: &LeastSquaresReport) -> Self {
        FitSummary {
            n_params: r.n_params,
            rank: r.rank,
            residual_rms: r.residual_rms,
            condition_estimate: r.condition_estimate,
            identifiable: r.identifiable.iter().filter(|b| **b).count(),
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub sample_count: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub joint_fits: Vec<FitSummary>,
    pub power_fit: FitSummary,
    /// Some fit had fewer samples than unknowns.
    pub underdetermined: bool,
}

impl TrainingMeta {
    pub fn new(
        dataset: &OperationalDataset,
        layout: &ParameterLayout,
        joint_reports: &[LeastSquaresReport],
        power_report: &LeastSquaresReport,
    ) -> Self {
        let t_start = dataset.t.iter().copied().fold(f64::INFINITY, f64::min);
        let t_end = dataset.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let most = layout.max_count().max(power_report.n_params);
        TrainingMeta {
            sample_count: dataset.len(),
            t_start,
            t_end,
            joint_fits: joint_reports.iter().map(FitSummary::from).collect(),
            power_fit: power_report.into(),
            underdetermined: dataset.len() < most,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub format_version: u32,
    pub name: String,
    pub robot: RobotDescription,
    pub dynamic: DynamicParameters,
    pub power: PowerParameters,
    pub emf: BackEmfForm,
    pub meta: TrainingMeta,
}

impl TrainedModel {
    pub fn new(
        name: &str,
        robot: RobotDescription,
        dynamic: DynamicParameters,
        power: PowerParameters,
        emf: BackEmfForm,
        meta: TrainingMeta,
    ) -> Self {
        TrainedModel {
            format_version: FORMAT_VERSION,
            name: name.to_string(),
            robot,
            dynamic,
            power,
            emf,
            meta,
        }
    }

    pub fn layout(&self) -> &ParameterLayout {
        &self.dynamic.layout
    }

    pub fn power_context(&self) -> PowerContext {
        PowerContext::for_robot(&self.robot, self.emf)
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.dynamic.check_robot(&self.robot)?;
        if self.power.dof() != self.robot.dof() || !(self.power.values.len() - 1).is_multiple_of(4) {
            return Err(Error::invalid(format!(
                "power vector has {} entries, expected {}",
                self.power.values.len(),
                1 + 4 * self.robot.dof()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let parse = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
        let version = value
            .get("format_version")
            .ok_or_else(|| parse("missing format_version".into()))?;
        let found = version
            .as_u64()
            .ok_or_else(|| parse(format!("format_version must be an integer, got {version}")))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(Error::FormatVersion {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            });
        }
        let model: TrainedModel = serde_json::from_value(value).map_err(|e| parse(e.to_string()))?;
        model.validate().map_err(|e| parse(e.to_string()))?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Directory of models stored as `<name>.json`.
#[derive(Debug, Clone)]
pub struct ModelStore {
    pub dir: PathBuf,
}

impl ModelStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ModelStore { dir: dir.into() }
    }

    pub fn path_for(&self, name: &str) -> Result<PathBuf> {
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !name.starts_with('.');
        if !ok {
            return Err(Error::invalid(format!(
                "model name {name:?} must be non-empty and use only letters, digits, '-', '_' or '.'"
            )));
        }
        Ok(self.dir.join(format!("{name}.json")))
    }

    pub fn save(&self, model: &TrainedModel) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(&model.name)?;
        model.save(&path)?;
        Ok(path)
    }

    pub fn load(&self, name: &str) -> Result<TrainedModel> {
        TrainedModel::load(self.path_for(name)?)
    }
}
