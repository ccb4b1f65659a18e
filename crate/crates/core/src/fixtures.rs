//! Bundled robot descriptions (UR3e, UR10e, Gen3, FR3) and companion files.

use std::path::{Path, PathBuf};

use crate::datasets::{
    parse_robot_description, save_ground_truth, save_sinusoid_spec, write_atomic, GroundTruth, RobotDescription,
    SinusoidSpec,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fixture {
    Ur3e,
    Ur10e,
    Gen3,
    Fr3,
}

impl Fixture {
    pub const ALL: [Fixture; 4] = [Fixture::Ur3e, Fixture::Ur10e, Fixture::Gen3, Fixture::Fr3];

    /// File stem, e.g. `ur3e`.
    pub fn stem(self) -> &'static str {
        match self {
            Fixture::Ur3e => "ur3e",
            Fixture::Ur10e => "ur10e",
            Fixture::Gen3 => "gen3",
            Fixture::Fr3 => "fr3",
        }
    }

    pub fn toml(self) -> &'static str {
        match self {
            Fixture::Ur3e => include_str!("../fixtures/ur3e.toml"),
            Fixture::Ur10e => include_str!("../fixtures/ur10e.toml"),
            Fixture::Gen3 => include_str!("../fixtures/gen3.toml"),
            Fixture::Fr3 => include_str!("../fixtures/fr3.toml"),
        }
    }

    pub fn robot(self) -> RobotDescription {
        parse_robot_description(self.toml(), Path::new(self.stem())).expect("bundled fixture is valid")
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.stem().eq_ignore_ascii_case(name) || f.robot().name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::invalid(format!("unknown fixture {name:?}; expected ur3e, ur10e, gen3 or fr3")))
    }
}

/// Writes, for every fixture, `<stem>.toml`, `<stem>_train_spec.toml`,
/// `<stem>_test_spec.toml` and `<stem>_truth.toml` into `dir`.
pub fn write_all(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in Fixture::ALL {
        let robot = f.robot();
        let stem = f.stem();
        let path = dir.join(format!("{stem}.toml"));
        write_atomic(&path, f.toml().as_bytes())?;
        written.push(path);
        let path = dir.join(format!("{stem}_train_spec.toml"));
        save_sinusoid_spec(&SinusoidSpec::training_default(robot.dof()), &path)?;
        written.push(path);
        let path = dir.join(format!("{stem}_test_spec.toml"));
        save_sinusoid_spec(&SinusoidSpec::testing_default(robot.dof()), &path)?;
        written.push(path);
        let path = dir.join(format!("{stem}_truth.toml"));
        save_ground_truth(&GroundTruth::plausible(&robot), &path)?;
        written.push(path);
    }
    Ok(written)
}

/// One row of the published results on physical robots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceResult {
    pub robot: &'static str,
    pub split: &'static str,
    /// A for current-sensing robots, N m for torque-sensing ones.
    pub rmse_d: f64,
    pub rmse_d_pct: f64,
    pub rmse_w: f64,
    pub rmse_pct: f64,
    pub r_squared: f64,
}

const fn row(
    robot: &'static str,
    split: &'static str,
    rmse_d: f64,
    rmse_d_pct: f64,
    rmse_w: f64,
    rmse_pct: f64,
    r_squared: f64,
) -> ReferenceResult {
    ReferenceResult {
        robot,
        split,
        rmse_d,
        rmse_d_pct,
        rmse_w,
        rmse_pct,
        r_squared,
    }
}

/// Results reported for the four robots on recorded data. They are context
/// only: the recordings are not bundled and cannot be reproduced with the
/// synthetic generator.
pub const REFERENCE_RESULTS: [ReferenceResult; 8] = [
    row("UR3e", "Training", 0.080, 2.30, 1.42, 1.24, 0.975),
    row("UR3e", "Testing", 0.085, 3.41, 1.45, 2.66, 0.975),
    row("UR10e", "Training", 0.268, 1.71, 2.74, 1.74, 0.980),
    row("UR10e", "Testing", 0.272, 2.52, 4.58, 2.91, 0.972),
    row("Gen3", "Training", 0.147, 1.63, 2.80, 2.80, 0.932),
    row("Gen3", "Testing", 0.275, 3.07, 5.25, 6.55, 0.894),
    row("FR3", "Training", 0.308, 5.47, 2.62, 3.03, 0.952),
    row("FR3", "Testing", 0.429, 9.00, 5.07, 5.87, 0.870),
];
