//! File formats, excitation trajectories and the synthetic data generator.

mod operational;
mod robot;
mod synth;
mod trajectory;

use std::io::Write;
use std::path::Path;

pub use operational::{load_dataset, load_dataset_any, read_dataset, save_dataset, write_dataset, OperationalDataset};
pub use robot::{
    load_robot_description, parse_angle, parse_robot_description, robot_description_to_toml,
    save_robot_description, RobotBuilder, RobotDescription,
};
pub use synth::{load_ground_truth, save_ground_truth, synth_generate, GroundTruth, NoiseSpec, PowerTruth, SynthConfig};
pub use trajectory::{
    differentiate, differentiate_columns, generate_sinusoid, load_sinusoid_spec, save_sinusoid_spec,
    sinusoid_spec_to_toml, SinusoidJoint, SinusoidSpec, Trajectory,
};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so a failed write never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
