//! Synthetic operational data from known ground-truth parameters.
//!
//! Ground-truth files are TOML:
//!
//! ```toml
//! [dynamic]
//! inertia = [[Ixx, Iyy, Izz, Ixy, Ixz, Iyz], ...]   # one per DH row, kg m^2
//! viscous = [...]                                 # one per actuated joint
//! coulomb = [...]
//!
//! [power]
//! constant = 55.0
//! joints = [[L, R, kt, kMD], ...]
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{differentiate_columns, generate_sinusoid, write_atomic, OperationalDataset, RobotDescription, SinusoidSpec};
use crate::dynamics::{inverse_dynamics, SensorKind};
use crate::error::{Error, Result};
use crate::power::{predict_power, PowerContext};
use crate::regressor::{build_layout, BackEmfForm, DynamicParameters, PhysicalParameters, PowerParameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTruth {
    pub constant: f64,
    /// `[L, R, kt, kMD]` per joint.
    pub joints: Vec<[f64; 4]>,
}

impl PowerTruth {
    pub fn to_parameters(&self) -> PowerParameters {
        PowerParameters::from_parts(self.constant, &self.joints)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub dynamic: PhysicalParameters,
    pub power: PowerTruth,
}

impl GroundTruth {
    /// Physically plausible parameters scaled from the link masses.
    ///
    /// Each link is treated as a body of gyration radius 4-6 cm; friction
    /// decreases from base to wrist. Power constants follow the sensor kind:
    /// current-sensing robots get ohmic motor values, torque-sensing robots
    /// get composite values for unit torque constants.
    pub fn plausible(robot: &RobotDescription) -> Self {
        let inertia = robot
            .link_masses
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let r = 0.04 + 0.01 * (i % 3) as f64;
                let s = m.max(0.05) * r * r;
                [0.9 * s, 1.1 * s, 0.6 * s, 0.05 * s, -0.03 * s, 0.02 * s]
            })
            .collect();
        let dof = robot.dof();
        let viscous = (0..dof).map(|j| 1.5 - 0.15 * j as f64).collect();
        let coulomb = (0..dof).map(|j| 0.8 - 0.08 * j as f64).collect();
        let power = match robot.sensor_kind {
            SensorKind::Current => {
                let k_m = robot.power_motor_constants().k_m;
                PowerTruth {
                    constant: 55.0,
                    joints: (0..dof)
                        .map(|j| [0.01, 0.4 - 0.03 * j as f64, 0.9 * k_m[j], 1.0])
                        .collect(),
                }
            }
            SensorKind::Torque => PowerTruth {
                constant: 70.0,
                joints: (0..dof).map(|j| [2e-5, 0.004 + 0.0002 * j as f64, 0.9, 0.05]).collect(),
            },
        };
        GroundTruth {
            dynamic: PhysicalParameters {
                inertia,
                viscous,
                coulomb,
                payload_force: [0.0; 3],
                payload_moment: [0.0; 3],
            },
            power,
        }
    }

    pub fn dynamic_parameters(&self, robot: &RobotDescription) -> Result<DynamicParameters> {
        DynamicParameters::from_physical(&build_layout(robot, false), &self.dynamic)
    }
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn save_ground_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    let text = toml::to_string(truth).map_err(|e| Error::invalid(format!("ground truth not serializable: {e}")))?;
    write_atomic(path.as_ref(), text.as_bytes())
}

/// Gaussian noise added to the measured joint channels and to total power.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum NoiseSpec {
    #[default]
    None,
    /// Standard deviations per joint channel and for power.
    Absolute { meas: Vec<f64>, power: f64 },
    /// Standard deviation as a fraction of each channel's RMS.
    RelativeToRms(f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthConfig {
    pub noise: NoiseSpec,
    pub seed: u64,
    pub emf: BackEmfForm,
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Simulates a robot following the excitation in `spec`.
///
/// Joint channels come from inverse dynamics with `truth_dynamic`; total
/// power from the power model with `truth_power`, evaluated on the
/// noiseless channels with finite-difference derivatives and no clamp.
/// Noise, if any, is drawn from a ChaCha8 stream seeded with `config.seed`:
/// joint channels column by column, then power.
pub fn synth_generate(
    robot: &RobotDescription,
    truth_dynamic: &DynamicParameters,
    truth_power: &PowerParameters,
    spec: &SinusoidSpec,
    config: &SynthConfig,
) -> Result<OperationalDataset> {
    robot.validate()?;
    truth_dynamic.check_robot(robot)?;
    let dof = robot.dof();
    if spec.joints.len() != dof {
        return Err(Error::invalid(format!(
            "sinusoid spec has {} joints, robot {} has {dof}",
            spec.joints.len(),
            robot.name
        )));
    }
    if truth_power.dof() != dof {
        return Err(Error::invalid(format!(
            "power parameters are for {} joints, robot has {dof}",
            truth_power.dof()
        )));
    }
    let traj = generate_sinusoid(spec)?;
    let n = traj.t.len();
    let state = |k: usize| crate::kinematics::JointState {
        q: traj.q.row(k).iter().copied().collect(),
        dq: traj.dq.row(k).iter().copied().collect(),
        ddq: traj.ddq.row(k).iter().copied().collect(),
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| inverse_dynamics(robot, truth_dynamic, &state(k)))
        .collect::<Result<_>>()?;
    let mut meas = DMatrix::from_fn(n, dof, |r, c| rows[r][c]);
    let derivatives = differentiate_columns(&meas, &traj.t)?;
    let ctx = PowerContext::for_robot(robot, config.emf);
    let mut power: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let m: Vec<f64> = meas.row(k).iter().copied().collect();
            let d: Vec<f64> = derivatives.row(k).iter().copied().collect();
            let dq: Vec<f64> = traj.dq.row(k).iter().copied().collect();
            predict_power(truth_power, &ctx, &m, &d, &dq, false).map(|p| p.raw_total)
        })
        .collect::<Result<_>>()?;

    let (meas_std, power_std) = match &config.noise {
        NoiseSpec::None => (vec![0.0; dof], 0.0),
        NoiseSpec::Absolute { meas, power } => {
            if meas.len() != dof {
                return Err(Error::invalid(format!("{} meas noise levels for {dof} joints", meas.len())));
            }
            (meas.clone(), *power)
        }
        NoiseSpec::RelativeToRms(f) => (
            (0..dof).map(|c| f * rms(meas.column(c).iter().copied())).collect(),
            f * rms(power.iter().copied()),
        ),
    };
    if meas_std.iter().chain([&power_std]).any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid("noise standard deviations must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    for (c, &s) in meas_std.iter().enumerate() {
        if s > 0.0 {
            for r in 0..n {
                meas[(r, c)] += s * std_normal.sample(&mut rng);
            }
        }
    }
    if power_std > 0.0 {
        for p in &mut power {
            *p += power_std * std_normal.sample(&mut rng);
        }
    }
    OperationalDataset::new(traj.t, traj.q, traj.dq, traj.ddq, Some(meas), Some(power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{DhConvention, DhRow};
    use nalgebra::Vector3;

    fn arm() -> RobotDescription {
        RobotDescription::builder("arm", DhConvention::Traditional)
            .link(DhRow::new(0.1, 0.0, std::f64::consts::FRAC_PI_2), 2.0, Vector3::new(0.0, -0.02, 0.0))
            .link(DhRow::new(0.0, 0.3, 0.0), 1.5, Vector3::new(-0.15, 0.0, 0.01))
            .sensor(SensorKind::Current)
            .motors(vec![10.0, 8.0])
            .build()
            .unwrap()
    }

    fn short_spec() -> SinusoidSpec {
        let mut spec = SinusoidSpec::training_default(2);
        spec.duration = 2.0;
        spec.sample_rate = 100.0;
        spec
    }

    #[test]
    fn seeded_runs_are_identical() {
        let robot = arm();
        let truth = GroundTruth::plausible(&robot);
        let config = SynthConfig {
            noise: NoiseSpec::RelativeToRms(0.01),
            seed: 7,
            emf: BackEmfForm::Signed,
        };
        let dynamic = truth.dynamic_parameters(&robot).unwrap();
        let power = truth.power.to_parameters();
        let a = synth_generate(&robot, &dynamic, &power, &short_spec(), &config).unwrap();
        let b = synth_generate(&robot, &dynamic, &power, &short_spec(), &config).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&robot, &dynamic, &power, &short_spec(), &SynthConfig { seed: 8, ..config }).unwrap();
        assert_ne!(a.power, c.power);
    }

    #[test]
    fn mismatched_spec_is_rejected() {
        let robot = arm();
        let truth = GroundTruth::plausible(&robot);
        let dynamic = truth.dynamic_parameters(&robot).unwrap();
        let spec = SinusoidSpec::training_default(3);
        assert!(synth_generate(&robot, &dynamic, &truth.power.to_parameters(), &spec, &SynthConfig::default()).is_err());
    }

    #[test]
    fn ground_truth_toml_round_trip() {
        let truth = GroundTruth::plausible(&arm());
        let text = toml::to_string(&truth).unwrap();
        assert_eq!(toml::from_str::<GroundTruth>(&text).unwrap(), truth);
    }
}
