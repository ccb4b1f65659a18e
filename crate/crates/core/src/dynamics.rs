//! Tip-to-base Newton-Euler recursion, joint torques with friction, and the
//! torque to current conversion.
//!
//! Moments are taken about each link's joint origin and kept in base
//! coordinates. The moment is split into a part that depends only on the
//! supplied masses and geometry (`known`) and a part carrying the link
//! inertia tensors (`unknown`).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::datasets::RobotDescription;
use crate::error::{Error, Result};
use crate::kinematics::{forward_recursion, JointState, LinkKinematics};
use crate::regressor::{DynamicParameters, JointParameters};

/// What the robot's joint channel measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Current,
    Torque,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkMassProperties {
    pub mass: f64,
    /// Centre of mass in the link's own DH frame.
    pub com: Vector3<f64>,
    /// About the centre of mass, link-local axes.
    pub inertia: Matrix3<f64>,
}

impl LinkMassProperties {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0) {
            return Err(Error::invalid(format!("link mass must be >= 0, got {}", self.mass)));
        }
        if (self.inertia - self.inertia.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("inertia tensor is not symmetric"));
        }
        let eig = self.inertia.symmetric_eigenvalues();
        if eig.min() < -1e-12 * eig.amax().max(1.0) {
            return Err(Error::invalid("inertia tensor is not positive semidefinite"));
        }
        Ok(())
    }
}

/// Wrench applied by the payload at the tool point, plus the payload mass.
///
/// The mass is carried as a point mass at the tool point, so its inertial
/// and gravity load is added to `force` during the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadWrench {
    #[serde(default = "zero3")]
    pub force: Vector3<f64>,
    #[serde(default = "zero3")]
    pub moment: Vector3<f64>,
    #[serde(default)]
    pub mass: f64,
}

fn zero3() -> Vector3<f64> {
    Vector3::zeros()
}

impl Default for PayloadWrench {
    fn default() -> Self {
        PayloadWrench {
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
            mass: 0.0,
        }
    }
}

impl PayloadWrench {
    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.moment.iter()).all(|v| v.is_finite()) && self.mass.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrictionParameters {
    pub viscous: Vec<f64>,
    pub coulomb: Vec<f64>,
}

impl FrictionParameters {
    pub fn zero(dof: usize) -> Self {
        FrictionParameters {
            viscous: vec![0.0; dof],
            coulomb: vec![0.0; dof],
        }
    }
}

/// Torque constants `k_m` (N m / A), one per actuated joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MotorConstants {
    pub k_m: Vec<f64>,
}

impl MotorConstants {
    pub fn new(k_m: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = k_m.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("torque constant of joint {} must be > 0, got {v}", j + 1)));
        }
        Ok(MotorConstants { k_m })
    }

    /// All-ones constants: power coefficients then absorb the true `k_m`.
    pub fn unit(dof: usize) -> Self {
        MotorConstants { k_m: vec![1.0; dof] }
    }

    pub fn len(&self) -> usize {
        self.k_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_m.is_empty()
    }
}

/// Result of the backward recursion, one entry per link.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchChain {
    pub force: Vec<Vector3<f64>>,
    pub known_moment: Vec<Vector3<f64>>,
    pub unknown_moment: Vec<Vector3<f64>>,
}

impl WrenchChain {
    pub fn len(&self) -> usize {
        self.force.len()
    }

    pub fn is_empty(&self) -> bool {
        self.force.is_empty()
    }

    pub fn moment(&self, link: usize) -> Vector3<f64> {
        self.known_moment[link] + self.unknown_moment[link]
    }
}

/// Sign function with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Force and moment entering the last link from the tool.
fn tool_wrench(kin: &[LinkKinematics], payload: &PayloadWrench) -> (Vector3<f64>, Vector3<f64>) {
    let tool_accel = kin.last().map(|k| k.origin_accel).unwrap_or_else(Vector3::zeros);
    (payload.force + tool_accel * payload.mass, payload.moment)
}

struct Step {
    force: Vector3<f64>,
    known: Vector3<f64>,
    unknown: Vector3<f64>,
}

#[inline]
fn backward_step(link: &LinkKinematics, mass: f64, inertia_local: &Matrix3<f64>, next: &Step) -> Step {
    let inertial_force = link.com_accel * mass;
    let known = next.known + link.r_link.cross(&next.force) + link.r_joint_com().cross(&inertial_force);
    let unknown = if inertia_local.iter().all(|v| *v == 0.0) {
        next.unknown
    } else {
        let r = &link.world.rotation;
        let inertia = r * inertia_local * r.transpose();
        let w = &link.angular_velocity;
        next.unknown + inertia * link.angular_accel + w.cross(&(inertia * w))
    };
    Step {
        force: next.force + inertial_force,
        known,
        unknown,
    }
}

fn check_links(robot: &RobotDescription, kin: &[LinkKinematics], inertias: &[Matrix3<f64>]) -> Result<()> {
    let n = robot.n_links();
    if kin.len() != n || inertias.len() != n {
        return Err(Error::invalid(format!(
            "robot has {n} links but got {} kinematic entries and {} inertia tensors",
            kin.len(),
            inertias.len()
        )));
    }
    Ok(())
}

/// Propagates forces and moments from the tool back to the base.
///
/// `inertias` are about each link's centre of mass in link-local axes.
pub fn backward_recursion(
    robot: &RobotDescription,
    kin: &[LinkKinematics],
    payload: &PayloadWrench,
    inertias: &[Matrix3<f64>],
) -> Result<WrenchChain> {
    check_links(robot, kin, inertias)?;
    let n = kin.len();
    let (f_tool, n_tool) = tool_wrench(kin, payload);
    let mut chain = WrenchChain {
        force: vec![Vector3::zeros(); n],
        known_moment: vec![Vector3::zeros(); n],
        unknown_moment: vec![Vector3::zeros(); n],
    };
    let mut next = Step {
        force: f_tool,
        known: n_tool,
        unknown: Vector3::zeros(),
    };
    for i in (0..n).rev() {
        next = backward_step(&kin[i], robot.link_masses[i], &inertias[i], &next);
        chain.force[i] = next.force;
        chain.known_moment[i] = next.known;
        chain.unknown_moment[i] = next.unknown;
    }
    Ok(chain)
}

/// Projects each actuated link's moment onto its joint axis and adds
/// viscous and Coulomb friction.
pub fn joint_torques(
    robot: &RobotDescription,
    chain: &WrenchChain,
    kin: &[LinkKinematics],
    friction: &FrictionParameters,
    dq: &[f64],
) -> Result<Vec<f64>> {
    let dof = robot.dof();
    if friction.viscous.len() != dof || friction.coulomb.len() != dof || dq.len() != dof {
        return Err(Error::invalid(format!("friction and velocity vectors must have {dof} entries")));
    }
    if chain.len() != kin.len() || kin.len() != robot.n_links() {
        return Err(Error::invalid("wrench chain and kinematics do not match the robot"));
    }
    Ok(robot
        .joint_links()
        .iter()
        .enumerate()
        .map(|(j, &link)| {
            chain.known_moment[link].dot(&kin[link].axis)
                + chain.unknown_moment[link].dot(&kin[link].axis)
                + friction.viscous[j] * dq[j]
                + friction.coulomb[j] * sgn(dq[j])
        })
        .collect())
}

pub fn joint_currents(torques: &[f64], motors: &MotorConstants) -> Result<Vec<f64>> {
    if torques.len() != motors.len() {
        return Err(Error::invalid(format!(
            "{} torques but {} torque constants",
            torques.len(),
            motors.len()
        )));
    }
    if let Some(k) = motors.k_m.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::invalid(format!("torque constant must be > 0, got {k}")));
    }
    Ok(torques.iter().zip(&motors.k_m).map(|(t, k)| t / k).collect())
}

/// Torque (or current) of a single joint for one set of joint parameters,
/// reusing precomputed kinematics. Only links distal to the joint are visited.
pub(crate) fn joint_response(
    robot: &RobotDescription,
    kin: &[LinkKinematics],
    joint: usize,
    params: &JointParameters,
    dq: f64,
) -> f64 {
    let link = robot.joint_link(joint);
    let payload = match params.payload {
        Some((force, moment)) => PayloadWrench {
            force,
            moment,
            mass: robot.payload.mass,
        },
        None => robot.payload,
    };
    let (f_tool, n_tool) = tool_wrench(kin, &payload);
    let mut next = Step {
        force: f_tool,
        known: n_tool,
        unknown: Vector3::zeros(),
    };
    for i in (link..kin.len()).rev() {
        next = backward_step(&kin[i], robot.link_masses[i], &params.inertias[i], &next);
    }
    let axis = &kin[link].axis;
    let torque = next.known.dot(axis) + next.unknown.dot(axis) + params.viscous * dq + params.coulomb * sgn(dq);
    match (robot.sensor_kind, &robot.motor_constants) {
        (SensorKind::Current, Some(m)) => torque / m.k_m[joint],
        _ => torque,
    }
}

/// Full inverse dynamics: joint torques, or motor currents for robots with
/// current sensors.
///
/// Each joint is evaluated with its own parameter vector, so identified
/// models whose per-joint estimates disagree are still evaluated exactly.
pub fn inverse_dynamics(robot: &RobotDescription, params: &DynamicParameters, state: &JointState) -> Result<Vec<f64>> {
    params.check_robot(robot)?;
    let kin = forward_recursion(robot, state, &robot.gravity)?;
    inverse_dynamics_with(robot, params, &kin, state)
}

pub(crate) fn inverse_dynamics_with(
    robot: &RobotDescription,
    params: &DynamicParameters,
    kin: &[LinkKinematics],
    state: &JointState,
) -> Result<Vec<f64>> {
    (0..robot.dof())
        .map(|j| {
            let decoded = params.decode_joint(j, robot.n_links())?;
            Ok(joint_response(robot, kin, j, &decoded, state.dq[j]))
        })
        .collect()
}

/// Inverse dynamics through the explicit chain (backward recursion, joint
/// torques, currents) for a single physically consistent parameter set.
pub fn inverse_dynamics_physical(
    robot: &RobotDescription,
    inertias: &[Matrix3<f64>],
    friction: &FrictionParameters,
    state: &JointState,
) -> Result<Vec<f64>> {
    let kin = forward_recursion(robot, state, &robot.gravity)?;
    let chain = backward_recursion(robot, &kin, &robot.payload, inertias)?;
    let tau = joint_torques(robot, &chain, &kin, friction, &state.dq)?;
    match robot.sensor_kind {
        SensorKind::Torque => Ok(tau),
        SensorKind::Current => {
            let motors = robot
                .motor_constants
                .as_ref()
                .ok_or_else(|| Error::invalid("current-sensing robot has no torque constants"))?;
            joint_currents(&tau, motors)
        }
    }
}
