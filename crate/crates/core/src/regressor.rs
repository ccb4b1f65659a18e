//! Affine (regressor) form of the joint and power models.
//!
//! Each joint's torque or current is written as
//! `known_offset + coefficients . K_j`, where `K_j` collects the parameters
//! that are not supplied by the robot description: the inertia tensors of
//! the links distal to the joint, the joint's viscous and Coulomb friction
//! constants and, optionally, a constant payload wrench.
//!
//! The coefficients are obtained numerically. The model is affine in every
//! unknown, so evaluating it once with all unknowns at zero (the offset) and
//! once per unknown with that unknown at one reproduces the regressor
//! exactly.
//!
//! # Layout
//!
//! For the joint driving link `b` of a robot with `n` links, the unknowns
//! are, in order:
//!
//! 1. for each link `l = b..n`: `Ixx, Iyy, Izz, Ixy, Ixz, Iyz` of link `l`
//!    about its centre of mass, link-local axes;
//! 2. `kv`, then `ks`;
//! 3. with payload estimation: `Fx, Fy, Fz, Mx, My, Mz` of the tool wrench
//!    in base coordinates.
//!
//! A 6-DoF arm without static rows therefore has `6 * (6 - j) + 2` unknowns
//! for the zero-based joint `j` (38, 32, 26, 20, 14, 8), 138 in total.
//! Global indices run joint by joint in this order.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::datasets::RobotDescription;
use crate::dynamics::{joint_response, MotorConstants, SensorKind};
use crate::error::{Error, Result};
use crate::kinematics::{forward_recursion, JointState, LinkKinematics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InertiaComponent {
    Ixx,
    Iyy,
    Izz,
    Ixy,
    Ixz,
    Iyz,
}

impl InertiaComponent {
    pub const ALL: [InertiaComponent; 6] = [
        InertiaComponent::Ixx,
        InertiaComponent::Iyy,
        InertiaComponent::Izz,
        InertiaComponent::Ixy,
        InertiaComponent::Ixz,
        InertiaComponent::Iyz,
    ];

    fn entries(self) -> [(usize, usize); 2] {
        match self {
            InertiaComponent::Ixx => [(0, 0), (0, 0)],
            InertiaComponent::Iyy => [(1, 1), (1, 1)],
            InertiaComponent::Izz => [(2, 2), (2, 2)],
            InertiaComponent::Ixy => [(0, 1), (1, 0)],
            InertiaComponent::Ixz => [(0, 2), (2, 0)],
            InertiaComponent::Iyz => [(1, 2), (2, 1)],
        }
    }

    fn set(self, m: &mut Matrix3<f64>, value: f64) {
        for (r, c) in self.entries() {
            m[(r, c)] = value;
        }
    }
}

/// Packs `[Ixx, Iyy, Izz, Ixy, Ixz, Iyz]` into a symmetric tensor.
pub fn inertia_matrix(c: &[f64; 6]) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for (comp, v) in InertiaComponent::ALL.iter().zip(c) {
        comp.set(&mut m, *v);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParameterKind {
    Inertia { link: usize, component: InertiaComponent },
    Viscous,
    Coulomb,
    PayloadForce { axis: usize },
    PayloadMoment { axis: usize },
}

impl ParameterKind {
    pub fn label(&self) -> String {
        const AXES: [&str; 3] = ["x", "y", "z"];
        match self {
            ParameterKind::Inertia { link, component } => format!("L{}.{component:?}", link + 1),
            ParameterKind::Viscous => "kv".into(),
            ParameterKind::Coulomb => "ks".into(),
            ParameterKind::PayloadForce { axis } => format!("F{}", AXES[*axis]),
            ParameterKind::PayloadMoment { axis } => format!("M{}", AXES[*axis]),
        }
    }
}

/// Ordered unknown-parameter descriptors for every joint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterLayout {
    pub n_links: usize,
    pub joint_links: Vec<usize>,
    pub estimate_payload: bool,
    pub joints: Vec<Vec<ParameterKind>>,
}

impl ParameterLayout {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn count(&self, joint: usize) -> usize {
        self.joints[joint].len()
    }

    pub fn total_count(&self) -> usize {
        self.joints.iter().map(Vec::len).sum()
    }

    pub fn max_count(&self) -> usize {
        self.joints.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Global index of the first unknown of `joint`.
    pub fn offset(&self, joint: usize) -> usize {
        self.joints[..joint].iter().map(Vec::len).sum()
    }

    pub fn global_index(&self, joint: usize, local: usize) -> Option<usize> {
        (joint < self.dof() && local < self.count(joint)).then(|| self.offset(joint) + local)
    }

    /// Inverse of [`global_index`](Self::global_index).
    pub fn locate(&self, global: usize) -> Option<(usize, usize)> {
        let mut start = 0;
        for (j, params) in self.joints.iter().enumerate() {
            if global < start + params.len() {
                return Some((j, global - start));
            }
            start += params.len();
        }
        None
    }

    pub fn labels(&self, joint: usize) -> Vec<String> {
        self.joints[joint].iter().map(ParameterKind::label).collect()
    }

    pub fn check_robot(&self, robot: &RobotDescription) -> Result<()> {
        if self.n_links != robot.n_links() || self.joint_links != robot.joint_links() {
            return Err(Error::invalid(format!(
                "parameter layout ({} links, {} joints) does not match robot {} ({} links, {} joints)",
                self.n_links,
                self.dof(),
                robot.name,
                robot.n_links(),
                robot.dof()
            )));
        }
        Ok(())
    }
}

pub fn build_layout(robot: &RobotDescription, estimate_payload: bool) -> ParameterLayout {
    let joint_links = robot.joint_links();
    let n = robot.n_links();
    let joints = joint_links
        .iter()
        .map(|&b| {
            let mut params: Vec<ParameterKind> = (b..n)
                .flat_map(|link| {
                    InertiaComponent::ALL
                        .iter()
                        .map(move |&component| ParameterKind::Inertia { link, component })
                })
                .collect();
            params.push(ParameterKind::Viscous);
            params.push(ParameterKind::Coulomb);
            if estimate_payload {
                params.extend((0..3).map(|axis| ParameterKind::PayloadForce { axis }));
                params.extend((0..3).map(|axis| ParameterKind::PayloadMoment { axis }));
            }
            params
        })
        .collect();
    ParameterLayout {
        n_links: n,
        joint_links,
        estimate_payload,
        joints,
    }
}

/// Unknowns of one joint decoded into the quantities the recursion uses.
#[derive(Debug, Clone, PartialEq)]
pub struct JointParameters {
    /// One tensor per link; links outside the joint's layout stay zero.
    pub inertias: Vec<Matrix3<f64>>,
    pub viscous: f64,
    pub coulomb: f64,
    /// Estimated tool force and moment, replacing the robot's own payload
    /// wrench (its mass is kept).
    pub payload: Option<(Vector3<f64>, Vector3<f64>)>,
}

impl JointParameters {
    fn zero(n_links: usize, estimate_payload: bool) -> Self {
        JointParameters {
            inertias: vec![Matrix3::zeros(); n_links],
            viscous: 0.0,
            coulomb: 0.0,
            payload: estimate_payload.then(|| (Vector3::zeros(), Vector3::zeros())),
        }
    }

    fn set(&mut self, kind: ParameterKind, value: f64) {
        match kind {
            ParameterKind::Inertia { link, component } => component.set(&mut self.inertias[link], value),
            ParameterKind::Viscous => self.viscous = value,
            ParameterKind::Coulomb => self.coulomb = value,
            ParameterKind::PayloadForce { axis } => {
                self.payload.get_or_insert_with(|| (Vector3::zeros(), Vector3::zeros())).0[axis] = value
            }
            ParameterKind::PayloadMoment { axis } => {
                self.payload.get_or_insert_with(|| (Vector3::zeros(), Vector3::zeros())).1[axis] = value
            }
        }
    }
}

/// Per-joint unknown vectors `K_j`, in layout order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicParameters {
    pub layout: ParameterLayout,
    pub values: Vec<Vec<f64>>,
}

/// Physically consistent parameter set shared by every joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParameters {
    /// `[Ixx, Iyy, Izz, Ixy, Ixz, Iyz]` per link.
    pub inertia: Vec<[f64; 6]>,
    pub viscous: Vec<f64>,
    pub coulomb: Vec<f64>,
    /// Tool force and moment, used only when the layout estimates them.
    #[serde(default)]
    pub payload_force: [f64; 3],
    #[serde(default)]
    pub payload_moment: [f64; 3],
}

impl DynamicParameters {
    pub fn new(layout: ParameterLayout, values: Vec<Vec<f64>>) -> Result<Self> {
        let p = DynamicParameters { layout, values };
        p.check_lengths()?;
        Ok(p)
    }

    pub fn zeros(layout: &ParameterLayout) -> Self {
        DynamicParameters {
            values: layout.joints.iter().map(|p| vec![0.0; p.len()]).collect(),
            layout: layout.clone(),
        }
    }

    /// Replicates one physical parameter set into every joint's vector.
    pub fn from_physical(layout: &ParameterLayout, physical: &PhysicalParameters) -> Result<Self> {
        let dof = layout.dof();
        if physical.inertia.len() != layout.n_links || physical.viscous.len() != dof || physical.coulomb.len() != dof {
            return Err(Error::invalid(format!(
                "physical parameters need {} inertia sets and {dof} friction pairs, got {} / {} / {}",
                layout.n_links,
                physical.inertia.len(),
                physical.viscous.len(),
                physical.coulomb.len()
            )));
        }
        let values = layout
            .joints
            .iter()
            .enumerate()
            .map(|(j, params)| {
                params
                    .iter()
                    .map(|kind| match *kind {
                        ParameterKind::Inertia { link, component } => {
                            let idx = InertiaComponent::ALL.iter().position(|c| *c == component).unwrap();
                            physical.inertia[link][idx]
                        }
                        ParameterKind::Viscous => physical.viscous[j],
                        ParameterKind::Coulomb => physical.coulomb[j],
                        ParameterKind::PayloadForce { axis } => physical.payload_force[axis],
                        ParameterKind::PayloadMoment { axis } => physical.payload_moment[axis],
                    })
                    .collect()
            })
            .collect();
        DynamicParameters::new(layout.clone(), values)
    }

    fn check_lengths(&self) -> Result<()> {
        if self.values.len() != self.layout.dof() {
            return Err(Error::invalid(format!(
                "{} parameter vectors for a {}-joint layout",
                self.values.len(),
                self.layout.dof()
            )));
        }
        for (j, (v, p)) in self.values.iter().zip(&self.layout.joints).enumerate() {
            if v.len() != p.len() {
                return Err(Error::invalid(format!(
                    "joint {} has {} parameters, layout expects {}",
                    j + 1,
                    v.len(),
                    p.len()
                )));
            }
        }
        Ok(())
    }

    pub fn check_robot(&self, robot: &RobotDescription) -> Result<()> {
        self.check_lengths()?;
        self.layout.check_robot(robot)
    }

    pub fn joint(&self, joint: usize) -> &[f64] {
        &self.values[joint]
    }

    pub fn decode_joint(&self, joint: usize, n_links: usize) -> Result<JointParameters> {
        if joint >= self.layout.dof() {
            return Err(Error::invalid(format!("joint index {joint} out of range")));
        }
        let mut out = JointParameters::zero(n_links, self.layout.estimate_payload);
        for (kind, v) in self.layout.joints[joint].iter().zip(&self.values[joint]) {
            out.set(*kind, *v);
        }
        Ok(out)
    }

    /// Friction constants of every joint, read from the per-joint vectors.
    pub fn friction(&self) -> crate::dynamics::FrictionParameters {
        let mut f = crate::dynamics::FrictionParameters::zero(self.layout.dof());
        for (j, (kinds, values)) in self.layout.joints.iter().zip(&self.values).enumerate() {
            for (kind, v) in kinds.iter().zip(values) {
                match kind {
                    ParameterKind::Viscous => f.viscous[j] = *v,
                    ParameterKind::Coulomb => f.coulomb[j] = *v,
                    _ => {}
                }
            }
        }
        f
    }
}

/// One row of the joint regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorRow {
    pub known_offset: f64,
    pub coefficients: Vec<f64>,
}

impl RegressorRow {
    pub fn evaluate(&self, k: &[f64]) -> f64 {
        self.known_offset + self.coefficients.iter().zip(k).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Regressor row of `joint` by basis probing, reusing kinematics of the sample.
pub(crate) fn regressor_row_with(
    robot: &RobotDescription,
    kin: &[LinkKinematics],
    joint: usize,
    layout: &ParameterLayout,
    dq: f64,
) -> RegressorRow {
    let mut probe = JointParameters::zero(robot.n_links(), layout.estimate_payload);
    let known_offset = joint_response(robot, kin, joint, &probe, dq);
    let coefficients = layout.joints[joint]
        .iter()
        .map(|&kind| {
            probe.set(kind, 1.0);
            let v = joint_response(robot, kin, joint, &probe, dq) - known_offset;
            probe.set(kind, 0.0);
            v
        })
        .collect();
    RegressorRow {
        known_offset,
        coefficients,
    }
}

pub fn dynamic_regressor_row(
    robot: &RobotDescription,
    state: &JointState,
    joint: usize,
    layout: &ParameterLayout,
) -> Result<RegressorRow> {
    if joint >= robot.dof() {
        return Err(Error::invalid(format!(
            "joint index {joint} out of range for a {}-joint robot",
            robot.dof()
        )));
    }
    layout.check_robot(robot)?;
    let kin = forward_recursion(robot, state, &robot.gravity)?;
    Ok(regressor_row_with(robot, &kin, joint, layout, state.dq[joint]))
}

/// Form of the back-EMF term in the power model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackEmfForm {
    /// `kt * dq * i`: signed, so regenerated power is negative.
    #[default]
    Signed,
    /// `kt * dq * |i|`.
    Abs,
}

/// `K_P = [P_c, then per joint (L, R, kt, kMD)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerParameters {
    pub values: Vec<f64>,
}

pub const POWER_TERMS_PER_JOINT: usize = 4;

pub fn power_parameter_count(dof: usize) -> usize {
    1 + POWER_TERMS_PER_JOINT * dof
}

impl PowerParameters {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !(values.len() - 1).is_multiple_of(POWER_TERMS_PER_JOINT) {
            return Err(Error::invalid(format!(
                "power parameter vector must have 1 + 4 * dof entries, got {}",
                values.len()
            )));
        }
        Ok(PowerParameters { values })
    }

    pub fn zeros(dof: usize) -> Self {
        PowerParameters {
            values: vec![0.0; power_parameter_count(dof)],
        }
    }

    pub fn from_parts(constant: f64, joints: &[[f64; 4]]) -> Self {
        let mut values = vec![constant];
        for j in joints {
            values.extend_from_slice(j);
        }
        PowerParameters { values }
    }

    pub fn dof(&self) -> usize {
        (self.values.len() - 1) / POWER_TERMS_PER_JOINT
    }

    pub fn constant(&self) -> f64 {
        self.values[0]
    }

    /// `(L, R, kt, kMD)` of a joint.
    pub fn joint(&self, j: usize) -> [f64; 4] {
        let s = 1 + POWER_TERMS_PER_JOINT * j;
        [self.values[s], self.values[s + 1], self.values[s + 2], self.values[s + 3]]
    }

    pub fn labels(dof: usize) -> Vec<String> {
        let mut out = vec!["Pc".to_string()];
        for j in 1..=dof {
            out.extend(["L", "R", "kt", "kMD"].iter().map(|p| format!("{p}{j}")));
        }
        out
    }
}

/// `[1, then per joint (x dx/dt, x^2, dq x or dq |x|, |x|)]` with the
/// torque-sensor scaling `1/k_m^2, 1/k_m^2, 1/k_m, 1/k_m` folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRegressorRow {
    pub coefficients: Vec<f64>,
}

pub fn power_regressor_row(
    meas: &[f64],
    derivatives: &[f64],
    dq: &[f64],
    sensor: SensorKind,
    motors: Option<&MotorConstants>,
    emf: BackEmfForm,
) -> Result<PowerRegressorRow> {
    let dof = meas.len();
    if derivatives.len() != dof || dq.len() != dof {
        return Err(Error::invalid(format!(
            "power regressor inputs differ in length: {dof} / {} / {}",
            derivatives.len(),
            dq.len()
        )));
    }
    let scale = |j: usize| -> Result<f64> {
        match sensor {
            SensorKind::Current => Ok(1.0),
            SensorKind::Torque => {
                let m = motors.ok_or_else(|| Error::invalid("torque-sensor power model needs torque constants"))?;
                if m.len() != dof {
                    return Err(Error::invalid(format!("{} torque constants for {dof} joints", m.len())));
                }
                let k = m.k_m[j];
                if !(k > 0.0) {
                    return Err(Error::invalid(format!("torque constant of joint {} must be > 0", j + 1)));
                }
                Ok(1.0 / k)
            }
        }
    };
    let mut coefficients = Vec::with_capacity(power_parameter_count(dof));
    coefficients.push(1.0);
    for j in 0..dof {
        let s = scale(j)?;
        let x = meas[j];
        let emf_basis = match emf {
            BackEmfForm::Signed => dq[j] * x,
            BackEmfForm::Abs => dq[j] * x.abs(),
        };
        coefficients.extend([s * s * x * derivatives[j], s * s * x * x, s * emf_basis, s * x.abs()]);
    }
    Ok(PowerRegressorRow { coefficients })
}
