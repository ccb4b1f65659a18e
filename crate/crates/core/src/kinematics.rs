//! Denavit-Hartenberg transforms and the forward (base to tip) velocity and
//! acceleration recursion.
//!
//! Every vector produced here lives in the base frame. Link-local data (the
//! centre-of-mass offsets) is rotated into the base frame with the link's
//! accumulated rotation before it enters the recursion.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::datasets::RobotDescription;
use crate::error::{Error, Result};

/// One row of a Denavit-Hartenberg table.
///
/// Under [`DhConvention::Modified`] the `a` and `alpha` of row `n` are the
/// values of the preceding axis (`a_{n-1}`, `alpha_{n-1}`), which is how
/// modified tables are usually tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
    /// Added to the joint variable before the transform is evaluated.
    #[serde(default)]
    pub theta_offset: f64,
}

impl DhRow {
    pub fn new(d: f64, a: f64, alpha: f64) -> Self {
        DhRow {
            d,
            a,
            alpha,
            theta_offset: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite() && self.a.is_finite() && self.alpha.is_finite() && self.theta_offset.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DhConvention {
    /// Classic (distal) convention; joint `n` rotates about `z_{n-1}`.
    Traditional = 0,
    /// Modified (proximal) convention; joint `n` rotates about `z_n`.
    Modified = 1,
}

impl DhConvention {
    /// Maps the numeric flag used in robot tables (0 normal, 1 modified).
    pub fn from_flag(flag: u8) -> Result<Self> {
        match flag {
            0 => Ok(DhConvention::Traditional),
            1 => Ok(DhConvention::Modified),
            other => Err(Error::invalid(format!("DH convention flag must be 0 or 1, got {other}"))),
        }
    }
}

/// Rigid transform with an implied `[0, 0, 0, 1]` bottom row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl HomogeneousTransform {
    pub fn identity() -> Self {
        HomogeneousTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Orthonormality and unit determinant of the rotation block, within `tol`.
    pub fn is_proper_rigid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        let gram = r * r.transpose() - Matrix3::identity();
        gram.amax() <= tol && (r.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: HomogeneousTransform) -> HomogeneousTransform {
        HomogeneousTransform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

impl Mul for &HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: &HomogeneousTransform) -> HomogeneousTransform {
        *self * *rhs
    }
}

/// Joint positions, velocities and accelerations for the actuated joints.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub ddq: Vec<f64>,
}

impl JointState {
    pub fn new(q: Vec<f64>, dq: Vec<f64>, ddq: Vec<f64>) -> Result<Self> {
        if q.len() != dq.len() || q.len() != ddq.len() {
            return Err(Error::invalid(format!(
                "joint state vectors differ in length: q {}, dq {}, ddq {}",
                q.len(),
                dq.len(),
                ddq.len()
            )));
        }
        Ok(JointState { q, dq, ddq })
    }

    pub fn rest(dof: usize) -> Self {
        JointState {
            q: vec![0.0; dof],
            dq: vec![0.0; dof],
            ddq: vec![0.0; dof],
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

/// Acceleration imposed on the base to represent gravity.
///
/// A base accelerating with `g_vector` is equivalent to a gravity field of
/// `-g_vector`, so the potential energy of a point mass `m` at `p` is
/// `m * g_vector . p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GravityConvention {
    pub g_vector: Vector3<f64>,
}

impl GravityConvention {
    pub const STANDARD_G: f64 = 9.8;

    pub fn new(g_vector: Vector3<f64>) -> Result<Self> {
        if !g_vector.iter().all(|v| v.is_finite()) || g_vector.norm() <= 0.0 {
            return Err(Error::invalid("gravity vector must be finite and non-zero"));
        }
        Ok(GravityConvention { g_vector })
    }

    /// `[0, g, 0]`, the base acceleration used by the bundled robot tables.
    pub fn table_default() -> Self {
        GravityConvention {
            g_vector: Vector3::new(0.0, Self::STANDARD_G, 0.0),
        }
    }

    pub fn z_up() -> Self {
        GravityConvention {
            g_vector: Vector3::new(0.0, 0.0, Self::STANDARD_G),
        }
    }
}

impl Default for GravityConvention {
    fn default() -> Self {
        Self::table_default()
    }
}

/// Per-link output of [`forward_recursion`], all in base coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkKinematics {
    pub angular_velocity: Vector3<f64>,
    pub angular_accel: Vector3<f64>,
    /// Acceleration of the link's distal point (the next joint's origin, or
    /// the tool point for the last link).
    pub origin_accel: Vector3<f64>,
    pub com_accel: Vector3<f64>,
    /// Unit axis of the joint driving this link.
    pub axis: Vector3<f64>,
    /// Point on the driving joint axis about which moments are taken.
    pub joint_origin: Vector3<f64>,
    /// From the joint origin to the distal point.
    pub r_link: Vector3<f64>,
    /// From the distal point to the link's centre of mass.
    pub r_com: Vector3<f64>,
    /// Accumulated transform of the link's own DH frame.
    pub world: HomogeneousTransform,
}

impl LinkKinematics {
    /// Lever arm from the joint origin to the centre of mass.
    pub fn r_joint_com(&self) -> Vector3<f64> {
        self.r_link + self.r_com
    }
}

fn check_finite(row: &DhRow, q: f64) -> Result<()> {
    if !row.is_finite() || !q.is_finite() {
        return Err(Error::invalid(format!("non-finite DH input: {row:?}, q = {q}")));
    }
    Ok(())
}

/// Transform from frame `n-1` to frame `n` for joint value `q`.
///
/// The modified-convention translation column is `[a, -d sin(alpha),
/// -d cos(alpha)]`. Note the sign of the last entry differs from the
/// formulation in Craig's textbook, which has `+d cos(alpha)`.
pub fn dh_transform(row: &DhRow, q: f64, convention: DhConvention) -> Result<HomogeneousTransform> {
    check_finite(row, q)?;
    let theta = q + row.theta_offset;
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    let t = match convention {
        DhConvention::Traditional => HomogeneousTransform {
            rotation: Matrix3::new(ct, -st * ca, st * sa, st, ct * ca, -ct * sa, 0.0, sa, ca),
            translation: Vector3::new(row.a * ct, row.a * st, row.d),
        },
        DhConvention::Modified => HomogeneousTransform {
            rotation: Matrix3::new(ct, -st, 0.0, st * ca, ct * ca, -sa, st * sa, ct * sa, ca),
            translation: Vector3::new(row.a, -row.d * sa, -row.d * ca),
        },
    };
    Ok(t)
}

/// Joint rotation axis expressed in the base frame: `R * z0`.
pub fn joint_axis(world_rotation: &Matrix3<f64>) -> Vector3<f64> {
    world_rotation.column(2).into_owned()
}

/// Runs the base-to-tip recursion and returns one entry per link (static
/// links included).
///
/// The base starts with zero angular velocity and acceleration; gravity
/// enters as the base linear acceleration.
pub fn forward_recursion(
    robot: &RobotDescription,
    state: &JointState,
    gravity: &GravityConvention,
) -> Result<Vec<LinkKinematics>> {
    if state.dof() != robot.dof() || state.dq.len() != robot.dof() || state.ddq.len() != robot.dof() {
        return Err(Error::invalid(format!(
            "joint state has {} entries, robot {} has {} actuated joints",
            state.dof(),
            robot.name,
            robot.dof()
        )));
    }
    let n = robot.n_links();
    let convention = robot.convention;

    let mut frames = Vec::with_capacity(n);
    let mut prev = HomogeneousTransform::identity();
    let mut joint = 0;
    let mut motion = Vec::with_capacity(n);
    for (row, &fixed) in robot.dh_rows.iter().zip(&robot.static_links) {
        let (q, dq, ddq) = if fixed {
            (0.0, 0.0, 0.0)
        } else {
            let m = (state.q[joint], state.dq[joint], state.ddq[joint]);
            joint += 1;
            m
        };
        let local = dh_transform(row, q, convention)?;
        let world = prev * local;
        frames.push((prev, world));
        motion.push((dq, ddq));
        prev = world;
    }

    let mut out = Vec::with_capacity(n);
    let mut w_prev = Vector3::zeros();
    let mut dw_prev = Vector3::zeros();
    let mut a_prev = gravity.g_vector;
    for (link, ((parent, world), &(dq, ddq))) in frames.iter().zip(&motion).enumerate() {
        let (axis, joint_origin, distal) = match convention {
            DhConvention::Traditional => (joint_axis(&parent.rotation), parent.translation, world.translation),
            DhConvention::Modified => {
                let distal = match robot.dh_rows.get(link + 1) {
                    Some(next) => {
                        // Translation of the next modified transform does not depend on its joint value.
                        let step = dh_transform(next, 0.0, convention)?;
                        world.transform_point(&step.translation)
                    }
                    None => world.translation,
                };
                (joint_axis(&world.rotation), world.translation, distal)
            }
        };
        let com = world.transform_point(&robot.link_coms[link]);
        let r_link = distal - joint_origin;
        let r_com = com - distal;

        let w = w_prev + axis * dq;
        let dw = dw_prev + axis * ddq + w_prev.cross(&axis) * dq;
        let a = a_prev + dw.cross(&r_link) + w.cross(&w.cross(&r_link));
        let a_c = a + dw.cross(&r_com) + w.cross(&w.cross(&r_com));

        out.push(LinkKinematics {
            angular_velocity: w,
            angular_accel: dw,
            origin_accel: a,
            com_accel: a_c,
            axis,
            joint_origin,
            r_link,
            r_com,
            world: *world,
        });
        w_prev = w;
        dw_prev = dw;
        a_prev = a;
    }
    Ok(out)
}
