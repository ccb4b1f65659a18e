//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls the recursion code under test: positions come from a
//! separate DH chain, velocities from the geometric Jacobian, and the planar
//! arm from its closed-form Lagrangian.
#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robot_energy::datasets::{
    generate_sinusoid, synth_generate, GroundTruth, OperationalDataset, SinusoidSpec, SynthConfig,
};
use robot_energy::dynamics::{inverse_dynamics_physical, FrictionParameters};
use robot_energy::fixtures::Fixture;
use robot_energy::regressor::{build_layout, inertia_matrix, PhysicalParameters};
use robot_energy::{inverse_dynamics, DhConvention, DhRow, DynamicParameters, JointState, RobotDescription, SensorKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Transform of one DH row written out from scratch.
pub fn dh(row: &DhRow, q: f64, convention: DhConvention) -> (Matrix3<f64>, Vector3<f64>) {
    let (st, ct) = (q + row.theta_offset).sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    match convention {
        DhConvention::Traditional => (
            Matrix3::new(ct, -st * ca, st * sa, st, ct * ca, -ct * sa, 0.0, sa, ca),
            Vector3::new(row.a * ct, row.a * st, row.d),
        ),
        DhConvention::Modified => (
            Matrix3::new(ct, -st, 0.0, st * ca, ct * ca, -sa, st * sa, ct * sa, ca),
            Vector3::new(row.a, -row.d * sa, -row.d * ca),
        ),
    }
}

/// World pose of every link frame plus the axis and origin of every row's
/// joint (static rows included), for a vector of row angles.
pub struct Chain {
    pub rotation: Vec<Matrix3<f64>>,
    pub origin: Vec<Vector3<f64>>,
    pub joint_axis: Vec<Vector3<f64>>,
    pub joint_origin: Vec<Vector3<f64>>,
    pub com: Vec<Vector3<f64>>,
}

pub fn row_angles(robot: &RobotDescription, q: &[f64]) -> Vec<f64> {
    let mut it = q.iter();
    robot
        .static_links
        .iter()
        .map(|s| if *s { 0.0 } else { *it.next().unwrap() })
        .collect()
}

pub fn chain(robot: &RobotDescription, q: &[f64]) -> Chain {
    let angles = row_angles(robot, q);
    let mut r = Matrix3::identity();
    let mut p = Vector3::zeros();
    let mut c = Chain {
        rotation: vec![],
        origin: vec![],
        joint_axis: vec![],
        joint_origin: vec![],
        com: vec![],
    };
    for (i, row) in robot.dh_rows.iter().enumerate() {
        let (rl, pl) = dh(row, angles[i], robot.convention);
        let (parent_r, parent_p) = (r, p);
        p = parent_p + parent_r * pl;
        r = parent_r * rl;
        match robot.convention {
            DhConvention::Traditional => {
                c.joint_axis.push(parent_r.column(2).into_owned());
                c.joint_origin.push(parent_p);
            }
            DhConvention::Modified => {
                c.joint_axis.push(r.column(2).into_owned());
                c.joint_origin.push(p);
            }
        }
        c.com.push(p + r * robot.link_coms[i]);
        c.rotation.push(r);
        c.origin.push(p);
    }
    c
}

/// Row angle rates (static rows have zero rate).
pub fn row_rates(robot: &RobotDescription, dq: &[f64]) -> Vec<f64> {
    row_angles(robot, dq)
}

/// Kinetic and potential energy. Gravity enters as base acceleration
/// `g_vector`, i.e. a field of `-g_vector`, so the potential is `m g . c`.
pub fn energy(robot: &RobotDescription, inertia: &[[f64; 6]], q: &[f64], dq: &[f64]) -> (f64, f64) {
    let c = chain(robot, q);
    let rates = row_rates(robot, dq);
    let g = robot.gravity.g_vector;
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for (i, ii) in inertia.iter().enumerate() {
        let mut w = Vector3::zeros();
        let mut v = Vector3::zeros();
        for (k, rate) in rates.iter().enumerate().take(i + 1) {
            w += c.joint_axis[k] * *rate;
            v += c.joint_axis[k].cross(&(c.com[i] - c.joint_origin[k])) * *rate;
        }
        let m = robot.link_masses[i];
        let local = Matrix3::new(ii[0], ii[3], ii[4], ii[3], ii[1], ii[5], ii[4], ii[5], ii[2]);
        let iw = c.rotation[i] * local * c.rotation[i].transpose();
        kinetic += 0.5 * m * v.norm_squared() + 0.5 * w.dot(&(iw * w));
        potential += m * g.dot(&c.com[i]);
    }
    (kinetic, potential)
}

/// Static joint torques: each joint holds the weight of everything distal.
pub fn static_gravity_torques(robot: &RobotDescription, q: &[f64]) -> Vec<f64> {
    let c = chain(robot, q);
    let g = robot.gravity.g_vector;
    let mut out = vec![];
    for i in 0..robot.n_links() {
        if robot.static_links[i] {
            continue;
        }
        let mut moment = Vector3::zeros();
        for j in i..robot.n_links() {
            moment += (c.com[j] - c.joint_origin[i]).cross(&(g * robot.link_masses[j]));
        }
        out.push(moment.dot(&c.joint_axis[i]));
    }
    out
}

/// Planar two-link arm rotating about z, gravity `g` along +y base
/// acceleration. Link `i` has length `l[i]`, mass `m[i]`, COM `s[i]` in its
/// own (distal) frame and moment of inertia `izz[i]` about the COM.
pub struct Planar {
    pub l: [f64; 2],
    pub m: [f64; 2],
    pub s: [[f64; 3]; 2],
    pub izz: [f64; 2],
    pub g: f64,
}

impl Planar {
    pub fn robot(&self) -> RobotDescription {
        let mut b = RobotDescription::builder("planar", DhConvention::Traditional);
        for i in 0..2 {
            b = b.link(DhRow::new(0.0, self.l[i], 0.0), self.m[i], Vector3::from(self.s[i]));
        }
        b.sensor(SensorKind::Torque)
            .gravity(robot_energy::GravityConvention::new(Vector3::new(0.0, self.g, 0.0)).unwrap())
            .build()
            .unwrap()
    }

    fn polar(&self, i: usize) -> (f64, f64) {
        let x = self.l[i] + self.s[i][0];
        let y = self.s[i][1];
        ((x * x + y * y).sqrt(), y.atan2(x))
    }

    /// Closed-form Lagrangian torques.
    pub fn torques(&self, q: [f64; 2], dq: [f64; 2], ddq: [f64; 2]) -> [f64; 2] {
        let (r1, d1) = self.polar(0);
        let (r2, d2) = self.polar(1);
        let [m1, m2] = self.m;
        let [i1, i2] = self.izz;
        let l1 = self.l[0];
        let c2 = (q[1] + d2).cos();
        let m11 = m1 * r1 * r1 + i1 + m2 * (l1 * l1 + r2 * r2 + 2.0 * l1 * r2 * c2) + i2;
        let m12 = m2 * (r2 * r2 + l1 * r2 * c2) + i2;
        let m22 = m2 * r2 * r2 + i2;
        let h = m2 * l1 * r2 * (q[1] + d2).sin();
        let g1 = self.g * (m1 * r1 * (q[0] + d1).cos() + m2 * (l1 * q[0].cos() + r2 * (q[0] + q[1] + d2).cos()));
        let g2 = self.g * m2 * r2 * (q[0] + q[1] + d2).cos();
        [
            m11 * ddq[0] + m12 * ddq[1] - h * (2.0 * dq[0] * dq[1] + dq[1] * dq[1]) + g1,
            m12 * ddq[0] + m22 * ddq[1] + h * dq[0] * dq[0] + g2,
        ]
    }

    /// Closed-form COM acceleration of link 2 (x, y).
    pub fn com2_accel(&self, q: [f64; 2], dq: [f64; 2], ddq: [f64; 2]) -> [f64; 2] {
        let (r2, d2) = self.polar(1);
        let l1 = self.l[0];
        let a = q[0];
        let b = q[0] + q[1] + d2;
        let wa = dq[0];
        let wb = dq[0] + dq[1];
        let aa = ddq[0];
        let ab = ddq[0] + ddq[1];
        [
            -l1 * (aa * a.sin() + wa * wa * a.cos()) - r2 * (ab * b.sin() + wb * wb * b.cos()),
            l1 * (aa * a.cos() - wa * wa * a.sin()) + r2 * (ab * b.cos() - wb * wb * b.sin()),
        ]
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, dof: usize) -> JointState {
    let mut v = |s: f64| (0..dof).map(|_| rng.random_range(-s..s)).collect::<Vec<f64>>();
    let q = v(std::f64::consts::PI);
    let dq = v(2.0);
    let ddq = v(5.0);
    JointState::new(q, dq, ddq).unwrap()
}

pub fn zero_friction(truth: &PhysicalParameters) -> PhysicalParameters {
    let mut t = truth.clone();
    t.viscous.iter_mut().for_each(|v| *v = 0.0);
    t.coulomb.iter_mut().for_each(|v| *v = 0.0);
    t
}

/// Synthetic dataset for a robot with its plausible ground truth.
pub fn synth(robot: &RobotDescription, spec: &SinusoidSpec, config: &SynthConfig) -> OperationalDataset {
    let truth = GroundTruth::plausible(robot);
    synth_generate(
        robot,
        &truth.dynamic_parameters(robot).unwrap(),
        &truth.power.to_parameters(),
        spec,
        config,
    )
    .unwrap()
}

pub fn short_spec(dof: usize, seconds: f64, rate: f64) -> SinusoidSpec {
    let mut s = SinusoidSpec::training_default(dof);
    s.duration = seconds;
    s.sample_rate = rate;
    s
}

pub fn random_planar(rng: &mut ChaCha8Rng) -> Planar {
    Planar {
        l: [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)],
        m: [rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)],
        s: [
            [rng.random_range(-0.3..0.0), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)],
            [rng.random_range(-0.3..0.0), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)],
        ],
        izz: [rng.random_range(0.01..0.2), rng.random_range(0.01..0.2)],
        g: 9.8,
    }
}

/// Power balance: the work done by the joints equals the change in
/// mechanical energy.
pub fn energy_balance_error(fixture: Fixture) -> f64 {
    let mut robot = fixture.robot();
    robot.sensor_kind = SensorKind::Torque;
    let truth = zero_friction(&GroundTruth::plausible(&robot).dynamic);
    let inertias: Vec<_> = truth.inertia.iter().map(inertia_matrix).collect();
    let spec = short_spec(robot.dof(), 10.0, 500.0);
    let traj = generate_sinusoid(&spec).unwrap();
    let n = traj.t.len();
    let row = |m: &nalgebra::DMatrix<f64>, k: usize| m.row(k).iter().copied().collect::<Vec<f64>>();
    let friction = FrictionParameters::zero(robot.dof());
    let mut work = 0.0;
    let mut prev_power = None;
    let (k0, p0) = energy(&robot, &truth.inertia, &row(&traj.q, 0), &row(&traj.dq, 0));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..n {
        let state = JointState::new(row(&traj.q, k), row(&traj.dq, k), row(&traj.ddq, k)).unwrap();
        let tau = inverse_dynamics_physical(&robot, &inertias, &friction, &state).unwrap();
        let power: f64 = tau.iter().zip(&state.dq).map(|(t, w)| t * w).sum();
        if let Some(p) = prev_power {
            work += 0.5 * (p + power) * (traj.t[k] - traj.t[k - 1]);
        }
        prev_power = Some(power);
        let (ke, pe) = energy(&robot, &truth.inertia, &state.q, &state.dq);
        let delta = ke + pe - k0 - p0;
        worst = worst.max((work - delta).abs());
        scale = scale.max(delta.abs());
    }
    worst / scale
}


/// Largest torque difference between inverse dynamics and the Lagrangian
/// over `n` random arms and states.
pub fn planar_max_error(seed: u64, n: usize) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let arm = random_planar(&mut rng);
        let robot = arm.robot();
        // Off-axis inertia terms are random too: they must not leak into the torques.
        let inertia: Vec<[f64; 6]> = (0..2)
            .map(|i| {
                let mut c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-0.05..0.05));
                c[0] = rng.random_range(0.01..0.2);
                c[1] = rng.random_range(0.01..0.2);
                c[2] = arm.izz[i];
                c
            })
            .collect();
        let physical = PhysicalParameters {
            inertia,
            viscous: vec![0.0; 2],
            coulomb: vec![0.0; 2],
            payload_force: [0.0; 3],
            payload_moment: [0.0; 3],
        };
        let params = DynamicParameters::from_physical(&build_layout(&robot, false), &physical).unwrap();
        let s = random_state(&mut rng, 2);
        let tau = inverse_dynamics(&robot, &params, &s).unwrap();
        let expected = arm.torques([s.q[0], s.q[1]], [s.dq[0], s.dq[1]], [s.ddq[0], s.ddq[1]]);
        for j in 0..2 {
            worst = worst.max((tau[j] - expected[j]).abs());
        }
    }
    worst
}
