mod common;

use common::*;
use nalgebra::Vector3;
use rand::Rng;
use robot_energy::datasets::GroundTruth;
use robot_energy::dynamics::{backward_recursion, inverse_dynamics_physical, joint_torques, FrictionParameters, PayloadWrench};
use robot_energy::fixtures::Fixture;
use robot_energy::kinematics::forward_recursion;
use robot_energy::regressor::{build_layout, PhysicalParameters};
use robot_energy::{inverse_dynamics, DynamicParameters, GravityConvention, JointState, SensorKind};

#[test]
fn planar_arm_matches_lagrangian() {
    let mut rng = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
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
        let q = [s.q[0], s.q[1]];
        let dq = [s.dq[0], s.dq[1]];
        let ddq = [s.ddq[0], s.ddq[1]];
        let expected = arm.torques(q, dq, ddq);
        for j in 0..2 {
            worst = worst.max((tau[j] - expected[j]).abs());
        }
        let kin = forward_recursion(&robot, &s, &robot.gravity).unwrap();
        let a = arm.com2_accel(q, dq, ddq);
        let got = kin[1].com_accel - Vector3::new(0.0, 9.8, 0.0);
        assert!((got.x - a[0]).abs() < 1e-9 && (got.y - a[1]).abs() < 1e-9 && got.z.abs() < 1e-9);
    }
    assert!(worst < 1e-9, "max torque error {worst:e}");
}

#[test]
fn point_mass_planar_arm_from_known_moments() {
    let mut rng = rng(12);
    for _ in 0..100 {
        let mut arm = random_planar(&mut rng);
        arm.izz = [0.0, 0.0];
        let robot = arm.robot();
        let s = random_state(&mut rng, 2);
        let kin = forward_recursion(&robot, &s, &robot.gravity).unwrap();
        let zero = vec![nalgebra::Matrix3::zeros(); 2];
        let chain = backward_recursion(&robot, &kin, &PayloadWrench::default(), &zero).unwrap();
        assert!(chain.unknown_moment.iter().all(|m| m.norm() == 0.0));
        let tau = joint_torques(&robot, &chain, &kin, &FrictionParameters::zero(2), &s.dq).unwrap();
        let expected = arm.torques([s.q[0], s.q[1]], [s.dq[0], s.dq[1]], [s.ddq[0], s.ddq[1]]);
        for j in 0..2 {
            assert!((tau[j] - expected[j]).abs() < 1e-9);
        }
    }
}

#[test]
fn static_gravity_on_every_fixture() {
    let mut rng = rng(13);
    for f in Fixture::ALL {
        let mut robot = f.robot();
        robot.sensor_kind = SensorKind::Torque;
        let dof = robot.dof();
        let inertias = vec![nalgebra::Matrix3::zeros(); robot.n_links()];
        let mut poses = vec![vec![0.0; dof]];
        poses.extend((0..20).map(|_| (0..dof).map(|_| rng.random_range(-3.0..3.0)).collect()));
        for q in poses {
            let state = JointState::new(q.clone(), vec![0.0; dof], vec![0.0; dof]).unwrap();
            let tau = inverse_dynamics_physical(&robot, &inertias, &FrictionParameters::zero(dof), &state).unwrap();
            let expected = static_gravity_torques(&robot, &q);
            for j in 0..dof {
                assert!((tau[j] - expected[j]).abs() < 1e-9, "{} joint {}", robot.name, j + 1);
            }
        }
    }
}

#[test]
fn ur3e_unit_masses_at_home() {
    let mut robot = Fixture::Ur3e.robot();
    robot.link_masses = vec![1.0; 6];
    let truth = GroundTruth::plausible(&robot);
    let params = truth.dynamic_parameters(&robot).unwrap();
    let currents = inverse_dynamics(&robot, &params, &JointState::rest(6)).unwrap();
    let expected = static_gravity_torques(&robot, &[0.0; 6]);
    let k_m = &robot.motor_constants.as_ref().unwrap().k_m;
    for j in 0..6 {
        assert!((currents[j] * k_m[j] - expected[j]).abs() < 1e-9);
    }
}

#[test]
fn zero_parameters_without_gravity_give_zero_output() {
    let mut rng = rng(14);
    for f in Fixture::ALL {
        let mut robot = f.robot();
        robot.link_masses.iter_mut().for_each(|m| *m = 0.0);
        robot.gravity = GravityConvention::z_up();
        let params = DynamicParameters::zeros(&build_layout(&robot, false));
        let out = inverse_dynamics(&robot, &params, &random_state(&mut rng, robot.dof())).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn energy_balance_on_every_fixture() {
    for f in Fixture::ALL {
        let rel = energy_balance_error(f);
        assert!(rel < 1e-3, "{:?}: relative energy error {rel:e}", f);
    }
}

#[test]
fn tool_force_changes_only_through_the_payload_path() {
    // A pure tool force at the last frame origin adds r x F to each joint.
    let robot = Fixture::Ur3e.robot();
    let mut with_force = robot.clone();
    with_force.payload = PayloadWrench {
        force: Vector3::new(0.0, 0.0, 5.0),
        moment: Vector3::zeros(),
        mass: 0.0,
    };
    let params = GroundTruth::plausible(&robot).dynamic_parameters(&robot).unwrap();
    let q = vec![0.3, -1.0, 0.8, 0.2, -0.4, 0.9];
    let state = JointState::new(q.clone(), vec![0.0; 6], vec![0.0; 6]).unwrap();
    let base = inverse_dynamics(&robot, &params, &state).unwrap();
    let loaded = inverse_dynamics(&with_force, &params, &state).unwrap();
    let c = chain(&robot, &q);
    let tool = c.origin[5];
    let k_m = &robot.motor_constants.as_ref().unwrap().k_m;
    for j in 0..6 {
        let extra = (tool - c.joint_origin[j]).cross(&Vector3::new(0.0, 0.0, 5.0)).dot(&c.joint_axis[j]);
        assert!(((loaded[j] - base[j]) * k_m[j] - extra).abs() < 1e-9);
    }
}
