// Joint currents and torques for a moving robot, with and without friction.

use robot_energy::datasets::GroundTruth;
use robot_energy::fixtures::Fixture;
use robot_energy::{inverse_dynamics, JointState, SensorKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let state = JointState::new(
        vec![0.0, -1.2, 1.0, -0.6, 1.5, 0.3],
        vec![0.4, -0.2, 0.5, 0.0, -0.3, 0.8],
        vec![1.0, 0.5, -0.5, 0.2, 0.0, -1.0],
    )?;
    for fixture in [Fixture::Ur3e, Fixture::Ur10e] {
        let robot = fixture.robot();
        let params = GroundTruth::plausible(&robot).dynamic_parameters(&robot)?;
        let out = inverse_dynamics(&robot, &params, &state)?;
        let unit = match robot.sensor_kind {
            SensorKind::Current => "A",
            SensorKind::Torque => "N m",
        };
        let text: Vec<String> = out.iter().map(|v| format!("{v:+.4}")).collect();
        println!("{:>6}: [{}] {unit}", robot.name, text.join(", "));

        let mut rest = state.clone();
        rest.dq.iter_mut().for_each(|v| *v = 0.0);
        rest.ddq.iter_mut().for_each(|v| *v = 0.0);
        let hold = inverse_dynamics(&robot, &params, &rest)?;
        let text: Vec<String> = hold.iter().map(|v| format!("{v:+.4}")).collect();
        println!("{:>6}  holding the same pose: [{}] {unit}", "", text.join(", "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
