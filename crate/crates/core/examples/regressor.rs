// The per-joint regressor: output = known offset + coefficients . parameters.

use robot_energy::datasets::GroundTruth;
use robot_energy::fixtures::Fixture;
use robot_energy::regressor::dynamic_regressor_row;
use robot_energy::{build_layout, inverse_dynamics, JointState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let robot = Fixture::Gen3.robot();
    let layout = build_layout(&robot, false);
    println!("{}: {} unknowns in total", robot.name, layout.total_count());
    for j in 0..robot.dof() {
        let labels = layout.labels(j);
        println!("  joint {}: {:>2} unknowns, first {:?}", j + 1, layout.count(j), &labels[..3]);
    }

    let state = JointState::new(vec![0.3; 7], vec![0.5; 7], vec![-0.2; 7])?;
    let params = GroundTruth::plausible(&robot).dynamic_parameters(&robot)?;
    let direct = inverse_dynamics(&robot, &params, &state)?;
    for (j, tau) in direct.iter().enumerate() {
        let row = dynamic_regressor_row(&robot, &state, j, &layout)?;
        let affine = row.evaluate(&params.values[j]);
        println!("  joint {}: direct {tau:+.6}  regressor {affine:+.6}", j + 1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
