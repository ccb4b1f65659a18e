// Splits predicted electrical power into its components for one sample.

use robot_energy::datasets::GroundTruth;
use robot_energy::fixtures::Fixture;
use robot_energy::power::{predict_power, PowerContext};
use robot_energy::BackEmfForm;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let robot = Fixture::Ur10e.robot();
    let params = GroundTruth::plausible(&robot).power.to_parameters();
    let ctx = PowerContext::for_robot(&robot, BackEmfForm::Signed);
    let currents = [2.0, -3.5, 1.2, 0.4, -0.3, 0.1];
    let di_dt = [0.5, 0.0, -1.0, 0.2, 0.0, 0.0];
    let dq = [0.6, -0.4, 0.8, 0.0, 0.5, -1.0];

    let p = predict_power(&params, &ctx, &currents, &di_dt, &dq, true)?;
    println!("{}: total {:.3} W (constant {:.1} W)", robot.name, p.total, p.constant);
    println!("joint  inductive  resistive   back-emf     driver");
    for j in 0..robot.dof() {
        println!(
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            j + 1,
            p.inductive[j],
            p.resistive[j],
            p.back_emf[j],
            p.driver[j]
        );
    }

    // Braking: currents opposing the motion return energy. Without an idle
    // draw the raw total goes negative and the clamp reports zero.
    let mut regen = params.clone();
    regen.values[0] = 0.0;
    let braking: Vec<f64> = dq.iter().map(|w| -8.0 * w.signum()).collect();
    let q = predict_power(&regen, &ctx, &braking, &[0.0; 6], &dq, true)?;
    println!("braking: raw {:.3} W, reported {:.3} W, clamped={}", q.raw_total, q.total, q.clamped);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
