// Save a trained model, reload it and query single states.

use robot_energy::datasets::{synth_generate, GroundTruth, SinusoidSpec, SynthConfig};
use robot_energy::fixtures::Fixture;
use robot_energy::{gen_train_model, pc_model, JointState, TrainOptions, TrainedModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let robot = Fixture::Gen3.robot();
    let truth = GroundTruth::plausible(&robot);
    let mut spec = SinusoidSpec::training_default(robot.dof());
    spec.duration = 4.0;
    let data = synth_generate(
        &robot,
        &truth.dynamic_parameters(&robot)?,
        &truth.power.to_parameters(),
        &spec,
        &SynthConfig::default(),
    )?;
    let model = gen_train_model(&robot, &data, "gen3", TrainOptions::default())?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("gen3.json");
    model.save(&path)?;
    let model = TrainedModel::load(&path)?;

    let poses = [
        ("holding", JointState::new(vec![0.2, 0.8, 0.2, 0.8, 0.2, 0.8, 0.2], vec![0.0; 7], vec![0.0; 7])?),
        ("sweeping", JointState::new(vec![0.2, 0.8, 0.2, 0.8, 0.2, 0.8, 0.2], vec![0.8; 7], vec![0.0; 7])?),
        ("accelerating", JointState::new(vec![0.2, 0.8, 0.2, 0.8, 0.2, 0.8, 0.2], vec![0.8; 7], vec![2.0; 7])?),
    ];
    for (label, state) in &poses {
        let p = pc_model(&model, state, true)?;
        let tau: Vec<String> = p.meas.iter().map(|t| format!("{t:+.2}")).collect();
        println!("{label:>12}: {:7.2} W  tau [{}] N m", p.power.total, tau.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
