// Simulates a robot following a sinusoidal excitation and writes the
// resulting dataset to CSV.

use robot_energy::datasets::{save_dataset, synth_generate, GroundTruth, NoiseSpec, SinusoidSpec, SynthConfig};
use robot_energy::fixtures::Fixture;
use robot_energy::BackEmfForm;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let robot = Fixture::Fr3.robot();
    let truth = GroundTruth::plausible(&robot);
    let mut spec = SinusoidSpec::training_default(robot.dof());
    spec.duration = 2.0;
    let config = SynthConfig {
        noise: NoiseSpec::RelativeToRms(0.01),
        seed: 7,
        emf: BackEmfForm::Signed,
    };
    let data = synth_generate(
        &robot,
        &truth.dynamic_parameters(&robot)?,
        &truth.power.to_parameters(),
        &spec,
        &config,
    )?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("fr3_excitation.csv");
    save_dataset(&data, &path)?;
    let power = data.power.as_deref().unwrap_or_default();
    let mean = power.iter().sum::<f64>() / power.len() as f64;
    println!("{} samples at {} Hz -> {}", data.len(), spec.sample_rate, path.display());
    println!("mean power {mean:.2} W");
    let text = std::fs::read_to_string(&path)?;
    for line in text.lines().take(3) {
        let cols: Vec<&str> = line.split(',').take(4).collect();
        println!("  {} ...", cols.join(","));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
