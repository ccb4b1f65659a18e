// Forward kinematics of a bundled robot: link frames and joint axes at a pose.

use robot_energy::fixtures::Fixture;
use robot_energy::kinematics::forward_recursion;
use robot_energy::JointState;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for fixture in [Fixture::Ur3e, Fixture::Fr3] {
        let robot = fixture.robot();
        let q: Vec<f64> = (0..robot.dof()).map(|j| 0.2 * j as f64 - 0.5).collect();
        let state = JointState::new(q, vec![0.0; robot.dof()], vec![0.0; robot.dof()])?;
        let links = forward_recursion(&robot, &state, &robot.gravity)?;
        println!("{} ({:?} DH)", robot.name, robot.convention);
        for (i, link) in links.iter().enumerate() {
            let p = link.world.translation;
            let z = link.axis;
            println!(
                "  link {}: origin [{:+.4} {:+.4} {:+.4}]  axis [{:+.3} {:+.3} {:+.3}]",
                i + 1,
                p.x,
                p.y,
                p.z,
                z.x,
                z.y,
                z.z
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
