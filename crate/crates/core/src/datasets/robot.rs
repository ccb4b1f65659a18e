//! Robot description and its TOML file form.
//!
//! The file mirrors a robot datasheet table: one array per DH column, one
//! mass and one centre of mass per row. Angles may be written as numbers or
//! as simple multiples of pi (`"pi/2"`, `"-pi"`, `"3*pi/4"`).
//!
//! ```toml
//! name = "UR3e"
//! convention = "traditional"      # or "modified", or the flags 0 / 1
//! sensor = "current"              # or "torque"
//! gravity = [0.0, 9.8, 0.0]       # base acceleration, m/s^2 (optional)
//! d = [0.151, 0.0, 0.0, 0.131, 0.085, 0.092]
//! a = [0.0, -0.244, -0.213, 0.0, 0.0, 0.0]
//! alpha = ["pi/2", 0.0, 0.0, "pi/2", "-pi/2", 0.0]
//! mass = [1.98, 3.44, 1.44, 0.87, 0.81, 0.26]
//! com = [[0.0, -0.02, 0.0], ...]  # link-local, metres
//! motor_constants = [...]         # N m / A, one per actuated joint
//! static_rows = [1]               # 1-based rows without a joint (optional)
//! theta_offset = [...]            # optional, radians
//!
//! [payload]                       # optional
//! mass = 0.0
//! force = [0.0, 0.0, 0.0]
//! moment = [0.0, 0.0, 0.0]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{MotorConstants, PayloadWrench, SensorKind};
use crate::error::{Error, Result};
use crate::kinematics::{DhConvention, DhRow, GravityConvention};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDescription {
    pub name: String,
    pub convention: DhConvention,
    pub dh_rows: Vec<DhRow>,
    pub link_masses: Vec<f64>,
    /// Centre of mass of each link in the link's own DH frame.
    pub link_coms: Vec<Vector3<f64>>,
    /// Rows that carry no joint (a fixed pre-transform). Same length as `dh_rows`.
    pub static_links: Vec<bool>,
    pub payload: PayloadWrench,
    pub sensor_kind: SensorKind,
    pub motor_constants: Option<MotorConstants>,
    pub gravity: GravityConvention,
}

impl RobotDescription {
    pub fn builder(name: impl Into<String>, convention: DhConvention) -> RobotBuilder {
        RobotBuilder {
            robot: RobotDescription {
                name: name.into(),
                convention,
                dh_rows: Vec::new(),
                link_masses: Vec::new(),
                link_coms: Vec::new(),
                static_links: Vec::new(),
                payload: PayloadWrench::default(),
                sensor_kind: SensorKind::Torque,
                motor_constants: None,
                gravity: GravityConvention::table_default(),
            },
        }
    }

    /// Number of actuated joints.
    pub fn dof(&self) -> usize {
        self.static_links.iter().filter(|s| !**s).count()
    }

    pub fn n_links(&self) -> usize {
        self.dh_rows.len()
    }

    /// Link index driven by each actuated joint.
    pub fn joint_links(&self) -> Vec<usize> {
        self.static_links
            .iter()
            .enumerate()
            .filter(|(_, s)| !**s)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn joint_link(&self, joint: usize) -> usize {
        self.static_links
            .iter()
            .enumerate()
            .filter(|(_, s)| !**s)
            .nth(joint)
            .map(|(i, _)| i)
            .expect("joint index out of range")
    }

    /// Torque constants used by the power model: the robot's own, or unit
    /// constants when none are known (the identified power coefficients are
    /// then composites that absorb `k_m`).
    pub fn power_motor_constants(&self) -> MotorConstants {
        self.motor_constants
            .clone()
            .unwrap_or_else(|| MotorConstants::unit(self.dof()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dh_rows.len();
        let err = |msg: String| Err(Error::invalid(format!("robot {}: {msg}", self.name)));
        if n == 0 {
            return err("no DH rows".into());
        }
        for (field, len) in [
            ("link_masses", self.link_masses.len()),
            ("link_coms", self.link_coms.len()),
            ("static_links", self.static_links.len()),
        ] {
            if len != n {
                return err(format!("length mismatch: {field} has {len} entries, expected {n} (one per DH row)"));
            }
        }
        if let Some(i) = self.dh_rows.iter().position(|r| !r.is_finite()) {
            return err(format!("DH row {} is not finite", i + 1));
        }
        if let Some(i) = self.link_masses.iter().position(|m| !(*m >= 0.0) || !m.is_finite()) {
            return err(format!("mass of link {} must be finite and >= 0, got {}", i + 1, self.link_masses[i]));
        }
        if let Some(i) = self.link_coms.iter().position(|c| !c.iter().all(|v| v.is_finite())) {
            return err(format!("centre of mass of link {} is not finite", i + 1));
        }
        if self.dof() == 0 {
            return err("every row is static; at least one actuated joint is required".into());
        }
        if !self.payload.is_finite() || self.payload.mass < 0.0 {
            return err("payload must be finite with mass >= 0".into());
        }
        GravityConvention::new(self.gravity.g_vector)?;
        match (&self.motor_constants, self.sensor_kind) {
            (Some(m), _) => {
                if m.len() != self.dof() {
                    return err(format!(
                        "length mismatch: motor_constants has {} entries, expected {} (one per actuated joint)",
                        m.len(),
                        self.dof()
                    ));
                }
                MotorConstants::new(m.k_m.clone())?;
            }
            (None, SensorKind::Current) => {
                return err("current-sensing robots need motor_constants to relate torque and current".into());
            }
            (None, SensorKind::Torque) => {}
        }
        Ok(())
    }
}

pub struct RobotBuilder {
    robot: RobotDescription,
}

impl RobotBuilder {
    pub fn link(mut self, row: DhRow, mass: f64, com: Vector3<f64>) -> Self {
        self.robot.dh_rows.push(row);
        self.robot.link_masses.push(mass);
        self.robot.link_coms.push(com);
        self.robot.static_links.push(false);
        self
    }

    pub fn static_link(mut self, row: DhRow, mass: f64, com: Vector3<f64>) -> Self {
        self = self.link(row, mass, com);
        *self.robot.static_links.last_mut().unwrap() = true;
        self
    }

    pub fn sensor(mut self, kind: SensorKind) -> Self {
        self.robot.sensor_kind = kind;
        self
    }

    pub fn motors(mut self, k_m: Vec<f64>) -> Self {
        self.robot.motor_constants = Some(MotorConstants { k_m });
        self
    }

    pub fn gravity(mut self, gravity: GravityConvention) -> Self {
        self.robot.gravity = gravity;
        self
    }

    pub fn payload(mut self, payload: PayloadWrench) -> Self {
        self.robot.payload = payload;
        self
    }

    pub fn build(self) -> Result<RobotDescription> {
        self.robot.validate()?;
        Ok(self.robot)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Angle {
    Number(f64),
    Expr(String),
}

impl Angle {
    fn value(&self) -> std::result::Result<f64, String> {
        match self {
            Angle::Number(v) => Ok(*v),
            Angle::Expr(s) => parse_angle(s),
        }
    }
}

/// Parses `[-][k*]pi[/n]` or a plain decimal number.
pub fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("cannot parse angle {text:?}; expected a number or a form like \"pi/2\", \"-3*pi/4\"");
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (body, 1.0),
    };
    let factor = match num {
        "pi" => 1.0,
        _ => num
            .strip_suffix("*pi")
            .and_then(|k| k.parse::<f64>().ok())
            .ok_or_else(bad)?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(sign * factor * std::f64::consts::PI / den)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ConventionField {
    Flag(u8),
    Name(DhConvention),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    name: String,
    convention: ConventionField,
    sensor: SensorKind,
    gravity: Option<[f64; 3]>,
    d: Vec<f64>,
    a: Vec<f64>,
    alpha: Vec<Angle>,
    theta_offset: Option<Vec<Angle>>,
    mass: Vec<f64>,
    com: Vec<[f64; 3]>,
    motor_constants: Option<Vec<f64>>,
    static_rows: Option<Vec<usize>>,
    payload: Option<PayloadWrench>,
}

impl RobotFile {
    fn into_robot(self) -> std::result::Result<RobotDescription, String> {
        let n = self.d.len();
        for (field, len) in [
            ("a", self.a.len()),
            ("alpha", self.alpha.len()),
            ("mass", self.mass.len()),
            ("com", self.com.len()),
        ] {
            if len != n {
                return Err(format!(
                    "length mismatch: `{field}` has {len} entries, expected {n} (one per DH row, from `d`)"
                ));
            }
        }
        let alpha = self
            .alpha
            .iter()
            .enumerate()
            .map(|(i, a)| a.value().map_err(|e| format!("alpha[{}]: {e}", i + 1)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let offsets = match &self.theta_offset {
            Some(v) if v.len() != n => {
                return Err(format!("length mismatch: `theta_offset` has {} entries, expected {n}", v.len()))
            }
            Some(v) => v
                .iter()
                .enumerate()
                .map(|(i, a)| a.value().map_err(|e| format!("theta_offset[{}]: {e}", i + 1)))
                .collect::<std::result::Result<Vec<_>, _>>()?,
            None => vec![0.0; n],
        };
        let mut static_links = vec![false; n];
        for &row in self.static_rows.iter().flatten() {
            if row == 0 || row > n {
                return Err(format!("`static_rows` entry {row} is outside 1..={n}"));
            }
            static_links[row - 1] = true;
        }
        let convention = match self.convention {
            ConventionField::Flag(f) => DhConvention::from_flag(f).map_err(|e| e.to_string())?,
            ConventionField::Name(c) => c,
        };
        let gravity = match self.gravity {
            Some(g) => GravityConvention {
                g_vector: Vector3::from(g),
            },
            None => GravityConvention::table_default(),
        };
        Ok(RobotDescription {
            name: self.name,
            convention,
            dh_rows: (0..n)
                .map(|i| DhRow {
                    d: self.d[i],
                    a: self.a[i],
                    alpha: alpha[i],
                    theta_offset: offsets[i],
                })
                .collect(),
            link_masses: self.mass,
            link_coms: self.com.into_iter().map(Vector3::from).collect(),
            static_links,
            payload: self.payload.unwrap_or_default(),
            sensor_kind: self.sensor,
            motor_constants: self.motor_constants.map(|k_m| MotorConstants { k_m }),
            gravity,
        })
    }
}

/// Parses and validates a robot description from TOML text.
pub fn parse_robot_description(text: &str, origin: &Path) -> Result<RobotDescription> {
    let parse_err = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let file: RobotFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let robot = file.into_robot().map_err(parse_err)?;
    robot.validate().map_err(|e| parse_err(e.to_string()))?;
    Ok(robot)
}

pub fn load_robot_description(path: impl AsRef<Path>) -> Result<RobotDescription> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_robot_description(&text, path)
}

fn fmt_vec(values: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = values.into_iter().map(fmt_f64).collect();
    format!("[{}]", items.join(", "))
}

/// Shortest representation that parses back to the same `f64`, always with
/// a decimal point so TOML reads it as a float.
fn fmt_f64(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'E', 'n', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Serializes a robot description to the TOML file form. Angles are written
/// as plain numbers.
pub fn robot_description_to_toml(robot: &RobotDescription) -> String {
    let mut out = String::new();
    let conv = match robot.convention {
        DhConvention::Traditional => "traditional",
        DhConvention::Modified => "modified",
    };
    let sensor = match robot.sensor_kind {
        SensorKind::Current => "current",
        SensorKind::Torque => "torque",
    };
    let _ = writeln!(out, "name = {:?}", robot.name);
    let _ = writeln!(out, "convention = \"{conv}\"");
    let _ = writeln!(out, "sensor = \"{sensor}\"");
    let _ = writeln!(out, "gravity = {}", fmt_vec(robot.gravity.g_vector.iter().copied()));
    let _ = writeln!(out, "d = {}", fmt_vec(robot.dh_rows.iter().map(|r| r.d)));
    let _ = writeln!(out, "a = {}", fmt_vec(robot.dh_rows.iter().map(|r| r.a)));
    let _ = writeln!(out, "alpha = {}", fmt_vec(robot.dh_rows.iter().map(|r| r.alpha)));
    if robot.dh_rows.iter().any(|r| r.theta_offset != 0.0) {
        let _ = writeln!(out, "theta_offset = {}", fmt_vec(robot.dh_rows.iter().map(|r| r.theta_offset)));
    }
    let _ = writeln!(out, "mass = {}", fmt_vec(robot.link_masses.iter().copied()));
    let coms: Vec<String> = robot.link_coms.iter().map(|c| fmt_vec(c.iter().copied())).collect();
    let _ = writeln!(out, "com = [{}]", coms.join(", "));
    if let Some(m) = &robot.motor_constants {
        let _ = writeln!(out, "motor_constants = {}", fmt_vec(m.k_m.iter().copied()));
    }
    let static_rows: Vec<String> = robot
        .static_links
        .iter()
        .enumerate()
        .filter(|(_, s)| **s)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    if !static_rows.is_empty() {
        let _ = writeln!(out, "static_rows = [{}]", static_rows.join(", "));
    }
    let p = &robot.payload;
    let _ = writeln!(out, "\n[payload]");
    let _ = writeln!(out, "mass = {}", fmt_f64(p.mass));
    let _ = writeln!(out, "force = {}", fmt_vec(p.force.iter().copied()));
    let _ = writeln!(out, "moment = {}", fmt_vec(p.moment.iter().copied()));
    out
}

pub fn save_robot_description(robot: &RobotDescription, path: impl AsRef<Path>) -> Result<()> {
    crate::datasets::write_atomic(path.as_ref(), robot_description_to_toml(robot).as_bytes())
}
