//! Data-driven dynamic and electrical power models for serial manipulators.
//!
//! Given a robot's DH geometry, link masses and centres of mass, plus
//! time series of joint motion, joint current or torque and total electrical
//! power, the crate
//!
//! 1. builds a Newton-Euler model whose unknown inertia, friction and
//!    optional payload terms enter affinely ([`regressor`]),
//! 2. identifies those unknowns and the motor power coefficients by least
//!    squares ([`identification`]),
//! 3. predicts joint channels and power for new motion ([`power`],
//!    [`metrics`]).
//!
//! A synthetic generator ([`datasets::synth_generate`]) produces data from
//! known parameters for verification.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datasets;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod identification;
pub mod kinematics;
pub mod metrics;
pub mod power;
pub mod regressor;

pub use datasets::{OperationalDataset, RobotDescription, SinusoidSpec};
pub use dynamics::{inverse_dynamics, SensorKind};
pub use error::{Error, Result};
pub use identification::{gen_train_model, TrainOptions, TrainedModel};
pub use kinematics::{DhConvention, DhRow, GravityConvention, JointState};
pub use metrics::{pc_model, test_model, EvaluationReport};
pub use regressor::{build_layout, BackEmfForm, DynamicParameters, ParameterLayout, PowerParameters};
