//! Wireless rechargeable sensor network simulator with mobile chargers and
//! multi-agent PPO training.

pub mod action;
pub mod boxmin;
pub mod checkpoint;
pub mod energy;
pub mod env;
pub mod error;
pub mod lifetime;
pub mod nn;
pub mod observation;
pub mod scenario;
pub mod trainer;

pub use error::{Error, Result};
pub use scenario::{Bounds, EnergyParams, Point, ScenarioInstance};
