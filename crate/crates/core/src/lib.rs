//! Two-package incentive pricing for an energy aggregator that buys
//! balancing power for a community of wind prosumers.
//!
//! Each hour the aggregator posts a wholesale price `R_WP` and a lump-sum
//! price `R_LS`. Prosumers pick a package at random, play a Cournot game
//! on the day-ahead market, and buy their shortfall from the aggregator,
//! which settles the net imbalance on the balancing market.

pub mod budget;
pub mod equilibrium;
pub mod error;
pub mod forms;
pub mod model;
pub mod objective;
pub mod partition;
mod quadrature;
pub mod selection;
pub mod settlement;
pub mod solver;
pub mod synthetic;
pub mod wind;

pub use equilibrium::IncentivePair;
pub use error::{Error, Result};
pub use model::{HourData, MarketInstance};
pub use partition::{BalancingSide, PriceCase};
pub use selection::{Scenario, SelectionModel};
