//! Transactive energy coordination between prosumers, aggregators and a
//! distribution system operator.
//!
//! Every numeric type is generic over [`Real`]; the aliases below fix it to
//! `f64`.

pub mod aggregator;
pub mod coordinator;
pub mod dso;
pub mod hems;
pub mod num;
pub mod rolling;
pub mod scenario;
pub mod series;
pub mod solver;

pub use num::Real;

pub type Scenario = scenario::Scenario<f64>;
pub type ProsumerSpec = scenario::ProsumerSpec<f64>;
pub type BusNetwork = scenario::BusNetwork<f64>;
pub type PriceBook = scenario::PriceBook<f64>;
pub type SimConfig = scenario::SimConfig<f64>;
pub type MathProgram = solver::MathProgram<f64>;
pub type SolveResult = solver::SolveResult<f64>;
pub type BusSeries = series::BusSeries<f64>;
pub type ProsumerSchedule = hems::ProsumerSchedule<f64>;
pub type NetworkAssessment = dso::NetworkAssessment<f64>;
pub type AdmmState = coordinator::AdmmState<f64>;
pub type TeOutcome = coordinator::TeOutcome<f64>;
pub type WindowResult = rolling::WindowResult<f64>;
pub type HorizonResult = rolling::HorizonResult<f64>;
