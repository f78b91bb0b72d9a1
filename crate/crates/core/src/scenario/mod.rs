//! Input data: network, prosumers, prices and run configuration.

pub(crate) mod file;
mod lines;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::num::Real;

pub use file::{parse_scenario, parse_scenario_str, serialize_scenario, ScenarioError};
pub use lines::{sensitivity_from_lines, Line, NetworkError};
pub use validate::{validate_scenario, Violation};

/// Current scenario file schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Radial low-voltage network seen through a linear voltage sensitivity.
#[derive(Debug, Clone, PartialEq)]
pub struct BusNetwork<T> {
    pub bus_ids: Vec<u32>,
    /// Voltage at zero net import, per bus (p.u.).
    pub base_voltage_pu: Vec<T>,
    /// `sensitivity[j][m]`: voltage drop at bus `j` per kW imported at bus `m`.
    pub sensitivity: Vec<Vec<T>>,
    pub transformer_capacity_kw: T,
    pub v_min_pu: T,
    pub v_max_pu: T,
    /// Line data the sensitivity was (or could be) derived from.
    pub lines: Option<LineData<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineData<T> {
    /// Identifier of the transformer node; not itself a load bus.
    pub root: u32,
    /// Divisor applied to path resistances.
    pub base_voltage_pu: T,
    pub lines: Vec<Line<T>>,
}

impl<T: Real> BusNetwork<T> {
    pub fn num_buses(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn bus_index(&self, bus: u32) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == bus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProsumerSpec<T> {
    pub id: String,
    pub bus_id: u32,
    pub aggregator_id: u32,
    pub capacity_kwh: T,
    pub soc_min_frac: T,
    pub soc_max_frac: T,
    pub soc_initial_frac: T,
    pub p_charge_max_kw: T,
    pub p_discharge_max_kw: T,
    pub eta_charge: T,
    pub eta_discharge: T,
    pub degradation_cost_eur_per_kwh: T,
    pub pv_forecast_kw: Vec<T>,
    pub load_forecast_kw: Vec<T>,
}

/// Retail contract terms of one aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorContract<T> {
    pub id: u32,
    /// Margin on the day-ahead price when selling to its prosumers.
    pub profit_buy: T,
    /// Margin on the day-ahead price when buying surplus from its prosumers.
    pub profit_sell: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceBook<T> {
    pub dam_price: Vec<T>,
    pub tso_tariff: Vec<T>,
    pub dso_tariff: Vec<T>,
    pub energy_tax: T,
    pub vat_frac: T,
    pub up_reg_price: Vec<T>,
    pub down_reg_price: Vec<T>,
    pub aggregators: Vec<AggregatorContract<T>>,
}

impl<T: Real> PriceBook<T> {
    pub fn contract(&self, aggregator: u32) -> Option<&AggregatorContract<T>> {
        self.aggregators.iter().find(|a| a.id == aggregator)
    }
}

/// How the per-bus price adder is handed to prosumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdderMode {
    /// Each prosumer receives its own bus's adder.
    #[default]
    PerBus,
    /// Every prosumer receives, per hour, the bus adder of largest magnitude.
    BroadcastMax,
    /// Every prosumer receives, per hour, the mean over buses.
    BroadcastMean,
}

impl AdderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AdderMode::PerBus => "per_bus",
            AdderMode::BroadcastMax => "broadcast_max",
            AdderMode::BroadcastMean => "broadcast_mean",
        }
    }
}

impl fmt::Display for AdderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdderMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_bus" => Ok(AdderMode::PerBus),
            "broadcast_max" => Ok(AdderMode::BroadcastMax),
            "broadcast_mean" => Ok(AdderMode::BroadcastMean),
            other => Err(format!(
                "unknown adder mode '{other}' (expected per_bus, broadcast_max or broadcast_mean)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub horizon_hours: usize,
    pub window_hours: usize,
    pub window_step_hours: usize,
    pub rho: T,
    pub eps: T,
    /// Weight of the DSO's quadratic tracking term (€/kW²).
    pub dso_penalty_weight: T,
    pub max_admm_iters: usize,
    pub max_te_rounds: usize,
    pub violation_tol_kw: T,
    pub violation_tol_pu: T,
    pub adder_mode: AdderMode,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            horizon_hours: 24,
            window_hours: 8,
            window_step_hours: 1,
            rho: T::lit(0.8),
            eps: T::lit(0.005),
            dso_penalty_weight: T::one(),
            max_admm_iters: 1000,
            max_te_rounds: 20,
            violation_tol_kw: T::lit(1e-3),
            violation_tol_pu: T::lit(1e-4),
            adder_mode: AdderMode::PerBus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub schema_version: u32,
    pub name: String,
    pub config: SimConfig<T>,
    pub network: BusNetwork<T>,
    pub prosumers: Vec<ProsumerSpec<T>>,
    pub prices: PriceBook<T>,
}

impl<T: Real> Scenario<T> {
    /// Index of each prosumer's bus in `network.bus_ids`.
    ///
    /// Panics if a prosumer references an unknown bus; parsing and
    /// validation rule that out.
    pub fn prosumer_bus_indices(&self) -> Vec<usize> {
        self.prosumers
            .iter()
            .map(|p| {
                self.network
                    .bus_index(p.bus_id)
                    .expect("prosumer bus validated")
            })
            .collect()
    }
}
