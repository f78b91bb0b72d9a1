//! TOML scenario files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lines::{sensitivity_from_lines, Line, NetworkError};
use super::{
    AdderMode, AggregatorContract, BusNetwork, LineData, PriceBook, ProsumerSpec, Scenario,
    SimConfig, SCHEMA_VERSION,
};
use crate::num::Real;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {found} (this build reads {SCHEMA_VERSION})")]
    UnsupportedSchema { found: u32 },
    #[error("{owner}: missing series `{field}`")]
    MissingSeries { owner: String, field: &'static str },
    #[error("prosumer {prosumer}: unknown {what} {id}")]
    DanglingReference {
        prosumer: String,
        what: &'static str,
        id: u32,
    },
    #[error("network: neither `sensitivity` nor `lines` given")]
    MissingNetworkModel,
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    #[serde(default)]
    name: String,
    #[serde(default)]
    config: RawConfig,
    network: RawNetwork,
    prices: RawPrices,
    #[serde(default)]
    aggregators: Vec<RawAggregator>,
    #[serde(default)]
    prosumers: Vec<RawProsumer>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    horizon_hours: usize,
    window_hours: usize,
    window_step_hours: usize,
    rho: f64,
    eps: f64,
    dso_penalty_weight: f64,
    max_admm_iters: usize,
    max_te_rounds: usize,
    violation_tol_kw: f64,
    violation_tol_pu: f64,
    adder_mode: AdderMode,
}

impl Default for RawConfig {
    fn default() -> Self {
        raw_config(&SimConfig::<f64>::default())
    }
}

fn raw_config<T: Real>(c: &SimConfig<T>) -> RawConfig {
    RawConfig {
        horizon_hours: c.horizon_hours,
        window_hours: c.window_hours,
        window_step_hours: c.window_step_hours,
        rho: c.rho.as_f64(),
        eps: c.eps.as_f64(),
        dso_penalty_weight: c.dso_penalty_weight.as_f64(),
        max_admm_iters: c.max_admm_iters,
        max_te_rounds: c.max_te_rounds,
        violation_tol_kw: c.violation_tol_kw.as_f64(),
        violation_tol_pu: c.violation_tol_pu.as_f64(),
        adder_mode: c.adder_mode,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarOrSeries {
    Scalar(f64),
    Series(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    bus_ids: Vec<u32>,
    base_voltage_pu: ScalarOrSeries,
    transformer_capacity_kw: f64,
    v_min_pu: f64,
    v_max_pu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sensitivity: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    root_bus: u32,
    #[serde(default = "one")]
    lines_base_voltage_pu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lines: Option<Vec<RawLine>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    from_bus: u32,
    to_bus: u32,
    resistance_pu: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrices {
    dam: Option<Vec<f64>>,
    tso_tariff: Option<Vec<f64>>,
    dso_tariff: Option<Vec<f64>>,
    #[serde(default)]
    energy_tax: f64,
    #[serde(default)]
    vat: f64,
    up_regulation: Option<Vec<f64>>,
    down_regulation: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAggregator {
    id: u32,
    profit_buy: f64,
    profit_sell: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProsumer {
    id: String,
    bus_id: u32,
    aggregator_id: u32,
    capacity_kwh: f64,
    soc_min_frac: f64,
    soc_max_frac: f64,
    soc_initial_frac: f64,
    p_charge_max_kw: f64,
    p_discharge_max_kw: f64,
    eta_charge: f64,
    eta_discharge: f64,
    degradation_cost_eur_per_kwh: f64,
    pv_forecast_kw: Option<Vec<f64>>,
    load_forecast_kw: Option<Vec<f64>>,
}

fn series<T: Real>(
    v: Option<Vec<f64>>,
    owner: &str,
    field: &'static str,
) -> Result<Vec<T>, ScenarioError> {
    v.map(|s| s.into_iter().map(T::lit).collect())
        .ok_or_else(|| ScenarioError::MissingSeries {
            owner: owner.to_string(),
            field,
        })
}

fn locate(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Reads and parses a scenario file.
pub fn parse_scenario<T: Real>(path: impl AsRef<Path>) -> Result<Scenario<T>, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_str(&text)
}

/// Parses scenario TOML text and resolves all cross-references. Value ranges
/// are checked separately by [`super::validate_scenario`].
pub fn parse_scenario_str<T: Real>(text: &str) -> Result<Scenario<T>, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| locate(text, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::UnsupportedSchema {
            found: raw.schema_version,
        });
    }

    let c = raw.config;
    let config = SimConfig {
        horizon_hours: c.horizon_hours,
        window_hours: c.window_hours,
        window_step_hours: c.window_step_hours,
        rho: T::lit(c.rho),
        eps: T::lit(c.eps),
        dso_penalty_weight: T::lit(c.dso_penalty_weight),
        max_admm_iters: c.max_admm_iters,
        max_te_rounds: c.max_te_rounds,
        violation_tol_kw: T::lit(c.violation_tol_kw),
        violation_tol_pu: T::lit(c.violation_tol_pu),
        adder_mode: c.adder_mode,
    };

    let n = raw.network;
    let nb = n.bus_ids.len();
    let base_voltage_pu = match n.base_voltage_pu {
        ScalarOrSeries::Scalar(v) => vec![T::lit(v); nb],
        ScalarOrSeries::Series(v) => v.into_iter().map(T::lit).collect(),
    };
    let lines = n.lines.map(|ls| LineData {
        root: n.root_bus,
        base_voltage_pu: T::lit(n.lines_base_voltage_pu),
        lines: ls
            .into_iter()
            .map(|l| Line {
                from_bus: l.from_bus,
                to_bus: l.to_bus,
                resistance_pu: T::lit(l.resistance_pu),
            })
            .collect(),
    });
    let sensitivity = match (n.sensitivity, &lines) {
        (Some(m), _) => m
            .into_iter()
            .map(|row| row.into_iter().map(T::lit).collect())
            .collect(),
        (None, Some(ld)) => {
            sensitivity_from_lines(ld.root, &n.bus_ids, &ld.lines, ld.base_voltage_pu)?
        }
        (None, None) => return Err(ScenarioError::MissingNetworkModel),
    };
    let network = BusNetwork {
        bus_ids: n.bus_ids,
        base_voltage_pu,
        sensitivity,
        transformer_capacity_kw: T::lit(n.transformer_capacity_kw),
        v_min_pu: T::lit(n.v_min_pu),
        v_max_pu: T::lit(n.v_max_pu),
        lines,
    };

    let p = raw.prices;
    let prices = PriceBook {
        dam_price: series(p.dam, "prices", "dam")?,
        tso_tariff: series(p.tso_tariff, "prices", "tso_tariff")?,
        dso_tariff: series(p.dso_tariff, "prices", "dso_tariff")?,
        energy_tax: T::lit(p.energy_tax),
        vat_frac: T::lit(p.vat),
        up_reg_price: series(p.up_regulation, "prices", "up_regulation")?,
        down_reg_price: series(p.down_regulation, "prices", "down_regulation")?,
        aggregators: raw
            .aggregators
            .into_iter()
            .map(|a| AggregatorContract {
                id: a.id,
                profit_buy: T::lit(a.profit_buy),
                profit_sell: T::lit(a.profit_sell),
            })
            .collect(),
    };

    let mut prosumers = Vec::with_capacity(raw.prosumers.len());
    for r in raw.prosumers {
        let owner = format!("prosumer {}", r.id);
        if network.bus_index(r.bus_id).is_none() {
            return Err(ScenarioError::DanglingReference {
                prosumer: r.id,
                what: "bus",
                id: r.bus_id,
            });
        }
        if prices.contract(r.aggregator_id).is_none() {
            return Err(ScenarioError::DanglingReference {
                prosumer: r.id,
                what: "aggregator",
                id: r.aggregator_id,
            });
        }
        prosumers.push(ProsumerSpec {
            pv_forecast_kw: series(r.pv_forecast_kw, &owner, "pv_forecast_kw")?,
            load_forecast_kw: series(r.load_forecast_kw, &owner, "load_forecast_kw")?,
            id: r.id,
            bus_id: r.bus_id,
            aggregator_id: r.aggregator_id,
            capacity_kwh: T::lit(r.capacity_kwh),
            soc_min_frac: T::lit(r.soc_min_frac),
            soc_max_frac: T::lit(r.soc_max_frac),
            soc_initial_frac: T::lit(r.soc_initial_frac),
            p_charge_max_kw: T::lit(r.p_charge_max_kw),
            p_discharge_max_kw: T::lit(r.p_discharge_max_kw),
            eta_charge: T::lit(r.eta_charge),
            eta_discharge: T::lit(r.eta_discharge),
            degradation_cost_eur_per_kwh: T::lit(r.degradation_cost_eur_per_kwh),
        });
    }

    Ok(Scenario {
        schema_version: raw.schema_version,
        name: raw.name,
        config,
        network,
        prosumers,
        prices,
    })
}

fn f64s<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

/// Writes `s` back as scenario TOML. The sensitivity matrix is always
/// written, so re-parsing reproduces `s` exactly.
pub fn serialize_scenario<T: Real>(s: &Scenario<T>) -> Result<String, ScenarioError> {
    let n = &s.network;
    let raw = RawScenario {
        schema_version: s.schema_version,
        name: s.name.clone(),
        config: raw_config(&s.config),
        network: RawNetwork {
            bus_ids: n.bus_ids.clone(),
            base_voltage_pu: ScalarOrSeries::Series(f64s(&n.base_voltage_pu)),
            transformer_capacity_kw: n.transformer_capacity_kw.as_f64(),
            v_min_pu: n.v_min_pu.as_f64(),
            v_max_pu: n.v_max_pu.as_f64(),
            sensitivity: Some(n.sensitivity.iter().map(|r| f64s(r)).collect()),
            root_bus: n.lines.as_ref().map_or(0, |l| l.root),
            lines_base_voltage_pu: n.lines.as_ref().map_or(1.0, |l| l.base_voltage_pu.as_f64()),
            lines: n.lines.as_ref().map(|ld| {
                ld.lines
                    .iter()
                    .map(|l| RawLine {
                        from_bus: l.from_bus,
                        to_bus: l.to_bus,
                        resistance_pu: l.resistance_pu.as_f64(),
                    })
                    .collect()
            }),
        },
        prices: RawPrices {
            dam: Some(f64s(&s.prices.dam_price)),
            tso_tariff: Some(f64s(&s.prices.tso_tariff)),
            dso_tariff: Some(f64s(&s.prices.dso_tariff)),
            energy_tax: s.prices.energy_tax.as_f64(),
            vat: s.prices.vat_frac.as_f64(),
            up_regulation: Some(f64s(&s.prices.up_reg_price)),
            down_regulation: Some(f64s(&s.prices.down_reg_price)),
        },
        aggregators: s
            .prices
            .aggregators
            .iter()
            .map(|a| RawAggregator {
                id: a.id,
                profit_buy: a.profit_buy.as_f64(),
                profit_sell: a.profit_sell.as_f64(),
            })
            .collect(),
        prosumers: s
            .prosumers
            .iter()
            .map(|p| RawProsumer {
                id: p.id.clone(),
                bus_id: p.bus_id,
                aggregator_id: p.aggregator_id,
                capacity_kwh: p.capacity_kwh.as_f64(),
                soc_min_frac: p.soc_min_frac.as_f64(),
                soc_max_frac: p.soc_max_frac.as_f64(),
                soc_initial_frac: p.soc_initial_frac.as_f64(),
                p_charge_max_kw: p.p_charge_max_kw.as_f64(),
                p_discharge_max_kw: p.p_discharge_max_kw.as_f64(),
                eta_charge: p.eta_charge.as_f64(),
                eta_discharge: p.eta_discharge.as_f64(),
                degradation_cost_eur_per_kwh: p.degradation_cost_eur_per_kwh.as_f64(),
                pv_forecast_kw: Some(f64s(&p.pv_forecast_kw)),
                load_forecast_kw: Some(f64s(&p.load_forecast_kw)),
            })
            .collect(),
    };
    toml::to_string(&raw).map_err(|e| ScenarioError::Serialize(e.to_string()))
}
