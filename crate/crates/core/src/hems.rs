//! Home energy management: PV + battery scheduling against retail prices.
//!
//! Per hour the model has mode binaries `d1..d6` (sell, buy, charge/discharge
//! while selling, charge/discharge while buying), the effective battery flows
//! `z1..z4` (each a product of two binaries and a power), the raw powers and
//! the state of charge after the hour.

use std::ops::Range;

use thiserror::Error;

use crate::num::Real;
use crate::scenario::{AggregatorContract, PriceBook, ProsumerSpec};
use crate::solver::{
    solve_mixed, MathProgram, ProgramError, Relation, Sense, SolveStatus, SolverOptions, VarId,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HemsError {
    #[error("{series} covers {available} hours, window needs {needed}")]
    WindowMismatch {
        series: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("unknown aggregator {0}")]
    UnknownAggregator(u32),
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("prosumer {prosumer}: schedule problem is infeasible")]
    Infeasible { prosumer: String },
    #[error("prosumer {prosumer}: solver stopped without a schedule ({status:?})")]
    NoSolution {
        prosumer: String,
        status: SolveStatus,
    },
    #[error("state of charge {soc} leaves [{min}, {max}]")]
    SocBound { soc: f64, min: f64, max: f64 },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Retail price a prosumer pays for one kWh from aggregator `k` at hour `t`.
pub fn retail_buy_price<T: Real>(k: &AggregatorContract<T>, prices: &PriceBook<T>, t: usize) -> T {
    (T::one() + prices.vat_frac)
        * ((T::one() + k.profit_buy) * prices.dam_price[t]
            + prices.tso_tariff[t]
            + prices.dso_tariff[t]
            + prices.energy_tax)
}

/// Price a prosumer receives for one exported kWh; no tariffs or taxes apply.
pub fn retail_sell_price<T: Real>(k: &AggregatorContract<T>, prices: &PriceBook<T>, t: usize) -> T {
    (T::one() + k.profit_sell) * prices.dam_price[t]
}

/// Degradation cost per kWh discharged: capital cost over lifetime energy
/// throughput `l_c · l_s · dod`. A zero capital cost gives a zero rate.
pub fn degradation_rate<T: Real>(c_bat: T, l_c: T, l_s: T, dod: T) -> Result<T, HemsError> {
    if !(c_bat >= T::zero()) || !c_bat.is_finite() {
        return Err(HemsError::NonPositive {
            name: "c_bat",
            value: c_bat.as_f64(),
        });
    }
    for (name, v) in [("l_c", l_c), ("l_s", l_s), ("dod", dod)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(HemsError::NonPositive {
                name,
                value: v.as_f64(),
            });
        }
    }
    Ok(c_bat / (l_c * l_s * dod))
}

/// Buy and sell price series of `spec` over `window`.
pub fn window_prices<T: Real>(
    spec: &ProsumerSpec<T>,
    prices: &PriceBook<T>,
    window: Range<usize>,
) -> Result<(Vec<T>, Vec<T>), HemsError> {
    let k = prices
        .contract(spec.aggregator_id)
        .ok_or(HemsError::UnknownAggregator(spec.aggregator_id))?;
    for (series, len) in [
        ("dam", prices.dam_price.len()),
        ("tso_tariff", prices.tso_tariff.len()),
        ("dso_tariff", prices.dso_tariff.len()),
    ] {
        if len < window.end {
            return Err(HemsError::WindowMismatch {
                series,
                needed: window.end,
                available: len,
            });
        }
    }
    let buy = window.clone().map(|t| retail_buy_price(k, prices, t)).collect();
    let sell = window.map(|t| retail_sell_price(k, prices, t)).collect();
    Ok((buy, sell))
}

/// Variable handles of one hour.
#[derive(Debug, Clone, Copy)]
pub struct HourVars {
    pub delta: [VarId; 6],
    pub z: [VarId; 4],
    pub p_charge: VarId,
    pub p_discharge: VarId,
    pub p_sell: VarId,
    pub p_buy: VarId,
    pub soc: VarId,
}

#[derive(Debug, Clone)]
pub struct ScheduleModel<T> {
    pub program: MathProgram<T>,
    pub hours: Vec<HourVars>,
    /// Constant used in the product envelopes.
    pub big_m: T,
}

/// Decision of one hour, read back from a solved model.
#[derive(Debug, Clone, PartialEq)]
pub struct HourDecision<T> {
    pub p_sell: T,
    pub p_buy: T,
    pub p_charge: T,
    pub p_discharge: T,
    pub delta: [bool; 6],
    pub z: [T; 4],
    /// State of charge at the end of the hour.
    pub soc: T,
}

impl<T: Real> HourDecision<T> {
    /// Power flowing into the battery.
    pub fn charge_flow(&self) -> T {
        self.z[0] + self.z[2]
    }

    /// Power flowing out of the battery.
    pub fn discharge_flow(&self) -> T {
        self.z[1] + self.z[3]
    }

    /// `P^S + P^B`: positive when exporting.
    pub fn net_kw(&self) -> T {
        self.p_sell + self.p_buy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProsumerSchedule<T> {
    pub prosumer_id: String,
    /// First absolute hour covered.
    pub start: usize,
    /// `P^S + P^B` per hour (export positive).
    pub net_kw: Vec<T>,
    /// State of charge at the end of each hour.
    pub soc: Vec<T>,
    pub objective: T,
    pub decisions: Vec<HourDecision<T>>,
    /// True when the node budget ran out and the best incumbent was used.
    pub truncated: bool,
}

impl<T: Real> ProsumerSchedule<T> {
    /// Net import per hour (consumption positive).
    pub fn net_import_kw(&self) -> Vec<T> {
        self.net_kw.iter().map(|v| -*v).collect()
    }

    pub fn len(&self) -> usize {
        self.net_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net_kw.is_empty()
    }
}

fn check_window<T>(
    spec: &ProsumerSpec<T>,
    window: &Range<usize>,
    buy: &[T],
    sell: &[T],
) -> Result<(), HemsError> {
    let len = window.len();
    for (series, available, needed) in [
        ("pv_forecast_kw", spec.pv_forecast_kw.len(), window.end),
        ("load_forecast_kw", spec.load_forecast_kw.len(), window.end),
        ("buy price", buy.len(), len),
        ("sell price", sell.len(), len),
    ] {
        if available != needed && (available < needed || series.ends_with("price")) {
            return Err(HemsError::WindowMismatch {
                series,
                needed,
                available,
            });
        }
    }
    Ok(())
}

/// Builds the scheduling MILP of `spec` over `window` (absolute hours), with
/// the given per-hour prices and the state of charge at the window start.
pub fn build_schedule_problem<T: Real>(
    spec: &ProsumerSpec<T>,
    window: Range<usize>,
    buy: &[T],
    sell: &[T],
    soc_start: T,
) -> Result<ScheduleModel<T>, HemsError> {
    check_window(spec, &window, buy, sell)?;
    let has_battery = spec.capacity_kwh > T::zero();
    let (p_ch_max, p_dis_max) = if has_battery {
        (spec.p_charge_max_kw, spec.p_discharge_max_kw)
    } else {
        (T::zero(), T::zero())
    };
    let peak = window
        .clone()
        .map(|t| spec.pv_forecast_kw[t] + spec.load_forecast_kw[t])
        .fold(T::zero(), T::max);
    let big_m = p_ch_max.max(p_dis_max).max(peak) + T::one();
    // bounds |P^S|, |P^B| for the sell/buy gating
    let gate_m = peak + p_ch_max + p_dis_max + T::one();

    let mut p = MathProgram::new(Sense::Minimize);
    let mut hours = Vec::with_capacity(window.len());
    let inf = T::infinity();
    let two = T::lit(2.0);
    let mut prev_soc: Option<VarId> = None;
    for (k, t) in window.clone().enumerate() {
        let delta = [1, 2, 3, 4, 5, 6].map(|i| p.binary(format!("d{i}_{t}")));
        let z = [
            p.continuous(format!("z1_{t}"), T::zero(), p_ch_max),
            p.continuous(format!("z2_{t}"), T::zero(), p_dis_max),
            p.continuous(format!("z3_{t}"), T::zero(), p_ch_max),
            p.continuous(format!("z4_{t}"), T::zero(), p_dis_max),
        ];
        let p_charge = p.continuous(format!("pch_{t}"), T::zero(), p_ch_max);
        let p_discharge = p.continuous(format!("pdis_{t}"), T::zero(), p_dis_max);
        let p_sell = p.continuous(format!("ps_{t}"), T::zero(), inf);
        let p_buy = p.continuous(format!("pb_{t}"), -inf, T::zero());
        let soc = p.continuous(format!("soc_{t}"), spec.soc_min_frac, spec.soc_max_frac);
        let [d1, d2, d3, d4, d5, d6] = delta;

        // P^S + P^B = pv - load - (z1 + z3) + (z2 + z4)
        p.add_constraint(
            format!("balance_{t}"),
            vec![
                (p_sell, T::one()),
                (p_buy, T::one()),
                (z[0], T::one()),
                (z[2], T::one()),
                (z[1], -T::one()),
                (z[3], -T::one()),
            ],
            Relation::Eq,
            spec.pv_forecast_kw[t] - spec.load_forecast_kw[t],
        );
        p.add_constraint(
            format!("sell_gate_{t}"),
            vec![(p_sell, T::one()), (d1, -gate_m)],
            Relation::Le,
            T::zero(),
        );
        p.add_constraint(
            format!("buy_gate_{t}"),
            vec![(p_buy, T::one()), (d2, gate_m)],
            Relation::Ge,
            T::zero(),
        );
        p.add_constraint(
            format!("mode_trade_{t}"),
            vec![(d1, T::one()), (d2, T::one())],
            Relation::Eq,
            T::one(),
        );
        p.add_constraint(
            format!("mode_export_{t}"),
            vec![(d3, T::one()), (d4, T::one())],
            Relation::Eq,
            T::one(),
        );
        p.add_constraint(
            format!("mode_import_{t}"),
            vec![(d5, T::one()), (d6, T::one())],
            Relation::Le,
            T::one(),
        );

        // z = a·b·power envelopes
        for (idx, (zv, a, b, power)) in [
            (z[0], d1, d3, p_charge),
            (z[1], d1, d4, p_discharge),
            (z[2], d2, d5, p_charge),
            (z[3], d2, d6, p_discharge),
        ]
        .into_iter()
        .enumerate()
        {
            let name = idx + 1;
            p.add_constraint(
                format!("z{name}_a_{t}"),
                vec![(zv, T::one()), (a, -big_m)],
                Relation::Le,
                T::zero(),
            );
            p.add_constraint(
                format!("z{name}_b_{t}"),
                vec![(zv, T::one()), (b, -big_m)],
                Relation::Le,
                T::zero(),
            );
            // z <= P + M(2 - a - b)
            p.add_constraint(
                format!("z{name}_up_{t}"),
                vec![(zv, T::one()), (power, -T::one()), (a, big_m), (b, big_m)],
                Relation::Le,
                two * big_m,
            );
            // z >= P - M(2 - a - b)
            p.add_constraint(
                format!("z{name}_lo_{t}"),
                vec![(zv, T::one()), (power, -T::one()), (a, -big_m), (b, -big_m)],
                Relation::Ge,
                -two * big_m,
            );
        }

        // soc_t = soc_{t-1} + eta_ch (z1 + z3) / E - (z2 + z4) / (E eta_dis)
        let mut terms = vec![(soc, T::one())];
        if has_battery {
            let gain = spec.eta_charge / spec.capacity_kwh;
            let loss = T::one() / (spec.capacity_kwh * spec.eta_discharge);
            terms.extend([(z[0], -gain), (z[2], -gain), (z[1], loss), (z[3], loss)]);
        }
        let rhs = match prev_soc {
            Some(v) => {
                terms.push((v, -T::one()));
                T::zero()
            }
            None => soc_start,
        };
        p.add_constraint(format!("soc_{t}"), terms, Relation::Eq, rhs);
        prev_soc = Some(soc);

        // cost: -P^S mu_sell - P^B mu_buy + C_Bd (z2 + z4) / eta_dis
        p.add_objective(p_sell, -sell[k]);
        p.add_objective(p_buy, -buy[k]);
        if has_battery {
            let wear = spec.degradation_cost_eur_per_kwh / spec.eta_discharge;
            p.add_objective(z[1], wear);
            p.add_objective(z[3], wear);
        }

        hours.push(HourVars {
            delta,
            z,
            p_charge,
            p_discharge,
            p_sell,
            p_buy,
            soc,
        });
    }
    Ok(ScheduleModel {
        program: p,
        hours,
        big_m,
    })
}

/// Optimal schedule of `spec` over `window` for the given prices.
pub fn solve_schedule<T: Real>(
    spec: &ProsumerSpec<T>,
    window: Range<usize>,
    buy: &[T],
    sell: &[T],
    soc_start: T,
    opts: &SolverOptions,
) -> Result<ProsumerSchedule<T>, HemsError> {
    let model = build_schedule_problem(spec, window.clone(), buy, sell, soc_start)?;
    let r = solve_mixed(&model.program, opts)?;
    let truncated = match r.status {
        SolveStatus::Optimal => false,
        SolveStatus::IterationLimit if r.objective.is_finite() => true,
        SolveStatus::Infeasible => {
            return Err(HemsError::Infeasible {
                prosumer: spec.id.clone(),
            })
        }
        status => {
            return Err(HemsError::NoSolution {
                prosumer: spec.id.clone(),
                status,
            })
        }
    };
    let x = &r.values;
    let decisions: Vec<HourDecision<T>> = model
        .hours
        .iter()
        .map(|h| HourDecision {
            p_sell: x[h.p_sell.0],
            p_buy: x[h.p_buy.0],
            p_charge: x[h.p_charge.0],
            p_discharge: x[h.p_discharge.0],
            delta: h.delta.map(|d| x[d.0] > T::lit(0.5)),
            z: h.z.map(|z| x[z.0]),
            soc: x[h.soc.0],
        })
        .collect();
    Ok(ProsumerSchedule {
        prosumer_id: spec.id.clone(),
        start: window.start,
        net_kw: decisions.iter().map(|d| d.net_kw()).collect(),
        soc: decisions.iter().map(|d| d.soc).collect(),
        objective: r.objective,
        decisions,
        truncated,
    })
}

/// Solves the schedule with `adder` added to both the buy and the sell price.
#[allow(clippy::too_many_arguments)]
pub fn reschedule_with_adder<T: Real>(
    spec: &ProsumerSpec<T>,
    window: Range<usize>,
    buy: &[T],
    sell: &[T],
    adder: &[T],
    soc_start: T,
    opts: &SolverOptions,
) -> Result<ProsumerSchedule<T>, HemsError> {
    if adder.len() != window.len() {
        return Err(HemsError::WindowMismatch {
            series: "price adder",
            needed: window.len(),
            available: adder.len(),
        });
    }
    let shifted = |base: &[T]| -> Vec<T> { base.iter().zip(adder).map(|(p, a)| *p + *a).collect() };
    solve_schedule(spec, window, &shifted(buy), &shifted(sell), soc_start, opts)
}

/// State of charge after one hour with the given effective battery flows.
pub fn soc_transition<T: Real>(
    soc: T,
    charge_kw: T,
    discharge_kw: T,
    spec: &ProsumerSpec<T>,
) -> Result<T, HemsError> {
    if spec.capacity_kwh <= T::zero() {
        return Ok(soc);
    }
    let next = soc + charge_kw * spec.eta_charge / spec.capacity_kwh
        - discharge_kw / (spec.capacity_kwh * spec.eta_discharge);
    let tol = T::integrality_tol();
    if next < spec.soc_min_frac - tol || next > spec.soc_max_frac + tol {
        return Err(HemsError::SocBound {
            soc: next.as_f64(),
            min: spec.soc_min_frac.as_f64(),
            max: spec.soc_max_frac.as_f64(),
        });
    }
    Ok(next)
}

/// Degradation part of a schedule's cost.
pub fn degradation_cost<T: Real>(schedule: &ProsumerSchedule<T>, spec: &ProsumerSpec<T>) -> T {
    if spec.capacity_kwh <= T::zero() {
        return T::zero();
    }
    schedule
        .decisions
        .iter()
        .map(|d| spec.degradation_cost_eur_per_kwh * d.discharge_flow() / spec.eta_discharge)
        .sum()
}
