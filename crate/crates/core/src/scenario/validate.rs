//! Range and consistency checks over a parsed scenario.

use std::collections::HashSet;
use std::fmt;

use super::Scenario;
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `config`, `network`, `prices`, `aggregator <id>` or `prosumer <id>`.
    pub entity: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.entity, self.field, self.message)
    }
}

struct Sink(Vec<Violation>);

impl Sink {
    fn push(&mut self, entity: &str, field: &str, message: impl Into<String>) {
        self.0.push(Violation {
            entity: entity.to_string(),
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, entity: &str, field: &str, message: impl Into<String>) {
        if !ok {
            self.push(entity, field, message);
        }
    }

    fn series<T: Real>(&mut self, entity: &str, field: &str, v: &[T], horizon: usize) {
        if v.len() < horizon {
            self.push(
                entity,
                field,
                format!("has {} values, horizon needs {horizon}", v.len()),
            );
        }
        if let Some(t) = v.iter().position(|x| !x.is_finite() || *x < T::zero()) {
            self.push(entity, field, format!("value at hour {t} is negative or not finite"));
        }
    }
}

fn finite_pos<T: Real>(v: T) -> bool {
    v.is_finite() && v > T::zero()
}

/// Checks every invariant of the scenario data and returns all violations
/// (empty when the scenario is valid).
pub fn validate_scenario<T: Real>(s: &Scenario<T>) -> Vec<Violation> {
    let mut out = Sink(Vec::new());
    let c = &s.config;
    let h = c.horizon_hours;

    out.check(h >= 1, "config", "horizon_hours", "must be at least 1");
    out.check(c.window_hours >= 1, "config", "window_hours", "must be at least 1");
    out.check(
        c.window_step_hours >= 1,
        "config",
        "window_step_hours",
        "must be at least 1",
    );
    out.check(finite_pos(c.rho), "config", "rho", "must be positive");
    out.check(finite_pos(c.eps), "config", "eps", "must be positive");
    out.check(
        finite_pos(c.dso_penalty_weight),
        "config",
        "dso_penalty_weight",
        "must be positive",
    );
    out.check(c.max_admm_iters >= 1, "config", "max_admm_iters", "must be at least 1");
    out.check(c.max_te_rounds >= 1, "config", "max_te_rounds", "must be at least 1");
    out.check(
        finite_pos(c.violation_tol_kw),
        "config",
        "violation_tol_kw",
        "must be positive",
    );
    out.check(
        finite_pos(c.violation_tol_pu),
        "config",
        "violation_tol_pu",
        "must be positive",
    );

    let n = &s.network;
    let nb = n.bus_ids.len();
    let unique: HashSet<_> = n.bus_ids.iter().collect();
    out.check(unique.len() == nb, "network", "bus_ids", "contains duplicates");
    out.check(
        n.v_min_pu.is_finite() && n.v_max_pu.is_finite() && n.v_min_pu < n.v_max_pu,
        "network",
        "v_min_pu",
        "must be below v_max_pu",
    );
    out.check(
        finite_pos(n.transformer_capacity_kw),
        "network",
        "transformer_capacity_kw",
        "must be positive",
    );
    if n.base_voltage_pu.len() != nb {
        out.push(
            "network",
            "base_voltage_pu",
            format!("has {} values for {nb} buses", n.base_voltage_pu.len()),
        );
    }
    for (b, v) in n.bus_ids.iter().zip(&n.base_voltage_pu) {
        if !(v.is_finite() && *v >= n.v_min_pu && *v <= n.v_max_pu) {
            out.push(
                "network",
                "base_voltage_pu",
                format!("bus {b} base voltage {v} outside [v_min_pu, v_max_pu]"),
            );
        }
    }
    if n.sensitivity.len() != nb || n.sensitivity.iter().any(|r| r.len() != nb) {
        out.push(
            "network",
            "sensitivity",
            format!("must be a {nb}x{nb} matrix"),
        );
    } else if n.sensitivity.iter().flatten().any(|v| !v.is_finite()) {
        out.push("network", "sensitivity", "contains non-finite entries");
    }

    let p = &s.prices;
    out.series("prices", "dam", &p.dam_price, h);
    out.series("prices", "tso_tariff", &p.tso_tariff, h);
    out.series("prices", "dso_tariff", &p.dso_tariff, h);
    out.series("prices", "up_regulation", &p.up_reg_price, h);
    out.series("prices", "down_regulation", &p.down_reg_price, h);
    out.check(
        p.vat_frac.is_finite() && p.vat_frac >= T::zero(),
        "prices",
        "vat",
        "must be nonnegative",
    );
    out.check(
        p.energy_tax.is_finite() && p.energy_tax >= T::zero(),
        "prices",
        "energy_tax",
        "must be nonnegative",
    );
    let mut agg_ids = HashSet::new();
    for a in &p.aggregators {
        let e = format!("aggregator {}", a.id);
        out.check(agg_ids.insert(a.id), &e, "id", "duplicate aggregator id");
        out.check(
            a.profit_buy.is_finite() && a.profit_buy > -T::one(),
            &e,
            "profit_buy",
            "must exceed -1",
        );
        out.check(
            a.profit_sell.is_finite() && a.profit_sell > -T::one(),
            &e,
            "profit_sell",
            "must exceed -1",
        );
    }

    let mut ids = HashSet::new();
    for pr in &s.prosumers {
        let e = format!("prosumer {}", pr.id);
        let e = e.as_str();
        out.check(ids.insert(pr.id.as_str()), e, "id", "duplicate prosumer id");
        out.check(n.bus_index(pr.bus_id).is_some(), e, "bus_id", format!("unknown bus {}", pr.bus_id));
        out.check(
            p.contract(pr.aggregator_id).is_some(),
            e,
            "aggregator_id",
            format!("unknown aggregator {}", pr.aggregator_id),
        );
        for (field, v) in [
            ("soc_min_frac", pr.soc_min_frac),
            ("soc_max_frac", pr.soc_max_frac),
            ("soc_initial_frac", pr.soc_initial_frac),
        ] {
            out.check(
                v.is_finite() && v >= T::zero() && v <= T::one(),
                e,
                field,
                "must lie in [0, 1]",
            );
        }
        out.check(
            pr.soc_min_frac <= pr.soc_max_frac,
            e,
            "soc_min_frac",
            format!(
                "soc_min_frac {} exceeds soc_max_frac {}",
                pr.soc_min_frac, pr.soc_max_frac
            ),
        );
        out.check(
            pr.soc_min_frac <= pr.soc_initial_frac && pr.soc_initial_frac <= pr.soc_max_frac,
            e,
            "soc_initial_frac",
            "must lie between soc_min_frac and soc_max_frac",
        );
        for (field, v) in [("eta_charge", pr.eta_charge), ("eta_discharge", pr.eta_discharge)] {
            out.check(
                v.is_finite() && v > T::zero() && v <= T::one(),
                e,
                field,
                format!("efficiency {v} outside (0, 1]"),
            );
        }
        for (field, v) in [
            ("capacity_kwh", pr.capacity_kwh),
            ("p_charge_max_kw", pr.p_charge_max_kw),
            ("p_discharge_max_kw", pr.p_discharge_max_kw),
            ("degradation_cost_eur_per_kwh", pr.degradation_cost_eur_per_kwh),
        ] {
            out.check(v.is_finite() && v >= T::zero(), e, field, "must be nonnegative");
        }
        out.series(e, "pv_forecast_kw", &pr.pv_forecast_kw, h);
        out.series(e, "load_forecast_kw", &pr.load_forecast_kw, h);
        out.check(
            pr.pv_forecast_kw.len() == pr.load_forecast_kw.len(),
            e,
            "load_forecast_kw",
            "length differs from pv_forecast_kw",
        );
    }
    out.0
}
