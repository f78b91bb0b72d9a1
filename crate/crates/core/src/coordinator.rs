//! Consensus negotiation between aggregators and the operator, and the
//! conversion of its dual prices into price adders.

use std::fmt;

use thiserror::Error;

use crate::aggregator::{
    admm_x_update, aggregate_by_bus, AggregatorError, RegulationDecision, XUpdateInput,
};
use crate::dso::{admm_z_update, check_limits, DsoError, LimitTolerances, NetworkAssessment, ZUpdateInput};
use crate::hems::ProsumerSchedule;
use crate::num::Real;
use crate::scenario::{AdderMode, BusNetwork, ProsumerSpec, Scenario, SimConfig};
use crate::series::BusSeries;
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoordError {
    #[error(transparent)]
    Aggregator(#[from] AggregatorError),
    #[error(transparent)]
    Dso(#[from] DsoError),
    #[error("series shapes differ: {0:?} vs {1:?}")]
    Shape((usize, usize), (usize, usize)),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings<T> {
    pub rho: T,
    pub eps: T,
    pub dso_weight: T,
    pub max_iters: usize,
    /// Keep the full iterates of every step.
    pub record: bool,
}

impl<T: Real> AdmmSettings<T> {
    pub fn from_config(c: &SimConfig<T>) -> Self {
        Self {
            rho: c.rho,
            eps: c.eps,
            dso_weight: c.dso_penalty_weight,
            max_iters: c.max_admm_iters,
            record: false,
        }
    }
}

/// Data the negotiation needs besides the aggregate.
#[derive(Debug, Clone, Copy)]
pub struct AdmmProblem<'a, T> {
    pub specs: &'a [ProsumerSpec<T>],
    /// Bus index of each entry of `specs`.
    pub bus_of: &'a [usize],
    pub network: &'a BusNetwork<T>,
    pub up_price: &'a [T],
    pub down_price: &'a [T],
    /// Absolute hour of the first window hour.
    pub start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmIteration<T> {
    pub iteration: usize,
    pub max_residual: T,
    pub max_dual_delta: T,
    pub truncated_cells: usize,
}

/// Full iterate, kept when [`AdmmSettings::record`] is set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmRecord<T> {
    pub lambda_before: BusSeries<T>,
    pub lambda_after: BusSeries<T>,
    pub adjusted: BusSeries<T>,
    pub p_dso: BusSeries<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmmStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<T> {
    pub status: AdmmStatus,
    pub lambda: BusSeries<T>,
    /// Number of completed iterations.
    pub iterations: usize,
    /// `P^Agg* − P^DSO` of the reported iterate.
    pub primal_residual: BusSeries<T>,
    /// `|λ^{p+1} − λ^p|` of the reported iterate.
    pub dual_delta: BusSeries<T>,
    pub adjusted: BusSeries<T>,
    pub p_dso: BusSeries<T>,
    pub decision: RegulationDecision<T>,
    pub history: Vec<AdmmIteration<T>>,
    pub records: Vec<AdmmRecord<T>>,
}

impl<T: Real> AdmmState<T> {
    pub fn converged(&self) -> bool {
        self.status == AdmmStatus::Converged
    }
}

/// Alternates x-updates, z-updates and dual steps from `λ = 0` until the
/// largest dual change is at most `eps`. Buses without prosumers keep their
/// aggregate on the operator side. On the iteration limit the iterate
/// with the smallest dual change is reported.
pub fn run_admm<T: Real>(
    problem: &AdmmProblem<'_, T>,
    base: &BusSeries<T>,
    settings: &AdmmSettings<T>,
    opts: &SolverOptions,
) -> Result<AdmmState<T>, CoordError> {
    let (hours, buses) = (base.hours(), base.buses());
    let mut lambda = BusSeries::zeros(hours, buses);
    let mut p_dso = base.clone();
    let mut history = Vec::new();
    let mut records = Vec::new();
    let mut best: Option<AdmmState<T>> = None;
    let mut fixed = vec![true; buses];
    for &j in problem.bus_of {
        fixed[j] = false;
    }
    for iteration in 1..=settings.max_iters.max(1) {
        let x = admm_x_update(
            problem.specs,
            problem.bus_of,
            &XUpdateInput {
                start: problem.start,
                up_price: problem.up_price,
                down_price: problem.down_price,
                lambda: &lambda,
                rho: settings.rho,
                p_dso: &p_dso,
                p_agg: base,
            },
            opts,
        )?;
        p_dso = admm_z_update(
            &ZUpdateInput {
                lambda: &lambda,
                rho: settings.rho,
                adjusted: &x.adjusted,
                base,
                weight: settings.dso_weight,
                fixed: &fixed,
            },
            problem.network,
            opts,
        )?;
        let residual = x.adjusted.zip_map(&p_dso, |a, d| a - d);
        let next = lambda.zip_map(&residual, |l, r| l + settings.rho * r);
        let delta = next.zip_map(&lambda, |a, b| (a - b).abs());
        let step = AdmmIteration {
            iteration,
            max_residual: residual.max_abs(),
            max_dual_delta: delta.max_abs(),
            truncated_cells: x.truncated_cells,
        };
        log::debug!(
            "admm iter={} max_residual={:.9e} max_dual_delta={:.9e}",
            iteration,
            step.max_residual.as_f64(),
            step.max_dual_delta.as_f64()
        );
        history.push(step);
        if settings.record {
            records.push(AdmmRecord {
                lambda_before: lambda.clone(),
                lambda_after: next.clone(),
                adjusted: x.adjusted.clone(),
                p_dso: p_dso.clone(),
            });
        }
        lambda = next;
        let converged = step.max_dual_delta <= settings.eps;
        let better = best
            .as_ref()
            .is_none_or(|b| step.max_dual_delta < b.dual_delta.max_abs());
        if converged || better {
            best = Some(AdmmState {
                status: if converged {
                    AdmmStatus::Converged
                } else {
                    AdmmStatus::IterationLimit
                },
                lambda: lambda.clone(),
                iterations: iteration,
                primal_residual: residual,
                dual_delta: delta,
                adjusted: x.adjusted,
                p_dso: p_dso.clone(),
                decision: x.decision,
                history: Vec::new(),
                records: Vec::new(),
            });
        }
        if converged {
            break;
        }
    }
    let mut state = best.expect("at least one iteration");
    state.iterations = history.len();
    state.history = history;
    state.records = records;
    Ok(state)
}

/// `(P^Agg − P^Agg*) / max |P^Agg − P^Agg*|`, or zeros when they agree.
pub fn normalized_difference<T: Real>(
    base: &BusSeries<T>,
    agreed: &BusSeries<T>,
) -> Result<BusSeries<T>, CoordError> {
    if !base.same_shape(agreed) {
        return Err(CoordError::Shape(
            (base.hours(), base.buses()),
            (agreed.hours(), agreed.buses()),
        ));
    }
    let diff = base.zip_map(agreed, |a, b| a - b);
    let scale = diff.max_abs();
    if scale == T::zero() {
        return Ok(diff.map(|_| T::zero()));
    }
    Ok(diff.map(|d| d / scale))
}

/// `|λ|·ND`: the sign always follows the normalized difference.
pub fn price_adder<T: Real>(
    cos: &BusSeries<T>,
    nd: &BusSeries<T>,
) -> Result<BusSeries<T>, CoordError> {
    if !cos.same_shape(nd) {
        return Err(CoordError::Shape(
            (cos.hours(), cos.buses()),
            (nd.hours(), nd.buses()),
        ));
    }
    Ok(cos.zip_map(nd, |l, n| l.abs() * n))
}

/// Spreads per-bus adders according to `mode`.
pub fn distribute_adder<T: Real>(adder: &BusSeries<T>, mode: AdderMode) -> BusSeries<T> {
    let buses = adder.buses();
    match mode {
        AdderMode::PerBus => adder.clone(),
        AdderMode::BroadcastMax => BusSeries::from_fn(adder.hours(), buses, |t, _| {
            adder
                .row(t)
                .iter()
                .copied()
                .fold(T::zero(), |m, v| if v.abs() > m.abs() { v } else { m })
        }),
        AdderMode::BroadcastMean => BusSeries::from_fn(adder.hours(), buses, |t, _| {
            if buses == 0 {
                T::zero()
            } else {
                adder.hour_total(t) / T::from(buses).expect("bus count fits")
            }
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeStatus {
    NoViolation,
    Converged,
    IterationLimit,
}

impl TeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoViolation => "no_violation",
            Self::Converged => "converged",
            Self::IterationLimit => "iteration_limit",
        }
    }
}

impl fmt::Display for TeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one negotiation round over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct TeOutcome<T> {
    pub status: TeStatus,
    pub round: usize,
    /// Aggregate of the prosumer schedules (`P^Agg`).
    pub base: BusSeries<T>,
    pub assessment: NetworkAssessment<T>,
    /// Agreed schedule `P^Agg*`.
    pub agreed: BusSeries<T>,
    /// Operator schedule; equals `base` when there was nothing to negotiate.
    pub p_dso: BusSeries<T>,
    pub cos: BusSeries<T>,
    pub nd: BusSeries<T>,
    pub price_adder: BusSeries<T>,
    pub admm_iterations: usize,
    pub admm_history: Vec<AdmmIteration<T>>,
}

/// Checks the aggregate of `schedules` and negotiates if a limit is broken.
pub fn run_te_round<T: Real>(
    schedules: &[ProsumerSchedule<T>],
    scenario: &Scenario<T>,
    start: usize,
    round: usize,
    opts: &SolverOptions,
) -> Result<TeOutcome<T>, CoordError> {
    let cfg = &scenario.config;
    let mut base = aggregate_by_bus(schedules, &scenario.prosumers, &scenario.network)?;
    if schedules.is_empty() {
        let hours = cfg.window_hours.min(cfg.horizon_hours.saturating_sub(start));
        base = BusSeries::zeros(hours, scenario.network.num_buses());
    }
    let tol = LimitTolerances {
        kw: cfg.violation_tol_kw,
        pu: cfg.violation_tol_pu,
    };
    let assessment = check_limits(&base, &scenario.network, &tol)?;
    let zeros = BusSeries::zeros(base.hours(), base.buses());
    if assessment.is_feasible() {
        return Ok(TeOutcome {
            status: TeStatus::NoViolation,
            round,
            agreed: base.clone(),
            p_dso: base.clone(),
            base,
            assessment,
            cos: zeros.clone(),
            nd: zeros.clone(),
            price_adder: zeros,
            admm_iterations: 0,
            admm_history: Vec::new(),
        });
    }
    let bus_of = scenario.prosumer_bus_indices();
    let problem = AdmmProblem {
        specs: &scenario.prosumers,
        bus_of: &bus_of,
        network: &scenario.network,
        up_price: &scenario.prices.up_reg_price,
        down_price: &scenario.prices.down_reg_price,
        start,
    };
    let state = run_admm(&problem, &base, &AdmmSettings::from_config(cfg), opts)?;
    let nd = normalized_difference(&base, &state.adjusted)?;
    let adder = price_adder(&state.lambda, &nd)?;
    Ok(TeOutcome {
        status: if state.converged() {
            TeStatus::Converged
        } else {
            TeStatus::IterationLimit
        },
        round,
        base,
        assessment,
        agreed: state.adjusted,
        p_dso: state.p_dso,
        cos: state.lambda,
        nd,
        price_adder: adder,
        admm_iterations: state.iterations,
        admm_history: state.history,
    })
}
