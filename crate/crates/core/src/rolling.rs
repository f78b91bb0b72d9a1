//! Rolling-window orchestration: schedule, negotiate, commit, shift.

use std::ops::Range;

use thiserror::Error;

use crate::coordinator::{distribute_adder, run_te_round, CoordError, TeOutcome, TeStatus};
use crate::dso::LimitViolation;
use crate::hems::{
    reschedule_with_adder, soc_transition, window_prices, HemsError, HourDecision, ProsumerSchedule,
};
use crate::num::Real;
use crate::scenario::Scenario;
use crate::series::BusSeries;
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RollingError {
    #[error(transparent)]
    Hems(#[from] HemsError),
    #[error(transparent)]
    Coord(#[from] CoordError),
    #[error("SOC replay of {prosumer} failed at hour {hour}: {source}")]
    SocReplay {
        prosumer: String,
        hour: usize,
        source: HemsError,
    },
    #[error("SOC replay of {prosumer} at hour {hour} gives {replayed}, schedule says {scheduled}")]
    SocMismatch {
        prosumer: String,
        hour: usize,
        replayed: f64,
        scheduled: f64,
    },
    #[error("carried SOC count {got} does not match {want} prosumers")]
    SocCount { got: usize, want: usize },
}

/// Outcome of one rolling window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult<T> {
    pub index: usize,
    pub hours: Range<usize>,
    /// Accepted prosumer schedules, in scenario order.
    pub schedules: Vec<ProsumerSchedule<T>>,
    /// One outcome per negotiation round.
    pub outcomes: Vec<TeOutcome<T>>,
    /// Adders in force for the accepted schedules (per hour, bus).
    pub applied_adder: BusSeries<T>,
    /// Grid-side schedule of the window (per hour, bus, net import).
    pub grid_schedule: BusSeries<T>,
    /// Rounds ran out before the violations were cured.
    pub flagged: bool,
    pub residual_violations: Vec<LimitViolation<T>>,
}

impl<T: Real> WindowResult<T> {
    pub fn final_outcome(&self) -> &TeOutcome<T> {
        self.outcomes.last().expect("a window runs at least one round")
    }

    pub fn status(&self) -> TeStatus {
        self.final_outcome().status
    }

    /// Aggregate before any negotiation.
    pub fn initial_aggregate(&self) -> &BusSeries<T> {
        &self.outcomes[0].base
    }

    /// No violation left, or a converged negotiation.
    pub fn is_secure(&self) -> bool {
        self.status() != TeStatus::IterationLimit
    }

    pub fn admm_iterations(&self) -> usize {
        self.outcomes.iter().map(|o| o.admm_iterations).sum()
    }
}

/// One executed hour.
#[derive(Debug, Clone, PartialEq)]
pub struct CommittedHour<T> {
    pub hour: usize,
    pub window: usize,
    pub status: TeStatus,
    pub flagged: bool,
    /// Per prosumer, in scenario order.
    pub decisions: Vec<HourDecision<T>>,
    /// SOC at the start of the hour, per prosumer.
    pub soc_before: Vec<T>,
    /// SOC at the end of the hour from replaying the decision.
    pub soc_after: Vec<T>,
    /// Per bus net import before negotiation.
    pub before_te_kw: Vec<T>,
    /// Per bus net import of the grid-side schedule.
    pub after_te_kw: Vec<T>,
}

/// Carried state between windows.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonState<T> {
    pub start: usize,
    pub soc: Vec<T>,
    pub committed: Vec<CommittedHour<T>>,
    pub windows: usize,
}

impl<T: Real> HorizonState<T> {
    pub fn initial(scenario: &Scenario<T>) -> Self {
        Self {
            start: 0,
            soc: scenario.prosumers.iter().map(|p| p.soc_initial_frac).collect(),
            committed: Vec::new(),
            windows: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonResult<T> {
    pub windows: Vec<WindowResult<T>>,
    pub committed: Vec<CommittedHour<T>>,
    pub initial_soc: Vec<T>,
}

impl<T: Real> HorizonResult<T> {
    pub fn any_flagged(&self) -> bool {
        self.windows.iter().any(|w| w.flagged)
    }

    /// Committed per-bus net import before negotiation.
    pub fn committed_before(&self) -> BusSeries<T> {
        BusSeries::from_rows(self.committed.iter().map(|c| c.before_te_kw.clone()).collect())
    }

    /// Committed per-bus net import of the grid-side schedules.
    pub fn committed_after(&self) -> BusSeries<T> {
        BusSeries::from_rows(self.committed.iter().map(|c| c.after_te_kw.clone()).collect())
    }
}

/// Hours covered by the window starting at `start`.
pub fn window_range<T: Real>(scenario: &Scenario<T>, start: usize) -> Range<usize> {
    let c = &scenario.config;
    start..(start + c.window_hours).min(c.horizon_hours)
}

fn solve_all<T: Real>(
    scenario: &Scenario<T>,
    window: &Range<usize>,
    soc: &[T],
    adder: &BusSeries<T>,
    bus_of: &[usize],
    previous: Option<(&[ProsumerSchedule<T>], &BusSeries<T>)>,
    opts: &SolverOptions,
) -> Result<Vec<ProsumerSchedule<T>>, RollingError> {
    let mut out = Vec::with_capacity(scenario.prosumers.len());
    for (i, spec) in scenario.prosumers.iter().enumerate() {
        let j = bus_of[i];
        let a: Vec<T> = (0..window.len()).map(|t| adder.get(t, j)).collect();
        if let Some((prev, prev_adder)) = previous {
            if (0..window.len()).all(|t| prev_adder.get(t, j) == a[t]) {
                out.push(prev[i].clone());
                continue;
            }
        }
        let (buy, sell) = window_prices(spec, &scenario.prices, window.clone())?;
        out.push(reschedule_with_adder(
            spec,
            window.clone(),
            &buy,
            &sell,
            &a,
            soc[i],
            opts,
        )?);
    }
    Ok(out)
}

/// Runs negotiation rounds over one window until no limit is broken or the
/// round budget is spent. Adders accumulate across rounds.
pub fn run_window<T: Real>(
    index: usize,
    start: usize,
    soc: &[T],
    scenario: &Scenario<T>,
    opts: &SolverOptions,
) -> Result<WindowResult<T>, RollingError> {
    if soc.len() != scenario.prosumers.len() {
        return Err(RollingError::SocCount {
            got: soc.len(),
            want: scenario.prosumers.len(),
        });
    }
    let cfg = &scenario.config;
    let window = window_range(scenario, start);
    let bus_of = scenario.prosumer_bus_indices();
    let buses = scenario.network.num_buses();
    let mut adder = BusSeries::zeros(window.len(), buses);
    let mut schedules = solve_all(scenario, &window, soc, &adder, &bus_of, None, opts)?;
    let mut outcomes = Vec::new();
    let rounds = cfg.max_te_rounds.max(1);
    for round in 0..rounds {
        let outcome = run_te_round(&schedules, scenario, start, round, opts)?;
        log::debug!(
            "window={} start={} round={} status={} admm_iterations={} violations={}",
            index,
            start,
            round,
            outcome.status,
            outcome.admm_iterations,
            outcome.assessment.violations.len()
        );
        let done = outcome.status == TeStatus::NoViolation || round + 1 == rounds;
        let step = distribute_adder(&outcome.price_adder, cfg.adder_mode);
        outcomes.push(outcome);
        if done {
            break;
        }
        let next = adder.zip_map(&step, |a, s| a + s);
        schedules = solve_all(
            scenario,
            &window,
            soc,
            &next,
            &bus_of,
            Some((&schedules, &adder)),
            opts,
        )?;
        adder = next;
    }
    let last = outcomes.last().expect("at least one round");
    let flagged = last.status != TeStatus::NoViolation;
    let grid_schedule = match last.status {
        TeStatus::Converged => last.p_dso.clone(),
        _ => last.base.clone(),
    };
    Ok(WindowResult {
        index,
        hours: window,
        schedules,
        residual_violations: if flagged {
            last.assessment.violations.clone()
        } else {
            Vec::new()
        },
        outcomes,
        applied_adder: adder,
        grid_schedule,
        flagged,
    })
}

/// Commits the first `window_step_hours` of `w`, replays SOC and shifts.
pub fn advance<T: Real>(
    state: HorizonState<T>,
    w: &WindowResult<T>,
    scenario: &Scenario<T>,
) -> Result<HorizonState<T>, RollingError> {
    let HorizonState {
        start,
        mut soc,
        mut committed,
        windows,
    } = state;
    let steps = scenario.config.window_step_hours.max(1).min(w.hours.len());
    let initial = w.initial_aggregate();
    let tol = T::lit(1e-6);
    for k in 0..steps {
        let hour = start + k;
        let before = soc.clone();
        let mut decisions = Vec::with_capacity(soc.len());
        for (i, spec) in scenario.prosumers.iter().enumerate() {
            let d = w.schedules[i].decisions[k].clone();
            let next = soc_transition(soc[i], d.charge_flow(), d.discharge_flow(), spec).map_err(
                |source| RollingError::SocReplay {
                    prosumer: spec.id.clone(),
                    hour,
                    source,
                },
            )?;
            if (next - d.soc).abs() > tol {
                return Err(RollingError::SocMismatch {
                    prosumer: spec.id.clone(),
                    hour,
                    replayed: next.as_f64(),
                    scheduled: d.soc.as_f64(),
                });
            }
            soc[i] = next;
            decisions.push(d);
        }
        committed.push(CommittedHour {
            hour,
            window: w.index,
            status: w.status(),
            flagged: w.flagged,
            decisions,
            soc_before: before,
            soc_after: soc.clone(),
            before_te_kw: initial.row(k).to_vec(),
            after_te_kw: w.grid_schedule.row(k).to_vec(),
        });
    }
    Ok(HorizonState {
        start: start + steps,
        soc,
        committed,
        windows: windows + 1,
    })
}

/// Runs every window of the horizon in sequence.
pub fn run_horizon<T: Real>(
    scenario: &Scenario<T>,
    opts: &SolverOptions,
) -> Result<HorizonResult<T>, RollingError> {
    let mut state = HorizonState::initial(scenario);
    let initial_soc = state.soc.clone();
    let mut windows = Vec::new();
    while state.start < scenario.config.horizon_hours {
        let w = run_window(state.windows, state.start, &state.soc, scenario, opts)?;
        state = advance(state, &w, scenario)?;
        windows.push(w);
    }
    Ok(HorizonResult {
        windows,
        committed: state.committed,
        initial_soc,
    })
}
