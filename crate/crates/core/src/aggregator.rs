//! Bus aggregation of prosumer schedules and the regulation subproblem.
//!
//! Up-regulation is extra injection (less import), down-regulation is extra
//! consumption. The adjusted aggregate of bus `j` is
//! `P^Agg + Σ_{i on j} (down_i − up_i)` in net-import terms.

use thiserror::Error;

use crate::hems::ProsumerSchedule;
use crate::num::Real;
use crate::scenario::{BusNetwork, ProsumerSpec};
use crate::series::BusSeries;
use crate::solver::{
    solve_mixed, MathProgram, ProgramError, Relation, Sense, SolveStatus, SolverOptions, VarId,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregatorError {
    #[error("schedule for unknown prosumer {0}")]
    UnknownProsumer(String),
    #[error("prosumer {prosumer} sits on unknown bus {bus}")]
    UnknownBus { prosumer: String, bus: u32 },
    #[error("schedules have inconsistent lengths")]
    LengthMismatch,
    #[error("{what} is {got:?}, expected {want:?} (hours, buses)")]
    IndexMismatch {
        what: &'static str,
        got: (usize, usize),
        want: (usize, usize),
    },
    #[error("regulation subproblem at hour {hour}, bus {bus} ended with {status:?}")]
    Solve {
        hour: usize,
        bus: usize,
        status: SolveStatus,
    },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Sums prosumer schedules per bus in net-import terms.
pub fn aggregate_by_bus<T: Real>(
    schedules: &[ProsumerSchedule<T>],
    specs: &[ProsumerSpec<T>],
    network: &BusNetwork<T>,
) -> Result<BusSeries<T>, AggregatorError> {
    let hours = schedules.first().map_or(0, |s| s.len());
    let mut agg = BusSeries::zeros(hours, network.num_buses());
    for s in schedules {
        if s.len() != hours {
            return Err(AggregatorError::LengthMismatch);
        }
        let spec = specs
            .iter()
            .find(|p| p.id == s.prosumer_id)
            .ok_or_else(|| AggregatorError::UnknownProsumer(s.prosumer_id.clone()))?;
        let j = network
            .bus_index(spec.bus_id)
            .ok_or_else(|| AggregatorError::UnknownBus {
                prosumer: spec.id.clone(),
                bus: spec.bus_id,
            })?;
        for (t, v) in s.net_kw.iter().enumerate() {
            agg.add_at(t, j, -*v);
        }
    }
    Ok(agg)
}

/// Upper limits on up- and down-regulation of one prosumer, per hour.
pub fn regulation_limits<T: Real>(spec: &ProsumerSpec<T>) -> (T, T) {
    if spec.capacity_kwh <= T::zero() {
        return (T::zero(), T::zero());
    }
    let two = T::lit(2.0);
    (
        two * spec.p_discharge_max_kw * spec.eta_discharge,
        two * spec.p_charge_max_kw * spec.eta_charge,
    )
}

/// Consensus data of one (hour, bus) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellContext<T> {
    pub mu_up: T,
    pub mu_down: T,
    pub lambda: T,
    pub rho: T,
    pub p_dso: T,
    pub p_agg: T,
}

/// Variables of one resident prosumer in a balancing program.
#[derive(Debug, Clone, Copy)]
pub struct ResidentVars {
    pub up: VarId,
    pub down: VarId,
    pub dir_up: VarId,
    pub dir_down: VarId,
}

/// Adds the regulation variables of one (hour, bus) cell to `p` and returns
/// the resident handles and the residual variable `r = P^Agg* − P^DSO`.
fn add_cell<T: Real>(
    p: &mut MathProgram<T>,
    tag: &str,
    residents: &[&ProsumerSpec<T>],
    c: &CellContext<T>,
) -> (Vec<ResidentVars>, VarId) {
    let mut vars = Vec::with_capacity(residents.len());
    let r = p.continuous(format!("r_{tag}"), -T::infinity(), T::infinity());
    // r - Σ(down - up) = P^Agg - P^DSO
    let mut link = vec![(r, T::one())];
    for spec in residents {
        let (up_max, down_max) = regulation_limits(spec);
        let id = &spec.id;
        let up = p.continuous(format!("up_{id}_{tag}"), T::zero(), up_max);
        let down = p.continuous(format!("down_{id}_{tag}"), T::zero(), down_max);
        let dir_up = p.binary(format!("da1_{id}_{tag}"));
        let dir_down = p.binary(format!("da2_{id}_{tag}"));
        p.add_constraint(
            format!("dir_{id}_{tag}"),
            vec![(dir_up, T::one()), (dir_down, T::one())],
            Relation::Le,
            T::one(),
        );
        p.add_constraint(
            format!("upcap_{id}_{tag}"),
            vec![(up, T::one()), (dir_up, -up_max)],
            Relation::Le,
            T::zero(),
        );
        p.add_constraint(
            format!("downcap_{id}_{tag}"),
            vec![(down, T::one()), (dir_down, -down_max)],
            Relation::Le,
            T::zero(),
        );
        p.add_objective(down, c.mu_down);
        p.add_objective(up, -c.mu_up);
        link.push((down, -T::one()));
        link.push((up, T::one()));
        vars.push(ResidentVars {
            up,
            down,
            dir_up,
            dir_down,
        });
    }
    p.add_constraint(format!("link_{tag}"), link, Relation::Eq, c.p_agg - c.p_dso);
    p.add_objective(r, c.lambda);
    p.add_quadratic(r, r, c.rho * T::lit(0.5));
    (vars, r)
}

/// Balancing program of one (hour, bus) cell.
pub fn build_cell_problem<T: Real>(
    residents: &[&ProsumerSpec<T>],
    c: &CellContext<T>,
) -> (MathProgram<T>, Vec<ResidentVars>, VarId) {
    let mut p = MathProgram::new(Sense::Minimize);
    let (vars, r) = add_cell(&mut p, "0", residents, c);
    (p, vars, r)
}

/// Window-wide consensus inputs of an x-update.
#[derive(Debug, Clone, Copy)]
pub struct XUpdateInput<'a, T> {
    /// First absolute hour of the window (indexes the regulation prices).
    pub start: usize,
    pub up_price: &'a [T],
    pub down_price: &'a [T],
    pub lambda: &'a BusSeries<T>,
    pub rho: T,
    pub p_dso: &'a BusSeries<T>,
    pub p_agg: &'a BusSeries<T>,
}

impl<'a, T: Real> XUpdateInput<'a, T> {
    fn cell(&self, t: usize, j: usize) -> CellContext<T> {
        CellContext {
            mu_up: self.up_price[self.start + t],
            mu_down: self.down_price[self.start + t],
            lambda: self.lambda.get(t, j),
            rho: self.rho,
            p_dso: self.p_dso.get(t, j),
            p_agg: self.p_agg.get(t, j),
        }
    }

    fn check(&self, buses: usize) -> Result<(), AggregatorError> {
        let want = (self.p_agg.hours(), buses);
        for (what, s) in [
            ("lambda", self.lambda),
            ("p_dso", self.p_dso),
            ("p_agg", self.p_agg),
        ] {
            let got = (s.hours(), s.buses());
            if got != want {
                return Err(AggregatorError::IndexMismatch { what, got, want });
            }
        }
        let need = self.start + want.0;
        if self.up_price.len() < need || self.down_price.len() < need {
            return Err(AggregatorError::IndexMismatch {
                what: "regulation prices",
                got: (self.up_price.len().min(self.down_price.len()), 1),
                want: (need, 1),
            });
        }
        Ok(())
    }
}

fn residents_by_bus<'s, T: Real>(
    specs: &'s [ProsumerSpec<T>],
    bus_of: &[usize],
    buses: usize,
) -> Vec<Vec<(usize, &'s ProsumerSpec<T>)>> {
    let mut by_bus = vec![Vec::new(); buses];
    for (i, (spec, &j)) in specs.iter().zip(bus_of).enumerate() {
        by_bus[j].push((i, spec));
    }
    by_bus
}

/// The whole window's balancing program (all hours and buses at once).
///
/// Cells only interact through their own residual, so
/// [`admm_x_update`] solves the same problem cell by cell.
pub fn build_balancing_problem<T: Real>(
    specs: &[ProsumerSpec<T>],
    bus_of: &[usize],
    input: &XUpdateInput<'_, T>,
) -> Result<MathProgram<T>, AggregatorError> {
    let buses = input.p_agg.buses();
    input.check(buses)?;
    let by_bus = residents_by_bus(specs, bus_of, buses);
    let mut p = MathProgram::new(Sense::Minimize);
    for t in 0..input.p_agg.hours() {
        for (j, res) in by_bus.iter().enumerate() {
            let residents: Vec<&ProsumerSpec<T>> = res.iter().map(|r| r.1).collect();
            add_cell(&mut p, &format!("{t}_{j}"), &residents, &input.cell(t, j));
        }
    }
    Ok(p)
}

/// Regulation chosen by an x-update, per window hour and prosumer.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulationDecision<T> {
    pub up_kw: Vec<Vec<T>>,
    pub down_kw: Vec<Vec<T>>,
    pub dir_up: Vec<Vec<bool>>,
    pub dir_down: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XUpdate<T> {
    pub decision: RegulationDecision<T>,
    /// Adjusted aggregate `P^Agg*` per (hour, bus).
    pub adjusted: BusSeries<T>,
    /// Sum of the cell objectives.
    pub objective: T,
    /// Cells whose branch-and-bound hit its node budget.
    pub truncated_cells: usize,
}

/// Aggregator x-update: regulation per prosumer minimising regulation cost
/// plus the augmented-Lagrangian consensus terms, solved cell by cell.
pub fn admm_x_update<T: Real>(
    specs: &[ProsumerSpec<T>],
    bus_of: &[usize],
    input: &XUpdateInput<'_, T>,
    opts: &SolverOptions,
) -> Result<XUpdate<T>, AggregatorError> {
    let hours = input.p_agg.hours();
    let buses = input.p_agg.buses();
    input.check(buses)?;
    let by_bus = residents_by_bus(specs, bus_of, buses);
    let n = specs.len();
    let mut decision = RegulationDecision {
        up_kw: vec![vec![T::zero(); n]; hours],
        down_kw: vec![vec![T::zero(); n]; hours],
        dir_up: vec![vec![false; n]; hours],
        dir_down: vec![vec![false; n]; hours],
    };
    let mut adjusted = input.p_agg.clone();
    let mut objective = T::zero();
    let mut truncated_cells = 0;
    for t in 0..hours {
        for (j, res) in by_bus.iter().enumerate() {
            let c = input.cell(t, j);
            if res.is_empty() {
                // r is fixed by the link row
                let r = c.p_agg - c.p_dso;
                objective += c.lambda * r + c.rho * T::lit(0.5) * r * r;
                continue;
            }
            let residents: Vec<&ProsumerSpec<T>> = res.iter().map(|r| r.1).collect();
            let (p, vars, _) = build_cell_problem(&residents, &c);
            let sol = solve_mixed(&p, opts)?;
            match sol.status {
                SolveStatus::Optimal => {}
                SolveStatus::IterationLimit if sol.objective.is_finite() => truncated_cells += 1,
                status => return Err(AggregatorError::Solve { hour: t, bus: j, status }),
            }
            objective += sol.objective;
            for ((i, _), v) in res.iter().zip(&vars) {
                let up = sol.value(v.up);
                let down = sol.value(v.down);
                decision.up_kw[t][*i] = up;
                decision.down_kw[t][*i] = down;
                decision.dir_up[t][*i] = sol.value(v.dir_up) > T::lit(0.5);
                decision.dir_down[t][*i] = sol.value(v.dir_down) > T::lit(0.5);
                adjusted.add_at(t, j, down - up);
            }
        }
    }
    Ok(XUpdate {
        decision,
        adjusted,
        objective,
        truncated_cells,
    })
}
