//! Network limit checks and the operator side of the consensus negotiation.

use std::fmt;

use thiserror::Error;

use crate::num::Real;
use crate::scenario::BusNetwork;
use crate::series::BusSeries;
use crate::solver::{
    solve_continuous, MathProgram, ProgramError, Relation, Sense, SolveStatus, SolverOptions,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DsoError {
    #[error("{what} has {got} buses, network has {want}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("network limits cannot be met at hour {hour}")]
    Infeasible { hour: usize },
    #[error("operator subproblem at hour {hour} ended with {status:?}")]
    Solve { hour: usize, status: SolveStatus },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Bus voltages `U = U⁰ − S·P` for net imports `P`.
pub fn voltage_profile<T: Real>(
    net_import: &BusSeries<T>,
    network: &BusNetwork<T>,
) -> Result<BusSeries<T>, DsoError> {
    let n = network.num_buses();
    if net_import.buses() != n {
        return Err(DsoError::DimensionMismatch {
            what: "net import",
            got: net_import.buses(),
            want: n,
        });
    }
    Ok(BusSeries::from_fn(net_import.hours(), n, |t, j| {
        let row = net_import.row(t);
        let drop: T = network.sensitivity[j]
            .iter()
            .zip(row)
            .map(|(s, p)| *s * *p)
            .sum();
        network.base_voltage_pu[j] - drop
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    Congestion,
    Undervoltage,
    Overvoltage,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Congestion => "congestion",
            Self::Undervoltage => "undervoltage",
            Self::Overvoltage => "overvoltage",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One limit breach. `bus` is `None` for transformer congestion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitViolation<T> {
    pub kind: ViolationKind,
    pub hour: usize,
    pub bus: Option<usize>,
    /// Distance beyond the limit (kW or p.u.).
    pub magnitude: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitTolerances<T> {
    pub kw: T,
    pub pu: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkAssessment<T> {
    /// Total transformer flow per hour (import positive).
    pub transformer_flow_kw: Vec<T>,
    pub voltages: BusSeries<T>,
    pub violations: Vec<LimitViolation<T>>,
}

impl<T: Real> NetworkAssessment<T> {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self, kind: ViolationKind) -> Option<T> {
        self.violations
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.magnitude)
            .reduce(T::max)
    }
}

/// Flags transformer and voltage limit breaches beyond the tolerances.
pub fn check_limits<T: Real>(
    net_import: &BusSeries<T>,
    network: &BusNetwork<T>,
    tol: &LimitTolerances<T>,
) -> Result<NetworkAssessment<T>, DsoError> {
    let voltages = voltage_profile(net_import, network)?;
    let cap = network.transformer_capacity_kw;
    let mut flows = Vec::with_capacity(net_import.hours());
    let mut violations = Vec::new();
    for t in 0..net_import.hours() {
        let flow = net_import.hour_total(t);
        flows.push(flow);
        let excess = flow.abs() - cap;
        if excess > tol.kw {
            violations.push(LimitViolation {
                kind: ViolationKind::Congestion,
                hour: t,
                bus: None,
                magnitude: excess,
            });
        }
        for j in 0..network.num_buses() {
            let u = voltages.get(t, j);
            let (kind, magnitude) = if u < network.v_min_pu {
                (ViolationKind::Undervoltage, network.v_min_pu - u)
            } else if u > network.v_max_pu {
                (ViolationKind::Overvoltage, u - network.v_max_pu)
            } else {
                continue;
            };
            if magnitude > tol.pu {
                violations.push(LimitViolation {
                    kind,
                    hour: t,
                    bus: Some(j),
                    magnitude,
                });
            }
        }
    }
    Ok(NetworkAssessment {
        transformer_flow_kw: flows,
        voltages,
        violations,
    })
}

/// Operator-side consensus inputs over a window.
#[derive(Debug, Clone, Copy)]
pub struct ZUpdateInput<'a, T> {
    pub lambda: &'a BusSeries<T>,
    pub rho: T,
    /// Adjusted aggregate from the latest x-update.
    pub adjusted: &'a BusSeries<T>,
    /// Aggregate the operator tracks.
    pub base: &'a BusSeries<T>,
    pub weight: T,
    /// Buses held at `base` (no controllable resource behind them). Empty
    /// means every bus is free.
    pub fixed: &'a [bool],
}

impl<'a, T> ZUpdateInput<'a, T> {
    fn is_fixed(&self, j: usize) -> bool {
        self.fixed.get(j).copied().unwrap_or(false)
    }
}

fn unconstrained_hour<T: Real>(input: &ZUpdateInput<'_, T>, t: usize) -> Vec<T> {
    let two = T::lit(2.0);
    let denom = two * input.weight + input.rho;
    (0..input.base.buses())
        .map(|j| {
            let a = input.base.get(t, j);
            if input.is_fixed(j) {
                return a;
            }
            a + (input.lambda.get(t, j) + input.rho * (input.adjusted.get(t, j) - a)) / denom
        })
        .collect()
}

fn within_limits<T: Real>(p: &[T], network: &BusNetwork<T>) -> bool {
    let cap = network.transformer_capacity_kw;
    let flow: T = p.iter().copied().sum();
    if flow.abs() > cap {
        return false;
    }
    network.sensitivity.iter().enumerate().all(|(j, s)| {
        let u = network.base_voltage_pu[j]
            - s.iter().zip(p).map(|(a, b)| *a * *b).sum::<T>();
        u >= network.v_min_pu && u <= network.v_max_pu
    })
}

/// The operator's tracking program for window hour `t`.
pub fn build_hour_problem<T: Real>(
    input: &ZUpdateInput<'_, T>,
    network: &BusNetwork<T>,
    t: usize,
) -> MathProgram<T> {
    let n = network.num_buses();
    let mut p = MathProgram::new(Sense::Minimize);
    let vars: Vec<_> = (0..n)
        .map(|j| {
            if input.is_fixed(j) {
                let a = input.base.get(t, j);
                p.continuous(format!("p_{t}_{j}"), a, a)
            } else {
                p.continuous(format!("p_{t}_{j}"), -T::infinity(), T::infinity())
            }
        })
        .collect();
    let two = T::lit(2.0);
    for (j, v) in vars.iter().enumerate() {
        let a = input.base.get(t, j);
        let x = input.adjusted.get(t, j);
        // w(P − A)² − λP + ρ/2 (X − P)²
        p.add_quadratic(*v, *v, input.weight + input.rho / two);
        p.add_objective(
            *v,
            -(two * input.weight * a + input.lambda.get(t, j) + input.rho * x),
        );
        p.objective_offset += input.weight * a * a + input.rho / two * x * x;
    }
    let cap = network.transformer_capacity_kw;
    let all: Vec<_> = vars.iter().map(|v| (*v, T::one())).collect();
    p.add_constraint(format!("cap_hi_{t}"), all.clone(), Relation::Le, cap);
    p.add_constraint(format!("cap_lo_{t}"), all, Relation::Ge, -cap);
    for (j, row) in network.sensitivity.iter().enumerate() {
        let terms: Vec<_> = vars
            .iter()
            .zip(row)
            .filter(|(_, s)| **s != T::zero())
            .map(|(v, s)| (*v, *s))
            .collect();
        if terms.is_empty() {
            continue;
        }
        let u0 = network.base_voltage_pu[j];
        // U⁰ − S·P within [Umin, Umax]
        p.add_constraint(format!("vmin_{t}_{j}"), terms.clone(), Relation::Le, u0 - network.v_min_pu);
        p.add_constraint(format!("vmax_{t}_{j}"), terms, Relation::Ge, u0 - network.v_max_pu);
    }
    p
}

/// Operator z-update: per-hour tracking QPs under transformer and voltage
/// limits. Returns `P^DSO` per (hour, bus).
pub fn admm_z_update<T: Real>(
    input: &ZUpdateInput<'_, T>,
    network: &BusNetwork<T>,
    opts: &SolverOptions,
) -> Result<BusSeries<T>, DsoError> {
    let n = network.num_buses();
    for (what, s) in [
        ("lambda", input.lambda),
        ("adjusted aggregate", input.adjusted),
        ("base aggregate", input.base),
    ] {
        if s.buses() != n {
            return Err(DsoError::DimensionMismatch {
                what,
                got: s.buses(),
                want: n,
            });
        }
    }
    let hours = input.base.hours();
    let mut out = BusSeries::zeros(hours, n);
    for t in 0..hours {
        let free = unconstrained_hour(input, t);
        let p = if within_limits(&free, network) {
            free
        } else {
            let prog = build_hour_problem(input, network, t);
            let r = solve_continuous(&prog, opts)?;
            match r.status {
                SolveStatus::Optimal => r.values,
                SolveStatus::Infeasible => return Err(DsoError::Infeasible { hour: t }),
                status => return Err(DsoError::Solve { hour: t, status }),
            }
        };
        for (j, v) in p.into_iter().enumerate() {
            out.set(t, j, v);
        }
    }
    Ok(out)
}
