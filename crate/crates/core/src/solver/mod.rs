//! Small dense optimization backend.
//!
//! Every model in the crate is expressed as a [`MathProgram`]: bounded
//! variables (continuous or binary), a linear objective with an optional
//! convex quadratic part, and linear constraints. The bundled backend solves
//! LPs with a bounded-variable simplex, convex QPs with a primal active-set
//! method and mixed-binary programs with best-first branch-and-bound.

mod bnb;
mod linalg;
mod lp_format;
mod qp;
mod simplex;

use std::fmt;

use thiserror::Error;

use crate::num::Real;

pub use bnb::solve_mixed;
pub use lp_format::write_lp;

/// Variable handle returned by [`MathProgram::add_var`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub lower: T,
    pub upper: T,
    pub kind: VarKind,
}

/// One upper-triangle entry of the quadratic objective matrix `Q`.
///
/// The objective is `c'x + ½ x'Qx`; an off-diagonal entry `(i, j, q)` is
/// mirrored to `(j, i)`, so it contributes `q·x_i·x_j`. Repeated entries add.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTerm<T> {
    pub i: usize,
    pub j: usize,
    pub coef: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub name: String,
    pub terms: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Real> Constraint<T> {
    pub fn activity(&self, x: &[T]) -> T {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Signed amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[T]) -> T {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(T::zero()),
            Relation::Ge => (self.rhs - lhs).max(T::zero()),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Backend-neutral optimization model.
#[derive(Debug, Clone, PartialEq)]
pub struct MathProgram<T> {
    pub sense: Sense,
    pub variables: Vec<Variable<T>>,
    pub objective: Vec<T>,
    pub quadratic: Vec<QuadTerm<T>>,
    pub objective_offset: T,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("variable {var}: lower bound exceeds upper bound")]
    InvertedBounds { var: String },
    #[error("variable {var}: binary bounds must lie within [0, 1]")]
    BinaryBounds { var: String },
    #[error("variable {var}: non-finite objective coefficient or NaN bound")]
    NonFinite { var: String },
    #[error("constraint {row}: references undeclared variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("constraint {row}: non-finite coefficient or right-hand side")]
    NonFiniteRow { row: String },
    #[error("quadratic term references undeclared variable index {index}")]
    UnknownQuadVariable { index: usize },
    #[error("quadratic objective is not positive semidefinite (after sense normalisation)")]
    NotConvex,
}

impl<T: Real> MathProgram<T> {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            variables: Vec::new(),
            objective: Vec::new(),
            quadratic: Vec::new(),
            objective_offset: T::zero(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: T, upper: T, kind: VarKind) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.objective.push(T::zero());
        VarId(self.variables.len() - 1)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: T, upper: T) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, T::zero(), T::one(), VarKind::Binary)
    }

    pub fn add_objective(&mut self, v: VarId, coef: T) {
        self.objective[v.0] += coef;
    }

    /// Adds `coef·x_i·x_j` to the objective (for `i == j`, `coef·x_i²`).
    pub fn add_quadratic(&mut self, i: VarId, j: VarId, coef: T) {
        let (i, j) = if i.0 <= j.0 { (i.0, j.0) } else { (j.0, i.0) };
        let q = if i == j { coef + coef } else { coef };
        self.quadratic.push(QuadTerm { i, j, coef: q });
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, T)>,
        relation: Relation,
        rhs: T,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms: terms.into_iter().map(|(v, a)| (v.0, a)).collect(),
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn has_quadratic(&self) -> bool {
        self.quadratic.iter().any(|q| q.coef != T::zero())
    }

    /// Objective value in the program's own sense.
    pub fn objective_value(&self, x: &[T]) -> T {
        let mut v = self.objective_offset;
        for (c, xi) in self.objective.iter().zip(x) {
            v += *c * *xi;
        }
        let half = T::lit(0.5);
        for q in &self.quadratic {
            if q.i == q.j {
                v += half * q.coef * x[q.i] * x[q.i];
            } else {
                v += q.coef * x[q.i] * x[q.j];
            }
        }
        v
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (v, xi) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - *xi).max(*xi - v.upper);
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(x));
        }
        worst
    }

    /// Checks the structural invariants: bounds ordered, binaries within
    /// [0, 1], indices declared, quadratic part convex for the given sense.
    pub fn validate(&self) -> Result<(), ProgramError> {
        let n = self.num_vars();
        for (v, c) in self.variables.iter().zip(&self.objective) {
            if v.lower.is_nan() || v.upper.is_nan() || !c.is_finite() {
                return Err(ProgramError::NonFinite {
                    var: v.name.clone(),
                });
            }
            if v.lower > v.upper {
                return Err(ProgramError::InvertedBounds {
                    var: v.name.clone(),
                });
            }
            if v.kind == VarKind::Binary && (v.lower < T::zero() || v.upper > T::one()) {
                return Err(ProgramError::BinaryBounds {
                    var: v.name.clone(),
                });
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ProgramError::NonFiniteRow {
                    row: c.name.clone(),
                });
            }
            for &(j, a) in &c.terms {
                if j >= n {
                    return Err(ProgramError::UnknownVariable {
                        row: c.name.clone(),
                        index: j,
                    });
                }
                if !a.is_finite() {
                    return Err(ProgramError::NonFiniteRow {
                        row: c.name.clone(),
                    });
                }
            }
        }
        for q in &self.quadratic {
            let bad = if q.i >= n { q.i } else { q.j };
            if q.i >= n || q.j >= n {
                return Err(ProgramError::UnknownQuadVariable { index: bad });
            }
        }
        if self.has_quadratic() {
            let h = self.min_form_hessian();
            if !linalg::is_psd(&h, n) {
                return Err(ProgramError::NotConvex);
            }
        }
        Ok(())
    }

    /// Dense Hessian of the minimisation form (`Q`, or `-Q` when maximising).
    pub(crate) fn min_form_hessian(&self) -> Vec<T> {
        let n = self.num_vars();
        let mut h = vec![T::zero(); n * n];
        let sign = match self.sense {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        };
        for q in &self.quadratic {
            h[q.i * n + q.j] += sign * q.coef;
            if q.i != q.j {
                h[q.j * n + q.i] += sign * q.coef;
            }
        }
        h
    }

    /// Linear objective of the minimisation form.
    pub(crate) fn min_form_linear(&self) -> Vec<T> {
        match self.sense {
            Sense::Minimize => self.objective.clone(),
            Sense::Maximize => self.objective.iter().map(|c| -*c).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub status: SolveStatus,
    pub values: Vec<T>,
    pub objective: T,
    /// Branch-and-bound nodes processed (0 for continuous solves).
    pub nodes: usize,
}

impl<T: Real> SolveResult<T> {
    fn without_solution(status: SolveStatus, n: usize) -> Self {
        Self {
            status,
            values: vec![T::zero(); n],
            objective: T::nan(),
            nodes: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> T {
        self.values[v.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Pivot budget per simplex solve.
    pub max_simplex_iters: usize,
    /// Iteration budget per active-set solve.
    pub max_qp_iters: usize,
    /// Branch-and-bound node budget.
    pub max_nodes: usize,
    /// Relative optimality gap used for pruning.
    pub relative_gap: f64,
    /// Open nodes allowed to keep a parent tableau for dual-simplex warm starts.
    pub warm_start_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_simplex_iters: 50_000,
            max_qp_iters: 10_000,
            max_nodes: 100_000,
            relative_gap: 1e-6,
            warm_start_nodes: 64,
        }
    }
}

/// Solves the continuous relaxation of `p` (binary variables are treated as
/// continuous within their bounds). LPs go through the simplex; programs with
/// a quadratic part go through the active-set method.
pub fn solve_continuous<T: Real>(
    p: &MathProgram<T>,
    opts: &SolverOptions,
) -> Result<SolveResult<T>, ProgramError> {
    p.validate()?;
    Ok(solve_relaxation(p, &p.bounds(), opts))
}

impl<T: Real> MathProgram<T> {
    pub(crate) fn bounds(&self) -> Vec<(T, T)> {
        self.variables.iter().map(|v| (v.lower, v.upper)).collect()
    }
}

/// Relaxation with bounds overridden; assumes `p` already validated.
pub(crate) fn solve_relaxation<T: Real>(
    p: &MathProgram<T>,
    bounds: &[(T, T)],
    opts: &SolverOptions,
) -> SolveResult<T> {
    if p.has_quadratic() {
        qp::solve_qp(p, bounds, opts)
    } else {
        let lp = simplex::StandardLp::from_program(p, bounds);
        let out = simplex::Tableau::solve_cold(&lp, opts);
        out.into_result(p)
    }
}

/// Pluggable solver backend. The bundled implementation is the reference; an
/// external MILP/MIQP solver can be wrapped behind the same trait.
pub trait Backend<T: Real>: Send + Sync {
    fn solve(&self, p: &MathProgram<T>) -> Result<SolveResult<T>, ProgramError>;
}

#[derive(Debug, Clone, Default)]
pub struct BundledSolver {
    pub options: SolverOptions,
}

impl<T: Real> Backend<T> for BundledSolver {
    fn solve(&self, p: &MathProgram<T>) -> Result<SolveResult<T>, ProgramError> {
        if p.num_binaries() == 0 {
            solve_continuous(p, &self.options)
        } else {
            solve_mixed(p, &self.options)
        }
    }
}
