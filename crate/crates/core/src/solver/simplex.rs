//! Dense bounded-variable simplex.
//!
//! Rows `a_i x (<=,=,>=) b_i` get a slack `s_i` so that `a_i x + s_i = b_i`
//! with `s_i ∈ [0,∞)`, `(−∞,0]` or `{0}`. Rows whose slack cannot start
//! feasible get an artificial column for phase one. The tableau stores
//! `B⁻¹A` explicitly; the dual simplex re-optimises after bound changes,
//! which is what branch-and-bound uses for warm starts.

use std::rc::Rc;

use super::linalg::lu_solve;
use super::{MathProgram, Relation, SolveResult, SolveStatus, SolverOptions};
use crate::num::Real;

/// LP in dense form: `min c'x` s.t. rows and bounds.
#[derive(Debug, Clone)]
pub(crate) struct StandardLp<T> {
    pub n: usize,
    pub m: usize,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub rel: Vec<Relation>,
    pub c: Vec<T>,
    pub lo: Vec<T>,
    pub up: Vec<T>,
}

impl<T: Real> StandardLp<T> {
    pub fn from_program(p: &MathProgram<T>, bounds: &[(T, T)]) -> Self {
        let n = p.num_vars();
        let m = p.constraints.len();
        let mut a = vec![T::zero(); m * n];
        let mut b = Vec::with_capacity(m);
        let mut rel = Vec::with_capacity(m);
        for (i, row) in p.constraints.iter().enumerate() {
            for &(j, v) in &row.terms {
                a[i * n + j] += v;
            }
            b.push(row.rhs);
            rel.push(row.relation);
        }
        Self {
            n,
            m,
            a,
            b,
            rel,
            c: p.min_form_linear(),
            lo: bounds.iter().map(|b| b.0).collect(),
            up: bounds.iter().map(|b| b.1).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack(usize),
    /// Artificial on a row with the given sign.
    Artificial(usize, bool),
}

const NONBASIC: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Tableau<T> {
    lp: Rc<StandardLp<T>>,
    m: usize,
    nc: usize,
    t: Vec<T>,
    d: Vec<T>,
    cost: Vec<T>,
    lo: Vec<T>,
    up: Vec<T>,
    val: Vec<T>,
    kind: Vec<ColKind>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    degenerate_run: usize,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
    Infeasible,
}

/// Result of an LP solve, keeping the final tableau for warm starts.
pub(crate) struct LpOutcome<T> {
    pub status: SolveStatus,
    pub tableau: Option<Tableau<T>>,
}

impl<T: Real> LpOutcome<T> {
    fn bare(status: SolveStatus) -> Self {
        Self {
            status,
            tableau: None,
        }
    }

    pub fn into_result(self, p: &MathProgram<T>) -> SolveResult<T> {
        let n = p.num_vars();
        match (self.status, self.tableau) {
            (SolveStatus::Optimal, Some(mut tb)) => {
                let x = tb.polished_values(p);
                SolveResult {
                    status: SolveStatus::Optimal,
                    objective: p.objective_value(&x),
                    values: x,
                    nodes: 0,
                }
            }
            (status, _) => SolveResult::without_solution(status, n),
        }
    }
}

fn finite<T: Real>(v: T) -> bool {
    v.is_finite()
}

impl<T: Real> Tableau<T> {
    /// Two-phase solve from the slack basis.
    pub fn solve_cold(lp: &StandardLp<T>, opts: &SolverOptions) -> LpOutcome<T> {
        let lp = Rc::new(lp.clone());
        let n = lp.n;
        let m = lp.m;
        let tol = T::feasibility_tol();
        for j in 0..n {
            if lp.lo[j] > lp.up[j] + tol {
                return LpOutcome::bare(SolveStatus::Infeasible);
            }
        }

        let mut x0 = vec![T::zero(); n];
        for j in 0..n {
            x0[j] = if finite(lp.lo[j]) {
                lp.lo[j]
            } else if finite(lp.up[j]) {
                lp.up[j]
            } else {
                T::zero()
            };
        }

        // slack bounds and the rows needing artificials
        let mut slack_lo = Vec::with_capacity(m);
        let mut slack_up = Vec::with_capacity(m);
        for r in &lp.rel {
            let (l, u) = match r {
                Relation::Le => (T::zero(), T::infinity()),
                Relation::Ge => (T::neg_infinity(), T::zero()),
                Relation::Eq => (T::zero(), T::zero()),
            };
            slack_lo.push(l);
            slack_up.push(u);
        }
        let mut resid = vec![T::zero(); m];
        let mut art_rows = Vec::new();
        for i in 0..m {
            let act: T = (0..n).map(|j| lp.a[i * n + j] * x0[j]).sum();
            resid[i] = lp.b[i] - act;
            if resid[i] < slack_lo[i] - tol || resid[i] > slack_up[i] + tol {
                art_rows.push(i);
            }
        }

        let nc = n + m + art_rows.len();
        let mut kind = Vec::with_capacity(nc);
        kind.extend((0..n).map(|_| ColKind::Structural));
        kind.extend((0..m).map(ColKind::Slack));
        let mut lo = lp.lo.clone();
        lo.extend(slack_lo.iter().copied());
        let mut up = lp.up.clone();
        up.extend(slack_up.iter().copied());
        let mut val = x0.clone();
        val.extend((0..m).map(|_| T::zero()));

        let mut t = vec![T::zero(); m * nc];
        let mut basis = vec![0; m];
        let mut art_of_row = vec![None; m];
        for (k, &i) in art_rows.iter().enumerate() {
            let positive = resid[i] >= T::zero();
            let col = n + m + k;
            kind.push(ColKind::Artificial(i, positive));
            lo.push(T::zero());
            up.push(T::infinity());
            val.push(resid[i].abs());
            art_of_row[i] = Some((col, positive));
        }
        for i in 0..m {
            let row = &mut t[i * nc..(i + 1) * nc];
            let sign = match art_of_row[i] {
                Some((_, false)) => -T::one(),
                _ => T::one(),
            };
            for j in 0..n {
                row[j] = sign * lp.a[i * n + j];
            }
            row[n + i] = sign;
            match art_of_row[i] {
                Some((col, _)) => {
                    row[col] = T::one();
                    basis[i] = col;
                }
                None => {
                    basis[i] = n + i;
                    val[n + i] = resid[i];
                }
            }
        }
        let mut row_of = vec![NONBASIC; nc];
        for (i, &j) in basis.iter().enumerate() {
            row_of[j] = i;
        }

        let mut cost = lp.c.clone();
        cost.extend((0..nc - n).map(|_| T::zero()));

        let mut tb = Tableau {
            lp,
            m,
            nc,
            t,
            d: vec![T::zero(); nc],
            cost,
            lo,
            up,
            val,
            kind,
            basis,
            row_of,
            degenerate_run: 0,
            pivots: 0,
        };

        let mut budget = opts.max_simplex_iters;
        if !art_rows.is_empty() {
            let phase1: Vec<T> = tb
                .kind
                .iter()
                .map(|k| match k {
                    ColKind::Artificial(..) => T::one(),
                    _ => T::zero(),
                })
                .collect();
            tb.compute_reduced_costs(&phase1);
            match tb.primal(&mut budget) {
                Phase::Optimal => {}
                Phase::IterationLimit => return LpOutcome::bare(SolveStatus::IterationLimit),
                // phase one is bounded below by zero
                Phase::Unbounded | Phase::Infeasible => {
                    return LpOutcome::bare(SolveStatus::Infeasible)
                }
            }
            let infeas: T = (0..tb.nc)
                .filter(|&j| matches!(tb.kind[j], ColKind::Artificial(..)))
                .map(|j| tb.val[j])
                .sum();
            let scale = tb
                .lp
                .b
                .iter()
                .fold(T::one(), |acc, v| acc.max(v.abs()));
            if infeas > tol * scale {
                return LpOutcome::bare(SolveStatus::Infeasible);
            }
            tb.expel_artificials();
        }

        let cost = tb.cost.clone();
        tb.compute_reduced_costs(&cost);
        let status = match tb.primal(&mut budget) {
            Phase::Optimal => SolveStatus::Optimal,
            Phase::Unbounded => SolveStatus::Unbounded,
            Phase::IterationLimit => SolveStatus::IterationLimit,
            Phase::Infeasible => SolveStatus::Infeasible,
        };
        LpOutcome {
            status,
            tableau: Some(tb),
        }
    }

    fn compute_reduced_costs(&mut self, cost: &[T]) {
        let nc = self.nc;
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.t[i * nc..(i + 1) * nc];
            for (dj, tij) in self.d.iter_mut().zip(row) {
                *dj -= cb * *tij;
            }
        }
        for &j in &self.basis {
            self.d[j] = T::zero();
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.nc;
        let piv = self.t[r * nc + q];
        let inv = T::one() / piv;
        for v in &mut self.t[r * nc..(r + 1) * nc] {
            *v *= inv;
        }
        self.t[r * nc + q] = T::one();
        let pivot_row: Vec<T> = self.t[r * nc..(r + 1) * nc].to_vec();
        let nz: Vec<usize> = (0..nc).filter(|&j| pivot_row[j] != T::zero()).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[q] = T::zero();
        }
        let dq = self.d[q];
        if dq != T::zero() {
            for &j in &nz {
                self.d[j] -= dq * pivot_row[j];
            }
        }
        self.d[q] = T::zero();
        let leaving = self.basis[r];
        self.row_of[leaving] = NONBASIC;
        self.row_of[q] = r;
        self.basis[r] = q;
        self.pivots += 1;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.up[j]
    }

    /// Primal simplex on the current reduced costs.
    fn primal(&mut self, budget: &mut usize) -> Phase {
        let opt_tol = T::optimality_tol();
        let piv_tol = T::pivot_tol();
        let feas = T::feasibility_tol();
        let nc = self.nc;
        let mut bland = false;
        loop {
            if *budget == 0 {
                return Phase::IterationLimit;
            }
            *budget -= 1;

            // pricing
            let mut enter: Option<(usize, T)> = None;
            let mut best = T::zero();
            for j in 0..nc {
                if self.row_of[j] != NONBASIC || self.is_fixed(j) {
                    continue;
                }
                let dj = self.d[j];
                let dir = if dj < -opt_tol && self.val[j] < self.up[j] {
                    T::one()
                } else if dj > opt_tol && self.val[j] > self.lo[j] {
                    -T::one()
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return Phase::Optimal;
            };

            // Harris two-pass ratio test
            let mut theta_max = T::infinity();
            for i in 0..self.m {
                let alpha = self.t[i * nc + q];
                if alpha.abs() <= piv_tol {
                    continue;
                }
                let rate = -dir * alpha;
                let b = self.basis[i];
                let lim = if rate < T::zero() {
                    if !finite(self.lo[b]) {
                        continue;
                    }
                    (self.val[b] - self.lo[b] + feas) / (-rate)
                } else {
                    if !finite(self.up[b]) {
                        continue;
                    }
                    (self.up[b] - self.val[b] + feas) / rate
                };
                theta_max = theta_max.min(lim);
            }
            let mut leave: Option<usize> = None;
            let mut leave_alpha = T::zero();
            let mut theta = T::infinity();
            if theta_max.is_finite() {
                for i in 0..self.m {
                    let alpha = self.t[i * nc + q];
                    if alpha.abs() <= piv_tol {
                        continue;
                    }
                    let rate = -dir * alpha;
                    let b = self.basis[i];
                    let exact = if rate < T::zero() {
                        if !finite(self.lo[b]) {
                            continue;
                        }
                        (self.val[b] - self.lo[b]) / (-rate)
                    } else {
                        if !finite(self.up[b]) {
                            continue;
                        }
                        (self.up[b] - self.val[b]) / rate
                    };
                    if exact > theta_max {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some(li) => {
                            if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        leave_alpha = alpha.abs();
                        theta = exact.max(T::zero());
                    }
                }
            }
            let flip = self.up[q] - self.lo[q];
            if flip.is_finite() && flip <= theta {
                // bound flip, no basis change
                for i in 0..self.m {
                    let alpha = self.t[i * nc + q];
                    if alpha != T::zero() {
                        let b = self.basis[i];
                        self.val[b] -= dir * alpha * flip;
                    }
                }
                self.val[q] = if dir > T::zero() { self.up[q] } else { self.lo[q] };
                self.degenerate_run = 0;
                bland = false;
                continue;
            }
            let Some(r) = leave else {
                return Phase::Unbounded;
            };
            if theta <= feas {
                self.degenerate_run += 1;
                if self.degenerate_run > 50 {
                    bland = true;
                }
            } else {
                self.degenerate_run = 0;
                bland = false;
            }
            for i in 0..self.m {
                let alpha = self.t[i * nc + q];
                if alpha != T::zero() {
                    let b = self.basis[i];
                    self.val[b] -= dir * alpha * theta;
                }
            }
            self.val[q] += dir * theta;
            let b = self.basis[r];
            let rate = -dir * self.t[r * nc + q];
            self.val[b] = if rate < T::zero() { self.lo[b] } else { self.up[b] };
            self.pivot(r, q);
        }
    }

    /// Dual simplex: restores primal feasibility keeping dual feasibility.
    fn dual(&mut self, budget: &mut usize) -> Phase {
        let feas = T::feasibility_tol();
        let piv_tol = T::pivot_tol();
        let nc = self.nc;
        loop {
            if *budget == 0 {
                return Phase::IterationLimit;
            }
            *budget -= 1;
            let mut leave: Option<usize> = None;
            let mut worst = feas;
            for i in 0..self.m {
                let b = self.basis[i];
                let inf = (self.lo[b] - self.val[b]).max(self.val[b] - self.up[b]);
                if inf > worst {
                    worst = inf;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return Phase::Optimal;
            };
            let br = self.basis[r];
            let below = self.val[br] < self.lo[br];
            let target = if below { self.lo[br] } else { self.up[br] };

            let eligible = |tb: &Self, j: usize| -> Option<T> {
                if tb.row_of[j] != NONBASIC || tb.is_fixed(j) {
                    return None;
                }
                let alpha = tb.t[r * nc + j];
                if alpha.abs() <= piv_tol {
                    return None;
                }
                let can_inc = tb.val[j] < tb.up[j];
                let can_dec = tb.val[j] > tb.lo[j];
                let ok = if below {
                    (alpha < T::zero() && can_inc) || (alpha > T::zero() && can_dec)
                } else {
                    (alpha > T::zero() && can_inc) || (alpha < T::zero() && can_dec)
                };
                ok.then_some(alpha)
            };
            let opt_tol = T::optimality_tol();
            let mut bound = T::infinity();
            for j in 0..nc {
                if let Some(alpha) = eligible(self, j) {
                    bound = bound.min((self.d[j].abs() + opt_tol) / alpha.abs());
                }
            }
            if !bound.is_finite() {
                return Phase::Infeasible;
            }
            let mut enter: Option<usize> = None;
            let mut enter_alpha = T::zero();
            for j in 0..nc {
                if let Some(alpha) = eligible(self, j) {
                    if self.d[j].abs() / alpha.abs() <= bound && alpha.abs() > enter_alpha {
                        enter = Some(j);
                        enter_alpha = alpha.abs();
                    }
                }
            }
            let q = enter.expect("ratio bound implies a candidate");
            let alpha_rq = self.t[r * nc + q];
            let step = (self.val[br] - target) / alpha_rq;
            for i in 0..self.m {
                let alpha = self.t[i * nc + q];
                if alpha != T::zero() {
                    let b = self.basis[i];
                    self.val[b] -= alpha * step;
                }
            }
            self.val[q] += step;
            self.val[br] = target;
            self.pivot(r, q);
        }
    }

    fn expel_artificials(&mut self) {
        let nc = self.nc;
        for r in 0..self.m {
            let b = self.basis[r];
            if !matches!(self.kind[b], ColKind::Artificial(..)) {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for j in 0..nc {
                if self.row_of[j] != NONBASIC || matches!(self.kind[j], ColKind::Artificial(..)) {
                    continue;
                }
                let a = self.t[r * nc + j].abs();
                if a > T::lit(1e-7) && best.is_none_or(|(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.t[r * nc + q];
                let step = self.val[b] / alpha;
                for i in 0..self.m {
                    let a = self.t[i * nc + q];
                    if a != T::zero() {
                        let bi = self.basis[i];
                        self.val[bi] -= a * step;
                    }
                }
                self.val[q] += step;
                self.val[b] = T::zero();
                self.pivot(r, q);
            }
        }
        // drop nonbasic artificials, pin basic ones (redundant rows) to zero
        let keep: Vec<usize> = (0..nc)
            .filter(|&j| {
                !matches!(self.kind[j], ColKind::Artificial(..)) || self.row_of[j] != NONBASIC
            })
            .collect();
        let new_nc = keep.len();
        let mut t = vec![T::zero(); self.m * new_nc];
        for i in 0..self.m {
            for (nj, &j) in keep.iter().enumerate() {
                t[i * new_nc + nj] = self.t[i * nc + j];
            }
        }
        let pick = |v: &Vec<T>| keep.iter().map(|&j| v[j]).collect::<Vec<T>>();
        self.lo = pick(&self.lo);
        self.up = pick(&self.up);
        self.val = pick(&self.val);
        self.cost = pick(&self.cost);
        self.d = pick(&self.d);
        self.kind = keep.iter().map(|&j| self.kind[j]).collect();
        let mut remap = vec![NONBASIC; nc];
        for (nj, &j) in keep.iter().enumerate() {
            remap[j] = nj;
        }
        self.basis = self.basis.iter().map(|&j| remap[j]).collect();
        self.row_of = vec![NONBASIC; new_nc];
        for (i, &j) in self.basis.iter().enumerate() {
            self.row_of[j] = i;
        }
        for j in 0..new_nc {
            if matches!(self.kind[j], ColKind::Artificial(..)) {
                self.lo[j] = T::zero();
                self.up[j] = T::zero();
                self.val[j] = T::zero();
            }
        }
        self.t = t;
        self.nc = new_nc;
    }

    /// Tightens the bounds of structural variable `j` and shifts it if it is
    /// nonbasic. Basic infeasibilities are left for [`Self::reoptimize`].
    pub fn set_structural_bounds(&mut self, j: usize, lo: T, up: T) {
        self.lo[j] = lo;
        self.up[j] = up;
        if self.row_of[j] == NONBASIC {
            let new_val = self.val[j].max(lo).min(up);
            let delta = new_val - self.val[j];
            if delta != T::zero() {
                let nc = self.nc;
                for i in 0..self.m {
                    let alpha = self.t[i * nc + j];
                    if alpha != T::zero() {
                        let b = self.basis[i];
                        self.val[b] -= alpha * delta;
                    }
                }
                self.val[j] = new_val;
            }
        }
    }

    /// Dual simplex followed by a primal clean-up pass.
    pub fn reoptimize(mut self, opts: &SolverOptions) -> LpOutcome<T> {
        let mut budget = opts.max_simplex_iters;
        let status = match self.dual(&mut budget) {
            Phase::Optimal => match self.primal(&mut budget) {
                Phase::Optimal => SolveStatus::Optimal,
                Phase::Unbounded => SolveStatus::Unbounded,
                Phase::IterationLimit => SolveStatus::IterationLimit,
                Phase::Infeasible => SolveStatus::Infeasible,
            },
            Phase::Infeasible => return LpOutcome::bare(SolveStatus::Infeasible),
            Phase::IterationLimit => SolveStatus::IterationLimit,
            Phase::Unbounded => SolveStatus::Unbounded,
        };
        LpOutcome {
            status,
            tableau: Some(self),
        }
    }

    /// Structural values, re-solved from the original data when pivoting
    /// drift left a visible violation.
    pub fn polished_values(&mut self, p: &MathProgram<T>) -> Vec<T> {
        let x = self.structural_values();
        if p.max_violation(&x) > T::feasibility_tol() * T::lit(0.1) {
            self.refine();
            return self.structural_values();
        }
        x
    }

    pub fn structural_values(&self) -> Vec<T> {
        self.val[..self.lp.n].to_vec()
    }

    /// Recomputes basic values from the original data by solving `B x_B = b − N x_N`.
    fn refine(&mut self) {
        let m = self.m;
        let n = self.lp.n;
        if m == 0 {
            return;
        }
        let mut bmat = vec![T::zero(); m * m];
        let mut rhs = self.lp.b.clone();
        let column = |k: ColKind, j: usize, i: usize, lp: &StandardLp<T>| -> T {
            match k {
                ColKind::Structural => lp.a[i * n + j],
                ColKind::Slack(r) => {
                    if r == i {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                ColKind::Artificial(r, pos) => {
                    if r == i {
                        if pos {
                            T::one()
                        } else {
                            -T::one()
                        }
                    } else {
                        T::zero()
                    }
                }
            }
        };
        for j in 0..self.nc {
            if self.row_of[j] != NONBASIC || self.val[j] == T::zero() {
                continue;
            }
            for i in 0..m {
                rhs[i] -= column(self.kind[j], j, i, &self.lp) * self.val[j];
            }
        }
        for (c, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                bmat[i * m + c] = column(self.kind[j], j, i, &self.lp);
            }
        }
        if let Some(xb) = lu_solve(&bmat, m, &rhs) {
            for (c, &j) in self.basis.iter().enumerate() {
                self.val[j] = xb[c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_continuous, MathProgram, Relation, Sense, SolveStatus};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn lower_bound_row_binds() {
        let mut p = MathProgram::<f64>::new(Sense::Minimize);
        let x = p.continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        p.add_objective(x, 1.0);
        p.add_constraint("lo", vec![(x, 1.0)], Relation::Ge, 3.0);
        p.add_constraint("hi", vec![(x, 1.0)], Relation::Le, 10.0);
        let r = solve_continuous(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.values[0] - 3.0).abs() < 1e-9);
        assert!((r.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_rows() {
        let mut p = MathProgram::<f64>::new(Sense::Minimize);
        let x = p.continuous("x", 0.0, 0.2);
        let y = p.continuous("y", 0.0, 0.2);
        p.add_objective(x, 1.0);
        p.add_objective(y, 1.0);
        p.add_constraint("cover", vec![(x, 1.0), (y, 1.0)], Relation::Ge, 1.0);
        let r = solve_continuous(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut p = MathProgram::<f64>::new(Sense::Maximize);
        let x = p.continuous("x", 0.0, f64::INFINITY);
        let y = p.continuous("y", 0.0, f64::INFINITY);
        p.add_objective(x, 1.0);
        p.add_constraint("r", vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        let r = solve_continuous(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_with_redundant_row() {
        let mut p = MathProgram::<f64>::new(Sense::Minimize);
        let x = p.continuous("x", 0.0, 5.0);
        let y = p.continuous("y", 0.0, 5.0);
        p.add_objective(x, 1.0);
        p.add_objective(y, 2.0);
        p.add_constraint("a", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 4.0);
        p.add_constraint("b", vec![(x, 2.0), (y, 2.0)], Relation::Eq, 8.0);
        p.add_constraint("c", vec![(x, 1.0)], Relation::Le, 3.0);
        let r = solve_continuous(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 5.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn warm_start_after_bound_change_matches_cold() {
        let mut p = MathProgram::<f64>::new(Sense::Maximize);
        let x = p.continuous("x", 0.0, 1.0);
        let y = p.continuous("y", 0.0, 1.0);
        p.add_objective(x, 1.0);
        p.add_objective(y, 1.0);
        p.add_constraint("cap", vec![(x, 1.0), (y, 1.0)], Relation::Le, 1.5);
        let lp = StandardLp::from_program(&p, &p.bounds());
        let out = Tableau::solve_cold(&lp, &opts());
        let mut tb = out.tableau.unwrap();
        tb.set_structural_bounds(0, 0.0, 0.0);
        let warm = tb.reoptimize(&opts()).into_result(&p);
        let mut fixed = p.clone();
        fixed.variables[0].upper = 0.0;
        let cold = solve_continuous(&fixed, &opts()).unwrap();
        assert_eq!(warm.status, SolveStatus::Optimal);
        assert!((warm.objective - cold.objective).abs() < 1e-12);
    }

    #[test]
    fn single_precision_lp() {
        let mut p = MathProgram::<f32>::new(Sense::Minimize);
        let x = p.continuous("x", 0.0, 10.0);
        let y = p.continuous("y", 0.0, 10.0);
        p.add_objective(x, 2.0);
        p.add_objective(y, 3.0);
        p.add_constraint("d", vec![(x, 1.0), (y, 1.0)], Relation::Ge, 4.0);
        p.add_constraint("e", vec![(x, 1.0)], Relation::Le, 1.5);
        let r = solve_continuous(&p, &SolverOptions::default()).unwrap();
        assert!((r.objective - 10.5).abs() < 1e-4);
    }
}
