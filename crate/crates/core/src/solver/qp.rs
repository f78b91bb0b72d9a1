//! Primal active-set method for convex (PSD) quadratic programs.
//!
//! A feasible vertex comes from the simplex phase one. Each iteration works in
//! the null space of the working set: positive-curvature directions take a
//! Newton step, zero-curvature descent directions are followed until a
//! constraint blocks (or reported unbounded).

use super::linalg::{householder_qr, symmetric_eigen};
use super::simplex::{StandardLp, Tableau};
use super::{MathProgram, Relation, SolveResult, SolveStatus, SolverOptions};
use crate::num::Real;

/// `a'x >= b`, or `a'x = b` when `eq`.
struct Row<T> {
    a: Vec<T>,
    b: T,
    eq: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn gather_rows<T: Real>(p: &MathProgram<T>, bounds: &[(T, T)]) -> Vec<Row<T>> {
    let n = p.num_vars();
    let mut rows = Vec::new();
    for c in &p.constraints {
        let mut a = vec![T::zero(); n];
        for &(j, v) in &c.terms {
            a[j] += v;
        }
        match c.relation {
            Relation::Ge => rows.push(Row { a, b: c.rhs, eq: false }),
            Relation::Le => rows.push(Row {
                a: a.iter().map(|v| -*v).collect(),
                b: -c.rhs,
                eq: false,
            }),
            Relation::Eq => rows.push(Row { a, b: c.rhs, eq: true }),
        }
    }
    for (j, &(lo, up)) in bounds.iter().enumerate() {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        if lo == up {
            rows.push(Row { a: e, b: lo, eq: true });
            continue;
        }
        if lo.is_finite() {
            rows.push(Row { a: e.clone(), b: lo, eq: false });
        }
        if up.is_finite() {
            e[j] = -T::one();
            rows.push(Row { a: e, b: -up, eq: false });
        }
    }
    rows
}

/// Gram–Schmidt membership test for linear independence of working normals.
struct Span<T> {
    basis: Vec<Vec<T>>,
}

impl<T: Real> Span<T> {
    fn try_add(&mut self, a: &[T]) -> bool {
        let mut r = a.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(&r, q);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * *qi;
                }
            }
        }
        let nr = norm(&r);
        if nr <= T::lit(1e-8).max(T::epsilon() * T::lit(100.0)) * norm(a).max(T::one()) {
            return false;
        }
        for v in &mut r {
            *v /= nr;
        }
        self.basis.push(r);
        true
    }
}

pub(crate) fn solve_qp<T: Real>(
    p: &MathProgram<T>,
    bounds: &[(T, T)],
    opts: &SolverOptions,
) -> SolveResult<T> {
    let n = p.num_vars();
    for &(lo, up) in bounds {
        if lo > up {
            return SolveResult::without_solution(SolveStatus::Infeasible, n);
        }
    }

    // phase one: any feasible vertex
    let mut lp = StandardLp::from_program(p, bounds);
    lp.c = vec![T::zero(); n];
    let start = Tableau::solve_cold(&lp, opts);
    let mut x = match (start.status, start.tableau) {
        (SolveStatus::Optimal, Some(tb)) => tb.structural_values(),
        (SolveStatus::IterationLimit, _) => {
            return SolveResult::without_solution(SolveStatus::IterationLimit, n)
        }
        _ => return SolveResult::without_solution(SolveStatus::Infeasible, n),
    };

    let h = p.min_form_hessian();
    let c = p.min_form_linear();
    let rows = gather_rows(p, bounds);
    let feas = T::feasibility_tol();
    let tiny = T::epsilon() * T::lit(1e4);

    let mut working: Vec<usize> = Vec::new();
    {
        let mut span = Span { basis: Vec::new() };
        for (i, r) in rows.iter().enumerate() {
            if r.eq && span.try_add(&r.a) {
                working.push(i);
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if working.len() >= n {
                break;
            }
            if !r.eq && (dot(&r.a, &x) - r.b).abs() <= feas * norm(&r.a).max(T::one()) && span.try_add(&r.a) {
                working.push(i);
            }
        }
    }

    let mut status = SolveStatus::IterationLimit;
    for _ in 0..opts.max_qp_iters {
        let k = working.len();
        let mut g = c.clone();
        for i in 0..n {
            for j in 0..n {
                g[i] += h[i * n + j] * x[j];
            }
        }
        let gnorm = norm(&g).max(T::one());

        // A_W' as n × k, columns are working normals
        let mut at = vec![T::zero(); n * k];
        for (col, &wi) in working.iter().enumerate() {
            for i in 0..n {
                at[i * k + col] = rows[wi].a[i];
            }
        }
        let (q, r) = householder_qr(&at, n, k);
        let nz = n - k;

        let mut step: Option<(Vec<T>, bool)> = None;
        if nz > 0 {
            // Z = Q[:, k..]
            let z = |i: usize, c: usize| q[i * n + k + c];
            let mut hz = vec![T::zero(); n * nz];
            for i in 0..n {
                for c2 in 0..nz {
                    let mut s = T::zero();
                    for l in 0..n {
                        s += h[i * n + l] * z(l, c2);
                    }
                    hz[i * nz + c2] = s;
                }
            }
            let mut hr = vec![T::zero(); nz * nz];
            for a in 0..nz {
                for b in 0..nz {
                    let mut s = T::zero();
                    for i in 0..n {
                        s += z(i, a) * hz[i * nz + b];
                    }
                    hr[a * nz + b] = s;
                }
            }
            for a in 0..nz {
                for b in a + 1..nz {
                    let avg = (hr[a * nz + b] + hr[b * nz + a]) * T::lit(0.5);
                    hr[a * nz + b] = avg;
                    hr[b * nz + a] = avg;
                }
            }
            let gr: Vec<T> = (0..nz)
                .map(|a| (0..n).map(|i| z(i, a) * g[i]).sum())
                .collect();
            let (vals, vecs) = symmetric_eigen(&hr, nz);
            let smax = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let tau = T::lit(1e-9).max(T::epsilon() * T::lit(1e3)) * smax.max(T::one());
            let mut u = vec![T::zero(); nz];
            let mut w = vec![T::zero(); nz];
            for e in 0..nz {
                let v: Vec<T> = (0..nz).map(|a| vecs[a * nz + e]).collect();
                let proj = dot(&v, &gr);
                if vals[e] > tau {
                    for a in 0..nz {
                        u[a] -= proj / vals[e] * v[a];
                    }
                } else {
                    for a in 0..nz {
                        w[a] += proj * v[a];
                    }
                }
            }
            let lift = |coeffs: &[T]| -> Vec<T> {
                (0..n)
                    .map(|i| (0..nz).map(|a| z(i, a) * coeffs[a]).sum())
                    .collect()
            };
            if norm(&w) > T::optimality_tol().max(T::epsilon() * T::lit(1e3)) * gnorm {
                let dir: Vec<T> = lift(&w).into_iter().map(|v| -v).collect();
                step = Some((dir, true));
            } else {
                let dir = lift(&u);
                if norm(&dir) > feas * T::lit(1e-2) * norm(&x).max(T::one()) {
                    step = Some((dir, false));
                }
            }
        }

        match step {
            None => {
                // multipliers: R mu = Y'g
                let yg: Vec<T> = (0..k)
                    .map(|col| (0..n).map(|i| q[i * n + col] * g[i]).sum())
                    .collect();
                let mut mu = vec![T::zero(); k];
                for row in (0..k).rev() {
                    let mut s = yg[row];
                    for j in row + 1..k {
                        s -= r[row * k + j] * mu[j];
                    }
                    let d = r[row * k + row];
                    mu[row] = if d.abs() > T::min_positive_value() { s / d } else { T::zero() };
                }
                let mut drop: Option<(usize, T)> = None;
                let thresh = -T::optimality_tol().max(T::epsilon() * T::lit(1e3)) * gnorm;
                for (pos, &wi) in working.iter().enumerate() {
                    if rows[wi].eq {
                        continue;
                    }
                    if mu[pos] < thresh && drop.is_none_or(|(_, m)| mu[pos] < m) {
                        drop = Some((pos, mu[pos]));
                    }
                }
                match drop {
                    Some((pos, _)) => {
                        working.remove(pos);
                    }
                    None => {
                        status = SolveStatus::Optimal;
                        break;
                    }
                }
            }
            Some((dir, is_ray)) => {
                let mut alpha = if is_ray { T::infinity() } else { T::one() };
                let mut block: Option<usize> = None;
                for (i, row) in rows.iter().enumerate() {
                    if row.eq || working.contains(&i) {
                        continue;
                    }
                    let s = dot(&row.a, &dir);
                    if s < -tiny * norm(&row.a).max(T::one()) {
                        let ratio = ((dot(&row.a, &x) - row.b) / (-s)).max(T::zero());
                        if ratio < alpha {
                            alpha = ratio;
                            block = Some(i);
                        }
                    }
                }
                if !alpha.is_finite() {
                    status = SolveStatus::Unbounded;
                    break;
                }
                for (xi, di) in x.iter_mut().zip(&dir) {
                    *xi += alpha * *di;
                }
                if let Some(b) = block {
                    working.push(b);
                }
            }
        }
    }

    match status {
        SolveStatus::Optimal | SolveStatus::IterationLimit => {
            // snap onto bounds to remove round-off drift
            for (xi, &(lo, up)) in x.iter_mut().zip(bounds) {
                *xi = xi.max(lo).min(up);
            }
            SolveResult {
                status,
                objective: p.objective_value(&x),
                values: x,
                nodes: 0,
            }
        }
        _ => SolveResult::without_solution(status, n),
    }
}
