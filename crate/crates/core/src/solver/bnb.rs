//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use super::simplex::{StandardLp, Tableau};
use super::{
    solve_relaxation, MathProgram, ProgramError, Sense, SolveResult, SolveStatus, SolverOptions,
    VarKind,
};
use crate::num::Real;

struct Node<T> {
    bound: T,
    id: usize,
    fixings: Rc<Fixings>,
    warm: Option<Rc<Tableau<T>>>,
}

/// Persistent list of (variable, value) fixings from the root.
struct Fixings {
    var: usize,
    value: bool,
    parent: Option<Rc<Fixings>>,
}

impl<T: Real> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Node<T> {}
impl<T: Real> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Node<T> {
    // max-heap: smaller bound first, then smaller id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .as_f64()
            .total_cmp(&self.bound.as_f64())
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn node_bounds<T: Real>(root: &[(T, T)], fx: &Option<Rc<Fixings>>) -> Vec<(T, T)> {
    let mut b = root.to_vec();
    let mut cur = fx.clone();
    while let Some(f) = cur {
        let v = if f.value { T::one() } else { T::zero() };
        b[f.var] = (v, v);
        cur = f.parent.clone();
    }
    b
}

/// Solves `p` with its binary variables restricted to {0, 1}.
///
/// Branches on the lowest-index fractional binary, exploring the 0-child
/// first; open nodes are ordered by their parent's relaxation bound and then
/// by creation order, so the search is deterministic. When the node budget is
/// exhausted the best incumbent (if any) is returned with
/// [`SolveStatus::IterationLimit`].
pub fn solve_mixed<T: Real>(
    p: &MathProgram<T>,
    opts: &SolverOptions,
) -> Result<SolveResult<T>, ProgramError> {
    p.validate()?;
    let n = p.num_vars();
    let root_bounds = p.bounds();
    if p.num_binaries() == 0 {
        return Ok(solve_relaxation(p, &root_bounds, opts));
    }
    let binaries: Vec<usize> = (0..n)
        .filter(|&j| p.variables[j].kind == VarKind::Binary)
        .collect();
    let sign = match p.sense {
        Sense::Minimize => T::one(),
        Sense::Maximize => -T::one(),
    };
    let linear = !p.has_quadratic();
    let itol = T::integrality_tol();
    let gap = T::lit(opts.relative_gap);
    let abs_gap = T::optimality_tol();

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    heap.push(Node {
        bound: T::neg_infinity(),
        id: next_id,
        fixings: Rc::new(Fixings {
            var: usize::MAX,
            value: false,
            parent: None,
        }),
        warm: None,
    });
    next_id += 1;

    let mut incumbent: Option<(T, Vec<T>)> = None;
    let mut nodes = 0usize;
    let mut warm_open = 0usize;
    let mut limit_hit = false;
    let mut relaxation_unbounded = false;

    let cutoff = |inc: &Option<(T, Vec<T>)>| -> T {
        match inc {
            Some((v, _)) => *v - (gap * v.abs()).max(abs_gap),
            None => T::infinity(),
        }
    };

    while let Some(node) = heap.pop() {
        if node.warm.is_some() {
            warm_open -= 1;
        }
        if node.bound >= cutoff(&incumbent) {
            continue;
        }
        if nodes >= opts.max_nodes {
            limit_hit = true;
            break;
        }
        nodes += 1;

        let fx = if node.id == 0 { None } else { Some(node.fixings.clone()) };
        let bounds = node_bounds(&root_bounds, &fx);

        // evaluate relaxation
        let mut tableau: Option<Tableau<T>> = None;
        let (status, x) = if linear {
            let mut outcome = None;
            if let (Some(w), Some(f)) = (&node.warm, &fx) {
                let mut tb = (**w).clone();
                let v = if f.value { T::one() } else { T::zero() };
                tb.set_structural_bounds(f.var, v, v);
                let out = tb.reoptimize(opts);
                if out.status == SolveStatus::Infeasible {
                    outcome = Some(out);
                } else if let (SolveStatus::Optimal, Some(mut tb)) = (out.status, out.tableau) {
                    let x = tb.polished_values(p);
                    if within_bounds(&x, &bounds) && p.max_violation(&x) <= T::feasibility_tol() {
                        outcome = Some(super::simplex::LpOutcome {
                            status: SolveStatus::Optimal,
                            tableau: Some(tb),
                        });
                    }
                }
            }
            let out = match outcome {
                Some(o) => o,
                None => Tableau::solve_cold(&StandardLp::from_program(p, &bounds), opts),
            };
            match (out.status, out.tableau) {
                (SolveStatus::Optimal, Some(mut tb)) => {
                    let x = tb.polished_values(p);
                    tableau = Some(tb);
                    (SolveStatus::Optimal, x)
                }
                (s, _) => (s, Vec::new()),
            }
        } else {
            let r = solve_relaxation(p, &bounds, opts);
            (r.status, r.values)
        };

        match status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                relaxation_unbounded = true;
                break;
            }
            SolveStatus::IterationLimit => {
                limit_hit = true;
                continue;
            }
        }

        let obj = sign * p.objective_value(&x);
        if obj >= cutoff(&incumbent) {
            continue;
        }
        let frac = binaries.iter().copied().find(|&j| {
            let v = x[j];
            v.min(T::one() - v).abs() > itol && v > itol && v < T::one() - itol
        });
        match frac {
            None => {
                let mut xi = x;
                for &j in &binaries {
                    xi[j] = if xi[j] > T::lit(0.5) { T::one() } else { T::zero() };
                }
                let val = sign * p.objective_value(&xi);
                if incumbent.as_ref().is_none_or(|(best, _)| val < *best) {
                    incumbent = Some((val, xi));
                }
            }
            Some(j) => {
                let shared = tableau.map(Rc::new);
                for value in [false, true] {
                    let warm = if shared.is_some() && warm_open < opts.warm_start_nodes {
                        warm_open += 1;
                        shared.clone()
                    } else {
                        None
                    };
                    heap.push(Node {
                        bound: obj,
                        id: next_id,
                        fixings: Rc::new(Fixings {
                            var: j,
                            value,
                            parent: fx.clone(),
                        }),
                        warm,
                    });
                    next_id += 1;
                }
            }
        }
    }

    if relaxation_unbounded {
        return Ok(SolveResult {
            status: SolveStatus::Unbounded,
            values: vec![T::zero(); n],
            objective: T::nan(),
            nodes,
        });
    }
    Ok(match incumbent {
        Some((_, x)) => SolveResult {
            status: if limit_hit {
                SolveStatus::IterationLimit
            } else {
                SolveStatus::Optimal
            },
            objective: p.objective_value(&x),
            values: x,
            nodes,
        },
        None => SolveResult {
            status: if limit_hit {
                SolveStatus::IterationLimit
            } else {
                SolveStatus::Infeasible
            },
            values: vec![T::zero(); n],
            objective: T::nan(),
            nodes,
        },
    })
}

fn within_bounds<T: Real>(x: &[T], b: &[(T, T)]) -> bool {
    let tol = T::feasibility_tol();
    x.iter().zip(b).all(|(v, (lo, up))| *v >= *lo - tol && *v <= *up + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Relation;

    #[test]
    fn knapsack() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5; best pick is {a, b} worth 9
        let mut p = MathProgram::<f64>::new(Sense::Maximize);
        let a = p.binary("a");
        let b = p.binary("b");
        let c = p.binary("c");
        p.add_objective(a, 5.0);
        p.add_objective(b, 4.0);
        p.add_objective(c, 3.0);
        p.add_constraint("w", vec![(a, 2.0), (b, 3.0), (c, 1.0)], Relation::Le, 5.0);
        let r = solve_mixed(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 9.0).abs() < 1e-9);
        assert_eq!(r.values, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn infeasible_binary_program() {
        let mut p = MathProgram::<f64>::new(Sense::Minimize);
        let a = p.binary("a");
        let b = p.binary("b");
        p.add_constraint("odd", vec![(a, 2.0), (b, 2.0)], Relation::Eq, 1.0);
        let r = solve_mixed(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn mixed_quadratic() {
        // min (x - 0.3)^2 + 0.05 d, x <= d  → d = 1, x = 0.3 costs 0.05; d = 0, x = 0 costs 0.09
        let mut p = MathProgram::<f64>::new(Sense::Minimize);
        let x = p.continuous("x", 0.0, 1.0);
        let d = p.binary("d");
        p.add_quadratic(x, x, 1.0);
        p.add_objective(x, -0.6);
        p.objective_offset = 0.09;
        p.add_objective(d, 0.05);
        p.add_constraint("gate", vec![(x, 1.0), (d, -1.0)], Relation::Le, 0.0);
        let r = solve_mixed(&p, &SolverOptions::default()).unwrap();
        assert!((r.objective - 0.05).abs() < 1e-9, "{r:?}");
        assert_eq!(r.values[1], 1.0);
    }

    #[test]
    fn node_limit_returns_feasible_point() {
        let mut p = MathProgram::<f64>::new(Sense::Maximize);
        let vars: Vec<_> = (0..8).map(|i| p.binary(format!("b{i}"))).collect();
        for (i, v) in vars.iter().enumerate() {
            p.add_objective(*v, 1.0 + i as f64 * 0.1);
        }
        p.add_constraint(
            "cap",
            vars.iter().map(|v| (*v, 2.0)).collect(),
            Relation::Le,
            7.0,
        );
        let opts = SolverOptions {
            max_nodes: 3,
            ..Default::default()
        };
        let r = solve_mixed(&p, &opts).unwrap();
        assert!(matches!(r.status, SolveStatus::IterationLimit | SolveStatus::Optimal));
        assert!(p.max_violation(&r.values) <= 1e-9);
    }
}
