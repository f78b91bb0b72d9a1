//! CPLEX LP text export, for inspecting a model in an external solver.

use std::fmt::Write;

use super::{MathProgram, Sense, VarKind};
use crate::num::Real;

fn sanitize(name: &str, idx: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("v{idx}_{cleaned}")
    } else {
        cleaned
    }
}

fn signed<T: Real>(out: &mut String, first: &mut bool, coef: T, name: &str) {
    let c = coef.as_f64();
    if *first {
        let _ = write!(out, " {c} {name}");
    } else if c < 0.0 {
        let _ = write!(out, " - {} {name}", -c);
    } else {
        let _ = write!(out, " + {c} {name}");
    }
    *first = false;
}

/// Renders `p` in CPLEX LP format.
pub fn write_lp<T: Real>(p: &MathProgram<T>) -> String {
    let names: Vec<String> = p
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| sanitize(&v.name, i))
        .collect();
    let mut out = String::new();
    out.push_str(match p.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    let mut first = true;
    for (j, c) in p.objective.iter().enumerate() {
        if *c != T::zero() {
            signed(&mut out, &mut first, *c, &names[j]);
        }
    }
    if p.objective_offset != T::zero() {
        signed(&mut out, &mut first, p.objective_offset, "");
    }
    if p.has_quadratic() {
        // LP format expects [ x'Qx ] / 2 with off-diagonal terms written once
        out.push_str(if first { " [" } else { " + [" });
        let mut qfirst = true;
        for q in &p.quadratic {
            if q.coef == T::zero() {
                continue;
            }
            let term = if q.i == q.j {
                format!("{} ^ 2", names[q.i])
            } else {
                format!("{} * {}", names[q.i], names[q.j])
            };
            let coef = if q.i == q.j { q.coef } else { q.coef + q.coef };
            signed(&mut out, &mut qfirst, coef, &term);
        }
        out.push_str(" ] / 2");
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (r, c) in p.constraints.iter().enumerate() {
        let _ = write!(out, " {}:", sanitize(&c.name, r));
        let mut f = true;
        for &(j, a) in &c.terms {
            signed(&mut out, &mut f, a, &names[j]);
        }
        if f {
            out.push_str(" 0");
        }
        let _ = writeln!(out, " {} {}", c.relation, c.rhs.as_f64());
    }
    out.push_str("Bounds\n");
    for (j, v) in p.variables.iter().enumerate() {
        if v.kind == VarKind::Binary && v.lower == T::zero() && v.upper == T::one() {
            continue;
        }
        let lo = v.lower.as_f64();
        let up = v.upper.as_f64();
        let lo_s = if lo.is_infinite() { "-inf".to_string() } else { lo.to_string() };
        let up_s = if up.is_infinite() { "+inf".to_string() } else { up.to_string() };
        let _ = writeln!(out, " {lo_s} <= {} <= {up_s}", names[j]);
    }
    let bins: Vec<&str> = p
        .variables
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binary\n");
        for b in bins {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Relation;

    #[test]
    fn renders_sections() {
        let mut p = MathProgram::<f64>::new(Sense::Minimize);
        let x = p.continuous("x", 0.0, 4.0);
        let d = p.binary("d");
        p.add_objective(x, -1.0);
        p.add_quadratic(x, x, 0.5);
        p.add_constraint("gate", vec![(x, 1.0), (d, -4.0)], Relation::Le, 0.0);
        let s = write_lp(&p);
        assert!(s.starts_with("Minimize\n obj: -1 x + [ 1 x ^ 2 ] / 2\n"), "{s}");
        assert!(s.contains(" gate: 1 x - 4 d <= 0\n"));
        assert!(s.contains(" 0 <= x <= 4\n"));
        assert!(s.contains("Binary\n d\nEnd\n"));
    }
}
