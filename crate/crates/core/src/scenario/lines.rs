//! Voltage sensitivity of a radial feeder from its line resistances.

use std::collections::HashMap;

use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Line<T> {
    pub from_bus: u32,
    pub to_bus: u32,
    pub resistance_pu: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("line {from}->{to}: resistance must be positive and finite")]
    BadResistance { from: u32, to: u32 },
    #[error("bus {bus} is fed by more than one line")]
    MultipleParents { bus: u32 },
    #[error("bus {bus} is not connected to the root {root}")]
    Unreachable { bus: u32, root: u32 },
    #[error("line {from}->{to} references a node that is neither the root nor a bus")]
    UnknownNode { from: u32, to: u32 },
    #[error("line {from}->{to} feeds the root")]
    FeedsRoot { from: u32, to: u32 },
    #[error("base voltage must be positive and finite")]
    BadBase,
}

/// Builds the sensitivity matrix of a radial tree: entry `(j, m)` is the
/// resistance shared by the root-to-`j` and root-to-`m` paths, divided by
/// `base_voltage_pu`. Rows and columns follow `bus_ids`.
pub fn sensitivity_from_lines<T: Real>(
    root: u32,
    bus_ids: &[u32],
    lines: &[Line<T>],
    base_voltage_pu: T,
) -> Result<Vec<Vec<T>>, NetworkError> {
    if !(base_voltage_pu > T::zero() && base_voltage_pu.is_finite()) {
        return Err(NetworkError::BadBase);
    }
    let index: HashMap<u32, usize> = bus_ids.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let n = bus_ids.len();
    // parent[i] = (parent node, resistance); parent node None means root
    let mut parent: Vec<Option<(Option<usize>, T)>> = vec![None; n];
    for l in lines {
        if !(l.resistance_pu > T::zero() && l.resistance_pu.is_finite()) {
            return Err(NetworkError::BadResistance {
                from: l.from_bus,
                to: l.to_bus,
            });
        }
        if l.to_bus == root {
            return Err(NetworkError::FeedsRoot {
                from: l.from_bus,
                to: l.to_bus,
            });
        }
        let Some(&child) = index.get(&l.to_bus) else {
            return Err(NetworkError::UnknownNode {
                from: l.from_bus,
                to: l.to_bus,
            });
        };
        let up = if l.from_bus == root {
            None
        } else {
            match index.get(&l.from_bus) {
                Some(&p) => Some(p),
                None => {
                    return Err(NetworkError::UnknownNode {
                        from: l.from_bus,
                        to: l.to_bus,
                    })
                }
            }
        };
        if parent[child].is_some() {
            return Err(NetworkError::MultipleParents { bus: l.to_bus });
        }
        parent[child] = Some((up, l.resistance_pu));
    }

    // root paths as (bus index, cumulative resistance) lists, cycle-safe
    let mut paths: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
    for start in 0..n {
        let mut chain = Vec::new();
        let mut cur = start;
        loop {
            if chain.len() > n {
                return Err(NetworkError::Unreachable {
                    bus: bus_ids[start],
                    root,
                });
            }
            match parent[cur] {
                None => {
                    return Err(NetworkError::Unreachable {
                        bus: bus_ids[start],
                        root,
                    })
                }
                Some((up, r)) => {
                    chain.push((cur, r));
                    match up {
                        None => break,
                        Some(p) => cur = p,
                    }
                }
            }
        }
        chain.reverse();
        paths.push(chain);
    }

    let mut s = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        for m in j..n {
            let mut shared = T::zero();
            for (a, b) in paths[j].iter().zip(&paths[m]) {
                if a.0 != b.0 {
                    break;
                }
                shared += a.1;
            }
            let v = shared / base_voltage_pu;
            s[j][m] = v;
            s[m][j] = v;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(from: u32, to: u32, r: f64) -> Line<f64> {
        Line {
            from_bus: from,
            to_bus: to,
            resistance_pu: r,
        }
    }

    #[test]
    fn single_line() {
        let s = sensitivity_from_lines(0, &[1], &[line(0, 1, 0.01)], 1.0).unwrap();
        assert_eq!(s, vec![vec![0.01]]);
    }

    #[test]
    fn two_buses_on_one_feeder() {
        let s = sensitivity_from_lines(0, &[1, 2], &[line(0, 1, 0.01), line(1, 2, 0.02)], 1.0)
            .unwrap();
        assert!((s[1][1] - 0.03).abs() < 1e-15);
        assert_eq!(s[0][1], 0.01);
        assert_eq!(s[1][0], 0.01);
        assert_eq!(s[0][0], 0.01);
    }

    #[test]
    fn separate_feeders_do_not_couple() {
        let s = sensitivity_from_lines(0, &[1, 2], &[line(0, 1, 0.01), line(0, 2, 0.02)], 2.0)
            .unwrap();
        assert_eq!(s, vec![vec![0.005, 0.0], vec![0.0, 0.01]]);
    }

    #[test]
    fn rejects_bad_topologies() {
        assert_eq!(
            sensitivity_from_lines(0, &[1], &[line(0, 1, 0.0)], 1.0),
            Err(NetworkError::BadResistance { from: 0, to: 1 })
        );
        assert!(matches!(
            sensitivity_from_lines(0, &[1, 2], &[line(0, 1, 0.1), line(0, 2, 0.1), line(1, 2, 0.1)], 1.0),
            Err(NetworkError::MultipleParents { bus: 2 })
        ));
        assert!(matches!(
            sensitivity_from_lines(0, &[1, 2], &[line(1, 2, 0.1), line(2, 1, 0.1)], 1.0),
            Err(NetworkError::Unreachable { .. })
        ));
        assert!(matches!(
            sensitivity_from_lines(0, &[1, 2], &[line(0, 1, 0.1)], 1.0),
            Err(NetworkError::Unreachable { bus: 2, .. })
        ));
    }
}
