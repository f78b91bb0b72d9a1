//! Brute-force reference solvers shared by the integration tests.
//!
//! Nothing here calls the crate's solver: LPs are solved by enumerating the
//! vertices of small polytopes, MILPs by enumerating every binary assignment.
#![allow(dead_code)]

use rand::Rng;
use tecoord::solver::{MathProgram, Relation, Sense, VarKind};
use tecoord::ProsumerSpec;

pub const FEAS_TOL: f64 = 1e-7;

/// Dense `a x = b` by Gaussian elimination; `None` when (nearly) singular.
pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Half-space `a'x <= b`.
pub type Half = (Vec<f64>, f64);

pub fn feasible(h: &[Half], x: &[f64]) -> bool {
    h.iter().all(|(a, b)| {
        let lhs: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
        lhs <= b + FEAS_TOL
    })
}

/// Minimum of `c'x` over a bounded polytope in `n` dimensions, by vertex
/// enumeration.
pub fn min_over_vertices(n: usize, h: &[Half], c: &[f64]) -> Option<f64> {
    if n == 0 {
        return h.iter().all(|(_, b)| *b >= -FEAS_TOL).then_some(0.0);
    }
    let mut best: Option<f64> = None;
    for set in combinations(h.len(), n) {
        let a = set.iter().map(|&i| h[i].0.clone()).collect();
        let b = set.iter().map(|&i| h[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(h, &x) {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    best
}

/// Every row of `p` as half-spaces (bounds included); equalities become two
/// rows. Variables listed in `fixed` are pinned to the given value.
pub fn halfspaces(p: &MathProgram<f64>, fixed: &[(usize, f64)]) -> Vec<Half> {
    let n = p.num_vars();
    let mut out = Vec::new();
    for c in &p.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.terms {
            a[j] += v;
        }
        match c.relation {
            Relation::Le => out.push((a, c.rhs)),
            Relation::Ge => out.push((a.iter().map(|v| -v).collect(), -c.rhs)),
            Relation::Eq => {
                out.push((a.clone(), c.rhs));
                out.push((a.iter().map(|v| -v).collect(), -c.rhs));
            }
        }
    }
    for (j, v) in p.variables.iter().enumerate() {
        let (lo, up) = fixed
            .iter()
            .find(|f| f.0 == j)
            .map(|f| (f.1, f.1))
            .unwrap_or((v.lower, v.upper));
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        out.push((e.clone(), up));
        e[j] = -1.0;
        out.push((e, -lo));
    }
    out
}

/// Best objective of a linear program with box-bounded variables, in the
/// program's own sense.
pub fn vertex_oracle(p: &MathProgram<f64>, fixed: &[(usize, f64)]) -> Option<f64> {
    let n = p.num_vars();
    let h = halfspaces(p, fixed);
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let c: Vec<f64> = p.objective.iter().map(|v| sign * v).collect();
    min_over_vertices(n, &h, &c).map(|v| sign * v + p.objective_offset)
}

/// Best objective of a linear MILP: every binary assignment, then vertex
/// enumeration over the continuous variables that remain.
pub fn brute_force_milp(p: &MathProgram<f64>) -> Option<f64> {
    let bins: Vec<usize> = (0..p.num_vars())
        .filter(|&j| p.variables[j].kind == VarKind::Binary)
        .collect();
    let conts: Vec<usize> = (0..p.num_vars())
        .filter(|&j| p.variables[j].kind != VarKind::Binary)
        .collect();
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let full = halfspaces(p, &[]);
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut x = vec![0.0; p.num_vars()];
        for (k, &j) in bins.iter().enumerate() {
            x[j] = (mask >> k & 1) as f64;
        }
        // project onto the continuous variables
        let h: Vec<Half> = full
            .iter()
            .map(|(a, b)| {
                let shift: f64 = bins.iter().map(|&j| a[j] * x[j]).sum();
                (conts.iter().map(|&j| a[j]).collect(), b - shift)
            })
            .filter(|(a, b): &Half| a.iter().any(|v| *v != 0.0) || *b < 0.0)
            .collect();
        let fixed_part: f64 = bins.iter().map(|&j| p.objective[j] * x[j]).sum();
        let c: Vec<f64> = conts.iter().map(|&j| sign * p.objective[j]).collect();
        if let Some(v) = min_over_vertices(conts.len(), &h, &c) {
            let v = v + sign * fixed_part;
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best.map(|v| sign * v + p.objective_offset)
}

fn half_step(rng: &mut impl Rng, lo: i32, hi: i32) -> f64 {
    rng.gen_range(lo..=hi) as f64 * 0.5
}

/// Random linear MILP with up to `max_bins` binaries and at most two bounded
/// continuous variables.
pub fn random_milp(rng: &mut impl Rng, max_bins: usize) -> MathProgram<f64> {
    let sense = if rng.gen_bool(0.5) {
        Sense::Minimize
    } else {
        Sense::Maximize
    };
    let mut p = MathProgram::new(sense);
    let nb = rng.gen_range(1..=max_bins);
    let nc = rng.gen_range(0..=2);
    let mut vars = Vec::new();
    for j in 0..nc {
        let lo = half_step(rng, -4, 0);
        let up = lo + half_step(rng, 1, 8);
        vars.push(p.continuous(format!("x{j}"), lo, up));
    }
    for j in 0..nb {
        vars.push(p.binary(format!("b{j}")));
    }
    for v in &vars {
        p.add_objective(*v, half_step(rng, -8, 8));
    }
    p.objective_offset = half_step(rng, -2, 2);
    for i in 0..rng.gen_range(1..=4) {
        let mut terms = Vec::new();
        for v in &vars {
            if rng.gen_bool(0.7) {
                terms.push((*v, half_step(rng, -6, 6)));
            }
        }
        let rel = match rng.gen_range(0..10) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        let rhs = half_step(rng, -4, 8);
        p.add_constraint(format!("r{i}"), terms, rel, rhs);
    }
    p
}

/// One prosumer scheduling instance.
#[derive(Debug, Clone)]
pub struct HemsInstance {
    pub spec: ProsumerSpec,
    pub buy: Vec<f64>,
    pub sell: Vec<f64>,
    pub soc_start: f64,
}

/// Battery types the random instances are drawn around:
/// (kWh, soc min, soc max, kW).
pub const BATTERY_TYPES: [(f64, f64, f64, f64); 5] = [
    (13.1, 0.20, 0.90, 2.86),
    (25.4, 0.20, 0.85, 5.57),
    (21.8, 0.20, 0.85, 4.77),
    (12.3, 0.20, 0.90, 2.70),
    (12.8, 0.20, 0.85, 2.81),
];

/// Random instance over `hours` hours starting at hour 0. Some instances use
/// a downsized battery, some none at all, and prices may include a negative
/// adder.
pub fn random_hems_instance(rng: &mut impl Rng, hours: usize) -> HemsInstance {
    let (mut e, soc_min, soc_max, mut pmax) = BATTERY_TYPES[rng.gen_range(0..5)];
    match rng.gen_range(0..10) {
        0 => e = 0.0,
        1 | 2 => {
            let f = rng.gen_range(0.2..0.6);
            e *= f;
            pmax *= f;
        }
        _ => {}
    }
    let pv: Vec<f64> = (0..hours)
        .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..14.0) })
        .collect();
    let load: Vec<f64> = (0..hours).map(|_| rng.gen_range(0.3..3.0)).collect();
    let adder: Vec<f64> = (0..hours)
        .map(|_| if rng.gen_bool(0.3) { rng.gen_range(-0.15..0.15) } else { 0.0 })
        .collect();
    let buy: Vec<f64> = (0..hours)
        .map(|t| rng.gen_range(0.08..0.40) + adder[t])
        .collect();
    let sell: Vec<f64> = (0..hours)
        .map(|t| rng.gen_range(0.02..0.09) + adder[t])
        .collect();
    let spec = ProsumerSpec {
        id: "p".into(),
        bus_id: 1,
        aggregator_id: 1,
        capacity_kwh: e,
        soc_min_frac: soc_min,
        soc_max_frac: soc_max,
        soc_initial_frac: 0.5,
        p_charge_max_kw: pmax,
        p_discharge_max_kw: pmax,
        eta_charge: 0.9,
        eta_discharge: 0.95,
        degradation_cost_eur_per_kwh: rng.gen_range(0.0..0.12),
        pv_forecast_kw: pv,
        load_forecast_kw: load,
    };
    HemsInstance {
        soc_start: rng.gen_range(soc_min..=soc_max),
        spec,
        buy,
        sell,
    }
}

/// Physical operating modes of one hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SellCharge,
    SellDischarge,
    BuyCharge,
    BuyDischarge,
    BuyIdle,
}

pub const MODES: [Mode; 5] = [
    Mode::SellCharge,
    Mode::SellDischarge,
    Mode::BuyCharge,
    Mode::BuyDischarge,
    Mode::BuyIdle,
];

impl Mode {
    fn selling(self) -> bool {
        matches!(self, Mode::SellCharge | Mode::SellDischarge)
    }

    /// +1 charging, -1 discharging, 0 idle.
    fn direction(self) -> f64 {
        match self {
            Mode::SellCharge | Mode::BuyCharge => 1.0,
            Mode::SellDischarge | Mode::BuyDischarge => -1.0,
            Mode::BuyIdle => 0.0,
        }
    }
}

/// Minimum cost of `inst` with the modes fixed, or `None` when infeasible.
///
/// One variable per hour: the battery flow `f_t >= 0` in the direction of the
/// mode. Grid exchange `g_t = pv - load - f_t` (charging) or `pv - load + f_t`
/// (discharging) must be `>= 0` when selling and `<= 0` when buying.
pub fn mode_lp(inst: &HemsInstance, modes: &[Mode]) -> Option<f64> {
    let s = &inst.spec;
    let n = modes.len();
    let battery = s.capacity_kwh > 0.0;
    let pmax = |m: Mode| -> f64 {
        if !battery {
            return 0.0;
        }
        match m.direction() {
            d if d > 0.0 => s.p_charge_max_kw,
            d if d < 0.0 => s.p_discharge_max_kw,
            _ => 0.0,
        }
    };
    let wear = s.degradation_cost_eur_per_kwh / s.eta_discharge;
    let mut h: Vec<Half> = Vec::new();
    let mut c = vec![0.0; n];
    let mut constant = 0.0;
    let unit = |t: usize, v: f64| {
        let mut a = vec![0.0; n];
        a[t] = v;
        a
    };
    for (t, &m) in modes.iter().enumerate() {
        let surplus = s.pv_forecast_kw[t] - s.load_forecast_kw[t];
        let d = m.direction();
        h.push((unit(t, 1.0), pmax(m)));
        h.push((unit(t, -1.0), 0.0));
        // g = surplus - d f
        if m.selling() {
            h.push((unit(t, d), surplus));
        } else {
            h.push((unit(t, -d), -surplus));
        }
        let price = if m.selling() { inst.sell[t] } else { inst.buy[t] };
        // cost = -price g + wear f (discharge)
        constant -= price * surplus;
        c[t] += price * d;
        if d < 0.0 {
            c[t] += wear;
        }
    }
    if battery {
        // soc_t = soc_0 + sum_{k<=t} gain_k f_k, kept within bounds
        let gain: Vec<f64> = modes
            .iter()
            .map(|m| match m.direction() {
                d if d > 0.0 => s.eta_charge / s.capacity_kwh,
                d if d < 0.0 => -1.0 / (s.capacity_kwh * s.eta_discharge),
                _ => 0.0,
            })
            .collect();
        for t in 0..n {
            let mut a = vec![0.0; n];
            a[..=t].copy_from_slice(&gain[..=t]);
            h.push((a.clone(), s.soc_max_frac - inst.soc_start));
            h.push((a.iter().map(|v| -v).collect(), inst.soc_start - s.soc_min_frac));
        }
    }
    min_over_vertices(n, &h, &c).map(|v| v + constant)
}

/// Minimum cost over every combination of hourly modes.
pub fn hems_oracle(inst: &HemsInstance) -> Option<f64> {
    let n = inst.buy.len();
    let mut best: Option<f64> = None;
    let mut modes = vec![Mode::SellCharge; n];
    for code in 0..5usize.pow(n as u32) {
        let mut k = code;
        for m in modes.iter_mut() {
            *m = MODES[k % 5];
            k /= 5;
        }
        if let Some(v) = mode_lp(inst, &modes) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

/// `|got - want| <= rel |want|`, with a 1e-9 floor for objectives near zero.
pub fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs() + 1e-9
}
