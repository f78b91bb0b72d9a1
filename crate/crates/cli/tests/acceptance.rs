//! Acceptance suite. Runs every criterion in order and prints one PASS/FAIL
//! line each; exits non-zero if any fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tecoord::coordinator::{
    normalized_difference, price_adder, run_admm, AdmmProblem, AdmmSettings, TeStatus,
};
use tecoord::dso::{check_limits, voltage_profile, LimitTolerances, ViolationKind};
use tecoord::hems::{solve_schedule, soc_transition};
use tecoord::series::BusSeries;
use tecoord::solver::{solve_mixed, SolveStatus, SolverOptions};
use tecoord::{BusNetwork, HorizonResult, ProsumerSpec, Scenario};
use tecoord_cli::{run, Args, RunReport};

const CAP_KW: f64 = 220.0;

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

/// Runs the CLI pipeline on a bundled scenario into a fresh directory.
fn run_bundled(name: &str, dir: &Path) -> (RunReport, Duration) {
    let mut args = Args::new(scenario_path(name), dir);
    args.emit_plots = true;
    let t = Instant::now();
    let report = run(&args).unwrap_or_else(|e| panic!("{name}: {e}"));
    (report, t.elapsed())
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn prosumer_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst: f64 = 0.0;
    let n = 80;
    for k in 0..n {
        let inst = oracles::random_hems_instance(&mut rng, 1 + k % 3);
        let want = oracles::hems_oracle(&inst).ok_or(format!("instance {k} infeasible"))?;
        let got = solve_schedule(
            &inst.spec,
            0..inst.buy.len(),
            &inst.buy,
            &inst.sell,
            inst.soc_start,
            &SolverOptions::default(),
        )
        .map_err(|e| format!("instance {k}: {e}"))?;
        if !oracles::close(got.objective, want, 1e-6) {
            return Err(format!("instance {k}: milp {} oracle {want}", got.objective));
        }
        worst = worst.max((got.objective - want).abs() / want.abs().max(1e-9));
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        secs < 60.0,
        format!("{n} instances, max rel err {worst:.1e}, {secs:.2} s"),
    )
}

fn solver_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let (mut solved, mut infeasible, mut max_bins) = (0, 0, 0);
    for k in 0..150 {
        let p = oracles::random_milp(&mut rng, 12);
        max_bins = max_bins.max(p.num_binaries());
        let got = solve_mixed(&p, &SolverOptions::default()).map_err(|e| format!("program {k}: {e}"))?;
        match oracles::brute_force_milp(&p) {
            None if got.status == SolveStatus::Infeasible => infeasible += 1,
            None => return Err(format!("program {k}: solver {:?}, brute force infeasible", got.status)),
            Some(best) => {
                if got.status != SolveStatus::Optimal || !oracles::close(got.objective, best, 1e-6) {
                    return Err(format!(
                        "program {k}: solver {:?} {} brute force {best}",
                        got.status, got.objective
                    ));
                }
                solved += 1;
            }
        }
    }
    check(
        solved >= 100,
        format!("{solved} optimal + {infeasible} infeasible programs, up to {max_bins} binaries"),
    )
}

fn two_bus_toy() -> (BusNetwork, Vec<ProsumerSpec>) {
    let net = BusNetwork {
        bus_ids: vec![1, 2],
        base_voltage_pu: vec![1.0, 1.0],
        sensitivity: vec![vec![0.0; 2]; 2],
        transformer_capacity_kw: 8.0,
        v_min_pu: 0.9,
        v_max_pu: 1.1,
        lines: None,
    };
    let spec = |id: &str, bus| ProsumerSpec {
        id: id.into(),
        bus_id: bus,
        aggregator_id: 1,
        capacity_kwh: 10.0,
        soc_min_frac: 0.2,
        soc_max_frac: 0.9,
        soc_initial_frac: 0.5,
        p_charge_max_kw: 2.0,
        p_discharge_max_kw: 2.0,
        eta_charge: 0.95,
        eta_discharge: 0.95,
        degradation_cost_eur_per_kwh: 0.0,
        pv_forecast_kw: vec![0.0],
        load_forecast_kw: vec![0.0],
    };
    (net, vec![spec("a", 1), spec("b", 2)])
}

fn admm_mechanics() -> Outcome {
    let (net, specs) = two_bus_toy();
    let (rho, eps) = (0.8, 0.005);
    let base = BusSeries::from_rows(vec![vec![5.0, 5.0]]);
    let problem = AdmmProblem {
        specs: &specs,
        bus_of: &[0, 1],
        network: &net,
        up_price: &[0.02],
        down_price: &[0.03],
        start: 0,
    };
    let settings = AdmmSettings {
        rho,
        eps,
        dso_weight: 1.0,
        max_iters: 200,
        record: true,
    };
    let s = run_admm(&problem, &base, &settings, &SolverOptions::default()).map_err(|e| e.to_string())?;
    if !s.converged() {
        return Err(format!("no convergence in {} iterations", s.iterations));
    }
    for (k, r) in s.records.iter().enumerate() {
        let step = r
            .lambda_before
            .zip_map(&r.adjusted.zip_map(&r.p_dso, |a, d| a - d), |l, x| l + rho * x);
        if step != r.lambda_after {
            return Err(format!("dual step of iteration {} differs", k + 1));
        }
    }
    let binding = (s.p_dso.hour_total(0) - 8.0).abs() < 1e-6;
    let residual = s.primal_residual.max_abs();
    check(
        s.iterations <= 200 && residual <= eps / rho * 1.5 && binding && s.records.len() == s.iterations,
        format!(
            "{} iterations, residual {residual:.2e} (bound {:.2e}), exact dual step, limit binding: {binding}",
            s.iterations,
            eps / rho * 1.5
        ),
    )
}

/// Hour with the largest naive transformer overload, else the worst naive
/// voltage excursion.
fn worst_naive_hour(h: &HorizonResult, s: &Scenario) -> Option<usize> {
    let before = h.committed_before();
    let a = check_limits(&before, &s.network, &LimitTolerances { kw: 0.0, pu: 0.0 }).ok()?;
    let by = |kind| {
        a.violations
            .iter()
            .filter(|v| v.kind == kind)
            .max_by(|x, y| x.magnitude.total_cmp(&y.magnitude))
            .map(|v| v.hour)
    };
    by(ViolationKind::Congestion)
        .or_else(|| by(ViolationKind::Overvoltage))
        .or_else(|| by(ViolationKind::Undervoltage))
        .map(|k| h.committed[k].hour)
}

fn end_to_end_security(report: &RunReport, elapsed: Duration) -> Outcome {
    let (h, s) = (&report.horizon, &report.scenario);
    let before = h.committed_before();
    let naive_peak = (0..before.hours()).map(|t| before.hour_total(t).abs()).fold(0.0, f64::max);
    let vb = voltage_profile(&before, &s.network).map_err(|e| e.to_string())?;
    let excursion = vb.values().iter().any(|u| *u > s.network.v_max_pu || *u < s.network.v_min_pu);
    if naive_peak <= CAP_KW || !excursion {
        return Err(format!("scenario lacks a naive breach: peak {naive_peak:.2} kW, excursion {excursion}"));
    }
    let after = h.committed_after();
    let va = voltage_profile(&after, &s.network).map_err(|e| e.to_string())?;
    let (mut secure, mut peak, mut vmin, mut vmax) = (0, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for (k, c) in h.committed.iter().enumerate() {
        if !matches!(c.status, TeStatus::NoViolation | TeStatus::Converged) {
            continue;
        }
        secure += 1;
        peak = peak.max(after.hour_total(k).abs());
        for u in va.row(k) {
            vmin = vmin.min(*u);
            vmax = vmax.max(*u);
        }
    }
    let ok = secure > 0
        && peak <= CAP_KW + 1e-3
        && vmin >= s.network.v_min_pu - 1e-4
        && vmax <= s.network.v_max_pu + 1e-4
        && elapsed.as_secs() < 300;
    check(
        ok,
        format!(
            "naive peak {naive_peak:.2} kW; {secure}/{} secure hours, peak {peak:.2} kW, voltage [{vmin:.4}, {vmax:.4}] p.u., {:.1} s",
            h.committed.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn adder_sign_table() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let n = 10_000;
    let mut lambda = Vec::with_capacity(n);
    let mut nd = Vec::with_capacity(n);
    for k in 0..n {
        // cycle through the four sign quadrants, every tenth ND exactly zero
        let l = rng.gen_range(1e-6..3.0) * if k % 2 == 0 { 1.0 } else { -1.0 };
        let d = if k % 10 == 9 {
            0.0
        } else {
            rng.gen_range(1e-6..=1.0) * if (k / 2) % 2 == 0 { 1.0 } else { -1.0 }
        };
        lambda.push(l);
        nd.push(d);
    }
    let a = price_adder(&BusSeries::from_rows(vec![lambda.clone()]), &BusSeries::from_rows(vec![nd.clone()]))
        .map_err(|e| e.to_string())?;
    let mut quadrants = [0usize; 4];
    let mut zeros = 0;
    for k in 0..n {
        let v = a.get(0, k);
        if nd[k] == 0.0 {
            if v != 0.0 {
                return Err(format!("pair {k}: ND 0 gives adder {v}"));
            }
            zeros += 1;
            continue;
        }
        if sign(v) != sign(nd[k]) {
            return Err(format!("pair {k}: lambda {} ND {} adder {v}", lambda[k], nd[k]));
        }
        quadrants[(lambda[k] < 0.0) as usize * 2 + (nd[k] < 0.0) as usize] += 1;
    }
    check(
        quadrants.iter().all(|q| *q > 0),
        format!("{n} pairs, quadrants {quadrants:?}, {zeros} with ND = 0"),
    )
}

fn nd_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let n = 2_000;
    for k in 0..n {
        let (hours, buses) = (rng.gen_range(1..=8), rng.gen_range(1..=6));
        let base: BusSeries<f64> = BusSeries::from_fn(hours, buses, |_, _| rng.gen_range(-250.0..250.0));
        let mut other = base.clone();
        let changes = rng.gen_range(0..=3);
        for _ in 0..changes {
            let (t, j) = (rng.gen_range(0..hours), rng.gen_range(0..buses));
            other.set(t, j, base.get(t, j) + rng.gen_range(-50.0..50.0));
        }
        let nd = normalized_difference(&base, &other).map_err(|e| e.to_string())?;
        if base == other {
            if nd.values().iter().any(|v| *v != 0.0) {
                return Err(format!("pair {k}: identical schedules give nonzero ND"));
            }
        } else if nd.max_abs() != 1.0 {
            return Err(format!("pair {k}: max |ND| = {}", nd.max_abs()));
        }
        if nd.values().iter().any(|v| v.abs() > 1.0) {
            return Err(format!("pair {k}: |ND| above 1"));
        }
    }
    check(true, format!("{n} schedule pairs"))
}

fn small_battery_cos(report: &RunReport) -> Outcome {
    let (h, s) = (&report.horizon, &report.scenario);
    let hour = worst_naive_hour(h, s).ok_or("no naive breach")?;
    let j16 = s.network.bus_index(16).ok_or("bus 16 missing")?;
    let j32 = s.network.bus_index(32).ok_or("bus 32 missing")?;
    let mut windows = 0;
    let mut margin = f64::INFINITY;
    for w in h.windows.iter().filter(|w| w.hours.contains(&hour)) {
        let first = &w.outcomes[0];
        if first.status == TeStatus::NoViolation {
            continue;
        }
        let row: Vec<f64> = first.cos.row(hour - w.hours.start).iter().map(|v| v.abs()).collect();
        let small = row[j16].min(row[j32]);
        let others = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != j16 && *j != j32)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        if small < others {
            return Err(format!(
                "window {}: |CoS| 16/32 = {:.4}/{:.4}, other max {others:.4}",
                w.index, row[j16], row[j32]
            ));
        }
        margin = margin.min(small - others);
        windows += 1;
    }
    check(
        windows > 0,
        format!("hour {hour}: first round of {windows} windows, min margin {margin:.4} EUR/kWh"),
    )
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "svg")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let (x, y) = (read_csvs(a), read_csvs(b));
    let csvs = x.iter().filter(|f| f.0.ends_with(".csv")).count();
    if x.len() != y.len() || csvs < 7 {
        return Err(format!("file sets differ: {} vs {}", x.len(), y.len()));
    }
    for (f, g) in x.iter().zip(&y) {
        if f != g {
            return Err(format!("{} differs", f.0));
        }
    }
    check(true, format!("{csvs} CSV and {} SVG files identical", x.len() - csvs))
}

fn committed_invariants(runs: &[&RunReport]) -> Outcome {
    let mut hours = 0;
    let mut worst: f64 = 0.0;
    for r in runs {
        let (h, s) = (&r.horizon, &r.scenario);
        let bus_of = s.prosumer_bus_indices();
        let mut soc = h.initial_soc.clone();
        for c in &h.committed {
            let w = &h.windows[c.window];
            let mut resident_import = vec![0.0; s.network.num_buses()];
            for (i, p) in s.prosumers.iter().enumerate() {
                let d = &c.decisions[i];
                let next = soc_transition(soc[i], d.charge_flow(), d.discharge_flow(), p)
                    .map_err(|e| format!("{} hour {}: {e}", p.id, c.hour))?;
                let surplus = p.pv_forecast_kw[c.hour] - p.load_forecast_kw[c.hour];
                let balance = d.net_kw() + d.charge_flow() - d.discharge_flow() - surplus;
                let errs = [
                    (c.soc_before[i] - soc[i]).abs(),
                    (c.soc_after[i] - next).abs(),
                    (d.soc - next).abs(),
                    balance.abs(),
                    (p.soc_min_frac - next).max(next - p.soc_max_frac).max(0.0),
                ];
                let e = errs.iter().cloned().fold(0.0, f64::max);
                if e > 1e-6 {
                    return Err(format!("{} hour {}: error {e:.2e}", p.id, c.hour));
                }
                worst = worst.max(e);
                soc[i] = next;
                resident_import[bus_of[i]] -= d.net_kw();
            }
            if w.status() == TeStatus::NoViolation {
                for (j, v) in resident_import.iter().enumerate() {
                    let e = (c.after_te_kw[j] - v).abs();
                    if e > 1e-6 {
                        return Err(format!("hour {} bus {j}: aggregate off by {e:.2e}", c.hour));
                    }
                    worst = worst.max(e);
                }
            }
            hours += 1;
        }
    }
    check(true, format!("{hours} committed hours over {} runs, max error {worst:.1e}", runs.len()))
}

fn main() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let r = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let (tag, detail) = match &r {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("acceptance {n} {tag} {name}: {detail}");
        results.push((n, name, r));
    };

    record(1, "prosumer schedules match mode enumeration", &mut prosumer_oracle);
    record(2, "branch and bound matches brute force", &mut solver_enumeration);
    record(3, "two-bus negotiation mechanics", &mut admm_mechanics);

    let first = tmp.path().join("case18_a");
    let second = tmp.path().join("case18_b");
    let small_dir = tmp.path().join("case18_small");
    let main_run = catch_unwind(|| run_bundled("case18.toml", &first));
    let small_run = catch_unwind(|| run_bundled("case18_small_battery.toml", &small_dir));
    let repeat_run = catch_unwind(|| run_bundled("case18.toml", &second));
    let missing = |what: &str| -> Outcome { Err(format!("{what} run failed")) };

    record(4, "committed horizon respects network limits", &mut || match &main_run {
        Ok((r, t)) => end_to_end_security(r, *t),
        Err(_) => missing("case18"),
    });
    record(5, "price adder sign follows ND", &mut adder_sign_table);
    record(6, "ND is max-abs normalized", &mut nd_normalization);
    record(7, "downsized batteries carry the largest CoS", &mut || match &small_run {
        Ok((r, _)) => small_battery_cos(r),
        Err(_) => missing("small-battery"),
    });
    record(8, "repeated runs give identical files", &mut || match (&main_run, &repeat_run) {
        (Ok(_), Ok(_)) => determinism(&first, &second),
        _ => missing("case18"),
    });
    record(9, "SOC and energy balance at committed hours", &mut || match (&main_run, &small_run) {
        (Ok((a, _)), Ok((b, _))) => committed_invariants(&[a, b]),
        _ => missing("case18"),
    });

    let failed: Vec<_> = results.iter().filter(|r| r.2.is_err()).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.1} s",
        results.len() - failed.len(),
        failed.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
