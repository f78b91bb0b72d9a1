//! CSV output.
//!
//! | file | columns |
//! |------|---------|
//! | `schedules.csv` | `hour,entity,net_kw,soc` |
//! | `bus_aggregates.csv` | `hour,bus,before_te_kw,after_te_kw` |
//! | `voltages.csv` | `hour,bus,before_pu,after_pu` |
//! | `cos.csv` | `window,hour,bus,lambda,nd,adder,te_round` |
//! | `admm_trace.csv` | `window,te_round,iteration,max_residual,max_dual_delta` |
//! | `window_aggregates.csv` | `window,hour,before_te_kw,after_te_kw` |
//! | `prices.csv` | `hour,aggregator,dam,buy,sell,up_regulation,down_regulation` |
//!
//! Power is net import in kW (consumption positive). `hour` is absolute;
//! `bus` is the scenario bus id. `schedules.csv`, `bus_aggregates.csv` and
//! `voltages.csv` hold committed hours only; `soc` is the end-of-hour state.
//! `cos.csv` has one row per (hour, bus) of every negotiated round.

use std::io;
use std::path::{Path, PathBuf};

use csv::Writer;

use tecoord::coordinator::TeStatus;
use tecoord::dso::voltage_profile;
use tecoord::hems::{retail_buy_price, retail_sell_price};
use tecoord::{HorizonResult, Scenario};

pub const SCHEDULES: &str = "schedules.csv";
pub const BUS_AGGREGATES: &str = "bus_aggregates.csv";
pub const VOLTAGES: &str = "voltages.csv";
pub const COS: &str = "cos.csv";
pub const ADMM_TRACE: &str = "admm_trace.csv";
pub const WINDOW_AGGREGATES: &str = "window_aggregates.csv";
pub const PRICES: &str = "prices.csv";

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    // normalise -0 so reruns and sign flips of zero do not differ
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

struct Table {
    path: PathBuf,
    w: Writer<std::fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> io::Result<Self> {
        let path = dir.join(name);
        let mut w = Writer::from_path(&path)?;
        w.write_record(header)?;
        Ok(Self { path, w })
    }

    fn row(&mut self, fields: &[String]) -> io::Result<()> {
        self.w.write_record(fields).map_err(io::Error::from)
    }

    fn finish(mut self) -> io::Result<PathBuf> {
        self.w.flush()?;
        Ok(self.path)
    }
}

/// Writes every CSV file into `dir` and returns their paths.
pub fn export_results(h: &HorizonResult, s: &Scenario, dir: &Path) -> io::Result<Vec<PathBuf>> {
    let net = &s.network;
    let bus_id = |j: usize| net.bus_ids[j].to_string();
    let to_io = |e: tecoord::dso::DsoError| io::Error::new(io::ErrorKind::InvalidData, e.to_string());
    let mut out = Vec::new();

    let mut t = Table::create(dir, SCHEDULES, &["hour", "entity", "net_kw", "soc"])?;
    for c in &h.committed {
        for (i, p) in s.prosumers.iter().enumerate() {
            let d = &c.decisions[i];
            t.row(&[
                c.hour.to_string(),
                p.id.clone(),
                fmt_f64(-d.net_kw()),
                fmt_f64(c.soc_after[i]),
            ])?;
        }
    }
    out.push(t.finish()?);

    let before = h.committed_before();
    let after = h.committed_after();
    let mut t = Table::create(dir, BUS_AGGREGATES, &["hour", "bus", "before_te_kw", "after_te_kw"])?;
    for (k, c) in h.committed.iter().enumerate() {
        for j in 0..net.num_buses() {
            t.row(&[
                c.hour.to_string(),
                bus_id(j),
                fmt_f64(before.get(k, j)),
                fmt_f64(after.get(k, j)),
            ])?;
        }
    }
    out.push(t.finish()?);

    let mut t = Table::create(dir, VOLTAGES, &["hour", "bus", "before_pu", "after_pu"])?;
    if !h.committed.is_empty() {
        let ub = voltage_profile(&before, net).map_err(to_io)?;
        let ua = voltage_profile(&after, net).map_err(to_io)?;
        for (k, c) in h.committed.iter().enumerate() {
            for j in 0..net.num_buses() {
                t.row(&[
                    c.hour.to_string(),
                    bus_id(j),
                    fmt_f64(ub.get(k, j)),
                    fmt_f64(ua.get(k, j)),
                ])?;
            }
        }
    }
    out.push(t.finish()?);

    let mut t = Table::create(
        dir,
        COS,
        &["window", "hour", "bus", "lambda", "nd", "adder", "te_round"],
    )?;
    for w in &h.windows {
        for o in w.outcomes.iter().filter(|o| o.status != TeStatus::NoViolation) {
            for k in 0..o.cos.hours() {
                for j in 0..net.num_buses() {
                    t.row(&[
                        w.index.to_string(),
                        (w.hours.start + k).to_string(),
                        bus_id(j),
                        fmt_f64(o.cos.get(k, j)),
                        fmt_f64(o.nd.get(k, j)),
                        fmt_f64(o.price_adder.get(k, j)),
                        o.round.to_string(),
                    ])?;
                }
            }
        }
    }
    out.push(t.finish()?);

    let mut t = Table::create(
        dir,
        ADMM_TRACE,
        &["window", "te_round", "iteration", "max_residual", "max_dual_delta"],
    )?;
    for w in &h.windows {
        for o in &w.outcomes {
            for it in &o.admm_history {
                t.row(&[
                    w.index.to_string(),
                    o.round.to_string(),
                    it.iteration.to_string(),
                    fmt_f64(it.max_residual),
                    fmt_f64(it.max_dual_delta),
                ])?;
            }
        }
    }
    out.push(t.finish()?);

    let mut t = Table::create(
        dir,
        WINDOW_AGGREGATES,
        &["window", "hour", "before_te_kw", "after_te_kw"],
    )?;
    for w in &h.windows {
        let initial = w.initial_aggregate();
        for k in 0..w.hours.len() {
            t.row(&[
                w.index.to_string(),
                (w.hours.start + k).to_string(),
                fmt_f64(initial.hour_total(k)),
                fmt_f64(w.grid_schedule.hour_total(k)),
            ])?;
        }
    }
    out.push(t.finish()?);

    let p = &s.prices;
    let mut t = Table::create(
        dir,
        PRICES,
        &["hour", "aggregator", "dam", "buy", "sell", "up_regulation", "down_regulation"],
    )?;
    for hour in 0..s.config.horizon_hours {
        for k in &p.aggregators {
            t.row(&[
                hour.to_string(),
                k.id.to_string(),
                fmt_f64(p.dam_price[hour]),
                fmt_f64(retail_buy_price(k, p, hour)),
                fmt_f64(retail_sell_price(k, p, hour)),
                fmt_f64(p.up_reg_price[hour]),
                fmt_f64(p.down_reg_price[hour]),
            ])?;
        }
    }
    out.push(t.finish()?);
    Ok(out)
}
