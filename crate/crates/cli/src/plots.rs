//! SVG figures drawn from the CSV files of a finished run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::export::{BUS_AGGREGATES, COS, PRICES, VOLTAGES, WINDOW_AGGREGATES};
use crate::svg::{bar_chart, line_chart, Band, Series};

pub const AGGREGATE_PLOT: &str = "aggregate.svg";
pub const WINDOW_PLOT: &str = "window_schedules.svg";
pub const VOLTAGE_PLOT: &str = "voltages.svg";
pub const COS_PLOT: &str = "cos.svg";
pub const PRICE_PLOT: &str = "prices.svg";

/// At most this many hours are drawn in the per-hour plots.
const MAX_HOURS: usize = 4;

type Rows = Vec<BTreeMap<String, String>>;

/// Two curves sharing an x axis, e.g. before/after or buy/sell.
type CurvePair = (Vec<(f64, f64)>, Vec<(f64, f64)>);

fn read_rows(path: &Path) -> io::Result<Rows> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(
            headers
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect(),
        );
    }
    Ok(rows)
}

fn num(row: &BTreeMap<String, String>, key: &str) -> io::Result<f64> {
    row.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, format!("bad or missing '{key}'")))
}

fn int(row: &BTreeMap<String, String>, key: &str) -> io::Result<usize> {
    Ok(num(row, key)? as usize)
}

/// Committed hours of negotiated windows, worst pre-negotiation voltage first.
fn flagged_hours(cos: &Rows, voltages: &Rows, limits: (f64, f64)) -> io::Result<Vec<usize>> {
    let mut first_hour: BTreeMap<usize, usize> = BTreeMap::new();
    for r in cos {
        let w = int(r, "window")?;
        let h = int(r, "hour")?;
        let e = first_hour.entry(w).or_insert(h);
        *e = (*e).min(h);
    }
    let hours: BTreeSet<usize> = first_hour.into_values().collect();
    let mut worst: BTreeMap<usize, f64> = hours.iter().map(|h| (*h, 0.0)).collect();
    for r in voltages {
        let h = int(r, "hour")?;
        if let Some(w) = worst.get_mut(&h) {
            let u = num(r, "before_pu")?;
            *w = w.max(limits.0 - u).max(u - limits.1);
        }
    }
    let mut ranked: Vec<(usize, f64)> = worst.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<usize> = ranked.into_iter().take(MAX_HOURS).map(|p| p.0).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

fn write(dir: &Path, name: &str, svg: String, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let p = dir.join(name);
    fs::write(&p, svg)?;
    out.push(p);
    Ok(())
}

/// Draws the figures from the CSV files in `dir`. `v_limits` are the voltage
/// band drawn on the voltage plot. The CoS plot is skipped when nothing was
/// negotiated.
pub fn emit_plots(dir: &Path, v_limits: (f64, f64)) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();

    let agg = read_rows(&dir.join(BUS_AGGREGATES))?;
    let mut before: BTreeMap<usize, f64> = BTreeMap::new();
    let mut after: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &agg {
        let h = int(r, "hour")?;
        *before.entry(h).or_default() += num(r, "before_te_kw")?;
        *after.entry(h).or_default() += num(r, "after_te_kw")?;
    }
    let pts = |m: &BTreeMap<usize, f64>| m.iter().map(|(h, v)| (*h as f64, *v)).collect();
    write(
        dir,
        AGGREGATE_PLOT,
        line_chart(
            "Committed aggregate schedule",
            "hour",
            "net import [kW]",
            &[
                Series { name: "before TE".into(), points: pts(&before), dashed: false },
                Series { name: "after TE".into(), points: pts(&after), dashed: true },
            ],
            &[],
        ),
        &mut out,
    )?;

    let win = read_rows(&dir.join(WINDOW_AGGREGATES))?;
    let mut per_window: BTreeMap<usize, CurvePair> = BTreeMap::new();
    for r in &win {
        let e = per_window.entry(int(r, "window")?).or_default();
        let h = num(r, "hour")?;
        e.0.push((h, num(r, "before_te_kw")?));
        e.1.push((h, num(r, "after_te_kw")?));
    }
    let series: Vec<Series> = per_window
        .into_iter()
        .filter(|(_, (b, a))| b != a)
        .take(MAX_HOURS)
        .flat_map(|(w, (b, a))| {
            [
                Series { name: format!("window {w} before"), points: b, dashed: false },
                Series { name: format!("window {w} after"), points: a, dashed: true },
            ]
        })
        .collect();
    if !series.is_empty() {
        write(
            dir,
            WINDOW_PLOT,
            line_chart("Window schedules before/after TE", "hour", "net import [kW]", &series, &[]),
            &mut out,
        )?;
    }

    let cos = read_rows(&dir.join(COS))?;
    let volts = read_rows(&dir.join(VOLTAGES))?;
    let hours = flagged_hours(&cos, &volts, v_limits)?;
    if !hours.is_empty() {
        let mut series = Vec::new();
        for h in &hours {
            let rows: Vec<_> = volts.iter().filter(|r| int(r, "hour").ok() == Some(*h)).collect();
            let mut b = Vec::new();
            let mut a = Vec::new();
            for (j, r) in rows.iter().enumerate() {
                b.push((j as f64, num(r, "before_pu")?));
                a.push((j as f64, num(r, "after_pu")?));
            }
            series.push(Series { name: format!("hour {h} before"), points: b, dashed: false });
            series.push(Series { name: format!("hour {h} after"), points: a, dashed: true });
        }
        write(
            dir,
            VOLTAGE_PLOT,
            line_chart(
                "Bus voltage before/after TE",
                "bus position",
                "voltage [p.u.]",
                &series,
                &[
                    Band { label: "min".into(), y: v_limits.0 },
                    Band { label: "max".into(), y: v_limits.1 },
                ],
            ),
            &mut out,
        )?;

        // first negotiation of the window committing each hour
        let mut buses: Vec<String> = Vec::new();
        let mut bars = Vec::new();
        for h in &hours {
            let at_hour: Vec<_> = cos.iter().filter(|r| int(r, "hour").ok() == Some(*h)).collect();
            let window = at_hour.iter().filter_map(|r| int(r, "window").ok()).max();
            let rows: Vec<_> = at_hour
                .into_iter()
                .filter(|r| int(r, "window").ok() == window)
                .collect();
            let first = rows.iter().filter_map(|r| int(r, "te_round").ok()).min();
            let rows: Vec<_> = rows
                .into_iter()
                .filter(|r| int(r, "te_round").ok() == first)
                .collect();
            if buses.is_empty() {
                buses = rows.iter().map(|r| r["bus"].clone()).collect();
            }
            let values = rows.iter().map(|r| num(r, "lambda")).collect::<io::Result<Vec<_>>>()?;
            bars.push((format!("hour {h}"), values));
        }
        write(
            dir,
            COS_PLOT,
            bar_chart("Cost of security per bus (first negotiation round)", "bus", "lambda [EUR/kWh]", &buses, &bars),
            &mut out,
        )?;
    }

    let prices = read_rows(&dir.join(PRICES))?;
    let mut dam: BTreeMap<usize, f64> = BTreeMap::new();
    let mut by_agg: BTreeMap<String, CurvePair> = BTreeMap::new();
    for r in &prices {
        let h = int(r, "hour")?;
        dam.insert(h, num(r, "dam")?);
        let e = by_agg.entry(r["aggregator"].clone()).or_default();
        e.0.push((h as f64, num(r, "buy")?));
        e.1.push((h as f64, num(r, "sell")?));
    }
    let mut series = vec![Series { name: "day-ahead".into(), points: pts(&dam), dashed: false }];
    for (k, (b, s)) in by_agg {
        series.push(Series { name: format!("agg {k} buy"), points: b, dashed: false });
        series.push(Series { name: format!("agg {k} sell"), points: s, dashed: true });
    }
    write(
        dir,
        PRICE_PLOT,
        line_chart("Electricity prices", "hour", "price [EUR/kWh]", &series, &[]),
        &mut out,
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flagged_hours_rank_by_voltage_excursion() {
        // windows 0..5 start at hours 10..15
        let cos: Rows = (0..6)
            .flat_map(|w| {
                let h = (10 + w).to_string();
                let w = w.to_string();
                [row(&[("window", &w), ("hour", &h)]), row(&[("window", &w), ("hour", "20")])]
            })
            .collect();
        let volts: Rows = [(10, "1.02"), (11, "1.13"), (12, "1.11"), (13, "0.85"), (14, "1.0"), (15, "1.12")]
            .iter()
            .map(|(h, u)| row(&[("hour", &h.to_string()), ("before_pu", u)]))
            .collect();
        let hours = flagged_hours(&cos, &volts, (0.9, 1.1)).unwrap();
        assert_eq!(hours, vec![11, 12, 13, 15]);
    }

    #[test]
    fn nothing_negotiated_flags_nothing() {
        assert!(flagged_hours(&Vec::new(), &Vec::new(), (0.9, 1.1)).unwrap().is_empty());
    }
}
