//! CSV interchange for sample tables, cleaning reports and window splits.
//! All files are UTF-8 with a header row; floats use the shortest
//! round-trip decimal form.

use super::{CleaningReport, Horizon, Sample, SampleTable, WindowSplit};
use crate::error::{Error, Result};
use crate::Scalar;
use chrono::NaiveDate;
use std::io::{BufRead, Write};

const SAMPLE_COLUMNS: [&str; 19] = [
    "index",
    "date",
    "sqrt_total_implied_variance",
    "moneyness",
    "delta_bs",
    "vega_bs",
    "gamma_bs",
    "vanna_bs",
    "S0",
    "S1",
    "C0",
    "r_onr",
    "cp_flag",
    "tau",
    "r",
    "strike",
    "Y0",
    "Y1",
    "C1",
];

fn fmt(v: Scalar) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<Scalar>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn write_samples_csv<W: Write>(table: &SampleTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_COLUMNS)?;
    for r in &table.rows {
        w.write_record([
            r.index.to_string(),
            r.date.format("%Y-%m-%d").to_string(),
            fmt(r.sqrt_total_implied_variance),
            fmt(r.moneyness),
            fmt(r.delta_bs),
            fmt(r.vega_bs),
            fmt(r.gamma_bs),
            fmt(r.vanna_bs),
            fmt(r.s0),
            fmt(r.s1),
            fmt(r.c0),
            fmt(r.r_onr),
            r.cp_flag.to_string(),
            fmt(r.tau),
            fmt(r.r),
            fmt(r.strike),
            fmt_opt(r.y0),
            fmt_opt(r.y1),
            fmt(r.c1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv<R: BufRead>(input: R, horizon: Horizon) -> Result<SampleTable> {
    let mut rdr = csv::Reader::from_reader(input);
    {
        let headers = rdr.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != SAMPLE_COLUMNS {
            return Err(Error::Input(format!(
                "unexpected sample columns: got {got:?}"
            )));
        }
    }
    let mut table = SampleTable::new(horizon);
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::Input(format!("short row in samples CSV: {rec:?}")))
        };
        let num = |i: usize| -> Result<Scalar> {
            get(i)?
                .parse()
                .map_err(|e| Error::Input(format!("bad number in column {}: {e}", SAMPLE_COLUMNS[i])))
        };
        let opt_num = |i: usize| -> Result<Option<Scalar>> {
            let s = get(i)?;
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().map_err(|e| {
                    Error::Input(format!("bad number in column {}: {e}", SAMPLE_COLUMNS[i]))
                })?))
            }
        };
        table.rows.push(Sample {
            index: get(0)?
                .parse()
                .map_err(|e| Error::Input(format!("bad index: {e}")))?,
            date: NaiveDate::parse_from_str(get(1)?, "%Y-%m-%d")
                .map_err(|e| Error::Input(format!("bad date: {e}")))?,
            sqrt_total_implied_variance: num(2)?,
            moneyness: num(3)?,
            delta_bs: num(4)?,
            vega_bs: num(5)?,
            gamma_bs: num(6)?,
            vanna_bs: num(7)?,
            s0: num(8)?,
            s1: num(9)?,
            c0: num(10)?,
            r_onr: num(11)?,
            cp_flag: get(12)?
                .parse()
                .map_err(|e| Error::Input(format!("bad cp_flag: {e}")))?,
            tau: num(13)?,
            r: num(14)?,
            strike: num(15)?,
            y0: opt_num(16)?,
            y1: opt_num(17)?,
            c1: num(18)?,
        });
    }
    Ok(table)
}

pub fn write_cleaning_report_csv<W: Write>(report: &CleaningReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rule", "rows"])?;
    w.write_record(["input", &report.input_rows.to_string()])?;
    w.write_record(["retained", &report.retained.to_string()])?;
    w.write_record(["removed_total", &report.removed_total.to_string()])?;
    for (rule, n) in &report.removed_by_rule {
        w.write_record([format!("removed:{rule}"), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_windows_csv<W: Write>(windows: &[WindowSplit], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "window_id",
        "train_start",
        "train_end",
        "val_start",
        "val_end",
        "test_start",
        "test_end",
    ])?;
    let d = |x: NaiveDate| x.format("%Y-%m-%d").to_string();
    for win in windows {
        let (ts, te) = win
            .test
            .map(|(a, b)| (d(a), d(b)))
            .unwrap_or((String::new(), String::new()));
        w.write_record([
            win.window_id.to_string(),
            d(win.train.0),
            d(win.train.1),
            d(win.val.0),
            d(win.val.1),
            ts,
            te,
        ])?;
    }
    w.flush()?;
    Ok(())
}
