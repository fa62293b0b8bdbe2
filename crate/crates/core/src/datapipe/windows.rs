//! Chronological train/validation/test window splits.

use super::SampleTable;
use crate::error::{Error, Result};
use chrono::NaiveDate;

/// How a table's date span is carved into windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Overlapping windows of `in_sample_days + test_days`, rolled forward
    /// by `roll_days`; the in-sample part splits 4:1 into train and
    /// validation.
    Rolling {
        in_sample_days: u32,
        test_days: u32,
        roll_days: u32,
    },
    /// One window over the whole span with day counts in ratio 4:1:1.
    Single,
    /// Simulation layout: fixed train/validation day counts, test sets live
    /// on separately simulated paths.
    Simulation { train_days: u32, val_days: u32 },
}

impl SplitMode {
    /// The rolling layout used for multi-year daily data: 900 in-sample days
    /// (720 train + 180 validation), 180 test days, rolled by 180.
    pub fn rolling_default() -> Self {
        SplitMode::Rolling { in_sample_days: 900, test_days: 180, roll_days: 180 }
    }
}

/// Inclusive date ranges of one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSplit {
    pub window_id: u32,
    pub train: (NaiveDate, NaiveDate),
    pub val: (NaiveDate, NaiveDate),
    /// Absent in simulation mode, where test sets are separate tables.
    pub test: Option<(NaiveDate, NaiveDate)>,
}

impl WindowSplit {
    /// No look-ahead: train strictly precedes validation, which strictly
    /// precedes test.
    pub fn is_chronological(&self) -> bool {
        let ordered = self.train.0 <= self.train.1
            && self.train.1 < self.val.0
            && self.val.0 <= self.val.1;
        match self.test {
            Some(test) => ordered && self.val.1 < test.0 && test.0 <= test.1,
            None => ordered,
        }
    }
}

/// Split the table's distinct trading dates into windows.
pub fn split_windows(table: &SampleTable, mode: SplitMode) -> Result<Vec<WindowSplit>> {
    let dates = table.dates();
    let n = dates.len() as u32;
    match mode {
        SplitMode::Rolling { in_sample_days, test_days, roll_days } => {
            let window = in_sample_days + test_days;
            if n < window {
                return Err(Error::Config(format!(
                    "table spans {n} days; rolling windows need at least {window}"
                )));
            }
            if roll_days == 0 {
                return Err(Error::Config("roll_days must be positive".into()));
            }
            let train_days = in_sample_days * 4 / 5;
            let mut out = Vec::new();
            let mut start = 0u32;
            let mut id = 0u32;
            while start + window <= n {
                let d = |i: u32| dates[i as usize];
                out.push(WindowSplit {
                    window_id: id,
                    train: (d(start), d(start + train_days - 1)),
                    val: (d(start + train_days), d(start + in_sample_days - 1)),
                    test: Some((d(start + in_sample_days), d(start + window - 1))),
                });
                id += 1;
                start += roll_days;
            }
            Ok(out)
        }
        SplitMode::Single => {
            if n < 6 {
                return Err(Error::Config(format!(
                    "table spans {n} days; a 4:1:1 split needs at least 6"
                )));
            }
            let part = n / 6;
            let train_days = n - 2 * part;
            let d = |i: u32| dates[i as usize];
            Ok(vec![WindowSplit {
                window_id: 0,
                train: (d(0), d(train_days - 1)),
                val: (d(train_days), d(train_days + part - 1)),
                test: Some((d(train_days + part), d(n - 1))),
            }])
        }
        SplitMode::Simulation { train_days, val_days } => {
            if n < train_days + val_days {
                return Err(Error::Config(format!(
                    "table spans {n} days; simulation split needs {}",
                    train_days + val_days
                )));
            }
            let d = |i: u32| dates[i as usize];
            Ok(vec![WindowSplit {
                window_id: 0,
                train: (d(0), d(train_days - 1)),
                val: (d(train_days), d(train_days + val_days - 1)),
                test: None,
            }])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::{Horizon, Sample};
    use chrono::Duration;

    /// A table with one tiny row per trading date.
    fn table_spanning(days: u32) -> SampleTable {
        let start = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        let mut d = start;
        for i in 0..days {
            t.rows.push(Sample {
                index: i as u64,
                date: d,
                sqrt_total_implied_variance: 0.05,
                moneyness: 0.95,
                delta_bs: 0.4,
                vega_bs: 9.0,
                gamma_bs: 0.02,
                vanna_bs: 0.2,
                s0: 100.0,
                s1: 100.0,
                c0: 1.0,
                r_onr: 0.0,
                cp_flag: 0,
                tau: 0.2,
                r: 0.0,
                strike: 105.0,
                y0: None,
                y1: None,
                c1: 1.0,
            });
            d += Duration::days(1); // calendar dates suffice for splitting
        }
        t
    }

    #[test]
    fn rolling_window_counts() {
        // 1080 days: exactly one window.
        let one = split_windows(&table_spanning(1080), SplitMode::rolling_default()).unwrap();
        assert_eq!(one.len(), 1);
        // 3420 days: fourteen windows rolled by 180.
        let many = split_windows(&table_spanning(3420), SplitMode::rolling_default()).unwrap();
        assert_eq!(many.len(), 14);
        for w in &many {
            assert!(w.is_chronological());
        }
        // Train:val:test day counts are 720:180:180 in every window.
        let dates = table_spanning(3420).dates();
        let w = &many[3];
        let count = |range: (NaiveDate, NaiveDate)| {
            dates.iter().filter(|d| **d >= range.0 && **d <= range.1).count()
        };
        assert_eq!(count(w.train), 720);
        assert_eq!(count(w.val), 180);
        assert_eq!(count(w.test.unwrap()), 180);
        // Too short errors out.
        assert!(split_windows(&table_spanning(1000), SplitMode::rolling_default()).is_err());
    }

    #[test]
    fn single_mode_is_4_1_1() {
        let t = table_spanning(3420);
        let w = &split_windows(&t, SplitMode::Single).unwrap()[0];
        let dates = t.dates();
        let count = |range: (NaiveDate, NaiveDate)| {
            dates.iter().filter(|d| **d >= range.0 && **d <= range.1).count()
        };
        assert_eq!(count(w.train), 2280);
        assert_eq!(count(w.val), 570);
        assert_eq!(count(w.test.unwrap()), 570);
        assert!(w.is_chronological());
        assert!(split_windows(&table_spanning(5), SplitMode::Single).is_err());
    }

    #[test]
    fn simulation_mode_carves_train_and_validation() {
        let t = table_spanning(450);
        let w = &split_windows(&t, SplitMode::Simulation { train_days: 360, val_days: 90 }).unwrap()[0];
        let dates = t.dates();
        let count = |range: (NaiveDate, NaiveDate)| {
            dates.iter().filter(|d| **d >= range.0 && **d <= range.1).count()
        };
        assert_eq!(count(w.train), 360);
        assert_eq!(count(w.val), 90);
        assert!(w.test.is_none());
        assert!(w.is_chronological());
    }

    #[test]
    fn windows_never_leak_anywhere() {
        let t = table_spanning(1260);
        for w in split_windows(&t, SplitMode::rolling_default()).unwrap() {
            let train = t.slice_by_date(w.train.0, w.train.1);
            let val = t.slice_by_date(w.val.0, w.val.1);
            let test = t.slice_by_date(w.test.unwrap().0, w.test.unwrap().1);
            let max_train = train.rows.iter().map(|r| r.date).max().unwrap();
            let min_val = val.rows.iter().map(|r| r.date).min().unwrap();
            let max_val = val.rows.iter().map(|r| r.date).max().unwrap();
            let min_test = test.rows.iter().map(|r| r.date).min().unwrap();
            assert!(max_train < min_val);
            assert!(max_val < min_test);
        }
    }
}
