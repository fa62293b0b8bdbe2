//! Option listing along a simulated path, following exchange-style rules on
//! a weekday trading calendar.
//!
//! Expiries are the fourth Friday of each of the next twelve calendar
//! months. A freshly opened expiry month lists the two strikes bracketing
//! the spot (a third is added when the spot sits close to one of them), and
//! a month's strike ladder is extended whenever the daily close trades
//! through its highest or lowest listed strike.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::simkit::PricePath;
use chrono::{Datelike, Duration, NaiveDate, Weekday};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

/// Strike ladder step in currency units.
pub const STRIKE_STEP: f64 = 5.0;
/// A third strike is listed when the spot is within this distance of a
/// bracket strike (20% of the step).
pub const THIRD_STRIKE_THRESHOLD: f64 = 1.0;
/// Number of simultaneously listed expiry months.
pub const EXPIRY_MONTHS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    /// 1 for puts, 0 for calls.
    pub fn cp_flag(self) -> u8 {
        match self {
            OptionKind::Call => 0,
            OptionKind::Put => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "call" => Ok(OptionKind::Call),
            "put" => Ok(OptionKind::Put),
            other => Err(Error::Input(format!("unknown option kind {other:?}"))),
        }
    }
}

/// A listed contract along with the path-day range on which it is live.
#[derive(Debug, Clone, PartialEq)]
pub struct ListedContract {
    pub id: u32,
    pub kind: OptionKind,
    pub strike: f64,
    pub expiry: NaiveDate,
    pub listing_date: NaiveDate,
    /// First path day on which the contract exists.
    pub first_day: u32,
    /// Last path day on which the contract exists (expiry, clipped to the
    /// path horizon).
    pub last_day: u32,
    /// Path day index of the expiry date, when inside the calendar.
    pub expiry_day: Option<u32>,
}

/// Weekday-only trading calendar anchored at a start date.
#[derive(Debug, Clone, Copy)]
pub struct TradingCalendar {
    start: NaiveDate,
}

fn weekday_num(d: NaiveDate) -> u32 {
    d.weekday().num_days_from_monday()
}

impl TradingCalendar {
    pub fn new(start: NaiveDate) -> Result<Self> {
        if weekday_num(start) >= 5 {
            return Err(Error::Config(format!("calendar start {start} falls on a weekend")));
        }
        Ok(TradingCalendar { start })
    }

    /// Date of the `index`-th trading day (index 0 is the start date).
    pub fn date(&self, index: u32) -> NaiveDate {
        let weeks = index / 5;
        let rem = index % 5;
        let pos = weekday_num(self.start) + rem;
        let weekend_skip = if pos >= 5 { 2 } else { 0 };
        self.start + Duration::days((weeks * 7 + rem + weekend_skip) as i64)
    }

    /// Trading-day index of a date, if it is a weekday on or after start.
    pub fn day_index(&self, date: NaiveDate) -> Option<u32> {
        if date < self.start || weekday_num(date) >= 5 {
            return None;
        }
        let delta = (date - self.start).num_days() as u32;
        let weeks = delta / 7;
        let rem = delta % 7;
        let start_wd = weekday_num(self.start);
        // Count weekdays strictly inside the remaining partial week.
        let mut extra = 0;
        for k in 1..=rem {
            if (start_wd + k) % 7 < 5 {
                extra += 1;
            }
        }
        Some(weeks * 5 + extra)
    }
}

/// The fourth Friday of a Gregorian month.
pub fn fourth_friday(year: i32, month: u32) -> NaiveDate {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid year/month");
    let offset = (Weekday::Fri.num_days_from_monday() + 7 - weekday_num(first)) % 7;
    first + Duration::days((offset + 21) as i64)
}

fn next_month(year: i32, month: u32) -> (i32, u32) {
    if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    }
}

/// The next `n` fourth Fridays strictly after `date`.
pub fn next_fourth_fridays(date: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let (mut y, mut m) = (date.year(), date.month());
    while out.len() < n {
        let ff = fourth_friday(y, m);
        if ff > date {
            out.push(ff);
        }
        (y, m) = next_month(y, m);
    }
    out
}

/// Strike ladder of one expiry month, as integer multiples of the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ladder {
    low: i64,
    high: i64,
}

/// New strikes produced by one evolution step, before kind expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct NewListing {
    pub expiry: NaiveDate,
    pub strike: f64,
}

/// Active expiry months and their ladders.
#[derive(Debug, Clone, PartialEq)]
pub struct ListingState {
    months: BTreeMap<NaiveDate, Ladder>,
}

fn fresh_ticks(spot: f64) -> Vec<i64> {
    let lo = (spot / STRIKE_STEP).floor() as i64;
    let hi = lo + 1;
    let dist_lo = spot - lo as f64 * STRIKE_STEP;
    let dist_hi = hi as f64 * STRIKE_STEP - spot;
    let mut ticks = vec![lo, hi];
    // A spot sitting exactly on a strike already has that strike listed and
    // adds no third one.
    if dist_lo > 0.0 && dist_lo <= THIRD_STRIKE_THRESHOLD {
        ticks.insert(0, lo - 1);
    } else if dist_hi > 0.0 && dist_hi <= THIRD_STRIKE_THRESHOLD {
        ticks.push(hi + 1);
    }
    ticks
}

impl ListingState {
    pub fn new() -> Self {
        ListingState { months: BTreeMap::new() }
    }

    /// Expiry dates currently active, ascending.
    pub fn active_expiries(&self) -> Vec<NaiveDate> {
        self.months.keys().copied().collect()
    }

    /// Listed strikes of one expiry, ascending.
    pub fn strikes(&self, expiry: NaiveDate) -> Option<Vec<f64>> {
        self.months
            .get(&expiry)
            .map(|l| (l.low..=l.high).map(|t| t as f64 * STRIKE_STEP).collect())
    }

    /// Advance the listing state to `date` with the day's closing `spot`.
    ///
    /// Expired months are dropped, the set of active months is topped back
    /// up to twelve (opening fresh ladders against the current spot), and
    /// existing ladders extend when the close trades through an end. Returns
    /// the newly listed (expiry, strike) pairs in deterministic order.
    pub fn evolve(&mut self, spot: f64, date: NaiveDate) -> Vec<NewListing> {
        let mut new = Vec::new();
        self.months.retain(|expiry, _| *expiry > date);
        for expiry in next_fourth_fridays(date, EXPIRY_MONTHS) {
            if !self.months.contains_key(&expiry) {
                let ticks = fresh_ticks(spot);
                let ladder = Ladder { low: ticks[0], high: *ticks.last().unwrap() };
                self.months.insert(expiry, ladder);
                for t in ticks {
                    new.push(NewListing { expiry, strike: t as f64 * STRIKE_STEP });
                }
            }
        }
        for (expiry, ladder) in self.months.iter_mut() {
            while spot > ladder.high as f64 * STRIKE_STEP {
                ladder.high += 1;
                new.push(NewListing { expiry: *expiry, strike: ladder.high as f64 * STRIKE_STEP });
            }
            while spot < ladder.low as f64 * STRIKE_STEP {
                ladder.low -= 1;
                new.push(NewListing { expiry: *expiry, strike: ladder.low as f64 * STRIKE_STEP });
            }
        }
        new.sort_by(|a, b| (a.expiry, a.strike.to_bits()).cmp(&(b.expiry, b.strike.to_bits())));
        new
    }
}

impl Default for ListingState {
    fn default() -> Self {
        Self::new()
    }
}

/// Run the listing rules along a whole path. Day 0 opens all twelve expiry
/// months against the initial spot; each contract carries the path-day range
/// on which it is live. Every (expiry, strike) pair yields a call and a put.
pub fn generate_option_universe<T: Real>(
    path: &PricePath<T>,
    start_date: NaiveDate,
) -> Result<Vec<ListedContract>> {
    if path.is_empty() {
        return Err(Error::Input("cannot list options on an empty path".into()));
    }
    let calendar = TradingCalendar::new(start_date)?;
    let first_day = path.dates[0];
    let last_day = *path.dates.last().unwrap();
    let mut state = ListingState::new();
    let mut contracts = Vec::new();
    let mut next_id = 0u32;

    for (i, &day) in path.dates.iter().enumerate() {
        let date = calendar.date(day);
        let spot = path.spot[i].as_f64();
        for listing in state.evolve(spot, date) {
            let expiry_day = calendar.day_index(listing.expiry);
            for kind in [OptionKind::Call, OptionKind::Put] {
                contracts.push(ListedContract {
                    id: next_id,
                    kind,
                    strike: listing.strike,
                    expiry: listing.expiry,
                    listing_date: date,
                    first_day: day,
                    last_day: expiry_day.map_or(last_day, |e| e.min(last_day)),
                    expiry_day: expiry_day.filter(|&e| e >= first_day),
                });
                next_id += 1;
            }
        }
    }
    Ok(contracts)
}

/// Serialize contracts as `id,kind,strike,expiry,first_day,last_day`.
pub fn write_contracts_csv<W: Write>(contracts: &[ListedContract], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "kind", "strike", "expiry", "first_day", "last_day"])?;
    for c in contracts {
        w.write_record([
            c.id.to_string(),
            c.kind.label().to_string(),
            format!("{}", c.strike),
            c.expiry.format("%Y-%m-%d").to_string(),
            c.first_day.to_string(),
            c.last_day.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read contracts written by [`write_contracts_csv`]. The listing date and
/// expiry day index are reconstructed from the day range and the calendar.
pub fn read_contracts_csv<R: BufRead>(
    input: R,
    start_date: NaiveDate,
) -> Result<Vec<ListedContract>> {
    let calendar = TradingCalendar::new(start_date)?;
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize, name: &str| -> Result<String> {
            rec.get(i)
                .map(str::to_owned)
                .ok_or_else(|| Error::Input(format!("missing column {name}")))
        };
        let id: u32 = field(0, "id")?.parse().map_err(|e| Error::Input(format!("bad id: {e}")))?;
        let kind = OptionKind::parse(&field(1, "kind")?)?;
        let strike: f64 =
            field(2, "strike")?.parse().map_err(|e| Error::Input(format!("bad strike: {e}")))?;
        let expiry = NaiveDate::parse_from_str(&field(3, "expiry")?, "%Y-%m-%d")
            .map_err(|e| Error::Input(format!("bad expiry: {e}")))?;
        let first_day: u32 = field(4, "first_day")?
            .parse()
            .map_err(|e| Error::Input(format!("bad first_day: {e}")))?;
        let last_day: u32 = field(5, "last_day")?
            .parse()
            .map_err(|e| Error::Input(format!("bad last_day: {e}")))?;
        out.push(ListedContract {
            id,
            kind,
            strike,
            expiry,
            listing_date: calendar.date(first_day),
            first_day,
            last_day,
            expiry_day: calendar.day_index(expiry),
        });
    }
    Ok(out)
}
