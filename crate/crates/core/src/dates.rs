//! Calendar-date expressions in Chinese news text.
//!
//! Recognized forms, after width folding:
//!
//! * `2023-07-29`, `2023/7/29`, `2023.7.29`
//! * `2023年7月29日`, `二〇二三年七月二十九日`, `7月29号`
//! * month-day without a year, resolved against the most recent year seen
//!   earlier in the text, else the anchor date's year
//! * `次日` / `翌日` / `第二天` (previous date + 1) and `当天` / `当日` /
//!   `同日` (previous date)
//!
//! A bare `2023年` only sets the year context.

use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate};
use regex::Regex;

use crate::text::fold_width;

fn pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(concat!(
            r"(?P<iy>[0-9]{4})[-/.](?P<im>[0-9]{1,2})[-/.](?P<id>[0-9]{1,2})",
            r"|(?:(?P<y>[0-9]{4}|[〇零一二三四五六七八九]{4})年)?",
            r"(?P<m>[0-9]{1,2}|[一二三四五六七八九十]{1,3})月",
            r"(?P<d>[0-9]{1,2}|[一二三四五六七八九十]{1,3})[日号]",
            r"|(?P<next>次日|翌日|第二天)",
            r"|(?P<same>当天|当日|同日)",
            r"|(?P<cy>[0-9]{4}|[〇零一二三四五六七八九]{4})年",
        ))
        .expect("date pattern compiles")
    })
}

/// Dates mentioned in `text`, in order of appearance.
pub fn extract_dates(text: &str, anchor: Option<NaiveDate>) -> Vec<NaiveDate> {
    let folded = fold_width(text);
    let mut out: Vec<NaiveDate> = Vec::new();
    let mut year_ctx: Option<i32> = None;

    for caps in pattern().captures_iter(&folded) {
        if let (Some(y), Some(m), Some(d)) = (caps.name("iy"), caps.name("im"), caps.name("id")) {
            if let Some(date) = ymd(
                parse_number(y.as_str()),
                parse_number(m.as_str()),
                parse_number(d.as_str()),
            ) {
                year_ctx = Some(date.year());
                out.push(date);
            }
        } else if let (Some(m), Some(d)) = (caps.name("m"), caps.name("d")) {
            let year = match caps.name("y") {
                Some(y) => parse_number(y.as_str()).map(|v| v as i32),
                None => year_ctx.or(anchor.map(|a| a.year())),
            };
            let Some(year) = year else { continue };
            if let Some(date) = ymd(Some(year as u32), parse_number(m.as_str()), parse_number(d.as_str())) {
                year_ctx = Some(year);
                out.push(date);
            }
        } else if caps.name("next").is_some() {
            if let Some(prev) = out.last().copied() {
                out.push(prev + Duration::days(1));
            }
        } else if caps.name("same").is_some() {
            if let Some(prev) = out.last().copied() {
                out.push(prev);
            }
        } else if let Some(y) = caps.name("cy") {
            year_ctx = parse_number(y.as_str()).map(|v| v as i32);
        }
    }
    out
}

/// Parses a free-form date: ISO forms or a single Chinese date expression.
pub fn parse_loose_date(text: &str) -> Option<NaiveDate> {
    crate::model::parse_iso_date(text).or_else(|| extract_dates(text, None).into_iter().next())
}

fn ymd(y: Option<u32>, m: Option<u32>, d: Option<u32>) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(y? as i32, m?, d?)
}

/// Arabic digits, digit-by-digit Chinese years (`二〇二三`) or Chinese
/// numerals up to 99 (`二十九`).
fn parse_number(s: &str) -> Option<u32> {
    if s.chars().all(|c| c.is_ascii_digit()) {
        return s.parse().ok();
    }
    let digit = |c: char| -> Option<u32> {
        Some(match c {
            '〇' | '零' => 0,
            '一' => 1,
            '二' => 2,
            '三' => 3,
            '四' => 4,
            '五' => 5,
            '六' => 6,
            '七' => 7,
            '八' => 8,
            '九' => 9,
            _ => return None,
        })
    };
    if !s.contains('十') {
        return s.chars().try_fold(0u32, |acc, c| Some(acc * 10 + digit(c)?));
    }
    let (tens, units) = s.split_once('十')?;
    let tens = if tens.is_empty() {
        1
    } else {
        tens.chars().try_fold(0u32, |a, c| Some(a * 10 + digit(c)?))?
    };
    let units = if units.is_empty() {
        0
    } else {
        units.chars().try_fold(0u32, |a, c| Some(a * 10 + digit(c)?))?
    };
    Some(tens * 10 + units)
}
