//! Year extraction and year-range reasoning over free text.
//!
//! Only whole years are handled. A year is a standalone run of three or four
//! ASCII digits whose value lies in `MIN_YEAR..=MAX_YEAR`.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_YEAR: i32 = 100;
pub const MAX_YEAR: i32 = 2100;

pub fn is_valid_year(y: i32) -> bool {
    (MIN_YEAR..=MAX_YEAR).contains(&y)
}

/// A year found in a piece of text. `span` holds byte offsets `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearMention {
    pub value: i32,
    pub span: (usize, usize),
}

/// Inclusive year interval. `end == None` means the range is still open ("now").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: i32,
    pub end: Option<i32>,
}

impl TimeRange {
    pub fn new(start: i32, end: Option<i32>) -> Result<Self> {
        if let Some(e) = end {
            if start > e {
                return Err(Error::validation(format!("time range start {start} is after end {e}")));
            }
        }
        Ok(Self { start, end })
    }

    pub fn closed(start: i32, end: i32) -> Result<Self> {
        Self::new(start, Some(end))
    }

    pub fn open(start: i32) -> Self {
        Self { start, end: None }
    }

    pub fn contains(&self, y: i32) -> bool {
        year_in_range(y, self)
    }

    /// Upper bound with an open end resolved to `now_year`.
    pub fn end_or(&self, now_year: i32) -> i32 {
        self.end.unwrap_or(now_year)
    }

    pub fn overlaps(&self, other: &TimeRange) -> bool {
        let a_end = self.end.unwrap_or(i32::MAX);
        let b_end = other.end.unwrap_or(i32::MAX);
        self.start <= b_end && other.start <= a_end
    }
}

impl fmt::Display for TimeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.end {
            Some(e) => write!(f, "{}-{}", self.start, e),
            None => write!(f, "{}-now", self.start),
        }
    }
}

pub fn year_in_range(y: i32, r: &TimeRange) -> bool {
    r.start <= y && r.end.is_none_or(|e| y <= e)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// All standalone years in `text`, left to right.
///
/// Digit runs glued to letters ("1990s", "A1999") or embedded in a larger
/// number ("12,2010", "3.1415") are not years.
pub fn extract_years(text: &str) -> Vec<YearMention> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let end = i;
        let len = end - start;
        if !(3..=4).contains(&len) || bytes[start] == b'0' {
            continue;
        }
        let before = text[..start].chars().next_back();
        let after = text[end..].chars().next();
        if before.is_some_and(is_word_char) || after.is_some_and(is_word_char) {
            continue;
        }
        // "1,2010" / "3.2010" / "2010.5" belong to larger numbers.
        let glued_before = matches!(before, Some('.') | Some(','))
            && text[..start - 1].chars().next_back().is_some_and(|c| c.is_ascii_digit());
        let glued_after = matches!(after, Some('.') | Some(','))
            && text[end + 1..].chars().next().is_some_and(|c| c.is_ascii_digit());
        if glued_before || glued_after {
            continue;
        }
        let value: i32 = text[start..end].parse().expect("ascii digits");
        if is_valid_year(value) {
            out.push(YearMention { value, span: (start, end) });
        }
    }
    out
}

/// Split text into sentences at `.`, `?` or `!` followed by whitespace.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '?' | '!') {
            let end = i + c.len_utf8();
            if chars.peek().is_none_or(|(_, n)| n.is_whitespace()) {
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

static DASH_BETWEEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*[-\u{2013}\u{2014}]\s*$").unwrap());
static TO_BETWEEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s+(to|until)\s+$").unwrap());
static AND_BETWEEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s+and\s+$").unwrap());
static FROM_BEFORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bfrom\s+$").unwrap());
static BETWEEN_BEFORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bbetween\s+$").unwrap());
static SINCE_BEFORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bsince\s+$").unwrap());
static NEXT_YEARS_AFTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^[^.;]*?\bfor\s+the\s+next\s+([0-9]+|[a-z]+)\s+years?\b").unwrap());

fn number_word(w: &str) -> Option<i32> {
    const WORDS: [&str; 21] = [
        "zero",
        "one",
        "two",
        "three",
        "four",
        "five",
        "six",
        "seven",
        "eight",
        "nine",
        "ten",
        "eleven",
        "twelve",
        "thirteen",
        "fourteen",
        "fifteen",
        "sixteen",
        "seventeen",
        "eighteen",
        "nineteen",
        "twenty",
    ];
    let lower = w.to_ascii_lowercase();
    WORDS.iter().position(|x| *x == lower).map(|p| p as i32)
}

/// Recognise a validity range stated in a fact clause.
///
/// Supported shapes: `A–B` (any dash), `from A to B`, `between A and B`,
/// `in A ... for the next N years` and `since A`. The earliest match wins.
pub fn parse_range(text: &str) -> Option<TimeRange> {
    let years = extract_years(text);
    let mut best: Option<(usize, TimeRange)> = None;
    let mut consider = |pos: usize, r: TimeRange| {
        if best.is_none_or(|(p, _)| pos < p) {
            best = Some((pos, r));
        }
    };

    for pair in years.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let between = &text[a.span.1..b.span.0];
        let before = &text[..a.span.0];
        let two_sided = DASH_BETWEEN.is_match(between)
            || (TO_BETWEEN.is_match(between) && FROM_BEFORE.is_match(before))
            || (AND_BETWEEN.is_match(between) && BETWEEN_BEFORE.is_match(before));
        if two_sided && a.value <= b.value {
            consider(a.span.0, TimeRange { start: a.value, end: Some(b.value) });
        }
    }

    for m in &years {
        let before = &text[..m.span.0];
        if SINCE_BEFORE.is_match(before) {
            consider(m.span.0, TimeRange::open(m.value));
        }
        if let Some(caps) = NEXT_YEARS_AFTER.captures(&text[m.span.1..]) {
            let raw = caps.get(1).unwrap().as_str();
            let n = raw.parse::<i32>().ok().or_else(|| number_word(raw));
            if let Some(n) = n {
                consider(m.span.0, TimeRange { start: m.value, end: Some(m.value + n) });
            }
        }
    }

    best.map(|(_, r)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn values(text: &str) -> Vec<i32> {
        extract_years(text).into_iter().map(|m| m.value).collect()
    }

    #[test]
    fn extracts_question_anchor() {
        assert_eq!(values("What position did Barack Hussein Obama hold in 2010?"), vec![2010]);
        assert!(values("").is_empty());
        assert_eq!(
            values("Professor of Ancient History at the University of St Andrews from 1998 to 2014"),
            vec![1998, 2014]
        );
    }

    #[test]
    fn rejects_non_standalone_digits() {
        assert!(values("the 1990s were loud").is_empty());
        assert!(values("code A1999 and 12345").is_empty());
        assert!(values("pi is 3.1415 and 1,2010 people").is_empty());
        assert!(values("route 0999").is_empty());
        assert!(values("in 2101 or 99").is_empty());
        assert_eq!(values("Subset1 (190-1939)"), vec![190, 1939]);
        assert_eq!(values("1961\u{2013}2017"), vec![1961, 2017]);
    }

    #[test]
    fn ranges() {
        let r =
            parse_range("He was purchased by the Kolkata Knight Riders at the 2011 IPL auctions for the next 3 years.");
        assert_eq!(r, Some(TimeRange { start: 2011, end: Some(2014) }));
        assert_eq!(parse_range("1961\u{2013}2017"), Some(TimeRange { start: 1961, end: Some(2017) }));
        assert_eq!(parse_range("no dates here"), None);
        assert_eq!(parse_range("from 1998 to 2014"), Some(TimeRange { start: 1998, end: Some(2014) }));
        assert_eq!(parse_range("between 1900 and 1910 it rained"), Some(TimeRange { start: 1900, end: Some(1910) }));
        assert_eq!(parse_range("She has lived there since 2004."), Some(TimeRange::open(2004)));
        assert_eq!(parse_range("in 1990 for the next five years"), Some(TimeRange { start: 1990, end: Some(1995) }));
        // reversed dash range is not a range
        assert_eq!(parse_range("2017-1961"), None);
        // a lone year is not a range
        assert_eq!(parse_range("He was appointed Lord Advocate in 1775."), None);
        // "to" without "from"
        assert_eq!(parse_range("In 1990 he moved to 2000 Main Street"), None);
    }

    #[test]
    fn sentence_split() {
        assert_eq!(
            sentences("In 1990, A joined B. It rained. In 1995, A left B."),
            vec!["In 1990, A joined B.", "It rained.", "In 1995, A left B."]
        );
        assert_eq!(sentences("pi is 3.14 ok"), vec!["pi is 3.14 ok"]);
        assert!(sentences("  ").is_empty());
    }

    #[test]
    fn membership() {
        let r = TimeRange::closed(2008, 2017).unwrap();
        assert!(year_in_range(2010, &r));
        assert!(year_in_range(2008, &r));
        let r2 = TimeRange::closed(2011, 2014).unwrap();
        // enumerate the covered years directly
        let covered: Vec<i32> = (2000..2020).filter(|y| *y >= 2011 && *y <= 2014).collect();
        assert!(covered.contains(&2012));
        assert!(year_in_range(2012, &r2));
        assert!(year_in_range(2500, &TimeRange::open(2000)));
        assert!(TimeRange::closed(5, 4).is_err());
    }

    proptest! {
        #[test]
        fn mentions_round_trip(words in proptest::collection::vec(
            prop_oneof![
                (100i32..=2100).prop_map(|y| y.to_string()),
                "[a-z]{1,6}".prop_map(|s| s),
                (0i32..100000).prop_map(|n| n.to_string()),
                Just("?".to_string()),
                Just("\u{2013}".to_string()),
            ], 0..12),
            seps in proptest::collection::vec(prop_oneof![Just(" "), Just(""), Just(", "), Just(".")], 12))
        {
            let mut text = String::new();
            for (i, w) in words.iter().enumerate() {
                text.push_str(w);
                text.push_str(seps[i]);
            }
            let found = extract_years(&text);
            let mut last = None;
            for m in &found {
                let parsed: i32 = text[m.span.0..m.span.1].parse().unwrap();
                prop_assert_eq!(parsed, m.value);
                prop_assert!(is_valid_year(m.value));
                prop_assert!(m.span.0 < m.span.1);
                if let Some(prev) = last {
                    prop_assert!(prev < m.span.0);
                }
                last = Some(m.span.0);
            }
        }

        #[test]
        fn point_range_contains_itself(y in MIN_YEAR..=MAX_YEAR) {
            let r = TimeRange { start: y, end: Some(y) };
            prop_assert!(year_in_range(y, &r));
        }

        #[test]
        fn year_before_start_excluded(start in (MIN_YEAR + 1)..=MAX_YEAR, len in proptest::option::of(0i32..50)) {
            let r = TimeRange { start, end: len.map(|l| start + l) };
            prop_assert!(!year_in_range(start - 1, &r));
        }
    }
}
