//! Normalized result cells: the comparable atoms of an answer table.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::ids::EntityId;

/// A single cell of a normalized result table. Cells compare by structural
/// equality, so all fuzziness (case, whitespace, numeric formatting, date
/// precision) is resolved at construction time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
#[serde(rename_all = "snake_case")]
pub enum ResultCell {
    Entity(EntityId),
    Literal(String),
    Number(CanonicalNumber),
    Date(DateValue),
    Boolean(bool),
}

impl ResultCell {
    /// Builds a literal cell with text canonicalization applied: surrounding
    /// whitespace trimmed, internal whitespace runs collapsed, lowercased.
    pub fn literal(text: &str) -> Self {
        ResultCell::Literal(canonical_text(text))
    }

    pub fn number(value: f64) -> Self {
        ResultCell::Number(CanonicalNumber::new(value))
    }
}

impl fmt::Display for ResultCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResultCell::Entity(id) => write!(f, "{id}"),
            ResultCell::Literal(s) => write!(f, "{s}"),
            ResultCell::Number(n) => write!(f, "{n}"),
            ResultCell::Date(d) => write!(f, "{d}"),
            ResultCell::Boolean(b) => write!(f, "{b}"),
        }
    }
}

/// Collapse whitespace runs, trim, lowercase.
pub fn canonical_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// A number reduced to a canonical decimal rendering (9 significant digits,
/// scientific form), so that values within ~1e-9 relative distance map to the
/// same representation and equality stays a plain string comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalNumber(String);

impl CanonicalNumber {
    pub fn new(value: f64) -> Self {
        if value == 0.0 {
            return Self("0".to_string());
        }
        // {:.8e} keeps 9 significant digits: trailing zeros are trimmed so
        // 5 and 5.0 render identically
        let raw = format!("{value:.8e}");
        let (mantissa, exp) = raw.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        Self(format!("{mantissa}e{exp}"))
    }

    pub fn parse(text: &str) -> Option<Self> {
        let v: f64 = text.trim().parse().ok()?;
        if v.is_finite() {
            Some(Self::new(v))
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A calendar date/time at an explicit precision. Two dates are equal only
/// when they carry the same precision and the same components, so a bare year
/// never equals a full date within that year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DateValue {
    pub year: i64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub month: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub day: Option<u8>,
    /// Hour/minute/second; only kept when the source carried a nonzero time.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time: Option<(u8, u8, u8)>,
}

impl DateValue {
    pub fn year(year: i64) -> Self {
        Self { year, month: None, day: None, time: None }
    }

    pub fn year_month(year: i64, month: u8) -> Self {
        Self { year, month: Some(month), day: None, time: None }
    }

    pub fn date(year: i64, month: u8, day: u8) -> Self {
        Self { year, month: Some(month), day: Some(day), time: None }
    }

    /// Parses XSD-style temporal literals: `2021`, `2021-06`, `2021-06-23`,
    /// `2021-06-23T14:30:00Z`, with an optional leading sign for BCE years.
    /// A midnight timestamp is taken at day precision, which is how the
    /// knowledge base serializes dates without a time of day.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim().trim_end_matches('Z');
        let (sign, rest) = match text.strip_prefix('-') {
            Some(r) => (-1i64, r),
            None => (1, text.strip_prefix('+').unwrap_or(text)),
        };

        let (date_part, time_part) = match rest.split_once('T') {
            Some((d, t)) => (d, Some(t)),
            None => (rest, None),
        };

        let mut fields = date_part.split('-');
        let year: i64 = sign * fields.next()?.parse::<i64>().ok()?;
        let month: Option<u8> = match fields.next() {
            Some(m) => Some(m.parse().ok().filter(|m| (1..=12).contains(m))?),
            None => None,
        };
        let day: Option<u8> = match fields.next() {
            Some(d) => Some(d.parse().ok().filter(|d| (1..=31).contains(d))?),
            None => None,
        };
        if fields.next().is_some() || (day.is_some() && month.is_none()) {
            return None;
        }

        let time = match time_part {
            Some(t) => {
                // ignore fractional seconds and explicit offsets
                let t = t.split(['+', '.']).next().unwrap_or(t);
                let mut hms = t.split(':');
                let h: u8 = hms.next()?.parse().ok()?;
                let m: u8 = hms.next()?.parse().ok()?;
                let s: u8 = hms.next().unwrap_or("0").parse().ok()?;
                if h == 0 && m == 0 && s == 0 {
                    None
                } else {
                    Some((h, m, s))
                }
            }
            None => None,
        };
        if time.is_some() && day.is_none() {
            return None;
        }
        Some(Self { year, month, day, time })
    }
}

impl fmt::Display for DateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        if let Some((h, m, s)) = self.time {
            write!(f, "T{h:02}:{m:02}:{s:02}")?;
        }
        Ok(())
    }
}
