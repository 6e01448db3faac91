//! One-line run records.
//!
//! ```text
//! instance=seed:7 h=2 ell=2 t=2 m=15 d=65 tape=random:7 oracle_calls=9384 peak_free_bits=301 catalytic_bits=1170 wall_time_ms=12 restored=true value_hex=0x3
//! ```
//!
//! Fields are space-separated `key=value` pairs in this order; values never
//! contain spaces. Brute-force runs report zero for the catalytic columns.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsRecord {
    pub instance_id: String,
    pub h: usize,
    pub ell: u32,
    pub t: usize,
    pub m: u64,
    pub d: usize,
    pub tape: String,
    pub oracle_calls: u64,
    pub peak_free_bits: u64,
    pub catalytic_bits: u64,
    pub wall_time_ms: u64,
    pub restored: bool,
    pub value: u64,
}

pub const FIELDS: [&str; 13] = [
    "instance",
    "h",
    "ell",
    "t",
    "m",
    "d",
    "tape",
    "oracle_calls",
    "peak_free_bits",
    "catalytic_bits",
    "wall_time_ms",
    "restored",
    "value_hex",
];

impl fmt::Display for StatsRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "instance={} h={} ell={} t={} m={} d={} tape={} oracle_calls={} peak_free_bits={} catalytic_bits={} wall_time_ms={} restored={} value_hex={:#x}",
            self.instance_id,
            self.h,
            self.ell,
            self.t,
            self.m,
            self.d,
            self.tape,
            self.oracle_calls,
            self.peak_free_bits,
            self.catalytic_bits,
            self.wall_time_ms,
            self.restored,
            self.value
        )
    }
}

fn num<T: FromStr>(field: usize, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::parse(1, field + 1, format!("bad value {raw:?} for {}", FIELDS[field])))
}

impl FromStr for StatsRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != FIELDS.len() {
            return Err(Error::parse(
                1,
                parts.len().min(FIELDS.len()) + 1,
                format!("expected {} fields", FIELDS.len()),
            ));
        }
        let mut vals = Vec::with_capacity(FIELDS.len());
        for (i, (part, key)) in parts.iter().zip(FIELDS).enumerate() {
            match part.split_once('=') {
                Some((k, v)) if k == key && !v.is_empty() => vals.push(v),
                _ => return Err(Error::parse(1, i + 1, format!("expected {key}=<value>"))),
            }
        }
        let value = vals[12]
            .strip_prefix("0x")
            .and_then(|hex| u64::from_str_radix(hex, 16).ok())
            .ok_or_else(|| Error::parse(1, 13, format!("bad hex value {:?}", vals[12])))?;
        Ok(Self {
            instance_id: vals[0].to_string(),
            h: num(1, vals[1])?,
            ell: num(2, vals[2])?,
            t: num(3, vals[3])?,
            m: num(4, vals[4])?,
            d: num(5, vals[5])?,
            tape: vals[6].to_string(),
            oracle_calls: num(7, vals[7])?,
            peak_free_bits: num(8, vals[8])?,
            catalytic_bits: num(9, vals[9])?,
            wall_time_ms: num(10, vals[10])?,
            restored: num(11, vals[11])?,
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StatsRecord {
        StatsRecord {
            instance_id: "seed:7".into(),
            h: 2,
            ell: 2,
            t: 2,
            m: 15,
            d: 65,
            tape: "random:7".into(),
            oracle_calls: 9384,
            peak_free_bits: 301,
            catalytic_bits: 1170,
            wall_time_ms: 12,
            restored: true,
            value: 3,
        }
    }

    #[test]
    fn round_trip() {
        let rec = sample();
        let line = rec.to_string();
        assert!(line.starts_with("instance=seed:7 h=2 "));
        assert!(line.ends_with("restored=true value_hex=0x3"));
        assert_eq!(line.parse::<StatsRecord>().unwrap(), rec);
    }

    #[test]
    fn rejects_reordered_or_missing_fields() {
        let line = sample().to_string();
        let swapped = line.replacen("h=2 ell=2", "ell=2 h=2", 1);
        assert!(matches!(swapped.parse::<StatsRecord>(), Err(Error::Parse { field: 2, .. })));
        let short: String = line.rsplit_once(' ').unwrap().0.into();
        assert!(short.parse::<StatsRecord>().is_err());
        assert!(line.replace("0x3", "3").parse::<StatsRecord>().is_err());
    }
}
