//! Interval estimators over an empirical sample.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guards `ceil(level * n)` against `level * n` landing a hair above an
/// integer through rounding.
const CEIL_SLACK: f64 = 1e-9;

/// Builds a two-sided interval from a sorted sample.
pub trait IntervalMethod: Send + Sync + fmt::Debug {
    fn tag(&self) -> MethodTag;

    fn name(&self) -> &'static str;

    /// `sorted` must be ascending, with at least two values.
    fn interval_sorted(&self, sorted: &[f64], level: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    #[default]
    Percentile,
    Hdi,
}

impl MethodTag {
    pub const ALL: [MethodTag; 2] = [MethodTag::Percentile, MethodTag::Hdi];

    pub fn method(self) -> &'static dyn IntervalMethod {
        match self {
            MethodTag::Percentile => &Percentile,
            MethodTag::Hdi => &Hdi,
        }
    }

    pub fn name(self) -> &'static str {
        self.method().name()
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        lookup_interval_method(s).map(|m| m.tag())
    }
}

pub fn interval_methods() -> impl Iterator<Item = &'static dyn IntervalMethod> {
    MethodTag::ALL.into_iter().map(MethodTag::method)
}

pub fn lookup_interval_method(name: &str) -> Result<&'static dyn IntervalMethod> {
    interval_methods()
        .find(|m| m.name().eq_ignore_ascii_case(name.trim()))
        .ok_or_else(|| Error::UnknownName {
            kind: "interval method",
            name: name.to_string(),
            known: interval_methods().map(|m| m.name()).collect::<Vec<_>>().join(", "),
        })
}

/// Equal-tailed interval from linearly interpolated order statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct Percentile;

impl IntervalMethod for Percentile {
    fn tag(&self) -> MethodTag {
        MethodTag::Percentile
    }

    fn name(&self) -> &'static str {
        "percentile"
    }

    fn interval_sorted(&self, sorted: &[f64], level: f64) -> (f64, f64) {
        let tail = 0.5 * (1.0 - level);
        (empirical_quantile(sorted, tail), empirical_quantile(sorted, 1.0 - tail))
    }
}

/// Shortest window holding at least `ceil(level * n)` sorted values; ties go
/// to the leftmost window.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hdi;

impl IntervalMethod for Hdi {
    fn tag(&self) -> MethodTag {
        MethodTag::Hdi
    }

    fn name(&self) -> &'static str {
        "hdi"
    }

    fn interval_sorted(&self, sorted: &[f64], level: f64) -> (f64, f64) {
        let n = sorted.len();
        let m = hdi_window(n, level);
        let mut best = 0;
        let mut best_width = f64::INFINITY;
        for i in 0..=(n - m) {
            let width = sorted[i + m - 1] - sorted[i];
            if width < best_width {
                best_width = width;
                best = i;
            }
        }
        (sorted[best], sorted[best + m - 1])
    }
}

/// Number of sample points an HDI at `level` must cover.
pub fn hdi_window(n: usize, level: f64) -> usize {
    ((level * n as f64 - CEIL_SLACK).ceil() as usize).clamp(1, n)
}

/// Sample quantile at probability `p` with `h = (n - 1) p` interpolation.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = snap((n - 1) as f64 * p.clamp(0.0, 1.0));
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Removes representation noise from a position computed from decimal
/// inputs, e.g. `100 * (1 - 0.95) / 2 = 2.500000000000002`.
fn snap(h: f64) -> f64 {
    let r = (h * 1e9).round() / 1e9;
    if (h - r).abs() <= 1e-12 * h.max(1.0) {
        r
    } else {
        h
    }
}

fn checked_sorted(values: &[f64], level: f64) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Domain(format!(
            "an interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    check_level(level)?;
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("level must lie in (0, 1), got {level}")))
    }
}

/// Equal-tailed percentile interval of an unsorted sample.
pub fn percentile_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    Ok(Percentile.interval_sorted(&checked_sorted(values, level)?, level))
}

/// Highest-density interval of an unsorted sample.
pub fn hdi_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    Ok(Hdi.interval_sorted(&checked_sorted(values, level)?, level))
}
