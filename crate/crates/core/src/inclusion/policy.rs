//! Selection policies for set-valued fibres.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::output::{FibreElement, FibreSet};
use crate::scalar::Real;

/// Deterministic rule choosing one output from a fibre. Branch indices refer
/// to [`FibreSet::sorted_elements`] (ordered by norm, then lexicographically).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionPolicy {
    NearestPrevious,
    MinNorm,
    MaxNorm,
    FixedBranch { index: usize },
    /// Point `(1 - s) a + s b` of the first segment `[a, b]` in branch order.
    SegmentParameter { s: f64 },
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionPolicy::SegmentParameter { s } if !(0.0..=1.0).contains(&s) => Err(Error::Config(format!(
                "segment parameter must lie in [0, 1], got {s}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionPolicy::NearestPrevious => write!(f, "nearest_previous"),
            SelectionPolicy::MinNorm => write!(f, "min_norm"),
            SelectionPolicy::MaxNorm => write!(f, "max_norm"),
            SelectionPolicy::FixedBranch { index } => write!(f, "fixed_branch({index})"),
            SelectionPolicy::SegmentParameter { s } => write!(f, "segment_parameter({s})"),
        }
    }
}

/// Accepts `nearest_previous`, `min_norm`, `max_norm`, `fixed_branch(k)` and
/// `segment_parameter(s)`; `name:arg` works as well as `name(arg)`.
impl FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(src: &str) -> Result<Self> {
        let s = src.trim();
        let (name, arg) = match s.find(['(', ':']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')').trim())),
            None => (s, None),
        };
        let bad = || Error::Config(format!("invalid selection policy '{src}'"));
        let policy = match (name, arg) {
            ("nearest_previous", None) => SelectionPolicy::NearestPrevious,
            ("min_norm", None) => SelectionPolicy::MinNorm,
            ("max_norm", None) => SelectionPolicy::MaxNorm,
            ("fixed_branch", Some(a)) => SelectionPolicy::FixedBranch {
                index: a.parse().map_err(|_| bad())?,
            },
            ("segment_parameter", Some(a)) => SelectionPolicy::SegmentParameter {
                s: a.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection<T> {
    pub y: Vec<T>,
    /// Index of the chosen element in branch order.
    pub branch: usize,
}

fn max_norm_point<T: Real>(e: &FibreElement<T>) -> Result<Vec<T>> {
    match e {
        FibreElement::Point(p) => Ok(p.clone()),
        FibreElement::Segment(s) => {
            let end = s
                .end()
                .ok_or_else(|| Error::Config("max_norm is undefined on an unbounded fibre".into()))?;
            Ok(if linalg::norm(&end) > linalg::norm(&s.start) { end } else { s.start.clone() })
        }
        FibreElement::Shell(sh) => {
            if !sh.r_max.is_finite() {
                return Err(Error::Config("max_norm is undefined on an unbounded fibre".into()));
            }
            let mut e = vec![T::zero(); sh.dim];
            e[0] = sh.r_max;
            Ok(e)
        }
    }
}

/// Pick one point of `fib` according to `policy`. Returns `Ok(None)` for an
/// empty fibre, which the integrators report as a loss of the output
/// solution.
pub fn select_from_fibre<T: Real>(
    fib: &FibreSet<T>,
    policy: &SelectionPolicy,
    prev_y: Option<&[T]>,
) -> Result<Option<Selection<T>>> {
    policy.validate()?;
    let els = fib.sorted_elements();
    if els.is_empty() {
        return Ok(None);
    }
    let pick = |branch: usize, y: Vec<T>| Ok(Some(Selection { y, branch }));
    match *policy {
        SelectionPolicy::NearestPrevious => {
            let prev = prev_y.ok_or_else(|| Error::Usage("nearest_previous needs a previous output".into()))?;
            let (branch, y) = els
                .iter()
                .map(|e| e.project(prev))
                .enumerate()
                .min_by(|(_, a), (_, b)| linalg::dist(a, prev).partial_cmp(&linalg::dist(b, prev)).unwrap_or(std::cmp::Ordering::Equal))
                .expect("non-empty");
            pick(branch, y)
        }
        SelectionPolicy::MinNorm => pick(0, els[0].representative()),
        SelectionPolicy::MaxNorm => {
            let mut best: Option<(usize, Vec<T>)> = None;
            for (i, e) in els.iter().enumerate() {
                let y = max_norm_point(e)?;
                if best.as_ref().is_none_or(|(_, b)| linalg::norm(&y) > linalg::norm(b)) {
                    best = Some((i, y));
                }
            }
            let (branch, y) = best.expect("non-empty");
            pick(branch, y)
        }
        SelectionPolicy::FixedBranch { index } => match els.get(index) {
            Some(e) => pick(index, e.representative()),
            None => Err(Error::Config(format!(
                "fixed_branch({index}) out of range: fibre has {} element(s)",
                els.len()
            ))),
        },
        SelectionPolicy::SegmentParameter { s } => {
            match els.iter().position(|e| matches!(e, FibreElement::Segment(_))) {
                Some(i) => {
                    let FibreElement::Segment(seg) = &els[i] else { unreachable!() };
                    let y = seg
                        .at_fraction(T::lit(s))
                        .ok_or_else(|| Error::Config("segment_parameter needs a bounded segment".into()))?;
                    pick(i, y)
                }
                None => pick(0, els[0].representative()),
            }
        }
    }
}
