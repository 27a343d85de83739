//! Check records, theorem tags and the aggregated report.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    RadialUnboundedness,
    LipschitzUpper,
    LowerLipschitz,
    LocalInjectivity,
    Determinant,
    Growth,
    Monotonicity,
    FibreNonempty,
    FibreImageConvex,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::RadialUnboundedness,
        CheckName::LipschitzUpper,
        CheckName::LowerLipschitz,
        CheckName::LocalInjectivity,
        CheckName::Determinant,
        CheckName::Growth,
        CheckName::Monotonicity,
        CheckName::FibreNonempty,
        CheckName::FibreImageConvex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::RadialUnboundedness => "radial_unboundedness",
            CheckName::LipschitzUpper => "lipschitz_upper",
            CheckName::LowerLipschitz => "lower_lipschitz",
            CheckName::LocalInjectivity => "local_injectivity",
            CheckName::Determinant => "determinant",
            CheckName::Growth => "growth",
            CheckName::Monotonicity => "monotonicity",
            CheckName::FibreNonempty => "fibre_nonempty",
            CheckName::FibreImageConvex => "fibre_image_convex",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sampling can refute a hypothesis (with a witness) or find no
/// counterexample; it never proves one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PassSampled,
    FailWitness,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::PassSampled => "pass_sampled",
            Verdict::FailWitness => "fail_witness",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Data reproducing a violation: the relevant inequality re-evaluated at
/// these points gives `value`, which violates `bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub xi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<f64>>,
    /// Output target, for fibre checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    /// Finite-difference step, for the determinant check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Point around which Clarke samples were drawn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
    pub value: f64,
    pub bound: f64,
    /// A second violation needed by two-sided checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub also: Option<Box<Witness>>,
}

impl Witness {
    pub(crate) fn at(t: f64, xi: Vec<f64>, value: f64, bound: f64) -> Self {
        Self {
            t,
            xi,
            zeta: None,
            w: None,
            step: None,
            base_point: None,
            value,
            bound,
            also: None,
        }
    }

    pub(crate) fn pair(t: f64, xi: Vec<f64>, zeta: Vec<f64>, value: f64, bound: f64) -> Self {
        Self {
            zeta: Some(zeta),
            ..Self::at(t, xi, value, bound)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: CheckName,
    pub verdict: Verdict,
    /// Signed distance from the threshold; positive means the hypothesis
    /// holds with room to spare.
    pub margin: f64,
    /// Named estimates (`lambda`, `epsilon`, `delta`, `gamma1`, ...).
    pub estimates: BTreeMap<String, f64>,
    /// Per-radius or per-level table where the check produces one.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub table: Vec<[f64; 2]>,
    pub witness: Option<Witness>,
}

impl CheckRecord {
    pub(crate) fn new(name: CheckName, verdict: Verdict, margin: f64) -> Self {
        Self {
            name,
            verdict,
            margin,
            estimates: BTreeMap::new(),
            table: Vec::new(),
            witness: None,
        }
    }

    pub(crate) fn estimate(mut self, key: &str, v: f64) -> Self {
        self.estimates.insert(key.to_string(), v);
        self
    }

    pub(crate) fn with_witness(mut self, w: Option<Witness>) -> Self {
        self.witness = w;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Existence,
    BlowUp,
    ForwardComplete,
    Uniqueness,
    InclusionExistence,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Existence => "existence",
            Theorem::BlowUp => "blow_up",
            Theorem::ForwardComplete => "forward_complete",
            Theorem::Uniqueness => "uniqueness",
            Theorem::InclusionExistence => "inclusion_existence",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremTag {
    pub theorem: Theorem,
    pub applicable: bool,
    /// Always `"sampled"`: hypotheses are only tested on finite samples.
    pub qualifier: String,
    /// Hypotheses of the route that applies (or of the closest route).
    pub satisfied: Vec<CheckName>,
    pub violated: Vec<CheckName>,
    /// Assumptions taken for granted rather than probed.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub assumed: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFlags {
    pub fibres_exact_available: bool,
    pub f_time_independent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub structure: StructureFlags,
    pub checks: Vec<CheckRecord>,
    pub applicability: Vec<TheoremTag>,
}

/// Alternative hypothesis sets for each theorem; a tag applies when every
/// check of some route passes.
fn routes(theorem: Theorem) -> &'static [&'static [CheckName]] {
    use CheckName::*;
    match theorem {
        Theorem::Existence | Theorem::BlowUp => &[&[LocalInjectivity, RadialUnboundedness]],
        Theorem::ForwardComplete => &[
            &[LocalInjectivity, RadialUnboundedness, Growth],
            &[LipschitzUpper, Determinant, RadialUnboundedness],
        ],
        Theorem::Uniqueness => &[
            &[LipschitzUpper, RadialUnboundedness, LowerLipschitz],
            &[LipschitzUpper, RadialUnboundedness, Determinant],
            &[LipschitzUpper, RadialUnboundedness, Monotonicity],
        ],
        Theorem::InclusionExistence => &[&[FibreNonempty, RadialUnboundedness, FibreImageConvex]],
    }
}

/// Map check records to theorem tags.
pub fn theorem_applicability(checks: Vec<CheckRecord>, structure: StructureFlags) -> AnalysisReport {
    let verdict: BTreeMap<CheckName, Verdict> = checks.iter().map(|c| (c.name, c.verdict)).collect();
    let passes = |c: &CheckName| verdict.get(c) == Some(&Verdict::PassSampled);
    let applicability = [
        Theorem::Existence,
        Theorem::BlowUp,
        Theorem::ForwardComplete,
        Theorem::Uniqueness,
        Theorem::InclusionExistence,
    ]
    .into_iter()
    .map(|th| {
        let rs = routes(th);
        // the applicable route, or else the one with the fewest failures
        let best = rs
            .iter()
            .find(|r| r.iter().all(passes))
            .or_else(|| rs.iter().min_by_key(|r| r.iter().filter(|c| !passes(c)).count()))
            .expect("every theorem has a route");
        let (satisfied, violated): (Vec<CheckName>, Vec<CheckName>) = best.iter().partition(|c| passes(c));
        let assumed = match th {
            Theorem::Existence | Theorem::BlowUp | Theorem::InclusionExistence => {
                vec!["integrable bound on f along bounded sets".to_string()]
            }
            _ => vec![],
        };
        TheoremTag {
            theorem: th,
            applicable: violated.is_empty(),
            qualifier: "sampled".into(),
            satisfied,
            violated,
            assumed,
        }
    })
    .collect();
    let mut checks = checks;
    checks.sort_by_key(|c| c.name);
    AnalysisReport {
        structure,
        checks,
        applicability,
    }
}

impl AnalysisReport {
    pub fn verdicts(&self) -> BTreeMap<CheckName, Verdict> {
        self.checks.iter().map(|c| (c.name, c.verdict)).collect()
    }

    pub fn check(&self, name: CheckName) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn applies(&self, th: Theorem) -> bool {
        self.applicability.iter().any(|t| t.theorem == th && t.applicable)
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22} {:<13} {:>14}  witness", "check", "verdict", "margin")?;
        for c in &self.checks {
            let wit = match &c.witness {
                Some(w) => format!("t={} xi={:?}{}", w.t, w.xi, w.zeta.as_ref().map(|z| format!(" zeta={z:?}")).unwrap_or_default()),
                None => "-".into(),
            };
            writeln!(f, "{:<22} {:<13} {:>14.6e}  {}", c.name, c.verdict, c.margin, wit)?;
        }
        writeln!(f)?;
        for t in &self.applicability {
            let status = if t.applicable { "applies (sampled)" } else { "not established" };
            write!(f, "{:<20} {}", t.theorem, status)?;
            if !t.violated.is_empty() {
                let v: Vec<&str> = t.violated.iter().map(|c| c.as_str()).collect();
                write!(f, "; failing: {}", v.join(", "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
