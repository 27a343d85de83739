//! Reproduce a catalog entry: simulate against its reference and compare the
//! analyzer verdicts with the expected table.

use std::fmt;

use serde::Serialize;

use super::entries::{build_example, CatalogEntry, Reference, ReferenceBranch};
use crate::analyzer::{analyze, verify_witness, AnalyzerOptions};
use crate::error::Result;
use crate::inclusion::{simulate_inclusion, InclusionOptions};
use crate::integrator::{compare_to_reference, refine_escape_time, simulate, SimOptions, TerminationKind, TrajectoryRecord};

/// One measured quantity and its acceptance bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyItem {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub example: String,
    pub items: Vec<VerifyItem>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "example {}", self.example)?;
        for i in &self.items {
            writeln!(
                f,
                "  [{}] {:<32} measured {:<14.6e} tolerance {:<10.3e} {}",
                if i.passed { "pass" } else { "FAIL" },
                i.name,
                i.measured,
                i.tolerance,
                i.detail
            )?;
        }
        write!(f, "  overall: {}", if self.passed() { "pass" } else { "FAIL" })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyOptions {
    pub analyzer: AnalyzerOptions,
    /// Skip the analyzer part.
    pub skip_analysis: bool,
}

fn item(name: impl Into<String>, passed: bool, measured: f64, tolerance: f64, detail: impl Into<String>) -> VerifyItem {
    VerifyItem {
        name: name.into(),
        passed,
        measured,
        tolerance,
        detail: detail.into(),
    }
}

/// Simulation options used for an entry's reference run.
pub fn entry_sim_options(entry: &CatalogEntry) -> SimOptions {
    SimOptions {
        method: entry.method,
        dt: entry.dt,
        tmax: entry.tmax,
        ..SimOptions::default()
    }
}

/// Run the simulator that reproduces `branch`.
pub fn simulate_branch(entry: &CatalogEntry, branch: &ReferenceBranch) -> Result<TrajectoryRecord<f64>> {
    let sim = entry_sim_options(entry);
    match &branch.policy {
        None => simulate(&entry.system, entry.t0, &entry.x0, &sim),
        Some((initial, follow)) => {
            let opts = InclusionOptions {
                continuation: Some(follow.clone()),
                sim,
                ..InclusionOptions::default()
            };
            simulate_inclusion(&entry.system, entry.t0, &entry.x0, initial, &opts)
        }
    }
}

fn check_reference(entry: &CatalogEntry, r: &Reference, items: &mut Vec<VerifyItem>) -> Result<()> {
    let sim = entry_sim_options(entry);
    if r.branches.is_empty() {
        let rec = simulate(&entry.system, entry.t0, &entry.x0, &sim)?;
        let kind = rec.termination.kind();
        items.push(item(
            "termination",
            kind == r.termination && rec.is_empty(),
            rec.len() as f64,
            0.0,
            format!("{kind:?} with {} samples", rec.len()),
        ));
        return Ok(());
    }
    let mut finals = Vec::new();
    for br in &r.branches {
        let rec = simulate_branch(entry, br)?;
        let kind = rec.termination.kind();
        items.push(item(
            format!("termination [{}]", br.label),
            kind == r.termination,
            rec.termination.time().unwrap_or(rec.last_time().unwrap_or(entry.t0)),
            0.0,
            format!("{kind:?}"),
        ));
        let reference = |t: f64| ((br.x)(t), (br.y)(t));
        let m = compare_to_reference(&rec, r.compare, &reference)?;
        items.push(item(
            format!("sup |x - x_ref| [{}]", br.label),
            m.max_x_error < r.tolerance,
            m.max_x_error,
            r.tolerance,
            format!("worst at t = {:.6}, {} samples", m.worst_time, m.samples),
        ));
        if let Some(tau) = r.escape_time {
            let est = match r.termination {
                TerminationKind::BlowUp => refine_escape_time(&rec, &entry.system, &sim)?.t,
                _ => match rec.termination {
                    crate::integrator::Termination::NoOutputSolution { bracket, .. } => 0.5 * (bracket[0] + bracket[1]),
                    ref other => other.time().unwrap_or(f64::NAN),
                },
            };
            let err = (est - tau).abs();
            items.push(item(
                format!("escape time [{}]", br.label),
                err <= r.escape_tolerance,
                err,
                r.escape_tolerance,
                format!("estimate {est:.6}, expected {tau:.6}"),
            ));
        }
        finals.push(rec);
    }
    if finals.len() == 2 {
        let (a, b) = (&finals[0], &finals[1]);
        let n = a.len().min(b.len());
        let gap = (0..n)
            .map(|k| crate::linalg::dist(&a.x[k], &b.x[k]))
            .fold(0.0, f64::max);
        items.push(item("branch separation", gap > 0.1, gap, 0.1, "sup distance of the two branches"));
    }
    Ok(())
}

/// Build `name`, simulate its reference branches and compare the analyzer
/// verdicts with the expected table.
pub fn verify_example(name: &str, opts: &VerifyOptions) -> Result<VerificationReport> {
    let entry = build_example(name)?;
    verify_entry(&entry, opts)
}

pub fn verify_entry(entry: &CatalogEntry, opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut items = Vec::new();
    if let Some(r) = &entry.reference {
        let end = if r.domain[1].is_finite() { r.domain[1] } else { entry.tmax };
        let res = r
            .branches
            .iter()
            .map(|b| super::entries::reference_residual(entry, b, [r.domain[0], end]))
            .fold(0.0, f64::max);
        items.push(item("reference self-check", res <= 1e-9, res, 1e-9, "relative residual"));
        check_reference(entry, r, &mut items)?;
    }
    if !opts.skip_analysis {
        if let Some(expected) = &entry.expected_verdicts {
            let report = analyze(&entry.system, &opts.analyzer)?;
            let got = report.verdicts();
            for (name, want) in expected {
                let have = got.get(name).copied();
                items.push(item(
                    format!("verdict {name}"),
                    have == Some(*want),
                    0.0,
                    0.0,
                    format!("expected {want}, got {}", have.map_or("-".into(), |v| v.to_string())),
                ));
            }
            let reproducible = report
                .checks
                .iter()
                .map(|c| verify_witness(&entry.system, &opts.analyzer, c))
                .collect::<Result<Vec<bool>>>()?;
            let bad = reproducible.iter().filter(|ok| !**ok).count();
            items.push(item("witness reproducibility", bad == 0, bad as f64, 0.0, "failing witnesses"));
        }
    }
    Ok(VerificationReport {
        example: entry.name.clone(),
        items,
    })
}
