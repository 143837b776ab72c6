use std::collections::BTreeMap;

use groundstate::action;
use groundstate::algebraic;
use groundstate::reduction::{classify, MultistartOptions, Verdict};
use groundstate::{ProblemSpec, Support};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Axis, Param};

/// Two candidate actions closer than this are reported as a `boundary` row.
pub const TIE_TOL: f64 = 1e-9;
/// Relative tolerance when levels come from the discretized minimizer.
pub const NUMERICAL_TIE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub verdict: Verdict,
    /// Supports of the ground-states, joined with `|` when several.
    pub mask: String,
    /// Ground-state action in units of the scalar action at the smallest frequency.
    pub coeff: f64,
    pub label: String,
}

fn label_for(labels: &BTreeMap<String, String>, mask: &str) -> String {
    labels.get(mask).cloned().unwrap_or_else(|| mask.to_string())
}

/// Classifies one parameter point.
pub fn evaluate_point(
    spec: &ProblemSpec,
    labels: &BTreeMap<String, String>,
    opts: &MultistartOptions,
) -> groundstate::Result<(Verdict, String, f64, String)> {
    if spec.has_equal_omega() {
        let report = classify(spec, opts)?;
        let coeff = report.action_coeff(spec.p);
        if report.verdict == Verdict::NoGroundStates {
            return Ok((report.verdict, String::new(), coeff, "none".into()));
        }
        let mut masks = report.support_masks.clone();
        masks.sort();
        masks.dedup();
        let mask = masks.join("|");
        let mut tie = masks.len() > 1;
        if let Ok(cands) = algebraic::enumerate_candidates(spec, opts) {
            if let Some(best) = cands.solutions.first() {
                tie |= cands.solutions.iter().skip(1).any(|s| {
                    s.support != best.support
                        && (s.reduced_action_coeff - best.reduced_action_coeff).abs()
                            <= TIE_TOL * best.reduced_action_coeff.abs().max(1.0)
                });
            }
        }
        let label = if tie { "boundary".to_string() } else { label_for(labels, &mask) };
        return Ok((report.verdict, mask, coeff, label));
    }
    let m = spec.m;
    let full_level = action::action_level_with(spec, Support::full(m), opts)?;
    let (full, coeff) = (full_level.value, full_level.coeff);
    let mut proper: Vec<(Support, f64)> = Vec::new();
    let mut numerical = full_level.numerical;
    for s in Support::all_nonempty(m).filter(|s| !s.is_full(m)) {
        let level = action::action_level_with(spec, s, opts)?;
        numerical |= level.numerical;
        proper.push((s, level.value));
    }
    let sem = proper.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let tol = if numerical { NUMERICAL_TIE_TOL } else { TIE_TOL } * full.abs().max(1.0);
    // The full-support level already ranges over semitrivial fields, so it
    // equals the semitrivial level unless a nontrivial state is strictly cheaper.
    let verdict = if full.is_infinite() && sem.is_infinite() {
        Verdict::NoGroundStates
    } else if full < sem - tol {
        Verdict::AllNontrivial
    } else {
        Verdict::SemitrivialOnly
    };
    // Smallest supports attaining the semitrivial level.
    let attaining: Vec<Support> = proper.iter().filter(|(_, v)| (*v - sem).abs() <= tol).map(|(s, _)| *s).collect();
    let minimal: Vec<Support> =
        attaining.iter().filter(|s| !attaining.iter().any(|t| t != *s && t.is_subset_of(**s))).cloned().collect();
    let mask = match verdict {
        Verdict::NoGroundStates => String::new(),
        Verdict::AllNontrivial => Support::full(m).mask_string(m),
        _ => minimal.iter().map(|s| s.mask_string(m)).collect::<Vec<_>>().join("|"),
    };
    let label = match verdict {
        Verdict::NoGroundStates => "none".to_string(),
        _ if mask.contains('|') => "boundary".to_string(),
        _ => label_for(labels, &mask),
    };
    Ok((verdict, mask, coeff, label))
}

/// Evaluates the full grid (row-major in the axis order), in parallel.
pub fn run_sweep(
    base: &ProblemSpec,
    axes: &[(Param, Axis)],
    labels: &BTreeMap<String, String>,
    opts: &MultistartOptions,
) -> anyhow::Result<Vec<SweepRow>> {
    let grids: Vec<Vec<f64>> = axes.iter().map(|(_, a)| a.values()).collect();
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for g in &grids {
        points = points.into_iter().flat_map(|p| g.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    points
        .into_par_iter()
        .map(|values| {
            let mut spec = base.clone();
            for ((param, _), v) in axes.iter().zip(&values) {
                param.apply(&mut spec, *v)?;
            }
            let (verdict, mask, coeff, label) = evaluate_point(&spec, labels, opts)?;
            Ok(SweepRow { values, verdict, mask, coeff, label })
        })
        .collect()
}
