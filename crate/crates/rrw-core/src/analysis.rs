//! End-to-end pipeline: validation, ratio conditions, decay-rate solve,
//! stationary build, product-form classification, and the final verdict.

use serde::Serialize;

use crate::geometry::{solve_eta, GeometricSolution, SolveEtaError, SolveOptions};
use crate::model::{validate, ReflectingWalkModel, TriState, ValidationReport};
use crate::reversal::{analyze_singular, SingularError, SingularSolution};
use crate::reversibility::{evaluate_conditions, ConditionReport, ConditionStatus};
use crate::stationary::{build_stationary, product_form_test, StationaryDistribution};

/// Outcome of the full analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Conditions hold; closed-form stationary distribution and reversed
    /// walk exist.
    StructureReversible,
    /// The free walk is not irreducible but the walk matches the singular
    /// pattern and its ratio conditions hold.
    Singular,
    NotStructureReversible,
    /// The document violates the model invariants.
    Invalid,
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    /// Relative tolerance for the ratio conditions and the solver's
    /// cross-checked faces. Machine-built models work at the 1e-9 default;
    /// published instances rounded to a few digits need about 1e-3.
    pub tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { tol: 1e-9 }
    }
}

/// Everything the pipeline learned about one model.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub label: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub validation: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<GeometricSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationaryDistribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_form: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular: Option<SingularSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversed_model_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_tv: Option<f64>,
}

impl AnalysisReport {
    pub fn exit_ok(&self) -> bool {
        matches!(
            self.verdict,
            Verdict::StructureReversible | Verdict::Singular
        )
    }
}

/// Runs the pipeline on a validated or raw model.
pub fn run_analysis(model: &ReflectingWalkModel, opts: AnalysisOptions) -> AnalysisReport {
    let validation = validate(model);
    let mut report = AnalysisReport {
        label: model.label.clone(),
        verdict: Verdict::Invalid,
        detail: None,
        validation,
        conditions: None,
        solution: None,
        stationary: None,
        product_form: None,
        singular: None,
        reversed_model_path: None,
        oracle_tv: None,
    };
    if !report.validation.ok {
        report.detail = Some("model violates face invariants".into());
        return report;
    }

    if !report.validation.free_walk_irreducible {
        match analyze_singular(model) {
            Ok(sol) => {
                report.stationary = Some(sol.stationary());
                report.singular = Some(sol);
                report.verdict = Verdict::Singular;
            }
            Err(SingularError::NotApplicable) => {
                report.verdict = Verdict::NotStructureReversible;
                report.detail = Some(
                    "free walk is not irreducible and the singular pattern does not apply".into(),
                );
            }
            Err(SingularError::NotStructureReversible(msg)) => {
                report.verdict = Verdict::NotStructureReversible;
                report.detail = Some(msg);
            }
        }
        return report;
    }

    if report.validation.chain_irreducible == TriState::No {
        report.verdict = Verdict::NotStructureReversible;
        report.detail = Some("the reflected chain is not irreducible".into());
        return report;
    }

    let conditions = evaluate_conditions(model, opts.tol);
    let ratio_ok = conditions.a1.status == ConditionStatus::Pass
        && conditions.a2.status == ConditionStatus::Pass
        && conditions.a3.status == ConditionStatus::Pass;
    let constants = conditions.constants;
    report.conditions = Some(conditions);
    if !ratio_ok {
        report.verdict = Verdict::NotStructureReversible;
        report.detail = Some("a ratio condition fails".into());
        return report;
    }
    let constants = constants.expect("constants exist when the ratio conditions pass");

    let solve_opts = SolveOptions {
        residual_tol: 1e-10,
        cross_tol: opts.tol,
    };
    match solve_eta(model, &constants, solve_opts) {
        Ok(solution) => {
            let dist = build_stationary(&constants, &solution)
                .expect("a passing model has a positive origin constant");
            report.stationary = Some(dist);
            report.product_form = Some(product_form_test(&constants, opts.tol));
            report.solution = Some(solution);
            report.verdict = Verdict::StructureReversible;
        }
        Err(err @ SolveEtaError::NoRoot) | Err(err @ SolveEtaError::CrossCheckFailed { .. }) => {
            report.verdict = Verdict::NotStructureReversible;
            report.detail = Some(err.to_string());
        }
    }
    report
}
