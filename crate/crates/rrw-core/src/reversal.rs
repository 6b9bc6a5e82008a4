//! Time reversal: kernel evaluation, assembly of the reversed walk, and the
//! singular regime.
//!
//! The reversed chain moves from `n` to `n'` with probability
//! `pi(n') P(n' -> n) / pi(n)`. Structure-reversibility means these rates
//! depend only on the face of `n` and the step `n' - n`; the certificate
//! below samples the kernel at representative states and compares rows.
//! Because `pi` is geometric on each region, agreement at the sampled states
//! forces agreement everywhere: the kernel entries are products of rate
//! powers determined by the step alone once the state is deep enough in its
//! region, and the sampled set covers every region plus the rows adjacent to
//! the boundary, where the remaining step patterns live.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Face, FaceDistribution, ReflectingWalkModel, Step};
use crate::stationary::StationaryDistribution;

/// Default tolerance for row sums and homogeneity discrepancies.
pub const DEFAULT_REVERSAL_TOL: f64 = 1e-10;

/// The reversed walk together with the worst homogeneity discrepancy seen
/// while certifying it.
#[derive(Debug, Clone, Serialize)]
pub struct ReversedModel {
    #[serde(skip)]
    pub model: ReflectingWalkModel,
    pub homogeneity_residual: f64,
}

#[derive(Debug, Error)]
pub enum ReversalError {
    #[error("stationary mass vanishes at ({0}, {1})")]
    ZeroMass(u64, u64),
    #[error(
        "reversed kernel is not homogeneous on face {face} \
         (stepwise discrepancy {residual:e}); the walk is not structure-reversible"
    )]
    NotHomogeneous { face: Face, residual: f64 },
    #[error("supplied distribution is not stationary (row sum {sum} at ({n1}, {n2}))")]
    NotStationary { n1: u64, n2: u64, sum: f64 },
}

/// One row of the reversed kernel: step -> probability at the given state.
pub fn reversed_kernel_at(
    model: &ReflectingWalkModel,
    dist: &StationaryDistribution,
    state: (u64, u64),
) -> Result<BTreeMap<Step, f64>, ReversalError> {
    let (n1, n2) = state;
    let here = dist.pi_at(n1, n2);
    if here.is_nan() || here <= 0.0 {
        return Err(ReversalError::ZeroMass(n1, n2));
    }
    let mut row = BTreeMap::new();
    for di in -1i8..=1 {
        for dj in -1i8..=1 {
            let m1 = n1 as i64 + di as i64;
            let m2 = n2 as i64 + dj as i64;
            if m1 < 0 || m2 < 0 {
                continue;
            }
            let (m1, m2) = (m1 as u64, m2 as u64);
            let p = model.transition((m1, m2), (n1, n2));
            if p > 0.0 {
                row.insert(
                    Step::new(di, dj).expect("skip-free step"),
                    dist.pi_at(m1, m2) * p / here,
                );
            }
        }
    }
    Ok(row)
}

fn row_discrepancy(a: &BTreeMap<Step, f64>, b: &BTreeMap<Step, f64>) -> f64 {
    let mut worst = 0.0f64;
    for step in Step::all() {
        let va = a.get(&step).copied().unwrap_or(0.0);
        let vb = b.get(&step).copied().unwrap_or(0.0);
        worst = worst.max((va - vb).abs());
    }
    worst
}

/// States at which each face's reversed kernel is sampled. Coordinates sit at
/// three or more so every neighbor lies in the claimed-homogeneous regions;
/// the interior list includes the rows next to each axis, which is where a
/// non-structure-reversible walk betrays itself.
const INTERIOR_STATES: [(u64, u64); 4] = [(3, 3), (4, 5), (4, 1), (1, 4)];
const HORIZONTAL_STATES: [(u64, u64); 2] = [(3, 0), (5, 0)];
const VERTICAL_STATES: [(u64, u64); 2] = [(0, 3), (0, 5)];

/// Builds the time-reversed walk and certifies it is a reflecting random
/// walk. Fails with [`ReversalError::NotHomogeneous`] when the sampled rows
/// disagree beyond `tol`, which signals the original walk is not
/// structure-reversible even though a stationary distribution was supplied.
pub fn build_reversed_model(
    model: &ReflectingWalkModel,
    dist: &StationaryDistribution,
    tol: f64,
) -> Result<ReversedModel, ReversalError> {
    let mut residual = 0.0f64;
    let mut face_rows: Vec<(Face, BTreeMap<Step, f64>)> = Vec::with_capacity(4);
    for (face, states) in [
        (Face::Interior, &INTERIOR_STATES[..]),
        (Face::Horizontal, &HORIZONTAL_STATES[..]),
        (Face::Vertical, &VERTICAL_STATES[..]),
        (Face::Origin, &[(0, 0)][..]),
    ] {
        let base = reversed_kernel_at(model, dist, states[0])?;
        let sum: f64 = base.values().sum();
        if (sum - 1.0).abs() > tol.max(1e-10) {
            return Err(ReversalError::NotStationary {
                n1: states[0].0,
                n2: states[0].1,
                sum,
            });
        }
        let mut face_residual = 0.0f64;
        for &state in &states[1..] {
            let other = reversed_kernel_at(model, dist, state)?;
            face_residual = face_residual.max(row_discrepancy(&base, &other));
        }
        if face_residual > tol {
            return Err(ReversalError::NotHomogeneous {
                face,
                residual: face_residual,
            });
        }
        residual = residual.max(face_residual);
        face_rows.push((face, base));
    }

    let build = |face: Face, row: &BTreeMap<Step, f64>| {
        let total: f64 = row.values().sum();
        FaceDistribution::new(face, row.iter().map(|(&s, &p)| (s, p / total)))
    };
    let find = |face: Face| {
        face_rows
            .iter()
            .find(|(f, _)| *f == face)
            .map(|(_, row)| row)
            .expect("all faces sampled")
    };
    let reversed = ReflectingWalkModel {
        label: format!("{} (time reversed)", model.label),
        p0: build(Face::Origin, find(Face::Origin)),
        p1: build(Face::Horizontal, find(Face::Horizontal)),
        p2: build(Face::Vertical, find(Face::Vertical)),
        pplus: build(Face::Interior, find(Face::Interior)),
    };
    Ok(ReversedModel {
        model: reversed,
        homogeneity_residual: residual,
    })
}

/// Serializes a reversed model: entries rounded to 15 significant digits,
/// then the largest entry of each face adjusted so the face sums to exactly
/// one again.
pub fn reversed_model_document(reversed: &ReversedModel, note: Option<&str>) -> String {
    let round15 = |x: f64| -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        format!("{x:.*e}", 14).parse().unwrap_or(x)
    };
    let fix_face = |d: &FaceDistribution| -> FaceDistribution {
        let mut entries: Vec<(Step, f64)> = d.entries().map(|(s, p)| (s, round15(p))).collect();
        if let Some(largest) = entries
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(k, _)| k)
        {
            for _ in 0..4 {
                let others: f64 = entries
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != largest)
                    .map(|(_, (_, p))| *p)
                    .sum();
                entries[largest].1 = 1.0 - others;
                let total: f64 = entries.iter().map(|(_, p)| *p).sum();
                if total == 1.0 {
                    break;
                }
            }
        }
        FaceDistribution::new(d.face, entries)
    };
    let model = ReflectingWalkModel {
        label: reversed.model.label.clone(),
        p0: fix_face(&reversed.model.p0),
        p1: fix_face(&reversed.model.p1),
        p2: fix_face(&reversed.model.p2),
        pplus: fix_face(&reversed.model.pplus),
    };
    crate::model::serialize_model(&model, note)
}

/// Rates and constants of a singular walk (interior steps along one axis
/// only). When `transposed` is set the fields describe the coordinate-swapped
/// walk; [`SingularSolution::stationary`] undoes the swap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SingularSolution {
    pub eta1: f64,
    pub eta2: f64,
    pub alpha1: f64,
    pub c2plus: f64,
    pub c10: f64,
    pub c20: f64,
    pub required_zeros_ok: bool,
    pub transposed: bool,
}

#[derive(Debug, Error)]
pub enum SingularError {
    #[error("model does not match the singular pattern")]
    NotApplicable,
    #[error("singular pattern matched but the walk is not structure-reversible: {0}")]
    NotStructureReversible(String),
}

impl SingularSolution {
    /// Closed-form stationary distribution: rate `alpha1` on the axis the
    /// interior runs parallel to, `eta` rates elsewhere.
    pub fn stationary(&self) -> StationaryDistribution {
        let (k_h, k_v) = (self.c10, self.c20);
        let k_int = self.c20 * self.c2plus;
        let dist = if self.transposed {
            StationaryDistribution::from_parts(
                self.eta2,
                self.eta1,
                k_v,
                k_h,
                k_int,
                self.eta2,
                self.alpha1,
            )
        } else {
            StationaryDistribution::from_parts(
                self.eta1,
                self.eta2,
                k_h,
                k_v,
                k_int,
                self.alpha1,
                self.eta2,
            )
        };
        dist.expect("singular rates verified in (0,1)")
    }
}

fn analyze_singular_direct(model: &ReflectingWalkModel) -> Result<SingularSolution, SingularError> {
    let p = &model.pplus;
    let horizontal_only = (-1..=1).all(|i| p.p(i, 1) == 0.0 && p.p(i, -1) == 0.0);
    let full_line = p.p(-1, 0) > 0.0 && p.p(0, 0) > 0.0 && p.p(1, 0) > 0.0;
    if !horizontal_only || !full_line {
        return Err(SingularError::NotApplicable);
    }
    let fail = |msg: String| Err(SingularError::NotStructureReversible(msg));
    for i in -1..=1 {
        if model.p1.p(i, 1) != 0.0 {
            return fail(format!("p1[{i},1] must vanish"));
        }
    }
    for j in [-1, 1] {
        if model.p2.p(1, j) != 0.0 {
            return fail(format!("p2[1,{j}] must vanish"));
        }
    }
    if model.p0.p(1, 1) != 0.0 {
        return fail("p0[1,1] must vanish".into());
    }
    for (name, v) in [
        ("p1[1,0]", model.p1.p(1, 0)),
        ("p1[-1,0]", model.p1.p(-1, 0)),
        ("p2[0,1]", model.p2.p(0, 1)),
        ("p2[0,-1]", model.p2.p(0, -1)),
        ("p2[1,0]", model.p2.p(1, 0)),
        ("p0[1,0]", model.p0.p(1, 0)),
        ("p0[0,1]", model.p0.p(0, 1)),
    ] {
        if v == 0.0 {
            return fail(format!("{name} must be positive"));
        }
    }
    let eta1 = p.p(1, 0) / p.p(-1, 0);
    let eta2 = model.p2.p(0, 1) / model.p2.p(0, -1);
    let alpha1 = model.p1.p(1, 0) / model.p1.p(-1, 0);
    for (name, rate) in [("eta1", eta1), ("eta2", eta2), ("alpha1", alpha1)] {
        if !(0.0 < rate && rate < 1.0) {
            return fail(format!("{name} = {rate} outside (0,1)"));
        }
    }
    Ok(SingularSolution {
        eta1,
        eta2,
        alpha1,
        c2plus: model.p2.p(1, 0) / p.p(1, 0),
        c10: model.p0.p(1, 0) / model.p1.p(1, 0),
        c20: model.p0.p(0, 1) / model.p2.p(0, 1),
        required_zeros_ok: true,
        transposed: false,
    })
}

/// Analyzes the singular regime. The published pattern has horizontal-only
/// interior steps; the vertical-only mirror image is handled through the
/// coordinate swap.
pub fn analyze_singular(model: &ReflectingWalkModel) -> Result<SingularSolution, SingularError> {
    match analyze_singular_direct(model) {
        Err(SingularError::NotApplicable) => {
            let flipped = model.transpose();
            let mut sol = analyze_singular_direct(&flipped)?;
            sol.transposed = true;
            Ok(sol)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{solve_eta, SolveOptions};
    use crate::model::{parse_model, validate};
    use crate::oracle;
    use crate::presets;
    use crate::reversibility::{
        boundary_origin_constants, face_interior_constants, ReversibilityConstants,
    };
    use crate::stationary::build_stationary;

    fn solved(model: &ReflectingWalkModel, tol: f64) -> StationaryDistribution {
        let (c1, c2) = face_interior_constants(model, tol).unwrap();
        let (c10, c20) = boundary_origin_constants(model, tol).unwrap();
        let constants = ReversibilityConstants::new(c1, c2, c10, c20, tol);
        let sol = solve_eta(
            model,
            &constants,
            SolveOptions {
                residual_tol: 1e-10,
                cross_tol: tol.max(1e-9),
            },
        )
        .unwrap();
        build_stationary(&constants, &sol).unwrap()
    }

    #[test]
    fn reversible_birth_death_kernel_equals_forward_kernel() {
        // Axis-step-only walk satisfying detailed balance with product
        // geometric rates (0.1/0.3, 0.15/0.25): its reversal is itself.
        let step = |i, j| Step::new(i, j).unwrap();
        let model = ReflectingWalkModel {
            label: "birth-death".into(),
            p0: FaceDistribution::new(
                Face::Origin,
                [(step(1, 0), 0.1), (step(0, 1), 0.15), (step(0, 0), 0.75)],
            ),
            p1: FaceDistribution::new(
                Face::Horizontal,
                [
                    (step(1, 0), 0.1),
                    (step(-1, 0), 0.3),
                    (step(0, 1), 0.15),
                    (step(0, 0), 0.45),
                ],
            ),
            p2: FaceDistribution::new(
                Face::Vertical,
                [
                    (step(0, 1), 0.15),
                    (step(0, -1), 0.25),
                    (step(1, 0), 0.1),
                    (step(0, 0), 0.5),
                ],
            ),
            pplus: FaceDistribution::new(
                Face::Interior,
                [
                    (step(1, 0), 0.1),
                    (step(-1, 0), 0.3),
                    (step(0, 1), 0.15),
                    (step(0, -1), 0.25),
                    (step(0, 0), 0.2),
                ],
            ),
        };
        let dist = StationaryDistribution::product_form(1.0 / 3.0, 0.6, 1.0, 1.0).unwrap();
        let row = reversed_kernel_at(&model, &dist, (3, 3)).unwrap();
        for s in Step::all() {
            let got = row.get(&s).copied().unwrap_or(0.0);
            let forward = model.pplus.get(s);
            assert!(
                (got - forward).abs() < 1e-15,
                "step {s}: {got} vs {forward}"
            );
        }
        // The assembled reversal reproduces the model itself.
        let reversed = build_reversed_model(&model, &dist, 1e-12).unwrap();
        for face in Face::all() {
            for s in Step::all() {
                let a = model.face(face).get(s);
                let b = reversed.model.face(face).get(s);
                assert!((a - b).abs() < 1e-13, "face {face} step {s}");
            }
        }
    }

    #[test]
    fn interior_kernel_matches_rate_powers() {
        let model = presets::published_instance("jackson-extra-5.10").unwrap();
        let dist = solved(&model, 1e-3);
        let row = reversed_kernel_at(&model, &dist, (5, 5)).unwrap();
        for step in Step::all() {
            let expected = dist.eta1.powi(step.i as i32)
                * dist.eta2.powi(step.j as i32)
                * model.pplus.get(step.negated());
            let got = row.get(&step).copied().unwrap_or(0.0);
            assert!(
                (got - expected).abs() < 1e-13,
                "step {step}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn kernel_rows_sum_to_one_on_the_axis() {
        let model = presets::published_instance("jackson-extra-5.10").unwrap();
        let dist = solved(&model, 1e-3);
        let row = reversed_kernel_at(&model, &dist, (4, 0)).unwrap();
        let sum: f64 = row.values().sum();
        assert!((sum - 1.0).abs() <= 1e-10, "sum {sum}");
    }

    #[test]
    fn reversed_jackson_faces_are_stochastic() {
        let model = presets::jackson(&presets::dyadic_jackson_parameters());
        let dist = solved(&model, 1e-9);
        let reversed = build_reversed_model(&model, &dist, 1e-9).unwrap();
        assert!(reversed.homogeneity_residual <= 1e-12);
        let report = validate(&reversed.model);
        assert!(report.ok, "{:?}", report.violations);
    }

    #[test]
    fn appendix_d_is_not_homogeneous() {
        let model = presets::published_instance("appendixD-product-nonreversible").unwrap();
        // Product-form prefactors recovered from the axis balance equations.
        let (eta1, eta2): (f64, f64) = (0.3, 0.2);
        let k_v = {
            let axis: f64 = (-1..=1)
                .map(|i| model.p1.p(i, 0) * eta1.powi(-i as i32))
                .sum();
            let inflow: f64 = (-1..=1)
                .map(|i| model.pplus.p(i, -1) * eta1.powi(-i as i32))
                .sum();
            (1.0 - axis) / (eta2 * inflow)
        };
        let k_h = {
            let axis: f64 = (-1..=1)
                .map(|j| model.p2.p(0, j) * eta2.powi(-j as i32))
                .sum();
            let inflow: f64 = (-1..=1)
                .map(|j| model.pplus.p(-1, j) * eta2.powi(-j as i32))
                .sum();
            (1.0 - axis) / (eta1 * inflow)
        };
        let dist = StationaryDistribution::product_form(eta1, eta2, k_h, k_v).unwrap();
        match build_reversed_model(&model, &dist, 1e-9) {
            Err(ReversalError::NotHomogeneous { face, residual }) => {
                assert_eq!(face, Face::Interior);
                assert!(residual > 1e-3, "residual {residual:e}");
            }
            other => panic!("expected NotHomogeneous, got {other:?}"),
        }
    }

    #[test]
    fn double_reversal_recovers_the_model() {
        for (name, tol) in [("jackson-extra-5.10", 1e-3)] {
            let model = presets::published_instance(name).unwrap();
            let dist = solved(&model, tol);
            let reversed = build_reversed_model(&model, &dist, 1e-9).unwrap();
            let back = build_reversed_model(&reversed.model, &dist, 1e-9).unwrap();
            for face in Face::all() {
                for step in Step::all() {
                    let a = model.face(face).get(step);
                    let b = back.model.face(face).get(step);
                    assert!(
                        (a - b).abs() <= 1e-10,
                        "{name} face {face} step {step}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn reversed_model_is_structure_reversible_with_the_same_rates() {
        let model = presets::published_instance("jackson-extra-5.10").unwrap();
        let dist = solved(&model, 1e-3);
        let reversed = build_reversed_model(&model, &dist, 1e-9).unwrap();
        let report = crate::analysis::run_analysis(
            &reversed.model,
            crate::analysis::AnalysisOptions { tol: 1e-6 },
        );
        assert_eq!(
            report.verdict,
            crate::analysis::Verdict::StructureReversible
        );
        let again = report.stationary.unwrap();
        assert!((again.eta1 - dist.eta1).abs() < 1e-10);
        assert!((again.eta2 - dist.eta2).abs() < 1e-10);
    }

    #[test]
    fn reversed_model_document_round_trips() {
        let model = presets::jackson(&presets::dyadic_jackson_parameters());
        let dist = solved(&model, 1e-9);
        let reversed = build_reversed_model(&model, &dist, 1e-9).unwrap();
        let text = reversed_model_document(&reversed, None);
        let parsed = parse_model(&text).unwrap();
        let report = validate(&parsed);
        assert!(report.ok, "{:?}", report.violations);
        for face in Face::all() {
            assert_eq!(parsed.face(face).sum(), 1.0, "face {face}");
            for step in Step::all() {
                let a = reversed.model.face(face).get(step);
                let b = parsed.face(face).get(step);
                assert!((a - b).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn singular_demo_rates() {
        let model = presets::published_instance("singular-A-demo").unwrap();
        let sol = analyze_singular(&model).unwrap();
        assert_eq!(sol.eta1, 0.4);
        assert!((sol.eta2 - 1.0 / 3.0).abs() <= f64::EPSILON);
        assert_eq!(sol.alpha1, 0.5);
        assert_eq!(sol.c2plus, 0.5);
        assert_eq!(sol.c10, 1.0);
        assert_eq!(sol.c20, 2.0);
        assert!(sol.required_zeros_ok);
        assert!(!sol.transposed);
    }

    #[test]
    fn singular_demo_stationary_matches_oracle() {
        let model = presets::published_instance("singular-A-demo").unwrap();
        let sol = analyze_singular(&model).unwrap();
        let dist = sol.stationary();
        assert!((dist.pi00 - 0.3).abs() < 1e-14);
        let grid =
            oracle::truncated_stationary(&model, 40, oracle::PowerIterationOptions::default())
                .unwrap();
        let closed = oracle::closed_form_grid(&dist, 40);
        let tv = oracle::total_variation(&grid, &closed, (20, 20)).unwrap();
        assert!(tv <= 1e-6, "tv {tv:e}");
    }

    #[test]
    fn singular_reversal_round_trips() {
        let model = presets::published_instance("singular-A-demo").unwrap();
        let dist = analyze_singular(&model).unwrap().stationary();
        let reversed = build_reversed_model(&model, &dist, 1e-12).unwrap();
        let back = build_reversed_model(&reversed.model, &dist, 1e-12).unwrap();
        for face in Face::all() {
            for step in Step::all() {
                let a = model.face(face).get(step);
                let b = back.model.face(face).get(step);
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn singular_rejects_forbidden_upward_axis_mass() {
        let model = presets::published_instance("singular-A-demo").unwrap();
        let mut bad = model.clone();
        let moved: Vec<(Step, f64)> = bad
            .p1
            .entries()
            .map(|(s, p)| {
                if s == Step::new(0, 0).unwrap() {
                    (Step::new(0, 1).unwrap(), p)
                } else {
                    (s, p)
                }
            })
            .collect();
        bad.p1 = FaceDistribution::new(Face::Horizontal, moved);
        assert!(matches!(
            analyze_singular(&bad),
            Err(SingularError::NotStructureReversible(_))
        ));
    }

    #[test]
    fn nonsingular_interior_is_not_applicable() {
        let model = crate::testutil::symmetric_simple_walk();
        assert!(matches!(
            analyze_singular(&model),
            Err(SingularError::NotApplicable)
        ));
    }

    #[test]
    fn transposed_singular_pattern_is_recognized() {
        let model = presets::published_instance("singular-A-demo")
            .unwrap()
            .transpose();
        let sol = analyze_singular(&model).unwrap();
        assert!(sol.transposed);
        let dist = sol.stationary();
        // Interior rates swap; the alpha rate moves to the vertical axis.
        assert!((dist.eta1 - 1.0 / 3.0).abs() <= f64::EPSILON);
        assert_eq!(dist.eta2, 0.4);
        assert_eq!(dist.axis2_rate, 0.5);
        let grid =
            oracle::truncated_stationary(&model, 40, oracle::PowerIterationOptions::default())
                .unwrap();
        let closed = oracle::closed_form_grid(&dist, 40);
        let tv = oracle::total_variation(&grid, &closed, (20, 20)).unwrap();
        assert!(tv <= 1e-6, "tv {tv:e}");
    }
}
