//! Concrete model families: the discrete-time two-node Jackson network, its
//! flexible-boundary variant with extra arrivals at empty nodes, and the
//! frozen published instances used by the acceptance suite.
//!
//! In the discrete-time Jackson network one event happens per slot: an
//! exogenous arrival at node 1 or 2 (probability `lambda1`, `lambda2`) or a
//! service completion at node 1 or 2 (probability `mu1`, `mu2`), the served
//! customer leaving (routing `r_k0`), feeding back (`r_kk`), or moving to the
//! other node. A service drawn at an empty node does nothing, which is where
//! the boundary faces pick up their extra diagonal mass.

use serde::Serialize;
use thiserror::Error;

use crate::model::{Face, FaceDistribution, ReflectingWalkModel, Step};

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("negative probability in assembled face: {0}")]
    NegativeProbability(String),
    #[error("degenerate routing table (determinant {0} <= 0)")]
    DegenerateRouting(f64),
    #[error("unknown instance {0:?}")]
    UnknownInstance(String),
}

/// Parameters of the discrete-time Jackson network.
///
/// `lambda1 + lambda2 + mu1 + mu2 = 1` and each routing row sums to one. The
/// feedback probabilities `r11`, `r22` may be zero; every other entry must be
/// strictly positive.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JacksonParameters {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub r10: f64,
    pub r11: f64,
    pub r12: f64,
    pub r20: f64,
    pub r21: f64,
    pub r22: f64,
}

impl JacksonParameters {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lambda1: f64,
        lambda2: f64,
        mu1: f64,
        mu2: f64,
        r1: (f64, f64, f64),
        r2: (f64, f64, f64),
    ) -> Result<Self, PresetError> {
        let p = JacksonParameters {
            lambda1,
            lambda2,
            mu1,
            mu2,
            r10: r1.0,
            r11: r1.1,
            r12: r1.2,
            r20: r2.0,
            r21: r2.1,
            r22: r2.2,
        };
        let err = |msg: String| Err(PresetError::InvalidParameters(msg));
        for (name, v) in [
            ("lambda1", lambda1),
            ("lambda2", lambda2),
            ("mu1", mu1),
            ("mu2", mu2),
            ("r10", p.r10),
            ("r12", p.r12),
            ("r20", p.r20),
            ("r21", p.r21),
        ] {
            if v.is_nan() || v <= 0.0 {
                return err(format!("{name} must be positive, got {v}"));
            }
        }
        if p.r11 < 0.0 || p.r22 < 0.0 {
            return err("feedback probabilities must be nonnegative".to_string());
        }
        let s = lambda1 + lambda2 + mu1 + mu2;
        if (s - 1.0).abs() > 1e-12 {
            return err(format!("lambda1+lambda2+mu1+mu2 = {s}, must be 1"));
        }
        let s1 = p.r10 + p.r11 + p.r12;
        let s2 = p.r20 + p.r21 + p.r22;
        if (s1 - 1.0).abs() > 1e-12 || (s2 - 1.0).abs() > 1e-12 {
            return err(format!("routing rows sum to {s1} and {s2}, must be 1"));
        }
        Ok(p)
    }
}

/// Throughputs and utilizations solving the traffic equations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrafficSolution {
    pub alpha1: f64,
    pub alpha2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub stable: bool,
}

/// Solves the two-node traffic equations
/// `alpha1 = lambda1 + alpha2 r21 + alpha1 r11`,
/// `alpha2 = lambda2 + alpha1 r12 + alpha2 r22`
/// as a 2x2 linear system.
pub fn solve_traffic(params: &JacksonParameters) -> Result<TrafficSolution, PresetError> {
    let det = (1.0 - params.r11) * (1.0 - params.r22) - params.r12 * params.r21;
    if det <= 0.0 {
        return Err(PresetError::DegenerateRouting(det));
    }
    let alpha1 = (params.lambda1 * (1.0 - params.r22) + params.lambda2 * params.r21) / det;
    let alpha2 = (params.lambda2 * (1.0 - params.r11) + params.lambda1 * params.r12) / det;
    debug_assert!(
        (alpha1 - (params.lambda1 + alpha2 * params.r21 + alpha1 * params.r11)).abs() <= 1e-12
    );
    debug_assert!(
        (alpha2 - (params.lambda2 + alpha1 * params.r12 + alpha2 * params.r22)).abs() <= 1e-12
    );
    let rho1 = alpha1 / params.mu1;
    let rho2 = alpha2 / params.mu2;
    Ok(TrafficSolution {
        alpha1,
        alpha2,
        rho1,
        rho2,
        stable: rho1 < 1.0 && rho2 < 1.0,
    })
}

fn step(i: i8, j: i8) -> Step {
    Step::new(i, j).expect("skip-free step")
}

fn interior_face(p: &JacksonParameters) -> FaceDistribution {
    FaceDistribution::new(
        Face::Interior,
        [
            (step(1, 0), p.lambda1),
            (step(0, 1), p.lambda2),
            (step(-1, 0), p.mu1 * p.r10),
            (step(-1, 1), p.mu1 * p.r12),
            (step(0, -1), p.mu2 * p.r20),
            (step(1, -1), p.mu2 * p.r21),
            (step(0, 0), p.mu1 * p.r11 + p.mu2 * p.r22),
        ],
    )
}

/// The plain discrete-time Jackson network as a reflecting random walk.
pub fn jackson(p: &JacksonParameters) -> ReflectingWalkModel {
    ReflectingWalkModel {
        label: "discrete-time Jackson network".into(),
        p0: FaceDistribution::new(
            Face::Origin,
            [
                (step(1, 0), p.lambda1),
                (step(0, 1), p.lambda2),
                (step(0, 0), p.mu1 + p.mu2),
            ],
        ),
        p1: FaceDistribution::new(
            Face::Horizontal,
            [
                (step(1, 0), p.lambda1),
                (step(0, 1), p.lambda2),
                (step(-1, 0), p.mu1 * p.r10),
                (step(-1, 1), p.mu1 * p.r12),
                (step(0, 0), p.mu1 * p.r11 + p.mu2),
            ],
        ),
        p2: FaceDistribution::new(
            Face::Vertical,
            [
                (step(1, 0), p.lambda1),
                (step(0, 1), p.lambda2),
                (step(0, -1), p.mu2 * p.r20),
                (step(1, -1), p.mu2 * p.r21),
                (step(0, 0), p.mu1 + p.mu2 * p.r22),
            ],
        ),
        pplus: interior_face(p),
    }
}

/// Jackson network with extra arrivals at empty nodes.
///
/// `lambda2_1` is the extra arrival stream at node 2 while node 2 is empty
/// (active on the horizontal axis), `lambda1_2` the mirror image, and
/// `lambda1_0`, `lambda2_0` the extra streams at the empty system. A served
/// customer that would feed back at an empty partner node is routed across
/// instead, which lumps `r12 + r11` into one boundary step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExtraArrivalParameters {
    pub base: JacksonParameters,
    pub lambda2_1: f64,
    pub lambda1_2: f64,
    pub lambda1_0: f64,
    pub lambda2_0: f64,
}

impl ExtraArrivalParameters {
    pub fn new(
        base: JacksonParameters,
        lambda2_1: f64,
        lambda1_2: f64,
        lambda1_0: f64,
        lambda2_0: f64,
    ) -> Result<Self, PresetError> {
        let err = |msg: String| Err(PresetError::InvalidParameters(msg));
        if !(0.0..=base.mu2).contains(&lambda2_1) {
            return err(format!("lambda2_1 = {lambda2_1} outside [0, mu2]"));
        }
        if !(0.0..=base.mu1).contains(&lambda1_2) {
            return err(format!("lambda1_2 = {lambda1_2} outside [0, mu1]"));
        }
        if lambda1_0 < 0.0 || lambda2_0 < 0.0 || lambda1_0 + lambda2_0 > base.mu1 + base.mu2 {
            return err(format!(
                "lambda1_0 + lambda2_0 = {} outside [0, mu1 + mu2]",
                lambda1_0 + lambda2_0
            ));
        }
        Ok(ExtraArrivalParameters {
            base,
            lambda2_1,
            lambda1_2,
            lambda1_0,
            lambda2_0,
        })
    }
}

/// Builds the extra-arrival network from its parameters.
pub fn jackson_extra_arrivals(
    p: &ExtraArrivalParameters,
) -> Result<ReflectingWalkModel, PresetError> {
    let b = &p.base;
    for (name, v) in [
        ("p1[0,0]", b.mu2 - p.lambda2_1),
        ("p2[0,0]", b.mu1 - p.lambda1_2),
        ("p0[0,0]", b.mu1 + b.mu2 - p.lambda1_0 - p.lambda2_0),
    ] {
        if v < 0.0 {
            return Err(PresetError::NegativeProbability(format!("{name} = {v}")));
        }
    }
    Ok(ReflectingWalkModel {
        label: "Jackson network with extra arrivals at empty nodes".into(),
        p0: FaceDistribution::new(
            Face::Origin,
            [
                (step(1, 0), b.lambda1 + p.lambda1_0),
                (step(0, 1), b.lambda2 + p.lambda2_0),
                (step(0, 0), b.mu1 + b.mu2 - p.lambda1_0 - p.lambda2_0),
            ],
        ),
        p1: FaceDistribution::new(
            Face::Horizontal,
            [
                (step(1, 0), b.lambda1),
                (step(0, 1), b.lambda2 + p.lambda2_1),
                (step(-1, 0), b.mu1 * b.r10),
                (step(-1, 1), b.mu1 * (b.r12 + b.r11)),
                (step(0, 0), b.mu2 - p.lambda2_1),
            ],
        ),
        p2: FaceDistribution::new(
            Face::Vertical,
            [
                (step(0, 1), b.lambda2),
                (step(1, 0), b.lambda1 + p.lambda1_2),
                (step(0, -1), b.mu2 * b.r20),
                (step(1, -1), b.mu2 * (b.r21 + b.r22)),
                (step(0, 0), b.mu1 - p.lambda1_2),
            ],
        ),
        pplus: interior_face(b),
    })
}

/// Extra-arrival parameters tuned for structure-reversibility: the boundary
/// streams follow `lambda2_1 = (r11/r12) lambda`, `lambda1_2 = (r22/r21)
/// lambda` and `lambda2_0` solves the compatibility product equation for the
/// given `lambda1_0`. Requires `lambda1 = lambda2 = lambda`.
pub fn balanced_extra_arrivals(
    base: JacksonParameters,
    lambda1_0: f64,
) -> Result<ExtraArrivalParameters, PresetError> {
    if (base.lambda1 - base.lambda2).abs() > 1e-15 {
        return Err(PresetError::InvalidParameters(
            "balanced construction needs lambda1 = lambda2".into(),
        ));
    }
    let lambda = base.lambda1;
    let lambda2_1 = base.r11 / base.r12 * lambda;
    let lambda1_2 = base.r22 / base.r21 * lambda;
    let c1plus = 1.0 + lambda2_1 / lambda;
    let c2plus = 1.0 + lambda1_2 / lambda;
    let c10 = 1.0 + lambda1_0 / lambda;
    let lambda2_0 = (c10 * c1plus / c2plus - 1.0) * lambda;
    ExtraArrivalParameters::new(base, lambda2_1, lambda1_2, lambda1_0, lambda2_0)
}

/// A stable strictly positive Jackson parameter set with dyadic entries, so
/// every assembled face sums to exactly 1.0 in floating point.
pub fn dyadic_jackson_parameters() -> JacksonParameters {
    JacksonParameters::new(
        0.125,
        0.125,
        0.375,
        0.375,
        (0.5, 0.25, 0.25),
        (0.5, 0.25, 0.25),
    )
    .expect("valid dyadic parameters")
}

/// Parameters behind the published extra-arrival instance.
///
/// The published table rounds every value to four digits (and misprints the
/// node-2 leave probability with a decimal comma, read as 0.3784). Those
/// roundings come from the exact rationals below, under which the
/// compatibility product holds exactly and the decay rates are
/// `rho1 = 19/42`, `rho2 = 37/98`.
pub fn extra_arrival_parameters_5_10() -> ExtraArrivalParameters {
    let lambda = 1.0 / 15.0; // published 0.0667
    let base = JacksonParameters::new(
        lambda,
        lambda,
        0.4,                                     // published 0.4000
        7.0 / 15.0,                              // published 0.4667
        (7.0 / 19.0, 6.0 / 19.0, 6.0 / 19.0),    // published 0.368, 0.3158, 0.3158
        (14.0 / 37.0, 12.0 / 37.0, 11.0 / 37.0), // published 0.3784, 0.3243, 0.2973
    )
    .expect("published parameters are consistent");
    ExtraArrivalParameters::new(
        base,
        lambda,           // published 0.0667, equals (r11/r12) lambda
        11.0 / 180.0,     // published 0.0611, equals (r22/r21) lambda
        6061.0 / 28800.0, // published 0.2104
        89.0 / 400.0,     // published 0.2225
    )
    .expect("published extras are consistent")
}

/// Appendix-level product-form instance that is not structure-reversible.
///
/// The published six-digit table is self-inconsistent at the 1e-7 level
/// (faces do not sum to one). The constants below are the nearest point, well
/// inside print precision (max shift 2.4e-7), at which the product-form
/// distribution with rates (0.3, 0.2) is exactly stationary.
mod appendix_d {
    pub const P0_00: f64 = 0.08408211581896452;
    pub const P0_10: f64 = 0.49715992738261017;
    pub const P0_01: f64 = 0.18850296273875725;
    pub const P0_11: f64 = 0.23025499405966815;
    pub const P1_00: f64 = 0.08408202535440208;
    pub const P1_10: f64 = 0.126693008319515;
    pub const P1_01: f64 = 0.2163459990573872;
    pub const P1_11: f64 = 0.15534000622418348;
    pub const P1_M10: f64 = 0.1204999990537159;
    pub const P1_M11: f64 = 0.2970389619907962;
    pub const P2_00: f64 = 0.3631510599730622;
    pub const P2_10: f64 = 0.2675651656282049;
    pub const P2_01: f64 = 0.024639804461483793;
    pub const P2_11: f64 = 0.025552084621254648;
    pub const P2_0M1: f64 = 0.22330923685610274;
    pub const P2_1M1: f64 = 0.09578264845989179;
    pub const PP_00: f64 = 0.46951101845674503;
    pub const PP_10: f64 = 0.04491796322576576;
    pub const PP_01: f64 = 0.004976452443310981;
    pub const PP_11: f64 = 0.012212010869482233;
    pub const PP_M10: f64 = 0.3980188872416835;
    pub const PP_M11: f64 = 0.004533705033347175;
    pub const PP_0M1: f64 = 0.038027581698983376;
    pub const PP_1M1: f64 = 0.027802381030681878;
}

fn appendix_d_model() -> ReflectingWalkModel {
    use appendix_d::*;
    ReflectingWalkModel {
        label: "product form without structure-reversibility".into(),
        p0: FaceDistribution::new(
            Face::Origin,
            [
                (step(0, 0), P0_00),
                (step(1, 0), P0_10),
                (step(0, 1), P0_01),
                (step(1, 1), P0_11),
            ],
        ),
        p1: FaceDistribution::new(
            Face::Horizontal,
            [
                (step(0, 0), P1_00),
                (step(1, 0), P1_10),
                (step(0, 1), P1_01),
                (step(1, 1), P1_11),
                (step(-1, 0), P1_M10),
                (step(-1, 1), P1_M11),
            ],
        ),
        p2: FaceDistribution::new(
            Face::Vertical,
            [
                (step(0, 0), P2_00),
                (step(1, 0), P2_10),
                (step(0, 1), P2_01),
                (step(1, 1), P2_11),
                (step(0, -1), P2_0M1),
                (step(1, -1), P2_1M1),
            ],
        ),
        pplus: FaceDistribution::new(
            Face::Interior,
            [
                (step(0, 0), PP_00),
                (step(1, 0), PP_10),
                (step(0, 1), PP_01),
                (step(1, 1), PP_11),
                (step(-1, 0), PP_M10),
                (step(-1, 1), PP_M11),
                (step(0, -1), PP_0M1),
                (step(1, -1), PP_1M1),
                // (-1,-1) carries no mass in this instance
            ],
        ),
    }
}

/// Singular demo: interior moves are horizontal only, so the free walk is
/// stuck on a line and the decay rates come from plain ratios. Rates work
/// out to eta1 = 0.4, eta2 = 1/3, alpha1 = 0.5.
fn singular_demo_model() -> ReflectingWalkModel {
    ReflectingWalkModel {
        label: "singular reflecting random walk demo".into(),
        p0: FaceDistribution::new(
            Face::Origin,
            [(step(1, 0), 0.2), (step(0, 1), 0.2), (step(0, 0), 0.6)],
        ),
        p1: FaceDistribution::new(
            Face::Horizontal,
            [(step(1, 0), 0.2), (step(-1, 0), 0.4), (step(0, 0), 0.4)],
        ),
        p2: FaceDistribution::new(
            Face::Vertical,
            [
                (step(0, 1), 0.1),
                (step(0, -1), 0.3),
                (step(1, 0), 0.1),
                (step(0, 0), 0.5),
            ],
        ),
        pplus: FaceDistribution::new(
            Face::Interior,
            [(step(1, 0), 0.2), (step(-1, 0), 0.5), (step(0, 0), 0.3)],
        ),
    }
}

/// Names accepted by [`published_instance`].
pub const INSTANCE_NAMES: [&str; 3] = [
    "jackson-extra-5.10",
    "appendixD-product-nonreversible",
    "singular-A-demo",
];

/// Returns one of the frozen published instances by name.
pub fn published_instance(name: &str) -> Result<ReflectingWalkModel, PresetError> {
    match name {
        "jackson-extra-5.10" => {
            let mut model = jackson_extra_arrivals(&extra_arrival_parameters_5_10())?;
            model.label = "jackson-extra-5.10".into();
            Ok(model)
        }
        "appendixD-product-nonreversible" => {
            let mut model = appendix_d_model();
            model.label = "appendixD-product-nonreversible".into();
            Ok(model)
        }
        "singular-A-demo" => {
            let mut model = singular_demo_model();
            model.label = "singular-A-demo".into();
            Ok(model)
        }
        other => Err(PresetError::UnknownInstance(other.to_string())),
    }
}

/// Source note embedded in the shipped preset documents.
pub fn instance_note(name: &str) -> Option<&'static str> {
    match name {
        "jackson-extra-5.10" => Some(
            "Encoded from the exact rationals behind the published four-digit \
             values (lambda = 1/15, mu1 = 2/5, mu2 = 7/15, r1 = (7,6,6)/19, \
             r2 = (14,12,11)/37, extras 1/15, 11/180, 6061/28800, 89/400); the \
             published node-2 leave probability is misprinted with a decimal \
             comma and reads 0.3784.",
        ),
        "appendixD-product-nonreversible" => Some(
            "Published six-digit table projected (max shift 2.4e-7, inside \
             print precision) onto exact stationarity of the product-form \
             distribution with rates (0.3, 0.2); the raw table's faces sum to \
             1 +/- 3e-7 and would not validate.",
        ),
        "singular-A-demo" => Some(
            "Demonstration instance for the singular regime: horizontal-only \
             interior steps with rate ratios 0.4, 1/3 and axis ratio 0.5.",
        ),
        _ => None,
    }
}
