//! Fixtures shared across unit tests. Compiled only for tests; integration
//! tests reach the same models through the presets module.

use crate::model::{Face, FaceDistribution, ReflectingWalkModel, Step};

fn step(i: i8, j: i8) -> Step {
    Step::new(i, j).expect("skip-free step")
}

/// Symmetric simple walk: four interior steps of 0.25 each, blocked boundary
/// moves turned into self-loops. The transition matrix is symmetric, so the
/// chain is reversible and detailed balance holds with a flat measure.
pub fn symmetric_simple_walk() -> ReflectingWalkModel {
    ReflectingWalkModel {
        label: "symmetric simple walk".into(),
        p0: FaceDistribution::new(
            Face::Origin,
            [(step(1, 0), 0.25), (step(0, 1), 0.25), (step(0, 0), 0.5)],
        ),
        p1: FaceDistribution::new(
            Face::Horizontal,
            [
                (step(1, 0), 0.25),
                (step(-1, 0), 0.25),
                (step(0, 1), 0.25),
                (step(0, 0), 0.25),
            ],
        ),
        p2: FaceDistribution::new(
            Face::Vertical,
            [
                (step(0, 1), 0.25),
                (step(0, -1), 0.25),
                (step(1, 0), 0.25),
                (step(0, 0), 0.25),
            ],
        ),
        pplus: FaceDistribution::new(
            Face::Interior,
            [
                (step(1, 0), 0.25),
                (step(-1, 0), 0.25),
                (step(0, 1), 0.25),
                (step(0, -1), 0.25),
            ],
        ),
    }
}
