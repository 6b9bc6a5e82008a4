//! Model types for the two-dimensional skip-free reflecting random walk.
//!
//! The state space is the nonnegative quadrant, partitioned into the origin,
//! the two axes, and the open interior. One step distribution on
//! `{-1,0,1}^2` is attached to each of the four regions; the distributions
//! attached to the origin and the axes have their support clipped so the walk
//! never leaves the quadrant.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for "this face sums to one".
pub const SUM_TOL: f64 = 1e-12;

/// A single increment of the walk; both coordinates move by at most one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub i: i8,
    pub j: i8,
}

impl Step {
    pub fn new(i: i8, j: i8) -> Option<Step> {
        if (-1..=1).contains(&i) && (-1..=1).contains(&j) {
            Some(Step { i, j })
        } else {
            None
        }
    }

    /// All nine skip-free steps in a fixed order.
    pub fn all() -> impl Iterator<Item = Step> {
        (-1..=1).flat_map(|i| (-1..=1).map(move |j| Step { i, j }))
    }

    pub fn negated(self) -> Step {
        Step {
            i: -self.i,
            j: -self.j,
        }
    }

    pub fn key(self) -> String {
        format!("{},{}", self.i, self.j)
    }

    pub fn parse_key(key: &str) -> Option<Step> {
        let (a, b) = key.split_once(',')?;
        let i: i8 = a.trim().parse().ok()?;
        let j: i8 = b.trim().parse().ok()?;
        Step::new(i, j)
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Region of the quadrant a step distribution is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Face {
    /// The origin state (0,0).
    Origin,
    /// The positive horizontal axis, states (n,0) with n >= 1.
    Horizontal,
    /// The positive vertical axis, states (0,n) with n >= 1.
    Vertical,
    /// The open interior, both coordinates >= 1.
    Interior,
}

impl Face {
    pub fn all() -> [Face; 4] {
        [
            Face::Origin,
            Face::Horizontal,
            Face::Vertical,
            Face::Interior,
        ]
    }

    /// Reflection constraint: is `step` allowed from this face?
    pub fn allows(self, step: Step) -> bool {
        match self {
            Face::Origin => step.i >= 0 && step.j >= 0,
            Face::Horizontal => step.j >= 0,
            Face::Vertical => step.i >= 0,
            Face::Interior => true,
        }
    }

    /// Which face a state belongs to.
    pub fn of(n1: u64, n2: u64) -> Face {
        match (n1, n2) {
            (0, 0) => Face::Origin,
            (_, 0) => Face::Horizontal,
            (0, _) => Face::Vertical,
            _ => Face::Interior,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::Origin => "Origin",
            Face::Horizontal => "Horizontal",
            Face::Vertical => "Vertical",
            Face::Interior => "Interior",
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Step distribution attached to one face. Absent steps have probability zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceDistribution {
    pub face: Face,
    probs: BTreeMap<Step, f64>,
}

impl FaceDistribution {
    /// Builds a distribution from (step, probability) pairs. Zero entries are
    /// dropped so that explicit and omitted zeros compare equal.
    pub fn new(face: Face, entries: impl IntoIterator<Item = (Step, f64)>) -> FaceDistribution {
        let probs = entries.into_iter().filter(|&(_, p)| p != 0.0).collect();
        FaceDistribution { face, probs }
    }

    pub fn p(&self, i: i8, j: i8) -> f64 {
        match Step::new(i, j) {
            Some(s) => self.probs.get(&s).copied().unwrap_or(0.0),
            None => 0.0,
        }
    }

    pub fn get(&self, step: Step) -> f64 {
        self.probs.get(&step).copied().unwrap_or(0.0)
    }

    /// Nonzero entries in deterministic (lexicographic) order.
    pub fn entries(&self) -> impl Iterator<Item = (Step, f64)> + '_ {
        self.probs.iter().map(|(&s, &p)| (s, p))
    }

    pub fn sum(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn support(&self) -> impl Iterator<Item = Step> + '_ {
        self.probs.keys().copied()
    }
}

/// The four step distributions that define a reflecting random walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectingWalkModel {
    pub label: String,
    pub p0: FaceDistribution,
    pub p1: FaceDistribution,
    pub p2: FaceDistribution,
    pub pplus: FaceDistribution,
}

impl ReflectingWalkModel {
    pub fn face(&self, face: Face) -> &FaceDistribution {
        match face {
            Face::Origin => &self.p0,
            Face::Horizontal => &self.p1,
            Face::Vertical => &self.p2,
            Face::Interior => &self.pplus,
        }
    }

    /// Face distribution governing transitions out of state (n1, n2).
    pub fn at(&self, n1: u64, n2: u64) -> &FaceDistribution {
        self.face(Face::of(n1, n2))
    }

    /// Transition probability between two states, zero unless they are
    /// skip-free neighbors.
    pub fn transition(&self, from: (u64, u64), to: (u64, u64)) -> f64 {
        let di = to.0 as i64 - from.0 as i64;
        let dj = to.1 as i64 - from.1 as i64;
        if di.abs() > 1 || dj.abs() > 1 {
            return 0.0;
        }
        self.at(from.0, from.1).p(di as i8, dj as i8)
    }

    /// Swaps the two coordinates (and with them the axis faces). Transposing
    /// a model swaps the roles of eta1 and eta2 everywhere downstream.
    pub fn transpose(&self) -> ReflectingWalkModel {
        let flip = |d: &FaceDistribution, face: Face| {
            FaceDistribution::new(face, d.entries().map(|(s, p)| (Step { i: s.j, j: s.i }, p)))
        };
        ReflectingWalkModel {
            label: format!("{} (transposed)", self.label),
            p0: flip(&self.p0, Face::Origin),
            p1: flip(&self.p2, Face::Horizontal),
            p2: flip(&self.p1, Face::Vertical),
            pplus: flip(&self.pplus, Face::Interior),
        }
    }
}

/// Errors raised while reading a model document.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("face {face}: unknown step key {key:?}")]
    UnknownStepKey { face: Face, key: String },
    #[error("face {face}, step {step}: probability {value} outside [0,1]")]
    ProbabilityOutOfRange { face: Face, step: Step, value: f64 },
    #[error("face {face} sums to {sum} (must be 1 within {SUM_TOL:e})")]
    FaceSumMismatch { face: Face, sum: f64 },
    #[error("face {face}: step {step} carries positive mass outside the face support")]
    SupportViolation { face: Face, step: Step },
}

/// On-disk shape of a model document.
#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    p_origin: BTreeMap<String, f64>,
    p_face1: BTreeMap<String, f64>,
    p_face2: BTreeMap<String, f64>,
    p_plus: BTreeMap<String, f64>,
}

fn read_face(face: Face, raw: &BTreeMap<String, f64>) -> Result<FaceDistribution, ModelError> {
    let mut entries = Vec::new();
    for (key, &value) in raw {
        let step = Step::parse_key(key).ok_or_else(|| ModelError::UnknownStepKey {
            face,
            key: key.clone(),
        })?;
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(ModelError::ProbabilityOutOfRange { face, step, value });
        }
        if value > 0.0 && !face.allows(step) {
            return Err(ModelError::SupportViolation { face, step });
        }
        entries.push((step, value));
    }
    let dist = FaceDistribution::new(face, entries);
    let sum = dist.sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(ModelError::FaceSumMismatch { face, sum });
    }
    Ok(dist)
}

/// Parses a JSON model document. Omitted step keys mean probability zero.
pub fn parse_model(document: &str) -> Result<ReflectingWalkModel, ModelError> {
    let doc: ModelDocument = serde_json::from_str(document)?;
    Ok(ReflectingWalkModel {
        label: doc.label.unwrap_or_default(),
        p0: read_face(Face::Origin, &doc.p_origin)?,
        p1: read_face(Face::Horizontal, &doc.p_face1)?,
        p2: read_face(Face::Vertical, &doc.p_face2)?,
        pplus: read_face(Face::Interior, &doc.p_plus)?,
    })
}

/// Serializes a model back to the document schema, optionally with a note.
pub fn serialize_model(model: &ReflectingWalkModel, note: Option<&str>) -> String {
    let dump = |d: &FaceDistribution| -> BTreeMap<String, f64> {
        d.entries().map(|(s, p)| (s.key(), p)).collect()
    };
    let doc = ModelDocument {
        label: if model.label.is_empty() {
            None
        } else {
            Some(model.label.clone())
        },
        note: note.map(str::to_owned),
        p_origin: dump(&model.p0),
        p_face1: dump(&model.p1),
        p_face2: dump(&model.p2),
        p_plus: dump(&model.pplus),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("model document serializes");
    out.push('\n');
    out
}

/// Result of the finite chain-irreducibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriState {
    Yes,
    No,
    Undetermined,
}

/// Everything `validate` finds out about a model.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<(Face, String)>,
    pub chain_irreducible: TriState,
    pub free_walk_irreducible: bool,
}

/// Checks the face invariants and runs both irreducibility checks.
/// Violations are reported as data, never as errors.
pub fn validate(model: &ReflectingWalkModel) -> ValidationReport {
    let mut violations = Vec::new();
    for face in Face::all() {
        let dist = model.face(face);
        if dist.face != face {
            violations.push((
                face,
                format!("distribution tagged {} on face {face}", dist.face),
            ));
        }
        for (step, p) in dist.entries() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                violations.push((face, format!("step {step} has probability {p}")));
            }
            if !face.allows(step) {
                violations.push((face, format!("step {step} violates the face support")));
            }
        }
        let sum = dist.sum();
        if (sum - 1.0).abs() > SUM_TOL {
            violations.push((face, format!("face {} sums to {}", face.name(), sum)));
        }
    }
    ValidationReport {
        ok: violations.is_empty(),
        violations,
        chain_irreducible: check_chain_irreducible(model),
        free_walk_irreducible: check_free_walk_irreducible(model),
    }
}

/// Search box for the free-walk semigroup closure; steps are bounded by one,
/// so any witness path for a unit vector fits well inside it.
const SEMIGROUP_RADIUS: i32 = 16;
const SEMIGROUP_DEPTH: u32 = 32;

/// Condition (ii): is the unreflected walk on the full lattice irreducible?
///
/// True iff the additive semigroup generated by the interior support is the
/// whole lattice, which for skip-free steps reduces to reaching all four unit
/// vectors by bounded sums. Decided by breadth-first search over partial sums
/// inside `[-16,16]^2` with path length at most 32; at step size one this is
/// a complete check.
pub fn check_free_walk_irreducible(model: &ReflectingWalkModel) -> bool {
    let support: Vec<Step> = model
        .pplus
        .support()
        .filter(|s| !(s.i == 0 && s.j == 0))
        .collect();
    // Necessary condition: without any axis-parallel step the walk can never
    // move a single coordinate on its own.
    if [(1, 0), (-1, 0), (0, 1), (0, -1)]
        .iter()
        .all(|&(i, j)| model.pplus.p(i, j) == 0.0)
    {
        return false;
    }
    let side = (2 * SEMIGROUP_RADIUS + 1) as usize;
    let index = |x: i32, y: i32| -> usize {
        ((x + SEMIGROUP_RADIUS) as usize) * side + (y + SEMIGROUP_RADIUS) as usize
    };
    let mut seen = vec![false; side * side];
    let mut frontier = vec![(0i32, 0i32)];
    seen[index(0, 0)] = true;
    let mut reached = [false; 4];
    let targets = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    for _ in 0..SEMIGROUP_DEPTH {
        let mut next = Vec::new();
        for &(x, y) in &frontier {
            for s in &support {
                let (nx, ny) = (x + s.i as i32, y + s.j as i32);
                if nx.abs() > SEMIGROUP_RADIUS || ny.abs() > SEMIGROUP_RADIUS {
                    continue;
                }
                if !seen[index(nx, ny)] {
                    seen[index(nx, ny)] = true;
                    next.push((nx, ny));
                    for (k, &t) in targets.iter().enumerate() {
                        if (nx, ny) == t {
                            reached[k] = true;
                        }
                    }
                }
            }
        }
        if reached.iter().all(|&r| r) {
            return true;
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    reached.iter().all(|&r| r)
}

fn box_strongly_connected(model: &ReflectingWalkModel, k: u64) -> bool {
    let side = (k + 1) as usize;
    let idx = |n1: u64, n2: u64| -> usize { n1 as usize * side + n2 as usize };
    let mut fwd = vec![Vec::new(); side * side];
    let mut bwd = vec![Vec::new(); side * side];
    for n1 in 0..=k {
        for n2 in 0..=k {
            for (step, p) in model.at(n1, n2).entries() {
                if p == 0.0 {
                    continue;
                }
                let m1 = n1 as i64 + step.i as i64;
                let m2 = n2 as i64 + step.j as i64;
                if m1 < 0 || m2 < 0 || m1 > k as i64 || m2 > k as i64 {
                    continue; // transitions exiting the box are ignored
                }
                let (a, b) = (idx(n1, n2), idx(m1 as u64, m2 as u64));
                if a != b {
                    fwd[a].push(b);
                    bwd[b].push(a);
                }
            }
        }
    }
    let reach = |adj: &[Vec<usize>]| -> usize {
        let mut seen = vec![false; adj.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count
    };
    reach(&fwd) == side * side && reach(&bwd) == side * side
}

/// Box size for the finite chain-irreducibility check. Face homogeneity means
/// any reachability pattern repeats beyond distance two from the axes, so a
/// 7 x 7 box is conservative; the result is still reported tri-state.
const CHAIN_BOX: u64 = 6;

/// Condition (i): is the reflected chain irreducible?
///
/// Checks strong connectivity of the walk censored to `{0..K}^2` with
/// out-of-box transitions ignored. A disconnection that persists when the box
/// grows is a homogeneity-stable obstruction and is answered `No`; one that
/// disappears was an artifact of the truncation and is answered
/// `Undetermined`.
pub fn check_chain_irreducible(model: &ReflectingWalkModel) -> TriState {
    if box_strongly_connected(model, CHAIN_BOX) {
        TriState::Yes
    } else if !box_strongly_connected(model, CHAIN_BOX + 2) {
        TriState::No
    } else {
        TriState::Undetermined
    }
}
