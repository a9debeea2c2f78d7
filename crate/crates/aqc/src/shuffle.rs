//! Randomized semantics-preserving rewriting of gate sequences.
//!
//! Shuffling obfuscates where in a published sequence the secret rotations
//! were spliced in. Each step picks a random position, collects every
//! rewrite that fires there, and applies one chosen by configured rule
//! weights. Every rule is an exact identity, so the output implements the
//! same unitary up to global phase; a built-in self-test
//! ([`verify_rules`]) checks each rule against the matrix oracle on random
//! windows.
//!
//! The catalog is a candidate shuffler, not a proven one: how well it hides
//! gate placement is a measured property, estimated by [`estimate_overlap`]
//! as the Jaccard overlap between digest supports of shuffles of two
//! sequences. Inserted angles are snapped to a configurable grid (π/4 by
//! default) so digest supports have nonzero collision probability;
//! continuous angles would make every overlap estimate zero.

use crate::circuit::{angle_period, CircuitError, Gate, GateSequence, SequenceDigest};
use crate::seeds;
use crate::sim::{equal_up_to_phase, to_matrix, SimError, UnitaryMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;

/// Angle agreement below which two rotations count as mutually inverse.
const INVERSE_ANGLE_TOL: f64 = 1e-10;

const MAX_ATTEMPTS_PER_STEP: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShuffleError {
    #[error("sequence of {len} gates exceeds the target length {target}")]
    TargetLengthExceeded { len: usize, target: usize },
    #[error("position {pos} out of range for {len} gates")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("no rewrite applicable anywhere at step {step}; refusing partial result")]
    Stuck { step: usize },
    #[error("overlap estimation needs at least one sample")]
    NoSamples,
    #[error("sequences act on different registers: {left} vs {right} qubits")]
    WidthMismatch { left: usize, right: usize },
    #[error("rule `{rule}` broke semantics: {detail}")]
    RuleViolation { rule: &'static str, detail: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The rewrite-rule catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Insert a random gate and its inverse at a position.
    InversePairInsert,
    /// Delete an adjacent gate/inverse pair (covers HH and CNOT·CNOT).
    InversePairDelete,
    /// Swap adjacent gates with disjoint supports.
    DisjointSwap,
    /// Merge adjacent same-axis rotations on one target.
    RotationMerge,
    /// Split a rotation into two summing to it.
    RotationSplit,
    /// Move a diagonal rotation through a CNOT control.
    ControlRotationCommute,
    /// Move a global-phase gate past a neighbor.
    GPhaseMove,
    /// Reverse a CNOT's orientation via Hadamard conjugation:
    /// `CNOT(c,t) = (H⊗H)·CNOT(t,c)·(H⊗H)`, both directions.
    CnotBasisFlip,
    /// Peephole: delete an adjacent window supported on at most two qubits
    /// whose matrix is exactly a phase multiple of the identity, leaving
    /// only the phase.
    IdentityWindowDelete,
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::InversePairInsert => "inverse-pair-insert",
            RuleKind::InversePairDelete => "inverse-pair-delete",
            RuleKind::DisjointSwap => "disjoint-swap",
            RuleKind::RotationMerge => "rotation-merge",
            RuleKind::RotationSplit => "rotation-split",
            RuleKind::ControlRotationCommute => "control-rotation-commute",
            RuleKind::GPhaseMove => "gphase-move",
            RuleKind::CnotBasisFlip => "cnot-basis-flip",
            RuleKind::IdentityWindowDelete => "identity-window-delete",
        }
    }

    pub fn all() -> [RuleKind; 9] {
        [
            RuleKind::InversePairInsert,
            RuleKind::InversePairDelete,
            RuleKind::DisjointSwap,
            RuleKind::RotationMerge,
            RuleKind::RotationSplit,
            RuleKind::ControlRotationCommute,
            RuleKind::GPhaseMove,
            RuleKind::CnotBasisFlip,
            RuleKind::IdentityWindowDelete,
        ]
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Relative selection weights; a zero weight disables the rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleWeights {
    pub insert: f64,
    pub delete: f64,
    pub swap: f64,
    pub merge: f64,
    pub split: f64,
    pub commute: f64,
    pub gphase_move: f64,
    pub cnot_flip: f64,
    pub window_delete: f64,
}

impl Default for RuleWeights {
    fn default() -> Self {
        RuleWeights {
            insert: 0.6,
            delete: 5.0,
            swap: 3.0,
            merge: 3.0,
            split: 0.4,
            commute: 2.0,
            gphase_move: 1.5,
            cnot_flip: 1.2,
            window_delete: 4.0,
        }
    }
}

impl RuleWeights {
    pub fn weight_of(&self, rule: RuleKind) -> f64 {
        match rule {
            RuleKind::InversePairInsert => self.insert,
            RuleKind::InversePairDelete => self.delete,
            RuleKind::DisjointSwap => self.swap,
            RuleKind::RotationMerge => self.merge,
            RuleKind::RotationSplit => self.split,
            RuleKind::ControlRotationCommute => self.commute,
            RuleKind::GPhaseMove => self.gphase_move,
            RuleKind::CnotBasisFlip => self.cnot_flip,
            RuleKind::IdentityWindowDelete => self.window_delete,
        }
    }

    /// Weights with insertion and splitting disabled.
    pub fn deletion_only(mut self) -> Self {
        self.insert = 0.0;
        self.split = 0.0;
        self
    }
}

/// Longest window the peephole identity scan considers.
pub const MAX_IDENTITY_WINDOW: usize = 24;

/// Shuffling parameters. `target_length` is the hard cap `q` on the output
/// length; rewrites that would exceed it never fire.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleConfig {
    pub steps: usize,
    pub target_length: usize,
    pub weights: RuleWeights,
    /// Sampling grid for inserted/split angles.
    pub angle_grid: f64,
    /// Run the deterministic normalization tail after the random steps:
    /// contraction to fixpoint plus canonical reordering of commuting
    /// gates. Off by default (`steps = 0` then returns the input
    /// unchanged); support-overlap estimation needs it on, since raw
    /// random walks essentially never revisit a sequence.
    pub normalize_output: bool,
    pub rng_seed: u64,
}

impl ShuffleConfig {
    pub fn new(steps: usize, target_length: usize, rng_seed: u64) -> Self {
        ShuffleConfig {
            steps,
            target_length,
            weights: RuleWeights::default(),
            angle_grid: PI / 4.0,
            normalize_output: false,
            rng_seed,
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize_output = true;
        self
    }
}

/// One concrete rewrite: replace `removed` gates starting at `start` by
/// `replacement`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rewrite {
    pub rule: RuleKind,
    pub start: usize,
    pub removed: usize,
    pub replacement: Vec<Gate>,
}

impl Rewrite {
    fn grows_by(&self) -> isize {
        self.replacement.len() as isize - self.removed as isize
    }

    fn apply(&self, seq: &GateSequence) -> Result<GateSequence, CircuitError> {
        let mut gates = Vec::with_capacity(seq.len() + self.replacement.len());
        gates.extend_from_slice(&seq.gates()[..self.start]);
        gates.extend_from_slice(&self.replacement);
        gates.extend_from_slice(&seq.gates()[self.start + self.removed..]);
        GateSequence::new(seq.num_qubits(), gates)
    }
}

fn rotation_with_angle(gate: &Gate, angle: f64) -> Gate {
    match *gate {
        Gate::Rz { target, .. } => Gate::Rz { target, angle },
        Gate::Ry { target, .. } => Gate::Ry { target, angle },
        Gate::GPhase { .. } => Gate::GPhase { angle },
        _ => unreachable!("not a rotation"),
    }
}

fn rotation_angle(gate: &Gate) -> Option<f64> {
    match *gate {
        Gate::Rz { angle, .. } | Gate::Ry { angle, .. } | Gate::GPhase { angle } => Some(angle),
        _ => None,
    }
}

/// Same rotation family on the same target.
fn same_rotation_family(a: &Gate, b: &Gate) -> bool {
    matches!(
        (a, b),
        (Gate::Rz { target: ta, .. }, Gate::Rz { target: tb, .. }) if ta == tb
    ) || matches!(
        (a, b),
        (Gate::Ry { target: ta, .. }, Gate::Ry { target: tb, .. }) if ta == tb
    ) || matches!((a, b), (Gate::GPhase { .. }, Gate::GPhase { .. }))
}

fn is_inverse_pair(a: &Gate, b: &Gate) -> bool {
    match (a, b) {
        (Gate::H { target: ta }, Gate::H { target: tb }) => ta == tb,
        (
            Gate::Cnot {
                control: ca,
                target: ta,
            },
            Gate::Cnot {
                control: cb,
                target: tb,
            },
        ) => ca == cb && ta == tb,
        _ if same_rotation_family(a, b) => {
            let period = angle_period(a);
            let sum = (rotation_angle(a).unwrap() + rotation_angle(b).unwrap()).rem_euclid(period);
            sum < INVERSE_ANGLE_TOL || sum > period - INVERSE_ANGLE_TOL
        }
        _ => false,
    }
}

fn sample_grid_angle<R: Rng + ?Sized>(grid: f64, period: f64, rng: &mut R) -> f64 {
    let steps = (period / grid).round().max(1.0) as u32;
    grid * rng.gen_range(1..steps) as f64
}

fn sample_insert_gate<R: Rng + ?Sized>(
    num_qubits: usize,
    grid: f64,
    rng: &mut R,
) -> Gate {
    let four_pi = 4.0 * PI;
    let two_pi = 2.0 * PI;
    let kinds = if num_qubits >= 2 { 5 } else { 4 };
    let target = rng.gen_range(0..num_qubits);
    match rng.gen_range(0..kinds) {
        0 => Gate::H { target },
        1 => Gate::Rz {
            target,
            angle: sample_grid_angle(grid, four_pi, rng),
        },
        2 => Gate::Ry {
            target,
            angle: sample_grid_angle(grid, four_pi, rng),
        },
        3 => Gate::GPhase {
            angle: sample_grid_angle(grid, two_pi, rng),
        },
        _ => {
            let mut other = rng.gen_range(0..num_qubits);
            while other == target {
                other = rng.gen_range(0..num_qubits);
            }
            Gate::Cnot {
                control: target,
                target: other,
            }
        }
    }
}

/// Longest window starting at `start`, supported on at most two qubits,
/// whose matrix is `e^{iθ}I`; returns `(window_len, θ)`. Windows shorter
/// than two gates and pure global-phase prefixes are left to other rules.
fn longest_identity_window(gates: &[Gate], start: usize) -> Option<(usize, f64)> {
    let mut support: Vec<usize> = Vec::new();
    let mut best = None;
    let end = gates.len().min(start + MAX_IDENTITY_WINDOW);
    for stop in start + 1..=end {
        for q in gates[stop - 1].support() {
            if !support.contains(&q) {
                support.push(q);
            }
        }
        if support.len() > 2 {
            break;
        }
        let w = stop - start;
        if w < 2 || support.is_empty() {
            continue;
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        let local = |q: usize| sorted.iter().position(|&s| s == q).expect("in support");
        let mini: Vec<Gate> = gates[start..stop]
            .iter()
            .map(|g| match *g {
                Gate::H { target } => Gate::H {
                    target: local(target),
                },
                Gate::Rz { target, angle } => Gate::Rz {
                    target: local(target),
                    angle,
                },
                Gate::Ry { target, angle } => Gate::Ry {
                    target: local(target),
                    angle,
                },
                Gate::Cnot { control, target } => Gate::Cnot {
                    control: local(control),
                    target: local(target),
                },
                Gate::GPhase { angle } => Gate::GPhase { angle },
            })
            .collect();
        let Ok(seq) = GateSequence::new(sorted.len(), mini) else {
            return best;
        };
        let Ok(m) = to_matrix(&seq) else {
            return best;
        };
        let Ok(eq) = equal_up_to_phase(&UnitaryMatrix::identity(m.dim()), &m, 1e-10) else {
            return best;
        };
        if eq.equivalent {
            best = Some((w, eq.phase.expect("equivalent")));
        }
    }
    best
}

fn identity_window_rewrite(gates: &[Gate], start: usize) -> Option<Rewrite> {
    let (w, phase) = longest_identity_window(gates, start)?;
    let wrapped = phase.rem_euclid(2.0 * PI);
    let replacement = if wrapped < INVERSE_ANGLE_TOL || wrapped > 2.0 * PI - INVERSE_ANGLE_TOL {
        vec![]
    } else {
        vec![Gate::GPhase { angle: phase }]
    };
    Some(Rewrite {
        rule: RuleKind::IdentityWindowDelete,
        start,
        removed: w,
        replacement,
    })
}

/// Match the 5-gate Hadamard-conjugation window around a reversed CNOT.
fn flip_window(gates: &[Gate]) -> Option<Gate> {
    let [g0, g1, mid, g3, g4] = gates else {
        return None;
    };
    let (Gate::H { target: a }, Gate::H { target: b }) = (g0, g1) else {
        return None;
    };
    let (Gate::H { target: c }, Gate::H { target: d }) = (g3, g4) else {
        return None;
    };
    let Gate::Cnot { control, target } = mid else {
        return None;
    };
    let pair = |x: usize, y: usize| (x.min(y), x.max(y));
    let cnot_pair = pair(*control, *target);
    if pair(*a, *b) == cnot_pair && pair(*c, *d) == cnot_pair {
        Some(Gate::Cnot {
            control: *target,
            target: *control,
        })
    } else {
        None
    }
}

/// All rewrites that fire at `pos` (an insertion point for the insert rule,
/// a window start for the others). Randomized rules draw their parameters
/// from `rng`.
fn candidates_at<R: Rng + ?Sized>(
    seq: &GateSequence,
    pos: usize,
    cfg: &ShuffleConfig,
    rng: &mut R,
) -> Vec<Rewrite> {
    let gates = seq.gates();
    let len = gates.len();
    let q = cfg.target_length;
    let mut out = Vec::new();

    if pos <= len && len + 2 <= q && seq.num_qubits() > 0 {
        let g = sample_insert_gate(seq.num_qubits(), cfg.angle_grid, rng);
        out.push(Rewrite {
            rule: RuleKind::InversePairInsert,
            start: pos,
            removed: 0,
            replacement: vec![g, g.inverse()],
        });
    }
    if pos + 1 < len {
        let (g1, g2) = (&gates[pos], &gates[pos + 1]);
        if is_inverse_pair(g1, g2) {
            out.push(Rewrite {
                rule: RuleKind::InversePairDelete,
                start: pos,
                removed: 2,
                replacement: vec![],
            });
        }
        let either_gphase =
            matches!(g1, Gate::GPhase { .. }) || matches!(g2, Gate::GPhase { .. });
        if g1.disjoint_with(g2) && g1 != g2 && !either_gphase {
            out.push(Rewrite {
                rule: RuleKind::DisjointSwap,
                start: pos,
                removed: 2,
                replacement: vec![*g2, *g1],
            });
        }
        if either_gphase && !(matches!(g1, Gate::GPhase { .. }) && matches!(g2, Gate::GPhase { .. }))
        {
            out.push(Rewrite {
                rule: RuleKind::GPhaseMove,
                start: pos,
                removed: 2,
                replacement: vec![*g2, *g1],
            });
        }
        if same_rotation_family(g1, g2) {
            let sum = rotation_angle(g1).unwrap() + rotation_angle(g2).unwrap();
            let period = angle_period(g1);
            let wrapped = sum.rem_euclid(period);
            let replacement =
                if wrapped < INVERSE_ANGLE_TOL || wrapped > period - INVERSE_ANGLE_TOL {
                    vec![]
                } else {
                    vec![rotation_with_angle(g1, sum)]
                };
            out.push(Rewrite {
                rule: RuleKind::RotationMerge,
                start: pos,
                removed: 2,
                replacement,
            });
        }
        match (g1, g2) {
            (Gate::Rz { target: rz_q, .. }, Gate::Cnot { control, .. }) if rz_q == control => {
                out.push(Rewrite {
                    rule: RuleKind::ControlRotationCommute,
                    start: pos,
                    removed: 2,
                    replacement: vec![*g2, *g1],
                });
            }
            (Gate::Cnot { control, .. }, Gate::Rz { target: rz_q, .. }) if rz_q == control => {
                out.push(Rewrite {
                    rule: RuleKind::ControlRotationCommute,
                    start: pos,
                    removed: 2,
                    replacement: vec![*g2, *g1],
                });
            }
            _ => {}
        }
    }
    if pos < len {
        let g = &gates[pos];
        if rotation_angle(g).is_some() && len + 1 <= q {
            let period = angle_period(g);
            let part = sample_grid_angle(cfg.angle_grid, period, rng);
            let rest = rotation_angle(g).unwrap() - part;
            out.push(Rewrite {
                rule: RuleKind::RotationSplit,
                start: pos,
                removed: 1,
                replacement: vec![rotation_with_angle(g, part), rotation_with_angle(g, rest)],
            });
        }
        if let Gate::Cnot { control, target } = g {
            if len + 4 <= q {
                out.push(Rewrite {
                    rule: RuleKind::CnotBasisFlip,
                    start: pos,
                    removed: 1,
                    replacement: vec![
                        Gate::H { target: *control },
                        Gate::H { target: *target },
                        Gate::Cnot {
                            control: *target,
                            target: *control,
                        },
                        Gate::H { target: *control },
                        Gate::H { target: *target },
                    ],
                });
            }
        }
    }
    if pos + 4 < len {
        if let Some(flipped) = flip_window(&gates[pos..pos + 5]) {
            out.push(Rewrite {
                rule: RuleKind::CnotBasisFlip,
                start: pos,
                removed: 5,
                replacement: vec![flipped],
            });
        }
    }
    if pos < len {
        if let Some(rw) = identity_window_rewrite(gates, pos) {
            out.push(rw);
        }
    }
    out
}

/// Introspection: every rewrite that fires at `pos`, with deterministic
/// parameters for the randomized rules (seeded from the sequence digest).
pub fn applicable_rewrites(
    seq: &GateSequence,
    pos: usize,
    cfg: &ShuffleConfig,
) -> Result<Vec<Rewrite>, ShuffleError> {
    if pos > seq.len() {
        return Err(ShuffleError::PositionOutOfRange {
            pos,
            len: seq.len(),
        });
    }
    let digest = seq.digest();
    let preview_seed = u64::from_le_bytes(digest.0[..8].try_into().expect("8 bytes"));
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive_indexed(
        preview_seed,
        "rewrite-preview",
        pos as u64,
    ));
    Ok(candidates_at(seq, pos, cfg, &mut rng))
}

/// Shuffle: `cfg.steps` weighted random rewrites, deterministic in the seed.
pub fn shuffle(seq: &GateSequence, cfg: &ShuffleConfig) -> Result<GateSequence, ShuffleError> {
    if seq.len() > cfg.target_length {
        return Err(ShuffleError::TargetLengthExceeded {
            len: seq.len(),
            target: cfg.target_length,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut current = seq.clone();
    for step in 0..cfg.steps {
        let mut chosen: Option<Rewrite> = None;
        for _attempt in 0..MAX_ATTEMPTS_PER_STEP {
            let pos = rng.gen_range(0..=current.len());
            if let Some(rw) = pick_weighted(candidates_at(&current, pos, cfg, &mut rng), cfg, &mut rng)
            {
                chosen = Some(rw);
                break;
            }
        }
        if chosen.is_none() {
            // deterministic full scan before giving up
            let mut all = Vec::new();
            for pos in 0..=current.len() {
                all.extend(candidates_at(&current, pos, cfg, &mut rng));
            }
            chosen = pick_weighted(all, cfg, &mut rng);
        }
        let Some(rw) = chosen else {
            return Err(ShuffleError::Stuck { step });
        };
        debug_assert!(current.len() as isize + rw.grows_by() <= cfg.target_length as isize);
        current = rw.apply(&current)?;
    }
    if cfg.normalize_output {
        current = normalize(&current)?;
    }
    Ok(current)
}

/// Gate ordering used when sorting commuting neighbors into canonical
/// position; global phases sink to the end where they merge.
fn sort_key(gate: &Gate) -> (u8, usize, usize, u64) {
    match *gate {
        Gate::H { target } => (0, target, 0, 0),
        Gate::Rz { target, angle } => (1, target, 0, angle.to_bits()),
        Gate::Ry { target, angle } => (2, target, 0, angle.to_bits()),
        Gate::Cnot { control, target } => (3, control, target, 0),
        Gate::GPhase { angle } => (4, usize::MAX, 0, angle.to_bits()),
    }
}

/// True when swapping the adjacent pair preserves semantics: disjoint
/// supports, a global phase against anything, or a Z-rotation against the
/// control side of a CNOT.
fn swappable(a: &Gate, b: &Gate) -> bool {
    if matches!(a, Gate::GPhase { .. }) || matches!(b, Gate::GPhase { .. }) {
        return true;
    }
    if a.disjoint_with(b) {
        return true;
    }
    matches!(
        (a, b),
        (Gate::Rz { target: q, .. }, Gate::Cnot { control, .. }) if q == control
    ) || matches!(
        (a, b),
        (Gate::Cnot { control, .. }, Gate::Rz { target: q, .. }) if q == control
    )
}

/// Deterministic normalization: repeat contraction (inverse-pair deletion,
/// rotation merges, reverse Hadamard-conjugation flips) and canonical
/// bubble passes over swappable neighbors until a fixpoint. Every step is
/// one of the verified rewrite rules, so semantics are preserved exactly.
pub fn normalize(seq: &GateSequence) -> Result<GateSequence, ShuffleError> {
    let mut gates: Vec<Gate> = seq.gates().to_vec();
    let max_passes = 4 * gates.len() + 16;
    for _ in 0..max_passes {
        let mut changed = false;
        // contraction: deletions and merges
        let mut i = 0;
        while i + 1 < gates.len() {
            let (g1, g2) = (gates[i], gates[i + 1]);
            if is_inverse_pair(&g1, &g2) {
                gates.drain(i..i + 2);
                changed = true;
                i = i.saturating_sub(1);
                continue;
            }
            if same_rotation_family(&g1, &g2) {
                let sum = rotation_angle(&g1).unwrap() + rotation_angle(&g2).unwrap();
                gates.splice(i..i + 2, [rotation_with_angle(&g1, sum)]);
                changed = true;
                i = i.saturating_sub(1);
                continue;
            }
            i += 1;
        }
        // drop full-period rotations left by merging
        gates.retain(|g| match rotation_angle(g) {
            Some(angle) => {
                let period = angle_period(g);
                let wrapped = angle.rem_euclid(period);
                let trivial = wrapped < INVERSE_ANGLE_TOL || wrapped > period - INVERSE_ANGLE_TOL;
                if trivial {
                    changed = true;
                }
                !trivial
            }
            None => true,
        });
        // contract Hadamard-conjugated CNOT windows
        let mut i = 0;
        while i + 4 < gates.len() {
            if let Some(flipped) = flip_window(&gates[i..i + 5]) {
                gates.splice(i..i + 5, [flipped]);
                changed = true;
                i = i.saturating_sub(4);
                continue;
            }
            i += 1;
        }
        // peephole: drop phase-identity windows
        let mut i = 0;
        while i < gates.len() {
            if let Some(rw) = identity_window_rewrite(&gates, i) {
                gates.splice(rw.start..rw.start + rw.removed, rw.replacement);
                changed = true;
                i = i.saturating_sub(MAX_IDENTITY_WINDOW);
                continue;
            }
            i += 1;
        }
        // canonical bubble pass over swappable neighbors
        for i in 0..gates.len().saturating_sub(1) {
            if swappable(&gates[i], &gates[i + 1]) && sort_key(&gates[i + 1]) < sort_key(&gates[i])
            {
                gates.swap(i, i + 1);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(GateSequence::new(seq.num_qubits(), gates)?)
}

fn pick_weighted<R: Rng + ?Sized>(
    candidates: Vec<Rewrite>,
    cfg: &ShuffleConfig,
    rng: &mut R,
) -> Option<Rewrite> {
    let weighted: Vec<(f64, Rewrite)> = candidates
        .into_iter()
        .filter_map(|rw| {
            let w = cfg.weights.weight_of(rw.rule);
            (w > 0.0).then_some((w, rw))
        })
        .collect();
    let total: f64 = weighted.iter().map(|(w, _)| w).sum();
    if total <= 0.0 {
        return None;
    }
    let mut x = rng.gen_range(0.0..total);
    for (w, rw) in weighted {
        if x < w {
            return Some(rw);
        }
        x -= w;
    }
    None
}

/// Digest-support overlap between shuffle distributions of two sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub ratio: f64,
    pub samples: usize,
    pub support_left: usize,
    pub support_right: usize,
    pub intersection: usize,
    pub union: usize,
    pub rng_seed: u64,
    pub steps: usize,
    pub target_length: usize,
}

impl OverlapReport {
    /// Line-oriented stats dump.
    pub fn to_text(&self) -> String {
        format!(
            "AQC-OVERLAP-REPORT\nratio {:.6e}\nsamples {}\nsupport-left {}\nsupport-right {}\nintersection {}\nunion {}\nseed {}\nsteps {}\ntarget-length {}\n",
            self.ratio,
            self.samples,
            self.support_left,
            self.support_right,
            self.intersection,
            self.union,
            self.rng_seed,
            self.steps,
            self.target_length,
        )
    }
}

/// Draw `samples` shuffles of each sequence and report the Jaccard overlap
/// of the observed digest supports. Sample `i` of both sides shares one
/// derived seed, so identical inputs give ratio exactly 1.
pub fn estimate_overlap(
    left: &GateSequence,
    right: &GateSequence,
    samples: usize,
    cfg: &ShuffleConfig,
) -> Result<OverlapReport, ShuffleError> {
    if left.num_qubits() != right.num_qubits() {
        return Err(ShuffleError::WidthMismatch {
            left: left.num_qubits(),
            right: right.num_qubits(),
        });
    }
    if samples == 0 {
        return Err(ShuffleError::NoSamples);
    }
    let mut support_left: HashSet<SequenceDigest> = HashSet::new();
    let mut support_right: HashSet<SequenceDigest> = HashSet::new();
    for i in 0..samples {
        let mut sample_cfg = cfg.clone();
        sample_cfg.rng_seed = seeds::derive_indexed(cfg.rng_seed, "overlap/sample", i as u64);
        support_left.insert(shuffle(left, &sample_cfg)?.digest());
        support_right.insert(shuffle(right, &sample_cfg)?.digest());
    }
    let intersection = support_left.intersection(&support_right).count();
    let union = support_left.union(&support_right).count();
    Ok(OverlapReport {
        ratio: intersection as f64 / union as f64,
        samples,
        support_left: support_left.len(),
        support_right: support_right.len(),
        intersection,
        union,
        rng_seed: cfg.rng_seed,
        steps: cfg.steps,
        target_length: cfg.target_length,
    })
}

/// Built-in rule self-test: on random sequences, apply every candidate at
/// every position and require the whole-sequence unitary to be preserved up
/// to global phase within 1e-10.
pub fn verify_rules(trials: usize, seed: u64) -> Result<(), ShuffleError> {
    use crate::keying::sample_random_sequence;
    use crate::sim::{equal_up_to_phase, to_matrix};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let n = 1 + trial % 3;
        let len = 2 + rng.gen_range(0..5);
        let qubits: Vec<usize> = (0..n).collect();
        let base = sample_random_sequence(n, &qubits, len, &mut rng)
            .expect("sampling over a non-empty set");
        let cfg = ShuffleConfig::new(0, base.len() + 8, seed);
        let reference = to_matrix(&base)?;
        for pos in 0..=base.len() {
            for rw in candidates_at(&base, pos, &cfg, &mut rng) {
                let rewritten = rw.apply(&base)?;
                let eq = equal_up_to_phase(&reference, &to_matrix(&rewritten)?, 1e-10)?;
                if !eq.equivalent {
                    return Err(ShuffleError::RuleViolation {
                        rule: rw.rule.name(),
                        detail: format!(
                            "overlap {} after rewrite at {} of `{}`",
                            eq.overlap,
                            pos,
                            base.to_text().replace('\n', "; ")
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}
