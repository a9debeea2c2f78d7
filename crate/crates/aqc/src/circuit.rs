//! Gate alphabet, gate sequences, and their text serialization.
//!
//! A [`GateSequence`] is the classical description of a unitary: an ordered
//! list of elementary gates over an indexed qubit register. Gates are listed
//! in execution order, so the first element of the list acts first. The
//! elementary alphabet is `{H, RZ(θ), RY(θ), CNOT, GPHASE(θ)}`; it is closed
//! under exact adjoints and under exact controlled-gate decomposition, and
//! the explicit global-phase gate keeps `e^{iθ}·I` representable.

use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt;

/// Period of RZ/RY as matrices (sign included): 4π.
pub const ANGLE_PERIOD: f64 = 4.0 * PI;

/// Grid unit used when canonicalizing angles for digests (π/4).
pub const CANONICAL_ANGLE_GRID: f64 = PI / 4.0;

const GRID_SNAP_TOL: f64 = 1e-12;

/// One elementary gate. Qubit indices are 0-based; qubit 0 is the most
/// significant bit of a basis-state index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// Hadamard on `target`.
    H { target: usize },
    /// Z-axis rotation `diag(e^{-iθ/2}, e^{iθ/2})` on `target`.
    Rz { target: usize, angle: f64 },
    /// Y-axis rotation on `target`.
    Ry { target: usize, angle: f64 },
    /// Controlled NOT; `control` and `target` must be distinct.
    Cnot { control: usize, target: usize },
    /// Global phase `e^{iθ}·I`; acts on no qubit.
    GPhase { angle: f64 },
}

impl Gate {
    /// Qubits the gate acts on, in declaration order. Empty for `GPhase`.
    pub fn support(&self) -> Vec<usize> {
        match *self {
            Gate::H { target } | Gate::Rz { target, .. } | Gate::Ry { target, .. } => {
                vec![target]
            }
            Gate::Cnot { control, target } => vec![control, target],
            Gate::GPhase { .. } => Vec::new(),
        }
    }

    /// The exact inverse gate (H and CNOT are self-inverse, rotations negate).
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::H { target } => Gate::H { target },
            Gate::Rz { target, angle } => Gate::Rz {
                target,
                angle: -angle,
            },
            Gate::Ry { target, angle } => Gate::Ry {
                target,
                angle: -angle,
            },
            Gate::Cnot { control, target } => Gate::Cnot { control, target },
            Gate::GPhase { angle } => Gate::GPhase { angle: -angle },
        }
    }

    /// Entrywise complex conjugate, which stays inside the alphabet:
    /// H, RY and CNOT are real, RZ and GPHASE negate their angle.
    pub fn conjugate(&self) -> Gate {
        match *self {
            Gate::Rz { target, angle } => Gate::Rz {
                target,
                angle: -angle,
            },
            Gate::GPhase { angle } => Gate::GPhase { angle: -angle },
            g => g,
        }
    }

    /// True when the two gates touch no common qubit.
    pub fn disjoint_with(&self, other: &Gate) -> bool {
        let a = self.support();
        a.iter().all(|q| !other.support().contains(q))
    }

    fn validate(&self, num_qubits: usize) -> Result<(), CircuitError> {
        let support = self.support();
        for &q in &support {
            if q >= num_qubits {
                return Err(CircuitError::TargetOutOfRange {
                    target: q,
                    num_qubits,
                });
            }
        }
        if let Gate::Cnot { control, target } = self {
            if control == target {
                return Err(CircuitError::DuplicateTargets { target: *control });
            }
        }
        if let Gate::Rz { angle, .. } | Gate::Ry { angle, .. } | Gate::GPhase { angle } = self {
            if !angle.is_finite() {
                return Err(CircuitError::NonFiniteAngle);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H { target } => write!(f, "H {target}"),
            Gate::Rz { target, angle } => write!(f, "RZ {} {target}", fmt_angle(angle)),
            Gate::Ry { target, angle } => write!(f, "RY {} {target}", fmt_angle(angle)),
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Gate::GPhase { angle } => write!(f, "GPHASE {}", fmt_angle(angle)),
        }
    }
}

/// Angles are written with 17 significant digits so that text round-trips
/// reproduce the exact f64.
fn fmt_angle(a: f64) -> String {
    format!("{a:.16e}")
}

/// Map an angle into `[0, period)` and snap it onto the π/4 grid when it is
/// within rounding distance of a grid point. Snapping keeps digests stable
/// when the same grid angle is reached through different arithmetic.
/// Rotations use the 4π period, the global phase its natural 2π.
pub fn canonical_angle(angle: f64, period: f64) -> f64 {
    let mut a = angle.rem_euclid(period);
    if !(0.0..period).contains(&a) {
        // rem_euclid can land exactly on the period through rounding
        a = 0.0;
    }
    let grid_steps = (period / CANONICAL_ANGLE_GRID).round() as i64;
    let steps = a / CANONICAL_ANGLE_GRID;
    let nearest = steps.round();
    if (a - nearest * CANONICAL_ANGLE_GRID).abs() < GRID_SNAP_TOL {
        let idx = (nearest as i64).rem_euclid(grid_steps);
        return idx as f64 * CANONICAL_ANGLE_GRID;
    }
    if a == 0.0 {
        0.0 // normalize -0.0
    } else {
        a
    }
}

/// The matrix period of a gate's angle parameter: 4π for rotations (where
/// the sign matters), 2π for the global phase. Angle-free gates report 4π.
pub fn angle_period(gate: &Gate) -> f64 {
    match gate {
        Gate::GPhase { .. } => 2.0 * PI,
        _ => ANGLE_PERIOD,
    }
}

/// Structural errors raised when building or combining sequences.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("qubit {target} out of range for a {num_qubits}-qubit register")]
    TargetOutOfRange { target: usize, num_qubits: usize },
    #[error("CNOT control and target coincide on qubit {target}")]
    DuplicateTargets { target: usize },
    #[error("gate angle is not finite")]
    NonFiniteAngle,
    #[error("qubit count mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("qubit map must assign {expected} qubits, got {got}")]
    BadQubitMap { expected: usize, got: usize },
    #[error("qubit map is not injective at new index {index}")]
    QubitMapCollision { index: usize },
}

/// Parse failure with the 1-based line number of the offending line.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("expected `qubits <n>` header")]
    MissingHeader,
    #[error("bad qubit count `{0}`")]
    BadQubitCount(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("missing angle")]
    MissingAngle,
    #[error("bad angle `{0}`")]
    BadAngle(String),
    #[error("missing target qubit")]
    MissingTarget,
    #[error("bad target `{0}`")]
    BadTarget(String),
    #[error("unexpected trailing token `{0}`")]
    TrailingToken(String),
    #[error("{0}")]
    Invalid(CircuitError),
}

/// An ordered gate list over a fixed-width register.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSequence {
    gates: Vec<Gate>,
    num_qubits: usize,
}

impl GateSequence {
    /// The empty sequence: the identity on `num_qubits` qubits.
    pub fn identity(num_qubits: usize) -> Self {
        GateSequence {
            gates: Vec::new(),
            num_qubits,
        }
    }

    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        for g in &gates {
            g.validate(num_qubits)?;
        }
        Ok(GateSequence { gates, num_qubits })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Sequence implementing the exact inverse unitary: gates reversed,
    /// each replaced by its inverse.
    pub fn adjoint(&self) -> GateSequence {
        GateSequence {
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            num_qubits: self.num_qubits,
        }
    }

    /// Gates of `self` followed by gates of `other`; as matrices this is
    /// `M(other) · M(self)` since `self` executes first.
    pub fn concat(&self, other: &GateSequence) -> Result<GateSequence, CircuitError> {
        if self.num_qubits != other.num_qubits {
            return Err(CircuitError::WidthMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        Ok(GateSequence {
            gates,
            num_qubits: self.num_qubits,
        })
    }

    /// Re-index qubits: `map[q]` is the new index of old qubit `q`. The map
    /// must be injective and stay below `new_num_qubits`.
    pub fn remap(&self, map: &[usize], new_num_qubits: usize) -> Result<GateSequence, CircuitError> {
        if map.len() != self.num_qubits {
            return Err(CircuitError::BadQubitMap {
                expected: self.num_qubits,
                got: map.len(),
            });
        }
        let mut seen = vec![false; new_num_qubits];
        for &m in map {
            if m >= new_num_qubits {
                return Err(CircuitError::TargetOutOfRange {
                    target: m,
                    num_qubits: new_num_qubits,
                });
            }
            if seen[m] {
                return Err(CircuitError::QubitMapCollision { index: m });
            }
            seen[m] = true;
        }
        let gates = self
            .gates
            .iter()
            .map(|g| match *g {
                Gate::H { target } => Gate::H {
                    target: map[target],
                },
                Gate::Rz { target, angle } => Gate::Rz {
                    target: map[target],
                    angle,
                },
                Gate::Ry { target, angle } => Gate::Ry {
                    target: map[target],
                    angle,
                },
                Gate::Cnot { control, target } => Gate::Cnot {
                    control: map[control],
                    target: map[target],
                },
                Gate::GPhase { angle } => Gate::GPhase { angle },
            })
            .collect();
        Ok(GateSequence {
            gates,
            num_qubits: new_num_qubits,
        })
    }

    /// Embed into a wider register with old qubit `q` placed at `offset + q`.
    pub fn embed_at(&self, offset: usize, new_num_qubits: usize) -> Result<GateSequence, CircuitError> {
        let map: Vec<usize> = (0..self.num_qubits).map(|q| offset + q).collect();
        self.remap(&map, new_num_qubits)
    }

    /// Plain text form; parsing it back reproduces the sequence exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.num_qubits);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Canonical text: like [`to_text`](Self::to_text) but with every angle
    /// passed through [`canonical_angle`]. Digests hash this form.
    pub fn canonical_text(&self) -> String {
        let canon = GateSequence {
            num_qubits: self.num_qubits,
            gates: self
                .gates
                .iter()
                .map(|g| match *g {
                    Gate::Rz { target, angle } => Gate::Rz {
                        target,
                        angle: canonical_angle(angle, ANGLE_PERIOD),
                    },
                    Gate::Ry { target, angle } => Gate::Ry {
                        target,
                        angle: canonical_angle(angle, ANGLE_PERIOD),
                    },
                    Gate::GPhase { angle } => Gate::GPhase {
                        angle: canonical_angle(angle, 2.0 * PI),
                    },
                    g => g,
                })
                .collect(),
        };
        canon.to_text()
    }

    /// SHA-256 of the canonical text.
    pub fn digest(&self) -> SequenceDigest {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_text().as_bytes());
        SequenceDigest(hasher.finalize().into())
    }

    /// Parse the line-oriented text format. `#` starts a comment, blank
    /// lines are skipped, the first significant line must be `qubits <n>`.
    pub fn parse(text: &str) -> Result<GateSequence, ParseError> {
        let mut num_qubits: Option<usize> = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let mut tokens = line.split_whitespace();
            let head = match tokens.next() {
                Some(t) => t,
                None => continue,
            };
            let err = |kind| ParseError {
                line: line_no,
                kind,
            };
            match num_qubits {
                None => {
                    if head != "qubits" {
                        return Err(err(ParseErrorKind::MissingHeader));
                    }
                    let count = tokens.next().ok_or_else(|| {
                        err(ParseErrorKind::BadQubitCount(String::new()))
                    })?;
                    let n: usize = count
                        .parse()
                        .map_err(|_| err(ParseErrorKind::BadQubitCount(count.to_string())))?;
                    if n == 0 {
                        return Err(err(ParseErrorKind::BadQubitCount(count.to_string())));
                    }
                    if let Some(extra) = tokens.next() {
                        return Err(err(ParseErrorKind::TrailingToken(extra.to_string())));
                    }
                    num_qubits = Some(n);
                }
                Some(n) => {
                    let gate = parse_gate(head, &mut tokens, line_no)?;
                    if let Some(extra) = tokens.next() {
                        return Err(err(ParseErrorKind::TrailingToken(extra.to_string())));
                    }
                    gate.validate(n)
                        .map_err(|e| err(ParseErrorKind::Invalid(e)))?;
                    gates.push(gate);
                }
            }
        }
        let num_qubits = num_qubits.ok_or(ParseError {
            line: text.lines().count().max(1),
            kind: ParseErrorKind::MissingHeader,
        })?;
        Ok(GateSequence { gates, num_qubits })
    }
}

fn parse_gate<'a>(
    head: &str,
    tokens: &mut impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<Gate, ParseError> {
    let err = |kind| ParseError { line, kind };
    let angle = |tokens: &mut dyn Iterator<Item = &'a str>| -> Result<f64, ParseError> {
        let tok = tokens.next().ok_or_else(|| err(ParseErrorKind::MissingAngle))?;
        let a: f64 = tok
            .parse()
            .map_err(|_| err(ParseErrorKind::BadAngle(tok.to_string())))?;
        if !a.is_finite() {
            return Err(err(ParseErrorKind::BadAngle(tok.to_string())));
        }
        Ok(a)
    };
    let target = |tokens: &mut dyn Iterator<Item = &'a str>| -> Result<usize, ParseError> {
        let tok = tokens.next().ok_or_else(|| err(ParseErrorKind::MissingTarget))?;
        tok.parse()
            .map_err(|_| err(ParseErrorKind::BadTarget(tok.to_string())))
    };
    match head {
        "H" => Ok(Gate::H {
            target: target(tokens)?,
        }),
        "RZ" => {
            let a = angle(tokens)?;
            Ok(Gate::Rz {
                target: target(tokens)?,
                angle: a,
            })
        }
        "RY" => {
            let a = angle(tokens)?;
            Ok(Gate::Ry {
                target: target(tokens)?,
                angle: a,
            })
        }
        "CNOT" => {
            let control = target(tokens)?;
            let t = target(tokens)?;
            Ok(Gate::Cnot { control, target: t })
        }
        "GPHASE" => Ok(Gate::GPhase {
            angle: angle(tokens)?,
        }),
        other => Err(err(ParseErrorKind::UnknownGate(other.to_string()))),
    }
}

impl fmt::Display for GateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Fixed-width hash identifying a sequence up to angle canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequenceDigest(pub [u8; 32]);

impl fmt::Display for SequenceDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn parse_single_hadamard() {
        let seq = GateSequence::parse("qubits 1\nH 0").unwrap();
        assert_eq!(seq.num_qubits(), 1);
        assert_eq!(seq.gates(), &[Gate::H { target: 0 }]);
    }

    #[test]
    fn parse_two_gate_sequence() {
        let seq = GateSequence::parse("qubits 2\nCNOT 0 1\nRZ 0.785398163 1").unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(
            seq.gates()[0],
            Gate::Cnot {
                control: 0,
                target: 1
            }
        );
        match seq.gates()[1] {
            Gate::Rz { target, angle } => {
                assert_eq!(target, 1);
                assert!((angle - 0.785398163).abs() < 1e-15);
            }
            ref g => panic!("unexpected gate {g:?}"),
        }
    }

    #[test]
    fn parse_rejects_out_of_range_target() {
        let err = GateSequence::parse("qubits 1\nCNOT 0 1").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Invalid(_)));
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = GateSequence::parse("qubits 2\nH 0\nFOO 1").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(matches!(err.kind, ParseErrorKind::UnknownGate(_)));
    }

    #[test]
    fn parse_missing_angle() {
        let err = GateSequence::parse("qubits 1\nRZ").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingAngle);
    }

    #[test]
    fn parse_skips_comments_and_blanks() {
        let seq = GateSequence::parse("# header comment\n\nqubits 2\nH 0 # trailing\n\nCNOT 0 1\n")
            .unwrap();
        assert_eq!(seq.len(), 2);
    }

    #[test]
    fn parse_rejects_missing_header() {
        let err = GateSequence::parse("H 0").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingHeader);
    }

    #[test]
    fn parse_rejects_nan_angle() {
        assert!(GateSequence::parse("qubits 1\nRZ NaN 0").is_err());
        assert!(GateSequence::parse("qubits 1\nRZ inf 0").is_err());
    }

    #[test]
    fn adjoint_of_hadamard_is_hadamard() {
        let seq = GateSequence::new(1, vec![Gate::H { target: 0 }]).unwrap();
        assert_eq!(seq.adjoint(), seq);
    }

    #[test]
    fn adjoint_reverses_and_negates() {
        let seq = GateSequence::new(
            2,
            vec![
                Gate::Rz {
                    target: 0,
                    angle: FRAC_PI_4,
                },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
            ],
        )
        .unwrap();
        let adj = seq.adjoint();
        assert_eq!(
            adj.gates(),
            &[
                Gate::Cnot {
                    control: 0,
                    target: 1
                },
                Gate::Rz {
                    target: 0,
                    angle: -FRAC_PI_4
                },
            ]
        );
    }

    #[test]
    fn concat_empty_is_identity_element() {
        let seq = GateSequence::parse("qubits 2\nH 1\nCNOT 1 0").unwrap();
        let empty = GateSequence::identity(2);
        assert_eq!(empty.concat(&seq).unwrap(), seq);
        assert_eq!(seq.concat(&empty).unwrap(), seq);
    }

    #[test]
    fn concat_rejects_width_mismatch() {
        let a = GateSequence::identity(2);
        let b = GateSequence::identity(3);
        assert!(matches!(
            a.concat(&b),
            Err(CircuitError::WidthMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn cnot_needs_distinct_qubits() {
        assert!(matches!(
            GateSequence::new(
                2,
                vec![Gate::Cnot {
                    control: 1,
                    target: 1
                }]
            ),
            Err(CircuitError::DuplicateTargets { target: 1 })
        ));
    }

    #[test]
    fn remap_shifts_targets() {
        let seq = GateSequence::parse("qubits 2\nCNOT 0 1").unwrap();
        let wide = seq.embed_at(2, 5).unwrap();
        assert_eq!(
            wide.gates(),
            &[Gate::Cnot {
                control: 2,
                target: 3
            }]
        );
        assert_eq!(wide.num_qubits(), 5);
    }

    #[test]
    fn remap_rejects_collisions() {
        let seq = GateSequence::parse("qubits 2\nCNOT 0 1").unwrap();
        assert!(matches!(
            seq.remap(&[1, 1], 3),
            Err(CircuitError::QubitMapCollision { index: 1 })
        ));
    }

    #[test]
    fn digest_ignores_angle_representation() {
        let a = GateSequence::new(
            1,
            vec![Gate::Rz {
                target: 0,
                angle: FRAC_PI_4,
            }],
        )
        .unwrap();
        let b = GateSequence::new(
            1,
            vec![Gate::Rz {
                target: 0,
                angle: FRAC_PI_4 + ANGLE_PERIOD,
            }],
        )
        .unwrap();
        // different stored angles, same canonical form
        assert_ne!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn digest_snaps_near_grid_angles() {
        let exact = GateSequence::new(
            1,
            vec![Gate::Rz {
                target: 0,
                angle: 3.0 * FRAC_PI_4,
            }],
        )
        .unwrap();
        let drifted = GateSequence::new(
            1,
            vec![Gate::Rz {
                target: 0,
                angle: FRAC_PI_4 + FRAC_PI_4 + FRAC_PI_4 + 1e-14,
            }],
        )
        .unwrap();
        assert_eq!(exact.digest(), drifted.digest());
    }

    #[test]
    fn canonical_angle_clears_negative_zero() {
        let a = canonical_angle(-0.0, ANGLE_PERIOD);
        assert_eq!(a.to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn gphase_canonicalizes_modulo_two_pi() {
        let a = GateSequence::new(1, vec![Gate::GPhase { angle: 0.5 }]).unwrap();
        let b = GateSequence::new(
            1,
            vec![Gate::GPhase {
                angle: 0.5 + 2.0 * PI,
            }],
        )
        .unwrap();
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn gphase_supports_nothing() {
        let g = Gate::GPhase { angle: 1.0 };
        assert!(g.support().is_empty());
        assert!(g.disjoint_with(&Gate::H { target: 0 }));
    }
}
