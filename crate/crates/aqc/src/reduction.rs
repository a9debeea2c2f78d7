//! Reduction machinery tying key forging to the exact non-identity check.
//!
//! A gate sequence on `n` qubits is controlled-ized into a sequence on
//! `n + 1` qubits by prefixing a control qubit and replacing every gate by
//! its controlled decomposition. Dressing the control with two secret
//! single-qubit rotations produces a [`ModifiedInstance`]: a miniature
//! keyed program whose single-qubit keys select between "do nothing" and
//! "apply the base unitary". A hypothetical key-forging algorithm, modeled
//! as a planted white-box [`AttackerChannel`], then distinguishes the two
//! instance classes through the probe statistics of [`distinguish`] — the
//! mechanical content of the security reduction.

use crate::circuit::{CircuitError, GateSequence};
use crate::keying::KeyingError;
use crate::pga::{controlled_on_value, PgaError};
use crate::shuffle::{shuffle, ShuffleConfig, ShuffleError};
use crate::sim::{
    apply, equal_up_to_phase, reduced_density, to_matrix, DensityMatrix, SimError, StateVector,
    UnitaryMatrix,
};
use num_complex::Complex64;
use std::fmt;

/// Ancilla width of the planted attacker: one forged-key qubit plus two
/// label qubits.
pub const DEFAULT_ATTACKER_ANCILLAS: usize = 3;

/// Slack for classifying probe statistics against their ideal pattern;
/// exact density-matrix arithmetic makes this generous.
pub const DECISION_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("expected a single-qubit sequence, got {got} qubits")]
    NotSingleQubit { got: usize },
    #[error("register width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("need one forged key per program: {keys} keys, {programs} programs")]
    KeyCountMismatch { keys: usize, programs: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pga(#[from] PgaError),
    #[error(transparent)]
    Shuffle(#[from] ShuffleError),
    #[error(transparent)]
    Keying(#[from] KeyingError),
}

/// Controlled-ization: prefix a control qubit (index 0) and replace every
/// gate by its controlled decomposition. The result implements
/// `|0⟩⟨0|⊗I + |1⟩⟨1|⊗U` exactly; global-phase gates become control-qubit
/// phases. Each gate expands by a bounded factor, so the cost is linear in
/// the input length.
pub fn controlize(x: &GateSequence) -> Result<GateSequence, ReductionError> {
    Ok(controlled_on_value(x, 1, 1)?)
}

/// Verdict of the exact non-identity check oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityVerdict {
    pub is_identity_up_to_phase: bool,
    /// `θ` with `U ≈ e^{iθ}·I`, when identity-like.
    pub phase: Option<f64>,
    /// `1 − |tr(U)|/2^n`.
    pub trace_residual: f64,
}

/// Brute-force oracle for the exact non-identity check: builds the dense
/// matrix and compares it against the identity up to global phase. Only
/// viable at desk scale; the register cap of the matrix backend applies.
pub fn exact_nonidentity_check(
    x: &GateSequence,
    tol: f64,
) -> Result<IdentityVerdict, ReductionError> {
    let m = to_matrix(x)?;
    // identity first: the reported phase θ then satisfies U ≈ e^{iθ}·I
    let eq = equal_up_to_phase(&UnitaryMatrix::identity(m.dim()), &m, tol)?;
    Ok(IdentityVerdict {
        is_identity_up_to_phase: eq.equivalent,
        phase: eq.phase,
        trace_residual: 1.0 - eq.overlap,
    })
}

/// A dressed controlled instance: the base sequence, the two secret control
/// rotations, the built sequence, and its shuffled public form.
#[derive(Debug, Clone)]
pub struct ModifiedInstance {
    pub base: GateSequence,
    pub v_left: GateSequence,
    pub v_right: GateSequence,
    pub built: GateSequence,
    pub shuffled: GateSequence,
}

impl ModifiedInstance {
    /// The single-qubit key for `index`: the right rotation's adjoint
    /// applied to `|index⟩`.
    pub fn key(&self, index: usize) -> Result<StateVector, ReductionError> {
        let basis = StateVector::basis(1, index)?;
        Ok(apply(&self.v_right.adjoint(), &basis)?)
    }

    /// The superposed key: the right rotation's adjoint applied to `|+⟩`.
    pub fn plus_key(&self) -> Result<StateVector, ReductionError> {
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let plus = StateVector::from_amplitudes(1, vec![inv_sqrt2, inv_sqrt2])?;
        Ok(apply(&self.v_right.adjoint(), &plus)?)
    }
}

/// Build a modified instance: controlled-ize `base`, sandwich the control
/// qubit between `v_right` (before) and `v_left` (after), then shuffle.
pub fn build_modified_instance(
    base: &GateSequence,
    v_left: &GateSequence,
    v_right: &GateSequence,
    shuffle_cfg: &ShuffleConfig,
) -> Result<ModifiedInstance, ReductionError> {
    for v in [v_left, v_right] {
        if v.num_qubits() != 1 {
            return Err(ReductionError::NotSingleQubit {
                got: v.num_qubits(),
            });
        }
    }
    let controlled = controlize(base)?;
    let width = controlled.num_qubits();
    let pre = v_right.embed_at(0, width)?;
    let post = v_left.embed_at(0, width)?;
    let built = pre.concat(&controlled)?.concat(&post)?;
    let shuffled = shuffle(&built, shuffle_cfg)?;
    Ok(ModifiedInstance {
        base: base.clone(),
        v_left: v_left.clone(),
        v_right: v_right.clone(),
        built,
        shuffled,
    })
}

/// Check a claimed forged key set against the required contract: pairwise
/// orthonormal keys, and for each index the program `f` must factor
/// `f(ψᵢ ⊗ φ) = ψ′ᵢ ⊗ Uᵢφ` with one fixed `ψ′ᵢ` over a basis-spanning
/// battery of inputs (the basis states plus superposition probes, which
/// catch per-branch phase cheats).
pub fn validate_forged_key(
    f: &GateSequence,
    forged_keys: &[StateVector],
    programs: &[GateSequence],
    tol: f64,
) -> Result<bool, ReductionError> {
    if forged_keys.len() != programs.len() || forged_keys.is_empty() {
        return Err(ReductionError::KeyCountMismatch {
            keys: forged_keys.len(),
            programs: programs.len(),
        });
    }
    let key_width = forged_keys[0].num_qubits();
    let n = programs[0].num_qubits();
    if forged_keys.iter().any(|k| k.num_qubits() != key_width) {
        return Err(ReductionError::WidthMismatch {
            expected: key_width,
            got: forged_keys
                .iter()
                .map(StateVector::num_qubits)
                .find(|&w| w != key_width)
                .unwrap_or(key_width),
        });
    }
    if programs.iter().any(|p| p.num_qubits() != n) {
        return Err(ReductionError::WidthMismatch {
            expected: n,
            got: programs
                .iter()
                .map(GateSequence::num_qubits)
                .find(|&w| w != n)
                .unwrap_or(n),
        });
    }
    if f.num_qubits() != key_width + n {
        return Err(ReductionError::WidthMismatch {
            expected: key_width + n,
            got: f.num_qubits(),
        });
    }

    // (a) orthonormality
    for i in 0..forged_keys.len() {
        for j in 0..forged_keys.len() {
            let inner = forged_keys[i].inner(&forged_keys[j])?;
            let expected = if i == j { 1.0 } else { 0.0 };
            if (inner.norm() - expected).abs() > tol {
                return Ok(false);
            }
        }
    }

    // (b) factorization with the correct program on every input
    let dim_in = 1usize << n;
    let probes = probe_battery(n)?;
    for (key, program) in forged_keys.iter().zip(programs) {
        // extract the used-key factor from the first basis probe
        let joint0 = apply(f, &key.tensor(&probes[0])?)?;
        let w0 = apply(program, &probes[0])?;
        let pivot = (0..dim_in)
            .max_by(|&a, &b| {
                w0.amplitudes()[a]
                    .norm()
                    .partial_cmp(&w0.amplitudes()[b].norm())
                    .unwrap()
            })
            .expect("non-empty");
        let scale = w0.amplitudes()[pivot];
        if scale.norm() < 1e-12 {
            return Ok(false);
        }
        let key_dim = 1usize << key_width;
        let used: Vec<Complex64> = (0..key_dim)
            .map(|s| joint0.amplitudes()[s * dim_in + pivot] / scale)
            .collect();
        let used_norm: f64 = used.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (used_norm - 1.0).abs() > 1e-6 {
            return Ok(false); // output is entangled across the cut
        }
        let used_key = StateVector::from_amplitudes(
            key_width,
            used.iter().map(|a| a / used_norm).collect(),
        )?;
        for probe in &probes {
            let actual = apply(f, &key.tensor(probe)?)?;
            let expected = used_key.tensor(&apply(program, probe)?)?;
            // no per-probe phase freedom: the shared used-key factor
            // already absorbed the one global phase
            let deviation: f64 = actual
                .amplitudes()
                .iter()
                .zip(expected.amplitudes())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            if deviation > 2.0 * tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Basis states plus two superposition probes.
fn probe_battery(n: usize) -> Result<Vec<StateVector>, SimError> {
    let dim = 1usize << n;
    let mut probes: Vec<StateVector> = (0..dim)
        .map(|j| StateVector::basis(n, j))
        .collect::<Result<_, _>>()?;
    let uniform = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    probes.push(StateVector::from_amplitudes(
        n,
        vec![uniform; dim],
    )?);
    let twisted: Vec<Complex64> = (0..dim)
        .map(|j| Complex64::from_polar(1.0 / (dim as f64).sqrt(), 0.7 * j as f64))
        .collect();
    probes.push(StateVector::from_amplitudes(n, twisted)?);
    Ok(probes)
}

/// A trace-preserving attack map realized as a unitary on the key qubit
/// plus ancillas initialized to `|0…0⟩`. The planted attacker copies the
/// key in its known rotation basis onto the first ancilla (a valid forged
/// key: the honest key itself) and leaves the label ancillas untouched.
#[derive(Debug, Clone)]
pub struct AttackerChannel {
    pub unitary: GateSequence,
    pub ancilla_qubits: usize,
}

impl AttackerChannel {
    /// Attacker keyed to a claimed right-rotation: copies in that basis.
    pub fn keyed_to(
        v_right: &GateSequence,
        ancilla_qubits: usize,
    ) -> Result<AttackerChannel, ReductionError> {
        if v_right.num_qubits() != 1 {
            return Err(ReductionError::NotSingleQubit {
                got: v_right.num_qubits(),
            });
        }
        if ancilla_qubits == 0 {
            return Err(ReductionError::WidthMismatch {
                expected: 1,
                got: 0,
            });
        }
        let width = 1 + ancilla_qubits;
        let rotate = v_right.embed_at(0, width)?;
        let copy = GateSequence::new(
            width,
            vec![crate::circuit::Gate::Cnot {
                control: 0,
                target: 1,
            }],
        )?;
        let unrotate_key = v_right.adjoint().embed_at(0, width)?;
        let unrotate_copy = v_right.adjoint().embed_at(1, width)?;
        let unitary = rotate
            .concat(&copy)?
            .concat(&unrotate_key)?
            .concat(&unrotate_copy)?;
        Ok(AttackerChannel {
            unitary,
            ancilla_qubits,
        })
    }

    pub fn width(&self) -> usize {
        1 + self.ancilla_qubits
    }

    /// `tr_anc[W(ρ ⊗ |0̄⟩⟨0̄|)W†]` on the key qubit.
    pub fn apply_channel(&self, rho: &DensityMatrix) -> Result<DensityMatrix, ReductionError> {
        if rho.num_qubits() != 1 {
            return Err(ReductionError::WidthMismatch {
                expected: 1,
                got: rho.num_qubits(),
            });
        }
        let blank = DensityMatrix::from_pure(&StateVector::zero(self.ancilla_qubits)?)?;
        let joint = rho.tensor(&blank)?.evolve(&self.unitary)?;
        Ok(joint.partial_trace(&[0])?)
    }

    /// Largest deviation of the attack unitary from unitarity.
    pub fn unitarity_residual(&self) -> Result<f64, ReductionError> {
        Ok(to_matrix(&self.unitary)?.unitarity_residual())
    }

    /// Joint post-attack state for a pure input key.
    pub fn apply_to_pure(&self, key: &StateVector) -> Result<StateVector, ReductionError> {
        if key.num_qubits() != 1 {
            return Err(ReductionError::WidthMismatch {
                expected: 1,
                got: key.num_qubits(),
            });
        }
        let joint = key.tensor(&StateVector::zero(self.ancilla_qubits)?)?;
        Ok(apply(&self.unitary, &joint)?)
    }
}

/// White-box attacker for an instance built by this module: keyed to the
/// planted right-rotation secret.
pub fn plant_whitebox_attacker(
    inst: &ModifiedInstance,
) -> Result<AttackerChannel, ReductionError> {
    AttackerChannel::keyed_to(&inst.v_right, DEFAULT_ATTACKER_ANCILLAS)
}

/// Which class the probe statistics point to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceClass {
    /// Statistics match the dispatching pattern (basis keys preserved,
    /// superposed key decohered): a genuinely controlled operation.
    Controlled,
    /// Statistics deviate from the dispatching pattern: consistent with a
    /// control-free product operation.
    ControlFree,
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceClass::Controlled => f.write_str("controlled"),
            InstanceClass::ControlFree => f.write_str("control-free"),
        }
    }
}

/// Probe statistics of an attacker against an instance's key family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinguishReport {
    /// `⟨φ₀|Γ(|φ₀⟩⟨φ₀|)|φ₀⟩` — basis-key survival.
    pub p_basis: f64,
    /// `⟨φ₊|Γ(|φ₊⟩⟨φ₊|)|φ₊⟩` — superposed-key survival.
    pub p_plus: f64,
    pub verdict: InstanceClass,
}

fn classify(p_basis: f64, p_plus: f64) -> InstanceClass {
    if (p_basis - 1.0).abs() < DECISION_SLACK && (p_plus - 0.5).abs() < DECISION_SLACK {
        InstanceClass::Controlled
    } else {
        InstanceClass::ControlFree
    }
}

/// Run the attacker channel on the instance's basis key and superposed key
/// and classify the statistics.
pub fn distinguish(
    inst: &ModifiedInstance,
    attacker: &AttackerChannel,
) -> Result<DistinguishReport, ReductionError> {
    let basis_key = inst.key(0)?;
    let plus_key = inst.plus_key()?;
    let gamma_basis = attacker.apply_channel(&DensityMatrix::from_pure(&basis_key)?)?;
    let gamma_plus = attacker.apply_channel(&DensityMatrix::from_pure(&plus_key)?)?;
    let p_basis = gamma_basis.expectation_with_pure(&basis_key)?;
    let p_plus = gamma_plus.expectation_with_pure(&plus_key)?;
    Ok(DistinguishReport {
        p_basis,
        p_plus,
        verdict: classify(p_basis, p_plus),
    })
}

/// Full key-survival matrix `⟨φᵢ|Γ(|φⱼ⟩⟨φⱼ|)|φᵢ⟩` over the basis keys.
pub fn basis_response_matrix(
    inst: &ModifiedInstance,
    attacker: &AttackerChannel,
) -> Result<[[f64; 2]; 2], ReductionError> {
    let keys = [inst.key(0)?, inst.key(1)?];
    let mut out = [[0.0; 2]; 2];
    for (j, kj) in keys.iter().enumerate() {
        let gamma = attacker.apply_channel(&DensityMatrix::from_pure(kj)?)?;
        for (i, ki) in keys.iter().enumerate() {
            out[i][j] = gamma.expectation_with_pure(ki)?;
        }
    }
    Ok(out)
}

/// Like [`distinguish`], but with `stolen` extra key qubits carried along
/// as a maximally mixed block the attacker never touches. Collecting extra
/// keys this way cannot change the statistics.
pub fn distinguish_with_mixed_keys(
    inst: &ModifiedInstance,
    attacker: &AttackerChannel,
    stolen: usize,
) -> Result<DistinguishReport, ReductionError> {
    let width = 1 + stolen + attacker.ancilla_qubits;
    // attacker acts on the probe qubit and its own ancillas, skipping the
    // stolen block: qubit 0 → 0, ancilla j → 1 + stolen + j
    let map: Vec<usize> = std::iter::once(0)
        .chain((0..attacker.ancilla_qubits).map(|j| 1 + stolen + j))
        .collect();
    let embedded = attacker.unitary.remap(&map, width)?;
    let blank = DensityMatrix::from_pure(&StateVector::zero(attacker.ancilla_qubits)?)?;
    let run_probe = |probe: &StateVector| -> Result<f64, ReductionError> {
        let rho = DensityMatrix::from_pure(probe)?;
        let joint = if stolen > 0 {
            rho.tensor(&DensityMatrix::maximally_mixed(stolen)?)?
                .tensor(&blank)?
        } else {
            rho.tensor(&blank)?
        };
        let evolved = joint.evolve(&embedded)?;
        let reduced = evolved.partial_trace(&[0])?;
        Ok(reduced.expectation_with_pure(probe)?)
    };
    let p_basis = run_probe(&inst.key(0)?)?;
    let p_plus = run_probe(&inst.plus_key()?)?;
    Ok(DistinguishReport {
        p_basis,
        p_plus,
        verdict: classify(p_basis, p_plus),
    })
}

/// Overlap of the attacker's ancilla records for the two basis keys: zero
/// whenever the forged-key records are orthogonal.
pub fn forged_record_overlap(
    inst: &ModifiedInstance,
    attacker: &AttackerChannel,
) -> Result<Complex64, ReductionError> {
    let anc: Vec<usize> = (1..attacker.width()).collect();
    let mut records = Vec::new();
    for index in 0..2 {
        let joint = attacker.apply_to_pure(&inst.key(index)?)?;
        let rho_anc = reduced_density(&joint, &anc)?;
        records.push(rho_anc.dominant_pure_factor()?);
    }
    Ok(records[0].inner(&records[1])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::sim::DEFAULT_TOL;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn h_seq() -> GateSequence {
        GateSequence::new(1, vec![Gate::H { target: 0 }]).unwrap()
    }

    #[test]
    fn controlize_x_is_cnot() {
        let x = GateSequence::new(1, crate::decompose::x_gates(0)).unwrap();
        let built = controlize(&x).unwrap();
        let m = to_matrix(&built).unwrap();
        let cnot = to_matrix(
            &GateSequence::new(
                2,
                vec![Gate::Cnot {
                    control: 0,
                    target: 1,
                }],
            )
            .unwrap(),
        )
        .unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!((m.get(r, c) - cnot.get(r, c)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn controlize_empty_is_identity() {
        let built = controlize(&GateSequence::identity(2)).unwrap();
        let m = to_matrix(&built).unwrap();
        let eq = equal_up_to_phase(&m, &UnitaryMatrix::identity(8), DEFAULT_TOL).unwrap();
        assert!(eq.equivalent);
        assert!(eq.phase.unwrap().abs() < 1e-9);
    }

    #[test]
    fn controlize_gphase_becomes_control_phase() {
        let seq = GateSequence::new(1, vec![Gate::GPhase { angle: FRAC_PI_4 }]).unwrap();
        let built = controlize(&seq).unwrap();
        let m = to_matrix(&built).unwrap();
        // diag(1, 1, e^{iπ/4}, e^{iπ/4})
        for col in 0..4usize {
            let want = if col >= 2 {
                Complex64::from_polar(1.0, FRAC_PI_4)
            } else {
                Complex64::new(1.0, 0.0)
            };
            assert!((m.get(col, col) - want).norm() < 1e-10, "col {col}");
        }
    }

    #[test]
    fn nonidentity_oracle_examples() {
        // T⁸ where T = RZ(π/4) with its phase made explicit
        let mut t8 = Vec::new();
        for _ in 0..8 {
            t8.push(Gate::Rz {
                target: 0,
                angle: FRAC_PI_4,
            });
            t8.push(Gate::GPhase { angle: FRAC_PI_8 });
        }
        let verdict =
            exact_nonidentity_check(&GateSequence::new(1, t8).unwrap(), DEFAULT_TOL).unwrap();
        assert!(verdict.is_identity_up_to_phase);
        let theta = verdict.phase.unwrap().rem_euclid(2.0 * std::f64::consts::PI);
        assert!(theta < 1e-9 || theta > 2.0 * std::f64::consts::PI - 1e-9);

        let verdict = exact_nonidentity_check(&h_seq(), DEFAULT_TOL).unwrap();
        assert!(!verdict.is_identity_up_to_phase);

        let cc = GateSequence::parse("qubits 2\nCNOT 0 1\nCNOT 0 1\nGPHASE 1.234").unwrap();
        let verdict = exact_nonidentity_check(&cc, DEFAULT_TOL).unwrap();
        assert!(verdict.is_identity_up_to_phase);
        assert!((verdict.phase.unwrap() - 1.234).abs() < 1e-9);
    }

    #[test]
    fn modified_instance_matches_matrix_oracle() {
        let inst = build_modified_instance(
            &h_seq(),
            &h_seq(),
            &h_seq(),
            &ShuffleConfig::new(30, 40, 5),
        )
        .unwrap();
        // built = (H⊗I)·C_H·(H⊗I)
        let ch = controlize(&h_seq()).unwrap();
        let h0 = h_seq().embed_at(0, 2).unwrap();
        let expected = to_matrix(&h0.concat(&ch).unwrap().concat(&h0).unwrap()).unwrap();
        let built = to_matrix(&inst.built).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!((built.get(r, c) - expected.get(r, c)).norm() < 1e-9);
            }
        }
        // shuffling preserved the unitary
        let eq = equal_up_to_phase(&built, &to_matrix(&inst.shuffled).unwrap(), 1e-8).unwrap();
        assert!(eq.equivalent);
    }

    #[test]
    fn rejects_multi_qubit_control_rotations() {
        let wide = GateSequence::identity(2);
        assert!(matches!(
            build_modified_instance(&h_seq(), &wide, &h_seq(), &ShuffleConfig::new(0, 10, 0)),
            Err(ReductionError::NotSingleQubit { got: 2 })
        ));
    }

    #[test]
    fn planted_attacker_is_unitary_and_replays_the_key() {
        let v = crate::keying::random_sequence(1, &[0], 6, 21).unwrap();
        let inst =
            build_modified_instance(&h_seq(), &GateSequence::identity(1), &v, &ShuffleConfig::new(0, 40, 0))
                .unwrap();
        let attacker = plant_whitebox_attacker(&inst).unwrap();
        assert!(attacker.unitarity_residual().unwrap() < 1e-9);

        // the forged record for each key is the key itself
        let overlap = forged_record_overlap(&inst, &attacker).unwrap();
        assert!(overlap.norm() < 1e-9);
    }

    #[test]
    fn distinguisher_sees_the_dispatching_pattern() {
        let inst = build_modified_instance(
            &h_seq(),
            &crate::keying::random_sequence(1, &[0], 5, 31).unwrap(),
            &crate::keying::random_sequence(1, &[0], 5, 32).unwrap(),
            &ShuffleConfig::new(0, 40, 0),
        )
        .unwrap();
        let attacker = plant_whitebox_attacker(&inst).unwrap();
        let report = distinguish(&inst, &attacker).unwrap();
        assert!((report.p_basis - 1.0).abs() < 1e-9);
        assert!((report.p_plus - 0.5).abs() < 1e-9);
        assert_eq!(report.verdict, InstanceClass::Controlled);
    }

    #[test]
    fn rekeying_the_attacker_swaps_the_pattern_on_identity_instances() {
        // base = identity (as HH), both rotations H
        let hh = GateSequence::parse("qubits 1\nH 0\nH 0").unwrap();
        let inst = build_modified_instance(&hh, &h_seq(), &h_seq(), &ShuffleConfig::new(0, 40, 0))
            .unwrap();
        let planted = plant_whitebox_attacker(&inst).unwrap();
        let honest = distinguish(&inst, &planted).unwrap();
        assert!((honest.p_basis - 1.0).abs() < 1e-9);
        assert!((honest.p_plus - 0.5).abs() < 1e-9);

        let rekeyed =
            AttackerChannel::keyed_to(&GateSequence::identity(1), DEFAULT_ATTACKER_ANCILLAS)
                .unwrap();
        let swapped = distinguish(&inst, &rekeyed).unwrap();
        assert!((swapped.p_basis - 0.5).abs() < 1e-9);
        assert!((swapped.p_plus - 1.0).abs() < 1e-9);
        assert_eq!(swapped.verdict, InstanceClass::ControlFree);
    }

    #[test]
    fn mixed_extra_keys_change_nothing() {
        let inst = build_modified_instance(
            &h_seq(),
            &crate::keying::random_sequence(1, &[0], 4, 41).unwrap(),
            &crate::keying::random_sequence(1, &[0], 4, 42).unwrap(),
            &ShuffleConfig::new(0, 40, 0),
        )
        .unwrap();
        let attacker = plant_whitebox_attacker(&inst).unwrap();
        let plain = distinguish(&inst, &attacker).unwrap();
        for stolen in [1usize, 2, 3] {
            let with = distinguish_with_mixed_keys(&inst, &attacker, stolen).unwrap();
            assert!((with.p_basis - plain.p_basis).abs() < 1e-9);
            assert!((with.p_plus - plain.p_plus).abs() < 1e-9);
        }
    }

    #[test]
    fn forged_key_validator_accepts_the_honest_program() {
        // trivial two-program family dispatched by a CNOT-style program:
        // f = C_X with keys |0⟩,|1⟩ implements {I, X}
        let programs = vec![
            GateSequence::identity(1),
            GateSequence::new(1, crate::decompose::x_gates(0)).unwrap(),
        ];
        let f = GateSequence::new(
            2,
            vec![Gate::Cnot {
                control: 0,
                target: 1,
            }],
        )
        .unwrap();
        let keys = vec![
            StateVector::basis(1, 0).unwrap(),
            StateVector::basis(1, 1).unwrap(),
        ];
        assert!(validate_forged_key(&f, &keys, &programs, 1e-9).unwrap());
    }

    #[test]
    fn forged_key_validator_rejects_non_orthonormal_keys() {
        let programs = vec![GateSequence::identity(1), GateSequence::identity(1)];
        let f = GateSequence::identity(2);
        let plus = apply(&h_seq(), &StateVector::zero(1).unwrap()).unwrap();
        let keys = vec![StateVector::basis(1, 0).unwrap(), plus];
        assert!(!validate_forged_key(&f, &keys, &programs, 1e-9).unwrap());
    }

    #[test]
    fn forged_key_validator_rejects_swapped_programs() {
        let programs = vec![
            GateSequence::new(1, crate::decompose::x_gates(0)).unwrap(),
            GateSequence::identity(1),
        ];
        // f dispatches {I, X} but the claim says {X, I}
        let f = GateSequence::new(
            2,
            vec![Gate::Cnot {
                control: 0,
                target: 1,
            }],
        )
        .unwrap();
        let keys = vec![
            StateVector::basis(1, 0).unwrap(),
            StateVector::basis(1, 1).unwrap(),
        ];
        assert!(!validate_forged_key(&f, &keys, &programs, 1e-9).unwrap());
    }

    #[test]
    fn forged_key_validator_rejects_phase_cheats() {
        // f applies a diagonal phase inside the input register: passes on
        // basis states, fails on superposition probes
        let f = GateSequence::new(
            2,
            vec![Gate::Rz {
                target: 1,
                angle: 1.3,
            }],
        )
        .unwrap();
        let programs = vec![GateSequence::identity(1), GateSequence::identity(1)];
        let keys = vec![
            StateVector::basis(1, 0).unwrap(),
            StateVector::basis(1, 1).unwrap(),
        ];
        assert!(!validate_forged_key(&f, &keys, &programs, 1e-9).unwrap());
    }
}
