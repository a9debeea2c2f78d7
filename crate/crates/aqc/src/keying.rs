//! Key-register encryption and quantum authorization keys.
//!
//! The dispatch unitary `G` is hidden behind two secret unitaries acting
//! only on the key register: a pre-rotation applied before `G` and a
//! post-rotation applied after, giving `G′ = (post ⊗ I) · G · (pre ⊗ I)`.
//! The key for index `i` is the pre-rotation's adjoint applied to the basis
//! state `|i, 0…0⟩`; running `G′` on key ⊗ input applies program `i` to the
//! input and leaves the key rotated by the post-rotation. Running the
//! adjoint sequence with that used key applies the inverse program and
//! regenerates the original key, so keys recycle as long as they stay
//! coherent.
//!
//! Key states are carried as explicit statevectors: a simulation stand-in
//! for a quantum channel. The amplitude data is secret material and never
//! enters a public artifact.

use crate::circuit::{CircuitError, Gate, GateSequence};
use crate::sim::{apply, reduced_density, SimError, StateVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Purity above which a joint output counts as a product across the
/// key/input cut.
pub const PRODUCT_PURITY_TOL: f64 = 1e-9;

/// Default sampled length of a secret key-register unitary, per key qubit.
pub const KEY_ROTATION_LEN_PER_QUBIT: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KeyingError {
    #[error("register width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("key index {index} out of range for {index_qubits} index qubits")]
    IndexOutOfRange { index: u64, index_qubits: usize },
    #[error("cannot sample gates over an empty qubit set")]
    EmptyQubitSet,
    #[error("qubit {qubit} repeated or out of range in sample set")]
    BadSampleSet { qubit: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// The secret key-register rotations. `pre_rotation` acts before the
/// dispatch unitary and defines the key basis; `post_rotation` acts after
/// it and determines the used-key states.
#[derive(Debug, Clone)]
pub struct KeySecrets {
    pub pre_rotation: GateSequence,
    pub post_rotation: GateSequence,
    pub rng_seed: u64,
}

impl KeySecrets {
    /// Sample both rotations over `key_qubits` qubits from one seed.
    pub fn sample(key_qubits: usize, rng_seed: u64) -> Result<Self, KeyingError> {
        let qubits: Vec<usize> = (0..key_qubits).collect();
        let len = KEY_ROTATION_LEN_PER_QUBIT * key_qubits;
        let mut rng_pre = ChaCha8Rng::seed_from_u64(crate::seeds::derive(rng_seed, "key/pre"));
        let mut rng_post = ChaCha8Rng::seed_from_u64(crate::seeds::derive(rng_seed, "key/post"));
        Ok(KeySecrets {
            pre_rotation: sample_random_sequence(key_qubits, &qubits, len, &mut rng_pre)?,
            post_rotation: sample_random_sequence(key_qubits, &qubits, len, &mut rng_post)?,
            rng_seed,
        })
    }

    /// Trivial secrets (both rotations empty); keys are bare basis states.
    pub fn trivial(key_qubits: usize) -> Self {
        KeySecrets {
            pre_rotation: GateSequence::identity(key_qubits),
            post_rotation: GateSequence::identity(key_qubits),
            rng_seed: 0,
        }
    }

    pub fn key_qubits(&self) -> usize {
        self.pre_rotation.num_qubits()
    }
}

/// A quantum authorization key. The issued index is known to the programmer
/// only; [`redacted`](Self::redacted) strips it before the key leaves the
/// programmer's hands.
#[derive(Debug, Clone)]
pub struct KeyState {
    pub state: StateVector,
    pub issued_index: Option<u64>,
}

impl KeyState {
    /// Copy with the secret index removed, as delivered to a user.
    pub fn redacted(&self) -> KeyState {
        KeyState {
            state: self.state.clone(),
            issued_index: None,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }
}

/// Uniformly random gate sequence over the given qubits: gate kinds uniform
/// over the alphabet restricted to the set (CNOT needs two qubits), rotation
/// angles uniform in `[0, 2π)`.
pub fn sample_random_sequence<R: Rng + ?Sized>(
    num_qubits: usize,
    qubits: &[usize],
    length: usize,
    rng: &mut R,
) -> Result<GateSequence, KeyingError> {
    if qubits.is_empty() && length > 0 {
        return Err(KeyingError::EmptyQubitSet);
    }
    let mut seen = vec![false; num_qubits];
    for &q in qubits {
        if q >= num_qubits || seen[q] {
            return Err(KeyingError::BadSampleSet { qubit: q });
        }
        seen[q] = true;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let kinds = if qubits.len() >= 2 { 5 } else { 4 };
    let mut gates = Vec::with_capacity(length);
    for _ in 0..length {
        let target = *qubits.choose(rng).expect("non-empty");
        let gate = match rng.gen_range(0..kinds) {
            0 => Gate::H { target },
            1 => Gate::Rz {
                target,
                angle: rng.gen_range(0.0..two_pi),
            },
            2 => Gate::Ry {
                target,
                angle: rng.gen_range(0.0..two_pi),
            },
            3 => Gate::GPhase {
                angle: rng.gen_range(0.0..two_pi),
            },
            _ => {
                let control = target;
                let mut t = *qubits.choose(rng).expect("non-empty");
                while t == control {
                    t = *qubits.choose(rng).expect("non-empty");
                }
                Gate::Cnot { control, target: t }
            }
        };
        gates.push(gate);
    }
    Ok(GateSequence::new(num_qubits, gates)?)
}

/// Seeded convenience wrapper around [`sample_random_sequence`].
pub fn random_sequence(
    num_qubits: usize,
    qubits: &[usize],
    length: usize,
    seed: u64,
) -> Result<GateSequence, KeyingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_random_sequence(num_qubits, qubits, length, &mut rng)
}

/// Encrypt: pre-rotation gates, then `g`, then post-rotation gates, with
/// both rotations embedded on the leading `key_qubits` of `g`'s register.
pub fn encode(
    g: &GateSequence,
    secrets: &KeySecrets,
    key_qubits: usize,
) -> Result<GateSequence, KeyingError> {
    if secrets.key_qubits() != key_qubits || key_qubits > g.num_qubits() {
        return Err(KeyingError::WidthMismatch {
            expected: key_qubits,
            got: secrets.key_qubits(),
        });
    }
    let total = g.num_qubits();
    let pre = secrets.pre_rotation.embed_at(0, total)?;
    let post = secrets.post_rotation.embed_at(0, total)?;
    Ok(pre.concat(g)?.concat(&post)?)
}

/// Issue the key for `index`: the pre-rotation's adjoint applied to
/// `|index, 0…0⟩` on the `key_qubits`-wide register.
pub fn issue_key(
    index: u64,
    secrets: &KeySecrets,
    key_qubits: usize,
    index_qubits: usize,
) -> Result<KeyState, KeyingError> {
    if secrets.key_qubits() != key_qubits {
        return Err(KeyingError::WidthMismatch {
            expected: key_qubits,
            got: secrets.key_qubits(),
        });
    }
    if index_qubits > key_qubits || index >= (1u64 << index_qubits) {
        return Err(KeyingError::IndexOutOfRange {
            index,
            index_qubits,
        });
    }
    let basis_index = (index as usize) << (key_qubits - index_qubits);
    let basis = StateVector::basis(key_qubits, basis_index)?;
    let state = apply(&secrets.pre_rotation.adjoint(), &basis)?;
    Ok(KeyState {
        state,
        issued_index: Some(index),
    })
}

/// Outcome of running an encoded program on key ⊗ input.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    /// The joint output factored across the key/input cut.
    Product {
        used_key: StateVector,
        output: StateVector,
        purity: f64,
    },
    /// Wrong-key signature: the joint output stayed entangled, so no
    /// meaningful per-register factors exist.
    Entangled { joint: StateVector, purity: f64 },
}

impl RunOutcome {
    pub fn is_product(&self) -> bool {
        matches!(self, RunOutcome::Product { .. })
    }

    pub fn output(&self) -> Option<&StateVector> {
        match self {
            RunOutcome::Product { output, .. } => Some(output),
            RunOutcome::Entangled { .. } => None,
        }
    }

    pub fn used_key(&self) -> Option<&StateVector> {
        match self {
            RunOutcome::Product { used_key, .. } => Some(used_key),
            RunOutcome::Entangled { .. } => None,
        }
    }
}

/// Run the encoded sequence on `key ⊗ input` and factor the result.
///
/// The joint output is declared a product when the input-side reduced state
/// has purity at least `1 − PRODUCT_PURITY_TOL`; the factors returned are
/// each determined up to an unobservable global phase.
pub fn run(
    encoded: &GateSequence,
    key: &KeyState,
    input: &StateVector,
) -> Result<RunOutcome, KeyingError> {
    run_state(encoded, &key.state, input)
}

/// [`run`] for a bare key statevector (e.g. a used key during recycling).
pub fn run_state(
    encoded: &GateSequence,
    key_state: &StateVector,
    input: &StateVector,
) -> Result<RunOutcome, KeyingError> {
    let m = key_state.num_qubits();
    let n = input.num_qubits();
    if encoded.num_qubits() != m + n {
        return Err(KeyingError::WidthMismatch {
            expected: encoded.num_qubits(),
            got: m + n,
        });
    }
    let joint = apply(encoded, &key_state.tensor(input)?)?;
    let input_qubits: Vec<usize> = (m..m + n).collect();
    let rho_input = reduced_density(&joint, &input_qubits)?;
    let purity = rho_input.purity();
    if purity < 1.0 - PRODUCT_PURITY_TOL {
        return Ok(RunOutcome::Entangled { joint, purity });
    }
    let key_qubits: Vec<usize> = (0..m).collect();
    let rho_key = reduced_density(&joint, &key_qubits)?;
    Ok(RunOutcome::Product {
        used_key: rho_key.dominant_pure_factor()?,
        output: rho_input.dominant_pure_factor()?,
        purity,
    })
}

/// Run the adjoint sequence on `used_key ⊗ input`: applies the inverse
/// program and, with an honest used key, returns the originally issued key.
pub fn recycle(
    encoded: &GateSequence,
    used_key: &StateVector,
    input: &StateVector,
) -> Result<RunOutcome, KeyingError> {
    run_state(&encoded.adjoint(), used_key, input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn zero_length_sample_is_empty() {
        let s = random_sequence(2, &[0, 1], 0, 9).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn same_seed_same_sequence() {
        let a = random_sequence(3, &[0, 1, 2], 40, 1234).unwrap();
        let b = random_sequence(3, &[0, 1, 2], 40, 1234).unwrap();
        assert_eq!(a, b);
        let c = random_sequence(3, &[0, 1, 2], 40, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_qubit_set_rejected() {
        assert!(matches!(
            random_sequence(2, &[], 1, 0),
            Err(KeyingError::EmptyQubitSet)
        ));
    }

    #[test]
    fn sample_respects_qubit_restriction() {
        let s = random_sequence(4, &[1, 3], 60, 5).unwrap();
        for g in s.gates() {
            for q in g.support() {
                assert!(q == 1 || q == 3);
            }
        }
    }

    #[test]
    fn encode_with_trivial_secrets_is_unchanged() {
        let g = GateSequence::parse("qubits 2\nCNOT 0 1\nH 1").unwrap();
        let enc = encode(&g, &KeySecrets::trivial(1), 1).unwrap();
        assert_eq!(enc, g);
    }

    #[test]
    fn issue_key_trivial_secrets_gives_basis_state() {
        let key = issue_key(0, &KeySecrets::trivial(2), 2, 1).unwrap();
        assert!((key.state.amplitudes()[0].re - 1.0).abs() < 1e-12);
        let key = issue_key(1, &KeySecrets::trivial(2), 2, 1).unwrap();
        // index 1 sits on the index qubit, dummy stays |0⟩: basis |10⟩
        assert!((key.state.amplitudes()[0b10].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_pre_rotation_gives_plus_key() {
        let secrets = KeySecrets {
            pre_rotation: GateSequence::new(1, vec![Gate::H { target: 0 }]).unwrap(),
            post_rotation: GateSequence::identity(1),
            rng_seed: 0,
        };
        let key = issue_key(0, &secrets, 1, 1).unwrap();
        for amp in key.state.amplitudes() {
            assert!((amp.re - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn issued_keys_are_orthonormal() {
        let secrets = KeySecrets::sample(2, 77).unwrap();
        let keys: Vec<KeyState> = (0..4)
            .map(|i| issue_key(i, &secrets, 2, 2).unwrap())
            .collect();
        for i in 0..4 {
            for j in 0..4 {
                let inner = keys[i].state.inner(&keys[j].state).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (inner.norm() - expected).abs() < 1e-9,
                    "⟨{i}|{j}⟩ = {inner}"
                );
            }
        }
    }

    #[test]
    fn index_out_of_range_rejected() {
        assert!(matches!(
            issue_key(2, &KeySecrets::trivial(1), 1, 1),
            Err(KeyingError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn identity_program_run_returns_input() {
        // G = identity on 1+1 qubits, honest key |0⟩
        let encoded = GateSequence::identity(2);
        let key = issue_key(0, &KeySecrets::trivial(1), 1, 1).unwrap();
        let input = apply(
            &GateSequence::new(1, vec![Gate::Ry { target: 0, angle: 0.77 }]).unwrap(),
            &StateVector::zero(1).unwrap(),
        )
        .unwrap();
        let out = run(&encoded, &key, &input).unwrap();
        match out {
            RunOutcome::Product { output, .. } => {
                assert!((output.fidelity(&input).unwrap() - 1.0).abs() < 1e-9);
            }
            RunOutcome::Entangled { .. } => panic!("product expected"),
        }
    }

    #[test]
    fn wrong_key_on_entangler_reports_entangled() {
        // encoded = CNOT(key → input); |+⟩ key entangles the registers
        let encoded = GateSequence::new(
            2,
            vec![Gate::Cnot {
                control: 0,
                target: 1,
            }],
        )
        .unwrap();
        let plus = apply(
            &GateSequence::new(1, vec![Gate::H { target: 0 }]).unwrap(),
            &StateVector::zero(1).unwrap(),
        )
        .unwrap();
        let key = KeyState {
            state: plus,
            issued_index: None,
        };
        let out = run(&encoded, &key, &StateVector::zero(1).unwrap()).unwrap();
        match out {
            RunOutcome::Entangled { purity, .. } => {
                assert!((purity - 0.5).abs() < 1e-9);
            }
            RunOutcome::Product { .. } => panic!("entangled expected"),
        }
    }

    #[test]
    fn run_then_recycle_restores_key_and_input() {
        let encoded = GateSequence::new(
            2,
            vec![
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
                Gate::Ry {
                    target: 1,
                    angle: 1.1,
                },
            ],
        )
        .unwrap();
        let key = issue_key(1, &KeySecrets::trivial(1), 1, 1).unwrap();
        let input = StateVector::zero(1).unwrap();
        let RunOutcome::Product { used_key, output, .. } = run(&encoded, &key, &input).unwrap()
        else {
            panic!("product expected");
        };
        let RunOutcome::Product {
            used_key: recovered,
            output: restored,
            ..
        } = recycle(&encoded, &used_key, &output).unwrap()
        else {
            panic!("product expected");
        };
        assert!((recovered.fidelity(&key.state).unwrap() - 1.0).abs() < 1e-9);
        assert!((restored.fidelity(&input).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn redacted_key_drops_the_index() {
        let key = issue_key(1, &KeySecrets::trivial(2), 2, 1).unwrap();
        assert_eq!(key.issued_index, Some(1));
        assert_eq!(key.redacted().issued_index, None);
    }
}
