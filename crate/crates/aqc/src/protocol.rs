//! Party roles around the pipeline: programmer, authenticator, user, and
//! eavesdropper.
//!
//! The programmer builds, encrypts and shuffles a program, has the result
//! signed, and publishes it; keys go to users one per head, tracked by a
//! [`KeyLedger`]. Users refuse to execute anything whose signature fails.
//! The eavesdropper module runs baseline black-box attacks (random key
//! guessing, exhaustive basis-grid search, stolen-key replay) and reports
//! their measured success rates; scoring the attacks requires the ground
//! truth, which only the experimenter holds.
//!
//! Authentication is a keyed-hash mock (HMAC-SHA256): real deployments
//! would swap in genuine signatures, which sit outside this toolkit's
//! scope. Key delivery is a file or in-memory handoff standing in for a
//! quantum channel; tapping is modeled by handing the eavesdropper key
//! files.

use crate::circuit::{CircuitError, GateSequence};
use crate::keying::{self, KeySecrets, KeyState, KeyingError, RunOutcome};
use crate::pga::{build_pga, PgaError, ProgramSpec};
use crate::seeds;
use crate::shuffle::{shuffle, ShuffleConfig, ShuffleError};
use crate::sim::{apply, SimError, StateVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("signature verification failed; refusing to execute")]
    Authenticity,
    #[error("register width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("a key for program `{program_id}` was already issued to `{user_id}`")]
    AlreadyIssued { program_id: String, user_id: String },
    #[error("ground truth does not match the published program")]
    TruthMismatch,
    #[error(transparent)]
    Keying(#[from] KeyingError),
    #[error(transparent)]
    Pga(#[from] PgaError),
    #[error(transparent)]
    Shuffle(#[from] ShuffleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

const HMAC_BLOCK: usize = 64;

/// Keyed-hash signer standing in for real authentication infrastructure.
#[derive(Debug, Clone)]
pub struct Authenticator {
    key: Vec<u8>,
}

impl Authenticator {
    pub fn new(key: impl Into<Vec<u8>>) -> Self {
        Authenticator { key: key.into() }
    }

    /// HMAC-SHA256 over the message.
    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        let mut key = self.key.clone();
        if key.len() > HMAC_BLOCK {
            key = Sha256::digest(&key).to_vec();
        }
        key.resize(HMAC_BLOCK, 0);
        let inner: Vec<u8> = key.iter().map(|b| b ^ 0x36).collect();
        let outer: Vec<u8> = key.iter().map(|b| b ^ 0x5c).collect();
        let mut h = Sha256::new();
        h.update(&inner);
        h.update(message);
        let inner_hash = h.finalize();
        let mut h = Sha256::new();
        h.update(&outer);
        h.update(inner_hash);
        h.finalize().to_vec()
    }

    pub fn verify(&self, message: &[u8], signature: &[u8]) -> bool {
        let expected = self.sign(message);
        expected.len() == signature.len()
            && expected
                .iter()
                .zip(signature)
                .fold(0u8, |acc, (a, b)| acc | (a ^ b))
                == 0
    }
}

/// The published artifact: shuffled sequence, widths, and signature. No
/// key-register secrets, no key amplitudes, no raw seeds (only a digest).
#[derive(Debug, Clone)]
pub struct PublicProgram {
    pub program_id: String,
    pub key_qubits: usize,
    pub input_qubits: usize,
    pub index_qubits: usize,
    /// Hex digest of the creation seeds; the seeds themselves stay secret.
    pub seed_digest: String,
    pub signature: Vec<u8>,
    pub sequence: GateSequence,
}

impl PublicProgram {
    pub fn to_text(&self) -> String {
        crate::formats::write_public_program(self)
    }

    pub fn verify(&self, auth: &Authenticator) -> bool {
        auth.verify(
            crate::formats::public_program_payload(self).as_bytes(),
            &self.signature,
        )
    }
}

/// One-key-per-user issuance ledger; the single mutable piece of the
/// protocol. Callers serialize mutations.
#[derive(Debug, Default)]
pub struct KeyLedger {
    issued: HashMap<String, HashSet<String>>,
}

impl KeyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record an issuance; rejects a second key for the same user.
    pub fn record_issue(&mut self, program_id: &str, user_id: &str) -> Result<(), ProtocolError> {
        let users = self.issued.entry(program_id.to_string()).or_default();
        if !users.insert(user_id.to_string()) {
            return Err(ProtocolError::AlreadyIssued {
                program_id: program_id.to_string(),
                user_id: user_id.to_string(),
            });
        }
        Ok(())
    }

    pub fn was_issued(&self, program_id: &str, user_id: &str) -> bool {
        self.issued
            .get(program_id)
            .is_some_and(|users| users.contains(user_id))
    }
}

/// Programmer role: build the dispatch unitary, encrypt it, shuffle the
/// sequence, and sign the artifact. Returns the public program and the
/// retained secrets.
pub fn programmer_publish(
    spec: &ProgramSpec,
    shuffle_cfg: &ShuffleConfig,
    auth: &Authenticator,
    program_id: &str,
) -> Result<(PublicProgram, KeySecrets), ProtocolError> {
    let g = build_pga(spec)?;
    let m = spec.key_qubits();
    let secrets = KeySecrets::sample(m, seeds::derive(spec.rng_seed, "publish/key-secrets"))?;
    let encoded = keying::encode(&g, &secrets, m)?;
    let shuffled = shuffle(&encoded, shuffle_cfg)?;
    let mut hasher = Sha256::new();
    hasher.update(spec.rng_seed.to_le_bytes());
    hasher.update(shuffle_cfg.rng_seed.to_le_bytes());
    let seed_digest = hex::encode(hasher.finalize());
    let mut program = PublicProgram {
        program_id: program_id.to_string(),
        key_qubits: m,
        input_qubits: spec.input_qubits(),
        index_qubits: spec.index_qubits(),
        seed_digest,
        signature: Vec::new(),
        sequence: shuffled,
    };
    program.signature =
        auth.sign(crate::formats::public_program_payload(&program).as_bytes());
    Ok((program, secrets))
}

/// User role: verify authenticity, check widths, then run.
pub fn user_execute(
    program: &PublicProgram,
    auth: &Authenticator,
    key: &KeyState,
    input: &StateVector,
) -> Result<RunOutcome, ProtocolError> {
    if !program.verify(auth) {
        return Err(ProtocolError::Authenticity);
    }
    if key.num_qubits() != program.key_qubits {
        return Err(ProtocolError::WidthMismatch {
            expected: program.key_qubits,
            got: key.num_qubits(),
        });
    }
    if input.num_qubits() != program.input_qubits {
        return Err(ProtocolError::WidthMismatch {
            expected: program.input_qubits,
            got: input.num_qubits(),
        });
    }
    Ok(keying::run(&program.sequence, key, input)?)
}

/// Resource limits for the baseline attacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBudget {
    pub max_candidates: usize,
    pub guess_trials: usize,
}

impl Default for AttackBudget {
    fn default() -> Self {
        AttackBudget {
            max_candidates: 4096,
            guess_trials: 10_000,
        }
    }
}

/// Ground truth the experimenter uses to score black-box attacks. The
/// attacks themselves only ever see the public program and stolen keys.
#[derive(Debug, Clone, Copy)]
pub struct AttackGroundTruth<'a> {
    pub programs: &'a [GateSequence],
    pub secrets: &'a KeySecrets,
}

/// One stolen-key replay measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRecord {
    pub stolen_index: Option<u64>,
    /// Fidelity of the replayed output to the target program's output.
    pub fidelity_to_target: f64,
    /// `|⟨φ|U_target† U_stolen|φ⟩|²`, when the stolen index is known.
    pub predicted: Option<f64>,
}

/// Successful exhaustive-search candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchHit {
    pub basis_value: u64,
    pub program_index: u64,
}

/// Measured results of the baseline attacks.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub program_id: String,
    pub key_qubits: usize,
    pub target_index: u64,
    pub guess_trials: usize,
    pub guess_successes: usize,
    pub expected_guess_rate: f64,
    pub search_candidates: usize,
    pub search_hits: Vec<SearchHit>,
    pub search_elapsed_micros: u128,
    pub replays: Vec<ReplayRecord>,
    /// Set when the candidate budget cut the search short.
    pub partial: bool,
}

impl AttackReport {
    pub fn guess_rate(&self) -> f64 {
        if self.guess_trials == 0 {
            0.0
        } else {
            self.guess_successes as f64 / self.guess_trials as f64
        }
    }

    /// Line-oriented stats dump.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "AQC-ATTACK-REPORT\nprogram {}\nkey-qubits {}\ntarget-index {}\nguess-trials {}\nguess-successes {}\nguess-rate {:.6e}\nexpected-guess-rate {:.6e}\nsearch-candidates {}\nsearch-elapsed-micros {}\npartial {}\n",
            self.program_id,
            self.key_qubits,
            self.target_index,
            self.guess_trials,
            self.guess_successes,
            self.guess_rate(),
            self.expected_guess_rate,
            self.search_candidates,
            self.search_elapsed_micros,
            self.partial,
        );
        for hit in &self.search_hits {
            out.push_str(&format!(
                "search-hit basis {} index {}\n",
                hit.basis_value, hit.program_index
            ));
        }
        for r in &self.replays {
            out.push_str(&format!(
                "replay stolen-index {} fidelity {:.6e} predicted {}\n",
                r.stolen_index.map_or("unknown".into(), |i| i.to_string()),
                r.fidelity_to_target,
                r.predicted.map_or("unknown".into(), |p| format!("{p:.6e}")),
            ));
        }
        out
    }
}

/// Probes used to decide whether a candidate key "works".
fn attack_probes(n: usize) -> Result<Vec<StateVector>, SimError> {
    let dim = 1usize << n;
    let uniform = num_complex::Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(vec![
        StateVector::zero(n)?,
        StateVector::from_amplitudes(n, vec![uniform; dim])?,
    ])
}

/// Eavesdropper role: run the baseline attacks against `program` within
/// `budget`, scoring them with the experimenter's ground truth.
pub fn eavesdropper_report(
    program: &PublicProgram,
    stolen: &[KeyState],
    truth: AttackGroundTruth<'_>,
    target_index: u64,
    budget: AttackBudget,
    rng_seed: u64,
) -> Result<AttackReport, ProtocolError> {
    let m = program.key_qubits;
    let n = program.input_qubits;
    let k = program.index_qubits;
    if truth.programs.len() != 1usize << k || truth.secrets.key_qubits() != m {
        return Err(ProtocolError::TruthMismatch);
    }
    if target_index >= 1u64 << k {
        return Err(ProtocolError::WidthMismatch {
            expected: 1usize << k,
            got: target_index as usize,
        });
    }
    let target_key = keying::issue_key(target_index, truth.secrets, m, k)?;
    let target_program = &truth.programs[target_index as usize];
    let probes = attack_probes(n)?;

    // (a) random basis-key guessing: per trial, the guess succeeds with
    // probability |⟨guess|φ_target⟩|², the overlap with the honest key.
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(rng_seed, "attack/guess"));
    let dim_key = 1usize << m;
    let mut guess_successes = 0usize;
    for _ in 0..budget.guess_trials {
        let guess = rng.gen_range(0..dim_key);
        let p = target_key.state.amplitudes()[guess].norm_sqr();
        if rng.gen_range(0.0..1.0) < p {
            guess_successes += 1;
        }
    }

    // (b) exhaustive basis-grid search
    let started = Instant::now();
    let mut search_hits = Vec::new();
    let candidates = dim_key.min(budget.max_candidates);
    let partial = candidates < dim_key;
    for basis_value in 0..candidates {
        let candidate = KeyState {
            state: StateVector::basis(m, basis_value)?,
            issued_index: None,
        };
        for (index, reference) in truth.programs.iter().enumerate() {
            let mut works = true;
            for probe in &probes {
                let outcome = keying::run(&program.sequence, &candidate, probe)?;
                let ok = match outcome {
                    RunOutcome::Product { ref output, .. } => {
                        let expected = apply(reference, probe)?;
                        output.fidelity(&expected)? >= 1.0 - 1e-9
                    }
                    RunOutcome::Entangled { .. } => false,
                };
                if !ok {
                    works = false;
                    break;
                }
            }
            if works {
                search_hits.push(SearchHit {
                    basis_value: basis_value as u64,
                    program_index: index as u64,
                });
            }
        }
    }
    let search_elapsed_micros = started.elapsed().as_micros();

    // (c) stolen-key replay against a fixed probe
    let probe = &probes[probes.len() - 1];
    let target_out = apply(target_program, probe)?;
    let mut replays = Vec::new();
    for key in stolen {
        if key.num_qubits() != m {
            return Err(ProtocolError::WidthMismatch {
                expected: m,
                got: key.num_qubits(),
            });
        }
        let outcome = keying::run(&program.sequence, key, probe)?;
        let fidelity_to_target = match outcome {
            RunOutcome::Product { ref output, .. } => output.fidelity(&target_out)?,
            RunOutcome::Entangled { .. } => 0.0,
        };
        let predicted = match key.issued_index {
            Some(j) => {
                let stolen_out = apply(&truth.programs[j as usize], probe)?;
                Some(stolen_out.fidelity(&target_out)?)
            }
            None => None,
        };
        replays.push(ReplayRecord {
            stolen_index: key.issued_index,
            fidelity_to_target,
            predicted,
        });
    }

    Ok(AttackReport {
        program_id: program.program_id.clone(),
        key_qubits: m,
        target_index,
        guess_trials: budget.guess_trials,
        guess_successes,
        expected_guess_rate: 1.0 / dim_key as f64,
        search_candidates: candidates,
        search_hits,
        search_elapsed_micros,
        replays,
        partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_publish() -> (PublicProgram, KeySecrets, ProgramSpec, Authenticator) {
        let spec = ProgramSpec::random(1, 2, 1, 6, 11).unwrap();
        let auth = Authenticator::new(*b"authenticator-demo-key");
        let cfg = ShuffleConfig::new(40, 400, 13);
        let (program, secrets) = programmer_publish(&spec, &cfg, &auth, "toy").unwrap();
        (program, secrets, spec, auth)
    }

    #[test]
    fn sign_verify_and_tamper() {
        let auth = Authenticator::new(*b"k1");
        let sig = auth.sign(b"hello");
        assert!(auth.verify(b"hello", &sig));
        let mut bad = sig.clone();
        bad[3] ^= 1;
        assert!(!auth.verify(b"hello", &bad));
        assert!(!auth.verify(b"hellp", &sig));
        let other = Authenticator::new(*b"k2");
        assert!(!other.verify(b"hello", &sig));
    }

    #[test]
    fn published_program_verifies() {
        let (program, _, _, auth) = toy_publish();
        assert!(program.verify(&auth));
        let wrong = Authenticator::new(*b"not-the-authenticator");
        assert!(!program.verify(&wrong));
    }

    #[test]
    fn tampered_program_is_refused() {
        let (mut program, secrets, _, auth) = toy_publish();
        let key = keying::issue_key(0, &secrets, 2, 1).unwrap();
        let input = StateVector::zero(1).unwrap();
        assert!(user_execute(&program, &auth, &key, &input).is_ok());
        // flip a byte of the signature
        program.signature[0] ^= 0xff;
        assert!(matches!(
            user_execute(&program, &auth, &key, &input),
            Err(ProtocolError::Authenticity)
        ));
    }

    #[test]
    fn width_mismatches_are_distinct_from_authenticity() {
        let (program, secrets, _, auth) = toy_publish();
        let key = keying::issue_key(0, &secrets, 2, 1).unwrap();
        let wide_input = StateVector::zero(2).unwrap();
        assert!(matches!(
            user_execute(&program, &auth, &key, &wide_input),
            Err(ProtocolError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn ledger_rejects_double_issue() {
        let mut ledger = KeyLedger::new();
        ledger.record_issue("prog", "alice").unwrap();
        ledger.record_issue("prog", "bob").unwrap();
        ledger.record_issue("other", "alice").unwrap();
        assert!(matches!(
            ledger.record_issue("prog", "alice"),
            Err(ProtocolError::AlreadyIssued { .. })
        ));
        assert!(ledger.was_issued("prog", "alice"));
        assert!(!ledger.was_issued("prog", "carol"));
    }

    #[test]
    fn published_artifact_leaks_no_secret_material() {
        let (program, secrets, spec, _) = toy_publish();
        let text = program.to_text();
        assert!(!text.contains(crate::formats::SECRET_MARKER));
        // neither rotation's exact gate text may appear in the artifact
        for rotation in [&secrets.pre_rotation, &secrets.post_rotation] {
            let body: String = rotation
                .to_text()
                .lines()
                .skip(1)
                .collect::<Vec<_>>()
                .join("\n");
            assert!(!body.is_empty());
            assert!(!text.contains(&body));
        }
        // the raw seed must not appear either, only its digest
        assert!(!text.contains(&format!("seed {}", spec.rng_seed)));
    }

    #[test]
    fn honest_user_gets_the_programmed_output() {
        let (program, secrets, spec, auth) = toy_publish();
        for index in 0..2u64 {
            let key = keying::issue_key(index, &secrets, 2, 1).unwrap();
            let input = StateVector::zero(1).unwrap();
            let outcome = user_execute(&program, &auth, &key, &input).unwrap();
            let expected = apply(&spec.programs()[index as usize], &input).unwrap();
            match outcome {
                RunOutcome::Product { output, .. } => {
                    assert!((output.fidelity(&expected).unwrap() - 1.0).abs() < 1e-9);
                }
                RunOutcome::Entangled { .. } => panic!("honest key must factor"),
            }
        }
    }

    #[test]
    fn attack_report_runs_within_budget() {
        let (program, secrets, spec, _) = toy_publish();
        let truth = AttackGroundTruth {
            programs: spec.programs(),
            secrets: &secrets,
        };
        let stolen = vec![keying::issue_key(1, &secrets, 2, 1).unwrap()];
        let budget = AttackBudget {
            max_candidates: 2,
            guess_trials: 200,
        };
        let report =
            eavesdropper_report(&program, &stolen, truth, 0, budget, 99).unwrap();
        assert!(report.partial);
        assert_eq!(report.search_candidates, 2);
        assert_eq!(report.replays.len(), 1);
        let text = report.to_text();
        assert!(text.contains("partial true"));
    }
}
