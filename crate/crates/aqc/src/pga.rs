//! Building one dispatching unitary out of a program family.
//!
//! A [`ProgramSpec`] holds `2^k` programs on an n-qubit input register. The
//! builder extends them into a single unitary `G` on `m + n` qubits whose
//! first `k` qubits select the program: `G(|i⟩⊗|d⟩⊗|φ⟩) = |i⟩⊗M₂M₁|d⟩⊗Uᵢ|φ⟩`.
//! The `m − k` dummy qubits carry no program index; two random unitaries
//! `M₁, M₂` scramble them identically for every index so the key register
//! stays index-independent outside the selector.
//!
//! Register layout: index qubits `0..k`, dummy qubits `k..m`, input qubits
//! `m..m+n`.

use crate::circuit::{CircuitError, GateSequence};
use crate::decompose::{controlled_for_gate, x_gates};
use crate::keying::sample_random_sequence;
use crate::seeds;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default cap on the gate count of a built sequence.
pub const DEFAULT_GATE_BUDGET: usize = 100_000;

/// Default length for randomly sampled member programs.
pub const DEFAULT_PROGRAM_LEN: usize = 12;

/// Default length for the dummy scramblers, per dummy qubit.
pub const DUMMY_SCRAMBLER_LEN_PER_QUBIT: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PgaError {
    #[error("invalid program spec: {0}")]
    InvalidSpec(String),
    #[error("control value {value} out of range for {num_controls} control qubits")]
    ValueOutOfRange { value: u64, num_controls: usize },
    #[error("built sequence has {gates} gates, over the budget of {budget}")]
    BudgetExceeded { gates: usize, budget: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// The programmer's bundle: program family, register widths, and the dummy
/// scramblers. Everything in here is secret until encoded and shuffled.
#[derive(Debug, Clone)]
pub struct ProgramSpec {
    programs: Vec<GateSequence>,
    index_qubits: usize,
    key_qubits: usize,
    input_qubits: usize,
    dummy_pre: GateSequence,
    dummy_post: GateSequence,
    pub rng_seed: u64,
    pub gate_budget: usize,
}

impl ProgramSpec {
    pub fn new(
        programs: Vec<GateSequence>,
        index_qubits: usize,
        key_qubits: usize,
        dummy_pre: GateSequence,
        dummy_post: GateSequence,
        rng_seed: u64,
    ) -> Result<Self, PgaError> {
        if index_qubits == 0 || index_qubits >= 32 {
            return Err(PgaError::InvalidSpec(format!(
                "index register must have 1..32 qubits, got {index_qubits}"
            )));
        }
        let expected = 1usize << index_qubits;
        if programs.len() != expected {
            return Err(PgaError::InvalidSpec(format!(
                "need {expected} programs for {index_qubits} index qubits, got {}",
                programs.len()
            )));
        }
        if key_qubits < index_qubits {
            return Err(PgaError::InvalidSpec(format!(
                "key register ({key_qubits}) narrower than index register ({index_qubits})"
            )));
        }
        let input_qubits = programs[0].num_qubits();
        if input_qubits == 0 {
            return Err(PgaError::InvalidSpec("programs act on zero qubits".into()));
        }
        if let Some(bad) = programs.iter().find(|p| p.num_qubits() != input_qubits) {
            return Err(PgaError::InvalidSpec(format!(
                "program widths disagree: {} vs {}",
                input_qubits,
                bad.num_qubits()
            )));
        }
        let dummy = key_qubits - index_qubits;
        for (name, scr) in [("M1", &dummy_pre), ("M2", &dummy_post)] {
            if scr.num_qubits() != dummy {
                return Err(PgaError::InvalidSpec(format!(
                    "{name} acts on {} qubits, dummy register has {dummy}",
                    scr.num_qubits()
                )));
            }
            if dummy == 0 && !scr.is_empty() {
                return Err(PgaError::InvalidSpec(format!(
                    "{name} must be empty when there are no dummy qubits"
                )));
            }
        }
        Ok(ProgramSpec {
            programs,
            index_qubits,
            key_qubits,
            input_qubits,
            dummy_pre,
            dummy_post,
            rng_seed,
            gate_budget: DEFAULT_GATE_BUDGET,
        })
    }

    /// Random instance: `2^k` random programs plus random dummy scramblers,
    /// all derived from one seed.
    pub fn random(
        index_qubits: usize,
        key_qubits: usize,
        input_qubits: usize,
        program_len: usize,
        rng_seed: u64,
    ) -> Result<Self, PgaError> {
        if index_qubits == 0 || index_qubits >= 32 {
            return Err(PgaError::InvalidSpec(format!(
                "index register must have 1..32 qubits, got {index_qubits}"
            )));
        }
        let count = 1usize << index_qubits;
        let mut programs = Vec::with_capacity(count);
        for i in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive_indexed(
                rng_seed,
                "pga/program",
                i as u64,
            ));
            let qubits: Vec<usize> = (0..input_qubits).collect();
            programs.push(
                sample_random_sequence(input_qubits, &qubits, program_len, &mut rng)
                    .map_err(|e| PgaError::InvalidSpec(e.to_string()))?,
            );
        }
        let dummy = key_qubits
            .checked_sub(index_qubits)
            .ok_or_else(|| PgaError::InvalidSpec("key register narrower than index".into()))?;
        let scrambler = |label: &str| -> Result<GateSequence, PgaError> {
            if dummy == 0 {
                return Ok(GateSequence::identity(0));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(rng_seed, label));
            let qubits: Vec<usize> = (0..dummy).collect();
            sample_random_sequence(dummy, &qubits, DUMMY_SCRAMBLER_LEN_PER_QUBIT * dummy, &mut rng)
                .map_err(|e| PgaError::InvalidSpec(e.to_string()))
        };
        ProgramSpec::new(
            programs,
            index_qubits,
            key_qubits,
            scrambler("pga/M1")?,
            scrambler("pga/M2")?,
            rng_seed,
        )
    }

    pub fn programs(&self) -> &[GateSequence] {
        &self.programs
    }

    pub fn index_qubits(&self) -> usize {
        self.index_qubits
    }

    pub fn key_qubits(&self) -> usize {
        self.key_qubits
    }

    pub fn input_qubits(&self) -> usize {
        self.input_qubits
    }

    pub fn dummy_qubits(&self) -> usize {
        self.key_qubits - self.index_qubits
    }

    pub fn dummy_scramblers(&self) -> (&GateSequence, &GateSequence) {
        (&self.dummy_pre, &self.dummy_post)
    }

    /// Advisory warnings; never errors. Flags an index register much wider
    /// than the logarithm of the input width, which blows up the dispatch
    /// gate count.
    pub fn lints(&self) -> Vec<String> {
        let mut out = Vec::new();
        let log_n = (self.input_qubits.max(2) as f64).log2().ceil() as usize;
        if self.index_qubits > log_n + 2 {
            out.push(format!(
                "index register has {} qubits; around log2(input)={} is expected to keep \
                 the dispatch polynomial",
                self.index_qubits, log_n
            ));
        }
        out
    }
}

/// Wrap `seq` so it applies exactly when `num_controls` leading control
/// qubits hold the basis value `value`, and acts as the identity otherwise.
/// The result acts on `num_controls + seq.num_qubits()` qubits with the
/// controls in front.
pub fn controlled_on_value(
    seq: &GateSequence,
    num_controls: usize,
    value: u64,
) -> Result<GateSequence, PgaError> {
    if num_controls >= 64 || value >= (1u64 << num_controls) {
        return Err(PgaError::ValueOutOfRange {
            value,
            num_controls,
        });
    }
    let width = num_controls + seq.num_qubits();
    let shifted = seq.embed_at(num_controls, width)?;
    let controls: Vec<usize> = (0..num_controls).collect();
    let zero_bits: Vec<usize> = (0..num_controls)
        .filter(|j| (value >> (num_controls - 1 - j)) & 1 == 0)
        .collect();
    let mut gates = Vec::new();
    for &j in &zero_bits {
        gates.extend(x_gates(j));
    }
    for gate in shifted.gates() {
        gates.extend(controlled_for_gate(gate, &controls));
    }
    for &j in &zero_bits {
        gates.extend(x_gates(j));
    }
    Ok(GateSequence::new(width, gates)?)
}

/// Build the dispatch unitary `G` on `m + n` qubits.
pub fn build_pga(spec: &ProgramSpec) -> Result<GateSequence, PgaError> {
    let k = spec.index_qubits;
    let m = spec.key_qubits;
    let n = spec.input_qubits;
    let total = m + n;
    let mut out = GateSequence::identity(total);
    if spec.dummy_qubits() > 0 {
        out = out.concat(&spec.dummy_pre.embed_at(k, total)?)?;
    }
    // selector block for each index, controls on 0..k, program on m..m+n
    let block_map: Vec<usize> = (0..k).chain(m..total).collect();
    for (i, program) in spec.programs.iter().enumerate() {
        let block = controlled_on_value(program, k, i as u64)?;
        out = out.concat(&block.remap(&block_map, total)?)?;
    }
    if spec.dummy_qubits() > 0 {
        out = out.concat(&spec.dummy_post.embed_at(k, total)?)?;
    }
    if out.len() > spec.gate_budget {
        return Err(PgaError::BudgetExceeded {
            gates: out.len(),
            budget: spec.gate_budget,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::decompose::x_gates;
    use crate::sim::{equal_up_to_phase, to_matrix, UnitaryMatrix};

    #[test]
    fn controlled_on_empty_sequence_is_identity() {
        let built = controlled_on_value(&GateSequence::identity(1), 2, 3).unwrap();
        let m = to_matrix(&built).unwrap();
        let eq = equal_up_to_phase(&m, &UnitaryMatrix::identity(8), 1e-9).unwrap();
        assert!(eq.equivalent);
        assert!(eq.phase.unwrap().abs() < 1e-9);
    }

    #[test]
    fn single_control_value_one_is_cnot() {
        let x = GateSequence::new(1, x_gates(0)).unwrap();
        let built = controlled_on_value(&x, 1, 1).unwrap();
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
    fn value_out_of_range_is_rejected() {
        let seq = GateSequence::identity(1);
        assert!(matches!(
            controlled_on_value(&seq, 1, 2),
            Err(PgaError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn x_fires_only_on_control_value_zero() {
        let x = GateSequence::new(1, x_gates(0)).unwrap();
        let built = controlled_on_value(&x, 2, 0).unwrap();
        let m = to_matrix(&built).unwrap();
        for col in 0..8usize {
            // control register |00⟩ flips the target bit, others pass through
            let expect_row = if col & 0b110 == 0 { col ^ 1 } else { col };
            for row in 0..8usize {
                let want = if row == expect_row { 1.0 } else { 0.0 };
                assert!(
                    (m.get(row, col).norm() - want).abs() < 1e-10,
                    "row {row} col {col}"
                );
            }
        }
    }

    #[test]
    fn trivial_family_builds_to_identity() {
        let spec = ProgramSpec::new(
            vec![GateSequence::identity(1), GateSequence::identity(1)],
            1,
            1,
            GateSequence::identity(0),
            GateSequence::identity(0),
            7,
        )
        .unwrap();
        let g = build_pga(&spec).unwrap();
        let m = to_matrix(&g).unwrap();
        let eq = equal_up_to_phase(&m, &UnitaryMatrix::identity(4), 1e-9).unwrap();
        assert!(eq.equivalent);
    }

    #[test]
    fn identity_or_x_family_is_cnot() {
        let spec = ProgramSpec::new(
            vec![
                GateSequence::identity(1),
                GateSequence::new(1, x_gates(0)).unwrap(),
            ],
            1,
            1,
            GateSequence::identity(0),
            GateSequence::identity(0),
            7,
        )
        .unwrap();
        let g = build_pga(&spec).unwrap();
        let m = to_matrix(&g).unwrap();
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
        let eq = equal_up_to_phase(&m, &cnot, 1e-9).unwrap();
        assert!(eq.equivalent);
    }

    #[test]
    fn spec_validation_rejects_bad_shapes() {
        // wrong program count
        assert!(ProgramSpec::new(
            vec![GateSequence::identity(1)],
            1,
            1,
            GateSequence::identity(0),
            GateSequence::identity(0),
            0,
        )
        .is_err());
        // m < k
        assert!(ProgramSpec::new(
            vec![GateSequence::identity(1), GateSequence::identity(1)],
            1,
            0,
            GateSequence::identity(0),
            GateSequence::identity(0),
            0,
        )
        .is_err());
        // scrambler width mismatch
        assert!(ProgramSpec::new(
            vec![GateSequence::identity(1), GateSequence::identity(1)],
            1,
            2,
            GateSequence::identity(0),
            GateSequence::identity(1),
            0,
        )
        .is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let mut spec = ProgramSpec::random(1, 2, 1, 10, 3).unwrap();
        spec.gate_budget = 5;
        assert!(matches!(
            build_pga(&spec),
            Err(PgaError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn wide_index_register_trips_the_lint() {
        let spec = ProgramSpec::random(6, 6, 1, 1, 0).unwrap();
        assert!(!spec.lints().is_empty());
        let ok = ProgramSpec::random(1, 2, 2, 1, 0).unwrap();
        assert!(ok.lints().is_empty());
    }
}
