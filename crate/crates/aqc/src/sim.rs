//! Exact linear-algebra backend.
//!
//! Statevector evolution applies gates one at a time without ever building
//! the full operator; dense matrices are only constructed for registers of
//! at most [`MAX_MATRIX_QUBITS`] qubits, where they serve as the oracle for
//! every equivalence check. Density matrices appear only where mixtures or
//! partial traces are required.
//!
//! Basis convention: qubit 0 is the most significant bit of a basis-state
//! index, so a register prepared as `|i⟩ ⊗ |φ⟩` with `i` on the low-numbered
//! qubits has basis index `i * 2^n + j`.

use crate::circuit::{CircuitError, Gate, GateSequence};
use num_complex::Complex64;

/// Largest register the gate-at-a-time kernel accepts (2^20 amplitudes).
pub const MAX_APPLY_QUBITS: usize = 20;
/// Largest register for dense matrix construction (1024 × 1024).
pub const MAX_MATRIX_QUBITS: usize = 10;

/// Default tolerance for equivalence checks.
pub const DEFAULT_TOL: f64 = 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("register width mismatch: expected {expected} qubits, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("{qubits} qubits exceeds the {cap}-qubit cap")]
    CapExceeded { qubits: usize, cap: usize },
    #[error("matrix dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("basis index {index} out of range for dimension {dim}")]
    BasisOutOfRange { index: usize, dim: usize },
    #[error("invalid qubit set: {0}")]
    BadQubitSet(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// 2×2 matrix of a single-qubit gate kind.
pub(crate) fn gate_matrix2(gate: &Gate) -> Option<[[Complex64; 2]; 2]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match *gate {
        Gate::H { .. } => Some([
            [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
        ]),
        Gate::Rz { angle, .. } => {
            let half = angle / 2.0;
            Some([
                [Complex64::from_polar(1.0, -half), ZERO],
                [ZERO, Complex64::from_polar(1.0, half)],
            ])
        }
        Gate::Ry { angle, .. } => {
            let (sin, cos) = (angle / 2.0).sin_cos();
            Some([
                [Complex64::new(cos, 0.0), Complex64::new(-sin, 0.0)],
                [Complex64::new(sin, 0.0), Complex64::new(cos, 0.0)],
            ])
        }
        Gate::Cnot { .. } | Gate::GPhase { .. } => None,
    }
}

/// Apply one gate in place to a 2^n amplitude buffer.
fn apply_gate(gate: &Gate, amps: &mut [Complex64], num_qubits: usize) {
    match *gate {
        Gate::Cnot { control, target } => {
            let cmask = 1usize << (num_qubits - 1 - control);
            let tmask = 1usize << (num_qubits - 1 - target);
            for base in 0..amps.len() {
                if base & cmask != 0 && base & tmask == 0 {
                    amps.swap(base, base | tmask);
                }
            }
        }
        Gate::GPhase { angle } => {
            let phase = Complex64::from_polar(1.0, angle);
            for a in amps.iter_mut() {
                *a *= phase;
            }
        }
        ref g => {
            let m = gate_matrix2(g).expect("single-qubit gate");
            let target = g.support()[0];
            let mask = 1usize << (num_qubits - 1 - target);
            for base in 0..amps.len() {
                if base & mask == 0 {
                    let a0 = amps[base];
                    let a1 = amps[base | mask];
                    amps[base] = m[0][0] * a0 + m[0][1] * a1;
                    amps[base | mask] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }
}

/// A normalized pure state on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// The computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, SimError> {
        check_cap(num_qubits, MAX_APPLY_QUBITS)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(SimError::BasisOutOfRange { index, dim });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(StateVector { amps, num_qubits })
    }

    pub fn zero(num_qubits: usize) -> Result<Self, SimError> {
        Self::basis(num_qubits, 0)
    }

    /// Wrap raw amplitudes; the norm must already be 1 within 1e-10.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self, SimError> {
        check_cap(num_qubits, MAX_APPLY_QUBITS)?;
        let dim = 1usize << num_qubits;
        if amps.len() != dim {
            return Err(SimError::DimensionMismatch {
                left: dim,
                right: amps.len(),
            });
        }
        let state = StateVector { amps, num_qubits };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::NotNormalized { norm });
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64, SimError> {
        if self.num_qubits != other.num_qubits {
            return Err(SimError::WidthMismatch {
                expected: self.num_qubits,
                got: other.num_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, SimError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Tensor product with `self` on the low-numbered (most significant) qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, SimError> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_cap(num_qubits, MAX_APPLY_QUBITS)?;
        let mut amps = Vec::with_capacity(1 << num_qubits);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { amps, num_qubits })
    }
}

/// Evolve `ψ` by the sequence, gate at a time.
pub fn apply(seq: &GateSequence, psi: &StateVector) -> Result<StateVector, SimError> {
    if seq.num_qubits() != psi.num_qubits {
        return Err(SimError::WidthMismatch {
            expected: seq.num_qubits(),
            got: psi.num_qubits,
        });
    }
    check_cap(psi.num_qubits, MAX_APPLY_QUBITS)?;
    let mut amps = psi.amps.clone();
    for gate in seq.gates() {
        apply_gate(gate, &mut amps, psi.num_qubits);
    }
    Ok(StateVector {
        amps,
        num_qubits: psi.num_qubits,
    })
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl UnitaryMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        UnitaryMatrix { dim, data }
    }

    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Result<Self, SimError> {
        if data.len() != dim * dim {
            return Err(SimError::DimensionMismatch {
                left: dim * dim,
                right: data.len(),
            });
        }
        Ok(UnitaryMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        let mut data = vec![ZERO; self.dim * self.dim];
        for r in 0..self.dim {
            for c in 0..self.dim {
                data[c * self.dim + r] = self.get(r, c).conj();
            }
        }
        UnitaryMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn mul(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix, SimError> {
        if self.dim != rhs.dim {
            return Err(SimError::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let dim = self.dim;
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..dim {
                    data[r * dim + c] += a * rhs.get(k, c);
                }
            }
        }
        Ok(UnitaryMatrix { dim, data })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, SimError> {
        if v.len() != self.dim {
            return Err(SimError::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let mut out = vec![ZERO; self.dim];
        for r in 0..self.dim {
            let mut acc = ZERO;
            for c in 0..self.dim {
                acc += self.get(r, c) * v[c];
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// `tr(self† · rhs)`.
    pub fn trace_product(&self, rhs: &UnitaryMatrix) -> Result<Complex64, SimError> {
        if self.dim != rhs.dim {
            return Err(SimError::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let prod = self.adjoint().mul(self).expect("same dim");
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let expected = if r == c { ONE } else { ZERO };
                worst = worst.max((prod.get(r, c) - expected).norm());
            }
        }
        worst
    }
}

/// Dense unitary implemented by a sequence, built by evolving basis columns.
pub fn to_matrix(seq: &GateSequence) -> Result<UnitaryMatrix, SimError> {
    check_cap(seq.num_qubits(), MAX_MATRIX_QUBITS)?;
    let n = seq.num_qubits();
    let dim = 1usize << n;
    let mut data = vec![ZERO; dim * dim];
    for col in 0..dim {
        let basis = StateVector::basis(n, col)?;
        let out = apply(seq, &basis)?;
        for row in 0..dim {
            data[row * dim + col] = out.amps[row];
        }
    }
    Ok(UnitaryMatrix { dim, data })
}

/// Result of a phase-equivalence test between two operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEquivalence {
    pub equivalent: bool,
    /// `θ` such that `B ≈ e^{iθ}·A`; present only when equivalent.
    pub phase: Option<f64>,
    /// `|tr(A†B)| / dim`, 1 for exact phase-equivalence.
    pub overlap: f64,
}

/// True iff `|tr(A†B)|/dim ≥ 1 − tol`, i.e. `B = e^{iθ}A` up to tolerance.
pub fn equal_up_to_phase(
    a: &UnitaryMatrix,
    b: &UnitaryMatrix,
    tol: f64,
) -> Result<PhaseEquivalence, SimError> {
    let t = a.trace_product(b)?;
    let overlap = t.norm() / a.dim as f64;
    let equivalent = overlap >= 1.0 - tol;
    Ok(PhaseEquivalence {
        equivalent,
        phase: equivalent.then(|| t.arg()),
        overlap,
    })
}

/// A 2^n × 2^n density operator, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Result<Self, SimError> {
        check_cap(psi.num_qubits, MAX_MATRIX_QUBITS)?;
        let dim = 1usize << psi.num_qubits;
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = psi.amps[r] * psi.amps[c].conj();
            }
        }
        Ok(DensityMatrix {
            num_qubits: psi.num_qubits,
            data,
        })
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self, SimError> {
        check_cap(num_qubits, MAX_MATRIX_QUBITS)?;
        let dim = 1usize << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        let p = Complex64::new(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            data[i * dim + i] = p;
        }
        Ok(DensityMatrix { num_qubits, data })
    }

    /// Uniform mixture of the given states.
    pub fn mixture(states: &[StateVector]) -> Result<Self, SimError> {
        let first = states
            .first()
            .ok_or_else(|| SimError::BadQubitSet("empty mixture".into()))?;
        let n = first.num_qubits;
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        let w = 1.0 / states.len() as f64;
        for s in states {
            if s.num_qubits != n {
                return Err(SimError::WidthMismatch {
                    expected: n,
                    got: s.num_qubits,
                });
            }
            for r in 0..dim {
                for c in 0..dim {
                    data[r * dim + c] += w * s.amps[r] * s.amps[c].conj();
                }
            }
        }
        Ok(DensityMatrix {
            num_qubits: n,
            data,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i]).sum()
    }

    /// `tr(ρ²)`; 1 for pure states.
    pub fn purity(&self) -> f64 {
        // Hermitian: tr(ρ²) = Σ |ρ_ij|²
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    /// `⟨φ|ρ|φ⟩`.
    pub fn expectation_with_pure(&self, phi: &StateVector) -> Result<f64, SimError> {
        if phi.num_qubits != self.num_qubits {
            return Err(SimError::WidthMismatch {
                expected: self.num_qubits,
                got: phi.num_qubits,
            });
        }
        let dim = self.dim();
        let mut acc = ZERO;
        for r in 0..dim {
            for c in 0..dim {
                acc += phi.amps[r].conj() * self.data[r * dim + c] * phi.amps[c];
            }
        }
        Ok(acc.re)
    }

    /// Tensor product with `self` on the low-numbered qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix, SimError> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_cap(num_qubits, MAX_MATRIX_QUBITS)?;
        let da = self.dim();
        let db = other.dim();
        let dim = da * db;
        let mut data = vec![ZERO; dim * dim];
        for ra in 0..da {
            for ca in 0..da {
                let a = self.data[ra * da + ca];
                if a == ZERO {
                    continue;
                }
                for rb in 0..db {
                    for cb in 0..db {
                        data[(ra * db + rb) * dim + (ca * db + cb)] =
                            a * other.data[rb * db + cb];
                    }
                }
            }
        }
        Ok(DensityMatrix { num_qubits, data })
    }

    /// `ρ → UρU†` for the unitary described by `seq`.
    ///
    /// Row-major storage makes `ρ` a statevector on 2n qubits (row bits
    /// high, column bits low), so the statevector kernel applies each gate
    /// on the row side and its conjugate on the column side.
    pub fn evolve(&self, seq: &GateSequence) -> Result<DensityMatrix, SimError> {
        if seq.num_qubits() != self.num_qubits {
            return Err(SimError::WidthMismatch {
                expected: self.num_qubits,
                got: seq.num_qubits(),
            });
        }
        let n = self.num_qubits;
        let doubled = 2 * n;
        check_cap(doubled, MAX_APPLY_QUBITS)?;
        let mut data = self.data.clone();
        let row_map: Vec<usize> = (0..n).collect();
        let col_map: Vec<usize> = (n..doubled).collect();
        for gate in seq.gates() {
            let on_rows = remap_gate(gate, &row_map);
            let on_cols = remap_gate(&gate.conjugate(), &col_map);
            apply_gate(&on_rows, &mut data, doubled);
            apply_gate(&on_cols, &mut data, doubled);
        }
        Ok(DensityMatrix {
            num_qubits: n,
            data,
        })
    }

    /// Reduced state on `keep` (ascending qubit labels), tracing the rest.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix, SimError> {
        let n = self.num_qubits;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        if keep.is_empty() {
            return Err(SimError::BadQubitSet("empty keep set".into()));
        }
        if keep.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::BadQubitSet("duplicate qubit".into()));
        }
        if *keep.last().unwrap() >= n {
            return Err(SimError::BadQubitSet(format!(
                "qubit {} out of range for {} qubits",
                keep.last().unwrap(),
                n
            )));
        }
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let kdim = 1usize << k;
        let tdim = 1usize << traced.len();
        let expand = |subset: &[usize], value: usize| -> usize {
            let s = subset.len();
            let mut full = 0usize;
            for (j, &q) in subset.iter().enumerate() {
                let bit = (value >> (s - 1 - j)) & 1;
                full |= bit << (n - 1 - q);
            }
            full
        };
        let keep_idx: Vec<usize> = (0..kdim).map(|v| expand(&keep, v)).collect();
        let tr_idx: Vec<usize> = (0..tdim).map(|v| expand(&traced, v)).collect();
        let dim = self.dim();
        let mut data = vec![ZERO; kdim * kdim];
        for r in 0..kdim {
            for c in 0..kdim {
                let mut acc = ZERO;
                for t in &tr_idx {
                    acc += self.data[(keep_idx[r] | t) * dim + (keep_idx[c] | t)];
                }
                data[r * kdim + c] = acc;
            }
        }
        Ok(DensityMatrix {
            num_qubits: k,
            data,
        })
    }

    /// Recover the pure state of a (near-)pure density matrix: the column
    /// with the largest diagonal entry, rescaled. The result is fixed only
    /// up to a global phase. Meaningful when purity ≈ 1.
    pub fn dominant_pure_factor(&self) -> Result<StateVector, SimError> {
        let dim = self.dim();
        let pivot = (0..dim)
            .max_by(|&a, &b| {
                self.data[a * dim + a]
                    .re
                    .partial_cmp(&self.data[b * dim + b].re)
                    .unwrap()
            })
            .expect("non-empty");
        let scale = self.data[pivot * dim + pivot].re;
        if scale <= 0.0 {
            return Err(SimError::NotNormalized { norm: 0.0 });
        }
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|r| self.data[r * dim + pivot] / scale.sqrt())
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return Err(SimError::NotNormalized { norm });
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
        Ok(StateVector {
            amps,
            num_qubits: self.num_qubits,
        })
    }

    /// `½ tr|ρ − σ|` via the eigenvalues of the Hermitian difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64, SimError> {
        if self.num_qubits != other.num_qubits {
            return Err(SimError::WidthMismatch {
                expected: self.num_qubits,
                got: other.num_qubits,
            });
        }
        let diff: Vec<Complex64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        let eigs = hermitian_eigenvalues(&diff, self.dim());
        Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
    }
}

/// Reduced density operator of a pure state on the `keep` qubits, computed
/// directly from the amplitudes (the full joint density is never formed).
pub fn reduced_density(psi: &StateVector, keep: &[usize]) -> Result<DensityMatrix, SimError> {
    let n = psi.num_qubits;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    if keep.is_empty() {
        return Err(SimError::BadQubitSet("empty keep set".into()));
    }
    if keep.windows(2).any(|w| w[0] == w[1]) {
        return Err(SimError::BadQubitSet("duplicate qubit".into()));
    }
    if *keep.last().unwrap() >= n {
        return Err(SimError::BadQubitSet(format!(
            "qubit {} out of range for {} qubits",
            keep.last().unwrap(),
            n
        )));
    }
    check_cap(keep.len(), MAX_MATRIX_QUBITS)?;
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let expand = |subset: &[usize], value: usize| -> usize {
        let s = subset.len();
        let mut full = 0usize;
        for (j, &q) in subset.iter().enumerate() {
            let bit = (value >> (s - 1 - j)) & 1;
            full |= bit << (n - 1 - q);
        }
        full
    };
    let kdim = 1usize << keep.len();
    let tdim = 1usize << traced.len();
    let keep_idx: Vec<usize> = (0..kdim).map(|v| expand(&keep, v)).collect();
    let tr_idx: Vec<usize> = (0..tdim).map(|v| expand(&traced, v)).collect();
    let mut data = vec![ZERO; kdim * kdim];
    for r in 0..kdim {
        for c in 0..kdim {
            let mut acc = ZERO;
            for t in &tr_idx {
                acc += psi.amps[keep_idx[r] | t] * psi.amps[keep_idx[c] | t].conj();
            }
            data[r * kdim + c] = acc;
        }
    }
    Ok(DensityMatrix {
        num_qubits: keep.len(),
        data,
    })
}

fn remap_gate(gate: &Gate, map: &[usize]) -> Gate {
    match *gate {
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
    }
}

fn check_cap(qubits: usize, cap: usize) -> Result<(), SimError> {
    if qubits > cap {
        return Err(SimError::CapExceeded { qubits, cap });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi sweeps with complex
/// Givens rotations. Desk-scale only; returns eigenvalues in ascending order.
pub fn hermitian_eigenvalues(matrix: &[Complex64], dim: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), dim * dim, "square matrix required");
    let mut h = matrix.to_vec();
    let scale: f64 = h.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-14 * scale;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off = off.max(h[p * dim + q].norm());
            }
        }
        if off < tol {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let hpq = h[p * dim + q];
                if hpq.norm() < tol * 1e-2 {
                    continue;
                }
                let app = h[p * dim + p].re;
                let aqq = h[q * dim + q].re;
                let phi = hpq.arg();
                let theta = 0.5 * (2.0 * hpq.norm()).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                let eip = Complex64::from_polar(1.0, phi);
                // columns p, q of H·R
                for i in 0..dim {
                    let hip = h[i * dim + p];
                    let hiq = h[i * dim + q];
                    h[i * dim + p] = c * hip - s * eip.conj() * hiq;
                    h[i * dim + q] = s * eip * hip + c * hiq;
                }
                // rows p, q of R†·H
                for j in 0..dim {
                    let hpj = h[p * dim + j];
                    let hqj = h[q * dim + j];
                    h[p * dim + j] = c * hpj - s * eip * hqj;
                    h[q * dim + j] = s * eip.conj() * hpj + c * hqj;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..dim).map(|i| h[i * dim + i].re).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}
