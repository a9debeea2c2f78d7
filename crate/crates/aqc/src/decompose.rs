//! Exact controlled-gate decomposition over the elementary alphabet.
//!
//! Every construction here is phase-exact: a controlled gate built from a
//! sequence acts as the identity (not merely a phase) on basis values where
//! its controls are unsatisfied. Single-qubit gates go through the ZYZ/ABC
//! network, Toffoli through the standard six-CNOT network, and wider
//! controls through the square-root recursion, ancilla-free throughout.

use crate::circuit::Gate;
use crate::sim::gate_matrix2;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

const EPS: f64 = 1e-12;

/// 2×2 complex matrix, row-major.
pub type Mat2 = [[Complex64; 2]; 2];

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) const X_MAT: Mat2 = [[ZERO, ONE], [ONE, ZERO]];

pub(crate) fn phase_mat(theta: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, theta)]]
}

fn mat_adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// ZYZ angles `(α, β, γ, δ)` with `U = e^{iα}·Rz(β)·Ry(γ)·Rz(δ)`.
pub fn zyz_angles(u: &Mat2) -> (f64, f64, f64, f64) {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let alpha = det.arg() / 2.0;
    let unphase = Complex64::from_polar(1.0, -alpha);
    let s00 = unphase * u[0][0];
    let s10 = unphase * u[1][0];
    let gamma = 2.0 * s10.norm().atan2(s00.norm());
    let (beta, delta) = if s10.norm() < EPS {
        (-2.0 * s00.arg(), 0.0)
    } else if s00.norm() < EPS {
        (2.0 * s10.arg(), 0.0)
    } else {
        let sum = -2.0 * s00.arg();
        let diff = 2.0 * s10.arg();
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    (alpha, beta, gamma, delta)
}

/// Principal square root of a single-qubit unitary.
pub fn unitary_sqrt(u: &Mat2) -> Mat2 {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let alpha = det.arg() / 2.0;
    let unphase = Complex64::from_polar(1.0, -alpha);
    // special-unitary part: S = cos(θ/2)·I − i·sin(θ/2)·(n̂·σ)
    let s = [
        [unphase * u[0][0], unphase * u[0][1]],
        [unphase * u[1][0], unphase * u[1][1]],
    ];
    let cos_half = ((s[0][0] + s[1][1]).re / 2.0).clamp(-1.0, 1.0);
    let theta = 2.0 * cos_half.acos();
    let sin_half = (theta / 2.0).sin();
    let (nx, ny, nz) = if sin_half > EPS {
        (
            -s[1][0].im / sin_half,
            s[1][0].re / sin_half,
            -s[0][0].im / sin_half,
        )
    } else {
        (0.0, 0.0, 1.0)
    };
    let (sq_sin, sq_cos) = (theta / 4.0).sin_cos();
    let i = Complex64::new(0.0, 1.0);
    let mut root = [
        [
            Complex64::new(sq_cos, 0.0) - i * sq_sin * nz,
            -i * sq_sin * Complex64::new(nx, -ny),
        ],
        [
            -i * sq_sin * Complex64::new(nx, ny),
            Complex64::new(sq_cos, 0.0) + i * sq_sin * nz,
        ],
    ];
    let rephase = Complex64::from_polar(1.0, alpha / 2.0);
    for row in root.iter_mut() {
        for entry in row.iter_mut() {
            *entry *= rephase;
        }
    }
    root
}

fn push_rz(out: &mut Vec<Gate>, target: usize, angle: f64) {
    if angle.abs() > EPS {
        out.push(Gate::Rz { target, angle });
    }
}

fn push_ry(out: &mut Vec<Gate>, target: usize, angle: f64) {
    if angle.abs() > EPS {
        out.push(Gate::Ry { target, angle });
    }
}

fn push_gphase(out: &mut Vec<Gate>, angle: f64) {
    if angle.abs() > EPS {
        out.push(Gate::GPhase { angle });
    }
}

/// Exact X on `target` inside the alphabet: `RY(π)·RZ(π)·e^{iπ/2} = X`.
pub fn x_gates(target: usize) -> Vec<Gate> {
    vec![
        Gate::Rz { target, angle: PI },
        Gate::Ry { target, angle: PI },
        Gate::GPhase { angle: FRAC_PI_2 },
    ]
}

/// Emit an arbitrary single-qubit unitary on `target` via ZYZ.
pub fn single_qubit_gates(u: &Mat2, target: usize) -> Vec<Gate> {
    let (alpha, beta, gamma, delta) = zyz_angles(u);
    let mut out = Vec::new();
    push_rz(&mut out, target, delta);
    push_ry(&mut out, target, gamma);
    push_rz(&mut out, target, beta);
    push_gphase(&mut out, alpha);
    out
}

/// One-control version of an arbitrary single-qubit unitary (ABC network).
pub fn controlled_single(u: &Mat2, control: usize, target: usize) -> Vec<Gate> {
    let (alpha, beta, gamma, delta) = zyz_angles(u);
    let mut out = Vec::new();
    // C = Rz((δ−β)/2), B = Ry(−γ/2)·Rz(−(δ+β)/2), A = Rz(β)·Ry(γ/2)
    push_rz(&mut out, target, (delta - beta) / 2.0);
    out.push(Gate::Cnot { control, target });
    push_rz(&mut out, target, -(delta + beta) / 2.0);
    push_ry(&mut out, target, -gamma / 2.0);
    out.push(Gate::Cnot { control, target });
    push_ry(&mut out, target, gamma / 2.0);
    push_rz(&mut out, target, beta);
    if alpha.abs() > EPS {
        // diag(1, e^{iα}) on the control
        push_rz(&mut out, control, alpha);
        push_gphase(&mut out, alpha / 2.0);
    }
    out
}

/// Six-CNOT Toffoli with RZ(±π/4) in place of T gates; the net gate
/// substitution leaves a residual e^{-iπ/8} which the trailing global
/// phase cancels.
pub fn toffoli(c1: usize, c2: usize, target: usize) -> Vec<Gate> {
    let t = FRAC_PI_4;
    let mut out = Vec::new();
    out.push(Gate::H { target });
    out.push(Gate::Cnot {
        control: c2,
        target,
    });
    push_rz(&mut out, target, -t);
    out.push(Gate::Cnot {
        control: c1,
        target,
    });
    push_rz(&mut out, target, t);
    out.push(Gate::Cnot {
        control: c2,
        target,
    });
    push_rz(&mut out, target, -t);
    out.push(Gate::Cnot {
        control: c1,
        target,
    });
    push_rz(&mut out, target, t);
    out.push(Gate::H { target });
    push_rz(&mut out, c2, t);
    out.push(Gate::Cnot {
        control: c1,
        target: c2,
    });
    push_rz(&mut out, c2, -t);
    out.push(Gate::Cnot {
        control: c1,
        target: c2,
    });
    push_rz(&mut out, c1, t);
    push_gphase(&mut out, FRAC_PI_8);
    out
}

/// Multi-controlled X.
pub fn multi_controlled_x(controls: &[usize], target: usize) -> Vec<Gate> {
    match controls {
        [] => x_gates(target),
        [c] => vec![Gate::Cnot {
            control: *c,
            target,
        }],
        [c1, c2] => toffoli(*c1, *c2, target),
        _ => multi_controlled(&X_MAT, controls, target),
    }
}

/// Multi-controlled `diag(1, e^{iθ})` folded over the control register:
/// fires exactly on the all-ones control value.
pub fn multi_controlled_phase(controls: &[usize], theta: f64) -> Vec<Gate> {
    match controls {
        [] => {
            let mut out = Vec::new();
            push_gphase(&mut out, theta);
            out
        }
        [c] => {
            let mut out = Vec::new();
            push_rz(&mut out, *c, theta);
            push_gphase(&mut out, theta / 2.0);
            out
        }
        [rest @ .., last] => multi_controlled(&phase_mat(theta), rest, *last),
    }
}

/// Multi-controlled single-qubit unitary via the square-root recursion:
/// `C^k U = C_w V · C^{k-1}X · C_w V† · C^{k-1}X · C^{k-1}V` with `V² = U`.
pub fn multi_controlled(u: &Mat2, controls: &[usize], target: usize) -> Vec<Gate> {
    match controls {
        [] => single_qubit_gates(u, target),
        [c] => controlled_single(u, *c, target),
        [rest @ .., last] => {
            let v = unitary_sqrt(u);
            let mut out = controlled_single(&v, *last, target);
            out.extend(multi_controlled_x(rest, *last));
            out.extend(controlled_single(&mat_adjoint(&v), *last, target));
            out.extend(multi_controlled_x(rest, *last));
            out.extend(multi_controlled(&v, rest, target));
            out
        }
    }
}

/// Replace `gate` by its version controlled on every qubit in `controls`
/// (which must be disjoint from the gate's support).
pub fn controlled_for_gate(gate: &Gate, controls: &[usize]) -> Vec<Gate> {
    if controls.is_empty() {
        return vec![*gate];
    }
    match *gate {
        Gate::Cnot { control, target } => {
            let mut all = controls.to_vec();
            all.push(control);
            multi_controlled_x(&all, target)
        }
        Gate::GPhase { angle } => multi_controlled_phase(controls, angle),
        ref g => {
            let m = gate_matrix2(g).expect("single-qubit gate");
            let target = g.support()[0];
            multi_controlled(&m, controls, target)
        }
    }
}
