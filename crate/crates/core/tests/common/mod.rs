#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use qfilter::sim::{Gate, GateKind};
use qfilter::{FilterParams, StateVector, WindowVector};
use rand::Rng;

pub type Matrix = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn single_qubit(kind: GateKind) -> Matrix {
    match kind {
        GateKind::Rx(t) => {
            let (s, co) = (t / 2.0).sin_cos();
            vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]]
        }
        GateKind::Ry(t) => {
            let (s, co) = (t / 2.0).sin_cos();
            vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
        }
        GateKind::H => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            vec![vec![c(r, 0.0), c(r, 0.0)], vec![c(r, 0.0), c(-r, 0.0)]]
        }
        GateKind::Cnot { .. } => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
    }
}

/// Full `2^n × 2^n` unitary of a gate: `I − P ⊗ I + P ⊗ G`, where `P`
/// projects every control onto `|1⟩`. Qubit `k` is bit `k`, so the leftmost
/// Kronecker factor is the highest qubit.
pub fn gate_matrix(gate: &Gate, n: usize) -> Matrix {
    let mut controls = Vec::new();
    if let GateKind::Cnot { control } = gate.kind {
        controls.push(control);
    }
    controls.extend(gate.control);
    let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    let g = single_qubit(gate.kind);
    let build = |with_gate: bool| {
        let mut m = vec![vec![c(1.0, 0.0)]];
        for q in (0..n).rev() {
            let factor = if q == gate.target {
                if with_gate { g.clone() } else { identity(2) }
            } else if controls.contains(&q) {
                p1.clone()
            } else {
                identity(2)
            };
            m = kron(&m, &factor);
        }
        m
    };
    let with = build(true);
    let without = build(false);
    let dim = 1 << n;
    let id = identity(dim);
    (0..dim)
        .map(|i| (0..dim).map(|j| id[i][j] - without[i][j] + with[i][j]).collect())
        .collect()
}

pub fn circuit_matrix(gates: &[Gate], n: usize) -> Matrix {
    gates
        .iter()
        .fold(identity(1 << n), |acc, g| matmul(&gate_matrix(g, n), &acc))
}

pub fn zero_vector(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> StateVector {
    let mut amps: Vec<Complex64> = (0..1 << n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps).unwrap()
}

pub fn random_gate<R: Rng>(n: usize, rng: &mut R) -> Gate {
    let target = rng.gen_range(0..n);
    let other = |rng: &mut R, avoid: &[usize]| loop {
        let q = rng.gen_range(0..n);
        if !avoid.contains(&q) {
            break q;
        }
    };
    let angle = rng.gen_range(-7.0..7.0);
    let mut g = match rng.gen_range(0..4) {
        0 => Gate::rx(target, angle),
        1 => Gate::ry(target, angle),
        2 => Gate::h(target),
        _ if n >= 2 => Gate::cnot(other(rng, &[target]), target),
        _ => Gate::h(target),
    };
    let mut used = vec![target];
    if let GateKind::Cnot { control } = g.kind {
        used.push(control);
    }
    if used.len() < n && rng.gen_bool(0.3) {
        g = g.controlled_by(other(rng, &used));
    }
    g
}

pub fn random_window<R: Rng>(n: usize, rng: &mut R) -> WindowVector {
    WindowVector::new(n, (0..n * n).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap()
}

pub fn random_params<R: Rng>(n: usize, rng: &mut R) -> FilterParams {
    FilterParams::from_flat(
        n,
        (0..2 * n * n).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect(),
    )
    .unwrap()
}

/// `⟨I|F(θ)⟩` from two separately evolved states.
pub fn overlap_oracle(window: &WindowVector, params: &FilterParams, scale: f64) -> Complex64 {
    let q = window.num_qubits();
    let mut embedded = StateVector::zero(q).unwrap();
    for g in qfilter::filter::embedding_gates(window, scale) {
        embedded.apply(&g).unwrap();
    }
    let mut ansatz = StateVector::zero(q).unwrap();
    for g in qfilter::filter::ansatz_gates(params) {
        ansatz.apply(&g).unwrap();
    }
    embedded.inner_product(&ansatz).unwrap()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-mini")
}

pub fn mnist_paths() -> [PathBuf; 4] {
    let d = data_dir();
    [
        d.join("train-images-idx3-ubyte"),
        d.join("train-labels-idx1-ubyte"),
        d.join("t10k-images-idx3-ubyte"),
        d.join("t10k-labels-idx1-ubyte"),
    ]
}
