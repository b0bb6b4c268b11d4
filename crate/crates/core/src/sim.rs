//! Dense state-vector simulator for the small circuits a quantum filter needs.
//!
//! Qubit `k` is bit `k` (least significant first) of the basis index, so the
//! amplitude of `|q1=1, q0=0⟩` lives at index `0b10`. Rotations use the
//! half-angle convention `RY(φ)|0⟩ = cos(φ/2)|0⟩ + sin(φ/2)|1⟩` and
//! `RX(φ)|0⟩ = cos(φ/2)|0⟩ − i·sin(φ/2)|1⟩`.
//!
//! Probabilities are exact; there is no measurement sampling.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Upper bound on register width. A 24-qubit state is 256 MiB.
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    Rx(f64),
    Ry(f64),
    H,
    /// Pauli-X on the target, conditioned on `control`.
    Cnot { control: usize },
}

/// A single gate, optionally conditioned on one extra control qubit.
///
/// An extra control on a `Cnot` gives a Toffoli.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
}

impl Gate {
    pub fn rx(target: usize, angle: f64) -> Self {
        Self::plain(GateKind::Rx(angle), target)
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Self::plain(GateKind::Ry(angle), target)
    }

    pub fn h(target: usize) -> Self {
        Self::plain(GateKind::H, target)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::plain(GateKind::Cnot { control }, target)
    }

    fn plain(kind: GateKind, target: usize) -> Self {
        Gate {
            kind,
            target,
            control: None,
        }
    }

    /// The same gate, acting only on the subspace where `qubit` is 1.
    pub fn controlled_by(mut self, qubit: usize) -> Self {
        self.control = Some(qubit);
        self
    }

    pub fn inverse(mut self) -> Self {
        self.kind = match self.kind {
            GateKind::Rx(a) => GateKind::Rx(-a),
            GateKind::Ry(a) => GateKind::Ry(-a),
            k => k,
        };
        self
    }

    /// Bitmask of every qubit that must be 1 for the gate to act.
    fn control_mask(&self) -> usize {
        let mut mask = 0;
        if let GateKind::Cnot { control } = self.kind {
            mask |= 1 << control;
        }
        if let Some(c) = self.control {
            mask |= 1 << c;
        }
        mask
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let mut qubits = vec![self.target];
        if let GateKind::Cnot { control } = self.kind {
            qubits.push(control);
        }
        qubits.extend(self.control);
        for &q in &qubits {
            if q >= num_qubits {
                return Err(Error::Index {
                    index: q,
                    num_qubits,
                });
            }
        }
        for (i, &a) in qubits.iter().enumerate() {
            if qubits[i + 1..].contains(&a) {
                return Err(Error::ControlIsTarget(a));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate(num_qubits)?;
        }
        Ok(Circuit { num_qubits, gates })
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
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
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0⟩^n`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&num_qubits) {
            return Err(Error::Size(num_qubits));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps an explicit amplitude vector. The length must be a power of two
    /// and the squared norm must be 1 within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::shape(format!(
                "amplitude count {len} is not a power of two ≥ 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::Size(num_qubits));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state norm² is {norm}, expected 1")));
        }
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits != self.num_qubits {
            return Err(Error::shape(format!(
                "circuit acts on {} qubits, state has {}",
                circuit.num_qubits, self.num_qubits
            )));
        }
        // Gates were validated when the circuit was built.
        for g in &circuit.gates {
            self.apply_unchecked(g);
        }
        Ok(())
    }

    /// Applies gates that the caller has already validated against this width.
    pub(crate) fn run_gates_unchecked(&mut self, gates: &[Gate]) {
        for g in gates {
            self.apply_unchecked(g);
        }
    }

    fn apply_unchecked(&mut self, gate: &Gate) {
        let mask = gate.control_mask();
        let t = gate.target;
        match gate.kind {
            GateKind::Ry(angle) => {
                let (s, c) = (angle / 2.0).sin_cos();
                self.for_each_pair(t, mask, |a0, a1| {
                    let (x0, x1) = (*a0, *a1);
                    *a0 = x0 * c - x1 * s;
                    *a1 = x0 * s + x1 * c;
                });
            }
            GateKind::Rx(angle) => {
                let (s, c) = (angle / 2.0).sin_cos();
                let mis = Complex64::new(0.0, -s);
                self.for_each_pair(t, mask, |a0, a1| {
                    let (x0, x1) = (*a0, *a1);
                    *a0 = x0 * c + x1 * mis;
                    *a1 = x0 * mis + x1 * c;
                });
            }
            GateKind::H => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                self.for_each_pair(t, mask, |a0, a1| {
                    let (x0, x1) = (*a0, *a1);
                    *a0 = (x0 + x1) * r;
                    *a1 = (x0 - x1) * r;
                });
            }
            GateKind::Cnot { .. } => {
                self.for_each_pair(t, mask, std::mem::swap);
            }
        }
    }

    /// Visits every amplitude pair `(i, i | 1<<target)` with target bit clear
    /// and all `mask` bits set.
    #[inline]
    fn for_each_pair(
        &mut self,
        target: usize,
        mask: usize,
        mut f: impl FnMut(&mut Complex64, &mut Complex64),
    ) {
        let stride = 1usize << target;
        for (b, block) in self.amplitudes.chunks_exact_mut(stride << 1).enumerate() {
            let base = b * (stride << 1);
            let (lo, hi) = block.split_at_mut(stride);
            if mask == 0 {
                for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                    f(a0, a1);
                }
            } else {
                for (k, (a0, a1)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    if (base | k) & mask == mask {
                        f(a0, a1);
                    }
                }
            }
        }
    }

    /// Probability of observing `|0⟩^n`.
    pub fn prob_all_zero(&self) -> f64 {
        self.amplitudes[0].norm_sqr()
    }

    /// Marginal probability that `qubit` reads 0.
    pub fn prob_qubit_zero(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.num_qubits {
            return Err(Error::Index {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        let bit = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| k & bit == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// `⟨self|other⟩ = Σ conj(a_k)·b_k`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::shape(format!(
                "inner product of {}- and {}-qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}
