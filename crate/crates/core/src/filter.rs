//! Variational quantum filters.
//!
//! A filter of edge `n` works on `q = n²` qubits. A window `I` is angle-encoded
//! with one `RY(scale·I_i)` per qubit, the ansatz `F(θ)` is an RX layer, a
//! bottom-up CNOT staircase and an RY layer, and the filter's output is an
//! estimate of `⟨0|I†F(θ)|0⟩`:
//!
//! * [`Estimator::OverlapSquared`] returns `|⟨0|I†F(θ)|0⟩|²`, the probability of
//!   reading all zeros after running `F(θ)` then `I†`.
//! * [`Estimator::HadamardReal`] returns `Re⟨0|I†F(θ)|0⟩ = 2·P(ancilla=0) − 1`
//!   from a Hadamard test with one extra ancilla qubit.
//! * [`Estimator::ClassicalDot`] is the plain `Σ I_i·w_i` baseline.
//!
//! Gradients with respect to the `2n²` rotation angles use a two-term
//! parameter-shift rule. The shift is `±π/2` for the squared overlap and `±π`
//! for the real part, whose dependence on each angle has half the frequency.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::executor::Executor;
use crate::sim::{Gate, StateVector};

/// One `n × n` image patch, flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowVector {
    size: usize,
    values: Vec<f64>,
}

impl WindowVector {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size == 0 || values.len() != size * size {
            return Err(Error::shape(format!(
                "window of edge {size} needs {} values, got {}",
                size * size,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("window value {v} outside [0, 1]")));
        }
        Ok(WindowVector { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_qubits(&self) -> usize {
        self.values.len()
    }
}

/// Rotation angles of one ansatz: `theta_rx` for qubits `0..q` followed by
/// `theta_ry` for qubits `0..q`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterParams {
    size: usize,
    angles: Vec<f64>,
}

impl FilterParams {
    pub fn new(size: usize, theta_rx: Vec<f64>, theta_ry: Vec<f64>) -> Result<Self> {
        let q = size * size;
        if size == 0 || theta_rx.len() != q || theta_ry.len() != q {
            return Err(Error::shape(format!(
                "filter of edge {size} needs {q}+{q} angles, got {}+{}",
                theta_rx.len(),
                theta_ry.len()
            )));
        }
        let mut angles = theta_rx;
        angles.extend(theta_ry);
        Ok(FilterParams { size, angles })
    }

    /// Builds from the flat `[rx..., ry...]` layout used by gradients.
    pub fn from_flat(size: usize, angles: Vec<f64>) -> Result<Self> {
        if size == 0 || angles.len() != 2 * size * size {
            return Err(Error::shape(format!(
                "filter of edge {size} needs {} angles, got {}",
                2 * size * size,
                angles.len()
            )));
        }
        Ok(FilterParams { size, angles })
    }

    pub fn zeros(size: usize) -> Self {
        FilterParams {
            size,
            angles: vec![0.0; 2 * size * size],
        }
    }

    /// Every angle drawn uniformly from `[0, upper)`.
    pub fn random<R: Rng + ?Sized>(size: usize, upper: f64, rng: &mut R) -> Self {
        let angles = (0..2 * size * size)
            .map(|_| rng.gen_range(0.0..upper))
            .collect();
        FilterParams { size, angles }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_qubits(&self) -> usize {
        self.size * self.size
    }

    pub fn num_params(&self) -> usize {
        self.angles.len()
    }

    pub fn theta_rx(&self) -> &[f64] {
        &self.angles[..self.num_qubits()]
    }

    pub fn theta_ry(&self) -> &[f64] {
        &self.angles[self.num_qubits()..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.angles
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Estimator {
    OverlapSquared,
    HadamardReal,
    ClassicalDot,
}

impl Estimator {
    pub fn is_quantum(self) -> bool {
        !matches!(self, Estimator::ClassicalDot)
    }

    pub fn name(self) -> &'static str {
        match self {
            Estimator::OverlapSquared => "overlap",
            Estimator::HadamardReal => "hadamard",
            Estimator::ClassicalDot => "classical",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap" | "overlap-sq" | "overlap_sq" => Ok(Estimator::OverlapSquared),
            "hadamard" | "hadamard-real" | "hadamard_real" => Ok(Estimator::HadamardReal),
            "classical" | "dot" => Ok(Estimator::ClassicalDot),
            other => Err(Error::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

/// `I|0⟩`: one `RY(scale·value)` per qubit.
pub fn embedding_gates(window: &WindowVector, scale: f64) -> Vec<Gate> {
    window
        .values
        .iter()
        .enumerate()
        .map(|(q, &v)| Gate::ry(q, scale * v))
        .collect()
}

/// `I†`: the embedding reversed with negated angles.
pub fn inverse_embedding_gates(window: &WindowVector, scale: f64) -> Vec<Gate> {
    let mut gates: Vec<Gate> = embedding_gates(window, scale)
        .into_iter()
        .map(Gate::inverse)
        .collect();
    gates.reverse();
    gates
}

/// `F(θ)`: RX layer, CNOT chain from the highest qubit down, RY layer.
pub fn ansatz_gates(params: &FilterParams) -> Vec<Gate> {
    let q = params.num_qubits();
    let mut gates = Vec::with_capacity(3 * q - 1);
    gates.extend(params.theta_rx().iter().enumerate().map(|(i, &a)| Gate::rx(i, a)));
    gates.extend((1..q).rev().map(|k| Gate::cnot(k, k - 1)));
    gates.extend(params.theta_ry().iter().enumerate().map(|(i, &a)| Gate::ry(i, a)));
    gates
}

fn check_sizes(window: &WindowVector, params: &FilterParams) -> Result<()> {
    if window.size != params.size {
        return Err(Error::shape(format!(
            "window edge {} does not match filter edge {}",
            window.size, params.size
        )));
    }
    Ok(())
}

/// State after `F(θ)` then `I†` on `|0⟩^q`.
fn overlap_state(window: &WindowVector, params: &FilterParams, scale: f64) -> Result<StateVector> {
    check_sizes(window, params)?;
    let mut state = StateVector::zero(params.num_qubits())?;
    state.run_gates_unchecked(&ansatz_gates(params));
    state.run_gates_unchecked(&inverse_embedding_gates(window, scale));
    Ok(state)
}

/// `|⟨0|I†F(θ)|0⟩|²`, the global all-zero probability.
pub fn eval_overlap_sq(window: &WindowVector, params: &FilterParams, scale: f64) -> Result<f64> {
    Ok(overlap_state(window, params, scale)?.prob_all_zero())
}

/// Product of the per-qubit zero marginals of the same state that
/// [`eval_overlap_sq`] measures. Matches the global probability only when the
/// final state is a product state; kept as a diagnostic.
pub fn eval_overlap_marginal_product(
    window: &WindowVector,
    params: &FilterParams,
    scale: f64,
) -> Result<f64> {
    let state = overlap_state(window, params, scale)?;
    (0..state.num_qubits()).try_fold(1.0, |acc, q| Ok(acc * state.prob_qubit_zero(q)?))
}

/// `Re⟨0|I†F(θ)|0⟩` from a Hadamard test. The ancilla is the highest qubit.
pub fn eval_hadamard_real(window: &WindowVector, params: &FilterParams, scale: f64) -> Result<f64> {
    check_sizes(window, params)?;
    let q = params.num_qubits();
    let ancilla = q;
    let mut state = StateVector::zero(q + 1)?;
    let mut gates = Vec::with_capacity(4 * q + 1);
    gates.push(Gate::h(ancilla));
    gates.extend(ansatz_gates(params).into_iter().map(|g| g.controlled_by(ancilla)));
    gates.extend(
        inverse_embedding_gates(window, scale)
            .into_iter()
            .map(|g| g.controlled_by(ancilla)),
    );
    gates.push(Gate::h(ancilla));
    state.run_gates_unchecked(&gates);
    Ok(2.0 * state.prob_qubit_zero(ancilla)? - 1.0)
}

/// `Σ I_i·w_i`.
pub fn eval_classical_dot(window: &WindowVector, weights: &[f64]) -> Result<f64> {
    if weights.len() != window.values.len() {
        return Err(Error::shape(format!(
            "{} weights for a window of {} values",
            weights.len(),
            window.values.len()
        )));
    }
    Ok(window.values.iter().zip(weights).map(|(a, b)| a * b).sum())
}

/// Runs a quantum estimator.
pub fn evaluate(
    window: &WindowVector,
    params: &FilterParams,
    mode: Estimator,
    scale: f64,
) -> Result<f64> {
    match mode {
        Estimator::OverlapSquared => eval_overlap_sq(window, params, scale),
        Estimator::HadamardReal => eval_hadamard_real(window, params, scale),
        Estimator::ClassicalDot => Err(Error::UnsupportedMode(mode)),
    }
}

/// Two-term parameter-shift rule `∂f/∂θ_j = [f(θ + s·e_j) − f(θ − s·e_j)] / d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftRule {
    pub shift: f64,
    pub divisor: f64,
}

impl ShiftRule {
    /// For functions of the form `a + b·cos θ + c·sin θ` in each angle.
    pub const UNIT_FREQUENCY: ShiftRule = ShiftRule {
        shift: FRAC_PI_2,
        divisor: 2.0,
    };
    /// For functions of the form `b·cos(θ/2) + c·sin(θ/2)` in each angle.
    pub const HALF_FREQUENCY: ShiftRule = ShiftRule {
        shift: PI,
        divisor: 4.0,
    };

    /// The exact rule for an estimator's output. Every angle enters the
    /// amplitude `⟨I|F(θ)⟩` through `cos(θ/2)` and `sin(θ/2)`, so its real part
    /// has half frequency while its squared modulus has unit frequency.
    pub fn for_estimator(mode: Estimator) -> Result<Self> {
        match mode {
            Estimator::OverlapSquared => Ok(ShiftRule::UNIT_FREQUENCY),
            Estimator::HadamardReal => Ok(ShiftRule::HALF_FREQUENCY),
            Estimator::ClassicalDot => Err(Error::UnsupportedMode(mode)),
        }
    }
}

/// Parameter-shift gradient of `f` at `params`.
///
/// Calls `f` exactly twice per angle, `θ_j + s` then `θ_j − s`, in parameter
/// order.
pub fn parameter_shift<F>(params: &FilterParams, rule: ShiftRule, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&FilterParams) -> Result<f64>,
{
    let mut shifted = params.clone();
    let mut grad = Vec::with_capacity(params.num_params());
    for j in 0..params.num_params() {
        let theta = params.angles[j];
        shifted.angles[j] = theta + rule.shift;
        let plus = f(&shifted)?;
        shifted.angles[j] = theta - rule.shift;
        let minus = f(&shifted)?;
        shifted.angles[j] = theta;
        grad.push((plus - minus) / rule.divisor);
    }
    Ok(grad)
}

/// Gradient of a quantum estimator's output with respect to all `2n²` angles.
pub fn grad_params(
    window: &WindowVector,
    params: &FilterParams,
    mode: Estimator,
    scale: f64,
) -> Result<Vec<f64>> {
    let rule = ShiftRule::for_estimator(mode)?;
    check_sizes(window, params)?;
    parameter_shift(params, rule, |p| evaluate(window, p, mode, scale))
}

/// [`grad_params`] with each shifted circuit dispatched as its own task.
pub fn grad_params_batched(
    window: &WindowVector,
    params: &FilterParams,
    mode: Estimator,
    scale: f64,
    executor: &Executor,
) -> Result<Vec<f64>> {
    let rule = ShiftRule::for_estimator(mode)?;
    check_sizes(window, params)?;
    let shifts: Vec<(usize, f64)> = (0..params.num_params())
        .flat_map(|j| [(j, rule.shift), (j, -rule.shift)])
        .collect();
    let values = executor.map_batch(&shifts, |&(j, s)| {
        let mut p = params.clone();
        p.angles[j] += s;
        evaluate(window, &p, mode, scale)
    })?;
    Ok(values.chunks_exact(2).map(|pm| (pm[0] - pm[1]) / rule.divisor).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    fn window(values: &[f64]) -> WindowVector {
        let n = (values.len() as f64).sqrt() as usize;
        WindowVector::new(n, values.to_vec()).unwrap()
    }

    #[test]
    fn zero_window_embeds_to_zero_state() {
        let w = window(&[0.0; 4]);
        let gates = embedding_gates(&w, 1.0);
        assert!(gates.iter().all(|g| *g == Gate::ry(g.target, 0.0)));
        let mut s = StateVector::zero(4).unwrap();
        s.run_gates_unchecked(&gates);
        assert_eq!(s, StateVector::zero(4).unwrap());
    }

    #[test]
    fn unit_window_gates() {
        let gates = embedding_gates(&window(&[1.0; 4]), 1.0);
        let expected: Vec<Gate> = (0..4).map(|q| Gate::ry(q, 1.0)).collect();
        assert_eq!(gates, expected);
    }

    #[test]
    fn ansatz_gate_counts() {
        assert_eq!(ansatz_gates(&FilterParams::zeros(2)).len(), 11);
        assert_eq!(ansatz_gates(&FilterParams::zeros(4)).len(), 47);
    }

    #[test]
    fn staircase_runs_bottom_up() {
        let gates = ansatz_gates(&FilterParams::zeros(2));
        assert_eq!(&gates[4..7], &[Gate::cnot(3, 2), Gate::cnot(2, 1), Gate::cnot(1, 0)]);
    }

    #[test]
    fn zero_everything_gives_unit_overlap() {
        let w = window(&[0.0; 4]);
        let p = FilterParams::zeros(2);
        assert_eq!(eval_overlap_sq(&w, &p, 1.0).unwrap(), 1.0);
        assert!((eval_hadamard_real(&w, &p, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_params_overlap_closed_form() {
        let vals = [0.1, 0.5, 0.9, 0.3];
        let expected: f64 = vals.iter().map(|v: &f64| (v / 2.0).cos().powi(2)).product();
        let got = eval_overlap_sq(&window(&vals), &FilterParams::zeros(2), 1.0).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn classical_dot_examples() {
        assert_eq!(eval_classical_dot(&window(&[0.5; 4]), &[1.0; 4]).unwrap(), 2.0);
        assert_eq!(eval_classical_dot(&window(&[0.3; 4]), &[0.0; 4]).unwrap(), 0.0);
        let w = WindowVector::new(1, vec![0.2]).unwrap();
        assert!(matches!(eval_classical_dot(&w, &[0.5, -1.0]), Err(Error::Shape(_))));
        // Two-value vectors are not square windows; check the arithmetic directly.
        let dot: f64 = [0.2, 0.4].iter().zip([0.5, -1.0]).map(|(a, b)| a * b).sum();
        assert!((dot + 0.3).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch_is_shape_error() {
        let w = window(&[0.0; 4]);
        let p = FilterParams::zeros(3);
        assert!(matches!(eval_overlap_sq(&w, &p, 1.0), Err(Error::Shape(_))));
        assert!(matches!(eval_hadamard_real(&w, &p, 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn window_rejects_out_of_range_pixels() {
        assert!(matches!(WindowVector::new(1, vec![1.5]), Err(Error::Domain(_))));
        assert!(matches!(WindowVector::new(2, vec![0.0; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn classical_mode_has_no_shift_gradient() {
        let w = window(&[0.0; 4]);
        let p = FilterParams::zeros(2);
        assert!(matches!(
            grad_params(&w, &p, Estimator::ClassicalDot, 1.0),
            Err(Error::UnsupportedMode(Estimator::ClassicalDot))
        ));
    }

    #[test]
    fn shift_rule_uses_two_calls_per_parameter() {
        for n in 1..=3 {
            let p = FilterParams::zeros(n);
            let calls = Cell::new(0usize);
            let g = parameter_shift(&p, ShiftRule::UNIT_FREQUENCY, |_| {
                calls.set(calls.get() + 1);
                Ok(0.0)
            })
            .unwrap();
            assert_eq!(g.len(), 2 * n * n);
            assert_eq!(calls.get(), 4 * n * n);
        }
    }

    #[test]
    fn shift_rule_per_estimator() {
        assert_eq!(ShiftRule::for_estimator(Estimator::OverlapSquared).unwrap().shift, FRAC_PI_2);
        assert_eq!(ShiftRule::for_estimator(Estimator::HadamardReal).unwrap().shift, PI);
        assert!(ShiftRule::for_estimator(Estimator::ClassicalDot).is_err());
        // d/dθ sin(θ/2) at θ = 0.8 under the half-frequency rule.
        let p = FilterParams::from_flat(1, vec![0.8, 0.0]).unwrap();
        let g = parameter_shift(&p, ShiftRule::HALF_FREQUENCY, |q| Ok((q.as_slice()[0] / 2.0).sin())).unwrap();
        assert!((g[0] - 0.5 * 0.4f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn batched_gradient_matches_sequential() {
        let w = window(&[0.2, 0.7, 0.1, 0.9]);
        let p = FilterParams::from_flat(2, (0..8).map(|i| 0.3 * i as f64).collect()).unwrap();
        let exec = Executor::new(3).unwrap();
        for mode in [Estimator::OverlapSquared, Estimator::HadamardReal] {
            let a = grad_params(&w, &p, mode, 1.0).unwrap();
            let b = grad_params_batched(&w, &p, mode, 1.0, &exec).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in [Estimator::OverlapSquared, Estimator::HadamardReal, Estimator::ClassicalDot] {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("nope".parse::<Estimator>().is_err());
    }
}
