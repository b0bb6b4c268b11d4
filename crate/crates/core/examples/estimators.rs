//! Evaluates one 2×2 window against one filter with every estimator, next to
//! the exact amplitude `⟨I|F(θ)⟩` from two separately prepared states.
//!
//! ```bash
//! cargo run -p qfilter --example estimators
//! ```
//!
//! The last line shows that the product of single-qubit zero probabilities is
//! not the all-zero probability once the CNOT chain entangles the register.

use qfilter::filter::{
    ansatz_gates, embedding_gates, eval_classical_dot, eval_hadamard_real,
    eval_overlap_marginal_product, eval_overlap_sq,
};
use qfilter::{FilterParams, StateVector, WindowVector};

fn prepare(gates: &[qfilter::Gate], qubits: usize) -> qfilter::Result<StateVector> {
    let mut s = StateVector::zero(qubits)?;
    for g in gates {
        s.apply(g)?;
    }
    Ok(s)
}

fn main() -> qfilter::Result<()> {
    let window = WindowVector::new(2, vec![0.0, 0.8, 0.3, 1.0])?;
    let params = FilterParams::new(2, vec![0.4, 1.1, -0.7, 2.0], vec![0.2, -1.3, 0.9, 0.5])?;
    let scale = 1.0;

    let image = prepare(&embedding_gates(&window, scale), 4)?;
    let filter = prepare(&ansatz_gates(&params), 4)?;
    let z = image.inner_product(&filter)?;
    println!("⟨I|F(θ)⟩               = {:.6} {:+.6}i", z.re, z.im);
    println!("|⟨I|F(θ)⟩|²            = {:.6}", z.norm_sqr());
    println!("overlap estimator      = {:.6}", eval_overlap_sq(&window, &params, scale)?);
    println!("Hadamard-test estimator = {:.6}", eval_hadamard_real(&window, &params, scale)?);
    println!("classical dot (w = θ_rx) = {:.6}", eval_classical_dot(&window, params.theta_rx())?);
    println!(
        "product of marginals   = {:.6}",
        eval_overlap_marginal_product(&window, &params, scale)?
    );
    Ok(())
}
