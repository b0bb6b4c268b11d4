//! Builds a Bell pair and a Toffoli on the dense simulator and prints the
//! amplitudes and measurement probabilities.
//!
//! ```bash
//! cargo run -p qfilter --example statevector_basics
//! ```

use qfilter::{Circuit, Gate, StateVector};

fn show(label: &str, sv: &StateVector) {
    println!("{label}");
    for (i, a) in sv.amplitudes().iter().enumerate() {
        if a.norm() > 1e-12 {
            println!("  |{i:0w$b}⟩  {:+.4} {:+.4}i", a.re, a.im, w = sv.num_qubits());
        }
    }
}

fn main() -> qfilter::Result<()> {
    let mut bell = StateVector::zero(2)?;
    bell.run(&Circuit::from_gates(2, vec![Gate::h(0), Gate::cnot(0, 1)])?)?;
    show("Bell pair (basis labels read qubit 1, qubit 0)", &bell);
    println!("  P(all zero) = {:.3}", bell.prob_all_zero());
    println!("  P(qubit 1 = 0) = {:.3}", bell.prob_qubit_zero(1)?);

    // Toffoli: a CNOT with one extra control.
    let mut sv = StateVector::zero(3)?;
    let mut c = Circuit::new(3);
    c.push(Gate::ry(0, std::f64::consts::PI))?;
    c.push(Gate::ry(1, std::f64::consts::PI))?;
    c.push(Gate::cnot(0, 2).controlled_by(1))?;
    sv.run(&c)?;
    show("Toffoli on |011⟩", &sv);

    let plus = {
        let mut s = StateVector::zero(1)?;
        s.apply(&Gate::h(0))?;
        s
    };
    println!("⟨0|+⟩ = {:.4}", StateVector::zero(1)?.inner_product(&plus)?);

    match StateVector::zero(25) {
        Err(e) => println!("25 qubits: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
