//! Compares parameter-shift gradients with central finite differences for
//! both quantum estimators and counts the circuit evaluations.
//!
//! ```bash
//! cargo run -p qfilter --example parameter_shift
//! ```

use std::cell::Cell;

use qfilter::filter::{evaluate, parameter_shift, ShiftRule};
use qfilter::{Estimator, FilterParams, WindowVector};

fn main() -> qfilter::Result<()> {
    let window = WindowVector::new(2, vec![0.1, 0.9, 0.5, 0.4])?;
    let params = FilterParams::from_flat(2, (0..8).map(|i| 0.37 * i as f64 - 1.2).collect())?;
    let h = 1e-4;

    for mode in [Estimator::OverlapSquared, Estimator::HadamardReal] {
        let rule = ShiftRule::for_estimator(mode)?;
        let calls = Cell::new(0);
        let grad = parameter_shift(&params, rule, |p| {
            calls.set(calls.get() + 1);
            evaluate(&window, p, mode, 1.0)
        })?;
        println!("{mode}: shift ±{:.4}, {} evaluations for {} angles", rule.shift, calls.get(), grad.len());
        for (j, g) in grad.iter().enumerate() {
            let mut a = params.clone();
            a.as_mut_slice()[j] += h;
            let mut b = params.clone();
            b.as_mut_slice()[j] -= h;
            let fd = (evaluate(&window, &a, mode, 1.0)? - evaluate(&window, &b, mode, 1.0)?) / (2.0 * h);
            println!("  θ{j}: shift {g:+.8}  fd {fd:+.8}  |Δ| {:.1e}", (g - fd).abs());
        }
    }
    Ok(())
}
