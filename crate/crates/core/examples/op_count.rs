//! Inner products needed to train `m` filters of edge `n` on `p` images of
//! `l × l` for `t` epochs, for a few filter sizes.
//!
//! ```bash
//! cargo run -p qfilter --example op_count
//! ```

use qfilter::convnet::op_count;

fn main() {
    let (l, m, p, t) = (28, 4, 50, 30);
    println!("l={l} m={m} p={p} t={t}");
    for n in [1, 2, 4, 7, 14, 28] {
        println!("  n={n:<2} qubits={:<3} inner products={}", n * n, op_count(l, n, m, p, t));
    }
}
