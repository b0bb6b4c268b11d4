//! Hybrid quantum-classical image classification with variational quantum
//! filters.
//!
//! The convolution layer replaces each filter's window dot product with the
//! quantum inner product `⟨0|I†F(θ)|0⟩` between an angle-encoded image window
//! `I` and a trainable ansatz `F(θ)`, evaluated exactly on a dense state-vector
//! simulator. A dense softmax head classifies the resulting feature map.
//!
//! | module | contents |
//! |---|---|
//! | [`sim`] | state vectors, gates, circuits |
//! | [`filter`] | window embedding, ansatz, estimators, parameter-shift gradients |
//! | [`convnet`] | window extraction, hybrid model, softmax head, loss, backprop |
//! | [`optim`] | SGD and Adadelta |
//! | [`data`] | IDX loading and class-stratified subsets |
//! | [`executor`] | ordered parallel evaluation of circuit tasks |
//! | [`train`] | training loop and metrics |
//! | [`checkpoint`] | plain-text model files |
//! | [`cli`] | the `qfilter` command line |

pub mod checkpoint;
pub mod cli;
pub mod convnet;
pub mod data;
pub mod error;
pub mod executor;
pub mod filter;
pub mod optim;
pub mod sim;
pub mod train;

pub use checkpoint::Checkpoint;
pub use convnet::{Architecture, FilterKind, HybridModel, ImageTensor};
pub use data::Dataset;
pub use error::{Error, Result};
pub use executor::Executor;
pub use filter::{Estimator, FilterParams, WindowVector};
pub use sim::{Circuit, Gate, StateVector};
