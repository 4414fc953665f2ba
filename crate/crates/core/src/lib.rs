//! Quantum multiverse network simulator.
//!
//! A state is a weighted sum of layers. Each layer is a chain of `n` qubits
//! with 2x2 transition records between neighbours, so it costs `O(n)` memory.
//! Controlled gates on a superposed control split a layer in two; everything
//! else rewrites edges in place.

pub mod bits;
pub mod circuit;
pub mod error;
pub mod float;
pub mod gates;
pub mod layer;
pub mod network;
pub mod oracle;
pub mod rng;
pub mod sampler;

pub use bits::{BitString, RegisterRange};
pub use error::{QumvnError, Result};
pub use float::{EdgeFloat, Precision};
pub use gates::{rk_phase, SingleQubitGate};
pub use layer::{Layer, Link};
pub use network::{Disjointness, QuMvN, Tolerances};
pub use sampler::{choose_mode, sample_ensemble, sample_once, spectrum_distribution, FrequencyTable, Sampler, SamplingMode};
