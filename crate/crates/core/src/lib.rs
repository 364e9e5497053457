//! Quantum channels driven by Markovian classical noise: block channels,
//! per-class Holevo quantities and capacity estimates, branch discrimination,
//! typical subspaces, and exact small-scale coding simulation.

pub mod channel;
pub mod codec;
pub mod discrimination;
pub mod error;
pub mod holevo;
pub mod linalg;
pub mod markov;
pub mod random;
pub mod specfile;
pub mod typicality;

pub use channel::{BranchId, CptMap, MemoryChannel};
pub use error::{Error, Result};
pub use holevo::Ensemble;
pub use linalg::{ComplexMatrix, DensityMatrix, Povm};
pub use markov::{ClassDecomposition, CommClass, MarkovChain};
pub use specfile::{parse_channel, ChannelSpecFile};
