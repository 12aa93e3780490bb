//! Learning interpretable signal temporal logic formulae for multi-class
//! time-series classification.
//!
//! Each class is encoded as a +1/-1 codeword over a set of attributes
//! (error-correcting output codes). A network built from smooth
//! relaxations of the robustness semantics learns one formula per
//! attribute, trained with a margin-based hinge loss; the trained network
//! binarizes to plain formulae that classify with exact semantics.

pub mod datasets;
pub mod diffgraph;
pub mod ecoc;
pub mod loss;
pub mod network;
pub mod optim;
pub mod stl;
pub mod trainer;

pub use ecoc::CodingMatrix;
pub use loss::{Decode, Mode};
pub use network::{ArchConfig, HardNetwork, ModelParams};
pub use stl::{Formula, Signal};
pub use trainer::{TrainConfig, TrainReport, TrainedModel};
