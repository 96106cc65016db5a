//! Wave-network token representations: each token of a text becomes a complex
//! vector whose magnitude is shared across the text and whose phase is
//! token-specific. Includes the forward operations, exact backward passes, a
//! single-layer classifier with its training loop, and gradient/complexity
//! diagnostics.

pub mod diagnostics;
pub mod error;
pub mod model;
pub mod tensor;
pub mod training;
pub mod wave_ops;
pub mod wave_repr;

pub use error::{Error, Result};
pub use model::{
    Architecture, CombineMode, ForwardTrace, GradBundle, GradRecord, ModelParams, Restore, TokenSeq, CLS_ID,
    PAD_ID,
};
pub use tensor::{Matrix, Rng};
pub use wave_ops::CartesianWave;
pub use wave_repr::{GlobalSemantics, PhaseMatrix, WaveRepr};
