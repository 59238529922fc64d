//! Online prediction of third-order tensors under the t-product.
pub mod baselines;
pub mod datagen;
pub mod error;
pub mod game;
pub mod harness;
mod linalg;
pub mod oteg;
pub mod rng;
pub mod spectral;
pub mod teg;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use game::{play_game, Index3, Loss, OnlineLearner, PlayRecord, SquaredLoss};
pub use linalg::C64;
pub use spectral::{Definiteness, PdFourierTensor};
pub use tensor::{DenseTensor3, Dims, FourierTensor3};
