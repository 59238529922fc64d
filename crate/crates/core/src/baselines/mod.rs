//! Comparison learners: FoReL with a tensor-nuclear-norm penalty, matrix
//! EG on mode unfoldings, and independent per-slice matrix learners.

mod forel;
mod omeg;
mod slicewise;

pub use forel::{forel_learning_rate, svt_faces, Forel, DEFAULT_FISTA_ITERS, FOREL_SMOOTHNESS};
pub use omeg::{flatten_mode, omeg_run, unflatten_mode, Flattened, Mode, Omeg};
pub use slicewise::{plays_per_slice, slicewise_run, Slicewise};
