//! Symmetric eigenvalue kernel: Sturm counts, banded inertia and spectrum
//! slicing.

mod banded;
mod tridiag;
mod window;

pub use banded::{band_inertia, eigs_below_band, BandedMatrix};
pub use tridiag::{eigs_below_tridiag, kth_eigenvalue, sturm_count, TridiagonalMatrix};
pub use window::{deficit_sum, SpectralWindow};
