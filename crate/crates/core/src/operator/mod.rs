//! Dense complex linear algebra and tensor-product Hilbert-space machinery.

mod linalg;
mod matrix;
mod space;
mod state;

pub use linalg::{expm, herm_eig, herm_eigvals, unitary_propagator, HermEig};
pub use matrix::ComplexMatrix;
pub use space::{
    destroy, embed, embed_product, kron, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z,
    SpaceLayout,
};
pub use state::{expect, ptrace, QState, StateKind, PSD_TOL, STATE_TOL};

pub(crate) use state::{expect_density, expect_ket};
