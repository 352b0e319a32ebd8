//! Construction, simulation and certification of the qutrit SIC measurement.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense complex matrices and Hermitian spectral tools.
//! * [`povm`]: kets, density matrices, POVMs and the measurement families
//!   (SIC, Naimark unitary, MUBs, equiangular states, exclusion states).
//! * [`photonic`]: staged interferometer circuits, MZI meshes, visibility
//!   noise and count sampling.
//! * [`sdp`]: a primal-dual interior-point solver for small block SDPs.
//! * [`certify`]: simulability, discrimination and randomness programs.
//! * [`tomo`]: maximum-likelihood state and detector tomography.
//! * [`protocols`]: simulated experiments, game scores and statistics.
//! * [`io`]: JSON and CSV formats shared with the command-line tool.

pub mod certify;
pub mod error;
pub mod io;
pub mod linalg;
pub mod photonic;
pub mod povm;
pub mod protocols;
pub mod sdp;
pub mod tomo;

pub use error::{Error, Result};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use linalg::{CMatrix, HermitianView, C64};
pub use povm::{DensityMatrix, Ket, Povm};
