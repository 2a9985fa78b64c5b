//! Maximally mixed translation-invariant states on qudit rings.
//!
//! The numerical core is generic over the real scalar (`f32` or `f64`);
//! the aliases below fix it to `f64`. Dimension counts are exact `u128`.

pub mod campaign;
pub mod correlators;
pub mod dims;
pub mod doubled;
pub mod error;
pub mod lattice;
pub mod lindblad;
pub mod linalg;
pub mod mmis;
pub mod num;
pub mod swssb;
pub mod umps;

pub use campaign::{run_campaign, run_criterion, CampaignConfig, Check, CriterionError};
pub use error::{Error, Result};
pub use lattice::{BasisString, OrbitTable, PauliString, RingSpec};
pub use mmis::Mmis;

pub type Complex64 = num::Complex<f64>;
pub type Operator = linalg::DenseOperator<f64>;
pub type Density = linalg::DensityMatrix<f64>;
pub type Sparse = linalg::SparseOperator<f64>;
pub type Tensor = umps::MpsTensor<f64>;
