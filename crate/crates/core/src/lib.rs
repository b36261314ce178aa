//! Numerical laboratory for Dirichlet series `sum a_n n^{-s}` with scalar or
//! `l_q`-valued coefficients.
//!
//! Everything works on finite truncations: norms of Dirichlet polynomials,
//! abscissa estimates from the growth of partial-sum norms, the Bohr lift to
//! polynomials on a finite torus, and explicit extremal series built from
//! prime blocks. Randomized routines take an explicit seed and derive each
//! sample's generator from `(seed, index)`, so results are reproducible and
//! independent of thread scheduling.

pub mod abscissa;
pub mod bohr;
pub mod error;
pub mod extremal;
pub mod ext;
pub mod jsonl;
pub mod norms;
pub mod prime_index;
pub mod rng;
pub mod series;
pub mod torus;

pub use abscissa::{AbscissaEstimate, Method};
pub use error::{Error, Result};
pub use norms::{NormEstimate, NormFamily, NormTag, Samplers};
pub use prime_index::{MultiIndex, PrimeTable};
pub use series::{
    Coefficient, CoefficientSpaceSpec, DirichletTruncation, DualVector, SpaceKind, C64,
};
