//! Numerical library for constant-mean-curvature and constant sigma_k
//! Weingarten foliations near the conformal infinity of asymptotically
//! hyperbolic metrics given in normal form over periodic boundary grids.
//!
//! The pipeline: a boundary metric expansion (`metric`) is extended into
//! the collar by the Hamilton-Jacobi equation for special defining
//! functions (`extension`), level sets are located and their extrinsic
//! curvature assembled (`leaf`), a Yamabe-type normalization makes the
//! quadratic invariant constant (`yamabe`), and Newton continuation builds
//! the foliation leaf by leaf (`foliation`), with resonance analysis
//! (`resonance`) gating the negative-kappa1 regime and sigma_k variants
//! (`sigma`) on top.

pub mod curvature;
pub mod eig;
pub mod error;
pub mod extension;
pub mod field;
pub mod fit;
pub mod foliation;
pub mod grid;
pub mod leaf;
pub mod linsolve;
pub mod metric;
pub mod ops;
pub mod resonance;
pub mod sigma;
pub mod smallmat;
pub mod spectral;
pub mod yamabe;

pub use error::{Error, Result};
pub use field::{ScalarField, SymTensorField, VectorField};
pub use grid::BoundaryGrid;
pub use metric::{KappaPair, KappaSign, MetricExpansion, ModelKind};
