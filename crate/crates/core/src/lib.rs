//! Exterior calculus on weighted point clouds: alternating forms, the
//! coboundary and its adjoint, Hodge Laplacians, wedge products, heat-kernel
//! weights, and estimators of higher-order Dirichlet energies on model
//! manifolds.

pub mod error;
pub mod estimator;
pub mod forms;
pub mod identities;
pub mod manifolds;
pub mod numeric;
pub mod skeleton;
pub mod spectra;
pub mod stats;
pub mod tuple;
pub mod weights;

pub use error::{HodgeError, Result};
pub use estimator::{empirical_dirichlet, u_statistic, EstimateResult, TupleSet, UStatKernelSpec};
pub use forms::{Form, FunctionOnCloud};
pub use manifolds::{Manifold, PointCloud, TestFunction};
pub use skeleton::ComplexSkeleton;
pub use spectra::{assemble, betti, OperatorKind, SpectrumReport};
pub use tuple::IndexTuple;
pub use weights::{build_skeleton, KernelModel, TruncationPolicy};
