//! Branching random tessellations: simulation of cell-division processes
//! driven by a hyperplane measure, and Monte Carlo estimation of their
//! entropy, energy and free-energy densities.

pub mod driving;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod kernels;
pub mod rng;
pub mod simulator;

pub use driving::{ColourKernel, DirectionAtom, DirectionalMeasure, DrivingMeasure};
pub use error::{Error, Result};
pub use geometry::{BicolouredHyperplane, Cell, Colour, Point, Polytope, SpatialHyperplane};
pub use kernels::{BetaFunction, EdgeConvention, KernelContext, KernelKind, KernelSpec};
pub use rng::{run_replicates, SimRng, StreamSeed};
pub use simulator::{BranchingTessellation, CellId, SimOptions, Tessellation};
pub use estimators::{Estimate, EstimatorOptions, ObservationScheme};
