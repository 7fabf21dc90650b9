//! Producers of minimal surfaces and the linear operators around them.

pub mod glue;
pub mod graph;
pub mod jacobi;
pub mod revolution;
pub mod willmore;

pub use glue::{glue_family, gluing_ledger, GluedSurface, GluingLedger, GluingSpec};
pub use graph::{minimal_graph, GraphSolution, SolveOptions};
pub use jacobi::{jacobi_apply, jacobi_solve, JacobiOptions, JacobiSolution};
pub use revolution::{minimal_revolution, profile_energy, RevolutionOptions, RevolutionSolution};
pub use willmore::{willmore_residual, WillmoreResidual};
