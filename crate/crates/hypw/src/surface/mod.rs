//! Surface representations and the differential-geometry kernel.

pub mod distance;
pub mod graph;
pub mod io;
pub mod mesh;
pub mod revolution;
pub mod shape;

pub use distance::intrinsic_distance;
pub use graph::{GraphDomain, GraphSurface, NodeKind};
pub use mesh::{transform_surface, TriMesh};
pub use revolution::{ProfileSample, RevolutionSurface};
pub use shape::{mesh_shape_full, shape_euclidean, shape_hyperbolic, HyperbolicShape, ShapeField, ShapeSample};

use crate::Error;

/// Any of the supported surface representations.
#[derive(Clone, Debug)]
pub enum Surface {
    Graph(GraphSurface),
    Revolution(RevolutionSurface),
    Mesh(TriMesh),
}

/// Triangulates a surface with one vertex per sample.
pub fn to_mesh(s: &Surface) -> Result<TriMesh, Error> {
    match s {
        Surface::Graph(g) => Ok(g.to_mesh()),
        Surface::Revolution(r) => r.to_mesh(),
        Surface::Mesh(m) => Ok(m.clone()),
    }
}
