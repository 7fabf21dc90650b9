//! Intrinsic (graph) distances on meshes with hyperbolic edge lengths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::mesh::TriMesh;
use crate::Error;

#[derive(Copy, Clone, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| self.1.cmp(&other.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path distance from the nearest of `sources` over the edge graph,
/// with hyperbolic edge lengths.  Vertices unreachable from every source
/// (other components, boundary-at-infinity vertices) get `+∞`.
pub fn intrinsic_distance(s: &TriMesh, sources: &[usize]) -> Result<Vec<f64>, Error> {
    if sources.is_empty() {
        return Err(Error::InvalidInput("no distance sources".into()));
    }
    if let Some(&bad) = sources.iter().find(|&&v| v >= s.n_vertices()) {
        return Err(Error::InvalidInput(format!("source vertex {bad} is not on the mesh")));
    }
    let adj = s.adjacency();
    let mut dist = vec![f64::INFINITY; s.n_vertices()];
    let mut heap = BinaryHeap::new();
    for &v in sources {
        dist[v] = 0.0;
        heap.push(Item(0.0, v));
    }
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &w in &adj[u] {
            let nd = d + s.hyperbolic_edge_length(u, w);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::graph::{GraphDomain, GraphSurface};

    #[test]
    fn vertical_plane_distance_is_log_height() {
        let g = GraphSurface::new(GraphDomain::Rectangle { x_max: 2.0, y_half: 0.5 }, 1.0 / 64.0).unwrap();
        let m = g.to_mesh();
        let src = g.grid_node(64, 0).unwrap();
        let d = intrinsic_distance(&m, &[src]).unwrap();
        assert_eq!(d[src], 0.0);
        for i in [4usize, 16, 32, 100, 128] {
            let v = g.grid_node(i, 0).unwrap();
            let x = i as f64 / 64.0;
            assert!((d[v] - x.ln().abs()).abs() < 1e-12, "i={i}");
        }
        assert!(d[g.grid_node(0, 0).unwrap()].is_infinite());
    }
}
