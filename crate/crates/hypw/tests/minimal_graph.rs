//! Minimal-graph solver checks against an independent Picard iteration.

use hypw::linalg::Triplets;
use hypw::solve::{minimal_graph, SolveOptions};
use hypw::surface::{GraphDomain, GraphSurface, NodeKind};

fn sine_data(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.05 * y.sin()
    } else {
        0.0
    }
}

/// Frozen-coefficient (Picard) iteration for `x a_ij(∇u) ∂_ij u − 2 W² u_x = 0`:
/// each sweep solves the linear problem with coefficients from the previous iterate.
fn picard(h: f64) -> GraphSurface {
    let mut g = GraphSurface::new(GraphDomain::HalfDisc { radius: 1.0 }, h).unwrap();
    g.set_boundary_data(sine_data);
    let st = g.stencils();
    let idx: Vec<usize> = (0..g.len()).filter(|&k| g.kind[k] == NodeKind::Interior).collect();
    let mut col = vec![usize::MAX; g.len()];
    for (c, &k) in idx.iter().enumerate() {
        col[k] = c;
    }
    for _ in 0..100 {
        let mut t = Triplets::new(idx.len());
        let mut rhs = vec![0.0; idx.len()];
        for (row, &k) in idx.iter().enumerate() {
            let x = g.xy[k][0];
            let j = st[k].apply(&g.u);
            let (p, q) = (j.ux, j.uy);
            let w2 = 1.0 + p * p + q * q;
            let (a, b, c) = (x * (1.0 + q * q), -2.0 * x * p * q, x * (1.0 + p * p));
            for (n, &m) in st[k].nodes.iter().enumerate() {
                let w = a * st[k].wxx[n] + b * st[k].wxy[n] + c * st[k].wyy[n] - 2.0 * w2 * st[k].wx[n];
                if col[m] == usize::MAX {
                    rhs[row] -= w * g.u[m];
                } else {
                    t.push(row, col[m], w);
                }
            }
        }
        let u = t.solve(&rhs).unwrap();
        let mut change = 0.0f64;
        for (c, &k) in idx.iter().enumerate() {
            change = change.max((g.u[k] - u[c]).abs());
            g.u[k] = u[c];
        }
        if change < 1e-14 {
            break;
        }
    }
    g
}

#[test]
fn sine_data_matches_picard_oracle() {
    let h = 1.0 / 16.0;
    let sol = minimal_graph(
        GraphDomain::HalfDisc { radius: 1.0 },
        sine_data,
        &SolveOptions { h, tol: 1e-8, ..Default::default() },
    )
    .unwrap();
    assert!(sol.residual <= 1e-8);
    let sup = sol.surface.u.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    assert!(sup <= 0.05 + 1e-12, "{sup}");
    let oracle = picard(h);
    let gap = sol.surface.u.iter().zip(&oracle.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap <= 1e-6, "{gap}");
    // Dirichlet data reproduced exactly.
    for k in 0..sol.surface.len() {
        if sol.surface.kind[k] != NodeKind::Interior {
            let [x, y] = sol.surface.xy[k];
            assert_eq!(sol.surface.u[k], sine_data(x, y));
        }
    }
}

#[test]
fn solution_meets_the_boundary_vertically() {
    let h = 1.0 / 32.0;
    let sol =
        minimal_graph(GraphDomain::HalfDisc { radius: 1.0 }, sine_data, &SolveOptions { h, ..Default::default() })
            .unwrap();
    let g = &sol.surface;
    let v = g.verticality_by_row(&g.stencils(), 5, 0.5);
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
}
