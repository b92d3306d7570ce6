//! Independent Crouzeix–Raviart solver used to cross-check the hybrid method.
//!
//! The nonconforming space has one degree of freedom per edge, the value at
//! the edge midpoint, with local basis `ψ_k = 1 - 2 λ_k`. The bilinear form
//! and the load quadratures mirror the hybrid discretization, so both
//! methods must produce the same midpoint values.

use crate::assembly::{barycentric_gradients, ProblemCoefficients};
use crate::error::{Error, Result};
use crate::mesh::{distance, midpoint, Mesh, Point};
use crate::sparse::{solve_sparse, TripletBuffer};
use crate::topology::{EdgeClassification, EdgeKind, EdgeTopology, LOCAL_EDGE_VERTICES};

/// Midpoint values of the Crouzeix–Raviart solution, indexed by edge id.
/// Dirichlet edges carry `u_D(m_E)`; boundary edges listed in neither
/// boundary file carry zero.
pub fn cr_reference_solve(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    coeffs: &ProblemCoefficients,
    f: impl Fn(Point) -> f64,
    flux: impl Fn(Point, [f64; 2]) -> f64,
    u_d: impl Fn(Point) -> f64,
) -> Result<Vec<f64>> {
    let ne = topology.num_edges();
    let p = coeffs.p();
    let mut k = TripletBuffer::with_capacity(ne, ne, 9 * mesh.num_elements());
    let mut rhs = vec![0.0; ne];

    for m in 0..mesh.num_elements() {
        let v = mesh.vertices(m);
        let (grad, area) = barycentric_gradients(v).map_err(|_| Error::NegativeArea {
            element: m,
            area: mesh.signed_area(m),
        })?;
        let edges = topology.element_edges(m);
        for a in 0..3 {
            let ag = coeffs.apply_a(grad[a]);
            for b in 0..3 {
                let stiff = 4.0 * area * (ag[0] * grad[b][0] + ag[1] * grad[b][1]);
                // ∫ (p . ∇ψ_b) ψ_a with ∫ ψ_a = |T|/3
                let conv = -2.0 * (p[0] * grad[b][0] + p[1] * grad[b][1]) * area / 3.0;
                let mass = if a == b { coeffs.delta() * area / 3.0 } else { 0.0 };
                k.push(edges[a], edges[b], stiff + conv + mass);
            }
            let [i, j] = LOCAL_EDGE_VERTICES[a];
            rhs[edges[a]] += area / 3.0 * f(midpoint(v[i], v[j]));
        }
    }
    for &e in classification.neumann_edge_ids() {
        let [a, b] = topology.edge_nodes(e);
        let (pa, pb) = (mesh.node(a), mesh.node(b));
        rhs[e] += distance(pa, pb) * flux(midpoint(pa, pb), topology.edge_normal(mesh, e));
    }

    // fixed values on Dirichlet and unlisted boundary edges
    let mut fixed = vec![None; ne];
    for e in 0..ne {
        match classification.kind(e) {
            EdgeKind::Dirichlet => fixed[e] = Some(u_d(topology.edge_midpoint(mesh, e))),
            EdgeKind::Unlisted => fixed[e] = Some(0.0),
            _ => {}
        }
    }
    let mut free_index = vec![usize::MAX; ne];
    let mut free = Vec::new();
    for e in 0..ne {
        if fixed[e].is_none() {
            free_index[e] = free.len();
            free.push(e);
        }
    }
    let full = k.build()?;
    let mut kf = TripletBuffer::with_capacity(free.len(), free.len(), full.nnz());
    let mut rf: Vec<f64> = free.iter().map(|&e| rhs[e]).collect();
    for (i, j, v) in full.iter() {
        if fixed[i].is_some() {
            continue;
        }
        match fixed[j] {
            Some(g) => rf[free_index[i]] -= v * g,
            None => kf.push(free_index[i], free_index[j], v),
        }
    }
    let x = if free.is_empty() {
        Vec::new()
    } else {
        solve_sparse(&kf.build()?, &rf)?
    };
    Ok((0..ne)
        .map(|e| fixed[e].unwrap_or_else(|| x[free_index[e]]))
        .collect())
}
