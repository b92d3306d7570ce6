//! Uniform red refinement.

use crate::error::Result;
use crate::mesh::{midpoint, Mesh};
use crate::topology::{build_topology, classify_edges, EdgeTopology};

/// Splits every element into four through its edge midpoints.
///
/// The midpoint of edge `e` becomes node `num_nodes + e`. Parent `m` with
/// vertices `(P1, P2, P3)` and opposite-edge midpoints `(M1, M2, M3)` is
/// replaced by children `4m..4m+4`: `(M1, M2, M3)`, `(P1, M3, M2)`,
/// `(P2, M1, M3)`, `(P3, M2, M1)`. Each boundary list of length `n` becomes
/// `n` first halves `(a, m)` followed by `n` second halves `(m, b)`.
///
/// `topology` must have been built from `mesh`.
pub fn red_refine(mesh: &Mesh, topology: &EdgeTopology) -> Mesh {
    let nn = mesh.num_nodes();
    let mut coords = Vec::with_capacity(nn + topology.num_edges());
    coords.extend_from_slice(mesh.coordinates());
    coords.extend(
        topology
            .all_edge_nodes()
            .iter()
            .map(|&[a, b]| midpoint(mesh.node(a), mesh.node(b))),
    );

    let mut elements = Vec::with_capacity(4 * mesh.num_elements());
    for (m, &[p1, p2, p3]) in mesh.elements().iter().enumerate() {
        let [m1, m2, m3] = topology.element_edges(m).map(|e| nn + e);
        elements.push([m1, m2, m3]);
        elements.push([p1, m3, m2]);
        elements.push([p2, m1, m3]);
        elements.push([p3, m2, m1]);
    }

    let split = |list: &[[usize; 2]]| -> Vec<[usize; 2]> {
        let mids: Vec<usize> = list
            .iter()
            .map(|&[a, b]| {
                nn + topology
                    .node_pair_to_edge(a, b)
                    .expect("boundary pair is an edge of the mesh")
            })
            .collect();
        let first = list.iter().zip(&mids).map(|(&[a, _], &m)| [a, m]);
        let second = list.iter().zip(&mids).map(|(&[_, b], &m)| [m, b]);
        first.chain(second).collect()
    };
    let dirichlet = split(mesh.dirichlet());
    let neumann = split(mesh.neumann());
    Mesh::from_parts(coords, elements, dirichlet, neumann)
}

/// Applies `levels` rounds of red refinement. Fails if a boundary pair is
/// not an edge of the mesh.
pub fn refine_uniform(mesh: &Mesh, levels: usize) -> Result<Mesh> {
    let mut current = mesh.clone();
    for _ in 0..levels {
        let topology = build_topology(&current)?;
        classify_edges(&topology, &current)?;
        current = red_refine(&current, &topology);
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts() {
        let mesh = Mesh::unit_square();
        let t = build_topology(&mesh).unwrap();
        let fine = red_refine(&mesh, &t);
        assert_eq!(fine.num_elements(), 16);
        assert_eq!(fine.num_nodes(), 13);
        assert_eq!(fine.dirichlet().len(), 4);
        assert_eq!(fine.neumann().len(), 4);
        assert!(fine.validate().is_empty());
        let twice = refine_uniform(&mesh, 2).unwrap();
        assert_eq!(twice.num_elements(), 64);
        assert_eq!(twice.mesh_size().unwrap(), 0.25);
    }

    #[test]
    fn right_triangle_children() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![], vec![]).unwrap();
        let fine = refine_uniform(&mesh, 1).unwrap();
        let pts: Vec<_> = fine.elements().iter().map(|e| e.map(|i| fine.node(i))).collect();
        assert_eq!(pts[0], [[0.5, 0.5], [0.0, 0.5], [0.5, 0.0]]);
        assert_eq!(pts[1], [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]]);
        for m in 0..4 {
            assert_eq!(fine.signed_area(m), 0.125);
        }
    }

    #[test]
    fn boundary_halves_layout() {
        let mesh = Mesh::unit_square();
        let fine = refine_uniform(&mesh, 1).unwrap();
        // Dirichlet (1,2),(2,4) -> midpoints of edges 1 and 3 are nodes 6 and 8
        assert_eq!(fine.dirichlet(), &[[0, 5], [1, 7], [5, 1], [7, 3]]);
    }
}
