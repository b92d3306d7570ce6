//! CSV writers. All ids are 1-based.

use std::fmt::Write;

use phfem::elliptic::DiscreteSolution;
use phfem::topology::{Discretization, EdgeKind};

fn kind_name(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::Interior => "interior",
        EdgeKind::Dirichlet => "dirichlet",
        EdgeKind::Neumann => "neumann",
        EdgeKind::Unlisted => "unlisted",
    }
}

/// `edge,node_a,node_b,t_plus,t_minus,length,kind`; `t_minus` is 0 on the boundary.
pub fn edge_table(disc: &Discretization) -> String {
    let topo = &disc.topology;
    let lengths = topo.edge_lengths(&disc.mesh);
    let mut s = String::from("edge,node_a,node_b,t_plus,t_minus,length,kind\n");
    for e in 0..topo.num_edges() {
        let [a, b] = topo.edge_nodes(e);
        writeln!(
            s,
            "{},{},{},{},{},{:.16e},{}",
            e + 1,
            a + 1,
            b + 1,
            topo.t_plus(e) + 1,
            topo.t_minus(e).map_or(0, |m| m + 1),
            lengths[e],
            kind_name(disc.classification.kind(e))
        )
        .unwrap();
    }
    s
}

/// `element,u1,u2,u3`: values at the element's vertices in file order.
pub fn element_values(solution: &DiscreteSolution) -> String {
    let mut s = String::from("element,u1,u2,u3\n");
    for (m, v) in solution.u.chunks(3).enumerate() {
        writeln!(s, "{},{:.16e},{:.16e},{:.16e}", m + 1, v[0], v[1], v[2]).unwrap();
    }
    s
}

/// `multiplier,edge,node_a,node_b,lambda`, one row per retained edge.
pub fn multipliers(disc: &Discretization, solution: &DiscreteSolution) -> String {
    let mut s = String::from("multiplier,edge,node_a,node_b,lambda\n");
    for (l, (&e, v)) in disc
        .classification
        .retained_edges()
        .iter()
        .zip(&solution.lambda)
        .enumerate()
    {
        let [a, b] = disc.topology.edge_nodes(e);
        writeln!(s, "{},{},{},{},{:.16e}", l + 1, e + 1, a + 1, b + 1, v).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use phfem::mesh::Mesh;

    #[test]
    fn square_edge_table() {
        let d = Discretization::new(Mesh::unit_square()).unwrap();
        let t = edge_table(&d);
        let rows: Vec<&str> = t.lines().collect();
        assert_eq!(rows.len(), 9);
        assert!(rows[5].starts_with("5,5,1,1,2,"));
        assert!(rows[5].ends_with(",interior"));
        assert!(rows[1].ends_with(",dirichlet"));
    }
}
