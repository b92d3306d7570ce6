//! Global edge enumeration and edge/element incidence.
//!
//! Edges are the unordered node pairs `{i, j}` with `i < j`, numbered in
//! ascending order of `j` and then `i`. Each edge remembers the element
//! with the smaller index containing it (`T+`) and, for interior edges, the
//! other one (`T-`). The stored node pair follows the counter-clockwise
//! traversal of `T+`.
//!
//! Local edge `k` of an element is the edge opposite its vertex `k`. All
//! indices here are 0-based, so the directed edges `v0->v1`, `v1->v2`,
//! `v2->v0` carry local indices 2, 0, 1.

use crate::error::{Error, Result};
use crate::mesh::{distance, midpoint, Mesh, Point};

/// Local index of the edge running from local vertex `i` to `i + 1`.
pub const LOCAL_EDGE_OF_SIDE: [usize; 3] = [2, 0, 1];

/// Local vertex endpoints of local edge `k`, in counter-clockwise order.
pub const LOCAL_EDGE_VERTICES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeTopology {
    edge_nodes: Vec<[usize; 2]>,
    t_plus: Vec<usize>,
    t_minus: Vec<Option<usize>>,
    local_plus: Vec<u8>,
    local_minus: Vec<Option<u8>>,
    element_edges: Vec<[usize; 3]>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    // edges sharing the larger node `j` are contiguous and sorted by `i`
    by_high_node: Vec<usize>,
}

impl EdgeTopology {
    pub fn build(mesh: &Mesh) -> Result<Self> {
        build_topology(mesh)
    }

    pub fn num_edges(&self) -> usize {
        self.edge_nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.element_edges.len()
    }

    /// Node pair of edge `e`, directed counter-clockwise in `T+`.
    #[inline]
    pub fn edge_nodes(&self, e: usize) -> [usize; 2] {
        self.edge_nodes[e]
    }

    pub fn all_edge_nodes(&self) -> &[[usize; 2]] {
        &self.edge_nodes
    }

    #[inline]
    pub fn t_plus(&self, e: usize) -> usize {
        self.t_plus[e]
    }

    #[inline]
    pub fn t_minus(&self, e: usize) -> Option<usize> {
        self.t_minus[e]
    }

    /// Local index of edge `e` inside `T+`.
    #[inline]
    pub fn local_in_tplus(&self, e: usize) -> usize {
        self.local_plus[e] as usize
    }

    /// Local index of edge `e` inside `T-`; `None` for boundary edges.
    #[inline]
    pub fn local_in_tminus(&self, e: usize) -> Option<usize> {
        self.local_minus[e].map(usize::from)
    }

    /// Global edge ids of element `m`, indexed by local edge.
    #[inline]
    pub fn element_edges(&self, m: usize) -> [usize; 3] {
        self.element_edges[m]
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary
    }

    #[inline]
    pub fn is_interior(&self, e: usize) -> bool {
        self.t_minus[e].is_some()
    }

    /// Edge joining nodes `k` and `l`, in either order.
    pub fn node_pair_to_edge(&self, k: usize, l: usize) -> Option<usize> {
        let (lo, hi) = if k < l { (k, l) } else { (l, k) };
        if hi + 1 >= self.by_high_node.len() {
            return None;
        }
        let range = self.by_high_node[hi]..self.by_high_node[hi + 1];
        let slice = &self.edge_nodes[range.clone()];
        slice
            .binary_search_by_key(&lo, |n| n[0].min(n[1]))
            .ok()
            .map(|pos| range.start + pos)
    }

    /// Element whose counter-clockwise boundary contains the directed edge `k -> l`.
    pub fn directed_pair_to_element(&self, k: usize, l: usize) -> Option<usize> {
        let e = self.node_pair_to_edge(k, l)?;
        if self.edge_nodes[e] == [k, l] {
            Some(self.t_plus[e])
        } else {
            self.t_minus[e]
        }
    }

    /// Lengths of all edges.
    pub fn edge_lengths(&self, mesh: &Mesh) -> Vec<f64> {
        self.edge_nodes
            .iter()
            .map(|&[a, b]| distance(mesh.node(a), mesh.node(b)))
            .collect()
    }

    /// Unit normal of edge `e` pointing out of `T+`.
    pub fn edge_normal(&self, mesh: &Mesh, e: usize) -> [f64; 2] {
        let [a, b] = self.edge_nodes[e];
        normal(mesh.node(a), mesh.node(b))
    }

    pub fn edge_midpoint(&self, mesh: &Mesh, e: usize) -> Point {
        let [a, b] = self.edge_nodes[e];
        midpoint(mesh.node(a), mesh.node(b))
    }
}

/// Unit normal to the directed segment `a -> b`, on its right-hand side.
#[inline]
pub fn normal(a: Point, b: Point) -> [f64; 2] {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    [dy / len, -dx / len]
}

/// Builds the edge topology of a mesh.
///
/// Fails when an edge is shared by more than two elements or when two
/// elements traverse the same edge in the same direction.
pub fn build_topology(mesh: &Mesh) -> Result<EdgeTopology> {
    let ne = mesh.num_elements();
    let nn = mesh.num_nodes();
    // (high node, low node, element, local index)
    let mut sides: Vec<(usize, usize, usize, u8)> = Vec::with_capacity(3 * ne);
    for (m, v) in mesh.elements().iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (v[i], v[(i + 1) % 3]);
            sides.push((a.max(b), a.min(b), m, LOCAL_EDGE_OF_SIDE[i] as u8));
        }
    }
    sides.sort_unstable();

    let cap = sides.len() / 2 + 1;
    let mut topo = EdgeTopology {
        edge_nodes: Vec::with_capacity(cap),
        t_plus: Vec::with_capacity(cap),
        t_minus: Vec::with_capacity(cap),
        local_plus: Vec::with_capacity(cap),
        local_minus: Vec::with_capacity(cap),
        element_edges: vec![[usize::MAX; 3]; ne],
        interior: Vec::new(),
        boundary: Vec::new(),
        by_high_node: vec![0; nn + 1],
    };
    let directed = |m: usize, local: u8| -> [usize; 2] {
        let [i, j] = LOCAL_EDGE_VERTICES[local as usize];
        let v = mesh.elements()[m];
        [v[i], v[j]]
    };

    let mut s = 0;
    while s < sides.len() {
        let (hi, lo, m, local) = sides[s];
        let mut t = s + 1;
        while t < sides.len() && sides[t].0 == hi && sides[t].1 == lo {
            t += 1;
        }
        let id = topo.edge_nodes.len();
        match t - s {
            1 => {
                topo.t_minus.push(None);
                topo.local_minus.push(None);
                topo.boundary.push(id);
            }
            2 => {
                let (_, _, m2, local2) = sides[s + 1];
                if directed(m, local) == directed(m2, local2) {
                    let [a, b] = directed(m, local);
                    return Err(Error::DuplicateDirectedEdge(a + 1, b + 1));
                }
                topo.t_minus.push(Some(m2));
                topo.local_minus.push(Some(local2));
                topo.element_edges[m2][local2 as usize] = id;
                topo.interior.push(id);
            }
            _ => return Err(Error::NonManifoldEdge(lo + 1, hi + 1)),
        }
        topo.edge_nodes.push(directed(m, local));
        topo.t_plus.push(m);
        topo.local_plus.push(local);
        topo.element_edges[m][local as usize] = id;
        topo.by_high_node[hi + 1] += 1;
        s = t;
    }
    for i in 0..nn {
        topo.by_high_node[i + 1] += topo.by_high_node[i];
    }
    Ok(topo)
}

/// Edge lengths, indexed by edge id.
pub fn edge_lengths(mesh: &Mesh, topology: &EdgeTopology) -> Vec<f64> {
    topology.edge_lengths(mesh)
}

/// Outward unit normal of `T+` on edge `e`.
pub fn edge_normal(mesh: &Mesh, topology: &EdgeTopology, e: usize) -> [f64; 2] {
    topology.edge_normal(mesh, e)
}

/// Boundary-condition kind of each edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Dirichlet,
    Neumann,
    /// A boundary edge listed in neither boundary file. It is treated like
    /// a Dirichlet edge with zero data.
    Unlisted,
}

/// Boundary edges resolved to edge ids, plus the multiplier numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeClassification {
    dirichlet: Vec<usize>,
    neumann: Vec<usize>,
    retained: Vec<usize>,
    position: Vec<Option<usize>>,
    kind: Vec<EdgeKind>,
}

impl EdgeClassification {
    /// Dirichlet edge ids, in the order of the mesh's Dirichlet list.
    pub fn dirichlet_edge_ids(&self) -> &[usize] {
        &self.dirichlet
    }

    /// Neumann edge ids, in the order of the mesh's Neumann list.
    pub fn neumann_edge_ids(&self) -> &[usize] {
        &self.neumann
    }

    /// All non-Neumann edge ids, ascending. Position in this list is the
    /// multiplier index.
    pub fn retained_edges(&self) -> &[usize] {
        &self.retained
    }

    /// Number of multipliers `L`.
    pub fn num_multipliers(&self) -> usize {
        self.retained.len()
    }

    /// Multiplier index of edge `e`, or `None` for Neumann edges.
    #[inline]
    pub fn retained_position(&self, e: usize) -> Option<usize> {
        self.position[e]
    }

    #[inline]
    pub fn kind(&self, e: usize) -> EdgeKind {
        self.kind[e]
    }
}

/// Resolves the mesh's boundary lists against the topology.
pub fn classify_edges(topology: &EdgeTopology, mesh: &Mesh) -> Result<EdgeClassification> {
    let n = topology.num_edges();
    let mut kind: Vec<EdgeKind> = (0..n)
        .map(|e| {
            if topology.is_interior(e) {
                EdgeKind::Interior
            } else {
                EdgeKind::Unlisted
            }
        })
        .collect();
    let mut resolve = |list: &[[usize; 2]], as_kind: EdgeKind| -> Result<Vec<usize>> {
        list.iter()
            .map(|&[a, b]| {
                let e = topology
                    .node_pair_to_edge(a, b)
                    .ok_or(Error::UnknownBoundaryEdge(a + 1, b + 1))?;
                match kind[e] {
                    EdgeKind::Interior => Err(Error::InteriorBoundaryEdge(a + 1, b + 1)),
                    EdgeKind::Unlisted => {
                        kind[e] = as_kind;
                        Ok(e)
                    }
                    _ => Err(Error::InvalidMesh(format!(
                        "boundary edge ({}, {}) is listed more than once",
                        a + 1,
                        b + 1
                    ))),
                }
            })
            .collect()
    };
    let dirichlet = resolve(mesh.dirichlet(), EdgeKind::Dirichlet)?;
    let neumann = resolve(mesh.neumann(), EdgeKind::Neumann)?;

    let mut retained = Vec::with_capacity(n - neumann.len());
    let mut position = vec![None; n];
    for e in 0..n {
        if kind[e] != EdgeKind::Neumann {
            position[e] = Some(retained.len());
            retained.push(e);
        }
    }
    Ok(EdgeClassification {
        dirichlet,
        neumann,
        retained,
        position,
        kind,
    })
}

/// A mesh together with its edge topology and boundary classification.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub topology: EdgeTopology,
    pub classification: EdgeClassification,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let topology = build_topology(&mesh)?;
        let classification = classify_edges(&topology, &mesh)?;
        Ok(Self {
            mesh,
            topology,
            classification,
        })
    }

    /// Number of primal unknowns `N`.
    pub fn num_dofs(&self) -> usize {
        3 * self.mesh.num_elements()
    }

    /// Number of multipliers `L`.
    pub fn num_multipliers(&self) -> usize {
        self.classification.num_multipliers()
    }
}
