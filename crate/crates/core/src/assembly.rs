//! Local element matrices and global operator/load assembly.
//!
//! Element `m` owns the primal degrees of freedom `3m`, `3m + 1`, `3m + 2`,
//! one per vertex, with the linear nodal basis `φ_i = λ_i`. Multiplier `l`
//! lives on the `l`-th retained (non-Neumann) edge.

use crate::error::{Error, Result};
use crate::mesh::{distance, midpoint, Mesh, Point};
use crate::sparse::{SparseMatrix, TripletBuffer};
use crate::topology::{EdgeClassification, EdgeKind, EdgeTopology, LOCAL_EDGE_VERTICES};

pub type Mat3 = [[f64; 3]; 3];

/// Global degree of freedom of local vertex `i` in element `m`.
#[inline]
pub fn dof(m: usize, i: usize) -> usize {
    3 * m + i
}

/// Constant coefficients of `-div(A grad u) + p . grad u + delta u = f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemCoefficients {
    a: [[f64; 2]; 2],
    p: [f64; 2],
    delta: f64,
}

impl ProblemCoefficients {
    /// Checks that `a` is symmetric positive definite and all entries are finite.
    pub fn new(a: [[f64; 2]; 2], p: [f64; 2], delta: f64) -> Result<Self> {
        let finite = a.iter().flatten().chain(&p).chain([&delta]).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidCoefficients("non-finite entry".into()));
        }
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if (a[0][1] - a[1][0]).abs() > 1e-14 * scale {
            return Err(Error::InvalidCoefficients(format!("A is not symmetric: {a:?}")));
        }
        if !(a[0][0] > 0.0 && a[0][0] * a[1][1] - a[0][1] * a[1][0] > 0.0) {
            return Err(Error::InvalidCoefficients(format!("A is not positive definite: {a:?}")));
        }
        Ok(Self { a, p, delta })
    }

    /// `A = I`, `p = 0`, `delta = 0`.
    pub fn laplace() -> Self {
        Self {
            a: [[1.0, 0.0], [0.0, 1.0]],
            p: [0.0, 0.0],
            delta: 0.0,
        }
    }

    pub fn a(&self) -> [[f64; 2]; 2] {
        self.a
    }

    pub fn p(&self) -> [f64; 2] {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn apply_a(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.a[0][0] * g[0] + self.a[0][1] * g[1],
            self.a[1][0] * g[0] + self.a[1][1] * g[1],
        ]
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Gradients of the barycentric coordinates and the area of a triangle.
pub fn barycentric_gradients(v: [Point; 3]) -> Result<([[f64; 2]; 3], f64)> {
    let [p1, p2, p3] = v;
    let area = crate::mesh::signed_area(p1, p2, p3);
    if !(area > 0.0) {
        return Err(Error::NegativeArea { element: 0, area });
    }
    let s = 1.0 / (2.0 * area);
    Ok((
        [
            [(p2[1] - p3[1]) * s, (p3[0] - p2[0]) * s],
            [(p3[1] - p1[1]) * s, (p1[0] - p3[0]) * s],
            [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
        ],
        area,
    ))
}

/// Element stiffness, convection and mass matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMatrices {
    /// `b[i][j] = ∫ A∇φ_i · ∇φ_j`
    pub b: Mat3,
    /// `d[i][j] = ∫ (p · ∇φ_i) φ_j`; rows are constant.
    pub d: Mat3,
    /// `m[i][j] = δ ∫ φ_i φ_j`
    pub m: Mat3,
}

pub fn local_element_matrices(vertices: [Point; 3], coeffs: &ProblemCoefficients) -> Result<LocalMatrices> {
    let (grad, area) = barycentric_gradients(vertices)?;
    let mut out = LocalMatrices {
        b: [[0.0; 3]; 3],
        d: [[0.0; 3]; 3],
        m: [[0.0; 3]; 3],
    };
    let mass = coeffs.delta * area / 12.0;
    for i in 0..3 {
        let ag = coeffs.apply_a(grad[i]);
        let conv = area / 3.0 * dot(coeffs.p, grad[i]);
        for j in 0..3 {
            out.b[i][j] = area * dot(ag, grad[j]);
            out.d[i][j] = conv;
            out.m[i][j] = if i == j { 2.0 * mass } else { mass };
        }
    }
    Ok(out)
}

/// `sign * length * R_k` where `R_k` holds the values at the midpoint of
/// local edge `k` of the three nodal basis functions: 1/2 on the edge's
/// endpoints and 0 on the opposite vertex.
pub fn local_constraint_row(length: f64, sign: f64, local_index: usize) -> Result<[f64; 3]> {
    if local_index > 2 {
        return Err(Error::InvalidArgument(format!("local edge index {local_index} is not 0, 1 or 2")));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let mut row = [0.5 * sign * length; 3];
    row[local_index] = 0.0;
    Ok(row)
}

/// Global matrices of the discretization.
#[derive(Clone, Debug)]
pub struct GlobalOperators {
    /// Stiffness, `N x N`.
    pub b: SparseMatrix,
    /// Convection, `N x N`; row is the test function, column the trial function.
    pub d: SparseMatrix,
    /// Mass scaled by `δ`, `N x N`.
    pub m: SparseMatrix,
    /// Unweighted mass, `N x N`.
    pub mass: SparseMatrix,
    /// Constraint, `L x N`.
    pub c: SparseMatrix,
}

impl GlobalOperators {
    pub fn num_dofs(&self) -> usize {
        self.b.nrows()
    }

    pub fn num_multipliers(&self) -> usize {
        self.c.nrows()
    }

    /// `B + D + M`.
    pub fn primal_operator(&self) -> SparseMatrix {
        SparseMatrix::linear_combination(&[(1.0, &self.b), (1.0, &self.d), (1.0, &self.m)])
            .expect("operators share a shape")
    }
}

/// Element-block operators `B`, `D`, `δ`-weighted mass and unweighted mass.
#[derive(Clone, Debug)]
pub struct ElementOperators {
    pub b: SparseMatrix,
    pub d: SparseMatrix,
    pub m: SparseMatrix,
    pub mass: SparseMatrix,
}

pub fn assemble_element_operators(mesh: &Mesh, coeffs: &ProblemCoefficients) -> Result<ElementOperators> {
    let ne = mesh.num_elements();
    let (mut b, mut d, mut m, mut mass) =
        (Vec::with_capacity(ne), Vec::with_capacity(ne), Vec::with_capacity(ne), Vec::with_capacity(ne));
    for t in 0..ne {
        let local = local_element_matrices(mesh.vertices(t), coeffs).map_err(|e| match e {
            Error::NegativeArea { area, .. } => Error::NegativeArea { element: t, area },
            e => e,
        })?;
        let area = mesh.signed_area(t);
        b.push(local.b);
        // test function in the row
        d.push(std::array::from_fn(|i| std::array::from_fn(|j| local.d[j][i])));
        m.push(local.m);
        mass.push(std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { area / 6.0 } else { area / 12.0 })
        }));
    }
    Ok(ElementOperators {
        b: SparseMatrix::block_diagonal(&b),
        d: SparseMatrix::block_diagonal(&d),
        m: SparseMatrix::block_diagonal(&m),
        mass: SparseMatrix::block_diagonal(&mass),
    })
}

/// Assembles the `L x N` constraint matrix.
///
/// Row `l` belongs to retained edge `E`. It holds `+|E| R` at the degrees of
/// freedom of `T+` and, for interior edges, `-|E| R` at those of `T-`.
pub fn assemble_constraints(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
) -> Result<SparseMatrix> {
    check_sizes(mesh, topology, classification)?;
    let retained = classification.retained_edges();
    let n = 3 * mesh.num_elements();
    let mut c = TripletBuffer::with_capacity(retained.len(), n, 6 * retained.len());
    for (l, &e) in retained.iter().enumerate() {
        let [a, b] = topology.edge_nodes(e);
        let len = distance(mesh.node(a), mesh.node(b));
        let mut sides = vec![(topology.t_plus(e), topology.local_in_tplus(e), 1.0)];
        if let (Some(m), Some(k)) = (topology.t_minus(e), topology.local_in_tminus(e)) {
            sides.push((m, k, -1.0));
        }
        for (m, k, sign) in sides {
            let row = local_constraint_row(len, sign, k)?;
            for (i, &v) in row.iter().enumerate() {
                if i != k {
                    c.push(l, dof(m, i), v);
                }
            }
        }
    }
    c.build()
}

pub fn assemble_operators(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    coeffs: &ProblemCoefficients,
) -> Result<GlobalOperators> {
    let ElementOperators { b, d, m, mass } = assemble_element_operators(mesh, coeffs)?;
    let c = assemble_constraints(mesh, topology, classification)?;
    Ok(GlobalOperators { b, d, m, mass, c })
}

fn check_sizes(mesh: &Mesh, topology: &EdgeTopology, classification: &EdgeClassification) -> Result<()> {
    if topology.num_elements() != mesh.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "topology has {} elements, mesh has {}",
            topology.num_elements(),
            mesh.num_elements()
        )));
    }
    let retained = classification.retained_edges();
    if retained.last().is_some_and(|&e| e >= topology.num_edges()) {
        return Err(Error::DimensionMismatch("classification does not match topology".into()));
    }
    Ok(())
}

fn finite(value: f64, what: &'static str, element: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteData { what, element, value })
    }
}

/// Volume load by edge-midpoint quadrature:
/// `b_j = |T|/3 Σ_k f(m_k) φ_j(m_k)` over the three edge midpoints `m_k`.
pub fn assemble_load(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; 3 * mesh.num_elements()];
    for t in 0..mesh.num_elements() {
        let v = mesh.vertices(t);
        let w = mesh.signed_area(t) / 6.0;
        let fm: [f64; 3] = std::array::from_fn(|k| {
            let [i, j] = LOCAL_EDGE_VERTICES[k];
            f(midpoint(v[i], v[j]))
        });
        for &x in &fm {
            finite(x, "load", t)?;
        }
        out[dof(t, 0)] += w * (fm[1] + fm[2]);
        out[dof(t, 1)] += w * (fm[0] + fm[2]);
        out[dof(t, 2)] += w * (fm[0] + fm[1]);
    }
    Ok(out)
}

/// Neumann load `|E| g(m_E, ν) R_e` on the `T+` element of each Neumann
/// edge, with `ν` the outward unit normal.
pub fn assemble_neumann(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    g: impl Fn(Point, [f64; 2]) -> f64,
) -> Result<Vec<f64>> {
    check_sizes(mesh, topology, classification)?;
    let mut out = vec![0.0; 3 * mesh.num_elements()];
    for &e in classification.neumann_edge_ids() {
        let [a, b] = topology.edge_nodes(e);
        let (pa, pb) = (mesh.node(a), mesh.node(b));
        let m = topology.t_plus(e);
        let value = finite(g(midpoint(pa, pb), topology.edge_normal(mesh, e)), "Neumann flux", m)?;
        let row = local_constraint_row(distance(pa, pb) * value, 1.0, topology.local_in_tplus(e))
            .expect("local index is valid");
        for (i, r) in row.into_iter().enumerate() {
            out[dof(m, i)] += r;
        }
    }
    Ok(out)
}

/// Dirichlet vector of length `L`: `-|E| u_D(m_E)` at the multiplier index
/// of each Dirichlet edge and zero elsewhere.
pub fn assemble_dirichlet(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    u_d: impl Fn(Point) -> f64,
) -> Result<Vec<f64>> {
    check_sizes(mesh, topology, classification)?;
    let mut out = vec![0.0; classification.num_multipliers()];
    for (l, &e) in classification.retained_edges().iter().enumerate() {
        if classification.kind(e) != EdgeKind::Dirichlet {
            continue;
        }
        let [a, b] = topology.edge_nodes(e);
        let (pa, pb) = (mesh.node(a), mesh.node(b));
        let value = finite(u_d(midpoint(pa, pb)), "Dirichlet data", topology.t_plus(e))?;
        out[l] = -distance(pa, pb) * value;
    }
    Ok(out)
}
