//! Discretization errors, exact multipliers and convergence orders.

use crate::assembly::{barycentric_gradients, ProblemCoefficients};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::sparse::SparseMatrix;
use crate::topology::{EdgeClassification, EdgeTopology};

use super::quadrature::TriangleQuadrature;

/// Nodal interpolation: three values per element.
pub fn interpolate(mesh: &Mesh, u: impl Fn(Point) -> f64) -> Vec<f64> {
    (0..mesh.num_elements())
        .flat_map(|m| mesh.vertices(m).map(&u))
        .collect()
}

/// Exact multiplier `(A grad u + u p) . nu` at each retained edge's midpoint,
/// with `nu` the outward normal of `T+`.
pub fn exact_multiplier(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    coeffs: &ProblemCoefficients,
    u: impl Fn(Point) -> f64,
    grad_u: impl Fn(Point) -> [f64; 2],
) -> Vec<f64> {
    let p = coeffs.p();
    classification
        .retained_edges()
        .iter()
        .map(|&e| {
            let x = topology.edge_midpoint(mesh, e);
            let nu = topology.edge_normal(mesh, e);
            let ag = coeffs.apply_a(grad_u(x));
            let ux = u(x);
            (ag[0] + ux * p[0]) * nu[0] + (ag[1] + ux * p[1]) * nu[1]
        })
        .collect()
}

fn check_len(mesh: &Mesh, u_h: &[f64]) -> Result<()> {
    if u_h.len() != 3 * mesh.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "{} primal values for {} elements",
            u_h.len(),
            mesh.num_elements()
        )));
    }
    Ok(())
}

/// Broken H¹ seminorm of `u - u_h`.
pub fn error_h1(mesh: &Mesh, u_h: &[f64], grad_u: impl Fn(Point) -> [f64; 2]) -> Result<f64> {
    check_len(mesh, u_h)?;
    let q = TriangleQuadrature::degree5();
    let mut sum = 0.0;
    for m in 0..mesh.num_elements() {
        let v = mesh.vertices(m);
        let (grad, area) = barycentric_gradients(v).map_err(|_| Error::NegativeArea {
            element: m,
            area: mesh.signed_area(m),
        })?;
        let gh = (0..3).fold([0.0, 0.0], |acc, i| {
            [acc[0] + u_h[3 * m + i] * grad[i][0], acc[1] + u_h[3 * m + i] * grad[i][1]]
        });
        sum += q.integrate(v, area, |x| {
            let g = grad_u(x);
            (g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2)
        });
    }
    Ok(sum.sqrt())
}

/// L² norm of `u - u_h`.
pub fn error_l2(mesh: &Mesh, u_h: &[f64], u: impl Fn(Point) -> f64) -> Result<f64> {
    check_len(mesh, u_h)?;
    let q = TriangleQuadrature::degree5();
    let mut sum = 0.0;
    for m in 0..mesh.num_elements() {
        let v = mesh.vertices(m);
        let area = mesh.signed_area(m);
        let vals = &u_h[3 * m..3 * m + 3];
        sum += q
            .on(v, area)
            .map(|(x, l, w)| {
                let uh = l[0] * vals[0] + l[1] * vals[1] + l[2] * vals[2];
                w * (u(x) - uh).powi(2)
            })
            .sum::<f64>();
    }
    Ok(sum.sqrt())
}

/// Discrete dual-norm surrogate of the multiplier error:
/// `max_i |((K - K_h)ᵀ C)_i| / sqrt(B_ii)` over degrees of freedom with `B_ii > 0`.
pub fn error_multiplier(k_exact: &[f64], k_h: &[f64], c: &SparseMatrix, b: &SparseMatrix) -> Result<f64> {
    if k_exact.len() != k_h.len() || k_h.len() != c.nrows() || c.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch("multiplier error inputs disagree in size".into()));
    }
    let diff: Vec<f64> = k_exact.iter().zip(k_h).map(|(a, b)| a - b).collect();
    let r = c.mul_vec_transposed(&diff);
    let diag = b.diagonal();
    let mut best: Option<f64> = None;
    for (ri, &bii) in r.iter().zip(&diag) {
        if bii > 0.0 {
            let v = ri.abs() / bii.sqrt();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("stiffness matrix has no positive diagonal entry".into()))
}

/// `log(e_j / e_(j+1)) / log(h_j / h_(j+1))` for consecutive levels.
pub fn convergence_orders(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() {
        return Err(Error::DimensionMismatch(format!("{} errors but {} mesh sizes", errors.len(), hs.len())));
    }
    if errors.len() < 2 {
        return Err(Error::InvalidArgument("need at least two levels".into()));
    }
    if let Some(bad) = errors.iter().chain(hs).find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!("orders need positive values, got {bad}")));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Value of the discrete solution at the midpoint of each edge, seen from `T+`.
pub fn midpoint_traces(topology: &EdgeTopology, u_h: &[f64]) -> Vec<f64> {
    (0..topology.num_edges())
        .map(|e| {
            let m = topology.t_plus(e);
            let k = topology.local_in_tplus(e);
            (0..3).filter(|&i| i != k).map(|i| 0.5 * u_h[3 * m + i]).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Discretization;

    #[test]
    fn orders() {
        let o = convergence_orders(&[0.0801, 0.0397], &[0.5, 0.25]).unwrap();
        assert!((o[0] - 1.0126).abs() < 1e-4, "{o:?}");
        assert_eq!(convergence_orders(&[4.0, 1.0], &[0.5, 0.25]).unwrap(), vec![2.0]);
        assert!(convergence_orders(&[0.0, 1.0], &[0.5, 0.25]).is_err());
        assert!(convergence_orders(&[1.0], &[0.5]).is_err());
    }

    #[test]
    fn interpolant_of_linear_has_zero_error() {
        let d = Discretization::new(crate::refine::refine_uniform(&Mesh::unit_square(), 2).unwrap()).unwrap();
        let u = |x: Point| 1.0 + 2.0 * x[0] - 3.0 * x[1];
        let uh = interpolate(&d.mesh, u);
        assert!(error_h1(&d.mesh, &uh, |_| [2.0, -3.0]).unwrap() < 1e-13);
        assert!(error_l2(&d.mesh, &uh, u).unwrap() < 1e-14);
    }

    #[test]
    fn exact_multiplier_on_bottom_edge() {
        let d = Discretization::new(Mesh::unit_square()).unwrap();
        let c = ProblemCoefficients::new([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], 1.0).unwrap();
        let u = |x: Point| (x[0] - x[0] * x[0]) * (x[1] - x[1] * x[1]);
        let g = |x: Point| [(1.0 - 2.0 * x[0]) * (x[1] - x[1] * x[1]), (x[0] - x[0] * x[0]) * (1.0 - 2.0 * x[1])];
        let k = exact_multiplier(&d.mesh, &d.topology, &d.classification, &c, u, g);
        // retained edge 0 is (1,2) on y = 0, midpoint x = 0.5
        assert!((k[0] + 0.25).abs() < 1e-15);
        let zero = exact_multiplier(&d.mesh, &d.topology, &d.classification, &c, |_| 0.0, |_| [0.0; 2]);
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn multiplier_error_of_identical_vectors() {
        let c = SparseMatrix::identity(2);
        assert_eq!(error_multiplier(&[1.0, 2.0], &[1.0, 2.0], &c, &c).unwrap(), 0.0);
        let z = SparseMatrix::zeros(2, 2);
        assert!(error_multiplier(&[1.0, 2.0], &[1.0, 2.0], &c, &z).is_err());
    }
}
