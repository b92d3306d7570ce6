use phfem::analysis::{cr_reference_solve, error_h1, error_l2, exact_multiplier, interpolate, midpoint_traces};
use phfem::assembly::{assemble_operators, ProblemCoefficients};
use phfem::elliptic::solve_elliptic_detailed;
use phfem::mesh::{load_mesh, Mesh, Point};
use phfem::parabolic::{solve_parabolic, ParabolicOptions, TimeGrid, TransientData};
use phfem::refine::{red_refine, refine_uniform};
use phfem::sparse::{SparseMatrix, TripletBuffer};
use phfem::topology::{build_topology, Discretization};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Refined unit square with interior nodes moved by up to a tenth of the
/// smallest edge length.
fn perturbed_square(level: usize, seed: u64) -> Mesh {
    let base = refine_uniform(&Mesh::unit_square(), level).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 0.1 * 0.5f64.powi(level as i32 + 1);
    let mut coords = base.coordinates().to_vec();
    for p in coords.iter_mut() {
        if p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0 {
            p[0] += rng.random_range(-amp..amp);
            p[1] += rng.random_range(-amp..amp);
        }
    }
    Mesh::new(coords, base.elements().to_vec(), base.dirichlet().to_vec(), base.neumann().to_vec()).unwrap()
}

/// Same mesh with elements shuffled and vertices rotated within each element.
/// Returns the mesh and, for every new element, its old index and rotation.
fn reorder(mesh: &Mesh, seed: u64) -> (Mesh, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map: Vec<(usize, usize)> = (0..mesh.num_elements()).map(|m| (m, rng.random_range(0..3))).collect();
    map.shuffle(&mut rng);
    let elements = map
        .iter()
        .map(|&(m, r)| {
            let e = mesh.elements()[m];
            [e[r], e[(r + 1) % 3], e[(r + 2) % 3]]
        })
        .collect();
    let out = Mesh::new(
        mesh.coordinates().to_vec(),
        elements,
        mesh.dirichlet().to_vec(),
        mesh.neumann().to_vec(),
    )
    .unwrap();
    (out, map)
}

fn spd(rng: &mut ChaCha8Rng) -> [[f64; 2]; 2] {
    let (a, b, c) = (rng.random_range(0.5..2.0), rng.random_range(-0.5..0.5), rng.random_range(0.5..2.0));
    [[a * a, a * b], [a * b, b * b + c * c]]
}

fn symmetric(m: &SparseMatrix) -> bool {
    m.iter().all(|(i, j, v)| (v - m.get(j, i)).abs() <= 1e-14 * v.abs().max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mesh_files_round_trip(level in 0usize..3, seed in any::<u64>()) {
        let mesh = perturbed_square(level, seed);
        let [c, e, d, n] = mesh.to_strings();
        prop_assert_eq!(load_mesh(&c, &e, &d, &n).unwrap(), mesh);
    }

    #[test]
    fn mesh_size_ignores_ordering(level in 0usize..3, seed in any::<u64>()) {
        let mesh = perturbed_square(level, seed);
        let (other, _) = reorder(&mesh, seed ^ 1);
        prop_assert_eq!(mesh.mesh_size().unwrap(), other.mesh_size().unwrap());
    }

    #[test]
    fn topology_invariants(level in 0usize..3, seed in any::<u64>()) {
        let (mesh, _) = reorder(&perturbed_square(level, seed), seed);
        let topo = build_topology(&mesh).unwrap();
        let interior = topo.interior_edges().len();
        let boundary = topo.boundary_edges().len();
        prop_assert_eq!(3 * mesh.num_elements(), 2 * interior + boundary);
        prop_assert_eq!(interior + boundary, topo.num_edges());
        for e in 0..topo.num_edges() {
            let [a, b] = topo.edge_nodes(e);
            prop_assert_eq!(topo.node_pair_to_edge(a, b), Some(e));
            prop_assert_eq!(topo.node_pair_to_edge(b, a), Some(e));
            prop_assert_eq!(topo.directed_pair_to_element(a, b), Some(topo.t_plus(e)));
            prop_assert_eq!(topo.directed_pair_to_element(b, a), topo.t_minus(e));
            prop_assert!(topo.element_edges(topo.t_plus(e)).contains(&e));
            if let Some(m) = topo.t_minus(e) {
                prop_assert!(m > topo.t_plus(e));
            }
        }
    }

    #[test]
    fn refinement_preserves_area(level in 0usize..3, seed in any::<u64>()) {
        let (mesh, _) = reorder(&perturbed_square(level, seed), seed);
        let topo = build_topology(&mesh).unwrap();
        let fine = red_refine(&mesh, &topo);
        prop_assert_eq!(fine.num_elements(), 4 * mesh.num_elements());
        prop_assert_eq!(fine.num_nodes(), mesh.num_nodes() + topo.num_edges());
        for m in 0..mesh.num_elements() {
            let parent = mesh.signed_area(m);
            for c in 4 * m..4 * m + 4 {
                let area = fine.signed_area(c);
                prop_assert!(area > 0.0);
                prop_assert!((area - parent / 4.0).abs() <= 1e-14);
            }
        }
        prop_assert!((fine.total_area() - 1.0).abs() <= 1e-12);
        prop_assert!(fine.validate().is_empty());
    }

    #[test]
    fn triplet_order_does_not_matter(
        entries in prop::collection::vec((0usize..6, 0usize..5, -100i32..100), 0..60),
        seed in any::<u64>(),
    ) {
        let build = |list: &[(usize, usize, i32)]| {
            let mut buf = TripletBuffer::new(6, 5);
            for &(i, j, v) in list {
                buf.push(i, j, v as f64);
            }
            buf.build().unwrap()
        };
        let mut shuffled = entries.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = (build(&entries), build(&shuffled));
        prop_assert_eq!(&a, &b);
        let mut dense = [[0.0; 5]; 6];
        for &(i, j, v) in &entries {
            dense[i][j] += v as f64;
        }
        for i in 0..6 {
            for j in 0..5 {
                prop_assert_eq!(a.get(i, j), dense[i][j]);
            }
        }
    }

    #[test]
    fn operator_structure(level in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Discretization::new(perturbed_square(level, seed)).unwrap();
        let p = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let coeffs = ProblemCoefficients::new(spd(&mut rng), p, rng.random_range(0.1..3.0)).unwrap();
        let ops = assemble_operators(&d.mesh, &d.topology, &d.classification, &coeffs).unwrap();
        prop_assert!(symmetric(&ops.b));
        prop_assert!(symmetric(&ops.m));
        let ones = vec![1.0; ops.num_dofs()];
        prop_assert!(ops.b.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
        let x: Vec<f64> = (0..ops.num_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mx = ops.m.mul_vec(&x);
        prop_assert!(x.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>() > 0.0);

        // constants have no jump across interior edges
        let jumps = ops.c.mul_vec(&ones);
        for (l, &e) in d.classification.retained_edges().iter().enumerate() {
            let (cols, _) = ops.c.row(l);
            let len = d.topology.edge_lengths(&d.mesh)[e];
            if d.topology.is_interior(e) {
                prop_assert_eq!(cols.len(), 4);
                prop_assert!(jumps[l].abs() < 1e-14);
            } else {
                prop_assert_eq!(cols.len(), 2);
                prop_assert!((jumps[l] - len).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn errors_ignore_element_order(level in 0usize..3, seed in any::<u64>()) {
        let mesh = perturbed_square(level, seed);
        let (other, map) = reorder(&mesh, seed);
        let u = |x: Point| (3.0 * x[0]).sin() * x[1] * x[1];
        let grad = |x: Point| [3.0 * (3.0 * x[0]).cos() * x[1] * x[1], 2.0 * (3.0 * x[0]).sin() * x[1]];
        let uh = interpolate(&mesh, |x| u(x) + 0.01);
        let mut uh_other = vec![0.0; uh.len()];
        for (new, &(old, r)) in map.iter().enumerate() {
            for i in 0..3 {
                uh_other[3 * new + i] = uh[3 * old + (r + i) % 3];
            }
        }
        let (a, b) = (error_l2(&mesh, &uh, u).unwrap(), error_l2(&other, &uh_other, u).unwrap());
        prop_assert!((a - b).abs() <= 1e-13 * a);
        let (a, b) = (error_h1(&mesh, &uh, grad).unwrap(), error_h1(&other, &uh_other, grad).unwrap());
        prop_assert!((a - b).abs() <= 1e-13 * a);
    }

    #[test]
    fn exact_multiplier_follows_edge_direction(level in 0usize..3, seed in any::<u64>()) {
        let mesh = perturbed_square(level, seed);
        let (other, _) = reorder(&mesh, seed);
        let (d1, d2) = (Discretization::new(mesh).unwrap(), Discretization::new(other).unwrap());
        let coeffs = ProblemCoefficients::new([[2.0, 0.3], [0.3, 1.0]], [0.5, -1.0], 1.0).unwrap();
        let u = |x: Point| x[0] * x[0] - x[1] + 0.5;
        let g = |x: Point| [2.0 * x[0], -1.0];
        let k1 = exact_multiplier(&d1.mesh, &d1.topology, &d1.classification, &coeffs, u, g);
        let k2 = exact_multiplier(&d2.mesh, &d2.topology, &d2.classification, &coeffs, u, g);
        for (l, &e) in d1.classification.retained_edges().iter().enumerate() {
            let [a, b] = d1.topology.edge_nodes(e);
            let e2 = d2.topology.node_pair_to_edge(a, b).unwrap();
            let l2 = d2.classification.retained_position(e2).unwrap();
            let sign = if d2.topology.edge_nodes(e2) == [a, b] { 1.0 } else { -1.0 };
            prop_assert!((k1[l] - sign * k2[l2]).abs() <= 1e-14 * k1[l].abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A linear exact solution lies in the discrete space, so both the hybrid
    /// and the Crouzeix–Raviart solver reproduce it.
    #[test]
    fn linear_patch_test(level in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mesh, _) = reorder(&perturbed_square(level, seed), seed);
        let d = Discretization::new(mesh).unwrap();
        let a = spd(&mut rng);
        let delta = rng.random_range(0.1..3.0);
        let coeffs = ProblemCoefficients::new(a, [0.0, 0.0], delta).unwrap();
        let (c0, cx, cy) = (rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let u = move |x: Point| c0 + cx * x[0] + cy * x[1];
        let grad = |_: Point| [cx, cy];
        let flux = |_: Point, nu: [f64; 2]| {
            (a[0][0] * cx + a[0][1] * cy) * nu[0] + (a[1][0] * cx + a[1][1] * cy) * nu[1]
        };
        let run = solve_elliptic_detailed(&d.mesh, &d.topology, &d.classification, &coeffs, |x| delta * u(x), flux, u)
            .unwrap();
        let interp = interpolate(&d.mesh, u);
        for (a, b) in run.solution.u.iter().zip(&interp) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let kappa = exact_multiplier(&d.mesh, &d.topology, &d.classification, &coeffs, u, grad);
        for (a, b) in run.solution.lambda.iter().zip(&kappa) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let cr = cr_reference_solve(&d.mesh, &d.topology, &d.classification, &coeffs, |x| delta * u(x), flux, u).unwrap();
        for (e, v) in cr.iter().enumerate() {
            prop_assert!((v - u(d.topology.edge_midpoint(&d.mesh, e))).abs() < 1e-10);
        }
        let traces = midpoint_traces(&d.topology, &run.solution.u);
        for (a, b) in traces.iter().zip(&cr) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    /// With time-independent data the stationary solution is a fixed point
    /// of the Crank–Nicolson step.
    #[test]
    fn stationary_state_is_fixed(level in 0usize..2, seed in any::<u64>(), k in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Discretization::new(perturbed_square(level, seed)).unwrap();
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let coeffs = ProblemCoefficients::new(spd(&mut rng), p, rng.random_range(0.1..3.0)).unwrap();
        let f = |x: Point| 1.0 + x[0] * x[1];
        let g = |x: Point, nu: [f64; 2]| x[0] * nu[0] - nu[1];
        let u_d = |x: Point| x[0] - 0.5 * x[1];
        let run = solve_elliptic_detailed(&d.mesh, &d.topology, &d.classification, &coeffs, f, g, u_d).unwrap();
        let w = &run.solution;

        let load = |x: Point, _: f64| f(x);
        let flux = |x: Point, nu: [f64; 2], _: f64| g(x, nu);
        let dirichlet = |x: Point, _: f64| u_d(x);
        let zero = |_: Point| 0.0;
        let data = TransientData { load: &load, flux: &flux, dirichlet: &dirichlet, initial: &zero };
        let opts = ParabolicOptions {
            initial_values: Some(w.u.clone()),
            initial_multiplier: Some(w.lambda.clone()),
            store_trajectory: false,
        };
        let grid = TimeGrid::with_steps(k, 4).unwrap();
        let state = solve_parabolic(&d.mesh, &d.topology, &d.classification, &coeffs, &data, grid, &opts)
            .unwrap()
            .solution;
        let scale = w.u.iter().chain(&w.lambda).fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in state.stacked().iter().zip(w.stacked()) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }
}
