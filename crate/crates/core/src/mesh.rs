//! Triangle meshes with Dirichlet/Neumann boundary partitions.
//!
//! Node indices are 0-based inside the library. The plain-text mesh format
//! uses 1-based indices; the conversion happens only in [`load_mesh`] and
//! [`Mesh::to_strings`].
//!
//! A mesh directory holds four files:
//!
//! | file              | rows                          |
//! |-------------------|-------------------------------|
//! | `coordinates.dat` | `x y`                         |
//! | `elements.dat`    | `i j k` (counter-clockwise)   |
//! | `Dirichlet.dat`   | `i j`                         |
//! | `Neumann.dat`     | `i j`                         |
//!
//! Missing boundary files are read as empty lists.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

pub const COORDINATES_FILE: &str = "coordinates.dat";
pub const ELEMENTS_FILE: &str = "elements.dat";
pub const DIRICHLET_FILE: &str = "Dirichlet.dat";
pub const NEUMANN_FILE: &str = "Neumann.dat";

/// Signed area of the triangle `(a, b, c)`; positive for counter-clockwise order.
#[inline]
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

#[inline]
pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Triangulation with boundary edge lists.
///
/// Boundary pairs are stored in the counter-clockwise direction of their
/// adjacent element whenever that element exists.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    coordinates: Vec<Point>,
    elements: Vec<[usize; 3]>,
    dirichlet: Vec<[usize; 2]>,
    neumann: Vec<[usize; 2]>,
}

impl Mesh {
    /// Builds a mesh, rejecting out-of-range indices and clockwise or
    /// degenerate elements. Boundary pairs given against the element
    /// orientation are flipped. Coverage of the boundary is not enforced;
    /// see [`Mesh::validate`].
    pub fn new(
        coordinates: Vec<Point>,
        elements: Vec<[usize; 3]>,
        dirichlet: Vec<[usize; 2]>,
        neumann: Vec<[usize; 2]>,
    ) -> Result<Self> {
        let mut mesh = Self::from_parts(coordinates, elements, dirichlet, neumann);
        let n = mesh.coordinates.len();
        let indices = mesh
            .elements
            .iter()
            .flat_map(|e| e.iter())
            .chain(mesh.dirichlet.iter().flat_map(|e| e.iter()))
            .chain(mesh.neumann.iter().flat_map(|e| e.iter()));
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
        }
        for (c, p) in mesh.coordinates.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidMesh(format!("node {c} has non-finite coordinates")));
            }
        }
        for m in 0..mesh.elements.len() {
            let area = mesh.signed_area(m);
            if !(area > 0.0) {
                return Err(Error::NegativeArea { element: m, area });
            }
        }
        mesh.orient_boundary();
        Ok(mesh)
    }

    /// Assembles a mesh without any checks. Used for diagnostics of broken
    /// input; most callers want [`Mesh::new`].
    pub fn from_parts(
        coordinates: Vec<Point>,
        elements: Vec<[usize; 3]>,
        dirichlet: Vec<[usize; 2]>,
        neumann: Vec<[usize; 2]>,
    ) -> Self {
        Self {
            coordinates,
            elements,
            dirichlet,
            neumann,
        }
    }

    /// The unit square split into four triangles around its centre, with
    /// Dirichlet data on the bottom and right sides and Neumann data on the
    /// top and left sides.
    pub fn unit_square() -> Self {
        Self::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]],
            vec![[4, 0, 1], [4, 2, 0], [4, 3, 2], [4, 1, 3]],
            vec![[0, 1], [1, 3]],
            vec![[3, 2], [2, 0]],
        )
        .expect("reference mesh is valid")
    }

    fn orient_boundary(&mut self) {
        let directed: HashSet<(usize, usize)> = self
            .elements
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .collect();
        for pair in self.dirichlet.iter_mut().chain(self.neumann.iter_mut()) {
            if !directed.contains(&(pair[0], pair[1])) && directed.contains(&(pair[1], pair[0])) {
                pair.swap(0, 1);
            }
        }
    }

    pub fn coordinates(&self) -> &[Point] {
        &self.coordinates
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn dirichlet(&self) -> &[[usize; 2]] {
        &self.dirichlet
    }

    pub fn neumann(&self) -> &[[usize; 2]] {
        &self.neumann
    }

    pub fn num_nodes(&self) -> usize {
        self.coordinates.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn node(&self, i: usize) -> Point {
        self.coordinates[i]
    }

    /// Vertex coordinates of element `m`.
    #[inline]
    pub fn vertices(&self, m: usize) -> [Point; 3] {
        let [a, b, c] = self.elements[m];
        [self.coordinates[a], self.coordinates[b], self.coordinates[c]]
    }

    #[inline]
    pub fn signed_area(&self, m: usize) -> f64 {
        let [a, b, c] = self.vertices(m);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|m| self.signed_area(m)).sum()
    }

    /// Mesh parameter `h`: the largest edge length over all elements.
    pub fn mesh_size(&self) -> Result<f64> {
        if self.elements.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let h = (0..self.num_elements())
            .flat_map(|m| {
                let [a, b, c] = self.vertices(m);
                [distance(a, b), distance(b, c), distance(c, a)]
            })
            .fold(0.0, f64::max);
        Ok(h)
    }

    /// Checks every mesh invariant and lists the violations. An empty report
    /// means the mesh is fully consistent.
    pub fn validate(&self) -> MeshReport {
        validate_mesh(self)
    }

    /// Reads the four mesh files from `dir`.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str, required: bool| -> Result<String> {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(s) => Ok(s),
                Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
                Err(source) => Err(Error::Io { path, source }),
            }
        };
        load_mesh(
            &read(COORDINATES_FILE, true)?,
            &read(ELEMENTS_FILE, true)?,
            &read(DIRICHLET_FILE, false)?,
            &read(NEUMANN_FILE, false)?,
        )
    }

    /// Writes the four mesh files into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let files = self.to_strings();
        for (name, body) in [COORDINATES_FILE, ELEMENTS_FILE, DIRICHLET_FILE, NEUMANN_FILE]
            .into_iter()
            .zip(files)
        {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|source| Error::Io { path, source })?;
        }
        Ok(())
    }

    /// Serializes to `[coordinates, elements, dirichlet, neumann]` file bodies.
    /// Floats carry 17 significant digits so reading them back is exact.
    pub fn to_strings(&self) -> [String; 4] {
        use fmt::Write;
        let mut coords = String::new();
        for p in &self.coordinates {
            writeln!(coords, "{:.16e} {:.16e}", p[0], p[1]).unwrap();
        }
        let mut elems = String::new();
        for e in &self.elements {
            writeln!(elems, "{} {} {}", e[0] + 1, e[1] + 1, e[2] + 1).unwrap();
        }
        let pairs = |list: &[[usize; 2]]| {
            let mut s = String::new();
            for e in list {
                writeln!(s, "{} {}", e[0] + 1, e[1] + 1).unwrap();
            }
            s
        };
        [coords, elems, pairs(&self.dirichlet), pairs(&self.neumann)]
    }
}

/// Parses a mesh from the bodies of its four files.
///
/// Errors on rows with the wrong number of entries, indices outside
/// `1..=num_nodes`, and elements that are not counter-clockwise.
pub fn load_mesh(coordinates: &str, elements: &str, dirichlet: &str, neumann: &str) -> Result<Mesh> {
    let coords = parse_rows::<2, f64>(coordinates, COORDINATES_FILE, parse_float)?
        .into_iter()
        .collect::<Vec<Point>>();
    let n = coords.len();
    let index = |s: &str| parse_index(s, n);
    let elems = parse_rows::<3, usize>(elements, ELEMENTS_FILE, index)?;
    let dir = parse_rows::<2, usize>(dirichlet, DIRICHLET_FILE, index)?;
    let neu = parse_rows::<2, usize>(neumann, NEUMANN_FILE, index)?;
    Mesh::new(coords, elems, dir, neu)
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("'{s}' is not a number"))
}

fn parse_index(s: &str, n: usize) -> std::result::Result<usize, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not an index"))?;
    if v.fract() != 0.0 || v < 1.0 {
        return Err(format!("'{s}' is not a valid 1-based index"));
    }
    let i = v as usize;
    if i > n {
        return Err(format!("index {i} out of range (mesh has {n} nodes)"));
    }
    Ok(i - 1)
}

fn parse_rows<const K: usize, T: Copy + Default>(
    body: &str,
    name: &str,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Vec<[T; K]>> {
    let mut rows = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        let line = line.split(['#', '%']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: name.to_string(),
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != K {
            return Err(err(format!("expected {K} entries, found {}", fields.len())));
        }
        let mut row = [T::default(); K];
        for (slot, f) in row.iter_mut().zip(fields) {
            *slot = parse(f).map_err(err)?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Which boundary list a diagnostic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryKind::Dirichlet => "Dirichlet",
            BoundaryKind::Neumann => "Neumann",
        })
    }
}

/// One violated mesh invariant. Node and element ids are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    NodeOutOfRange { element: usize, node: usize },
    BoundaryNodeOutOfRange { kind: BoundaryKind, row: usize, node: usize },
    NonPositiveArea { element: usize, area: f64 },
    NonManifoldEdge { nodes: [usize; 2] },
    InconsistentOrientation { nodes: [usize; 2] },
    BoundaryEdgeNotInMesh { kind: BoundaryKind, row: usize, nodes: [usize; 2] },
    BoundaryEdgeIsInterior { kind: BoundaryKind, row: usize, nodes: [usize; 2] },
    DuplicateBoundaryEdge { kind: BoundaryKind, row: usize, nodes: [usize; 2] },
    BoundaryOverlap { nodes: [usize; 2] },
    UncoveredBoundaryEdge { nodes: [usize; 2] },
}

impl Diagnostic {
    /// Coverage gaps are advisory; everything else makes the mesh unusable.
    pub fn is_advisory(&self) -> bool {
        matches!(self, Diagnostic::UncoveredBoundaryEdge { .. })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Diagnostic::*;
        let p = |n: &[usize; 2]| format!("({}, {})", n[0] + 1, n[1] + 1);
        match self {
            NodeOutOfRange { element, node } => {
                write!(f, "element {} references missing node {}", element + 1, node + 1)
            }
            BoundaryNodeOutOfRange { kind, row, node } => {
                write!(f, "{kind} row {} references missing node {}", row + 1, node + 1)
            }
            NonPositiveArea { element, area } => {
                write!(f, "element {} has non-positive signed area {area:e}", element + 1)
            }
            NonManifoldEdge { nodes } => write!(f, "edge {} is shared by more than two elements", p(nodes)),
            InconsistentOrientation { nodes } => {
                write!(f, "directed edge {} occurs in two elements", p(nodes))
            }
            BoundaryEdgeNotInMesh { kind, row, nodes } => {
                write!(f, "{kind} row {}: {} is not an element edge", row + 1, p(nodes))
            }
            BoundaryEdgeIsInterior { kind, row, nodes } => {
                write!(f, "{kind} row {}: {} is an interior edge", row + 1, p(nodes))
            }
            DuplicateBoundaryEdge { kind, row, nodes } => {
                write!(f, "{kind} row {}: {} is listed twice", row + 1, p(nodes))
            }
            BoundaryOverlap { nodes } => write!(f, "edge {} is both Dirichlet and Neumann", p(nodes)),
            UncoveredBoundaryEdge { nodes } => {
                write!(f, "boundary edge {} has no boundary condition", p(nodes))
            }
        }
    }
}

/// Result of [`validate_mesh`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl MeshReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// True when no non-advisory diagnostic is present.
    pub fn is_usable(&self) -> bool {
        self.diagnostics.iter().all(Diagnostic::is_advisory)
    }
}

impl fmt::Display for MeshReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

pub fn validate_mesh(mesh: &Mesh) -> MeshReport {
    let mut out = Vec::new();
    let n = mesh.num_nodes();
    let mut geometry_ok = true;
    for (m, e) in mesh.elements.iter().enumerate() {
        for &node in e {
            if node >= n {
                out.push(Diagnostic::NodeOutOfRange { element: m, node });
                geometry_ok = false;
            }
        }
    }
    for (kind, list) in [
        (BoundaryKind::Dirichlet, &mesh.dirichlet),
        (BoundaryKind::Neumann, &mesh.neumann),
    ] {
        for (row, e) in list.iter().enumerate() {
            for &node in e {
                if node >= n {
                    out.push(Diagnostic::BoundaryNodeOutOfRange { kind, row, node });
                }
            }
        }
    }
    if !geometry_ok {
        return MeshReport { diagnostics: out };
    }
    for m in 0..mesh.num_elements() {
        let area = mesh.signed_area(m);
        if !(area > 0.0) {
            out.push(Diagnostic::NonPositiveArea { element: m, area });
        }
    }

    // undirected edge -> number of incident elements; directed edge counts
    let mut incidence: HashMap<(usize, usize), usize> = HashMap::new();
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for &[a, b, c] in &mesh.elements {
        for (i, j) in [(a, b), (b, c), (c, a)] {
            *incidence.entry(sorted(i, j)).or_default() += 1;
            *directed.entry((i, j)).or_default() += 1;
        }
    }
    let mut bad: Vec<_> = incidence.iter().filter(|(_, &c)| c > 2).map(|(&k, _)| k).collect();
    bad.sort_unstable();
    out.extend(bad.into_iter().map(|(i, j)| Diagnostic::NonManifoldEdge { nodes: [i, j] }));
    let mut dup: Vec<_> = directed.iter().filter(|(_, &c)| c > 1).map(|(&k, _)| k).collect();
    dup.sort_unstable();
    out.extend(dup.into_iter().map(|(i, j)| Diagnostic::InconsistentOrientation { nodes: [i, j] }));

    let mut listed: HashMap<(usize, usize), BoundaryKind> = HashMap::new();
    for (kind, list) in [
        (BoundaryKind::Dirichlet, &mesh.dirichlet),
        (BoundaryKind::Neumann, &mesh.neumann),
    ] {
        for (row, &[i, j]) in list.iter().enumerate() {
            if i >= n || j >= n {
                continue;
            }
            let key = sorted(i, j);
            match incidence.get(&key) {
                None => out.push(Diagnostic::BoundaryEdgeNotInMesh { kind, row, nodes: [i, j] }),
                Some(&c) if c >= 2 => {
                    out.push(Diagnostic::BoundaryEdgeIsInterior { kind, row, nodes: [i, j] })
                }
                _ => {}
            }
            match listed.get(&key) {
                Some(&prev) if prev == kind => {
                    out.push(Diagnostic::DuplicateBoundaryEdge { kind, row, nodes: [i, j] })
                }
                Some(_) => out.push(Diagnostic::BoundaryOverlap { nodes: [i, j] }),
                None => {
                    listed.insert(key, kind);
                }
            }
        }
    }
    let mut uncovered: Vec<_> = incidence
        .iter()
        .filter(|(k, &c)| c == 1 && !listed.contains_key(k))
        .map(|(&k, _)| k)
        .collect();
    uncovered.sort_unstable();
    for (i, j) in uncovered {
        let nodes = if directed.contains_key(&(i, j)) { [i, j] } else { [j, i] };
        out.push(Diagnostic::UncoveredBoundaryEdge { nodes });
    }
    MeshReport { diagnostics: out }
}

#[inline]
fn sorted(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COORDS: &str = "0 0\n1 0\n0 1\n1 1\n0.5 0.5\n";
    const ELEMS: &str = "5 1 2\n5 3 1\n5 4 3\n5 2 4\n";
    const DIR: &str = "1 2\n2 4\n";
    const NEU: &str = "4 3\n3 1\n";

    #[test]
    fn loads_reference_square() {
        let mesh = load_mesh(COORDS, ELEMS, DIR, NEU).unwrap();
        assert_eq!(mesh.num_elements(), 4);
        assert_eq!(mesh.num_nodes(), 5);
        assert_eq!(mesh.dirichlet(), &[[0, 1], [1, 3]]);
        assert_eq!(mesh.neumann(), &[[3, 2], [2, 0]]);
        assert!(mesh.validate().is_empty());
        assert_eq!(mesh, Mesh::unit_square());
    }

    #[test]
    fn single_triangle_without_boundary_lists() {
        let mesh = load_mesh("0 0\n1 0\n0 1\n", "1 2 3\n", "", "").unwrap();
        assert_eq!(mesh.num_elements(), 1);
        assert!((mesh.mesh_size().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let report = mesh.validate();
        assert_eq!(report.diagnostics.len(), 3);
        assert!(report.is_usable());
    }

    #[test]
    fn clockwise_element_is_rejected() {
        let err = load_mesh("0 0\n1 0\n0 1\n", "1 3 2\n", "", "").unwrap_err();
        assert!(matches!(err, Error::NegativeArea { element: 0, .. }), "{err}");
    }

    #[test]
    fn bad_arity_and_range() {
        let err = load_mesh("0 0\n1 0 3\n", "1 2 3\n", "", "").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = load_mesh("0 0\n1 0\n0 1\n", "1 2 4\n", "", "").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = load_mesh("0 0\n1 0\n0 1\n", "0 1 2\n", "", "").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn scientific_notation_and_reversed_boundary_pairs() {
        let coords = "0e0 0\n1.0E0 0\n0 1e-0\n1 1\n5e-1 0.5\n";
        let mesh = load_mesh(coords, ELEMS, "2 1\n4 2\n", "3 4\n1 3\n").unwrap();
        assert_eq!(mesh, Mesh::unit_square());
    }

    #[test]
    fn mesh_size_of_reference_square() {
        assert_eq!(Mesh::unit_square().mesh_size().unwrap(), 1.0);
        let empty = Mesh::from_parts(vec![], vec![], vec![], vec![]);
        assert!(matches!(empty.mesh_size(), Err(Error::EmptyMesh)));
    }

    #[test]
    fn overlap_and_coverage_diagnostics() {
        let mesh = load_mesh(COORDS, ELEMS, DIR, "4 3\n3 1\n1 2\n").unwrap();
        let report = mesh.validate();
        assert_eq!(report.diagnostics, vec![Diagnostic::BoundaryOverlap { nodes: [0, 1] }]);

        let mesh = load_mesh(COORDS, ELEMS, DIR, "4 3\n").unwrap();
        let report = mesh.validate();
        assert_eq!(report.diagnostics, vec![Diagnostic::UncoveredBoundaryEdge { nodes: [2, 0] }]);
        assert!(report.is_usable());
    }

    #[test]
    fn interior_and_unknown_boundary_pairs() {
        let mesh = load_mesh(COORDS, ELEMS, "1 2\n2 4\n1 5\n", "4 3\n3 1\n1 4\n").unwrap();
        let d = mesh.validate().diagnostics;
        assert!(d.contains(&Diagnostic::BoundaryEdgeIsInterior {
            kind: BoundaryKind::Dirichlet,
            row: 2,
            nodes: [0, 4]
        }));
        assert!(d.contains(&Diagnostic::BoundaryEdgeNotInMesh {
            kind: BoundaryKind::Neumann,
            row: 2,
            nodes: [0, 3]
        }));
    }

    #[test]
    fn negative_area_is_reported() {
        let mesh = Mesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]], vec![], vec![]);
        let d = mesh.validate().diagnostics;
        assert!(matches!(d[0], Diagnostic::NonPositiveArea { element: 0, .. }));
    }

    #[test]
    fn write_then_read_is_identity() {
        let mesh = load_mesh("0.1 0.3\n1.7 1e-7\n0.333333333333333 2.5\n", "1 2 3\n", "1 2\n", "3 1\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        mesh.write_dir(dir.path()).unwrap();
        let back = Mesh::read_dir(dir.path()).unwrap();
        assert_eq!(back, mesh);
        assert_eq!(back.to_strings(), mesh.to_strings());
    }
}
