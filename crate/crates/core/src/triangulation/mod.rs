//! Combinatorics of partially truncated triangulations.
//!
//! A triangulation is a list of tetrahedra with all eight faces glued in
//! pairs by odd (orientation-reversing on the face, hence orientation
//! preserving on the manifold) vertex permutations.  Each tetrahedron
//! carries at most one ideal vertex; ideal vertices must match across
//! gluings.  From the gluing data we derive edge classes with their cyclic
//! incidence order, vertex orbits, cusp links with rotation systems, the
//! truncation boundary surface, and peripheral curves on each cusp torus.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::edge_index;

mod enumerate;
mod link;
mod parse;

pub use enumerate::enumerate_gluings;
pub use link::{
    euler_from_rotation, CuspLink, EdgePath, Junction, LinkCorner, LinkEdge, LinkEdgeEnd,
    LinkVertex, OrientedLinkEdge, RotationSlot,
};
pub use parse::{parse, serialize_with_angles, ParsedFile};

/// Permutation of {0,1,2,3} stored as the images of 0,1,2,3.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Perm(pub [u8; 4]);

impl Perm {
    pub fn new(images: [u8; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &i in &images {
            if i > 3 || seen[i as usize] {
                return Err(Error::usage(format!("not a permutation: {images:?}")));
            }
            seen[i as usize] = true;
        }
        Ok(Perm(images))
    }

    pub fn identity() -> Self {
        Perm([0, 1, 2, 3])
    }

    pub fn apply(&self, v: usize) -> usize {
        self.0[v] as usize
    }

    pub fn inverse(&self) -> Self {
        let mut inv = [0u8; 4];
        for (i, &img) in self.0.iter().enumerate() {
            inv[img as usize] = i as u8;
        }
        Perm(inv)
    }

    /// self after other: (self * other)(v) = self(other(v)).
    pub fn compose(&self, other: &Perm) -> Self {
        Perm([
            self.0[other.0[0] as usize],
            self.0[other.0[1] as usize],
            self.0[other.0[2] as usize],
            self.0[other.0[3] as usize],
        ])
    }

    pub fn is_odd(&self) -> bool {
        let mut inversions = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if self.0[i] > self.0[j] {
                    inversions += 1;
                }
            }
        }
        inversions % 2 == 1
    }

    pub fn digits(&self) -> String {
        self.0.iter().map(|d| d.to_string()).collect()
    }

    pub fn from_digits(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != 4 {
            return Err(Error::usage(format!("permutation must be 4 digits: {s}")));
        }
        let mut images = [0u8; 4];
        for (i, &b) in bytes.iter().enumerate() {
            if !b.is_ascii_digit() {
                return Err(Error::usage(format!("permutation must be 4 digits: {s}")));
            }
            images[i] = b - b'0';
        }
        Perm::new(images)
    }
}

/// One tetrahedron: optional ideal vertex and four face gluings.
/// `glue[f] = (target tet, permutation)` where the permutation sends the
/// vertices of this tetrahedron to vertices of the target and maps face f
/// to the glued face of the target.
#[derive(Clone, Debug)]
pub struct TetSpec {
    pub ideal: Option<usize>,
    pub glue: [(usize, Perm); 4],
}

impl TetSpec {
    /// Faces whose truncation hexagon degenerates because it touches the
    /// ideal vertex (the three faces containing it).
    pub fn is_exceptional_face(&self, face: usize) -> bool {
        self.ideal.map_or(false, |v| v != face)
    }
}

/// One tetrahedron edge inside an edge class, oriented along the class
/// trace.  For classes with an ideal end the tail is always the ideal
/// vertex.  The trace enters the tetrahedron through `entry_face` and
/// leaves through `exit_face` while rotating positively about tail->head.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeIncidence {
    pub tet: usize,
    pub tail: usize,
    pub head: usize,
    pub entry_face: usize,
    pub exit_face: usize,
}

impl EdgeIncidence {
    pub fn local_edge(&self) -> usize {
        edge_index(self.tail, self.head)
    }
}

/// An edge class: the cyclic sequence of tetrahedron edges identified by
/// the gluings, listed in positive rotation order about the directed edge.
#[derive(Clone, Debug)]
pub struct EdgeClass {
    pub id: usize,
    pub incidences: Vec<EdgeIncidence>,
    /// True when the tail end is an ideal vertex (the head end then lies
    /// on the geodesic boundary; classes with two ideal ends are rejected).
    pub ideal_tail: bool,
    /// Cusp owning the ideal end, when there is one.
    pub cusp: Option<usize>,
}

impl EdgeClass {
    pub fn valence(&self) -> usize {
        self.incidences.len()
    }

    pub fn is_compact(&self) -> bool {
        !self.ideal_tail
    }
}

/// Connected component of the truncation boundary surface.
#[derive(Clone, Debug)]
pub struct BoundaryComponent {
    pub triangles: usize,
    pub vertices: usize,
    pub euler: i64,
}

/// Size summary: tetrahedra, compact and non-compact tetrahedra, compact
/// edge classes, edge classes with one ideal end, and cusps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counts {
    pub tets: usize,
    pub compact_tets: usize,
    pub noncompact_tets: usize,
    pub compact_classes: usize,
    pub ideal_end_classes: usize,
    pub cusps: usize,
}

#[derive(Clone, Debug)]
pub struct Triangulation {
    tets: Vec<TetSpec>,
    edge_classes: Vec<EdgeClass>,
    class_of: Vec<[usize; 6]>,
    cusp_of_tet: Vec<Option<usize>>,
    cusps: Vec<CuspLink>,
    boundary: Vec<BoundaryComponent>,
    counts: Counts,
}

impl Triangulation {
    /// Validates the gluing data and derives all combinatorial structure.
    pub fn from_tets(tets: Vec<TetSpec>) -> Result<Self> {
        validate_gluings(&tets)?;
        let edge_classes = build_edge_classes(&tets)?;
        let class_of = index_classes(&tets, &edge_classes);
        // Vertex orbits, sorted by least slot; ideal orbits become cusps.
        let orbits = vertex_orbits(&tets);
        let mut cusp_of_tet = vec![None; tets.len()];
        let mut cusp_orbits = Vec::new();
        for orbit in &orbits {
            let (t0, v0) = orbit[0];
            if tets[t0].ideal == Some(v0) {
                for &(t, _) in orbit {
                    cusp_of_tet[t] = Some(cusp_orbits.len());
                }
                cusp_orbits.push(orbit.clone());
            }
        }
        let mut edge_classes = edge_classes;
        for class in &mut edge_classes {
            if class.ideal_tail {
                class.cusp = cusp_of_tet[class.incidences[0].tet];
            }
        }
        let boundary = boundary_components(&tets, &edge_classes, &class_of)?;
        let counts = Counts {
            tets: tets.len(),
            compact_tets: tets.iter().filter(|t| t.ideal.is_none()).count(),
            noncompact_tets: tets.iter().filter(|t| t.ideal.is_some()).count(),
            compact_classes: edge_classes.iter().filter(|c| c.is_compact()).count(),
            ideal_end_classes: edge_classes.iter().filter(|c| !c.is_compact()).count(),
            cusps: cusp_orbits.len(),
        };
        check_count_identities(&counts, &edge_classes)?;
        let mut tri = Triangulation {
            tets,
            edge_classes,
            class_of,
            cusp_of_tet,
            cusps: Vec::new(),
            boundary,
            counts,
        };
        tri.cusps = link::build_cusp_links(&tri, &cusp_orbits)?;
        Ok(tri)
    }

    pub fn tets(&self) -> &[TetSpec] {
        &self.tets
    }

    pub fn edge_classes(&self) -> &[EdgeClass] {
        &self.edge_classes
    }

    pub fn class_of(&self, tet: usize, local_edge: usize) -> usize {
        self.class_of[tet][local_edge]
    }

    pub fn cusps(&self) -> &[CuspLink] {
        &self.cusps
    }

    pub fn cusp_of_tet(&self, tet: usize) -> Option<usize> {
        self.cusp_of_tet[tet]
    }

    pub fn boundary_components(&self) -> &[BoundaryComponent] {
        &self.boundary
    }

    pub fn counts(&self) -> Counts {
        self.counts
    }

    /// Replaces the peripheral basis of one cusp with user-supplied curves.
    /// Both must be closed embedded loops in the cusp link with
    /// intersection number +1 or -1.
    pub fn with_peripheral_basis(
        mut self,
        cusp: usize,
        mu: EdgePath,
        lambda: EdgePath,
    ) -> Result<Self> {
        if cusp >= self.cusps.len() {
            return Err(Error::usage(format!("no cusp {cusp}")));
        }
        self.cusps[cusp].set_basis(mu, lambda)?;
        Ok(self)
    }

    /// The isomorphic triangulation obtained by renaming tetrahedra by
    /// `tet_perm` (tet i becomes tet_perm[i]) and relabeling the vertices
    /// of tet i by `vertex_perms[i]`.  Vertex relabelings must be even to
    /// keep the gluing permutations odd.
    pub fn relabeled(&self, tet_perm: &[usize], vertex_perms: &[Perm]) -> Result<Triangulation> {
        Triangulation::from_tets(relabel_tets(&self.tets, tet_perm, vertex_perms)?)
    }

    /// Canonical text form of the gluing data (no curves, no angles).
    pub fn serialize_tets(&self) -> String {
        parse::serialize_tets(&self.tets)
    }

    /// Full text form including peripheral curve records.
    pub fn serialize(&self) -> String {
        parse::serialize(self)
    }
}

pub(crate) fn relabel_tets(
    tets: &[TetSpec],
    tet_perm: &[usize],
    vertex_perms: &[Perm],
) -> Result<Vec<TetSpec>> {
    let n = tets.len();
    if tet_perm.len() != n || vertex_perms.len() != n {
        return Err(Error::usage("relabeling size mismatch"));
    }
    if vertex_perms.iter().any(|p| p.is_odd()) {
        return Err(Error::usage("vertex relabelings must be even"));
    }
    let mut out = vec![
        TetSpec {
            ideal: None,
            glue: [(0, Perm::identity()); 4],
        };
        n
    ];
    for (a, spec) in tets.iter().enumerate() {
        let na = tet_perm[a];
        let rho_a = &vertex_perms[a];
        out[na].ideal = spec.ideal.map(|v| rho_a.apply(v));
        for f in 0..4 {
            let (b, sigma) = &spec.glue[f];
            let rho_b = &vertex_perms[*b];
            out[na].glue[rho_a.apply(f)] = (tet_perm[*b], rho_b.compose(&sigma.compose(&rho_a.inverse())));
        }
    }
    Ok(out)
}

fn validate_gluings(tets: &[TetSpec]) -> Result<()> {
    if tets.is_empty() {
        return Err(Error::invariant("no tetrahedra"));
    }
    let n = tets.len();
    // Connectivity under face gluings.
    let mut reached = vec![false; n];
    let mut stack = vec![0usize];
    reached[0] = true;
    while let Some(a) = stack.pop() {
        for f in 0..4 {
            let b = tets[a].glue[f].0;
            if b < n && !reached[b] {
                reached[b] = true;
                stack.push(b);
            }
        }
    }
    if reached.iter().any(|&r| !r) {
        return Err(Error::invariant("triangulation is not connected"));
    }
    for (a, spec) in tets.iter().enumerate() {
        if let Some(v) = spec.ideal {
            if v > 3 {
                return Err(Error::invariant(format!("tet {a}: ideal vertex {v} out of range")));
            }
        }
        for f in 0..4 {
            let (b, sigma) = &spec.glue[f];
            if *b >= n {
                return Err(Error::invariant(format!("tet {a} face {f}: glued to missing tet {b}")));
            }
            if !sigma.is_odd() {
                return Err(Error::invariant(format!(
                    "tet {a} face {f}: gluing permutation {} is even",
                    sigma.digits()
                )));
            }
            let g = sigma.apply(f);
            if *b == a && g == f {
                return Err(Error::invariant(format!("tet {a} face {f}: glued to itself")));
            }
            // Involutive: the gluing recorded on the far side must be the
            // inverse permutation back to this face.
            let (back, tau) = &tets[*b].glue[g];
            if *back != a || *tau != sigma.inverse() {
                return Err(Error::invariant(format!(
                    "tet {a} face {f}: gluing to tet {b} face {g} is not matched by the inverse"
                )));
            }
            // Ideal vertices must map to ideal vertices across the face.
            for v in 0..4 {
                if v == f {
                    continue;
                }
                let va = tets[a].ideal == Some(v);
                let vb = tets[*b].ideal == Some(sigma.apply(v));
                if va != vb {
                    return Err(Error::invariant(format!(
                        "tet {a} face {f}: vertex {v} ideal flag disagrees with tet {b} vertex {}",
                        sigma.apply(v)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Positive-rotation entry and exit faces for the directed edge a->b:
/// with (a,b,c,d) an even vertex ordering the trace enters through the
/// face opposite d and exits through the face opposite c.
pub(crate) fn rotation_faces(a: usize, b: usize) -> (usize, usize) {
    let mut rest = [usize::MAX; 2];
    let mut k = 0;
    for v in 0..4 {
        if v != a && v != b {
            rest[k] = v;
            k += 1;
        }
    }
    let (c, d) = (rest[0], rest[1]);
    if perm_is_even([a, b, c, d]) {
        (d, c)
    } else {
        (c, d)
    }
}

fn perm_is_even(p: [usize; 4]) -> bool {
    let mut inversions = 0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

fn trace_edge(tets: &[TetSpec], tet0: usize, a0: usize, b0: usize) -> Result<Vec<EdgeIncidence>> {
    let mut incidences = Vec::new();
    let (entry0, exit0) = rotation_faces(a0, b0);
    let (mut tet, mut a, mut b, mut entry, mut exit) = (tet0, a0, b0, entry0, exit0);
    loop {
        incidences.push(EdgeIncidence {
            tet,
            tail: a,
            head: b,
            entry_face: entry,
            exit_face: exit,
        });
        let (next_tet, sigma) = &tets[tet].glue[exit];
        let (na, nb) = (sigma.apply(a), sigma.apply(b));
        let nentry = sigma.apply(exit);
        if (*next_tet, na, nb) == (tet0, a0, b0) {
            debug_assert_eq!(nentry, entry0);
            return Ok(incidences);
        }
        if (*next_tet, na, nb) == (tet0, b0, a0) {
            return Err(Error::invariant(format!(
                "edge {a0}{b0} of tet {tet0} is identified with itself reversed"
            )));
        }
        let nexit = 6 - na - nb - nentry;
        (tet, a, b, entry, exit) = (*next_tet, na, nb, nentry, nexit);
        if incidences.len() > 6 * tets.len() {
            return Err(Error::invariant("edge trace failed to close"));
        }
    }
}

fn build_edge_classes(tets: &[TetSpec]) -> Result<Vec<EdgeClass>> {
    let n = tets.len();
    let mut seen = vec![[false; 6]; n];
    let mut classes = Vec::new();
    for tet in 0..n {
        for le in 0..6 {
            if seen[tet][le] {
                continue;
            }
            let (mut a, mut b) = crate::geometry::EDGE_VERTS[le];
            // Direct edges with one ideal end away from the cusp so that
            // the trace order matches the rotation system of the link.
            if tets[tet].ideal == Some(b) {
                std::mem::swap(&mut a, &mut b);
            }
            let incidences = trace_edge(tets, tet, a, b)?;
            let ideal_tail = tets[tet].ideal == Some(a);
            for inc in &incidences {
                seen[inc.tet][inc.local_edge()] = true;
                let head_ideal = tets[inc.tet].ideal == Some(inc.head);
                if ideal_tail && head_ideal {
                    return Err(Error::invariant(format!(
                        "edge class through tet {} has ideal vertices at both ends",
                        inc.tet
                    )));
                }
                if !ideal_tail && head_ideal {
                    return Err(Error::invariant(
                        "edge trace direction disagrees with ideal flags",
                    ));
                }
            }
            classes.push(EdgeClass {
                id: classes.len(),
                incidences,
                ideal_tail,
                cusp: None,
            });
        }
    }
    Ok(classes)
}

fn index_classes(tets: &[TetSpec], classes: &[EdgeClass]) -> Vec<[usize; 6]> {
    let mut map = vec![[usize::MAX; 6]; tets.len()];
    for class in classes {
        for inc in &class.incidences {
            map[inc.tet][inc.local_edge()] = class.id;
        }
    }
    debug_assert!(map.iter().all(|row| row.iter().all(|&c| c != usize::MAX)));
    map
}

fn vertex_orbits(tets: &[TetSpec]) -> Vec<Vec<(usize, usize)>> {
    let n = tets.len();
    let mut parent: Vec<usize> = (0..4 * n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for (a, spec) in tets.iter().enumerate() {
        for f in 0..4 {
            let (b, sigma) = &spec.glue[f];
            for v in 0..4 {
                if v == f {
                    continue;
                }
                let x = find(&mut parent, 4 * a + v);
                let y = find(&mut parent, 4 * b + sigma.apply(v));
                parent[x] = y;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for slot in 0..4 * n {
        let root = find(&mut parent, slot);
        groups.entry(root).or_default().push((slot / 4, slot % 4));
    }
    let mut orbits: Vec<Vec<(usize, usize)>> = groups.into_values().collect();
    orbits.sort_by_key(|orbit| orbit[0]);
    orbits
}

/// Which end of its edge class a vertex slot meets: the trace orientation
/// is constant along a class, so tail ends and head ends are separate
/// points of the manifold.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum End {
    Tail,
    Head,
}

fn boundary_components(
    tets: &[TetSpec],
    classes: &[EdgeClass],
    class_of: &[[usize; 6]],
) -> Result<Vec<BoundaryComponent>> {
    // Truncation triangles at non-ideal vertex slots, glued side to side.
    let n = tets.len();
    let mut tri_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for tet in 0..n {
        for v in 0..4 {
            if tets[tet].ideal != Some(v) {
                let id = tri_ids.len();
                tri_ids.insert((tet, v), id);
            }
        }
    }
    let m = tri_ids.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for (&(tet, v), &id) in &tri_ids {
        for f in 0..4 {
            if f == v {
                continue;
            }
            let (b, sigma) = &tets[tet].glue[f];
            let other = tri_ids[&(*b, sigma.apply(v))];
            let x = find(&mut parent, id);
            let y = find(&mut parent, other);
            parent[x] = y;
        }
    }
    // Boundary vertices are ends of edge classes at non-ideal vertex slots.
    let mut verts_of_root: BTreeMap<usize, std::collections::BTreeSet<(usize, End)>> =
        BTreeMap::new();
    let mut tris_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    for (&(tet, v), &id) in &tri_ids {
        let root = find(&mut parent, id);
        *tris_of_root.entry(root).or_insert(0) += 1;
        for w in 0..4 {
            if w == v {
                continue;
            }
            let class = class_of[tet][edge_index(v, w)];
            let end = end_at(&classes[class], tet, v, w);
            verts_of_root.entry(root).or_default().insert((class, end));
        }
    }
    let mut components = Vec::new();
    for (root, triangles) in tris_of_root {
        let vertices = verts_of_root.get(&root).map_or(0, |s| s.len());
        if triangles % 2 != 0 {
            return Err(Error::invariant("boundary component with odd triangle count"));
        }
        let edges = 3 * triangles / 2;
        let euler = vertices as i64 - edges as i64 + triangles as i64;
        if euler >= 0 {
            return Err(Error::invariant(format!(
                "boundary component has Euler characteristic {euler}; geodesic boundary needs a negative value"
            )));
        }
        components.push(BoundaryComponent {
            triangles,
            vertices,
            euler,
        });
    }
    Ok(components)
}

fn end_at(class: &EdgeClass, tet: usize, v: usize, w: usize) -> End {
    for inc in &class.incidences {
        if inc.tet == tet && inc.tail == v && inc.head == w {
            return End::Tail;
        }
        if inc.tet == tet && inc.tail == w && inc.head == v {
            return End::Head;
        }
    }
    unreachable!("edge class index out of sync");
}

fn check_count_identities(counts: &Counts, classes: &[EdgeClass]) -> Result<()> {
    // Each tetrahedron has six edges; summing valences over classes must
    // give six per tetrahedron, and edges with an ideal end come in pairs
    // that bound the two-sided link of the cusp circle, so their class
    // count determines the cusp link sizes checked later.
    let total: usize = classes.iter().map(|c| c.valence()).sum();
    if total != 6 * counts.tets {
        return Err(Error::invariant("edge valences do not sum to six per tetrahedron"));
    }
    Ok(())
}
