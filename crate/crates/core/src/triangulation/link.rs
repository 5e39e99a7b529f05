//! Cusp links: the triangulated tori made of vertex links at ideal
//! vertices, with an explicit rotation system so that curves on them can
//! be traced, intersected, and fed to the holonomy evaluation.
//!
//! Each non-compact tetrahedron contributes one link triangle.  Link
//! vertices correspond to edge classes with an ideal end; the cyclic
//! incidence order of the class is the counterclockwise rotation at the
//! vertex.  Link edges are glued triangle sides.  Every edge end (dart)
//! is addressed as a slot in its vertex rotation, which pins down faces,
//! corners, and crossing signs without any further conventions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::Triangulation;

/// Corner of a link triangle: the triangle index inside the cusp plus the
/// non-ideal end vertex of the tetrahedron edge the corner sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkCorner {
    pub triangle: usize,
    pub head_vertex: usize,
}

/// One slot of a vertex rotation: the dart of `edge` ending here, followed
/// counterclockwise by `corner`.
#[derive(Clone, Copy, Debug)]
pub struct RotationSlot {
    pub edge: usize,
    pub corner: LinkCorner,
}

/// Link vertex: an edge class with one ideal end, with its rotation.
#[derive(Clone, Debug)]
pub struct LinkVertex {
    pub edge_class: usize,
    pub rotation: Vec<RotationSlot>,
}

/// One end of a link edge, addressed by vertex and rotation slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkEdgeEnd {
    pub vertex: usize,
    pub slot: usize,
}

/// Glued pair of triangle sides.  `sides` lists the two (triangle, face)
/// incidences in increasing order; the canonical direction runs from the
/// corner at the smaller vertex label of `sides[0]` to the larger.
#[derive(Clone, Debug)]
pub struct LinkEdge {
    pub sides: [(usize, usize); 2],
    pub tail: LinkEdgeEnd,
    pub head: LinkEdgeEnd,
}

/// A step along a link edge, forward meaning tail to head.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedLinkEdge {
    pub edge: usize,
    pub forward: bool,
}

pub type EdgePath = Vec<OrientedLinkEdge>;

/// Passage of a path through a link vertex: it arrives on the dart at
/// `slot_in` and leaves on the dart at `slot_out`.
#[derive(Clone, Copy, Debug)]
pub struct Junction {
    pub vertex: usize,
    pub slot_in: usize,
    pub slot_out: usize,
}

#[derive(Clone, Debug)]
pub struct CuspLink {
    pub id: usize,
    /// (tetrahedron, ideal vertex) per link triangle, ascending.
    pub triangles: Vec<(usize, usize)>,
    pub vertices: Vec<LinkVertex>,
    pub edges: Vec<LinkEdge>,
    pub mu: EdgePath,
    pub lambda: EdgePath,
}

impl CuspLink {
    pub fn euler(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn triangle_index(&self, tet: usize) -> Option<usize> {
        self.triangles.iter().position(|&(t, _)| t == tet)
    }

    /// Resolves a path to its junctions, validating that it is a closed
    /// embedded loop without backtracking.
    pub fn junctions(&self, path: &EdgePath) -> Result<Vec<Junction>> {
        if path.is_empty() {
            return Err(Error::usage("empty curve"));
        }
        let end = |step: &OrientedLinkEdge, arrive: bool| -> LinkEdgeEnd {
            let e = &self.edges[step.edge];
            if step.forward == arrive {
                e.head
            } else {
                e.tail
            }
        };
        for step in path {
            if step.edge >= self.edges.len() {
                return Err(Error::usage(format!("curve uses missing edge {}", step.edge)));
            }
        }
        let n = path.len();
        let mut junctions = Vec::with_capacity(n);
        for k in 0..n {
            let arrive = end(&path[k], true);
            let depart = end(&path[(k + 1) % n], false);
            if arrive.vertex != depart.vertex {
                return Err(Error::usage(format!(
                    "curve is not closed: step {k} ends at vertex {} but the next starts at {}",
                    arrive.vertex, depart.vertex
                )));
            }
            if arrive.slot == depart.slot {
                return Err(Error::usage(format!("curve backtracks at vertex {}", arrive.vertex)));
            }
            junctions.push(Junction {
                vertex: arrive.vertex,
                slot_in: arrive.slot,
                slot_out: depart.slot,
            });
        }
        let mut visited: Vec<usize> = junctions.iter().map(|j| j.vertex).collect();
        visited.sort_unstable();
        visited.dedup();
        if visited.len() != n {
            return Err(Error::usage("curve visits a link vertex twice; only embedded curves are supported"));
        }
        Ok(junctions)
    }

    /// Signed intersection number of two closed embedded loops, computed
    /// by pushing the first slightly to its left at every shared vertex.
    pub fn intersection(&self, first: &EdgePath, second: &EdgePath) -> Result<i64> {
        let j1 = self.junctions(first)?;
        let j2 = self.junctions(second)?;
        let mut total = 0i64;
        for a in &j1 {
            for b in &j2 {
                if a.vertex != b.vertex {
                    continue;
                }
                let m = self.vertices[a.vertex].rotation.len();
                let n = 3 * m as i64;
                // Refined circle positions: slot j contributes a gap
                // before its dart (3j), the dart itself (3j+1), and a gap
                // after (3j+2).  The pushed-left copy of the first loop
                // enters just clockwise of its in-dart and leaves just
                // counterclockwise of its out-dart; the second runs on the
                // dart cores.
                let a_in = 3 * a.slot_in as i64;
                let a_out = 3 * a.slot_out as i64 + 2;
                let b_in = 3 * b.slot_in as i64 + 1;
                let b_out = 3 * b.slot_out as i64 + 1;
                total += chord_crossing(a_in, a_out, b_in, b_out, n);
            }
        }
        Ok(total)
    }

    pub(crate) fn set_basis(&mut self, mu: EdgePath, lambda: EdgePath) -> Result<()> {
        let i = self.intersection(&mu, &lambda)?;
        if i != 1 && i != -1 {
            return Err(Error::usage(format!(
                "peripheral curves have intersection number {i}; a basis needs +1 or -1"
            )));
        }
        self.mu = mu;
        self.lambda = lambda;
        Ok(())
    }
}

/// Sign of the crossing between chord a (from a0 to a1) and chord b (from
/// b0 to b1) drawn inside a disc with 2n boundary positions, +1 when b
/// crosses a from its left.  Endpoints are distinct by construction.
fn chord_crossing(a0: i64, a1: i64, b0: i64, b1: i64, n: i64) -> i64 {
    let between = |x: i64, lo: i64, hi: i64| -> bool {
        ((x - lo).rem_euclid(n)) < ((hi - lo).rem_euclid(n)) && x.rem_euclid(n) != lo.rem_euclid(n)
    };
    let b0_left = between(b0, a0, a1);
    let b1_left = between(b1, a0, a1);
    if b0_left && !b1_left {
        1
    } else if !b0_left && b1_left {
        -1
    } else {
        0
    }
}

pub(crate) fn build_cusp_links(
    tri: &Triangulation,
    cusp_orbits: &[Vec<(usize, usize)>],
) -> Result<Vec<CuspLink>> {
    let mut links = Vec::new();
    for (id, orbit) in cusp_orbits.iter().enumerate() {
        links.push(build_one_link(tri, id, orbit)?);
    }
    Ok(links)
}

fn build_one_link(tri: &Triangulation, id: usize, orbit: &[(usize, usize)]) -> Result<CuspLink> {
    let mut triangles = orbit.to_vec();
    triangles.sort_unstable();
    let tri_index: BTreeMap<usize, usize> =
        triangles.iter().enumerate().map(|(i, &(t, _))| (t, i)).collect();

    // Vertices: edge classes of this cusp, with rotations straight from
    // the class traces.  Each dart is registered under both (tet, face,
    // head) keys that see it: the entry side of its slot and the exit
    // side of the previous slot.
    let mut vertices = Vec::new();
    let mut dart_at: BTreeMap<(usize, usize, usize), LinkEdgeEnd> = BTreeMap::new();
    for class in tri.edge_classes() {
        if class.cusp != Some(id) {
            continue;
        }
        let v_idx = vertices.len();
        let m = class.valence();
        let mut rotation = Vec::with_capacity(m);
        for (slot, inc) in class.incidences.iter().enumerate() {
            let prev = &class.incidences[(slot + m - 1) % m];
            let end = LinkEdgeEnd { vertex: v_idx, slot };
            dart_at.insert((inc.tet, inc.entry_face, inc.head), end);
            dart_at.insert((prev.tet, prev.exit_face, prev.head), end);
            rotation.push(RotationSlot {
                edge: usize::MAX,
                corner: LinkCorner {
                    triangle: tri_index[&inc.tet],
                    head_vertex: inc.head,
                },
            });
        }
        vertices.push(LinkVertex {
            edge_class: class.id,
            rotation,
        });
    }

    // Edges: triangle sides paired by the face gluings.
    let mut edges: Vec<LinkEdge> = Vec::new();
    let mut side_seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t_idx, &(tet, v)) in triangles.iter().enumerate() {
        for f in 0..4 {
            if f == v || side_seen.contains_key(&(t_idx, f)) {
                continue;
            }
            let (b, sigma) = &tri.tets()[tet].glue[f];
            let other = (tri_index[b], sigma.apply(f));
            let mut sides = [(t_idx, f), other];
            sides.sort_unstable();
            let eid = edges.len();
            side_seen.insert((t_idx, f), eid);
            side_seen.insert(other, eid);
            // Canonical direction: sides[0] corners in increasing vertex
            // label order of its own tetrahedron.
            let (t0, f0) = sides[0];
            let (tet0, v0) = triangles[t0];
            let mut ws: Vec<usize> = (0..4).filter(|&w| w != v0 && w != f0).collect();
            ws.sort_unstable();
            let tail = *dart_at.get(&(tet0, f0, ws[0])).ok_or_else(|| {
                Error::invariant("link side end not found in any vertex rotation")
            })?;
            let head = *dart_at.get(&(tet0, f0, ws[1])).ok_or_else(|| {
                Error::invariant("link side end not found in any vertex rotation")
            })?;
            edges.push(LinkEdge { sides, tail, head });
        }
    }

    // Fill the dart slots of the rotations from the edge ends.
    let mut link = CuspLink {
        id,
        triangles,
        vertices,
        edges,
        mu: Vec::new(),
        lambda: Vec::new(),
    };
    for (eid, (tail, head)) in link
        .edges
        .iter()
        .map(|e| (e.tail, e.head))
        .collect::<Vec<_>>()
        .into_iter()
        .enumerate()
    {
        for end in [tail, head] {
            let slot = &mut link.vertices[end.vertex].rotation[end.slot];
            if slot.edge != usize::MAX {
                return Err(Error::invariant("two link edge ends claim one rotation slot"));
            }
            slot.edge = eid;
        }
    }
    if link
        .vertices
        .iter()
        .any(|v| v.rotation.iter().any(|s| s.edge == usize::MAX))
    {
        return Err(Error::invariant("rotation slot without a link edge end"));
    }

    // A cusp link must be a torus: as many vertices as triangle pairs and
    // Euler characteristic zero.
    if 2 * link.edges.len() != 3 * link.triangles.len() || link.euler() != 0 {
        return Err(Error::invariant(format!(
            "cusp {id} link has Euler characteristic {}; cusp cross-sections must be tori",
            link.euler()
        )));
    }

    let (mu, lambda) = default_basis(&link)?;
    link.set_basis(mu, lambda)?;
    Ok(link)
}

/// Default peripheral basis: fundamental cycles of the lexicographic
/// spanning tree, taking the first pair with intersection number one and
/// orienting it positively.
fn default_basis(link: &CuspLink) -> Result<(EdgePath, EdgePath)> {
    let nv = link.vertices.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let mut tree_adj: Vec<Vec<(usize, bool, usize)>> = vec![Vec::new(); nv];
    let mut cotree = Vec::new();
    for (eid, e) in link.edges.iter().enumerate() {
        let (a, b) = (e.tail.vertex, e.head.vertex);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            tree_adj[a].push((eid, true, b));
            tree_adj[b].push((eid, false, a));
        } else {
            cotree.push(eid);
        }
    }
    let cycles: Vec<EdgePath> = cotree
        .iter()
        .map(|&eid| {
            let e = &link.edges[eid];
            let mut path = vec![OrientedLinkEdge {
                edge: eid,
                forward: true,
            }];
            path.extend(tree_path(&tree_adj, e.head.vertex, e.tail.vertex));
            path
        })
        .collect();
    for i in 0..cycles.len() {
        for j in (i + 1)..cycles.len() {
            let inter = link.intersection(&cycles[i], &cycles[j])?;
            if inter == 1 {
                return Ok((cycles[i].clone(), cycles[j].clone()));
            }
            if inter == -1 {
                return Ok((cycles[j].clone(), cycles[i].clone()));
            }
        }
    }
    Err(Error::invariant(
        "no pair of fundamental cycles with intersection number one",
    ))
}

/// Simple tree path from one vertex to another as oriented edges.
fn tree_path(adj: &[Vec<(usize, bool, usize)>], from: usize, to: usize) -> EdgePath {
    if from == to {
        return Vec::new();
    }
    let mut prev: Vec<Option<(usize, bool, usize)>> = vec![None; adj.len()];
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = vec![false; adj.len()];
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &(eid, fwd, w) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                prev[w] = Some((eid, fwd, v));
                queue.push_back(w);
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = to;
    while cur != from {
        let (eid, fwd, back) = prev[cur].expect("spanning tree is connected");
        path.push(OrientedLinkEdge { edge: eid, forward: fwd });
        cur = back;
    }
    path.reverse();
    path
}

/// Token form of one oriented step, `T.F+` or `T.F-`: the side of the
/// link triangle at tetrahedron T lying in face F, traversed along or
/// against its canonical direction.
pub(crate) fn path_tokens(link: &CuspLink, path: &EdgePath) -> String {
    path.iter()
        .map(|step| {
            let e = &link.edges[step.edge];
            let (t_idx, f) = e.sides[0];
            let (tet, _) = link.triangles[t_idx];
            format!("{tet}.{f}{}", if step.forward { '+' } else { '-' })
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn path_from_tokens(link: &CuspLink, tokens: &[&str]) -> Result<EdgePath> {
    let mut path = Vec::new();
    for tok in tokens {
        let (body, forward) = match tok.as_bytes().last() {
            Some(b'+') => (&tok[..tok.len() - 1], true),
            Some(b'-') => (&tok[..tok.len() - 1], false),
            _ => return Err(Error::usage(format!("curve token {tok} must end in + or -"))),
        };
        let (tet_s, face_s) = body
            .split_once('.')
            .ok_or_else(|| Error::usage(format!("curve token {tok} is not of the form T.F+")))?;
        let tet: usize = tet_s
            .parse()
            .map_err(|_| Error::usage(format!("bad tetrahedron in curve token {tok}")))?;
        let face: usize = face_s
            .parse()
            .map_err(|_| Error::usage(format!("bad face in curve token {tok}")))?;
        let t_idx = link
            .triangle_index(tet)
            .ok_or_else(|| Error::usage(format!("tet {tet} has no triangle in this cusp link")))?;
        let edge = link
            .edges
            .iter()
            .position(|e| e.sides.contains(&(t_idx, face)))
            .ok_or_else(|| Error::usage(format!("face {face} of tet {tet} is no side of the cusp link")))?;
        path.push(OrientedLinkEdge { edge, forward });
    }
    Ok(path)
}

/// Euler characteristic of the surface carried by a rotation system,
/// counted from its faces: start from every dart and walk next-on-face
/// (cross the edge, then turn one slot clockwise at the far vertex).
/// Independent of the triangle count, so it crosschecks the rotations.
pub fn euler_from_rotation(link: &CuspLink) -> i64 {
    // Darts as (vertex, slot); next_on_face(d) = rotate the opposite end
    // of d one step clockwise.
    let mut seen: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    for (v, vert) in link.vertices.iter().enumerate() {
        for s in 0..vert.rotation.len() {
            seen.insert((v, s), false);
        }
    }
    let opposite = |v: usize, s: usize| -> (usize, usize) {
        let e = &link.edges[link.vertices[v].rotation[s].edge];
        if (e.tail.vertex, e.tail.slot) == (v, s) {
            (e.head.vertex, e.head.slot)
        } else {
            (e.tail.vertex, e.tail.slot)
        }
    };
    let mut faces = 0i64;
    let keys: Vec<(usize, usize)> = seen.keys().cloned().collect();
    for start in keys {
        if seen[&start] {
            continue;
        }
        faces += 1;
        let mut cur = start;
        loop {
            seen.insert(cur, true);
            let (ov, os) = opposite(cur.0, cur.1);
            let m = link.vertices[ov].rotation.len();
            cur = (ov, (os + m - 1) % m);
            if cur == start {
                break;
            }
        }
    }
    let v = link.vertices.len() as i64;
    let e = link.edges.len() as i64;
    v - e + faces
}
