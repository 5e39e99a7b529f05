//! Exhaustive enumeration of small triangulations.
//!
//! Searches all ways to glue the faces of up to `max_tets` tetrahedra in
//! pairs by odd permutations, with ideal vertices placed at vertex 3 of
//! any subset of tetrahedra (relabeling makes that placement general),
//! keeps the gluings that pass every structural check, and returns one
//! representative per isomorphism class.  Isomorphism allows renaming
//! tetrahedra and even vertex relabelings; representatives are the
//! lexicographically least serialization and come back sorted.

use std::collections::BTreeSet;

use super::{Perm, TetSpec, Triangulation};

/// All valid triangulations with at most `max_tets` tetrahedra and at most
/// `max_ideal` ideal vertices, one per isomorphism class.
pub fn enumerate_gluings(max_tets: usize, max_ideal: usize) -> Vec<Triangulation> {
    let odd_perms: Vec<Perm> = all_perms(false);
    let even_perms: Vec<Perm> = all_perms(true);
    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut found: Vec<(Vec<u8>, Triangulation)> = Vec::new();
    for t in 1..=max_tets {
        for ideal_mask in 0u32..(1 << t) {
            if ideal_mask.count_ones() as usize > max_ideal {
                continue;
            }
            let ideal: Vec<Option<usize>> = (0..t)
                .map(|i| if ideal_mask & (1 << i) != 0 { Some(3) } else { None })
                .collect();
            let mut pairing: Vec<Option<(usize, usize, Perm)>> = vec![None; 4 * t];
            search(
                &ideal,
                &odd_perms,
                &even_perms,
                &mut pairing,
                &mut seen,
                &mut found,
            );
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found.into_iter().map(|(_, tri)| tri).collect()
}

fn all_perms(even: bool) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut images = [0u8, 1, 2, 3];
    permute(&mut images, 0, &mut |p| {
        let perm = Perm(*p);
        if perm.is_odd() != even {
            out.push(perm);
        }
    });
    out.sort();
    out
}

fn permute(arr: &mut [u8; 4], k: usize, visit: &mut impl FnMut(&[u8; 4])) {
    if k == 4 {
        visit(arr);
        return;
    }
    for i in k..4 {
        arr.swap(k, i);
        permute(arr, k + 1, visit);
        arr.swap(k, i);
    }
}

fn search(
    ideal: &[Option<usize>],
    odd_perms: &[Perm],
    even_perms: &[Perm],
    pairing: &mut Vec<Option<(usize, usize, Perm)>>,
    seen: &mut BTreeSet<Vec<u8>>,
    found: &mut Vec<(Vec<u8>, Triangulation)>,
) {
    let t = ideal.len();
    let free = (0..4 * t).find(|&g| pairing[g].is_none());
    let Some(gf) = free else {
        finish(ideal, pairing, even_perms, seen, found);
        return;
    };
    let (a, f) = (gf / 4, gf % 4);
    for gg in (gf + 1)..4 * t {
        if pairing[gg].is_some() {
            continue;
        }
        let (b, g) = (gg / 4, gg % 4);
        for sigma in odd_perms {
            if sigma.apply(f) != g {
                continue;
            }
            // Ideal vertices must correspond across the face.
            let flags_match = (0..4).all(|v| {
                v == f || ((ideal[a] == Some(v)) == (ideal[b] == Some(sigma.apply(v))))
            });
            if !flags_match {
                continue;
            }
            pairing[gf] = Some((b, g, *sigma));
            pairing[gg] = Some((a, f, sigma.inverse()));
            search(ideal, odd_perms, even_perms, pairing, seen, found);
            pairing[gf] = None;
            pairing[gg] = None;
        }
    }
}

fn finish(
    ideal: &[Option<usize>],
    pairing: &[Option<(usize, usize, Perm)>],
    even_perms: &[Perm],
    seen: &mut BTreeSet<Vec<u8>>,
    found: &mut Vec<(Vec<u8>, Triangulation)>,
) {
    let t = ideal.len();
    let mut tets = Vec::with_capacity(t);
    for a in 0..t {
        let mut glue = [(0usize, Perm::identity()); 4];
        for f in 0..4 {
            let (b, _, sigma) = pairing[4 * a + f].expect("complete pairing");
            glue[f] = (b, sigma);
        }
        tets.push(TetSpec {
            ideal: ideal[a],
            glue,
        });
    }
    let Ok(tri) = Triangulation::from_tets(tets.clone()) else {
        return;
    };
    let key = canonical_key(&tets, even_perms);
    if seen.insert(key.clone()) {
        found.push((key, tri));
    }
}

/// Canonical form over tetrahedron renamings and even vertex relabelings.
///
/// For each start (tetrahedron, even relabeling) a traversal forces every
/// other label: tetrahedra are numbered in discovery order, and when a
/// face leads to an unlabeled tetrahedron its relabeling is chosen so the
/// connecting permutation becomes the least odd permutation.  The key is
/// the least of the resulting encodings; isomorphic gluings share the
/// same set of encodings, hence the same key.
fn canonical_key(tets: &[TetSpec], even_perms: &[Perm]) -> Vec<u8> {
    let t = tets.len();
    let least_odd = Perm([0, 1, 3, 2]);
    let mut best: Option<Vec<u8>> = None;
    for start in 0..t {
        for rho0 in even_perms {
            // new label -> (old tet, relabeling old->new vertices)
            let mut order: Vec<(usize, Perm)> = vec![(start, *rho0)];
            let mut new_label = vec![usize::MAX; t];
            new_label[start] = 0;
            let mut enc: Vec<u8> = Vec::with_capacity(9 * t);
            let mut i = 0;
            while i < order.len() {
                let (a, rho_a) = order[i];
                enc.push(tets[a].ideal.map_or(4, |v| rho_a.apply(v)) as u8);
                let rho_a_inv = rho_a.inverse();
                for new_face in 0..4 {
                    let f = rho_a_inv.apply(new_face);
                    let (b, sigma) = &tets[a].glue[f];
                    if new_label[*b] == usize::MAX {
                        new_label[*b] = order.len();
                        // rho_b makes the transformed gluing least odd.
                        let rho_b = least_odd.compose(&rho_a.compose(&sigma.inverse()));
                        debug_assert!(!rho_b.is_odd());
                        order.push((*b, rho_b));
                    }
                    let rho_b = order[new_label[*b]].1;
                    let sigma_new = rho_b.compose(&sigma.compose(&rho_a_inv));
                    enc.push(new_label[*b] as u8);
                    enc.push(perm_code(&sigma_new));
                }
                i += 1;
            }
            if best.as_ref().map_or(true, |b| enc < *b) {
                best = Some(enc);
            }
        }
    }
    best.expect("at least one start")
}

fn perm_code(p: &Perm) -> u8 {
    p.0[0] * 36 + p.0[1] * 9 + p.0[2] * 3 + p.0[3]
}
