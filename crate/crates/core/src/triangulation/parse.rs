//! Text format for triangulations.
//!
//! ```text
//! # comment
//! format 1
//! tets 2
//! tet 0 ideal 0 0 0 1
//! tet 0 glue 0 1 1023
//! ...
//! cusp 0 mu 1.2+ 0.3-
//! cusp 0 lambda 1.2+
//! angle 0 01 5.2359877559829882e-1
//! ```
//!
//! Each tetrahedron needs one `ideal` record (four 0/1 flags, at most one
//! set) and four `glue` records, one per face: `tet I glue F T PERM` glues
//! face F of tet I to tet T by the odd permutation PERM (images of
//! 0,1,2,3).  Optional `cusp` records override the peripheral basis of a
//! cusp with closed embedded curves given as oriented link sides.
//! Optional `angle` records assign dihedral angles; when present they
//! must cover every edge of every tetrahedron.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{edge_index, AnglePoint, EDGE_VERTS};

use super::link::{path_from_tokens, path_tokens};
use super::{Perm, TetSpec, Triangulation};

/// Parsed file: the triangulation plus optional initial angles.
#[derive(Clone, Debug)]
pub struct ParsedFile {
    pub triangulation: Triangulation,
    pub init_angles: Option<AnglePoint>,
}

struct RawTet {
    ideal: Option<[bool; 4]>,
    glue: [Option<(usize, Perm)>; 4],
}

pub fn parse(text: &str) -> Result<ParsedFile> {
    let mut format_seen = false;
    let mut ntets: Option<usize> = None;
    let mut raw: Vec<RawTet> = Vec::new();
    let mut curves: BTreeMap<usize, (Option<Vec<String>>, Option<Vec<String>>)> = BTreeMap::new();
    let mut angles: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if !format_seen {
            if tokens != ["format", "1"] {
                return Err(err("first line must be: format 1".into()));
            }
            format_seen = true;
            continue;
        }
        match tokens[0] {
            "tets" => {
                if ntets.is_some() {
                    return Err(err("repeated tets line".into()));
                }
                let n: usize = tokens
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("tets needs a count".into()))?;
                if tokens.len() != 2 || n == 0 {
                    return Err(err("tets needs one positive count".into()));
                }
                ntets = Some(n);
                raw = (0..n)
                    .map(|_| RawTet {
                        ideal: None,
                        glue: [None; 4],
                    })
                    .collect();
            }
            "tet" => {
                let n = ntets.ok_or_else(|| err("tet record before tets line".into()))?;
                let i: usize = tokens
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .filter(|&i| i < n)
                    .ok_or_else(|| err(format!("tet index must be below {n}")))?;
                match tokens.get(2) {
                    Some(&"ideal") => {
                        if tokens.len() != 7 {
                            return Err(err("tet ideal needs four 0/1 flags".into()));
                        }
                        let mut flags = [false; 4];
                        for v in 0..4 {
                            flags[v] = match tokens[3 + v] {
                                "0" => false,
                                "1" => true,
                                other => return Err(err(format!("ideal flag must be 0 or 1, got {other}"))),
                            };
                        }
                        if flags.iter().filter(|&&b| b).count() > 1 {
                            return Err(err(format!("tet {i} has more than one ideal vertex")));
                        }
                        if raw[i].ideal.replace(flags).is_some() {
                            return Err(err(format!("repeated ideal record for tet {i}")));
                        }
                    }
                    Some(&"glue") => {
                        if tokens.len() != 6 {
                            return Err(err("tet glue needs: face, target tet, permutation".into()));
                        }
                        let f: usize = tokens[3]
                            .parse()
                            .ok()
                            .filter(|&f| f < 4)
                            .ok_or_else(|| err("face must be 0..3".into()))?;
                        let t: usize = tokens[4]
                            .parse()
                            .ok()
                            .filter(|&t| t < n)
                            .ok_or_else(|| err(format!("target tet must be below {n}")))?;
                        let perm = Perm::from_digits(tokens[5])
                            .map_err(|e| err(format!("bad permutation: {e}")))?;
                        if raw[i].glue[f].replace((t, perm)).is_some() {
                            return Err(err(format!("repeated gluing for face {f} of tet {i}")));
                        }
                    }
                    _ => return Err(err("tet record must be ideal or glue".into())),
                }
            }
            "cusp" => {
                if tokens.len() < 4 {
                    return Err(err("cusp record needs: index, mu|lambda, sides".into()));
                }
                let k: usize = tokens[1]
                    .parse()
                    .map_err(|_| err("bad cusp index".into()))?;
                let steps: Vec<String> = tokens[3..].iter().map(|s| s.to_string()).collect();
                let entry = curves.entry(k).or_insert((None, None));
                let slot = match tokens[2] {
                    "mu" => &mut entry.0,
                    "lambda" => &mut entry.1,
                    other => return Err(err(format!("cusp curve must be mu or lambda, got {other}"))),
                };
                if slot.replace(steps).is_some() {
                    return Err(err(format!("repeated {} record for cusp {k}", tokens[2])));
                }
            }
            "angle" => {
                let n = ntets.ok_or_else(|| err("angle record before tets line".into()))?;
                if tokens.len() != 4 {
                    return Err(err("angle record needs: tet, edge, value".into()));
                }
                let t: usize = tokens[1]
                    .parse()
                    .ok()
                    .filter(|&t| t < n)
                    .ok_or_else(|| err(format!("tet index must be below {n}")))?;
                let ed = tokens[2].as_bytes();
                if ed.len() != 2 || !ed[0].is_ascii_digit() || !ed[1].is_ascii_digit() {
                    return Err(err("edge must be two vertex digits, e.g. 01".into()));
                }
                let (a, b) = ((ed[0] - b'0') as usize, (ed[1] - b'0') as usize);
                if a > 3 || b > 3 || a == b {
                    return Err(err(format!("bad edge {}", tokens[2])));
                }
                let value: f64 = tokens[3]
                    .parse()
                    .map_err(|_| err("bad angle value".into()))?;
                if angles.insert((t, edge_index(a, b)), value).is_some() {
                    return Err(err(format!("repeated angle for edge {} of tet {t}", tokens[2])));
                }
            }
            other => return Err(err(format!("unknown record {other}"))),
        }
    }

    let n = ntets.ok_or_else(|| Error::Parse {
        line: text.lines().count(),
        msg: "missing tets line".into(),
    })?;
    let mut tets = Vec::with_capacity(n);
    for (i, r) in raw.into_iter().enumerate() {
        let flags = r
            .ideal
            .ok_or_else(|| Error::invariant(format!("tet {i} has no ideal record")))?;
        let mut glue = [(0usize, Perm::identity()); 4];
        for f in 0..4 {
            glue[f] = r.glue[f]
                .ok_or_else(|| Error::invariant(format!("face {f} of tet {i} is not glued")))?;
        }
        tets.push(TetSpec {
            ideal: flags.iter().position(|&b| b),
            glue,
        });
    }
    let mut tri = Triangulation::from_tets(tets)?;

    for (k, (mu, lambda)) in curves {
        let (mu, lambda) = match (mu, lambda) {
            (Some(m), Some(l)) => (m, l),
            _ => {
                return Err(Error::invariant(format!(
                    "cusp {k} needs both mu and lambda records"
                )))
            }
        };
        if k >= tri.cusps().len() {
            return Err(Error::invariant(format!("no cusp {k}")));
        }
        let link = &tri.cusps()[k];
        let mu_refs: Vec<&str> = mu.iter().map(|s| s.as_str()).collect();
        let lambda_refs: Vec<&str> = lambda.iter().map(|s| s.as_str()).collect();
        let mu_path = path_from_tokens(link, &mu_refs)?;
        let lambda_path = path_from_tokens(link, &lambda_refs)?;
        tri = tri.with_peripheral_basis(k, mu_path, lambda_path)?;
    }

    let init_angles = if angles.is_empty() {
        None
    } else {
        let mut values = vec![0.0; 6 * n];
        for t in 0..n {
            for e in 0..6 {
                let (a, b) = EDGE_VERTS[e];
                let v = angles.get(&(t, e)).ok_or_else(|| {
                    Error::invariant(format!("angle records present but edge {a}{b} of tet {t} is missing"))
                })?;
                values[6 * t + e] = *v;
            }
        }
        Some(AnglePoint::new(values))
    };

    Ok(ParsedFile {
        triangulation: tri,
        init_angles,
    })
}

pub(crate) fn serialize_tets(tets: &[TetSpec]) -> String {
    let mut out = String::new();
    out.push_str("format 1\n");
    out.push_str(&format!("tets {}\n", tets.len()));
    for (i, spec) in tets.iter().enumerate() {
        let flags: Vec<String> = (0..4)
            .map(|v| if spec.ideal == Some(v) { "1".into() } else { "0".into() })
            .collect();
        out.push_str(&format!("tet {i} ideal {}\n", flags.join(" ")));
        for f in 0..4 {
            let (t, perm) = &spec.glue[f];
            out.push_str(&format!("tet {i} glue {f} {t} {}\n", perm.digits()));
        }
    }
    out
}

pub(crate) fn serialize(tri: &Triangulation) -> String {
    let mut out = serialize_tets(tri.tets());
    for link in tri.cusps() {
        out.push_str(&format!("cusp {} mu {}\n", link.id, path_tokens(link, &link.mu)));
        out.push_str(&format!(
            "cusp {} lambda {}\n",
            link.id,
            path_tokens(link, &link.lambda)
        ));
    }
    out
}

/// Full text form with angle records appended.
pub fn serialize_with_angles(tri: &Triangulation, angles: &AnglePoint) -> String {
    let mut out = serialize(tri);
    for t in 0..tri.tets().len() {
        for e in 0..6 {
            let (a, b) = EDGE_VERTS[e];
            out.push_str(&format!("angle {t} {a}{b} {:.16e}\n", angles.get(t, e)));
        }
    }
    out
}
