//! Dilation holonomy of the similarity structure on cusp links.
//!
//! An angle assignment turns every link triangle into a Euclidean
//! similarity class with one complex corner modulus per corner.  A closed
//! curve through the link picks up, at each vertex it passes, the product
//! of the corner moduli in the fan between its incoming and outgoing
//! darts, times minus one for the direction reversal of the reference
//! ray; the total is the derivative of the holonomy of the curve.  The
//! logs of the two peripheral holonomies are the deformation coordinates
//! of the cusp.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{triangle_modulus, AnglePoint};
use crate::triangulation::{CuspLink, EdgePath, LinkCorner, Triangulation};

/// Corner moduli between two darts of one vertex rotation: the corners at
/// slots `slot_in`, `slot_in`+1, ..., up to but excluding `slot_out`,
/// counterclockwise.
fn fan<'a>(link: &'a CuspLink, vertex: usize, slot_in: usize, slot_out: usize) -> Vec<&'a LinkCorner> {
    let rotation = &link.vertices[vertex].rotation;
    let m = rotation.len();
    let mut out = Vec::new();
    let mut j = slot_in;
    loop {
        out.push(&rotation[j].corner);
        j = (j + 1) % m;
        if j == slot_out {
            break;
        }
    }
    out
}

fn corner_modulus(a: &AnglePoint, link: &CuspLink, corner: &LinkCorner) -> Result<Complex64> {
    let (tet, ideal) = link.triangles[corner.triangle];
    triangle_modulus(a.tet_angles(tet), ideal, corner.head_vertex)
}

/// Derivative of the holonomy of a closed embedded curve in a cusp link.
pub fn loop_holonomy(a: &AnglePoint, link: &CuspLink, path: &EdgePath) -> Result<Complex64> {
    let junctions = link.junctions(path)?;
    let mut h = if junctions.len() % 2 == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(-1.0, 0.0)
    };
    for junction in &junctions {
        for corner in fan(link, junction.vertex, junction.slot_in, junction.slot_out) {
            h *= corner_modulus(a, link, corner)?;
        }
    }
    Ok(h)
}

/// Product of every corner modulus around one link vertex: the full-turn
/// holonomy, equal to one exactly when the structure is consistent
/// around the corresponding edge.
pub fn full_turn(a: &AnglePoint, link: &CuspLink, vertex: usize) -> Result<Complex64> {
    let mut h = Complex64::new(1.0, 0.0);
    for slot in &link.vertices[vertex].rotation {
        h *= corner_modulus(a, link, &slot.corner)?;
    }
    Ok(h)
}

/// Peripheral holonomy data of one cusp.
#[derive(Clone, Copy, Debug)]
pub struct CuspHolonomy {
    /// Holonomy derivatives of the two basis curves.
    pub a_mu: Complex64,
    pub a_lambda: Complex64,
    /// Principal logs of the above.
    pub u: Complex64,
    pub v: Complex64,
}

/// Holonomy coordinates (u, v) of one cusp.  The principal log is only
/// trusted while the holonomies stay in the right half plane; beyond
/// that the branch is ambiguous and an error is returned.
pub fn cusp_holonomy(tri: &Triangulation, a: &AnglePoint, cusp: usize) -> Result<CuspHolonomy> {
    let link = &tri.cusps()[cusp];
    let a_mu = loop_holonomy(a, link, &link.mu)?;
    let a_lambda = loop_holonomy(a, link, &link.lambda)?;
    for (name, val) in [("mu", a_mu), ("lambda", a_lambda)] {
        if val.re <= 0.0 || !val.is_finite() {
            return Err(Error::Branch {
                cusp,
                msg: format!("holonomy of {name} is {val} outside the principal branch region"),
            });
        }
    }
    Ok(CuspHolonomy {
        a_mu,
        a_lambda,
        u: a_mu.ln(),
        v: a_lambda.ln(),
    })
}

pub fn all_cusp_holonomies(tri: &Triangulation, a: &AnglePoint) -> Result<Vec<CuspHolonomy>> {
    (0..tri.cusps().len()).map(|c| cusp_holonomy(tri, a, c)).collect()
}

/// The branch of log `a` nearest a reference value: principal log
/// shifted by the multiple of 2 pi i that lands closest to `reference`.
/// This is how the holonomy coordinates are continued along a
/// deformation path whose dilations wind around the origin.
pub fn log_near(a: Complex64, reference: Complex64) -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let principal = a.ln();
    let turns = ((reference.im - principal.im) / two_pi).round();
    Complex64::new(principal.re, principal.im + turns * two_pi)
}

/// Holonomy coordinates of one cusp with the log branches chosen by
/// continuity against reference values from an earlier point of the same
/// path, instead of the principal-branch restriction.
pub fn cusp_holonomy_near(
    tri: &Triangulation,
    a: &AnglePoint,
    cusp: usize,
    reference: (Complex64, Complex64),
) -> Result<CuspHolonomy> {
    let link = &tri.cusps()[cusp];
    let a_mu = loop_holonomy(a, link, &link.mu)?;
    let a_lambda = loop_holonomy(a, link, &link.lambda)?;
    for (name, val) in [("mu", a_mu), ("lambda", a_lambda)] {
        if !val.is_finite() || val.norm() == 0.0 {
            return Err(Error::Branch {
                cusp,
                msg: format!("holonomy of {name} is {val}; the log branch is lost"),
            });
        }
    }
    Ok(CuspHolonomy {
        a_mu,
        a_lambda,
        u: log_near(a_mu, reference.0),
        v: log_near(a_lambda, reference.1),
    })
}
