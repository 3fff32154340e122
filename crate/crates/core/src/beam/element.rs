//! Corotational Euler–Bernoulli frame element.
//!
//! The element's rigid motion is carried by its chord; what remains is a
//! small-strain linear element in the chord frame with one axial stretch and
//! two end rotations. Internal force and tangent are the exact first and
//! second derivatives of the element strain energy.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Element response in global element coordinates (u_i, v_i, θ_i, u_j, v_j, θ_j).
#[derive(Debug, Clone)]
pub struct ElementResponse {
    pub force: [f64; 6],
    pub tangent: [[f64; 6]; 6],
    pub energy: f64,
    pub axial: f64,
    pub moments: [f64; 2],
}

#[inline]
fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r > PI {
        r -= TAU;
    } else if r <= -PI {
        r += TAU;
    }
    r
}

pub(crate) struct Local {
    l: f64,
    l0: f64,
    c: f64,
    s: f64,
    stretch: f64,
    theta: [f64; 2],
}

#[inline]
pub(crate) fn local_deformation(id: usize, xi: Point, xj: Point, d: &[f64; 6]) -> Result<Local> {
    let dx0 = xj[0] - xi[0];
    let dy0 = xj[1] - xi[1];
    let l0 = dx0.hypot(dy0);
    let du = d[3] - d[0];
    let dv = d[4] - d[1];
    let dx = dx0 + du;
    let dy = dy0 + dv;
    let l = dx.hypot(dy);
    if !(l >= 1e-9) {
        return Err(Error::SingularElement { element: id, length: l });
    }
    // l - l0 without cancellation
    let stretch = ((2.0 * dx0 + du) * du + (2.0 * dy0 + dv) * dv) / (l + l0);
    let (c, s) = (dx / l, dy / l);
    let (c0, s0) = (dx0 / l0, dy0 / l0);
    let rigid = (c0 * s - s0 * c).atan2(c0 * c + s0 * s);
    Ok(Local {
        l,
        l0,
        c,
        s,
        stretch,
        theta: [wrap_angle(d[2] - rigid), wrap_angle(d[5] - rigid)],
    })
}

/// Strain energy only.
pub fn element_energy(id: usize, xi: Point, xj: Point, ea: f64, ei: f64, d: &[f64; 6]) -> Result<f64> {
    let loc = local_deformation(id, xi, xj, d)?;
    let [t1, t2] = loc.theta;
    Ok(0.5 * ea * loc.stretch * loc.stretch / loc.l0
        + 2.0 * ei / loc.l0 * (t1 * t1 + t1 * t2 + t2 * t2))
}

/// Internal force and consistent tangent of one element.
///
/// `xi`, `xj` are the rest positions of the two nodes, `d` the nodal
/// displacements. Fails if the deformed chord collapses below 1e-9 mm.
pub fn element_force_and_tangent(
    id: usize,
    xi: Point,
    xj: Point,
    ea: f64,
    ei: f64,
    d: &[f64; 6],
) -> Result<ElementResponse> {
    let loc = local_deformation(id, xi, xj, d)?;
    let Local {
        l,
        l0,
        c,
        s,
        stretch,
        theta: [t1, t2],
    } = loc;

    let n = ea * stretch / l0;
    let k = 2.0 * ei / l0;
    let m1 = k * (2.0 * t1 + t2);
    let m2 = k * (t1 + 2.0 * t2);
    let energy = 0.5 * ea * stretch * stretch / l0 + k * (t1 * t1 + t1 * t2 + t2 * t2);

    // dl/dd and l·dβ/dd
    let r = [-c, -s, 0.0, c, s, 0.0];
    let z = [s, -c, 0.0, -s, c, 0.0];
    let mut b1 = [0.0; 6];
    let mut b2 = [0.0; 6];
    for a in 0..6 {
        b1[a] = -z[a] / l;
        b2[a] = -z[a] / l;
    }
    b1[2] += 1.0;
    b2[5] += 1.0;

    let mut force = [0.0; 6];
    for a in 0..6 {
        force[a] = n * r[a] + m1 * b1[a] + m2 * b2[a];
    }

    let ka = ea / l0;
    let gz = n / l;
    let gm = (m1 + m2) / (l * l);
    let mut tangent = [[0.0; 6]; 6];
    for a in 0..6 {
        for b in 0..6 {
            tangent[a][b] = ka * r[a] * r[b]
                + k * (2.0 * b1[a] * b1[b] + b1[a] * b2[b] + b2[a] * b1[b] + 2.0 * b2[a] * b2[b])
                + gz * z[a] * z[b]
                + gm * (r[a] * z[b] + z[a] * r[b]);
        }
    }
    Ok(ElementResponse {
        force,
        tangent,
        energy,
        axial: n,
        moments: [m1, m2],
    })
}
