//! Classical face reconstructions.
//!
//! Every routine computes the minus-side value `u^-_{i+1/2}` from a
//! left-biased stencil. Plus-side values are obtained by reversing the
//! stencil (see [`reconstruct_plus`]); there are no separate coefficient
//! tables for the right-biased side.

use serde::{Deserialize, Serialize};

/// Default regularization for the WENO smoothness weights.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Ideal WENO3 weights `(d0, d1)`.
pub const IDEAL3: Weights2 = Weights2 {
    w0: 1.0 / 3.0,
    w1: 2.0 / 3.0,
};

/// Ideal WENO5 weights.
pub const IDEAL5: [f64; 3] = [0.1, 0.6, 0.3];

/// Cell averages `(u_{i-1}, u_i, u_{i+1})`.
pub type Stencil3 = [f64; 3];

/// Cell averages `(u_{i-2}, ..., u_{i+2})`.
pub type Stencil5 = [f64; 5];

/// Convex weights of the two WENO3 sub-stencils.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights2 {
    pub w0: f64,
    pub w1: f64,
}

impl Weights2 {
    pub fn new(w0: f64, w1: f64) -> Self {
        Self { w0, w1 }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.w0, self.w1]
    }

    pub fn is_convex(self, tol: f64) -> bool {
        self.w0 >= 0.0 && self.w1 >= 0.0 && (self.w0 + self.w1 - 1.0).abs() <= tol
    }
}

/// Second-order sub-stencil interpolants `(u^(0), u^(1))`.
#[inline]
pub fn interpolants3(s: Stencil3) -> (f64, f64) {
    (0.5 * (3.0 * s[1] - s[0]), 0.5 * (s[1] + s[2]))
}

/// Smoothness indicators `(beta0, beta1)`.
#[inline]
pub fn smoothness3(s: Stencil3) -> (f64, f64) {
    let b0 = s[1] - s[0];
    let b1 = s[1] - s[2];
    (b0 * b0, b1 * b1)
}

#[inline]
fn normalize(a0: f64, a1: f64) -> Weights2 {
    let sum = a0 + a1;
    Weights2::new(a0 / sum, a1 / sum)
}

/// Jiang–Shu WENO3 weights.
pub fn weno3_js_weights(s: Stencil3, eps: f64) -> Weights2 {
    let (b0, b1) = smoothness3(s);
    let a0 = IDEAL3.w0 / ((b0 + eps) * (b0 + eps));
    let a1 = IDEAL3.w1 / ((b1 + eps) * (b1 + eps));
    normalize(a0, a1)
}

/// WENO3-Z weights with the global indicator `tau = |beta0 - beta1|`.
pub fn weno3_z_weights(s: Stencil3, eps: f64) -> Weights2 {
    let (b0, b1) = smoothness3(s);
    let tau = (b0 - b1).abs();
    let a0 = IDEAL3.w0 * (1.0 + tau / (b0 + eps));
    let a1 = IDEAL3.w1 * (1.0 + tau / (b1 + eps));
    normalize(a0, a1)
}

/// Convex combination of the two interpolants.
#[inline]
pub fn reconstruct_minus(s: Stencil3, w: Weights2) -> f64 {
    let (u0, u1) = interpolants3(s);
    w.w0 * u0 + w.w1 * u1
}

/// Plus-side value at the face `i+1/2` from `(u_i, u_{i+1}, u_{i+2})`,
/// obtained by mirroring a minus-side rule.
#[inline]
pub fn reconstruct_plus<F: Fn(Stencil3) -> f64>(s: Stencil3, minus: F) -> f64 {
    minus([s[2], s[1], s[0]])
}

pub fn weno3_js(s: Stencil3, eps: f64) -> f64 {
    reconstruct_minus(s, weno3_js_weights(s, eps))
}

pub fn weno3_z(s: Stencil3, eps: f64) -> f64 {
    reconstruct_minus(s, weno3_z_weights(s, eps))
}

/// Linear third-order upwind reconstruction (ideal weights everywhere).
pub fn ideal3(s: Stencil3) -> f64 {
    reconstruct_minus(s, IDEAL3)
}

/// QUICK in cell-average upwind form.
pub fn quick(s: Stencil3) -> f64 {
    (3.0 * s[2] + 6.0 * s[1] - s[0]) / 8.0
}

/// Classical fifth-order Jiang–Shu reconstruction.
pub fn weno5_js(s: Stencil5, eps: f64) -> f64 {
    let [um2, um1, u0, up1, up2] = s;
    let q0 = (2.0 * um2 - 7.0 * um1 + 11.0 * u0) / 6.0;
    let q1 = (-um1 + 5.0 * u0 + 2.0 * up1) / 6.0;
    let q2 = (2.0 * u0 + 5.0 * up1 - up2) / 6.0;

    let sq = |x: f64| x * x;
    let b0 = 13.0 / 12.0 * sq(um2 - 2.0 * um1 + u0) + 0.25 * sq(um2 - 4.0 * um1 + 3.0 * u0);
    let b1 = 13.0 / 12.0 * sq(um1 - 2.0 * u0 + up1) + 0.25 * sq(um1 - up1);
    let b2 = 13.0 / 12.0 * sq(u0 - 2.0 * up1 + up2) + 0.25 * sq(3.0 * u0 - 4.0 * up1 + up2);

    let a0 = IDEAL5[0] / sq(b0 + eps);
    let a1 = IDEAL5[1] / sq(b1 + eps);
    let a2 = IDEAL5[2] / sq(b2 + eps);
    (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)
}
