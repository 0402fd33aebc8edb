//! Trainable (3,2) rational activation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Added to `|q(x)|` so the activation has no poles.
pub const DENOM_GUARD: f64 = 1e-8;

/// `R(x) = p(x) / (|q(x)| + DENOM_GUARD)` with `p` cubic and `q` quadratic,
/// coefficients in ascending degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalCoeffs {
    pub p: [f64; 4],
    pub q: [f64; 3],
}

/// Value of a rational and its partial derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct RationalEval {
    pub value: f64,
    pub dx: f64,
    pub dp: [f64; 4],
    pub dq: [f64; 3],
}

impl RationalCoeffs {
    pub const N_COEFFS: usize = 7;

    pub fn identity() -> Self {
        Self {
            p: [0.0, 1.0, 0.0, 0.0],
            q: [1.0, 0.0, 0.0],
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let [p0, p1, p2, p3] = self.p;
        let [q0, q1, q2] = self.q;
        let num = ((p3 * x + p2) * x + p1) * x + p0;
        let den = (q2 * x + q1) * x + q0;
        num / (den.abs() + DENOM_GUARD)
    }

    /// Value plus derivatives with respect to `x` and every coefficient.
    #[inline]
    pub fn eval_grad(&self, x: f64) -> RationalEval {
        let [p0, p1, p2, p3] = self.p;
        let [q0, q1, q2] = self.q;
        let num = ((p3 * x + p2) * x + p1) * x + p0;
        let dnum = (3.0 * p3 * x + 2.0 * p2) * x + p1;
        let den = (q2 * x + q1) * x + q0;
        let dden = 2.0 * q2 * x + q1;
        let sign = if den < 0.0 { -1.0 } else { 1.0 };
        let d = den.abs() + DENOM_GUARD;
        let inv = 1.0 / d;
        let value = num * inv;
        // d value / d den, through the absolute value
        let dv_dden = -value * inv * sign;
        let x2 = x * x;
        RationalEval {
            value,
            dx: dnum * inv + dv_dden * dden,
            dp: [inv, x * inv, x2 * inv, x2 * x * inv],
            dq: [dv_dden, dv_dden * x, dv_dden * x2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(&self.q).all(|v| v.is_finite())
    }
}

/// Result of fitting a rational to ReLU.
#[derive(Debug, Clone, Copy)]
pub struct ReluFit {
    pub coeffs: RationalCoeffs,
    /// `max |R(x) - relu(x)|` over the fit grid.
    pub max_error: f64,
    pub points: usize,
}

const FIT_RANGE: f64 = 3.0;
const FIT_GRIDS: [usize; 3] = [1001, 501, 251];

/// (3,2) rational approximation of ReLU on [-3, 3], computed once per
/// process. A Sanathanan–Koerner least-squares start is refined by Lawson's
/// reweighted least squares, which drives the fit towards the minimax
/// approximant (plain least squares leaves R(0) above 0.12).
pub fn fit_relu_rational() -> &'static ReluFit {
    static FIT: OnceLock<ReluFit> = OnceLock::new();
    FIT.get_or_init(|| {
        FIT_GRIDS
            .iter()
            .find_map(|&n| fit_relu_on(n).map(|f| polish(f, n)))
            .expect("ReLU rational fit failed on every grid")
    })
}

/// Sanathanan–Koerner iteration: repeatedly solve the linearized problem
/// `min sum ((p(x) - y q(x)) / q_prev(x))^2` with `q0 = 1`.
fn fit_relu_on(n: usize) -> Option<ReluFit> {
    let (xs, ys) = fit_grid(n);

    let mut q = [1.0, 0.0, 0.0];
    let mut best: Option<ReluFit> = None;
    for _ in 0..30 {
        let mut ata = [[0.0; 6]; 6];
        let mut atb = [0.0; 6];
        for (&x, &y) in xs.iter().zip(&ys) {
            let qp = (q[2] * x + q[1]) * x + q[0];
            if qp.abs() < 1e-12 {
                return None;
            }
            let w = 1.0 / qp;
            // unknowns: p0..p3, q1, q2
            let row = [w, w * x, w * x * x, w * x * x * x, -w * y * x, -w * y * x * x];
            let rhs = w * y;
            for i in 0..6 {
                for j in 0..6 {
                    ata[i][j] += row[i] * row[j];
                }
                atb[i] += row[i] * rhs;
            }
        }
        let sol = solve_dense(ata, atb)?;
        q = [1.0, sol[4], sol[5]];
        let coeffs = RationalCoeffs {
            p: [sol[0], sol[1], sol[2], sol[3]],
            q,
        };
        if !coeffs.is_finite() {
            return None;
        }
        let max_error = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (coeffs.eval(x) - y).abs())
            .fold(0.0, f64::max);
        if best.is_none_or(|b| max_error < b.max_error) {
            best = Some(ReluFit {
                coeffs,
                max_error,
                points: n,
            });
        }
    }
    best
}

fn fit_grid(n: usize) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..n)
        .map(|i| -FIT_RANGE + 2.0 * FIT_RANGE * i as f64 / (n - 1) as f64)
        .collect();
    let ys = xs.iter().map(|&x| x.max(0.0)).collect();
    (xs, ys)
}

fn sq_error(c: &RationalCoeffs, xs: &[f64], ys: &[f64], ws: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(ws)
        .map(|((&x, &y), w)| w * (c.eval(x) - y).powi(2))
        .sum()
}

fn max_error(c: &RationalCoeffs, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (c.eval(x) - y).abs())
        .fold(0.0, f64::max)
}

/// Lawson iteration: weighted least squares with weights multiplied by the
/// current absolute residual after each pass. Keeps the iterate with the
/// smallest maximum error.
fn polish(start: ReluFit, n: usize) -> ReluFit {
    let (xs, ys) = fit_grid(n);
    let mut ws = vec![1.0 / n as f64; n];
    let mut c = start.coeffs;
    let mut best = start;
    for _ in 0..LAWSON_PASSES {
        c = weighted_lm(c, &xs, &ys, &ws);
        let e = max_error(&c, &xs, &ys);
        if e < best.max_error {
            best = ReluFit {
                coeffs: c,
                max_error: e,
                points: n,
            };
        }
        for ((w, &x), &y) in ws.iter_mut().zip(&xs).zip(&ys) {
            *w *= (c.eval(x) - y).abs() + 1e-12;
        }
        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= total);
    }
    best
}

const LAWSON_PASSES: usize = 60;

/// Levenberg–Marquardt on `sum w (R(x) - relu(x))^2` over `p0..p3, q1, q2`
/// with `q0 = 1` held fixed.
fn weighted_lm(start: RationalCoeffs, xs: &[f64], ys: &[f64], ws: &[f64]) -> RationalCoeffs {
    let mut c = start;
    let mut err = sq_error(&c, xs, ys, ws);
    let mut lambda = 1e-3;
    for _ in 0..100 {
        let mut jtj = [[0.0; 6]; 6];
        let mut jtr = [0.0; 6];
        for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
            let g = c.eval_grad(x);
            let j = [g.dp[0], g.dp[1], g.dp[2], g.dp[3], g.dq[1], g.dq[2]];
            let r = g.value - y;
            for a in 0..6 {
                for b in 0..6 {
                    jtj[a][b] += w * j[a] * j[b];
                }
                jtr[a] += w * j[a] * r;
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-12);
            }
            let Some(step) = solve_dense(m, jtr.map(|v| -v)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = c;
            for k in 0..4 {
                trial.p[k] += step[k];
            }
            trial.q[1] += step[4];
            trial.q[2] += step[5];
            let e = sq_error(&trial, xs, ys, ws);
            if trial.is_finite() && e < err {
                let rel = (err - e) / err;
                c = trial;
                err = e;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    c
}

/// Gaussian elimination with partial pivoting; `None` when the system is
/// numerically singular.
fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            for c in col..N {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for r in (0..N).rev() {
        let s: f64 = (r + 1..N).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
