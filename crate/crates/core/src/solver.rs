//! 1D finite-volume method of lines for linear advection and inviscid
//! Burgers, with exact reference solutions.
//!
//! The state is the vector of cell averages. Face values come from a
//! [`Scheme`], fluxes are upwind (advection) or local Lax–Friedrichs
//! (Burgers), and time stepping is Shu–Osher SSP-RK3.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::Scheme;

pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_T: f64 = 5.0;
pub const MIN_NX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    /// Ghost cells hold the given constants.
    Dirichlet { left: f64, right: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub a: f64,
    pub b: f64,
    pub bc: Boundary,
}

impl GridSpec {
    pub fn new(nx: usize, a: f64, b: f64, bc: Boundary) -> Result<Self> {
        if nx < MIN_NX {
            return Err(Error::Config(format!("nx = {nx} is below the minimum of {MIN_NX}")));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("invalid domain [{a}, {b}]")));
        }
        Ok(Self { nx, a, b, bc })
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.nx as f64
    }

    /// Left edge of cell `i` (`i = nx` gives the right boundary).
    pub fn edge(&self, i: usize) -> f64 {
        self.a + (self.b - self.a) * i as f64 / self.nx as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|i| 0.5 * (self.edge(i) + self.edge(i + 1)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    /// `u_t + u_x = 0`.
    Advection,
    /// `u_t + (u^2/2)_x = 0`.
    Burgers,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Initial {
    /// `cos(2 pi x)`.
    Cosine,
    /// Two opposed logistic fronts: `s(k(x - x1)) + s(-k(x - x2))`.
    Sigmoid { k: f64, x1: f64, x2: f64 },
    /// `left` for `x < 0`, `right` otherwise.
    Riemann { left: f64, right: f64 },
}

impl Initial {
    pub const SIGMOID: Initial = Initial::Sigmoid {
        k: 100.0,
        x1: 0.05,
        x2: 0.2,
    };

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Initial::Cosine => (2.0 * std::f64::consts::PI * x).cos(),
            Initial::Sigmoid { k, x1, x2 } => logistic(k * (x - x1)) + logistic(-k * (x - x2)),
            Initial::Riemann { left, right } => {
                if x < 0.0 {
                    left
                } else {
                    right
                }
            }
        }
    }

    /// Closed-form antiderivative, continuous in `x`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match *self {
            Initial::Cosine => {
                let w = 2.0 * std::f64::consts::PI;
                (w * x).sin() / w
            }
            Initial::Sigmoid { k, x1, x2 } => {
                softplus(k * (x - x1)) / k + x - softplus(k * (x - x2)) / k
            }
            Initial::Riemann { left, right } => {
                if x < 0.0 {
                    left * x
                } else {
                    right * x
                }
            }
        }
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub kind: Equation,
    pub init: Initial,
    pub t_final: f64,
    pub cfl: f64,
}

pub const PROBLEM_NAMES: &str =
    "advection-cosine, advection-sigmoid, burgers-shock, burgers-transonic, burgers-rarefaction";

impl Problem {
    pub fn advection(init: Initial) -> Self {
        Self {
            kind: Equation::Advection,
            init,
            t_final: DEFAULT_T,
            cfl: DEFAULT_CFL,
        }
    }

    pub fn burgers(left: f64, right: f64) -> Self {
        Self {
            kind: Equation::Burgers,
            init: Initial::Riemann { left, right },
            t_final: DEFAULT_T,
            cfl: DEFAULT_CFL,
        }
    }

    /// Named benchmark problems with the default horizon and CFL number.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "advection-cosine" => Self::advection(Initial::Cosine),
            "advection-sigmoid" => Self::advection(Initial::SIGMOID),
            "burgers-shock" => Self::burgers(1.0, 0.0),
            "burgers-transonic" => Self::burgers(-1.0, 1.0),
            "burgers-rarefaction" => Self::burgers(0.0, 1.0),
            _ => {
                return Err(Error::Config(format!(
                    "unknown problem `{name}`; valid problems: {PROBLEM_NAMES}"
                )))
            }
        })
    }

    pub fn with_t(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    /// Advection lives on the periodic unit interval, Burgers on [-6, 6]
    /// with the Riemann states held at the boundaries.
    pub fn grid(&self, nx: usize) -> Result<GridSpec> {
        match (self.kind, self.init) {
            (Equation::Burgers, Initial::Riemann { left, right }) => {
                GridSpec::new(nx, -6.0, 6.0, Boundary::Dirichlet { left, right })
            }
            (Equation::Burgers, _) => Err(Error::Config(
                "Burgers problems take a Riemann initial condition".into(),
            )),
            (Equation::Advection, _) => GridSpec::new(nx, 0.0, 1.0, Boundary::Periodic),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl = {} must lie in (0, 1]", self.cfl)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::Config(format!("T = {} must be finite and non-negative", self.t_final)));
        }
        Ok(())
    }
}

/// Exact point value at `(x, t)`.
pub fn exact_solution(problem: &Problem, x: f64, t: f64) -> f64 {
    match (problem.kind, problem.init) {
        (Equation::Advection, init) => init.eval((x - t).rem_euclid(1.0)),
        (Equation::Burgers, Initial::Riemann { left, right }) => {
            if t == 0.0 {
                return problem.init.eval(x);
            }
            if left > right {
                if x < 0.5 * (left + right) * t {
                    left
                } else {
                    right
                }
            } else if x < left * t {
                left
            } else if x > right * t {
                right
            } else {
                x / t
            }
        }
        (Equation::Burgers, _) => unreachable!("Burgers needs a Riemann initial condition"),
    }
}

/// `∫_0^x u(y, t) dy` for a Riemann problem (up to a constant).
fn riemann_primitive(left: f64, right: f64, x: f64, t: f64) -> f64 {
    if t == 0.0 || left == right {
        return Initial::Riemann { left, right }.antiderivative(x);
    }
    if left > right {
        let s = 0.5 * (left + right) * t;
        if x < s {
            left * x
        } else {
            left * s + right * (x - s)
        }
    } else {
        let (xl, xr) = (left * t, right * t);
        let fan = |y: f64| (y * y - xl * xl) / (2.0 * t);
        if x < xl {
            left * x
        } else if x <= xr {
            left * xl + fan(x)
        } else {
            left * xl + fan(xr) + right * (x - xr)
        }
    }
}

/// Exact cell averages at time `t`.
pub fn exact_averages(problem: &Problem, grid: &GridSpec, t: f64) -> Vec<f64> {
    let dx = grid.dx();
    let prim: Vec<f64> = match (problem.kind, problem.init) {
        (Equation::Advection, init) => {
            // integral of the periodic extension, anchored at 0
            let f0 = init.antiderivative(0.0);
            let period = init.antiderivative(1.0) - f0;
            let big = |x: f64| {
                let n = x.floor();
                n * period + init.antiderivative(x - n) - f0
            };
            (0..=grid.nx).map(|i| big(grid.edge(i) - t)).collect()
        }
        (Equation::Burgers, Initial::Riemann { left, right }) => (0..=grid.nx)
            .map(|i| riemann_primitive(left, right, grid.edge(i), t))
            .collect(),
        (Equation::Burgers, _) => unreachable!("Burgers needs a Riemann initial condition"),
    };
    prim.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

pub fn initial_averages(problem: &Problem, grid: &GridSpec) -> Vec<f64> {
    exact_averages(problem, grid, 0.0)
}

/// `dx * sum |state - exact|`.
pub fn l1_error(state: &[f64], exact: &[f64], dx: f64) -> f64 {
    assert_eq!(state.len(), exact.len());
    dx * state.iter().zip(exact).map(|(u, e)| (u - e).abs()).sum::<f64>()
}

/// Face states `(u⁻, u⁺)` on the `nx + 1` faces, left boundary first.
pub fn face_states(state: &[f64], grid: &GridSpec, scheme: &Scheme) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut minus = vec![0.0; grid.nx + 1];
    let mut plus = vec![0.0; grid.nx + 1];
    let mut ext = Vec::new();
    face_states_into(state, grid, scheme, &mut ext, &mut minus, &mut plus)?;
    Ok((minus, plus))
}

fn face_states_into(
    state: &[f64],
    grid: &GridSpec,
    scheme: &Scheme,
    ext: &mut Vec<f64>,
    minus: &mut [f64],
    plus: &mut [f64],
) -> Result<()> {
    let nx = grid.nx;
    assert_eq!(state.len(), nx);
    let h = scheme.halo();
    let ghosts = h + 1;
    if nx < 2 * ghosts + 1 {
        return Err(Error::GridTooSmall { nx, halo: ghosts });
    }
    ext.clear();
    match grid.bc {
        Boundary::Periodic => {
            ext.extend_from_slice(&state[nx - ghosts..]);
            ext.extend_from_slice(state);
            ext.extend_from_slice(&state[..ghosts]);
        }
        Boundary::Dirichlet { left, right } => {
            ext.extend(std::iter::repeat_n(left, ghosts));
            ext.extend_from_slice(state);
            ext.extend(std::iter::repeat_n(right, ghosts));
        }
    }
    // face j sits between cells j-1 and j; cell c lives at ext[c + ghosts]
    let w = 2 * h + 1;
    for j in 0..=nx {
        let up = j + ghosts - 1;
        minus[j] = scheme.minus(&ext[up - h..up - h + w]);
        plus[j] = scheme.plus(&ext[up + 1 - h..up + 1 - h + w]);
    }
    Ok(())
}

#[inline]
pub fn numerical_flux(u_minus: f64, u_plus: f64, kind: Equation) -> f64 {
    match kind {
        Equation::Advection => u_minus,
        Equation::Burgers => {
            let a = u_minus.abs().max(u_plus.abs());
            0.25 * (u_minus * u_minus + u_plus * u_plus) - 0.5 * a * (u_plus - u_minus)
        }
    }
}

/// Reusable buffers for the semi-discrete right-hand side.
#[derive(Debug, Default)]
struct Workspace {
    ext: Vec<f64>,
    minus: Vec<f64>,
    plus: Vec<f64>,
}

fn rhs_into(
    state: &[f64],
    grid: &GridSpec,
    scheme: &Scheme,
    kind: Equation,
    ws: &mut Workspace,
    out: &mut Vec<f64>,
) -> Result<()> {
    ws.minus.resize(grid.nx + 1, 0.0);
    ws.plus.resize(grid.nx + 1, 0.0);
    face_states_into(state, grid, scheme, &mut ws.ext, &mut ws.minus, &mut ws.plus)?;
    let inv_dx = 1.0 / grid.dx();
    out.clear();
    let mut left = numerical_flux(ws.minus[0], ws.plus[0], kind);
    for j in 1..=grid.nx {
        let right = numerical_flux(ws.minus[j], ws.plus[j], kind);
        out.push(-(right - left) * inv_dx);
        left = right;
    }
    Ok(())
}

/// `-(f̂_{i+1/2} - f̂_{i-1/2}) / dx` for every cell.
pub fn rhs(state: &[f64], grid: &GridSpec, scheme: &Scheme, kind: Equation) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.nx);
    rhs_into(state, grid, scheme, kind, &mut Workspace::default(), &mut out)?;
    Ok(out)
}

/// One Shu–Osher SSP-RK3 step.
pub fn ssp_rk3_step<F>(u: &[f64], dt: f64, mut l: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let k0 = l(u)?;
    let u1: Vec<f64> = u.iter().zip(&k0).map(|(a, k)| a + dt * k).collect();
    let k1 = l(&u1)?;
    let u2: Vec<f64> = u
        .iter()
        .zip(u1.iter().zip(&k1))
        .map(|(a, (b, k))| 0.75 * a + 0.25 * (b + dt * k))
        .collect();
    let k2 = l(&u2)?;
    Ok(u
        .iter()
        .zip(u2.iter().zip(&k2))
        .map(|(a, (b, k))| a / 3.0 + 2.0 / 3.0 * (b + dt * k))
        .collect())
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: String,
    pub nx: usize,
    pub cfl: f64,
    pub t_final: f64,
    /// Time of every recorded state, starting at 0.
    pub times: Vec<f64>,
    pub l1_errors: Vec<f64>,
    pub centers: Vec<f64>,
    pub final_state: Vec<f64>,
    pub exact_final: Vec<f64>,
}

impl SolveReport {
    pub fn final_error(&self) -> f64 {
        *self.l1_errors.last().expect("at least the initial error")
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Integrates `problem` to its final time on `nx` cells.
pub fn run(problem: &Problem, nx: usize, scheme: &Scheme) -> Result<SolveReport> {
    problem.validate()?;
    let grid = problem.grid(nx)?;
    let dx = grid.dx();
    let mut u = initial_averages(problem, &grid);
    let mut times = vec![0.0];
    let mut errors = vec![l1_error(&u, &u, dx)];
    let mut ws = Workspace::default();
    let mut t = 0.0;
    let mut step = 0;
    while t < problem.t_final {
        let speed = match problem.kind {
            Equation::Advection => 1.0,
            Equation::Burgers => u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        let remaining = problem.t_final - t;
        let dt = if speed > 0.0 {
            (problem.cfl * dx / speed).min(remaining)
        } else {
            remaining
        };
        u = ssp_rk3_step(&u, dt, |v| {
            let mut out = Vec::with_capacity(nx);
            rhs_into(v, &grid, scheme, problem.kind, &mut ws, &mut out)?;
            Ok(out)
        })?;
        step += 1;
        t = if dt == remaining { problem.t_final } else { t + dt };
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step, time: t });
        }
        times.push(t);
        errors.push(l1_error(&u, &exact_averages(problem, &grid, t), dx));
    }
    Ok(SolveReport {
        scheme: scheme.name().to_string(),
        nx,
        cfl: problem.cfl,
        t_final: problem.t_final,
        times,
        l1_errors: errors,
        centers: grid.centers(),
        exact_final: exact_averages(problem, &grid, t),
        final_state: u,
    })
}

/// Total variation `sum |u_{i+1} - u_i|` over the interior.
pub fn total_variation(u: &[f64]) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}
