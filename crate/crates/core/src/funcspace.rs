//! Analytical function families with exact cell averages.
//!
//! Training pairs are built from functions whose antiderivatives are known in
//! closed form, so every cell average is exact up to rounding. The two
//! evaluation functions used for model selection live here as well.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the generator used for dataset draws. Part of the dataset format:
/// changing the generator changes every dataset.
pub const RNG_NAME: &str = "chacha8-stream-v1";

/// Location of the jump for the discontinuous families.
const JUMP_AT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Polynomial,
    Step,
    SawJump,
    Sine,
    Tanh,
    SineCubed,
    SineStep,
}

impl Family {
    /// Families drawn when building a training dataset.
    pub const TRAINING: [Family; 5] = [
        Family::Polynomial,
        Family::Step,
        Family::SawJump,
        Family::Sine,
        Family::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Polynomial => "polynomial",
            Family::Step => "step",
            Family::SawJump => "saw-jump",
            Family::Sine => "sine",
            Family::Tanh => "tanh",
            Family::SineCubed => "sine-cubed",
            Family::SineStep => "sine-step",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Family::Polynomial,
            Family::Step,
            Family::SawJump,
            Family::Sine,
            Family::Tanh,
            Family::SineCubed,
            Family::SineStep,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown function family `{s}`")))
    }
}

/// One analytical function instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FunctionSpec {
    /// `c0 + c1 x + c2 x^2 + c3 x^3` on [-1, 1].
    Polynomial { coeffs: [f64; 4] },
    /// `left` for x < 0.5, `right` otherwise, on [0, 1].
    Step { left: f64, right: f64 },
    /// `(-1)^a x + jump * 1(x > 0.5)` on [0, 1]; `negate` is `a = 1`.
    SawJump { negate: bool, jump: f64 },
    /// `sin(k pi x)` on [0, 1].
    Sine { k: f64 },
    /// `tanh(k x)` on [-1, 1].
    Tanh { k: f64 },
    /// `sin^3(pi x)` on [-1, 1].
    SineCubed,
    /// `sin(2 pi x)` on [0, 0.5) and `1 + sin(2 pi x)` on [0.5, 1].
    SineStep,
}

/// Draws a random instance of `family` with the training-set parameter laws.
pub fn sample_function<R: Rng + ?Sized>(family: Family, rng: &mut R) -> FunctionSpec {
    match family {
        Family::Polynomial => {
            let mut coeffs = [0.0; 4];
            for c in &mut coeffs {
                *c = rng.gen_range(-1.0..1.0);
            }
            FunctionSpec::Polynomial { coeffs }
        }
        Family::Step => FunctionSpec::Step {
            left: rng.gen_range(-1.0..1.0),
            right: rng.gen_range(-1.0..1.0),
        },
        Family::SawJump => FunctionSpec::SawJump {
            negate: rng.gen_bool(0.5),
            jump: rng.gen_range(0.5..1.0),
        },
        Family::Sine => FunctionSpec::Sine {
            k: rng.gen_range(2.0..20.0),
        },
        Family::Tanh => FunctionSpec::Tanh {
            k: rng.gen_range(5.0..30.0),
        },
        Family::SineCubed => FunctionSpec::SineCubed,
        Family::SineStep => FunctionSpec::SineStep,
    }
}

/// The two functions used to estimate convergence orders during selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalFunction {
    SinCubed,
    SineStep,
}

pub fn eval_function(name: EvalFunction) -> FunctionSpec {
    match name {
        EvalFunction::SinCubed => FunctionSpec::SineCubed,
        EvalFunction::SineStep => FunctionSpec::SineStep,
    }
}

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl FunctionSpec {
    pub fn family(&self) -> Family {
        match self {
            FunctionSpec::Polynomial { .. } => Family::Polynomial,
            FunctionSpec::Step { .. } => Family::Step,
            FunctionSpec::SawJump { .. } => Family::SawJump,
            FunctionSpec::Sine { .. } => Family::Sine,
            FunctionSpec::Tanh { .. } => Family::Tanh,
            FunctionSpec::SineCubed => Family::SineCubed,
            FunctionSpec::SineStep => Family::SineStep,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            FunctionSpec::Polynomial { .. } | FunctionSpec::Tanh { .. } | FunctionSpec::SineCubed => {
                (-1.0, 1.0)
            }
            FunctionSpec::Step { .. }
            | FunctionSpec::SawJump { .. }
            | FunctionSpec::Sine { .. }
            | FunctionSpec::SineStep => (0.0, 1.0),
        }
    }

    /// Pointwise value following each family's definition (right-continuous
    /// at the jump for `Step` and `SineStep`).
    pub fn eval(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            FunctionSpec::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            FunctionSpec::Step { left, right } => {
                if x < JUMP_AT {
                    left
                } else {
                    right
                }
            }
            FunctionSpec::SawJump { negate, jump } => {
                let s = if negate { -x } else { x };
                if x > JUMP_AT {
                    s + jump
                } else {
                    s
                }
            }
            FunctionSpec::Sine { k } => (k * PI * x).sin(),
            FunctionSpec::Tanh { k } => (k * x).tanh(),
            FunctionSpec::SineCubed => (PI * x).sin().powi(3),
            FunctionSpec::SineStep => {
                let s = (2.0 * PI * x).sin();
                if x < JUMP_AT {
                    s
                } else {
                    1.0 + s
                }
            }
        }
    }

    /// Antiderivative, continuous across jumps.
    pub fn antiderivative(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            FunctionSpec::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + c / (k as f64 + 1.0))
                * x,
            FunctionSpec::Step { left, right } => {
                left * x.min(JUMP_AT) + right * (x - JUMP_AT).max(0.0)
            }
            FunctionSpec::SawJump { negate, jump } => {
                let s = if negate { -1.0 } else { 1.0 };
                0.5 * s * x * x + jump * (x - JUMP_AT).max(0.0)
            }
            FunctionSpec::Sine { k } => -(k * PI * x).cos() / (k * PI),
            FunctionSpec::Tanh { k } => ln_cosh(k * x) / k,
            FunctionSpec::SineCubed => {
                0.25 * (-3.0 * (PI * x).cos() / PI + (3.0 * PI * x).cos() / (3.0 * PI))
            }
            FunctionSpec::SineStep => {
                -(2.0 * PI * x).cos() / (2.0 * PI) + (x - JUMP_AT).max(0.0)
            }
        }
    }

    fn check_interval(&self, lo: f64, hi: f64) -> Result<()> {
        let (a, b) = self.domain();
        let tol = 1e-12 * (b - a);
        if !(lo < hi) || lo < a - tol || hi > b + tol {
            return Err(Error::OutsideDomain { lo, hi, a, b });
        }
        Ok(())
    }
}

/// Exact mean of `spec` over `[lo, hi]` from its antiderivative.
pub fn cell_average(spec: &FunctionSpec, lo: f64, hi: f64) -> Result<f64> {
    spec.check_interval(lo, hi)?;
    Ok((spec.antiderivative(hi) - spec.antiderivative(lo)) / (hi - lo))
}

/// Exact face value at `x`; at a jump this is the left limit.
pub fn interface_value(spec: &FunctionSpec, x: f64) -> Result<f64> {
    let (a, b) = spec.domain();
    let tol = 1e-12 * (b - a);
    if !(x >= a - tol && x <= b + tol) {
        return Err(Error::OutsideDomain { lo: x, hi: x, a, b });
    }
    Ok(match *spec {
        FunctionSpec::Step { left, .. } if x == JUMP_AT => left,
        FunctionSpec::SineStep if x == JUMP_AT => (2.0 * std::f64::consts::PI * x).sin(),
        _ => spec.eval(x),
    })
}

/// Exact cell averages on a uniform `nx`-cell partition of the domain.
pub fn discretize(spec: &FunctionSpec, nx: usize) -> Vec<f64> {
    let (a, b) = spec.domain();
    let dx = (b - a) / nx as f64;
    let edges: Vec<f64> = (0..=nx)
        .map(|j| if j == nx { b } else { a + j as f64 * dx })
        .collect();
    let prims: Vec<f64> = edges.iter().map(|&x| spec.antiderivative(x)).collect();
    (0..nx)
        .map(|i| (prims[i + 1] - prims[i]) / (edges[i + 1] - edges[i]))
        .collect()
}

/// Face positions `x_{i+1/2}` for `i = 0..nx`, the last one being the right
/// end of the domain.
pub fn faces(spec: &FunctionSpec, nx: usize) -> Vec<f64> {
    let (a, b) = spec.domain();
    let dx = (b - a) / nx as f64;
    (0..nx)
        .map(|i| if i + 1 == nx { b } else { a + (i + 1) as f64 * dx })
        .collect()
}

/// One training pair: three cell averages and the exact value at the right
/// face of the middle cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSample {
    pub ubar: [f64; 3],
    pub target: f64,
    pub nx: usize,
}

/// Samples for every face of one discretized function, with periodic wrap of
/// the stencil and targets clipped into the stencil's range.
pub fn function_samples(spec: &FunctionSpec, nx: usize) -> Vec<TrainSample> {
    let avg = discretize(spec, nx);
    let xs = faces(spec, nx);
    (0..nx)
        .map(|i| {
            let ubar = [avg[(i + nx - 1) % nx], avg[i], avg[(i + 1) % nx]];
            let exact = interface_value(spec, xs[i]).expect("face lies in the domain");
            let lo = ubar[0].min(ubar[1]).min(ubar[2]);
            let hi = ubar[0].max(ubar[1]).max(ubar[2]);
            TrainSample {
                ubar,
                target: exact.clamp(lo, hi),
                nx,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub nx_values: Vec<usize>,
    pub pairs_per_grid: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            nx_values: vec![16, 32, 64, 128, 256, 512, 1024],
            pairs_per_grid: 16384,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nx_values.is_empty() {
            return Err(Error::Config("nx_values is empty".into()));
        }
        if self.pairs_per_grid == 0 {
            return Err(Error::Config("pairs_per_grid must be positive".into()));
        }
        for &nx in &self.nx_values {
            if nx < 3 {
                return Err(Error::Config(format!(
                    "nx value {nx} is too small: a 3-cell stencil needs nx >= 3"
                )));
            }
            if !self.pairs_per_grid.is_multiple_of(nx) {
                return Err(Error::Config(format!(
                    "pairs_per_grid {} is not divisible by nx value {nx}",
                    self.pairs_per_grid
                )));
            }
        }
        Ok(())
    }

    /// Number of random function instances drawn for grid size `nx`.
    pub fn instances_for(&self, nx: usize) -> usize {
        self.pairs_per_grid / nx
    }
}

/// Deterministic generator for one function instance. Each instance owns a
/// separate ChaCha stream so instances can be drawn in any order.
pub fn instance_rng(seed: u64, grid_index: usize, instance: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((grid_index as u64) << 32) | instance as u64);
    rng
}

/// Builds the full training set: for each grid size, `pairs_per_grid / nx`
/// random functions each contributing `nx` samples.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<Vec<TrainSample>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.nx_values.len() * cfg.pairs_per_grid);
    for (g, &nx) in cfg.nx_values.iter().enumerate() {
        for inst in 0..cfg.instances_for(nx) {
            let mut rng = instance_rng(cfg.seed, g, inst);
            let family = Family::TRAINING[rng.gen_range(0..Family::TRAINING.len())];
            let spec = sample_function(family, &mut rng);
            out.extend(function_samples(&spec, nx));
        }
    }
    Ok(out)
}

pub const DATASET_HEADER: &str = "ubar_m1,ubar_0,ubar_p1,target,nx";

pub fn write_dataset<W: std::io::Write>(mut w: W, samples: &[TrainSample]) -> std::io::Result<()> {
    use crate::fmt::real;
    writeln!(w, "{DATASET_HEADER}")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            real(s.ubar[0]),
            real(s.ubar[1]),
            real(s.ubar[2]),
            real(s.target),
            s.nx
        )?;
    }
    Ok(())
}

pub fn read_dataset<R: std::io::Read>(r: R) -> Result<Vec<TrainSample>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != DATASET_HEADER {
        return Err(Error::Parse(format!(
            "dataset header must be `{DATASET_HEADER}`"
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: column {i}: {e}", line + 1)))
        };
        let nx = rec[4]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("row {}: nx: {e}", line + 1)))?;
        out.push(TrainSample {
            ubar: [num(0)?, num(1)?, num(2)?],
            target: num(3)?,
            nx,
        });
    }
    Ok(out)
}
