//! Rational neural network producing WENO3 weights.
//!
//! A stencil `(u_{i-1}, u_i, u_{i+1})` is turned into four Galilean-invariant
//! differences, passed through per-feature rational functions and normalized
//! to unit length. Hidden layers alternate an affine map with a rational
//! activation shared by the whole layer, and a softmax head yields the two
//! sub-stencil weights. At inference an ENO filter zeroes tiny weights.
//!
//! The Swish/Delta baseline (finite differences scaled by
//! `max(d1, d2, eps)`, Swish activations) is the same network with the
//! feature and activation kinds switched.

mod cost;
mod io;
mod rational;

pub use cost::{count_flops, count_params, CostReport, FLOP_CONVENTION, PARAM_CONVENTION};
pub use io::{ModelFile, NnModel, FORMAT_VERSION};
pub use rational::{fit_relu_rational, RationalCoeffs, RationalEval, ReluFit, DENOM_GUARD};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruct::{reconstruct_minus, Stencil3, Weights2};

/// Default ENO threshold.
pub const DEFAULT_C_ENO: f64 = 2e-4;

/// Largest supported layer width.
pub const MAX_WIDTH: usize = 32;

/// Below this norm the rational features collapse to the zero vector.
pub const FEATURE_NORM_FLOOR: f64 = 1e-14;

/// Regularizer of the baseline's Delta normalization.
pub const DELTA_EPS: f64 = 1e-15;

pub const N_FEATURES: usize = 4;

/// Fixed-size feature vector.
pub type FeatureVec = [f64; N_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Learned rational of each difference, normalized to unit length.
    Rational,
    /// Differences divided by `max(d1, d2, eps)`, no parameters.
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Rational,
    Swish,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arch {
    pub hidden: Vec<usize>,
    pub features: FeatureKind,
    pub activation: Activation,
}

impl Arch {
    /// Rational features and activations, three hidden layers of four.
    pub fn rational_default() -> Self {
        Self {
            hidden: vec![4, 4, 4],
            features: FeatureKind::Rational,
            activation: Activation::Rational,
        }
    }

    /// Delta features with Swish activations, three hidden layers of 16.
    pub fn delta_swish_default() -> Self {
        Self {
            hidden: vec![16, 16, 16],
            features: FeatureKind::Delta,
            activation: Activation::Swish,
        }
    }
}

impl Default for Arch {
    fn default() -> Self {
        Self::rational_default()
    }
}

/// Affine map followed by a layer-wide activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major, `out x in`.
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Present iff the architecture uses rational activations.
    pub act: Option<RationalCoeffs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    #[serde(rename = "W")]
    pub w: [Vec<f64>; 2],
    pub b: [f64; 2],
}

/// Every learnable parameter of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub arch: Arch,
    /// One rational per difference feature; empty for Delta features.
    pub feat: Vec<RationalCoeffs>,
    pub layers: Vec<Layer>,
    pub head: Head,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidField {
        field: field.into(),
        reason: reason.into(),
    }
}

fn check_finite(field: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(invalid(format!("{field}[{i}]"), "not a finite number")),
        None => Ok(()),
    }
}

fn check_rational(field: &str, r: &RationalCoeffs) -> Result<()> {
    check_finite(&format!("{field}.p"), &r.p)?;
    check_finite(&format!("{field}.q"), &r.q)
}

impl NetParams {
    /// Checks every dimension and value; the first problem found is reported
    /// by field path.
    pub fn validate(&self) -> Result<()> {
        let arch = &self.arch;
        if arch.hidden.is_empty() {
            return Err(invalid("arch.hidden", "at least one hidden layer is required"));
        }
        if let Some(i) = arch.hidden.iter().position(|&h| h == 0 || h > MAX_WIDTH) {
            return Err(invalid(
                format!("arch.hidden[{i}]"),
                format!("width must be in 1..={MAX_WIDTH}"),
            ));
        }
        let want_feat = match arch.features {
            FeatureKind::Rational => N_FEATURES,
            FeatureKind::Delta => 0,
        };
        if self.feat.len() != want_feat {
            return Err(invalid(
                "feat",
                format!("expected {want_feat} rationals, found {}", self.feat.len()),
            ));
        }
        for (i, r) in self.feat.iter().enumerate() {
            check_rational(&format!("feat[{i}]"), r)?;
        }
        if self.layers.len() != arch.hidden.len() {
            return Err(invalid(
                "layers",
                format!(
                    "expected {} layers, found {}",
                    arch.hidden.len(),
                    self.layers.len()
                ),
            ));
        }
        let mut fan_in = N_FEATURES;
        for (l, (layer, &out)) in self.layers.iter().zip(&arch.hidden).enumerate() {
            if layer.w.len() != out {
                return Err(invalid(
                    format!("layers[{l}].W"),
                    format!("expected {out} rows, found {}", layer.w.len()),
                ));
            }
            for (r, row) in layer.w.iter().enumerate() {
                if row.len() != fan_in {
                    return Err(invalid(
                        format!("layers[{l}].W[{r}]"),
                        format!("expected {fan_in} columns, found {}", row.len()),
                    ));
                }
                check_finite(&format!("layers[{l}].W[{r}]"), row)?;
            }
            if layer.b.len() != out {
                return Err(invalid(
                    format!("layers[{l}].b"),
                    format!("expected {out} entries, found {}", layer.b.len()),
                ));
            }
            check_finite(&format!("layers[{l}].b"), &layer.b)?;
            match (arch.activation, &layer.act) {
                (Activation::Rational, Some(r)) => check_rational(&format!("layers[{l}].act"), r)?,
                (Activation::Rational, None) => {
                    return Err(invalid(format!("layers[{l}].act"), "missing rational activation"))
                }
                (Activation::Swish, Some(_)) => {
                    return Err(invalid(
                        format!("layers[{l}].act"),
                        "swish layers carry no activation coefficients",
                    ))
                }
                (Activation::Swish, None) => {}
            }
            fan_in = out;
        }
        for (r, row) in self.head.w.iter().enumerate() {
            if row.len() != fan_in {
                return Err(invalid(
                    format!("head.W[{r}]"),
                    format!("expected {fan_in} columns, found {}", row.len()),
                ));
            }
            check_finite(&format!("head.W[{r}]"), row)?;
        }
        check_finite("head.b", &self.head.b)
    }

    /// Same shape with every entry zero; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let zero_r = RationalCoeffs {
            p: [0.0; 4],
            q: [0.0; 3],
        };
        Self {
            arch: self.arch.clone(),
            feat: vec![zero_r; self.feat.len()],
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: l.w.iter().map(|r| vec![0.0; r.len()]).collect(),
                    b: vec![0.0; l.b.len()],
                    act: l.act.map(|_| zero_r),
                })
                .collect(),
            head: Head {
                w: [
                    vec![0.0; self.head.w[0].len()],
                    vec![0.0; self.head.w[1].len()],
                ],
                b: [0.0; 2],
            },
        }
    }

    /// Visits every scalar parameter in the canonical order: feature
    /// rationals, then per layer `W`, `b`, `act`, then the head.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for r in &mut self.feat {
            r.p.iter_mut().chain(r.q.iter_mut()).for_each(&mut f);
        }
        for l in &mut self.layers {
            l.w.iter_mut().flatten().for_each(&mut f);
            l.b.iter_mut().for_each(&mut f);
            if let Some(r) = &mut l.act {
                r.p.iter_mut().chain(r.q.iter_mut()).for_each(&mut f);
            }
        }
        self.head.w.iter_mut().flatten().for_each(&mut f);
        self.head.b.iter_mut().for_each(&mut f);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.clone().for_each_mut(|v| out.push(*v));
        out
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        self.for_each_mut(|v| *v = *it.next().expect("flat vector too short"));
        assert!(it.next().is_none(), "flat vector too long");
    }

    pub fn n_params(&self) -> usize {
        self.to_flat().len()
    }

    /// Network weights for one stencil, without the ENO filter.
    pub fn forward(&self, s: Stencil3) -> Weights2 {
        let mut trace = Trace::new(&self.arch);
        self.forward_trace(s, &mut trace)
    }

    /// Forward pass that records the intermediates needed by
    /// [`NetParams::backward`].
    pub fn forward_trace(&self, s: Stencil3, t: &mut Trace) -> Weights2 {
        t.delta = delta_features(s);
        match self.arch.features {
            FeatureKind::Rational => {
                let mut norm2 = 0.0;
                for j in 0..N_FEATURES {
                    t.alpha[j] = self.feat[j].eval(t.delta[j]);
                    norm2 += t.alpha[j] * t.alpha[j];
                }
                t.norm = norm2.sqrt();
                if t.norm < FEATURE_NORM_FLOOR {
                    t.a0 = [0.0; N_FEATURES];
                } else {
                    let inv = 1.0 / t.norm;
                    t.a0 = t.alpha.map(|a| a * inv);
                }
            }
            FeatureKind::Delta => t.a0 = scale_delta(t.delta),
        }

        let mut fan_in = N_FEATURES;
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = t.acts.split_at_mut(l);
            let prev: &[f64] = if l == 0 { &t.a0 } else { &before[l - 1][..fan_in] };
            let out = &mut after[0];
            let z = &mut t.zs[l];
            for (i, row) in layer.w.iter().enumerate() {
                let mut acc = layer.b[i];
                for (wij, aj) in row.iter().zip(prev) {
                    acc += wij * aj;
                }
                z[i] = acc;
                out[i] = match &layer.act {
                    Some(r) => r.eval(acc),
                    None => swish(acc),
                };
            }
            fan_in = layer.w.len();
        }

        let last: &[f64] = match self.layers.len() {
            0 => &t.a0,
            n => &t.acts[n - 1][..fan_in],
        };
        let mut logits = self.head.b;
        for (k, row) in self.head.w.iter().enumerate() {
            logits[k] += row.iter().zip(last).map(|(w, a)| w * a).sum::<f64>();
        }
        let w = softmax2(logits);
        t.out = w;
        w
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d weights`
    /// for the stencil recorded in `t`.
    pub fn backward(&self, t: &Trace, dw: [f64; 2], grad: &mut NetParams) {
        let w = t.out.as_array();
        let dot = dw[0] * w[0] + dw[1] * w[1];
        let dlogit = [w[0] * (dw[0] - dot), w[1] * (dw[1] - dot)];

        let n_layers = self.layers.len();
        let mut da = [0.0; MAX_WIDTH];
        {
            let width = self.head.w[0].len();
            let last: &[f64] = if n_layers == 0 {
                &t.a0
            } else {
                &t.acts[n_layers - 1][..width]
            };
            for k in 0..2 {
                grad.head.b[k] += dlogit[k];
                for j in 0..width {
                    grad.head.w[k][j] += dlogit[k] * last[j];
                    da[j] += self.head.w[k][j] * dlogit[k];
                }
            }
        }

        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let g = &mut grad.layers[l];
            let out = layer.w.len();
            let fan_in = layer.w[0].len();
            let prev: &[f64] = if l == 0 { &t.a0 } else { &t.acts[l - 1][..fan_in] };
            let mut dz = [0.0; MAX_WIDTH];
            for i in 0..out {
                let z = t.zs[l][i];
                dz[i] = match (&layer.act, &mut g.act) {
                    (Some(r), Some(gr)) => {
                        let e = r.eval_grad(z);
                        for k in 0..4 {
                            gr.p[k] += da[i] * e.dp[k];
                        }
                        for k in 0..3 {
                            gr.q[k] += da[i] * e.dq[k];
                        }
                        da[i] * e.dx
                    }
                    _ => da[i] * swish_grad(z),
                };
            }
            let mut da_prev = [0.0; MAX_WIDTH];
            for i in 0..out {
                g.b[i] += dz[i];
                for j in 0..fan_in {
                    g.w[i][j] += dz[i] * prev[j];
                    da_prev[j] += layer.w[i][j] * dz[i];
                }
            }
            da = da_prev;
        }

        if self.arch.features == FeatureKind::Rational && t.norm >= FEATURE_NORM_FLOOR {
            let dot: f64 = (0..N_FEATURES).map(|j| t.a0[j] * da[j]).sum();
            let inv = 1.0 / t.norm;
            for j in 0..N_FEATURES {
                let dalpha = (da[j] - t.a0[j] * dot) * inv;
                let e = self.feat[j].eval_grad(t.delta[j]);
                let g = &mut grad.feat[j];
                for k in 0..4 {
                    g.p[k] += dalpha * e.dp[k];
                }
                for k in 0..3 {
                    g.q[k] += dalpha * e.dq[k];
                }
            }
        }
    }
}

/// Forward-pass intermediates for one stencil.
#[derive(Debug, Clone)]
pub struct Trace {
    delta: FeatureVec,
    alpha: FeatureVec,
    norm: f64,
    a0: FeatureVec,
    zs: Vec<[f64; MAX_WIDTH]>,
    acts: Vec<[f64; MAX_WIDTH]>,
    out: Weights2,
}

impl Trace {
    pub fn new(arch: &Arch) -> Self {
        let n = arch.hidden.len();
        Self {
            delta: [0.0; N_FEATURES],
            alpha: [0.0; N_FEATURES],
            norm: 0.0,
            a0: [0.0; N_FEATURES],
            zs: vec![[0.0; MAX_WIDTH]; n],
            acts: vec![[0.0; MAX_WIDTH]; n],
            out: Weights2::new(0.5, 0.5),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn swish(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn swish_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s + x * s * (1.0 - s)
}

#[inline]
fn softmax2(z: [f64; 2]) -> Weights2 {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    Weights2::new(e0 / s, e1 / s)
}

/// `(|u_i - u_{i-1}|, |u_{i+1} - u_i|, |u_{i+1} - u_{i-1}|, |u_{i+1} - 2u_i + u_{i-1}|)`.
#[inline]
pub fn delta_features(s: Stencil3) -> FeatureVec {
    [
        (s[1] - s[0]).abs(),
        (s[2] - s[1]).abs(),
        (s[2] - s[0]).abs(),
        (s[2] - 2.0 * s[1] + s[0]).abs(),
    ]
}

/// Learned rational of each difference, normalized to unit Euclidean length;
/// the zero vector when the norm is below [`FEATURE_NORM_FLOOR`].
pub fn rational_features(s: Stencil3, feat: &[RationalCoeffs; N_FEATURES]) -> FeatureVec {
    let d = delta_features(s);
    let alpha: FeatureVec = std::array::from_fn(|j| feat[j].eval(d[j]));
    let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < FEATURE_NORM_FLOOR {
        [0.0; N_FEATURES]
    } else {
        alpha.map(|a| a / norm)
    }
}

#[inline]
fn scale_delta(d: FeatureVec) -> FeatureVec {
    let m = d[0].max(d[1]).max(DELTA_EPS);
    d.map(|v| v / m)
}

/// Baseline features: differences over `max(d1, d2, 1e-15)`.
pub fn delta_baseline_features(s: Stencil3) -> FeatureVec {
    scale_delta(delta_features(s))
}

/// Hard threshold: weights below `c_eno` are dropped and the rest
/// renormalized. Weights that survive untouched are returned as is, which
/// keeps the filter idempotent in floating point.
pub fn eno_filter(w: Weights2, c_eno: f64) -> Weights2 {
    if w.w0 >= c_eno && w.w1 >= c_eno {
        return w;
    }
    let phi = |x: f64| if x >= c_eno { x } else { 0.0 };
    let (a, b) = (phi(w.w0), phi(w.w1));
    let s = a + b;
    assert!(s > 0.0, "ENO filter removed every weight of {w:?}");
    Weights2::new(a / s, b / s)
}

/// Face value from ENO-filtered network weights.
pub fn nn_reconstruct(params: &NetParams, s: Stencil3, c_eno: f64) -> f64 {
    reconstruct_minus(s, eno_filter(params.forward(s), c_eno))
}

/// ReLU-approximating rationals everywhere, LeCun-normal linear weights and
/// zero biases.
pub fn init_params<R: Rng + ?Sized>(arch: &Arch, rng: &mut R) -> NetParams {
    let relu = fit_relu_rational().coeffs;
    let rational_act = arch.activation == Activation::Rational;
    let mut lecun = |fan_in: usize, rows: usize| -> Vec<Vec<f64>> {
        let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("valid std");
        (0..rows)
            .map(|_| (0..fan_in).map(|_| normal.sample(rng)).collect())
            .collect()
    };
    let mut fan_in = N_FEATURES;
    let mut layers = Vec::with_capacity(arch.hidden.len());
    for &out in &arch.hidden {
        layers.push(Layer {
            w: lecun(fan_in, out),
            b: vec![0.0; out],
            act: rational_act.then_some(relu),
        });
        fan_in = out;
    }
    let mut hw = lecun(fan_in, 2);
    let w1 = hw.pop().expect("two rows");
    let w0 = hw.pop().expect("two rows");
    NetParams {
        arch: arch.clone(),
        feat: match arch.features {
            FeatureKind::Rational => vec![relu; N_FEATURES],
            FeatureKind::Delta => Vec::new(),
        },
        layers,
        head: Head {
            w: [w0, w1],
            b: [0.0; 2],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruct::interpolants3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(seed: u64, arch: &Arch) -> NetParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = init_params(arch, &mut rng);
        // perturb every coefficient so tests do not depend on the init values
        p.for_each_mut(|v| *v += 0.3 * (rng.gen::<f64>() - 0.5));
        p
    }

    #[test]
    fn delta_feature_examples() {
        assert_eq!(delta_features([0.0, 1.0, 3.0]), [1.0, 2.0, 3.0, 1.0]);
        assert_eq!(delta_features([5.0, 5.0, 5.0]), [0.0; 4]);
        assert_eq!(delta_features([0.0, 1.0, 2.0]), [1.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn rational_feature_examples() {
        let id = [RationalCoeffs::identity(); 4];
        let a = rational_features([0.0, 1.0, 3.0], &id);
        let n = 15f64.sqrt();
        let expect = [1.0 / n, 2.0 / n, 3.0 / n, 1.0 / n];
        for j in 0..4 {
            assert!((a[j] - expect[j]).abs() < 1e-9);
        }
        assert_eq!(rational_features([2.0, 2.0, 2.0], &id), [0.0; 4]);
        let norm: f64 = rational_features([0.3, -1.0, 0.7], &id).iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn delta_baseline_examples() {
        assert_eq!(delta_baseline_features([0.0, 1.0, 3.0]), [0.5, 1.0, 1.5, 0.5]);
        assert_eq!(delta_baseline_features([4.0, 4.0, 4.0]), [0.0; 4]);
        assert_eq!(delta_baseline_features([0.0, 1.0, 2.0]), [1.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn zero_head_gives_uniform_weights() {
        let mut p = random_params(3, &Arch::default());
        p.head.w = [vec![0.0; 4], vec![0.0; 4]];
        p.head.b = [0.0; 2];
        for s in [[0.0, 1.0, 3.0], [9.0, -2.0, 0.5], [1.0, 1.0, 1.0]] {
            assert_eq!(p.forward(s), Weights2::new(0.5, 0.5));
        }
    }

    #[test]
    fn shifted_stencils_share_weights() {
        let p = random_params(4, &Arch::default());
        assert_eq!(p.forward([0.0, 1.0, 3.0]), p.forward([10.0, 11.0, 13.0]));
    }

    #[test]
    fn eno_filter_examples() {
        assert_eq!(eno_filter(Weights2::new(0.5, 0.5), DEFAULT_C_ENO), Weights2::new(0.5, 0.5));
        assert_eq!(
            eno_filter(Weights2::new(1e-4, 1.0 - 1e-4), DEFAULT_C_ENO),
            Weights2::new(0.0, 1.0)
        );
        let w = Weights2::new(2e-4, 1.0 - 2e-4);
        assert_eq!(eno_filter(w, DEFAULT_C_ENO), w);
    }

    #[test]
    fn constant_stencil_is_reproduced() {
        for seed in 0..5 {
            let p = random_params(seed, &Arch::default());
            assert!((nn_reconstruct(&p, [0.7, 0.7, 0.7], DEFAULT_C_ENO) - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn relu_init_and_determinism() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let pa = init_params(&Arch::default(), &mut a);
        let pb = init_params(&Arch::default(), &mut b);
        assert_eq!(pa, pb);
        for r in pa.feat.iter().chain(pa.layers.iter().filter_map(|l| l.act.as_ref())) {
            for (x, relu) in [(-1.0, 0.0), (0.0, 0.0), (1.0, 1.0)] {
                assert!((r.eval(x) - relu).abs() < 0.1);
            }
        }
        assert!(pa.layers.iter().all(|l| l.b.iter().all(|&b| b == 0.0)));
        assert_eq!(pa.head.b, [0.0; 2]);
    }

    #[test]
    fn lecun_variance() {
        let arch = Arch {
            hidden: vec![16],
            features: FeatureKind::Delta,
            activation: Activation::Swish,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut draws = Vec::new();
        while draws.len() < 10_000 {
            let p = init_params(&arch, &mut rng);
            draws.extend(p.layers[0].w.iter().flatten().copied());
        }
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = 1.0 / 4.0;
        // sample variance of a normal has std sigma^2 sqrt(2/(n-1))
        let sd = target * (2.0 / (n - 1.0)).sqrt();
        assert!((var - target).abs() < 3.0 * sd, "variance {var}");
    }

    #[test]
    fn validate_names_first_bad_field() {
        let mut p = random_params(1, &Arch::default());
        p.layers[1].w[2].pop();
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("layers[1].W[2]"), "{err}");

        let mut p = random_params(1, &Arch::default());
        p.head.b[1] = f64::NAN;
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("head.b[1]"), "{err}");

        let mut p = random_params(1, &Arch::default());
        p.feat.pop();
        assert!(p.validate().unwrap_err().to_string().contains("feat"));
    }

    #[test]
    fn flat_round_trip() {
        let p = random_params(2, &Arch::default());
        let flat = p.to_flat();
        assert_eq!(flat.len(), 119);
        let mut q = p.zeros_like();
        q.set_flat(&flat);
        assert_eq!(p, q);
    }

    /// Central differences of a scalar function of the weights.
    fn check_backward(arch: Arch, seed: u64) {
        let p = random_params(seed, &arch);
        let s = [0.13, -0.42, 0.91];
        let dw = [0.7, -1.3];
        let loss = |q: &NetParams| {
            let w = q.forward(s);
            dw[0] * w.w0 + dw[1] * w.w1
        };
        let mut t = Trace::new(&p.arch);
        p.forward_trace(s, &mut t);
        let mut grad = p.zeros_like();
        p.backward(&t, dw, &mut grad);
        let g = grad.to_flat();
        let base = p.to_flat();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut q = p.clone();
            let mut v = base.clone();
            v[i] += h;
            q.set_flat(&v);
            let up = loss(&q);
            v[i] -= 2.0 * h;
            q.set_flat(&v);
            let down = loss(&q);
            let fd = (up - down) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-6 + 1e-4 * fd.abs(),
                "coordinate {i}: analytic {} vs fd {fd}",
                g[i]
            );
        }
    }

    #[test]
    fn backward_matches_fd_rational() {
        for seed in 0..3 {
            check_backward(Arch::default(), seed);
        }
    }

    #[test]
    fn backward_matches_fd_swish() {
        check_backward(
            Arch {
                hidden: vec![5, 3],
                features: FeatureKind::Delta,
                activation: Activation::Swish,
            },
            9,
        );
    }

    proptest! {
        #[test]
        fn softmax_output_is_convex(seed in 0u64..1000, s in prop::array::uniform3(-10.0..10.0f64)) {
            let p = random_params(seed, &Arch::default());
            let w = p.forward(s);
            prop_assert!(w.w0 > 0.0 && w.w1 > 0.0);
            prop_assert!((w.w0 + w.w1 - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn galilean_invariance(seed in 0u64..200, s in prop::array::uniform3(-512i32..512), c in -4096i32..4096) {
            // dyadic data: every difference is computed exactly
            let s = s.map(|v| v as f64 / 64.0);
            let t = s.map(|v| v + c as f64 / 64.0);
            let p = random_params(seed, &Arch::default());
            prop_assert_eq!(p.forward(s), p.forward(t));
            let shifted = nn_reconstruct(&p, t, DEFAULT_C_ENO);
            let base = nn_reconstruct(&p, s, DEFAULT_C_ENO) + c as f64 / 64.0;
            prop_assert!((shifted - base).abs() <= 1e-12 * (1.0 + base.abs()));
        }

        #[test]
        fn eno_idempotent(a in 1e-9..1.0f64, b in 1e-9..1.0f64, c in 1e-5..1e-2f64) {
            // normalized like a softmax, so the sum is 1 only up to rounding
            let w = Weights2::new(a / (a + b), b / (a + b));
            let once = eno_filter(w, c);
            prop_assert!(once.is_convex(1e-12));
            prop_assert_eq!(eno_filter(once, c), once);
        }

        #[test]
        fn reconstruction_in_convex_hull(seed in 0u64..200, s in prop::array::uniform3(-5.0..5.0f64)) {
            let p = random_params(seed, &Arch::default());
            let v = nn_reconstruct(&p, s, DEFAULT_C_ENO);
            let (u0, u1) = interpolants3(s);
            let tol = 1e-12 * (1.0 + u0.abs().max(u1.abs()));
            prop_assert!(v >= u0.min(u1) - tol && v <= u0.max(u1) + tol);
        }

        #[test]
        fn weights_continuous_in_stencil(seed in 0u64..200, s in prop::array::uniform3(-1.0..1.0f64)) {
            let p = random_params(seed, &Arch::default());
            let a = p.forward(s);
            let b = p.forward([s[0] + 1e-12, s[1], s[2]]);
            prop_assert!((a.w0 - b.w0).abs() < 1e-6);
        }
    }
}
