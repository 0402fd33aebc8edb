//! Training loss and its gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::TrainSample;
use crate::ratnet::{NetParams, Trace};
use crate::reconstruct::{interpolants3, Stencil3, IDEAL3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossHyper {
    /// Exponent on the smoothness weight.
    pub alpha: f64,
    /// Weight of the deviation-from-ideal term.
    pub beta_d: f64,
    /// Weight of the squared parameter norm.
    pub beta_w: f64,
    pub eps_gamma: f64,
}

impl Default for LossHyper {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta_d: 0.1,
            beta_w: 1e-6,
            eps_gamma: 1e-15,
        }
    }
}

impl LossHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.alpha) && ok(self.beta_d) && ok(self.beta_w)) {
            return Err(Error::Config(
                "alpha, beta_d and beta_w must be finite and non-negative".into(),
            ));
        }
        if !(self.eps_gamma.is_finite() && self.eps_gamma > 0.0) {
            return Err(Error::Config("eps_gamma must be positive".into()));
        }
        Ok(())
    }
}

/// Smoothness weight: second difference over the sum of first differences.
/// Lies in [0, 1]; near 0 on smooth data and near 1 across jumps.
#[inline]
pub fn gamma(s: Stencil3, eps_gamma: f64) -> f64 {
    let num = (s[0] - 2.0 * s[1] + s[2]).abs();
    let den = (s[1] - s[0]).abs() + (s[1] - s[2]).abs() + eps_gamma;
    // the triangle inequality bounds the ratio by 1; rounding can overshoot
    (num / den).min(1.0)
}

/// Loss value split into its components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub dev: f64,
    pub l2: f64,
}

/// Batch loss `L_r + beta_d L_d + beta_w |theta|^2` (ENO filter off) and its
/// gradient with respect to every parameter.
pub fn loss_and_grad(
    batch: &[TrainSample],
    params: &NetParams,
    hyper: &LossHyper,
) -> Result<(LossParts, NetParams)> {
    let mut grad = params.zeros_like();
    let parts = accumulate(batch, params, hyper, Some(&mut grad))?;
    let theta = params.to_flat();
    let mut g = grad.to_flat();
    for (gi, ti) in g.iter_mut().zip(&theta) {
        *gi += 2.0 * hyper.beta_w * ti;
    }
    grad.set_flat(&g);
    Ok((parts, grad))
}

/// Batch loss without the gradient.
pub fn loss(batch: &[TrainSample], params: &NetParams, hyper: &LossHyper) -> Result<LossParts> {
    accumulate(batch, params, hyper, None)
}

fn accumulate(
    batch: &[TrainSample],
    params: &NetParams,
    hyper: &LossHyper,
    mut grad: Option<&mut NetParams>,
) -> Result<LossParts> {
    assert!(!batch.is_empty(), "empty batch");
    let inv_n = 1.0 / batch.len() as f64;
    let d = IDEAL3.as_array();
    let mut trace = Trace::new(&params.arch);
    let (mut recon, mut dev) = (0.0, 0.0);
    for (index, sample) in batch.iter().enumerate() {
        let w = params.forward_trace(sample.ubar, &mut trace).as_array();
        let (u0, u1) = interpolants3(sample.ubar);
        let resid = w[0] * u0 + w[1] * u1 - sample.target;
        // 0^0 = 1 keeps alpha = 0 well defined
        let g_a = gamma(sample.ubar, hyper.eps_gamma).powf(hyper.alpha);
        let dev_w = [w[0] - d[0], w[1] - d[1]];
        let r_term = g_a * resid * resid;
        let d_term = (1.0 - g_a) * (dev_w[0] * dev_w[0] + dev_w[1] * dev_w[1]);
        if !(r_term.is_finite() && d_term.is_finite()) {
            return Err(Error::NonFiniteLoss { index });
        }
        recon += r_term;
        dev += d_term;
        if let Some(g) = grad.as_deref_mut() {
            let dw = [
                inv_n * (2.0 * g_a * resid * u0 + hyper.beta_d * 2.0 * (1.0 - g_a) * dev_w[0]),
                inv_n * (2.0 * g_a * resid * u1 + hyper.beta_d * 2.0 * (1.0 - g_a) * dev_w[1]),
            ];
            params.backward(&trace, dw, g);
        }
    }
    recon *= inv_n;
    dev *= inv_n;
    let l2 = params.to_flat().iter().map(|v| v * v).sum::<f64>();
    let parts = LossParts {
        total: recon + hyper.beta_d * dev + hyper.beta_w * l2,
        recon,
        dev,
        l2,
    };
    if !parts.total.is_finite() {
        return Err(Error::NonFiniteLoss { index: batch.len() });
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratnet::{init_params, Arch, Head};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma([0.0, 1.0, 2.0], 1e-15), 0.0);
        assert_eq!(gamma([1.0, 1.0, 1.0], 1e-15), 0.0);
        assert_eq!(gamma([0.0, 0.0, 1.0], 1e-15), 1.0 / (1.0 + 1e-15));
    }

    #[test]
    fn gamma_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            let s: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1e3..1e3));
            let g = gamma(s, 1e-15);
            assert!((0.0..=1.0).contains(&g));
        }
    }

    /// Network with a head that returns the ideal weights for every input.
    fn ideal_net() -> NetParams {
        let mut p = init_params(&Arch::default(), &mut ChaCha8Rng::seed_from_u64(0));
        p.head = Head {
            w: [vec![0.0; 4], vec![0.0; 4]],
            b: [0.0, 2f64.ln()],
        };
        p
    }

    #[test]
    fn zero_loss_when_exact_and_ideal() {
        let p = ideal_net();
        // linear data: ideal weights reproduce the face value exactly
        let batch = vec![
            TrainSample { ubar: [0.0, 1.0, 2.0], target: 1.5, nx: 16 },
            TrainSample { ubar: [3.0, 2.0, 1.0], target: 1.5, nx: 16 },
        ];
        let hyper = LossHyper { beta_w: 0.0, ..Default::default() };
        let l = loss(&batch, &p, &hyper).unwrap();
        assert!(l.total.abs() < 1e-28, "{l:?}");
    }

    #[test]
    fn smooth_sample_only_deviation() {
        let p = init_params(&Arch::default(), &mut ChaCha8Rng::seed_from_u64(1));
        let s = TrainSample { ubar: [0.0, 1.0, 2.0], target: 7.0, nx: 16 };
        let hyper = LossHyper { alpha: 0.3, beta_d: 1.0, beta_w: 0.0, eps_gamma: 1e-15 };
        let l = loss(&[s], &p, &hyper).unwrap();
        assert_eq!(l.recon, 0.0);
        let w = p.forward(s.ubar);
        let expect = (w.w0 - 1.0 / 3.0).powi(2) + (w.w1 - 2.0 / 3.0).powi(2);
        assert!((l.dev - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_alpha_at_zero_gamma_is_total() {
        let p = init_params(&Arch::default(), &mut ChaCha8Rng::seed_from_u64(1));
        let s = TrainSample { ubar: [0.0, 1.0, 2.0], target: 1.0, nx: 16 };
        let hyper = LossHyper { alpha: 0.0, ..Default::default() };
        let l = loss(&[s], &p, &hyper).unwrap();
        assert!(l.total.is_finite());
        assert_eq!(l.dev, 0.0);
    }

    #[test]
    fn non_finite_sample_is_reported() {
        let p = init_params(&Arch::default(), &mut ChaCha8Rng::seed_from_u64(1));
        let batch = vec![
            TrainSample { ubar: [0.0, 1.0, 2.0], target: 1.5, nx: 16 },
            TrainSample { ubar: [0.0, 1.0, 2.0], target: f64::NAN, nx: 16 },
        ];
        let hyper = LossHyper { alpha: 0.5, ..Default::default() };
        match loss(&batch, &p, &hyper) {
            Err(Error::NonFiniteLoss { index }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }
}
