//! Interpolation errors, convergence orders and model selection.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{discretize, faces, interface_value, FunctionSpec};
use crate::scheme::Scheme;

/// Grid sizes used for the order estimates.
pub const EVAL_NX: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

/// Root-mean-square face error of `scheme` on the periodic `nx`-cell
/// discretization of `spec`.
pub fn interpolation_error(scheme: &Scheme, spec: &FunctionSpec, nx: usize) -> f64 {
    let avg = discretize(spec, nx);
    let xs = faces(spec, nx);
    let h = scheme.halo();
    let mut buf = [0.0; 5];
    let sum_sq: f64 = (0..nx)
        .map(|i| {
            for k in 0..=2 * h {
                buf[k] = avg[(i + nx + k - h) % nx];
            }
            let exact = interface_value(spec, xs[i]).expect("face lies in the domain");
            let e = scheme.minus(&buf[..2 * h + 1]) - exact;
            e * e
        })
        .sum();
    (sum_sq / nx as f64).sqrt()
}

/// Least-squares slope of `log(error)` against `log(dx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    /// Indices of points dropped because their error was not positive.
    pub excluded: Vec<usize>,
}

/// Fits the convergence order from `(dx, error)` pairs. Non-positive errors
/// are excluded; at least two usable points are required.
pub fn convergence_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    let mut excluded = Vec::new();
    let mut logs = Vec::with_capacity(points.len());
    for (i, &(dx, e)) in points.iter().enumerate() {
        if e > 0.0 && e.is_finite() && dx > 0.0 {
            logs.push((dx.ln(), e.ln()));
        } else {
            excluded.push(i);
        }
    }
    if logs.len() < 2 {
        return Err(Error::Config(format!(
            "convergence order needs at least two positive errors, got {}",
            logs.len()
        )));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(OrderFit {
        slope: sxy / sxx,
        excluded,
    })
}

/// Errors on every grid of [`EVAL_NX`] and the fitted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudy {
    pub nx: Vec<usize>,
    pub errors: Vec<f64>,
    pub order: f64,
}

pub fn order_study(scheme: &Scheme, spec: &FunctionSpec, nx_list: &[usize]) -> Result<OrderStudy> {
    let (a, b) = spec.domain();
    let errors: Vec<f64> = nx_list
        .iter()
        .map(|&nx| interpolation_error(scheme, spec, nx))
        .collect();
    let pts: Vec<(f64, f64)> = nx_list
        .iter()
        .zip(&errors)
        .map(|(&nx, &e)| ((b - a) / nx as f64, e))
        .collect();
    Ok(OrderStudy {
        nx: nx_list.to_vec(),
        errors,
        order: convergence_order(&pts)?.slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    ConvSineStep,
    ConvSinCubed,
    LeastReconLoss,
    LeastDevLoss,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::ConvSineStep => "conv-sine-step",
            Criterion::ConvSinCubed => "conv-sin-cubed",
            Criterion::LeastReconLoss => "least-recon-loss",
            Criterion::LeastDevLoss => "least-dev-loss",
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Criterion::ConvSineStep,
            Criterion::ConvSinCubed,
            Criterion::LeastReconLoss,
            Criterion::LeastDevLoss,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown criterion `{s}`; valid: conv-sine-step, conv-sin-cubed, least-recon-loss, least-dev-loss"
            ))
        })
    }
}

/// The numbers selection looks at; one manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub alpha: f64,
    pub beta_d: f64,
    pub peak_lr: f64,
    pub order_g: f64,
    pub order_h: f64,
    pub recon_loss: f64,
    pub dev_loss: f64,
}

fn score(m: &ModelSummary, c: Criterion) -> f64 {
    match c {
        Criterion::ConvSineStep => (m.order_h - 3.0).abs(),
        Criterion::ConvSinCubed => (m.order_g - 3.0).abs(),
        Criterion::LeastReconLoss => m.recon_loss,
        Criterion::LeastDevLoss => m.dev_loss,
    }
}

/// Index of the best model: lowest score, then lowest reconstruction loss,
/// then lowest index. NaN scores rank last.
pub fn select_model(models: &[ModelSummary], criterion: Criterion) -> Option<usize> {
    let key = |m: &ModelSummary| {
        let s = score(m, criterion);
        if s.is_nan() {
            f64::INFINITY
        } else {
            s
        }
    };
    (0..models.len()).min_by(|&i, &j| {
        let (a, b) = (&models[i], &models[j]);
        key(a)
            .total_cmp(&key(b))
            .then_with(|| a.recon_loss.total_cmp(&b.recon_loss))
            .then(i.cmp(&j))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{eval_function, EvalFunction};

    fn summary(id: &str, order_h: f64, recon: f64) -> ModelSummary {
        ModelSummary {
            model_id: id.into(),
            alpha: 0.1,
            beta_d: 0.1,
            peak_lr: 1e-4,
            order_g: 2.0,
            order_h,
            recon_loss: recon,
            dev_loss: 0.0,
        }
    }

    #[test]
    fn exact_cubic_slope() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&dx: &f64| (dx, 7.0 * dx.powi(3)))
            .collect();
        assert!((convergence_order(&pts).unwrap().slope - 3.0).abs() < 1e-12);
        let two = [(0.1, 1e-2), (0.05, 1.25e-3)];
        assert!((convergence_order(&two).unwrap().slope - 3.0).abs() < 1e-12);
        let flat = [(0.1, 0.5), (0.05, 0.5), (0.025, 0.5)];
        assert_eq!(convergence_order(&flat).unwrap().slope, 0.0);
    }

    #[test]
    fn non_positive_errors_are_excluded() {
        let pts = [(0.1, 1e-3), (0.05, 0.0), (0.025, 1.25e-4)];
        let fit = convergence_order(&pts).unwrap();
        assert_eq!(fit.excluded, vec![1]);
        assert!(convergence_order(&[(0.1, 0.0), (0.05, -1.0), (0.02, 1.0)]).is_err());
    }

    #[test]
    fn ideal_weights_exact_on_quadratic() {
        let q = FunctionSpec::Polynomial { coeffs: [0.2, -0.5, 0.8, 0.0] };
        // the periodic wrap face sees a jump, so check interior faces directly
        let nx = 32;
        let avg = discretize(&q, nx);
        let xs = faces(&q, nx);
        for i in 1..nx - 1 {
            let v = Scheme::Ideal3.minus(&avg[i - 1..=i + 1]);
            assert!((v - q.eval(xs[i])).abs() < 1e-12);
        }
        // a constant has zero error on every face, wrap included
        let c = FunctionSpec::Polynomial { coeffs: [0.7, 0.0, 0.0, 0.0] };
        for s in Scheme::classical() {
            assert!(interpolation_error(&s, &c, 64) < 1e-15);
        }
    }

    #[test]
    fn js_refines_on_sin_cubed() {
        let g = eval_function(EvalFunction::SinCubed);
        let s = Scheme::weno3_js();
        assert!(interpolation_error(&s, &g, 512) < interpolation_error(&s, &g, 256));
    }

    #[test]
    fn selection_rules() {
        let one = vec![summary("a", 1.0, 1.0)];
        assert_eq!(select_model(&one, Criterion::ConvSineStep), Some(0));
        let two = vec![summary("a", 2.2, 1.0), summary("b", 2.9, 1.0)];
        assert_eq!(select_model(&two, Criterion::ConvSineStep), Some(1));
        let tie = vec![summary("a", 2.5, 2.0), summary("b", 3.5, 1.0)];
        assert_eq!(select_model(&tie, Criterion::ConvSineStep), Some(1));
        let same = vec![summary("a", 2.5, 1.0), summary("b", 2.5, 1.0)];
        assert_eq!(select_model(&same, Criterion::ConvSineStep), Some(0));
        assert_eq!(select_model(&[], Criterion::LeastDevLoss), None);
    }

    #[test]
    fn selection_is_order_independent() {
        let models = vec![
            summary("a", 2.1, 0.3),
            summary("b", 3.4, 0.1),
            summary("c", 2.6, 0.2),
            summary("d", f64::NAN, 0.0),
        ];
        let pick = |ms: &[ModelSummary]| ms[select_model(ms, Criterion::ConvSineStep).unwrap()].model_id.clone();
        let mut rev = models.clone();
        rev.reverse();
        assert_eq!(pick(&models), "b");
        assert_eq!(pick(&rev), "b");
    }
}
