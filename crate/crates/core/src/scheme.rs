//! Pluggable face-reconstruction schemes.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ratnet::NnModel;
use crate::reconstruct::{self, DEFAULT_EPS};

/// Reconstruction used by the solver and the analysis tools. Every variant
/// evaluates the minus side; the plus side is the mirrored stencil.
#[derive(Debug, Clone)]
pub enum Scheme {
    Weno3Js { eps: f64 },
    Weno3Z { eps: f64 },
    Weno5Js { eps: f64 },
    Quick,
    /// Fixed ideal weights: the linear third-order upwind reconstruction.
    Ideal3,
    Nn { model: Arc<NnModel>, label: String },
}

pub const SCHEME_NAMES: &str = "weno3-js, weno3-z, weno5-js, quick, ideal3, nn:<weights.json>";

impl Scheme {
    pub fn weno3_js() -> Self {
        Scheme::Weno3Js { eps: DEFAULT_EPS }
    }

    pub fn weno3_z() -> Self {
        Scheme::Weno3Z { eps: DEFAULT_EPS }
    }

    pub fn weno5_js() -> Self {
        Scheme::Weno5Js { eps: DEFAULT_EPS }
    }

    pub fn nn(model: NnModel, label: impl Into<String>) -> Self {
        Scheme::Nn {
            model: Arc::new(model),
            label: label.into(),
        }
    }

    /// The four classical baselines.
    pub fn classical() -> Vec<Scheme> {
        vec![
            Scheme::weno3_js(),
            Scheme::weno3_z(),
            Scheme::weno5_js(),
            Scheme::Quick,
        ]
    }

    /// Parses `weno3-js`, `weno3-z`, `weno5-js`, `quick`, `ideal3` or
    /// `nn:<path>` (loads the weight file).
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "weno3-js" => Ok(Scheme::weno3_js()),
            "weno3-z" => Ok(Scheme::weno3_z()),
            "weno5-js" => Ok(Scheme::weno5_js()),
            "quick" => Ok(Scheme::Quick),
            "ideal3" => Ok(Scheme::Ideal3),
            _ => match name.strip_prefix("nn:") {
                Some(path) if !path.is_empty() => {
                    let model = NnModel::load(Path::new(path))?;
                    Ok(Scheme::nn(model, name))
                }
                _ => Err(Error::Config(format!(
                    "unknown scheme `{name}`; valid schemes: {SCHEME_NAMES}"
                ))),
            },
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Scheme::Weno3Js { .. } => "weno3-js",
            Scheme::Weno3Z { .. } => "weno3-z",
            Scheme::Weno5Js { .. } => "weno5-js",
            Scheme::Quick => "quick",
            Scheme::Ideal3 => "ideal3",
            Scheme::Nn { label, .. } => label,
        }
    }

    /// Cells needed on each side of the reconstructed cell.
    pub fn halo(&self) -> usize {
        match self {
            Scheme::Weno5Js { .. } => 2,
            _ => 1,
        }
    }

    /// Minus-side face value from `2 * halo + 1` cell averages centred on
    /// the upwind cell.
    #[inline]
    pub fn minus(&self, s: &[f64]) -> f64 {
        match self {
            Scheme::Weno5Js { eps } => reconstruct::weno5_js([s[0], s[1], s[2], s[3], s[4]], *eps),
            _ => {
                let s3 = [s[0], s[1], s[2]];
                match self {
                    Scheme::Weno3Js { eps } => reconstruct::weno3_js(s3, *eps),
                    Scheme::Weno3Z { eps } => reconstruct::weno3_z(s3, *eps),
                    Scheme::Quick => reconstruct::quick(s3),
                    Scheme::Ideal3 => reconstruct::ideal3(s3),
                    Scheme::Nn { model, .. } => model.reconstruct(s3),
                    Scheme::Weno5Js { .. } => unreachable!(),
                }
            }
        }
    }

    /// Plus-side value: the minus rule applied to the reversed stencil
    /// `(u_{i+1+halo}, ..., u_{i+1-halo})`.
    #[inline]
    pub fn plus(&self, s: &[f64]) -> f64 {
        let mut rev = [0.0; 5];
        let n = s.len();
        for (k, v) in s.iter().enumerate() {
            rev[n - 1 - k] = *v;
        }
        self.minus(&rev[..n])
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for n in ["weno3-js", "weno3-z", "weno5-js", "quick", "ideal3"] {
            assert_eq!(Scheme::parse(n).unwrap().name(), n);
        }
        let err = Scheme::parse("weno7").unwrap_err().to_string();
        assert!(err.contains("weno3-js") && err.contains("nn:"), "{err}");
        assert!(Scheme::parse("nn:").is_err());
        assert!(Scheme::parse("nn:/does/not/exist.json").is_err());
    }

    #[test]
    fn plus_mirrors_minus() {
        let s5 = [0.1, 0.5, -0.2, 0.9, 0.3];
        let w5 = Scheme::weno5_js();
        assert_eq!(w5.plus(&s5), w5.minus(&[0.3, 0.9, -0.2, 0.5, 0.1]));
        let q = Scheme::Quick;
        assert_eq!(q.plus(&[1.0, 2.0, 4.0]), reconstruct::quick([4.0, 2.0, 1.0]));
    }
}
