//! Parameter and FLOP accounting for one forward pass.

use super::{Activation, FeatureKind, NetParams, N_FEATURES};

pub const PARAM_CONVENTION: &str = "every coefficient, weight and bias counted once: \
7 per (3,2) rational (4 numerator + 3 denominator, free constant term); \
one rational per difference feature; one shared rational per hidden layer; \
affine layers count out*in weights + out biases, head included";

pub const FLOP_CONVENTION: &str = "one FLOP per scalar add, subtract, multiply, divide or sqrt; \
abs and comparisons free; exp = 10 FLOPs; \
rational (Horner, guarded) = 12; swish = 13; softmax over 2 logits = 25";

const RATIONAL_FLOPS: usize = 12;
const SWISH_FLOPS: usize = 13;
const EXP_FLOPS: usize = 10;

pub fn count_params(params: &NetParams) -> usize {
    params.n_params()
}

pub fn count_flops(params: &NetParams) -> usize {
    // three first differences plus the second difference (mul + 2 adds)
    let mut flops = 6;
    flops += match params.arch.features {
        // rationals, squared norm (4 mul + 3 add), sqrt, 4 divides
        FeatureKind::Rational => N_FEATURES * RATIONAL_FLOPS + 7 + 1 + N_FEATURES,
        // max is free, 4 divides
        FeatureKind::Delta => N_FEATURES,
    };
    let act = match params.arch.activation {
        Activation::Rational => RATIONAL_FLOPS,
        Activation::Swish => SWISH_FLOPS,
    };
    let mut fan_in = N_FEATURES;
    for layer in &params.layers {
        let out = layer.w.len();
        flops += 2 * out * fan_in + out * act;
        fan_in = out;
    }
    // head affine map, then softmax: 2 subtractions of the max, 2 exp, 1 add, 2 divides
    flops += 2 * 2 * fan_in + 2 + 2 * EXP_FLOPS + 1 + 2;
    flops
}

/// Printed accounting for the report and the CLI.
#[derive(Debug, Clone)]
pub struct CostReport {
    pub params: usize,
    pub flops: usize,
}

impl CostReport {
    pub fn of(params: &NetParams) -> Self {
        Self {
            params: count_params(params),
            flops: count_flops(params),
        }
    }
}
