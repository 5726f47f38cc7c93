use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Per-token prices: `c_tok` billed to the user for each output token and
/// `c_comp` paid by the provider for each processed (reasoning or output) token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingModel {
    c_tok: f64,
    c_comp: f64,
}

/// Transformer dimensions used to price compute from FLOPs per token.
///
/// `n_params` is the parameter count (written as a second `beta` in some
/// texts, unrelated to the output-reliability rate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDimensions {
    pub n_params: u64,
    pub n_layer: u64,
    pub n_ctx: u64,
    pub n_attn: u64,
}

impl ModelDimensions {
    /// Forward-pass FLOPs per token, `2 n_params + 2 n_layer n_ctx n_attn`.
    pub fn flops_per_token(&self) -> f64 {
        2.0 * self.n_params as f64
            + 2.0 * self.n_layer as f64 * self.n_ctx as f64 * self.n_attn as f64
    }
}

impl PricingModel {
    pub fn new(c_tok: f64, c_comp: f64) -> Result<Self> {
        positive("c_tok", c_tok)?;
        positive("c_comp", c_comp)?;
        Ok(PricingModel { c_tok, c_comp })
    }

    /// Prices compute at `c_e` currency per FLOP.
    pub fn from_flops(c_tok: f64, c_e: f64, dims: ModelDimensions) -> Result<Self> {
        PricingModel::new(c_tok, derive_c_comp(c_e, dims)?)
    }

    pub fn c_tok(&self) -> f64 {
        self.c_tok
    }

    pub fn c_comp(&self) -> f64 {
        self.c_comp
    }
}

/// Compute cost per token, `c_e * (2 n_params + 2 n_layer n_ctx n_attn)`.
pub fn derive_c_comp(c_e: f64, dims: ModelDimensions) -> Result<f64> {
    positive("c_e", c_e)?;
    for (name, v) in [
        ("n_params", dims.n_params),
        ("n_layer", dims.n_layer),
        ("n_ctx", dims.n_ctx),
        ("n_attn", dims.n_attn),
    ] {
        if v == 0 {
            return Err(domain(format!("{name} must be a positive integer")));
        }
    }
    Ok(c_e * dims.flops_per_token())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be > 0, got {v}")))
    }
}
