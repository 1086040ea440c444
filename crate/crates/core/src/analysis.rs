//! Theory-side calculators: Lambert W, near-optimality dimension estimates,
//! the noise-regime quantities and the simple-regret bound expressions.
//!
//! Nothing here feeds the algorithms; the constants `c*` (a complexity
//! bound on the loss class) and `δ` are user-supplied.

use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2, SQRT_2};
use std::ops::RangeInclusive;

use crate::doop::doop_hmax;
use crate::environment::GroundTruth;
use crate::soop::soop_budgets;
use crate::{Error, Result};

/// Principal branch of the Lambert W function on `[0, ∞)`, by Halley iteration.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !(x >= 0.0) || x.is_infinite() {
        return Err(Error::InvalidInput(format!("lambert_w needs a finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < E { (1.0 + x).ln() * 0.75 } else { x.ln() - x.ln().ln() };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w)
}

/// Per-depth counts of near-optimal cells and the resulting dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearOptDim {
    pub d: f64,
    /// `(h, N_h)` for every depth in the range.
    pub counts: Vec<(u32, u64)>,
    /// Reference optimum used for the thresholds.
    pub optimum: f64,
    pub resolution: usize,
}

/// Estimates the `(ν, ρ, 1)`-near-optimality dimension on the dyadic
/// partition of the environment's box.
///
/// `N_h` counts depth-`h` cells whose minimum PR over a cell-centered grid
/// of `resolution` points per axis is within `6νρ^h` of the grid minimum.
/// The result is the smallest `d ≥ 0` with `N_h ≤ ρ^{-dh}` on the range,
/// i.e. `max_h ln N_h / (h ln(1/ρ))`.
pub fn near_opt_dim<G: GroundTruth>(
    env: &G,
    nu: f64,
    rho: f64,
    depths: RangeInclusive<u32>,
    resolution: usize,
) -> Result<NearOptDim> {
    if !(nu > 0.0) {
        return Err(Error::InvalidInput(format!("nu must be positive, got {nu}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho must lie in (0,1), got {rho}")));
    }
    let dim = env.dim();
    let deepest = *depths.end();
    if deepest >= 32 || depths.is_empty() {
        return Err(Error::InvalidInput(format!("unsupported depth range {depths:?}")));
    }
    let cells_per_axis = 1usize << deepest;
    if resolution < 4 * cells_per_axis || !resolution.is_multiple_of(cells_per_axis) {
        return Err(Error::InvalidInput(format!(
            "grid of {resolution} points per axis is too coarse for depth {deepest}: need a multiple of {cells_per_axis} \
             and at least {}",
            4 * cells_per_axis
        )));
    }
    let total = resolution
        .checked_pow(dim as u32)
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| Error::InvalidInput(format!("{resolution}^{dim} grid points is too many")))?;

    let domain = env.domain();
    let mut values = Vec::with_capacity(total);
    let mut unit = vec![0.0; dim];
    for flat in 0..total {
        let mut rest = flat;
        for k in (0..dim).rev() {
            unit[k] = ((rest % resolution) as f64 + 0.5) / resolution as f64;
            rest /= resolution;
        }
        values.push(env.true_pr(&domain.to_original(&unit)));
    }
    let optimum = values.iter().copied().fold(f64::INFINITY, f64::min);

    let mut counts = Vec::new();
    let mut d: f64 = 0.0;
    for h in depths {
        let side = 1usize << h;
        let per_cell = resolution / side;
        let mut cell_min = vec![f64::INFINITY; side.pow(dim as u32)];
        for (flat, &v) in values.iter().enumerate() {
            let (mut rest, mut cell, mut stride) = (flat, 0usize, 1usize);
            for _ in 0..dim {
                cell += (rest % resolution) / per_cell * stride;
                rest /= resolution;
                stride *= side;
            }
            cell_min[cell] = cell_min[cell].min(v);
        }
        let threshold = optimum + 6.0 * nu * rho.powi(h as i32);
        let n = cell_min.iter().filter(|&&v| v <= threshold).count() as u64;
        if h > 0 && n > 1 {
            d = d.max((n as f64).ln() / (h as f64 * (1.0 / rho).ln()));
        }
        counts.push((h, n));
    }
    Ok(NearOptDim { d, counts, optimum, resolution })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    LowNoise,
    HighNoise,
}

/// Inputs shared by both bound families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub d: f64,
    pub alpha: f64,
    pub dim: usize,
    pub lz: f64,
    pub epsilon: f64,
    pub horizon: usize,
    pub m0: usize,
    pub c_star: f64,
    pub delta: f64,
}

impl TheoryInputs {
    /// Defaults `m0 = 10`, `c* = 1`, `δ = 0.05`.
    pub fn new(d: f64, alpha: f64, dim: usize, lz: f64, epsilon: f64, horizon: usize) -> Self {
        Self { d, alpha, dim, lz, epsilon, horizon, m0: 10, c_star: 1.0, delta: 0.05 }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.d >= 0.0
            && self.alpha > 0.0
            && self.lz >= 0.0
            && self.epsilon >= 0.0
            && self.m0 > 0
            && self.c_star >= 0.0
            && self.delta > 0.0
            && self.delta < 1.0
            && [self.d, self.alpha, self.lz, self.epsilon, self.c_star].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid theory inputs {self:?}")))
        }
    }

    /// `ν = (2√D)^α L_z ε`.
    pub fn nu(&self) -> f64 {
        (2.0 * (self.dim as f64).sqrt()).powf(self.alpha) * self.lz * self.epsilon
    }

    /// `ρ = 2^{-α}`.
    pub fn rho(&self) -> f64 {
        (-self.alpha).exp2()
    }

    /// `B = 2√2 (c* + √ln(T/δ)) / √m0`.
    pub fn b(&self) -> f64 {
        2.0 * SQRT_2 * (self.c_star + (self.horizon as f64 / self.delta).ln().sqrt()) / (self.m0 as f64).sqrt()
    }
}

/// The regime quantities for sampled feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub nu: f64,
    pub rho: f64,
    pub b: f64,
    pub d: f64,
    pub h_max: usize,
    pub h_tilde: f64,
    pub h_bar: f64,
    pub regime: Regime,
}

impl RegimeParams {
    pub fn new(inputs: &TheoryInputs) -> Result<Self> {
        inputs.validate()?;
        let (h_max, _) = soop_budgets(inputs.horizon, inputs.dim)?;
        let (nu, rho, b) = (inputs.nu(), inputs.rho(), inputs.b());
        let scale = inputs.alpha * (inputs.d + 2.0) * LN_2;
        let h_tilde = lambert_w(h_max as f64 * nu * nu * scale / (b * b))? / scale;
        let regime = classify(b, inputs.lz, inputs.epsilon, inputs.alpha, h_tilde);
        Ok(Self { nu, rho, b, d: inputs.d, h_max, h_tilde, h_bar: h_bar(h_max, inputs.d, rho)?, regime })
    }
}

/// High noise iff `B ≥ L_z ε 2^{-α h̃}`.
pub fn classify(b: f64, lz: f64, epsilon: f64, alpha: f64, h_tilde: f64) -> Regime {
    if b >= lz * epsilon * (-alpha * h_tilde).exp2() {
        Regime::HighNoise
    } else {
        Regime::LowNoise
    }
}

/// Solution of `h_max / h̄ = ρ^{-d h̄}`; `h_max` itself when `d = 0`.
pub fn h_bar(h_max: usize, d: f64, rho: f64) -> Result<f64> {
    if d == 0.0 {
        return Ok(h_max as f64);
    }
    let c = d * (1.0 / rho).ln();
    Ok(lambert_w(c * h_max as f64)? / c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    FullZeroDim,
    FullPositiveDim,
    LowNoiseZeroDim,
    LowNoisePositiveDim,
    HighNoise,
}

/// A simple-regret bound. `value` is the closed form when its precondition
/// holds, otherwise the Lambert-W form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub case: BoundCase,
    pub value: f64,
    pub w_form: f64,
    pub closed_form: Option<f64>,
    pub closed_form_applies: bool,
    pub h_max: usize,
}

/// `(x / ln x)^{-1/k}`, defined for `x > 1`.
fn closed_decay(x: f64, k: f64) -> f64 {
    (x / x.ln()).powf(-1.0 / k)
}

/// Simple-regret bound of DOOP under full feedback.
pub fn bound_full(inputs: &TheoryInputs) -> Result<Bound> {
    inputs.validate()?;
    let h_max = doop_hmax(inputs.horizon, inputs.dim)?;
    let (nu, alpha, d) = (inputs.nu(), inputs.alpha, inputs.d);
    if d == 0.0 {
        let value = 2.0 * nu * (-alpha * h_max as f64).exp2();
        return Ok(Bound {
            case: BoundCase::FullZeroDim,
            value,
            w_form: value,
            closed_form: Some(value),
            closed_form_applies: true,
            h_max,
        });
    }
    let x = h_max as f64 * alpha * d * LN_2;
    let w_form = 2.0 * nu * (-lambert_w(x)? / d).exp();
    let applies = x >= E;
    let closed = applies.then(|| 2.0 * nu * closed_decay(x, d));
    Ok(Bound {
        case: BoundCase::FullPositiveDim,
        value: closed.unwrap_or(w_form),
        w_form,
        closed_form: closed,
        closed_form_applies: applies,
        h_max,
    })
}

/// Simple-regret bound of SOOP under sampled feedback, holding with
/// probability `1 − δ`.
pub fn bound_data(inputs: &TheoryInputs) -> Result<(Bound, RegimeParams)> {
    let params = RegimeParams::new(inputs)?;
    let (nu, alpha, d) = (params.nu, inputs.alpha, inputs.d);
    let h_max = params.h_max as f64;
    let tail = (4.0 * inputs.c_star + 4.0 * (inputs.horizon as f64 / inputs.delta).ln().sqrt())
        / (h_max * inputs.m0 as f64).sqrt();
    let noise_x = h_max * nu * nu * alpha * (d + 2.0) * LN_2 / (params.b * params.b);

    let bound = match params.regime {
        Regime::HighNoise => {
            let w_form = 6.0 * nu * (-alpha * params.h_tilde).exp2() + tail;
            let applies = noise_x >= E;
            let closed = applies.then(|| 6.0 * nu * closed_decay(noise_x, d + 2.0) + tail);
            Bound {
                case: BoundCase::HighNoise,
                value: closed.unwrap_or(w_form),
                w_form,
                closed_form: closed,
                closed_form_applies: applies,
                h_max: params.h_max,
            }
        }
        Regime::LowNoise => {
            let x = h_max * alpha * d * LN_2;
            let (case, decay, closed_decay_value) = if d == 0.0 {
                let decay = (-alpha * h_max).exp2();
                (BoundCase::LowNoiseZeroDim, decay, decay)
            } else {
                (BoundCase::LowNoisePositiveDim, (-lambert_w(x)? / d).exp(), closed_decay(x, d))
            };
            let w_form = (2.0 + 2.0 * SQRT_2) * nu * decay + tail;
            let mut threshold = (1.0f64).max(params.b * params.b * E / (nu * nu * alpha * (d + 2.0) * LN_2));
            if d > 0.0 {
                threshold = threshold.max(E / (alpha * d * LN_2));
            }
            let applies = h_max >= threshold;
            let closed = applies.then_some((2.0 + 3.0 * SQRT_2) * nu * closed_decay_value);
            Bound {
                case,
                value: closed.unwrap_or(w_form),
                w_form,
                closed_form: closed,
                closed_form_applies: applies,
                h_max: params.h_max,
            }
        }
    };
    Ok((bound, params))
}
