//! Decision-dependent environments.
//!
//! Algorithms only see [`Environment`]: deploying a decision yields either a
//! [`DistributionHandle`] (full feedback) or a batch of samples appended to a
//! [`SampleSet`]. The ground truth used for regret accounting lives behind the
//! separate [`GroundTruth`] trait, which no algorithm in this crate requires.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use crate::partition::BoxDomain;
use crate::{Error, Result};

/// Standard Ackley function, shifted so that its minimum `ackley(0) = 0`.
pub fn ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let mean_cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
    (20.0 - 20.0 * (-0.2 * mean_sq.sqrt()).exp()) + (E - mean_cos.exp())
}

/// Rastrigin function `10·D + Σ (x² − 10 cos 2πx)`.
pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Ackley,
    Rastrigin,
}

impl TestFunction {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Ackley => ackley(x),
            TestFunction::Rastrigin => rastrigin(x),
        }
    }
}

/// Domain accessor shared by [`Environment`] and [`GroundTruth`].
pub trait Domain {
    fn domain(&self) -> &BoxDomain;

    fn dim(&self) -> usize {
        self.domain().dim()
    }
}

/// Exact access to `𝒟(θ)` returned by a full-feedback deployment.
pub trait DistributionHandle {
    /// The decision whose distribution this is.
    fn source(&self) -> &[f64];

    /// `DPR(source, θ') = E_{z∼𝒟(source)} f(θ', z)`.
    fn dpr(&self, theta: &[f64]) -> Result<f64>;
}

/// What an algorithm may do with the world: deploy decisions and observe
/// performative feedback.
pub trait Environment: Domain {
    type Handle: DistributionHandle;

    /// Loss `f(θ, z)`.
    fn loss(&self, theta: &[f64], z: f64) -> f64;

    /// Full feedback for one deployment of `θ`.
    fn deploy_full(&mut self, theta: &[f64]) -> Result<Self::Handle>;

    /// Appends `m0` fresh draws from `𝒟(θ)` to `batch`.
    fn deploy_sample(&mut self, theta: &[f64], m0: usize, batch: &mut SampleSet) -> Result<()>;
}

/// Location and value of the performative optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub theta: Vec<f64>,
    pub value: f64,
    /// `false` when found by grid search.
    pub exact: bool,
    /// Grid points per axis when `exact` is false.
    pub resolution: Option<usize>,
}

/// Evaluation-only oracle: true performative risk and its minimizer.
pub trait GroundTruth: Domain {
    /// `PR(θ) = E_{z∼𝒟(θ)} f(θ, z)`.
    fn true_pr(&self, theta: &[f64]) -> f64;

    /// Defaults to a brute-force grid search.
    fn optimum(&self) -> Optimum {
        let resolution = default_grid_resolution(self.dim());
        grid_optimum(|t| self.true_pr(t), self.domain(), resolution)
    }
}

/// 1025 points per axis in two dimensions, fewer above so the grid stays
/// around a million points.
pub fn default_grid_resolution(dim: usize) -> usize {
    if dim <= 2 {
        1025
    } else {
        ((1u64 << 20) as f64).powf(1.0 / dim as f64).floor().max(2.0) as usize
    }
}

/// Minimum of `f` over `domain.grid(resolution)`; ties keep the first point.
pub fn grid_optimum(f: impl Fn(&[f64]) -> f64, domain: &BoxDomain, resolution: usize) -> Optimum {
    let mut best = (Vec::new(), f64::INFINITY);
    for p in domain.grid(resolution) {
        let v = f(&p);
        if v < best.1 {
            best = (p, v);
        }
    }
    Optimum { theta: best.0, value: best.1, exact: false, resolution: Some(resolution) }
}

/// Pooled draws from `𝒟(source)`, in the order they were drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    source: Vec<f64>,
    samples: Vec<f64>,
}

impl SampleSet {
    pub fn new(source: Vec<f64>) -> Self {
        Self { source, samples: Vec::new() }
    }

    pub fn from_samples(source: Vec<f64>, samples: Vec<f64>) -> Self {
        Self { source, samples }
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn extend(&mut self, draws: impl IntoIterator<Item = f64>) {
        self.samples.extend(draws);
    }
}

/// `DPR(handle.source(), θ')`.
pub fn dpr_exact<H: DistributionHandle>(handle: &H, theta: &[f64]) -> Result<f64> {
    handle.dpr(theta)
}

/// Empirical decoupled risk: mean of `f(θ', z)` over the pooled samples.
pub fn empirical_dpr<E: Environment + ?Sized>(env: &E, set: &SampleSet, theta: &[f64]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    env.domain().check(theta)?;
    let sum: f64 = set.samples.iter().map(|&z| env.loss(theta, z)).sum();
    Ok(sum / set.len() as f64)
}

/// Loss `g(θ) + z` with `z ∼ Exp(mean r(θ))`.
///
/// `DPR(θ, θ') = g(θ') + r(θ)` and `PR(θ) = g(θ) + r(θ)`. Since
/// `W₁(Exp(λ₁), Exp(λ₂)) = |λ₁ − λ₂|`, the map is `Lip(r)`-sensitive and the
/// loss is 1-Lipschitz in `z`. A zero rate is the point mass at 0.
#[derive(Debug, Clone)]
pub struct AdditiveExpEnv {
    base: TestFunction,
    rate: TestFunction,
    domain: BoxDomain,
    rng: ChaCha8Rng,
    draws: u64,
}

/// The two named environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// `f = Ackley(θ) + z`, `z ∼ Exp(mean Rastrigin(θ))`.
    AckleyExpRastrigin,
    /// `f = Rastrigin(θ) + z`, `z ∼ Exp(mean Ackley(θ))`.
    RastriginExpAckley,
}

impl EnvKind {
    pub const ALL: [EnvKind; 2] = [EnvKind::AckleyExpRastrigin, EnvKind::RastriginExpAckley];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::AckleyExpRastrigin => "ackley_exp_rastrigin",
            EnvKind::RastriginExpAckley => "rastrigin_exp_ackley",
        }
    }

    pub fn build(self, seed: u64) -> AdditiveExpEnv {
        let (base, rate) = match self {
            EnvKind::AckleyExpRastrigin => (TestFunction::Ackley, TestFunction::Rastrigin),
            EnvKind::RastriginExpAckley => (TestFunction::Rastrigin, TestFunction::Ackley),
        };
        AdditiveExpEnv::new(base, rate, BoxDomain::cube(2, -5.12, 5.12).expect("static box"), seed)
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown environment `{s}`")))
    }
}

impl AdditiveExpEnv {
    pub fn new(base: TestFunction, rate: TestFunction, domain: BoxDomain, seed: u64) -> Self {
        Self { base, rate, domain, rng: ChaCha8Rng::seed_from_u64(seed), draws: 0 }
    }

    pub fn base(&self, theta: &[f64]) -> f64 {
        self.base.eval(theta)
    }

    /// Mean of the noise at `θ`, clamped at zero.
    pub fn rate(&self, theta: &[f64]) -> f64 {
        self.rate.eval(theta).max(0.0)
    }

    /// Number of `z` values drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Sensitivity `ε` of the distribution map: the map moves by `|r(θ) − r(θ')|`
    /// in 1-Wasserstein distance, so `ε` is a Lipschitz constant of `r`.
    /// Estimated from forward differences on a dense grid.
    pub fn rate_sensitivity(&self, resolution: usize) -> f64 {
        grid_lipschitz(|t| self.rate(t), &self.domain, resolution)
    }
}

impl Domain for AdditiveExpEnv {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveHandle {
    source: Vec<f64>,
    mean: f64,
    base: TestFunction,
    domain: BoxDomain,
}

impl DistributionHandle for AdditiveHandle {
    fn source(&self) -> &[f64] {
        &self.source
    }

    fn dpr(&self, theta: &[f64]) -> Result<f64> {
        self.domain.check(theta)?;
        Ok(self.base.eval(theta) + self.mean)
    }
}

impl Environment for AdditiveExpEnv {
    type Handle = AdditiveHandle;

    fn loss(&self, theta: &[f64], z: f64) -> f64 {
        self.base.eval(theta) + z
    }

    fn deploy_full(&mut self, theta: &[f64]) -> Result<AdditiveHandle> {
        self.domain.check(theta)?;
        Ok(AdditiveHandle {
            source: theta.to_vec(),
            mean: self.rate(theta),
            base: self.base,
            domain: self.domain.clone(),
        })
    }

    fn deploy_sample(&mut self, theta: &[f64], m0: usize, batch: &mut SampleSet) -> Result<()> {
        self.domain.check(theta)?;
        let mean = self.rate(theta);
        let rng = &mut self.rng;
        batch.extend((0..m0).map(|_| mean * <Exp1 as Distribution<f64>>::sample(&Exp1, rng)));
        self.draws += m0 as u64;
        Ok(())
    }
}

impl GroundTruth for AdditiveExpEnv {
    fn true_pr(&self, theta: &[f64]) -> f64 {
        self.base.eval(theta) + self.rate(theta)
    }

    /// Both shipped functions vanish at the origin, so when the origin is in
    /// the box it is the exact optimum with value 0.
    fn optimum(&self) -> Optimum {
        let origin = vec![0.0; self.dim()];
        if self.domain.contains(&origin) {
            Optimum { value: self.true_pr(&origin), theta: origin, exact: true, resolution: None }
        } else {
            grid_optimum(|t| self.true_pr(t), &self.domain, default_grid_resolution(self.dim()))
        }
    }
}

/// A plain performative-risk landscape `θ ↦ PR(θ)`, for analysis routines
/// that need ground truth only.
pub struct Landscape<F> {
    domain: BoxDomain,
    pr: F,
}

impl<F: Fn(&[f64]) -> f64> Landscape<F> {
    pub fn new(domain: BoxDomain, pr: F) -> Self {
        Self { domain, pr }
    }
}

impl<F> Domain for Landscape<F> {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }
}

impl<F: Fn(&[f64]) -> f64> GroundTruth for Landscape<F> {
    fn true_pr(&self, theta: &[f64]) -> f64 {
        (self.pr)(theta)
    }
}

/// Largest difference quotient `|f(a) − f(b)| / ‖a − b‖` over all pairs of
/// `points`. Exact Lipschitz constant of `f` restricted to the point set.
pub fn pairwise_lipschitz(f: impl Fn(&[f64]) -> f64, points: &[Vec<f64>]) -> f64 {
    let values: Vec<f64> = points.iter().map(|p| f(p)).collect();
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dist = euclidean(&points[i], &points[j]);
            if dist > 0.0 {
                best = best.max((values[i] - values[j]).abs() / dist);
            }
        }
    }
    best
}

/// Dense-grid estimate of `sup ‖∇f‖` from forward differences on a
/// `resolution`-per-axis grid.
pub fn grid_lipschitz(f: impl Fn(&[f64]) -> f64, domain: &BoxDomain, resolution: usize) -> f64 {
    let dim = domain.dim();
    let steps: Vec<f64> = (0..dim).map(|k| (domain.upper()[k] - domain.lower()[k]) / (resolution - 1) as f64).collect();
    let mut best = 0.0f64;
    for p in domain.grid(resolution) {
        let here = f(&p);
        let mut sq = 0.0;
        for axis in 0..dim {
            let mut q = p.clone();
            let forward = q[axis] + steps[axis] <= domain.upper()[axis] + 1e-12;
            q[axis] += if forward { steps[axis] } else { -steps[axis] };
            let slope = (f(&q) - here) / steps[axis];
            sq += slope * slope;
        }
        best = best.max(sq.sqrt());
    }
    best
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
