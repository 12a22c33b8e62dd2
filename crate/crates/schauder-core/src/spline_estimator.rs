//! Closed-form recovery of Faber-Schauder coefficients of `f = F'` from
//! samples of `F` on a dyadic grid, plus reconstruction and roughness
//! estimators built on top of it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::faber_basis::{synthesize, CoeffSet};
use crate::numeric::{pow2, pow2_half, Norm};

/// Largest estimation level accepted by [`estimate`].
pub const MAX_N: u32 = 24;

const PAR_THRESHOLD: usize = 1 << 14;

/// Values of a function on the grid `k / 2^level`, `k = 0..=2^level`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector {
    level: u32,
    values: Vec<f64>,
}

impl SampleVector {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        if level > 30 {
            return Err(Error::Invalid(format!("sample level {level} exceeds 30")));
        }
        let expected = (1usize << level) + 1;
        if values.len() != expected {
            return Err(Error::SampleCount {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { level, values })
    }

    /// Samples `f` at every point of the level-`level` grid.
    pub fn from_fn(level: u32, f: impl Fn(f64) -> f64 + Sync) -> Result<Self> {
        if level > 30 {
            return Err(Error::Invalid(format!("sample level {level} exceeds 30")));
        }
        let n = 1usize << level;
        let h = pow2(-(level as i32));
        let values = (0..=n).into_par_iter().map(|k| f(k as f64 * h)).collect();
        Self::new(level, values)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Every `2^(self.level - level)`-th sample.
    pub fn restrict(&self, level: u32) -> Result<Self> {
        if level > self.level {
            return Err(Error::Invalid(format!(
                "cannot refine level-{} samples to level {level}",
                self.level
            )));
        }
        let stride = 1usize << (self.level - level);
        Self::new(level, self.values.iter().step_by(stride).copied().collect())
    }
}

/// Output of [`estimate`]: coefficients of generations `-1..=n`, or up to
/// `n - 1` once truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    n: u32,
    coeffs: CoeffSet,
    f0_hat: f64,
    truncated: bool,
}

impl EstimateResult {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn coeffs(&self) -> &CoeffSet {
        &self.coeffs
    }

    pub fn f0_hat(&self) -> f64 {
        self.f0_hat
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }
}

/// Pairwise sums of the signed increments: `tree[l][j]` is the sum of the
/// `2^l` entries of block `j`.
fn alternating_tree(samples: &[f64]) -> Vec<Vec<f64>> {
    let len = samples.len() - 1;
    let signed: Vec<f64> = (0..len)
        .map(|i| {
            let w = samples[i + 1] - samples[i];
            if i % 2 == 0 {
                -w
            } else {
                w
            }
        })
        .collect();
    let mut tree = vec![signed];
    while tree.last().map_or(0, Vec::len) > 1 {
        let prev = tree.last().unwrap();
        let next: Vec<f64> = if prev.len() >= PAR_THRESHOLD {
            prev.par_chunks_exact(2).map(|p| p[0] + p[1]).collect()
        } else {
            prev.chunks_exact(2).map(|p| p[0] + p[1]).collect()
        };
        tree.push(next);
    }
    tree
}

/// Sum of the first `len` signed increments, assembled from tree nodes.
fn prefix(tree: &[Vec<f64>], len: usize) -> f64 {
    let mut acc = 0.0;
    let mut pos = 0usize;
    for l in (0..tree.len()).rev() {
        let size = 1usize << l;
        if len & size != 0 {
            acc += tree[l][pos >> l];
            pos += size;
        }
    }
    acc
}

/// Coefficients of the quadratic spline interpolant of `F` on the level
/// `n + 1` grid, with `f0_hat` as the assumed value of `f(0)`.
///
/// Only increments of `F` are used, so `F(0)` need not vanish.
pub fn estimate(samples: &SampleVector, f0_hat: f64) -> Result<EstimateResult> {
    let level = samples.level();
    if level < 2 {
        return Err(Error::Invalid(format!(
            "estimation needs n >= 1, i.e. samples at level >= 2 (got level {level})"
        )));
    }
    let n = level - 1;
    if n > MAX_N {
        return Err(Error::Invalid(format!("n = {n} exceeds the cap {MAX_N}")));
    }
    let ni = n as i32;
    let f = samples.values();
    let tree = alternating_tree(f);
    let mut coeffs = CoeffSet::zeros(ni)?;

    coeffs.generation_mut(-1)[0] = pow2(ni + 2) * tree[level as usize][0];

    for m in 0..ni {
        let node = &tree[(ni - m) as usize];
        let scale = pow2_half(2 * ni + 4 + m);
        let out = coeffs.generation_mut(m);
        let fill = |(k, c): (usize, &mut f64)| *c = scale * (node[2 * k] - node[2 * k + 1]);
        if out.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(fill);
        } else {
            out.iter_mut().enumerate().for_each(fill);
        }
    }

    let shift = -pow2_half(ni + 4) * f0_hat;
    let big = pow2_half(3 * ni + 8);
    let small = pow2_half(3 * ni + 4);
    let last = coeffs.generation_mut(ni);
    let fill = |(k, c): (usize, &mut f64)| {
        let s = prefix(&tree, 2 * k);
        let w1 = f[2 * k + 1] - f[2 * k];
        let w2 = f[2 * k + 2] - f[2 * k + 1];
        *c = shift - big * s + small * (3.0 * w1 - w2);
    };
    if last.len() >= PAR_THRESHOLD {
        last.par_iter_mut().enumerate().for_each(fill);
    } else {
        last.iter_mut().enumerate().for_each(fill);
    }

    Ok(EstimateResult {
        n,
        coeffs,
        f0_hat,
        truncated: false,
    })
}

/// Solves `Psi_{n+1} theta = y_{n+1}` by pivoted LU, with `f0_hat = 0`.
///
/// Dense and cubic in `2^(n+1)`; intended as an independent check of
/// [`estimate`].
pub fn estimate_via_linear_solve(samples: &SampleVector, n: u32) -> Result<CoeffSet> {
    if !(1..=10).contains(&n) {
        return Err(Error::Invalid(format!(
            "dense solve supports 1 <= n <= 10, got {n}"
        )));
    }
    if samples.level() != n + 1 {
        return Err(Error::SampleCount {
            expected: (1usize << (n + 1)) + 1,
            got: samples.values().len(),
        });
    }
    let psi = crate::matrix_lab::build_psi(n as i32, n + 1)?;
    let f = samples.values();
    let y: Vec<f64> = f[1..].iter().map(|v| v - f[0]).collect();
    let theta = crate::matrix_lab::lu_solve(psi.matrix(), &y)?;
    CoeffSet::from_values(n as i32, theta)
}

/// Drops the final generation. The result no longer depends on `f0_hat`,
/// which is reset to zero.
pub fn truncate(result: &EstimateResult) -> Result<EstimateResult> {
    if result.truncated {
        return Err(Error::AlreadyTruncated);
    }
    Ok(EstimateResult {
        n: result.n,
        coeffs: result.coeffs.truncated_to(result.n as i32 - 1)?,
        f0_hat: 0.0,
        truncated: true,
    })
}

/// Continuous piecewise-linear function given by its values on a dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn {
    level: u32,
    knots: Vec<f64>,
}

impl PiecewiseLinearFn {
    pub fn new(level: u32, knots: Vec<f64>) -> Result<Self> {
        let s = SampleVector::new(level, knots)?;
        Ok(Self {
            level: s.level,
            knots: s.values,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Value at `t`, clamped to `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let (i, s) = locate(self.level, t);
        self.knots[i] + (self.knots[i + 1] - self.knots[i]) * s
    }
}

/// C^1 piecewise quadratic with given knot values and knot slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadraticFn {
    level: u32,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseQuadraticFn {
    /// `F0 + int_0^t f`.
    pub fn antiderivative(f: &PiecewiseLinearFn, f_at_zero: f64) -> Self {
        let h = pow2(-(f.level as i32));
        let mut values = Vec::with_capacity(f.knots.len());
        let (mut sum, mut comp) = (f_at_zero, 0.0);
        values.push(sum);
        for w in f.knots.windows(2) {
            // Neumaier compensated running sum of the cell integrals.
            let x = 0.5 * h * (w[0] + w[1]);
            let t = sum + x;
            comp += if sum.abs() >= x.abs() {
                (sum - t) + x
            } else {
                (x - t) + sum
            };
            sum = t;
            values.push(sum + comp);
        }
        Self {
            level: f.level,
            values,
            slopes: f.knots.clone(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.values
    }

    pub fn knot_slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Value at `t`, clamped to `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let (i, s) = locate(self.level, t);
        let h = pow2(-(self.level as i32));
        let x = s * h;
        self.values[i] + self.slopes[i] * x + 0.5 * (self.slopes[i + 1] - self.slopes[i]) * x * s
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (i, s) = locate(self.level, t);
        self.slopes[i] + (self.slopes[i + 1] - self.slopes[i]) * s
    }
}

/// Cell index and relative position within the cell.
fn locate(level: u32, t: f64) -> (usize, f64) {
    let cells = 1usize << level;
    let x = t.clamp(0.0, 1.0) * cells as f64;
    let i = (x.floor() as usize).min(cells - 1);
    (i, x - i as f64)
}

/// `f0_hat + sum theta e` as a piecewise-linear function on the finest grid
/// the coefficients resolve.
pub fn reconstruct_f(result: &EstimateResult) -> PiecewiseLinearFn {
    let knots = synthesize(&result.coeffs, result.f0_hat);
    PiecewiseLinearFn {
        level: (result.coeffs.max_generation() + 1) as u32,
        knots,
    }
}

/// `F0 + int_0^t f_hat`.
#[allow(non_snake_case)]
pub fn reconstruct_F(result: &EstimateResult, f_at_zero: f64) -> PiecewiseQuadraticFn {
    PiecewiseQuadraticFn::antiderivative(&reconstruct_f(result), f_at_zero)
}

/// A roughness estimate together with the l2 mass it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughnessEstimate {
    pub n: u32,
    pub value: f64,
    pub l2_norm: f64,
}

fn roughness_of(generation: &[f64], n: u32) -> Result<RoughnessEstimate> {
    let l2_norm = Norm::L2.of(generation);
    if l2_norm == 0.0 || !l2_norm.is_finite() {
        return Err(Error::UndefinedEstimate {
            generation: n as i32,
        });
    }
    Ok(RoughnessEstimate {
        n,
        value: 1.0 - l2_norm.log2() / n as f64,
        l2_norm,
    })
}

/// `1 - (1/n) log2 ||theta_n||_2` from known coefficients.
pub fn roughness_from_true_coeffs(coeffs: &CoeffSet, n: u32) -> Result<f64> {
    if n == 0 || n as i32 > coeffs.max_generation() {
        return Err(Error::Invalid(format!(
            "generation {n} is not available (need 1 <= n <= {})",
            coeffs.max_generation()
        )));
    }
    Ok(roughness_of(coeffs.generation(n as i32), n)?.value)
}

/// Roughness from samples at level `n + 2`, using generation `n` of the
/// level-`n + 1` estimate. That generation does not involve `f0_hat`.
pub fn roughness_robust(samples: &SampleVector) -> Result<RoughnessEstimate> {
    roughness_robust_with(samples, 0.0)
}

/// [`roughness_robust`] with an explicit `f0_hat`; the result does not depend on it.
pub fn roughness_robust_with(samples: &SampleVector, f0_hat: f64) -> Result<RoughnessEstimate> {
    if samples.level() < 3 {
        return Err(Error::Invalid(format!(
            "robust roughness needs samples at level n + 2 >= 3 (got {})",
            samples.level()
        )));
    }
    let n = samples.level() - 2;
    let est = estimate(samples, f0_hat)?;
    roughness_of(est.coeffs.generation(n as i32), n)
}
