//! Error analysis: the tail vector `z_{n+1}` that controls every bound, the
//! closed-form constants, empirical checks of the bounds, adversarial tails
//! that attain them, and decay-rate regressions.

use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::faber_basis::{synthesize, BasisIndex, CoeffSet};
use crate::generators::{sample_F, FunctionSpec};
use crate::matrix_lab::{build_c, top_singular};
use crate::numeric::{pairwise_sum, pow2, pow2_half, Norm};
use crate::spline_estimator::{
    estimate, reconstruct_F, reconstruct_f, PiecewiseLinearFn, PiecewiseQuadraticFn, SampleVector,
};

/// Extra generations used when truncating the infinite tail sum.
pub const TAIL_DEPTH: u32 = 12;

/// `z_{n+1}`: for each cell of the level-`n + 1` grid, the weighted sum of
/// all finer coefficients supported in that cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TailVector {
    n: u32,
    values: Vec<f64>,
}

impl TailVector {
    pub fn new(n: u32, values: Vec<f64>) -> Result<Self> {
        let expected = 1usize << (n + 1);
        if values.len() != expected {
            return Err(Error::SampleCount {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self, p: Norm) -> f64 {
        p.of(&self.values)
    }
}

/// Tail vector from a coefficient oracle, summing generations `n + 1..=top`.
pub fn tail_from<F>(n: u32, top: i32, theta: F) -> Result<TailVector>
where
    F: Fn(BasisIndex) -> Result<f64> + Sync,
{
    let first = n as i32 + 1;
    if top < first || top > 40 {
        return Err(Error::Invalid(format!(
            "tail generations must satisfy {first} <= M <= 40, got M = {top}"
        )));
    }
    let cells = 1usize << (n + 1);
    let values = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut per_generation = Vec::with_capacity((top - first + 1) as usize);
            for m in first..=top {
                let width = 1u64 << (m - first);
                let block = (i as u64 * width..(i as u64 + 1) * width)
                    .map(|k| theta(BasisIndex::new(m, k)?))
                    .collect::<Result<Vec<f64>>>()?;
                per_generation.push(pow2_half(3 * (first - m)) * pairwise_sum(&block));
            }
            Ok(pairwise_sum(&per_generation))
        })
        .collect::<Result<Vec<f64>>>()?;
    TailVector::new(n, values)
}

/// Tail vector of stored coefficients (all generations past `n`).
pub fn compute_tail(thetas: &CoeffSet, n: u32) -> Result<TailVector> {
    tail_from(n, thetas.max_generation(), |idx| Ok(thetas.get(idx)))
}

/// Tail vector of a function, truncated at generation `top`.
pub fn tail_of_spec(spec: &FunctionSpec, n: u32, top: i32) -> Result<TailVector> {
    tail_from(n, top, |idx| spec.coefficient(idx))
}

/// `||Rbar_m P_n||_p`. For `p = 2` and `m = n` this is the upper end of the
/// admissible interval.
pub fn block_norm(n: u32, m: i32, p: Norm) -> f64 {
    let (ni, mm) = (n as i32, m.max(0));
    match p {
        Norm::L1 if m < ni => pow2_half(mm - ni - 3),
        Norm::L1 => pow2_half(2 * ni + 1) - pow2_half(-3),
        Norm::Linf if m < ni => pow2_half(ni - 1 - mm),
        Norm::Linf => pow2_half(2 * ni + 3) - SQRT_2,
        Norm::L2 if m < ni => 0.5,
        Norm::L2 => final_l2_bracket(n).1,
    }
}

/// `||R_m P_n||_p`, generations `-1..=m` stacked, `m < n`.
pub fn cumulative_norm(n: u32, m: i32, p: Norm) -> f64 {
    let ni = n as i32;
    match p {
        Norm::L1 => {
            let series = if m >= 0 {
                (pow2_half(m + 1) - 1.0) / (SQRT_2 - 1.0)
            } else {
                0.0
            };
            pow2_half(-(ni + 3)) * (1.0 + series)
        }
        Norm::Linf => pow2_half(ni - 1),
        Norm::L2 => 0.5,
    }
}

/// The interval `sqrt(2 (1 - cos(pi / 2^{n+1}))^{-1} -+ 3/4)` containing
/// `||Rbar_n P_n||_2`. The lower end is attained.
pub fn final_l2_bracket(n: u32) -> (f64, f64) {
    let core = 2.0 / (1.0 - (PI * pow2(-(n as i32) - 1)).cos());
    ((core - 0.75).sqrt(), (core + 0.75).sqrt())
}

fn norm_index(p: Norm) -> usize {
    match p {
        Norm::L1 => 0,
        Norm::L2 => 1,
        Norm::Linf => 2,
    }
}

/// Every closed-form constant at level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub n: u32,
    pub gamma2: f64,
    /// Interval for the final-generation `l2` operator norm.
    pub l2_final: (f64, f64),
    c_bar: Vec<[f64; 3]>,
    c_cumulative: Vec<[f64; 3]>,
    functional: [[f64; 3]; 5],
}

impl BoundConstants {
    /// Bound on `||theta-hat_m - theta_m||_p / ||z||_p` for generation `m` alone.
    pub fn c_bar(&self, p: Norm, m: i32) -> f64 {
        self.c_bar[(m + 1) as usize][norm_index(p)]
    }

    /// Bound for generations `-1..=m` together, `m <= n - 1`.
    pub fn c(&self, p: Norm, m: i32) -> f64 {
        self.c_cumulative[(m + 1) as usize][norm_index(p)]
    }

    pub fn a_coef(&self, p: Norm) -> f64 {
        self.functional[0][norm_index(p)]
    }

    pub fn b_coef(&self, p: Norm) -> f64 {
        self.functional[1][norm_index(p)]
    }

    pub fn c_coef(&self, p: Norm) -> f64 {
        self.functional[2][norm_index(p)]
    }

    pub fn d_coef(&self, p: Norm) -> f64 {
        self.functional[3][norm_index(p)]
    }

    /// Contraction factor from `f - f-hat` to `F - F-hat`.
    pub fn antiderivative_coef(&self, p: Norm) -> f64 {
        self.functional[4][norm_index(p)]
    }
}

pub fn bound_constants(n: u32) -> Result<BoundConstants> {
    if !(2..=40).contains(&n) {
        return Err(Error::Invalid(format!(
            "bound constants need 2 <= n <= 40, got {n}"
        )));
    }
    let ni = n as i32;
    let row = |f: &dyn Fn(Norm) -> f64| [f(Norm::L1), f(Norm::L2), f(Norm::Linf)];
    let c_bar = (-1..=ni).map(|m| row(&|p| block_norm(n, m, p))).collect();
    let c_cumulative = (-1..ni)
        .map(|m| row(&|p| cumulative_norm(n, m, p)))
        .collect();
    let l2_final = final_l2_bracket(n);
    let gamma2 = (1.0 + pow2(-ni - 1) * l2_final.1) / 3f64.sqrt();
    let s3 = 3f64.sqrt();
    let functional = [
        [pow2_half(-(ni + 3)), 1.0 / s3, pow2_half(ni + 1)],
        [pow2(ni), pow2(ni + 1) / s3, pow2(ni + 1)],
        [pow2_half(-(ni + 1)), gamma2, pow2_half(ni + 3)],
        [pow2(ni + 1), pow2(ni + 1) * gamma2, pow2(ni + 2)],
        [pow2(-ni - 1), pow2(-ni) / PI, pow2(-ni - 2)],
    ];
    Ok(BoundConstants {
        n,
        gamma2,
        l2_final,
        c_bar,
        c_cumulative,
        functional,
    })
}

/// One inequality `error <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub p: Norm,
    pub label: String,
    pub error: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundRow {
    fn new(p: Norm, label: String, error: f64, bound: f64, allowance: f64) -> Self {
        let holds = error <= bound * (1.0 + 1e-9) + allowance;
        Self {
            p,
            label,
            error,
            bound,
            holds,
        }
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.error
    }
}

/// Coefficient-error bounds for one norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: u32,
    pub p: Norm,
    pub z_norm: f64,
    /// Contribution of the last retained tail generation, a scale for the
    /// truncation error of `z`.
    pub truncation_estimate: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    /// Three rows: worst single generation below `n`, worst cumulative
    /// block, final generation.
    pub fn summary(&self) -> Vec<BoundRow> {
        let worst = |prefix: &str, label: &str| {
            self.rows
                .iter()
                .filter(|r| r.label.starts_with(prefix))
                .max_by(|a, b| {
                    let ra = a.error / a.bound.max(f64::MIN_POSITIVE);
                    let rb = b.error / b.bound.max(f64::MIN_POSITIVE);
                    ra.total_cmp(&rb)
                })
                .map(|r| BoundRow {
                    label: format!("{label} (worst: {})", r.label),
                    holds: self
                        .rows
                        .iter()
                        .filter(|x| x.label.starts_with(prefix))
                        .all(|x| x.holds),
                    ..r.clone()
                })
        };
        [
            worst("generation ", "single generations < n"),
            worst("generations ", "cumulative generations < n"),
            worst("final", "final generation"),
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

fn estimate_for(spec: &FunctionSpec, n: u32) -> Result<crate::spline_estimator::EstimateResult> {
    estimate(&sample_F(spec, n + 1)?, spec.f_at_zero())
}

/// Checks `||theta-hat_m - theta_m||_p <= const * ||z||_p` for every generation
/// and every cumulative block, using the true coefficients of `spec`.
pub fn check_upper_bounds(spec: &FunctionSpec, n: u32, p: Norm) -> Result<BoundReport> {
    let constants = bound_constants(n)?;
    let ni = n as i32;
    let top = ni + TAIL_DEPTH as i32;
    let top = match spec {
        FunctionSpec::Sampled(s) => (s.samples().level() as i32 - 2).min(top),
        _ => top,
    };
    let z = tail_of_spec(spec, n, top)?;
    let last = tail_from(n, top, |idx| {
        if idx.m() == top {
            spec.coefficient(idx)
        } else {
            Ok(0.0)
        }
    })?;
    let truncation_estimate = last.norm(p);
    let truth = spec.true_coeffs(ni)?;
    let est = estimate_for(spec, n)?;
    let diff: Vec<f64> = est
        .coeffs()
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| a - b)
        .collect();
    let diff = CoeffSet::from_values(ni, diff)?;
    let scale = est
        .coeffs()
        .values()
        .iter()
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let zn = z.norm(p);
    let allowance = |c: f64| c * truncation_estimate + 1e-12 * scale;

    let mut rows = Vec::new();
    for m in -1..ni {
        let c = constants.c_bar(p, m);
        rows.push(BoundRow::new(
            p,
            format!("generation {m}"),
            p.of(diff.generation(m)),
            c * zn,
            allowance(c),
        ));
    }
    for m in -1..ni {
        let c = constants.c(p, m);
        let stacked = &diff.values()[..1usize << (m + 1)];
        rows.push(BoundRow::new(
            p,
            format!("generations -1..={m}"),
            p.of(stacked),
            c * zn,
            allowance(c),
        ));
    }
    let c = constants.c_bar(p, ni);
    rows.push(BoundRow::new(
        p,
        format!("final generation {n}"),
        p.of(diff.generation(ni)),
        c * zn,
        allowance(c),
    ));

    Ok(BoundReport {
        n,
        p,
        z_norm: zn,
        truncation_estimate,
        rows,
    })
}

/// F sampled on the level-`n + 1` grid for `f = sum_k z_k e_{n+1,k}`.
pub fn lift_tail(n: u32, z: &[f64]) -> Result<SampleVector> {
    let ni = n as i32;
    let mut coeffs = CoeffSet::zeros(ni + 1)?;
    coeffs.generation_mut(ni + 1).copy_from_slice(z);
    let f = PiecewiseLinearFn::new(n + 2, synthesize(&coeffs, 0.0))?;
    let big_f = PiecewiseQuadraticFn::antiderivative(&f, 0.0);
    SampleVector::new(n + 2, big_f.knot_values().to_vec())?.restrict(n + 1)
}

/// A tail attaining the operator norm of generation `m`'s error map.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub n: u32,
    pub m: i32,
    pub p: Norm,
    /// Generation-`n + 1` coefficients; equal to the resulting `z_{n+1}`.
    pub z: Vec<f64>,
    /// `||theta-hat_m - theta_m||_p / ||z||_p`, measured through the estimator.
    pub achieved_ratio: f64,
    /// Closed-form operator norm (the attained lower end for `l2`, `m = n`).
    pub closed_form: f64,
}

pub fn worst_case_tail(n: u32, m: i32, p: Norm) -> Result<WorstCase> {
    if n < 1 || m < -1 || m > n as i32 {
        return Err(Error::Invalid(format!(
            "need n >= 1 and -1 <= m <= n (n = {n}, m = {m})"
        )));
    }
    let block = build_c(n, m)?.into_matrix();
    let z: Vec<f64> = match p {
        Norm::Linf => {
            let row = (0..block.nrows())
                .max_by(|&a, &b| {
                    let sa: f64 = block.row(a).iter().map(|x| x.abs()).sum();
                    let sb: f64 = block.row(b).iter().map(|x| x.abs()).sum();
                    sa.total_cmp(&sb).then(b.cmp(&a))
                })
                .unwrap_or(0);
            block
                .row(row)
                .iter()
                .map(|&x| if x < 0.0 { -1.0 } else { 1.0 })
                .collect()
        }
        Norm::L1 => {
            let col = (0..block.ncols())
                .max_by(|&a, &b| {
                    let sa: f64 = block.column(a).iter().map(|x| x.abs()).sum();
                    let sb: f64 = block.column(b).iter().map(|x| x.abs()).sum();
                    sa.total_cmp(&sb).then(b.cmp(&a))
                })
                .unwrap_or(0);
            (0..block.ncols())
                .map(|j| (j == col) as u8 as f64)
                .collect()
        }
        Norm::L2 => top_singular(&block)?.1.as_slice().to_vec(),
    };
    let est = estimate(&lift_tail(n, &z)?, 0.0)?;
    let achieved_ratio = p.of(est.coeffs().generation(m)) / p.of(&z);
    let closed_form = match (p, m == n as i32) {
        (Norm::L2, true) => final_l2_bracket(n).0,
        _ => block_norm(n, m, p),
    };
    Ok(WorstCase {
        n,
        m,
        p,
        z,
        achieved_ratio,
        closed_form,
    })
}

/// Final-generation error against the error of everything before it.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub n: u32,
    pub p: Norm,
    pub final_error: f64,
    pub earlier_error: f64,
    /// `None` when the earlier error vanishes; the two norms are then the result.
    pub ratio: Option<f64>,
    /// Ratio of the closed-form constants (lower `l2` end for `p = 2`).
    pub closed_form_ratio: f64,
}

impl GapReport {
    pub fn reaches(&self, fraction: f64) -> bool {
        self.ratio
            .is_none_or(|r| r >= fraction * self.closed_form_ratio)
    }
}

fn closed_form_ratio(n: u32, p: Norm) -> f64 {
    let top = match p {
        Norm::L2 => final_l2_bracket(n).0,
        _ => block_norm(n, n as i32, p),
    };
    top / cumulative_norm(n, n as i32 - 1, p)
}

fn gap_from(n: u32, p: Norm, est_minus_truth: &CoeffSet) -> GapReport {
    let ni = n as i32;
    let final_error = p.of(est_minus_truth.generation(ni));
    let earlier_error = p.of(&est_minus_truth.values()[..1usize << ni]);
    let ratio = (earlier_error > 1e-12 * final_error.max(f64::MIN_POSITIVE))
        .then(|| final_error / earlier_error);
    GapReport {
        n,
        p,
        final_error,
        earlier_error,
        ratio,
        closed_form_ratio: closed_form_ratio(n, p),
    }
}

/// Drives the final generation to its worst case and compares the error
/// ratio with the closed-form one.
pub fn corollary_gap_demo(n: u32, p: Norm) -> Result<GapReport> {
    if n < 2 {
        return Err(Error::Invalid(format!("need n >= 2, got {n}")));
    }
    let wc = worst_case_tail(n, n as i32, p)?;
    let est = estimate(&lift_tail(n, &wc.z)?, 0.0)?;
    Ok(gap_from(n, p, est.coeffs()))
}

/// The same ratio for an arbitrary function.
pub fn gap_for_spec(spec: &FunctionSpec, n: u32, p: Norm) -> Result<GapReport> {
    if n < 2 {
        return Err(Error::Invalid(format!("need n >= 2, got {n}")));
    }
    let est = estimate_for(spec, n)?;
    let truth = spec.true_coeffs(n as i32)?;
    let diff: Vec<f64> = est
        .coeffs()
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| a - b)
        .collect();
    Ok(gap_from(n, p, &CoeffSet::from_values(n as i32, diff)?))
}

/// Fitted decay rates of `log2 ||z_{n+1}||_p` against `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub alpha: f64,
    /// `(n, [||z||_1, ||z||_2, ||z||_inf])`.
    pub norms: Vec<(u32, [f64; 3])>,
    /// `None` when some `z` vanishes exactly.
    pub slopes: [Option<f64>; 3],
    pub expected: [f64; 3],
}

impl DecayReport {
    /// Upper-rate check: measured slope at most `expected + margin`.
    pub fn holds(&self, margin: f64) -> bool {
        self.slopes
            .iter()
            .zip(&self.expected)
            .all(|(s, e)| s.is_none_or(|s| s <= e + margin))
    }
}

/// Regresses tail norms over `n_range`, truncating each tail 10 generations
/// past `n`. `alpha` is the Hölder exponent of `f'`.
pub fn holder_decay_check(
    spec: &FunctionSpec,
    alpha: f64,
    n_range: RangeInclusive<u32>,
) -> Result<DecayReport> {
    let ns: Vec<u32> = n_range.collect();
    if ns.len() < 2 {
        return Err(Error::Invalid(
            "decay check needs at least two levels".into(),
        ));
    }
    let mut norms = Vec::with_capacity(ns.len());
    for &n in &ns {
        let z = tail_of_spec(spec, n, n as i32 + 10)?;
        norms.push((n, [z.norm(Norm::L1), z.norm(Norm::L2), z.norm(Norm::Linf)]));
    }
    let slope = |i: usize| -> Option<f64> {
        if norms.iter().any(|(_, v)| v[i] == 0.0) {
            return None;
        }
        let xs: Vec<f64> = norms.iter().map(|(n, _)| *n as f64).collect();
        let ys: Vec<f64> = norms.iter().map(|(_, v)| v[i].log2()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Some(sxy / sxx)
    };
    Ok(DecayReport {
        alpha,
        slopes: [slope(0), slope(1), slope(2)],
        expected: [-(alpha - 0.5), -alpha, -(alpha + 0.5)],
        norms,
    })
}

/// Exact `L_p[0,1]` norm of a piecewise-linear function given by knot values.
pub fn piecewise_linear_norm(knots: &[f64], p: Norm) -> f64 {
    let h = 1.0 / (knots.len() - 1) as f64;
    let cells: Vec<f64> = knots
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            match p {
                Norm::L1 if a * b >= 0.0 => 0.5 * h * (a.abs() + b.abs()),
                Norm::L1 => 0.5 * h * (a * a + b * b) / (a.abs() + b.abs()),
                Norm::L2 => h * (a * a + a * b + b * b) / 3.0,
                Norm::Linf => 0.0,
            }
        })
        .collect();
    match p {
        Norm::Linf => knots.iter().fold(0.0, |m, x| m.max(x.abs())),
        Norm::L1 => pairwise_sum(&cells),
        Norm::L2 => pairwise_sum(&cells).sqrt(),
    }
}

/// `L_p[0,1]` norm from values on a uniform grid with an even number of
/// cells: composite Simpson for `p = 1, 2`, grid maximum for `p = inf`.
pub fn grid_norm(values: &[f64], p: Norm) -> f64 {
    let cells = values.len() - 1;
    assert!(
        cells >= 2 && cells.is_multiple_of(2),
        "Simpson needs an even number of cells"
    );
    let h = 1.0 / cells as f64;
    let g = |x: f64| match p {
        Norm::L1 => x.abs(),
        _ => x * x,
    };
    match p {
        Norm::Linf => values.iter().fold(0.0, |m, x| m.max(x.abs())),
        _ => {
            let panels: Vec<f64> = values
                .windows(3)
                .step_by(2)
                .map(|w| h / 3.0 * (g(w[0]) + 4.0 * g(w[1]) + g(w[2])))
                .collect();
            let s = pairwise_sum(&panels);
            if p == Norm::L2 {
                s.sqrt()
            } else {
                s
            }
        }
    }
}

/// One functional inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalRow {
    pub p: Norm,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalReport {
    pub n: u32,
    pub rows: Vec<FunctionalRow>,
}

impl FunctionalReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Checks the `L_p` error bounds for the reconstructed `f` and `F`, in all
/// three norms. Quadrature runs on the grid `2^{-(n+12)}`.
pub fn functional_error_check(spec: &FunctionSpec, n: u32) -> Result<FunctionalReport> {
    if !spec.has_exact_derivative() {
        return Err(Error::Unsupported(
            "functional bounds need an exact derivative".into(),
        ));
    }
    let constants = bound_constants(n)?;
    let ni = n as i32;
    let top = ni + TAIL_DEPTH as i32;
    let z = tail_of_spec(spec, n, top)?;
    let last = tail_from(n, top, |idx| {
        if idx.m() == top {
            spec.coefficient(idx)
        } else {
            Ok(0.0)
        }
    })?;
    let truth = spec.true_coeffs(ni)?;
    let samples = sample_F(spec, n + 1)?;
    let est = estimate(&samples, spec.f_at_zero())?;
    let diff: Vec<f64> = truth
        .values()
        .iter()
        .zip(est.coeffs().values())
        .map(|(a, b)| a - b)
        .collect();
    let diff = CoeffSet::from_values(ni, diff)?;
    let rounding = 1e-12 * truth.values().iter().fold(1.0f64, |m, x| m.max(x.abs()));

    let fine = n + TAIL_DEPTH;
    let f_hat = reconstruct_f(&est);
    let big_f_hat = reconstruct_F(&est, samples.values()[0]);
    let f_err = SampleVector::from_fn(fine, |t| {
        spec.f(t).expect("exact derivative") - f_hat.eval(t)
    })?;
    let big_f_true = sample_F(spec, fine)?;
    let big_f_err: Vec<f64> = big_f_true
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v - big_f_hat.eval(k as f64 * pow2(-(fine as i32))))
        .collect();

    let mut rows = Vec::new();
    for p in Norm::ALL {
        let zn = z.norm(p);
        let trunc = last.norm(p);
        let mut push = |label: String, lhs: f64, coef: f64, rhs_base: f64, extra: f64| {
            let rhs = coef * rhs_base;
            rows.push(FunctionalRow {
                p,
                label,
                lhs,
                rhs,
                holds: lhs <= rhs * (1.0 + 1e-9) + coef * extra + rounding,
            });
        };
        for m in -1..ni {
            let knots = synthesize(&diff.truncated_to(m)?, 0.0);
            push(
                format!("||f_{m} - f-hat_{{n,{m}}}|| <= A ||z||"),
                piecewise_linear_norm(&knots, p),
                constants.a_coef(p),
                zn,
                trunc,
            );
        }
        let knots = synthesize(&diff, 0.0);
        push(
            format!("||f_{n} - f-hat_{{n,{n}}}|| <= C ||z||"),
            piecewise_linear_norm(&knots, p),
            constants.c_coef(p),
            zn,
            trunc,
        );
        let f_norm = grid_norm(f_err.values(), p);
        push(
            "||F - F-hat|| <= a ||f - f-hat||".into(),
            grid_norm(&big_f_err, p),
            constants.antiderivative_coef(p),
            f_norm,
            0.0,
        );
    }
    Ok(FunctionalReport { n, rows })
}

/// `(||F||_2 / ||f||_2, 2^{-n+1} / pi)` for `f = cos(2^{n-1} pi t)`, `F = int_0^t f`.
pub fn extremal_cosine_ratio(n: u32) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let w = pow2(n as i32 - 1) * PI;
    let level = n + TAIL_DEPTH;
    let f = SampleVector::from_fn(level, |t| (w * t).cos())?;
    let big_f = SampleVector::from_fn(level, |t| (w * t).sin() / w)?;
    let ratio = grid_norm(big_f.values(), Norm::L2) / grid_norm(f.values(), Norm::L2);
    Ok((ratio, pow2(1 - n as i32) / PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::TakagiSpec;
    use crate::matrix_lab::apply_tail;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn takagi(c: Vec<f64>) -> FunctionSpec {
        FunctionSpec::Takagi(TakagiSpec::new(c).unwrap())
    }

    #[test]
    fn tail_examples() {
        let spec = TakagiSpec::geometric(0.5, 20).unwrap();
        let coeffs = crate::generators::takagi_true_coeffs(&spec, 20).unwrap();
        let n = 3;
        let z = compute_tail(&coeffs, n).unwrap();
        let kappa = pow2_half(n as i32 + 1) * spec.tail_sum(n as usize + 1);
        for &v in z.values() {
            assert_relative_eq!(v, kappa, max_relative = 1e-13);
        }
        let zero = compute_tail(&CoeffSet::zeros(8).unwrap(), 3).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let mut single = CoeffSet::zeros(6).unwrap();
        single.generation_mut(4)[9] = 1.0;
        let z = compute_tail(&single, 3).unwrap();
        assert_eq!(z.values()[9], 1.0);
        assert_eq!(z.values().iter().filter(|&&v| v != 0.0).count(), 1);
        assert!(compute_tail(&single, 6).is_err());
    }

    #[test]
    fn tail_matches_matrix_route() {
        let mut c = CoeffSet::zeros(9).unwrap();
        for (i, v) in c.clone().values().iter().enumerate() {
            let x = ((i as f64 + 0.5) * 0.754_877_666).fract() - 0.5 + v;
            c.set(BasisIndex::from_slot(i), x).unwrap();
        }
        for n in 1..=6 {
            let a = compute_tail(&c, n).unwrap();
            let b = apply_tail(&c, n).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_examples() {
        let c4 = bound_constants(4).unwrap();
        assert_eq!(c4.c_bar(Norm::Linf, 1), 2.0);
        let c3 = bound_constants(3).unwrap();
        assert_relative_eq!(c3.l2_final.1, 10.2390, max_relative = 1e-5);
        assert_relative_eq!(c3.l2_final.0, 10.1655, max_relative = 1e-5);
        let c5 = bound_constants(5).unwrap();
        assert_relative_eq!(
            c5.antiderivative_coef(Norm::L2),
            0.009_947_18,
            max_relative = 1e-6
        );
        assert!(bound_constants(1).is_err());
        assert_relative_eq!(
            block_norm(3, 3, Norm::L1),
            pow2_half(7) - SQRT_2 / 4.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn constants_are_positive() {
        for n in 2..=20 {
            let c = bound_constants(n).unwrap();
            for p in Norm::ALL {
                for m in -1..=n as i32 {
                    assert!(c.c_bar(p, m) > 0.0);
                }
                for m in -1..n as i32 {
                    assert!(c.c(p, m) > 0.0);
                }
                for v in [
                    c.a_coef(p),
                    c.b_coef(p),
                    c.c_coef(p),
                    c.d_coef(p),
                    c.antiderivative_coef(p),
                ] {
                    assert!(v > 0.0);
                }
            }
        }
    }

    #[test]
    fn asymptotic_ratios() {
        let n = 20;
        let c = bound_constants(n).unwrap();
        let r1 = c.c_bar(Norm::L1, 20) / c.c(Norm::L1, 19);
        assert!((r1 / ((SQRT_2 - 1.0) * pow2(22)) - 1.0).abs() < 0.01);
        let rinf = c.c_bar(Norm::Linf, 20) / c.c(Norm::Linf, 19);
        assert!((rinf / pow2(12) - 1.0).abs() < 0.01);
        let (lo, hi) = final_l2_bracket(10);
        let scale = PI * pow2(-12);
        assert!((lo * scale - 1.0).abs() < 0.02 && (hi * scale - 1.0).abs() < 0.02);
    }

    #[test]
    fn takagi_has_exact_lower_generations() {
        let spec = takagi(vec![1.0, 0.6, 0.3, 0.2, 0.1, 0.05, 0.02]);
        for p in Norm::ALL {
            let r = check_upper_bounds(&spec, 3, p).unwrap();
            assert!(r.all_hold());
            for row in r.rows.iter().filter(|r| !r.label.starts_with("final")) {
                assert!(row.error < 1e-12, "{row:?}");
            }
        }
        let gap = gap_for_spec(&spec, 3, Norm::L2).unwrap();
        assert!(gap.ratio.is_none());
        assert!(gap.final_error > 0.0);
    }

    #[test]
    fn bounds_hold_for_sine() {
        let spec = "sin".parse::<FunctionSpec>().unwrap();
        for p in Norm::ALL {
            let r = check_upper_bounds(&spec, 4, p).unwrap();
            assert!(r.all_hold(), "{r:#?}");
            assert_eq!(r.summary().len(), 3);
        }
    }

    #[test]
    fn zero_tail_gives_zero_errors() {
        let spec = FunctionSpec::Poly {
            coeffs: vec![2.0, -1.0],
        };
        let r = check_upper_bounds(&spec, 3, Norm::L2).unwrap();
        assert_eq!(r.z_norm, 0.0);
        assert!(r
            .rows
            .iter()
            .all(|row| row.error < 1e-12 && row.bound == 0.0 && row.holds));
    }

    #[test]
    fn lifted_tail_reproduces_z() {
        let z = [0.5, -1.0, 2.0, 0.0, 1.5, -0.25, 0.75, 1.0];
        let s = lift_tail(2, &z).unwrap();
        let scale = pow2_half(-9) / 4.0;
        let mut acc = 0.0;
        for (j, &v) in s.values().iter().enumerate() {
            assert_abs_diff_eq!(v, scale * acc, epsilon = 1e-15);
            if j < z.len() {
                acc += z[j];
            }
        }
    }

    #[test]
    fn worst_cases_reach_closed_forms() {
        for n in 2..=5u32 {
            for m in -1..=n as i32 {
                for p in Norm::ALL {
                    let wc = worst_case_tail(n, m, p).unwrap();
                    let floor = if p == Norm::L2 && m == n as i32 {
                        0.99
                    } else {
                        0.999
                    };
                    assert!(
                        wc.achieved_ratio >= floor * wc.closed_form,
                        "{n} {m} {p}: {wc:?}"
                    );
                    assert!(
                        wc.achieved_ratio <= wc.closed_form * (1.0 + 1e-9)
                            || (p == Norm::L2 && m == n as i32)
                    );
                }
            }
        }
        let wc = worst_case_tail(3, -1, Norm::L1).unwrap();
        assert_eq!(wc.z.iter().filter(|&&v| v != 0.0).count(), 1);
        let wc = worst_case_tail(3, 1, Norm::L2).unwrap();
        assert_relative_eq!(wc.achieved_ratio, 0.5, max_relative = 1e-9);
        let wc = worst_case_tail(3, 3, Norm::Linf).unwrap();
        assert!(wc.z.windows(2).all(|w| w[0] == -w[1]));
    }

    #[test]
    fn gap_demo_reaches_closed_form_ratio() {
        for n in 2..=5 {
            for p in Norm::ALL {
                let g = corollary_gap_demo(n, p).unwrap();
                assert!(g.reaches(0.99), "{g:?}");
            }
        }
        let g = corollary_gap_demo(4, Norm::L2).unwrap();
        let expected = 2.0 * (pow2(10) / (PI * PI) - 0.75).sqrt();
        assert!(g.ratio.is_none_or(|r| r >= 0.99 * expected));
    }

    #[test]
    fn holder_slopes_for_square() {
        let spec = FunctionSpec::Poly {
            coeffs: vec![0.0, 0.0, 1.0],
        };
        let r = holder_decay_check(&spec, 1.0, 4..=9).unwrap();
        assert!(r.holds(0.15), "{r:?}");
        for (s, e) in r.slopes.iter().zip(r.expected) {
            assert_abs_diff_eq!(s.unwrap(), e, epsilon = 0.01);
        }
        let lin = FunctionSpec::Poly {
            coeffs: vec![1.0, 3.0],
        };
        let r = holder_decay_check(&lin, 1.0, 4..=6).unwrap();
        assert_eq!(r.slopes, [None, None, None]);
    }

    #[test]
    fn takagi_tail_decay_rate() {
        let spec = FunctionSpec::Takagi(TakagiSpec::geometric(0.25, 40).unwrap());
        let r = holder_decay_check(&spec, 1.0, 4..=8).unwrap();
        assert_abs_diff_eq!(r.slopes[2].unwrap(), -1.5, epsilon = 1e-6);
    }

    #[test]
    fn norms_of_piecewise_linear_functions() {
        let knots = [1.0, -1.0, 1.0];
        assert_abs_diff_eq!(
            piecewise_linear_norm(&knots, Norm::L1),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            piecewise_linear_norm(&knots, Norm::L2),
            (1.0f64 / 3.0).sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(piecewise_linear_norm(&knots, Norm::Linf), 1.0);
        let fine: Vec<f64> = (0..=256)
            .map(|i| {
                let t = i as f64 / 256.0;
                if t <= 0.5 {
                    1.0 - 4.0 * t
                } else {
                    -1.0 + 4.0 * (t - 0.5)
                }
            })
            .collect();
        assert_abs_diff_eq!(
            grid_norm(&fine, Norm::L2),
            (1.0f64 / 3.0).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn functional_bounds_examples() {
        let r = functional_error_check(&"sin".parse().unwrap(), 4).unwrap();
        assert!(r.all_hold(), "{r:#?}");
        let lin = functional_error_check(
            &FunctionSpec::Poly {
                coeffs: vec![0.5, 1.0],
            },
            3,
        )
        .unwrap();
        assert!(lin.rows.iter().all(|row| row.lhs < 1e-12));
        let (got, want) = extremal_cosine_ratio(3).unwrap();
        assert_relative_eq!(want, 0.079_577_47, max_relative = 1e-6);
        assert_relative_eq!(got, want, max_relative = 1e-6);
    }
}
