//! Dense matrices of the interpolation problem: the sampled antiderivative
//! blocks `Q`, the system matrix `Psi`, its factor `A_n`, the explicit inverse
//! `P_n` with its generation blocks, tail aggregation `U`, and the auxiliary
//! `D`, `E`, `G` matrices. Also norms, determinants and identity checks.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::error_lab::{self, TailVector};
use crate::faber_basis::{eval_psi, generation_len, BasisIndex, CoeffSet};
use crate::numeric::{pow2, pow2_half, Norm};

/// What a [`BlockMatrix`] represents; fixes its shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixRole {
    /// `Q_{(m,k)}`: antiderivatives of generation `m` sampled on the level-`k` grid.
    Q {
        m: i32,
        k: u32,
    },
    /// `Psi_{(m,k)} = [Q_{(-1,k)} ... Q_{(m,k)}]`.
    Psi {
        m: i32,
        k: u32,
    },
    QInverse {
        n: u32,
    },
    A {
        n: u32,
    },
    P {
        n: u32,
    },
    /// Rows of `P_n` belonging to generation `m`.
    C {
        n: u32,
        m: i32,
    },
    /// `U_{(m,n+1)}`.
    U {
        m: i32,
        n: u32,
    },
    D {
        size: usize,
    },
    E {
        size: usize,
    },
    G {
        n: u32,
    },
    /// Projection onto generations `-1..=m`.
    R {
        n: u32,
        m: i32,
    },
    /// Projection onto generation `m`.
    RBar {
        n: u32,
        m: i32,
    },
}

impl MatrixRole {
    pub fn shape(&self) -> (usize, usize) {
        let full = |n: u32| 1usize << (n + 1);
        match *self {
            MatrixRole::Q { m, k } => (1 << k, generation_len(m)),
            MatrixRole::Psi { m, k } => (1 << k, 1 << (m + 1)),
            MatrixRole::QInverse { n } | MatrixRole::A { n } | MatrixRole::P { n } => {
                (full(n), full(n))
            }
            MatrixRole::C { n, m } | MatrixRole::RBar { n, m } => (generation_len(m), full(n)),
            MatrixRole::U { m, n } => (full(n), 1 << m),
            MatrixRole::D { size } | MatrixRole::E { size } => (size, size),
            MatrixRole::G { n } => (1 << n, 1 << n),
            MatrixRole::R { n, m } => (1 << (m + 1), full(n)),
        }
    }
}

/// A dense matrix tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    role: MatrixRole,
    mat: DMatrix<f64>,
}

impl BlockMatrix {
    pub fn new(role: MatrixRole, mat: DMatrix<f64>) -> Result<Self> {
        if mat.shape() != role.shape() {
            return Err(Error::Invalid(format!(
                "{role:?} must be {:?}, got {:?}",
                role.shape(),
                mat.shape()
            )));
        }
        Ok(Self { role, mat })
    }

    pub fn role(&self) -> MatrixRole {
        self.role
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn nrows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mat.ncols()
    }
}

const MAX_DENSE_LEVEL: u32 = 12;

fn check_level(k: u32) -> Result<()> {
    if k == 0 || k > MAX_DENSE_LEVEL {
        return Err(Error::Invalid(format!(
            "grid level {k} outside 1..={MAX_DENSE_LEVEL} for dense matrices"
        )));
    }
    Ok(())
}

fn check_generation(m: i32, max: i32) -> Result<()> {
    if m < -1 || m > max {
        return Err(Error::Invalid(format!("generation {m} outside -1..={max}")));
    }
    Ok(())
}

pub fn build_q(m: i32, k: u32) -> Result<BlockMatrix> {
    check_level(k)?;
    check_generation(m, MAX_DENSE_LEVEL as i32)?;
    let rows = 1usize << k;
    let h = pow2(-(k as i32));
    let mat = DMatrix::from_fn(rows, generation_len(m), |i, j| {
        let idx = BasisIndex::new(m, j as u64).expect("column index in range");
        eval_psi(idx, (i + 1) as f64 * h)
    });
    BlockMatrix::new(MatrixRole::Q { m, k }, mat)
}

pub fn build_psi(m: i32, k: u32) -> Result<BlockMatrix> {
    check_level(k)?;
    check_generation(m, MAX_DENSE_LEVEL as i32)?;
    let rows = 1usize << k;
    let mut mat = DMatrix::zeros(rows, 1 << (m + 1));
    for g in -1..=m {
        let q = build_q(g, k)?;
        let start = BasisIndex::new(g, 0)?.slot();
        mat.view_mut((0, start), q.mat.shape()).copy_from(&q.mat);
    }
    BlockMatrix::new(MatrixRole::Psi { m, k }, mat)
}

/// The square system matrix `Psi_{n+1} = Psi_{(n, n+1)}`.
pub fn build_system(n: u32) -> Result<BlockMatrix> {
    build_psi(n as i32, n + 1)
}

/// Explicit inverse of `Q_{(n+1,n+1)}`: a scaled lower bidiagonal difference.
pub fn build_q_inverse(n: u32) -> Result<BlockMatrix> {
    check_level(n + 1)?;
    let size = 1usize << (n + 1);
    let scale = pow2_half(3 * (n as i32 + 1) + 4);
    let mat = DMatrix::from_fn(size, size, |i, j| {
        if i == j {
            scale
        } else if i == j + 1 {
            -scale
        } else {
            0.0
        }
    });
    BlockMatrix::new(MatrixRole::QInverse { n }, mat)
}

/// `A_n = Q^{-1}_{(n+1,n+1)} Psi_{n+1}`, assembled entry by entry.
pub fn build_a(n: u32) -> Result<BlockMatrix> {
    check_level(n + 1)?;
    let size = 1usize << (n + 1);
    let ni = n as i32;
    let mut mat = DMatrix::zeros(size, size);
    let first = pow2_half(1 - ni);
    for i in 0..size {
        mat[(i, 0)] = (2 * i + 1) as f64 * first;
    }
    for m in 0..=ni {
        let half = 1usize << (ni - m);
        let w = pow2_half(m + 1 - ni);
        for k in 0..(1usize << m) {
            let col = BasisIndex::new(m, k as u64)?.slot();
            let top = k * 2 * half;
            for r in 0..half {
                let v = (2 * r + 1) as f64 * w;
                mat[(top + r, col)] = v;
                mat[(top + 2 * half - 1 - r, col)] = v;
            }
        }
    }
    BlockMatrix::new(MatrixRole::A { n }, mat)
}

/// Rows of `P_n` for generation `m`, built from alternating sign patterns.
pub fn build_c(n: u32, m: i32) -> Result<BlockMatrix> {
    check_level(n + 1)?;
    check_generation(m, n as i32)?;
    let ni = n as i32;
    let cols = 1usize << (n + 1);
    let sign = |j: usize| if j.is_multiple_of(2) { -1.0 } else { 1.0 };
    let mat = if m == -1 {
        let s = pow2_half(-(ni + 3));
        DMatrix::from_fn(1, cols, |_, j| s * sign(j))
    } else if m < ni {
        let s = pow2_half(m - ni - 3);
        let half = 1usize << (ni - m);
        DMatrix::from_fn(1 << m, cols, |k, j| {
            let start = k * 2 * half;
            if j < start || j >= start + 2 * half {
                0.0
            } else if j < start + half {
                s * sign(j - start)
            } else {
                -s * sign(j - start - half)
            }
        })
    } else {
        let u = [SQRT_2, -SQRT_2];
        let v = [1.5 / SQRT_2, -0.5 / SQRT_2];
        DMatrix::from_fn(1 << n, cols, |k, j| match j / 2 {
            c if c < k => u[j % 2],
            c if c == k => v[j % 2],
            _ => 0.0,
        })
    };
    BlockMatrix::new(MatrixRole::C { n, m }, mat)
}

/// `P_n = Psi_{n+1}^{-1} Q_{(n+1,n+1)} = A_n^{-1}`, stacked from [`build_c`].
pub fn build_p(n: u32) -> Result<BlockMatrix> {
    check_level(n + 1)?;
    let size = 1usize << (n + 1);
    let mut mat = DMatrix::zeros(size, size);
    for m in -1..=n as i32 {
        let c = build_c(n, m)?;
        let start = BasisIndex::new(m, 0)?.slot();
        mat.view_mut((start, 0), c.mat.shape()).copy_from(&c.mat);
    }
    BlockMatrix::new(MatrixRole::P { n }, mat)
}

/// `U_{(m,n+1)}`: maps generation `m >= n + 1` into the tail vector.
pub fn build_u(m: i32, n: u32) -> Result<BlockMatrix> {
    if m < n as i32 + 1 || m > 22 {
        return Err(Error::Invalid(format!(
            "U needs n + 1 <= m <= 22, got m = {m}, n = {n}"
        )));
    }
    let rows = 1usize << (n + 1);
    let width = 1usize << (m as u32 - n - 1);
    let scale = pow2_half(3 * (n as i32 + 1 - m));
    let mat = DMatrix::from_fn(
        rows,
        1 << m,
        |i, k| if k / width == i { scale } else { 0.0 },
    );
    BlockMatrix::new(MatrixRole::U { m, n }, mat)
}

/// `z_{n+1} = sum_{m > n} U_{(m,n+1)} theta_m` through explicit matrices.
pub fn apply_tail(thetas: &CoeffSet, n: u32) -> Result<TailVector> {
    let top = thetas.max_generation();
    if top < n as i32 + 1 {
        return Err(Error::Invalid(format!(
            "tail needs generations beyond {n}, coefficients stop at {top}"
        )));
    }
    let mut z = DVector::zeros(1 << (n + 1));
    for m in n as i32 + 1..=top {
        let u = build_u(m, n)?;
        z += &u.mat * DVector::from_column_slice(thetas.generation(m));
    }
    TailVector::new(n, z.as_slice().to_vec())
}

/// `d_ij = min(i, j) - 1/2` (1-based indices).
pub fn build_d(size: usize) -> Result<BlockMatrix> {
    if size == 0 {
        return Err(Error::Invalid("D needs size >= 1".into()));
    }
    let mat = DMatrix::from_fn(size, size, |i, j| (i.min(j) + 1) as f64 - 0.5);
    BlockMatrix::new(MatrixRole::D { size }, mat)
}

/// Tridiagonal inverse of `D`: `(-1, 2, -1)` with corners 3 and 1.
pub fn build_e(size: usize) -> Result<BlockMatrix> {
    if size < 2 {
        return Err(Error::Invalid("E needs size >= 2".into()));
    }
    let (diag, off) = e_bands(size);
    let mat = DMatrix::from_fn(size, size, |i, j| {
        if i == j {
            diag[i]
        } else if i.abs_diff(j) == 1 {
            off[i.min(j)]
        } else {
            0.0
        }
    });
    BlockMatrix::new(MatrixRole::E { size }, mat)
}

fn e_bands(size: usize) -> (Vec<f64>, Vec<f64>) {
    let mut diag = vec![2.0; size];
    diag[0] = 3.0;
    diag[size - 1] = 1.0;
    (diag, vec![-1.0; size - 1])
}

/// `G_n = C_n C_n^T`, computed by multiplication.
pub fn build_g(n: u32) -> Result<BlockMatrix> {
    let c = build_c(n, n as i32)?;
    BlockMatrix::new(MatrixRole::G { n }, &c.mat * c.mat.transpose())
}

pub fn build_r(n: u32, m: i32) -> Result<BlockMatrix> {
    check_level(n + 1)?;
    check_generation(m, n as i32)?;
    let rows = 1usize << (m + 1);
    let mat = DMatrix::from_fn(rows, 1 << (n + 1), |i, j| (i == j) as u8 as f64);
    BlockMatrix::new(MatrixRole::R { n, m }, mat)
}

pub fn build_rbar(n: u32, m: i32) -> Result<BlockMatrix> {
    check_level(n + 1)?;
    check_generation(m, n as i32)?;
    let start = BasisIndex::new(m, 0)?.slot();
    let mat = DMatrix::from_fn(generation_len(m), 1 << (n + 1), |i, j| {
        (j == start + i) as u8 as f64
    });
    BlockMatrix::new(MatrixRole::RBar { n, m }, mat)
}

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 100_000;

/// Largest singular value and its right singular vector, by power
/// iteration on the smaller Gram matrix.
pub fn top_singular(mat: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let (rows, cols) = mat.shape();
    let right_side = cols <= rows;
    let gram = if right_side {
        mat.transpose() * mat
    } else {
        mat * mat.transpose()
    };
    let dim = gram.nrows();
    let mut v = DVector::from_fn(dim, |i, _| {
        1.0 + 0.1 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract()
    });
    v /= v.norm();
    let mut residual = f64::INFINITY;
    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..POWER_MAX_ITER {
        let w = &gram * &v;
        lambda = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            converged = true;
            lambda = 0.0;
            break;
        }
        residual = (&w - lambda * &v).norm() / lambda.abs().max(f64::MIN_POSITIVE);
        v = w / wn;
        if residual <= POWER_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: POWER_MAX_ITER,
            residual,
        });
    }
    let sigma = lambda.max(0.0).sqrt();
    let right = if right_side || sigma == 0.0 {
        v
    } else {
        let r = mat.transpose() * v;
        let norm = r.norm();
        r / norm
    };
    Ok((sigma, right))
}

/// Induced `l_p` operator norm.
pub fn operator_norm(mat: &DMatrix<f64>, p: Norm) -> Result<f64> {
    Ok(match p {
        Norm::L1 => mat
            .column_iter()
            .map(|c| Norm::L1.of(c.as_slice()))
            .fold(0.0, f64::max),
        Norm::Linf => mat
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        Norm::L2 => top_singular(mat)?.0,
    })
}

fn lu_checked(mat: &DMatrix<f64>) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if !mat.is_square() || mat.nrows() == 0 {
        return Err(Error::Invalid("LU needs a non-empty square matrix".into()));
    }
    let lu = mat.clone().lu();
    let diag = lu.u().diagonal();
    let largest = diag.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = mat.nrows() as f64 * f64::EPSILON * largest;
    if let Some((pivot, &d)) = diag.iter().enumerate().find(|(_, d)| d.abs() <= floor) {
        return Err(Error::Conditioning {
            pivot,
            magnitude: d.abs(),
        });
    }
    Ok(lu)
}

/// Solves `mat x = y` by partial-pivot LU.
pub fn lu_solve(mat: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let lu = lu_checked(mat)?;
    let x = lu
        .solve(&DVector::from_column_slice(y))
        .ok_or(Error::Conditioning {
            pivot: 0,
            magnitude: 0.0,
        })?;
    Ok(x.as_slice().to_vec())
}

/// `log10 |det|` and the sign of the determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Log10Det {
    pub log10_abs: f64,
    pub sign: f64,
}

/// Determinant via pivot logarithms, never forming the product.
pub fn log10_det(mat: &DMatrix<f64>) -> Result<Log10Det> {
    let lu = lu_checked(mat)?;
    let diag = lu.u().diagonal();
    let mut sign: f64 = lu.p().determinant();
    let mut logs = Vec::with_capacity(diag.len());
    for d in diag.iter() {
        sign *= d.signum();
        logs.push(d.abs().log10());
    }
    Ok(Log10Det {
        log10_abs: crate::numeric::pairwise_sum(&logs),
        sign,
    })
}

/// `log10 det Psi_n`, where `Psi_n` is the `2^n x 2^n` system matrix.
pub fn log10_det_psi(n: u32) -> Result<Log10Det> {
    if !(1..=10).contains(&n) {
        return Err(Error::Invalid(format!(
            "determinant table supports 1 <= n <= 10, got {n}"
        )));
    }
    log10_det(build_psi(n as i32 - 1, n)?.matrix())
}

/// Reference values `(n, log10 det Psi_n, tolerance)`.
pub const REFERENCE_LOG10_DET: [(u32, f64, f64); 5] = [
    (2, -4.97, 0.02),
    (3, -13.4, 0.05),
    (4, -33.9, 0.1),
    (5, -82.03, 0.3),
    (6, -192.81, 0.5),
];

/// Ascending eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence
/// bisection.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal length mismatch");
    // Number of eigenvalues strictly below x.
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let q_prev = if q == 0.0 {
                f64::EPSILON * off[i - 1].abs().max(1.0)
            } else {
                q
            };
            q = diag[i] - x - off[i - 1] * off[i - 1] / q_prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + off.get(i).map_or(0.0, |x| x.abs());
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (0..n)
        .into_par_iter()
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if count_below(mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Closed-form spectrum of `E_N`: `2 - 2 cos((2j+1) pi / (2N))`.
pub fn e_spectrum(size: usize) -> Vec<f64> {
    (0..size)
        .map(|j| 2.0 - 2.0 * ((2 * j + 1) as f64 * PI / (2 * size) as f64).cos())
        .collect()
}

/// One line of an identity report.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub gap: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.gap.is_finite() && self.gap < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub n: u32,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    pub fn max_gap(&self) -> f64 {
        self.checks.iter().map(|c| c.gap).fold(0.0, f64::max)
    }
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn identity_gap(a: &DMatrix<f64>) -> f64 {
    max_abs_diff(a, &DMatrix::identity(a.nrows(), a.ncols()))
}

/// Checks the structural identities at level `n` (and size `N = 2^n` for
/// `D`, `E`, `G`).
pub fn verify_identities(n: u32) -> Result<IdentityReport> {
    if !(1..=8).contains(&n) {
        return Err(Error::Invalid(format!(
            "identity checks support 1 <= n <= 8, got {n}"
        )));
    }
    let ni = n as i32;
    let mut checks = Vec::new();
    let mut push = |name: String, gap: f64, tolerance: f64| {
        checks.push(IdentityCheck {
            name,
            gap,
            tolerance,
        })
    };

    let a = build_a(n)?;
    let p = build_p(n)?;
    push(
        "P_n A_n = I".into(),
        identity_gap(&(&p.mat * &a.mat)),
        1e-10,
    );

    let qinv = build_q_inverse(n)?;
    let q = build_q(ni + 1, n + 1)?;
    push(
        "Q^-1 Q = I".into(),
        identity_gap(&(&qinv.mat * &q.mat)),
        1e-12,
    );

    if n <= 6 {
        let psi = build_system(n)?;
        let product = &qinv.mat * &psi.mat;
        let rel = max_abs_diff(&product, &a.mat) / a.mat.amax();
        push("A_n = Q^-1 Psi (relative)".into(), rel, 1e-9);
    }

    let blocks: Vec<BlockMatrix> = (-1..ni).map(|m| build_c(n, m)).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..blocks.len())
        .flat_map(|i| (0..blocks.len()).map(move |j| (i, j)))
        .collect();
    let cross: Vec<IdentityCheck> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let prod = &blocks[i].mat * blocks[j].mat.transpose();
            let target = if i == j {
                DMatrix::identity(prod.nrows(), prod.ncols()) * 0.25
            } else {
                DMatrix::zeros(prod.nrows(), prod.ncols())
            };
            IdentityCheck {
                name: format!("C_{} C_{}^T", i as i32 - 1, j as i32 - 1),
                gap: max_abs_diff(&prod, &target),
                tolerance: 1e-10,
            }
        })
        .collect();
    for c in cross {
        push(c.name, c.gap, c.tolerance);
    }

    let rbar_p = &build_rbar(n, ni)?.mat * &p.mat;
    push(
        "Rbar_n P_n = C_n".into(),
        max_abs_diff(&rbar_p, &build_c(n, ni)?.mat),
        1e-15,
    );

    let size = 1usize << n;
    let d = build_d(size)?;
    let g = build_g(n)?;
    let g_target = &d.mat * 4.0 - DMatrix::identity(size, size) * 0.75;
    push(
        "G_n = 4 D - 3/4 I".into(),
        max_abs_diff(&g.mat, &g_target),
        1e-10,
    );

    if size >= 2 {
        let e = build_e(size)?;
        push(
            format!("D_{size} E_{size} = I"),
            identity_gap(&(&d.mat * &e.mat)),
            1e-10,
        );

        let (diag, off) = e_bands(size);
        let computed = tridiagonal_eigenvalues(&diag, &off);
        let expected = e_spectrum(size);
        push(
            format!("lambda_min(E_{size}) = 2 - 2 cos(pi / {})", 2 * size),
            (computed[0] - expected[0]).abs(),
            1e-10,
        );
        let spectrum_gap = computed
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        push(format!("spectrum(E_{size})"), spectrum_gap, 1e-10);

        let d_norm = operator_norm(&d.mat, Norm::L2)?;
        let closed = 0.5 / (1.0 - (PI / (2 * size) as f64).cos());
        push(
            format!("||D_{size}||_2 (relative)"),
            (d_norm - closed).abs() / closed,
            1e-8,
        );
    }

    Ok(IdentityReport { n, checks })
}

/// A computed operator norm next to its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub p: Norm,
    pub m: i32,
    /// `true` for generations `-1..=m` stacked, `false` for generation `m` alone.
    pub cumulative: bool,
    pub computed_norm: f64,
    pub closed_form: f64,
    pub relative_gap: f64,
    /// For the final generation in `l2`, the admissible interval.
    pub bracket: Option<(f64, f64)>,
}

impl NormReport {
    fn new(p: Norm, m: i32, cumulative: bool, computed: f64, closed: f64) -> Self {
        Self {
            p,
            m,
            cumulative,
            computed_norm: computed,
            closed_form: closed,
            relative_gap: (computed - closed).abs() / closed.max(f64::EPSILON),
            bracket: None,
        }
    }

    /// Passes if the value is inside the bracket (with a relative slack for
    /// the iterative solver) or the gap is below `tol`.
    pub fn passed(&self, tol: f64) -> bool {
        match self.bracket {
            Some((lo, hi)) => {
                let slack = 1e-9 * hi;
                self.computed_norm >= lo - slack && self.computed_norm <= hi + slack
            }
            None => self.relative_gap < tol,
        }
    }
}

/// Operator norms of the generation blocks of `P_n` against their closed forms.
pub fn verify_norms(n: u32) -> Result<Vec<NormReport>> {
    if !(1..=8).contains(&n) {
        return Err(Error::Invalid(format!(
            "norm checks support 1 <= n <= 8, got {n}"
        )));
    }
    let ni = n as i32;
    let p = build_p(n)?;
    let mut out = Vec::new();
    for m in -1..=ni {
        let block = &build_rbar(n, m)?.mat * &p.mat;
        for norm in [Norm::L1, Norm::Linf] {
            out.push(NormReport::new(
                norm,
                m,
                false,
                operator_norm(&block, norm)?,
                error_lab::block_norm(n, m, norm),
            ));
        }
        let l2 = operator_norm(&block, Norm::L2)?;
        if m < ni {
            out.push(NormReport::new(Norm::L2, m, false, l2, 0.5));
        } else {
            let (lo, hi) = error_lab::final_l2_bracket(n);
            let mut r = NormReport::new(Norm::L2, m, false, l2, lo);
            r.bracket = Some((lo, hi));
            out.push(r);
        }
        if m < ni {
            let stacked = &build_r(n, m)?.mat * &p.mat;
            for norm in Norm::ALL {
                out.push(NormReport::new(
                    norm,
                    m,
                    true,
                    operator_norm(&stacked, norm)?,
                    error_lab::cumulative_norm(n, m, norm),
                ));
            }
        }
    }
    Ok(out)
}
