//! Faber-Schauder hat functions, their antiderivatives, and coefficient
//! analysis/synthesis on dyadic grids.

use crate::error::{Error, Result};
use crate::numeric::{pow2, pow2_half};
use crate::spline_estimator::SampleVector;

/// Largest supported generation.
pub const MAX_GENERATION: i32 = 62;

/// Index `(m, k)` of a basis function; `m = -1` is the linear function `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    m: i32,
    k: u64,
}

impl BasisIndex {
    pub fn new(m: i32, k: u64) -> Result<Self> {
        let ok = match m {
            -1 => k == 0,
            0..=MAX_GENERATION => k < (1u64 << m),
            _ => false,
        };
        if ok {
            Ok(Self { m, k })
        } else {
            Err(Error::InvalidBasisIndex { m: m as i64, k })
        }
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Position in the flattened coefficient vector.
    pub fn slot(&self) -> usize {
        if self.m < 0 {
            0
        } else {
            (1usize << self.m) + self.k as usize
        }
    }

    pub fn from_slot(slot: usize) -> Self {
        if slot == 0 {
            return Self { m: -1, k: 0 };
        }
        let m = usize::BITS - 1 - slot.leading_zeros();
        Self {
            m: m as i32,
            k: (slot - (1usize << m)) as u64,
        }
    }
}

/// Number of functions in generation `m`.
pub fn generation_len(m: i32) -> usize {
    if m < 0 {
        1
    } else {
        1usize << m
    }
}

/// Coefficients of generations `-1..=max_generation`, flattened as
/// `(theta_{-1,0}, theta_{0,0}, theta_{1,0}, theta_{1,1}, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    max_generation: i32,
    values: Vec<f64>,
}

impl CoeffSet {
    pub fn zeros(max_generation: i32) -> Result<Self> {
        check_generation(max_generation)?;
        Ok(Self {
            max_generation,
            values: vec![0.0; 1usize << (max_generation + 1)],
        })
    }

    pub fn from_values(max_generation: i32, values: Vec<f64>) -> Result<Self> {
        check_generation(max_generation)?;
        let expected = 1usize << (max_generation + 1);
        if values.len() != expected {
            return Err(Error::SampleCount {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            max_generation,
            values,
        })
    }

    pub fn max_generation(&self) -> i32 {
        self.max_generation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coefficient at `idx`, or zero for generations beyond the stored range.
    pub fn get(&self, idx: BasisIndex) -> f64 {
        self.values.get(idx.slot()).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, idx: BasisIndex, value: f64) -> Result<()> {
        let slot = idx.slot();
        match self.values.get_mut(slot) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::InvalidBasisIndex {
                m: idx.m as i64,
                k: idx.k,
            }),
        }
    }

    /// The slice holding generation `m`. Panics if `m` is out of range.
    pub fn generation(&self, m: i32) -> &[f64] {
        assert!(
            (-1..=self.max_generation).contains(&m),
            "generation {m} out of range"
        );
        let start = BasisIndex { m, k: 0 }.slot();
        &self.values[start..start + generation_len(m)]
    }

    pub fn generation_mut(&mut self, m: i32) -> &mut [f64] {
        assert!(
            (-1..=self.max_generation).contains(&m),
            "generation {m} out of range"
        );
        let start = BasisIndex { m, k: 0 }.slot();
        &mut self.values[start..start + generation_len(m)]
    }

    /// Keep generations up to `m`, dropping the rest.
    pub fn truncated_to(&self, m: i32) -> Result<Self> {
        if m > self.max_generation {
            return Err(Error::Invalid(format!(
                "cannot truncate generation {} set to generation {m}",
                self.max_generation
            )));
        }
        Self::from_values(m, self.values[..1usize << (m + 1)].to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisIndex, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(slot, &v)| (BasisIndex::from_slot(slot), v))
    }
}

fn check_generation(m: i32) -> Result<()> {
    // Storage is dense, so generations past ~30 would not fit in memory anyway.
    if !(-1..=40).contains(&m) {
        return Err(Error::Invalid(format!(
            "max generation {m} outside -1..=40"
        )));
    }
    Ok(())
}

/// The tent `(min{x, 1 - x})^+`.
#[inline]
pub fn tent(x: f64) -> f64 {
    x.min(1.0 - x).max(0.0)
}

/// Antiderivative of the tent, vanishing at 0.
#[inline]
pub fn tent_integral(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 0.5 {
        0.5 * x * x
    } else if x < 1.0 {
        let r = 1.0 - x;
        0.25 - 0.5 * r * r
    } else {
        0.25
    }
}

/// `e_{m,k}(t)`.
pub fn eval_e(idx: BasisIndex, t: f64) -> f64 {
    if idx.m < 0 {
        return t;
    }
    let x = pow2(idx.m) * t - idx.k as f64;
    pow2_half(-idx.m) * tent(x)
}

/// `psi_{m,k}(t) = int_0^t e_{m,k}`.
pub fn eval_psi(idx: BasisIndex, t: f64) -> f64 {
    if idx.m < 0 {
        return 0.5 * t * t;
    }
    let x = pow2(idx.m) * t - idx.k as f64;
    pow2_half(-3 * idx.m) * tent_integral(x)
}

/// Faber-Schauder coefficients of the piecewise-linear interpolant of `f`
/// on the samples' grid, together with `f(0)`.
pub fn coeffs_from_function(f_samples: &SampleVector) -> Result<(CoeffSet, f64)> {
    let level = f_samples.level() as i32;
    let v = f_samples.values();
    let top = level - 1;
    let mut coeffs = CoeffSet::zeros(top)?;
    let n = v.len() - 1;
    coeffs.values[0] = v[n] - v[0];
    for m in 0..=top {
        let stride = 1usize << (level - m - 1);
        let scale = pow2_half(m);
        for (k, c) in coeffs.generation_mut(m).iter_mut().enumerate() {
            let a = 2 * k * stride;
            *c = scale * (2.0 * v[a + stride] - v[a] - v[a + 2 * stride]);
        }
    }
    Ok((coeffs, v[0]))
}

/// Knot values of `f0 + sum theta e` on the grid of level `max_generation + 1`.
pub fn synthesize(coeffs: &CoeffSet, f0: f64) -> Vec<f64> {
    let level = coeffs.max_generation + 1;
    let n = 1usize << level;
    let mut v = vec![0.0; n + 1];
    v[0] = f0;
    v[n] = f0 + coeffs.values[0];
    for m in 0..=coeffs.max_generation {
        let stride = 1usize << (level - m - 1);
        let half_peak = 0.5 * pow2_half(-m);
        for (k, &c) in coeffs.generation(m).iter().enumerate() {
            let a = 2 * k * stride;
            v[a + stride] = 0.5 * (v[a] + v[a + 2 * stride]) + half_peak * c;
        }
    }
    v
}

/// `f0 + sum theta_{m,k} e_{m,k}(t)`, touching one function per generation.
pub fn eval_expansion(coeffs: &CoeffSet, f0: f64, t: f64) -> f64 {
    let mut acc = f0 + coeffs.values[0] * t;
    for m in 0..=coeffs.max_generation {
        let count = 1u64 << m;
        let cell = (pow2(m) * t).floor();
        if cell < 0.0 || cell > count as f64 {
            continue;
        }
        let k = (cell as u64).min(count - 1);
        let idx = BasisIndex { m, k };
        acc += coeffs.get(idx) * eval_e(idx, t);
    }
    acc
}

/// Grid-restricted second-order modulus of continuity at step `2^-j`.
///
/// Takes the maximum of `|f(a) + f(b) - 2 f((a+b)/2)|` over grid pairs whose
/// distance is at most `2^-j` and whose midpoint is on the grid. This is a
/// lower approximation of the continuum supremum.
pub fn second_order_modulus(f_samples: &SampleVector, j: u32) -> Result<f64> {
    let level = f_samples.level();
    if j > level {
        return Err(Error::Invalid(format!(
            "step 2^-{j} is finer than the sample grid 2^-{level}"
        )));
    }
    let v = f_samples.values();
    let max_half = if j == level {
        0
    } else {
        1usize << (level - j - 1)
    };
    let mut best = 0.0f64;
    for h in 1..=max_half {
        for a in 0..v.len().saturating_sub(2 * h) {
            let d = (v[a] + v[a + 2 * h] - 2.0 * v[a + h]).abs();
            best = best.max(d);
        }
    }
    Ok(best)
}
