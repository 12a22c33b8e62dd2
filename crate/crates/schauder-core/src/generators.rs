//! Test functions with known derivatives and coefficients: the Takagi class
//! `f = sum c_m phi(2^m t)`, a few smooth benchmarks, and externally sampled data.

use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dyadic::DyadicIndex;
use crate::error::{Error, Result};
use crate::faber_basis::{coeffs_from_function, tent_integral, BasisIndex, CoeffSet};
use crate::numeric::{pairwise_sum, pow2, pow2_half};
use crate::spline_estimator::{estimate, truncate, SampleVector};

/// Default truncation for infinite Takagi series.
pub const DEFAULT_TAKAGI_DEPTH: usize = 40;

/// Coefficients `c_0..=c_M` of `f(t) = sum_m c_m phi(2^m t)`, with `phi` the
/// distance to the nearest integer.
#[derive(Debug, Clone, PartialEq)]
pub struct TakagiSpec {
    c: Vec<f64>,
}

impl TakagiSpec {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.len() > 63 {
            return Err(Error::Invalid(format!(
                "Takagi spec needs 1..=63 coefficients, got {}",
                c.len()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("Takagi coefficients must be finite".into()));
        }
        Ok(Self { c })
    }

    /// `c_m = ratio^m` for `m = 0..=depth`.
    pub fn geometric(ratio: f64, depth: usize) -> Result<Self> {
        Self::new((0..=depth).map(|m| ratio.powi(m as i32)).collect())
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Highest generation with a coefficient.
    pub fn depth(&self) -> usize {
        self.c.len() - 1
    }

    /// `sum_{m >= from} c_m`.
    pub fn tail_sum(&self, from: usize) -> f64 {
        self.c.get(from..).map_or(0.0, pairwise_sum)
    }
}

/// Distance from `x` to the nearest integer.
fn phi(x: f64) -> f64 {
    let r = x - x.floor();
    r.min(1.0 - r)
}

pub fn takagi_f(spec: &TakagiSpec, t: f64) -> f64 {
    let terms: Vec<f64> = spec
        .c
        .iter()
        .enumerate()
        .map(|(m, c)| c * phi(pow2(m as i32) * t))
        .collect();
    pairwise_sum(&terms)
}

/// `F(t) = int_0^t f`, exact at dyadic `t`.
#[allow(non_snake_case)]
pub fn takagi_F(spec: &TakagiSpec, t: DyadicIndex) -> f64 {
    let k = t.numerator();
    let level = t.level() as usize;
    let x = t.to_f64();
    let terms: Vec<f64> = spec
        .c
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            if m >= level {
                // Every generation-m hat left of t is complete: each integrates to 2^-m / 4.
                0.25 * c * x
            } else {
                let shift = level - m;
                let whole = (k >> shift) as f64;
                let frac = (k & ((1u64 << shift) - 1)) as f64 * pow2(-(shift as i32));
                c * pow2(-(m as i32)) * (0.25 * whole + tent_integral(frac))
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// `theta_{m,k} = 2^{m/2} c_m`, zero past the spec's depth, `theta_{-1,0} = 0`.
pub fn takagi_true_coeffs(spec: &TakagiSpec, up_to_generation: i32) -> Result<CoeffSet> {
    let mut out = CoeffSet::zeros(up_to_generation)?;
    for (m, &c) in spec
        .c
        .iter()
        .enumerate()
        .take((up_to_generation + 1).max(0) as usize)
    {
        let v = pow2_half(m as i32) * c;
        out.generation_mut(m as i32).iter_mut().for_each(|x| *x = v);
    }
    Ok(out)
}

/// What [`estimate`] returns on Takagi input with `f0_hat = 0`: the true
/// coefficients below generation `n`, and the whole tail collapsed into
/// generation `n`.
pub fn takagi_expected_estimate(spec: &TakagiSpec, n: u32) -> Result<CoeffSet> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let ni = n as i32;
    let mut out = takagi_true_coeffs(spec, ni)?;
    let last = pow2_half(ni) * spec.tail_sum(n as usize);
    out.generation_mut(ni).iter_mut().for_each(|x| *x = last);
    Ok(out)
}

/// A function of `[0, 1]` known through its derivative `f` or its
/// antiderivative `F` (normalised to `F(0) = 0` for the analytic kinds).
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Takagi(TakagiSpec),
    /// `F(t) = 1 - cos(pi t)`, `f(t) = pi sin(pi t)`.
    CosPi,
    /// `f(t) = sin(freq t)`.
    Sine {
        freq: f64,
    },
    /// `f(t) = cos(freq t)`.
    Cosine {
        freq: f64,
    },
    /// `f(t) = sum_i a_i t^i`.
    Poly {
        coeffs: Vec<f64>,
    },
    /// Samples of `F` with no closed form.
    Sampled(SampledSpec),
}

/// Externally supplied samples of `F`, with proxies for the quantities an
/// exact kind would know.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpec {
    samples: SampleVector,
    proxy: CoeffSet,
    f0: f64,
}

impl SampledSpec {
    pub fn samples(&self) -> &SampleVector {
        &self.samples
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

impl FunctionSpec {
    /// Wraps samples of `F` at level `L >= 3`. Coefficients up to generation
    /// `L - 2` come from the truncated estimate; `f(0)` from a one-sided
    /// second-order difference.
    pub fn sampled(samples: SampleVector) -> Result<Self> {
        if samples.level() < 3 {
            return Err(Error::Invalid(format!(
                "sampled functions need level >= 3, got {}",
                samples.level()
            )));
        }
        let proxy = truncate(&estimate(&samples, 0.0)?)?.coeffs().clone();
        let v = samples.values();
        let h = pow2(-(samples.level() as i32));
        let f0 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        Ok(FunctionSpec::Sampled(SampledSpec { samples, proxy, f0 }))
    }

    pub fn has_exact_derivative(&self) -> bool {
        !matches!(self, FunctionSpec::Sampled(_))
    }

    /// `f(t)`.
    pub fn f(&self, t: f64) -> Result<f64> {
        Ok(match self {
            FunctionSpec::Takagi(s) => takagi_f(s, t),
            FunctionSpec::CosPi => PI * (PI * t).sin(),
            FunctionSpec::Sine { freq } => (freq * t).sin(),
            FunctionSpec::Cosine { freq } => (freq * t).cos(),
            FunctionSpec::Poly { coeffs } => horner(coeffs, t),
            FunctionSpec::Sampled(_) => {
                return Err(Error::Unsupported(
                    "sampled data has no exact derivative".into(),
                ))
            }
        })
    }

    /// `f(0)`, or its proxy for sampled data.
    pub fn f_at_zero(&self) -> f64 {
        match self {
            FunctionSpec::Sampled(s) => s.f0,
            other => other.f(0.0).expect("exact kinds evaluate f"),
        }
    }

    /// `F(t)` at a dyadic point.
    pub fn antiderivative(&self, t: DyadicIndex) -> Result<f64> {
        let x = t.to_f64();
        Ok(match self {
            FunctionSpec::Takagi(s) => takagi_F(s, t),
            FunctionSpec::CosPi => 1.0 - (PI * x).cos(),
            FunctionSpec::Sine { freq } => (1.0 - (freq * x).cos()) / freq,
            FunctionSpec::Cosine { freq } => (freq * x).sin() / freq,
            FunctionSpec::Poly { coeffs } => {
                let integrated: Vec<f64> = std::iter::once(0.0)
                    .chain(coeffs.iter().enumerate().map(|(i, a)| a / (i + 1) as f64))
                    .collect();
                horner(&integrated, x)
            }
            FunctionSpec::Sampled(s) => {
                let level = s.samples.level();
                let on_grid = t.at_level(level).map_err(|_| {
                    Error::Unsupported(format!("{t} is not on the level-{level} sample grid"))
                })?;
                s.samples.values()[on_grid.numerator() as usize]
            }
        })
    }

    /// A single Faber-Schauder coefficient of `f`.
    pub fn coefficient(&self, idx: BasisIndex) -> Result<f64> {
        let (m, k) = (idx.m(), idx.k());
        match self {
            FunctionSpec::Takagi(s) => Ok(if m < 0 {
                0.0
            } else {
                s.c.get(m as usize).map_or(0.0, |c| pow2_half(m) * c)
            }),
            FunctionSpec::Sampled(s) => Ok(s.proxy.get(idx)),
            exact => {
                if m < 0 {
                    return Ok(exact.f(1.0)? - exact.f(0.0)?);
                }
                let h = pow2(-m - 1);
                let a = 2.0 * k as f64 * h;
                Ok(pow2_half(m) * (2.0 * exact.f(a + h)? - exact.f(a)? - exact.f(a + 2.0 * h)?))
            }
        }
    }

    /// Coefficients of generations `-1..=up_to_generation`.
    pub fn true_coeffs(&self, up_to_generation: i32) -> Result<CoeffSet> {
        match self {
            FunctionSpec::Takagi(s) => takagi_true_coeffs(s, up_to_generation),
            FunctionSpec::Sampled(s) => {
                let mut out = CoeffSet::zeros(up_to_generation)?;
                let top = up_to_generation.min(s.proxy.max_generation());
                let n = 1usize << (top + 1);
                for (slot, v) in s.proxy.values()[..n].iter().enumerate() {
                    out.set(BasisIndex::from_slot(slot), *v)?;
                }
                Ok(out)
            }
            exact => {
                let level = (up_to_generation + 1) as u32;
                let samples = sample_f(exact, level)?;
                Ok(coeffs_from_function(&samples)?.0)
            }
        }
    }
}

/// Samples of `F` on the level-`level` grid.
#[allow(non_snake_case)]
pub fn sample_F(spec: &FunctionSpec, level: u32) -> Result<SampleVector> {
    if let FunctionSpec::Sampled(s) = spec {
        return s.samples.restrict(level).map_err(|_| {
            Error::Unsupported(format!(
                "sampled data at level {} cannot be refined to level {level}",
                s.samples.level()
            ))
        });
    }
    if level > 30 {
        return Err(Error::Invalid(format!("sample level {level} exceeds 30")));
    }
    let values = (0..=(1u64 << level))
        .into_par_iter()
        .map(|k| spec.antiderivative(DyadicIndex::new(k, level)?))
        .collect::<Result<Vec<f64>>>()?;
    SampleVector::new(level, values)
}

/// Samples of `f` on the level-`level` grid.
pub fn sample_f(spec: &FunctionSpec, level: u32) -> Result<SampleVector> {
    if !spec.has_exact_derivative() {
        return Err(Error::Unsupported(
            "sampled data has no exact derivative".into(),
        ));
    }
    SampleVector::from_fn(level, |t| spec.f(t).expect("exact kinds evaluate f"))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("bad number `{x}`")))
        })
        .collect()
}

/// Parses `cos_pi`, `sin[:freq]`, `cos[:freq]`, `poly:a0,a1,...`,
/// `takagi:c0,c1,...` and `takagi-geom:ratio[:depth]`.
impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let freq = |arg: Option<&str>| -> Result<f64> {
            match arg {
                None => Ok(PI),
                Some(a) => {
                    let f: f64 = a
                        .trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad frequency `{a}`")))?;
                    if f == 0.0 || !f.is_finite() {
                        return Err(Error::Invalid(
                            "frequency must be finite and non-zero".into(),
                        ));
                    }
                    Ok(f)
                }
            }
        };
        match (kind.to_ascii_lowercase().as_str(), arg) {
            ("cos_pi" | "cos-pi", None) => Ok(FunctionSpec::CosPi),
            ("sin", a) => Ok(FunctionSpec::Sine { freq: freq(a)? }),
            ("cos", a) => Ok(FunctionSpec::Cosine { freq: freq(a)? }),
            ("poly", Some(a)) => Ok(FunctionSpec::Poly {
                coeffs: parse_list(a)?,
            }),
            ("takagi", Some(a)) => Ok(FunctionSpec::Takagi(TakagiSpec::new(parse_list(a)?)?)),
            ("takagi-geom", Some(a)) => {
                let (ratio, depth) = match a.split_once(':') {
                    Some((r, d)) => (
                        r,
                        d.trim()
                            .parse()
                            .map_err(|_| Error::Invalid(format!("bad depth `{d}`")))?,
                    ),
                    None => (a, DEFAULT_TAKAGI_DEPTH),
                };
                let ratio: f64 = ratio
                    .trim()
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad ratio `{ratio}`")))?;
                Ok(FunctionSpec::Takagi(TakagiSpec::geometric(ratio, depth)?))
            }
            _ => Err(Error::Invalid(format!("unknown function spec `{s}`"))),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        match self {
            FunctionSpec::Takagi(s) => write!(f, "takagi:{}", list(&s.c)),
            FunctionSpec::CosPi => f.write_str("cos_pi"),
            FunctionSpec::Sine { freq } => write!(f, "sin:{freq}"),
            FunctionSpec::Cosine { freq } => write!(f, "cos:{freq}"),
            FunctionSpec::Poly { coeffs } => write!(f, "poly:{}", list(coeffs)),
            FunctionSpec::Sampled(s) => write!(f, "sampled(level {})", s.samples.level()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faber_basis::{eval_e, tent};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn d(k: u64, l: u32) -> DyadicIndex {
        DyadicIndex::new(k, l).unwrap()
    }

    #[test]
    fn takagi_values() {
        let one = TakagiSpec::new(vec![1.0]).unwrap();
        assert_eq!(takagi_f(&one, 0.25), 0.25);
        let two = TakagiSpec::new(vec![1.0, 0.5]).unwrap();
        assert_eq!(takagi_f(&two, 0.25), 0.5);
        assert_eq!(takagi_F(&one, d(1, 1)), 0.125);
        assert_eq!(takagi_F(&one, d(1, 0)), 0.25);
    }

    #[test]
    fn takagi_f_agrees_with_hat_series() {
        let spec = TakagiSpec::new(vec![0.7, -0.3, 0.2, 0.9, 0.05]).unwrap();
        for i in 0..=97 {
            let t = i as f64 / 97.0;
            let mut hats = 0.0;
            for (m, c) in spec.c().iter().enumerate() {
                for k in 0..1u64 << m {
                    hats +=
                        pow2_half(m as i32) * c * eval_e(BasisIndex::new(m as i32, k).unwrap(), t);
                }
            }
            assert_abs_diff_eq!(takagi_f(&spec, t), hats, epsilon = 1e-14);
        }
    }

    #[test]
    fn takagi_antiderivative_matches_quadrature() {
        let spec = TakagiSpec::new(vec![1.0, 0.5, 0.25, -0.4]).unwrap();
        // The integrand is linear between level-4 knots, so trapezoid on
        // that grid is exact.
        for j in 0..=16u64 {
            let t = d(j, 4);
            let trap: f64 = (0..j)
                .map(|i| {
                    let a = takagi_f(&spec, i as f64 / 16.0);
                    let b = takagi_f(&spec, (i + 1) as f64 / 16.0);
                    (a + b) / 32.0
                })
                .sum();
            assert_abs_diff_eq!(takagi_F(&spec, t), trap, epsilon = 1e-14);
        }
    }

    #[test]
    fn takagi_coefficient_examples() {
        let spec = TakagiSpec::new(vec![1.0, 0.5, 0.25]).unwrap();
        let c = takagi_true_coeffs(&spec, 5).unwrap();
        assert!(c.generation(1).iter().all(|&v| v == 2f64.sqrt() * 0.5));
        assert!(c.generation(5).iter().all(|&v| v == 0.0));
        assert_eq!(c.generation(-1)[0], 0.0);

        let samples = sample_f(&FunctionSpec::Takagi(spec.clone()), 10).unwrap();
        let (analysed, _) = coeffs_from_function(&samples).unwrap();
        let exact = takagi_true_coeffs(&spec, 9).unwrap();
        for (a, b) in analysed.values().iter().zip(exact.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn expected_estimate_examples() {
        let geo = TakagiSpec::geometric(0.5, 30).unwrap();
        let e = takagi_expected_estimate(&geo, 4).unwrap();
        assert_relative_eq!(e.generation(4)[0], 0.5, max_relative = 1e-8);
        let one = TakagiSpec::new(vec![1.0]).unwrap();
        let e = takagi_expected_estimate(&one, 2).unwrap();
        assert_eq!(e.generation(0), &[1.0]);
        assert!(e
            .generation(1)
            .iter()
            .chain(e.generation(2))
            .all(|&v| v == 0.0));
    }

    #[test]
    fn sample_examples() {
        let s = sample_F(&FunctionSpec::CosPi, 1).unwrap();
        assert_abs_diff_eq!(s.values()[0], 0.0);
        assert_abs_diff_eq!(s.values()[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.values()[2], 2.0);
        let t = FunctionSpec::Takagi(TakagiSpec::new(vec![1.0]).unwrap());
        assert_eq!(sample_F(&t, 1).unwrap().values(), &[0.0, 0.125, 0.25]);
        let p = FunctionSpec::Poly {
            coeffs: vec![0.0, 1.0],
        };
        assert_eq!(
            sample_F(&p, 2).unwrap().values(),
            &[0.0, 1.0 / 32.0, 0.125, 9.0 / 32.0, 0.5]
        );
    }

    #[test]
    fn smooth_coefficients_use_the_midpoint_rule() {
        let p = FunctionSpec::Poly {
            coeffs: vec![0.0, 0.0, 1.0],
        };
        // Second difference of t^2 over a cell of width w is -w^2 / 2.
        let idx = BasisIndex::new(3, 5).unwrap();
        assert_eq!(p.coefficient(idx).unwrap(), -pow2_half(3) * 0.5 * pow2(-6));
        let exact = p.true_coeffs(5).unwrap();
        assert_eq!(exact.get(idx), p.coefficient(idx).unwrap());
    }

    #[test]
    fn parses_specs() {
        assert_eq!(
            "cos_pi".parse::<FunctionSpec>().unwrap(),
            FunctionSpec::CosPi
        );
        assert_eq!(
            "sin".parse::<FunctionSpec>().unwrap(),
            FunctionSpec::Sine { freq: PI }
        );
        assert_eq!(
            "poly:1,2".parse::<FunctionSpec>().unwrap(),
            FunctionSpec::Poly {
                coeffs: vec![1.0, 2.0]
            }
        );
        match "takagi-geom:0.5:10".parse::<FunctionSpec>().unwrap() {
            FunctionSpec::Takagi(s) => assert_eq!(s.depth(), 10),
            other => panic!("{other:?}"),
        }
        for bad in ["", "sin:0", "poly", "takagi:", "wavelet:3"] {
            assert!(bad.parse::<FunctionSpec>().is_err(), "{bad}");
        }
        let spec: FunctionSpec = "takagi:1,0.5".parse().unwrap();
        assert_eq!(spec.to_string().parse::<FunctionSpec>().unwrap(), spec);
    }

    #[test]
    fn sampled_kind() {
        let exact = FunctionSpec::CosPi;
        let s = FunctionSpec::sampled(sample_F(&exact, 12).unwrap()).unwrap();
        assert!(!s.has_exact_derivative());
        assert!(s.f(0.3).is_err());
        assert_abs_diff_eq!(s.f_at_zero(), 0.0, epsilon = 1e-6);
        assert_eq!(sample_F(&s, 4).unwrap(), sample_F(&exact, 4).unwrap());
        assert!(sample_F(&s, 13).is_err());
        let idx = BasisIndex::new(2, 1).unwrap();
        assert_relative_eq!(
            s.coefficient(idx).unwrap(),
            exact.coefficient(idx).unwrap(),
            max_relative = 1e-5
        );
        assert!(s.antiderivative(d(1, 13)).is_err());
    }

    #[test]
    fn takagi_depth_past_grid_uses_complete_cells() {
        // Generations finer than the grid contribute c_m t / 4.
        let spec = TakagiSpec::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(takagi_F(&spec, d(1, 2)), 0.0625);
        assert_eq!(tent(0.5), 0.5);
    }
}
