//! Small numeric helpers shared across modules.

use std::f64::consts::SQRT_2;

/// `2^(e / 2)` with exact results for even `e` and one rounding for odd `e`.
pub fn pow2_half(e: i32) -> f64 {
    if e % 2 == 0 {
        pow2(e / 2)
    } else {
        SQRT_2 * pow2((e - 1).div_euclid(2))
    }
}

/// Exact `2^e` for exponents in the normal range.
pub fn pow2(e: i32) -> f64 {
    f64::from_bits(((1023 + e as i64) as u64) << 52)
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Vector norms used throughout: `p` is 1, 2 or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn of(self, xs: &[f64]) -> f64 {
        match self {
            Norm::L1 => pairwise_sum(&xs.iter().map(|x| x.abs()).collect::<Vec<_>>()),
            Norm::L2 => {
                let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                let sq: Vec<f64> = xs.iter().map(|x| (x / scale).powi(2)).collect();
                scale * pairwise_sum(&sq).sqrt()
            }
            Norm::Linf => xs.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Linf => "inf",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(Norm::L1),
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "infinity" | "linf" | "max" => Ok(Norm::Linf),
            other => Err(crate::Error::Invalid(format!("unknown norm `{other}`"))),
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
