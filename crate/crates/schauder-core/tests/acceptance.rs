//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schauder_core::error_lab::{
    corollary_gap_demo, extremal_cosine_ratio, functional_error_check, holder_decay_check,
};
use schauder_core::generators::{sample_F, takagi_expected_estimate};
use schauder_core::matrix_lab::{
    log10_det_psi, verify_identities, verify_norms, REFERENCE_LOG10_DET,
};
use schauder_core::spline_estimator::{
    estimate, estimate_via_linear_solve, reconstruct_F, truncate,
};
use schauder_core::{FunctionSpec, Norm, Result, TakagiSpec};

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Normwise relative gap `max |a - b| / max |b|`. Individual coefficients can
/// vanish exactly, so entrywise relative error is not meaningful.
fn max_rel_gap(got: &[f64], want: &[f64]) -> f64 {
    let scale = want
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

fn test_functions() -> Vec<FunctionSpec> {
    vec![
        FunctionSpec::CosPi,
        FunctionSpec::Sine { freq: PI },
        FunctionSpec::Cosine { freq: 2.0 * PI },
        FunctionSpec::Cosine { freq: 5.0 },
        FunctionSpec::Poly {
            coeffs: vec![0.0, 0.0, 1.0],
        },
        FunctionSpec::Poly {
            coeffs: vec![1.0, -2.0, 0.5, 3.0],
        },
        FunctionSpec::Takagi(TakagiSpec::geometric(0.5, 40).unwrap()),
        FunctionSpec::Takagi(TakagiSpec::new(vec![1.0, -0.7, 0.4, 0.9, -0.3, 0.2, 0.1]).unwrap()),
    ]
}

fn ac1() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let depth = rng.gen_range(1..=40);
        let c: Vec<f64> = (0..depth).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = TakagiSpec::new(c)?;
        let function = FunctionSpec::Takagi(spec.clone());
        for n in 2..=8 {
            let est = estimate(&sample_F(&function, n + 1)?, 0.0)?;
            let want = takagi_expected_estimate(&spec, n)?;
            worst = worst.max(max_rel_gap(est.coeffs().values(), want.values()));
        }
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst <= 1e-10 && elapsed < Duration::from_secs(5),
        format!("20 random specs, n = 2..8: max relative gap {worst:.2e}, runtime {elapsed:.2?}"),
    ))
}

fn ac2() -> Result<Outcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, reference, tol) in REFERENCE_LOG10_DET {
        let got = log10_det_psi(n)?.log10_abs;
        let ok = (got - reference).abs() <= tol;
        pass &= ok;
        parts.push(format!(
            "n={n}: {got:.4} vs {reference} +-{tol} {}",
            if ok { "ok" } else { "MISS" }
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    Ok(Outcome::new(
        pass,
        format!("{}; runtime {elapsed:.2?}", parts.join("; ")),
    ))
}

fn ac3() -> Result<Outcome> {
    let listed = ["P_n A_n", "Q^-1 Q", "C_", "D_", "lambda_min"];
    let mut worst = 0.0f64;
    let mut own_tolerances = true;
    for n in 1..=8 {
        let report = verify_identities(n)?;
        own_tolerances &= report.all_passed();
        for check in &report.checks {
            if listed.iter().any(|p| check.name.starts_with(p)) {
                worst = worst.max(check.gap);
            }
        }
    }
    Ok(Outcome::new(
        worst < 1e-10 && own_tolerances,
        format!("n <= 8, N <= 256: max gap {worst:.2e}"),
    ))
}

fn ac4() -> Result<Outcome> {
    let (mut exact_gap, mut half_gap) = (0.0f64, 0.0f64);
    let mut brackets_ok = true;
    let mut detail = Vec::new();
    for n in 1..=6 {
        for r in verify_norms(n)? {
            match (r.p, r.bracket) {
                (Norm::L2, Some((lo, hi))) => {
                    if n >= 2 {
                        let inside = r.passed(0.0);
                        brackets_ok &= inside;
                        detail.push(format!(
                            "n={n}: {:.6} in [{lo:.6}, {hi:.6}] (lo - value {:.1e})",
                            r.computed_norm,
                            lo - r.computed_norm
                        ));
                    }
                }
                (Norm::L2, None) => {
                    if !r.cumulative {
                        half_gap = half_gap.max((r.computed_norm - 0.5).abs());
                    }
                }
                _ => exact_gap = exact_gap.max((r.computed_norm - r.closed_form).abs()),
            }
        }
    }
    Ok(Outcome::new(
        exact_gap < 1e-10 && half_gap < 1e-8 && brackets_ok,
        format!(
            "l1/linf gap {exact_gap:.2e}, l2 = 1/2 gap {half_gap:.2e}, final l2: {}",
            detail.join("; ")
        ),
    ))
}

fn ac5() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 3..=5 {
        for p in Norm::ALL {
            let g = corollary_gap_demo(n, p)?;
            let fraction = if p == Norm::L2 { 0.95 } else { 0.99 };
            let ok = g.reaches(fraction);
            pass &= ok;
            let shown = g.ratio.map_or("inf".to_string(), |r| format!("{r:.4}"));
            parts.push(format!("n={n} p={p}: {shown}/{:.4}", g.closed_form_ratio));
        }
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn ac6() -> Result<Outcome> {
    let (mut interp, mut shift, mut identical) = (0.0f64, 0.0f64, true);
    let deltas = [-3.0, 0.5, 4.0, 17.25];
    for spec in test_functions() {
        for n in 1..=8u32 {
            let samples = sample_F(&spec, n + 1)?;
            let base = estimate(&samples, 0.0)?;
            let big_f = reconstruct_F(&base, samples.values()[0]);
            for (k, v) in samples.values().iter().enumerate() {
                let t = k as f64 / samples.values().len().saturating_sub(1) as f64;
                interp = interp.max((big_f.eval(t) - v).abs());
            }
            let truncated = truncate(&base)?;
            let ni = n as i32;
            for d in deltas {
                let moved = estimate(&samples, d)?;
                let expected = -2f64.powf(ni as f64 / 2.0 + 2.0) * d;
                for (a, b) in moved
                    .coeffs()
                    .generation(ni)
                    .iter()
                    .zip(base.coeffs().generation(ni))
                {
                    shift = shift.max(((a - b) - expected).abs() / expected.abs());
                }
                identical &=
                    moved.coeffs().values()[..1 << ni] == base.coeffs().values()[..1 << ni];
                identical &= truncate(&moved)? == truncated;
            }
        }
    }
    Ok(Outcome::new(
        interp <= 1e-9 && shift <= 1e-10 && identical,
        format!("interpolation gap {interp:.2e}, shift relative gap {shift:.2e}, truncated identical: {identical}"),
    ))
}

fn ac7() -> Result<Outcome> {
    let spec = FunctionSpec::Poly {
        coeffs: vec![0.0, 0.0, 1.0],
    };
    let report = holder_decay_check(&spec, 1.0, 4..=14)?;
    let shown: Vec<String> = report
        .slopes
        .iter()
        .zip(report.expected)
        .zip(Norm::ALL)
        .map(|((s, e), p)| {
            format!(
                "p={p}: {} (limit {:.2})",
                s.map_or("n/a".into(), |s| format!("{s:.4}")),
                e + 0.15
            )
        })
        .collect();
    Ok(Outcome::new(report.holds(0.15), shown.join("; ")))
}

fn ac8() -> Result<Outcome> {
    let mut violations = Vec::new();
    let mut rows = 0usize;
    for spec in test_functions() {
        for n in 2..=6 {
            let report = functional_error_check(&spec, n)?;
            rows += report.rows.len();
            for r in report.rows.iter().filter(|r| !r.holds) {
                violations.push(format!(
                    "{spec} n={n} p={}: {} ({:.3e} > {:.3e})",
                    r.p, r.label, r.lhs, r.rhs
                ));
            }
        }
    }
    let mut worst = 0.0f64;
    for n in 3..=5 {
        let (got, want) = extremal_cosine_ratio(n)?;
        worst = worst.max((got - want).abs() / want);
    }
    let pass = violations.is_empty() && worst <= 1e-6;
    let mut detail = format!(
        "{rows} inequalities, {} violations; extremal cosine relative gap {worst:.2e}",
        violations.len()
    );
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    Ok(Outcome::new(pass, detail))
}

fn ac9() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut beyond = 0.0f64;
    for spec in test_functions() {
        for n in 1..=8u32 {
            let samples = sample_F(&spec, n + 1)?;
            let closed = estimate(&samples, spec.f_at_zero())?;
            let solved = estimate_via_linear_solve(&samples, n)?;
            let mut dense = solved.values().to_vec();
            // The dense system carries no f(0); add the closed-form shift.
            let shift = -2f64.powf(n as f64 / 2.0 + 2.0) * spec.f_at_zero();
            for v in &mut dense[1 << n..] {
                *v += shift;
            }
            let gap = max_rel_gap(&dense, closed.coeffs().values());
            if n <= 5 {
                worst = worst.max(gap);
            } else {
                beyond = beyond.max(gap);
            }
        }
    }
    Ok(Outcome::new(
        worst <= 1e-6,
        format!("n <= 5: max relative gap {worst:.2e} (n = 6..8: {beyond:.2e})"),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("AC1 Takagi oracle", ac1),
        ("AC2 log10 det table", ac2),
        ("AC3 structural identities", ac3),
        ("AC4 operator norms", ac4),
        ("AC5 final-generation blow-up", ac5),
        ("AC6 interpolation and sensitivity", ac6),
        ("AC7 Holder decay of t^2", ac7),
        ("AC8 functional bounds", ac8),
        ("AC9 closed form vs dense solve", ac9),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {}", outcome.detail);
        failures += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
