use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use schauder_core::error_lab::{check_upper_bounds, functional_error_check};
use schauder_core::generators::sample_F;
use schauder_core::matrix_lab::{
    log10_det_psi, verify_identities, verify_norms, REFERENCE_LOG10_DET,
};
use schauder_core::spline_estimator::{self, reconstruct_F, reconstruct_f, roughness_robust_with};
use schauder_core::{DyadicIndex, FunctionSpec, Norm};

use crate::input::read_samples;
use crate::{Failure, Format};

fn sink(output: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Failure::input(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_spec(spec: &str) -> Result<FunctionSpec, Failure> {
    spec.parse()
        .map_err(|e: schauder_core::Error| Failure::input(e.to_string()))
}

#[derive(Serialize)]
struct CoeffEntry {
    m: i32,
    k: u64,
    value: f64,
}

#[derive(Serialize)]
struct EstimateReport {
    n: u32,
    f0: f64,
    truncated: bool,
    coeffs: Vec<CoeffEntry>,
}

pub fn estimate(
    input: &Path,
    n: Option<u32>,
    f0: f64,
    truncate: bool,
    format: Format,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let samples = read_samples(input, n.map(|n| n + 1))?;
    let mut result = spline_estimator::estimate(&samples, f0)?;
    if truncate {
        result = spline_estimator::truncate(&result)?;
    }
    let report = EstimateReport {
        n: result.n(),
        f0: result.f0_hat(),
        truncated: result.is_truncated(),
        coeffs: result
            .coeffs()
            .iter()
            .map(|(idx, value)| CoeffEntry {
                m: idx.m(),
                k: idx.k(),
                value,
            })
            .collect(),
    };
    let mut out = sink(output)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)
                .map_err(|e| Failure::input(e.to_string()))?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(
                out,
                "# n={} f0={} truncated={}",
                report.n, report.f0, report.truncated
            )?;
            writeln!(out, "m,k,value")?;
            for c in &report.coeffs {
                writeln!(out, "{},{},{}", c.m, c.k, c.value)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn roughness(input: &Path, n: Option<u32>, f0: f64) -> Result<(), Failure> {
    let samples = read_samples(input, n.map(|n| n + 2))?;
    let r = roughness_robust_with(&samples, f0)?;
    println!("n = {}", r.n);
    println!("roughness = {}", r.value);
    println!("l2_norm = {}", r.l2_norm);
    Ok(())
}

pub fn demo_instability(
    n: u32,
    spec: &str,
    f0s: &[f64],
    points: usize,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let spec = parse_spec(spec)?;
    if !(1..=16).contains(&n) {
        return Err(Failure::input(format!("--n must lie in 1..=16, got {n}")));
    }
    if !points.is_power_of_two() || !(2..=1 << 20).contains(&points) {
        return Err(Failure::input(format!(
            "--points must be a power of two in [2, 2^20], got {points}"
        )));
    }
    let level = points.trailing_zeros();
    let samples = sample_F(&spec, n + 1)?;
    let fits: Vec<_> = f0s
        .iter()
        .map(|&f0| {
            let est = spline_estimator::estimate(&samples, f0)?;
            Ok((
                f0,
                reconstruct_F(&est, samples.values()[0]),
                reconstruct_f(&est),
            ))
        })
        .collect::<schauder_core::Result<_>>()?;

    let mut out = sink(output)?;
    write!(out, "t,F,f")?;
    for (f0, _, _) in &fits {
        write!(out, ",F_hat[f0={f0}],f_hat[f0={f0}]")?;
    }
    writeln!(out)?;
    let mut deviation = vec![0.0f64; fits.len()];
    for i in 0..=points {
        let t = i as f64 / points as f64;
        let big_f = spec.antiderivative(DyadicIndex::new(i as u64, level)?)?;
        let f = spec.f(t)?;
        write!(out, "{t},{big_f},{f}")?;
        for (j, (_, big_fh, fh)) in fits.iter().enumerate() {
            let v = fh.eval(t);
            deviation[j] = deviation[j].max((v - f).abs());
            write!(out, ",{},{v}", big_fh.eval(t))?;
        }
        writeln!(out)?;
    }
    out.flush()?;

    let cells = samples.values().len() - 1;
    for ((f0, big_fh, _), dev) in fits.iter().zip(deviation) {
        let interp = samples
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| (big_fh.eval(k as f64 / cells as f64) - v).abs())
            .fold(0.0, f64::max);
        eprintln!(
            "f0_hat = {f0}: max |f_hat - f| = {dev:.6}, max sample gap of F_hat = {interp:.3e}"
        );
    }
    Ok(())
}

pub fn verify(n_max: u32) -> Result<(), Failure> {
    if !(1..=8).contains(&n_max) {
        return Err(Failure::input(format!(
            "--n-max must lie in 1..=8, got {n_max}"
        )));
    }
    let (mut total, mut failed) = (0usize, 0usize);
    let mut tally = |ok: bool| {
        total += 1;
        failed += usize::from(!ok);
        if ok {
            "ok"
        } else {
            "FAIL"
        }
    };
    for n in 1..=n_max {
        for c in verify_identities(n)?.checks {
            println!(
                "[{}] n={n} {}: gap {:.3e} (tolerance {:.0e})",
                tally(c.passed()),
                c.name,
                c.gap,
                c.tolerance
            );
        }
        for r in verify_norms(n)? {
            let block = if r.cumulative {
                format!("R_{}", r.m)
            } else {
                format!("Rbar_{}", r.m)
            };
            let tag = tally(r.passed(1e-8));
            match r.bracket {
                Some((lo, hi)) => println!(
                    "[{tag}] n={n} ||{block} P||_{}: {} in [{lo}, {hi}]",
                    r.p, r.computed_norm
                ),
                None => println!(
                    "[{tag}] n={n} ||{block} P||_{}: {} vs {} (relative gap {:.3e})",
                    r.p, r.computed_norm, r.closed_form, r.relative_gap
                ),
            }
        }
    }
    println!("verify: {total} checks, {failed} failed");
    if failed > 0 {
        return Err(Failure::verification(format!(
            "{failed} of {total} checks failed"
        )));
    }
    Ok(())
}

pub fn dettable(output: Option<&Path>) -> Result<(), Failure> {
    let mut out = sink(output)?;
    writeln!(out, "n,log10_det,table,tolerance,gap,within_tolerance")?;
    let mut outside = Vec::new();
    for (n, table, tol) in REFERENCE_LOG10_DET {
        let got = log10_det_psi(n)?.log10_abs;
        let gap = got - table;
        let ok = gap.abs() <= tol;
        if !ok {
            outside.push(n.to_string());
        }
        writeln!(out, "{n},{got:.6},{table},{tol},{gap:.6},{ok}")?;
    }
    out.flush()?;
    if !outside.is_empty() {
        return Err(Failure::verification(format!(
            "log10 det outside the table tolerance for n = {}",
            outside.join(", ")
        )));
    }
    Ok(())
}

pub fn bounds(
    spec: &str,
    input: Option<&Path>,
    n: u32,
    p: &str,
    full: bool,
) -> Result<(), Failure> {
    let spec = match input {
        Some(path) => FunctionSpec::sampled(read_samples(path, None)?)?,
        None => parse_spec(spec)?,
    };
    let norms: Vec<Norm> = if p.eq_ignore_ascii_case("all") {
        Norm::ALL.to_vec()
    } else {
        vec![p
            .parse()
            .map_err(|e: schauder_core::Error| Failure::input(e.to_string()))?]
    };
    let mut violations = 0usize;
    println!("# {spec}, n = {n}");
    println!("p,check,error,bound,holds");
    for &norm in &norms {
        let report = check_upper_bounds(&spec, n, norm)?;
        let rows = if full {
            report.rows.clone()
        } else {
            report.summary()
        };
        violations += report.rows.iter().filter(|r| !r.holds).count();
        for r in rows {
            println!("{norm},{},{:e},{:e},{}", r.label, r.error, r.bound, r.holds);
        }
    }
    if spec.has_exact_derivative() {
        let report = functional_error_check(&spec, n)?;
        for r in report.rows.iter().filter(|r| norms.contains(&r.p)) {
            if !r.holds {
                violations += 1;
            }
            if full
                || !r.holds
                || r.label.starts_with("||F")
                || r.label.contains(&format!("f_{n} "))
            {
                println!("{},{},{:e},{:e},{}", r.p, r.label, r.lhs, r.rhs, r.holds);
            }
        }
    }
    if violations > 0 {
        return Err(Failure::verification(format!(
            "{violations} bound violations"
        )));
    }
    Ok(())
}

pub fn sample(spec: &str, level: u32, decimal: bool, output: Option<&Path>) -> Result<(), Failure> {
    let spec = parse_spec(spec)?;
    let samples = sample_F(&spec, level)?;
    let mut out = sink(output)?;
    writeln!(out, "t,F")?;
    let scale = (1u64 << level) as f64;
    for (k, v) in samples.values().iter().enumerate() {
        if decimal {
            writeln!(out, "{},{v}", k as f64 / scale)?;
        } else {
            writeln!(out, "{k}/2^{level},{v}")?;
        }
    }
    out.flush()?;
    Ok(())
}
