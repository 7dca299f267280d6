//! The six command implementations.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use specshift::circlefn::{self, CircleFunction};
use specshift::doi::{haagerup_rep, loewner_kernel, ol_seminorm_lower_bound, schur_norm_lower_bound};
use specshift::linalg::{principal_log_unitary, ComplexMatrix, UnitaryEigen};
use specshift::random::{bounded_hermitian, random_hermitian_rank, random_unitary, seeded_rng};
use specshift::report::VerificationReport;
use specshift::ssf_selfadjoint::{
    derivative_check_sa, report_order, verify_trace_formula_sa, Polynomial,
};
use specshift::ssf_unitary::{
    derivative_check, path_decompose, path_nu, ssf_counting, ssf_fourier, verify_trace_formula,
    winding_profile, xi_from_nu, VerifyOptions,
};

use crate::output::{self, OutputFormat};
use crate::pair::{generate_pair, PairFile, PairKind};
use crate::{CliError, Globals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SsfMethod {
    Counting,
    Fourier,
    Path,
}

fn load_pair(path: &Path) -> Result<(PairFile, ComplexMatrix, ComplexMatrix), CliError> {
    let pair = PairFile::load(path).map_err(|e| CliError::invalid(e.to_string()))?;
    let (u, v) = pair.matrices().map_err(|e| CliError::invalid(e.to_string()))?;
    Ok((pair, u, v))
}

fn parse_function(spec: &str) -> Result<CircleFunction, CliError> {
    circlefn::from_spec_json(spec).map_err(|e| CliError::invalid(e.to_string()))
}

/// Interpret a function spec as a real polynomial for Hermitian pairs:
/// the `trig` kind with nonnegative powers and real coefficients.
fn parse_polynomial(spec: &str) -> Result<Polynomial, CliError> {
    let f = parse_function(spec)?;
    let coeffs = f.coeffs().ok_or_else(|| {
        CliError::invalid("hermitian pairs need a polynomial: a `trig` spec with powers >= 0")
    })?;
    let degree = coeffs.keys().max().copied().unwrap_or(0);
    if coeffs.keys().any(|&n| n < 0) {
        return Err(CliError::invalid(
            "hermitian pairs need a polynomial: negative powers are not allowed",
        ));
    }
    let mut real = vec![0.0; degree as usize + 1];
    for (&n, c) in coeffs {
        if c.im.abs() > 1e-12 {
            return Err(CliError::invalid(
                "hermitian pairs need a polynomial: coefficients must be real",
            ));
        }
        real[n as usize] = c.re;
    }
    Ok(Polynomial::new(real))
}

fn emit(globals: &Globals, content: &str) -> Result<(), CliError> {
    output::emit(globals.out.as_deref(), content).map_err(CliError::invalid)
}

pub fn cmd_gen_pair(
    globals: &Globals,
    dim: usize,
    kind: PairKind,
    scale: f64,
    rank: usize,
) -> Result<u8, CliError> {
    let pair =
        generate_pair(dim, kind, scale, rank, globals.seed).map_err(CliError::invalid)?;
    emit(globals, &(pair.to_json() + "\n"))?;
    Ok(0)
}

pub fn cmd_ssf(globals: &Globals, path: &Path, method: SsfMethod) -> Result<u8, CliError> {
    let (pair, u, v) = load_pair(path)?;
    if pair.kind != PairKind::Unitary {
        return Err(CliError::mismatch(format!(
            "ssf method `{method:?}` needs a unitary pair, got kind `{}`",
            pair.kind
        )));
    }
    let content = match method {
        SsfMethod::Counting => {
            let xi = ssf_counting(&u, &v).map_err(|e| CliError::invalid(e.to_string()))?;
            match globals.format {
                Some(OutputFormat::Json) => output::spectral_shift_json(&xi),
                _ => output::spectral_shift_csv(&xi),
            }
        }
        SsfMethod::Fourier => {
            let coeffs = ssf_fourier(&u, &v, globals.fourier_order)
                .map_err(|e| CliError::invalid(e.to_string()))?;
            match globals.format {
                Some(OutputFormat::Csv) => output::coefficients_csv(&coeffs),
                _ => output::coefficients_json(&coeffs),
            }
        }
        SsfMethod::Path => {
            let path_data = path_decompose(&u, &v, globals.quad_nodes)
                .map_err(|e| CliError::invalid(e.to_string()))?;
            if path_data.branch_ambiguous {
                eprintln!(
                    "warning: generator spectrum within 1e-8 of the branch cut; \
                     any branch still yields a valid path"
                );
            }
            let nu = path_nu(&path_data.samples);
            let coeffs = xi_from_nu(&nu, globals.fourier_order);
            match globals.format {
                Some(OutputFormat::Csv) => output::coefficients_csv(&coeffs),
                _ => output::coefficients_json(&coeffs),
            }
        }
    };
    emit(globals, &content)?;
    Ok(0)
}

pub fn cmd_verify(globals: &Globals, path: &Path, spec: &str) -> Result<u8, CliError> {
    let (pair, u, v) = load_pair(path)?;
    let f = parse_function(spec)?;
    if !f.everywhere_differentiable() {
        return Err(CliError::invalid(
            "function is not everywhere differentiable; the trace-formula verifier needs f' on all of the circle",
        ));
    }
    let report = match pair.kind {
        PairKind::Unitary => {
            let opts = VerifyOptions { tol: globals.tol };
            verify_trace_formula(&u, &v, &f, opts)
                .map_err(|e| CliError::invalid(e.to_string()))?
        }
        PairKind::Hermitian => {
            let poly = parse_polynomial(spec)?;
            verify_trace_formula_sa(&u, &v, &poly, globals.tol)
                .map_err(|e| CliError::invalid(e.to_string()))?
        }
    };
    let report = attach_config(report, globals);
    println!("{}", report.to_json());
    if let Some(out) = &globals.out {
        output::atomic_write(out, (report.to_json() + "\n").as_bytes())
            .map_err(CliError::invalid)?;
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn attach_config(report: VerificationReport, globals: &Globals) -> VerificationReport {
    report
        .with_meta("seed", serde_json::json!(globals.seed))
        .with_meta("config_tol", serde_json::json!(globals.tol))
        .with_meta("quad_nodes", serde_json::json!(globals.quad_nodes))
        .with_meta("fourier_order", serde_json::json!(globals.fourier_order))
        .with_meta("trials", serde_json::json!(globals.trials))
}

/// Midpoint-equispaced spectral grid: `d` angles offset half a step so the
/// grid never lands on the sawtooth's singular angles 0 and pi.
fn midpoint_grid(dim: usize) -> UnitaryEigen {
    let angles: Vec<f64> = (0..dim)
        .map(|k| -PI + (k as f64 + 0.5) * TAU / dim as f64)
        .collect();
    UnitaryEigen::from_angles(angles).expect("midpoint grid angles are valid")
}

pub fn cmd_lipnorm(globals: &Globals, spec: &str, dims: &[usize]) -> Result<u8, CliError> {
    if dims.is_empty() {
        return Err(CliError::invalid("--dims must list at least one dimension"));
    }
    let f = parse_function(spec)?;
    let upper = haagerup_rep(&f).ok().map(|rep| rep.upper_bound());

    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        if dim < 1 {
            return Err(CliError::invalid("dimensions must be at least 1"));
        }
        // Random-pair trials cost one dense eigendecomposition per trial;
        // above dim 64 the trial count is scaled down to keep the work
        // bounded (the structured probes and the Schur certificates carry
        // the estimate there).
        let ol_trials = if dim <= 64 {
            globals.trials
        } else {
            let scaled = (globals.trials as u128 * 64u128.pow(3) / (dim as u128).pow(3)) as usize;
            scaled.max(1)
        };
        let ol = ol_seminorm_lower_bound(&f, dim, ol_trials, globals.seed);
        let grid = midpoint_grid(dim);
        let kernel =
            loewner_kernel(&f, &grid, &grid).map_err(|e| CliError::invalid(e.to_string()))?;
        let schur = schur_norm_lower_bound(&kernel, globals.trials, globals.seed);
        let mut lower = ol.max(schur);
        if let Some(u) = upper {
            // Both bounds are certified mathematically; estimator noise of
            // order 1e-10 may still put the lower estimate a hair above the
            // algebraic upper bound, so the reported sandwich is clamped.
            debug_assert!(lower <= u + 1e-9 * (1.0 + u), "lower {lower} vs upper {u}");
            lower = lower.min(u);
        }
        rows.push((dim, lower, upper));
    }
    let content = match globals.format {
        Some(OutputFormat::Json) => output::lipnorm_json(&rows),
        _ => output::lipnorm_csv(&rows),
    };
    emit(globals, &content)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_derivative_check(
    globals: &Globals,
    pair_path: Option<&Path>,
    dim: Option<usize>,
    kind: PairKind,
    scale: f64,
    spec: &str,
    t_list: &[f64],
) -> Result<u8, CliError> {
    if t_list.is_empty()
        || t_list.iter().any(|&t| !(t > 0.0))
        || t_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(CliError::invalid(
            "--t-list must be positive and strictly decreasing",
        ));
    }

    let (kind, base, direction) = match (pair_path, dim) {
        (Some(path), None) => {
            let (pair, u, v) = load_pair(path)?;
            match pair.kind {
                PairKind::Unitary => {
                    let log = principal_log_unitary(&v.mul(&u.adjoint()))
                        .map_err(|e| CliError::invalid(e.to_string()))?;
                    if log.branch_ambiguous {
                        eprintln!(
                            "warning: generator spectrum within 1e-8 of the branch cut"
                        );
                    }
                    (PairKind::Unitary, u, log.matrix)
                }
                PairKind::Hermitian => {
                    let k = v.sub(&u);
                    (PairKind::Hermitian, u, k)
                }
            }
        }
        (None, Some(dim)) => {
            if dim < 1 {
                return Err(CliError::invalid("--dim must be at least 1"));
            }
            if !(scale > 0.0) {
                return Err(CliError::invalid("--scale must be positive"));
            }
            let mut rng = seeded_rng(globals.seed, 0xdc);
            match kind {
                PairKind::Unitary => {
                    let u = random_unitary(dim, &mut rng);
                    let a = random_hermitian_rank(dim, dim, scale, &mut rng);
                    (PairKind::Unitary, u, a)
                }
                PairKind::Hermitian => {
                    let a = bounded_hermitian(dim, &mut rng);
                    let k = random_hermitian_rank(dim, dim, scale, &mut rng);
                    (PairKind::Hermitian, a, k)
                }
            }
        }
        _ => {
            return Err(CliError::invalid(
                "exactly one of --pair or --dim is required",
            ))
        }
    };

    let report = match kind {
        PairKind::Unitary => {
            let f = parse_function(spec)?;
            derivative_check(&base, &direction, &f, t_list)
                .map_err(|e| CliError::invalid(e.to_string()))?
        }
        PairKind::Hermitian => {
            let poly = parse_polynomial(spec)?;
            derivative_check_sa(&base, &direction, &poly, t_list)
                .map_err(|e| CliError::invalid(e.to_string()))?
        }
    };
    let report = attach_config(report, globals);
    println!("{}", report.to_json());
    if let Some(out) = &globals.out {
        output::atomic_write(out, (report.to_json() + "\n").as_bytes())
            .map_err(CliError::invalid)?;
    }
    Ok(if report_order(&report) >= 0.9 { 0 } else { 1 })
}

pub fn cmd_profile(
    globals: &Globals,
    path: &Path,
    spec: &str,
    grid: usize,
) -> Result<u8, CliError> {
    let (pair, u, v) = load_pair(path)?;
    if pair.kind != PairKind::Unitary {
        return Err(CliError::invalid("profile needs a unitary pair"));
    }
    let f = parse_function(spec)?;
    let profile =
        winding_profile(&u, &v, &f, grid).map_err(|e| CliError::invalid(e.to_string()))?;
    emit(globals, &output::profile_csv(&profile))?;
    if globals.out.is_some() {
        println!(
            "max_residual={} max_adjacent_jump={}",
            profile.max_residual, profile.max_adjacent_jump
        );
    }
    Ok(0)
}
