//! Command-line definitions and dispatch.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use essbasis_core::basis::{
    coefficient_functionals, functional_bounds, grunblum_certificate, projection_norm, t_norms, truncation,
    unconditional_constant, GrunblumCertificate, DEFAULT_EXACT_LIMIT,
};
use essbasis_core::generators::{generate, Family, FamilySpec, Generated};
use essbasis_core::oracle::{brute_force_operator_norm, OracleConfig};
use essbasis_core::perturbation::{certificate_from_terms, perturbed_constant_bound, sandwich_check, Status};
use essbasis_core::selection::{gliding_hump_select, CandidateSequence, SelectionParams};
use essbasis_core::{make_basis, BasisError, BasisSystem, NormSpec, SampleConfig, VectorR};
use thiserror::Error;

use crate::bvs::{parse_norm, read_bvs, BvsError, BvsFile};
use crate::report::{float, floats, Format, Report};

const ASCENT_STEPS: usize = 400;

#[derive(Parser, Debug, Clone)]
#[command(name = "essbasis", version, about = "Basis constants, perturbation and block selection in finite-dimensional normed spaces")]
pub struct Cli {
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sample count for oracles and sandwich checks.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub samples: usize,
    /// Slack for reported inequality checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Projection norms, K, M, coefficient functionals and t-norms.
    Analyze { basis: PathBuf },
    /// Basis and Grunblum constants only.
    Grunblum { basis: PathBuf },
    /// Perturbation certificate for a candidate system.
    Perturb { basis: PathBuf, candidate: PathBuf },
    /// Gliding-hump selection of a block basic subsequence.
    Select {
        basis: PathBuf,
        candidates: PathBuf,
        /// Lower bound on candidate norms [default: smallest candidate norm].
        #[arg(long)]
        delta: Option<f64>,
        /// First block tolerance [default: delta/4].
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long, default_value_t = 3)]
        min_blocks: usize,
        #[arg(long, default_value_t = 0.5)]
        shrink: f64,
        #[arg(long, default_value_t = 8)]
        max_retries: usize,
        /// Coordinate-null tolerance [default: delta/4].
        #[arg(long)]
        null_tol: Option<f64>,
        /// Coordinates inspected by the null check [default: all].
        #[arg(long)]
        horizon: Option<usize>,
        /// First candidate (1-based) of the tail inspected for coordinate 1.
        #[arg(long, default_value_t = 1)]
        tail_start: usize,
    },
    /// Unconditional constant over sign patterns.
    Uncond {
        basis: PathBuf,
        /// Largest N enumerated exhaustively; larger systems are sampled.
        #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
        exact_max_n: usize,
    },
    /// Brute-force estimates.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Writes a generated family as a BVS file.
    Gen {
        /// canonical, summing, perturbed, random or moving-support.
        family: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        count: usize,
        /// Norm as in a BVS `norm` line, e.g. "lp 2" [default: sup for summing, lp 2 otherwise].
        #[arg(long)]
        norm: Option<String>,
        /// Perturbation size, or the e1 offset of moving-support candidates.
        #[arg(long, default_value_t = 0.01)]
        magnitude: f64,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum OracleCommand {
    /// Sampled estimate of the m-th projection norm next to the exact value.
    Opnorm {
        basis: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = ASCENT_STEPS)]
        ascent_steps: usize,
    },
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Exhausted(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Exhausted(_) => 3,
        }
    }
}

impl From<BvsError> for CliError {
    fn from(e: BvsError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BasisError> for CliError {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::InsufficientCandidates { .. } => CliError::Exhausted(e.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

/// Everything a finished invocation writes.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => Outcome {
            code: if e.use_stderr() { 1 } else { 0 },
            stdout: if e.use_stderr() { String::new() } else { e.to_string() },
            stderr: if e.use_stderr() { e.to_string() } else { String::new() },
        },
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match execute(cli) {
        Ok(stdout) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn oracle_config(cli: &Cli) -> Result<OracleConfig, CliError> {
    Ok(OracleConfig::new(cli.seed, cli.samples, ASCENT_STEPS)?)
}

fn load_basis(path: &Path) -> Result<BasisSystem, CliError> {
    let f = read_bvs(path)?;
    Ok(make_basis(f.vectors, f.norm, None)?)
}

/// Reads a second file that must live in the same space as `b`.
fn load_companion(path: &Path, b: &BasisSystem) -> Result<Vec<VectorR>, CliError> {
    let f = read_bvs(path)?;
    if f.dim != b.dim() {
        return Err(CliError::Input(format!(
            "{}: dim {} does not match the basis dim {}",
            path.display(),
            f.dim,
            b.dim()
        )));
    }
    if &f.norm != b.norm() {
        return Err(CliError::Input(format!(
            "{}: norm `{}` does not match the basis norm `{}`",
            path.display(),
            f.norm,
            b.norm()
        )));
    }
    Ok(f.vectors)
}

fn header(r: &mut Report, b: &BasisSystem) {
    r.text("norm", b.norm()).text("dim", b.dim()).text("count", b.count());
}

fn certificate(r: &mut Report, cert: &GrunblumCertificate) {
    for (m, p) in cert.projections.iter().enumerate() {
        r.norm(format!("P_{}", m + 1), p);
    }
    let method = cert.method.to_string();
    r.measured("K", cert.basis_constant, &method, cert.uncertainty);
    r.measured("M", cert.grunblum_constant, &method, cert.uncertainty);
    r.text("argmax", cert.argmax);
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    if !(cli.tol >= 0.0) {
        return Err(CliError::Input(format!("--tol must be nonnegative, got {}", float(cli.tol))));
    }
    let report = match &cli.command {
        Command::Analyze { basis } => analyze(cli, basis)?,
        Command::Grunblum { basis } => {
            let b = load_basis(basis)?;
            let cert = grunblum_certificate(&b, &oracle_config(cli)?);
            let mut r = Report::new("grunblum");
            header(&mut r, &b);
            certificate(&mut r, &cert);
            r.text("method", cert.method).num("uncertainty", cert.uncertainty);
            r
        }
        Command::Perturb { basis, candidate } => perturb(cli, basis, candidate)?,
        Command::Select {
            basis,
            candidates,
            delta,
            eps0,
            min_blocks,
            shrink,
            max_retries,
            null_tol,
            horizon,
            tail_start,
        } => {
            let b = load_basis(basis)?;
            let c = CandidateSequence::with_min_norm(load_companion(candidates, &b)?, &b)?;
            let delta = delta.unwrap_or(c.delta);
            let mut params = SelectionParams::with_delta(delta);
            params.eps0 = eps0.unwrap_or(params.eps0);
            params.min_blocks = *min_blocks;
            params.shrink = *shrink;
            params.max_retries = *max_retries;
            params.null_tol = null_tol.unwrap_or(params.null_tol);
            params.horizon = horizon.unwrap_or(params.horizon);
            params.tail_start = *tail_start;
            select(cli, &b, &c, &params)?
        }
        Command::Uncond { basis, exact_max_n } => {
            let b = load_basis(basis)?;
            let u = unconditional_constant(&b, *exact_max_n, &oracle_config(cli)?)?;
            let mut r = Report::new("uncond");
            header(&mut r, &b);
            r.norm("U", &u.value)
                .text("pattern", signs(&u.pattern))
                .text("patterns_evaluated", u.patterns_evaluated)
                .text("exhaustive", u.exhaustive)
                .text("method", u.value.method)
                .num("uncertainty", u.value.uncertainty);
            r
        }
        Command::Oracle {
            command: OracleCommand::Opnorm { basis, m, ascent_steps },
        } => opnorm(cli, basis, *m, *ascent_steps)?,
        Command::Gen {
            family,
            dim,
            count,
            norm,
            magnitude,
        } => return generate_file(cli, family, *dim, *count, norm.as_deref(), *magnitude),
    };
    Ok(report.render(cli.format))
}

fn signs(p: &[f64]) -> String {
    p.iter().map(|s| if *s < 0.0 { "-" } else { "+" }).collect::<Vec<_>>().join(" ")
}

fn analyze(cli: &Cli, path: &Path) -> Result<Report, CliError> {
    let b = load_basis(path)?;
    let cfg = oracle_config(cli)?;
    let cert = grunblum_certificate(&b, &cfg);
    let funcs = coefficient_functionals(&b, &cfg);
    let (t, t_inv) = t_norms(&b, &cert, &cfg);

    let mut r = Report::new("analyze");
    header(&mut r, &b);
    certificate(&mut r, &cert);
    let fmethod = funcs.method.to_string();
    for (k, (n, u)) in funcs.norms.iter().zip(&funcs.uncertainties).enumerate() {
        r.measured(format!("xstar_{}", k + 1), *n, &fmethod, *u);
    }
    // Searched lower bounds; the gap to the known upper bounds 1 and K is the uncertainty.
    r.measured("t_norm", t, "oracle-estimate", (1.0 - t).max(0.0));
    let k_upper = cert.basis_constant + cert.uncertainty;
    r.measured("t_inv_norm", t_inv, "oracle-estimate", (k_upper - t_inv).max(0.0));
    let bounds = functional_bounds(&b, &funcs, t_inv, cli.tol);
    for (k, fb) in bounds.iter().enumerate() {
        r.num(format!("functional_bound_{}", k + 1), fb.product);
    }
    r.num("functional_bound_limit", 2.0 * t_inv)
        .text("functional_bound_holds", bounds.iter().all(|fb| fb.holds))
        .text("method", cert.method)
        .num("uncertainty", cert.uncertainty);
    Ok(r)
}

fn perturb(cli: &Cli, basis: &Path, candidate: &Path) -> Result<Report, CliError> {
    let b = load_basis(basis)?;
    let y = load_companion(candidate, &b)?;
    if y.len() != b.count() {
        return Err(CliError::Input(format!(
            "{}: {} vectors but the basis has {}",
            candidate.display(),
            y.len(),
            b.count()
        )));
    }
    let cfg = oracle_config(cli)?;
    let funcs = coefficient_functionals(&b, &cfg);
    let gcert = grunblum_certificate(&b, &cfg);
    let per_term = y
        .iter()
        .enumerate()
        .map(|(i, yi)| (b.norm().eval((b.matrix().column(i) - yi).as_slice()), funcs.norms[i]))
        .collect();
    let cert = certificate_from_terms(per_term, gcert.grunblum_constant);

    let mut r = Report::new("perturb");
    header(&mut r, &b);
    r.text("status", cert.status).num("lambda", cert.lambda);
    let fmethod = funcs.method.to_string();
    for (i, (d, f)) in cert.per_term.iter().enumerate() {
        r.num(format!("distance_{}", i + 1), *d);
        r.measured(format!("xstar_{}", i + 1), *f, &fmethod, funcs.uncertainties[i]);
    }
    r.measured("M", gcert.grunblum_constant, &gcert.method.to_string(), gcert.uncertainty);
    if cert.status == Status::Certified {
        r.num("lower", cert.lower).num("upper", cert.upper);
        let s = sandwich_check(&b, &y, &cert, SampleConfig::new(cli.seed, cli.samples)?)?;
        r.text("sandwich_samples", s.samples)
            .num("sandwich_lower_slack", s.lower_slack)
            .num("sandwich_upper_slack", s.upper_slack)
            .num("sandwich_min_ratio", s.min_ratio)
            .num("sandwich_max_ratio", s.max_ratio)
            .text("sandwich_violations", s.violations.len());
        let pb = perturbed_constant_bound(&b, &y, &cert, &cfg)?;
        r.num("K_y_bound", pb.bound)
            .measured("K_y", pb.actual.basis_constant, &pb.actual.method.to_string(), pb.actual.uncertainty)
            .text("K_y_bound_holds", pb.holds);
    }
    r.text("method", gcert.method).num("uncertainty", gcert.uncertainty);
    Ok(r)
}

fn select(cli: &Cli, b: &BasisSystem, c: &CandidateSequence, params: &SelectionParams) -> Result<Report, CliError> {
    let cfg = oracle_config(cli)?;
    let mut r = Report::new("select");
    header(&mut r, b);
    r.text("candidates", c.len()).num("delta", params.delta);
    let result = match gliding_hump_select(b, c, params, &cfg) {
        Ok(res) => res,
        Err(BasisError::HypothesesFailed { coordinate, value, tol }) => {
            r.text("status", "hypotheses-failed")
                .text("witness_coordinate", coordinate)
                .num("witness_value", value)
                .num("null_tol", tol);
            return Ok(r);
        }
        Err(BasisError::BelowDelta { index, norm, delta }) => {
            r.text("status", "hypotheses-failed")
                .text("witness_candidate", index)
                .num("witness_norm", norm)
                .num("delta", delta);
            return Ok(r);
        }
        Err(BasisError::RetriesExceeded { retries, lambda }) => {
            r.text("status", "refused").num("lambda_sel", lambda).text("retries_used", retries);
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    let sys = result.blocks.system(b)?;
    let ys = result.selected_vectors(c);
    let sandwich = sandwich_check(&sys, &ys, &result.certificate, SampleConfig::new(cli.seed, cli.samples)?)?;
    let joined = |xs: &[usize]| xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");

    r.text("status", result.certificate.status)
        .text("selected", joined(&result.selected_indices))
        .text("breakpoints", joined(&result.blocks.breakpoints))
        .text("successive", result.blocks.is_successive())
        .num("lambda_sel", result.lambda_sel)
        .text("retries_used", result.retries_used)
        .num("eps0_used", result.eps0_used);
    let funcs = coefficient_functionals(&sys, &cfg);
    let fmethod = funcs.method.to_string();
    for (k, step) in result.steps.iter().enumerate() {
        let key = |s: &str| format!("block_{}.{s}", k + 1);
        r.text(key("candidate"), step.candidate)
            .num(key("epsilon"), step.epsilon)
            .num(key("head"), step.head)
            .num(key("tail"), step.tail)
            .num(key("distance"), step.distance)
            .text(key("coefficients"), floats(&result.blocks.coefficients[k]))
            .measured(key("functional"), funcs.norms[k], &fmethod, funcs.uncertainties[k]);
    }
    r.text("sandwich_samples", sandwich.samples)
        .num("sandwich_lower_slack", sandwich.lower_slack)
        .num("sandwich_upper_slack", sandwich.upper_slack)
        .text("sandwich_violations", sandwich.violations.len())
        .text("method", funcs.method)
        .num("uncertainty", funcs.uncertainties.iter().copied().fold(0.0, f64::max));
    Ok(r)
}

fn opnorm(cli: &Cli, path: &Path, m: usize, ascent_steps: usize) -> Result<Report, CliError> {
    let b = load_basis(path)?;
    if m == 0 || m > b.count() {
        return Err(CliError::Input(format!("--m must lie in 1..={}, got {m}", b.count())));
    }
    let pinv = b
        .matrix()
        .clone()
        .pseudo_inverse(f64::EPSILON)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let pm = b.matrix() * truncation(b.count(), m) * pinv;
    let est = brute_force_operator_norm(
        &pm,
        Some(b.matrix()),
        b.norm(),
        SampleConfig::new(cli.seed, cli.samples)?,
        ascent_steps,
    )?;
    let exact = projection_norm(&b, m, &oracle_config(cli)?)?;
    let mut r = Report::new("oracle opnorm");
    header(&mut r, &b);
    r.text("m", m)
        .measured("oracle", est.value, "oracle-estimate", est.last_improvement)
        .text("is_lower_bound", est.is_lower_bound)
        .text("samples_used", est.samples_used)
        .text("ascent_steps", est.ascent_steps)
        .text("witness", floats(est.witness.as_slice()))
        .norm("reference", &exact)
        .text("method", "oracle-estimate")
        .num("uncertainty", est.last_improvement);
    Ok(r)
}

fn generate_file(
    cli: &Cli,
    family: &str,
    dim: usize,
    count: usize,
    norm: Option<&str>,
    magnitude: f64,
) -> Result<String, CliError> {
    let family: Family = family.parse()?;
    let norm = match norm {
        Some(text) => {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            parse_norm(&tokens, 1).map_err(|e| CliError::Input(format!("--norm: {e}")))?
        }
        None if family == Family::Summing => NormSpec::Sup,
        None => NormSpec::euclidean(),
    };
    let g = generate(&FamilySpec {
        family,
        dim,
        count,
        norm: norm.clone(),
        magnitude,
        seed: cli.seed,
    })?;
    let vectors = match g {
        Generated::Basis(b) => b.vectors(),
        Generated::Candidates(c) => c.vectors,
    };
    Ok(BvsFile { norm, dim, vectors }.to_string())
}
