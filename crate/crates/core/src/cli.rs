//! Command-line front end. Exit codes: 0 success, 1 input error,
//! 2 verification failure, 3 the randomized search gave up.

use crate::abp::Abp;
use crate::error::{Error, Result, Side};
use crate::expr::{Formula, FreePoly, SPARSE_DEGREE_CAP};
use crate::field::FieldCtx;
use crate::higman::linearize;
use crate::linmat::matrix_to_json;
use crate::pipeline::{
    factor_polynomial, stable_associates, verify_factorization, FactorOptions, FactorizationDoc,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::{Read, Write};
use std::path::PathBuf;

/// Degree up to which pretty output expands factors into monomials.
const PRETTY_SPARSE_DEGREE: usize = 8;

#[derive(Parser, Debug)]
#[command(
    name = "ncfactor",
    version,
    about = "Factor noncommutative polynomials over finite fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Factor a polynomial into irreducibles.
    Factor {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        /// Also emit factors as explicit sums of monomials.
        #[arg(long)]
        sparse: bool,
        #[arg(long, value_enum, default_value_t = Route::Left)]
        route: Route,
    },
    /// Print the linear pencil and the transformation matrices.
    Linearize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
    },
    /// Decide whether two polynomials are stable associates.
    StableAssoc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr1: String,
        #[arg(long)]
        expr2: String,
    },
    /// Decide irreducibility.
    Irreducible {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Route::Left)]
        route: Route,
    },
    /// Check a stored factorization against a polynomial.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Factorization JSON written by `factor` (`-` for stdin).
        #[arg(long = "in", value_name = "FILE")]
        file: PathBuf,
        #[arg(long)]
        expr: String,
    },
}

#[derive(Args, Debug)]
pub struct Common {
    /// Field as p^k (or p).
    #[arg(long, default_value = "2^1")]
    pub field: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Random evaluations added to the exact check for high degree.
    #[arg(long, default_value_t = 40)]
    pub trials: usize,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Input {
    #[arg(long)]
    pub expr: Option<String>,
    /// Read the expression from a file (`-` for stdin).
    #[arg(long = "in", value_name = "FILE")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Pretty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Left,
    Right,
}

impl From<Route> for Side {
    fn from(r: Route) -> Side {
        match r {
            Route::Left => Side::Left,
            Route::Right => Side::Right,
        }
    }
}

fn read_source(path: &PathBuf, stdin: &mut dyn Read) -> Result<String> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        stdin
            .read_to_string(&mut text)
            .map_err(|e| Error::Io(format!("stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

fn read_expr(input: &Input, ctx: &FieldCtx, stdin: &mut dyn Read) -> Result<Formula> {
    let text = match (&input.expr, &input.file) {
        (Some(e), _) => e.clone(),
        (None, Some(p)) => read_source(p, stdin)?,
        (None, None) => return Err(Error::Io("no expression given".into())),
    };
    Formula::parse(text.trim(), ctx)
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Error::Io(e.to_string()))
}

fn line(out: &mut dyn Write, text: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::Io(e.to_string()))
}

/// Exit code for a library error.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Exhausted(_) | Error::Internal(_) => 3,
        _ => 1,
    }
}

fn sparse_input(f: &Formula) -> Option<FreePoly> {
    (f.degree_bound() <= SPARSE_DEGREE_CAP)
        .then(|| f.to_sparse().ok())
        .flatten()
}

fn describe(g: &Abp, sparse: Option<&FreePoly>) -> String {
    match sparse {
        Some(p) => p.to_string(),
        None => format!(
            "<branching program: degree {}, size {}>",
            g.degree().unwrap_or(0),
            g.size()
        ),
    }
}

#[derive(Serialize)]
struct StableDoc {
    field: String,
    associated: bool,
    dims: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_field: Option<String>,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    p: Option<Vec<Vec<u64>>>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    q: Option<Vec<Vec<u64>>>,
}

#[derive(Serialize)]
struct IrreducibleDoc {
    field: String,
    input: String,
    irreducible: bool,
    r: usize,
}

#[derive(Serialize)]
struct VerifyDoc {
    field: String,
    input: String,
    ok: bool,
    verification: crate::pipeline::Verification,
}

/// Run a parsed command, writing to `out`. Returns the process exit code.
pub fn run(cli: &Cli, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Factor {
            common,
            input,
            sparse,
            route,
        } => {
            let ctx = FieldCtx::from_spec(&common.field)?;
            let f = read_expr(input, &ctx, stdin)?;
            let opts = FactorOptions {
                route: (*route).into(),
                trials: common.trials,
                ..Default::default()
            };
            let fact = factor_polynomial(&f, common.seed, &opts)?;
            let total: usize = fact.degrees().iter().sum();
            let want_sparse =
                *sparse || (common.format == Format::Pretty && total <= PRETTY_SPARSE_DEGREE);
            let sf = if want_sparse && total <= SPARSE_DEGREE_CAP {
                Some(fact.sparse_factors(sparse_input(&f).as_ref())?)
            } else {
                None
            };
            match common.format {
                Format::Json => emit(
                    out,
                    &fact.to_doc(if *sparse { sf.as_deref() } else { None }),
                )?,
                Format::Pretty => {
                    line(out, format!("field  {}", ctx.spec()))?;
                    line(out, format!("input  {}", fact.input))?;
                    line(out, format!("r      {}", fact.r()))?;
                    for (i, g) in fact.factors.iter().enumerate() {
                        line(
                            out,
                            format!("f{}     {}", i + 1, describe(g, sf.as_ref().map(|v| &v[i]))),
                        )?;
                    }
                    let v = &fact.verification;
                    line(
                        out,
                        format!("check  {} ({})", if v.ok { "ok" } else { "FAILED" }, v.mode),
                    )?;
                }
            }
            Ok(if fact.verification.ok { 0 } else { 2 })
        }
        Command::Linearize { common, input } => {
            let ctx = FieldCtx::from_spec(&common.field)?;
            let f = read_expr(input, &ctx, stdin)?;
            let cert = linearize(&f)?;
            match common.format {
                Format::Json => emit(out, &cert.to_doc(&f.to_string()))?,
                Format::Pretty => {
                    line(out, format!("field  {}", ctx.spec()))?;
                    line(out, format!("input  {}", f))?;
                    line(out, format!("s      {}", cert.s))?;
                    for r in 0..cert.l.rows() {
                        let row: Vec<String> = (0..cert.l.cols())
                            .map(|c| form_string(&cert.l.entry(r, c)))
                            .collect();
                        line(out, format!("  [ {} ]", row.join(" | ")))?;
                    }
                }
            }
            Ok(0)
        }
        Command::StableAssoc {
            common,
            expr1,
            expr2,
        } => {
            let ctx = FieldCtx::from_spec(&common.field)?;
            let f = Formula::parse(expr1, &ctx)?;
            let g = Formula::parse(expr2, &ctx)?;
            let n = f.nvars.max(g.nvars);
            let res = stable_associates(&f.with_nvars(n), &g.with_nvars(n), common.seed)?;
            match common.format {
                Format::Json => emit(
                    out,
                    &StableDoc {
                        field: ctx.spec(),
                        associated: res.associated,
                        dims: [res.dims.0, res.dims.1],
                        witness_field: res.witness_field.as_ref().map(|w| w.spec()),
                        p: res.p.as_ref().map(matrix_to_json),
                        q: res.q.as_ref().map(matrix_to_json),
                    },
                )?,
                Format::Pretty => line(out, res.associated)?,
            }
            Ok(0)
        }
        Command::Irreducible {
            common,
            input,
            route,
        } => {
            let ctx = FieldCtx::from_spec(&common.field)?;
            let f = read_expr(input, &ctx, stdin)?;
            let opts = FactorOptions {
                route: (*route).into(),
                trials: common.trials,
                ..Default::default()
            };
            let fact = factor_polynomial(&f, common.seed, &opts)?;
            if !fact.verification.ok {
                return Ok(2);
            }
            let irreducible = fact.r() == 1 && fact.degrees()[0] >= 1;
            match common.format {
                Format::Json => emit(
                    out,
                    &IrreducibleDoc {
                        field: ctx.spec(),
                        input: f.to_string(),
                        irreducible,
                        r: fact.r(),
                    },
                )?,
                Format::Pretty => line(out, irreducible)?,
            }
            Ok(0)
        }
        Command::Verify { common, file, expr } => {
            let text = read_source(file, stdin)?;
            let doc: FactorizationDoc =
                serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
            let ctx = FieldCtx::from_spec(&doc.field)?;
            let f = Formula::parse(expr, &ctx)?;
            let factors = doc.factors()?;
            let v = verify_factorization(&f, &factors, common.trials, common.seed);
            let ok = v.ok;
            match common.format {
                Format::Json => emit(
                    out,
                    &VerifyDoc {
                        field: ctx.spec(),
                        input: f.to_string(),
                        ok,
                        verification: v,
                    },
                )?,
                Format::Pretty => line(out, ok)?,
            }
            Ok(if ok { 0 } else { 2 })
        }
    }
}

fn form_string(form: &[crate::field::Fe]) -> String {
    let mut terms = Vec::new();
    for (i, c) in form.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let v = c.index();
        terms.push(match (i, v) {
            (0, _) => v.to_string(),
            (_, 1) => format!("x{i}"),
            _ => format!("{v}*x{i}"),
        });
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Parse arguments, run, and report errors on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut std::io::stdin(), &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}
