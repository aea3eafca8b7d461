//! Command-line front end.
//!
//! Documents go to `--out` (or standard output), diagnostics to standard
//! error. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | malformed input, unreadable file, or solution/spec hash mismatch |
//! | 2 | no closed form found up to the `N` limit |
//! | 3 | inadmissible potential |
//! | 4 | a numeric check failed its tolerance (the report is still written) |

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classify::{PotentialSpec, DEFAULT_M0_MAX, PRESETS};
use crate::exactalg::{parse_rational, Rational};
use crate::oracle::{band_edges_check, verify, ClosedForm, OracleError, Tolerances, VerifyOptions};
use crate::solver::{emit_solution, parse_solution, solve, to_latex, SolutionDocument, SolutionForm, SolveError, SolveOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_FOUND: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "greendiag", version, about = "Closed-form Green function diagonals for finite-gap potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in potentials.
    Presets,
    /// Find the closed form and write the solution document.
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution document numerically and write the report.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        solution: PathBuf,
        /// x points per period on each p row.
        #[arg(long, default_value_t = 16)]
        grid_x: usize,
        /// Comma-separated p values replacing the automatic grid.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Option<Vec<f64>>,
        /// NAME=FLOAT with NAME one of agreement, residual3, asymptote, band_edge.
        #[arg(long = "tol")]
        tol: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the sample grid as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Roots of Q and the monodromy trace at each.
    Bands {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        source: SolutionArgs,
        #[arg(long = "tol")]
        tol: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the closed form as CSV (x, p, G, flag).
    Eval {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        source: SolutionArgs,
        /// Comma-separated p values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        p: Vec<f64>,
        /// START:END:COUNT, both ends included.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "x")]
        x_range: Option<String>,
        /// Comma-separated x values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Typeset the closed form.
    Latex {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        source: SolutionArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SpecArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// Spec document (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// KEY=RATIONAL preset parameter, e.g. k2=1/2.
    #[arg(long = "param", conflicts_with = "spec")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_M0_MAX)]
    m0_max: usize,
}

#[derive(Debug, Args)]
struct SolutionArgs {
    /// Solution document; solved on the fly when absent.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

/// A failure already reported on the diagnostic stream.
struct Exit(i32);

type Outcome = Result<i32, Exit>;

/// Runs one command. `args` includes the program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let mut ctx = Ctx { stdout, stderr };
    match ctx.dispatch(cli.command) {
        Ok(code) | Err(Exit(code)) => code,
    }
}

struct Ctx<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn fail(&mut self, code: i32, msg: impl std::fmt::Display) -> Exit {
        let _ = writeln!(self.stderr, "error: {msg}");
        Exit(code)
    }

    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<(), Exit> {
        match out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| self.fail(EXIT_INPUT, format!("writing {}: {e}", path.display()))),
            None => self
                .stdout
                .write_all(text.as_bytes())
                .map_err(|e| self.fail(EXIT_INPUT, e)),
        }
    }

    fn dispatch(&mut self, command: Command) -> Outcome {
        match command {
            Command::Presets => {
                let mut text = String::new();
                for (name, about) in PRESETS {
                    let _ = writeln!(text, "{name}\t{about}");
                }
                self.emit(None, &text)?;
                Ok(EXIT_OK)
            }
            Command::Solve { spec, search, out } => {
                let spec = self.load_spec(&spec)?;
                let sol = self.solve(&spec, &search)?;
                let mut doc = emit_solution(&sol, &spec).to_json();
                doc.push('\n');
                self.emit(out.as_deref(), &doc)?;
                Ok(EXIT_OK)
            }
            Command::Verify {
                spec,
                solution,
                grid_x,
                p,
                tol,
                out,
                csv,
            } => {
                let spec = self.load_spec(&spec)?;
                let sol = self.load_solution(&solution, &spec)?;
                let opts = VerifyOptions {
                    grid_x,
                    p_values: p,
                    tolerances: self.tolerances(&tol)?,
                    ..VerifyOptions::default()
                };
                let report = verify(&sol, &spec, &opts).map_err(|e| self.fail(EXIT_INPUT, e))?;
                let mut json = report.to_json();
                json.push('\n');
                self.emit(out.as_deref(), &json)?;
                if let Some(path) = csv {
                    self.emit(Some(&path), &report.to_csv())?;
                }
                for c in &report.summary.checks {
                    let _ = writeln!(
                        self.stderr,
                        "{} {}: {:e} (tolerance {:e})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.value,
                        c.tolerance
                    );
                }
                Ok(if report.summary.passed { EXIT_OK } else { EXIT_TOLERANCE })
            }
            Command::Bands {
                spec,
                source,
                tol,
                out,
            } => {
                let spec = self.load_spec(&spec)?;
                let sol = self.solution(&source, &spec)?;
                let tol = self.tolerances(&tol)?;
                let (report, mut code) = match band_edges_check(&sol, &spec) {
                    Ok(r) => (r, EXIT_OK),
                    Err(OracleError::RootCountMismatch { found, expected }) => {
                        let _ = writeln!(self.stderr, "found {found} real roots of Q, expected {expected}");
                        // still emit what was found
                        (band_edges_partial(&sol, &spec), EXIT_TOLERANCE)
                    }
                    Err(e) => return Err(self.fail(EXIT_INPUT, e)),
                };
                if report.max_deviation().is_some_and(|d| d > tol.band_edge) {
                    code = EXIT_TOLERANCE;
                }
                let mut json = serde_json::to_string_pretty(&report).expect("plain data");
                json.push('\n');
                self.emit(out.as_deref(), &json)?;
                Ok(code)
            }
            Command::Eval {
                spec,
                source,
                p,
                x_range,
                x,
                out,
            } => {
                let spec = self.load_spec(&spec)?;
                let sol = self.solution(&source, &spec)?;
                let xs = match (x_range, x) {
                    (Some(r), _) => self.x_range(&r)?,
                    (None, Some(xs)) => xs,
                    (None, None) => vec![0.0],
                };
                let closed = ClosedForm::new(&sol, &spec);
                let mut csv = String::from("x,p,G,flag\n");
                for &pv in &p {
                    for &xv in &xs {
                        match closed.eval(xv, pv) {
                            Ok(g) => {
                                let _ = writeln!(csv, "{xv},{pv},{g},");
                            }
                            Err(OracleError::Branch { .. }) => {
                                let _ = writeln!(csv, "{xv},{pv},,branch");
                            }
                            Err(e) => return Err(self.fail(EXIT_INPUT, e)),
                        }
                    }
                }
                self.emit(out.as_deref(), &csv)?;
                Ok(EXIT_OK)
            }
            Command::Latex { spec, source, out } => {
                let spec = self.load_spec(&spec)?;
                let sol = self.solution(&source, &spec)?;
                let mut tex = to_latex(&sol);
                if !tex.ends_with('\n') {
                    tex.push('\n');
                }
                self.emit(out.as_deref(), &tex)?;
                Ok(EXIT_OK)
            }
        }
    }

    fn load_spec(&mut self, args: &SpecArgs) -> Result<PotentialSpec, Exit> {
        if let Some(path) = &args.spec {
            let text = self.read(path)?;
            return PotentialSpec::from_json(&text).map_err(|e| self.fail(EXIT_INPUT, e));
        }
        let name = args.preset.as_deref().expect("clap requires --preset or --spec");
        let mut overrides: BTreeMap<String, Rational> = BTreeMap::new();
        for kv in &args.params {
            let Some((k, v)) = kv.split_once('=') else {
                return Err(self.fail(EXIT_INPUT, format!("--param {kv:?}: expected KEY=RATIONAL")));
            };
            let value = parse_rational(v).map_err(|e| self.fail(EXIT_INPUT, format!("--param {k}: {e}")))?;
            overrides.insert(k.trim().to_string(), value);
        }
        PotentialSpec::preset(name, &overrides).map_err(|e| self.fail(EXIT_INPUT, e))
    }

    fn read(&mut self, path: &Path) -> Result<String, Exit> {
        std::fs::read_to_string(path).map_err(|e| self.fail(EXIT_INPUT, format!("reading {}: {e}", path.display())))
    }

    fn load_solution(&mut self, path: &Path, spec: &PotentialSpec) -> Result<SolutionForm, Exit> {
        let text = self.read(path)?;
        let doc = SolutionDocument::from_json(&text).map_err(|e| self.fail(EXIT_INPUT, e))?;
        if doc.spec_hash != spec.hash() {
            return Err(self.fail(
                EXIT_INPUT,
                format!("{} was produced for a different spec (hash mismatch)", path.display()),
            ));
        }
        parse_solution(&doc).map_err(|e| self.fail(EXIT_INPUT, e))
    }

    fn solution(&mut self, args: &SolutionArgs, spec: &PotentialSpec) -> Result<SolutionForm, Exit> {
        match &args.solution {
            Some(path) => self.load_solution(path, spec),
            None => self.solve(spec, &args.search),
        }
    }

    fn solve(&mut self, spec: &PotentialSpec, search: &SearchArgs) -> Result<SolutionForm, Exit> {
        let opts = SolveOptions {
            n_max: search.n_max,
            m0_max: search.m0_max,
        };
        solve(spec, opts).map_err(|e| match e {
            SolveError::NotFound { trace } => {
                for a in &trace {
                    let _ = writeln!(self.stderr, "M0 = {}, N = {}: {}", a.m0, a.n, a.failure);
                }
                self.fail(EXIT_NOT_FOUND, "no closed form found")
            }
            e @ SolveError::NoSolutionAtThisN { .. } => self.fail(EXIT_NOT_FOUND, e),
            e @ (SolveError::Classify(_) | SolveError::InadmissibleInput(_)) => self.fail(EXIT_INADMISSIBLE, e),
        })
    }

    fn tolerances(&mut self, items: &[String]) -> Result<Tolerances, Exit> {
        let mut tol = Tolerances::default();
        for item in items {
            let parsed = item
                .split_once('=')
                .ok_or_else(|| format!("--tol {item:?}: expected NAME=FLOAT"))
                .and_then(|(k, v)| {
                    let v: f64 = v.trim().parse().map_err(|e| format!("--tol {k}: {e}"))?;
                    tol.set(k.trim(), v)
                });
            if let Err(msg) = parsed {
                return Err(self.fail(EXIT_INPUT, msg));
            }
        }
        Ok(tol)
    }

    fn x_range(&mut self, spec: &str) -> Result<Vec<f64>, Exit> {
        let parts: Vec<&str> = spec.split(':').collect();
        let parsed = match parts.as_slice() {
            [a, b, n] => match (a.parse::<f64>(), b.parse::<f64>(), n.parse::<usize>()) {
                (Ok(a), Ok(b), Ok(n)) if n >= 1 => Some((a, b, n)),
                _ => None,
            },
            _ => None,
        };
        let Some((a, b, n)) = parsed else {
            return Err(self.fail(EXIT_INPUT, format!("--x-range {spec:?}: expected START:END:COUNT")));
        };
        if n == 1 {
            return Ok(vec![a]);
        }
        Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
    }
}

fn band_edges_partial(sol: &SolutionForm, spec: &PotentialSpec) -> crate::oracle::BandEdgeReport {
    let closed = ClosedForm::new(sol, spec);
    crate::oracle::BandEdgeReport {
        expected: 2 * sol.n() + 1,
        rows: closed
            .q_roots()
            .iter()
            .map(|&root| crate::oracle::BandEdgeRow {
                root,
                trace_deviation: None,
            })
            .collect(),
    }
}
