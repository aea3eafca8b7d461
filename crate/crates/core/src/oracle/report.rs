use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::PotentialSpec;
use crate::solver::SolutionForm;

use super::closed::{sample_z, ClosedForm};
use super::floquet::{FloquetPair, NumericPotential, DEFAULT_STEPS};
use super::OracleError;

const Q_EXCLUSION: f64 = 1e-12;
const ANCHOR_OFFSET: f64 = 5.0;

/// Pass thresholds for [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// `|G_closed − G_floquet|`
    pub agreement: f64,
    /// numeric residual of the nonlinear equation
    pub residual3: f64,
    /// `|G·2√(−p) − 1|` at `p = −10⁶`
    pub asymptote: f64,
    /// `||trace| − 2|` at each root of `Q`
    pub band_edge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            agreement: 1e-8,
            residual3: 1e-6,
            asymptote: 1e-3,
            band_edge: 1e-5,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 4] = ["agreement", "residual3", "asymptote", "band_edge"];

    /// Overrides one tolerance by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance {name} must be positive and finite"));
        }
        let slot = match name {
            "agreement" => &mut self.agreement,
            "residual3" => &mut self.residual3,
            "asymptote" => &mut self.asymptote,
            "band_edge" => &mut self.band_edge,
            other => {
                return Err(format!(
                    "unknown tolerance {other}; expected one of {}",
                    Self::NAMES.join(", ")
                ))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// x points per period on agreement-only rows.
    pub grid_x: usize,
    /// x points per period on rows that also carry the ODE residual.
    pub residual_grid_x: usize,
    /// Number of p values carrying the ODE residual.
    pub residual_p: usize,
    /// Finite-difference step.
    pub h: f64,
    pub steps: usize,
    /// Explicit p values, replacing the automatic anchor-and-gaps policy.
    pub p_values: Option<Vec<f64>>,
    pub tolerances: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid_x: 16,
            residual_grid_x: 32,
            residual_p: 4,
            h: 1e-3,
            steps: DEFAULT_STEPS,
            p_values: None,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSample {
    pub x: f64,
    pub p: f64,
    #[serde(rename = "G_closed")]
    pub g_closed: Option<f64>,
    #[serde(rename = "G_floquet")]
    pub g_floquet: Option<f64>,
    pub residual3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEdgeRow {
    pub root: f64,
    /// `||trace| − 2|`, absent without a period.
    pub trace_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEdgeReport {
    pub expected: usize,
    pub rows: Vec<BandEdgeRow>,
}

impl BandEdgeReport {
    pub fn roots(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.root).collect()
    }

    pub fn max_deviation(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.trace_deviation)
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub max_abs_disagreement: f64,
    pub max_residual3: f64,
    pub agreement_points: usize,
    pub residual_points: usize,
    pub asymptote: Vec<f64>,
    pub band_edge_table: Vec<BandEdgeRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub points: Vec<GreenSample>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Columns `x, p, G_closed, G_floquet, residual3`; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,p,G_closed,G_floquet,residual3\n");
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for s in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.x,
                s.p,
                cell(s.g_closed),
                cell(s.g_floquet),
                cell(s.residual3)
            );
        }
        out
    }
}

struct Row {
    p: f64,
    pair: FloquetPair,
    residual: bool,
}

/// Floquet data on a fixed `(p, x)` grid, reusable across solutions of the
/// same potential.
#[derive(Debug, Clone)]
pub struct OracleGrid {
    period: f64,
    h: f64,
    rows: Vec<(f64, Vec<(f64, f64)>, bool)>,
}

impl OracleGrid {
    /// Below-spectrum anchor `min U − 5`, plus the quarter points of every
    /// gap between consecutive roots of `Q`. Points at band edges or inside
    /// bands are dropped.
    pub fn build(closed: &ClosedForm<'_>, opts: &VerifyOptions) -> Result<Self, OracleError> {
        let pot = NumericPotential::from_spec(closed.spec())?;
        let period = pot.period();
        let candidates = match &opts.p_values {
            Some(ps) => ps.clone(),
            None => auto_p_values(closed, &pot, opts),
        };

        let built: Vec<Option<(f64, FloquetPair)>> = candidates
            .par_iter()
            .map(|&p| {
                if closed.q_at(p).abs() < Q_EXCLUSION {
                    return None;
                }
                FloquetPair::new(&pot, p, opts.steps).ok().map(|pair| (p, pair))
            })
            .collect();
        let mut rows: Vec<Row> = built
            .into_iter()
            .flatten()
            .map(|(p, pair)| Row { p, pair, residual: false })
            .collect();
        for row in rows.iter_mut().take(opts.residual_p) {
            row.residual = true;
        }

        let rows = rows
            .into_par_iter()
            .map(|row| {
                let nx = if row.residual { opts.residual_grid_x } else { opts.grid_x };
                let xs = (0..nx)
                    .map(|i| {
                        let x = period * i as f64 / nx as f64;
                        (x, row.pair.green_diag(x))
                    })
                    .collect();
                (row.p, xs, row.residual)
            })
            .collect();
        Ok(Self {
            period,
            h: opts.h,
            rows,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.0).collect()
    }
}

fn auto_p_values(closed: &ClosedForm<'_>, pot: &NumericPotential, opts: &VerifyOptions) -> Vec<f64> {
    let t = pot.period();
    let n = opts.grid_x.max(opts.residual_grid_x).max(1);
    let u_min = (0..n)
        .map(|i| pot.at(t * i as f64 / n as f64))
        .fold(f64::INFINITY, f64::min);
    let anchor = u_min - ANCHOR_OFFSET;

    let mut mids = Vec::new();
    let mut quarters = Vec::new();
    for pair in closed.q_roots().windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = 0.5 * (a + b);
        if closed.q_at(mid) <= 0.0 {
            continue;
        }
        let trace = pot.monodromy(mid, opts.steps).trace();
        if trace.abs() <= 2.0 {
            continue;
        }
        mids.push(mid);
        quarters.push(a + 0.25 * (b - a));
        quarters.push(a + 0.75 * (b - a));
    }
    let mut ps = vec![anchor];
    ps.extend(mids);
    ps.extend(quarters);
    let mut k = 1.0;
    while ps.len() < opts.residual_p {
        ps.push(anchor - ANCHOR_OFFSET * k);
        k += 1.0;
    }
    ps
}

/// Numeric roots of `Q` and the monodromy trace at each of them.
pub fn band_edges_check(sol: &SolutionForm, spec: &PotentialSpec) -> Result<BandEdgeReport, OracleError> {
    let report = band_edges(&ClosedForm::new(sol, spec), sol.n());
    if report.rows.len() < report.expected {
        return Err(OracleError::RootCountMismatch {
            found: report.rows.len(),
            expected: report.expected,
        });
    }
    Ok(report)
}

fn band_edges(closed: &ClosedForm<'_>, n: usize) -> BandEdgeReport {
    let spec = closed.spec();
    let pot = match spec.period() {
        Some(_) => NumericPotential::from_spec(spec).ok(),
        None => None,
    };
    let rows = closed
        .q_roots()
        .par_iter()
        .map(|&root| BandEdgeRow {
            root,
            trace_deviation: pot
                .as_ref()
                .map(|pot| (pot.monodromy(root, DEFAULT_STEPS).trace().abs() - 2.0).abs()),
        })
        .collect();
    BandEdgeReport {
        expected: 2 * n + 1,
        rows,
    }
}

/// Runs every numeric check of `sol` on a grid built from `sol` itself.
pub fn verify(
    sol: &SolutionForm,
    spec: &PotentialSpec,
    opts: &VerifyOptions,
) -> Result<VerificationReport, OracleError> {
    let grid = OracleGrid::build(&ClosedForm::new(sol, spec), opts)?;
    Ok(verify_on_grid(sol, spec, &grid, &opts.tolerances))
}

/// Runs every numeric check of `sol` against precomputed Floquet data.
pub fn verify_on_grid(
    sol: &SolutionForm,
    spec: &PotentialSpec,
    grid: &OracleGrid,
    tol: &Tolerances,
) -> VerificationReport {
    let closed = ClosedForm::new(sol, spec);
    let points: Vec<GreenSample> = grid
        .rows
        .par_iter()
        .flat_map_iter(|(p, xs, residual)| {
            let closed = &closed;
            xs.iter().map(move |&(x, g_floquet)| GreenSample {
                x,
                p: *p,
                g_closed: closed.eval(x, *p).ok(),
                g_floquet: Some(g_floquet),
                residual3: if *residual {
                    Some(closed.residual3(x, *p, grid.h).unwrap_or(f64::INFINITY))
                } else {
                    None
                },
            })
        })
        .collect();

    let mut max_dis = 0.0_f64;
    let mut max_res = 0.0_f64;
    let mut agreement_points = 0;
    let mut residual_points = 0;
    for s in &points {
        if let Some(f) = s.g_floquet {
            agreement_points += 1;
            let d = s.g_closed.map_or(f64::INFINITY, |g| (g - f).abs());
            max_dis = max_dis.max(if d.is_nan() { f64::INFINITY } else { d });
        }
        if let Some(r) = s.residual3 {
            residual_points += 1;
            max_res = max_res.max(if r.is_nan() { f64::INFINITY } else { r });
        }
    }

    let asymptote = closed.asymptote(&sample_z(spec)).unwrap_or_default();
    let asym_dev = if asymptote.is_empty() {
        f64::INFINITY
    } else {
        asymptote.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
    };
    let edges = band_edges(&closed, sol.n());
    let edge_dev = if edges.rows.len() < edges.expected {
        f64::INFINITY
    } else {
        edges.max_deviation().unwrap_or(0.0)
    };

    let check = |name: &str, value: f64, tolerance: f64| Check {
        name: name.into(),
        value,
        tolerance,
        passed: value <= tolerance,
    };
    let exact = if sol.is_exact_solution(spec) { 0.0 } else { 1.0 };
    let checks = vec![
        check("exact_residual", exact, 0.0),
        check("agreement", max_dis, tol.agreement),
        check("residual3", max_res, tol.residual3),
        check("asymptote", asym_dev, tol.asymptote),
        check("band_edge", edge_dev, tol.band_edge),
    ];
    let passed = checks.iter().all(|c| c.passed);
    VerificationReport {
        points,
        summary: Summary {
            max_abs_disagreement: max_dis,
            max_residual3: max_res,
            agreement_points,
            residual_points,
            asymptote,
            band_edge_table: edges.rows,
            checks,
            passed,
        },
    }
}
