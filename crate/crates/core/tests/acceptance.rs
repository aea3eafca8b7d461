//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any FAIL.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use greendiag::classify::{admissible, degrees, Admissibility, PotentialSpec, DEFAULT_M0_MAX};
use greendiag::elliptic::{ellint_k, jacobi_cn_sn_dn};
use greendiag::exactalg::{format_rational, parse_rational, rat, BiPoly, Rational, UniPoly};
use greendiag::oracle::{
    band_edges_check, eval_g, verify, verify_on_grid, ClosedForm, OracleGrid, VerifyOptions,
};
use greendiag::solver::{emit_solution, parse_solution, solve, SolutionForm, SolveOptions};

type Outcome = Result<String, String>;

fn preset(name: &str, params: &[(&str, Rational)]) -> PotentialSpec {
    let o: BTreeMap<_, _> = params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    PotentialSpec::preset(name, &o).expect("valid preset")
}

fn solved(spec: &PotentialSpec) -> Result<SolutionForm, String> {
    solve(spec, SolveOptions::default()).map_err(|e| e.to_string())
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took < limit {
        Ok(())
    } else {
        Err(format!("took {took:?}, limit {limit:?}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(r: Rational) -> UniPoly {
    UniPoly::constant(r)
}

fn ci(n: i64) -> UniPoly {
    c(rat(n, 1))
}

/// Triple-gap numerator slices and `Q` as printed for general `m`, `k²`.
fn triple_gap_reference(m: &Rational, k2: &Rational) -> (BiPoly, UniPoly) {
    let t = UniPoly::monomial(rat(1, 1), 1);
    let m2 = c(m * m);
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    let k = c(k2.clone());
    let k4 = &k * &k;
    let k6 = &k4 * &k;
    let z = &t;

    let p2 = &(&ci(-2) * &m2) * &(&ci(7) + &(&k * &(&ci(-14) + &(&ci(3) * z))));
    let p1 = &m4
        * &(&(&ci(49) + &(&k * &(&ci(-256) + &(&ci(78) * z))))
            + &(&k4 * &(&ci(256) + &(&(&ci(3) * z) * &(&ci(-52) + &(&ci(15) * z))))));
    let inner6 = &ci(-256) + &(&(&ci(3) * z) * &(&ci(121) + &(&(&ci(5) * z) * &(&ci(-18) + &(&ci(5) * z)))));
    let p0 = &(&ci(-3) * &m6)
        * &(&(&(&ci(12) + &(&(&ci(8) * &k) * &(&ci(-19) + &(&ci(9) * z))))
            + &(&(&ci(3) * &k4) * &(&ci(128) + &(z * &(&ci(-121) + &(&ci(45) * z))))))
            + &(&k6 * &inner6));
    let p = BiPoly::new(vec![p0, p1, p2, ci(1)]);

    // the same polynomials, now in p
    let pv = &t;
    let f1 = &(&(&ci(-4) + &(&ci(8) * &k)) * &m2) + pv;
    let f2 = &(&(&(&ci(9) - &(&ci(96) * &k)) + &(&ci(96) * &k4)) * &m4)
        + &(&(&(&(&ci(10) * &(&ci(-1) + &(&ci(2) * &k))) * &m2) * pv) + &(pv * pv));
    let f3 = &(&(&(&ci(9) - &(&ci(42) * &k)) + &(&ci(33) * &k4)) * &m4)
        + &(&(&(&(&ci(2) * &(&ci(-5) + &(&ci(7) * &k))) * &m2) * pv) + &(pv * pv));
    let f4 = &(&(&(&ci(3) * &k) * &(&ci(-8) + &(&ci(11) * &k))) * &m4)
        + &(&(&(&(&ci(2) * &(&ci(-2) + &(&ci(7) * &k))) * &m2) * pv) + &(pv * pv));
    let q = -(&(&(&f1 * &f2) * &f3) * &f4);
    (p, q)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for u0 in [0_i32, 5, -3] {
        let spec = preset("constant", &[("u0", rat(i64::from(u0), 1))]);
        let sol = solved(&spec)?;
        ensure(sol.p() == &BiPoly::from_int_table(&[&[1]]), || format!("u0={u0}: P != 1"))?;
        ensure(sol.q() == &UniPoly::from_ints(&[i64::from(u0), -1]), || format!("u0={u0}: Q != u0 - p"))?;
        for i in 0..10 {
            let x = -2.0 + 0.45 * f64::from(i);
            let p = f64::from(u0) - 0.5 - 1.3 * f64::from(i);
            let want = 1.0 / (2.0 * (f64::from(u0) - p).sqrt());
            let got = eval_g(&sol, &spec, x, p).map_err(|e| e.to_string())?;
            let rel = (got - want).abs() / want;
            ensure(rel <= 2.0 * f64::EPSILON, || format!("u0={u0} x={x} p={p}: {got} vs {want}"))?;
            worst = worst.max(rel);
        }
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!("worst relative error {worst:e}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    for k2 in [rat(1, 2), rat(1, 4)] {
        let m = rat(1, 1);
        let spec = preset("cn2-gap-3", &[("m", m.clone()), ("k2", k2.clone())]);
        let sol = solved(&spec)?;
        let (p, q) = triple_gap_reference(&m, &k2);
        let label = format_rational(&k2);
        ensure(sol.p() == &p, || format!("k2={label}: P differs"))?;
        ensure(sol.q() == &q, || format!("k2={label}: Q differs"))?;
    }
    let half = preset("cn2-gap-3", &[]);
    let sol = solved(&half)?;
    let factored = {
        let p = UniPoly::monomial(rat(1, 1), 1);
        let a = &(&p * &p) - &ci(15);
        let b = &(&(&p * &p) - &(&ci(3) * &p)) - &c(rat(15, 4));
        let d = &(&(&p * &p) + &(&ci(3) * &p)) - &c(rat(15, 4));
        -(&(&(&p * &a) * &b) * &d)
    };
    ensure(sol.q() == &factored, || "factored Q differs at k2=1/2".into())?;
    within(Duration::from_secs(10), start)?;
    Ok("P and Q identical at k2 = 1/2 and 1/4".into())
}

const ALL_PRESETS: [&str; 4] = ["constant", "cn2-gap-1", "cn2-gap-2", "cn2-gap-3"];
const ELLIPTIC: [&str; 3] = ["cn2-gap-1", "cn2-gap-2", "cn2-gap-3"];

fn criterion_3() -> Outcome {
    let mut count = 0;
    for name in ALL_PRESETS {
        let spec = preset(name, &[]);
        let sol = solved(&spec)?;
        ensure(sol.is_exact_solution(&spec), || format!("{name}: nonzero residual"))?;
        count += 1;
    }
    for k2 in [rat(1, 4), rat(1, 3), rat(3, 4)] {
        for name in ELLIPTIC {
            let spec = preset(name, &[("m", rat(2, 1)), ("k2", k2.clone())]);
            let sol = solved(&spec)?;
            ensure(sol.is_exact_solution(&spec), || format!("{name} k2={k2}: nonzero residual"))?;
            count += 1;
        }
    }
    Ok(format!("{count} solutions with identically zero residual"))
}

fn criterion_4() -> Outcome {
    for name in ALL_PRESETS {
        let spec = preset(name, &[]);
        let sol = solved(&spec)?;
        let n = sol.n();
        let m = sol.m();
        ensure(sol.q_coeff(2 * n + 1) == rat(-1, 1), || format!("{name}: q_(2N+1) != -1"))?;
        ensure(sol.q().degree() == Some(2 * n + 1), || format!("{name}: deg Q != 2N+1"))?;
        ensure(m[n] == 0, || format!("{name}: M_N != 0"))?;
        let (k, _, _) = degrees(&spec);
        match admissible(&spec, DEFAULT_M0_MAX).map_err(|e| e.to_string())? {
            Admissibility::ConstantPotential => {
                ensure(n == 0, || format!("{name}: constant potential with N = {n}"))?;
            }
            Admissibility::Regular(class) => {
                ensure(n == class.n_min, || format!("{name}: N = {n}, N_min = {}", class.n_min))?;
                ensure(m[n - 1] == k, || format!("{name}: M_(N-1) = {} != K = {k}", m[n - 1]))?;
                for (i, &mi) in m.iter().enumerate() {
                    ensure(mi <= (n - i) * k, || format!("{name}: M_{i} = {mi} > (N-{i})K"))?;
                }
            }
        }
    }
    Ok("degree laws hold on every preset".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for name in ["cn2-gap-1", "cn2-gap-3"] {
        let spec = preset(name, &[]);
        let sol = solved(&spec)?;
        let report = verify(&sol, &spec, &VerifyOptions::default()).map_err(|e| e.to_string())?;
        let s = &report.summary;
        ensure(s.agreement_points >= 48, || format!("{name}: only {} points", s.agreement_points))?;
        ensure(s.max_abs_disagreement <= 1e-8, || {
            format!("{name}: max disagreement {:e}", s.max_abs_disagreement)
        })?;
        lines.push(format!("{name} {:e} over {} points", s.max_abs_disagreement, s.agreement_points));
    }
    within(Duration::from_secs(30), start)?;
    Ok(lines.join("; "))
}

fn criterion_6() -> Outcome {
    let spec = preset("cn2-gap-3", &[]);
    let sol = solved(&spec)?;
    let report = band_edges_check(&sol, &spec).map_err(|e| e.to_string())?;
    let s24 = 24f64.sqrt();
    let mut want = [
        0.0,
        15f64.sqrt(),
        -(15f64.sqrt()),
        (3.0 + s24) / 2.0,
        (3.0 - s24) / 2.0,
        (-3.0 + s24) / 2.0,
        (-3.0 - s24) / 2.0,
    ];
    want.sort_by(f64::total_cmp);
    let got = report.roots();
    ensure(got.len() == 7, || format!("{} roots", got.len()))?;
    let root_err = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    ensure(root_err <= 1e-9, || format!("root error {root_err:e}"))?;
    let dev = report.max_deviation().ok_or("no trace deviations")?;
    ensure(dev <= 1e-5, || format!("trace deviation {dev:e}"))?;
    Ok(format!("root error {root_err:e}, trace deviation {dev:e}"))
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    for name in ELLIPTIC {
        let spec = preset(name, &[]);
        let sol = solved(&spec)?;
        let report = verify(&sol, &spec, &VerifyOptions::default()).map_err(|e| e.to_string())?;
        let s = &report.summary;
        let rows: std::collections::BTreeSet<u64> = report
            .points
            .iter()
            .filter(|p| p.residual3.is_some())
            .map(|p| p.p.to_bits())
            .collect();
        ensure(rows.len() == 4 && s.residual_points == 4 * 32, || {
            format!("{name}: residual grid {} p x {} points", rows.len(), s.residual_points)
        })?;
        ensure(s.max_residual3 <= 1e-6, || format!("{name}: residual {:e}", s.max_residual3))?;
        lines.push(format!("{name} {:e}", s.max_residual3));
    }
    Ok(lines.join("; "))
}

fn criterion_8() -> Outcome {
    let mut controls = 0;
    for name in ELLIPTIC {
        let spec = preset(name, &[]);
        let sol = solved(&spec)?;
        let opts = VerifyOptions::default();
        let grid = OracleGrid::build(&ClosedForm::new(&sol, &spec), &opts).map_err(|e| e.to_string())?;
        let doc = emit_solution(&sol, &spec);

        let mut corrupted = Vec::new();
        for (n, row) in doc.p.iter().enumerate() {
            for l in 0..row.len() {
                let mut d = doc.clone();
                d.p[n][l] = bump(&row[l]);
                corrupted.push((format!("P[{n}][{l}]"), d));
            }
        }
        for i in 0..doc.q.len() {
            let mut d = doc.clone();
            d.q[i] = bump(&doc.q[i]);
            corrupted.push((format!("Q[{i}]"), d));
        }
        for (label, d) in corrupted {
            let bad = parse_solution(&d).map_err(|e| e.to_string())?;
            ensure(!bad.is_exact_solution(&spec), || format!("{name} {label}: residual still zero"))?;
            let report = verify_on_grid(&bad, &spec, &grid, &opts.tolerances);
            let failed = |n: &str| report.summary.checks.iter().any(|c| c.name == n && !c.passed);
            ensure(failed("agreement") || failed("residual3"), || {
                format!("{name} {label}: numeric checks still pass")
            })?;
            controls += 1;
        }
    }
    Ok(format!("{controls} corrupted documents rejected"))
}

fn bump(s: &str) -> String {
    format_rational(&(parse_rational(s).expect("emitted rational") + rat(1, 1)))
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0_f64;
    for k2 in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let kk = ellint_k(k2).map_err(|e| e.to_string())?;
        for i in 0..=400 {
            let x = -4.0 * kk + 8.0 * kk * f64::from(i) / 400.0;
            let (cn, sn, dn) = jacobi_cn_sn_dn(x, k2).map_err(|e| e.to_string())?;
            worst = worst
                .max((sn * sn + cn * cn - 1.0).abs())
                .max((dn * dn + k2 * sn * sn - 1.0).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("identity error {worst:e}"))?;
    let k0 = (ellint_k(0.0).map_err(|e| e.to_string())? - FRAC_PI_2).abs();
    ensure(k0 <= 1e-14, || format!("|K(0) - pi/2| = {k0:e}"))?;
    Ok(format!("identity error {worst:e}, |K(0) - pi/2| = {k0:e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("constant potential closed form", criterion_1),
        ("triple-gap exact reproduction", criterion_2),
        ("exact residual vanishes", criterion_3),
        ("degree laws", criterion_4),
        ("closed form agrees with Floquet oracle", criterion_5),
        ("band edges are roots of Q", criterion_6),
        ("nonlinear ODE residual by finite differences", criterion_7),
        ("negative controls", criterion_8),
        ("elliptic function identities", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
