use std::fmt;
use std::sync::Arc;

use crate::classify::PotentialSpec;

use super::OracleError;

/// Base number of RK4 steps per period.
pub const DEFAULT_STEPS: usize = 4096;
const MAX_STEPS: usize = 1 << 18;
const RICHARDSON_TOL: f64 = 1e-9;
const EDGE_TOL: f64 = 1e-9;

/// A periodic potential `U(x)` on the real line.
#[derive(Clone)]
pub struct NumericPotential {
    u: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    period: f64,
}

impl fmt::Debug for NumericPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericPotential").field("period", &self.period).finish_non_exhaustive()
    }
}

impl NumericPotential {
    pub fn new(u: impl Fn(f64) -> f64 + Send + Sync + 'static, period: f64) -> Self {
        Self { u: Arc::new(u), period }
    }

    /// Constant potentials get the nominal period 1.
    pub fn from_spec(spec: &PotentialSpec) -> Result<Self, OracleError> {
        if spec.is_constant() {
            let u0 = spec.u().eval_f64(0.0);
            return Ok(Self::new(move |_| u0, spec.period().unwrap_or(1.0)));
        }
        if !spec.has_numeric_map() {
            return Err(OracleError::NoNumericMap);
        }
        let period = spec.period().ok_or(OracleError::NoPeriod)?;
        let spec = spec.clone();
        Ok(Self::new(
            move |x| spec.potential_at(x).expect("numeric map checked above"),
            period,
        ))
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn at(&self, x: f64) -> f64 {
        (self.u)(x)
    }

    /// `U` at every half step of an `n`-step grid.
    fn samples(&self, n: usize) -> Vec<f64> {
        let h = self.period / n as f64;
        (0..=2 * n).map(|j| self.at(0.5 * h * j as f64)).collect()
    }

    /// Period map of `f″ = (U − p) f`, refined until two successive step
    /// counts agree to `1e−9` relative to the largest entry.
    pub fn monodromy(&self, p: f64, steps: usize) -> Monodromy {
        self.refine(p, steps).0
    }

    fn refine(&self, p: f64, steps: usize) -> (Monodromy, Vec<f64>) {
        let mut n = steps.max(1);
        let mut coarse = self.period_map(p, n, &self.samples(n));
        loop {
            let samples = self.samples(2 * n);
            let fine = self.period_map(p, 2 * n, &samples);
            let scale = fine.max_abs().max(1.0);
            let drift = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (fine.entries[i][j] - coarse.entries[i][j]).abs())
                .fold(0.0, f64::max)
                / scale;
            n *= 2;
            if drift < RICHARDSON_TOL || n >= MAX_STEPS {
                return (Monodromy { drift, ..fine }, samples);
            }
            coarse = fine;
        }
    }

    fn period_map(&self, p: f64, n: usize, samples: &[f64]) -> Monodromy {
        let h = self.period / n as f64;
        let (a, a_lo) = rk4_run([1.0, 0.0], samples, p, h, n);
        let (b, b_lo) = rk4_run([0.0, 1.0], samples, p, h, n);
        Monodromy {
            entries: [[a[0], b[0]], [a[1], b[1]]],
            low: [[a_lo[0], b_lo[0]], [a_lo[1], b_lo[1]]],
            p,
            period: self.period,
            steps: n,
            drift: 0.0,
        }
    }
}

/// One RK4 step of `(f, f′)` given `U` at the start, middle and end.
fn rk4(y: [f64; 2], us: [f64; 3], p: f64, h: f64) -> [f64; 2] {
    let d = rk4_increment(y, us, p, h);
    [y[0] + d[0], y[1] + d[1]]
}

fn rk4_increment(y: [f64; 2], us: [f64; 3], p: f64, h: f64) -> [f64; 2] {
    let rhs = |y: [f64; 2], u: f64| [y[1], (u - p) * y[0]];
    let k1 = rhs(y, us[0]);
    let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]], us[1]);
    let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]], us[1]);
    let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]], us[2]);
    [
        h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrates over `n` steps with compensated accumulation of the state.
/// Returns the state and its low-order correction.
fn rk4_run(y0: [f64; 2], samples: &[f64], p: f64, h: f64, n: usize) -> ([f64; 2], [f64; 2]) {
    let mut y = y0;
    let mut comp = [0.0; 2];
    for j in 0..n {
        let us = [samples[2 * j], samples[2 * j + 1], samples[2 * j + 2]];
        let d = rk4_increment(y, us, p, h);
        for i in 0..2 {
            let inc = d[i] - comp[i];
            let t = y[i] + inc;
            comp[i] = (t - y[i]) - inc;
            y[i] = t;
        }
    }
    (y, [-comp[0], -comp[1]])
}

/// Period map of `f″ = (U − p) f`: columns are the solutions started from
/// `(1, 0)` and `(0, 1)`, read as `(f, f′)` at `x = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy {
    pub entries: [[f64; 2]; 2],
    /// Rounding left over in `entries`; `entries + low` is the integrated value.
    pub low: [[f64; 2]; 2],
    pub p: f64,
    pub period: f64,
    /// Step count actually used.
    pub steps: usize,
    /// Relative change against half as many steps.
    pub drift: f64,
}

impl Monodromy {
    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    /// Evaluated in extended precision from `entries + low`: entries reach
    /// `1e4` below the spectrum, where the plain product loses the last
    /// digits of `1`.
    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.entries;
        let [[al, bl], [cl, dl]] = self.low;
        let ad = a * d;
        let bc = b * c;
        let ad_err = a.mul_add(d, -ad);
        let bc_err = b.mul_add(c, -bc);
        (ad - bc) + (ad_err - bc_err) + (a * dl + al * d) - (b * cl + bl * c)
    }

    fn max_abs(&self) -> f64 {
        self.entries.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Unit eigenvector for `lambda`, from whichever row of `M − λ` is
    /// better conditioned.
    fn eigenvector(&self, lambda: f64) -> [f64; 2] {
        let m = &self.entries;
        let a = [m[0][1], lambda - m[0][0]];
        let b = [lambda - m[1][1], m[1][0]];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    }
}

/// `monodromy` for a spec with a numeric map and a period.
pub fn monodromy(spec: &PotentialSpec, p: f64) -> Result<Monodromy, OracleError> {
    Ok(NumericPotential::from_spec(spec)?.monodromy(p, DEFAULT_STEPS))
}

/// Bloch solutions at a `p` in the resolvent set: `φ` grows and `ψ` decays
/// towards `+∞`, scaled so that `φ′ψ − ψ′φ = 1` at `x = 0`.
#[derive(Debug, Clone)]
pub struct FloquetPair {
    potential: NumericPotential,
    p: f64,
    h: f64,
    monodromy: Monodromy,
    phi: Vec<[f64; 2]>,
    psi: Vec<[f64; 2]>,
}

impl FloquetPair {
    pub fn new(potential: &NumericPotential, p: f64, steps: usize) -> Result<Self, OracleError> {
        let (mono, samples) = potential.refine(p, steps);
        let trace = mono.trace();
        if (trace.abs() - 2.0).abs() < EDGE_TOL {
            return Err(OracleError::DegenerateEigenvectors { p, trace });
        }
        if trace.abs() <= 2.0 {
            return Err(OracleError::InsideBand { p, trace });
        }
        let det = mono.det();
        let grow = 0.5 * (trace + trace.signum() * (trace * trace - 4.0 * det).sqrt());
        let decay = det / grow;

        let n = mono.steps;
        let h = potential.period() / n as f64;
        let mut phi = Vec::with_capacity(n + 1);
        phi.push(mono.eigenvector(grow));
        for j in 0..n {
            let us = [samples[2 * j], samples[2 * j + 1], samples[2 * j + 2]];
            phi.push(rk4(phi[j], us, p, h));
        }
        let v = mono.eigenvector(decay);
        let mut psi = vec![[0.0; 2]; n + 1];
        psi[n] = [decay * v[0], decay * v[1]];
        for j in (0..n).rev() {
            let us = [samples[2 * j + 2], samples[2 * j + 1], samples[2 * j]];
            psi[j] = rk4(psi[j + 1], us, p, -h);
        }
        let w0 = wronskian(phi[0], psi[0]);
        for s in &mut phi {
            s[0] /= w0;
            s[1] /= w0;
        }
        Ok(Self {
            potential: potential.clone(),
            p,
            h,
            monodromy: mono,
            phi,
            psi,
        })
    }

    pub fn monodromy(&self) -> &Monodromy {
        &self.monodromy
    }

    /// `((φ, φ′), (ψ, ψ′))` at `x`, using quasi-periodicity outside `[0, T)`.
    pub fn states(&self, x: f64) -> ([f64; 2], [f64; 2]) {
        let t = self.potential.period();
        let x = x - t * (x / t).floor();
        let n = self.phi.len() - 1;
        let j = ((x / self.h).floor() as usize).min(n - 1);
        let x0 = j as f64 * self.h;
        let delta = x - x0;
        if delta == 0.0 {
            return (self.phi[j], self.psi[j]);
        }
        let u = |s: f64| self.potential.at(s);
        let phi = rk4(self.phi[j], [u(x0), u(x0 + 0.5 * delta), u(x)], self.p, delta);
        let x1 = x0 + self.h;
        let back = x1 - x;
        let psi = rk4(
            self.psi[j + 1],
            [u(x1), u(x1 - 0.5 * back), u(x)],
            self.p,
            -back,
        );
        (phi, psi)
    }

    /// `φ′ψ − ψ′φ` at `x`; `1` up to integration error.
    pub fn wronskian(&self, x: f64) -> f64 {
        let (phi, psi) = self.states(x);
        wronskian(phi, psi)
    }

    /// `φ(x)ψ(x)`
    pub fn green_diag(&self, x: f64) -> f64 {
        let (phi, psi) = self.states(x);
        phi[0] * psi[0]
    }
}

fn wronskian(phi: [f64; 2], psi: [f64; 2]) -> f64 {
    phi[1] * psi[0] - psi[1] * phi[0]
}

/// `φ(x)ψ(x)` for the Bloch pair of `spec` at `p`.
pub fn floquet_green_diag(spec: &PotentialSpec, p: f64, x: f64) -> Result<f64, OracleError> {
    let pot = NumericPotential::from_spec(spec)?;
    Ok(FloquetPair::new(&pot, p, DEFAULT_STEPS)?.green_diag(x))
}
