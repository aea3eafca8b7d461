/// Real roots of `Σ coeffs[i]·tⁱ`, ascending.
///
/// The critical points (real roots of the derivative, found the same way)
/// split the Cauchy bound into monotone pieces, each holding at most one
/// root, which is then bisected to machine precision. Close pairs are
/// therefore separated however narrow they are. A root of even multiplicity
/// is reported only if the polynomial evaluates to exactly zero there.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let Some(deg) = coeffs.iter().rposition(|&c| c != 0.0) else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let coeffs = &coeffs[..=deg];
    let lead = coeffs[deg];
    let bound = 1.0
        + coeffs[..deg]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max);
    let f = |t: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c);

    let derivative: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect();
    let mut knots = vec![-bound];
    knots.extend(real_roots(&derivative).into_iter().filter(|c| c.abs() < bound));
    knots.push(bound);

    let mut roots: Vec<f64> = Vec::new();
    let mut push = |r: f64| {
        if roots.last() != Some(&r) {
            roots.push(r);
        }
    };
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            push(a);
        } else if fb != 0.0 && fa.signum() != fb.signum() {
            push(bisect(&f, a, b, fa));
        }
    }
    if f(bound) == 0.0 {
        push(bound);
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
