//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &node) in XGK.iter().enumerate().take(7) {
        let dx = half * node;
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Returns `(value, error_estimate)`. The bisection loop stops once the
/// summed error estimate drops below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    if b < a {
        let (v, e) = integrate(f, b, a, abs_tol, rel_tol)?;
        return Ok((-v, e));
    }
    let first = kronrod(&f, a, b);
    if !first.value.is_finite() {
        return Err(Error::QuadratureFailure {
            estimate: first.value,
            error: f64::INFINITY,
        });
    }
    let mut segments = vec![first];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Ok((value, error));
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::QuadratureFailure {
                estimate: value,
                error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine resolution
            return Err(Error::QuadratureFailure {
                estimate: value,
                error,
            });
        }
        let left = kronrod(&f, seg.a, mid);
        let right = kronrod(&f, mid, seg.b);
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(Error::QuadratureFailure {
                estimate: value,
                error,
            });
        }
        segments.push(left);
        segments.push(right);
    }
}

/// Integrates over `(-inf, inf)` via the substitution `x = t / (1 - t^2)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let x = t / d;
        let jac = (1.0 + t * t) / (d * d);
        let val = f(x) * jac;
        if val.is_finite() {
            val
        } else {
            0.0
        }
    };
    integrate(g, -1.0, 1.0, abs_tol, rel_tol)
}

/// Composite Simpson rule on uniformly spaced samples, falling back to the
/// trapezoid rule when the sample count is even.
pub fn uniform_simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        _ if n % 2 == 1 => {
            let mut s = values[0] + values[n - 1];
            for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0
        }
        _ => trapezoid_uniform(values, h),
    }
}

pub fn trapezoid_uniform(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Trapezoid rule on arbitrary (sorted) abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        let (v, _) = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0_f64 / 1e-2).atan();
        assert!((v - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn real_line_lorentzian() {
        let (v, _) = integrate_real_line(|x| 1.0 / (1.0 + x * x), 1e-13, 1e-13).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn nonfinite_integrand_fails() {
        assert!(matches!(
            integrate(|x| 1.0 / x, 0.0, 1.0, 1e-12, 1e-12),
            Err(Error::QuadratureFailure { .. })
        ));
    }

    #[test]
    fn simpson_cubic_exact() {
        let h = 0.1;
        let vals: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((uniform_simpson(&vals, h) - 0.25).abs() < 1e-14);
    }
}
