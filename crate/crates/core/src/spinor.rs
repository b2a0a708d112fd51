//! Two-component spinors rebuilt from scalar eigenfunctions, and their
//! observables.
//!
//! Everything is stored on q-nodes. The reduced amplitudes
//! `psi~ = sqrt(v_F) psi` satisfy the first-order system
//!
//! ```text
//! -i d/dq psi~2 = zeta1 psi~1,    -i d/dq psi~1 = zeta2 psi~2
//! ```
//!
//! and `|psi|^2 dx = |psi~|^2 dq`, so integrals over an infinite x-domain
//! become integrals over the (usually finite) q-interval.

use num_complex::Complex64;

use crate::eigensolver::EigenPair;
use crate::error::{Error, Result};
use crate::profiles::{detect_constant_u, product_u, ModelSpec};
use crate::quadrature::{trapezoid, uniform_simpson};
use crate::transform::TransformMap;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct SpinorField {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    /// `v_F` at each node; infinite where `x` is an infinite domain end.
    pub v: Vec<f64>,
    pub psi1_tilde: Vec<Complex64>,
    pub psi2_tilde: Vec<Complex64>,
    pub energy: f64,
    /// Scale factor applied by the most recent `normalize`.
    pub norm_constant: f64,
}

#[derive(Debug, Clone)]
pub struct ObservableSet {
    pub rho: Vec<f64>,
    pub j: Vec<f64>,
    pub total_prob: f64,
}

fn physical(tilde: Complex64, v: f64) -> Complex64 {
    if v.is_infinite() {
        Complex64::new(0.0, 0.0)
    } else {
        tilde / v.sqrt()
    }
}

impl SpinorField {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn psi1(&self) -> Vec<Complex64> {
        self.psi1_tilde
            .iter()
            .zip(&self.v)
            .map(|(p, &v)| physical(*p, v))
            .collect()
    }

    pub fn psi2(&self) -> Vec<Complex64> {
        self.psi2_tilde
            .iter()
            .zip(&self.v)
            .map(|(p, &v)| physical(*p, v))
            .collect()
    }

    /// `∫ (|psi1|^2 + |psi2|^2) dx`, evaluated as `∫ |psi~|^2 dq`.
    pub fn total_prob(&self) -> f64 {
        let dens: Vec<f64> = self
            .psi1_tilde
            .iter()
            .zip(&self.psi2_tilde)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect();
        integrate_nodes(&self.q, &dens)
    }

    /// Rows `(x, q, Re psi1, Im psi1, Re psi2, Im psi2, rho, j)`.
    pub fn csv_rows(&self) -> Vec<[f64; 8]> {
        let obs = observables(self);
        let p1 = self.psi1();
        let p2 = self.psi2();
        (0..self.len())
            .map(|i| {
                [
                    self.x[i], self.q[i], p1[i].re, p1[i].im, p2[i].re, p2[i].im, obs.rho[i],
                    obs.j[i],
                ]
            })
            .collect()
    }

    /// Flips the global sign so that `psi1` is positive at its first maximum.
    pub fn align_phase(&mut self) {
        let mags: Vec<f64> = self.psi1_tilde.iter().map(|p| p.norm()).collect();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return;
        }
        let n = mags.len();
        let idx = (0..n)
            .find(|&i| {
                mags[i] > 1e-6 * max
                    && (i == 0 || mags[i] >= mags[i - 1])
                    && (i + 1 == n || mags[i] >= mags[i + 1])
            })
            .unwrap_or(0);
        let p = self.psi1_tilde[idx];
        let lead = if p.re.abs() >= p.im.abs() { p.re } else { p.im };
        if lead < 0.0 {
            self.psi1_tilde.iter_mut().for_each(|p| *p = -*p);
            self.psi2_tilde.iter_mut().for_each(|p| *p = -*p);
        }
    }

    /// Builds a field from closed-form reduced amplitudes sampled at `q`.
    pub fn from_tilde_fn(
        model: &ModelSpec,
        map: &TransformMap,
        q: &[f64],
        energy: f64,
        f: impl Fn(f64) -> (Complex64, Complex64),
    ) -> Result<SpinorField> {
        let x = q
            .iter()
            .map(|&qi| map.invert_closed(qi))
            .collect::<Result<Vec<_>>>()?;
        let v = x.iter().map(|&xi| model.velocity.eval(xi)).collect();
        let (psi1_tilde, psi2_tilde) = q.iter().map(|&qi| f(qi)).unzip();
        Ok(SpinorField {
            x,
            q: q.to_vec(),
            v,
            psi1_tilde,
            psi2_tilde,
            energy,
            norm_constant: 1.0,
        })
    }
}

/// Simpson on odd uniform node sets, trapezoid otherwise.
fn integrate_nodes(q: &[f64], y: &[f64]) -> f64 {
    let n = q.len();
    if n < 2 {
        return 0.0;
    }
    let h = (q[n - 1] - q[0]) / (n - 1) as f64;
    let uniform = q
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if uniform && n % 2 == 1 && n >= 3 {
        uniform_simpson(y, h)
    } else {
        trapezoid(q, y)
    }
}

/// Three-point derivative on a possibly non-uniform stencil.
fn derivative3(q: &[f64], y: &[Complex64], i: usize) -> Complex64 {
    let (a, b, c) = (q[i - 1], q[i], q[i + 1]);
    let h1 = b - a;
    let h2 = c - b;
    let wa = -h2 / (h1 * (h1 + h2));
    let wb = (h2 - h1) / (h1 * h2);
    let wc = h1 / (h2 * (h1 + h2));
    y[i - 1] * wa + y[i] * wb + y[i + 1] * wc
}

/// Value at `q[target]` of the parabola through three neighbouring nodes.
fn extrapolate(q: &[f64], y: &[Complex64], idx: [usize; 3], target: usize) -> Complex64 {
    let t = q[target];
    let mut out = Complex64::new(0.0, 0.0);
    for (a, &i) in idx.iter().enumerate() {
        let mut w = 1.0;
        for (b, &j) in idx.iter().enumerate() {
            if a != b {
                w *= (t - q[j]) / (q[i] - q[j]);
            }
        }
        out += y[i] * w;
    }
    out
}

/// Rebuilds the spinor at energy `energy` from a scalar eigenfunction.
///
/// `psi~1 = sqrt|zeta2| phi` and `psi~2 = -i (d/dq psi~1) / zeta2`, with
/// `d zeta2 / dq = v_F u'` taken analytically and `phi'` by central
/// differences. Wall values of `psi~2` are extrapolated, or zero where `u`
/// diverges at the wall.
pub fn reconstruct(
    pair: &EigenPair,
    model: &ModelSpec,
    map: &TransformMap,
    energy: f64,
) -> Result<SpinorField> {
    let n = pair.q.len();
    if n < 4 || pair.phi.len() != n {
        return Err(Error::InsufficientResolution {
            requested: 1,
            nodes: n,
        });
    }
    let x = pair
        .q
        .iter()
        .map(|&q| map.invert_closed(q))
        .collect::<Result<Vec<_>>>()?;
    let v: Vec<f64> = x.iter().map(|&xi| model.velocity.eval(xi)).collect();

    let mut zeta2 = vec![f64::NAN; n];
    let mut dzeta2_dq = vec![f64::NAN; n];
    let mut sign = 0.0;
    for i in 1..n - 1 {
        let pu = product_u(model, x[i])?;
        let z = energy + pu.u;
        if z == 0.0 || !z.is_finite() {
            return Err(Error::ZetaCrossing { x: x[i], energy });
        }
        if sign != 0.0 && z.signum() != sign {
            return Err(Error::ZetaCrossing { x: x[i], energy });
        }
        sign = z.signum();
        zeta2[i] = z;
        dzeta2_dq[i] = v[i] * pu.d1;
    }

    let phi: Vec<Complex64> = pair.phi.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    let mut psi1 = vec![Complex64::new(0.0, 0.0); n];
    let mut psi2 = vec![Complex64::new(0.0, 0.0); n];
    for i in 1..n - 1 {
        let root = zeta2[i].abs().sqrt();
        let dphi = derivative3(&pair.q, &phi, i);
        let droot = zeta2[i].signum() * dzeta2_dq[i] / (2.0 * root);
        let d_psi1 = phi[i] * droot + dphi * root;
        psi1[i] = phi[i] * root;
        psi2[i] = -I * d_psi1 / zeta2[i];
        if !(psi2[i].re.is_finite() && psi2[i].im.is_finite()) {
            return Err(Error::SingularNode { q: pair.q[i] });
        }
    }
    // phi vanishes at the walls; psi~1 = sqrt|zeta2| phi -> 0 there.
    // Where u diverges at a wall, psi~2 = -i psi~1' / zeta2 -> 0 as well.
    let singular_wall = |xw: f64| {
        xw.is_finite() && !(model.mass.eval(xw) * model.velocity.eval(xw).powi(2)).is_finite()
    };
    psi2[0] = if singular_wall(x[0]) {
        Complex64::new(0.0, 0.0)
    } else {
        extrapolate(&pair.q, &psi2, [1, 2, 3], 0)
    };
    psi2[n - 1] = if singular_wall(x[n - 1]) {
        Complex64::new(0.0, 0.0)
    } else {
        extrapolate(&pair.q, &psi2, [n - 2, n - 3, n - 4], n - 1)
    };

    let mut field = SpinorField {
        x,
        q: pair.q.clone(),
        v,
        psi1_tilde: psi1,
        psi2_tilde: psi2,
        energy,
        norm_constant: 1.0,
    };
    field.align_phase();
    Ok(field)
}

/// Density `|psi1|^2 + |psi2|^2` and current `v_F (psi1* psi2 + c.c.)` per node.
pub fn observables(spinor: &SpinorField) -> ObservableSet {
    let n = spinor.len();
    let mut rho = Vec::with_capacity(n);
    let mut j = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (spinor.psi1_tilde[i], spinor.psi2_tilde[i]);
        let v = spinor.v[i];
        rho.push(if v.is_infinite() {
            0.0
        } else {
            (a.norm_sqr() + b.norm_sqr()) / v
        });
        j.push(2.0 * (a.conj() * b).re);
    }
    ObservableSet {
        rho,
        j,
        total_prob: spinor.total_prob(),
    }
}

/// Scales the spinor to unit total probability.
pub fn normalize(spinor: &SpinorField) -> Result<SpinorField> {
    let total = spinor.total_prob();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonNormalizable(format!("total probability {total}")));
    }
    let factor = 1.0 / total.sqrt();
    let mut out = spinor.clone();
    out.psi1_tilde.iter_mut().for_each(|p| *p *= factor);
    out.psi2_tilde.iter_mut().for_each(|p| *p *= factor);
    out.norm_constant = factor;
    Ok(out)
}

/// Relative L2 residual of the coupled first-order system.
///
/// Uses `r~1 = -i d/dq psi~2 - zeta1 psi~1`, `r~2 = -i d/dq psi~1 - zeta2 psi~2`;
/// since `r = r~ / sqrt(v_F)` and `dx = v_F dq`, the q-norm equals the
/// x-norm of the residual in the original variables.
pub fn dirac_residual(spinor: &SpinorField, model: &ModelSpec, energy: f64) -> Result<f64> {
    let n = spinor.len();
    if n < 3 {
        return Err(Error::InsufficientResolution {
            requested: 1,
            nodes: n,
        });
    }
    let mut q = Vec::with_capacity(n - 2);
    let mut r2 = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let u = product_u(model, spinor.x[i])?.u;
        let d1 = derivative3(&spinor.q, &spinor.psi2_tilde, i);
        let d2 = derivative3(&spinor.q, &spinor.psi1_tilde, i);
        let a = -I * d1 - spinor.psi1_tilde[i] * (energy - u);
        let b = -I * d2 - spinor.psi2_tilde[i] * (energy + u);
        q.push(spinor.q[i]);
        r2.push(a.norm_sqr() + b.norm_sqr());
    }
    let res = integrate_nodes(&q, &r2).max(0.0).sqrt();
    let norm = spinor.total_prob().sqrt();
    if !(norm > 0.0) {
        return Err(Error::NonNormalizable("zero state".into()));
    }
    Ok(res / norm)
}

/// The unquantized sin/cos family of a constant-`u` model at energy `energy`.
///
/// `psi~1 = sqrt|zeta2| sin(l q)`, `psi~2 = -i sgn(E) sqrt|zeta1| cos(l q)`
/// with `l = sqrt(E^2 - A^2)`. At `E = A` that pair vanishes, so the
/// `l -> 0` limit `psi~1 = zeta2 q`, `psi~2 = -i` is used instead.
/// The result is normalized.
pub fn bic_family(
    model: &ModelSpec,
    map: &TransformMap,
    energy: f64,
    nodes: usize,
) -> Result<SpinorField> {
    let a = detect_constant_u(model, 1e-10)
        .ok_or_else(|| Error::param("model", "the sin/cos family needs m v_F^2 constant"))?;
    if !map.is_bounded() {
        return Err(Error::NonNormalizable("q-interval is unbounded".into()));
    }
    let radicand = energy * energy - a * a;
    if radicand < 0.0 {
        return Err(Error::SubGap { energy, gap: a });
    }
    let lt = radicand.sqrt();
    let z1 = energy - a;
    let z2 = energy + a;
    let sgn = if energy < 0.0 { -1.0 } else { 1.0 };
    let limit = z1.abs() <= 1e-14 * a.max(1.0);
    let (lo, hi) = (map.q_lo(), map.q_hi());
    let count = nodes.max(3) | 1;
    let h = (hi - lo) / (count - 1) as f64;
    let q: Vec<f64> = (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + i as f64 * h
            }
        })
        .collect();
    let field = SpinorField::from_tilde_fn(model, map, &q, energy, |qi| {
        if limit {
            (Complex64::new(z2 * qi, 0.0), -I)
        } else {
            (
                Complex64::new(z2.abs().sqrt() * (lt * qi).sin(), 0.0),
                -I * sgn * z1.abs().sqrt() * (lt * qi).cos(),
            )
        }
    })?;
    normalize(&field)
}
