//! The canonical coordinate `q(x) = ∫_{x0}^{x} dy / v_F(y)` and its inverse.

use std::fmt;

use crate::error::{Error, Result};
use crate::profiles::{Interval, ScalarFn, VelocityProfile};
use crate::quadrature::integrate;

/// Maximum number of truncation steps toward one endpoint.
const MAX_LIMIT_STEPS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointKind {
    Finite,
    Infinite,
}

/// Monotone map between the physical coordinate `x` and `q`.
///
/// Built once from a sample table of cumulative integrals (the truncation
/// sequences used to detect the improper limits) and refined locally by
/// quadrature on demand.
#[derive(Clone)]
pub struct TransformMap {
    velocity: ScalarFn,
    domain: Interval,
    anchor: f64,
    q_lo: f64,
    q_hi: f64,
    lo_kind: EndpointKind,
    hi_kind: EndpointKind,
    table_x: Vec<f64>,
    table_q: Vec<f64>,
    quad_tol: f64,
}

impl fmt::Debug for TransformMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformMap")
            .field("domain", &self.domain)
            .field("anchor", &self.anchor)
            .field("q_lo", &self.q_lo)
            .field("q_hi", &self.q_hi)
            .field("lo_kind", &self.lo_kind)
            .field("hi_kind", &self.hi_kind)
            .finish()
    }
}

struct Limit {
    points: Vec<(f64, f64)>,
    value: f64,
    kind: EndpointKind,
}

/// Walks from the anchor toward one endpoint, accumulating segment integrals.
///
/// A finite endpoint is approached by halving the remaining distance, an
/// infinite one by doubling the offset. The limit is Finite once a segment
/// contributes less than `quad_tol`; the geometric tail of the remaining
/// segments is then added.
fn walk_to_end(recip: &dyn Fn(f64) -> f64, anchor: f64, end: f64, quad_tol: f64) -> Result<Limit> {
    let dir = if end > anchor { 1.0 } else { -1.0 };
    let seg_tol = 1e-3 * quad_tol;
    let mut points = Vec::new();
    let mut x_prev = anchor;
    let mut q_prev = 0.0;
    let mut prev_inc: Option<f64> = None;
    for k in 0..MAX_LIMIT_STEPS {
        let x_next = if end.is_finite() {
            end - (end - anchor) * 0.5_f64.powi(k as i32 + 1)
        } else {
            anchor + dir * anchor.abs().max(1.0) * 2.0_f64.powi(k as i32)
        };
        if !x_next.is_finite() || x_next == x_prev || x_next == end {
            break;
        }
        let (inc, _) = integrate(recip, x_prev, x_next, seg_tol, 1e-14)?;
        let q_next = q_prev + inc;
        points.push((x_next, q_next));
        let mag = inc.abs();
        if mag < quad_tol && k >= 2 {
            let tail = match prev_inc {
                Some(p) if p > 0.0 => {
                    let r = mag / p;
                    if r < 0.9 {
                        inc * r / (1.0 - r)
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            };
            return Ok(Limit {
                points,
                value: q_next + tail,
                kind: EndpointKind::Finite,
            });
        }
        prev_inc = Some(mag);
        x_prev = x_next;
        q_prev = q_next;
    }
    Ok(Limit {
        points,
        value: dir * f64::INFINITY,
        kind: EndpointKind::Infinite,
    })
}

/// Builds the canonical transformation anchored at `x0`.
pub fn build_transform(velocity: &VelocityProfile, x0: f64, quad_tol: f64) -> Result<TransformMap> {
    if !(quad_tol > 0.0) {
        return Err(Error::param("quad_tol", "must be positive"));
    }
    let domain = velocity.domain();
    domain.check(x0)?;
    let v = velocity.function();
    let recip_fn = v.clone();
    let recip = move |x: f64| 1.0 / recip_fn(x);
    let left = walk_to_end(&recip, x0, domain.lo, quad_tol)?;
    let right = walk_to_end(&recip, x0, domain.hi, quad_tol)?;
    let mut table_x = Vec::with_capacity(left.points.len() + right.points.len() + 1);
    let mut table_q = Vec::with_capacity(table_x.capacity());
    for &(x, q) in left.points.iter().rev() {
        table_x.push(x);
        table_q.push(q);
    }
    table_x.push(x0);
    table_q.push(0.0);
    for &(x, q) in &right.points {
        table_x.push(x);
        table_q.push(q);
    }
    Ok(TransformMap {
        velocity: v,
        domain,
        anchor: x0,
        q_lo: left.value,
        q_hi: right.value,
        lo_kind: left.kind,
        hi_kind: right.kind,
        table_x,
        table_q,
        quad_tol,
    })
}

impl TransformMap {
    pub fn q_lo(&self) -> f64 {
        self.q_lo
    }

    pub fn q_hi(&self) -> f64 {
        self.q_hi
    }

    pub fn lo_kind(&self) -> EndpointKind {
        self.lo_kind
    }

    pub fn hi_kind(&self) -> EndpointKind {
        self.hi_kind
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn is_bounded(&self) -> bool {
        self.lo_kind == EndpointKind::Finite && self.hi_kind == EndpointKind::Finite
    }

    fn recip(&self, x: f64) -> f64 {
        1.0 / (self.velocity)(x)
    }

    fn segment_integral(&self, a: f64, b: f64) -> Result<f64> {
        let f = |x: f64| self.recip(x);
        Ok(integrate(f, a, b, 1e-3 * self.quad_tol, 1e-14)?.0)
    }

    /// `q(x)` for `x` strictly inside the domain.
    pub fn forward(&self, x: f64) -> Result<f64> {
        self.domain.check(x)?;
        let idx = self.table_x.partition_point(|&t| t <= x);
        if idx == 0 {
            let base = self.table_x[0];
            return Ok(self.table_q[0] - self.segment_integral(x, base)?);
        }
        let j = idx - 1;
        Ok(self.table_q[j] + self.segment_integral(self.table_x[j], x)?)
    }

    /// `x(q)` for `q` strictly inside `(q_lo, q_hi)`.
    pub fn invert(&self, q: f64) -> Result<f64> {
        if !(q > self.q_lo && q < self.q_hi) {
            return Err(Error::Domain {
                x: q,
                lo: self.q_lo,
                hi: self.q_hi,
            });
        }
        let n = self.table_q.len();
        let idx = self.table_q.partition_point(|&t| t <= q);
        if idx > 0 && self.table_q[idx - 1] == q {
            return Ok(self.table_x[idx - 1]);
        }
        let (mut a, mut b) = if idx == 0 {
            (self.outer_bracket(q, -1.0)?, self.table_x[0])
        } else if idx == n {
            (self.table_x[n - 1], self.outer_bracket(q, 1.0)?)
        } else {
            (self.table_x[idx - 1], self.table_x[idx])
        };
        let tol = 1e-13 * q.abs().max(1.0);
        let mut x = if idx > 0 && idx < n {
            let (qa, qb) = (self.table_q[idx - 1], self.table_q[idx]);
            a + (b - a) * (q - qa) / (qb - qa)
        } else {
            0.5 * (a + b)
        };
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        for _ in 0..200 {
            let g = self.forward(x)? - q;
            if g.abs() <= tol {
                return Ok(x);
            }
            if g > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let newton = x - g * (self.velocity)(x);
            let next = if newton > a && newton < b && newton.is_finite() {
                newton
            } else {
                0.5 * (a + b)
            };
            if next == x || b - a <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// Finds an x beyond the sample table whose image passes `q`.
    fn outer_bracket(&self, q: f64, dir: f64) -> Result<f64> {
        let end = if dir > 0.0 {
            self.domain.hi
        } else {
            self.domain.lo
        };
        let start = if dir > 0.0 {
            *self.table_x.last().expect("table")
        } else {
            self.table_x[0]
        };
        if end.is_finite() {
            // The open end maps to the limit, which is already past `q`.
            let mut x = end - (end - start) * 1e-6;
            for _ in 0..200 {
                let fq = self.forward(x)?;
                if (fq - q) * dir >= 0.0 {
                    return Ok(x);
                }
                x = end - (end - x) * 0.5;
                if x == end {
                    break;
                }
            }
            return Ok(end - (end - x).abs().max(f64::EPSILON * end.abs()));
        }
        let mut step = (start - self.anchor).abs().max(1.0);
        let mut x = start;
        for _ in 0..1100 {
            x += dir * step;
            step *= 2.0;
            if !x.is_finite() {
                break;
            }
            if (self.forward(x)? - q) * dir >= 0.0 {
                return Ok(x);
            }
        }
        Err(Error::Domain {
            x: q,
            lo: self.q_lo,
            hi: self.q_hi,
        })
    }

    /// Maps a q-node to x, sending the limits `q_lo`/`q_hi` to the domain ends.
    pub fn invert_closed(&self, q: f64) -> Result<f64> {
        if q <= self.q_lo {
            Ok(self.domain.lo)
        } else if q >= self.q_hi {
            Ok(self.domain.hi)
        } else {
            self.invert(q)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{builtin_model, BuiltinModel, Params};
    use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

    fn params(pairs: &[(&str, f64)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn model_map(kind: BuiltinModel, p: &[(&str, f64)]) -> TransformMap {
        let m = builtin_model(kind, &params(p)).unwrap();
        build_transform(&m.velocity, m.anchor, 1e-12).unwrap()
    }

    #[test]
    fn cosh_square_map() {
        let map = model_map(
            BuiltinModel::CoshSquare,
            &[("alpha", 1.0), ("v0", 1.0), ("m0", 1.0)],
        );
        assert!((map.forward(1.0).unwrap() - 1.0_f64.tanh()).abs() < 1e-12);
        assert!((map.q_hi() - 1.0).abs() < 1e-10);
        assert!((map.q_lo() + 1.0).abs() < 1e-10);
        assert_eq!(map.lo_kind(), EndpointKind::Finite);
        assert_eq!(map.hi_kind(), EndpointKind::Finite);
        let x = map.invert(1.0_f64.tanh()).unwrap();
        assert!((x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rational_map() {
        let map = model_map(
            BuiltinModel::Rational,
            &[("alpha", 1.0), ("v0", 1.0), ("m0", 0.0)],
        );
        assert!((map.forward(1.0).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!((map.q_hi() - FRAC_PI_2).abs() < 1e-10);
        assert!((map.q_hi() - map.q_lo() - PI).abs() < 1e-10);
        assert!((map.invert(FRAC_PI_4).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_velocity_map() {
        let map = model_map(BuiltinModel::ConstantRest, &[("m0", 1.0), ("c", 2.0)]);
        assert!((map.forward(3.0).unwrap() - 1.5).abs() < 1e-13);
        assert_eq!(map.lo_kind(), EndpointKind::Infinite);
        assert_eq!(map.hi_kind(), EndpointKind::Infinite);
        assert!((map.invert(-7.25).unwrap() + 14.5).abs() < 1e-10);
    }

    #[test]
    fn linear_singular_map() {
        let map = model_map(BuiltinModel::LinearSingular, &[("A", 1.0), ("v0", 1.0)]);
        assert!((map.forward(E).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(map.q_lo(), f64::NEG_INFINITY);
        assert_eq!(map.q_hi(), f64::INFINITY);
        assert!((map.invert(-3.0).unwrap() - (-3.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn poschl_teller_map_is_centered() {
        let map = model_map(
            BuiltinModel::PoschlTeller,
            &[("alpha", 1.0), ("v0", 2.0), ("m0", 1.0)],
        );
        assert!((map.q_lo() + PI / 4.0).abs() < 1e-11);
        assert!((map.q_hi() - PI / 4.0).abs() < 1e-11);
        assert!((map.invert(0.5).unwrap() - (FRAC_PI_2 + 1.0)).abs() < 1e-11);
    }

    #[test]
    fn anchor_maps_to_zero() {
        for kind in BuiltinModel::ALL {
            let m = builtin_model(kind, &default_params(kind)).unwrap();
            let map = build_transform(&m.velocity, m.anchor, 1e-12).unwrap();
            assert_eq!(map.invert(0.0).unwrap(), m.anchor);
            assert_eq!(map.forward(m.anchor).unwrap(), 0.0);
        }
    }

    #[test]
    fn invert_rejects_outside() {
        let map = model_map(
            BuiltinModel::CoshSquare,
            &[("alpha", 1.0), ("v0", 1.0), ("m0", 1.0)],
        );
        assert!(matches!(map.invert(1.5), Err(Error::Domain { .. })));
        assert!(matches!(map.invert(map.q_hi()), Err(Error::Domain { .. })));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let m = builtin_model(
            BuiltinModel::ConstantRest,
            &default_params(BuiltinModel::ConstantRest),
        )
        .unwrap();
        assert!(build_transform(&m.velocity, 0.0, 0.0).is_err());
    }

    pub(crate) fn default_params(kind: BuiltinModel) -> Params {
        match kind {
            BuiltinModel::LinearSingular => params(&[("A", 1.0), ("v0", 1.0)]),
            BuiltinModel::ConstantRest => params(&[("m0", 1.0), ("c", 1.0)]),
            _ => params(&[("alpha", 1.0), ("v0", 1.0), ("m0", 1.0)]),
        }
    }
}
