//! Position-dependent mass and Fermi-velocity profiles.
//!
//! Every profile carries hand-coded first and second derivatives. Custom
//! profiles may instead opt into a five-point finite-difference fallback,
//! which is recorded in [`DerivativeSource`] so downstream reports can flag
//! it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Named real model parameters (`alpha`, `v0`, `m0`, `A`, `c`).
pub type Params = BTreeMap<String, f64>;

/// Number of points used for positivity and constancy scans.
pub const DENSE_SAMPLES: usize = 2000;
const DERIVATIVE_SAMPLES: usize = 64;
const DERIVATIVE_REL_TOL: f64 = 1e-6;

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn real_line() -> Self {
        Interval::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// Deterministic interior sample of `n` points.
    ///
    /// Infinite ends are replaced by `center ± 20 scale`; finite ends are
    /// approached to within half a sample spacing.
    pub fn sample(&self, n: usize, center: f64, scale: f64) -> Vec<f64> {
        let lo = if self.lo.is_finite() {
            self.lo
        } else {
            center - 20.0 * scale
        };
        let hi = if self.hi.is_finite() {
            self.hi
        } else {
            center + 20.0 * scale
        };
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        (0..n)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
            .filter(|&x| self.contains(x))
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

/// Five-point central stencils for the first and second derivative.
pub fn five_point(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let fp1 = f(x + h);
    let fm1 = f(x - h);
    let fp2 = f(x + 2.0 * h);
    let fm2 = f(x - 2.0 * h);
    let f0 = f(x);
    let d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
    let d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    (d1, d2)
}

fn fd_step(domain: &Interval, x: f64, scale: f64) -> f64 {
    let dist = (x - domain.lo).min(domain.hi - x);
    (1e-3 * scale).min(0.01 * dist)
}

#[derive(Clone)]
struct SmoothFn {
    value: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
    source: DerivativeSource,
}

impl SmoothFn {
    fn analytic(value: ScalarFn, d1: ScalarFn, d2: ScalarFn) -> Self {
        SmoothFn {
            value,
            d1,
            d2,
            source: DerivativeSource::Analytic,
        }
    }

    fn finite_difference(domain: Interval, scale: f64, value: ScalarFn) -> Self {
        let v1 = value.clone();
        let v2 = value.clone();
        let d1: ScalarFn = Arc::new(move |x| five_point(&*v1, x, fd_step(&domain, x, scale)).0);
        let d2: ScalarFn = Arc::new(move |x| five_point(&*v2, x, fd_step(&domain, x, scale)).1);
        SmoothFn {
            value,
            d1,
            d2,
            source: DerivativeSource::FiniteDifference,
        }
    }

    /// Compares analytic derivatives with five-point stencils.
    fn check_derivatives(
        &self,
        name: &str,
        domain: &Interval,
        center: f64,
        scale: f64,
    ) -> Result<()> {
        if self.source == DerivativeSource::FiniteDifference {
            return Ok(());
        }
        let f = |x: f64| (self.value)(x);
        for x in domain.sample(DERIVATIVE_SAMPLES, center, scale) {
            let h = fd_step(domain, x, scale);
            let (fd1, fd2) = five_point(&f, x, h);
            let a1 = (self.d1)(x);
            let a2 = (self.d2)(x);
            let fx = f(x).abs();
            let ok1 = (a1 - fd1).abs()
                <= DERIVATIVE_REL_TOL * a1.abs().max(fd1.abs()) + 1e-9 * fx / scale;
            let ok2 = (a2 - fd2).abs()
                <= DERIVATIVE_REL_TOL * a2.abs().max(fd2.abs()) + 1e-8 * fx / (scale * scale);
            if !(ok1 && ok2) {
                return Err(Error::param(
                    name,
                    format!("analytic derivatives disagree with finite differences at x = {x}: ({a1}, {a2}) vs ({fd1}, {fd2})"),
                ));
            }
        }
        Ok(())
    }
}

/// Fermi-velocity profile `v_F(x)`, strictly positive on its domain.
#[derive(Clone)]
pub struct VelocityProfile {
    inner: SmoothFn,
    domain: Interval,
}

impl VelocityProfile {
    pub fn new(domain: Interval, value: ScalarFn, d1: ScalarFn, d2: ScalarFn) -> Self {
        VelocityProfile {
            inner: SmoothFn::analytic(value, d1, d2),
            domain,
        }
    }

    /// Velocity profile whose derivatives come from finite differences.
    pub fn with_fd_derivatives(domain: Interval, scale: f64, value: ScalarFn) -> Self {
        VelocityProfile {
            inner: SmoothFn::finite_difference(domain, scale, value),
            domain,
        }
    }

    pub fn constant(domain: Interval, v: f64) -> Self {
        VelocityProfile::new(
            domain,
            Arc::new(move |_| v),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.inner.value)(x)
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        (self.inner.d1)(x)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        (self.inner.d2)(x)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        self.inner.source
    }

    pub(crate) fn function(&self) -> ScalarFn {
        self.inner.value.clone()
    }
}

impl fmt::Debug for VelocityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VelocityProfile")
            .field("domain", &self.domain)
            .field("derivatives", &self.inner.source)
            .finish()
    }
}

/// Mass profile `m(x) >= 0`.
#[derive(Clone)]
pub struct MassProfile {
    inner: SmoothFn,
    domain: Interval,
}

impl MassProfile {
    pub fn new(domain: Interval, value: ScalarFn, d1: ScalarFn, d2: ScalarFn) -> Self {
        MassProfile {
            inner: SmoothFn::analytic(value, d1, d2),
            domain,
        }
    }

    pub fn with_fd_derivatives(domain: Interval, scale: f64, value: ScalarFn) -> Self {
        MassProfile {
            inner: SmoothFn::finite_difference(domain, scale, value),
            domain,
        }
    }

    pub fn constant(domain: Interval, m: f64) -> Self {
        MassProfile::new(
            domain,
            Arc::new(move |_| m),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.inner.value)(x)
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        (self.inner.d1)(x)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        (self.inner.d2)(x)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        self.inner.source
    }
}

impl fmt::Debug for MassProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MassProfile")
            .field("domain", &self.domain)
            .field("derivatives", &self.inner.source)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinModel {
    CoshSquare,
    Rational,
    PoschlTeller,
    LinearSingular,
    ConstantRest,
}

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 5] = [
        BuiltinModel::CoshSquare,
        BuiltinModel::Rational,
        BuiltinModel::PoschlTeller,
        BuiltinModel::LinearSingular,
        BuiltinModel::ConstantRest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinModel::CoshSquare => "CoshSquare",
            BuiltinModel::Rational => "Rational",
            BuiltinModel::PoschlTeller => "PoschlTeller",
            BuiltinModel::LinearSingular => "LinearSingular",
            BuiltinModel::ConstantRest => "ConstantRest",
        }
    }

    /// Parameter names required by this model.
    pub fn required_params(&self) -> &'static [&'static str] {
        match self {
            BuiltinModel::CoshSquare | BuiltinModel::Rational | BuiltinModel::PoschlTeller => {
                &["alpha", "v0", "m0"]
            }
            BuiltinModel::LinearSingular => &["A", "v0"],
            BuiltinModel::ConstantRest => &["m0", "c"],
        }
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "coshsquare" | "cosh2" | "modeli" => Ok(BuiltinModel::CoshSquare),
            "rational" | "modelii" => Ok(BuiltinModel::Rational),
            "poschlteller" | "modeliii" => Ok(BuiltinModel::PoschlTeller),
            "linearsingular" | "oscillator" | "modeliv" => Ok(BuiltinModel::LinearSingular),
            "constantrest" | "constant" => Ok(BuiltinModel::ConstantRest),
            _ => Err(Error::param("name", format!("unknown model `{s}`"))),
        }
    }
}

/// A complete model: mass and velocity profiles on a shared domain.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub label: String,
    pub kind: Option<BuiltinModel>,
    pub mass: MassProfile,
    pub velocity: VelocityProfile,
    pub domain: Interval,
    pub params: Params,
    /// Anchor `x0` where the canonical coordinate `q` vanishes.
    pub anchor: f64,
    /// Characteristic length used for sampling windows and stencil steps.
    pub scale: f64,
}

impl ModelSpec {
    /// Assembles and validates a model.
    pub fn new(
        label: impl Into<String>,
        mass: MassProfile,
        velocity: VelocityProfile,
        params: Params,
        anchor: f64,
        scale: f64,
    ) -> Result<Self> {
        let domain = velocity.domain();
        if mass.domain() != domain {
            return Err(Error::param(
                "domain",
                format!(
                    "mass domain {} differs from velocity domain {}",
                    mass.domain(),
                    domain
                ),
            ));
        }
        for (name, value) in &params {
            if !value.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param("scale", "must be positive"));
        }
        domain.check(anchor)?;
        let spec = ModelSpec {
            label: label.into(),
            kind: None,
            mass,
            velocity,
            domain,
            params,
            anchor,
            scale,
        };
        for x in spec.dense_sample() {
            let v = spec.velocity.eval(x);
            if !(v > 0.0) {
                return Err(Error::param(
                    "velocity",
                    format!("v_F({x}) = {v} is not positive"),
                ));
            }
            let m = spec.mass.eval(x);
            if !(m >= 0.0) {
                return Err(Error::param("mass", format!("m({x}) = {m} is negative")));
            }
        }
        spec.velocity
            .inner
            .check_derivatives("velocity", &domain, anchor, scale)?;
        spec.mass
            .inner
            .check_derivatives("mass", &domain, anchor, scale)?;
        Ok(spec)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn dense_sample(&self) -> Vec<f64> {
        self.domain.sample(DENSE_SAMPLES, self.anchor, self.scale)
    }

    /// True when `m(x) > 0` at every dense sample point.
    pub fn mass_strictly_positive(&self) -> bool {
        self.dense_sample().iter().all(|&x| self.mass.eval(x) > 0.0)
    }

    pub fn is_massless(&self) -> bool {
        self.dense_sample()
            .iter()
            .all(|&x| self.mass.eval(x) == 0.0)
    }

    pub fn uses_fd_derivatives(&self) -> bool {
        self.mass.derivative_source() == DerivativeSource::FiniteDifference
            || self.velocity.derivative_source() == DerivativeSource::FiniteDifference
    }
}

fn require(params: &Params, name: &str, strictly_positive: bool) -> Result<f64> {
    let value = *params
        .get(name)
        .ok_or_else(|| Error::param(name, "missing"))?;
    if !value.is_finite() {
        return Err(Error::param(name, "must be finite"));
    }
    if strictly_positive && value <= 0.0 {
        return Err(Error::param(name, format!("must be positive, got {value}")));
    }
    if value < 0.0 {
        return Err(Error::param(
            name,
            format!("must be non-negative, got {value}"),
        ));
    }
    Ok(value)
}

fn boxed(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// Builds one of the five built-in models.
///
/// | model          | m(x)                 | v_F(x)             | domain       |
/// |----------------|----------------------|--------------------|--------------|
/// | CoshSquare     | m0 / cosh^4(a x)     | v0 cosh^2(a x)     | (-inf, inf)  |
/// | Rational       | m0 / (1 + a^2x^2)^2  | v0 (1 + a^2 x^2)   | (-inf, inf)  |
/// | PoschlTeller   | m0 / sin(a x)        | v0                 | (0, pi/a)    |
/// | LinearSingular | A / x                | v0 x               | (0, inf)     |
/// | ConstantRest   | m0                   | c                  | (-inf, inf)  |
pub fn builtin_model(kind: BuiltinModel, params: &Params) -> Result<ModelSpec> {
    let mut used = Params::new();
    let (mass, velocity, anchor, scale) = match kind {
        BuiltinModel::CoshSquare => {
            let a = require(params, "alpha", true)?;
            let v0 = require(params, "v0", true)?;
            let m0 = require(params, "m0", false)?;
            used.extend([("alpha".into(), a), ("v0".into(), v0), ("m0".into(), m0)]);
            let dom = Interval::real_line();
            let mass = MassProfile::new(
                dom,
                boxed(move |x| m0 / (a * x).cosh().powi(4)),
                boxed(move |x| -4.0 * a * m0 * (a * x).tanh() / (a * x).cosh().powi(4)),
                boxed(move |x| {
                    let c = (a * x).cosh();
                    let t = (a * x).tanh();
                    // d/dx [-4 a m0 sinh / cosh^5] = a^2 m0 (20 tanh^2 - 4) / cosh^4
                    a * a * m0 * (20.0 * t * t - 4.0) / c.powi(4)
                }),
            );
            let velocity = VelocityProfile::new(
                dom,
                boxed(move |x| v0 * (a * x).cosh().powi(2)),
                boxed(move |x| v0 * a * (2.0 * a * x).sinh()),
                boxed(move |x| 2.0 * v0 * a * a * (2.0 * a * x).cosh()),
            );
            (mass, velocity, 0.0, 1.0 / a)
        }
        BuiltinModel::Rational => {
            let a = require(params, "alpha", true)?;
            let v0 = require(params, "v0", true)?;
            let m0 = require(params, "m0", false)?;
            used.extend([("alpha".into(), a), ("v0".into(), v0), ("m0".into(), m0)]);
            let dom = Interval::real_line();
            let mass = MassProfile::new(
                dom,
                boxed(move |x| m0 / (1.0 + a * a * x * x).powi(2)),
                boxed(move |x| -4.0 * m0 * a * a * x / (1.0 + a * a * x * x).powi(3)),
                boxed(move |x| {
                    let w = 1.0 + a * a * x * x;
                    4.0 * m0 * a * a * (5.0 * a * a * x * x - 1.0) / w.powi(4)
                }),
            );
            let velocity = VelocityProfile::new(
                dom,
                boxed(move |x| v0 * (1.0 + a * a * x * x)),
                boxed(move |x| 2.0 * v0 * a * a * x),
                boxed(move |_| 2.0 * v0 * a * a),
            );
            (mass, velocity, 0.0, 1.0 / a)
        }
        BuiltinModel::PoschlTeller => {
            let a = require(params, "alpha", true)?;
            let v0 = require(params, "v0", true)?;
            let m0 = require(params, "m0", false)?;
            used.extend([("alpha".into(), a), ("v0".into(), v0), ("m0".into(), m0)]);
            let dom = Interval::new(0.0, PI / a);
            let mass = MassProfile::new(
                dom,
                boxed(move |x| m0 / (a * x).sin()),
                boxed(move |x| {
                    let s = (a * x).sin();
                    -m0 * a * (a * x).cos() / (s * s)
                }),
                boxed(move |x| {
                    let s = (a * x).sin();
                    let c = (a * x).cos();
                    m0 * a * a * (1.0 + c * c) / (s * s * s)
                }),
            );
            let velocity = VelocityProfile::constant(dom, v0);
            (mass, velocity, 0.5 * PI / a, 1.0 / a)
        }
        BuiltinModel::LinearSingular => {
            let big_a = require(params, "A", false)?;
            let v0 = require(params, "v0", true)?;
            used.extend([("A".into(), big_a), ("v0".into(), v0)]);
            let dom = Interval::new(0.0, f64::INFINITY);
            let mass = MassProfile::new(
                dom,
                boxed(move |x| big_a / x),
                boxed(move |x| -big_a / (x * x)),
                boxed(move |x| 2.0 * big_a / (x * x * x)),
            );
            let velocity = VelocityProfile::new(
                dom,
                boxed(move |x| v0 * x),
                boxed(move |_| v0),
                boxed(|_| 0.0),
            );
            (mass, velocity, 1.0, 1.0)
        }
        BuiltinModel::ConstantRest => {
            let m0 = require(params, "m0", false)?;
            let c = require(params, "c", true)?;
            used.extend([("m0".into(), m0), ("c".into(), c)]);
            let dom = Interval::real_line();
            (
                MassProfile::constant(dom, m0),
                VelocityProfile::constant(dom, c),
                0.0,
                1.0,
            )
        }
    };
    let mut spec = ModelSpec::new(kind.name(), mass, velocity, used, anchor, scale)?;
    spec.kind = Some(kind);
    Ok(spec)
}

/// `u = m v_F^2` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductU {
    pub u: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn product_u(model: &ModelSpec, x: f64) -> Result<ProductU> {
    model.domain.check(x)?;
    let m = model.mass.eval(x);
    let m1 = model.mass.deriv1(x);
    let m2 = model.mass.deriv2(x);
    let v = model.velocity.eval(x);
    let v1 = model.velocity.deriv1(x);
    let v2 = model.velocity.deriv2(x);
    let out = ProductU {
        u: m * v * v,
        d1: m1 * v * v + 2.0 * m * v * v1,
        d2: m2 * v * v + 4.0 * m1 * v * v1 + 2.0 * m * (v1 * v1 + v * v2),
    };
    if out.u.is_finite() && out.d1.is_finite() && out.d2.is_finite() {
        Ok(out)
    } else {
        Err(Error::Domain {
            x,
            lo: model.domain.lo,
            hi: model.domain.hi,
        })
    }
}

/// Returns `A` when `m v_F^2` is constant across a dense interior sample.
pub fn detect_constant_u(model: &ModelSpec, tol: f64) -> Option<f64> {
    let reference = product_u(model, model.anchor).ok()?.u;
    let bound = tol * reference.abs().max(1.0);
    let constant = model
        .dense_sample()
        .iter()
        .all(|&x| matches!(product_u(model, x), Ok(p) if (p.u - reference).abs() <= bound));
    constant.then_some(reference)
}
