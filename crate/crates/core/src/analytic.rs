//! Closed-form reference spectra, wavefunctions and the special functions
//! they use.
//!
//! Formulas carry a provenance flag. `Verified` forms follow from the
//! defining equations and are safe to assert against; `AsPublished` forms are
//! reproduced as printed and are known to disagree with direct evaluation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profiles::{BuiltinModel, Params};
use crate::quadrature::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Verified,
    AsPublished,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Verified => "verified",
            Provenance::AsPublished => "as-published",
        }
    }
}

/// Which form of the Pöschl-Teller `s` parameter to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SVariant {
    /// `s = 1/2 + sqrt(m0^2 v0^2 / alpha^2 - 1/16)`, from the potential's `1/sin^2` coefficient.
    #[default]
    Verified,
    /// `s = 1/2 + sqrt(m0^2 alpha^2 - 1/16)` as printed.
    AsPublished,
}

impl std::str::FromStr for SVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verified" => Ok(SVariant::Verified),
            "as-published" => Ok(SVariant::AsPublished),
            other => Err(Error::Config(format!(
                "unknown s-variant `{other}` (expected verified or as-published)"
            ))),
        }
    }
}

/// Closed-form level formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    /// `E_n^2 = (n pi alpha v0 / 2)^2 + m0^2 v0^4`, `n >= 1`.
    CoshSquareBox,
    /// `E_n^2 = (n alpha v0)^2 + m0^2 v0^4`, `n >= 1`.
    RationalBox,
    /// `E_n = (alpha v0 / 4) sqrt(1 + 16 (s + 2n)^2)`, `n >= 0`.
    PoschlTellerEven,
    /// `E_n^2 = A v0^3 (2n + 1) - v0^2 / 16`, `n >= 0`.
    LinearOscillator,
    /// `E = m0 c^2`, single level.
    RestMass,
}

impl Formula {
    pub fn label(&self) -> &'static str {
        match self {
            Formula::CoshSquareBox => "cosh-square-box",
            Formula::RationalBox => "rational-box",
            Formula::PoschlTellerEven => "poschl-teller-even",
            Formula::LinearOscillator => "linear-oscillator",
            Formula::RestMass => "rest-mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSpectrum {
    pub model: BuiltinModel,
    pub formula: Formula,
    pub params: Params,
    pub provenance: Provenance,
    pub s_variant: SVariant,
}

fn get(params: &Params, name: &str) -> Result<f64> {
    let v = *params
        .get(name)
        .ok_or_else(|| Error::param(name, "missing"))?;
    if !v.is_finite() {
        return Err(Error::param(name, "must be finite"));
    }
    Ok(v)
}

/// The Pöschl-Teller `s > 1/2` root.
pub fn poschl_teller_s(params: &Params, variant: SVariant) -> Result<f64> {
    let a = get(params, "alpha")?;
    let v0 = get(params, "v0")?;
    let m0 = get(params, "m0")?;
    let radicand = match variant {
        SVariant::Verified => m0 * m0 * v0 * v0 / (a * a) - 1.0 / 16.0,
        SVariant::AsPublished => m0 * m0 * a * a - 1.0 / 16.0,
    };
    if radicand < 0.0 {
        return Err(Error::param(
            "m0",
            format!("s is complex: radicand {radicand}"),
        ));
    }
    Ok(0.5 + radicand.sqrt())
}

impl AnalyticSpectrum {
    pub fn new(model: BuiltinModel, params: &Params) -> Result<Self> {
        AnalyticSpectrum::with_variant(model, params, SVariant::Verified)
    }

    pub fn with_variant(model: BuiltinModel, params: &Params, s_variant: SVariant) -> Result<Self> {
        let (formula, provenance) = match model {
            BuiltinModel::CoshSquare => (Formula::CoshSquareBox, Provenance::Verified),
            BuiltinModel::Rational => (Formula::RationalBox, Provenance::Verified),
            BuiltinModel::PoschlTeller => (
                Formula::PoschlTellerEven,
                match s_variant {
                    SVariant::Verified => Provenance::Verified,
                    SVariant::AsPublished => Provenance::AsPublished,
                },
            ),
            BuiltinModel::LinearSingular => (Formula::LinearOscillator, Provenance::AsPublished),
            BuiltinModel::ConstantRest => (Formula::RestMass, Provenance::Verified),
        };
        for name in model.required_params() {
            get(params, name)?;
        }
        Ok(AnalyticSpectrum {
            model,
            formula,
            params: params.clone(),
            provenance,
            s_variant,
        })
    }

    /// Smallest valid level index.
    pub fn first_index(&self) -> usize {
        match self.formula {
            Formula::CoshSquareBox | Formula::RationalBox => 1,
            _ => 0,
        }
    }

    /// Index of the numeric eigenstate (0-based, ascending) that level `n` corresponds to.
    pub fn numeric_state(&self, n: usize) -> usize {
        match self.formula {
            Formula::CoshSquareBox | Formula::RationalBox => n - 1,
            Formula::PoschlTellerEven => 2 * n,
            _ => n,
        }
    }

    /// `(E+, E-)` for level `n`.
    pub fn level(&self, n: usize) -> Result<(f64, f64)> {
        if n < self.first_index() {
            return Err(Error::param(
                "n",
                format!("levels start at {}", self.first_index()),
            ));
        }
        let p = &self.params;
        let nf = n as f64;
        let e2 = match self.formula {
            Formula::CoshSquareBox => {
                let (a, v0, m0) = (get(p, "alpha")?, get(p, "v0")?, get(p, "m0")?);
                (nf * PI * a * v0 / 2.0).powi(2) + (m0 * v0 * v0).powi(2)
            }
            Formula::RationalBox => {
                let (a, v0, m0) = (get(p, "alpha")?, get(p, "v0")?, get(p, "m0")?);
                (nf * a * v0).powi(2) + (m0 * v0 * v0).powi(2)
            }
            Formula::PoschlTellerEven => {
                let (a, v0) = (get(p, "alpha")?, get(p, "v0")?);
                let s = poschl_teller_s(p, self.s_variant)?;
                (a * v0 / 4.0).powi(2) * (1.0 + 16.0 * (s + 2.0 * nf).powi(2))
            }
            Formula::LinearOscillator => {
                let (big_a, v0) = (get(p, "A")?, get(p, "v0")?);
                big_a * v0.powi(3) * (2.0 * nf + 1.0) - v0 * v0 / 16.0
            }
            Formula::RestMass => {
                if n > 0 {
                    return Err(Error::param(
                        "n",
                        "the rest-mass spectrum has a single level",
                    ));
                }
                let (m0, c) = (get(p, "m0")?, get(p, "c")?);
                (m0 * c * c).powi(2)
            }
        };
        if e2 < 0.0 {
            return Err(Error::ImaginaryEnergy { radicand: e2 });
        }
        let e = e2.sqrt();
        Ok((e, -e))
    }
}

/// `(E+, E-)` of level `n` with the verified `s` where it applies.
pub fn spectrum_value(model: BuiltinModel, n: usize, params: &Params) -> Result<(f64, f64)> {
    AnalyticSpectrum::new(model, params)?.level(n)
}

/// Every Pöschl-Teller level `E_k = (alpha v0 / 4) sqrt(1 + 16 (s + k)^2)`.
///
/// The published sequence is the even-`k` subset.
pub fn poschl_teller_all_levels(params: &Params, variant: SVariant, k: usize) -> Result<f64> {
    let (a, v0) = (get(params, "alpha")?, get(params, "v0")?);
    let s = poschl_teller_s(params, variant)?;
    Ok(a * v0 / 4.0 * (1.0 + 16.0 * (s + k as f64).powi(2)).sqrt())
}

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite(n: usize, y: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * y;
    for k in 1..n {
        let next = 2.0 * y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `2F1(-n, b; c; z)` as its terminating sum.
pub fn hyp2f1_polynomial(n: usize, b: f64, c: f64, z: f64) -> Result<f64> {
    for j in 0..n {
        if c + j as f64 == 0.0 {
            return Err(Error::param("c", format!("pole at c = {c}")));
        }
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let kf = k as f64;
        term *= (kf - n as f64) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
    }
    Ok(sum)
}

/// Normalization constant of the discrete constant-`u` states, from direct
/// integration of the components: `sqrt(alpha v0 / (2 E))` and `sqrt(alpha v0 / (pi E))`.
pub fn discrete_norm(model: BuiltinModel, n: usize, params: &Params) -> Result<f64> {
    let (e, _) = spectrum_value(model, n, params)?;
    let (a, v0) = (get(params, "alpha")?, get(params, "v0")?);
    match model {
        BuiltinModel::CoshSquare => Ok((a * v0 / (2.0 * e)).sqrt()),
        BuiltinModel::Rational => Ok((a * v0 / (PI * e)).sqrt()),
        _ => Err(Error::param(
            "model",
            "closed-form normalization exists for cosh-square and rational only",
        )),
    }
}

/// The printed cosh-square normalization `sqrt(alpha v0 l / (2 (l zeta1 + 2 alpha m0 v0^4)))`.
pub fn cosh_square_norm_as_published(energy: f64, params: &Params) -> Result<f64> {
    let (a, v0, m0) = (
        get(params, "alpha")?,
        get(params, "v0")?,
        get(params, "m0")?,
    );
    let big_a = m0 * v0 * v0;
    let lt2 = energy * energy - big_a * big_a;
    if lt2 < 0.0 {
        return Err(Error::SubGap { energy, gap: big_a });
    }
    let lt = lt2.sqrt();
    let zeta1 = energy - big_a;
    Ok((a * v0 * lt / (2.0 * (lt * zeta1 + 2.0 * a * m0 * v0.powi(4)))).sqrt())
}

/// The claimed `1/sin^2` potential `alpha^2 v0^2/16 + C / sin^2(alpha x)`.
///
/// With `SVariant::Verified` the coefficient is `m0^2 v0^4 - 5 alpha^2 v0^2 / 16`;
/// the printed `s(s-1)` form gives `m0^2 v0^2 - 5 alpha^2 v0^2 / 16`.
pub fn poschl_teller_claimed_potential(
    params: &Params,
    variant: SVariant,
) -> Result<impl Fn(f64, f64) -> f64> {
    let (a, v0, m0) = (
        get(params, "alpha")?,
        get(params, "v0")?,
        get(params, "m0")?,
    );
    let coeff = match variant {
        SVariant::Verified => m0 * m0 * v0.powi(4) - 5.0 * a * a * v0 * v0 / 16.0,
        SVariant::AsPublished => m0 * m0 * v0 * v0 - 5.0 * a * a * v0 * v0 / 16.0,
    };
    Ok(move |x: f64, _q: f64| a * a * v0 * v0 / 16.0 + coeff / (a * x).sin().powi(2))
}

/// The harmonic form claimed for the linear-velocity model, `A^2 v0^6 q^2 - v0^2/16`.
pub fn linear_singular_claimed_potential(params: &Params) -> Result<impl Fn(f64, f64) -> f64> {
    let (big_a, v0) = (get(params, "A")?, get(params, "v0")?);
    Ok(move |_x: f64, q: f64| big_a * big_a * v0.powi(6) * q * q - v0 * v0 / 16.0)
}

/// Direct evaluation of the approximate potential for the linear-velocity
/// model, `A^2 v0^4 exp(2 v0 q) - v0^2/16`.
pub fn linear_singular_direct_potential(params: &Params) -> Result<impl Fn(f64, f64) -> f64> {
    let (big_a, v0) = (get(params, "A")?, get(params, "v0")?);
    Ok(move |_x: f64, q: f64| big_a * big_a * v0.powi(4) * (2.0 * v0 * q).exp() - v0 * v0 / 16.0)
}

/// A closed-form bound state, normalized.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub model: BuiltinModel,
    pub n: usize,
    pub energy: f64,
    pub norm: f64,
    pub provenance: Provenance,
    params: Params,
    s: f64,
}

impl BoundState {
    /// Builds level `n` on the positive branch. For the Pöschl-Teller and
    /// linear-velocity models the norm is found by quadrature.
    pub fn new(model: BuiltinModel, n: usize, params: &Params) -> Result<Self> {
        BoundState::with_variant(model, n, params, SVariant::Verified)
    }

    pub fn with_variant(
        model: BuiltinModel,
        n: usize,
        params: &Params,
        variant: SVariant,
    ) -> Result<Self> {
        let spectrum = AnalyticSpectrum::with_variant(model, params, variant)?;
        let (energy, _) = spectrum.level(n)?;
        let s = if model == BuiltinModel::PoschlTeller {
            poschl_teller_s(params, variant)?
        } else {
            0.0
        };
        let mut state = BoundState {
            model,
            n,
            energy,
            norm: 1.0,
            provenance: spectrum.provenance,
            params: params.clone(),
            s,
        };
        state.norm = match model {
            BuiltinModel::CoshSquare | BuiltinModel::Rational => discrete_norm(model, n, params)?,
            BuiltinModel::PoschlTeller | BuiltinModel::LinearSingular => {
                let (lo, hi) = state.q_range()?;
                let (total, _) = integrate(
                    |q| {
                        let (a, b) = state.tilde(q).unwrap_or_default();
                        a.norm_sqr() + b.norm_sqr()
                    },
                    lo,
                    hi,
                    1e-13,
                    1e-12,
                )?;
                if !(total > 0.0 && total.is_finite()) {
                    return Err(Error::NonNormalizable(format!("total probability {total}")));
                }
                1.0 / total.sqrt()
            }
            BuiltinModel::ConstantRest => {
                return Err(Error::NonNormalizable("rest-mass plane wave".into()));
            }
        };
        Ok(state)
    }

    fn p(&self, name: &str) -> f64 {
        self.params[name]
    }

    /// Integration range in `q` (midpoint anchor for the hole, `x0 = 1` for the oscillator).
    fn q_range(&self) -> Result<(f64, f64)> {
        match self.model {
            BuiltinModel::CoshSquare => {
                let w = 1.0 / (self.p("alpha") * self.p("v0"));
                Ok((-w, w))
            }
            BuiltinModel::Rational => {
                let w = PI / (2.0 * self.p("alpha") * self.p("v0"));
                Ok((-w, w))
            }
            BuiltinModel::PoschlTeller => {
                let w = PI / (2.0 * self.p("alpha") * self.p("v0"));
                Ok((-w, w))
            }
            BuiltinModel::LinearSingular => {
                // Gaussian width 1/sqrt(A v0^3) in q
                let w = 40.0 / (self.p("A") * self.p("v0").powi(3)).sqrt().max(1e-3);
                Ok((-w, w))
            }
            BuiltinModel::ConstantRest => {
                Err(Error::NonNormalizable("rest-mass plane wave".into()))
            }
        }
    }

    /// Scalar eigenfunction `phi(q)` of the closed form, unnormalized.
    fn phi(&self, q: f64) -> Result<f64> {
        match self.model {
            BuiltinModel::PoschlTeller => {
                let (a, v0) = (self.p("alpha"), self.p("v0"));
                let (lo, _) = self.q_range()?;
                let sn = (a * v0 * (q - lo)).sin().abs();
                let f = hyp2f1_polynomial(self.n, self.s + self.n as f64, self.s + 0.5, sn * sn)?;
                Ok(sn.powf(self.s) * f)
            }
            BuiltinModel::LinearSingular => {
                let w = self.p("A") * self.p("v0").powi(3);
                Ok((-w * q * q / 2.0).exp() * hermite(self.n, w.sqrt() * q))
            }
            _ => Err(Error::param(
                "model",
                "phi is defined in closed form for the hole and oscillator",
            )),
        }
    }

    fn zeta2_at_q(&self, q: f64) -> f64 {
        match self.model {
            BuiltinModel::PoschlTeller => {
                let (a, v0, m0) = (self.p("alpha"), self.p("v0"), self.p("m0"));
                let (lo, _) = self.q_range().unwrap_or((0.0, 0.0));
                self.energy + m0 * v0 * v0 / (a * v0 * (q - lo)).sin()
            }
            BuiltinModel::LinearSingular => {
                let (big_a, v0) = (self.p("A"), self.p("v0"));
                self.energy + big_a * v0 * v0 * (v0 * q).exp()
            }
            _ => self.energy,
        }
    }

    /// Reduced amplitudes `(psi~1, psi~2)` at `q`, before normalization.
    pub fn tilde_unnormalized(&self, q: f64) -> Result<(Complex64, Complex64)> {
        let (lo, hi) = self.q_range()?;
        if !(q > lo && q < hi) {
            if self.model == BuiltinModel::LinearSingular {
                return Ok(Default::default());
            }
            if q == lo || q == hi {
                return self.wall_value(q);
            }
            return Err(Error::Domain { x: q, lo, hi });
        }
        match self.model {
            BuiltinModel::CoshSquare | BuiltinModel::Rational => {
                let big_a = self.p("m0") * self.p("v0").powi(2);
                let (z1, z2) = (self.energy - big_a, self.energy + big_a);
                let lt = (self.energy * self.energy - big_a * big_a).sqrt();
                let arg = lt * (q - lo);
                Ok((
                    Complex64::new(z2.sqrt() * arg.sin(), 0.0),
                    Complex64::new(0.0, -z1.sqrt() * arg.cos()),
                ))
            }
            BuiltinModel::PoschlTeller | BuiltinModel::LinearSingular => {
                let f =
                    |qq: f64| -> f64 { self.zeta2_at_q(qq).sqrt() * self.phi(qq).unwrap_or(0.0) };
                let h = 1e-4 * (hi - lo).min(1.0).min((q - lo).min(hi - q));
                let d = (f(q - 2.0 * h) - 8.0 * f(q - h) + 8.0 * f(q + h) - f(q + 2.0 * h))
                    / (12.0 * h);
                let z2 = self.zeta2_at_q(q);
                Ok((Complex64::new(f(q), 0.0), Complex64::new(0.0, -d / z2)))
            }
            BuiltinModel::ConstantRest => {
                Err(Error::NonNormalizable("rest-mass plane wave".into()))
            }
        }
    }

    fn wall_value(&self, q: f64) -> Result<(Complex64, Complex64)> {
        match self.model {
            BuiltinModel::CoshSquare | BuiltinModel::Rational => {
                let (lo, _) = self.q_range()?;
                let big_a = self.p("m0") * self.p("v0").powi(2);
                let (z1, z2) = (self.energy - big_a, self.energy + big_a);
                let lt = (self.energy * self.energy - big_a * big_a).sqrt();
                let arg = lt * (q - lo);
                Ok((
                    Complex64::new(z2.sqrt() * arg.sin(), 0.0),
                    Complex64::new(0.0, -z1.sqrt() * arg.cos()),
                ))
            }
            _ => Ok(Default::default()),
        }
    }

    /// Normalized reduced amplitudes at `q`.
    pub fn tilde(&self, q: f64) -> Result<(Complex64, Complex64)> {
        let (a, b) = self.tilde_unnormalized(q)?;
        Ok((a * self.norm, b * self.norm))
    }

    /// Normalized spinor components `(psi1, psi2)` at physical position `x`.
    pub fn eval(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let (q, v) = match self.model {
            BuiltinModel::CoshSquare => {
                let (a, v0) = (self.p("alpha"), self.p("v0"));
                ((a * x).tanh() / (a * v0), v0 * (a * x).cosh().powi(2))
            }
            BuiltinModel::Rational => {
                let (a, v0) = (self.p("alpha"), self.p("v0"));
                ((a * x).atan() / (a * v0), v0 * (1.0 + a * a * x * x))
            }
            BuiltinModel::PoschlTeller => {
                let (a, v0) = (self.p("alpha"), self.p("v0"));
                if !(x > 0.0 && x < PI / a) {
                    return Err(Error::Domain {
                        x,
                        lo: 0.0,
                        hi: PI / a,
                    });
                }
                (x / v0 - PI / (2.0 * a * v0), v0)
            }
            BuiltinModel::LinearSingular => {
                let v0 = self.p("v0");
                if !(x > 0.0) {
                    return Err(Error::Domain {
                        x,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                (x.ln() / v0, v0 * x)
            }
            BuiltinModel::ConstantRest => {
                return Err(Error::NonNormalizable("rest-mass plane wave".into()))
            }
        };
        if v.is_infinite() {
            return Ok(Default::default());
        }
        let (a, b) = self.tilde(q)?;
        let f = v.sqrt();
        Ok((a / f, b / f))
    }
}

/// Normalized closed-form spinor of level `n` at `x`.
pub fn bound_spinor(
    model: BuiltinModel,
    n: usize,
    params: &Params,
    x: f64,
) -> Result<(Complex64, Complex64)> {
    BoundState::new(model, n, params)?.eval(x)
}
