//! End-to-end solves: mode resolution, q-window selection and the per-state
//! eigen/self-consistency loop.

use crate::eigensolver::{solve_fixed, solve_self_consistent, EigenPair};
use crate::error::{Error, Result};
use crate::grid::{GridKind, MappedGrid, QGrid};
use crate::potential::{approx_potential, constant_u_potential, exact_potential, PotentialField};
use crate::profiles::{detect_constant_u, product_u, ModelSpec};
use crate::transform::{build_transform, EndpointKind, TransformMap};

/// Tolerance used to recognise `m v_F^2 = const`.
pub const CONSTANT_U_TOL: f64 = 1e-10;
const MAX_NODES: usize = 400_000;
const MAX_WINDOW_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeRequest {
    Exact,
    Approximate,
    ConstantU,
    #[default]
    Auto,
}

impl std::str::FromStr for ModeRequest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ModeRequest::Exact),
            "approximate" => Ok(ModeRequest::Approximate),
            "constant-u" => Ok(ModeRequest::ConstantU),
            "auto" => Ok(ModeRequest::Auto),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected exact, approximate, constant-u or auto)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedMode {
    Exact,
    Approximate,
    ConstantU(f64),
}

impl ResolvedMode {
    pub fn label(&self) -> &'static str {
        match self {
            ResolvedMode::Exact => "exact",
            ResolvedMode::Approximate => "approximate",
            ResolvedMode::ConstantU(_) => "constant-u",
        }
    }
}

/// Picks the potential mode. `Auto` prefers constant-u, then the
/// approximate form when the mass is positive, then the exact form.
pub fn resolve_mode(model: &ModelSpec, request: ModeRequest) -> Result<ResolvedMode> {
    match request {
        ModeRequest::Exact => Ok(ResolvedMode::Exact),
        ModeRequest::Approximate => {
            if model.mass_strictly_positive() {
                Ok(ResolvedMode::Approximate)
            } else {
                Err(Error::ApproximationInvalid(
                    "mass is not strictly positive".into(),
                ))
            }
        }
        ModeRequest::ConstantU => detect_constant_u(model, CONSTANT_U_TOL)
            .map(ResolvedMode::ConstantU)
            .ok_or_else(|| Error::ApproximationInvalid("m v_F^2 is not constant".into())),
        ModeRequest::Auto => Ok(if let Some(a) = detect_constant_u(model, CONSTANT_U_TOL) {
            ResolvedMode::ConstantU(a)
        } else if model.mass_strictly_positive() {
            ResolvedMode::Approximate
        } else {
            ResolvedMode::Exact
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub nodes: usize,
    pub kind: GridKind,
    /// Initial half-width of the q-window on an infinite side.
    pub half_width: f64,
    /// Required margin `V(wall) - lambda_k` on truncated sides.
    pub delta: f64,
    pub quad_tol: f64,
    /// Window growth stops once the levels move less than this.
    pub eig_tol: f64,
    pub sc_tol: f64,
    pub max_iter: usize,
    pub states: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            nodes: 2001,
            kind: GridKind::Vertex,
            half_width: 8.0,
            delta: 25.0,
            quad_tol: 1e-12,
            eig_tol: 1e-8,
            sc_tol: 1e-12,
            max_iter: 100,
            states: 5,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 64 {
            return Err(Error::Config(format!(
                "grid.n must be at least 64, got {}",
                self.nodes
            )));
        }
        if self.states == 0 {
            return Err(Error::Config("states must be at least 1".into()));
        }
        for (name, v) in [
            ("grid.half_width", self.half_width),
            ("grid.delta", self.delta),
            ("tol.quad", self.quad_tol),
            ("tol.eig", self.eig_tol),
            ("tol.sc", self.sc_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("tol.max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One solved level.
#[derive(Debug, Clone)]
pub struct StateResult {
    pub index: usize,
    pub lambda: f64,
    pub energy_plus: f64,
    /// Negative-branch energy; `None` when it does not exist in the chosen mode.
    pub energy_minus: Option<f64>,
    pub nodes: usize,
    pub error_estimate: f64,
    pub iterations: usize,
    pub pair: Option<EigenPair>,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub mode: ResolvedMode,
    pub map: TransformMap,
    /// The q-interval actually discretised.
    pub window: (f64, f64),
    pub grid: Option<QGrid>,
    /// Potential used for the last state (at its converged energy in exact mode).
    pub field: Option<PotentialField>,
    pub states: Vec<StateResult>,
    /// True when the spectrum is the continuum threshold `E = ±A` of an unconfined constant-u model.
    pub threshold: bool,
}

pub fn build_map(model: &ModelSpec, quad_tol: f64) -> Result<TransformMap> {
    build_transform(&model.velocity, model.anchor, quad_tol)
}

fn field_for(
    model: &ModelSpec,
    mode: ResolvedMode,
    energy: f64,
    mg: &MappedGrid,
) -> Result<PotentialField> {
    match mode {
        ResolvedMode::Exact => exact_potential(model, energy, mg),
        ResolvedMode::Approximate => approx_potential(model, mg),
        ResolvedMode::ConstantU(a) => Ok(constant_u_potential(a, mg)),
    }
}

/// Energy at which the exact potential is first evaluated: above every `-u`
/// on the window, so `zeta2 > 0`.
fn exact_seed(model: &ModelSpec, mg: &MappedGrid) -> Result<f64> {
    let mut umax: f64 = 0.0;
    for &x in &mg.x {
        umax = umax.max(product_u(model, x)?.u.abs());
    }
    Ok(umax + 1.0)
}

fn make_grid(lo: f64, hi: f64, n: usize, kind: GridKind, map: &TransformMap) -> Result<MappedGrid> {
    if n > MAX_NODES {
        return Err(Error::InsufficientResolution {
            requested: n,
            nodes: MAX_NODES,
        });
    }
    MappedGrid::new(QGrid::new(lo, hi, n, kind)?, map)
}

/// Chooses the q-window. Finite ends are used as walls; infinite ends are
/// pushed out until the potential there exceeds the highest requested level
/// by `delta` and the levels stop moving, at fixed spacing.
fn choose_window(
    model: &ModelSpec,
    map: &TransformMap,
    mode: ResolvedMode,
    opts: &SolveOptions,
) -> Result<(f64, f64, usize)> {
    let lo_inf = map.lo_kind() == EndpointKind::Infinite;
    let hi_inf = map.hi_kind() == EndpointKind::Infinite;
    let mut lo = if lo_inf { -opts.half_width } else { map.q_lo() };
    let mut hi = if hi_inf { opts.half_width } else { map.q_hi() };
    if !lo_inf && !hi_inf {
        return Ok((lo, hi, opts.nodes));
    }
    let spacing = (hi - lo) / (opts.nodes + 1) as f64;
    let nodes_for = |lo: f64, hi: f64| ((hi - lo) / spacing).ceil() as usize;
    let mut last: Option<Vec<f64>> = None;
    let mut wall_prev: (f64, f64) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut stalls = (0, 0);
    for _ in 0..MAX_WINDOW_STEPS {
        let mg = make_grid(lo, hi, nodes_for(lo, hi), opts.kind, map)?;
        let seed = match mode {
            ResolvedMode::Exact => exact_seed(model, &mg)?,
            _ => 0.0,
        };
        let field = field_for(model, mode, seed, &mg)?;
        let spectrum = solve_fixed(&field, opts.states)?;
        let lambdas: Vec<f64> = spectrum
            .pairs
            .iter()
            .map(|p| p.lambda + spectrum.offset)
            .collect();
        let top = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v_lo = field.values[0];
        let v_hi = *field.values.last().unwrap_or(&f64::NAN);
        let lo_ok = !lo_inf || v_lo >= top + opts.delta;
        let hi_ok = !hi_inf || v_hi >= top + opts.delta;
        if lo_ok && hi_ok {
            if let Some(prev) = &last {
                let moved = prev
                    .iter()
                    .zip(&lambdas)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                if moved < opts.eig_tol {
                    return Ok((lo, hi, nodes_for(lo, hi)));
                }
            }
            last = Some(lambdas);
            if lo_inf {
                lo *= 2.0;
            }
            if hi_inf {
                hi *= 2.0;
            }
            continue;
        }
        last = None;
        if !lo_ok {
            if v_lo <= wall_prev.0 {
                stalls.0 += 1;
                if stalls.0 >= 3 {
                    return Err(Error::NotConfining { side: "lower" });
                }
            }
            wall_prev.0 = v_lo;
            lo *= 2.0;
        }
        if !hi_ok {
            if v_hi <= wall_prev.1 {
                stalls.1 += 1;
                if stalls.1 >= 3 {
                    return Err(Error::NotConfining { side: "upper" });
                }
            }
            wall_prev.1 = v_hi;
            hi *= 2.0;
        }
    }
    Err(Error::NotConfining {
        side: if lo_inf { "lower" } else { "upper" },
    })
}

fn threshold_outcome(map: TransformMap, mode: ResolvedMode, a: f64) -> SolveOutcome {
    SolveOutcome {
        mode,
        window: (map.q_lo(), map.q_hi()),
        map,
        grid: None,
        field: None,
        states: vec![StateResult {
            index: 0,
            lambda: 0.0,
            energy_plus: a,
            energy_minus: Some(-a),
            nodes: 0,
            error_estimate: 0.0,
            iterations: 0,
            pair: None,
        }],
        threshold: true,
    }
}

/// Solves the lowest `opts.states` levels of `model`.
pub fn solve(model: &ModelSpec, request: ModeRequest, opts: &SolveOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let mode = resolve_mode(model, request)?;
    let map = build_map(model, opts.quad_tol)?;

    // a constant potential cannot confine on an unbounded q-line: only the threshold remains
    let constant = match mode {
        ResolvedMode::ConstantU(a) => Some(a),
        ResolvedMode::Exact => detect_constant_u(model, CONSTANT_U_TOL),
        ResolvedMode::Approximate => None,
    };
    if let (Some(a), false) = (constant, map.is_bounded()) {
        return Ok(threshold_outcome(map, mode, a));
    }

    let (lo, hi, n) = choose_window(model, &map, mode, opts)?;
    let mg = make_grid(lo, hi, n, opts.kind, &map)?;

    let mut states = Vec::with_capacity(opts.states);
    let field;
    match mode {
        ResolvedMode::Exact => {
            let seed_field = exact_potential(model, exact_seed(model, &mg)?, &mg)?;
            let seeds = solve_fixed(&seed_field, opts.states)?;
            let mut last_field = None;
            for k in 0..opts.states {
                let e0 = seeds.pairs[k].lambda.max(0.0).sqrt().max(1e-8);
                let sc = solve_self_consistent(model, &mg, k, e0, opts.sc_tol, opts.max_iter)?;
                let minus = solve_self_consistent(model, &mg, k, -e0, opts.sc_tol, opts.max_iter)
                    .ok()
                    .map(|s| s.energy);
                states.push(StateResult {
                    index: k,
                    lambda: sc.pair.lambda,
                    energy_plus: sc.energy,
                    energy_minus: minus,
                    nodes: sc.pair.nodes,
                    error_estimate: sc.pair.error_estimate,
                    iterations: sc.iterations,
                    pair: Some(sc.pair),
                });
                last_field = Some(exact_potential(model, sc.energy, &mg)?);
            }
            field = last_field;
        }
        _ => {
            let f = field_for(model, mode, 0.0, &mg)?;
            let spectrum = solve_fixed(&f, opts.states)?;
            for (k, pair) in spectrum.pairs.into_iter().enumerate() {
                let (ep, em) = spectrum.energies[k].ok_or(Error::ImaginaryEnergy {
                    radicand: pair.lambda + spectrum.offset,
                })?;
                states.push(StateResult {
                    index: k,
                    lambda: pair.lambda,
                    energy_plus: ep,
                    energy_minus: Some(em),
                    nodes: pair.nodes,
                    error_estimate: pair.error_estimate,
                    iterations: 1,
                    pair: Some(pair),
                });
            }
            field = Some(f);
        }
    }
    Ok(SolveOutcome {
        mode,
        map,
        window: (lo, hi),
        grid: Some(mg.grid),
        field,
        states,
        threshold: false,
    })
}
