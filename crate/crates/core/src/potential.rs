//! Effective potentials of the reduced Schrödinger-like equation in `q`.
//!
//! With `u = m v_F^2` and `zeta2 = E + u`, the exact (energy-dependent) form is
//!
//! ```text
//! V(q) = v^2 [ 3/4 (zeta2'/zeta2)^2 - 1/2 zeta2''/zeta2 - 1/2 (v'/v)(zeta2'/zeta2) ] + u^2
//! ```
//!
//! and the non-relativistic form replaces `zeta2` by `2u` in every denominator.

use crate::error::{Error, Result};
use crate::grid::{MappedGrid, QGrid};
use crate::profiles::{product_u, ModelSpec};

/// Relative threshold below which `|zeta2|` marks a node singular.
pub const ZETA_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialMode {
    /// Exact potential evaluated at the given total energy.
    ExactAtEnergy(f64),
    /// Energy-independent non-relativistic potential.
    Approximate,
    /// `m v_F^2 = A` everywhere; the potential is the constant `A^2`.
    ConstantU(f64),
    /// Caller-supplied potential.
    Custom,
}

impl PotentialMode {
    pub fn label(&self) -> &'static str {
        match self {
            PotentialMode::ExactAtEnergy(_) => "exact",
            PotentialMode::Approximate => "approximate",
            PotentialMode::ConstantU(_) => "constant-u",
            PotentialMode::Custom => "custom",
        }
    }
}

/// A potential sampled on the interior nodes of a q-grid.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub grid: QGrid,
    pub q: Vec<f64>,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub mode: PotentialMode,
    pub singular: Vec<bool>,
}

impl PotentialField {
    /// Samples an arbitrary potential `V(q)`; node positions are taken as `x = q`.
    pub fn from_fn(grid: QGrid, f: impl Fn(f64) -> f64) -> Self {
        let mg = MappedGrid::identity(grid);
        let values: Vec<f64> = mg.q.iter().map(|&q| f(q)).collect();
        let singular = values.iter().map(|v| !v.is_finite()).collect();
        PotentialField {
            grid,
            q: mg.q,
            x: mg.x,
            values,
            mode: PotentialMode::Custom,
            singular,
        }
    }

    pub fn has_singular_nodes(&self) -> bool {
        self.singular.iter().any(|&s| s)
    }

    /// Constant subtracted from the diagonal before diagonalisation.
    pub fn offset(&self) -> f64 {
        match self.mode {
            PotentialMode::ConstantU(a) => a * a,
            _ => 0.0,
        }
    }

    /// Restriction to the nested coarse grid.
    pub fn coarse(&self) -> PotentialField {
        let idx = self.grid.coarse_indices();
        PotentialField {
            grid: self.grid.coarse(),
            q: idx.iter().map(|&i| self.q[i]).collect(),
            x: idx.iter().map(|&i| self.x[i]).collect(),
            values: idx.iter().map(|&i| self.values[i]).collect(),
            mode: self.mode,
            singular: idx.iter().map(|&i| self.singular[i]).collect(),
        }
    }
}

/// The pair `zeta1 = E - m v^2`, `zeta2 = E + m v^2` of the first-order system.
#[derive(Debug, Clone, Copy)]
pub struct ZetaPair<'a> {
    pub model: &'a ModelSpec,
    pub energy: f64,
}

impl<'a> ZetaPair<'a> {
    pub fn new(model: &'a ModelSpec, energy: f64) -> Self {
        ZetaPair { model, energy }
    }

    pub fn zeta1(&self, x: f64) -> Result<f64> {
        Ok(self.energy - product_u(self.model, x)?.u)
    }

    pub fn zeta2(&self, x: f64) -> Result<f64> {
        Ok(self.energy + product_u(self.model, x)?.u)
    }

    /// Errors if `zeta2` takes both signs on the given points.
    pub fn check_no_crossing(&self, xs: &[f64]) -> Result<()> {
        let mut last: Option<(f64, f64)> = None;
        for &x in xs {
            let z = self.zeta2(x)?;
            if z == 0.0 {
                continue;
            }
            if let Some((_, zp)) = last {
                if zp.signum() != z.signum() {
                    return Err(Error::ZetaCrossing {
                        x,
                        energy: self.energy,
                    });
                }
            }
            last = Some((x, z));
        }
        Ok(())
    }
}

/// Exact effective potential at energy `energy`.
pub fn exact_potential(
    model: &ModelSpec,
    energy: f64,
    grid: &MappedGrid,
) -> Result<PotentialField> {
    let zeta = ZetaPair::new(model, energy);
    let mut sorted: Vec<f64> = grid.x.iter().copied().chain(model.dense_sample()).collect();
    sorted.sort_by(f64::total_cmp);
    zeta.check_no_crossing(&sorted)?;

    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut triples = Vec::with_capacity(n);
    let mut scale = energy.abs();
    for &x in &grid.x {
        let p = product_u(model, x)?;
        scale = scale.max(p.u.abs());
        triples.push(p);
    }
    let eps = ZETA_EPS * scale.max(f64::MIN_POSITIVE);
    let mut singular = Vec::with_capacity(n);
    for (&x, p) in grid.x.iter().zip(&triples) {
        let v = model.velocity.eval(x);
        let v1 = model.velocity.deriv1(x);
        let z2 = energy + p.u;
        if z2.abs() < eps {
            singular.push(true);
            values.push(f64::NAN);
            continue;
        }
        let r1 = p.d1 / z2;
        let r2 = p.d2 / z2;
        let bracket = 0.75 * r1 * r1 - 0.5 * r2 - 0.5 * (v1 / v) * r1;
        let value = v * v * bracket + p.u * p.u;
        singular.push(!value.is_finite());
        values.push(value);
    }
    Ok(PotentialField {
        grid: grid.grid,
        q: grid.q.clone(),
        x: grid.x.clone(),
        values,
        mode: PotentialMode::ExactAtEnergy(energy),
        singular,
    })
}

/// Non-relativistic effective potential (energy independent).
pub fn approx_potential(model: &ModelSpec, grid: &MappedGrid) -> Result<PotentialField> {
    if model.is_massless() {
        return Err(Error::ApproximationInvalid(format!(
            "model `{}` is massless; the approximation needs m(x) > 0",
            model.label
        )));
    }
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut singular = Vec::with_capacity(n);
    for &x in &grid.x {
        let m = model.mass.eval(x);
        if !(m > 0.0) {
            singular.push(true);
            values.push(f64::NAN);
            continue;
        }
        let p = product_u(model, x)?;
        let v = model.velocity.eval(x);
        let v1 = model.velocity.deriv1(x);
        let value = 3.0 / 16.0 * p.d1 * p.d1 / (m * m * v * v)
            - 0.25 * (p.d2 / m + (v1 / v) * (p.d1 / m))
            + p.u * p.u;
        singular.push(!value.is_finite());
        values.push(value);
    }
    Ok(PotentialField {
        grid: grid.grid,
        q: grid.q.clone(),
        x: grid.x.clone(),
        values,
        mode: PotentialMode::Approximate,
        singular,
    })
}

/// The constant potential `A^2` of the constant-`u` class.
pub fn constant_u_potential(a: f64, grid: &MappedGrid) -> PotentialField {
    PotentialField {
        grid: grid.grid,
        q: grid.q.clone(),
        x: grid.x.clone(),
        values: vec![a * a; grid.len()],
        mode: PotentialMode::ConstantU(a),
        singular: vec![false; grid.len()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyNode {
    pub q: f64,
    pub x: f64,
    pub computed: f64,
    pub claimed: f64,
    pub residual: f64,
}

/// Node-by-node comparison of the approximate potential with a closed form.
#[derive(Debug, Clone)]
pub struct DiscrepancyReport {
    pub max_abs: f64,
    pub max_rel: f64,
    pub nodes: Vec<DiscrepancyNode>,
}

impl DiscrepancyReport {
    /// Largest relative deviation over nodes satisfying `filter(q)`; NaN if none do.
    pub fn max_rel_where(&self, filter: impl Fn(f64) -> bool) -> f64 {
        self.rel_where(filter).reduce(f64::max).unwrap_or(f64::NAN)
    }

    /// Smallest relative deviation over nodes satisfying `filter(q)`; NaN if none do.
    pub fn min_rel_where(&self, filter: impl Fn(f64) -> bool) -> f64 {
        self.rel_where(filter).reduce(f64::min).unwrap_or(f64::NAN)
    }

    fn rel_where<'a>(
        &'a self,
        filter: impl Fn(f64) -> bool + 'a,
    ) -> impl Iterator<Item = f64> + 'a {
        self.nodes
            .iter()
            .filter(move |n| filter(n.q))
            .map(|n| rel(n.residual, n.claimed))
    }
}

fn rel(residual: f64, claimed: f64) -> f64 {
    residual.abs() / claimed.abs().max(1.0)
}

/// Compares `approx_potential` against `claimed(x, q)` at every regular node.
///
/// Relative deviations are measured against `max(1, |claimed|)`.
pub fn potential_discrepancy_report(
    model: &ModelSpec,
    claimed: &dyn Fn(f64, f64) -> f64,
    grid: &MappedGrid,
) -> Result<DiscrepancyReport> {
    let field = approx_potential(model, grid)?;
    let mut nodes = Vec::with_capacity(field.values.len());
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for i in 0..field.values.len() {
        if field.singular[i] {
            continue;
        }
        let (q, x, computed) = (field.q[i], field.x[i], field.values[i]);
        let c = claimed(x, q);
        let residual = computed - c;
        max_abs = max_abs.max(residual.abs());
        max_rel = max_rel.max(rel(residual, c));
        nodes.push(DiscrepancyNode {
            q,
            x,
            computed,
            claimed: c,
            residual,
        });
    }
    Ok(DiscrepancyReport {
        max_abs,
        max_rel,
        nodes,
    })
}
