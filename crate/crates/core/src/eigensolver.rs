//! Dirichlet eigenproblem `-phi'' + V(q) phi = lambda phi` on a q-grid.
//!
//! Second-order finite differences give a symmetric tridiagonal operator;
//! eigenvalues come from Sturm bisection and are Richardson-extrapolated
//! against the nested coarse grid.

use crate::error::{Error, Result};
use crate::grid::{GridKind, MappedGrid};
use crate::potential::{exact_potential, PotentialField, PotentialMode};
use crate::profiles::ModelSpec;
use crate::tridiag::SymTridiagonal;

/// Minimum coarse-grid nodes per requested state.
const NODES_PER_STATE: usize = 8;

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Richardson-extrapolated eigenvalue (`E^2` minus the mode offset).
    pub lambda: f64,
    /// Node positions including both walls.
    pub q: Vec<f64>,
    /// Eigenfunction on `q`, zero at the walls, with `sum phi^2 h = 1`.
    pub phi: Vec<f64>,
    pub nodes: usize,
    pub grid_h: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub pairs: Vec<EigenPair>,
    /// `(E+, E-)` per pair, `None` when `lambda + offset < 0`.
    pub energies: Vec<Option<(f64, f64)>>,
    pub mode: PotentialMode,
    pub offset: f64,
    pub iterations: Vec<usize>,
}

/// `E± = ±sqrt(lambda + offset)`.
pub fn energies_from_lambda(lambda: f64, offset: f64) -> Result<(f64, f64)> {
    let radicand = lambda + offset;
    if radicand < 0.0 || !radicand.is_finite() {
        return Err(Error::ImaginaryEnergy { radicand });
    }
    let e = radicand.sqrt();
    Ok((e, -e))
}

fn operator(field: &PotentialField) -> SymTridiagonal {
    let h = field.grid.h();
    let inv_h2 = 1.0 / (h * h);
    let offset = field.offset();
    let n = field.values.len();
    let mut d: Vec<f64> = field
        .values
        .iter()
        .map(|v| 2.0 * inv_h2 + v - offset)
        .collect();
    if field.grid.kind() == GridKind::CellCentered && n > 0 {
        // antisymmetric ghost node across each wall
        d[0] += inv_h2;
        d[n - 1] += inv_h2;
    }
    SymTridiagonal::new(d, vec![-inv_h2; n.saturating_sub(1)])
}

fn check_field(field: &PotentialField) -> Result<()> {
    if let Some(i) = field.singular.iter().position(|&s| s) {
        return Err(Error::SingularNode { q: field.q[i] });
    }
    if let Some(i) = field.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularNode { q: field.q[i] });
    }
    Ok(())
}

/// Unextrapolated finite-difference eigenvalues of the lowest `k` states.
pub fn raw_eigenvalues(field: &PotentialField, k: usize) -> Result<Vec<f64>> {
    check_field(field)?;
    if k > field.values.len() {
        return Err(Error::InsufficientResolution {
            requested: k,
            nodes: field.values.len(),
        });
    }
    let t = operator(field);
    Ok((0..k).map(|i| t.eigenvalue(i)).collect())
}

fn count_nodes(phi: &[f64]) -> usize {
    let max = phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = 1e-10 * max;
    let mut last = 0.0_f64;
    let mut changes = 0;
    for &v in phi {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            changes += 1;
        }
        last = v;
    }
    changes
}

/// Lowest `k_states` eigenpairs of a fixed potential.
pub fn solve_fixed(field: &PotentialField, k_states: usize) -> Result<SpectrumResult> {
    if k_states == 0 {
        return Err(Error::Config("k_states must be at least 1".into()));
    }
    check_field(field)?;
    let coarse = field.coarse();
    if coarse.values.len() < NODES_PER_STATE * k_states {
        return Err(Error::InsufficientResolution {
            requested: k_states,
            nodes: field.values.len(),
        });
    }
    let fine_op = operator(field);
    let coarse_op = operator(&coarse);
    let r = field.grid.coarse_ratio() as f64;
    let r2 = r * r;
    let h = field.grid.h();
    let offset = field.offset();

    let mut q = Vec::with_capacity(field.q.len() + 2);
    q.push(field.grid.lo());
    q.extend_from_slice(&field.q);
    q.push(field.grid.hi());

    let mut pairs = Vec::with_capacity(k_states);
    let mut energies = Vec::with_capacity(k_states);
    for k in 0..k_states {
        let fine = fine_op.eigenvalue(k);
        let crude = coarse_op.eigenvalue(k);
        let lambda = (r2 * fine - crude) / (r2 - 1.0);
        let error_estimate = (fine - crude).abs() / (r2 - 1.0);
        let mut interior = fine_op.eigenvector(fine);
        let norm = (interior.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
        let max = interior.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let sign = interior
            .iter()
            .find(|v| v.abs() > 1e-8 * max)
            .map_or(1.0, |v| v.signum());
        interior.iter_mut().for_each(|v| *v *= sign / norm);
        let nodes = count_nodes(&interior);
        if nodes != k {
            return Err(Error::SturmViolation { state: k, nodes });
        }
        let mut phi = Vec::with_capacity(interior.len() + 2);
        phi.push(0.0);
        phi.extend(interior);
        phi.push(0.0);
        energies.push(energies_from_lambda(lambda, offset).ok());
        pairs.push(EigenPair {
            lambda,
            q: q.clone(),
            phi,
            nodes,
            grid_h: h,
            error_estimate,
        });
    }
    Ok(SpectrumResult {
        pairs,
        energies,
        mode: field.mode,
        offset,
        iterations: vec![1; k_states],
    })
}

/// Result of the energy self-consistency loop for one state.
#[derive(Debug, Clone)]
pub struct SelfConsistentState {
    pub pair: EigenPair,
    pub energy: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Iterates `E <- sign(E0) sqrt(lambda_k(V_exact(E)))` to a fixed point.
///
/// Switches to 0.5 under-relaxation once successive corrections change sign
/// without shrinking.
pub fn solve_self_consistent(
    model: &ModelSpec,
    grid: &MappedGrid,
    state: usize,
    e_init: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SelfConsistentState> {
    if !(tol > 0.0) {
        return Err(Error::Config(
            "self-consistency tolerance must be positive".into(),
        ));
    }
    let sign = if e_init < 0.0 { -1.0 } else { 1.0 };
    let mut energy = e_init;
    let mut history = vec![e_init];
    let mut relax = 1.0;
    let mut last_step: Option<f64> = None;
    for iteration in 1..=max_iter {
        let field = exact_potential(model, energy, grid)?;
        let spectrum = solve_fixed(&field, state + 1)?;
        let pair = spectrum.pairs[state].clone();
        if pair.lambda < 0.0 {
            return Err(Error::ImaginaryEnergy {
                radicand: pair.lambda,
            });
        }
        let target = sign * pair.lambda.sqrt();
        let step = target - energy;
        if step.abs() <= tol {
            history.push(target);
            return Ok(SelfConsistentState {
                pair,
                energy: target,
                iterations: iteration,
                history,
            });
        }
        if let Some(prev) = last_step {
            if prev.signum() != step.signum() && step.abs() > 0.5 * prev.abs() {
                relax = 0.5;
            }
        }
        last_step = Some(step);
        energy += relax * step;
        history.push(energy);
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        history,
    })
}
