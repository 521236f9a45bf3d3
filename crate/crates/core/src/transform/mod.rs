//! The δ-normalized energy transform `f̂(E) = ∫ f(r) σ(r;E) dr`, its inverse,
//! the ρ-normalized variant, Parseval and matrix-element identities,
//! dispersion and spectral time evolution.
//!
//! Energy integrals run over composite Gauss–Legendre panels in the
//! wavenumber `k = √(κE)`, which removes the `E^{-1/2}` behaviour of `ρ` at
//! threshold. Panels break at `V₀` and skip the excluded bands. Radial
//! integrals run over panels broken at `a`, `b` and at the breakpoints of
//! the integrand. Panel widths follow the phase rule: no panel carries more
//! than `max_panel_phase` radians of oscillation.

mod basis;
mod energy;
mod radial;

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

pub use basis::{Folded, SpectralBasis};
pub use energy::{EnergyFunction, EnergyProfile, EnergyRepr, Normalization, TransformInfo};
pub(crate) use radial::packet_cutoff;
pub use radial::{BumpSeries, ExpPoly, Packet, PacketData, RadialFunction, SampleGrid, Sampled};

use crate::error::{Error, Result};
use crate::model::BarrierConfig;
use crate::quadrature::{panels, Grid, GridVariable, QuadratureSpec};
use crate::spectral::DeltaEigenfunction;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Ratio of successive panel edges near `k = 0`.
const GRADING: f64 = 3.0;
/// Panel-local positions where interpolation is checked against direct
/// evaluation.
const PROBES: [f64; 3] = [-0.995, 0.4, 0.995];
/// Bisection rounds of the interpolation check.
const MAX_SPLITS: usize = 12;

/// Largest number of energy nodes a single grid may have.
pub const MAX_ENERGY_NODES: usize = 400_000;
/// Largest number of `σ(r;E)` evaluations a single synthesis may need.
pub const MAX_WORK: f64 = 4e9;

fn k_of(cfg: &BarrierConfig, e: f64) -> f64 {
    (cfg.kappa * e).max(0.0).sqrt()
}

/// Lowest admissible wavenumber and the excluded band around `V₀` in `k`.
fn band_layout(cfg: &BarrierConfig) -> (f64, Option<(f64, f64)>) {
    let eps = cfg.eps_energy;
    if cfg.v0 + eps <= eps {
        (k_of(cfg, eps), None)
    } else if cfg.v0 - eps <= eps {
        (k_of(cfg, cfg.v0 + eps), None)
    } else {
        (k_of(cfg, eps), Some((k_of(cfg, cfg.v0 - eps), k_of(cfg, cfg.v0 + eps))))
    }
}

/// Panels in `k` over `[k_lo, k_hi]` with the excluded bands removed.
pub fn energy_panels(cfg: &BarrierConfig, k_lo: f64, k_hi: f64, width: f64, extra_breaks: &[f64]) -> Vec<(f64, f64)> {
    let (floor, band) = band_layout(cfg);
    let lo = k_lo.max(floor);
    let mut breaks = extra_breaks.to_vec();
    // Uf ~ √k at threshold: grade geometrically towards k = 0.
    let mut g = width.min(k_hi) / GRADING;
    while g > lo {
        breaks.push(g);
        g /= GRADING;
    }
    if let Some((b0, b1)) = band {
        breaks.push(b0);
        breaks.push(b1);
    }
    let layout = panels(lo, k_hi, &breaks, width);
    match band {
        Some((b0, b1)) => {
            let slack = 1e-14 * (1.0 + b1);
            layout
                .into_iter()
                .filter(|p| !(p.0 >= b0 - slack && p.1 <= b1 + slack))
                .collect()
        }
        None => layout,
    }
}

fn check_budget(nodes: usize) -> Result<()> {
    if nodes > MAX_ENERGY_NODES {
        return Err(Error::QuadratureFailure {
            estimate: nodes as f64,
            tolerance: MAX_ENERGY_NODES as f64,
        });
    }
    Ok(())
}

/// Radial extent used for integrals of `f` (with weight `(1+r)^n`).
fn radial_extent(f: &RadialFunction, quad: &QuadratureSpec, weight_power: u32) -> (f64, f64) {
    truncated_extent(f, quad, quad.tol, weight_power)
}

/// Extent beyond which `(1+r)^n |f|` stays below `tail` times its peak.
fn truncated_extent(f: &RadialFunction, quad: &QuadratureSpec, tail: f64, weight_power: u32) -> (f64, f64) {
    let (lo, hi) = f.support(tail, weight_power);
    match quad.r_cutoff {
        Some(rc) => (lo.min(rc), rc),
        None => (lo, hi),
    }
}

/// Extent and resolution of one term of a combination.
struct Leaf {
    lo: f64,
    hi: f64,
    k: Option<f64>,
    feature_width: f64,
}

fn leaves(f: &RadialFunction, quad: &QuadratureSpec, tail: f64, weight_power: u32, out: &mut Vec<Leaf>) {
    match f {
        RadialFunction::Zero => {}
        RadialFunction::Combination(terms) => {
            for (_, g) in terms {
                leaves(g, quad, tail, weight_power, out);
            }
        }
        _ => {
            let (lo, hi) = truncated_extent(f, quad, tail, weight_power);
            out.push(Leaf {
                lo,
                hi,
                k: f.k_content(quad.tol, 0),
                feature_width: f.feature_width(),
            });
        }
    }
}

/// Wavenumber bound of `Uf` weighted by `E^moment`; falls back to the
/// feature width when the function gives no hint.
fn k_bound(cfg: &BarrierConfig, f: &RadialFunction, quad: &QuadratureSpec, moment: u32) -> f64 {
    if let Some(e) = quad.e_cutoff {
        return k_of(cfg, e);
    }
    match f.k_content(quad.tol, moment) {
        Some(k) => k,
        None => 64.0 / f.feature_width().min(1.0),
    }
}

fn radial_grid(cfg: &BarrierConfig, lo: f64, hi: f64, breaks: &[f64], width: f64, quad: &QuadratureSpec) -> Grid {
    let mut all = Vec::from([cfg.a, cfg.b]);
    all.extend_from_slice(breaks);
    Grid::new(GridVariable::Identity, panels(lo, hi, &all, width), &quad.rule())
}

/// Quadrature nodes and values of `f` over its radial extent.
struct RadialNodes {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Complex64>,
    upper: f64,
}

fn radial_nodes(
    cfg: &BarrierConfig,
    f: &RadialFunction,
    k_max: f64,
    quad: &QuadratureSpec,
    refine: f64,
) -> RadialNodes {
    if let RadialFunction::Sampled(s) = f {
        return RadialNodes {
            nodes: s.nodes().to_vec(),
            weights: s.weights(),
            values: s.values.to_vec(),
            upper: s.upper(),
        };
    }
    let (lo, hi) = radial_extent(f, quad, 0);
    let width = (quad.max_panel_phase / k_max.max(1e-3)).min(f.feature_width()).min(1.0) / refine;
    let mut breaks = Vec::new();
    f.breaks(&mut breaks);
    let grid = radial_grid(cfg, lo, hi, &breaks, width, quad);
    let values = f.eval_many(&grid.nodes);
    RadialNodes {
        nodes: grid.nodes,
        weights: grid.weights,
        values,
        upper: hi,
    }
}

/// `f̂(E_j)` at arbitrary admissible energies, with the radial refinement
/// error estimate and the largest radius used.
fn transform_nodes(
    cfg: &BarrierConfig,
    f: &RadialFunction,
    energies: &[f64],
    k_max: f64,
    quad: &QuadratureSpec,
) -> Result<(Vec<Complex64>, f64, f64)> {
    match f {
        RadialFunction::Zero => Ok((alloc::vec![ZERO; energies.len()], 0.0, 0.0)),
        RadialFunction::ExpPoly(p) => {
            let rule = quad.rule();
            let mut out = Vec::with_capacity(energies.len());
            for &e in energies {
                let sigma = DeltaEigenfunction::new(cfg, e)?;
                out.push(p.transform_at(&sigma, &rule));
            }
            Ok((out, 0.0, f64::INFINITY))
        }
        RadialFunction::Combination(terms) => {
            let mut out = alloc::vec![ZERO; energies.len()];
            let (mut err, mut upper) = (0.0f64, 0.0f64);
            for (c, g) in terms.iter().filter(|(_, g)| !g.is_zero()) {
                let (v, e, u) = transform_nodes(cfg, g, energies, k_max, quad)?;
                for (o, x) in out.iter_mut().zip(v) {
                    *o += c * x;
                }
                err = err.max(e);
                upper = upper.max(u);
            }
            Ok((out, err, upper))
        }
        _ => {
            let basis = SpectralBasis::new(cfg, energies)?.blocked(quad.nodes_per_panel);
            let rn = radial_nodes(cfg, f, k_max, quad, 1.0);
            let weighted: Vec<Complex64> = rn.values.iter().zip(&rn.weights).map(|(v, w)| v * *w).collect();
            let values = basis.analyze(&rn.nodes, &weighted);
            let err = if matches!(f, RadialFunction::Sampled(_)) {
                // Fixed samples: there is no finer rule to compare with.
                0.0
            } else {
                refinement_error(cfg, f, energies, &values, k_max, quad)?
            };
            Ok((values, err, rn.upper))
        }
    }
}

/// Relative change of `f̂` at up to 12 probe energies when the radial panels
/// are halved.
fn refinement_error(
    cfg: &BarrierConfig,
    f: &RadialFunction,
    energies: &[f64],
    values: &[Complex64],
    k_max: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let n = energies.len();
    if n == 0 {
        return Ok(0.0);
    }
    let picks: Vec<usize> = if n <= 12 {
        (0..n).collect()
    } else {
        (0..12).map(|i| i * (n - 1) / 11).collect()
    };
    let probe: Vec<f64> = picks.iter().map(|&i| energies[i]).collect();
    let basis = SpectralBasis::new(cfg, &probe)?;
    let rn = radial_nodes(cfg, f, k_max, quad, 2.0);
    let weighted: Vec<Complex64> = rn.values.iter().zip(&rn.weights).map(|(v, w)| v * *w).collect();
    let fine = basis.analyze(&rn.nodes, &weighted);
    // |f̂(E)| ≤ sup|σ(·;E)| ∫|f| dr, so values near a zero of f̂ are judged
    // against that bound rather than against themselves.
    let l1: f64 = weighted.iter().map(|v| v.norm()).sum();
    let mut sup: f64 = 0.0;
    for &e in &probe {
        sup = sup.max(DeltaEigenfunction::new(cfg, e)?.sup_norm());
    }
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-3 * sup * l1);
    let diff = picks
        .iter()
        .zip(&fine)
        .map(|(&i, v)| (values[i] - v).norm())
        .fold(0.0, f64::max);
    let est = if scale > 0.0 { diff / scale } else { diff };
    if est > quad.tol {
        return Err(Error::QuadratureFailure {
            estimate: est,
            tolerance: quad.tol,
        });
    }
    Ok(est)
}

/// Energy grid suitable for every function in `fs` weighted by `E^moment`.
pub fn energy_grid(
    cfg: &BarrierConfig,
    fs: &[&RadialFunction],
    quad: &QuadratureSpec,
    moment: u32,
) -> Result<Arc<Grid>> {
    energy_grid_with(cfg, fs, quad, moment, 0.0, None, &[])
}

/// `extra_radius` widens the oscillation budget, e.g. for the drift of a
/// time-evolved packet.
/// Energy grid for `conj(Uφ)·Uψ`, restricted to where both transforms can
/// be nonzero.
fn product_grid(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    psi: &RadialFunction,
    quad: &QuadratureSpec,
    moment: u32,
) -> Result<Arc<Grid>> {
    let ceiling = [phi, psi]
        .iter()
        .filter_map(|f| f.k_ceiling())
        .fold(f64::INFINITY, f64::min);
    let floor = [phi, psi].iter().filter_map(|f| f.k_floor()).fold(0.0, f64::max);
    let k_override = (ceiling.is_finite() && quad.e_cutoff.is_none()).then(|| {
        [phi, psi]
            .iter()
            .filter(|f| !f.is_zero())
            .map(|f| k_bound(cfg, f, quad, moment))
            .fold(0.0, f64::max)
            .min(1.1 * ceiling)
    });
    let full = energy_grid_with(cfg, &[phi, psi], quad, moment, 0.0, k_override, &[])?;
    if floor == 0.0 {
        return Ok(full);
    }
    let lo = 0.9 * floor;
    let rule = quad.rule();
    let layout: Vec<(f64, f64)> = full.panels.iter().filter(|p| p.1 > lo).copied().collect();
    Ok(Arc::new(Grid::new(full.variable, layout, &rule)))
}

fn energy_grid_with(
    cfg: &BarrierConfig,
    fs: &[&RadialFunction],
    quad: &QuadratureSpec,
    moment: u32,
    extra_radius: f64,
    k_override: Option<f64>,
    extra_breaks: &[f64],
) -> Result<Arc<Grid>> {
    quad.validate()?;
    let live: Vec<&&RadialFunction> = fs.iter().filter(|f| !f.is_zero()).collect();
    let k_hi = match k_override {
        Some(k) => k,
        None => live.iter().map(|f| k_bound(cfg, f, quad, moment)).fold(0.0, f64::max),
    };
    let k_lo = if live.is_empty() {
        0.0
    } else {
        live.iter()
            .map(|f| f.k_floor().map(|k| 0.9 * k).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    };
    let r_phase = live.iter().map(|f| f.phase_extent(quad.tol)).fold(cfg.b, f64::max)
        + 2.0 * (cfg.b - cfg.a)
        + 1.0
        + extra_radius;
    let width = (quad.max_panel_phase / r_phase).min(1.0);
    let estimate = ((k_hi - k_lo).max(0.0) / width).ceil() as usize * quad.nodes_per_panel;
    check_budget(estimate)?;
    let layout = energy_panels(cfg, k_lo, k_hi, width, extra_breaks);
    Ok(Arc::new(Grid::new(
        GridVariable::Wavenumber { kappa: cfg.kappa },
        layout,
        &quad.rule(),
    )))
}

fn info_for(
    cfg: &BarrierConfig,
    grid: &Grid,
    values: &[Complex64],
    error_estimate: f64,
    r_cutoff: f64,
) -> TransformInfo {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let order = grid.order;
    let last = values.iter().rev().take(order).map(|v| v.norm()).fold(0.0, f64::max);
    let excluded = if band_layout(cfg).1.is_some() { 3.0 } else { 1.0 } * cfg.eps_energy;
    TransformInfo {
        r_cutoff,
        e_cutoff: grid.upper(),
        panels: grid.panels.len(),
        nodes: grid.len(),
        error_estimate,
        tail_estimate: if peak > 0.0 { last / peak } else { 0.0 },
        band_error: excluded * peak * peak,
    }
}

/// `f̂` on the nodes of a given energy grid.
pub fn to_energy_on(
    cfg: &BarrierConfig,
    f: &RadialFunction,
    grid: &Arc<Grid>,
    quad: &QuadratureSpec,
) -> Result<EnergyFunction> {
    quad.validate()?;
    let k_max = grid.panels.last().map(|p| p.1).unwrap_or(0.0);
    let (values, err, upper) = transform_nodes(cfg, f, &grid.nodes, k_max, quad)?;
    let info = info_for(cfg, grid, &values, err, upper);
    Ok(EnergyFunction::on_grid(
        Normalization::Delta,
        grid.clone(),
        values,
        info,
    ))
}

/// `f̂(E) = ∫₀^∞ f(r) σ(r;E) dr` on an adaptive energy grid.
pub fn to_energy(cfg: &BarrierConfig, f: &RadialFunction, quad: &QuadratureSpec) -> Result<EnergyFunction> {
    quad.validate()?;
    if f.is_zero() {
        return Ok(EnergyFunction::zero(Normalization::Delta));
    }
    let grid = energy_grid(cfg, &[f], quad, 0)?;
    let (grid, values, err, upper) = refine_for_interpolation(cfg, f, &grid, quad)?;
    let info = info_for(cfg, &grid, &values, err, upper);
    Ok(EnergyFunction::on_grid(Normalization::Delta, grid, values, info))
}

/// Bisects panels until barycentric interpolation between the nodes agrees
/// with direct evaluation at the probe points to `tol/10` of the peak.
/// Returns the grid, node values, error estimate and largest radius used.
fn refine_for_interpolation(
    cfg: &BarrierConfig,
    f: &RadialFunction,
    grid: &Grid,
    quad: &QuadratureSpec,
) -> Result<(Arc<Grid>, Vec<Complex64>, f64, f64)> {
    let rule = quad.rule();
    let order = rule.len();
    let variable = grid.variable;
    let k_max = grid.panels.last().map(|p| p.1).unwrap_or(0.0);
    let (first, mut err, mut upper) = transform_nodes(cfg, f, &grid.nodes, k_max, quad)?;
    let mut panels: Vec<((f64, f64), Vec<Complex64>, bool)> = grid
        .panels
        .iter()
        .zip(first.chunks(order))
        .map(|(&p, v)| (p, v.to_vec(), false))
        .collect();
    let mut peak = first.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for round in 0..=MAX_SPLITS {
        let pending: Vec<usize> = (0..panels.len()).filter(|&i| !panels[i].2).collect();
        if pending.is_empty() {
            break;
        }
        let probe_u: Vec<f64> = pending
            .iter()
            .flat_map(|&i| {
                let (lo, hi) = panels[i].0;
                PROBES.iter().map(move |t| 0.5 * (lo + hi) + 0.5 * (hi - lo) * t)
            })
            .collect();
        let probe_e: Vec<f64> = probe_u.iter().map(|&u| variable.to_physical(u)).collect();
        let (direct, e, u) = transform_nodes(cfg, f, &probe_e, k_max, quad)?;
        err = err.max(e);
        upper = upper.max(u);
        let target = 0.1 * quad.tol * peak;
        let mut split = Vec::new();
        for (j, &i) in pending.iter().enumerate() {
            let (panel, ref vals, _) = panels[i];
            let miss = (0..PROBES.len())
                .map(|m| {
                    let at = j * PROBES.len() + m;
                    (rule.interpolate(panel, vals, probe_u[at]) - direct[at]).norm()
                })
                .fold(0.0, f64::max);
            if miss <= target || round == MAX_SPLITS {
                panels[i].2 = true;
                worst = worst.max(miss);
            } else {
                split.push(i);
            }
        }
        if split.is_empty() {
            continue;
        }
        let halves: Vec<(f64, f64)> = split
            .iter()
            .flat_map(|&i| {
                let (lo, hi) = panels[i].0;
                let mid = 0.5 * (lo + hi);
                [(lo, mid), (mid, hi)]
            })
            .collect();
        check_budget((panels.len() + split.len()) * order)?;
        let sub = Grid::new(variable, halves.clone(), &rule);
        let (vals, e, u) = transform_nodes(cfg, f, &sub.nodes, k_max, quad)?;
        err = err.max(e);
        upper = upper.max(u);
        peak = vals.iter().map(|v| v.norm()).fold(peak, f64::max);
        let mut fresh = halves.into_iter().zip(vals.chunks(order));
        let mut next = Vec::with_capacity(panels.len() + split.len());
        let mut s = split.iter().peekable();
        for (i, entry) in panels.into_iter().enumerate() {
            if s.peek() == Some(&&i) {
                s.next();
                for _ in 0..2 {
                    let (p, v) = fresh.next().unwrap();
                    next.push((p, v.to_vec(), false));
                }
            } else {
                next.push(entry);
            }
        }
        panels = next;
    }
    let rel = if peak > 0.0 { worst / peak } else { worst };
    if rel > quad.tol {
        return Err(Error::QuadratureFailure {
            estimate: rel,
            tolerance: quad.tol,
        });
    }
    let layout: Vec<(f64, f64)> = panels.iter().map(|p| p.0).collect();
    let values: Vec<Complex64> = panels.into_iter().flat_map(|p| p.1).collect();
    let grid = Arc::new(Grid::new(variable, layout, &rule));
    Ok((grid, values, err.max(rel), upper))
}

/// `f̂` at the given energies by direct radial quadrature.
pub fn to_energy_at(
    cfg: &BarrierConfig,
    f: &RadialFunction,
    energies: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<Complex64>> {
    quad.validate()?;
    for &e in energies {
        if !(e > 0.0) {
            return Err(Error::Domain {
                what: "spectral energy",
                value: e,
            });
        }
    }
    let k_max = energies.iter().map(|&e| k_of(cfg, e)).fold(0.0, f64::max);
    let k_max = match f.k_content(quad.tol, 0) {
        Some(k) => k_max.max(k.min(4.0 * k_max)),
        None => k_max,
    };
    Ok(transform_nodes(cfg, f, energies, k_max, quad)?.0)
}

/// `f̃ = f̂ / √ρ`, the ρ-normalized transform.
pub fn to_energy_rho(cfg: &BarrierConfig, f: &RadialFunction, quad: &QuadratureSpec) -> Result<EnergyFunction> {
    let delta = to_energy(cfg, f, quad)?;
    let EnergyRepr::Grid { grid, values } = delta.repr else {
        return Ok(EnergyFunction::zero(Normalization::Rho));
    };
    let basis = SpectralBasis::new(cfg, &grid.nodes)?.blocked(grid.order);
    let values = values.iter().zip(&basis.sqrt_rho).map(|(v, s)| v / *s).collect();
    Ok(EnergyFunction::on_grid(Normalization::Rho, grid, values, delta.info))
}

/// Edge width of a profile in wavenumber.
fn profile_k_width(cfg: &BarrierConfig, p: &EnergyProfile) -> f64 {
    let k_end = k_of(cfg, p.support().1);
    cfg.kappa * p.bump.halfwidth / (2.0 * k_end)
}

/// Radius beyond which the synthesis of `p` decays below `tol`.
pub fn profile_cutoff(cfg: &BarrierConfig, p: &EnergyProfile, tol: f64, weight_power: u32) -> f64 {
    packet_cutoff(profile_k_width(cfg, p), cfg.b, tol, weight_power)
}

/// Grid in `k` over the support of `p`, resolving radii up to `r_phase`.
fn profile_grid(cfg: &BarrierConfig, p: &EnergyProfile, r_phase: f64, quad: &QuadratureSpec) -> Result<Arc<Grid>> {
    let (lo, hi) = p.support();
    let (k_lo, k_hi) = (k_of(cfg, lo), k_of(cfg, hi));
    let width = quad.max_panel_phase / (r_phase + 2.0 * (cfg.b - cfg.a) + cfg.b + 1.0);
    check_budget(((k_hi - k_lo) / width).ceil() as usize * quad.nodes_per_panel)?;
    let layout = energy_panels(cfg, k_lo, k_hi, width, &[]);
    Ok(Arc::new(Grid::new(
        GridVariable::Wavenumber { kappa: cfg.kappa },
        layout,
        &quad.rule(),
    )))
}

/// The packet `φ = ∫ g σ dE` of a profile, resolved for radii where it
/// exceeds `quad.tol` even with the weight `(1+r)²`.
pub fn make_packet(cfg: &BarrierConfig, profile: EnergyProfile, quad: &QuadratureSpec) -> Result<RadialFunction> {
    quad.validate()?;
    let r_resolved = profile_cutoff(cfg, &profile, quad.tol, 2);
    let grid = profile_grid(cfg, &profile, r_resolved, quad)?;
    let basis = SpectralBasis::new(cfg, &grid.nodes)?.blocked(grid.order);
    let (lo, hi) = profile.support();
    let data = PacketData {
        basis,
        weights: grid.weights.clone(),
        r_resolved,
        k_range: (k_of(cfg, lo), k_of(cfg, hi)),
        k_width: profile_k_width(cfg, &profile),
    };
    Ok(RadialFunction::Packet(Packet::new(profile, Arc::new(data))))
}

/// Energy nodes, quadrature-weighted `f̂` coefficients and the wavenumber
/// bound of an energy function.
fn synthesis_coefficients(
    cfg: &BarrierConfig,
    fhat: &EnergyFunction,
    r_phase: f64,
    quad: &QuadratureSpec,
) -> Result<Option<(SpectralBasis, Vec<Complex64>, f64)>> {
    match &fhat.repr {
        EnergyRepr::Zero => Ok(None),
        EnergyRepr::Profile(p) => {
            let grid = profile_grid(cfg, p, r_phase, quad)?;
            let basis = SpectralBasis::new(cfg, &grid.nodes)?.blocked(grid.order);
            let c = grid
                .nodes
                .iter()
                .zip(&grid.weights)
                .map(|(&e, &w)| p.eval(e) * w)
                .collect();
            let k = grid.panels.last().map(|p| p.1).unwrap_or(0.0);
            Ok(Some((basis, c, k)))
        }
        EnergyRepr::Grid { grid, values } => {
            let basis = SpectralBasis::new(cfg, &grid.nodes)?.blocked(grid.order);
            let c = values
                .iter()
                .zip(&grid.weights)
                .zip(&basis.sqrt_rho)
                .map(|((v, &w), &s)| match fhat.normalization {
                    Normalization::Delta => v * w,
                    Normalization::Rho => v * (w * s),
                })
                .collect();
            let k = grid.panels.last().map(|p| p.1).unwrap_or(0.0);
            Ok(Some((basis, c, k)))
        }
    }
}

fn synthesis_radius(cfg: &BarrierConfig, fhat: &EnergyFunction, quad: &QuadratureSpec) -> f64 {
    if let Some(rc) = quad.r_cutoff {
        return rc;
    }
    match &fhat.repr {
        EnergyRepr::Profile(p) => profile_cutoff(cfg, p, quad.tol, 0),
        EnergyRepr::Grid { grid, .. } => {
            if fhat.info.r_cutoff > 0.0 && fhat.info.r_cutoff.is_finite() {
                fhat.info.r_cutoff
            } else {
                // The largest radius the grid resolves.
                let widest = grid.panels.iter().map(|p| p.1 - p.0).fold(0.0, f64::max);
                quad.max_panel_phase / widest.max(1e-12)
            }
        }
        EnergyRepr::Zero => 0.0,
    }
}

/// `f(r) = ∫₀^∞ f̂(E) σ(r;E) dE` sampled on a radial grid.
pub fn to_position(cfg: &BarrierConfig, fhat: &EnergyFunction, quad: &QuadratureSpec) -> Result<RadialFunction> {
    quad.validate()?;
    let radius = synthesis_radius(cfg, fhat, quad);
    let Some((basis, coef, k_max)) = synthesis_coefficients(cfg, fhat, radius, quad)? else {
        return Ok(RadialFunction::Zero);
    };
    let width = (quad.max_panel_phase / k_max.max(1e-3)).min(1.0);
    let grid = radial_grid(cfg, 0.0, radius, &[], width, quad);
    check_work(grid.len(), basis.len())?;
    let values = basis.synthesize(&coef, &grid.nodes);
    Ok(RadialFunction::Sampled(Sampled::on_grid(
        Arc::new(grid),
        values,
        Some(k_max),
    )))
}

fn check_work(r_nodes: usize, e_nodes: usize) -> Result<()> {
    let work = r_nodes as f64 * e_nodes as f64;
    if work > MAX_WORK {
        return Err(Error::QuadratureFailure {
            estimate: work,
            tolerance: MAX_WORK,
        });
    }
    Ok(())
}

/// `∫ conj(φ) ψ dr` by radial quadrature.
pub fn inner_product(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    psi: &RadialFunction,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    weighted_inner_product(cfg, phi, psi, 0, quad)
}

/// `∫ (1+r)^{2n} conj(φ) ψ dr`.
pub fn weighted_inner_product(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    psi: &RadialFunction,
    weight_power: u32,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    quad.validate()?;
    if phi.is_zero() || psi.is_zero() {
        return Ok(ZERO);
    }
    let tail = quad.tol;
    let (l1, h1) = truncated_extent(phi, quad, tail, weight_power);
    let (l2, h2) = truncated_extent(psi, quad, tail, weight_power);
    let (lo, hi) = (l1.max(l2), h1.min(h2));
    if hi <= lo {
        return Ok(ZERO);
    }
    let mut parts = Vec::new();
    leaves(phi, quad, tail, weight_power, &mut parts);
    leaves(psi, quad, tail, weight_power, &mut parts);
    let mut breaks = Vec::from([cfg.a, cfg.b]);
    phi.breaks(&mut breaks);
    psi.breaks(&mut breaks);
    let mut cuts = Vec::from([lo, hi]);
    for p in &parts {
        cuts.push(p.lo.clamp(lo, hi));
        cuts.push(p.hi.clamp(lo, hi));
    }
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut layout = Vec::new();
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let live = || parts.iter().filter(|p| p.lo < s1 && p.hi > s0);
        let k = live().filter_map(|p| p.k).fold(0.0, f64::max);
        let width = (quad.max_panel_phase / k.max(1e-3))
            .min(live().map(|p| p.feature_width).fold(f64::INFINITY, f64::min))
            .min(1.0);
        layout.extend(panels(s0, s1, &breaks, width));
    }
    let grid = Grid::new(GridVariable::Identity, layout, &quad.rule());
    let a = phi.eval_many(&grid.nodes);
    let b = if core::ptr::eq(phi, psi) {
        a.clone()
    } else {
        psi.eval_many(&grid.nodes)
    };
    let mut acc = ZERO;
    for ((x, y), (&r, &w)) in a.iter().zip(&b).zip(grid.nodes.iter().zip(&grid.weights)) {
        acc += x.conj() * y * (w * (1.0 + r).powi(2 * weight_power as i32));
    }
    Ok(acc)
}

pub fn l2_norm(cfg: &BarrierConfig, f: &RadialFunction, quad: &QuadratureSpec) -> Result<f64> {
    Ok(inner_product(cfg, f, f, quad)?.re.max(0.0).sqrt())
}

fn aitken(s1: Complex64, s2: Complex64, s3: Complex64, floor: f64) -> Complex64 {
    let d1 = s2 - s1;
    let d2 = s3 - s2;
    let den = d2 - d1;
    if d2.norm() <= floor || den.norm() == 0.0 {
        return s3;
    }
    s3 - d2 * d2 / den
}

/// `∫ Eⁿ conj(φ̂) ψ̂ dE` with its bookkeeping.
pub fn moment_integral(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    psi: &RadialFunction,
    n: u32,
    quad: &QuadratureSpec,
) -> Result<(Complex64, TransformInfo)> {
    quad.validate()?;
    if phi.is_zero() || psi.is_zero() {
        return Ok((ZERO, TransformInfo::default()));
    }
    let known = quad.e_cutoff.is_none() && phi.k_content(quad.tol, n).is_some() && psi.k_content(quad.tol, n).is_some();
    let same = phi == psi;
    let transforms = |grid: &Arc<Grid>| -> Result<(EnergyFunction, EnergyFunction)> {
        let f = to_energy_on(cfg, phi, grid, quad)?;
        let g = if same {
            f.clone()
        } else {
            to_energy_on(cfg, psi, grid, quad)?
        };
        Ok((f, g))
    };
    let integrand = |grid: &Grid, f: &EnergyFunction, g: &EnergyFunction| -> Vec<Complex64> {
        let (_, fv) = f.grid().unwrap();
        let (_, gv) = g.grid().unwrap();
        grid.nodes
            .iter()
            .zip(&grid.weights)
            .zip(fv.iter().zip(gv))
            .map(|((&e, &w), (x, y))| x.conj() * y * (w * e.powi(n as i32)))
            .collect()
    };
    if known {
        let grid = product_grid(cfg, phi, psi, quad, n)?;
        let (f, g) = transforms(&grid)?;
        let total = integrand(&grid, &f, &g).iter().fold(ZERO, |a, b| a + b);
        let mut info = f.info;
        info.error_estimate = info.error_estimate.max(g.info.error_estimate);
        info.tail_estimate = info.tail_estimate.max(g.info.tail_estimate);
        return Ok((total, info));
    }
    // Power-law tail: extrapolate partial sums at K/8, K/4, K/2, K.
    let fixed = quad.e_cutoff.map(|e| k_of(cfg, e));
    let mut k = fixed.unwrap_or(256.0);
    let rounds = if fixed.is_some() { 1 } else { 6 };
    let mut last_err = f64::INFINITY;
    for _ in 0..rounds {
        let cuts = [k / 8.0, k / 4.0, k / 2.0];
        let grid = energy_grid_with(cfg, &[phi, psi], quad, n, 0.0, Some(k), &cuts)?;
        let (f, g) = transforms(&grid)?;
        let vals = integrand(&grid, &f, &g);
        let mut partial = [ZERO; 4];
        for (v, &u) in vals.iter().zip(&grid.params) {
            for (slot, &cut) in partial.iter_mut().zip(cuts.iter().chain([k].iter())) {
                if u <= cut {
                    *slot += v;
                }
            }
        }
        let (fv, gv) = (f.grid().unwrap().1, g.grid().unwrap().1);
        let norm = |v: &[Complex64]| {
            v.iter()
                .zip(&grid.nodes)
                .zip(&grid.weights)
                .map(|((x, &e), &w)| x.norm_sqr() * w * e.powi(n as i32))
                .sum::<f64>()
                .sqrt()
        };
        let scale = (norm(fv) * norm(gv)).max(partial[3].norm());
        let floor = 1e-3 * quad.tol * scale;
        let a1 = aitken(partial[0], partial[1], partial[2], floor);
        let a2 = aitken(partial[1], partial[2], partial[3], floor);
        last_err = (a2 - a1).norm();
        if last_err <= quad.tol * scale {
            let mut info = f.info;
            info.error_estimate = info.error_estimate.max(g.info.error_estimate);
            info.tail_estimate = (a2 - partial[3]).norm() / scale.max(1e-300);
            return Ok((a2, info));
        }
        last_err /= scale.max(1e-300);
        k *= 2.0;
    }
    Err(Error::CutoffTooSmall {
        tail: last_err,
        tolerance: quad.tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parseval {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// `∫ conj(φ) ψ dr` against `∫ conj(φ̂) ψ̂ dE`.
pub fn parseval(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    psi: &RadialFunction,
    quad: &QuadratureSpec,
) -> Result<Parseval> {
    let lhs = inner_product(cfg, phi, psi, quad)?;
    let (rhs, _) = moment_integral(cfg, phi, psi, 0, quad)?;
    Ok(Parseval {
        lhs,
        rhs,
        residual: (lhs - rhs).norm() / lhs.norm().max(f64::MIN_POSITIVE),
    })
}

/// `(φ, Hⁿψ) = ∫ Eⁿ conj(φ̂) ψ̂ dE`.
pub fn matrix_element_hn(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    psi: &RadialFunction,
    n: u32,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    Ok(moment_integral(cfg, phi, psi, n, quad)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub mean: f64,
    pub disp: f64,
    pub delta: f64,
}

/// Mean, dispersion and uncertainty of `H` in the normalized state `φ`.
pub fn dispersion(cfg: &BarrierConfig, phi: &RadialFunction, quad: &QuadratureSpec) -> Result<Dispersion> {
    let norm = l2_norm(cfg, phi, quad)?;
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NormalizationError { norm });
    }
    let mean = matrix_element_hn(cfg, phi, phi, 1, quad)?.re;
    let second = matrix_element_hn(cfg, phi, phi, 2, quad)?.re;
    let mut disp = second - mean * mean;
    if disp < 0.0 {
        if disp < -1e-10 * second.abs().max(1.0) {
            return Err(Error::NumericalInconsistency {
                what: "negative dispersion",
                value: disp,
            });
        }
        disp = 0.0;
    }
    Ok(Dispersion {
        mean,
        disp,
        delta: disp.sqrt(),
    })
}

/// `φ(r,t) = ∫ e^{-iEt/ħ} φ̂(E) σ(r;E) dE` sampled on a radial grid.
///
/// Packets use their exact profile as `φ̂`; other functions are transformed
/// first. The radial grid extends by the largest group-velocity drift
/// `2k|t|/(κħ)`.
pub fn evolve(cfg: &BarrierConfig, phi: &RadialFunction, t: f64, quad: &QuadratureSpec) -> Result<RadialFunction> {
    quad.validate()?;
    if !t.is_finite() {
        return Err(Error::Domain { what: "time", value: t });
    }
    if phi.is_zero() {
        return Ok(RadialFunction::Zero);
    }
    let drift_per_k = 2.0 * t.abs() / (cfg.kappa * cfg.hbar);
    let (basis, coef, k_max, radius) = match phi {
        RadialFunction::Packet(p) => {
            let radius = quad
                .r_cutoff
                .unwrap_or_else(|| profile_cutoff(cfg, &p.profile, quad.tol, 0));
            let k_max = p.data.k_range.1;
            let grid = profile_grid(cfg, &p.profile, radius + drift_per_k * k_max, quad)?;
            let basis = SpectralBasis::new(cfg, &grid.nodes)?.blocked(grid.order);
            let coef: Vec<Complex64> = grid
                .nodes
                .iter()
                .zip(&grid.weights)
                .map(|(&e, &w)| p.profile.eval(e) * w)
                .collect();
            (basis, coef, k_max, radius)
        }
        _ => {
            let k_max = k_bound(cfg, phi, quad, 0);
            let radius = radial_extent(phi, quad, 0).1;
            let grid = energy_grid_with(cfg, &[phi], quad, 0, drift_per_k * k_max, Some(k_max), &[])?;
            let (values, _, _) = transform_nodes(cfg, phi, &grid.nodes, k_max, quad)?;
            let basis = SpectralBasis::new(cfg, &grid.nodes)?.blocked(grid.order);
            let coef = values.iter().zip(&grid.weights).map(|(v, &w)| v * w).collect();
            (basis, coef, k_max, radius)
        }
    };
    let coef: Vec<Complex64> = coef
        .iter()
        .zip(&basis.energies)
        .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t / cfg.hbar))
        .collect();
    let r_out = radius + drift_per_k * k_max;
    let width = (quad.max_panel_phase / k_max.max(1e-3)).min(1.0);
    let grid = radial_grid(cfg, 0.0, r_out, &[], width, quad);
    check_work(grid.len(), basis.len())?;
    let values = basis.synthesize(&coef, &grid.nodes);
    Ok(RadialFunction::Sampled(Sampled::on_grid(
        Arc::new(grid),
        values,
        Some(k_max),
    )))
}

/// `‖U(hf) - E·Uf‖ / ‖E·Uf‖` over the energy grid.
pub fn diagonalization_residual(cfg: &BarrierConfig, f: &RadialFunction, quad: &QuadratureSpec) -> Result<f64> {
    quad.validate()?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let hf = f.apply_h(cfg)?;
    let grid = energy_grid(cfg, &[f, &hf], quad, 0)?;
    let uf = to_energy_on(cfg, f, &grid, quad)?;
    let uhf = to_energy_on(cfg, &hf, &grid, quad)?;
    let (_, a) = uf.grid().unwrap();
    let (_, b) = uhf.grid().unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for ((&e, &w), (x, y)) in grid.nodes.iter().zip(&grid.weights).zip(a.iter().zip(b)) {
        num += (y - x * e).norm_sqr() * w;
        den += (x * e).norm_sqr() * w;
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationCheck {
    pub direct: Complex64,
    pub synthesized: Complex64,
    pub residual: f64,
}

/// `∫ conj(φ) ψ dr` directly and after resynthesizing both functions from
/// their energy representations, with `σ dE` (δ-normalized) or `χ ρ dE`
/// (ρ-normalized).
pub fn delta_normalization_check(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    psi: &RadialFunction,
    normalization: Normalization,
    quad: &QuadratureSpec,
) -> Result<NormalizationCheck> {
    quad.validate()?;
    let direct = inner_product(cfg, phi, psi, quad)?;
    let grid = energy_grid(cfg, &[phi, psi], quad, 0)?;
    let k_max = grid.panels.last().map(|p| p.1).unwrap_or(0.0);
    let basis = SpectralBasis::new(cfg, &grid.nodes)?.blocked(grid.order);
    let radius = [phi, psi]
        .iter()
        .filter(|f| !f.is_zero())
        .map(|f| radial_extent(f, quad, 0).1)
        .fold(0.0, f64::max);
    let width = (quad.max_panel_phase / k_max.max(1e-3)).min(1.0);
    let rgrid = radial_grid(cfg, 0.0, radius, &[], width, quad);
    check_work(rgrid.len(), basis.len())?;
    let resynth = |f: &RadialFunction| -> Result<Vec<Complex64>> {
        let (vals, _, _) = transform_nodes(cfg, f, &grid.nodes, k_max, quad)?;
        Ok(match normalization {
            Normalization::Delta => {
                let c: Vec<Complex64> = vals.iter().zip(&grid.weights).map(|(v, &w)| v * w).collect();
                basis.synthesize(&c, &rgrid.nodes)
            }
            Normalization::Rho => {
                // f̃ = f̂/√ρ, measure ρ dE, eigenfunction χ.
                let c: Vec<Complex64> = vals
                    .iter()
                    .zip(&grid.weights)
                    .zip(basis.sqrt_rho.iter().zip(&basis.rho))
                    .map(|((v, &w), (&s, &rho))| (v / s) * (w * rho))
                    .collect();
                basis.synthesize_chi(&c, &rgrid.nodes)
            }
        })
    };
    let a = resynth(phi)?;
    let b = if phi == psi { a.clone() } else { resynth(psi)? };
    let synthesized = a
        .iter()
        .zip(&b)
        .zip(&rgrid.weights)
        .fold(ZERO, |acc, ((x, y), &w)| acc + x.conj() * y * w);
    Ok(NormalizationCheck {
        direct,
        synthesized,
        residual: (direct - synthesized).norm() / direct.norm().max(f64::MIN_POSITIVE),
    })
}

/// Largest `|Uf|` on `[E_lo, ∞)` relative to its peak; a cheap decay probe
/// for the energy cutoff.
pub fn energy_tail_ratio(fhat: &EnergyFunction, e_lo: f64) -> f64 {
    let s = fhat.samples();
    let peak = s.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let tail = s
        .iter()
        .filter(|(e, _)| *e >= e_lo)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if peak > 0.0 {
        tail / peak
    } else {
        0.0
    }
}
