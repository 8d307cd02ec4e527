//! Alternating minimization of `E_λ` over positions and masses, plus the
//! hexagonal trial states used as upper-bound constructions.
//!
//! One outer iteration solves the transport problem, moves every point to
//! its cell centroid, re-solves, and then updates the masses. The mass step
//! uses the exact first variation `∂E/∂v_i = c_6 v_i^{-1/2} - ℓ_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::TriangularLattice;
use crate::energy::{self, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::tessellation::{self, power_diagram_periodic, CellPartition, DomainSpec, ScaledDomain, WeightedSites};
use crate::transport::{self, solve_sdot_with, AtomicMeasure, SdotOptions, TransportSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassUpdate {
    /// `v_i ← (v_i (ℓ_i + s)/c_6)²`, damped.
    FixedPoint,
    /// Gradient step preconditioned by the transport Laplacian.
    ProjectedGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointCount {
    Fixed(usize),
    Scan { min: usize, max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizerConfig {
    pub max_outer_iters: usize,
    /// Stop once no point moves farther than this in one centroid step.
    pub position_tol: f64,
    /// Stop once `max_i |g_i - ḡ| / (c_6 v_i^{-1/2})` is below this, where
    /// `g = ∂E/∂v`.
    pub mass_tol: f64,
    pub mass_update: MassUpdate,
    pub seed: u64,
    /// Independent starts; seeds `seed, seed + 1, …`.
    pub restarts: usize,
    pub tol_mass: f64,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 2000,
            position_tol: 1e-6,
            mass_tol: 1e-5,
            mass_update: MassUpdate::ProjectedGradient,
            seed: 0,
            restarts: 1,
            tol_mass: transport::DEFAULT_TOL_MASS,
        }
    }
}

impl MinimizerConfig {
    fn check(&self) -> Result<()> {
        if !(self.position_tol > 0.0 && self.mass_tol > 0.0 && self.tol_mass > 0.0) {
            return Err(Error::InvalidArgument("minimizer tolerances must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// A measure with its solved transport problem.
#[derive(Clone, Debug)]
pub struct OptState {
    pub measure: AtomicMeasure,
    pub solution: TransportSolution,
    pub energy: f64,
}

impl OptState {
    pub fn new(domain: &DomainSpec, measure: AtomicMeasure, tol_mass: f64) -> Result<Self> {
        Self::solve(domain, measure, tol_mass, None)
    }

    /// Solves starting from known weights, as when resuming a saved run.
    pub fn with_weights(domain: &DomainSpec, measure: AtomicMeasure, tol_mass: f64, weights: &[f64]) -> Result<Self> {
        Self::solve(domain, measure, tol_mass, Some(weights))
    }

    fn solve(domain: &DomainSpec, measure: AtomicMeasure, tol_mass: f64, warm: Option<&[f64]>) -> Result<Self> {
        let opts = SdotOptions { initial_weights: warm.map(<[f64]>::to_vec), ..SdotOptions::new(tol_mass) };
        let solution = solve_sdot_with(domain, &measure, &opts)?;
        let energy = surface(measure.masses()) + solution.cost;
        Ok(Self { measure, solution, energy })
    }

    pub fn report(&self, domain: &DomainSpec) -> EnergyReport {
        energy::report_from_solution(domain, &self.measure, &self.solution)
    }

    /// `∂E/∂v` at the current state.
    pub fn mass_gradient(&self) -> Vec<f64> {
        energy::mass_gradient(self.measure.masses(), &self.solution.weights)
    }

    /// `max_i |g_i - ḡ| / (c_6 v_i^{-1/2})`: zero exactly when the weights
    /// equal `c_6 v_i^{-1/2}` up to a common constant.
    pub fn coupling_residual(&self) -> f64 {
        let g = self.mass_gradient();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let c6 = energy::c6();
        g.iter().zip(self.measure.masses()).map(|(gi, v)| (gi - mean).abs() * v.sqrt() / c6).fold(0.0, f64::max)
    }
}

fn surface(masses: &[f64]) -> f64 {
    2.0 * energy::c6() * masses.iter().map(|v| v.sqrt()).sum::<f64>()
}

/// Moves every point to its cell centroid and re-solves. Returns the new
/// state and the largest displacement.
pub fn lloyd_step(domain: &DomainSpec, state: &OptState, tol_mass: f64) -> Result<(OptState, f64)> {
    let part = &state.solution.partition;
    let mut moved = Vec::with_capacity(part.len());
    let mut disp: f64 = 0.0;
    for (cell, &z) in part.cells().iter().zip(state.measure.points()) {
        let c = cell.as_ref().ok_or(Error::EmptyCellUnrecoverable { iteration: 0 })?.centroid();
        disp = disp.max(domain.displacement(z, c).norm());
        moved.push(domain.wrap(c));
    }
    let measure = AtomicMeasure::from_parts_unchecked(moved, state.measure.masses().to_vec());
    let next = OptState::solve(domain, measure, tol_mass, Some(&state.solution.weights))?;
    Ok((next, disp))
}

/// Outcome of one mass update.
#[derive(Clone, Debug)]
pub struct MassStep {
    pub state: OptState,
    pub accepted: bool,
    /// Step size to try next time.
    pub step: f64,
}

/// Euclidean projection onto `{v : v_i >= floor, Σ v_i = total}`.
pub fn project_capped_simplex(v: &[f64], total: f64, floor: f64) -> Vec<f64> {
    // find θ with Σ max(v_i - θ, floor) = total
    let f = |t: f64| v.iter().map(|x| (x - t).max(floor)).sum::<f64>() - total;
    let (mut lo, mut hi) = (
        v.iter().copied().fold(f64::INFINITY, f64::min) - total,
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + hi.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let mut out: Vec<f64> = v.iter().map(|x| (x - t).max(floor)).collect();
    // absorb the bisection residue into the free coordinates
    let free: Vec<usize> = (0..out.len()).filter(|&i| out[i] > floor).collect();
    let err = out.iter().sum::<f64>() - total;
    if !free.is_empty() {
        for &i in &free {
            out[i] -= err / free.len() as f64;
        }
    }
    out
}

/// Masses `(v_i (ℓ_i + s)/c_6)²`, with `s` chosen so that they sum to
/// `total`. Fixed points are exactly the states with `ℓ_i + s = c_6 v_i^{-1/2}`.
pub fn fixed_point_masses(masses: &[f64], weights: &[f64], total: f64) -> Vec<f64> {
    let c6 = energy::c6();
    let lmax = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let map = |s: f64| -> Vec<f64> {
        masses.iter().zip(weights).map(|(v, l)| (v * (l + s).max(0.0) / c6).powi(2)).collect()
    };
    // the sum increases from 0 at s = -max ℓ
    let sum = |s: f64| map(s).iter().sum::<f64>();
    let mut lo = -lmax;
    let mut hi = -lmax + 1.0;
    while sum(hi) < total {
        hi = -lmax + 2.0 * (hi + lmax);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let raw = map(0.5 * (lo + hi));
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v * total / t).collect()
}

/// One damped mass update starting with step `step`; halves the step until
/// the energy decreases, and leaves the state unchanged if it never does.
pub fn mass_update(
    domain: &DomainSpec,
    state: &OptState,
    mode: MassUpdate,
    step: f64,
    floor: f64,
    tol_mass: f64,
) -> Result<MassStep> {
    let v = state.measure.masses();
    let total = domain.area();
    let direction: Vec<f64> = match mode {
        MassUpdate::ProjectedGradient => {
            let g = state.mass_gradient();
            let lap = transport::laplacian(&state.solution.partition);
            let mut lg = vec![0.0; g.len()];
            lap.mul(&g, &mut lg);
            lg.iter().map(|x| -x).collect()
        }
        MassUpdate::FixedPoint => {
            let target = fixed_point_masses(v, &state.solution.weights, total);
            target.iter().zip(v).map(|(t, v)| t - v).collect()
        }
    };
    let rel = direction.iter().zip(v).map(|(d, v)| d.abs() / v).fold(0.0, f64::max);
    if rel < 1e-13 {
        return Ok(MassStep { state: state.clone(), accepted: false, step });
    }
    let grad = state.mass_gradient();
    let mut tau = step;
    for _ in 0..30 {
        let trial: Vec<f64> = v.iter().zip(&direction).map(|(v, d)| v + tau * d).collect();
        let trial = project_capped_simplex(&trial, total, floor);
        // first-order decrease lost in roundoff: no step can be verified
        let predicted: f64 = grad.iter().zip(trial.iter().zip(v)).map(|(g, (t, v))| g * (t - v)).sum();
        if predicted > -1e-14 * state.energy.abs() {
            break;
        }
        let measure = AtomicMeasure::from_parts_unchecked(state.measure.points().to_vec(), trial);
        match OptState::solve(domain, measure, tol_mass, Some(&state.solution.weights)) {
            Ok(next) if next.energy < state.energy => {
                return Ok(MassStep { state: next, accepted: true, step: (2.0 * tau).min(1.0) });
            }
            Ok(_) | Err(Error::EmptyCellUnrecoverable { .. }) | Err(Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
        tau *= 0.5;
    }
    Ok(MassStep { state: state.clone(), accepted: false, step: tau })
}

#[derive(Clone, Debug)]
pub struct MinimizerResult {
    pub measure: AtomicMeasure,
    pub weights: Vec<f64>,
    pub partition: CellPartition,
    pub report: EnergyReport,
    /// Energy after each outer iteration, starting value first.
    pub history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub seed: u64,
    pub coupling_residual: f64,
    pub last_displacement: f64,
    pub rejected_mass_steps: usize,
    pub deleted_points: usize,
}

impl MinimizerResult {
    pub fn energy(&self) -> f64 {
        self.report.total
    }
}

/// Halton point `index` (1-based) in bases 2 and 3.
fn halton(index: u64) -> (f64, f64) {
    let radical = |mut i: u64, b: u64| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    (radical(index, 2), radical(index, 3))
}

/// `n` low-discrepancy points in the domain: a Halton sequence under a
/// seed-dependent random shift (mod 1), mapped onto the bounding box and
/// filtered to the interior.
pub fn halton_points(domain: &DomainSpec, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: (f64, f64) = (rng.random(), rng.random());
    let (lo, hi) = domain.bounding_box();
    let margin = 1e-6 * (hi.x - lo.x).max(hi.y - lo.y);
    let mut out = Vec::with_capacity(n);
    let mut k = 1u64;
    while out.len() < n {
        let (u, v) = halton(k);
        k += 1;
        let p = Point::new(lo.x + (u + shift.0).fract() * (hi.x - lo.x), lo.y + (v + shift.1).fract() * (hi.y - lo.y));
        let inside = match domain.scaled() {
            ScaledDomain::Polygon(poly) => poly.depth(p) > margin,
            ScaledDomain::Torus { .. } => true,
        };
        if inside {
            out.push(p);
        }
    }
    out
}

/// `n` uniform random points with Dirichlet(1, …, 1) masses.
pub fn random_measure(domain: &DomainSpec, n: usize, rng: &mut impl Rng) -> Result<AtomicMeasure> {
    let (lo, hi) = domain.bounding_box();
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let p = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        let ok = match domain.scaled() {
            ScaledDomain::Polygon(poly) => poly.depth(p) > 0.0,
            ScaledDomain::Torus { .. } => true,
        };
        if ok {
            pts.push(p);
        }
    }
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).map(|x: f64| x.max(1e-12)).collect();
    AtomicMeasure::normalized(domain, pts, w)
}

/// Runs the alternating scheme from a given measure.
pub fn minimize_from(domain: &DomainSpec, measure: AtomicMeasure, config: &MinimizerConfig) -> Result<MinimizerResult> {
    minimize_from_state(domain, OptState::new(domain, measure, config.tol_mass)?, config)
}

/// Runs the alternating scheme from an already solved state.
pub fn minimize_from_state(domain: &DomainSpec, state: OptState, config: &MinimizerConfig) -> Result<MinimizerResult> {
    config.check()?;
    let tol = config.tol_mass;
    let mut state = state;
    let mut history = vec![state.energy];
    let mut floor_hits = vec![0usize; state.measure.len()];
    let mut step = 1.0;
    let mut rejected = 0;
    let mut deleted = 0;
    let mut converged = false;
    let mut disp = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=config.max_outer_iters {
        iterations = it;
        let slack = energy::solver_slack(tol, domain.v_lambda());
        let (moved, d) = lloyd_step(domain, &state, tol)?;
        disp = d;
        if moved.energy <= state.energy + slack {
            state = moved;
        }
        let floor = 1e-6 * domain.area() / state.measure.len() as f64;
        let ms = mass_update(domain, &state, config.mass_update, step, floor, tol)?;
        if !ms.accepted {
            rejected += 1;
        }
        step = ms.step.max(1e-6);
        state = ms.state;

        for (hits, &v) in floor_hits.iter_mut().zip(state.measure.masses()) {
            *hits = if v <= floor * (1.0 + 1e-12) { *hits + 1 } else { 0 };
        }
        if floor_hits.iter().any(|&h| h >= 3) && state.measure.len() > 1 {
            let keep: Vec<usize> = (0..floor_hits.len()).filter(|&i| floor_hits[i] < 3).collect();
            deleted += floor_hits.len() - keep.len();
            let pts = keep.iter().map(|&i| state.measure.points()[i]).collect();
            let ms = keep.iter().map(|&i| state.measure.masses()[i]).collect();
            let ws: Vec<f64> = keep.iter().map(|&i| state.solution.weights[i]).collect();
            let measure = AtomicMeasure::normalized(domain, pts, ms)?;
            state = OptState::solve(domain, measure, tol, Some(&ws))?;
            floor_hits = vec![0; keep.len()];
        }
        history.push(state.energy);
        if disp < config.position_tol && state.coupling_residual() < config.mass_tol {
            converged = true;
            break;
        }
    }
    let report = state.report(domain);
    Ok(MinimizerResult {
        coupling_residual: state.coupling_residual(),
        measure: state.measure,
        weights: state.solution.weights,
        partition: state.solution.partition,
        report,
        history,
        converged,
        iterations,
        seed: config.seed,
        last_displacement: disp,
        rejected_mass_steps: rejected,
        deleted_points: deleted,
    })
}

/// Minimizes with `n` points from Halton starts, keeping the best of
/// `config.restarts` runs (smaller energy, then fewer points).
pub fn minimize(domain: &DomainSpec, n: usize, config: &MinimizerConfig) -> Result<MinimizerResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    config.check()?;
    let runs: Vec<Result<MinimizerResult>> = (0..config.restarts as u64)
        .into_par_iter()
        .map(|k| {
            let seed = config.seed.wrapping_add(k);
            let measure = AtomicMeasure::uniform(domain, halton_points(domain, n, seed))?;
            minimize_from(domain, measure, &MinimizerConfig { seed, ..config.clone() })
        })
        .collect();
    best_of(runs)
}

fn best_of(runs: Vec<Result<MinimizerResult>>) -> Result<MinimizerResult> {
    let mut best: Option<MinimizerResult> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(r) => {
                let better = best.as_ref().is_none_or(|b| {
                    (r.energy(), r.measure.len()).partial_cmp(&(b.energy(), b.measure.len())) == Some(std::cmp::Ordering::Less)
                });
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one run"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub n: usize,
    pub energy: f64,
    pub defect: f64,
    pub converged: bool,
}

pub struct ScanResult {
    pub entries: Vec<ScanEntry>,
    pub best: MinimizerResult,
}

/// Exhaustive scan over point counts `min..=max`; runs are independent.
pub fn scan(domain: &DomainSpec, min: usize, max: usize, config: &MinimizerConfig) -> Result<ScanResult> {
    if min == 0 || min > max {
        return Err(Error::InvalidArgument(format!("invalid scan range {min}..{max}")));
    }
    let runs: Vec<Result<MinimizerResult>> = (min..=max).into_par_iter().map(|n| minimize(domain, n, config)).collect();
    let entries = runs
        .iter()
        .zip(min..=max)
        .filter_map(|(r, n)| {
            r.as_ref().ok().map(|r| ScanEntry { n, energy: r.energy(), defect: r.report.defect, converged: r.converged })
        })
        .collect();
    Ok(ScanResult { entries, best: best_of(runs)? })
}

/// Placement of the hexagonal tiling for [`hexagonal_trial`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    /// Lattice offset relative to the domain centroid (polygons) or origin (torus).
    pub offset: Point,
    pub rotation: f64,
}

/// A cropped hexagonal tiling and its `F_λ`.
#[derive(Clone, Debug)]
pub struct HexTrial {
    pub partition: CellPartition,
    pub f_value: f64,
}

impl HexTrial {
    /// Measure with a point at each cell centroid carrying the cell's area.
    pub fn measure(&self, domain: &DomainSpec) -> Result<AtomicMeasure> {
        let cells: Vec<_> = self.partition.cells().iter().flatten().collect();
        AtomicMeasure::new(
            domain,
            cells.iter().map(|c| c.centroid()).collect(),
            cells.iter().map(|c| c.area()).collect(),
        )
    }
}

/// The unit-area hexagonal tiling cropped to the domain. On the torus the
/// lattice points inside the fundamental rectangle get their periodic
/// Voronoi cells.
pub fn hexagonal_trial(domain: &DomainSpec, opts: &TrialOptions) -> Result<HexTrial> {
    let partition = match domain.scaled() {
        ScaledDomain::Polygon(poly) => {
            let lattice = TriangularLattice::new(opts.rotation, poly.centroid() + opts.offset);
            let (lo, hi) = poly.bounding_box();
            let cand = lattice.points_in_box(lo, hi, energy::hexagon_circumradius() + 1e-9);
            let full = tessellation::planar_cells(poly, &cand, &vec![0.0; cand.len()]);
            let keep: Vec<Point> = cand.iter().zip(full.cells()).filter(|(_, c)| c.is_some()).map(|(p, _)| *p).collect();
            tessellation::planar_cells(poly, &keep, &vec![0.0; keep.len()])
        }
        ScaledDomain::Torus { width, height } => {
            let lattice = TriangularLattice::new(opts.rotation, opts.offset);
            let mut pts: Vec<Point> = lattice
                .points_in_box(Point::default(), Point::new(*width, *height), 0.0)
                .into_iter()
                .map(|p| domain.wrap(p))
                .collect();
            pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
            let mut uniq: Vec<Point> = Vec::with_capacity(pts.len());
            for p in pts {
                if uniq.iter().all(|q| domain.displacement(*q, p).norm() > 1e-9) {
                    uniq.push(p);
                }
            }
            power_diagram_periodic(domain, &WeightedSites::unweighted(uniq)?)?
        }
    };
    let f_value = energy::partition_energy(&partition);
    Ok(HexTrial { partition, f_value })
}

/// Equal-mass starting measure on the lattice of [`hexagonal_trial`]: every
/// lattice point at least `margin` inside a polygon, or all of them on a torus.
/// Unlike the trial measure it has no corner slivers.
pub fn lattice_start(domain: &DomainSpec, opts: &TrialOptions, margin: f64) -> Result<AtomicMeasure> {
    let pts: Vec<Point> = match domain.scaled() {
        ScaledDomain::Polygon(poly) => {
            let lattice = TriangularLattice::new(opts.rotation, poly.centroid() + opts.offset);
            let (lo, hi) = poly.bounding_box();
            lattice.points_in_box(lo, hi, 0.0).into_iter().filter(|&p| poly.depth(p) >= margin).collect()
        }
        ScaledDomain::Torus { .. } => hexagonal_trial(domain, opts)?.partition.sites().to_vec(),
    };
    if pts.is_empty() {
        return Err(Error::InvalidArgument("no lattice point lies inside the domain".into()));
    }
    AtomicMeasure::uniform(domain, pts)
}

/// `2^{5/2} 3^{1/4} c_6`, the boundary constant of the hexagonal construction
/// before the `(1 + η)` factor.
pub fn trial_boundary_constant() -> f64 {
    2f64.powf(2.5) * 3f64.powf(0.25) * energy::c6()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPolygon;

    fn square(v: f64) -> DomainSpec {
        DomainSpec::polygon(ConvexPolygon::unit_square(), energy::lambda_for_volume(v)).unwrap()
    }

    #[test]
    fn capped_simplex_projection() {
        let p = project_capped_simplex(&[0.5, 0.2, -0.3], 1.0, 0.01);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(p.iter().all(|&x| x >= 0.01));
        let q = project_capped_simplex(&[0.2, 0.3, 0.5], 1.0, 0.0);
        for (a, b) in q.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fixed_point_masses_symmetric() {
        let m = fixed_point_masses(&[2.0; 4], &[0.3; 4], 8.0);
        for v in m {
            assert!((v - 2.0).abs() < 1e-12);
        }
        // already stationary: ℓ_i = c_6 v_i^{-1/2} - 0.1
        let v = [0.5, 1.5];
        let l: Vec<f64> = v.iter().map(|v: &f64| energy::c6() / v.sqrt() - 0.1).collect();
        let m = fixed_point_masses(&v, &l, 2.0);
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 1.5).abs() < 1e-12);
        // weight above what its mass warrants: gains mass
        let m = fixed_point_masses(&[1.0, 1.0], &[0.0, 0.5], 2.0);
        assert!(m[0] < m[1]);
    }

    #[test]
    fn halton_points_are_inside_and_seeded() {
        let d = square(10.0);
        let a = halton_points(&d, 50, 1);
        let b = halton_points(&d, 50, 1);
        let c = halton_points(&d, 50, 2);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&p| d.contains(p)));
    }

    #[test]
    fn lloyd_single_site_moves_to_center() {
        let d = square(9.0);
        let m = AtomicMeasure::new(&d, vec![Point::new(0.3, 2.1)], vec![9.0]).unwrap();
        let s = OptState::new(&d, m, 1e-10).unwrap();
        let (next, disp) = lloyd_step(&d, &s, 1e-10).unwrap();
        assert!(next.measure.points()[0].dist(Point::new(1.5, 1.5)) < 1e-14);
        assert!(disp > 0.0);
        let (again, disp2) = lloyd_step(&d, &next, 1e-10).unwrap();
        assert!(disp2 < 1e-14);
        assert!(again.energy <= next.energy + 1e-14);
    }

    #[test]
    fn mass_updates_reach_stationarity() {
        let d = square(1.0);
        let m = AtomicMeasure::new(&d, vec![Point::new(0.3, 0.5), Point::new(0.8, 0.5)], vec![0.6, 0.4]).unwrap();
        for mode in [MassUpdate::ProjectedGradient, MassUpdate::FixedPoint] {
            let mut s = OptState::new(&d, m.clone(), 1e-12).unwrap();
            let start = s.energy;
            let residual0 = s.coupling_residual();
            let mut step = 1.0;
            for _ in 0..200 {
                let ms = mass_update(&d, &s, mode, step, 1e-6, 1e-12).unwrap();
                assert!(ms.state.energy <= s.energy);
                step = ms.step;
                s = ms.state;
            }
            assert!(s.energy < start);
            assert!(s.coupling_residual() < 1e-5, "{mode:?}: {} from {residual0}", s.coupling_residual());
        }
    }

    #[test]
    fn symmetric_state_gets_equal_masses() {
        let d = square(4.0);
        let pts = vec![Point::new(0.5, 0.5), Point::new(1.5, 0.5), Point::new(0.5, 1.5), Point::new(1.5, 1.5)];
        let m = AtomicMeasure::new(&d, pts, vec![1.3, 0.9, 0.9, 0.9]).unwrap();
        let s = OptState::new(&d, m, 1e-12).unwrap();
        let target = fixed_point_masses(&[1.0; 4], &[0.0; 4], 4.0);
        assert!(target.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let ms = mass_update(&d, &s, MassUpdate::FixedPoint, 1.0, 1e-6, 1e-12).unwrap();
        assert!(ms.accepted);
        assert!(ms.state.energy < s.energy);
    }

    #[test]
    fn hexagonal_trial_on_commensurate_torus_is_exact() {
        let d = DomainSpec::commensurate_torus(3, 3).unwrap();
        let t = hexagonal_trial(&d, &TrialOptions::default()).unwrap();
        assert_eq!(t.partition.len(), 18);
        assert!((t.f_value - 3.0 * energy::c6() * d.v_lambda()).abs() < 1e-10);
    }

    #[test]
    fn hexagonal_trial_covers_polygon() {
        let d = square(40.0);
        let t = hexagonal_trial(&d, &TrialOptions::default()).unwrap();
        let area: f64 = t.partition.areas().iter().sum();
        assert!((area - 40.0).abs() < 1e-9);
        assert!(t.partition.empty_count() == 0);
        assert!(t.f_value >= 3.0 * energy::c6() * 40.0);
    }
}
