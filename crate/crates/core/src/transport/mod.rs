//! Semi-discrete optimal transport from Lebesgue measure on the scaled
//! domain to an atomic measure.
//!
//! The Kantorovich dual `Φ(ℓ) = Σ_i ∫_{cell_i(ℓ)} (|x - z_i|² + ℓ_i) dx - Σ_i ℓ_i v_i`
//! is concave with gradient `area_i - v_i`; it is maximized by damped Newton
//! steps whose Hessian is the weighted graph Laplacian of the power diagram.

mod brute_force;

pub use brute_force::brute_force_ot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::{conjugate_gradient, SparseSym};
use crate::tessellation::{self, CellPartition, DomainSpec, EdgeSource};

/// Default relative mass tolerance.
pub const DEFAULT_TOL_MASS: f64 = 1e-8;
/// Default Newton iteration cap.
pub const DEFAULT_MAX_ITERS: usize = 100;
const HESSIAN_EPS: f64 = 1e-12;
const MAX_HALVINGS: usize = 40;

/// Points `z_i` with masses `v_i > 0` summing to the domain area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    points: Vec<Point>,
    masses: Vec<f64>,
}

impl AtomicMeasure {
    /// Validates the measure against `domain`. Masses must sum to the domain
    /// area within `1e-8` relative; they are then rescaled to sum to it
    /// exactly. Torus points are wrapped into the fundamental rectangle.
    pub fn new(domain: &DomainSpec, points: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("at least one point is required".into()));
        }
        if points.len() != masses.len() {
            return Err(Error::InvalidMeasure(format!("{} points but {} masses", points.len(), masses.len())));
        }
        if let Some(i) = masses.iter().position(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidMeasure(format!("mass {i} is not positive: {}", masses[i])));
        }
        let total: f64 = masses.iter().sum();
        let area = domain.area();
        if (total - area).abs() > 1e-8 * area.max(1.0) {
            return Err(Error::InvalidMeasure(format!("masses sum to {total}, domain area is {area}")));
        }
        let points: Vec<Point> = points.into_iter().map(|p| domain.wrap(p)).collect();
        // validates finiteness, containment and distinctness
        let sites = tessellation::WeightedSites::unweighted(points.clone()).map_err(to_measure_err)?;
        if let Some(i) = points.iter().position(|&p| !domain.contains(p)) {
            return Err(Error::InvalidMeasure(format!("point {i} lies outside the domain")));
        }
        tessellation::check_sites(domain, &sites).map_err(to_measure_err)?;
        let scale = area / total;
        Ok(Self { points, masses: masses.into_iter().map(|m| m * scale).collect() })
    }

    /// Rescales arbitrary positive `weights` to masses summing to the domain area.
    pub fn normalized(domain: &DomainSpec, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("mass weights must have positive sum".into()));
        }
        let area = domain.area();
        Self::new(domain, points, weights.into_iter().map(|w| w * area / total).collect())
    }

    /// Equal masses `|Ω_λ|/n`.
    pub fn uniform(domain: &DomainSpec, points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::normalized(domain, points, vec![1.0; n])
    }

    pub(crate) fn from_parts_unchecked(points: Vec<Point>, masses: Vec<f64>) -> Self {
        Self { points, masses }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

fn to_measure_err(e: Error) -> Error {
    match e {
        Error::InvalidSites(m) => Error::InvalidMeasure(m),
        other => other,
    }
}

#[derive(Clone, Debug)]
pub struct SdotOptions {
    pub tol_mass: f64,
    pub max_iters: usize,
    /// Warm-start weights; falls back to zero weights if they leave a cell empty.
    pub initial_weights: Option<Vec<f64>>,
}

impl SdotOptions {
    pub fn new(tol_mass: f64) -> Self {
        Self { tol_mass, max_iters: DEFAULT_MAX_ITERS, initial_weights: None }
    }
}

impl Default for SdotOptions {
    fn default() -> Self {
        Self::new(DEFAULT_TOL_MASS)
    }
}

#[derive(Clone, Debug)]
pub struct TransportSolution {
    /// Weights `ℓ`, with `ℓ_0 = 0`.
    pub weights: Vec<f64>,
    pub partition: CellPartition,
    /// `W = Σ_i ∫_{cell_i} |x - z_i|² dx`.
    pub cost: f64,
    pub iterations: usize,
    /// `max_i |area_i - v_i| / v_i`.
    pub residual: f64,
    /// Dual objective after each accepted step, starting value first.
    pub dual_history: Vec<f64>,
}

/// Solves the transport problem to relative mass tolerance `tol_mass`.
pub fn solve_sdot(domain: &DomainSpec, measure: &AtomicMeasure, tol_mass: f64) -> Result<TransportSolution> {
    solve_sdot_with(domain, measure, &SdotOptions::new(tol_mass))
}

/// `Σ_i second_moment(cell_i, z_i)`; empty cells contribute zero.
pub fn transport_cost(partition: &CellPartition, points: &[Point]) -> f64 {
    partition
        .cells()
        .iter()
        .zip(points)
        .filter_map(|(c, &z)| c.as_ref().map(|c| c.second_moment(z)))
        .sum()
}

struct State {
    weights: Vec<f64>,
    partition: CellPartition,
    areas: Vec<f64>,
    gradient: Vec<f64>,
    dual: f64,
    dual_scale: f64,
}

impl State {
    fn new(domain: &DomainSpec, measure: &AtomicMeasure, weights: Vec<f64>) -> Result<Self> {
        let partition = tessellation::cells_unchecked(domain, measure.points(), &weights)?;
        let areas = partition.areas();
        let gradient: Vec<f64> = areas.iter().zip(measure.masses()).map(|(a, v)| a - v).collect();
        let mut dual = 0.0;
        let mut dual_scale = 0.0;
        for (i, cell) in partition.cells().iter().enumerate() {
            let l = weights[i];
            let moment = cell.as_ref().map_or(0.0, |c| c.second_moment(measure.points()[i]));
            dual += moment + l * (areas[i] - measure.masses()[i]);
            dual_scale += moment + l.abs() * (areas[i] + measure.masses()[i]);
        }
        Ok(Self { weights, partition, areas, gradient, dual, dual_scale })
    }

    fn residual(&self, masses: &[f64]) -> f64 {
        self.gradient.iter().zip(masses).map(|(g, v)| g.abs() / v).fold(0.0, f64::max)
    }

    fn grad_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    fn min_area(&self) -> f64 {
        self.areas.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Graph Laplacian with edge weights `|shared edge| / (2 |z_i - z_j|)`, the
/// negated Hessian of the dual.
pub(crate) fn laplacian(partition: &CellPartition) -> SparseSym {
    let n = partition.len();
    let mut l = SparseSym::new(n);
    for i in 0..n {
        let Some(cell) = partition.cell(i) else { continue };
        let z = partition.sites()[i];
        for ((p, q), src) in cell.edges().zip(partition.edge_sources(i)) {
            let EdgeSource::Site { site: j, image } = *src else { continue };
            if j == i {
                continue;
            }
            let len = p.dist(q);
            if len == 0.0 {
                continue;
            }
            let w = len / (2.0 * z.dist(partition.image_position(j, image)));
            l.add(i, i, w);
            l.add(i, j, -w);
        }
    }
    l
}

/// Damped Newton ascent on the dual.
pub fn solve_sdot_with(domain: &DomainSpec, measure: &AtomicMeasure, opts: &SdotOptions) -> Result<TransportSolution> {
    if !(opts.tol_mass > 0.0 && opts.tol_mass <= 1e-2) {
        return Err(Error::InvalidArgument(format!("tol_mass must lie in (0, 1e-2], got {}", opts.tol_mass)));
    }
    let n = measure.len();
    let masses = measure.masses();
    let mut state = match &opts.initial_weights {
        Some(w) if w.len() == n => {
            let w0 = w[0];
            let shifted = w.iter().map(|x| x - w0).collect();
            match State::new(domain, measure, shifted) {
                Ok(s) if s.partition.empty_count() == 0 => s,
                _ => State::new(domain, measure, vec![0.0; n])?,
            }
        }
        _ => State::new(domain, measure, vec![0.0; n])?,
    };
    if state.partition.empty_count() > 0 {
        return Err(Error::EmptyCellUnrecoverable { iteration: 0 });
    }
    let min_mass = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let area_floor = 0.5 * state.min_area().min(min_mass);
    let mut history = vec![state.dual];
    let mut iter = 0;
    loop {
        let residual = state.residual(masses);
        if residual <= opts.tol_mass || n == 1 {
            let cost = transport_cost(&state.partition, measure.points());
            return Ok(TransportSolution {
                weights: state.weights,
                partition: state.partition,
                cost,
                iterations: iter,
                residual,
                dual_history: history,
            });
        }
        if iter >= opts.max_iters {
            return Err(Error::NonConvergence { iterations: iter, residual });
        }
        iter += 1;

        let mut lap = laplacian(&state.partition).without(0);
        for i in 0..n - 1 {
            lap.add(i, i, HESSIAN_EPS);
        }
        let (d, _) = conjugate_gradient(&lap, &state.gradient[1..], 1e-12, 20 * n + 100);
        let mut dir = Vec::with_capacity(n);
        dir.push(0.0);
        dir.extend(d);

        let g0 = state.grad_norm();
        let mut tau = 1.0;
        let mut accepted = None;
        let mut infeasible = false;
        // failure of the most damped trial, which is the one closest to the current state
        let mut too_large = None;
        for _ in 0..MAX_HALVINGS {
            let trial_w: Vec<f64> = state.weights.iter().zip(&dir).map(|(w, d)| w + tau * d).collect();
            match State::new(domain, measure, trial_w) {
                Ok(t) => {
                    let feasible = t.partition.empty_count() == 0 && t.min_area() >= area_floor;
                    let tol = 1e-12 * state.dual_scale.max(t.dual_scale);
                    if feasible && t.grad_norm() <= (1.0 - 0.5 * tau) * g0 && t.dual >= state.dual - tol {
                        accepted = Some(t);
                        break;
                    }
                    infeasible = !feasible;
                    too_large = None;
                }
                Err(e @ Error::CellTooLarge { .. }) => {
                    infeasible = true;
                    too_large = Some(e);
                }
                Err(e) => return Err(e),
            }
            tau *= 0.5;
        }
        match accepted {
            Some(t) => {
                history.push(t.dual);
                state = t;
            }
            None if infeasible => return Err(too_large.unwrap_or(Error::EmptyCellUnrecoverable { iteration: iter })),
            None => return Err(Error::NonConvergence { iterations: iter, residual }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy;
    use crate::geometry::ConvexPolygon;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(v: f64) -> DomainSpec {
        DomainSpec::polygon(ConvexPolygon::unit_square(), energy::lambda_for_volume(v)).unwrap()
    }

    #[test]
    fn single_point_takes_whole_domain() {
        let d = square(1.0);
        let z = Point::new(0.2, 0.3);
        let m = AtomicMeasure::new(&d, vec![z], vec![1.0]).unwrap();
        let s = solve_sdot(&d, &m, 1e-8).unwrap();
        assert_eq!(s.weights, vec![0.0]);
        assert!((s.cost - d.scaled_polygon().unwrap().second_moment(z)).abs() < 1e-14);
    }

    #[test]
    fn four_quadrants() {
        let d = square(4.0);
        let pts = vec![Point::new(0.5, 0.5), Point::new(1.5, 0.5), Point::new(0.5, 1.5), Point::new(1.5, 1.5)];
        let m = AtomicMeasure::new(&d, pts, vec![1.0; 4]).unwrap();
        let s = solve_sdot(&d, &m, 1e-10).unwrap();
        for w in &s.weights {
            assert!(w.abs() < 1e-12);
        }
        for a in s.partition.areas() {
            assert!((a - 1.0).abs() < 1e-12);
        }
        assert!((s.cost - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_split_matches_masses() {
        let d = square(1.0);
        let m = AtomicMeasure::new(&d, vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)], vec![0.6, 0.4]).unwrap();
        let s = solve_sdot(&d, &m, 1e-12).unwrap();
        // the dividing line sits at x = 0.6, so ℓ_2 - ℓ_1 = 0.1
        assert!((s.weights[1] - s.weights[0] - 0.1).abs() < 1e-10);
    }

    #[test]
    fn random_instances_converge_with_monotone_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..20 {
            let v = 30.0;
            let d = square(v);
            let side = v.sqrt();
            let n = 5 + trial;
            let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side)).collect();
            let raw: Vec<f64> = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
            let m = AtomicMeasure::normalized(&d, pts, raw).unwrap();
            let s = solve_sdot(&d, &m, 1e-9).unwrap();
            assert!(s.residual <= 1e-9);
            for (a, v) in s.partition.areas().iter().zip(m.masses()) {
                assert!((a - v).abs() <= 1e-9 * v);
            }
            for w in s.dual_history.windows(2) {
                assert!(w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn scaling_covariance() {
        let d1 = square(1.0);
        let d4 = square(4.0);
        let pts = vec![Point::new(0.1, 0.2), Point::new(0.7, 0.4), Point::new(0.4, 0.9)];
        let masses = vec![0.2, 0.5, 0.3];
        let m1 = AtomicMeasure::new(&d1, pts.clone(), masses.clone()).unwrap();
        let m4 = AtomicMeasure::new(&d4, pts.iter().map(|&p| p * 2.0).collect(), masses.iter().map(|v| v * 4.0).collect()).unwrap();
        let w1 = solve_sdot(&d1, &m1, 1e-11).unwrap().cost;
        let w4 = solve_sdot(&d4, &m4, 1e-11).unwrap().cost;
        assert!((w4 - 16.0 * w1).abs() < 1e-8 * w4);
    }

    #[test]
    fn permutation_invariance() {
        let d = square(1.0);
        let pts = vec![Point::new(0.1, 0.2), Point::new(0.7, 0.4), Point::new(0.4, 0.9), Point::new(0.8, 0.85)];
        let masses = vec![0.2, 0.3, 0.1, 0.4];
        let a = solve_sdot(&d, &AtomicMeasure::new(&d, pts.clone(), masses.clone()).unwrap(), 1e-11).unwrap();
        let perm = [2, 0, 3, 1];
        let pp = perm.iter().map(|&i| pts[i]).collect();
        let pm = perm.iter().map(|&i| masses[i]).collect();
        let b = solve_sdot(&d, &AtomicMeasure::new(&d, pp, pm).unwrap(), 1e-11).unwrap();
        assert!((a.cost - b.cost).abs() < 1e-10);
        let shift = a.weights[perm[0]];
        for (k, &i) in perm.iter().enumerate() {
            assert!((b.weights[k] - (a.weights[i] - shift)).abs() < 1e-8);
            assert!((b.partition.areas()[k] - a.partition.areas()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn transport_cost_of_hexagon_and_displacement() {
        let hex = ConvexPolygon::regular(6, 1.0, Point::default(), 0.0).unwrap();
        let d = DomainSpec::polygon(hex, 2.0 * energy::c6()).unwrap();
        let m = AtomicMeasure::new(&d, vec![Point::default()], vec![1.0]).unwrap();
        let s = solve_sdot(&d, &m, 1e-8).unwrap();
        assert!((transport_cost(&s.partition, m.points()) - energy::c6()).abs() < 1e-14);
        let t = Point::new(0.05, -0.02);
        assert!((transport_cost(&s.partition, &[t]) - energy::c6() - t.norm_sq()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_measures() {
        let d = square(1.0);
        assert!(AtomicMeasure::new(&d, vec![Point::new(0.5, 0.5)], vec![0.9]).is_err());
        assert!(AtomicMeasure::new(&d, vec![Point::new(1.5, 0.5)], vec![1.0]).is_err());
        assert!(AtomicMeasure::new(&d, vec![Point::new(0.5, 0.5), Point::new(0.5, 0.5)], vec![0.5, 0.5]).is_err());
        assert!(AtomicMeasure::new(&d, vec![Point::new(0.5, 0.5), Point::new(0.2, 0.5)], vec![1.0, 0.0]).is_err());
        let m = AtomicMeasure::new(&d, vec![Point::new(0.5, 0.5)], vec![1.0]).unwrap();
        assert!(solve_sdot(&d, &m, 0.5).is_err());
    }
}
