//! Exact discrete transport from a sample grid to at most eight sites.
//!
//! Samples are inserted one at a time; each insertion augments along a
//! shortest path in the residual graph, which alternates between sinks
//! (sites) through reassignment of already placed samples. With `k` sinks
//! that graph has `k` nodes, and the cheapest sample to move from sink `a`
//! to sink `b` is kept in a lazily pruned heap per ordered pair.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::AtomicMeasure;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::grid_samples;
use crate::tessellation::{DomainSpec, ScaledDomain};

const MAX_GRID: usize = 400;
const MAX_SITES: usize = 8;

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    key: f64,
    sample: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other.key.total_cmp(&self.key).then(other.sample.cmp(&self.sample))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn samples(domain: &DomainSpec, grid_n: usize) -> Vec<Point> {
    match domain.scaled() {
        ScaledDomain::Polygon(poly) => grid_samples(poly, grid_n).0,
        ScaledDomain::Torus { width, height } => {
            let (hx, hy) = (width / grid_n as f64, height / grid_n as f64);
            (0..grid_n)
                .flat_map(|i| (0..grid_n).map(move |j| Point::new((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy)))
                .collect()
        }
    }
}

/// Integer demands proportional to `masses`, summing to `total`.
fn demands(masses: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = masses.iter().sum();
    let exact: Vec<f64> = masses.iter().map(|m| m / sum * total as f64).collect();
    let mut d: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let short = total - d.iter().sum::<usize>();
    for &i in order.iter().cycle().take(short) {
        d[i] += 1;
    }
    d
}

/// Transport cost from `grid_n²` equal-mass grid samples of the domain to the
/// measure, solved exactly. Requires `grid_n <= 400` and at most 8 sites.
pub fn brute_force_ot(domain: &DomainSpec, measure: &AtomicMeasure, grid_n: usize) -> Result<f64> {
    if grid_n == 0 || grid_n > MAX_GRID {
        return Err(Error::InstanceTooLarge(format!("grid_n must lie in 1..={MAX_GRID}, got {grid_n}")));
    }
    let k = measure.len();
    if k > MAX_SITES {
        return Err(Error::InstanceTooLarge(format!("at most {MAX_SITES} sites supported, got {k}")));
    }
    let xs = samples(domain, grid_n);
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("grid has no samples inside the domain".into()));
    }
    let sites = measure.points();
    let cost: Vec<f64> = xs
        .iter()
        .flat_map(|&x| sites.iter().map(move |&z| domain.displacement(z, x).norm_sq()))
        .collect();
    let c = |q: usize, a: usize| cost[q * k + a];
    let demand = demands(measure.masses(), n);
    let mut load = vec![0usize; k];
    let mut assign = vec![usize::MAX; n];
    let mut heaps: Vec<BinaryHeap<Entry>> = vec![BinaryHeap::new(); k * k];

    let push = |heaps: &mut Vec<BinaryHeap<Entry>>, q: usize, a: usize| {
        for b in (0..k).filter(|&b| b != a) {
            heaps[a * k + b].push(Entry { key: c(q, b) - c(q, a), sample: q as u32 });
        }
    };
    let top = |heaps: &mut Vec<BinaryHeap<Entry>>, assign: &[usize], a: usize, b: usize| -> Option<Entry> {
        let h = &mut heaps[a * k + b];
        while let Some(&e) = h.peek() {
            if assign[e.sample as usize] == a {
                return Some(e);
            }
            h.pop();
        }
        None
    };

    let mut dist = vec![0.0; k];
    let mut pred: Vec<Option<usize>> = vec![None; k];
    for s in 0..n {
        for a in 0..k {
            dist[a] = c(s, a);
            pred[a] = None;
        }
        for _ in 1..k {
            let mut changed = false;
            for a in 0..k {
                for b in (0..k).filter(|&b| b != a) {
                    if let Some(e) = top(&mut heaps, &assign, a, b) {
                        let cand = dist[a] + e.key;
                        if cand < dist[b] - 1e-15 * dist[b].abs().max(1.0) {
                            dist[b] = cand;
                            pred[b] = Some(a);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let t = (0..k)
            .filter(|&a| load[a] < demand[a])
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
            .expect("free capacity remains while samples remain");
        let mut b = t;
        for _ in 0..k {
            let Some(a) = pred[b] else { break };
            let e = top(&mut heaps, &assign, a, b).expect("path arc has a sample");
            let q = e.sample as usize;
            assign[q] = b;
            push(&mut heaps, q, b);
            b = a;
        }
        assign[s] = b;
        push(&mut heaps, s, b);
        load[t] += 1;
    }
    let sample_mass = domain.area() / n as f64;
    Ok(assign.iter().enumerate().map(|(q, &a)| c(q, a)).sum::<f64>() * sample_mass)
}
