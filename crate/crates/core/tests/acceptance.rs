//! End-to-end acceptance run: one PASS/FAIL line per criterion, exit code 1
//! if any fails. Every partition produced along the way is fed to the Euler
//! audit of criterion 6.

use std::f64::consts::PI;
use std::time::Instant;

use hexcryst::analysis::{euler_check, lattice_fit, stability_report, StabilityReport};
use hexcryst::certify::{certificate_report, default_m_list, fejes_toth_scaling};
use hexcryst::cli::perturbed_lattice;
use hexcryst::energy::{self, c6, cn, report_from_solution};
use hexcryst::optimize::{
    hexagonal_trial, lattice_start, minimize, minimize_from, random_measure, trial_boundary_constant,
    MinimizerConfig, MinimizerResult, TrialOptions,
};
use hexcryst::quadrature::{polygon_area, polygon_second_moment};
use hexcryst::transport::{brute_force_ot, solve_sdot};
use hexcryst::{AtomicMeasure, CellPartition, ConvexPolygon, DomainSpec, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Audit {
    partitions: usize,
    violations: usize,
    worst_margin: f64,
}

impl Audit {
    fn add(&mut self, domain: &DomainSpec, partition: &CellPartition) {
        if domain.side_count().is_some_and(|s| s > 6) {
            return;
        }
        let e = euler_check(partition, domain);
        self.partitions += 1;
        self.worst_margin = self.worst_margin.max(e.avg_edges - e.bound);
        if !e.pass {
            self.violations += 1;
        }
    }
}

fn square(lambda: f64) -> DomainSpec {
    DomainSpec::polygon(ConvexPolygon::unit_square(), lambda).unwrap()
}

fn hexagon(lambda: f64) -> DomainSpec {
    DomainSpec::polygon(ConvexPolygon::regular(6, 1.0, Point::default(), 0.0).unwrap(), lambda).unwrap()
}

fn rel_area_residual(partition: &CellPartition, measure: &AtomicMeasure) -> f64 {
    partition
        .areas()
        .iter()
        .zip(measure.masses())
        .map(|(a, v)| (a - v).abs() / v)
        .fold(0.0, f64::max)
}

fn lower_bound(audit: &mut Audit, worst_residual: &mut f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut count = 0;
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for k in [1.0, 8.0, 27.0] {
        let lambda = 2.0 * c6() / k;
        for domain in [square(lambda), hexagon(lambda)] {
            for _ in 0..167 {
                let n = rng.random_range(1..=50);
                let m = random_measure(&domain, n, &mut rng).unwrap();
                let sol = solve_sdot(&domain, &m, 1e-8).unwrap();
                *worst_residual = worst_residual.max(rel_area_residual(&sol.partition, &m));
                let rep = report_from_solution(&domain, &m, &sol);
                let gap = rep.total - 3.0 * c6() * domain.v_lambda();
                worst = worst.min(gap / domain.v_lambda());
                if gap < -1e-9 {
                    failures += 1;
                }
                audit.add(&domain, &sol.partition);
                count += 1;
            }
        }
    }
    Outcome {
        pass: count >= 1000 && failures == 0,
        detail: format!("{count} measures, {failures} below 3c6*V, min (E - 3c6*V)/V = {worst:.3e}"),
    }
}

fn transport_oracle(audit: &mut Audit, worst_residual: &mut f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_rel: f64 = 0.0;
    for i in 0..50 {
        let lambda = 2.0 * c6() / [1.0, 8.0, 27.0][i % 3];
        let domain = if i % 2 == 0 { square(lambda) } else { hexagon(lambda) };
        let n = rng.random_range(1..=6);
        let m = random_measure(&domain, n, &mut rng).unwrap();
        let sol = solve_sdot(&domain, &m, 1e-8).unwrap();
        *worst_residual = worst_residual.max(rel_area_residual(&sol.partition, &m));
        let oracle = brute_force_ot(&domain, &m, 200).unwrap();
        worst_rel = worst_rel.max((sol.cost - oracle).abs() / oracle);
        audit.add(&domain, &sol.partition);
    }
    let res = *worst_residual;
    Outcome {
        pass: worst_rel <= 5e-3 && res <= 1e-8,
        detail: format!("max |W - W_grid|/W_grid = {worst_rel:.2e} over 50 instances, max area residual {res:.2e}"),
    }
}

fn cn_formula() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=12 {
        let poly = ConvexPolygon::regular(n, 1.0, Point::new(0.3, -0.2), 0.1 * n as f64).unwrap();
        let area = polygon_area(&poly, 1e-13);
        let moment = polygon_second_moment(&poly, poly.centroid(), 1e-13) / (area * area);
        worst = worst.max((moment - cn(n).unwrap()).abs());
    }
    let c6_ok = (c6() - 0.160375).abs() < 5e-7;
    Outcome {
        pass: worst <= 1e-8 && c6_ok,
        detail: format!("max |c_n - quadrature| = {worst:.2e} for n = 3..12, c_6 = {:.6}", c6()),
    }
}

fn equality_cases(audit: &mut Audit) -> Outcome {
    let hex = hexagon(2.0 * c6());
    let m = AtomicMeasure::new(&hex, vec![Point::default()], vec![1.0]).unwrap();
    let sol = solve_sdot(&hex, &m, 1e-10).unwrap();
    let d_hex = report_from_solution(&hex, &m, &sol).defect;
    audit.add(&hex, &sol.partition);

    let torus = DomainSpec::commensurate_torus(3, 3).unwrap();
    let start = perturbed_lattice(&torus, 0.05, 5).unwrap();
    let r = minimize_from(&torus, start, &MinimizerConfig { max_outer_iters: 1000, ..Default::default() }).unwrap();
    audit.add(&torus, &r.partition);
    let pts: Vec<Point> = r.measure.points().iter().map(|&p| torus.wrap(p)).collect();
    let fit = lattice_fit(&pts).unwrap();
    let a = energy::lattice_spacing();
    let d_torus = r.report.defect;
    Outcome {
        pass: d_hex.abs() <= 1e-10 && r.measure.len() == 18 && d_torus <= 1e-6 && fit.rms <= 1e-5 * a,
        detail: format!(
            "hexagon |d| = {:.1e}; torus n = {}, d = {d_torus:.1e}, fit rms/a = {:.1e}",
            d_hex.abs(),
            r.measure.len(),
            fit.rms / a
        ),
    }
}

fn best_run(runs: Vec<MinimizerResult>) -> MinimizerResult {
    runs.into_iter().min_by(|a, b| a.energy().total_cmp(&b.energy())).unwrap()
}

fn upper_bound_trend(audit: &mut Audit) -> Outcome {
    let bound = trial_boundary_constant() * 1.1;
    let a = energy::lattice_spacing();
    let mut worst_ratio: f64 = 0.0;
    let mut defects = Vec::new();
    for k in 2..=5 {
        let domain = square(2.0 * c6() * 4f64.powi(-k));
        let v = domain.v_lambda();
        let mut best = f64::INFINITY;
        for i in 0..4 {
            for j in 0..4 {
                for rotation in [0.0, PI / 12.0] {
                    let offset = Point::new(i as f64 * a / 4.0, j as f64 * a / 4.0);
                    let t = hexagonal_trial(&domain, &TrialOptions { offset, rotation }).unwrap();
                    audit.add(&domain, &t.partition);
                    worst_ratio = worst_ratio.max((t.f_value - 3.0 * c6() * v) / domain.boundary_length());
                    best = best.min(t.f_value);
                }
            }
        }
        let cfg = MinimizerConfig { max_outer_iters: 1000, ..Default::default() };
        let mut runs = vec![minimize(&domain, v.round() as usize, &cfg).unwrap()];
        let start = lattice_start(&domain, &TrialOptions::default(), 0.25 * a).unwrap();
        runs.push(minimize_from(&domain, start, &cfg).unwrap());
        for r in &runs {
            audit.add(&domain, &r.partition);
        }
        best = best.min(best_run(runs).energy());
        defects.push(best / v - 3.0 * c6());
    }
    let decreasing = defects.windows(2).all(|w| w[1] < w[0]) && defects.iter().all(|d| *d > -1e-12);
    Outcome {
        pass: worst_ratio <= bound && decreasing,
        detail: format!(
            "max (F - 3c6*V)/|dOmega| = {worst_ratio:.4} <= {bound:.4}; min defect by k: {}",
            defects.iter().map(|d| format!("{d:.5}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn certificates() -> Outcome {
    let rep = certificate_report(10_000).unwrap();
    let failed: Vec<String> = rep.failures().map(|c| c.name.clone()).collect();
    Outcome {
        pass: failed.is_empty(),
        detail: format!("{} checks, failed: [{}]", rep.checks.len(), failed.join("; ")),
    }
}

fn fejes_toth() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let bases = [
        ("square", ConvexPolygon::unit_square()),
        ("hexagon", ConvexPolygon::regular(6, 1.0, Point::default(), 0.0).unwrap()),
    ];
    for (name, base) in bases {
        let fit = fejes_toth_scaling(&base, &default_m_list()).unwrap();
        let min = fit.samples.iter().map(|s| s.min_product).fold(f64::INFINITY, f64::min);
        let max_m = fit.samples.iter().map(|s| s.m).max().unwrap();
        pass &= min >= c6() && fit.excess_r_squared >= 0.95 && max_m >= 2000;
        parts.push(format!(
            "{name}: min #supp*W - c6 = {:.2e}, C = {:.4}, R^2 = {:.3}",
            min - c6(),
            fit.excess_constant,
            fit.excess_r_squared
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

/// Spearman rank correlation; ties get their average rank.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

fn stability_trend(audit: &mut Audit) -> Outcome {
    let a = energy::lattice_spacing();
    let cfg = MinimizerConfig { max_outer_iters: 2000, ..Default::default() };
    let mut reports: Vec<StabilityReport> = Vec::new();
    for v in [40.0, 100.0, 250.0, 600.0] {
        let domain = square(energy::lambda_for_volume(v));
        let mut runs = vec![minimize(&domain, v as usize, &cfg).unwrap()];
        for offset in [Point::new(0.0, 0.0), Point::new(0.3, 0.2), Point::new(0.1, 0.5)] {
            let start = lattice_start(&domain, &TrialOptions { offset, rotation: 0.0 }, 0.25 * a).unwrap();
            runs.push(minimize_from(&domain, start, &cfg).unwrap());
        }
        for r in &runs {
            audit.add(&domain, &r.partition);
        }
        let best = best_run(runs);
        reports.push(stability_report(&domain, &best.partition, &best.report, 0.05));
    }
    let d: Vec<f64> = reports.iter().map(|r| r.defect).collect();
    let fd: Vec<f64> = reports.iter().map(|r| r.fraction_defective).collect();
    let ld: Vec<f64> = reports.iter().map(|r| r.lattice_distance).collect();
    let raw: Vec<f64> = reports.iter().map(|r| r.neighbor_distance.max_interior_deviation).collect();
    let (rho_fd, rho_ld, rho_raw) = (spearman(&d, &fd), spearman(&d, &ld), spearman(&d, &raw));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    Outcome {
        pass: d.windows(2).all(|w| w[1] < w[0]) && rho_fd >= 0.8 && rho_ld >= 0.8,
        detail: format!(
            "d = [{}]; fraction_defective = [{}] rho {rho_fd:.2}; lattice_distance = [{}] rho {rho_ld:.2}; \
             max interior bond deviation = [{}] rho {rho_raw:.2} (not gated)",
            fmt(&d),
            fmt(&fd),
            fmt(&ld),
            fmt(&raw)
        ),
    }
}

fn main() {
    let mut audit = Audit::default();
    let mut worst_residual: f64 = 0.0;
    let mut lines: Vec<(u32, bool, String)> = Vec::new();
    let mut report = |id: u32, budget_s: f64, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        let pass = o.pass && secs <= budget_s;
        let line = format!(
            "criterion {id}: {} ({secs:.1}s of {budget_s:.0}s) {}",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
        eprintln!("{line}");
        lines.push((id, pass, line));
    };
    report(1, 300.0, &mut || lower_bound(&mut audit, &mut worst_residual));
    report(2, 600.0, &mut || transport_oracle(&mut audit, &mut worst_residual));
    report(3, 60.0, &mut cn_formula);
    report(4, 120.0, &mut || equality_cases(&mut audit));
    report(5, 900.0, &mut || upper_bound_trend(&mut audit));
    report(7, 180.0, &mut certificates);
    report(8, 600.0, &mut fejes_toth);
    report(9, 1800.0, &mut || stability_trend(&mut audit));
    let a = &audit;
    report(6, 60.0, &mut || Outcome {
        pass: a.violations == 0 && a.partitions > 0,
        detail: format!(
            "{} partitions audited, {} violations, max avg_edges - bound = {:.3e}",
            a.partitions, a.violations, a.worst_margin
        ),
    });
    lines.sort_by_key(|l| l.0);
    println!();
    for (_, _, line) in &lines {
        println!("{line}");
    }
    if lines.iter().any(|l| !l.1) {
        std::process::exit(1);
    }
}
