use std::f64::consts::PI;

use grf_core::adapted::{
    adapted_continuity_solve, cost_c0, default_window, energy_e0, entropy_report, geodesic_solve,
    run_cost_monotonicity, run_f_monotonicity, shooting_check, verify_cost_variation, AdaptedPath, CostReport,
    CostSchedule, EndpointFamily, ENDPOINT_STEPS,
};
use grf_core::flow::{dt_max, evolve, FlowTrajectory, GeomState, Slice};
use grf_core::transport::{
    bb_minimize, continuity_solve, wasserstein_oracle, DescentOptions, Density, TrajectorySlices,
};
use grf_core::{Convention, MeshSpec, MetricField, PolyformField, ScalarField};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONV: Convention = Convention::FullSum;

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn bump(slice: &Slice, centre: [f64; 2], width: f64, floor: f64) -> Density {
    let d = slice.mesh().dim();
    let raw = ScalarField::from_fn(*slice.mesh(), |x| {
        let mut r2 = 0.0;
        for a in 0..d {
            r2 += circ(x[a], centre[a]).powi(2);
        }
        floor + (-r2 / (2.0 * width * width)).exp()
    });
    Density::normalized(raw, slice).unwrap()
}

fn uniform(slice: &Slice) -> Density {
    Density::normalized(ScalarField::constant(*slice.mesh(), 1.0), slice).unwrap()
}

fn static_flat(dim: usize, n: usize, horizon: f64, steps: usize) -> FlowTrajectory {
    let mesh = MeshSpec::torus(dim, n).unwrap();
    FlowTrajectory::frozen(CONV, &GeomState::flat(mesh), horizon, steps)
}

fn flowing(dim: usize, n: usize, horizon: f64) -> FlowTrajectory {
    let mesh = MeshSpec::torus(dim, n).unwrap();
    let u = ScalarField::from_fn(mesh, |x| 0.1 * x[0].sin() + if dim > 1 { 0.05 * x[1].cos() } else { 0.0 });
    let f = ScalarField::from_fn(mesh, |x| 0.3 * x[0].cos());
    let h = if dim == 2 {
        let c = ScalarField::from_fn(mesh, |x| 0.4 + 0.1 * x[0].sin());
        PolyformField::zeros(mesh).with_degree(2, c.values().iter().map(|v| [*v, 0.0, 0.0]).collect()).unwrap()
    } else {
        PolyformField::zeros(mesh)
    };
    let s0 = GeomState::new(0.0, MetricField::conformal(&u), h, f).unwrap();
    let steps = (horizon / (0.9 * dt_max(&s0))).ceil();
    evolve(CONV, &s0, horizon, horizon / steps).unwrap()
}

fn scalar(mesh: MeshSpec, v: Vec<f64>) -> ScalarField {
    ScalarField::from_vec(mesh, v).unwrap()
}

#[test]
fn adapted_continuity_with_balanced_source_vanishes() {
    let traj = flowing(2, 8, 0.01);
    let slice = traj.snapshot(0).slice(CONV).unwrap();
    let mesh = *slice.mesh();
    let rho = bump(&slice, [1.0, 2.0], 1.0, 0.3);
    let drho = scalar(mesh, (0..mesh.len()).map(|i| slice.r_hf[i] * rho.values()[i]).collect());
    let (phi, _) = adapted_continuity_solve(rho.rho(), &drho, &slice).unwrap();
    assert!(phi.max_abs() <= 1e-14, "{}", phi.max_abs());
}

#[test]
fn adapted_continuity_on_flat_is_the_static_solve() {
    let mesh = MeshSpec::torus(2, 8).unwrap();
    let slice = GeomState::flat(mesh).slice(CONV).unwrap();
    let rho = bump(&slice, [1.0, 2.0], 1.0, 0.3);
    let sigma = ScalarField::from_fn(mesh, |x| x[0].cos() * x[1].sin());
    let (a, _) = adapted_continuity_solve(rho.rho(), &sigma, &slice).unwrap();
    let (b, _) = continuity_solve(rho.rho(), &sigma, &slice).unwrap();
    assert_eq!(a, b);
}

#[test]
fn adapted_continuity_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let traj = flowing(2, 8, 0.01);
    let slice = traj.snapshot(traj.len() - 1).slice(CONV).unwrap();
    let mesh = *slice.mesh();
    let n = mesh.len();
    let rho: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    // Make the source compatible: Σ w (∂_tρ − Rρ) = 0.
    let dv = mesh.cell_volume();
    let shift = (0..n).map(|i| slice.w[i] * (raw[i] - slice.r_hf[i] * rho[i])).sum::<f64>()
        / slice.w.iter().sum::<f64>();
    let drho: Vec<f64> = raw.iter().map(|v| v - shift).collect();
    let (phi, _) = adapted_continuity_solve(&scalar(mesh, rho.clone()), &scalar(mesh, drho.clone()), &slice).unwrap();

    let op = slice.op.with_coeff(&rho).unwrap();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = op.apply_a(&e);
        for i in 0..n {
            a[(i, j)] = col[i] + 1.0;
        }
    }
    let b: Vec<f64> = (0..n).map(|i| dv * slice.w[i] * (drho[i] - slice.r_hf[i] * rho[i])).collect();
    let x = a.lu().solve(&DVector::from_vec(b)).unwrap();
    let c = x.iter().zip(&slice.w).map(|(p, w)| p * w).sum::<f64>() / slice.w.iter().sum::<f64>();
    let err = (0..n).map(|i| (phi.get(i) - (x[i] - c)).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn e0_of_constant_path_under_a_constant_two_form() {
    let c = 0.6;
    let dt = 0.05;
    for (conv, r) in [(Convention::FullSum, -c * c / 4.0), (Convention::Normalized, -c * c / 8.0)] {
        let mesh = MeshSpec::torus(2, 8).unwrap();
        let h = PolyformField::zeros(mesh).with_degree(2, vec![[c, 0.0, 0.0]; mesh.len()]).unwrap();
        let s = GeomState::new(0.0, MetricField::flat(mesh), h, ScalarField::zeros(mesh)).unwrap();
        let traj = FlowTrajectory::frozen(conv, &s, dt, 1);
        let slices = TrajectorySlices::new(&traj);
        let rho = ScalarField::constant(mesh, 1.0 / (4.0 * PI * PI));
        let path = AdaptedPath::from_densities(&slices, 0.0, dt, &vec![rho; 5]).unwrap();
        let e = energy_e0(&path).unwrap();
        assert!((e - 0.5 * dt * r).abs() <= 1e-14, "{conv:?}: {e} vs {}", 0.5 * dt * r);
    }
}

#[test]
fn e0_quadrature_converges_on_a_generic_path() {
    // Fixed smooth path of densities; the potential solve and quadrature
    // are refined together and the increments shrink by ~4.
    let traj = flowing(1, 32, 0.02);
    let slices = TrajectorySlices::new(&traj);
    let mesh = *traj.snapshot(0).mesh();
    let e_for = |m: usize| {
        let rhos: Vec<ScalarField> = (0..=m)
            .map(|j| {
                let t = 0.02 * j as f64 / m as f64;
                let s = slices.at(if j == m { 0.02 } else { t }).unwrap();
                let raw = ScalarField::from_fn(mesh, |x| 1.0 + 0.3 * (x[0] - 20.0 * t).cos());
                Density::normalized(raw, &s).unwrap().rho().clone()
            })
            .collect();
        energy_e0(&AdaptedPath::from_densities(&slices, 0.0, 0.02, &rhos).unwrap()).unwrap()
    };
    let (e1, e2, e4) = (e_for(4), e_for(8), e_for(16));
    let ratio = (e1 - e2).abs() / (e2 - e4).abs();
    assert!(ratio > 3.0, "{e1} {e2} {e4} ratio {ratio}");
}

#[test]
fn constant_geodesic_on_static_flat() {
    let traj = static_flat(1, 32, 0.1, 2);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.at(0.0).unwrap();
    let mu = bump(&s, [2.0, 0.0], 0.6, 0.1);
    let out = geodesic_solve(&mu, &mu, &slices, 0.0, 0.1, 6, DescentOptions::default()).unwrap();
    assert!(out.converged);
    assert!(out.residual <= 1e-12, "{}", out.residual);
    assert!(out.energy.abs() <= 1e-14, "{}", out.energy);
    let rep = entropy_report(&out).unwrap();
    for r in &rep.convexity {
        assert!(r.defect.abs() <= 1e-9 && r.ricci.abs() <= 1e-12, "{r:?}");
    }
    let s0 = rep.series[0].entropy();
    assert!(rep.series.iter().all(|r| (r.entropy() - s0).abs() <= 1e-12));
}

#[test]
fn static_flat_geodesic_is_the_rescaled_bb_path() {
    let tau = 0.25;
    let traj = static_flat(2, 16, tau, 1);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.at(0.0).unwrap();
    let a = bump(&s, [2.0, 2.5], 0.7, 0.05);
    let b = bump(&s, [3.2, 3.0], 0.7, 0.05);
    let geo = geodesic_solve(&a, &b, &slices, 0.0, tau, 8, DescentOptions::default()).unwrap();
    assert!(geo.converged, "residual {}", geo.residual);
    assert!(geo.residual <= 1e-6);
    let bb = bb_minimize(&a, &b, s, 8, DescentOptions::default()).unwrap();
    let rel = (geo.energy * tau - bb.energy).abs() / bb.energy;
    assert!(rel <= 1e-6, "C₀τ = {}, E_BB = {}", geo.energy * tau, bb.energy);
}

#[test]
fn static_flat_cost_matches_the_circle_oracle() {
    // On a frozen flat circle C₀ = W²/(2τ) with W from the quantile oracle.
    let n = 64;
    let tau = 0.5;
    let traj = static_flat(1, n, tau, 1);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.at(0.0).unwrap();
    let a = bump(&s, [2.0, 0.0], 0.5, 0.05);
    let b = bump(&s, [3.2, 0.0], 0.5, 0.05);
    let c0 = cost_c0(&a, &b, &slices, 0.0, tau, 16, DescentOptions::default()).unwrap();
    let w = wasserstein_oracle(&a, &b, &s).unwrap();
    let oracle = 0.5 * w * w / tau;
    assert!((c0 - oracle).abs() <= 0.01 * oracle, "C₀ = {c0}, oracle {oracle}");
}

#[test]
fn cost_is_below_hand_built_paths() {
    let tau = 0.05;
    let traj = flowing(1, 32, tau);
    let slices = TrajectorySlices::new(&traj);
    let (s0, s1) = (slices.at(0.0).unwrap(), slices.at(tau).unwrap());
    let mesh = *s0.mesh();
    let a = bump(&s0, [2.0, 0.0], 0.7, 0.1);
    let b = bump(&s1, [2.6, 0.0], 0.7, 0.1);
    let m = 6;
    let c0 = cost_c0(&a, &b, &slices, 0.0, tau, m, DescentOptions::default()).unwrap();
    let nodes: Vec<_> = (0..=m).map(|j| slices.at(if j == m { tau } else { tau * j as f64 / m as f64 }).unwrap()).collect();
    let ra = a.masses(&s0);
    let rb = b.masses(&s1);
    // Linear in masses, linear in densities, and a detour through a wider bump.
    let paths: Vec<Vec<ScalarField>> = vec![
        (0..=m)
            .map(|j| {
                let th = j as f64 / m as f64;
                let mass: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| (1.0 - th) * x + th * y).collect();
                Density::from_masses(&mass, &nodes[j]).unwrap().rho().clone()
            })
            .collect(),
        (0..=m)
            .map(|j| {
                let th = j as f64 / m as f64;
                let raw = a.rho().zip_map(b.rho(), |x, y| (1.0 - th) * x + th * y).unwrap();
                Density::normalized(raw, &nodes[j]).unwrap().rho().clone()
            })
            .collect(),
        (0..=m)
            .map(|j| {
                let th = j as f64 / m as f64;
                if j == 0 || j == m {
                    let d = if j == 0 { &a } else { &b };
                    return d.rho().clone();
                }
                let raw = ScalarField::from_fn(mesh, |x| {
                    let c = 2.0 + 0.6 * th;
                    0.1 + (-circ(x[0], c).powi(2) / (2.0 * 1.1 * 1.1)).exp()
                });
                Density::normalized(raw, &nodes[j]).unwrap().rho().clone()
            })
            .collect(),
    ];
    for rhos in paths {
        let e = energy_e0(&AdaptedPath::from_densities(&slices, 0.0, tau, &rhos).unwrap()).unwrap();
        assert!(c0 <= e + 1e-12, "C₀ = {c0} > E₀ = {e}");
    }
}

#[test]
fn shooting_agrees_with_descent_on_a_short_window() {
    let traj = flowing(2, 16, 0.04);
    let slices = TrajectorySlices::new(&traj);
    let mesh = *traj.snapshot(0).mesh();
    let tau = default_window(&mesh);
    let (t0, t1) = (0.01, 0.01 + tau);
    let a = bump(&slices.at(t0).unwrap(), [2.5, 3.0], 0.8, 0.1);
    let b = bump(&slices.at(t1).unwrap(), [2.9, 3.0], 0.8, 0.1);
    let out = geodesic_solve(&a, &b, &slices, t0, t1, 8, DescentOptions::default()).unwrap();
    assert!(out.converged, "residual {}", out.residual);
    let chk = shooting_check(&out.path).unwrap();
    assert!(chk.relative_gap <= 1e-4, "{chk:?}");
}

#[test]
fn energy_is_stationary_at_the_geodesic() {
    let traj = flowing(1, 32, 0.05);
    let slices = TrajectorySlices::new(&traj);
    let a = bump(&slices.at(0.0).unwrap(), [2.0, 0.0], 0.7, 0.1);
    let b = bump(&slices.at(0.05).unwrap(), [2.8, 0.0], 0.7, 0.1);
    let opts = DescentOptions { tol: 2e-7, ..DescentOptions::default() };
    let out = geodesic_solve(&a, &b, &slices, 0.0, 0.05, 8, opts).unwrap();
    assert!(out.converged, "residual {}", out.residual);
    let path = &out.path;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = path.masses()[0].len();
    let dir: Vec<Vec<f64>> = (1..path.intervals())
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            v
        })
        .collect();
    let change = |delta: f64| {
        let rhos: Vec<ScalarField> = (0..=path.intervals())
            .map(|j| {
                let mut m = path.masses()[j].clone();
                if j > 0 && j < path.intervals() {
                    let scale = delta * m.iter().cloned().fold(f64::INFINITY, f64::min);
                    for (x, d) in m.iter_mut().zip(&dir[j - 1]) {
                        *x += scale * d;
                    }
                }
                Density::from_masses(&m, path.node_slice(j)).unwrap().rho().clone()
            })
            .collect();
        let p = AdaptedPath::from_densities(&slices, 0.0, 0.05, &rhos).unwrap();
        energy_e0(&p).unwrap() - out.energy
    };
    let (d3, d4) = (change(1e-3), change(1e-4));
    assert!(d3 > 0.0 && d4 > 0.0, "{d3} {d4}");
    let ratio = d3 / d4;
    assert!((ratio - 100.0).abs() <= 10.0, "ratio {ratio}");
}

fn report_on(traj: &FlowTrajectory, t0: f64, t1: f64, m: usize, centres: [[f64; 2]; 2]) -> CostReport {
    let slices = TrajectorySlices::new(traj);
    let a = bump(&slices.at(t0).unwrap(), centres[0], 0.8, 0.1);
    let b = bump(&slices.at(t1).unwrap(), centres[1], 0.8, 0.1);
    let out = geodesic_solve(&a, &b, &slices, t0, t1, m, DescentOptions::default()).unwrap();
    assert!(out.converged, "residual {}", out.residual);
    entropy_report(&out).unwrap()
}

#[test]
fn entropy_convexity_on_static_flat() {
    let traj = static_flat(1, 64, 0.1, 1);
    let rep = report_on(&traj, 0.0, 0.1, 12, [[2.0, 0.0], [2.8, 0.0]]);
    assert!(rep.min_second_difference >= -1e-6, "{}", rep.min_second_difference);
    assert!(rep.max_convexity_defect <= 0.05, "{rep:#?}");
}

#[test]
fn entropy_convexity_on_flowing_background() {
    let traj = flowing(2, 32, 0.04);
    let mesh = *traj.snapshot(0).mesh();
    let tau = default_window(&mesh);
    let rep = report_on(&traj, 0.01, 0.01 + tau, 12, [[2.5, 3.0], [2.9, 3.2]]);
    assert!(rep.min_second_difference >= -1e-6, "{}", rep.min_second_difference);
    assert!(rep.max_convexity_defect <= 0.05, "{:#?}", rep.convexity);
}

#[test]
fn potential_derivative_identity_converges() {
    let errs: Vec<f64> = [(32, 6), (64, 12)]
        .iter()
        .map(|&(n, m)| {
            let traj = flowing(1, n, 0.1);
            let rep = report_on(&traj, 0.0, 0.1, m, [[2.0, 0.0], [2.8, 0.0]]);
            let scale = rep.phi_derivative.iter().fold(0.0_f64, |a, r| a.max(r.rhs.abs()));
            CostReport::max_residual(&rep.phi_derivative) / scale
        })
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!(order >= 0.9, "{errs:?} order {order}");
}

#[test]
fn first_derivative_lemmas_hold_term_by_term() {
    let traj = flowing(2, 32, 0.04);
    let mesh = *traj.snapshot(0).mesh();
    let tau = default_window(&mesh);
    let rep = report_on(&traj, 0.01, 0.01 + tau, 12, [[2.5, 3.0], [2.9, 3.2]]);
    let rel = |rows: &[grf_core::adapted::IdentityRow]| {
        let s = rows.iter().fold(0.0_f64, |a, r| a.max(r.lhs.abs()).max(r.rhs.abs()));
        CostReport::max_residual(rows) / s
    };
    eprintln!("phi {} log {} curv {}", rel(&rep.phi_derivative), rel(&rep.log_derivative), rel(&rep.curvature_derivative));
    for r in &rep.transport_derivative {
        eprintln!("{r:?}");
    }
    assert!(rel(&rep.phi_derivative) <= 0.05);
    assert!(rel(&rep.log_derivative) <= 0.05);
}

#[test]
fn cost_variation_with_heat_endpoints() {
    let traj = flowing(1, 32, 0.08);
    let slices = TrajectorySlices::new(&traj);
    let j_end = traj.len() - 1;
    let s = slices.snapshot(j_end).unwrap();
    let a = bump(&s, [2.0, 0.0], 0.7, 0.1);
    let b = bump(&s, [2.8, 0.0], 0.7, 0.1);
    let fam = EndpointFamily::heat(&slices, &a, &b, j_end, 0, ENDPOINT_STEPS).unwrap();
    let window = fam.steps_for(default_window(s.mesh()));
    let sched = CostSchedule { start: 2, window, stride: 1, points: 5, intervals: 8 };
    let rep = verify_cost_variation(&slices, &fam, &sched, DescentOptions::default()).unwrap();
    eprintln!("{rep:#?}");
    assert!(rep.converged);
    assert!(rep.max_boundary() <= 1e-8, "{}", rep.max_boundary());
    assert!(rep.rows.iter().all(|r| r.lhs >= -1e-6));
}

#[test]
fn cost_variation_with_fixed_endpoints_on_static_flat() {
    let traj = static_flat(1, 64, 0.2, 4);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.at(0.0).unwrap();
    let a = bump(&s, [2.0, 0.0], 0.6, 0.1);
    let b = bump(&s, [2.8, 0.0], 0.6, 0.1);
    let fam = EndpointFamily::frozen(&slices, &a, &b, 4, 0, 8).unwrap();
    let sched = CostSchedule { start: 2, window: 8, stride: 1, points: 5, intervals: 8 };
    let rep = verify_cost_variation(&slices, &fam, &sched, DescentOptions::default()).unwrap();
    eprintln!("{rep:#?}");
    for r in &rep.rows {
        assert!(r.lhs.abs() <= 1e-8 * r.bulk, "{r:?}");
        assert!(r.bulk > 0.0);
        assert!(r.residual.abs() <= 0.05 * r.bulk, "{r:?}");
    }
}

#[test]
fn cost_is_constant_for_uniform_endpoints_on_static_flat() {
    let traj = static_flat(1, 32, 0.2, 4);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.snapshot(4).unwrap();
    let fam = EndpointFamily::heat(&slices, &uniform(&s), &uniform(&s), 4, 0, 8).unwrap();
    let sched = CostSchedule { start: 0, window: 4, stride: 4, points: 5, intervals: 4 };
    let mono = run_cost_monotonicity(&slices, &fam, &sched, DescentOptions::default()).unwrap();
    assert!(mono.pass());
    assert!(mono.series.values.iter().all(|v| v.abs() <= 1e-14), "{:?}", mono.series.values);
}

#[test]
fn cost_is_nondecreasing_on_flowing_background() {
    let traj = flowing(1, 32, 0.08);
    let slices = TrajectorySlices::new(&traj);
    let j_end = traj.len() - 1;
    let s = slices.snapshot(j_end).unwrap();
    let a = bump(&s, [2.0, 0.0], 0.6, 0.1);
    let b = bump(&s, [2.9, 0.0], 0.6, 0.1);
    let fam = EndpointFamily::heat(&slices, &a, &b, j_end, 0, ENDPOINT_STEPS).unwrap();
    let window = fam.steps_for(default_window(s.mesh()));
    let stride = (fam.times.len() - 1 - window) / 5;
    let sched = CostSchedule { start: 0, window, stride, points: 5, intervals: 8 };
    let mono = run_cost_monotonicity(&slices, &fam, &sched, DescentOptions::default()).unwrap();
    eprintln!("{mono:#?}");
    assert!(mono.pass(), "{mono:#?}");
    assert!(mono.bulk.iter().all(|b| *b >= 0.0));
}

#[test]
fn f_vanishes_for_uniform_density_on_static_flat() {
    let traj = static_flat(2, 16, 0.1, 4);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.snapshot(4).unwrap();
    let rep = run_f_monotonicity(&slices, &uniform(&s), 0.1, 0.0).unwrap();
    assert!(rep.series.values.iter().all(|v| v.abs() <= 1e-14), "{:?}", rep.series.values);
}

#[test]
fn f_matches_fourier_mode_on_static_flat() {
    let eps = 0.2;
    let horizon = 1.0;
    let traj = static_flat(1, 64, horizon, 10);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.snapshot(10).unwrap();
    let mu = Density::normalized(ScalarField::from_fn(*s.mesh(), |x| 1.0 + eps * x[0].cos()), &s).unwrap();
    let rep = run_f_monotonicity(&slices, &mu, horizon, 0.0).unwrap();
    assert!(rep.series.nondecreasing);
    for (t, f) in rep.series.x.iter().zip(&rep.series.values) {
        // ρ ∝ 1 + a cos x with a = ε e^{−(T−t)}; F = (1/2π)∫ a² sin²x / (1 + a cos x) dx.
        let a: f64 = eps * (-(horizon - t)).exp();
        let oracle = 1.0 - (1.0 - a * a).sqrt();
        assert!((f - oracle).abs() <= 0.01 * oracle, "t = {t}: F = {f}, oracle {oracle}");
    }
    assert!(rep.identity_residual.iter().all(|r| *r <= 0.01), "{:?}", rep.identity_residual);
}

#[test]
fn f_is_nondecreasing_on_flowing_background() {
    let traj = flowing(2, 16, 0.05);
    let slices = TrajectorySlices::new(&traj);
    let j_end = traj.len() - 1;
    let s = slices.snapshot(j_end).unwrap();
    let mu = bump(&s, [2.0, 3.0], 0.8, 0.1);
    let rep = run_f_monotonicity(&slices, &mu, traj.t_end(), 0.0).unwrap();
    eprintln!("{rep:#?}");
    assert!(rep.series.nondecreasing, "{:?}", rep.series);
}
