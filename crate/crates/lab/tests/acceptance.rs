//! Acceptance criteria 1 to 11. Each criterion prints one line
//! `[PASS|FAIL] <n> <name>: <detail>`; the test fails if any criterion does.

use std::f64::consts::PI;
use std::fs;
use std::sync::Arc;
use std::time::Instant;

use grf_core::adapted::{cost_c0, default_window, entropy_report, geodesic_solve, shooting_check, CostReport};
use grf_core::flow::{dt_max, evolve, FlowTrajectory, GeomState, Slice};
use grf_core::geometry::{
    bianchi_geo, codifferential, curvature, differential_ops, div_f, face_pairing, gradient_covector,
    h_squared_field, node_pairing, norm_sq_field, Geometry,
};
use grf_core::transport::{bb_minimize, wasserstein_oracle, DescentOptions, Density, TrajectorySlices};
use grf_core::{Convention, FaceVector, MeshSpec, MetricField, PolyformField, ScalarField, SymTensorField};
use grf_lab::experiment::run_checks;
use grf_lab::scenario::{MeshConfig, PresetConfig, PresetName};
use grf_lab::{generate_random_scenario, run, Kind, Outcome, Report, Scenario, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONV: Convention = Convention::FullSum;
const NS: [usize; 3] = [32, 64, 128];
const SEEDS: u64 = 10;

struct Verdicts(Vec<bool>);

impl Verdicts {
    fn record(&mut self, n: usize, name: &str, pass: bool, detail: String) {
        println!("[{}] {n:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push(pass);
    }
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn bump(slice: &Slice, centre: [f64; 2], width: f64, floor: f64) -> Density {
    let d = slice.mesh().dim();
    let raw = ScalarField::from_fn(*slice.mesh(), |x| {
        let r2: f64 = (0..d).map(|a| circ(x[a], centre[a]).powi(2)).sum();
        floor + (-r2 / (2.0 * width * width)).exp()
    });
    Density::normalized(raw, slice).unwrap()
}

fn flat_slice(dim: usize, n: usize) -> Arc<Slice> {
    Arc::new(GeomState::flat(MeshSpec::torus(dim, n).unwrap()).slice(CONV).unwrap())
}

fn static_flat(dim: usize, n: usize, horizon: f64) -> FlowTrajectory {
    FlowTrajectory::frozen(CONV, &GeomState::flat(MeshSpec::torus(dim, n).unwrap()), horizon, 1)
}

fn flowing(dim: usize, n: usize, horizon: f64) -> FlowTrajectory {
    let mesh = MeshSpec::torus(dim, n).unwrap();
    let u = ScalarField::from_fn(mesh, |x| 0.1 * x[0].sin() + if dim > 1 { 0.05 * x[1].cos() } else { 0.0 });
    let f = ScalarField::from_fn(mesh, |x| 0.3 * x[0].cos());
    let mut h = PolyformField::zeros(mesh);
    if dim == 2 {
        let c = ScalarField::from_fn(mesh, |x| 0.4 + 0.1 * x[0].sin());
        h = h.with_degree(2, c.values().iter().map(|v| [*v, 0.0, 0.0]).collect()).unwrap();
    }
    let s0 = GeomState::new(0.0, MetricField::conformal(&u), h, f).unwrap();
    let steps = (horizon / (0.9 * dt_max(&s0))).ceil();
    evolve(CONV, &s0, horizon, horizon / steps).unwrap()
}

// Analytic data on the conformal torus g = e^{2u}δ.

fn u2(x: f64, y: f64) -> [f64; 3] {
    [0.2 * x.sin() * y.cos(), 0.2 * x.cos() * y.cos(), -0.2 * x.sin() * y.sin()]
}

fn f2(x: f64, y: f64) -> [f64; 3] {
    [0.3 * (x + y).cos(), -0.3 * (x + y).sin(), -0.3 * (x + y).sin()]
}

/// `(φ, φ_x, φ_y, φ_xx, φ_xy, φ_yy)` for `φ = sin x cos 2y`.
fn phi2(x: f64, y: f64) -> [f64; 6] {
    let (s, c) = (x.sin(), x.cos());
    let (s2, c2) = ((2.0 * y).sin(), (2.0 * y).cos());
    [s * c2, c * c2, -2.0 * s * s2, -s * c2, -2.0 * c * s2, -4.0 * s * c2]
}

fn conformal_2d(n: usize) -> (MeshSpec, MetricField, ScalarField, ScalarField) {
    let mesh = MeshSpec::torus(2, n).unwrap();
    let u = ScalarField::from_fn(mesh, |x| u2(x[0], x[1])[0]);
    let f = ScalarField::from_fn(mesh, |x| f2(x[0], x[1])[0]);
    let phi = ScalarField::from_fn(mesh, |x| phi2(x[0], x[1])[0]);
    (mesh, MetricField::conformal(&u), f, phi)
}

/// Max-norm errors at one resolution, keyed by operator.
fn operator_errors(n: usize) -> Vec<(&'static str, f64)> {
    let (mesh, g, f, phi) = conformal_2d(n);
    let geo = Geometry::new(&g);
    let ops = differential_ops(&g, &f, &phi).unwrap();
    let r = curvature(&g).r;
    let alpha: Vec<[f64; 3]> = (0..mesh.len())
        .map(|i| {
            let x = mesh.position(i);
            [x[0].cos() * x[1].sin(), (x[0] + x[1]).sin(), 0.0]
        })
        .collect();
    let beta: Vec<[f64; 3]> = (0..mesh.len()).map(|i| [(mesh.position(i)[0] - mesh.position(i)[1]).cos(), 0.0, 0.0]).collect();
    let forms = PolyformField::zeros(mesh).with_degree(1, alpha).unwrap().with_degree(2, beta).unwrap();
    let ds = codifferential(&geo, &forms);
    let (mut e_wlap, mut e_hess, mut e_r, mut e_ds) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..mesh.len() {
        let x = mesh.position(i);
        let [u, ux, uy] = u2(x[0], x[1]);
        let [_, fx, fy] = f2(x[0], x[1]);
        let p = phi2(x[0], x[1]);
        let e = (-2.0 * u).exp();
        let wlap = e * (p[3] + p[5]) - e * (fx * p[1] + fy * p[2]);
        e_wlap = e_wlap.max((ops.weighted_laplacian.get(i) - wlap).abs());
        let (du, dp, dd) = ([ux, uy], [p[1], p[2]], [[p[3], p[4]], [p[4], p[5]]]);
        for a in 0..2 {
            for b in 0..2 {
                let mut gamma_dphi = du[b] * dp[a] + du[a] * dp[b];
                if a == b {
                    gamma_dphi -= ux * dp[0] + uy * dp[1];
                }
                e_hess = e_hess.max((ops.hessian.at(i)[a][b] - (dd[a][b] - gamma_dphi)).abs());
            }
        }
        // Δ₀u = −2u for this u.
        e_r = e_r.max((r.get(i) - (-2.0 * e * (-2.0 * u))).abs());
        let div0 = -x[0].sin() * x[1].sin() + (x[0] + x[1]).cos();
        e_ds = e_ds.max((ds.get(0, i)[0] + e * div0).abs());
        let b = (x[0] - x[1]).cos();
        let (bx, by) = (-(x[0] - x[1]).sin(), (x[0] - x[1]).sin());
        let want = [e * (by - 2.0 * uy * b), -e * (bx - 2.0 * ux * b)];
        let got = ds.get(1, i);
        e_ds = e_ds.max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
    }
    // Closed polyform: discrete exact 1-form plus a constant, and a 2-form.
    let psi: Vec<f64> = (0..mesh.len()).map(|i| 0.4 * mesh.position(i)[0].sin() * mesh.position(i)[1].cos()).collect();
    let mut h1 = gradient_covector(&geo, &psi);
    h1.iter_mut().for_each(|v| v[0] += 0.3);
    let h2: Vec<[f64; 3]> =
        (0..mesh.len()).map(|i| [0.5 + 0.2 * (mesh.position(i)[0] - mesh.position(i)[1]).sin(), 0.0, 0.0]).collect();
    let h = PolyformField::zeros(mesh).with_degree(1, h1).unwrap().with_degree(2, h2).unwrap();
    let bianchi = bianchi_geo(CONV, &geo, &h);

    // One dimension: g = e^{2v}dx², v = 0.3 sin x.
    let m1 = MeshSpec::torus(1, n).unwrap();
    let v = ScalarField::from_fn(m1, |x| 0.3 * x[0].sin());
    let g1 = MetricField::conformal(&v);
    let geo1 = Geometry::new(&g1);
    let f1 = ScalarField::from_fn(m1, |x| 0.5 * x[0].cos());
    let p1 = ScalarField::from_fn(m1, |x| (2.0 * x[0]).sin());
    let ops1 = differential_ops(&g1, &f1, &p1).unwrap();
    let a1: Vec<[f64; 3]> = (0..n).map(|i| [(2.0 * m1.position(i)[0]).cos(), 0.0, 0.0]).collect();
    let ds1 = codifferential(&geo1, &PolyformField::zeros(m1).with_degree(1, a1).unwrap());
    let (mut e_wlap1, mut e_ds1) = (0.0f64, 0.0f64);
    for i in 0..n {
        let x = m1.position(i)[0];
        let (vv, dv) = (0.3 * x.sin(), 0.3 * x.cos());
        let (q1, q2) = (2.0 * (2.0 * x).cos(), -4.0 * (2.0 * x).sin());
        let exact = (-2.0 * vv).exp() * (q2 - dv * q1 + 0.5 * x.sin() * q1);
        e_wlap1 = e_wlap1.max((ops1.weighted_laplacian.get(i) - exact).abs());
        let inner = (-2.0 * vv).exp() * (-2.0 * (2.0 * x).sin() - dv * (2.0 * x).cos());
        e_ds1 = e_ds1.max((ds1.get(0, i)[0] + inner).abs());
    }
    let h0: Vec<[f64; 3]> = (0..n).map(|i| [m1.position(i)[0].cos(), 0.0, 0.0]).collect();
    let hp = PolyformField::zeros(m1).with_degree(0, h0).unwrap().with_degree(1, vec![[0.7, 0.0, 0.0]; n]).unwrap();
    let b1 = bianchi_geo(CONV, &geo1, &hp);

    vec![
        ("Δ_f 2D", e_wlap),
        ("∇² 2D", e_hess),
        ("R 2D", e_r),
        ("d* 2D", e_ds),
        ("Bianchi r1 2D", bianchi.r1_max()),
        ("Bianchi r2 2D", bianchi.r2_max()),
        ("Δ_f 1D", e_wlap1),
        ("d* 1D", e_ds1),
        ("Bianchi 1D", b1.r1_max().max(b1.r2_max())),
    ]
}

fn criterion_1(v: &mut Verdicts) {
    let start = Instant::now();
    let levels: Vec<_> = NS.iter().map(|&n| operator_errors(n)).collect();
    let mut worst = f64::INFINITY;
    let mut worst_name = "";
    for k in 0..levels[0].len() {
        let errs: Vec<f64> = levels.iter().map(|l| l[k].1).collect();
        let p = orders(&errs).into_iter().fold(f64::INFINITY, f64::min);
        if p < worst {
            worst = p;
            worst_name = levels[0][k].0;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    v.record(
        1,
        "operator convergence",
        worst >= 1.9 && secs < 120.0,
        format!("min order {worst:.3} ({worst_name}) over 32/64/128, {secs:.1}s"),
    );
}

fn random_metric(mesh: MeshSpec, rng: &mut ChaCha8Rng) -> MetricField {
    let c: Vec<f64> = (0..6).map(|_| rng.random_range(-0.2..0.2)).collect();
    let t = SymTensorField::from_index_fn(mesh, |i| {
        let x = mesh.position(i);
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            m[a][a] = 1.0 + c[a] * (x[a] + x[(a + 1) % 3]).sin();
        }
        m[0][1] = c[3] * x[2].cos();
        m[0][2] = c[4] * x[1].sin();
        m[1][2] = c[5] * x[0].cos();
        m[1][0] = m[0][1];
        m[2][0] = m[0][2];
        m[2][1] = m[1][2];
        m
    })
    .unwrap();
    MetricField::new(t).unwrap()
}

fn criterion_2(v: &mut Verdicts) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mesh = MeshSpec::torus(3, 8).unwrap();
    let mut trace: f64 = 0.0;
    for _ in 0..8 {
        let geo = Geometry::new(&random_metric(mesh, &mut rng));
        for conv in [Convention::FullSum, Convention::Normalized] {
            for k in 1..=3 {
                let data: Vec<[f64; 3]> = (0..mesh.len())
                    .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                    .collect();
                let h = PolyformField::zeros(mesh).with_degree(k, data).unwrap();
                let h2 = h_squared_field(conv, &geo, &h);
                let nsq = norm_sq_field(conv, &geo, &h, k);
                for (i, n2) in nsq.iter().enumerate() {
                    let gi = geo.ginv(i);
                    let tr: f64 = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| gi[a][b] * h2.at(i)[a][b]).sum();
                    let want = conv.trace_ratio(k) * n2;
                    trace = trace.max((tr - want).abs() / want.abs().max(1.0));
                }
            }
        }
    }
    let (m2, g, f, _) = conformal_2d(32);
    let geo = Geometry::new(&g);
    let mut duality: f64 = 0.0;
    for _ in 0..8 {
        let comps = (0..2).map(|_| (0..m2.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let x = FaceVector::from_components(m2, comps).unwrap();
        let psi: Vec<f64> = (0..m2.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = node_pairing(&geo, &f, div_f(&geo, &f, &x).unwrap().values(), &psi);
        let rhs = face_pairing(&geo, &f, &x, &psi);
        duality = duality.max((lhs + rhs).abs() / rhs.abs().max(1.0));
    }
    v.record(
        2,
        "convention contract",
        trace <= 1e-12 && duality <= 1e-12,
        format!("trace identity {trace:.2e} (both conventions), div_f duality {duality:.2e}"),
    );
}

fn scenario(dim: usize, n: usize, name: PresetName, horizon: f64, kind: Kind) -> Scenario {
    let mut sc = generate_random_scenario(0, kind);
    sc.mesh = MeshConfig { dim, n, lengths: None };
    sc.preset = PresetConfig::named(name);
    sc.flow.horizon = horizon;
    sc
}

fn homogeneous_scenario() -> Scenario {
    let mut sc = scenario(3, 8, PresetName::HomogeneousT3, 1.0, Kind::Simulate);
    sc.flow.dt = Some(0.01);
    sc
}

fn check<'a>(out: &'a Outcome, name: &str) -> &'a grf_lab::Check {
    out.report.checks.iter().find(|c| c.name == name).unwrap()
}

fn refinement_scenarios() -> Vec<(&'static str, Scenario)> {
    vec![
        ("dilaton-bump 2D", scenario(2, 32, PresetName::DilatonBump, 0.05, Kind::Simulate)),
        ("h-wave-2form 2D", scenario(2, 32, PresetName::HWave2Form, 0.05, Kind::Simulate)),
        ("conformal-bumpy-metric 2D", scenario(2, 32, PresetName::ConformalBumpyMetric, 0.05, Kind::Simulate)),
        ("homogeneous-T3", homogeneous_scenario()),
    ]
}

fn criteria_3_4(v: &mut Verdicts) {
    let mut scalar = vec![];
    let mut volume = vec![];
    let mut pass3 = true;
    let mut pass4 = true;
    let mut convention = String::new();
    for (label, sc) in refinement_scenarios() {
        let out = run_checks(&sc, &["scalar-evolution", "volume-identity"]).unwrap();
        convention = out.report.convention.clone();
        for (name, acc, pass) in [("scalar-evolution", &mut scalar, &mut pass3), ("volume-identity", &mut volume, &mut pass4)] {
            let c = check(&out, name);
            let order = c.order.unwrap_or(f64::NAN);
            *pass &= order >= 0.9;
            acc.push(format!("{label} {order:.2}"));
        }
    }
    let flat = scenario(2, 16, PresetName::FlatFixedPoint, 0.05, Kind::Simulate);
    let out = run_checks(&flat, &["volume-identity"]).unwrap();
    let exact = check(&out, "volume-identity").residual;
    v.record(
        3,
        "scalar evolution",
        pass3,
        format!("dt orders [{}], convention {convention}", scalar.join(", ")),
    );
    v.record(
        4,
        "volume identity",
        pass4 && exact <= 1e-12,
        format!("dt orders [{}], fixed point {exact:.1e}", volume.join(", ")),
    );
}

fn criterion_5(v: &mut Verdicts) {
    let start = Instant::now();
    let out = run_checks(&homogeneous_scenario(), &["homogeneous-oracle"]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let c = check(&out, "homogeneous-oracle");
    v.record(
        5,
        "homogeneous oracle",
        c.residual <= 1e-6 && secs < 60.0,
        format!("max relative error {:.2e} over T = 1, {secs:.1}s", c.residual),
    );
}

fn criterion_6(v: &mut Verdicts) {
    let start = Instant::now();
    let gap = |slice: Arc<Slice>, a: &Density, b: &Density| {
        let w = wasserstein_oracle(a, b, &slice).unwrap();
        let out = bb_minimize(a, b, slice, 16, DescentOptions::default()).unwrap();
        let target = 0.5 * w * w;
        (out.converged, (out.energy - target).abs() / target)
    };
    let s1 = flat_slice(1, 64);
    let (c1, g1) = gap(s1.clone(), &bump(&s1, [2.0, 0.0], 0.5, 0.05), &bump(&s1, [3.2, 0.0], 0.5, 0.05));
    let s2 = flat_slice(2, 8);
    let h = s2.mesh().spacing(0);
    let (c2, g2) =
        gap(s2.clone(), &bump(&s2, [2.0 * h, 2.0 * h], 0.8, 0.05), &bump(&s2, [5.0 * h, 3.0 * h], 0.8, 0.05));
    let secs = start.elapsed().as_secs_f64();
    v.record(
        6,
        "Benamou-Brenier consistency",
        c1 && c2 && g1 <= 0.02 && g2 <= 0.05 && secs < 300.0,
        format!("S¹ 64 gap {:.2}%, T² 8×8 gap {:.2}%, {secs:.1}s", 100.0 * g1, 100.0 * g2),
    );
}

fn w_scenario(seed: u64) -> Scenario {
    let mut sc = generate_random_scenario(seed, Kind::VerifyAll);
    sc.mesh.n = 32;
    sc.flow.horizon = 0.1;
    sc
}

fn criterion_7(v: &mut Verdicts) {
    let start = Instant::now();
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let out = run_checks(&w_scenario(seed), &["W-monotonicity"]).unwrap();
        let c = check(&out, "W-monotonicity");
        passed += (c.verdict == Verdict::Pass) as usize;
        worst = worst.max(c.residual);
    }
    let secs = start.elapsed().as_secs_f64();
    v.record(
        7,
        "Wasserstein monotonicity",
        passed == SEEDS as usize,
        format!("{passed}/{SEEDS} random 32² scenarios, largest drop {worst:.1e}, {secs:.1}s"),
    );
}

fn criterion_8(v: &mut Verdicts) {
    // Static flat: the adapted geodesic is the BB geodesic in rescaled time.
    let tau = 0.25;
    let traj = static_flat(2, 16, tau);
    let slices = TrajectorySlices::new(&traj);
    let s = slices.at(0.0).unwrap();
    let a = bump(&s, [2.0, 2.5], 0.7, 0.05);
    let b = bump(&s, [3.2, 3.0], 0.7, 0.05);
    let geo = geodesic_solve(&a, &b, &slices, 0.0, tau, 8, DescentOptions::default()).unwrap();
    let residual_ok = geo.converged && geo.residual <= 1e-6;

    // Translation on a frozen flat circle: C₀ = W²/(2τ) with W from the
    // quantile oracle.
    let tau1 = 0.5;
    let traj1 = static_flat(1, 64, tau1);
    let sl1 = TrajectorySlices::new(&traj1);
    let s1 = sl1.at(0.0).unwrap();
    let a1 = bump(&s1, [2.0, 0.0], 0.5, 0.05);
    let b1 = bump(&s1, [3.2, 0.0], 0.5, 0.05);
    let c0 = cost_c0(&a1, &b1, &sl1, 0.0, tau1, 16, DescentOptions::default()).unwrap();
    let w = wasserstein_oracle(&a1, &b1, &s1).unwrap();
    let oracle = 0.5 * w * w / tau1;
    let translation = (c0 - oracle).abs() / oracle;

    // Short window on a flowing background: descent against shooting.
    let traj2 = flowing(2, 16, 0.04);
    let sl2 = TrajectorySlices::new(&traj2);
    let window = default_window(traj2.snapshot(0).mesh());
    let (t0, t1) = (0.01, 0.01 + window);
    let a2 = bump(&sl2.at(t0).unwrap(), [2.5, 3.0], 0.8, 0.1);
    let b2 = bump(&sl2.at(t1).unwrap(), [2.9, 3.0], 0.8, 0.1);
    let out = geodesic_solve(&a2, &b2, &sl2, t0, t1, 8, DescentOptions::default()).unwrap();
    let shoot = shooting_check(&out.path).unwrap();
    v.record(
        8,
        "geodesic quality",
        residual_ok && translation <= 0.01 && out.converged && shoot.relative_gap <= 1e-4,
        format!(
            "static residual {:.2e}, translation gap {:.2}%, shooting gap {:.2e}",
            geo.residual,
            100.0 * translation,
            shoot.relative_gap
        ),
    );
}

fn entropy_on(traj: &FlowTrajectory, t0: f64, t1: f64, centres: [[f64; 2]; 2]) -> Option<CostReport> {
    let slices = TrajectorySlices::new(traj);
    let a = bump(&slices.at(t0).unwrap(), centres[0], 0.8, 0.1);
    let b = bump(&slices.at(t1).unwrap(), centres[1], 0.8, 0.1);
    let out = geodesic_solve(&a, &b, &slices, t0, t1, 12, DescentOptions::default()).unwrap();
    out.converged.then(|| entropy_report(&out).unwrap())
}

fn criterion_9(v: &mut Verdicts) {
    let flat = entropy_on(&static_flat(1, 64, 0.1), 0.0, 0.1, [[2.0, 0.0], [2.8, 0.0]]);
    let traj = flowing(2, 32, 0.04);
    let window = default_window(traj.snapshot(0).mesh());
    let flow = entropy_on(&traj, 0.01, 0.01 + window, [[2.5, 3.0], [2.9, 3.2]]);
    let (mut pass, mut detail) = (true, vec![]);
    for (label, rep) in [("static", flat), ("flowing", flow)] {
        match rep {
            Some(r) => {
                pass &= r.min_second_difference >= -1e-6 && r.max_convexity_defect <= 0.05;
                detail.push(format!(
                    "{label}: min second difference {:.1e}, defect {:.2}%",
                    r.min_second_difference,
                    100.0 * r.max_convexity_defect
                ));
            }
            None => {
                pass = false;
                detail.push(format!("{label}: geodesic not converged"));
            }
        }
    }
    v.record(9, "entropy convexity", pass, detail.join("; "));
}

fn criterion_10(v: &mut Verdicts) {
    let start = Instant::now();
    let mut cost = 0;
    let mut f = 0;
    for seed in 0..SEEDS {
        cost += (run(&generate_random_scenario(seed, Kind::CostMono)).unwrap().report.all_pass()) as usize;
        f += (run(&generate_random_scenario(seed, Kind::FMono)).unwrap().report.all_pass()) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    v.record(
        10,
        "cost and F monotonicity",
        cost == SEEDS as usize && f == SEEDS as usize && secs < 1800.0,
        format!("cost {cost}/{SEEDS}, F {f}/{SEEDS} random scenarios, {secs:.1}s"),
    );
}

/// Report, CSV and container bytes of one run inside a pool of `threads`.
fn artifacts(sc: &Scenario, names: &[&str], threads: usize) -> Vec<(String, Vec<u8>)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let out = pool.install(|| run_checks(sc, names)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path()).unwrap();
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_11(v: &mut Verdicts) {
    let mut geodesic = scenario(2, 16, PresetName::HWave2Form, 0.05, Kind::VerifyAll);
    geodesic.experiment.seed = 11;
    let cases: Vec<(Scenario, Vec<&str>)> = vec![
        (geodesic, grf_lab::experiment::VERIFY_ALL.to_vec()),
        (w_scenario(3), vec!["W-monotonicity"]),
        (generate_random_scenario(4, Kind::CostMono), vec!["cost-monotonicity", "F-monotonicity"]),
        (homogeneous_scenario(), vec!["homogeneous-oracle"]),
    ];
    let mut identical = 0;
    for (sc, names) in &cases {
        let one = artifacts(sc, names, 1);
        let four = artifacts(sc, names, 4);
        identical += (one == four && has_report(&one)) as usize;
    }
    v.record(
        11,
        "determinism",
        identical == cases.len(),
        format!("{identical}/{} runs bitwise identical at 1 and 4 threads", cases.len()),
    );
}

fn has_report(files: &[(String, Vec<u8>)]) -> bool {
    files
        .iter()
        .find(|(n, _)| n == grf_lab::report::REPORT_FILE)
        .is_some_and(|(_, bytes)| serde_json::from_slice::<Report>(bytes).is_ok())
}

#[test]
fn acceptance() {
    let mut v = Verdicts(vec![]);
    criterion_1(&mut v);
    criterion_2(&mut v);
    criteria_3_4(&mut v);
    criterion_5(&mut v);
    criterion_6(&mut v);
    criterion_7(&mut v);
    criterion_8(&mut v);
    criterion_9(&mut v);
    criterion_10(&mut v);
    criterion_11(&mut v);
    let failed: Vec<usize> = v.0.iter().enumerate().filter(|(_, p)| !**p).map(|(k, _)| k + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
