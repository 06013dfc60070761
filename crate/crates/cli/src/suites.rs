//! Validation checks run by `brt validate` and the acceptance test target.

use std::f64::consts::{E, LN_2, PI};
use std::time::{Duration, Instant};

use brt_core::estimators::stats::{chi_square_geometric, chi_square_poisson, ks_geometric, two_sample_ks};
use brt_core::estimators::{estimate_entropy_density, estimate_free_energy, rho, Estimate, EstimatorOptions, ObservationScheme};
use brt_core::simulator::{inner_projection, simulate, simulate_conditional, SimOptions};
use brt_core::{
    run_replicates, BetaFunction, BranchingTessellation, Cell, Colour, DrivingMeasure, EdgeConvention, KernelSpec, Polytope, SimRng,
    SpatialHyperplane, StreamSeed, Tessellation,
};
use rand::Rng;

use crate::eventlog::{write_log, LogHeader, SCHEMA_VERSION};
use crate::config::{KernelConfig, LambdaSpec, WindowSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<34} {:>7.2}s (limit {:>4}s)  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

pub const ALL: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Check ids of a named suite. Determinism runs in every suite.
pub fn suite(name: &str) -> Option<Vec<u8>> {
    match name {
        "geometry" => Some(vec![1, 9]),
        "laws" => Some(vec![2, 3, 4, 6, 7, 9]),
        "gibbs" => Some(vec![5, 8, 10, 9]),
        "all" => Some(ALL.to_vec()),
        _ => None,
    }
}

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "geometry exactness",
        2 => "1D Poisson event law",
        3 => "Furry-Yule geometric law",
        4 => "STIT window consistency",
        5 => "variational zero (size balance)",
        6 => "analytic free energy (1D)",
        7 => "entropy of tilted 1D STIT",
        8 => "Gibbs resampling invariance",
        9 => "determinism",
        10 => "free-energy non-negativity sweep",
        _ => "unknown",
    }
}

fn limit(id: u8) -> Duration {
    Duration::from_secs(match id {
        1 => 10,
        2 | 3 => 30,
        4 | 6 | 7 | 9 => 60,
        5 | 8 => 300,
        _ => 600,
    })
}

/// Runs one check. The verdict includes the runtime limit.
pub fn run(id: u8, seed: u64) -> CheckResult {
    let start = Instant::now();
    let (ok, detail) = match id {
        1 => geometry(seed),
        2 => poisson_law(seed),
        3 => furry_yule(seed),
        4 => window_consistency(seed),
        5 => variational_zero(seed),
        6 => analytic_free_energy(seed),
        7 => tilted_entropy(seed),
        8 => gibbs_resampling(seed),
        9 => determinism(seed),
        10 => nonnegativity_sweep(seed),
        _ => (false, format!("no check with id {id}")),
    };
    let elapsed = start.elapsed();
    let limit = limit(id);
    let within = elapsed <= limit;
    let detail = if within { detail } else { format!("{detail}; runtime limit exceeded") };
    CheckResult { id, name: name(id), passed: ok && within, detail, elapsed, limit }
}

fn simulate_many(
    n: usize,
    seed: StreamSeed,
    initial: impl Fn(&mut SimRng) -> Tessellation + Sync,
    kernel: &KernelSpec,
    lambda: &DrivingMeasure,
    t_end: f64,
) -> Result<Vec<BranchingTessellation>, brt_core::Error> {
    run_replicates(n, seed, |_, rng| {
        let t = initial(rng);
        simulate(&t, kernel, lambda, t_end, rng, SimOptions::default())
    })
    .into_iter()
    .collect()
}

fn fmt_est(e: &Estimate) -> String {
    format!("{:.5} ± {:.5}", e.value, e.std_error)
}

fn random_convex_polygon(rng: &mut SimRng) -> Polytope {
    loop {
        let n = rng.gen_range(3..12);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        let (a, b) = (rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0));
        let rot = rng.gen_range(0.0..PI);
        let c = [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
        let vs: Vec<[f64; 2]> = angles
            .iter()
            .map(|t| {
                let (x, y) = (a * t.cos(), b * t.sin());
                [c[0] + x * rot.cos() - y * rot.sin(), c[1] + x * rot.sin() + y * rot.cos()]
            })
            .collect();
        if let Ok(p) = Polytope::polygon(vs) {
            return p;
        }
    }
}

fn geometry(seed: u64) -> (bool, String) {
    let mut rng = StreamSeed(seed).derive(0, 1);
    let lambda = DrivingMeasure::isotropic_plane(vec![1.0]).expect("valid measure");
    let (mut worst_area, mut worst_cauchy) = (0.0f64, 0.0f64);
    let mut splits = 0;
    for _ in 0..10_000 {
        let p = random_convex_polygon(&mut rng);
        let cauchy = (lambda.polytope_mass(&p) - p.perimeter() / PI).abs();
        worst_cauchy = worst_cauchy.max(cauchy);
        let theta = rng.gen_range(0.0..PI);
        let h = SpatialHyperplane::from_angle(theta, 0.0);
        let (lo, hi) = p.support(h.normal);
        let r = rng.gen_range(lo..hi);
        if let Ok((a, b)) = p.split(&SpatialHyperplane { normal: h.normal, offset: r }) {
            splits += 1;
            worst_area = worst_area.max((a.area() + b.area() - p.area()).abs() / p.area());
        }
    }
    let ok = worst_area <= 1e-9 && worst_cauchy <= 1e-6 && splits >= 9_900;
    (ok, format!("{splits} splits, max area error {worst_area:.2e}, max Cauchy error {worst_cauchy:.2e}"))
}

fn counts_mean_se(xs: &[u64]) -> Estimate {
    Estimate::from_samples(&xs.iter().map(|x| *x as f64).collect::<Vec<_>>())
}

fn poisson_law(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::lebesgue_line();
    let w = Polytope::interval(0.0, 10.0).expect("interval");
    let reps = match simulate_many(10_000, StreamSeed(seed).child(2), |_| Tessellation::single(w.clone()), &KernelSpec::stit(), &lambda, 1.0) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let counts: Vec<u64> = reps.iter().map(|h| h.events().len() as u64).collect();
    let est = counts_mean_se(&counts);
    let p = chi_square_poisson(&counts, 10.0).unwrap_or(0.0);
    (p > 0.01 && est.within(10.0, 3.0), format!("mean {}, chi-square p = {p:.3}", fmt_est(&est)))
}

fn furry_yule(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::lebesgue_line();
    let w = Polytope::interval(0.0, 1.0).expect("interval");
    let reps = match simulate_many(10_000, StreamSeed(seed).child(3), |_| Tessellation::single(w.clone()), &KernelSpec::unit_rate(), &lambda, 1.0) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let leaves: Vec<u64> = reps.iter().map(|h| h.state_at(1.0).len() as u64).collect();
    let est = counts_mean_se(&leaves);
    let p_ks = ks_geometric(&leaves, E).unwrap_or(0.0);
    let p_chi = chi_square_geometric(&leaves, E).unwrap_or(0.0);
    (p_ks > 0.01 && p_chi > 0.01, format!("mean leaves {}, KS p = {p_ks:.3}, chi-square p = {p_chi:.3}", fmt_est(&est)))
}

fn window_consistency(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::isotropic_plane(vec![1.0]).expect("valid measure");
    let inner = Polytope::rectangle([-1.0, -1.0], [1.0, 1.0]).expect("box");
    let outer = Polytope::rectangle([-2.0, -2.0], [2.0, 2.0]).expect("box");
    let stit = KernelSpec::stit();
    let big = simulate_many(1000, StreamSeed(seed).child(4), |_| Tessellation::single(outer.clone()), &stit, &lambda, 1.0);
    let small = simulate_many(1000, StreamSeed(seed).child(40), |_| Tessellation::single(inner.clone()), &stit, &lambda, 1.0);
    let (big, small) = match (big, small) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (false, e.to_string()),
    };
    let restricted: Vec<f64> = big
        .iter()
        .map(|h| h.state_at(1.0).cells.iter().filter(|c| c.polytope.intersection(&inner).is_some_and(|x| x.area() > 1e-12)).count() as f64)
        .collect();
    let direct: Vec<f64> = small.iter().map(|h| h.state_at(1.0).len() as f64).collect();
    let p = two_sample_ks(&restricted, &direct).unwrap_or(0.0);
    let (a, b) = (Estimate::from_samples(&restricted), Estimate::from_samples(&direct));
    (p > 0.01, format!("restricted {} vs direct {}, KS p = {p:.3}", fmt_est(&a), fmt_est(&b)))
}

fn planar_scheme() -> ObservationScheme {
    ObservationScheme::centred(2, 8.0, 2.0, 3.0).expect("fits")
}

fn planar_window() -> Polytope {
    Polytope::rectangle([-4.0, -4.0], [4.0, 4.0]).expect("box")
}

fn variational_zero(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::isotropic_plane(vec![1.0]).expect("valid measure");
    let k = KernelSpec::size_balance(0.5).expect("valid kernel");
    let w = planar_window();
    let reps = match simulate_many(200, StreamSeed(seed).child(5), |_| Tessellation::single(w.clone()), &k, &lambda, 1.0) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    match estimate_free_energy(&reps, &k, &k, &lambda, &planar_scheme(), EstimatorOptions::default(), StreamSeed(seed).child(50)) {
        Ok(e) => (e.within(0.0, 3.0), format!("free energy {}", fmt_est(&e))),
        Err(e) => (false, e.to_string()),
    }
}

/// 1D replicates on `[-6, 6]` from a uniformly shifted unit lattice.
fn line_replicates(n: usize, seed: StreamSeed, kernel: &KernelSpec) -> Result<Vec<BranchingTessellation>, brt_core::Error> {
    let lambda = DrivingMeasure::lebesgue_line();
    simulate_many(
        n,
        seed,
        |rng| Tessellation::shifted_unit_lattice(-6.0, 6.0, rng.gen(), Colour(0)).expect("lattice"),
        kernel,
        &lambda,
        1.0,
    )
}

fn line_scheme() -> ObservationScheme {
    ObservationScheme::centred(1, 12.0, 4.0, 4.0).expect("fits")
}

fn analytic_free_energy(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::lebesgue_line();
    let stit = KernelSpec::stit();
    let target = KernelSpec::constant(2.0).expect("valid kernel");
    let reps = match line_replicates(2000, StreamSeed(seed).child(6), &stit) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let e = match estimate_free_energy(&reps, &stit, &target, &lambda, &line_scheme(), EstimatorOptions::default(), StreamSeed(seed).child(60)) {
        Ok(e) => e,
        Err(e) => return (false, e.to_string()),
    };
    let b = e.breakdown.expect("free energy has a breakdown");
    let near = |v: f64, se: f64, t: f64| (v - t).abs() <= 3.0 * se;
    let ok = e.within(1.0 - LN_2, 3.0)
        && near(b.u.value, b.u.std_error, LN_2)
        && near(b.v.value, b.v.std_error, 1.0)
        && near(b.h.value, b.h.std_error, 0.0);
    (
        ok,
        format!(
            "free {} (target {:.6}); h {:.5} ± {:.5}, u {:.5} ± {:.5}, v {:.5} ± {:.5}",
            fmt_est(&e),
            1.0 - LN_2,
            b.h.value,
            b.h.std_error,
            b.u.value,
            b.u.std_error,
            b.v.value,
            b.v.std_error
        ),
    )
}

fn tilted_entropy(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::lebesgue_line();
    let k = KernelSpec::constant(2.0).expect("valid kernel");
    let reps = match line_replicates(2000, StreamSeed(seed).child(7), &k) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let target = rho(2.0).expect("non-negative");
    match estimate_entropy_density(&reps, &k, &lambda, &line_scheme(), EstimatorOptions::default(), StreamSeed(seed).child(70)) {
        Ok(e) => (e.within(target, 3.0), format!("entropy {} (target {target:.6})", fmt_est(&e))),
        Err(e) => (false, e.to_string()),
    }
}

/// Number of inner cells and the total length of their boundaries, each
/// shared edge counted once.
pub fn inner_statistics(cells: &[Cell]) -> (usize, f64) {
    let mut length: f64 = cells.iter().map(|c| c.polytope.perimeter()).sum();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            length -= cells[i].polytope.shared_boundary_length(&cells[j].polytope);
        }
    }
    (cells.len(), length)
}

fn mutation_kernel() -> KernelSpec {
    KernelSpec::mutation(0.5, BetaFunction::HalfOnePlusFraction, EdgeConvention::WindowNeutral).expect("valid kernel")
}

/// Runs one Gibbs resampling replicate: returns the inner statistics of
/// the original history and of a conditional resample.
pub fn gibbs_pair(rng: &mut SimRng, kernel: &KernelSpec, lambda: &DrivingMeasure, outer: &Polytope, inner: &Polytope) -> Result<((usize, f64), (usize, f64)), brt_core::Error> {
    let initial = Tessellation::single(outer.clone());
    let history = simulate(&initial, kernel, lambda, 1.0, rng, SimOptions::default())?;
    let original = inner_projection(&history.state_at(1.0), inner);
    let boundary = history.outer_boundary_path(inner);
    let inner_initial = Tessellation { window: inner.clone(), cells: inner_projection(&initial, inner) };
    let resampled = simulate_conditional(inner, &boundary, &inner_initial, kernel, lambda, &history, rng, SimOptions::default())?;
    Ok((inner_statistics(&original), inner_statistics(&resampled.state_at(1.0).cells)))
}

fn gibbs_resampling(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::isotropic_plane(vec![0.5, 0.5]).expect("valid measure");
    let k = mutation_kernel();
    let outer = planar_window();
    let inner = Polytope::rectangle([-2.0, -2.0], [2.0, 2.0]).expect("box");
    // Originals come from the first half of the histories and resamples from
    // the second, so the two samples are independent.
    let n = 1000;
    let pairs: Result<Vec<_>, _> = run_replicates(2 * n, StreamSeed(seed).child(8), |_, rng| gibbs_pair(rng, &k, &lambda, &outer, &inner)).into_iter().collect();
    let pairs = match pairs {
        Ok(p) => p,
        Err(e) => return (false, e.to_string()),
    };
    let (first, second) = pairs.split_at(n);
    let c0: Vec<f64> = first.iter().map(|p| p.0 .0 as f64).collect();
    let c1: Vec<f64> = second.iter().map(|p| p.1 .0 as f64).collect();
    let l0: Vec<f64> = first.iter().map(|p| p.0 .1).collect();
    let l1: Vec<f64> = second.iter().map(|p| p.1 .1).collect();
    let p_count = two_sample_ks(&c0, &c1).unwrap_or(0.0);
    let p_len = two_sample_ks(&l0, &l1).unwrap_or(0.0);
    (
        p_count > 0.01 && p_len > 0.01,
        format!(
            "inner cells {} vs {} (KS p = {p_count:.3}); edge length {} vs {} (KS p = {p_len:.3})",
            fmt_est(&Estimate::from_samples(&c0)),
            fmt_est(&Estimate::from_samples(&c1)),
            fmt_est(&Estimate::from_samples(&l0)),
            fmt_est(&Estimate::from_samples(&l1)),
        ),
    )
}

fn determinism(seed: u64) -> (bool, String) {
    let lambda = DrivingMeasure::isotropic_plane(vec![0.5, 0.5]).expect("valid measure");
    let k = mutation_kernel();
    let w = planar_window();
    let header = |replicate: u64| LogHeader {
        schema_version: SCHEMA_VERSION.into(),
        dimension: 2,
        window: WindowSpec::from_polytope(&w),
        colours: vec!["A".into(), "B".into()],
        seed,
        replicate,
        t_end: 1.0,
        kernel: KernelConfig::Mutation { epsilon: 0.5, beta: crate::config::BetaSpec::HalfOnePlusFraction, edge: Default::default() },
        lambda: LambdaSpec::default(),
    };
    let logs = |threads: usize| -> Result<Vec<String>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let reps = simulate_many(8, StreamSeed(seed).child(9), |_| Tessellation::single(w.clone()), &k, &lambda, 1.0).map_err(|e| e.to_string())?;
            Ok(reps.iter().enumerate().map(|(i, h)| write_log(&header(i as u64), h)).collect())
        })
    };
    let estimate = |threads: usize| -> Result<Estimate, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let line = DrivingMeasure::lebesgue_line();
            let reps = line_replicates(100, StreamSeed(seed).child(90), &KernelSpec::stit()).map_err(|e| e.to_string())?;
            let target = KernelSpec::constant(2.0).expect("valid kernel");
            estimate_free_energy(&reps, &KernelSpec::stit(), &target, &line, &line_scheme(), EstimatorOptions::default(), StreamSeed(seed).child(91))
                .map_err(|e| e.to_string())
        })
    };
    match (logs(1), logs(2), estimate(1), estimate(2)) {
        (Ok(a), Ok(b), Ok(x), Ok(y)) => {
            let same_logs = a == b;
            let bits = |e: &Estimate| {
                let b = e.breakdown.expect("breakdown");
                [e.value, e.std_error, b.h.value, b.u.value, b.v.value, b.direct.value].map(f64::to_bits)
            };
            let same_est = bits(&x) == bits(&y);
            let bytes: usize = a.iter().map(|s| s.len()).sum();
            (same_logs && same_est, format!("{} logs ({bytes} bytes) identical: {same_logs}; estimates bit-identical: {same_est}", a.len()))
        }
        (Err(e), ..) | (_, Err(e), ..) | (_, _, Err(e), _) | (.., Err(e)) => (false, e),
    }
}

fn nonnegativity_sweep(seed: u64) -> (bool, String) {
    let line = DrivingMeasure::lebesgue_line();
    let plane = DrivingMeasure::isotropic_plane(vec![0.5, 0.5]).expect("valid measure");
    let stit = KernelSpec::stit;
    let c = |a| KernelSpec::constant(a).expect("valid kernel");
    let sb = || KernelSpec::size_balance(0.5).expect("valid kernel");
    let configs: Vec<(&str, usize, KernelSpec, KernelSpec)> = vec![
        ("1D stit -> constant(2)", 1, stit(), c(2.0)),
        ("1D constant(2) -> stit", 1, c(2.0), stit()),
        ("1D constant(2) -> constant(0.5)", 1, c(2.0), c(0.5)),
        ("2D stit -> size_balance(0.5)", 2, stit(), sb()),
        ("2D size_balance(0.5) -> stit", 2, sb(), stit()),
        ("2D size_balance(0.5) -> mutation", 2, sb(), mutation_kernel()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (label, d, gen, target)) in configs.iter().enumerate() {
        let s = StreamSeed(seed).child(100 + i as u64);
        let result = if *d == 1 {
            line_replicates(500, s, gen).and_then(|reps| estimate_free_energy(&reps, gen, target, &line, &line_scheme(), EstimatorOptions::default(), s.child(1)))
        } else {
            let w = planar_window();
            simulate_many(200, s, |_| Tessellation::single(w.clone()), gen, &plane, 1.0)
                .and_then(|reps| estimate_free_energy(&reps, gen, target, &plane, &planar_scheme(), EstimatorOptions::default(), s.child(1)))
        };
        match result {
            Ok(e) => {
                let pass = e.value >= -3.0 * e.std_error;
                ok &= pass;
                parts.push(format!("{label}: {}", fmt_est(&e)));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{label}: {e}"));
            }
        }
    }
    (ok, parts.join("; "))
}
