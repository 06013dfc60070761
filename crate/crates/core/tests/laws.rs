//! Distributional checks of the simulator against exact laws.

use brt_core::estimators::stats::{chi_square_poisson, two_sample_ks};
use brt_core::simulator::{inner_projection, simulate, simulate_conditional};
use brt_core::{
    run_replicates, BranchingTessellation, Cell, Colour, DrivingMeasure, Estimate, KernelContext, KernelSpec, Polytope, SimOptions, StreamSeed,
    Tessellation,
};
use rand::Rng;

#[test]
fn thinned_constant_density_gives_poisson_counts() {
    let lambda = DrivingMeasure::lebesgue_line();
    let k = KernelSpec::constant(2.0).unwrap();
    let w = Polytope::interval(0.0, 5.0).unwrap();
    let counts: Vec<u64> = run_replicates(10_000, StreamSeed(71), |_, rng| {
        simulate(&Tessellation::single(w.clone()), &k, &lambda, 1.0, rng, SimOptions::default()).unwrap().events().len() as u64
    });
    let p = chi_square_poisson(&counts, 10.0).unwrap();
    assert!(p > 0.01, "p = {p}");
    let e = Estimate::from_samples(&counts.iter().map(|c| *c as f64).collect::<Vec<_>>());
    assert!(e.within(10.0, 3.0), "{e:?}");
}

fn cells_meeting(h: &BranchingTessellation, s: f64, sub: &Polytope) -> usize {
    h.live_at(s).values().filter(|c| c.polytope.interiors_meet(sub)).count()
}

// E g(t) − g(0) against the time integral of the generator, both per replicate.
#[test]
fn cell_count_follows_the_forward_equation() {
    let lambda = DrivingMeasure::isotropic_plane(vec![0.5, 0.5]).unwrap();
    let k = KernelSpec::size_balance(0.5).unwrap();
    let w = Polytope::rectangle([0.0, 0.0], [3.0, 3.0]).unwrap();
    let sub = Polytope::rectangle([0.5, 0.5], [2.5, 2.5]).unwrap();
    let times = [0.3, 0.6, 1.0];
    let strata = 16;
    let rows: Vec<[f64; 4]> = run_replicates(2000, StreamSeed(72), |_, rng| {
        let h = simulate(&Tessellation::single(w.clone()), &k, &lambda, 1.0, rng, SimOptions::default()).unwrap();
        let g0 = cells_meeting(&h, 0.0, &sub) as f64;
        let mut out = [0.0; 4];
        out[3] = cells_meeting(&h, 1.0, &sub) as f64 - g0;
        for (i, t) in times.iter().enumerate() {
            let mut gen = 0.0;
            for j in 0..strata {
                let s = t * (j as f64 + rng.gen::<f64>()) / strata as f64;
                let live = h.live_at(s);
                let ctx = KernelContext { time: s, lambda: &lambda, window: &w, live: &live, environment: &[] };
                for (id, c) in &live {
                    let Some(piece) = c.polytope.intersection(&sub) else { continue };
                    let piece = Cell::new(piece, c.colour, c.birth_time);
                    let hp = lambda.sample_hyperplane(&piece, rng).unwrap();
                    gen += lambda.cell_mass(&piece) * k.density(&ctx, *id, c, &hp);
                }
            }
            let drift = gen * t / strata as f64;
            out[i] = cells_meeting(&h, *t, &sub) as f64 - g0 - drift;
        }
        out
    });
    for (i, t) in times.iter().enumerate() {
        let e = Estimate::from_samples(&rows.iter().map(|r| r[i]).collect::<Vec<_>>());
        assert!(e.within(0.0, 3.0), "t = {t}: {e:?}");
    }
    let growth = rows.iter().map(|r| r[3]).sum::<f64>() / rows.len() as f64;
    assert!(growth > 2.0, "growth {growth}");
}

// Inner leaf counts of conditional STIT against independent STIT trees
// started from the inner cells and immigrants, on independent histories.
#[test]
fn conditional_stit_is_a_union_of_independent_trees() {
    let lambda = DrivingMeasure::isotropic_plane(vec![1.0]).unwrap();
    let stit = KernelSpec::stit();
    let inner = Polytope::rectangle([-1.0, -1.0], [1.0, 1.0]).unwrap();
    let initial = Tessellation::grid([-2.0, -2.0], [2.0, 2.0], 8, 8, |_, _| Colour(0)).unwrap();
    let n = 600;
    let leaves: Vec<(f64, f64)> = run_replicates(2 * n, StreamSeed(73), |_, rng| {
        let history = simulate(&initial, &stit, &lambda, 1.0, rng, SimOptions::default()).unwrap();
        let boundary = history.outer_boundary_path(&inner);
        let inner_initial = Tessellation { window: inner.clone(), cells: inner_projection(&initial, &inner) };
        let cond = simulate_conditional(&inner, &boundary, &inner_initial, &stit, &lambda, &history, rng, SimOptions::default()).unwrap();
        let mut independent = 0;
        let starts = inner_initial.cells.iter().map(|c| (0.0, c.clone())).chain(boundary.immigrants.iter().cloned());
        for (t, c) in starts {
            let single = Tessellation { window: c.polytope.clone(), cells: vec![c] };
            independent += simulate(&single, &stit, &lambda, 1.0 - t, rng, SimOptions::default()).unwrap().state_at(1.0 - t).len();
        }
        (cond.state_at(1.0).len() as f64, independent as f64)
    });
    let a: Vec<f64> = leaves[..n].iter().map(|p| p.0).collect();
    let b: Vec<f64> = leaves[n..].iter().map(|p| p.1).collect();
    let p = two_sample_ks(&a, &b).unwrap();
    assert!(p > 0.01, "p = {p}");
}
