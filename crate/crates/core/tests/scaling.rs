//! Cost scaling of the explicit update.
//!
//! The per-step work is a fixed number of stencil applications per node, so
//! doubling the node count must roughly double the step time. The test uses
//! medians over repeated trials to stay robust against scheduler noise.

use std::time::Instant;

use chemogfd::geometry::{add_fictitious_nodes, build_regular_grid, Rect};
use chemogfd::model::{eval_initial, InitialCondition, ModelParams, MotilityFunction};
use chemogfd::solver::{parabolic_step, EllipticSystem};
use chemogfd::stencil::{build_stencil_set_with_boundary, WeightScheme};

/// Median wall-clock seconds for a batch of explicit steps on an `n × n`
/// grid, and the number of stars carrying the update.
fn median_batch_seconds(n: usize, steps_per_trial: usize, trials: usize) -> (f64, usize) {
    let base = build_regular_grid(n, Rect::unit()).unwrap();
    let cloud = add_fictitious_nodes(&base).unwrap();
    let stencils = build_stencil_set_with_boundary(&cloud, 8, WeightScheme::default()).unwrap();
    let params = ModelParams::new(3.0, MotilityFunction::Gamma1).unwrap();
    let initial = InitialCondition::Bump { a: 0.1, b: 5.0 };
    let u = eval_initial(&initial, &cloud).unwrap();
    let system = EllipticSystem::new(&cloud, &stencils).unwrap();
    let v = system.solve(&u, &cloud).unwrap();
    let dt = 1e-5;

    // Warm caches and the allocator before timing anything.
    let warm = parabolic_step(&cloud, &stencils, &u, &v, &params, dt, 0).unwrap();
    std::hint::black_box(&warm);

    let mut samples: Vec<f64> = (0..trials)
        .map(|_| {
            let start = Instant::now();
            for step in 0..steps_per_trial {
                let next = parabolic_step(&cloud, &stencils, &u, &v, &params, dt, step).unwrap();
                std::hint::black_box(&next);
            }
            start.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (samples[trials / 2], stencils.len())
}

#[test]
fn explicit_step_cost_scales_linearly_with_node_count() {
    // Wall-clock comparisons can be blown apart by an unlucky scheduling
    // burst even with medians, so an out-of-bound ratio is remeasured from
    // scratch a few times; the invariant fails only if every attempt does.
    let mut last_report = String::new();
    for attempt in 0..3 {
        // 28² = 784 stars against 20² = 400: within 2% of a doubling.
        let (small_time, small_stars) = median_batch_seconds(20, 10, 11);
        let (large_time, large_stars) = median_batch_seconds(28, 10, 11);

        let star_ratio = large_stars as f64 / small_stars as f64;
        assert!(
            (1.9..=2.1).contains(&star_ratio),
            "grid sizes drifted: {large_stars} / {small_stars} stars"
        );

        let time_ratio = large_time / small_time;
        if time_ratio <= 2.6 {
            return;
        }
        last_report = format!(
            "doubling the nodes ({small_stars} → {large_stars}) scaled the step time \
             by {time_ratio:.2} (medians {small_time:.2e}s → {large_time:.2e}s); \
             expected at most 2.6"
        );
        eprintln!("attempt {attempt}: {last_report}");
    }
    panic!("{last_report}");
}
