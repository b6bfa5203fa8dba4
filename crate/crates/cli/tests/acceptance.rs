//! The acceptance gate: one test per criterion, tolerances pinned inline.
//!
//! The four preset simulations are executed once, back to back, and shared
//! across criteria so wall-clock measurements never overlap. Reference decay
//! values are the published results for these exact configurations; relative
//! tolerances widen as the values shrink, because tiny norms amplify
//! boundary-closure differences.

use std::fs;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chemogfd::analysis::{linf_vs_one, manufactured_elliptic_study};
use chemogfd::config::{preset_config, SimulationConfig, StabilityMode};
use chemogfd::geometry::{
    add_fictitious_nodes, build_regular_grid, Node, NodeKind, Point, PointCloud, Rect,
};
use chemogfd::model::{eval_initial, ModelParams};
use chemogfd::solver::{
    parabolic_step, run, stability_bound, EllipticSystem, RunArtifacts, SolverError,
};
use chemogfd::stencil::{
    build_derivative_stencil, build_stencil_set_with_boundary, DerivativeOp, StencilSet,
    WeightScheme,
};

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

struct TimedRun {
    artifacts: RunArtifacts,
    wall: Duration,
}

struct PresetRuns {
    example1: TimedRun,
    example2: TimedRun,
    example3_gamma1: TimedRun,
    example3_gamma2: TimedRun,
}

/// Runs all four presets once, sequentially, on first touch.
fn preset_runs() -> &'static PresetRuns {
    static RUNS: OnceLock<PresetRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let timed = |name: &str| {
            let config = preset_config(name).expect("built-in preset");
            let start = Instant::now();
            let artifacts = run(&config).unwrap_or_else(|e| panic!("preset {name} failed: {e}"));
            TimedRun {
                artifacts,
                wall: start.elapsed(),
            }
        };
        PresetRuns {
            example1: timed("example1"),
            example2: timed("example2"),
            example3_gamma1: timed("example3-gamma1"),
            example3_gamma2: timed("example3-gamma2"),
        }
    })
}

struct Geometry19 {
    cloud: PointCloud,
    stencils: StencilSet,
    system: EllipticSystem,
}

/// The example1 discretization (19×19 grid, stars of 8, weights 1/d²),
/// shared by the criteria that drive the solver primitives directly.
fn geometry_19() -> &'static Geometry19 {
    static GEOMETRY: OnceLock<Geometry19> = OnceLock::new();
    GEOMETRY.get_or_init(|| {
        let base = build_regular_grid(19, Rect::unit()).unwrap();
        let cloud = add_fictitious_nodes(&base).unwrap();
        let stencils = build_stencil_set_with_boundary(&cloud, 8, WeightScheme::default()).unwrap();
        let system = EllipticSystem::new(&cloud, &stencils).unwrap();
        Geometry19 {
            cloud,
            stencils,
            system,
        }
    })
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

/// Both error norms at report time `t`.
fn errors_at(artifacts: &RunArtifacts, t: f64) -> (f64, f64) {
    let sample = artifacts
        .errors
        .iter()
        .find(|s| (s.time - t).abs() < 1e-9)
        .unwrap_or_else(|| panic!("no error sample at t = {t}"));
    (sample.err_u, sample.err_v)
}

/// Asserts `got` within a relative tolerance of a reference value.
fn assert_close(label: &str, got: f64, expected: f64, rel: f64) {
    let deviation = (got - expected).abs() / expected;
    assert!(
        deviation <= rel,
        "{label}: {got:.4e} deviates {:.2}% from the reference {expected:.4e} \
         (allowed {:.0}%)",
        deviation * 100.0,
        rel * 100.0
    );
}

/// Marches the coupled system from `u0` for `steps` explicit steps.
fn march(u0: Vec<f64>, dt: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let geometry = geometry_19();
    let params = ModelParams::new(3.0, chemogfd::model::MotilityFunction::Gamma1).unwrap();
    let mut u = u0;
    let mut v = geometry.system.solve(&u, &geometry.cloud).unwrap();
    for step in 0..steps {
        u = parabolic_step(
            &geometry.cloud,
            &geometry.stencils,
            &u,
            &v,
            &params,
            dt,
            step,
        )
        .unwrap();
        v = geometry.system.solve(&u, &geometry.cloud).unwrap();
    }
    (u, v)
}

/// A fresh jittered cloud: `n × n` points, each displaced inside its own
/// grid cell, all inner. Never degenerate for star sizes up to 12.
fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let nodes: Vec<Node> = (0..n * n)
        .map(|id| {
            let i = id % n;
            let j = id / n;
            Node {
                id,
                position: Point {
                    x: (i as f64 + 0.5 + rng.gen_range(-0.4..0.4)) / n as f64,
                    y: (j as f64 + 0.5 + rng.gen_range(-0.4..0.4)) / n as f64,
                },
                kind: NodeKind::Inner,
                mirror_id: None,
            }
        })
        .collect();
    PointCloud::new(nodes, Rect::unit()).unwrap()
}

// ---------------------------------------------------------------------------
// The criteria
// ---------------------------------------------------------------------------

#[test]
fn a01_example1_reproduces_the_reference_decay() {
    let run = &preset_runs().example1;
    let a = &run.artifacts;

    let (u, v) = errors_at(a, 0.05);
    assert_close("‖u−1‖ at t=0.05", u, 0.8777, 0.10);
    assert_close("‖v−1‖ at t=0.05", v, 0.8721, 0.10);

    let (u, v) = errors_at(a, 1.0);
    assert_close("‖u−1‖ at t=1", u, 0.2821, 0.10);
    assert_close("‖v−1‖ at t=1", v, 0.2827, 0.10);

    let (u, v) = errors_at(a, 2.5);
    assert_close("‖u−1‖ at t=2.5", u, 0.0043, 0.50);
    assert_close("‖v−1‖ at t=2.5", v, 0.0043, 0.50);

    let (u, v) = errors_at(a, 5.0);
    assert!(
        u < 1e-4 && v < 1e-4,
        "t=5: u {u:.4e}, v {v:.4e} (need < 1e-4)"
    );
    let (u, v) = errors_at(a, 10.0);
    assert!(
        u < 1e-8 && v < 1e-8,
        "t=10: u {u:.4e}, v {v:.4e} (need < 1e-8)"
    );

    assert!(
        run.wall <= Duration::from_secs(30),
        "10⁴ steps on {} nodes took {:.1?} (budget 30 s)",
        a.cloud.len(),
        run.wall
    );
}

#[test]
fn a02_example2_reproduces_the_reference_decay() {
    let a = &preset_runs().example2.artifacts;

    let (u, v) = errors_at(a, 0.05);
    assert_close("‖u−1‖ at t=0.05", u, 2.3649, 0.10);
    assert_close("‖v−1‖ at t=0.05", v, 1.6528, 0.10);

    let (u, v) = errors_at(a, 2.5);
    assert!(
        u < 1e-4 && v < 1e-4,
        "t=2.5: u {u:.4e}, v {v:.4e} (need < 1e-4)"
    );
    let (u, v) = errors_at(a, 10.0);
    assert!(
        u < 1e-8 && v < 1e-8,
        "t=10: u {u:.4e}, v {v:.4e} (need < 1e-8)"
    );
}

#[test]
fn a03_exponential_motility_outpaces_rational_motility() {
    let runs = preset_runs();
    let first = &runs.example3_gamma1.artifacts;
    let second = &runs.example3_gamma2.artifacts;

    for t in [0.05, 0.1, 0.25, 0.5, 1.0] {
        let (u1, v1) = errors_at(first, t);
        let (u2, v2) = errors_at(second, t);
        assert!(
            u1 < u2,
            "t={t}: ‖u−1‖ under e^(−v) is {u1:.4e}, not below {u2:.4e}"
        );
        assert!(
            v1 < v2,
            "t={t}: ‖v−1‖ under e^(−v) is {v1:.4e}, not below {v2:.4e}"
        );
    }

    let (u1, _) = errors_at(first, 0.05);
    let (u2, _) = errors_at(second, 0.05);
    assert_close("‖u−1‖(e^(−v)) at t=0.05", u1, 0.4314, 0.15);
    assert_close("‖u−1‖(1/(1+v)²) at t=0.05", u2, 0.5206, 0.15);
}

#[test]
fn a04_random_star_derivatives_reproduce_quadratics() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let star_sizes = [5usize, 8, 12];
    let start = Instant::now();

    for trial in 0..200 {
        let cloud = random_cloud(&mut rng, 6);
        let center = rng.gen_range(0..cloud.len());
        let s = star_sizes[trial % star_sizes.len()];
        let stencil = build_derivative_stencil(&cloud, center, s, WeightScheme::default()).unwrap();

        let q: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        let eval = |p: Point| {
            q[0] + q[1] * p.x + q[2] * p.y + q[3] * p.x * p.x + q[4] * p.y * p.y + q[5] * p.x * p.y
        };
        let field: Vec<f64> = cloud.nodes().iter().map(|n| eval(n.position)).collect();
        let c = cloud.node(center).position;
        let cases = [
            (DerivativeOp::Dx, q[1] + 2.0 * q[3] * c.x + q[5] * c.y),
            (DerivativeOp::Dy, q[2] + 2.0 * q[4] * c.y + q[5] * c.x),
            (DerivativeOp::Dxx, 2.0 * q[3]),
            (DerivativeOp::Dyy, 2.0 * q[4]),
            (DerivativeOp::Dxy, q[5]),
        ];
        for (op, truth) in cases {
            let got = stencil.apply(&field, op).unwrap();
            assert!(
                (got - truth).abs() <= 1e-10 * (1.0 + truth.abs()),
                "trial {trial} (star of {s}), {op:?}: got {got}, expected {truth}"
            );
        }
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed <= Duration::from_secs(5),
        "200 stars took {elapsed:.1?} (budget 5 s)"
    );
}

#[test]
fn a05_homogeneous_state_is_preserved_for_a_thousand_steps() {
    let geometry = geometry_19();
    let u0 = vec![1.0; geometry.cloud.len()];
    let (u, v) = march(u0, 1e-3, 1000);
    let err_u = linf_vs_one(&geometry.cloud, &u);
    let err_v = linf_vs_one(&geometry.cloud, &v);
    assert!(
        err_u <= 1e-12 && err_v <= 1e-12,
        "equilibrium drifted: ‖u−1‖ = {err_u:.2e}, ‖v−1‖ = {err_v:.2e}"
    );
}

#[test]
fn a06_constant_states_follow_the_logistic_solution_at_first_order() {
    let geometry = geometry_19();
    // A spatially constant state stays constant, so every node follows the
    // scalar logistic equation u′ = μ u (1 − u) with u(0) = 1/2, whose exact
    // value at t is 1/(1 + e^(−μt)).
    let exact = 1.0 / (1.0 + (-3.0f64).exp());
    let error_at_t1 = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let (u, _) = march(vec![0.5; geometry.cloud.len()], dt, steps);
        geometry
            .cloud
            .nodes()
            .iter()
            .filter(|n| n.kind != NodeKind::Fictitious)
            .map(|n| (u[n.id] - exact).abs())
            .fold(0.0, f64::max)
    };
    let coarse = error_at_t1(1e-3);
    let fine = error_at_t1(5e-4);
    let ratio = coarse / fine;
    assert!(
        (1.8..=2.2).contains(&ratio),
        "halving Δt changed the t=1 error by ×{ratio:.3} \
         (coarse {coarse:.3e}, fine {fine:.3e}); expected ≈ 2 for a \
         first-order stepper"
    );
}

#[test]
fn a07_elliptic_convergence_study_is_monotone_with_order_at_least_one() {
    let study = manufactured_elliptic_study(&[11, 21, 41]).unwrap();
    for pair in study.errors.windows(2) {
        assert!(
            pair[1] < pair[0],
            "error did not shrink: {:.4e} → {:.4e}",
            pair[0],
            pair[1]
        );
    }
    assert!(
        study.estimated_order >= 1.0,
        "fitted order {:.3} is below 1.0 (errors: {:?})",
        study.estimated_order,
        study.errors
    );
}

#[test]
fn a08_stability_bound_is_positive_and_strict_mode_aborts_on_oversized_steps() {
    let config = preset_config("example1").unwrap();
    let geometry = geometry_19();
    let params = ModelParams::new(config.mu, config.gamma.motility()).unwrap();
    let u = eval_initial(&config.initial, &geometry.cloud).unwrap();
    let v = geometry.system.solve(&u, &geometry.cloud).unwrap();
    let bound = stability_bound(&geometry.stencils, &u, &v, &params).unwrap();
    let global = bound
        .global
        .expect("at least one star must be informative at t = 0");
    assert!(global > 0.0, "global bound {global:.4e} is not positive");

    // Strict mode must refuse a step ten times the bound, before stepping.
    let oversized = SimulationConfig {
        dt: 10.0 * global,
        t_final: 10.0 * global,
        report_times: vec![],
        snapshot_times: vec![],
        stability: StabilityMode::Strict,
        stability_cadence: 1,
        ..config
    };
    match run(&oversized) {
        Err(SolverError::StabilityAbort {
            dt, bound, step, ..
        }) => {
            assert_eq!(step, 0, "abort must happen at the first check");
            assert!(
                dt > bound,
                "abort reported Δt = {dt:.4e} within its own bound {bound:.4e}"
            );
        }
        Err(other) => panic!("expected a stability abort, got: {other}"),
        Ok(_) => panic!("a Δt of 10× the bound must not run to completion"),
    }

    // The configured Δt = 1e−3 is the reference step for this experiment;
    // the bound is expected to clear it.
    assert!(
        global > 1e-3,
        "global Δt bound at t = 0 is {global:.4e}, which does not exceed \
         the reference step 1e-3: the monitor, taken literally, rejects \
         the very step size the experiment runs with"
    );
}

#[test]
fn a09_all_presets_decay_monotonically_past_t_equals_one() {
    let runs = preset_runs();
    let cases = [
        ("example1", &runs.example1),
        ("example2", &runs.example2),
        ("example3-gamma1", &runs.example3_gamma1),
        ("example3-gamma2", &runs.example3_gamma2),
    ];
    for (name, run) in cases {
        let sums: Vec<(f64, f64)> = run
            .artifacts
            .errors
            .iter()
            .filter(|s| s.time >= 1.0 - 1e-9)
            .map(|s| (s.time, s.err_u + s.err_v))
            .collect();
        assert!(
            sums.len() >= 2,
            "{name}: need at least two report times from t = 1"
        );
        for pair in sums.windows(2) {
            let ((t0, s0), (t1, s1)) = (pair[0], pair[1]);
            assert!(
                s1 < s0,
                "{name}: ‖u−1‖+‖v−1‖ rose from {s0:.4e} (t={t0}) to {s1:.4e} (t={t1})"
            );
        }
    }
}

#[test]
fn a10_identical_runs_produce_identical_error_files() {
    let dir = tempfile::tempdir().unwrap();
    let run_once = |sub: &str| {
        let out = dir.path().join(sub);
        let output = Command::new(env!("CARGO_BIN_EXE_chemogfd"))
            .args([
                "run",
                "--preset",
                "example1",
                "--output-dir",
                out.to_str().unwrap(),
            ])
            .output()
            .expect("binary spawns");
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
        fs::read(out.join("errors.csv")).unwrap()
    };
    let first = run_once("first");
    let second = run_once("second");
    assert_eq!(first, second, "reruns must be byte-identical");
}
