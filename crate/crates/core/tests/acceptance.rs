//! Acceptance criteria, one line each. Runs as a plain binary so the lines
//! are printed even when every criterion passes. Failures are reported in a
//! closing summary line; set `ACCEPTANCE_STRICT=1` to also exit nonzero.

use std::io::Write;
use std::time::{Duration, Instant};

use alpha_flow::eval::{kde_compare, swiss_roll_simplex, DEFAULT_BANDWIDTH, DEFAULT_KL_FLOOR, DEFAULT_RESOLUTION};
use alpha_flow::flow::{sample, train, FlowConfig};
use alpha_flow::rng::RngState;
use alpha_flow::verify::{self, Check, ALPHAS};

const SEED: u64 = 20_240_601;

/// Swiss-roll training settings shared by every α.
fn swiss_roll_config(alpha: f64) -> FlowConfig {
    FlowConfig {
        alpha,
        epochs: 2000,
        learning_rate: 1e-2,
        euler_steps_sample: 1000,
        seed: SEED,
        ..FlowConfig::default()
    }
}

struct Outcome {
    passed: bool,
    summary: String,
}

fn from_checks(checks: Vec<Check>) -> Outcome {
    let passed = checks.iter().all(|c| c.passed);
    let summary = checks
        .iter()
        .map(|c| {
            let mark = if c.passed { "" } else { " FAIL" };
            format!("{} worst={:.3e} tol={:.1e}{mark}", c.name, c.worst, c.tolerance)
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { passed, summary }
}

fn run(failed: &mut Vec<String>, id: usize, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let passed = outcome.passed && in_time;
    let verdict = if passed { "PASS" } else { "FAIL" };
    let timing = format!(
        "{:.1}s of {:.0}s{}",
        elapsed.as_secs_f64(),
        budget.as_secs_f64(),
        if in_time { "" } else { " OVER BUDGET" }
    );
    println!("[{verdict}] criterion {id:>2} {title} ({timing}): {}", outcome.summary);
    std::io::stdout().flush().ok();
    if !passed {
        failed.push(format!("{id} ({title})"));
    }
}

fn swiss_roll(alpha: f64) -> Outcome {
    let cfg = swiss_roll_config(alpha);
    let result = (|| -> alpha_flow::Result<String> {
        let data = swiss_roll_simplex(10_000, &mut RngState::new(SEED))?;
        let t0 = Instant::now();
        let trained = train(&data, &cfg)?;
        let train_secs = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let samples = sample(&trained.model, &cfg, 3, 10_000, &RngState::new(SEED + 1))?;
        let sample_secs = t1.elapsed().as_secs_f64();
        let report = kde_compare(&data, &samples.points, DEFAULT_BANDWIDTH, DEFAULT_RESOLUTION, DEFAULT_KL_FLOOR)?;
        let h = &trained.history;
        let avg = |r: std::ops::Range<usize>| h[r.clone()].iter().sum::<f64>() / r.len() as f64;
        let (first, last) = (avg(0..50), avg(h.len() - 50..h.len()));
        Ok(format!(
            "{}kl={:.4} tol=5.0e-1 clamps={} loss_avg {first:.4}->{last:.4} train={train_secs:.0}s sample={sample_secs:.0}s",
            if report.kl <= 0.5 && samples.clamp_activations == 0 && last < first { "" } else { "FAIL " },
            report.kl,
            samples.clamp_activations
        ))
    })();
    match result {
        Ok(summary) => Outcome {
            passed: !summary.starts_with("FAIL"),
            summary,
        },
        Err(e) => Outcome {
            passed: false,
            summary: format!("error: {e}"),
        },
    }
}

fn main() {
    // `cargo test -- --list` and filters must not trigger the full run.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let rng = RngState::new(SEED);
    let secs = Duration::from_secs;
    let mut failed = Vec::new();
    let f = &mut failed;
    run(f, 1, "closed-form reparameterization at alpha=0", secs(5), || {
        from_checks(verify::closed_form_tau(50, &rng.fork(1)))
    });
    run(f, 2, "geodesic boundary and exp/log inversion", secs(10), || {
        from_checks(verify::geodesic_boundary_inversion(100, &rng.fork(2)))
    });
    run(f, 3, "geodesic-equation residual", secs(30), || {
        from_checks(verify::geodesic_residual(20, &rng.fork(3)))
    });
    run(f, 4, "cos^2 schedule at alpha=0", secs(1), || from_checks(verify::cos2_schedule()));
    run(f, 5, "second-order divergence expansion", secs(5), || {
        from_checks(verify::divergence_taylor(50, &rng.fork(5)))
    });
    run(f, 6, "log map versus divergence gradient", secs(5), || {
        from_checks(verify::gradient_identity(50, &rng.fork(6)))
    });
    run(f, 7, "energy optimality of geodesics", secs(120), || {
        from_checks(verify::energy_optimality(20, 100, &rng.fork(7)))
    });
    run(f, 8, "norm and loss parameterization equivalence", secs(30), || {
        let mut checks = verify::norm_equivalence(200, &rng.fork(8));
        checks.extend(verify::loss_gradients(20, &rng.fork(9)));
        from_checks(checks)
    });
    run(f, 9, "sampling conservation and oracle transport", secs(60), || {
        from_checks(verify::sampling_conservation(100, 1000, &rng.fork(10)))
    });
    for alpha in ALPHAS {
        run(f, 10, &format!("Swiss roll end to end at alpha={alpha}"), secs(15 * 60), || {
            swiss_roll(alpha)
        });
    }
    run(f, 11, "continuity as alpha approaches 1", secs(5), || {
        from_checks(verify::alpha_one_continuity(100, &rng.fork(11)))
    });
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        return;
    }
    println!("acceptance: {} failing line(s): {}", failed.len(), failed.join(", "));
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
