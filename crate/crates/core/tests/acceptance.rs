//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Fast criteria run by default. The training criteria (3 to 7) take hours on
//! a single core and run only with `--include-ignored` (everything) or
//! `--ignored` (training criteria only). `DSPINN_ACCEPT_PROFILE=ci` and
//! `DSPINN_ACCEPT_SEEDS=<n>` shrink them for quicker evidence runs.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use dspinn::geometry::{SampleCounts, SetKind, TrainingSet};
use dspinn::harness::{train, Profile, RunStatus, TrainConfig};
use dspinn::loss::{
    compute_normalizers, exact_field, interface_loss, residual_loss, total_loss, LossContext,
    LossWeights, Method, NetField,
};
use dspinn::net::{xavier_init, NetworkParams};
use dspinn::optimize::{adam_run, lbfgs_run, AdamConfig, LbfgsConfig};
use dspinn::problems::{builtin, ProblemName, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{distance, exact_line_search_cfg, quadratic, solve, spd};

struct Outcome {
    pass: bool,
    detail: String,
}

fn separated_set(
    spec: &ProblemSpec,
    c: SampleCounts,
    seed: u64,
) -> (dspinn::geometry::Domain, TrainingSet) {
    let dom = spec.separated_domain(spec.default_d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = TrainingSet::sample(&dom, SetKind::Separated, &c, &mut rng, |x| {
        spec.dirichlet(x)
    })
    .unwrap();
    (dom, set)
}

fn random_net(rng: &mut ChaCha8Rng) -> NetworkParams {
    let sizes = [2, rng.random_range(3..12), rng.random_range(3..12), 1];
    let mut p = xavier_init(&sizes, rng.random()).unwrap();
    for b in p.biases.iter_mut() {
        b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    p
}

fn derivative_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_grad, mut worst_hess) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let net = random_net(&mut rng);
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let jet = net.forward_jet(&x).unwrap();
        let f = |p: [f64; 2]| net.forward(&p).unwrap();
        let u = f(x);
        let mut fd_g = [0.0; 2];
        let mut fd_h = [0.0; 2];
        for k in 0..2 {
            let (mut a, mut b) = (x, x);
            let h = 1e-5;
            a[k] += h;
            b[k] -= h;
            fd_g[k] = (f(a) - f(b)) / (2.0 * h);
            let h2 = 1e-4;
            let (mut a, mut b) = (x, x);
            a[k] += h2;
            b[k] -= h2;
            fd_h[k] = (f(a) - 2.0 * u + f(b)) / (h2 * h2);
        }
        let rel = |got: &[f64], want: &[f64; 2]| {
            let scale = want.iter().fold(0.1_f64, |m, v| m.max(v.abs()));
            got.iter()
                .zip(want)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
                / scale
        };
        worst_grad = worst_grad.max(rel(&jet.grad, &fd_g));
        worst_hess = worst_hess.max(rel(&jet.hess_diag, &fd_h));
    }

    // parameter gradient of the full loss on a [2,8,8,1] net with ~50 records
    let spec = builtin(ProblemName::Ex5);
    let (_, set) = separated_set(
        &spec,
        SampleCounts {
            n_f: 15,
            n_b: 3,
            n_gamma: 10,
        },
        5,
    );
    let norms = compute_normalizers(&set, &spec).unwrap();
    let params = random_net_sized(&[2, 8, 8, 1], 17);
    let ctx = LossContext::new(Method::Nds, &set, &spec, LossWeights::default(), norms).unwrap();
    let (_, grad) = ctx.loss_and_grad::<f64>(&params).unwrap();
    let theta = params.flatten();
    let loss = |t: &[f64]| {
        let p = NetworkParams::unflatten(t, &params.layer_sizes).unwrap();
        ctx.evaluate(&NetField::<f64>::new(&p)).unwrap().total
    };
    let (mut err, mut scale) = (0.0, 0.0);
    for i in 0..theta.len() {
        let h = 1e-5;
        let (mut a, mut b) = (theta.clone(), theta.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (loss(&a) - loss(&b)) / (2.0 * h);
        err += (fd - grad[i]).powi(2);
        scale += grad[i].powi(2);
    }
    let loss_rel = (err / scale).sqrt();
    Outcome {
        pass: worst_grad < 1e-5 && worst_hess < 1e-5 && loss_rel < 1e-6,
        detail: format!(
            "jet gradient {worst_grad:.2e}, Hessian diagonal {worst_hess:.2e} (limit 1e-5, 100 instances); \
             loss gradient {loss_rel:.2e} (limit 1e-6, {} records)",
            set.tau_b.len() + set.tau_r.len() + set.tau_gamma.len()
        ),
    }
}

fn random_net_sized(sizes: &[usize], seed: u64) -> NetworkParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = xavier_init(sizes, seed).unwrap();
    for b in p.biases.iter_mut() {
        b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    p
}

fn exact_solution_oracles() -> Outcome {
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for p in [
        ProblemName::Ex1,
        ProblemName::Ex3,
        ProblemName::Ex4,
        ProblemName::Ex5,
    ] {
        let spec = builtin(p);
        let (dom, set) = separated_set(
            &spec,
            SampleCounts {
                n_f: 1000,
                n_b: 100,
                n_gamma: 1000,
            },
            3,
        );
        let field = exact_field(&spec, &dom);
        let r = residual_loss(&field, &set.tau_r, &spec).unwrap();
        let g = interface_loss(&field, &set.tau_gamma, &spec).unwrap();
        worst = worst.max(r).max(g);
        parts.push(format!("{p} residual {r:.1e} interface {g:.1e}"));
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!("{} (limit 1e-10)", parts.join(", ")),
    }
}

fn translation_invariance() -> Outcome {
    let spec = builtin(ProblemName::SmoothSanity);
    let (dom, set) = separated_set(
        &spec,
        SampleCounts {
            n_f: 2000,
            n_b: 200,
            n_gamma: 1000,
        },
        8,
    );
    let norms = compute_normalizers(&set, &spec).unwrap();
    let b = total_loss(
        Method::Ds,
        &exact_field(&spec, &dom),
        &set,
        &spec,
        LossWeights::default(),
        norms,
    )
    .unwrap();
    Outcome {
        pass: b.total < 1e-9,
        detail: format!(
            "separated smooth problem, ds total on the exact field {:.2e} (limit 1e-9)",
            b.total
        ),
    }
}

fn optimizer_suite() -> Outcome {
    let n = 10;
    let a = spd(n, 100.0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let planted: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let b: Vec<f64> = a
        .iter()
        .map(|r| r.iter().zip(&planted).map(|(p, q)| p * q).sum())
        .collect();
    let star = solve(&a, &b);
    let (x, rq) = lbfgs_run(
        quadratic(a, star.clone()),
        &vec![0.0; n],
        &exact_line_search_cfg(),
    )
    .unwrap();
    let quad_err = distance(&x, &star);

    let rosen = |x: &[f64]| -> dspinn::Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        Ok((
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
            vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ],
        ))
    };
    let (xr, _) = lbfgs_run(rosen, &[-1.2, 1.0], &LbfgsConfig::default()).unwrap();
    let rosen_err = distance(&xr, &[1.0, 1.0]);

    let cfg = AdamConfig {
        iterations: 1,
        ..Default::default()
    };
    let (t, _) = adam_run(|t| Ok((t[0], vec![1.0])), &[2.0], &cfg).unwrap();
    let adam_err = (t[0] - (2.0 - 1e-3 / (1.0 + 1e-8))).abs();
    Outcome {
        pass: quad_err < 1e-10 && rq.iterations_used <= 15 && rosen_err < 1e-6 && adam_err < 1e-12,
        detail: format!(
            "quadratic n=10 error {quad_err:.1e} in {} iterations; Rosenbrock error {rosen_err:.1e}; \
             Adam first step error {adam_err:.1e}",
            rq.iterations_used
        ),
    }
}

fn accept_profile() -> Profile {
    std::env::var("DSPINN_ACCEPT_PROFILE")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(Profile::Full)
}

fn accept_seeds() -> u64 {
    std::env::var("DSPINN_ACCEPT_SEEDS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(5)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median relative error over seeds; failed runs count as infinite error.
fn median_error(
    problem: ProblemName,
    method: Method,
    d: Option<f64>,
    profile: Profile,
    seeds: u64,
) -> f64 {
    let errors = (0..seeds)
        .map(|seed| {
            let mut cfg = TrainConfig::new(problem, method, profile);
            cfg.seed = seed;
            cfg.d = d;
            let e = match train(&cfg) {
                Ok(o) if o.metrics.status == RunStatus::Completed => {
                    o.metrics.rel_l2.unwrap_or(f64::INFINITY)
                }
                _ => f64::INFINITY,
            };
            eprintln!("  {problem} {method} d={d:?} seed {seed}: relative L2 {e:.3e}");
            e
        })
        .collect();
    median(errors)
}

fn accuracy(problem: ProblemName, ds_max: f64, nds_max: f64, std_min: f64) -> Outcome {
    let (profile, seeds) = (accept_profile(), accept_seeds());
    let ds = median_error(problem, Method::Ds, None, profile, seeds);
    let nds = median_error(problem, Method::Nds, None, profile, seeds);
    let std = median_error(problem, Method::Std, None, profile, seeds);
    Outcome {
        pass: ds <= ds_max && nds <= nds_max && std >= std_min,
        detail: format!(
            "{problem} medians over {seeds} seeds ({profile:?} profile): ds {ds:.2e} (<= {ds_max:e}), \
             nds {nds:.2e} (<= {nds_max:e}), std {std:.2e} (>= {std_min:e}); ordering std > ds >= nds {}",
            if std > ds && ds >= nds { "holds" } else { "does not hold" }
        ),
    }
}

fn separation_sweep() -> Outcome {
    let profile = match std::env::var("DSPINN_ACCEPT_PROFILE") {
        Ok(_) => accept_profile(),
        Err(_) => Profile::Ci,
    };
    let seeds = accept_seeds();
    let med = |d: f64| median_error(ProblemName::Ex1, Method::Nds, Some(d), profile, seeds);
    let (small, mid, large) = (med(1e-3), med(0.1), med(50.0));
    let (r_small, r_large) = (small / mid, large / mid);
    Outcome {
        pass: r_small >= 10.0 && r_large >= 10.0,
        detail: format!(
            "ex1 nds median relative L2 over {seeds} seeds ({profile:?} profile): d=1e-3 {small:.2e}, \
             d=0.1 {mid:.2e}, d=50 {large:.2e}; ratios {r_small:.1}x and {r_large:.1}x (need >= 10x)"
        ),
    }
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let only_slow = args.iter().any(|a| a == "--ignored");
    let with_slow = only_slow || args.iter().any(|a| a == "--include-ignored");
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }

    let criteria: [(u32, &str, bool, Check); 9] = [
        (1, "derivative correctness", false, derivative_correctness),
        (2, "exact-solution oracles", false, exact_solution_oracles),
        (3, "ex1 accuracy", true, || {
            accuracy(ProblemName::Ex1, 1e-1, 5e-3, 1e-1)
        }),
        (4, "ex3 accuracy", true, || {
            accuracy(ProblemName::Ex3, 1e-2, 5e-3, 1e-1)
        }),
        (5, "ex4 accuracy", true, || {
            accuracy(ProblemName::Ex4, 2e-2, 5e-3, 1.0)
        }),
        (6, "ex5 accuracy", true, || {
            accuracy(ProblemName::Ex5, 1e-2, 5e-3, 1e-1)
        }),
        (7, "separation-distance sweep", true, separation_sweep),
        (8, "translation invariance", false, translation_invariance),
        (9, "optimizer suite", false, optimizer_suite),
    ];

    let mut failed = 0;
    for (id, name, slow, check) in criteria {
        if (slow && !with_slow) || (!slow && only_slow) {
            println!("SKIP criterion {id} ({name}): long training run, use --include-ignored");
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
