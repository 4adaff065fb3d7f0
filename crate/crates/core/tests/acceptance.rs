use std::time::Instant;

use polydisc::interp::table::reproduction_basis;
use polydisc::interp::{coefficients, residual_curve, InterpolationPlan};
use polydisc::normlab::experiments::{self as ex, EnsembleConfig, ProbeMode, SmallSetConfig};
use polydisc::normlab::GridSpec;
use polydisc::poly::{admissible_monomials, random_disc_point, random_polynomial};
use polydisc::scheme::{LPolicy, NodeScheme};
use polydisc::vander::exact;
use polydisc::vander::NodeVector;
use polydisc::{Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn random_grid(rng: &mut ChaCha8Rng, n: usize, k: usize, omega: bool, eta: f64) -> Result<Vec<NodeScheme>> {
    (0..n)
        .map(|_| {
            let v = if omega { NodeVector::roots_of_unity(k)? } else { ex::random_nodes(rng, k, eta) };
            Ok(NodeScheme::coordinate(v))
        })
        .collect()
}

fn random_target(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| random_disc_point(rng)).collect()
}

fn moments() -> Result<Outcome> {
    let (alpha, r) = ex::moment_identities(500, 8, 0.2, 11)?;
    outcome(alpha <= 1e-10 && r <= 1e-12, format!("max |E[r w^a] - x^a/D| = {alpha:.2e}, max |E[r] - 1/D| = {r:.2e}"))
}

fn partitions() -> Result<Outcome> {
    outcome(ex::partition_probabilities(5, 4), "n, m <= 5, support <= 4, exact rationals")
}

fn reproduction() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut worst, mut worst_l1, mut monomials) = (0.0f64, 0.0f64, 0usize);
    for i in 0..50 {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(2..=4);
        let d = rng.gen_range(1..=3);
        let schemes = random_grid(&mut rng, n, k, i % 2 == 0, 0.3)?;
        for _ in 0..5 {
            let z = random_target(&mut rng, n);
            let plan = InterpolationPlan::build(schemes.clone(), d, &z, LPolicy::PerRun)?;
            let t = coefficients(&plan)?;
            let basis = reproduction_basis(&plan);
            monomials += basis.len();
            worst = worst.max(t.reproduction_residual(&basis));
            worst_l1 = worst_l1.max(t.l1 / plan.l1_bound());
        }
    }
    outcome(
        worst <= 1e-9 && worst_l1 <= 1.0,
        format!("{monomials} monomial checks, max residual {worst:.2e}, max l1/bound {worst_l1:.4}"),
    )
}

fn residual_curves() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut extrap, mut affine) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let d = 2 + (i % 2) as u32;
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(2..=4);
        let schemes = random_grid(&mut rng, n, k, i % 4 < 2, 0.3)?;
        let z = random_target(&mut rng, n);
        let plan = InterpolationPlan::build(schemes, d, &z, LPolicy::PerRun)?;
        let pool = admissible_monomials(n, d, k as u32).len();
        let f = random_polynomial(&mut rng, n, d, k as u32, pool.min(6))?;
        let ms: Vec<u64> = (d as u64..=d as u64 + 6).collect();
        let curve = residual_curve(&plan, &f, &ms)?;
        extrap = extrap.max(curve.extrapolation_error);
        affine = affine.max(curve.affine_residual);
    }
    outcome(
        extrap <= 1e-8 && affine <= 1e-10,
        format!("max extrapolation error {extrap:.2e}, max affine residual {affine:.2e}"),
    )
}

fn weights() -> Result<Outcome> {
    let d2 = exact::elimination_weights(2)?;
    let d3 = exact::elimination_weights(3)?;
    let ok = d2 == vec![exact::rational(-2, 1), exact::rational(3, 1)]
        && d3 == vec![exact::rational(9, 2), exact::rational(-16, 1), exact::rational(25, 2)];
    let show = |w: &[num_rational::BigRational]| w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    outcome(ok, format!("d=2: ({}), d=3: ({})", show(&d2), show(&d3)))
}

fn envelope() -> Result<Outcome> {
    let ks: Vec<usize> = (2..=32).collect();
    let r = ex::constant_envelope(&ks, &[1, 2])?;
    let r2 = |d: u32| r.measurements[&format!("d{d}")]["r2"].as_f64().unwrap_or(f64::NAN);
    outcome(r.passed(), format!("R^2 = {:.4} (d=1), {:.4} (d=2)", r2(1), r2(2)))
}

fn small_sets() -> Result<Outcome> {
    let r = ex::smallset_experiment(&SmallSetConfig {
        n: 4,
        k: 2,
        kk: 3,
        d: 2,
        seed: 7,
        mc_samples: 100_000,
        targets: 5,
        l_policy: LPolicy::PerRun,
        budget: polydisc::interp::DEFAULT_BUDGET,
    })?;
    let size = r.measurements["set_size"].as_u64().unwrap_or(0);
    let mc = &r.measurements["det_second_moment"];
    let detail = format!(
        "{size} points vs {} grid points, |detP| = {:.4}, E|detP|^2 = {:.1} +- {:.1}",
        r.measurements["grid_size"],
        r.measurements["design"]["detP"]["re"].as_f64().unwrap_or(0.0).hypot(
            r.measurements["design"]["detP"]["im"].as_f64().unwrap_or(0.0)
        ),
        mc["mean"].as_f64().unwrap_or(f64::NAN),
        mc["std_err"].as_f64().unwrap_or(f64::NAN),
    );
    outcome(r.passed() && size == 36, detail)
}

fn lp_transfer() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for p in [2, 4] {
        for (n, k, d) in [(1, 4, 3), (2, 3, 2), (2, 4, 3), (3, 2, 2), (3, 4, 2)] {
            let cfg = EnsembleConfig { n, d, k, grid: GridSpec::Omega, ensemble: 200, seed: 41, l_policy: LPolicy::PerRun };
            let (r, ratios) = ex::lp_transfer(&cfg, p)?;
            pass &= r.passed();
            let bound = r.constants["lp_bound"].as_f64().unwrap_or(f64::NAN);
            worst = worst.max(ratios.iter().copied().fold(0.0, f64::max) / bound);
        }
    }
    outcome(pass, format!("max ratio / bound {worst:.4}, Parseval within 1e-10"))
}

fn degeneracy() -> Result<Outcome> {
    let (first, rows) = ex::degeneracy_demo(3, &[1e-3], 1)?;
    let eps: Vec<f64> = (0..=14).map(|i| 0.1 / 2f64.powi(i)).collect();
    let (sweep, swept) = ex::degeneracy_demo(3, &eps, 1)?;
    outcome(
        first.passed() && sweep.passed() && rows[0].certified_ratio >= 500.0,
        format!(
            "eps=1e-3 certified {:.1} >= 500; bound doubles over eps {:.0e}..{:.1e}",
            rows[0].certified_ratio,
            swept[0].eps,
            swept[swept.len() - 1].eps
        ),
    )
}

fn probe() -> Result<Outcome> {
    let cube = ex::lower_bound_probe(&ex::hypercube(12), ProbeMode::Exhaustive, 0)?;
    let pts = ex::random_points(100, 12, 51);
    let lex = ex::lower_bound_probe(&pts, ProbeMode::Exhaustive, 0)?;
    let gray = ex::lower_bound_probe_gray(&pts)?;
    outcome(
        cube.delta_hat == 0.5 && lex.delta_hat == gray.delta_hat && lex.argmin == gray.argmin,
        format!("hypercube delta = {}, random delta = {} / {}", cube.delta_hat, lex.delta_hat, gray.delta_hat),
    )
}

type Criterion = (&'static str, Option<f64>, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("moment identities", Some(10.0), moments),
        ("partition probabilities", Some(30.0), partitions),
        ("interpolation reproduction", Some(300.0), reproduction),
        ("residual-curve structure", None, residual_curves),
        ("elimination weights", None, weights),
        ("constant envelope", None, envelope),
        ("small sets", Some(300.0), small_sets),
        ("L^p transfer", None, lp_transfer),
        ("degeneracy demo", None, degeneracy),
        ("lower-bound probe", None, probe),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = limit.map_or(true, |l| secs < l);
        let limit_note = limit.map_or(String::new(), |l| format!(" (limit {l} s)"));
        let ok = pass && in_time;
        failures += usize::from(!ok);
        println!(
            "{} criterion {}: {name}: {detail}; {secs:.2} s{limit_note}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
