use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polydisc::normlab::experiments::{self as ex, EnsembleConfig, ProbeMode, SmallSetConfig, VerifyConfig};
use polydisc::normlab::{write_ratios_csv, ExperimentReport, GridSpec};
use polydisc::scheme::LPolicy;
use polydisc::Error;

#[derive(Parser, Debug)]
#[command(name = "polydisc", version, about = "Interpolation and sampling experiments on the polydisc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Work-unit limit; larger estimates abort with exit code 2.
    #[arg(long, global = true, default_value_t = 1e9)]
    budget: f64,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for data-parallel kernels.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "K")]
    kk: Option<usize>,
    #[arg(long)]
    d: Option<u32>,
    /// omega | equispaced | custom:<file>
    #[arg(long, default_value = "omega")]
    grid: String,
    /// per-run | global-bound | log-k | <number>
    #[arg(long = "l-policy", default_value = "per-run")]
    l_policy: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariant suite for the interpolation scheme.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        targets: usize,
        #[arg(long = "perturb-a0", default_value_t = 0.0, hide = true)]
        perturb_a0: f64,
    },
    /// Grid-to-torus sup-norm ratios and derived checks.
    Constant {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        ensemble: usize,
        /// Also write the ratios as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// L^p transfer from the grid to the torus.
    Lp {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 200)]
        ensemble: usize,
    },
    /// Block-design sampling set.
    Smallset {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        targets: usize,
    },
    /// Sign-vector lower-bound probe.
    Probe {
        #[arg(long, default_value_t = 12)]
        n: usize,
        /// hypercube | random
        #[arg(long, default_value = "random")]
        points: String,
        #[arg(long, default_value_t = 100)]
        size: usize,
        /// Random sign samples; exhaustive when absent.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Nearly coincident nodes.
    Demo {
        #[arg(long = "K", default_value_t = 3)]
        kk: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Extra rows, each halving ε.
        #[arg(long, default_value_t = 0)]
        halvings: usize,
    },
}

struct Setup {
    n: usize,
    kk: usize,
    d: u32,
    grid: GridSpec,
    l_policy: LPolicy,
}

impl Common {
    fn resolve(&self, n: usize, kk: usize, d: u32) -> Result<Setup, Error> {
        Ok(Setup {
            n: self.n.unwrap_or(n),
            kk: self.kk.unwrap_or(kk),
            d: self.d.unwrap_or(d),
            grid: GridSpec::parse(&self.grid)?,
            l_policy: self.l_policy.parse()?,
        })
    }
}

fn ensemble_config(s: &Setup, ensemble: usize, seed: u64, budget: f64) -> Result<EnsembleConfig, Error> {
    let cost = ensemble as f64 * (s.kk as f64).powi(s.n as i32) * 12.0;
    Error::check_budget(cost, budget)?;
    Ok(EnsembleConfig { n: s.n, d: s.d, k: s.kk, grid: s.grid.clone(), ensemble, seed, l_policy: s.l_policy })
}

fn run(cli: &Cli) -> Result<ExperimentReport, Error> {
    let (seed, budget) = (cli.seed, cli.budget);
    match &cli.command {
        Command::Verify { common, targets, perturb_a0 } => {
            let s = common.resolve(3, 3, 2)?;
            ex::verify_suite(&VerifyConfig {
                n: s.n,
                k: s.kk,
                d: s.d,
                grid: s.grid,
                seed,
                l_policy: s.l_policy,
                targets: *targets,
                a0_shift: *perturb_a0,
                budget,
            })
        }
        Command::Constant { common, ensemble, csv } => {
            let s = common.resolve(2, 3, 2)?;
            let cfg = ensemble_config(&s, *ensemble, seed, budget)?;
            let (mut r, ratios) = ex::empirical_constant(&cfg)?;
            if let Some(path) = csv {
                write_ratios_csv(path, "ratio", &ratios)?;
            }
            r.absorb("homogeneous", ex::homogeneous_part_ensemble(&cfg)?);
            r.absorb("coefficient_quotient", ex::coefficient_quotient_ensemble(&cfg)?);
            r.absorb("real_grid", ex::real_grid_ensemble(&cfg)?);
            let ks: Vec<usize> = (2..=32).collect();
            r.absorb("envelope", ex::constant_envelope(&ks, &[1, 2])?);
            r.finish();
            Ok(r)
        }
        Command::Lp { common, p, ensemble } => {
            let s = common.resolve(2, 3, 2)?;
            if *p == 0 || p % 2 == 1 {
                return Err(Error::InvalidInput(format!("p must be a positive even integer, got {p}")));
            }
            Ok(ex::lp_transfer(&ensemble_config(&s, *ensemble, seed, budget)?, *p)?.0)
        }
        Command::Smallset { common, k, samples, targets } => {
            let s = common.resolve(4, 3, 2)?;
            Error::check_budget(*samples as f64, budget)?;
            ex::smallset_experiment(&SmallSetConfig {
                n: s.n,
                k: *k,
                kk: s.kk,
                d: s.d,
                seed,
                mc_samples: *samples,
                targets: *targets,
                l_policy: s.l_policy,
                budget,
            })
        }
        Command::Probe { n, points, size, samples } => {
            let pts = match points.as_str() {
                "hypercube" => {
                    if *n > 16 {
                        return Err(Error::InvalidInput("hypercube probes need n ≤ 16".into()));
                    }
                    ex::hypercube(*n)
                }
                "random" => ex::random_points(*size, *n, seed),
                other => return Err(Error::InvalidInput(format!("unknown point set {other:?}"))),
            };
            let mode = match samples {
                Some(s) => ProbeMode::Random { samples: *s },
                None => ProbeMode::Exhaustive,
            };
            let visits = match mode {
                ProbeMode::Exhaustive => 2f64.powi(*n as i32),
                ProbeMode::Random { samples } => samples as f64,
            };
            Error::check_budget(visits * pts.len() as f64 * *n as f64, budget)?;
            ex::probe_report(&pts, mode, seed, points)
        }
        Command::Demo { kk, n, eps, halvings } => {
            let list: Vec<f64> = (0..=*halvings).map(|i| eps / 2f64.powi(i as i32)).collect();
            Ok(ex::degeneracy_demo(*kk, &list, *n)?.0)
        }
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(f())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = with_threads(cli.threads, || run(&cli)).and_then(|r| r);
    let report = match outcome {
        Ok(r) => r,
        Err(e @ Error::Budget { .. }) => {
            eprintln!("budget: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = report.write(path) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        }
        None => println!("{}", report.to_json()),
    }
    match report.first_failure() {
        None => ExitCode::SUCCESS,
        Some(a) => {
            eprintln!("assertion failed: {} (lhs {}, rhs {})", a.name, a.lhs, a.rhs);
            ExitCode::from(1)
        }
    }
}
