use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vodcache::adaptive::SolverConfig;
use vodcache::experiment::SystemParams;
use vodcache::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "vodcache", version, about = "Content placement simulator for cache-assisted video on demand")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a topology and a demand and write them as TSV files.
    Gen(GenArgs),
    /// Emit a single-video service curve.
    Curve(CurveArgs),
    /// Run a multi-video placement policy and evaluate it.
    Place(PlaceArgs),
    /// Evaluate a stored placement on a stored topology and demand.
    Evaluate(EvaluateArgs),
    /// Regenerate the comparison table or a figure's data.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[arg(long, default_value_t = 50)]
    pub caches: usize,
    #[arg(long, default_value_t = 40_000)]
    pub peers: usize,
    /// Connections per peer.
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    #[arg(long, default_value_t = 2000)]
    pub videos: usize,
    /// Zipf exponent of video popularity.
    #[arg(long, default_value_t = 0.8)]
    pub zipf: f64,
    /// Total copies stored over all caches (default: 2.5 times the catalog).
    #[arg(long)]
    pub budget: Option<f64>,
    /// Copies per cache; must agree with --budget when both are given.
    #[arg(long)]
    pub per_cache: Option<f64>,
}

impl SystemArgs {
    pub fn params(&self) -> Result<SystemParams> {
        let positive = [self.caches, self.peers, self.degree, self.videos];
        if positive.contains(&0) {
            return Err(Error::Parameter("caches, peers, degree and videos must be positive".into()));
        }
        if self.degree > self.caches {
            return Err(Error::Parameter(format!(
                "degree {} exceeds the {} caches",
                self.degree, self.caches
            )));
        }
        if !(self.zipf >= 0.0 && self.zipf.is_finite()) {
            return Err(Error::Parameter("zipf exponent must be finite and non-negative".into()));
        }
        let caches = self.caches as f64;
        let budget = match (self.budget, self.per_cache) {
            (Some(b), Some(k)) if (b - k * caches).abs() > 1e-9 * b.abs().max(1.0) => {
                return Err(Error::Parameter(format!(
                    "--budget {b} disagrees with --per-cache {k} over {} caches",
                    self.caches
                )))
            }
            (Some(b), _) => b,
            (None, Some(k)) => k * caches,
            (None, None) => 2.5 * self.videos as f64,
        };
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::Parameter("budget must be positive".into()));
        }
        if budget > caches * self.videos as f64 {
            return Err(Error::Infeasible(format!(
                "budget {budget} exceeds the {} slots of {} caches holding every video",
                caches * self.videos as f64,
                self.caches
            )));
        }
        Ok(SystemParams {
            caches: self.caches,
            peers: self.peers,
            degree: self.degree,
            videos: self.videos,
            zipf_exponent: self.zipf,
            budget,
        })
    }
}

/// Overrides for the primal-dual solver; unset fields keep their defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Download-rate step.
    #[arg(long = "solver.delta")]
    pub delta: Option<f64>,
    /// Edge-price step.
    #[arg(long = "solver.kappa")]
    pub kappa: Option<f64>,
    /// Storage step.
    #[arg(long = "solver.iota")]
    pub iota: Option<f64>,
    /// Storage-price step.
    #[arg(long = "solver.nu")]
    pub nu: Option<f64>,
    #[arg(long = "solver.max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long = "solver.tol-objective")]
    pub tol_objective: Option<f64>,
    #[arg(long = "solver.tol-feasibility")]
    pub tol_feasibility: Option<f64>,
    #[arg(long = "solver.warmup")]
    pub warmup: Option<usize>,
    #[arg(long = "solver.window")]
    pub window: Option<usize>,
    #[arg(long = "solver.smoothing")]
    pub smoothing: Option<f64>,
    #[arg(long = "solver.eval-every")]
    pub eval_every: Option<usize>,
    /// Write a convergence trace row every this many iterations.
    #[arg(long = "solver.trace-every")]
    pub trace_every: Option<usize>,
    /// Wall-clock limit in seconds for the joint solver.
    #[arg(long = "solver.time-limit", default_value_t = 600.0)]
    pub time_limit: f64,
}

impl SolverArgs {
    pub fn any_set(&self) -> bool {
        self.delta.is_some()
            || self.kappa.is_some()
            || self.iota.is_some()
            || self.nu.is_some()
            || self.max_iters.is_some()
            || self.tol_objective.is_some()
            || self.tol_feasibility.is_some()
            || self.warmup.is_some()
            || self.window.is_some()
            || self.smoothing.is_some()
            || self.eval_every.is_some()
            || self.trace_every.is_some()
    }

    pub fn apply(&self, mut config: SolverConfig) -> Result<SolverConfig> {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { config.$target = v; })*
            };
        }
        set!(
            delta => step_rate,
            kappa => step_rate_price,
            iota => step_storage,
            nu => step_storage_price,
            max_iters => max_iters,
            tol_objective => tol_objective,
            tol_feasibility => tol_feasibility,
            warmup => warmup,
            window => window,
            smoothing => smoothing,
            eval_every => eval_every
        );
        if self.trace_every.is_some() {
            config.trace_every = self.trace_every;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Seed; drawn at random and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurvePolicy {
    Fw,
    Ff,
    Aw,
    Af,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, value_enum)]
    pub policy: CurvePolicy,
    #[arg(long, default_value_t = 50)]
    pub caches: usize,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    /// Peers requesting the video.
    #[arg(long, default_value_t = 20)]
    pub requesters: usize,
    /// Emit only the row at this many copies.
    #[arg(long)]
    pub copies: Option<f64>,
    /// Also write the analytic bound next to the curve (fw, aw).
    #[arg(long)]
    pub bounds: bool,
    /// Random graphs averaged for the adaptive curves.
    #[arg(long, default_value_t = 200)]
    pub mc_seeds: usize,
    /// Random graphs averaged for the adaptive fractional curve.
    #[arg(long, default_value_t = 5)]
    pub af_seeds: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Permit adaptive fractional sweeps on large videos.
    #[arg(long)]
    pub allow_slow: bool,
    /// Output file; `-` for standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlacePolicy {
    Fw,
    Ff,
    Aw,
    Af,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct PlaceArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_enum)]
    pub policy: PlacePolicy,
    /// With `--policy hybrid`: fixed fractional for exactly this many of the
    /// most popular videos instead of the hull-based choice.
    #[arg(long)]
    pub hybrid_threshold: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Topology file to use instead of sampling one.
    #[arg(long, requires = "demand")]
    pub topology: Option<PathBuf>,
    /// Demand file to use instead of sampling one.
    #[arg(long, requires = "topology")]
    pub demand: Option<PathBuf>,
    /// Keep whole placements unbalanced (plain lowest-index tie-breaking).
    #[arg(long)]
    pub no_balance: bool,
    /// Also run adaptive fractional and report the fraction of it achieved.
    #[arg(long)]
    pub with_af: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long)]
    pub demand: PathBuf,
    #[arg(long)]
    pub placement: PathBuf,
    /// Write per-video served rates to this CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Table1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    All,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: Target,
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub mc_seeds: usize,
    #[arg(long, default_value_t = 5)]
    pub af_seeds: usize,
    /// Include adaptive fractional curves for the 2000-requester video.
    #[arg(long)]
    pub allow_slow: bool,
    #[arg(long)]
    pub no_balance: bool,
    #[arg(long, default_value = "reproduce")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}
