
use vodcache::allocate::{analytic_curve, build_curves, concave_hull, CurveOptions, HybridCurve, Policy};
use vodcache::analytic::ff_curve;
use vodcache::experiment::{
    af_single_video_curve, comparison_table, run_strategy, single_video_curves, RunOptions, SingleVideoPoint, Strategy,
    System, SystemParams,
};
use vodcache::io::{self, Header};
use vodcache::model::{sample_topology, Demand};
use vodcache::Result;

use crate::args::{ReproduceArgs, Target};
use crate::commands::{run_options, sweep_solver, AF_REQUESTER_GUARD};
use crate::output::{resolve_seed, system_header, write_file};
use crate::Status;

struct Ctx<'a> {
    args: &'a ReproduceArgs,
    params: SystemParams,
    seed: u64,
    options: RunOptions,
    system: Option<System>,
}

impl Ctx<'_> {
    fn system(&mut self) -> Result<&System> {
        if self.system.is_none() {
            self.system = Some(System::generate(self.params.clone(), self.seed)?);
        }
        Ok(self.system.as_ref().expect("just generated"))
    }

    fn header(&self, target: &str) -> Header {
        system_header(target, &self.params, self.seed)
    }

    fn single_header(&self, target: &str, requesters: usize) -> Header {
        Header::new(target)
            .with("caches", self.params.caches)
            .with("degree", self.params.degree)
            .with("requesters", requesters)
            .with("mc_seeds", self.args.mc_seeds)
            .with("seed", self.seed)
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.args.out.join(format!("{name}.csv"))
    }
}

pub fn run(args: &ReproduceArgs) -> Result<Status> {
    let params = args.system.params()?;
    let seed = resolve_seed(args.seed);
    let options = run_options(&params, &args.solver, !args.no_balance)?;
    let mut ctx = Ctx {
        args,
        params,
        seed,
        options,
        system: None,
    };
    let targets: Vec<Target> = match args.target {
        Target::All => vec![
            Target::Table1,
            Target::Fig2,
            Target::Fig3,
            Target::Fig4,
            Target::Fig5,
            Target::Fig6,
            Target::Fig7,
            Target::Fig8,
            Target::Fig9,
            Target::Fig10,
            Target::Fig11,
        ],
        t => vec![t],
    };
    let mut status = Status::Done;
    for target in targets {
        if let Status::NotConverged = run_target(&mut ctx, target)? {
            status = Status::NotConverged;
        }
    }
    Ok(status)
}

fn run_target(ctx: &mut Ctx, target: Target) -> Result<Status> {
    match target {
        Target::Table1 => return table1(ctx),
        Target::Fig2 => fig2(ctx)?,
        Target::Fig3 => fig3(ctx)?,
        Target::Fig4 => fig4(ctx)?,
        Target::Fig5 => fig5(ctx)?,
        Target::Fig6 => comparison(ctx, "fig6", &[20, 100])?,
        Target::Fig7 => comparison(ctx, "fig7", &[2000])?,
        Target::Fig8 => fig8(ctx)?,
        Target::Fig9 => return fig9(ctx),
        Target::Fig10 | Target::Fig11 => hybrid_choice(ctx, target)?,
        Target::All => unreachable!("expanded by the caller"),
    }
    Ok(Status::Done)
}

fn table1(ctx: &mut Ctx) -> Result<Status> {
    let options = ctx.options.clone();
    let header = ctx.header("table1");
    let rows = comparison_table(ctx.system()?, &options)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.strategy.to_string(),
                r.served.to_string(),
                format!("{:.4}", r.fraction_of_optimal),
                r.converged.to_string(),
                format!("{:.3}", r.elapsed.as_secs_f64()),
            ]
        })
        .collect();
    let columns = ["policy", "served", "fraction_of_optimal", "converged", "seconds"];
    write_file(&ctx.path("table1"), |w| io::write_table(w, &header, &columns, &cells))?;
    println!("{:<22} {:>10} {:>9}", "policy", "served", "of AF");
    for r in &rows {
        println!(
            "{:<22} {:>10.1} {:>8.1}%{}",
            r.strategy.to_string(),
            r.served,
            100.0 * r.fraction_of_optimal,
            if r.converged { "" } else { "  (not converged)" }
        );
    }
    Ok(if rows.iter().all(|r| r.converged) {
        Status::Done
    } else {
        Status::NotConverged
    })
}

fn single(ctx: &Ctx, requesters: usize, replications: usize) -> Result<Vec<SingleVideoPoint>> {
    single_video_curves(ctx.params.caches, ctx.params.degree, requesters, replications, ctx.seed)
}

fn af_curve(ctx: &Ctx, requesters: usize) -> Result<Vec<f64>> {
    let p = &ctx.params;
    let solver = sweep_solver(&ctx.args.solver, requesters)?;
    af_single_video_curve(p.caches, p.degree, requesters, ctx.args.af_seeds, ctx.seed, solver)
}

fn write(ctx: &Ctx, name: &str, header: &Header, columns: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    write_file(&ctx.path(name), |w| io::write_table(w, header, columns, &rows))
}

fn fig2(ctx: &mut Ctx) -> Result<()> {
    let pts = single(ctx, 20, 1)?;
    let rows = pts
        .iter()
        .map(|p| vec![p.copies.to_string(), p.fixed_whole.to_string(), p.fixed_whole_bound.to_string()])
        .collect();
    let header = ctx.single_header("fig2", 20);
    write(ctx, "fig2", &header, &["copies", "fixed_whole", "fixed_whole_bound"], rows)
}

fn fig3(ctx: &mut Ctx) -> Result<()> {
    let (h, l) = (ctx.params.caches, ctx.params.degree);
    let rows = (0..=h * l)
        .map(|k| {
            let c = k as f64 / l as f64;
            vec![c.to_string(), ff_curve(h, l, 20.0, c).to_string()]
        })
        .collect();
    let header = ctx.single_header("fig3", 20);
    write(ctx, "fig3", &header, &["copies", "fixed_fractional"], rows)
}

fn fig4(ctx: &mut Ctx) -> Result<()> {
    let pts = single(ctx, 20, ctx.args.mc_seeds)?;
    let rows = pts
        .iter()
        .map(|p| {
            vec![
                p.copies.to_string(),
                p.adaptive_whole_mean.to_string(),
                p.adaptive_whole_bound.to_string(),
                p.fixed_whole.to_string(),
            ]
        })
        .collect();
    let header = ctx.single_header("fig4", 20);
    let columns = ["copies", "adaptive_whole_mean", "adaptive_whole_bound", "fixed_whole"];
    write(ctx, "fig4", &header, &columns, rows)
}

fn fig5(ctx: &mut Ctx) -> Result<()> {
    let af = af_curve(ctx, 20)?;
    // same graphs as the fractional sweep
    let pts = single(ctx, 20, ctx.args.af_seeds)?;
    let rows = pts
        .iter()
        .map(|p| {
            vec![
                p.copies.to_string(),
                af[p.copies].to_string(),
                p.adaptive_whole_mean.to_string(),
            ]
        })
        .collect();
    let header = ctx.single_header("fig5", 20).with("mc_seeds", ctx.args.af_seeds);
    write(ctx, "fig5", &header, &["copies", "adaptive_fractional", "adaptive_whole_mean"], rows)
}

fn comparison(ctx: &mut Ctx, name: &str, sizes: &[usize]) -> Result<()> {
    let mut rows = Vec::new();
    for &n in sizes {
        let pts = single(ctx, n, ctx.args.mc_seeds)?;
        let af = if n <= AF_REQUESTER_GUARD || ctx.args.allow_slow {
            Some(af_curve(ctx, n)?)
        } else {
            eprintln!("note: adaptive fractional omitted for {n} requesters; pass --allow-slow to include it");
            None
        };
        for p in &pts {
            rows.push(vec![
                n.to_string(),
                p.copies.to_string(),
                p.fixed_whole.to_string(),
                p.fixed_fractional.to_string(),
                p.adaptive_whole_mean.to_string(),
                af.as_ref().map(|a| a[p.copies].to_string()).unwrap_or_default(),
            ]);
        }
    }
    let header = Header::new(name)
        .with("caches", ctx.params.caches)
        .with("degree", ctx.params.degree)
        .with("mc_seeds", ctx.args.mc_seeds)
        .with("af_seeds", ctx.args.af_seeds)
        .with("seed", ctx.seed);
    let columns = [
        "requesters",
        "copies",
        "fixed_whole",
        "fixed_fractional",
        "adaptive_whole",
        "adaptive_fractional",
    ];
    write(ctx, name, &header, &columns, rows)
}

fn fig8(ctx: &mut Ctx) -> Result<()> {
    let (h, l, n) = (ctx.params.caches, ctx.params.degree, 200);
    let topology = sample_topology(h, n, l, ctx.seed)?;
    let demand = Demand::from_requests(1, 0.0, vec![0; n], ctx.seed)?;
    let aw = build_curves(&topology, &demand, Policy::AdaptiveWhole, &CurveOptions::default())?;
    let ff = analytic_curve(0, Policy::FixedFractional, h, l, n as f64, 1.0)?;
    let curve = HybridCurve::new(0, &ff.values, &aw[0].values);
    let hull = concave_hull(&curve.combined);
    let rows = (0..curve.combined.len())
        .map(|c| {
            vec![
                c.to_string(),
                curve.fixed_fractional[c].to_string(),
                curve.adaptive_whole[c].to_string(),
                curve.combined[c].to_string(),
                hull.values[c].to_string(),
            ]
        })
        .collect();
    let header = Header::new("fig8")
        .with("caches", h)
        .with("degree", l)
        .with("requesters", n)
        .with("seed", ctx.seed);
    let columns = ["copies", "fixed_fractional", "adaptive_whole", "max", "hull"];
    write(ctx, "fig8", &header, &columns, rows)?;
    if let Some(t) = curve.crossover {
        println!("crossover={t}");
    }
    if let Some((a, b)) = curve.linear_interval {
        println!("linear_interval={a}..{b}");
    }
    println!("hull_gap={} at {}", hull.gap, hull.gap_at);
    Ok(())
}

fn fig9(ctx: &mut Ctx) -> Result<Status> {
    let options = ctx.options.clone();
    let header = ctx.header("fig9");
    let system = ctx.system()?;
    let mut columns = vec!["video_id".to_string()];
    let mut series = Vec::new();
    let mut converged = true;
    for policy in Policy::ALL {
        let run = run_strategy(system, Strategy::Single(policy), &options)?;
        converged &= run.allocation.converged;
        columns.push(policy.to_string());
        series.push(run.allocation.copies);
    }
    let rows = (0..system.params.videos)
        .map(|m| {
            std::iter::once(m.to_string())
                .chain(series.iter().map(|s| s[m].to_string()))
                .collect()
        })
        .collect();
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    write(ctx, "fig9", &header, &columns, rows)?;
    Ok(if converged { Status::Done } else { Status::NotConverged })
}

fn hybrid_choice(ctx: &mut Ctx, target: Target) -> Result<()> {
    let options = ctx.options.clone();
    let name = if target == Target::Fig10 { "fig10" } else { "fig11" };
    let header = ctx.header(name);
    let run = run_strategy(ctx.system()?, Strategy::Hybrid, &options)?;
    let policies = run.allocation.policy.clone().expect("hybrid assigns policies");
    let rows = policies
        .iter()
        .enumerate()
        .map(|(m, p)| {
            let theta = if *p == Policy::FixedFractional { 0 } else { 1 };
            if target == Target::Fig10 {
                vec![m.to_string(), run.allocation.copies[m].to_string(), p.to_string()]
            } else {
                vec![m.to_string(), theta.to_string(), p.to_string()]
            }
        })
        .collect();
    let columns: &[&str] = if target == Target::Fig10 {
        &["video_id", "copies", "policy"]
    } else {
        &["video_id", "theta", "policy"]
    };
    write(ctx, name, &header, columns, rows)?;
    let ff = policies.iter().filter(|&&p| p == Policy::FixedFractional).count();
    println!("fixed_fractional_videos={ff} served={}", run.served());
    Ok(())
}

