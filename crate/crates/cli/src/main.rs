mod analysis;
mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use netwave::coupling::Degeneracy;
use netwave::pde_verify::{stability_bound, verify, Simulation};
use netwave::sweep::{run_family, FamilySweep, SweepFamily, SweepOptions};

use crate::analysis::analyze;
use crate::config::RunConfig;
use crate::report::{Verdict, WaveSummary};

/// Traveling waves of advection-diffusion equations on a star network.
#[derive(Parser)]
#[command(name = "netwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide which waves exist and build the requested one.
    Check(CheckArgs),
    /// Write the profiles of the requested wave as CSV.
    Profile(ProfileArgs),
    /// Run the finite-volume scheme from the wave and measure its drift.
    Verify(VerifyArgs),
    /// Compare the generic check with the closed-form criteria on random draws.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Output {
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    config: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ProfileArgs {
    config: PathBuf,
    /// Directory for `road_<h>.csv` and `profile.json`.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    xi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi_max: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    config: PathBuf,
    #[command(flatten)]
    out: Output,
    /// Directory for `(x, rho)` snapshots at the `--at` times.
    #[arg(long, requires = "at")]
    snapshots: Option<PathBuf>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    at: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Family to run; repeat for several. All families by default.
    #[arg(long)]
    family: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = SweepOptions::default().seed)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    out: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => check(a),
        Command::Profile(a) => profile(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit<T: Serialize>(out: &Output, value: &T, summary: &str) -> Result<()> {
    let json = serde_json::to_string_pretty(value)? + "\n";
    if let Some(path) = &out.report {
        write(path, &json)?;
    }
    if out.json {
        print!("{json}");
    } else {
        print!("{summary}");
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn check(a: CheckArgs) -> Result<bool> {
    let cfg = RunConfig::load(&a.config)?;
    let an = analyze(&cfg)?;
    emit(&a.out, &an.report, &an.report.summary())?;
    Ok(an.report.exists)
}

#[derive(Serialize)]
struct ProfileMeta {
    xi_min: f64,
    xi_max: f64,
    points: usize,
    wave: WaveSummary,
}

fn profile(a: ProfileArgs) -> Result<bool> {
    let cfg = RunConfig::load(&a.config)?;
    let mut an = analyze(&cfg)?;
    let (Some(wave), Some(mut summary)) = (an.wave.take(), an.report.wave.take()) else {
        if an.report.exists {
            bail!("the wave is not determined by the configuration; give [ends] incoming");
        }
        eprint!("{}", an.report.summary());
        return Ok(false);
    };
    let points = a.points.unwrap_or(cfg.profile.points);
    let xi_min = a.xi_min.or(cfg.profile.xi_min).unwrap_or(-20.0);
    let xi_max = a.xi_max.or(cfg.profile.xi_max).unwrap_or(20.0);
    if !(points >= 2 && xi_min < xi_max) {
        bail!("profile grid needs at least 2 points and xi_min < xi_max");
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (p, road) in wave.profiles.iter().zip(&mut summary.roads) {
        let name = format!("road_{}.csv", road.index);
        let mut w = csv::Writer::from_path(a.out.join(&name))?;
        w.write_record(["xi", "phi", "dphi"])?;
        for [xi, phi, dphi] in p.sample(xi_min, xi_max, points) {
            w.serialize((xi, phi, dphi))?;
        }
        w.flush()?;
        road.profile_file = Some(name);
    }
    let meta = ProfileMeta {
        xi_min,
        xi_max,
        points,
        wave: summary,
    };
    write(&a.out.join("profile.json"), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    println!("wrote {} profiles to {}", wave.profiles.len(), a.out.display());
    Ok(true)
}

fn verify_cmd(a: VerifyArgs) -> Result<bool> {
    let cfg = RunConfig::load(&a.config)?;
    let mut an = analyze(&cfg)?;
    let Some(wave) = &an.wave else {
        if an.report.exists {
            bail!("the wave is not determined by the configuration; give [ends] incoming");
        }
        emit(&a.out, &an.report, &an.report.summary())?;
        return Ok(false);
    };
    let opts = cfg.pde_options();
    let with_hint = |e: netwave::Error| -> anyhow::Error {
        match e {
            netwave::Error::Instability(_) => {
                let dt = stability_bound(&an.net, opts.dx);
                anyhow::Error::new(e).context(format!("stability abort; use a time step below {dt:.3e} (cfl < 1)"))
            }
            e => e.into(),
        }
    };
    let rep = verify(&an.net, wave, &opts).map_err(with_hint)?;
    let degenerate = wave.degeneracy() != Degeneracy::NonDegenerate;
    let v = &cfg.verify;
    let mut problems = vec![];
    if rep.fine.linf > v.drift_tol {
        problems.push(format!("drift {:.2e} above {:.1e}", rep.fine.linf, v.drift_tol));
    }
    if !degenerate && rep.refinement_ratio < v.min_ratio {
        problems.push(format!("refinement ratio {:.2} below {}", rep.refinement_ratio, v.min_ratio));
    }
    if rep.run.max_node_residual > v.node_tol {
        problems.push(format!("junction residual {:.1e} above {:.1e}", rep.run.max_node_residual, v.node_tol));
    }
    let pass = problems.is_empty();
    let mut detail = problems.join("; ");
    if pass && degenerate {
        detail = "refinement ratio not required for degenerate waves".into();
    }
    an.report.verdicts.push(Verdict::new("pde verification", Some(pass), detail));
    an.report.drift = Some(rep);

    if let Some(dir) = &a.snapshots {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut sim = Simulation::from_wave(&an.net, wave, &opts).map_err(with_hint)?;
        let mut times = a.at.clone();
        times.sort_by(f64::total_cmp);
        for t in times {
            sim.run(t, opts.cfl).map_err(with_hint)?;
            for g in &sim.state.roads {
                let mut w = csv::Writer::from_path(dir.join(format!("road_{}_t{t}.csv", g.road)))?;
                w.write_record(["x", "rho"])?;
                for (x, r) in g.x.iter().zip(&g.rho) {
                    w.serialize((x, r))?;
                }
                w.flush()?;
            }
        }
    }
    emit(&a.out, &an.report, &an.report.summary())?;
    Ok(an.report.exists && pass)
}

#[derive(Serialize)]
struct SweepReport {
    draws: usize,
    seed: u64,
    pass: bool,
    families: Vec<FamilySweep>,
}

fn sweep(a: SweepArgs) -> Result<bool> {
    let families: Vec<SweepFamily> = if a.family.is_empty() {
        SweepFamily::ALL.to_vec()
    } else {
        a.family
            .iter()
            .map(|name| {
                SweepFamily::ALL.into_iter().find(|f| f.name() == name).with_context(|| {
                    let known: Vec<&str> = SweepFamily::ALL.iter().map(|f| f.name()).collect();
                    format!("unknown family {name:?}; expected one of {}", known.join(", "))
                })
            })
            .collect::<Result<_>>()?
    };
    let mut opts = SweepOptions {
        draws: a.draws,
        seed: a.seed,
        ..SweepOptions::default()
    };
    if let Some(t) = a.threads {
        opts.threads = t;
    }
    let results = families
        .iter()
        .map(|&f| run_family(f, &opts))
        .collect::<netwave::Result<Vec<_>>>()?;
    let pass = results.iter().all(|r| r.pass);
    let mut summary = String::new();
    for r in &results {
        summary += &format!(
            "{}: {} draws, {} positive, {} agree, {} disagree ({} near a boundary), max end error {:.1e}: {}\n",
            r.family.name(),
            r.draws,
            r.positives,
            r.agree,
            r.disagree,
            r.near_boundary,
            r.max_end_error,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let rep = SweepReport {
        draws: a.draws,
        seed: a.seed,
        pass,
        families: results,
    };
    emit(&a.out, &rep, &summary)?;
    Ok(pass)
}
