//! `bmlab`: command line front end for bmlab-core.
//!
//! Exit codes: 0 on success or a passing check, 2 when the answer is a
//! certified negative (a separation certificate, or a witness point where the
//! equality condition fails), 1 on errors and failed checks. Diagnostics go to
//! stderr. `BM_LAB_THREADS` caps the worker threads of the sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use bmlab_core::decomposition::{
    find_ader, find_john_decomposition, sqrtn_diagnostics, verify_ader, verify_john, AderOutcome,
};
use bmlab_core::distance::{bm_planar, bm_to_ball, bm_to_parallelogram};
use bmlab_core::ellipsoid::{john, loewner, DEFAULT_EPS};
use bmlab_core::exact::Positivity;
use bmlab_core::fixtures::{catalog, verify_fixture};
use bmlab_core::io::{
    body_to_json, read_body, BMResultJson, CertificateJson, DecompositionJson, EllipsoidJson,
};
use bmlab_core::onesym::{equality_condition_check, example4_body_with, one_sym_pair_distance};
use bmlab_core::search::SearchOptions;
use bmlab_core::stability::{
    cover_experiment, hand_argument, stability_scan, verify_factorization, verify_positivity, StabilityRecord,
};
use bmlab_core::{par, point, report, SymmetricBody, Tolerance};

#[derive(Parser)]
#[command(
    name = "bmlab",
    version,
    about = "Banach-Mazur distances and their certificates"
)]
#[command(
    after_help = "Exit status: 0 success, 2 certified negative, 1 error or failed check.\n\
Environment: BM_LAB_THREADS caps the number of worker threads."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal-volume inscribed ellipsoid and its John decomposition.
    John(EllipsoidArgs),
    /// Minimal-volume enclosing ellipsoid and its John decomposition.
    Loewner(EllipsoidArgs),
    /// Decide whether K admits an Ader decomposition at radii (r, R).
    /// Exit 0 with the decomposition, or 2 with a separation certificate.
    AderCertify {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long = "R")]
        big_r: f64,
        /// Relative contact band.
        #[arg(long)]
        band: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Banach-Mazur distances.
    #[command(subcommand)]
    Bm(BmCommand),
    /// 1-symmetric planar bodies.
    #[command(subcommand)]
    Onesym(OnesymCommand),
    /// The planar stability bound for the square.
    #[command(subcommand)]
    Stability(StabilityCommand),
    /// Distances of random polygons to the disk and the square.
    Cover {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV with columns id, dist_ball, dist_pgram, min.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The shipped fixture corpus.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Args)]
struct EllipsoidArgs {
    #[arg(long)]
    body: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Write the ellipsoid JSON here; the report still goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            seed: self.seed,
            restarts: self.restarts,
            tolerance: self.tol,
            ..SearchOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum BmCommand {
    /// d_BM(K, ball) with an Ader certificate when one is found.
    Ball {
        #[arg(long)]
        body: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// d_BM(A, B) for planar bodies.
    Planar {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// d_BM(K, square) for a planar body.
    Pgram {
        #[arg(long)]
        body: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Subcommand)]
enum OnesymCommand {
    /// Check the equality condition on a 1-symmetric body. Exit 2 with a
    /// witness point if it fails.
    Check {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Build the Example-4 body through v = (x, y).
    Example4 {
        #[arg(long, value_parser = parse_point)]
        v: (f64, f64),
        #[arg(long, default_value_t = 64)]
        arc_samples: usize,
        /// Reflect the arc instead of using the segment to b.
        #[arg(long)]
        mirrored: bool,
        /// Write the body JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between two 1-symmetric bodies.
    Pair {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Subcommand)]
enum StabilityCommand {
    /// Run the stability pipeline over seeded random polygons.
    Scan {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV with columns id, epsilon, dist_ball, dist_pgram, bound, slack.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scatter plot of (epsilon, dist_pgram) with the bound line.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Exact check of the polynomial factorization and positivity.
    VerifyPoly,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Recompute every known value; with --dir also compare the JSON files.
    Verify {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Write the fixture bodies as JSON files.
    Write {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok((p(x)?, p(y)?))
}

fn load(path: &Path) -> Result<SymmetricBody> {
    read_body(path).with_context(|| format!("reading body {}", path.display()))
}

fn emit(v: &Value, out: Option<&Path>) -> Result<()> {
    let s = serde_json::to_string_pretty(v)?;
    match out {
        Some(p) => fs::write(p, s + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{s}"),
    }
    Ok(())
}

fn ellipsoid_command(args: &EllipsoidArgs, inscribed: bool) -> Result<ExitCode> {
    let k = load(&args.body)?;
    let e = if inscribed {
        john(&k, args.eps)?
    } else {
        loewner(k.vertices(), args.eps)?
    };
    let kn = k.apply_map(&e.normalizing_map())?;
    // Contacts of the normalized body with the unit sphere.
    let band = 1e-5;
    let contacts = if inscribed {
        kn.inner_contacts(1.0, band)
    } else {
        kn.outer_contacts(1.0, band)
    };
    let decomposition = find_john_decomposition(&contacts, k.dim());
    let ellipsoid = serde_json::to_value(EllipsoidJson::from(&e))?;
    if let Some(p) = &args.out {
        emit(&ellipsoid, Some(p))?;
    }
    let report = json!({
        "ellipsoid": ellipsoid,
        "contacts": contacts.len(),
        "decomposition": decomposition.as_ref().map(|d| json!({
            "points": d.points.iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>(),
            "weights": d.weights,
        })),
        "residual": decomposition.as_ref().map(|d| verify_john(d, 1e-6)),
    });
    emit(&report, None)?;
    Ok(if decomposition.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn record_json(r: &StabilityRecord) -> Value {
    json!({
        "id": r.id,
        "epsilon": r.epsilon,
        "dist_ball": r.dist_ball,
        "dist_pgram": r.dist_pgram,
        "bound": r.bound,
        "floor": r.floor,
        "slack": r.slack,
        "pass": r.pass,
        "floor_ok": r.floor_ok,
    })
}

fn positivity_json(p: &Positivity) -> Value {
    match p {
        Positivity::Certified { leaves } => json!({"certified": true, "leaves": leaves}),
        Positivity::Refuted { at } => json!({"certified": false, "refuted_at": at.to_string()}),
        Positivity::Inconclusive { depth } => json!({"certified": false, "inconclusive_depth": depth}),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::John(a) => ellipsoid_command(&a, true),
        Command::Loewner(a) => ellipsoid_command(&a, false),
        Command::AderCertify {
            body,
            r,
            big_r,
            band,
            out,
        } => {
            let k = load(&body)?;
            let mut tol = Tolerance::default();
            if let Some(b) = band {
                tol = tol.with_band(b);
            }
            match find_ader(&k, r, big_r, &tol)? {
                AderOutcome::Decomposition(d) => {
                    eprintln!("{}", serde_json::to_string(&verify_ader(&d, 1e-8))?);
                    emit(
                        &serde_json::to_value(DecompositionJson::from(&d))?,
                        out.as_deref(),
                    )?;
                    Ok(ExitCode::SUCCESS)
                }
                AderOutcome::Separation(c) => {
                    emit(&serde_json::to_value(CertificateJson::from(&c))?, out.as_deref())?;
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Bm(cmd) => {
            let r = match cmd {
                BmCommand::Ball { body, search } => {
                    let r = bm_to_ball(&load(&body)?, &search.options())?;
                    let mut v = serde_json::to_value(BMResultJson::from(&r))?;
                    if let Some(d) = &r.certificate {
                        v["verification"] = serde_json::to_value(verify_ader(d, 1e-8))?;
                        v["diagnostics"] = serde_json::to_value(sqrtn_diagnostics(d))?;
                    }
                    v
                }
                BmCommand::Planar { a, b, search } => {
                    let r = bm_planar(&load(&a)?, &load(&b)?, &search.options())?;
                    serde_json::to_value(BMResultJson::from(&r))?
                }
                BmCommand::Pgram { body, .. } => {
                    let r = bm_to_parallelogram(&load(&body)?)?;
                    serde_json::to_value(BMResultJson::from(&r))?
                }
            };
            emit(&r, None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Onesym(cmd) => match cmd {
            OnesymCommand::Check { body, samples } => {
                let rep = equality_condition_check(&load(&body)?, samples, 1e-9)?;
                emit(
                    &json!({
                        "label": rep.body.label,
                        "is_one_symmetric": rep.is_one_symmetric,
                        "condition_holds": rep.condition_holds,
                        "worst_margin": rep.worst_margin,
                        "witness": rep.witness.as_slice(),
                        "distance_to_square": rep.distance_to_square,
                    }),
                    None,
                )?;
                Ok(if rep.condition_holds {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                })
            }
            OnesymCommand::Example4 {
                v,
                arc_samples,
                mirrored,
                out,
            } => {
                let k = example4_body_with(&point(&[v.0, v.1]), arc_samples, mirrored)?;
                let rep = equality_condition_check(&k, 8, 1e-9)?;
                if let Some(p) = &out {
                    fs::write(p, body_to_json(&k) + "\n")
                        .with_context(|| format!("writing {}", p.display()))?;
                }
                emit(
                    &json!({
                        "label": k.label,
                        "vertices": k.vertices().len(),
                        "condition_holds": rep.condition_holds,
                        "worst_margin": rep.worst_margin,
                        "witness": rep.witness.as_slice(),
                        "distance_to_square": rep.distance_to_square,
                    }),
                    None,
                )?;
                Ok(ExitCode::SUCCESS)
            }
            OnesymCommand::Pair { a, b, search } => {
                let r = one_sym_pair_distance(&load(&a)?, &load(&b)?, &search.options())?;
                emit(&serde_json::to_value(BMResultJson::from(&r))?, None)?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Stability(cmd) => match cmd {
            StabilityCommand::Scan {
                trials,
                seed,
                out,
                svg,
            } => {
                let records: Vec<StabilityRecord> = stability_scan(trials, seed)
                    .into_iter()
                    .collect::<Result<_, _>>()?;
                if let Some(p) = &out {
                    let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
                    report::write_csv(f, &records)?;
                }
                if let Some(p) = &svg {
                    fs::write(p, report::scatter_svg(&records))
                        .with_context(|| format!("writing {}", p.display()))?;
                }
                let failures: Vec<Value> = records
                    .iter()
                    .filter(|r| !r.pass || !r.floor_ok)
                    .map(record_json)
                    .collect();
                let min_slack = records.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
                emit(
                    &json!({
                        "trials": trials,
                        "seed": seed,
                        "threads": par::threads(),
                        "min_slack": min_slack,
                        "failures": failures,
                    }),
                    None,
                )?;
                Ok(if failures.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                })
            }
            StabilityCommand::VerifyPoly => {
                let fact = verify_factorization();
                let (pf, pg) = verify_positivity();
                let hand = hand_argument();
                let pass = fact.holds && pf.is_certified() && pg.is_certified() && hand.pass;
                emit(
                    &json!({
                        "factorization_holds": fact.holds,
                        "degree": fact.expression.degree(),
                        "f_positive": positivity_json(&pf),
                        "g_positive": positivity_json(&pg),
                        "g(0.95)": hand.g_095,
                        "f(0.96)": hand.f_096,
                        "f'(0.95)": hand.fprime_095,
                        "f'(0.96)": hand.fprime_096,
                        "hand_argument": hand.pass,
                        "pass": pass,
                    }),
                    None,
                )?;
                Ok(if pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                })
            }
        },
        Command::Cover { trials, seed, out } => {
            let rep = cover_experiment(trials, seed)?;
            if let Some(p) = &out {
                let mut w = String::from("id,dist_ball,dist_pgram,min\n");
                for r in &rep.rows {
                    w += &format!("{},{},{},{}\n", r.id, r.dist_ball, r.dist_pgram, r.min);
                }
                fs::write(p, w).with_context(|| format!("writing {}", p.display()))?;
            }
            emit(
                &json!({
                    "trials": rep.trials,
                    "seed": seed,
                    "radius": rep.radius,
                    "max_min": rep.max_min,
                    "argmax": rep.rows[rep.argmax].id,
                    "violations": rep.violations,
                }),
                None,
            )?;
            Ok(if rep.violations == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Fixtures(cmd) => match cmd {
            FixturesCommand::Write { dir } => {
                fs::create_dir_all(&dir)?;
                for f in catalog() {
                    let p = dir.join(format!("{}.json", f.name));
                    fs::write(&p, body_to_json(&f.body) + "\n")
                        .with_context(|| format!("writing {}", p.display()))?;
                }
                Ok(ExitCode::SUCCESS)
            }
            FixturesCommand::Verify { dir } => {
                let opts = SearchOptions::default();
                let mut rows = Vec::new();
                let mut pass = true;
                for f in catalog() {
                    if let Some(d) = &dir {
                        let on_disk = load(&d.join(format!("{}.json", f.name)))?;
                        let same = on_disk == f.body;
                        pass &= same;
                        rows.push(json!({"fixture": f.name, "file_matches": same}));
                    }
                    for c in verify_fixture(&f, &opts)? {
                        pass &= c.pass;
                        rows.push(serde_json::to_value(c)?);
                    }
                }
                emit(&json!({"pass": pass, "checks": rows}), None)?;
                Ok(if pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                })
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
