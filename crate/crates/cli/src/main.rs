//! `mmis`: run single module sweeps or the full verification report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use mmis_core::campaign::{all_ids, criterion_title, run_campaign, CampaignConfig, Outcome};
use mmis_core::correlators::{cmi, cmi_layout, reduced_density, region_bound_check, two_point_zz, RegionSpec};
use mmis_core::dims::threshold_report;
use mmis_core::doubled::ose_entropy_scan;
use mmis_core::lindblad::{all_zero_state, evolve, LindbladSpec, TrajectoryRecord};
use mmis_core::mmis::{ensemble_residual, eof_upper_bound_certificate, log_negativity_mmis, strong_symmetry_residual};
use mmis_core::swssb::swssb_sweep;
use mmis_core::umps::{default_samples, span_rank_estimate};
use mmis_core::{Error, Mmis, RingSpec};

mod report;

#[derive(Parser)]
#[command(name = "mmis", version, about = "Translation-invariant maximally mixed states on qudit rings")]
struct Cli {
    /// Seed for every stochastic path.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output files here instead of printing to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// dim S and dim T for L = 1..=l-max.
    Dims {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 12)]
        l_max: usize,
    },
    /// Rank, symmetry residuals, negativity and EoF certificate of rho_T.
    Mmis {
        #[arg(short = 'L', long = "sites", default_value_t = 6)]
        sites: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Two-point correlators, region distances and the CMI.
    Correlators {
        #[arg(short = 'L', long = "sites", default_value_t = 7)]
        sites: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Numerical rank of random uMPS vectors.
    UmpsSpan {
        #[arg(long, default_value_t = 1)]
        chi: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(short = 'L', long = "sites", default_value_t = 6)]
        sites: usize,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Operator-space Renyi entropies of the doubled state (d = 2).
    Ose {
        #[arg(short = 'L', long = "sites", default_value_t = 10)]
        sites: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        alphas: Vec<f64>,
    },
    /// Renyi-2 correlators over a list of ring lengths.
    Swssb {
        #[arg(long, value_delimiter = ',', default_value = "5,7,11")]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Trajectory from |0...0> under the translation-symmetric Lindbladian.
    Lindblad {
        #[arg(short = 'L', long = "sites", default_value_t = 9)]
        sites: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.005)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        /// Record every this many steps.
        #[arg(long, default_value_t = 20)]
        stride: usize,
    },
    /// Run the numbered checks and write the report directory.
    Report {
        /// Key-value (TOML) campaign configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run only these checks.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Serialize)]
struct MmisSummary {
    #[serde(rename = "L")]
    sites: usize,
    d: usize,
    rank: usize,
    ensemble_residual: f64,
    strong_symmetry_residual: f64,
    log_negativity_half: f64,
    eof_average: f64,
    eof_bound: f64,
    eof_max_member_rank: usize,
    eof_holds: bool,
}

#[derive(Serialize)]
struct CorrelatorLine {
    kind: &'static str,
    region: String,
    value: f64,
    reference: Option<f64>,
}

#[derive(Serialize)]
struct SpanLine {
    chi: usize,
    d: usize,
    #[serde(rename = "L")]
    sites: usize,
    samples: usize,
    numeric_rank: usize,
    bound: String,
    dim_t: usize,
    stable: bool,
    insufficient_samples: bool,
}

fn emit<T: Serialize>(rows: &[T], name: &str, cli: &Cli) -> Result<()> {
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    match &cli.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let ext = if cli.format == Format::Json { "json" } else { "csv" };
            let path = dir.join(format!("{name}.{ext}"));
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn trajectory_rows(rec: &TrajectoryRecord) -> Vec<report::TrajectoryRow> {
    (0..rec.times.len())
        .map(|k| report::TrajectoryRow {
            t: rec.times[k],
            fidelity: rec.fidelities[k],
            one_minus_fidelity: 1.0 - rec.fidelities[k],
            purity: rec.purities[k],
            trace_drift: rec.trace_drift[k],
            charge_drift: rec.charge_drift[k],
        })
        .collect()
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let seed = cli.seed.unwrap_or(CampaignConfig::default().seed);
    match &cli.command {
        Command::Dims { d, l_max } => emit(&threshold_report(*d, *l_max)?, "dims", cli)?,
        Command::Mmis { sites, d } => {
            let spec = RingSpec::new(*sites, *d)?;
            let mmis = Mmis::new(&spec)?;
            let half: Vec<usize> = (0..sites / 2).collect();
            let eof = eof_upper_bound_certificate(&spec, &half)?;
            let row = MmisSummary {
                sites: *sites,
                d: *d,
                rank: mmis.rank(),
                ensemble_residual: ensemble_residual::<f64>(&spec)?,
                strong_symmetry_residual: strong_symmetry_residual(&spec)?,
                log_negativity_half: log_negativity_mmis(&spec, &half)?,
                eof_average: eof.average_entropy,
                eof_bound: eof.bound,
                eof_max_member_rank: eof.max_member_rank,
                eof_holds: eof.holds,
            };
            emit(&[row], "mmis", cli)?;
        }
        Command::Correlators { sites, d } => {
            let spec = RingSpec::new(*sites, *d)?;
            let mmis = Mmis::new(&spec)?;
            let mut rows = Vec::new();
            for j in 2..=*sites {
                let v = two_point_zz(&mmis, 1, j)?;
                rows.push(CorrelatorLine {
                    kind: "zz",
                    region: format!("1 {j}"),
                    value: v.value,
                    reference: v.closed_form,
                });
            }
            for size in 1..=sites / 2 {
                let region = RegionSpec::interval(1, size, &spec)?;
                let b = region_bound_check(&mmis, &region)?;
                rows.push(CorrelatorLine {
                    kind: "rdm_distance",
                    region: format!("1..{size}"),
                    value: b.distance,
                    reference: Some(b.scale),
                });
                let s = reduced_density(&mmis, &region)?.entropy();
                rows.push(CorrelatorLine {
                    kind: "entropy",
                    region: format!("1..{size}"),
                    value: s,
                    reference: None,
                });
            }
            if let Ok((a, b, c)) = cmi_layout(&spec) {
                let v = cmi(&mmis, &a, &b, &c)?;
                rows.push(CorrelatorLine {
                    kind: "cmi_over_log_l",
                    region: format!("{}|{}|{}", a.len(), b.len(), c.len()),
                    value: v.ratio,
                    reference: None,
                });
            }
            emit(&rows, "correlators", cli)?;
        }
        Command::UmpsSpan { chi, d, sites, samples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = match samples {
                Some(n) => *n,
                None => default_samples(*chi, *d, *sites)?,
            };
            let e = span_rank_estimate(*chi, *d, *sites, n, &mut rng)?;
            let row = SpanLine {
                chi: e.chi,
                d: e.d,
                sites: e.sites,
                samples: e.sample_count,
                numeric_rank: e.numeric_rank,
                bound: e.bound.to_string(),
                dim_t: e.dim_t,
                stable: e.stable(),
                insufficient_samples: e.insufficient_samples,
            };
            emit(&[row], "umps-span", cli)?;
        }
        Command::Ose { sites, alphas } => {
            let spec = RingSpec::new(*sites, 2)?;
            let sizes: Vec<usize> = (1..=sites / 2).collect();
            let (_, rows) = ose_entropy_scan(&spec, alphas, &sizes)?;
            emit(&rows, "ose", cli)?;
        }
        Command::Swssb { lengths, d } => emit(&swssb_sweep(lengths, *d)?, "swssb", cli)?,
        Command::Lindblad {
            sites,
            lambda,
            gamma,
            dt,
            t_max,
            stride,
        } => {
            let ring = RingSpec::new(*sites, 2)?;
            let spec = LindbladSpec::new(ring, *lambda, *gamma, *dt, *t_max)?.with_stride(*stride);
            let rec = evolve(&spec, &all_zero_state(&ring)?)?;
            emit(&trajectory_rows(&rec), "trajectory", cli)?;
        }
        Command::Report { config, only } => return run_report(cli, config.as_deref(), only),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: Option<&Path>) -> Result<CampaignConfig> {
    match path {
        None => Ok(CampaignConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn run_report(cli: &Cli, config: Option<&Path>, only: &[u8]) -> Result<ExitCode> {
    let mut cfg = load_config(config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let ids = if only.is_empty() { all_ids() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|&&id| criterion_title(id).is_none()) {
        anyhow::bail!("no check numbered {bad}");
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("report"));
    let results = run_campaign(&cfg, &ids);

    let mut outcomes: Vec<&Outcome> = Vec::new();
    let mut guard_failure = false;
    let mut failed = false;
    for r in &results {
        match r {
            Ok(o) => {
                println!("{}", o.check.line());
                failed |= !o.check.passed;
                outcomes.push(o);
            }
            Err(e) => {
                eprintln!("error: {e}");
                guard_failure |= e.is_guard();
                failed = true;
            }
        }
    }
    let artifacts = report::collect(&outcomes);
    let errors: Vec<_> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    report::write_all(&out_dir, &cfg, &artifacts, &outcomes, &errors)?;

    Ok(if guard_failure {
        ExitCode::from(2)
    } else if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let guard = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e, Error::DimensionGuard { .. }));
            ExitCode::from(if guard { 2 } else { 1 })
        }
    }
}
