//! The `vmac` command line.
//!
//! Every subcommand writes one CSV table, to stdout or to `<out>/<name>.csv`,
//! optionally with an SVG plot next to it. Settings come from flags, falling
//! back to a flat TOML config file and then to built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::asymptotic::{
    nse_partition_bl, nse_sharing_inf, optimal_bl, partition_asymptotics, solve_beta_chain,
    AsymptoticConfig, LRounding,
};
use crate::channel_model::{sample_gains, NetworkConfig, SeedSpec};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, ExperimentId, ExperimentSpec};
use crate::plot::{write_svg_plot, SeriesSpec};
use crate::simulator::{run_scenario, BlPolicy, BudgetRule, Scenario};
use crate::table::{format_sig, write_csv, Cell, CsvTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vmac",
    version,
    about = "Water-filling transmitters on a vector multiple access channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One channel realization: per-transmitter Omega, rate per channel and NSE.
    Simulate,
    /// Large-system water levels, rates and NSE.
    Asymptotic,
    /// Mean NSE against the BL cap L for one configuration.
    Sweep,
    /// Replicate one of the figure studies.
    Figure {
        /// fig2, fig3, fig4, fig5 or fig6
        id: String,
    },
    /// Analytic BL parameter L* with the Omega and water level it uses.
    OptimalBl,
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    /// partition or sharing
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Number of transmitters K
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Number of channels N
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Per-channel SNR p_max/sigma^2 in dB
    #[arg(long = "snr-db", global = true, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// BL cap L (omit for none)
    #[arg(long, global = true)]
    bl: Option<usize>,
    /// Monte Carlo trials per sweep point
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Master seed; every trial stream is derived from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; tables go to stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key = value TOML file with the same keys as the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write an SVG plot (requires --out)
    #[arg(long, global = true)]
    plot: bool,
    /// Monte Carlo samples for water levels beyond the third
    #[arg(long = "mc-samples", global = true)]
    mc_samples: Option<usize>,
    /// Relative tolerance of the adaptive quadrature
    #[arg(long = "quad-tol", global = true)]
    quad_tol: Option<f64>,
    /// Per-transmitter budget: accessible (|Z_k| p_max) or full-band (N p_max)
    #[arg(long, global = true)]
    budget: Option<String>,
    /// Comma-separated load grid K/N for figure studies
    #[arg(long, global = true)]
    loads: Option<String>,
    /// Comma-separated N grid for fig2
    #[arg(long = "n-list", global = true)]
    n_list: Option<String>,
}

/// Effective settings after merging flags, config file and defaults.
#[derive(Debug, Clone, PartialEq)]
struct Settings {
    scenario: Option<Scenario>,
    k: Option<usize>,
    n: Option<usize>,
    snr_db: Option<f64>,
    bl: Option<usize>,
    trials: Option<usize>,
    seed: u64,
    out: Option<PathBuf>,
    plot: bool,
    mc_samples: usize,
    quad_tol: f64,
    budget: BudgetRule,
    loads: Option<Vec<f64>>,
    n_list: Option<Vec<usize>>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| usage(format!("--{flag}: cannot parse `{}`", x.trim())))
        })
        .collect()
}

fn toml_value_as_string(key: &str, v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|i| toml_value_as_string(key, i))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => return Err(usage(format!("config key `{key}` has an unsupported value"))),
    })
}

fn parse_flag<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| usage(format!("--{key}: invalid value `{raw}`")))
}

/// Reads a config file into flag values. Keys may use `-` or `_`.
fn flags_from_file(path: &Path) -> Result<Flags> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut f = Flags::default();
    for (key, value) in &table {
        let raw = toml_value_as_string(key, value)?;
        match key.replace('_', "-").as_str() {
            "scenario" => f.scenario = Some(raw),
            "k" => f.k = Some(parse_flag("k", &raw)?),
            "n" => f.n = Some(parse_flag("n", &raw)?),
            "snr-db" => f.snr_db = Some(parse_flag("snr-db", &raw)?),
            "bl" => f.bl = Some(parse_flag("bl", &raw)?),
            "trials" => f.trials = Some(parse_flag("trials", &raw)?),
            "seed" => f.seed = Some(parse_flag("seed", &raw)?),
            "out" => f.out = Some(PathBuf::from(raw)),
            "plot" => f.plot = parse_flag("plot", &raw)?,
            "mc-samples" => f.mc_samples = Some(parse_flag("mc-samples", &raw)?),
            "quad-tol" => f.quad_tol = Some(parse_flag("quad-tol", &raw)?),
            "budget" => f.budget = Some(raw),
            "loads" => f.loads = Some(raw),
            "n-list" => f.n_list = Some(raw),
            other => {
                return Err(usage(format!(
                    "{}: unknown config key `{other}`",
                    path.display()
                )))
            }
        }
    }
    Ok(f)
}

fn merge(flags: Flags, file: Flags) -> Result<Settings> {
    let scenario = flags
        .scenario
        .or(file.scenario)
        .map(|s| s.parse().map_err(|_| usage(format!("--scenario: invalid value `{s}`"))))
        .transpose()?;
    let budget = flags
        .budget
        .or(file.budget)
        .map(|s| s.parse().map_err(|_| usage(format!("--budget: invalid value `{s}`"))))
        .transpose()?
        .unwrap_or_default();
    let loads = flags
        .loads
        .or(file.loads)
        .map(|s| parse_list("loads", &s))
        .transpose()?;
    let n_list = flags
        .n_list
        .or(file.n_list)
        .map(|s| parse_list("n-list", &s))
        .transpose()?;
    let s = Settings {
        scenario,
        k: flags.k.or(file.k),
        n: flags.n.or(file.n),
        snr_db: flags.snr_db.or(file.snr_db),
        bl: flags.bl.or(file.bl),
        trials: flags.trials.or(file.trials),
        seed: flags.seed.or(file.seed).unwrap_or(crate::experiments::DEFAULT_SEED),
        out: flags.out.or(file.out),
        plot: flags.plot || file.plot,
        mc_samples: flags.mc_samples.or(file.mc_samples).unwrap_or(200_000),
        quad_tol: flags.quad_tol.or(file.quad_tol).unwrap_or(1e-9),
        budget,
        loads,
        n_list,
    };
    if s.k == Some(0) {
        return Err(usage("--k: must be at least 1"));
    }
    if s.n == Some(0) {
        return Err(usage("--n: must be at least 1"));
    }
    if s.trials == Some(0) {
        return Err(usage("--trials: must be at least 1"));
    }
    if s.mc_samples == 0 {
        return Err(usage("--mc-samples: must be at least 1"));
    }
    if !(s.quad_tol > 0.0 && s.quad_tol < 1.0) {
        return Err(usage("--quad-tol: must lie in (0, 1)"));
    }
    if let Some(snr) = s.snr_db {
        if !snr.is_finite() {
            return Err(usage("--snr-db: must be finite"));
        }
    }
    if s.plot && s.out.is_none() {
        return Err(usage("--plot: requires --out"));
    }
    Ok(s)
}

impl Settings {
    fn k(&self) -> usize {
        self.k.unwrap_or(2)
    }

    fn n(&self) -> usize {
        self.n.unwrap_or(crate::experiments::DEFAULT_CHANNELS)
    }

    fn snr_db(&self) -> f64 {
        self.snr_db.unwrap_or(10.0)
    }

    fn bl_policy(&self, n: usize) -> Result<BlPolicy> {
        match self.bl {
            None => Ok(BlPolicy::NONE),
            Some(l) => BlPolicy::cap(l, n).map_err(|_| usage(format!("--bl: must be in 1..={n}"))),
        }
    }

    fn asymptotic(&self, k: usize) -> Result<AsymptoticConfig> {
        let mut cfg = AsymptoticConfig::from_snr_db(k, self.snr_db())?;
        cfg.mc_samples = self.mc_samples;
        cfg.quad_rel_tol = self.quad_tol;
        cfg.validate().map_err(|e| usage(format!("--quad-tol: {e}")))?;
        Ok(cfg)
    }

    fn base_provenance(&self, command: &str) -> Vec<(String, String)> {
        vec![
            ("generator".into(), format!("vmac {}", env!("CARGO_PKG_VERSION"))),
            ("command".into(), command.into()),
            ("noise_variance".into(), "1".into()),
        ]
    }
}

/// A finished output: table, file stem and optional plot description.
struct Output {
    name: String,
    table: CsvTable,
    plot: Option<SeriesSpec>,
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    if dir.exists() && !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "not a directory"),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".vmac-write-check");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

fn emit(settings: &Settings, output: &Output) -> Result<()> {
    match &settings.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.table.to_csv_string().as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
        Some(dir) => {
            let csv = dir.join(format!("{}.csv", output.name));
            write_csv(&output.table, &csv)?;
            eprintln!("wrote {}", csv.display());
            if settings.plot {
                if let Some(spec) = &output.plot {
                    let svg = dir.join(format!("{}.svg", output.name));
                    write_svg_plot(&output.table, spec, &svg)?;
                    eprintln!("wrote {}", svg.display());
                }
            }
        }
    }
    Ok(())
}

fn simulate(s: &Settings) -> Result<Output> {
    let (k, n) = (s.k(), s.n());
    let scenario = s.scenario.unwrap_or(Scenario::Partition);
    let config = NetworkConfig::from_snr_db(k, n, s.snr_db())?;
    let bl = s.bl_policy(n)?;
    let gains = sample_gains(&config, SeedSpec::new(s.seed, 0));
    let outcome = run_scenario(scenario, &gains, &config, bl, s.budget)?;

    let mut t = CsvTable::new(&["k", "omega_k", "rate_per_channel_k", "phi_k"]);
    t.provenance = s.base_provenance("simulate");
    t.provenance.extend([
        ("scenario".into(), scenario.as_str().into()),
        ("k".into(), k.to_string()),
        ("n".into(), n.to_string()),
        ("snr_db".into(), format_sig(s.snr_db(), 12)),
        ("bl".into(), bl.limit().map_or("none".into(), |l| l.to_string())),
        ("budget".into(), s.budget.as_str().into()),
        ("seed".into(), s.seed.to_string()),
        ("trial".into(), "0".into()),
    ]);
    for tr in &outcome.transmitters {
        t.rows.push(vec![
            (tr.index + 1).into(),
            tr.accessible_fraction.into(),
            tr.rate_per_channel.into(),
            tr.spectral_efficiency.into(),
        ]);
    }
    t.rows.push(vec![
        "NSE".into(),
        "total".into(),
        outcome.nse.into(),
        Cell::Empty,
    ]);
    Ok(Output {
        name: "simulate".into(),
        table: t,
        plot: Some(SeriesSpec::new("k", "phi_k").title("Per-transmitter spectral efficiency")),
    })
}

fn asymptotic(s: &Settings) -> Result<Output> {
    let k = s.k();
    let cfg = s.asymptotic(k)?;
    let part = partition_asymptotics(&cfg)?;
    let chain = solve_beta_chain(&cfg)?;

    let mut t = CsvTable::new(&["statistic", "k", "value", "stderr", "method"]);
    t.provenance = s.base_provenance("asymptotic");
    t.provenance.extend([
        ("k".into(), k.to_string()),
        ("snr_db".into(), format_sig(s.snr_db(), 12)),
        ("mc_samples".into(), cfg.mc_samples.to_string()),
        ("mc_seed".into(), cfg.mc_seed.to_string()),
        ("quad_tol".into(), format_sig(cfg.quad_rel_tol, 12)),
        ("tail_cutoff".into(), format_sig(cfg.tail_cutoff, 12)),
    ]);
    let mut row = |stat: &str, k: Option<usize>, value: f64, se: f64, method: &str| {
        t.rows.push(vec![
            stat.into(),
            k.into(),
            value.into(),
            se.into(),
            method.into(),
        ]);
    };
    row("beta_star", None, part.beta_star, 0.0, "quadrature");
    row("omega", None, part.omega, 0.0, "closed-form");
    row("rate_per_channel", None, part.rate, 0.0, "quadrature");
    row("nse_partition", None, part.nse, 0.0, "closed-form");
    if let Some(l) = s.bl {
        let n = s.n();
        s.bl_policy(n)?;
        let v = nse_partition_bl(k, n, l, part.rate)?;
        let method = if v.exceeds_partition {
            "closed-form; K*L exceeds N"
        } else {
            "closed-form"
        };
        row("nse_partition_bl", None, v.value, 0.0, method);
    }
    for i in 0..chain.len() {
        let m = chain.methods[i].as_str();
        row("chain_level", Some(i + 1), chain.levels[i], chain.level_stderr[i], m);
        row("chain_rate", Some(i + 1), chain.rates[i], chain.rate_stderr[i], m);
    }
    let se = chain.rate_stderr.iter().map(|x| x * x).sum::<f64>().sqrt();
    row("nse_sharing", None, nse_sharing_inf(&chain), se, "sum");
    Ok(Output {
        name: "asymptotic".into(),
        table: t,
        plot: Some(
            SeriesSpec::new("k", "value")
                .filter("statistic", "chain_rate")
                .title("Asymptotic rate per channel along the SIC chain"),
        ),
    })
}

fn sweep(s: &Settings) -> Result<Output> {
    let mut spec = ExperimentSpec::preset(ExperimentId::Custom);
    spec.scenarios = match s.scenario {
        Some(sc) => vec![sc],
        None => vec![Scenario::Partition, Scenario::Sharing],
    };
    spec.num_transmitters = s.k();
    spec.num_channels = s.n();
    spec.snr_db = vec![s.snr_db()];
    if let Some(l) = s.bl {
        if l == 0 || l > spec.num_channels {
            return Err(usage(format!("--bl: must be in 1..={}", spec.num_channels)));
        }
        spec.bl_grid = (1..=l).collect();
    }
    fill_common(&mut spec, s);
    spec.validate()?;
    let mut table = run_experiment(&spec)?;
    table.provenance.insert(1, ("command".into(), "sweep".into()));
    Ok(Output {
        name: "sweep".into(),
        table,
        plot: Some(
            SeriesSpec::new("L", "mean")
                .group_by("scenario")
                .title("Network spectral efficiency against the BL cap"),
        ),
    })
}

fn fill_common(spec: &mut ExperimentSpec, s: &Settings) {
    if let Some(t) = s.trials {
        spec.trials = t;
    }
    spec.master_seed = s.seed;
    spec.budget = s.budget;
    spec.mc_samples = s.mc_samples;
    spec.quad_rel_tol = s.quad_tol;
}

fn figure(s: &Settings, id: &str) -> Result<Output> {
    let id: ExperimentId = id
        .parse()
        .ok()
        .filter(|i| *i != ExperimentId::Custom)
        .ok_or_else(|| usage(format!("figure: unknown id `{id}` (expected fig2..fig6)")))?;
    let mut spec = ExperimentSpec::preset(id);
    fill_common(&mut spec, s);
    if let Some(n) = s.n {
        spec.num_channels = n;
    }
    if let Some(snr) = s.snr_db {
        spec.snr_db = vec![snr];
    }
    if let Some(loads) = &s.loads {
        spec.loads = loads.clone();
    }
    match id {
        ExperimentId::Fig2 => {
            if let Some(k) = s.k {
                spec.num_transmitters = k;
            }
            if let Some(list) = &s.n_list {
                spec.channel_grid = list.clone();
            }
        }
        ExperimentId::Fig3 => {
            if let Some(sc) = s.scenario {
                spec.scenarios = vec![sc];
            }
        }
        _ => {}
    }
    spec.validate()?;
    let mut table = run_experiment(&spec)?;
    table
        .provenance
        .insert(1, ("command".into(), format!("figure {id}")));
    let plot = match id {
        ExperimentId::Fig2 => SeriesSpec::new("N", "sim_mean")
            .group_by("k")
            .title("Rate per channel against N (sharing)"),
        ExperimentId::Fig3 => SeriesSpec::new("L", "mean")
            .group_by("scenario")
            .group_by("load")
            .filter("statistic", "nse")
            .title("NSE against the BL cap"),
        ExperimentId::Fig4 => SeriesSpec::new("load", "mean")
            .group_by("statistic")
            .filter("statistic", "empirical_l")
            .filter("statistic", "analytic_l")
            .title("Best BL cap against load"),
        _ => SeriesSpec::new("load", "mean")
            .group_by("snr_db")
            .filter("statistic", "nse_best_l")
            .title("NSE with the best BL cap against load"),
    };
    Ok(Output {
        name: id.as_str().into(),
        table,
        plot: Some(plot),
    })
}

fn optimal(s: &Settings) -> Result<Output> {
    let (k, n) = (s.k(), s.n());
    let part = partition_asymptotics(&s.asymptotic(1)?)?;
    let l_star = optimal_bl(k, n, part.omega, LRounding::Ceil)?;
    let l_nearest = optimal_bl(k, n, part.omega, LRounding::Nearest)?;
    let mut t = CsvTable::new(&[
        "K",
        "N",
        "snr_db",
        "beta_star",
        "omega",
        "l_star",
        "l_star_nearest",
    ]);
    t.provenance = s.base_provenance("optimal-bl");
    t.provenance.push(("quad_tol".into(), format_sig(s.quad_tol, 12)));
    t.rows.push(vec![
        k.into(),
        n.into(),
        s.snr_db().into(),
        part.beta_star.into(),
        part.omega.into(),
        l_star.into(),
        l_nearest.into(),
    ]);
    Ok(Output {
        name: "optimal_bl".into(),
        table: t,
        plot: None,
    })
}

fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.flags.config {
        Some(path) => flags_from_file(path)?,
        None => Flags::default(),
    };
    let settings = merge(cli.flags, file)?;
    if let Some(dir) = &settings.out {
        prepare_out_dir(dir)?;
    }
    let output = match &cli.command {
        Command::Simulate => simulate(&settings)?,
        Command::Asymptotic => asymptotic(&settings)?,
        Command::Sweep => sweep(&settings)?,
        Command::Figure { id } => figure(&settings, id)?,
        Command::OptimalBl => optimal(&settings)?,
    };
    emit(&settings, &output)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}
