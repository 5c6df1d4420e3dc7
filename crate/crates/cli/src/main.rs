//! Command-line front end: dimensions, recurrent-set dimension tables,
//! recurrent-point sampling, box-count estimation, covering verification,
//! and raster output.

mod fmt;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use carpet_recur::boxcount::{estimate_dimension, BoxcountError, PointCloud};
use carpet_recur::carpet::CarpetError;
use carpet_recur::dimtheory::{recurrent_set_dimension, DimError, DimReport, ProbabilityVector};
use carpet_recur::rate::{parse_rate_spec, RateError, RateSpec};
use carpet_recur::recur::{verify_covering, CoverBudget, CoverReport, RecurError};
use carpet_recur::sampler::{make_schedule_from, sample_cloud, SampleConfig, SampleError};
use carpet_recur::{Carpet, Coord, RateFunction, Tau};

use fmt::{sig12, sig17};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_BUDGET: u8 = 4;

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self {
            code,
            msg: msg.into(),
        }
    }
}

impl From<CarpetError> for CliError {
    fn from(e: CarpetError) -> Self {
        CliError::new(EXIT_PARSE, format!("carpet spec: {e}"))
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        CliError::new(EXIT_PARSE, format!("rate spec: {e}"))
    }
}

impl From<DimError> for CliError {
    fn from(e: DimError) -> Self {
        let code = match e {
            DimError::NonUniformFibre(_) | DimError::InvalidTauPair { .. } => EXIT_HYPOTHESIS,
            _ => EXIT_PARSE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<RecurError> for CliError {
    fn from(e: RecurError) -> Self {
        let code = match e {
            RecurError::NonUniformFibre(_) => EXIT_HYPOTHESIS,
            RecurError::BudgetExceeded(_) | RecurError::LevelTooDeep(_) => EXIT_BUDGET,
            _ => EXIT_PARSE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        CliError::new(EXIT_PARSE, e.to_string())
    }
}

impl From<BoxcountError> for CliError {
    fn from(e: BoxcountError) -> Self {
        CliError::new(EXIT_PARSE, e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(EXIT_IO, format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "carpet-recur",
    about = "Quantitative recurrence on Bedford-McMullen carpets",
    version
)]
struct Cli {
    /// Worker threads for parallel commands (0 = rayon default).
    /// Outputs are identical for every thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print box and Hausdorff dimensions and the uniform-fibre flag.
    Dim {
        /// Carpet spec file.
        carpet: PathBuf,
    },
    /// Evaluate the recurrent-set dimension formula; one CSV row per tau1.
    RecurDim {
        carpet: PathBuf,
        #[command(flatten)]
        tau: TauSource,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample recurrent points into a point-cloud CSV.
    Sample {
        carpet: PathBuf,
        /// Rate spec: `powexp t=<real> [gamma=<real>] [c=<real>]`.
        #[arg(long)]
        rate: String,
        #[arg(long)]
        depth: u64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First scheduled time n_1.
        #[arg(long, default_value_t = 6)]
        first_time: u64,
        /// Growth margin of the schedule (>= 2).
        #[arg(long, default_value_t = 2)]
        growth_margin: u64,
        /// Append exact rational coordinate columns.
        #[arg(long)]
        coords: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Box-count dimension estimate of a point-cloud CSV.
    Estimate {
        cloud: PathBuf,
        /// Inclusive level range "LO..HI".
        #[arg(long)]
        levels: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact covering counts against the closed-form bound; CSV report.
    VerifyCover {
        carpet: PathBuf,
        #[arg(long)]
        rate: String,
        /// Inclusive time range "LO..HI".
        #[arg(long)]
        n_range: String,
        /// Coordinate: 1 (horizontal) or 2 (vertical).
        #[arg(long)]
        coord: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a carpet or a point cloud to a binary PGM image.
    Render {
        /// Carpet spec file (omit when rendering a cloud).
        carpet: Option<PathBuf>,
        /// Point-cloud CSV to render instead of a carpet.
        #[arg(long, conflicts_with = "carpet")]
        cloud: Option<PathBuf>,
        #[arg(long)]
        resolution: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TauSource {
    /// Rate spec; tau values come from the rate.
    #[arg(long)]
    rate: Option<String>,
    /// Comma-separated tau1 values (tau2 linked).
    #[arg(long)]
    tau1: Option<String>,
    /// Inclusive grid "START:STOP:STEPS" of tau1 values (tau2 linked).
    #[arg(long)]
    tau1_grid: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Ignore failure: the global pool can only be set once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn budget_from_env() -> CoverBudget {
    match std::env::var("CARPET_RECUR_BUDGET") {
        Ok(v) => match v.parse::<u64>() {
            Ok(n) if n > 0 => CoverBudget::from_cylinders(n),
            _ => CoverBudget::default(),
        },
        Err(_) => CoverBudget::default(),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn load_carpet(path: &Path) -> Result<Carpet, CliError> {
    Ok(Carpet::parse_spec(&read_file(path)?)?)
}

fn load_rate(spec: &str, carpet: &Carpet) -> Result<RateFunction, CliError> {
    let parsed = parse_rate_spec(spec)?;
    let table_text = match &parsed {
        RateSpec::Table { path } => Some(read_file(Path::new(path))?),
        RateSpec::PowerExp { .. } => None,
    };
    Ok(RateFunction::from_spec(
        &parsed,
        carpet.m1(),
        carpet.m2(),
        table_text.as_deref(),
    )?)
}

fn parse_range(s: &str, what: &str) -> Result<(u64, u64), CliError> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| CliError::new(EXIT_PARSE, format!("{what}: expected 'LO..HI', got '{s}'")))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| CliError::new(EXIT_PARSE, format!("{what}: bad integer '{lo}'")))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| CliError::new(EXIT_PARSE, format!("{what}: bad integer '{hi}'")))?;
    if lo > hi {
        return Err(CliError::new(EXIT_PARSE, format!("{what}: empty range {s}")));
    }
    Ok((lo, hi))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Dim { carpet } => {
            let c = load_carpet(&carpet)?;
            println!(
                "hausdorff {} box {} uniform {}",
                sig12(c.hausdorff_dimension()),
                sig12(c.box_dimension()),
                c.is_uniform_fibre()
            );
            Ok(())
        }
        Command::RecurDim { carpet, tau, out } => {
            let c = load_carpet(&carpet)?;
            let (rows, estimated) = tau_rows(&c, &tau)?;
            let mut csv = String::new();
            if estimated {
                // Tabulated rates only admit a tail-window proxy for the
                // liminf; flag the rows as estimates.
                csv.push_str("# tau estimated from the table tail window [horizon/2, horizon]\n");
            }
            csv.push_str("tau1,tau2,case,value,active\n");
            for (t1, t2) in rows {
                let report = recurrent_set_dimension(&c, t1, t2)?;
                csv.push_str(&recur_dim_row(t1, t2, &report));
            }
            emit(out.as_deref(), &csv)
        }
        Command::Sample {
            carpet,
            rate,
            depth,
            count,
            seed,
            first_time,
            growth_margin,
            coords,
            out,
        } => {
            let c = load_carpet(&carpet)?;
            let r = load_rate(&rate, &c)?;
            let schedule = make_schedule_from(&r, depth, growth_margin, first_time)?;
            let p = ProbabilityVector::uniform(&c);
            let cfg = SampleConfig::new(c, p, r, schedule, depth, seed)?;
            let cloud = sample_cloud(&cfg, count);
            let csv = cloud.to_csv(coords)?;
            emit(out.as_deref(), &csv)
        }
        Command::Estimate { cloud, levels, out } => {
            let text = read_file(&cloud)?;
            let cloud = PointCloud::from_csv(&text)?;
            let (lo, hi) = parse_range(&levels, "--levels")?;
            let est = estimate_dimension(&cloud, lo..=hi)?;
            let mut csv = String::from("level,n2,count,saturated\n");
            for row in &est.levels {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    row.level, row.n2, row.count, row.saturated
                ));
            }
            csv.push_str(&format!(
                "slope,{},r2,{}\n",
                sig17(est.slope),
                sig17(est.r_squared)
            ));
            emit(out.as_deref(), &csv)
        }
        Command::VerifyCover {
            carpet,
            rate,
            n_range,
            coord,
            out,
        } => {
            let c = load_carpet(&carpet)?;
            let r = load_rate(&rate, &c)?;
            let coord = Coord::from_index(coord)
                .ok_or_else(|| CliError::new(EXIT_PARSE, "--coord must be 1 or 2"))?;
            let (lo, hi) = parse_range(&n_range, "--n-range")?;
            let budget = budget_from_env();
            let reports = verify_covering(&c, &r, lo..=hi, coord, &budget)?;
            let mut csv = format!("{}\n", CoverReport::csv_header());
            for rep in &reports {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    rep.n,
                    rep.coord.index(),
                    rep.level,
                    rep.exact_count,
                    sig17(rep.bound),
                    sig17(rep.slack())
                ));
            }
            emit(out.as_deref(), &csv)
        }
        Command::Render {
            carpet,
            cloud,
            resolution,
            out,
        } => {
            if resolution == 0 {
                return Err(CliError::new(EXIT_PARSE, "--resolution must be >= 1"));
            }
            let img = match (carpet, cloud) {
                (Some(path), None) => {
                    let c = load_carpet(&path)?;
                    render::render_carpet(&c, resolution, &budget_from_env()).map_err(|words| {
                        CliError::new(
                            EXIT_BUDGET,
                            format!("rendering needs {words} cylinders, over budget"),
                        )
                    })?
                }
                (None, Some(path)) => {
                    let cloud = PointCloud::from_csv(&read_file(&path)?)?;
                    render::render_cloud(&cloud, resolution)
                }
                _ => {
                    return Err(CliError::new(
                        EXIT_PARSE,
                        "render needs a carpet spec or --cloud",
                    ))
                }
            };
            std::fs::write(&out, img.to_pgm()).map_err(|e| io_err(&out, e))
        }
    }
}

fn linked_tau(c: &Carpet, t1: f64) -> (Tau, Tau) {
    let theta = f64::from(c.m1()).ln() / f64::from(c.m2()).ln();
    (Tau::Finite(t1), Tau::Finite(t1 * theta))
}

fn tau_rows(c: &Carpet, source: &TauSource) -> Result<(Vec<(Tau, Tau)>, bool), CliError> {
    if let Some(spec) = &source.rate {
        let r = load_rate(spec, c)?;
        return Ok((
            vec![(r.tau(Coord::X), r.tau(Coord::Y))],
            r.tau_is_estimated(),
        ));
    }
    if let Some(list) = &source.tau1 {
        let mut rows = Vec::new();
        for tok in list.split(',') {
            let t: f64 = tok.trim().parse().map_err(|_| {
                CliError::new(EXIT_PARSE, format!("--tau1: bad number '{tok}'"))
            })?;
            rows.push(linked_tau(c, t));
        }
        return Ok((rows, false));
    }
    if let Some(grid) = &source.tau1_grid {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::new(
                EXIT_PARSE,
                "--tau1-grid: expected 'START:STOP:STEPS'",
            ));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| CliError::new(EXIT_PARSE, "--tau1-grid: bad start"))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| CliError::new(EXIT_PARSE, "--tau1-grid: bad stop"))?;
        let steps: usize = parts[2]
            .parse()
            .map_err(|_| CliError::new(EXIT_PARSE, "--tau1-grid: bad steps"))?;
        if steps < 2 || stop < start {
            return Err(CliError::new(EXIT_PARSE, "--tau1-grid: need steps >= 2, stop >= start"));
        }
        let rows = (0..steps)
            .map(|k| {
                let t = start + (stop - start) * k as f64 / (steps - 1) as f64;
                linked_tau(c, t)
            })
            .collect();
        return Ok((rows, false));
    }
    unreachable!("clap group enforces one source")
}

fn tau_field(t: Tau) -> String {
    match t {
        Tau::Negative => "negative".to_string(),
        Tau::Infinite => "inf".to_string(),
        Tau::Finite(v) => sig17(v),
    }
}

fn recur_dim_row(t1: Tau, t2: Tau, rep: &DimReport) -> String {
    format!(
        "{},{},{},{},{}\n",
        tau_field(t1),
        tau_field(t2),
        rep.case.label(),
        sig17(rep.value),
        rep.active.label()
    )
}
