//! Configuration parsing, subcommand dispatch, and deterministic CSV
//! emission.
//!
//! Every artifact starts with a single '#'-prefixed JSON config echo line
//! (the echoed config reparses to an equal RunConfig), followed by a column
//! header and data rows.  Floats are emitted with 17 significant digits so
//! the round trip is lossless, and no wall-clock data enters the rows:
//! identical configs yield byte-identical CSV bodies.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{
    check_dissipation_identity, estimate_observability, kato_bound_check, morawetz_identity_check,
    trazos_identity_check, IdentityReport,
};
use crate::error::{KpError, Result};
use crate::grid::Grid2D;
use crate::operators::{assemble_generator, FeedbackConfig};
use crate::spectrum::{compute_spectrum, critical_length_scan};
use crate::stepper::{initial_condition, simulate, IcPreset, SimulationRun, TimeScheme};

/// Full experiment configuration: model, grid, time scheme, initial datum,
/// and subcommand-specific options.  Unknown keys in config files are
/// rejected.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub l: f64,
    pub nx: usize,
    pub ny: usize,
    pub alpha: f64,
    pub beta: f64,
    pub drift: bool,
    pub t_final: f64,
    /// timestep; 0 means the default T/1024
    pub dt: f64,
    pub theta: f64,
    pub ic: IcPreset,
    pub seed: u64,
    /// snapshot stride for the simulate artifact (steps between stored
    /// states); 0 means "initial and final state only"
    pub stride: usize,
    pub out: Option<PathBuf>,
    /// decay-fit window; None means the last half of the run
    pub fit_window: Option<(f64, f64)>,
    /// observability sample size
    pub samples: usize,
    /// L values for the scan subcommand
    pub l_values: Vec<f64>,
    /// grid resolution per scan point
    pub scan_n: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            l: 1.0,
            nx: 32,
            ny: 32,
            alpha: 0.5,
            beta: 1.0,
            drift: true,
            t_final: 5.0,
            dt: 0.0,
            theta: 0.5,
            ic: IcPreset::Gaussian,
            seed: 0,
            stride: 0,
            out: None,
            fit_window: None,
            samples: 20,
            l_values: vec![1.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
            scan_n: 24,
        }
    }
}

impl RunConfig {
    pub fn feedback(&self) -> Result<FeedbackConfig> {
        FeedbackConfig::new(self.alpha, self.beta, self.drift, self.l)
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::build(self.l, self.nx, self.ny)
    }

    pub fn scheme(&self) -> Result<TimeScheme> {
        if self.dt == 0.0 {
            TimeScheme::with_default_dt(self.theta, self.t_final)
        } else {
            TimeScheme::new(self.dt, self.theta, self.t_final)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.feedback()?;
        self.grid()?;
        self.scheme()?;
        if self.samples == 0 {
            return Err(KpError::Config("sample size must be >= 1".into()));
        }
        if self.l_values.is_empty() {
            return Err(KpError::Config("scan needs at least one L value".into()));
        }
        Ok(())
    }

    /// Output directory: KP2STAB_OUT env overrides the configured one;
    /// default is the current directory.
    pub fn out_dir(&self) -> PathBuf {
        if let Ok(env) = std::env::var("KP2STAB_OUT") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Command-line flags; every flag overrides the corresponding config-file
/// key.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// domain size L of (0,L)^2
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// grid intervals in x
    #[arg(long = "Nx")]
    pub nx: Option<usize>,
    /// grid intervals in y
    #[arg(long = "Ny")]
    pub ny: Option<usize>,
    /// feedback gain alpha, |alpha| < 1
    #[arg(long)]
    pub alpha: Option<f64>,
    /// feedback gain beta > 0
    #[arg(long)]
    pub beta: Option<f64>,
    /// include the u_x drift term (true/false)
    #[arg(long)]
    pub drift: Option<bool>,
    /// final time T
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// timestep (default T/1024)
    #[arg(long)]
    pub dt: Option<f64>,
    /// implicitness parameter in [1/2, 1]
    #[arg(long)]
    pub theta: Option<f64>,
    /// initial condition preset: gaussian | sine-product | random-smooth
    #[arg(long)]
    pub ic: Option<String>,
    /// random seed for random-smooth data
    #[arg(long)]
    pub seed: Option<u64>,
    /// snapshot stride (0 = initial and final only)
    #[arg(long)]
    pub stride: Option<usize>,
    /// output directory (KP2STAB_OUT env wins over this)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// decay-fit window start
    #[arg(long)]
    pub fit_t0: Option<f64>,
    /// decay-fit window end
    #[arg(long)]
    pub fit_t1: Option<f64>,
    /// observability sample size
    #[arg(long)]
    pub samples: Option<usize>,
    /// comma-separated L values for the scan
    #[arg(long, value_delimiter = ',')]
    pub l_values: Option<Vec<f64>>,
    /// grid resolution per scan point
    #[arg(long)]
    pub scan_n: Option<usize>,
}

/// Numerical study of a dissipative boundary-feedback loop for a linearized
/// two-dimensional dispersive wave model on a square.
#[derive(Debug, Parser)]
#[command(name = "kp2stab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trajectory and emit the per-step energy trace and snapshots
    Simulate(ConfigFlags),
    /// Verify the energy identities on a refinement series of runs
    Identities(ConfigFlags),
    /// Dense eigenanalysis: eigenvalues, residuals, trace visibility
    Spectrum(ConfigFlags),
    /// Estimate the observability constant over a sample of initial data
    Observability(ConfigFlags),
    /// Sweep the domain size L: spectral abscissa and minimum visibility
    Scan(ConfigFlags),
}

/// Builds the effective RunConfig: defaults, then the config file, then
/// flags.
pub fn parse_config(flags: &ConfigFlags) -> Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| KpError::Config(format!("config file {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = flags.l {
        cfg.l = v;
    }
    if let Some(v) = flags.nx {
        cfg.nx = v;
    }
    if let Some(v) = flags.ny {
        cfg.ny = v;
    }
    if let Some(v) = flags.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = flags.beta {
        cfg.beta = v;
    }
    if let Some(v) = flags.drift {
        cfg.drift = v;
    }
    if let Some(v) = flags.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = flags.dt {
        cfg.dt = v;
    }
    if let Some(v) = flags.theta {
        cfg.theta = v;
    }
    if let Some(v) = &flags.ic {
        cfg.ic = v.parse()?;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.stride {
        cfg.stride = v;
    }
    if let Some(v) = &flags.out {
        cfg.out = Some(v.clone());
    }
    match (flags.fit_t0, flags.fit_t1) {
        (Some(a), Some(b)) => cfg.fit_window = Some((a, b)),
        (None, None) => {}
        _ => {
            return Err(KpError::Config(
                "fit window needs both --fit-t0 and --fit-t1".into(),
            ))
        }
    }
    if let Some(v) = flags.samples {
        cfg.samples = v;
    }
    if let Some(v) = &flags.l_values {
        cfg.l_values = v.clone();
    }
    if let Some(v) = flags.scan_n {
        cfg.scan_n = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// 17-significant-digit float formatting (lossless round trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn config_echo(cfg: &RunConfig) -> Result<String> {
    serde_json::to_string(cfg).map_err(|e| KpError::Config(format!("config echo failed: {e}")))
}

struct CsvWriter {
    body: String,
}

impl CsvWriter {
    fn new(cfg: &RunConfig, columns: &[&str]) -> Result<CsvWriter> {
        let mut body = String::new();
        writeln!(body, "# {}", config_echo(cfg)?).expect("string write");
        writeln!(body, "{}", columns.join(",")).expect("string write");
        Ok(CsvWriter { body })
    }

    fn row(&mut self, cells: &[String]) {
        writeln!(self.body, "{}", cells.join(",")).expect("string write");
    }

    fn write(self, dir: &Path, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, self.body)?;
        Ok(path)
    }
}

fn run_stride_one(cfg: &RunConfig) -> Result<SimulationRun> {
    let grid = cfg.grid()?;
    let fb = cfg.feedback()?;
    let scheme = cfg.scheme()?;
    let u0 = initial_condition(cfg.ic, &grid, cfg.seed);
    simulate(&u0, &scheme, &fb, &grid, 1)
}

fn energy_trace_rows(w: &mut CsvWriter, run: &SimulationRun) {
    let tr = &run.trace;
    for n in 0..tr.len() {
        w.row(&[
            fmt_f64(tr.t[n]),
            fmt_f64(tr.e[n]),
            fmt_f64(tr.i_ux0[n]),
            fmt_f64(tr.i_top[n]),
            fmt_f64(tr.i_nloc[n]),
            fmt_f64(tr.dedt[n]),
            fmt_f64(tr.rhs[n]),
            fmt_f64(tr.residual[n]),
        ]);
    }
}

/// `simulate`: energy_trace.csv (t, E, I_ux0, I_top, I_nloc, dEdt, rhs,
/// residual) plus snapshots.csv (t, x, y, u) at the configured stride.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let scheme = cfg.scheme()?;
    let stride = if cfg.stride == 0 {
        scheme.n_steps()
    } else {
        cfg.stride
    };
    let grid = cfg.grid()?;
    let fb = cfg.feedback()?;
    let u0 = initial_condition(cfg.ic, &grid, cfg.seed);
    let run = simulate(&u0, &scheme, &fb, &grid, stride)?;

    let dir = cfg.out_dir();
    let mut trace = CsvWriter::new(
        cfg,
        &["t", "E", "I_ux0", "I_top", "I_nloc", "dEdt", "rhs", "residual"],
    )?;
    energy_trace_rows(&mut trace, &run);
    let p1 = trace.write(&dir, "energy_trace.csv")?;

    let mut snaps = CsvWriter::new(cfg, &["t", "x", "y", "u"])?;
    for (u, &t) in run.snapshots.iter().zip(&run.snapshot_times) {
        for i in 0..=grid.nx() {
            for j in 0..=grid.ny() {
                snaps.row(&[
                    fmt_f64(t),
                    fmt_f64(grid.x(i)),
                    fmt_f64(grid.y(j)),
                    fmt_f64(u.value(i, j)),
                ]);
            }
        }
    }
    let p2 = snaps.write(&dir, "snapshots.csv")?;
    Ok(vec![p1, p2])
}

fn identity_row(w: &mut CsvWriter, rep: &IdentityReport) {
    w.row(&[
        rep.name.to_string(),
        rep.nx.to_string(),
        rep.ny.to_string(),
        fmt_f64(rep.dt),
        fmt_f64(rep.lhs),
        fmt_f64(rep.rhs),
        fmt_f64(rep.residual),
    ]);
}

/// `identities`: identity_report.csv, one row per identity per refinement
/// level {n, 2n, 4n} with dt halved alongside h.
pub fn cmd_identities(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let scheme = cfg.scheme()?;
    let mut w = CsvWriter::new(
        cfg,
        &["identity", "nx", "ny", "dt", "lhs", "rhs", "residual"],
    )?;
    for level in 0..3u32 {
        let factor = 1usize << level;
        let mut c = cfg.clone();
        c.nx = cfg.nx * factor;
        c.ny = cfg.ny * factor;
        c.dt = scheme.dt / factor as f64;
        let run = run_stride_one(&c)?;
        identity_row(&mut w, &check_dissipation_identity(&run)?);
        identity_row(&mut w, &morawetz_identity_check(&run)?);
        identity_row(&mut w, &trazos_identity_check(&run)?);
        identity_row(&mut w, &kato_bound_check(&run)?);
    }
    Ok(vec![w.write(&cfg.out_dir(), "identity_report.csv")?])
}

/// `spectrum`: spectrum.csv with one row per eigenpair (lambda, residual,
/// visibility; visibility empty for uncertified pairs) and a summary line
/// set (sigma, tau, operator norm).
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let grid = cfg.grid()?;
    let fb = cfg.feedback()?;
    let a = assemble_generator(&grid, &fb)?;
    let rep = compute_spectrum(&a)?;

    let mut w = CsvWriter::new(
        cfg,
        &["lambda_re", "lambda_im", "residual", "certified", "visibility"],
    )?;
    // deterministic emission order: sort by (Re, Im) descending
    let mut order: Vec<usize> = (0..rep.pairs.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&rep.pairs[i].lambda, &rep.pairs[j].lambda);
        b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
    });
    for &i in &order {
        let p = &rep.pairs[i];
        let vis = if p.certified {
            fmt_f64(
                crate::spectrum::eigen_visibility(p, &grid, &fb)?.visibility,
            )
        } else {
            String::new()
        };
        w.row(&[
            fmt_f64(p.lambda.re),
            fmt_f64(p.lambda.im),
            fmt_f64(p.residual),
            (p.certified as u8).to_string(),
            vis,
        ]);
    }
    let dir = cfg.out_dir();
    let p1 = w.write(&dir, "spectrum.csv")?;

    let mut s = CsvWriter::new(cfg, &["sigma", "tau", "op_norm", "n_uncertified"])?;
    s.row(&[
        fmt_f64(rep.sigma),
        fmt_f64(rep.tau),
        fmt_f64(rep.op_norm),
        rep.n_uncertified.to_string(),
    ]);
    let p2 = s.write(&dir, "spectrum_summary.csv")?;
    Ok(vec![p1, p2])
}

/// `observability`: observability.csv (per-sample ratios over seeded
/// random-smooth data) and observability_summary.csv with the derived
/// constants (C_obs, gamma, theta, kappa) and the worst envelope excess.
pub fn cmd_observability(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let grid = cfg.grid()?;
    let fb = cfg.feedback()?;
    let scheme = cfg.scheme()?;
    let a = assemble_generator(&grid, &fb)?;
    let mut runs = Vec::with_capacity(cfg.samples);
    for s in 0..cfg.samples {
        let u0 = initial_condition(IcPreset::RandomSmooth, &grid, cfg.seed + s as u64);
        runs.push(crate::stepper::simulate_with_matrix(&a, &u0, &scheme, 1)?);
    }
    let rep = estimate_observability(&runs)?;

    let dir = cfg.out_dir();
    let mut w = CsvWriter::new(cfg, &["sample", "seed", "ratio"])?;
    for (s, r) in rep.ratios.iter().enumerate() {
        w.row(&[
            s.to_string(),
            (cfg.seed + s as u64).to_string(),
            fmt_f64(*r),
        ]);
    }
    let p1 = w.write(&dir, "observability.csv")?;

    let mut s = CsvWriter::new(
        cfg,
        &["c_obs", "gamma", "theta", "kappa", "t_horizon", "envelope_max_excess"],
    )?;
    s.row(&[
        fmt_f64(rep.c_obs),
        fmt_f64(rep.gamma),
        fmt_f64(rep.theta),
        fmt_f64(rep.kappa),
        fmt_f64(rep.t_horizon),
        fmt_f64(rep.envelope_max_excess),
    ]);
    let p2 = s.write(&dir, "observability_summary.csv")?;
    Ok(vec![p1, p2])
}

/// `scan`: scan.csv with one row per domain size L (sigma, tau, minimum
/// eigenfield visibility).
pub fn cmd_scan(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let records = critical_length_scan(&cfg.l_values, cfg.alpha, cfg.beta, cfg.drift, cfg.scan_n)?;
    let mut w = CsvWriter::new(
        cfg,
        &["L", "sigma", "tau", "min_visibility", "n_certified", "n_uncertified"],
    )?;
    for r in &records {
        w.row(&[
            fmt_f64(r.l),
            fmt_f64(r.sigma),
            fmt_f64(r.tau),
            fmt_f64(r.min_visibility),
            r.n_certified.to_string(),
            r.n_uncertified.to_string(),
        ]);
    }
    Ok(vec![w.write(&cfg.out_dir(), "scan.csv")?])
}

/// Dispatches a parsed command line; returns the written artifact paths.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let (flags, f): (&ConfigFlags, fn(&RunConfig) -> Result<Vec<PathBuf>>) = match &cli.command {
        Command::Simulate(fl) => (fl, cmd_simulate),
        Command::Identities(fl) => (fl, cmd_identities),
        Command::Spectrum(fl) => (fl, cmd_spectrum),
        Command::Observability(fl) => (fl, cmd_observability),
        Command::Scan(fl) => (fl, cmd_scan),
    };
    let cfg = parse_config(flags)?;
    f(&cfg)
}

/// Binary entry point: parse, run, report errors with a machine-readable
/// category, and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_and_validate() {
        let cfg = parse_config(&ConfigFlags::default()).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.scheme().unwrap().dt, 5.0 / 1024.0);
    }

    #[test]
    fn flags_override_defaults() {
        let flags = ConfigFlags {
            alpha: Some(0.25),
            nx: Some(16),
            t_final: Some(2.0),
            ic: Some("sine-product".into()),
            ..Default::default()
        };
        let cfg = parse_config(&flags).unwrap();
        assert_eq!(cfg.alpha, 0.25);
        assert_eq!(cfg.nx, 16);
        assert_eq!(cfg.t_final, 2.0);
        assert_eq!(cfg.ic, IcPreset::SineProduct);
    }

    #[test]
    fn invalid_gains_are_rejected_with_the_range_message() {
        let e = parse_config(&ConfigFlags {
            alpha: Some(1.0),
            ..Default::default()
        })
        .unwrap_err();
        assert!(e.to_string().contains("|alpha| < 1"), "{e}");
        let e = parse_config(&ConfigFlags {
            beta: Some(0.0),
            ..Default::default()
        })
        .unwrap_err();
        assert!(e.to_string().contains("beta > 0"), "{e}");
    }

    #[test]
    fn config_file_round_trip_and_unknown_key_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        let cfg = RunConfig {
            alpha: 0.3,
            nx: 16,
            ny: 16,
            ..Default::default()
        };
        std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
        let flags = ConfigFlags {
            config: Some(path.clone()),
            ..Default::default()
        };
        assert_eq!(parse_config(&flags).unwrap(), cfg);
        // flags still override the file
        let flags2 = ConfigFlags {
            config: Some(path.clone()),
            alpha: Some(0.7),
            ..Default::default()
        };
        assert_eq!(parse_config(&flags2).unwrap().alpha, 0.7);
        std::fs::write(&path, r#"{"alpha": 0.3, "mystery": 1}"#).unwrap();
        assert!(parse_config(&flags).is_err());
    }

    #[test]
    fn echo_header_reparses_to_an_equal_config() {
        let cfg = RunConfig {
            alpha: 0.1,
            beta: 0.2,
            nx: 12,
            ny: 12,
            ..Default::default()
        };
        let echoed: RunConfig = serde_json::from_str(&config_echo(&cfg).unwrap()).unwrap();
        assert_eq!(echoed, cfg);
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-13, 1.7976931348623157e308] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    fn tiny_cfg(dir: &Path) -> RunConfig {
        RunConfig {
            nx: 12,
            ny: 12,
            t_final: 0.02,
            dt: 2e-3,
            out: Some(dir.to_path_buf()),
            samples: 2,
            l_values: vec![1.0],
            scan_n: 10,
            ..Default::default()
        }
    }

    #[test]
    fn simulate_emits_trace_with_the_fixed_schema() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let paths = cmd_simulate(&cfg).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# {"));
        assert_eq!(
            lines.next().unwrap(),
            "t,E,I_ux0,I_top,I_nloc,dEdt,rhs,residual"
        );
        // 10 steps + final row
        assert_eq!(lines.count(), 11);
    }

    #[test]
    fn identical_configs_yield_byte_identical_artifacts() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let mut c1 = tiny_cfg(d1.path());
        let mut c2 = tiny_cfg(d2.path());
        for (paths1, paths2) in [
            (cmd_simulate(&c1).unwrap(), cmd_simulate(&c2).unwrap()),
            (cmd_scan(&c1).unwrap(), cmd_scan(&c2).unwrap()),
        ] {
            for (p1, p2) in paths1.iter().zip(paths2.iter()) {
                let b1 = strip_echo(&std::fs::read_to_string(p1).unwrap());
                let b2 = strip_echo(&std::fs::read_to_string(p2).unwrap());
                assert_eq!(b1, b2);
            }
        }
        // the bodies differ only through the out path in the echo line
        c1.out = None;
        c2.out = None;
        assert_eq!(config_echo(&c1).unwrap(), config_echo(&c2).unwrap());
    }

    fn strip_echo(text: &str) -> String {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn observability_artifacts_carry_the_derived_constants() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.t_final = 0.05;
        cfg.dt = 5e-3;
        let paths = cmd_observability(&cfg).unwrap();
        let summary = std::fs::read_to_string(&paths[1]).unwrap();
        let data = summary.lines().nth(2).unwrap();
        let cells: Vec<f64> = data.split(',').map(|c| c.parse().unwrap()).collect();
        let (c_obs, gamma, theta) = (cells[0], cells[1], cells[2]);
        assert!(c_obs > 0.0);
        assert!(gamma > 0.0 && gamma < 1.0);
        assert!(theta > 0.0);
    }

    #[test]
    fn cli_parses_subcommands_and_flag_spellings() {
        let cli = Cli::try_parse_from([
            "kp2stab",
            "simulate",
            "--L",
            "2.0",
            "--Nx",
            "16",
            "--Ny",
            "16",
            "--alpha",
            "0.5",
            "--beta",
            "1",
            "--T",
            "5",
        ])
        .unwrap();
        match &cli.command {
            Command::Simulate(fl) => {
                assert_eq!(fl.l, Some(2.0));
                assert_eq!(fl.nx, Some(16));
            }
            other => panic!("wrong subcommand {other:?}"),
        }
        assert!(Cli::try_parse_from(["kp2stab", "teleport"]).is_err());
    }
}
