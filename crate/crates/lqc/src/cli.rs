//! Command-line surface: wires the library modules into reproducible batch
//! experiments that emit CSV tables, JSON reports, and optional SVG plots.
//!
//! Every output file starts with a provenance line carrying the tool
//! version, the command, a hash of the effective configuration, and the
//! seed, so identical configs reproduce outputs byte for byte. Exit codes:
//! 0 all verdicts pass, 1 a numerical check failed, 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beltrami::disk::standard_normalization;
use crate::beltrami::{solve_disk, solve_exhaustion, solve_teichmuller_type, SolveReport, SolverConfig};
use crate::boundary::{grid_epsilons, lambda_bound, verify_qs_theorem, LambdaBound, QsReport};
use crate::error::Error;
use crate::grid::{BeltramiField, DiskGridMap, PolarGrid};
use crate::growth::{
    boundary_divergence_integral, check_allowable, default_t_grid, AllowabilityReport,
    GrowthFunction,
};
use crate::mapcore::{
    dilatation_field, distortion_field, k_rho, k_rho_inverse_transfer, membership_qc_rho,
    power_map_eval, power_map_mu, radial_eval, radial_mu, spiral_eval, KRho, RadialMapSpec,
};
use crate::modulus::{
    calibrated_capacity_table, lemma_qs_lower_bound, quad_modulus, quad_modulus_conjugate,
    quad_modulus_mapped, CapacityTable, QuadrilateralSpec,
};
use crate::svg;
use crate::teich::{default_twist_basis, extremal_search, HoloDensity, SearchConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "lqc", version, about = "Locally quasiconformal mapping experiments")]
pub struct Cli {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "lqc-out")]
    pub out: PathBuf,
    /// Seed for any randomized sampling; recorded in every output header.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Polar grid as `<n_r>x<n_theta>`, e.g. 256x512.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum Command {
    /// Check a growth function against the allowability conditions.
    RhoCheck,
    /// Extract dilatation, distortion profile, and membership of a map.
    MapAnalyze,
    /// Run one of the Beltrami solvers and report convergence.
    BeltramiSolve,
    /// Quadrilateral moduli, capacity tables, and the modulus lower bound.
    Modulus,
    /// Tabulate the quasisymmetry bound, optionally verifying a map.
    QsBound,
    /// Run the extremal search on a preset base map.
    ExtremalDemo,
    /// Summarize the artifacts already present in the output directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::RhoCheck => "rho-check",
            Command::MapAnalyze => "map-analyze",
            Command::BeltramiSolve => "beltrami-solve",
            Command::Modulus => "modulus",
            Command::QsBound => "qs-bound",
            Command::ExtremalDemo => "extremal-demo",
            Command::Report => "report",
        }
    }
}

/// Map family selectable from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    Radial { a: f64 },
    Power { alpha: f64 },
    Spiral,
    File { path: PathBuf },
}

impl MapSpec {
    fn build(&self, grid: PolarGrid) -> Result<DiskGridMap, Error> {
        match self {
            MapSpec::Identity => Ok(DiskGridMap::identity(grid)),
            MapSpec::Radial { a } => {
                let spec = RadialMapSpec::new(*a)?;
                Ok(DiskGridMap::sample(grid, &format!("radial a={a}"), |z| radial_eval(spec, z)))
            }
            MapSpec::Power { alpha } => {
                if !(*alpha > 0.0) {
                    return Err(Error::Domain(format!("power exponent {alpha} must be positive")));
                }
                Ok(DiskGridMap::sample(grid, &format!("power alpha={alpha}"), |z| {
                    power_map_eval(*alpha, z)
                }))
            }
            MapSpec::Spiral => {
                let mut values = Vec::with_capacity(grid.len());
                for i in 0..grid.n_r {
                    for j in 0..grid.n_theta {
                        values.push(spiral_eval(grid.node(i, j))?);
                    }
                }
                Ok(DiskGridMap { grid, values, source: "spiral".into() })
            }
            MapSpec::File { path } => DiskGridMap::read_file(path),
        }
    }
}

/// Dilatation field selectable from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSpec {
    Constant { re: f64, im: f64 },
    Radial { a: f64 },
    Power { alpha: f64 },
    File { path: PathBuf },
}

impl MuSpec {
    fn build(&self, grid: PolarGrid) -> Result<BeltramiField, Error> {
        match self {
            MuSpec::Constant { re, im } => {
                BeltramiField::sample(grid, |_| Complex64::new(*re, *im))
            }
            MuSpec::Radial { a } => {
                let spec = RadialMapSpec::new(*a)?;
                BeltramiField::sample(grid, |z| radial_mu(spec, z))
            }
            MuSpec::Power { alpha } => BeltramiField::sample(grid, |z| power_map_mu(*alpha, z)),
            MuSpec::File { path } => BeltramiField::read_file(path),
        }
    }
}

/// Solver mode plus its data for `beltrami-solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolveSpec {
    Disk { mu: MuSpec },
    Exhaustion { mu: MuSpec },
    Teichmuller { k0: f64, phi0: Vec<[f64; 2]> },
}

/// Boundary quadrilateral `{r <= |z - xi| <= R}` for the modulus command.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub xi_angle: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

/// Sample plan for `qs-bound`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsSpec {
    /// Scales `t`; all must lie in (0, pi/2]. Default: 8 uniform values on
    /// [0.05, pi/2].
    pub t_values: Option<Vec<f64>>,
    /// Number of seeded random base angles when verifying a map.
    #[serde(default = "default_xi_count")]
    pub xi_count: usize,
}

fn default_xi_count() -> usize {
    5
}

/// Preset and search knobs for `extremal-demo`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremalSpec {
    pub preset: ExtremalPreset,
    /// Target maximal dilatation of the Teichmüller-type preset.
    #[serde(default = "default_k0")]
    pub k0: f64,
    /// Half-width of the symmetric coefficient box.
    #[serde(default = "default_c_limit")]
    pub c_limit: f64,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_line_tol")]
    pub line_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalPreset {
    Identity,
    Teichmuller,
}

fn default_k0() -> f64 {
    2.0
}

fn default_c_limit() -> f64 {
    0.6
}

fn default_sweeps() -> usize {
    4
}

fn default_line_tol() -> f64 {
    5e-3
}

/// The whole experiment configuration; every block is optional and each
/// command reads only the blocks it needs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rho: Option<GrowthFunction>,
    pub map: Option<MapSpec>,
    pub solve: Option<SolveSpec>,
    pub solver: Option<SolverConfig>,
    pub quad: Option<QuadSpec>,
    /// Teichmüller capacity table abscissae.
    pub tau_s: Option<Vec<f64>>,
    /// Cross-check the capacity table against the grid Laplace oracle.
    pub calibrate: bool,
    pub qs: Option<QsSpec>,
    pub extremal: Option<ExtremalSpec>,
    /// Also emit SVG plots next to the CSVs.
    pub svg: bool,
}

/// A failure with the exit code it maps to.
enum Failure {
    /// Invalid configuration or arguments: exit 2.
    Usage(String),
    /// A computation or verdict failed: exit 1.
    Numeric(String),
}

type CmdResult = std::result::Result<i32, Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn numeric<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Numeric(e.to_string())
}

/// Writes output files, prefixing each with the provenance header line.
struct Outputs {
    dir: PathBuf,
    header: String,
    svg: bool,
}

impl Outputs {
    fn new(dir: &Path, command: Command, config_hash: &str, seed: u64, svg: bool) -> CmdResult2<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(format!("cannot create output dir {dir:?}: {e}")))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            header: format!(
                "# lqc {TOOL_VERSION} {} config={config_hash} seed={seed}",
                command.name()
            ),
            svg,
        })
    }

    fn write(&self, name: &str, body: &str) -> CmdResult2<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, format!("{}\n{body}", self.header))
            .map_err(|e| Failure::Numeric(format!("cannot write {path:?}: {e}")))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, body: &T) -> CmdResult2<PathBuf> {
        let json = serde_json::to_string_pretty(body)
            .map_err(|e| Failure::Numeric(format!("cannot serialize {name}: {e}")))?;
        let path = self.dir.join(name);
        // JSON cannot carry a comment line; the header is the first field.
        std::fs::write(
            &path,
            format!("{{\n  \"header\": {},\n  \"body\": {}\n}}\n", header_json(&self.header), indent(&json)),
        )
        .map_err(|e| Failure::Numeric(format!("cannot write {path:?}: {e}")))?;
        Ok(path)
    }

    fn write_svg(&self, name: &str, chart: String) -> CmdResult2<()> {
        if self.svg {
            // SVG carries the header as an XML comment after the first line.
            let with_comment = chart.replacen('\n', &format!("\n<!-- {} -->\n", &self.header[2..]), 1);
            let path = self.dir.join(name);
            std::fs::write(&path, with_comment)
                .map_err(|e| Failure::Numeric(format!("cannot write {path:?}: {e}")))?;
        }
        Ok(())
    }
}

type CmdResult2<T> = std::result::Result<T, Failure>;

fn header_json(header: &str) -> String {
    serde_json::to_string(&header[2..]).expect("string serializes")
}

fn indent(json: &str) -> String {
    json.replace('\n', "\n  ")
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("failed: {msg}");
            1
        }
    }
}

fn parse_grid_flag(flag: Option<&str>) -> CmdResult2<PolarGrid> {
    let Some(text) = flag else {
        return Ok(PolarGrid::default_disk());
    };
    let (nr, nt) = text
        .split_once('x')
        .ok_or_else(|| Failure::Usage(format!("grid {text:?} is not of the form <n_r>x<n_theta>")))?;
    let n_r: usize = nr.parse().map_err(|_| Failure::Usage(format!("bad n_r in {text:?}")))?;
    let n_theta: usize =
        nt.parse().map_err(|_| Failure::Usage(format!("bad n_theta in {text:?}")))?;
    PolarGrid::new(n_r, n_theta, 1.0 - 1.0 / n_theta as f64).map_err(usage)
}

fn dispatch(cli: &Cli) -> CmdResult {
    let config: ExperimentConfig = match &cli.config {
        None => ExperimentConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read config {path:?}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("bad config {path:?}: {e}")))?
        }
    };
    let grid = parse_grid_flag(cli.grid.as_deref())?;
    let canonical = serde_json::to_string(&config).map_err(numeric)?;
    let hash = {
        let mut h = Sha256::new();
        h.update(canonical.as_bytes());
        let digest = h.finalize();
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            let _ = write!(hex, "{b:02x}");
        }
        hex
    };
    let out = Outputs::new(&cli.out, cli.command, &hash, cli.seed, config.svg)?;
    match cli.command {
        Command::RhoCheck => cmd_rho_check(&config, &out),
        Command::MapAnalyze => cmd_map_analyze(&config, grid, &out),
        Command::BeltramiSolve => cmd_beltrami_solve(&config, grid, &out),
        Command::Modulus => cmd_modulus(&config, grid, &out),
        Command::QsBound => cmd_qs_bound(&config, grid, cli.seed, &out),
        Command::ExtremalDemo => cmd_extremal_demo(&config, grid, &out),
        Command::Report => cmd_report(&out),
    }
}

fn config_rho(config: &ExperimentConfig) -> GrowthFunction {
    config.rho.clone().unwrap_or(GrowthFunction::Constant)
}

#[derive(Serialize)]
struct RhoCheckDoc {
    rho: GrowthFunction,
    allowable: bool,
    report: AllowabilityReport,
}

fn cmd_rho_check(config: &ExperimentConfig, out: &Outputs) -> CmdResult {
    let rho = config_rho(config);
    let t_grid = default_t_grid(1.0);
    let report = check_allowable(&rho, 1.0, &t_grid).map_err(usage)?;
    let mut csv = String::from("t,I\n");
    for &(t, i) in &report.i_samples {
        let _ = writeln!(csv, "{t:.17e},{i:.17e}");
    }
    out.write("rho_check_integral.csv", &csv)?;
    out.write_svg(
        "rho_check_integral.svg",
        svg::line_chart("boundary integral I(t)", "t", "I", &report.i_samples),
    )?;
    let allowable = report.allowable();
    out.write_json("rho_check.json", &RhoCheckDoc { rho, allowable, report })?;
    Ok(if allowable { 0 } else { 1 })
}

#[derive(Serialize)]
struct DavidRow {
    k: f64,
    sigma: f64,
    bound: Option<f64>,
}

#[derive(Serialize)]
struct MapAnalyzeDoc {
    map: MapSpec,
    rho: GrowthFunction,
    k_rho: KRho,
    /// Least grid constant with `D <= C rho`; absent on non-membership.
    membership_c: Option<f64>,
    david: Vec<DavidRow>,
}

fn cmd_map_analyze(config: &ExperimentConfig, grid: PolarGrid, out: &Outputs) -> CmdResult {
    let Some(map_spec) = &config.map else {
        return Err(Failure::Usage("map-analyze needs a \"map\" config block".into()));
    };
    let rho = config_rho(config);
    let map = map_spec.build(grid).map_err(usage)?;
    let (mu, _) = dilatation_field(&map).map_err(numeric)?;
    out.write("map_mu.lqcmu", &mu.to_lqcmu())?;
    // Per-ring distortion maxima against the growth function.
    let d = distortion_field(&mu);
    let mut rows: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(grid.n_r);
    for i in 0..grid.n_r {
        let r = grid.radius(i);
        let d_max =
            (0..grid.n_theta).map(|j| d[grid.idx(i, j)]).fold(f64::NEG_INFINITY, f64::max);
        let rho_r = rho.eval_unchecked(r);
        rows.push((r, d_max, rho_r, d_max / rho_r));
    }
    let mut csv = String::from("r,d_max,rho,ratio\n");
    for &(r, d, rho_r, ratio) in &rows {
        let _ = writeln!(csv, "{r:.17e},{d:.17e},{rho_r:.17e},{ratio:.17e}");
    }
    out.write("map_distortion.csv", &csv)?;
    out.write_svg(
        "map_distortion.svg",
        svg::line_chart(
            "distortion over growth",
            "r",
            "max D / rho",
            &rows.iter().map(|&(r, _, _, ratio)| (r, ratio)).collect::<Vec<_>>(),
        ),
    )?;
    let k = k_rho(&mu, &rho, mu.grid.r_max);
    let membership = membership_qc_rho(&mu, &rho);
    let david = {
        let ks = [2.0, 4.0, 8.0, 16.0];
        let profile = crate::mapcore::david_measure_profile(&mu, &ks);
        profile
            .into_iter()
            .map(|(kk, sigma)| DavidRow {
                k: kk,
                sigma,
                bound: membership.map(|c| crate::mapcore::david_bound(kk, c)),
            })
            .collect()
    };
    let doc = MapAnalyzeDoc {
        map: map_spec.clone(),
        rho,
        k_rho: k,
        membership_c: membership,
        david,
    };
    out.write_json("map_summary.json", &doc)?;
    Ok(if doc.membership_c.is_some() { 0 } else { 1 })
}

#[derive(Serialize)]
struct SolveDoc {
    solve: SolveSpec,
    report: SolveReport,
    /// `K^rho` of the inverse on the 0.9-disk via the transfer identity.
    k_rho_inverse: Option<KRho>,
}

fn cmd_beltrami_solve(config: &ExperimentConfig, grid: PolarGrid, out: &Outputs) -> CmdResult {
    let Some(solve) = &config.solve else {
        return Err(Failure::Usage("beltrami-solve needs a \"solve\" config block".into()));
    };
    let rho = config_rho(config);
    let solver = config.solver.clone().unwrap_or_default();
    solver.validate().map_err(usage)?;
    let (map, report) = match solve {
        SolveSpec::Disk { mu } => {
            let field = mu.build(grid).map_err(usage)?;
            solve_disk(&field, standard_normalization(), &solver).map_err(numeric)?
        }
        SolveSpec::Exhaustion { mu } => {
            let field = mu.build(grid).map_err(usage)?;
            solve_exhaustion(&field, &rho, &solver).map_err(numeric)?
        }
        SolveSpec::Teichmuller { k0, phi0 } => {
            let coeffs = phi0.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            let density = HoloDensity::new(coeffs).map_err(usage)?;
            solve_teichmuller_type(&density, *k0, &rho, grid, &solver).map_err(numeric)?
        }
    };
    out.write("solution.lqcgrid", &map.to_lqcgrid())?;
    let mut csv = String::from("stage,iteration,residual\n");
    for stage in &report.stages {
        for (it, res) in stage.residuals.iter().enumerate() {
            let _ = writeln!(csv, "{},{it},{res:.17e}", stage.label);
        }
    }
    out.write("residuals.csv", &csv)?;
    let k_inv = dilatation_field(&map)
        .ok()
        .map(|(mu_f, _)| k_rho_inverse_transfer(&mu_f, &map, &rho, 0.9));
    let converged = report.converged;
    out.write_json("solve_report.json", &SolveDoc {
        solve: solve.clone(),
        report,
        k_rho_inverse: k_inv,
    })?;
    Ok(if converged { 0 } else { 1 })
}

#[derive(Serialize)]
struct ModulusDoc {
    quad: Option<QuadSpec>,
    modulus: Option<f64>,
    conjugate_modulus: Option<f64>,
    lower_bound: Option<f64>,
    mapped_modulus: Option<f64>,
    capacity_table: CapacityTable,
}

fn cmd_modulus(config: &ExperimentConfig, grid: PolarGrid, out: &Outputs) -> CmdResult {
    let rho = config_rho(config);
    let s_values = config.tau_s.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0, 4.0]);
    let table = if config.calibrate {
        calibrated_capacity_table(s_values).map_err(numeric)?
    } else {
        CapacityTable::from_formula(s_values).map_err(usage)?
    };
    out.write("tau.csv", &table.to_csv())?;
    out.write_svg(
        "tau.svg",
        svg::line_chart(
            "Teichmüller capacity",
            "s",
            "tau",
            &table.s_values.iter().copied().zip(table.tau_values.iter().copied()).collect::<Vec<_>>(),
        ),
    )?;
    let mut doc = ModulusDoc {
        quad: config.quad,
        modulus: None,
        conjugate_modulus: None,
        lower_bound: None,
        mapped_modulus: None,
        capacity_table: table,
    };
    if let Some(q) = &config.quad {
        let spec = QuadrilateralSpec::new(Complex64::from_polar(1.0, q.xi_angle), q.r, q.big_r)
            .map_err(usage)?;
        doc.modulus = Some(quad_modulus(&spec).map_err(numeric)?);
        doc.conjugate_modulus = Some(quad_modulus_conjugate(&spec).map_err(numeric)?);
        doc.lower_bound = Some(lemma_qs_lower_bound(&rho, q.r, q.big_r).map_err(numeric)?);
        if let Some(map_spec) = &config.map {
            let map = map_spec.build(grid).map_err(usage)?;
            doc.mapped_modulus = Some(quad_modulus_mapped(&map, &spec).map_err(numeric)?);
        }
    }
    out.write_json("modulus.json", &doc)?;
    Ok(0)
}

fn cmd_qs_bound(config: &ExperimentConfig, grid: PolarGrid, seed: u64, out: &Outputs) -> CmdResult {
    let rho = config_rho(config);
    let default_t: Vec<f64> = (0..8)
        .map(|k| 0.05 + k as f64 * (std::f64::consts::FRAC_PI_2 - 0.05) / 7.0)
        .collect();
    let (t_values, xi_count) = match &config.qs {
        Some(qs) => (qs.t_values.clone().unwrap_or(default_t), qs.xi_count),
        None => (default_t, default_xi_count()),
    };
    for &t in &t_values {
        if !(0.0 < t && t <= std::f64::consts::FRAC_PI_2) {
            return Err(Failure::Usage(format!("qs scale t = {t} outside (0, pi/2]")));
        }
    }
    let mut csv = String::from("t,s,S,I,lambda\n");
    let mut lambda_points = Vec::new();
    for &t in &t_values {
        let s = 2.0 * (t / 4.0).sin();
        let big_s = 2.0 * (3.0 * t / 4.0).sin();
        let i = boundary_divergence_integral(&rho, s, big_s).map_err(numeric)?;
        let bound = lambda_bound(&rho, t).map_err(numeric)?;
        let lam = match bound {
            LambdaBound::Finite(v) => {
                lambda_points.push((t, v));
                format!("{v:.17e}")
            }
            LambdaBound::Infinite => "inf".into(),
        };
        let _ = writeln!(csv, "{t:.17e},{s:.17e},{big_s:.17e},{i:.17e},{lam}");
    }
    out.write("qs_lambda.csv", &csv)?;
    out.write_svg(
        "qs_lambda.svg",
        svg::line_chart("quasisymmetry bound", "t", "lambda", &lambda_points),
    )?;
    let Some(map_spec) = &config.map else {
        return Ok(0);
    };
    let map = map_spec.build(grid).map_err(usage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi_angles: Vec<f64> =
        (0..xi_count).map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI).collect();
    let samples: Vec<(f64, f64)> = xi_angles
        .iter()
        .flat_map(|&xi| t_values.iter().map(move |&t| (xi, t)))
        .collect();
    let report = verify_qs_theorem(&map, &rho, &grid_epsilons(&map), &samples).map_err(numeric)?;
    let mut csv = String::from("xi_angle,t,ratio,bound,margin\n");
    for s in &report.samples {
        let bound = match s.bound {
            LambdaBound::Finite(v) => format!("{v:.17e}"),
            LambdaBound::Infinite => "inf".into(),
        };
        let _ = writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{bound},{:.17e}",
            s.xi_angle, s.t, s.ratio, s.margin
        );
    }
    out.write("qs_samples.csv", &csv)?;
    out.write_json::<QsReport>("qs_report.json", &report)?;
    Ok(0)
}

#[derive(Serialize)]
struct ExtremalDoc {
    preset: ExtremalPreset,
    expected_k: f64,
    coefficients: Vec<f64>,
    k_min: f64,
    passed: bool,
}

fn cmd_extremal_demo(config: &ExperimentConfig, grid: PolarGrid, out: &Outputs) -> CmdResult {
    let spec = config.extremal.clone().unwrap_or(ExtremalSpec {
        preset: ExtremalPreset::Teichmuller,
        k0: default_k0(),
        c_limit: default_c_limit(),
        sweeps: default_sweeps(),
        line_tol: default_line_tol(),
    });
    if !(spec.k0 > 1.0) {
        return Err(Failure::Usage(format!("preset K0 = {} must exceed 1", spec.k0)));
    }
    if !(spec.c_limit > 0.0 && spec.line_tol > 0.0 && spec.sweeps > 0) {
        return Err(Failure::Usage("search knobs must be positive".into()));
    }
    let rho = config_rho(config);
    let (f0, expected_k) = match spec.preset {
        ExtremalPreset::Identity => (DiskGridMap::identity(grid), 1.0),
        ExtremalPreset::Teichmuller => {
            let k = (spec.k0 - 1.0) / (spec.k0 + 1.0);
            let mu = BeltramiField::sample(grid, |_| Complex64::new(k, 0.0)).map_err(usage)?;
            let (map, report) = solve_disk(&mu, standard_normalization(), &SolverConfig::default())
                .map_err(numeric)?;
            if !report.converged {
                return Err(Failure::Numeric("preset solve did not converge".into()));
            }
            (map, spec.k0)
        }
    };
    let basis = default_twist_basis();
    let c_box = vec![(-spec.c_limit, spec.c_limit); basis.len()];
    let search_cfg =
        SearchConfig { sweeps: spec.sweeps, line_tol: spec.line_tol, domain_cut: None };
    let result = extremal_search(&f0, &rho, &basis, &c_box, &search_cfg).map_err(numeric)?;
    out.write("extremal_log.csv", &result.log_to_csv())?;
    let at_zero = spec.line_tol * 2.0;
    let passed = result.coefficients.iter().all(|c| c.abs() <= at_zero)
        && (result.k_min - expected_k).abs() <= 0.05 * expected_k;
    let doc = ExtremalDoc {
        preset: spec.preset,
        expected_k,
        coefficients: result.coefficients,
        k_min: result.k_min,
        passed,
    };
    out.write_json("extremal_verdict.json", &doc)?;
    Ok(if passed { 0 } else { 1 })
}

fn cmd_report(out: &Outputs) -> CmdResult {
    let mut entries: Vec<(String, String)> = Vec::new();
    let dir = std::fs::read_dir(&out.dir)
        .map_err(|e| Failure::Usage(format!("cannot read output dir {:?}: {e}", out.dir)))?;
    for entry in dir {
        let entry = entry.map_err(numeric)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == "report.md" || !entry.path().is_file() {
            continue;
        }
        let first_line = std::fs::read_to_string(entry.path())
            .ok()
            .and_then(|text| text.lines().next().map(str::to_owned))
            .unwrap_or_default();
        entries.push((name, first_line));
    }
    entries.sort();
    let mut body = String::from("\nArtifacts in this directory:\n\n");
    if entries.is_empty() {
        body.push_str("(none)\n");
    }
    for (name, first) in &entries {
        let _ = writeln!(body, "- `{name}` — first line: `{first}`");
    }
    out.write("report.md", &body)?;
    Ok(0)
}
