//! Command-line front end for `surfspec-core`.
//!
//! Exit codes: 0 on success, 2 on invalid input (bad flags, config or
//! ranges), 3 when a numerical guard trips (truncation, size or `Λ`
//! limits, solver stalls).

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use surfspec_core::ball3d::{asymptotic_table, AsymptoticRow, BallGrid};
use surfspec_core::degennes::{DeGennes, DeGennesParams, Moment};
use surfspec_core::energy::{
    Branch, DensityModel, DirectDensity, TabulatedDensity, ZetaTable,
};
use surfspec_core::geometry::{
    make_surface, predict_count, predict_energy, ConstantField, Resolution, SurfaceKind,
};
use surfspec_core::halfcylinder::{
    convergence_study, dirichlet_energy, CylinderSpec, RadialBc,
};
use surfspec_core::lupan::{self, HalfPlaneBox, THETA_MIN, WINDOW_MAX};

use config::{ConfigFile, RealList, Triple};
use output::{Cell, Provenance, Report, Table};

pub const GIT_DESCRIBE: &str = env!("SURFSPEC_GIT_DESCRIBE");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] surfspec_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical_guard() => 3,
            _ => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (csv or json)")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "surfspec", version = GIT_DESCRIBE, about = "Surface-state spectral densities")]
struct Cli {
    /// `key = value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to a file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the de Gennes eigenvalue curves.
    DegennesCurve(CurveArgs),
    /// The de Gennes constant and its minimizer.
    Theta0(Theta0Args),
    /// Half-plane eigenvalues below a window.
    Lupan(LupanArgs),
    /// Energy and count densities at one angle.
    Energy(EnergyArgs),
    /// Half-cylinder per-area energies.
    Halfcyl(HalfcylArgs),
    /// Boundary-integral predictions on a surface.
    Predict(PredictArgs),
    /// Unit-ball eigenvalue sums against the predictions.
    VerifyBall(BallArgs),
    /// Fixture maintenance.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

#[derive(Debug, Subcommand)]
enum FixturesAction {
    /// Recompute the pinned fixture files.
    Regenerate(RegenArgs),
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long, allow_hyphen_values = true)]
    xi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi_max: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Number of eigenvalue curves (1–5).
    #[arg(long)]
    branches: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Debug, Args)]
struct Theta0Args {
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Debug, Args)]
struct LupanArgs {
    #[arg(long)]
    theta_deg: Option<f64>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Debug, Args)]
struct EnergyArgs {
    #[arg(long)]
    theta_deg: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Debug, Args)]
struct HalfcylArgs {
    #[arg(long)]
    theta_deg: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Side lengths, ascending, e.g. `10,20,40`.
    #[arg(long = "L")]
    sides: Option<RealList>,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    /// `periodic` or `dirichlet`.
    #[arg(long)]
    bc: Option<String>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// `sphere` or `ellipsoid`.
    #[arg(long)]
    surface: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    /// Ellipsoid semi-axes `a,b,c`.
    #[arg(long)]
    axes: Option<Triple>,
    #[arg(long, allow_hyphen_values = true)]
    field: Option<Triple>,
    #[arg(long = "Lambda")]
    big_lambda: Option<f64>,
    #[arg(long)]
    u_panels: Option<usize>,
    #[arg(long)]
    v_points: Option<usize>,
    /// Alternative ζ table (JSON).
    #[arg(long)]
    zeta_table: Option<String>,
}

#[derive(Debug, Args)]
struct BallArgs {
    /// Decreasing semiclassical parameters, e.g. `0.08,0.05,0.03`.
    #[arg(long)]
    h: Option<RealList>,
    #[arg(long = "Lambda")]
    big_lambda: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long)]
    n_rho: Option<usize>,
    #[arg(long)]
    n_phi: Option<usize>,
    #[arg(long)]
    u_panels: Option<usize>,
    #[arg(long)]
    zeta_table: Option<String>,
}

#[derive(Debug, Args)]
struct RegenArgs {
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    spacing: Option<f64>,
    /// `zeta-table` or `degennes`; both by default.
    #[arg(long)]
    only: Option<String>,
}

/// Fully resolved inputs of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    DegennesCurve {
        xi_min: f64,
        xi_max: f64,
        samples: usize,
        branches: usize,
        spacing: f64,
    },
    Theta0 {
        spacing: f64,
    },
    Lupan {
        theta_deg: f64,
        window: f64,
        spacing: f64,
    },
    Energy {
        theta_deg: f64,
        lambda: f64,
        spacing: f64,
    },
    Halfcyl {
        theta_deg: f64,
        lambda: f64,
        sides: Vec<f64>,
        spacing: f64,
        height: f64,
        bc: RadialBc,
    },
    Predict {
        surface: SurfaceKind,
        field: [f64; 3],
        big_lambda: f64,
        u_panels: usize,
        v_points: usize,
        zeta_table: Option<String>,
    },
    VerifyBall {
        h: Vec<f64>,
        big_lambda: f64,
        b: f64,
        n_rho: usize,
        n_phi: usize,
        u_panels: usize,
        zeta_table: Option<String>,
    },
    FixturesRegenerate {
        out_dir: String,
        spacing: f64,
        only: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub xi: f64,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfcylRow {
    pub side: f64,
    pub energy_per_area: f64,
    pub gap: f64,
}

/// Results of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outputs {
    Curve {
        theta0: f64,
        xi0: f64,
        rows: Vec<CurveRow>,
    },
    Theta0 {
        theta0: f64,
        xi0: f64,
    },
    Lupan {
        zetas: Vec<f64>,
    },
    Energy {
        energy: f64,
        count: f64,
        branch: Branch,
    },
    Halfcyl {
        limit: f64,
        exponent: Option<f64>,
        rows: Vec<HalfcylRow>,
    },
    Predict {
        area: f64,
        pred_energy: f64,
        pred_count: f64,
    },
    VerifyBall {
        rows: Vec<AsymptoticRow>,
    },
    Fixtures {
        files: Vec<String>,
    },
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<f64, CliError> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must lie in [{lo}, {hi}], got {v}")))
    }
}

fn resolve(cmd: Command, cfg: &ConfigFile) -> Result<RunConfig, CliError> {
    Ok(match cmd {
        Command::DegennesCurve(a) => {
            let xi_min = cfg.pick_or(a.xi_min, "xi-min", -1.0)?;
            let xi_max = cfg.pick_or(a.xi_max, "xi-max", 8.0)?;
            if !(xi_min < xi_max) {
                return Err(usage("--xi-min must be below --xi-max"));
            }
            let samples = cfg.pick_or(a.samples, "samples", 91)?;
            if samples < 2 {
                return Err(usage("--samples must be at least 2"));
            }
            let branches = cfg.pick_or(a.branches, "branches", 1)?;
            if !(1..=5).contains(&branches) {
                return Err(usage("--branches must lie in 1..=5"));
            }
            RunConfig::DegennesCurve {
                xi_min,
                xi_max,
                samples,
                branches,
                spacing: cfg.pick_or(a.spacing, "spacing", 0.005)?,
            }
        }
        Command::Theta0(a) => RunConfig::Theta0 {
            spacing: cfg.pick_or(a.spacing, "spacing", 0.005)?,
        },
        Command::Lupan(a) => {
            let theta_deg = cfg.need(a.theta_deg, "theta-deg")?;
            check_range("theta-deg", theta_deg, THETA_MIN.to_degrees(), 90.0)?;
            let window = cfg.pick_or(a.window, "window", WINDOW_MAX)?;
            check_range("window", window, 0.0, WINDOW_MAX)?;
            RunConfig::Lupan {
                theta_deg,
                window,
                spacing: cfg.pick_or(a.spacing, "spacing", lupan::DEFAULT_SPACING)?,
            }
        }
        Command::Energy(a) => {
            let theta_deg = cfg.need(a.theta_deg, "theta-deg")?;
            check_range("theta-deg", theta_deg, 0.0, 90.0)?;
            let lambda = cfg.need(a.lambda, "lambda")?;
            check_range("lambda", lambda, 0.0, WINDOW_MAX)?;
            RunConfig::Energy {
                theta_deg,
                lambda,
                spacing: cfg.pick_or(
                    a.spacing,
                    "spacing",
                    surfspec_core::energy::DEFAULT_DENSITY_SPACING,
                )?,
            }
        }
        Command::Halfcyl(a) => {
            let theta_deg = cfg.need(a.theta_deg, "theta-deg")?;
            check_range("theta-deg", theta_deg, 0.0, 90.0)?;
            let lambda = cfg.need(a.lambda, "lambda")?;
            check_range("lambda", lambda, 0.0, 0.95)?;
            let bc = match cfg.pick_or(a.bc, "bc", "periodic".to_string())?.as_str() {
                "periodic" => RadialBc::Periodic,
                "dirichlet" => RadialBc::Dirichlet,
                other => return Err(usage(format!("unknown --bc `{other}`"))),
            };
            let default_sides = match bc {
                RadialBc::Periodic => "10,20,40",
                RadialBc::Dirichlet => "2,4",
            };
            let sides = cfg
                .pick_or(a.sides, "L", default_sides.parse().expect("valid default"))?
                .0;
            if sides.windows(2).any(|w| w[0] >= w[1]) || sides.iter().any(|&l| l <= 0.0) {
                return Err(usage("--L must be positive and strictly ascending"));
            }
            let default_spacing = match bc {
                RadialBc::Periodic => 0.1,
                RadialBc::Dirichlet => 0.2,
            };
            RunConfig::Halfcyl {
                theta_deg,
                lambda,
                sides,
                spacing: cfg.pick_or(a.spacing, "spacing", default_spacing)?,
                height: cfg.pick_or(a.height, "height", 10.0)?,
                bc,
            }
        }
        Command::Predict(a) => {
            let surface = match cfg.pick_or(a.surface, "surface", "sphere".to_string())?.as_str() {
                "sphere" => SurfaceKind::Sphere {
                    radius: cfg.pick_or(a.radius, "radius", 1.0)?,
                },
                "ellipsoid" => {
                    let Triple([a_, b_, c_]) = cfg.need(a.axes, "axes")?;
                    SurfaceKind::Ellipsoid { a: a_, b: b_, c: c_ }
                }
                other => return Err(usage(format!("unknown --surface `{other}`"))),
            };
            RunConfig::Predict {
                surface,
                field: cfg.pick_or(a.field, "field", Triple([0.0, 0.0, 1.0]))?.0,
                big_lambda: cfg.need(a.big_lambda, "Lambda")?,
                u_panels: cfg.pick_or(a.u_panels, "u-panels", 180)?,
                v_points: cfg.pick_or(a.v_points, "v-points", 64)?,
                zeta_table: cfg.pick(a.zeta_table, "zeta-table")?,
            }
        }
        Command::VerifyBall(a) => {
            let h = cfg.pick_or(a.h, "h", "0.08,0.05,0.03".parse().expect("valid default"))?.0;
            RunConfig::VerifyBall {
                h,
                big_lambda: cfg.need(a.big_lambda, "Lambda")?,
                b: cfg.pick_or(a.b, "B", 1.0)?,
                n_rho: cfg.pick_or(a.n_rho, "n-rho", BallGrid::default().n_rho)?,
                n_phi: cfg.pick_or(a.n_phi, "n-phi", BallGrid::default().n_phi)?,
                u_panels: cfg.pick_or(a.u_panels, "u-panels", 360)?,
                zeta_table: cfg.pick(a.zeta_table, "zeta-table")?,
            }
        }
        Command::Fixtures {
            action: FixturesAction::Regenerate(a),
        } => {
            let only = cfg.pick(a.only, "only")?;
            if let Some(o) = &only {
                if o != "zeta-table" && o != "degennes" {
                    return Err(usage(format!("unknown --only `{o}`")));
                }
            }
            RunConfig::FixturesRegenerate {
                out_dir: cfg.pick_or(a.out_dir, "out-dir", "fixtures".to_string())?,
                spacing: cfg.pick_or(a.spacing, "spacing", 0.1)?,
                only,
            }
        }
    })
}

fn density_model(path: &Option<String>) -> Result<TabulatedDensity, CliError> {
    match path {
        None => Ok(TabulatedDensity::embedded().clone()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(TabulatedDensity::new(ZetaTable::from_json(&text)?)?)
        }
    }
}

/// Runs a resolved configuration; returns the outputs and the grid
/// description for provenance.
pub fn execute(cfg: &RunConfig) -> Result<(Outputs, serde_json::Value), CliError> {
    match cfg {
        RunConfig::DegennesCurve {
            xi_min,
            xi_max,
            samples,
            branches,
            spacing,
        } => {
            let dg = DeGennes::new(DeGennesParams {
                spacing: *spacing,
                ..DeGennesParams::default()
            })?;
            let xs: Vec<f64> = (0..*samples)
                .map(|i| xi_min + (xi_max - xi_min) * i as f64 / (*samples - 1) as f64)
                .collect();
            let (theta0, xi0) = dg.minimize_mu1()?;
            let rows = xs
                .iter()
                .map(|&xi| {
                    let mu = (1..=*branches)
                        .map(|j| dg.mu(xi, j))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(CurveRow { xi, mu })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((
                Outputs::Curve { theta0, xi0, rows },
                json!({ "spacing": spacing, "extrapolated": true }),
            ))
        }
        RunConfig::Theta0 { spacing } => {
            let dg = DeGennes::new(DeGennesParams {
                spacing: *spacing,
                ..DeGennesParams::default()
            })?;
            let (theta0, xi0) = dg.minimize_mu1()?;
            Ok((
                Outputs::Theta0 { theta0, xi0 },
                json!({ "spacing": spacing, "extrapolated": true }),
            ))
        }
        RunConfig::Lupan {
            theta_deg,
            window,
            spacing,
        } => {
            let theta = theta_deg.to_radians();
            let bx = HalfPlaneBox::for_theta(theta, *spacing)?;
            let s = lupan::zetas(theta, *window, &bx)?;
            Ok((Outputs::Lupan { zetas: s.zetas }, serde_json::to_value(bx).expect("box")))
        }
        RunConfig::Energy {
            theta_deg,
            lambda,
            spacing,
        } => {
            let theta = theta_deg.to_radians();
            let model = DirectDensity::new(*spacing, WINDOW_MAX)?;
            let e = model.energy(theta, *lambda)?;
            let n = model.count(theta, *lambda)?;
            Ok((
                Outputs::Energy {
                    energy: e.value,
                    count: n.value,
                    branch: e.branch,
                },
                json!({ "spacing": spacing }),
            ))
        }
        RunConfig::Halfcyl {
            theta_deg,
            lambda,
            sides,
            spacing,
            height,
            bc,
        } => {
            let theta = theta_deg.to_radians();
            let base = CylinderSpec {
                theta,
                lambda: *lambda,
                side: sides[0],
                height: *height,
                ds: *spacing,
                dt: *spacing,
                bc_r: *bc,
            }
            .validated()?;
            let (limit, exponent, rows) = match bc {
                RadialBc::Periodic => {
                    let study = convergence_study(&base, sides)?;
                    let rows = study
                        .rows
                        .iter()
                        .map(|r| HalfcylRow {
                            side: r.side,
                            energy_per_area: r.energy_per_area,
                            gap: r.gap,
                        })
                        .collect();
                    (study.limit, study.exponent, rows)
                }
                RadialBc::Dirichlet => {
                    let limit = DirectDensity::new(*spacing, WINDOW_MAX)?
                        .energy(theta, *lambda)?
                        .value;
                    let rows = sides
                        .iter()
                        .map(|&side| {
                            let e = dirichlet_energy(&CylinderSpec { side, ..base })?;
                            Ok(HalfcylRow {
                                side,
                                energy_per_area: e,
                                gap: limit - e,
                            })
                        })
                        .collect::<Result<Vec<_>, CliError>>()?;
                    (limit, None, rows)
                }
            };
            Ok((
                Outputs::Halfcyl {
                    limit,
                    exponent,
                    rows,
                },
                json!({ "ds": spacing, "dt": spacing, "T": height }),
            ))
        }
        RunConfig::Predict {
            surface,
            field,
            big_lambda,
            u_panels,
            v_points,
            zeta_table,
        } => {
            let res = Resolution {
                u_panels: *u_panels,
                v_points: *v_points,
            };
            let mesh = make_surface(*surface, res)?;
            let model = density_model(zeta_table)?;
            let f = ConstantField(*field);
            let pred_energy = predict_energy(&mesh, &f, *big_lambda, &model)?;
            let pred_count = predict_count(&mesh, &f, *big_lambda, &model)?;
            Ok((
                Outputs::Predict {
                    area: mesh.area(),
                    pred_energy,
                    pred_count,
                },
                json!({
                    "u_panels": u_panels,
                    "v_points": v_points,
                    "zeta_spacing": model.table.spacing,
                }),
            ))
        }
        RunConfig::VerifyBall {
            h,
            big_lambda,
            b,
            n_rho,
            n_phi,
            u_panels,
            zeta_table,
        } => {
            let grid = BallGrid {
                n_rho: *n_rho,
                n_phi: *n_phi,
            };
            let sphere = make_surface(
                SurfaceKind::Sphere { radius: 1.0 },
                Resolution {
                    u_panels: *u_panels,
                    v_points: 8,
                },
            )?;
            let model = density_model(zeta_table)?;
            let rows = asymptotic_table(h, *big_lambda, *b, &grid, &sphere, &model)?;
            Ok((
                Outputs::VerifyBall { rows },
                json!({ "n_rho": n_rho, "n_phi": n_phi, "u_panels": u_panels }),
            ))
        }
        RunConfig::FixturesRegenerate {
            out_dir,
            spacing,
            only,
        } => {
            let dir = Path::new(out_dir);
            std::fs::create_dir_all(dir)?;
            let mut files = Vec::new();
            if only.as_deref() != Some("degennes") {
                let degs: Vec<f64> = (3..=90).map(f64::from).collect();
                let table = ZetaTable::compute(&degs, WINDOW_MAX, *spacing)?;
                let p = dir.join("zeta_table.json");
                std::fs::write(&p, table.to_json())?;
                files.push(p.display().to_string());
            }
            if only.as_deref() != Some("zeta-table") {
                let dg = DeGennes::shared();
                let (theta0, xi0) = dg.minimize_mu1()?;
                let moments = [0.8, 0.85, 0.9]
                    .iter()
                    .map(|&l| {
                        Ok(json!({
                            "lambda": l,
                            "half": dg.moment_integral(l, Moment::Half)?,
                            "three_halves": dg.moment_integral(l, Moment::ThreeHalves)?,
                        }))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let p = dir.join("degennes.json");
                let doc = json!({ "theta0": theta0, "xi0": xi0, "moments": moments });
                std::fs::write(&p, serde_json::to_string_pretty(&doc).expect("json"))?;
                files.push(p.display().to_string());
            }
            Ok((Outputs::Fixtures { files }, json!({ "spacing": spacing })))
        }
    }
}

fn real(v: f64) -> Cell {
    Cell::Real(v)
}

/// CSV rendering of a result.
pub fn to_table(cfg: &RunConfig, out: &Outputs) -> Table {
    match (cfg, out) {
        (RunConfig::DegennesCurve { branches, .. }, Outputs::Curve { rows, .. }) => {
            const NAMES: [&str; 6] = ["xi", "mu1", "mu2", "mu3", "mu4", "mu5"];
            let mut t = Table::new(NAMES[..=*branches].to_vec());
            for r in rows {
                let mut row = vec![real(r.xi)];
                row.extend(r.mu.iter().map(|&m| real(m)));
                t.push(row);
            }
            t
        }
        (_, Outputs::Theta0 { theta0, xi0 }) => {
            let mut t = Table::new(vec!["theta0", "xi0"]);
            t.push(vec![real(*theta0), real(*xi0)]);
            t
        }
        (_, Outputs::Lupan { zetas }) => {
            let mut t = Table::new(vec!["j", "zeta"]);
            for (j, z) in zetas.iter().enumerate() {
                t.push(vec![Cell::Int(j as i64 + 1), real(*z)]);
            }
            t
        }
        (
            RunConfig::Energy {
                theta_deg, lambda, ..
            },
            Outputs::Energy { energy, count, .. },
        ) => {
            let mut t = Table::new(vec!["theta_deg", "lambda", "E", "n"]);
            t.push(vec![real(*theta_deg), real(*lambda), real(*energy), real(*count)]);
            t
        }
        (
            RunConfig::Halfcyl {
                theta_deg, lambda, ..
            },
            Outputs::Halfcyl { rows, .. },
        ) => {
            let mut t = Table::new(vec!["theta_deg", "lambda", "L", "energy_per_area", "gap"]);
            for r in rows {
                t.push(vec![
                    real(*theta_deg),
                    real(*lambda),
                    real(r.side),
                    real(r.energy_per_area),
                    real(r.gap),
                ]);
            }
            t
        }
        (
            RunConfig::Predict { big_lambda, .. },
            Outputs::Predict {
                area,
                pred_energy,
                pred_count,
            },
        ) => {
            let mut t = Table::new(vec!["Lambda", "area", "pred_energy", "pred_count"]);
            t.push(vec![real(*big_lambda), real(*area), real(*pred_energy), real(*pred_count)]);
            t
        }
        (_, Outputs::VerifyBall { rows }) => {
            let mut t = Table::new(vec![
                "h",
                "count",
                "deficit",
                "pred_count",
                "pred_energy",
                "ratio_count",
                "ratio_energy",
            ]);
            for r in rows {
                t.push(vec![
                    real(r.h),
                    Cell::Int(r.count as i64),
                    real(r.deficit),
                    real(r.pred_count),
                    real(r.pred_energy),
                    real(r.ratio_count),
                    real(r.ratio_energy),
                ]);
            }
            t
        }
        (_, Outputs::Fixtures { files }) => {
            let mut t = Table::new(vec!["file"]);
            for f in files {
                t.push(vec![Cell::Text(f.clone())]);
            }
            t
        }
        _ => unreachable!("outputs always match their command"),
    }
}

/// Serialized result in the requested format.
pub fn render(
    cfg: &RunConfig,
    out: &Outputs,
    grid: serde_json::Value,
    format: Format,
) -> String {
    match format {
        Format::Csv => to_table(cfg, out).to_csv(),
        Format::Json => {
            let report = Report {
                inputs: cfg.clone(),
                outputs: out.clone(),
                provenance: Provenance {
                    git_describe: GIT_DESCRIBE.to_string(),
                    grid,
                },
            };
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SURFSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| usage(format!("SURFSPEC_THREADS must be a positive integer, got `{v}`")))?;
    // a pool may already exist when run() is called repeatedly in-process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn try_run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg_file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let default_format = match cli.command {
        Command::Theta0(_) => Format::Json,
        _ => Format::Csv,
    };
    let format = cfg_file.pick_or(cli.format, "format", default_format)?;
    let output = cfg_file.pick::<PathBuf>(cli.output, "output")?;
    let run_cfg = resolve(cli.command, &cfg_file)?;
    let (out, grid) = execute(&run_cfg)?;
    let text = render(&run_cfg, &out, grid, format);
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let line = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("surfspec: {line}");
            return 2;
        }
    };
    match try_run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("surfspec: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
