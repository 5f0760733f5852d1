//! Command-line front end: `exponents`, `verify` and `scan`.
//!
//! Exit status is 0 when every check passes, 1 when one fails and 2 for
//! usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::asymptotics::{adjacent_pair_bound_scan, far_pair_bound_scan, scan_csv, PairGrid};
use crate::error::Error;
use crate::exponents::{eigenvalue, kpz, kpz_leg_identity_residual, leg_weight, theta1, ConformalWeight, Kappa};
use crate::green::{adjoint_csv, TwoIntervalGreen};
use crate::heat_kernel::{bound_csv, bound_ratio_scan, BoundGrid, HeatKernel, TruncationPolicy, MIN_CLI_TIME};
use crate::jacobi::JacobiBasis;
use crate::pde::{parse_candidate, FieldContext, PointConfig, WeightAssignment, MANUFACTURED_SHAPES};
use crate::report::{Check, Report, Row};
use crate::suites::{run_suite, Corruption, SuiteParams, SUITES};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const CANDIDATE_HELP: &str = "Candidate field: `n1` (two-point solution), \
`power:i,j=mu;k,l=nu;...` for prod (x_j - x_i)^mu, or `manufactured:<shape>` \
with shape one of two-leg, identity, prefactor, split, normalized, weakened, \
kernel-form, far-bounded, violating";

#[derive(Debug, Parser)]
#[command(name = "nullstate", version, about = "Verification commands for boundary null-state systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of θ_s, Δ±(θ_s), gap and λ0 with identity residuals.
    Exponents(ExponentsArgs),
    /// Run invariant suites.
    Verify(VerifyArgs),
    /// Write a CSV grid and report its extremes.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ExponentsArgs {
    /// SLE parameter in (0, 8); repeat for several values
    #[arg(long, default_values_t = vec![6.0])]
    pub kappa: Vec<f64>,
    /// largest leg number s
    #[arg(long, default_value_t = 5)]
    pub smax: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Exponents,
    Jacobi,
    Kernel,
    Green,
    Pde,
    Asymptotics,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 6.0)]
    pub kappa: f64,
    /// weight h as `thetaN` or a number
    #[arg(long, default_value = "theta2")]
    pub h: String,
    /// override the kernel parameter α
    #[arg(long)]
    pub alpha: Option<f64>,
    /// override the kernel parameter β
    #[arg(long)]
    pub beta: Option<f64>,
    /// extra time for the mass-conservation grid (≥ 1e-4)
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long, default_value_t = 20240917)]
    pub seed: u64,
    #[arg(long, default_value = "n1", help = CANDIDATE_HELP)]
    pub candidate: String,
    /// random configurations for the residual sweep
    #[arg(long, default_value_t = 100)]
    pub configs: usize,
    /// perturb a constant: lambda0=v, delta_plus=v or norm=v (relative)
    #[arg(long)]
    pub corrupt: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// also write the report here
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanKind {
    KernelBounds,
    GreenAdjoint,
    FarPair,
    AdjacentPair,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(value_enum)]
    pub scan: ScanKind,
    #[arg(long, default_value_t = 6.0)]
    pub kappa: f64,
    #[arg(long, default_value = "theta2")]
    pub h: String,
    /// split time between the short- and long-time bounds
    #[arg(long = "T", default_value_t = 1.0)]
    pub t_split: f64,
    #[arg(long, help = CANDIDATE_HELP)]
    pub candidate: Option<String>,
    /// grid points per axis
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    /// index of the far pair (x_{j-1}, x_j)
    #[arg(long, default_value_t = 2)]
    pub j: usize,
    /// index of the weighted point; defaults to the candidate arity
    #[arg(long)]
    pub iota: Option<usize>,
    /// observation point ρ for the adjoint scan
    #[arg(long, default_value_t = 0.4)]
    pub rho: f64,
    /// CSV destination; stdout when absent (the report then goes to stderr)
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

struct Usage(String);

impl From<Error> for Usage {
    fn from(e: Error) -> Self {
        Usage(e.to_string())
    }
}

fn kappa_arg(v: f64) -> Result<Kappa, Usage> {
    Kappa::new(v).map_err(|e| Usage(format!("--kappa: {e}")))
}

/// `thetaN` (or `θN`) for the N-leg weight, or a literal number.
pub fn parse_weight(s: &str, kappa: Kappa) -> Result<ConformalWeight, String> {
    let t = s.trim();
    let tail = t.strip_prefix("theta").or_else(|| t.strip_prefix('θ'));
    if let Some(n) = tail {
        let n: u32 = n.parse().map_err(|_| format!("bad weight '{s}', expected thetaN or a number"))?;
        return Ok(leg_weight(n, kappa));
    }
    t.parse::<f64>()
        .map(ConformalWeight)
        .map_err(|_| format!("bad weight '{s}', expected thetaN or a number"))
}

fn weight_arg(s: &str, kappa: Kappa) -> Result<ConformalWeight, Usage> {
    let h = parse_weight(s, kappa).map_err(|e| Usage(format!("--h: {e}")))?;
    if h.value() < kappa.weight_floor() {
        return Err(Usage(format!(
            "--h: weight {} lies below the floor {} for kappa = {}",
            h.value(),
            kappa.weight_floor(),
            kappa.value()
        )));
    }
    Ok(h)
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return code;
        }
    };
    let start = Instant::now();
    let result = match cli.command {
        Command::Exponents(a) => cmd_exponents(&a, start).map(|r| (render(&r, a.format), r, None)),
        Command::Verify(a) => cmd_verify(&a, start).and_then(|r| {
            let text = render(&r, a.format);
            if let Some(path) = &a.output {
                std::fs::write(path, &text).map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok((text, r, None))
        }),
        Command::Scan(a) => cmd_scan(&a, start).map(|(r, csv)| (render(&r, a.format), r, Some((csv, a.output)))),
    };
    match result {
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Ok((text, report, scan)) => {
            match scan {
                Some((csv, Some(path))) => {
                    if let Err(e) = std::fs::write(&path, csv) {
                        let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                        return EXIT_FAIL;
                    }
                    let _ = write!(out, "{text}");
                }
                Some((csv, None)) => {
                    let _ = write!(out, "{csv}");
                    let _ = write!(err, "{text}");
                }
                None => {
                    let _ = write!(out, "{text}");
                }
            }
            report.exit_code()
        }
    }
}

fn cmd_exponents(a: &ExponentsArgs, start: Instant) -> Result<Report, Usage> {
    let kappas = a.kappa.iter().map(|&k| kappa_arg(k)).collect::<Result<Vec<_>, _>>()?;
    if a.smax == 0 {
        return Err(Usage("--smax must be at least 1".into()));
    }
    let mut r = Report::new("exponents");
    r.param("kappa", a.kappa.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","));
    r.param("smax", a.smax);
    r.param("tolerance", "1e-12");
    for &k in &kappas {
        let plus_t1 = kpz(theta1(k), k)?.delta_plus;
        let mut worst = 0.0f64;
        for s in 1..=a.smax {
            let th = leg_weight(s, k);
            let pair = kpz(th, k)?;
            let lambda0 = eigenvalue(0, th, k)?.lambda;
            let res = kpz_leg_identity_residual(s, k)?;
            worst = worst.max(res.max_abs()).max((lambda0 - 2.0 * pair.delta_plus - plus_t1).abs());
            let mut row = Row::default();
            row.set("kappa", k.value())
                .set("s", f64::from(s))
                .set("theta", th.value())
                .set("delta_minus", pair.delta_minus)
                .set("delta_plus", pair.delta_plus)
                .set("gap", pair.gap)
                .set("lambda0", lambda0)
                .set("residual", res.max_abs());
            r.table.push(row);
        }
        r.push(Check::at_most(format!("identities at kappa = {}", k.value()), worst, 1e-12));
    }
    r.wall_time_s = start.elapsed().as_secs_f64();
    Ok(r)
}

fn cmd_verify(a: &VerifyArgs, start: Instant) -> Result<Report, Usage> {
    let kappa = kappa_arg(a.kappa)?;
    let h = weight_arg(&a.h, kappa)?;
    if let Some(t) = a.t_min {
        if !(t >= MIN_CLI_TIME) {
            return Err(Usage(format!("--t-min must be at least {MIN_CLI_TIME:e}, got {t}")));
        }
    }
    for (flag, v) in [("--alpha", a.alpha), ("--beta", a.beta)] {
        if let Some(v) = v {
            if !(v > -1.0) {
                return Err(Usage(format!("{flag} must exceed -1, got {v}")));
            }
        }
    }
    let mut corrupt = Corruption::default();
    for c in &a.corrupt {
        Corruption::parse(c, &mut corrupt)?;
    }
    let mut p = SuiteParams::new(kappa);
    p.h = h;
    p.alpha = a.alpha;
    p.beta = a.beta;
    p.t_min = a.t_min;
    p.seed = a.seed;
    p.candidate = a.candidate.clone();
    p.configs = a.configs;
    p.corrupt = corrupt;
    let ctx = FieldContext { kappa, h, lambda0: 0.0 };
    parse_candidate(&a.candidate, &ctx).map_err(|e| Usage(format!("--candidate: {e}")))?;

    let names: Vec<&str> = match a.suite {
        Suite::All => SUITES.to_vec(),
        Suite::Exponents => vec!["exponents"],
        Suite::Jacobi => vec!["jacobi"],
        Suite::Kernel => vec!["kernel"],
        Suite::Green => vec!["green"],
        Suite::Pde => vec!["pde"],
        Suite::Asymptotics => vec!["asymptotics"],
    };
    let mut r = Report::new(format!("verify {}", names.join(",")));
    r.param("kappa", kappa.value());
    r.param("h", format!("{} ({})", a.h, h.value()));
    let kp = p.alpha.zip(p.beta);
    r.param("alpha", p.alpha.map_or("lambda(h)".into(), |v| v.to_string()));
    r.param("beta", p.beta.map_or("lambda(theta1)".into(), |v| v.to_string()));
    r.param("t_min", p.t_min.map_or("none".into(), |v| v.to_string()));
    r.param("candidate", &p.candidate);
    r.param("configs", p.configs);
    r.param("kernel n_max", TruncationPolicy::default().n_max);
    r.param("kernel tail_tol", TruncationPolicy::default().tail_tol);
    r.param("stencil step fraction", crate::pde::StencilOptions::default().step_fraction);
    if !p.corrupt.is_clean() {
        r.param("corrupt", a.corrupt.join(","));
    }
    r.seed = Some(p.seed);
    if let Some((al, be)) = kp {
        JacobiBasis::new(al, be)?;
    }
    for name in names {
        match run_suite(name, &p) {
            Ok(checks) => {
                for mut c in checks {
                    c.name = format!("{name}: {}", c.name);
                    r.push(c);
                }
            }
            Err(e) => r.push(Check::failed(name, e.to_string())),
        }
    }
    r.wall_time_s = start.elapsed().as_secs_f64();
    Ok(r)
}

fn cmd_scan(a: &ScanArgs, start: Instant) -> Result<(Report, String), Usage> {
    let kappa = kappa_arg(a.kappa)?;
    let h = weight_arg(&a.h, kappa)?;
    if a.points < 3 {
        return Err(Usage("--points must be at least 3".into()));
    }
    let kind = a.scan.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut r = Report::new(format!("scan {kind}"));
    r.param("kappa", kappa.value());
    r.param("h", format!("{} ({})", a.h, h.value()));
    r.param("points", a.points);
    let csv = match a.scan {
        ScanKind::KernelBounds => {
            if !(a.t_split > 0.0) {
                return Err(Usage("--T must be positive".into()));
            }
            let kp = crate::suites::SuiteParams { h, ..SuiteParams::new(kappa) };
            let jp = crate::exponents::jacobi_params(kp.h, kappa)?;
            let params = crate::heat_kernel::KernelParams::new(jp.alpha, jp.beta)?;
            let kernel = HeatKernel::new(params, TruncationPolicy::default())?;
            let grid = BoundGrid {
                n_theta: a.points,
                n_phi: a.points,
                ..BoundGrid::default()
            };
            r.param("T", a.t_split);
            r.param(
                "grid",
                format!(
                    "{}x{} angles, {} times from {:e} to T, {} late times to {}T, c1 = {}, c2 = {}",
                    grid.n_theta, grid.n_phi, grid.n_t, grid.t_min, grid.n_t_late, grid.late_factor, grid.c1, grid.c2
                ),
            );
            let scan = bound_ratio_scan(&kernel, a.t_split, &grid).map_err(Usage::from);
            let scan = match scan {
                Ok(s) => s,
                Err(Usage(m)) => {
                    r.push(Check::failed("kernel bound scan", m));
                    return Ok((r, String::new()));
                }
            };
            r.summary.insert("min K/(Lambda g_c1)".into(), scan.min_ratio_c1);
            r.summary.insert("max K/(Lambda g_c1)".into(), scan.max_ratio_c1);
            r.summary.insert("min K/(Lambda g_c2)".into(), scan.min_ratio_c2);
            r.summary.insert("max K/(Lambda g_c2)".into(), scan.max_ratio_c2);
            r.summary.insert("late min K".into(), scan.late_min);
            r.summary.insert("late max K".into(), scan.late_max);
            r.summary.insert("resolved points".into(), scan.resolved as f64);
            r.summary.insert("unresolved points".into(), scan.unresolved as f64);
            r.push(Check::flag("two-sided bound certified", scan.certifies_two_sided()));
            bound_csv(&scan.rows)
        }
        ScanKind::GreenAdjoint => {
            if !(a.rho > 0.0 && a.rho < 1.0) {
                return Err(Usage("--rho must lie in (0, 1)".into()));
            }
            let g = TwoIntervalGreen::new(h, kappa, TruncationPolicy::default())?;
            let n = a.points;
            let sigmas: Vec<f64> = (0..n).map(|i| 0.2 + 0.6 * i as f64 / (n - 1) as f64).collect();
            let ratios: Vec<f64> = (0..n).map(|i| 1.5 + 2.5 * i as f64 / (n - 1) as f64).collect();
            r.param("rho", a.rho);
            r.param("sigma range", "[0.2, 0.8]");
            r.param("eta/eps range", "[1.5, 4]");
            match g.adjoint_scan(a.rho, 1.0, &sigmas, &ratios) {
                Ok(rows) => {
                    let worst = rows.iter().map(|x| x.relative()).fold(0.0, f64::max);
                    r.summary.insert("max relative residual".into(), worst);
                    r.summary.insert(
                        "unreliable points".into(),
                        rows.iter().filter(|x| !x.reliable).count() as f64,
                    );
                    r.push(Check::at_most("adjoint residual", worst, 1e-4));
                    adjoint_csv(&rows)
                }
                Err(e) => {
                    r.push(Check::failed("adjoint residual", e.to_string()));
                    String::new()
                }
            }
        }
        ScanKind::FarPair | ScanKind::AdjacentPair => {
            let far = a.scan == ScanKind::FarPair;
            let spec = a.candidate.clone().unwrap_or_else(|| {
                if far { "manufactured:far-bounded" } else { "manufactured:normalized" }.to_string()
            });
            let lambda0 = eigenvalue(0, h, kappa)?.lambda;
            let ctx = FieldContext { kappa, h, lambda0 };
            let f = parse_candidate(&spec, &ctx).map_err(|e| Usage(format!("--candidate: {e}")))?;
            let m = f.arity();
            let iota = a.iota.unwrap_or(m);
            let weights = WeightAssignment::new(iota, h, kappa).map_err(|e| Usage(format!("--iota: {e}")))?;
            let config = PointConfig::new((0..m).map(|i| i as f64).collect())?;
            let grid = PairGrid {
                points: a.points,
                ..PairGrid::default()
            };
            r.param("candidate", &spec);
            r.param("iota", iota);
            r.param("config", format!("{:?}", config.coords()));
            r.param("grid", format!("{} log points on [{:e}, {:e}]", grid.points, grid.lo, grid.hi));
            if far {
                r.param("j", a.j);
                let s = far_pair_bound_scan(f.as_ref(), &config, a.j, &weights, &grid)?;
                r.summary.insert("sup ratio".into(), s.sup);
                r.summary.insert("inf ratio".into(), s.inf);
                r.summary.insert("delta slope".into(), s.delta_slope);
                r.summary.insert("eps slope".into(), s.eps_slope);
                r.push(
                    Check::flag("far-pair ratio bounded", !s.divergent)
                        .with_detail(if s.divergent { "divergent" } else { "bounded" }),
                );
                scan_csv(&s.rows)
            } else {
                let s = adjacent_pair_bound_scan(f.as_ref(), &config, &weights, &grid, a.points)?;
                r.summary.insert("sup ratio".into(), s.sup);
                r.summary.insert("inf ratio".into(), s.inf);
                r.summary.insert("spread".into(), s.spread);
                r.summary.insert("eps exponent".into(), s.eps_exponent);
                r.push(
                    Check::flag("adjacent-pair ratio bounded", !s.divergent)
                        .with_detail(if s.divergent { "divergent" } else { "bounded" }),
                );
                scan_csv(&s.rows)
            }
        }
    };
    r.wall_time_s = start.elapsed().as_secs_f64();
    Ok((r, csv))
}

/// Names accepted after `manufactured:`.
pub fn manufactured_shapes() -> impl Iterator<Item = &'static str> {
    MANUFACTURED_SHAPES.iter().map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_parse() {
        let k = Kappa::new(6.0).unwrap();
        assert_eq!(parse_weight("theta1", k).unwrap().value(), 0.0);
        assert_eq!(parse_weight("θ1", k).unwrap().value(), 0.0);
        assert_eq!(parse_weight("0.25", k).unwrap().value(), 0.25);
        assert!(parse_weight("theta", k).is_err());
        assert_eq!(manufactured_shapes().count(), MANUFACTURED_SHAPES.len());
    }

    #[test]
    fn usage_errors_exit_two() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        assert_eq!(run(["nullstate", "exponents", "--kappa", "9"], &mut o, &mut e), 2);
        assert_eq!(run(["nullstate", "verify", "kernel", "--t-min", "1e-5"], &mut o, &mut e), 2);
        assert_eq!(run(["nullstate", "bogus"], &mut o, &mut e), 2);
    }
}
