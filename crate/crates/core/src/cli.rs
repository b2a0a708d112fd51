//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 comparison mismatch under `--strict`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analytic::{
    linear_singular_claimed_potential, linear_singular_direct_potential, poschl_teller_all_levels,
    poschl_teller_claimed_potential, AnalyticSpectrum, Provenance, SVariant,
};
use crate::config::{Artifact, RunConfig, KEYS_HELP};
use crate::error::{Error, Result};
use crate::grid::{MappedGrid, QGrid};
use crate::pipeline::{build_map, solve, SolveOutcome, StateResult};
use crate::potential::potential_discrepancy_report;
use crate::profiles::{BuiltinModel, ModelSpec, Params};
use crate::spinor::{bic_family, dirac_residual, normalize, observables, reconstruct, SpinorField};
use crate::transform::{EndpointKind, TransformMap};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_STRICT: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "pdm-dirac",
    version,
    about = "Bound states of the 1+1 Dirac equation with position-dependent mass and Fermi velocity",
    after_help = KEYS_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the lowest levels and compare with closed forms.
    Solve(Common),
    /// Sweep one model parameter and tabulate the levels.
    Scan(Common),
    /// Build the unquantized sin/cos family at a list of energies.
    Bic(BicArgs),
    /// Potential adjudication and level-sequence report.
    Report(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (key = value lines).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Exit with status 4 when a comparison exceeds `tol.strict`.
    #[arg(long)]
    strict: bool,
    /// Potential mode, overriding `mode`.
    #[arg(long)]
    mode: Option<String>,
    /// Number of levels, overriding `states`.
    #[arg(long, value_name = "K")]
    states: Option<usize>,
}

#[derive(Args, Debug)]
struct BicArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated energies, overriding `bic.energies`.
    #[arg(long, value_name = "LIST")]
    energies: Option<String>,
}

enum Status {
    Ok,
    Mismatch,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
                return EXIT_OK;
            }
            let _ = write!(err, "{text}");
            return EXIT_CONFIG;
        }
    };
    let result = match &cli.command {
        Command::Solve(c) => load(c).and_then(|cfg| cmd_solve(&cfg, c.strict, out)),
        Command::Scan(c) => load(c).and_then(|cfg| cmd_scan(&cfg, c.strict, out)),
        Command::Bic(b) => load(&b.common).and_then(|mut cfg| {
            if let Some(list) = &b.energies {
                cfg.set("bic.energies", list)?;
            }
            cmd_bic(&cfg, out)
        }),
        Command::Report(c) => load(c).and_then(|cfg| cmd_report(&cfg, c.strict, out)),
    };
    match result {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::Mismatch) => {
            let _ = writeln!(err, "comparison exceeded tol.strict");
            EXIT_STRICT
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_config() || matches!(e, Error::Io(_)) {
                EXIT_CONFIG
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn load(c: &Common) -> Result<RunConfig> {
    let text = fs::read_to_string(&c.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", c.config.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(mode) = &c.mode {
        cfg.set("mode", mode)?;
    }
    if let Some(k) = c.states {
        cfg.set("states", &k.to_string())?;
    }
    if let Some(dir) = &c.out {
        cfg.set("output.dir", &dir.to_string_lossy())?;
    }
    Ok(cfg)
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_f64)
}

fn param_list(params: &Params) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_f64(*v)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn grid_line(outcome: Option<&SolveOutcome>, cfg: &RunConfig) -> String {
    match outcome.and_then(|o| o.grid.map(|g| (o, g))) {
        Some((o, g)) => format!(
            "n={} kind={:?} q_lo={} q_hi={} h={}",
            g.len(),
            g.kind(),
            fmt_f64(o.window.0),
            fmt_f64(o.window.1),
            fmt_f64(g.h())
        ),
        None => format!("n={} kind={:?} (no grid)", cfg.solve.nodes, cfg.solve.kind),
    }
}

fn header(cfg: &RunConfig, mode: &str, grid: &str, what: &str) -> String {
    format!(
        "# pdm-dirac {what}\n# config_sha256 = {}\n# model = {} {}\n# mode = {mode}\n# grid = {grid}\n",
        cfg.hash(),
        cfg.model.name(),
        param_list(&cfg.params),
    )
}

fn write_table(path: &Path, head: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(head.as_bytes())?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn spinor_rows(s: &SpinorField) -> Vec<Vec<String>> {
    s.csv_rows()
        .iter()
        .map(|r| r.iter().map(|v| fmt_f64(*v)).collect())
        .collect()
}

const SPINOR_COLUMNS: [&str; 8] = [
    "x", "q", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "rho", "j",
];

/// Analytic counterpart of numeric state `k`: `(level, E, provenance, note)`.
fn analytic_for_state(
    model: BuiltinModel,
    params: &Params,
    variant: SVariant,
    k: usize,
) -> (Option<(usize, f64, Provenance)>, &'static str) {
    let Ok(spec) = AnalyticSpectrum::with_variant(model, params, variant) else {
        return (None, "no closed form");
    };
    let level = match model {
        BuiltinModel::CoshSquare | BuiltinModel::Rational => k + 1,
        BuiltinModel::PoschlTeller if k % 2 == 1 => return (None, "interleaved"),
        BuiltinModel::PoschlTeller => k / 2,
        BuiltinModel::ConstantRest if k > 0 => return (None, "no closed form"),
        _ => k,
    };
    match spec.level(level) {
        Ok((e, _)) => (Some((level, e, spec.provenance)), spec.provenance.label()),
        Err(_) => (None, "closed form undefined"),
    }
}

struct Comparison {
    rows: Vec<Vec<String>>,
    worst: f64,
}

fn compare(cfg: &RunConfig, params: &Params, states: &[StateResult]) -> Comparison {
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for s in states {
        let (analytic, note) = analytic_for_state(cfg.model, params, cfg.s_variant, s.index);
        let (level, e_an, rel) = match analytic {
            Some((n, e, _)) => {
                let rel = (s.energy_plus - e).abs() / e.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                (n.to_string(), fmt_f64(e), fmt_f64(rel))
            }
            None => ("-".into(), "nan".into(), "nan".into()),
        };
        rows.push(vec![
            s.index.to_string(),
            level,
            fmt_f64(s.energy_plus),
            e_an,
            rel,
            fmt_f64(s.error_estimate),
            s.nodes.to_string(),
            s.iterations.to_string(),
            note.to_string(),
        ]);
    }
    Comparison { rows, worst }
}

fn print_table(out: &mut dyn Write, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut widths: Vec<usize> = columns.iter().map(|c| c.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(columns.to_vec()))?;
    for r in rows {
        writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

const SUMMARY_COLUMNS: [&str; 9] = [
    "state",
    "n",
    "E_numeric",
    "E_analytic",
    "rel_err",
    "error_estimate",
    "nodes",
    "iterations",
    "note",
];

fn cmd_solve(cfg: &RunConfig, strict: bool, out: &mut dyn Write) -> Result<Status> {
    let model = cfg.build_model()?;
    let outcome = solve(&model, cfg.mode, &cfg.solve)?;
    let mode = outcome.mode.label();
    let grid = grid_line(Some(&outcome), cfg);
    let dir = &cfg.output_dir;

    let cmp = compare(cfg, &cfg.params, &outcome.states);
    writeln!(
        out,
        "model {} ({}), mode {mode}{}",
        cfg.model.name(),
        param_list(&cfg.params),
        if outcome.threshold {
            ", continuum threshold"
        } else {
            ""
        }
    )?;
    print_table(out, &SUMMARY_COLUMNS, &cmp.rows)?;
    write_table(
        &dir.join("summary.csv"),
        &header(cfg, mode, &grid, "summary"),
        &SUMMARY_COLUMNS,
        &cmp.rows,
    )?;

    for artifact in &cfg.outputs {
        match artifact {
            Artifact::Spectrum => {
                let rows: Vec<Vec<String>> = outcome
                    .states
                    .iter()
                    .map(|s| {
                        vec![
                            s.index.to_string(),
                            fmt_f64(s.lambda),
                            fmt_f64(s.energy_plus),
                            fmt_opt(s.energy_minus),
                            s.nodes.to_string(),
                            fmt_f64(s.error_estimate),
                        ]
                    })
                    .collect();
                write_table(
                    &dir.join("spectrum.csv"),
                    &header(cfg, mode, &grid, "spectrum"),
                    &[
                        "n",
                        "lambda",
                        "E_plus",
                        "E_minus",
                        "nodes",
                        "error_estimate",
                    ],
                    &rows,
                )?;
            }
            Artifact::Wavefunctions => {
                for s in &outcome.states {
                    let Some(pair) = &s.pair else { continue };
                    let spinor =
                        normalize(&reconstruct(pair, &model, &outcome.map, s.energy_plus)?)?;
                    let residual = dirac_residual(&spinor, &model, s.energy_plus)?;
                    let head = format!(
                        "{}# state = {} energy = {} norm_constant = {} dirac_residual = {}\n",
                        header(cfg, mode, &grid, "wavefunction"),
                        s.index,
                        fmt_f64(s.energy_plus),
                        fmt_f64(spinor.norm_constant),
                        fmt_f64(residual)
                    );
                    write_table(
                        &dir.join(format!("wavefunction_{}.csv", s.index)),
                        &head,
                        &SPINOR_COLUMNS,
                        &spinor_rows(&spinor),
                    )?;
                }
            }
            Artifact::Potential => {
                if let Some(field) = &outcome.field {
                    let rows: Vec<Vec<String>> = field
                        .q
                        .iter()
                        .zip(&field.values)
                        .map(|(q, v)| vec![fmt_f64(*q), fmt_f64(*v)])
                        .collect();
                    write_table(
                        &dir.join("potential.csv"),
                        &header(cfg, mode, &grid, "potential"),
                        &["q", "V"],
                        &rows,
                    )?;
                }
            }
            Artifact::Bic => {
                bic_artifacts(cfg, &model, &outcome.map, out)?;
            }
            Artifact::DiscrepancyReport => {
                discrepancy_artifacts(cfg, &model, &outcome.map, out)?;
            }
        }
    }
    Ok(if strict && cmp.worst > cfg.strict_tol {
        Status::Mismatch
    } else {
        Status::Ok
    })
}

const SCAN_COLUMNS: [&str; 7] = [
    "point",
    "param",
    "state",
    "n",
    "E_numeric",
    "E_analytic",
    "status",
];

/// Rows of a previous run with the same config hash, minus any trailing partial point.
fn resume_rows(path: &Path, head: &str, states: usize) -> Vec<String> {
    let Ok(text) = fs::read_to_string(path) else {
        return Vec::new();
    };
    let Some(body) = text.strip_prefix(head) else {
        return Vec::new();
    };
    let mut lines = body.lines();
    if lines.next() != Some(SCAN_COLUMNS.join(",").as_str()) {
        return Vec::new();
    }
    let rows: Vec<&str> = lines.collect();
    let mut keep = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let point = rows[i].split(',').next().unwrap_or("");
        let group: Vec<&str> = rows[i..]
            .iter()
            .take_while(|r| r.split(',').next() == Some(point))
            .cloned()
            .collect();
        let failed = group.iter().any(|r| !r.ends_with(",ok"));
        if group.len() == states || failed {
            keep.extend(group.iter().map(|r| r.to_string()));
        } else {
            break;
        }
        i += group.len();
    }
    keep
}

fn cmd_scan(cfg: &RunConfig, strict: bool, out: &mut dyn Write) -> Result<Status> {
    let axis = cfg.scan.clone().ok_or_else(|| {
        Error::Config("scan needs scan.param, scan.min, scan.max and scan.steps".into())
    })?;
    let path = cfg.output_dir.join("scan.csv");
    let head = header(
        cfg,
        &format!("{:?}", cfg.mode).to_lowercase(),
        &format!("n={} kind={:?}", cfg.solve.nodes, cfg.solve.kind),
        &format!("scan over {}", axis.param),
    );
    let kept = resume_rows(&path, &head, cfg.solve.states);
    let done: usize = kept
        .iter()
        .filter_map(|r| r.split(',').next()?.parse::<usize>().ok())
        .map(|p| p + 1)
        .max()
        .unwrap_or(0);
    fs::create_dir_all(&cfg.output_dir)?;
    let mut w = BufWriter::new(fs::File::create(&path)?);
    w.write_all(head.as_bytes())?;
    writeln!(w, "{}", SCAN_COLUMNS.join(","))?;
    for r in &kept {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    if done > 0 {
        writeln!(
            out,
            "resuming {} after {done} completed points",
            path.display()
        )?;
    }

    let mut worst: f64 = 0.0;
    let values = axis.values();
    for (point, &value) in values.iter().enumerate().skip(done) {
        let attempt = cfg
            .build_model_with(&axis.param, value)
            .and_then(|(m, p)| solve(&m, cfg.mode, &cfg.solve).map(|o| (o, p)));
        match attempt {
            Ok((outcome, params)) => {
                for s in &outcome.states {
                    let (an, _) = analytic_for_state(cfg.model, &params, cfg.s_variant, s.index);
                    if let Some((_, e, _)) = an {
                        worst =
                            worst.max((s.energy_plus - e).abs() / e.abs().max(f64::MIN_POSITIVE));
                    }
                    writeln!(
                        w,
                        "{point},{},{},{},{},{},ok",
                        fmt_f64(value),
                        s.index,
                        an.map_or("-".into(), |a| a.0.to_string()),
                        fmt_f64(s.energy_plus),
                        fmt_opt(an.map(|a| a.1)),
                    )?;
                }
            }
            Err(e) => {
                let status = e.to_string().replace([',', '\n'], ";");
                writeln!(w, "{point},{},-,-,nan,nan,{status}", fmt_f64(value))?;
            }
        }
        w.flush()?;
        writeln!(
            out,
            "point {}/{} {} = {} done",
            point + 1,
            values.len(),
            axis.param,
            fmt_f64(value)
        )?;
    }
    Ok(if strict && worst > cfg.strict_tol {
        Status::Mismatch
    } else {
        Status::Ok
    })
}

const BIC_COLUMNS: [&str; 6] = [
    "E",
    "lambda_tilde",
    "norm_constant",
    "total_prob",
    "max_abs_j",
    "dirac_residual",
];

fn bic_artifacts(
    cfg: &RunConfig,
    model: &ModelSpec,
    map: &TransformMap,
    out: &mut dyn Write,
) -> Result<()> {
    if cfg.bic_energies.is_empty() {
        return Err(Error::Config(
            "bic needs bic.energies (or --energies)".into(),
        ));
    }
    let a = crate::profiles::detect_constant_u(model, crate::pipeline::CONSTANT_U_TOL)
        .unwrap_or(f64::NAN);
    let grid = format!("n={} uniform with walls", cfg.bic_nodes | 1);
    let mut rows = Vec::new();
    for (i, &e) in cfg.bic_energies.iter().enumerate() {
        let s = bic_family(model, map, e, cfg.bic_nodes)?;
        let obs = observables(&s);
        let jmax = obs.j.iter().fold(0.0_f64, |m, j| m.max(j.abs()));
        let residual = dirac_residual(&s, model, e)?;
        let lt = (e * e - a * a).max(0.0).sqrt();
        rows.push(vec![
            fmt_f64(e),
            fmt_f64(lt),
            fmt_f64(s.norm_constant),
            fmt_f64(obs.total_prob),
            fmt_f64(jmax),
            fmt_f64(residual),
        ]);
        let head = format!(
            "{}# energy = {}\n",
            header(cfg, "constant-u", &grid, "bic state"),
            fmt_f64(e)
        );
        write_table(
            &cfg.output_dir.join(format!("bic_{i}.csv")),
            &head,
            &SPINOR_COLUMNS,
            &spinor_rows(&s),
        )?;
    }
    print_table(out, &BIC_COLUMNS, &rows)?;
    write_table(
        &cfg.output_dir.join("bic_summary.csv"),
        &header(cfg, "constant-u", &grid, "bic summary"),
        &BIC_COLUMNS,
        &rows,
    )
}

fn cmd_bic(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status> {
    let model = cfg.build_model()?;
    let map = build_map(&model, cfg.solve.quad_tol)?;
    bic_artifacts(cfg, &model, &map, out)?;
    Ok(Status::Ok)
}

/// Grid for potential comparisons: the q-interval, or `±half_width` on infinite sides.
fn report_grid(cfg: &RunConfig, map: &TransformMap) -> Result<MappedGrid> {
    let lo = if map.lo_kind() == EndpointKind::Finite {
        map.q_lo()
    } else {
        -cfg.solve.half_width
    };
    let hi = if map.hi_kind() == EndpointKind::Finite {
        map.q_hi()
    } else {
        cfg.solve.half_width
    };
    MappedGrid::new(QGrid::new(lo, hi, cfg.solve.nodes, cfg.solve.kind)?, map)
}

const DISCREPANCY_COLUMNS: [&str; 6] =
    ["q", "x", "V_computed", "V_claimed", "abs_diff", "rel_diff"];

fn discrepancy_artifacts(
    cfg: &RunConfig,
    model: &ModelSpec,
    map: &TransformMap,
    out: &mut dyn Write,
) -> Result<()> {
    let mg = report_grid(cfg, map)?;
    let p = cfg.params.clone();
    type Claim = Box<dyn Fn(f64, f64) -> f64>;
    let claims: Vec<(&str, Claim)> = match cfg.model {
        BuiltinModel::PoschlTeller => vec![
            (
                "verified",
                Box::new(poschl_teller_claimed_potential(&p, SVariant::Verified)?),
            ),
            (
                "as-published",
                Box::new(poschl_teller_claimed_potential(&p, SVariant::AsPublished)?),
            ),
        ],
        BuiltinModel::LinearSingular => vec![
            ("direct", Box::new(linear_singular_direct_potential(&p)?)),
            (
                "as-published",
                Box::new(linear_singular_claimed_potential(&p)?),
            ),
        ],
        _ => {
            let a = crate::profiles::detect_constant_u(model, crate::pipeline::CONSTANT_U_TOL);
            match a {
                Some(a) => vec![("constant", Box::new(move |_: f64, _: f64| a * a))],
                None => Vec::new(),
            }
        }
    };
    if !model.mass_strictly_positive() {
        writeln!(
            out,
            "discrepancy report skipped: the approximate potential needs m > 0"
        )?;
        return Ok(());
    }
    let grid = format!(
        "n={} kind={:?} q_lo={} q_hi={}",
        mg.grid.len(),
        mg.grid.kind(),
        fmt_f64(mg.grid.lo()),
        fmt_f64(mg.grid.hi())
    );
    let mut rows = Vec::new();
    for (label, claim) in &claims {
        let rep = potential_discrepancy_report(model, claim.as_ref(), &mg)?;
        let unit_window = rep.max_rel_where(|q| q.abs() <= 3.0);
        let far = rep.min_rel_where(|q| q.abs() >= 1.0);
        rows.push(vec![
            label.to_string(),
            fmt_f64(rep.max_abs),
            fmt_f64(rep.max_rel),
            fmt_f64(unit_window),
            fmt_f64(far),
        ]);
        let node_rows: Vec<Vec<String>> = rep
            .nodes
            .iter()
            .map(|n| {
                vec![
                    fmt_f64(n.q),
                    fmt_f64(n.x),
                    fmt_f64(n.computed),
                    fmt_f64(n.claimed),
                    fmt_f64(n.residual.abs()),
                    fmt_f64(n.residual.abs() / n.claimed.abs().max(1.0)),
                ]
            })
            .collect();
        write_table(
            &cfg.output_dir.join(format!("discrepancy_{label}.csv")),
            &header(
                cfg,
                "approximate",
                &grid,
                &format!("potential discrepancy ({label})"),
            ),
            &DISCREPANCY_COLUMNS,
            &node_rows,
        )?;
    }
    let cols = [
        "claim",
        "max_abs",
        "max_rel",
        "max_rel_|q|<=3",
        "min_rel_|q|>=1",
    ];
    print_table(out, &cols, &rows)?;
    write_table(
        &cfg.output_dir.join("discrepancy_summary.csv"),
        &header(cfg, "approximate", &grid, "potential discrepancy summary"),
        &cols,
        &rows,
    )
}

fn cmd_report(cfg: &RunConfig, strict: bool, out: &mut dyn Write) -> Result<Status> {
    let model = cfg.build_model()?;
    let map = build_map(&model, cfg.solve.quad_tol)?;
    discrepancy_artifacts(cfg, &model, &map, out)?;

    let spec = AnalyticSpectrum::with_variant(cfg.model, &cfg.params, cfg.s_variant);
    let mut worst: f64 = 0.0;
    match solve(&model, cfg.mode, &cfg.solve) {
        Ok(outcome) => {
            let mode = outcome.mode.label();
            let grid = grid_line(Some(&outcome), cfg);
            let mut rows = Vec::new();
            for s in &outcome.states {
                let (an, note) = analytic_for_state(cfg.model, &cfg.params, cfg.s_variant, s.index);
                let candidate = if cfg.model == BuiltinModel::PoschlTeller {
                    poschl_teller_all_levels(&cfg.params, cfg.s_variant, s.index).ok()
                } else {
                    None
                };
                if let Some((_, e, _)) = an {
                    worst = worst.max((s.energy_plus - e).abs() / e.abs().max(f64::MIN_POSITIVE));
                }
                rows.push(vec![
                    s.index.to_string(),
                    fmt_f64(s.energy_plus),
                    fmt_opt(an.map(|a| a.1)),
                    fmt_opt(candidate),
                    fmt_f64(s.error_estimate),
                    note.to_string(),
                ]);
            }
            let cols = [
                "state",
                "E_numeric",
                "E_published_sequence",
                "E_all_levels",
                "error_estimate",
                "note",
            ];
            writeln!(out, "levels ({mode})")?;
            print_table(out, &cols, &rows)?;
            write_table(
                &cfg.output_dir.join("levels.csv"),
                &header(cfg, mode, &grid, "level report"),
                &cols,
                &rows,
            )?;
        }
        Err(e) if !e.is_config() => {
            writeln!(out, "numeric solve failed: {e}")?;
            if let Ok(spec) = &spec {
                let mut rows = Vec::new();
                for n in spec.first_index()..spec.first_index() + cfg.solve.states {
                    let value = spec
                        .level(n)
                        .map(|(e, _)| fmt_f64(e))
                        .unwrap_or_else(|e| e.to_string());
                    rows.push(vec![
                        n.to_string(),
                        value,
                        spec.provenance.label().to_string(),
                    ]);
                }
                let cols = ["n", "E_closed_form", "provenance"];
                print_table(out, &cols, &rows)?;
                write_table(
                    &cfg.output_dir.join("levels.csv"),
                    &header(cfg, "none", "no grid", "closed-form levels"),
                    &cols,
                    &rows,
                )?;
            }
        }
        Err(e) => return Err(e),
    }
    Ok(if strict && worst > cfg.strict_tol {
        Status::Mismatch
    } else {
        Status::Ok
    })
}
