//! Command line front end for the exact semilinear matrix toolkit.
//!
//! Every subcommand reads instance files in the text format of the core
//! crate, runs one algorithm, and prints a report. Each report opens with
//! the effective arithmetic profile and a truncation flag so a run can be
//! audited after the fact, and `--json` switches the same data to a single
//! JSON document. Reports are byte identical across repeated runs and
//! across `--threads` settings. Diagnostics go to stderr; the exit code is
//! 0 on success, 1 for an algorithmic failure on well formed input, and 2
//! for malformed input.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use slopeforge_core::descent::StepKind;
use slopeforge_core::{
    compat_residual, descend, diagonal_monomials, diagonalize_generic, exp_int,
    factor_elementary, find_irreducible, fmt_move, fmt_ratio, generate, is_compatible,
    move_product, newton_polygon, parse_ratio, residue_matrix, solve_sigma_equation, val_gt,
    verify_unipotent, DescentParams, Error, Family, Instance, Matrix, NamedMatrix, Profile,
    Result, Role, Series, SolveRegime, UnipotentCheck,
};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::{fs, process, thread};

#[derive(Parser)]
#[command(name = "slopeforge", version, about = "Exact semilinear matrix tools over truncated Laurent series")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Overrides applied to the ring and param lines of every input file
/// before parsing, so one instance can be re-run under a different
/// arithmetic profile without editing it.
#[derive(Args, Clone)]
struct RingArgs {
    /// Override the base precision N
    #[arg(long, value_name = "N")]
    pi_prec: Option<u32>,
    /// Override the unramified degree; picks a fresh modulus
    #[arg(long, value_name = "D")]
    unram: Option<usize>,
    /// Override the ramification index e
    #[arg(long, value_name = "E")]
    ram: Option<usize>,
    /// Override the exponent lattice depth h
    #[arg(long, value_name = "H")]
    exp_denom: Option<u32>,
    /// Override the exponent window
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    window: Option<Vec<String>>,
    /// Override the slope weight r
    #[arg(long, value_name = "P/Q", allow_hyphen_values = true)]
    r: Option<String>,
    /// Override the shift threshold s
    #[arg(long, value_name = "P/Q", allow_hyphen_values = true)]
    s: Option<String>,
    /// Override the iteration budget
    #[arg(long, value_name = "K")]
    max_iter: Option<usize>,
    /// Override the stored seed
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Instance files to process
    #[arg(required = true, value_name = "FILE")]
    files: Vec<PathBuf>,
    /// Emit the report as JSON
    #[arg(long)]
    json: bool,
    /// Worker threads across input files
    #[arg(long, default_value_t = 1, value_name = "K")]
    threads: usize,
    #[command(flatten)]
    ring: RingArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generic slopes of the frobenius matrix with multiplicities
    Np {
        #[command(flatten)]
        run: RunArgs,
        /// Doubling budget for slope stabilization
        #[arg(long, default_value_t = 6, value_name = "K")]
        doublings: u32,
        /// Use this named matrix instead of the frobenius role
        #[arg(long, value_name = "NAME")]
        matrix: Option<String>,
    },
    /// Conjugate the frobenius matrix toward its diagonal frame
    Diag {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Two phase weighted reduction toward the diagonal frame
    Descend {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Factor the residue of a matrix into elementary moves
    Factor {
        #[command(flatten)]
        run: RunArgs,
        /// Use this named matrix instead of the first generic one
        #[arg(long, value_name = "NAME")]
        matrix: Option<String>,
    },
    /// Solve w - L*sigma(w) = V for the 1x1 matrices named L and V
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Extra valuation padding on the solve target
        #[arg(long, default_value_t = 1, value_name = "K")]
        pad: u32,
    },
    /// Compatibility defect of the frobenius and connection pair
    CheckNabla {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Structural invariant suite over one instance
    Verify {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generate a seeded instance in the text format
    Gen {
        /// Instance family
        #[arg(long, value_name = "NAME")]
        family: String,
        /// Generator seed
        #[arg(long, default_value_t = 0, value_name = "S")]
        seed: u64,
        /// Write the instance to this path instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Emit as JSON
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone)]
enum Op {
    Np { doublings: u32, matrix: Option<String> },
    Diag,
    Descend,
    Factor { matrix: Option<String> },
    Solve { pad: u32 },
    CheckNabla,
    Verify,
}

/// One finished report. `lines` is the command specific text body; `data`
/// holds the same facts as JSON fields. The header (file, profile,
/// truncated) is attached at render time.
struct Report {
    profile: Profile,
    truncated: bool,
    lines: Vec<String>,
    data: Map<String, Value>,
    exit: i32,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Np { run, doublings, matrix } => run_files(&run, &Op::Np { doublings, matrix }),
        Cmd::Diag { run } => run_files(&run, &Op::Diag),
        Cmd::Descend { run } => run_files(&run, &Op::Descend),
        Cmd::Factor { run, matrix } => run_files(&run, &Op::Factor { matrix }),
        Cmd::Solve { run, pad } => run_files(&run, &Op::Solve { pad }),
        Cmd::CheckNabla { run } => run_files(&run, &Op::CheckNabla),
        Cmd::Verify { run } => run_files(&run, &Op::Verify),
        Cmd::Gen { family, seed, out, json } => run_gen(&family, seed, out.as_deref(), json),
    };
    let _ = std::io::stdout().flush();
    process::exit(code);
}

/// Runs one op over every input file, optionally in parallel, and prints
/// the reports in input order so the output does not depend on scheduling.
fn run_files(run: &RunArgs, op: &Op) -> i32 {
    let workers = run.threads.max(1).min(run.files.len().max(1));
    let mut results: Vec<(usize, Result<Report>)> = if workers <= 1 {
        run.files
            .iter()
            .enumerate()
            .map(|(i, p)| (i, process_file(p, &run.ring, op)))
            .collect()
    } else {
        thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers {
                let files = &run.files;
                let ring = &run.ring;
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = w;
                    while i < files.len() {
                        out.push((i, process_file(&files[i], ring, op)));
                        i += workers;
                    }
                    out
                }));
            }
            let mut all: Vec<_> = handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker thread panicked"))
                .collect();
            all.sort_by_key(|(i, _)| *i);
            all
        })
    };
    let multi = run.files.len() > 1;
    let mut exit = 0;
    let mut json_items = Vec::new();
    let mut blocks = Vec::new();
    for (i, res) in results.drain(..) {
        let path = &run.files[i];
        match res {
            Ok(rep) => {
                exit = exit.max(rep.exit);
                if run.json {
                    json_items.push(render_json(multi.then_some(path), &rep));
                } else {
                    blocks.push(render_text(multi.then_some(path), &rep));
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                exit = exit.max(e.exit_code());
            }
        }
    }
    if run.json {
        if multi {
            emit_stdout(&format!("{}\n", pretty(&Value::Array(json_items))));
        } else if let Some(doc) = json_items.pop() {
            emit_stdout(&format!("{}\n", pretty(&doc)));
        }
    } else if !blocks.is_empty() {
        emit_stdout(&blocks.join("\n"));
    }
    exit
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("report serialization cannot fail")
}

/// Writes a report chunk, dying quietly when the consumer closes the pipe.
fn emit_stdout(s: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(s.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            process::exit(0);
        }
        panic!("failed writing report: {e}");
    }
}

fn process_file(path: &Path, ring: &RingArgs, op: &Op) -> Result<Report> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let text = apply_overrides(&raw, ring)?;
    let inst = Instance::parse(&text)?;
    match op {
        Op::Np { doublings, matrix } => cmd_np(&inst, *doublings, matrix),
        Op::Diag => cmd_diag(&inst),
        Op::Descend => cmd_descend(&inst),
        Op::Factor { matrix } => cmd_factor(&inst, matrix),
        Op::Solve { pad } => cmd_solve(&inst, *pad),
        Op::CheckNabla => cmd_check_nabla(&inst),
        Op::Verify => cmd_verify(&inst),
    }
}

/// Rewrites the ring and param header lines with any command line
/// overrides, leaving the rest of the file untouched. Working on the text
/// keeps one parser as the single source of truth for validation.
fn apply_overrides(text: &str, ov: &RingArgs) -> Result<String> {
    let ring_touched = ov.pi_prec.is_some()
        || ov.unram.is_some()
        || ov.ram.is_some()
        || ov.exp_denom.is_some()
        || ov.window.is_some();
    let param_touched =
        ov.r.is_some() || ov.s.is_some() || ov.max_iter.is_some() || ov.seed.is_some();
    if !ring_touched && !param_touched {
        return Ok(text.to_string());
    }
    let mut out: Vec<String> = Vec::new();
    let mut saw_ring = false;
    let mut saw_param = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("ring ") {
            saw_ring = true;
            if ring_touched {
                out.push(rewrite_ring_line(rest, ov)?);
            } else {
                out.push(line.to_string());
            }
        } else if let Some(rest) = line.strip_prefix("param ") {
            saw_param = true;
            if param_touched {
                out.push(rewrite_param_line(rest, ov)?);
            } else {
                out.push(line.to_string());
            }
        } else {
            out.push(line.to_string());
        }
    }
    if !saw_ring {
        return Err(Error::InvalidInput("instance has no ring line".into()));
    }
    if param_touched && !saw_param {
        let pline = rewrite_param_line("", ov)?;
        let pos = out.iter().position(|l| l.starts_with("ring ")).unwrap() + 1;
        out.insert(pos, pline);
    }
    let mut s = out.join("\n");
    s.push('\n');
    Ok(s)
}

fn ring_field(fields: &[(String, String)], key: &str) -> Result<String> {
    fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::InvalidInput(format!("ring line is missing field '{key}'")))
}

fn rewrite_ring_line(rest: &str, ov: &RingArgs) -> Result<String> {
    let mut fields: Vec<(String, String)> = Vec::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("bad ring field '{tok}'")))?;
        fields.push((k.to_string(), v.to_string()));
    }
    let p: u64 = ring_field(&fields, "p")?
        .parse()
        .map_err(|_| Error::InvalidInput("ring field p is not an integer".into()))?;
    let mut d = ring_field(&fields, "d")?;
    let mut phi = ring_field(&fields, "phi")?;
    let mut e = ring_field(&fields, "e")?;
    let mut n = ring_field(&fields, "N")?;
    let mut h = ring_field(&fields, "h")?;
    let mut window = ring_field(&fields, "window")?;
    if let Some(x) = ov.pi_prec {
        n = x.to_string();
    }
    if let Some(x) = ov.ram {
        e = x.to_string();
    }
    if let Some(x) = ov.exp_denom {
        h = x.to_string();
    }
    if let Some(x) = ov.unram {
        // a new residue degree invalidates the stored modulus
        d = x.to_string();
        phi = find_irreducible(p, x)?
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",");
    }
    if let Some(w) = &ov.window {
        let lo = parse_ratio(&w[0])?;
        let hi = parse_ratio(&w[1])?;
        window = format!("{},{}", fmt_ratio(&lo), fmt_ratio(&hi));
    }
    Ok(format!("ring p={p} d={d} phi={phi} e={e} N={n} h={h} window={window}"))
}

fn rewrite_param_line(rest: &str, ov: &RingArgs) -> Result<String> {
    let mut r: Option<String> = None;
    let mut s: Option<String> = None;
    let mut max_iter: Option<String> = None;
    let mut seed: Option<String> = None;
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("bad param field '{tok}'")))?;
        match k {
            "r" => r = Some(v.to_string()),
            "s" => s = Some(v.to_string()),
            "max_iter" => max_iter = Some(v.to_string()),
            "seed" => seed = Some(v.to_string()),
            other => {
                return Err(Error::InvalidInput(format!("unknown param field '{other}'")));
            }
        }
    }
    if let Some(x) = &ov.r {
        r = Some(fmt_ratio(&parse_ratio(x)?));
    }
    if let Some(x) = &ov.s {
        s = Some(fmt_ratio(&parse_ratio(x)?));
    }
    if let Some(x) = ov.max_iter {
        max_iter = Some(x.to_string());
    }
    if let Some(x) = ov.seed {
        seed = Some(x.to_string());
    }
    let mut parts = Vec::new();
    if let Some(v) = r {
        parts.push(format!("r={v}"));
    }
    if let Some(v) = s {
        parts.push(format!("s={v}"));
    }
    if let Some(v) = max_iter {
        parts.push(format!("max_iter={v}"));
    }
    if let Some(v) = seed {
        parts.push(format!("seed={v}"));
    }
    Ok(format!("param {}", parts.join(" ")))
}

fn named<'a>(inst: &'a Instance, name: &str) -> Result<&'a NamedMatrix> {
    inst.find(name)
        .ok_or_else(|| Error::InvalidInput(format!("no matrix named '{name}'")))
}

fn by_role(inst: &Instance, role: Role) -> Result<&NamedMatrix> {
    inst.by_role(role)
        .ok_or_else(|| Error::InvalidInput(format!("instance has no {} matrix", role.as_str())))
}

fn profile_line(p: &Profile) -> String {
    format!(
        "profile p={} d={} phi={} e={} N={} h={} window={},{}",
        p.ring.p,
        p.ring.d,
        p.ring
            .phi_input
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(","),
        p.ring.e,
        p.ring.n,
        p.h,
        fmt_ratio(&p.lo),
        fmt_ratio(&p.hi),
    )
}

fn profile_json(p: &Profile) -> Value {
    json!({
        "p": p.ring.p,
        "d": p.ring.d,
        "phi": p.ring.phi_input,
        "e": p.ring.e,
        "N": p.ring.n,
        "h": p.h,
        "window": [fmt_ratio(&p.lo), fmt_ratio(&p.hi)],
    })
}

fn render_text(file: Option<&PathBuf>, rep: &Report) -> String {
    let mut s = String::new();
    if let Some(f) = file {
        s.push_str(&format!("file {}\n", f.display()));
    }
    s.push_str(&profile_line(&rep.profile));
    s.push('\n');
    s.push_str(&format!("truncated {}\n", rep.truncated));
    for l in &rep.lines {
        s.push_str(l);
        s.push('\n');
    }
    s
}

fn render_json(file: Option<&PathBuf>, rep: &Report) -> Value {
    let mut m = rep.data.clone();
    if let Some(f) = file {
        m.insert("file".into(), json!(f.display().to_string()));
    }
    m.insert("profile".into(), profile_json(&rep.profile));
    m.insert("truncated".into(), json!(rep.truncated));
    Value::Object(m)
}

/// A vanished value only certifies valuation at least the base precision.
fn val_or_floor(v: &Option<slopeforge_core::Exp>, n: u32) -> String {
    match v {
        Some(x) => fmt_ratio(x),
        None => format!(">={n}"),
    }
}

fn push_matrix_lines(lines: &mut Vec<String>, name: &str, m: &Matrix) {
    lines.push(format!("matrix {} {} {}x{}", name, Role::Generic.as_str(), m.rows, m.cols));
    for row in m.emit_rows() {
        lines.push(row);
    }
}

fn matrix_json(m: &Matrix) -> Value {
    json!({
        "rows": m.rows,
        "cols": m.cols,
        "entries": (0..m.rows)
            .map(|i| (0..m.cols).map(|j| m.at(i, j).emit()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

fn object(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn cmd_np(inst: &Instance, doublings: u32, matrix: &Option<String>) -> Result<Report> {
    let nm = match matrix {
        Some(name) => named(inst, name)?,
        None => by_role(inst, Role::Frobenius)?,
    };
    let poly = newton_polygon(&nm.mat, doublings)?;
    let mut lines = Vec::new();
    let mut slopes = Vec::new();
    for (s, m) in &poly {
        lines.push(format!("slope {}/{} multiplicity {}", s.numer(), s.denom(), m));
        slopes.push(json!({
            "slope": format!("{}/{}", s.numer(), s.denom()),
            "multiplicity": m,
        }));
    }
    Ok(Report {
        profile: nm.mat.profile().clone(),
        truncated: nm.mat.truncated(),
        lines,
        data: object(vec![
            ("command", json!("np")),
            ("matrix", json!(nm.name)),
            ("slopes", Value::Array(slopes)),
        ]),
        exit: 0,
    })
}

fn cmd_diag(inst: &Instance) -> Result<Report> {
    let b = by_role(inst, Role::Frobenius)?;
    let d = by_role(inst, Role::Diagonal)?;
    let rounds_budget = inst.params.max_iter.unwrap_or(24);
    let out = diagonalize_generic(&b.mat, &d.mat, rounds_budget)?;
    let n = out.u.profile().ring.n;
    let res_str = val_or_floor(&out.residual_val, n);
    let mut lines = vec![
        format!("rounds {}", out.rounds),
        format!("residual_val {res_str}"),
    ];
    push_matrix_lines(&mut lines, "U", &out.u);
    Ok(Report {
        profile: out.u.profile().clone(),
        truncated: b.mat.truncated() || d.mat.truncated() || out.truncated,
        lines,
        data: object(vec![
            ("command", json!("diag")),
            ("rounds", json!(out.rounds)),
            ("residual_val", json!(res_str)),
            ("u", matrix_json(&out.u)),
        ]),
        exit: 0,
    })
}

fn cmd_descend(inst: &Instance) -> Result<Report> {
    let a = by_role(inst, Role::Frobenius)?;
    let d = by_role(inst, Role::Diagonal)?;
    let params = DescentParams {
        r: inst.params.r.unwrap_or_else(|| exp_int(1)),
        s: inst.params.s,
        max_iter: inst.params.max_iter.unwrap_or(40),
    };
    let out = descend(&a.mat, &d.mat, &params)?;
    let reduced = d.mat.mul(&out.r_mat)?;
    let mut lines = vec![
        format!("delta {}", fmt_ratio(&out.delta)),
        format!("threshold {}", fmt_ratio(&out.threshold)),
        format!("steps {}", out.steps.len()),
    ];
    let mut steps = Vec::new();
    for st in &out.steps {
        let ty = match st.kind {
            StepKind::First => 1,
            StepKind::Second => 2,
        };
        let vr = match &st.val_r_after {
            Some(v) => fmt_ratio(v),
            None => "inf".to_string(),
        };
        lines.push(format!(
            "l={} type={} j={} r_l={} val_r={}",
            st.l,
            ty,
            fmt_ratio(&st.j),
            fmt_ratio(&st.r_l),
            vr
        ));
        steps.push(json!({
            "l": st.l,
            "type": ty,
            "j": fmt_ratio(&st.j),
            "r_l": fmt_ratio(&st.r_l),
            "val_r": vr,
        }));
    }
    lines.push(format!("progress_monotone {}", out.progress_monotone));
    lines.push(format!("envelope_violations {}", out.envelope_violations.len()));
    push_matrix_lines(&mut lines, "reduced", &reduced);
    Ok(Report {
        profile: reduced.profile().clone(),
        truncated: a.mat.truncated() || d.mat.truncated() || out.truncated || reduced.truncated(),
        lines,
        data: object(vec![
            ("command", json!("descend")),
            ("delta", json!(fmt_ratio(&out.delta))),
            ("threshold", json!(fmt_ratio(&out.threshold))),
            ("steps", Value::Array(steps)),
            ("progress_monotone", json!(out.progress_monotone)),
            ("envelope_violations", json!(out.envelope_violations.len())),
            ("reduced", matrix_json(&reduced)),
        ]),
        exit: 0,
    })
}

fn cmd_factor(inst: &Instance, matrix: &Option<String>) -> Result<Report> {
    let nm = match matrix {
        Some(name) => named(inst, name)?,
        None => inst
            .by_role(Role::Generic)
            .or_else(|| inst.matrices.first())
            .ok_or_else(|| Error::InvalidInput("instance has no matrix to factor".into()))?,
    };
    let fq = &inst.profile.ring.fq;
    let gr = residue_matrix(&nm.mat)?;
    let moves = factor_elementary(&gr, fq)?;
    let back = move_product(&moves, gr.n, fq);
    let exact = back == gr;
    let mut lines = vec![format!("moves {}", moves.len())];
    let mut move_strs = Vec::new();
    for mv in &moves {
        let s = fmt_move(mv);
        lines.push(s.clone());
        move_strs.push(json!(s));
    }
    lines.push(format!("product_exact {exact}"));
    Ok(Report {
        profile: nm.mat.profile().clone(),
        truncated: nm.mat.truncated(),
        lines,
        data: object(vec![
            ("command", json!("factor")),
            ("matrix", json!(nm.name)),
            ("moves", Value::Array(move_strs)),
            ("product_exact", json!(exact)),
        ]),
        exit: 0,
    })
}

fn cmd_solve(inst: &Instance, pad: u32) -> Result<Report> {
    let l = named(inst, "L")?;
    let v = named(inst, "V")?;
    for (nm, tag) in [(l, "L"), (v, "V")] {
        if nm.mat.rows != 1 || nm.mat.cols != 1 {
            return Err(Error::InvalidInput(format!("matrix {tag} must be 1x1")));
        }
    }
    let out = solve_sigma_equation(l.mat.at(0, 0), v.mat.at(0, 0), pad)?;
    let regime = match out.regime {
        SolveRegime::Empty => "empty",
        SolveRegime::Forward => "forward",
        SolveRegime::DigitLift => "digit",
        SolveRegime::Backward => "backward",
    };
    let n = out.w.profile.ring.n;
    let res_str = val_or_floor(&out.residual.val0(), n);
    let lines = vec![
        format!("regime {regime}"),
        format!("w {}", out.w.emit()),
        format!("residual {}", out.residual.emit()),
        format!("residual_val {res_str}"),
    ];
    Ok(Report {
        profile: out.w.profile.clone(),
        truncated: l.mat.truncated() || v.mat.truncated() || out.w.truncated || out.residual.truncated,
        lines,
        data: object(vec![
            ("command", json!("solve")),
            ("regime", json!(regime)),
            ("w", json!(out.w.emit())),
            ("residual", json!(out.residual.emit())),
            ("residual_val", json!(res_str)),
        ]),
        exit: 0,
    })
}

fn cmd_check_nabla(inst: &Instance) -> Result<Report> {
    let a = by_role(inst, Role::Frobenius)?;
    let g = by_role(inst, Role::Connection)?;
    let res = compat_residual(&a.mat, &g.mat)?;
    let ok = res.is_zero();
    let n = res.profile().ring.n;
    let res_str = val_or_floor(&res.val0(), n);
    let lines = vec![
        format!("compatible {ok}"),
        format!("residual_val {res_str}"),
    ];
    Ok(Report {
        profile: res.profile().clone(),
        truncated: a.mat.truncated() || g.mat.truncated() || res.truncated(),
        lines,
        data: object(vec![
            ("command", json!("check-nabla")),
            ("compatible", json!(ok)),
            ("residual_val", json!(res_str)),
        ]),
        exit: 0,
    })
}

fn b2s(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// B D^{-1} - I must be strictly positive in the r-weighted gauss
/// valuation for the diagonal frame to be a valid starting point.
fn admissible(b: &Matrix, d: &Matrix, r: &slopeforge_core::Exp) -> bool {
    if b.rows != b.cols || d.rows != d.cols || b.rows != d.rows {
        return false;
    }
    let entries = match diagonal_monomials(d) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let profile = d.profile().clone();
    let ring = profile.ring.clone();
    let mut d_inv = Matrix::identity(&profile, d.rows);
    for (i, c) in entries.iter().enumerate() {
        let inv = match ring.cinv(c) {
            Ok(x) => x,
            Err(_) => return false,
        };
        let mono = match Series::monomial(profile.clone(), exp_int(0), inv) {
            Ok(s) => s,
            Err(_) => return false,
        };
        *d_inv.at_mut(i, i) = mono;
    }
    let dev = match b.mul(&d_inv).and_then(|q| q.sub_identity()) {
        Ok(m) => m,
        Err(_) => return false,
    };
    val_gt(&dev.val_r(r), &exp_int(0))
}

fn constant_frame(a: &Matrix) -> bool {
    a.data
        .iter()
        .all(|s| s.terms().all(|(e, _)| *e == exp_int(0)))
}

fn cmd_verify(inst: &Instance) -> Result<Report> {
    let mut checks: Vec<(&str, &str)> = Vec::new();
    let emitted = inst.emit();
    let roundtrip = match Instance::parse(&emitted) {
        Ok(i2) => i2.emit() == emitted,
        Err(_) => false,
    };
    checks.push(("roundtrip", b2s(roundtrip)));
    checks.push((
        "untruncated",
        b2s(inst.matrices.iter().all(|nm| !nm.mat.truncated())),
    ));
    checks.push((
        "square-roles",
        b2s(inst
            .matrices
            .iter()
            .filter(|nm| nm.role != Role::Generic)
            .all(|nm| nm.mat.rows == nm.mat.cols)),
    ));
    checks.push((
        "diagonal-frame",
        match inst.by_role(Role::Diagonal) {
            None => "skip",
            Some(d) => b2s(diagonal_monomials(&d.mat).is_ok()),
        },
    ));
    checks.push((
        "polygon",
        match inst.by_role(Role::Frobenius) {
            None => "skip",
            Some(b) => match newton_polygon(&b.mat, 6) {
                Ok(_) => "pass",
                // indeterminate at this profile, not a structural defect
                Err(Error::PrecisionExhausted(_)) | Err(Error::NotStabilized(_)) => "skip",
                Err(_) => "fail",
            },
        },
    ));
    // an instance without a stored weight is judged in the plain valuation
    let weight = inst.params.r.unwrap_or_else(|| exp_int(0));
    checks.push((
        "admission",
        match (inst.by_role(Role::Frobenius), inst.by_role(Role::Diagonal)) {
            (Some(b), Some(d)) => b2s(admissible(&b.mat, &d.mat, &weight)),
            _ => "skip",
        },
    ));
    checks.push((
        "compat",
        match (inst.by_role(Role::Frobenius), inst.by_role(Role::Connection)) {
            (Some(a), Some(g)) => b2s(matches!(is_compatible(&a.mat, &g.mat), Ok(true))),
            _ => "skip",
        },
    ));
    checks.push((
        "unipotent",
        match (inst.by_role(Role::Frobenius), inst.by_role(Role::Connection)) {
            (Some(a), Some(g)) if constant_frame(&a.mat) => b2s(matches!(
                verify_unipotent(&a.mat, &g.mat),
                Ok(UnipotentCheck::Certified(_))
            )),
            _ => "skip",
        },
    ));
    let failed = checks.iter().any(|(_, s)| *s == "fail");
    let mut lines: Vec<String> = checks
        .iter()
        .map(|(name, st)| format!("check {name} {st}"))
        .collect();
    lines.push(format!("result {}", if failed { "fail" } else { "pass" }));
    let checks_json: Vec<Value> = checks
        .iter()
        .map(|(name, st)| json!({"name": name, "status": st}))
        .collect();
    Ok(Report {
        profile: inst.profile.clone(),
        truncated: inst.matrices.iter().any(|nm| nm.mat.truncated()),
        lines,
        data: object(vec![
            ("command", json!("verify")),
            ("checks", Value::Array(checks_json)),
            ("result", json!(if failed { "fail" } else { "pass" })),
        ]),
        exit: if failed { 1 } else { 0 },
    })
}

fn run_gen(family: &str, seed: u64, out: Option<&Path>, json: bool) -> i32 {
    match gen_inner(family, seed, out, json) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn gen_inner(family: &str, seed: u64, out: Option<&Path>, json: bool) -> Result<()> {
    let fam = Family::parse(family)?;
    let inst = generate(fam, seed)?;
    let text = inst.emit();
    if let Some(path) = out {
        fs::write(path, &text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
        if json {
            let doc = json!({
                "command": "gen",
                "family": fam.as_str(),
                "seed": seed,
                "out": path.display().to_string(),
            });
            emit_stdout(&format!("{}\n", pretty(&doc)));
        }
    } else if json {
        let doc = json!({
            "command": "gen",
            "family": fam.as_str(),
            "seed": seed,
            "instance": text,
        });
        emit_stdout(&format!("{}\n", pretty(&doc)));
    } else {
        emit_stdout(&text);
    }
    Ok(())
}
