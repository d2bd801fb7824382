//! Command-line front end: symbolic verification, molecule tooling,
//! homology, classification, corpus propagation and isoenergy scans.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use isoenergy::algebra::jacobi_defect;
use isoenergy::classify::{Classification, Outcome};
use isoenergy::corpus::{Corpus, CorpusError};
use isoenergy::homology::HomologyError;
use isoenergy::molecule::{parse_unchecked, validate, MoleculeError};
use isoenergy::scanner::{
    scan_h_with, ScanError, ScanOptions, ScanReport, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_SVD_TOL, DEFAULT_TOL,
};
use isoenergy::system::{casimirs, first_integral, hamiltonian, is_regular_orbit};
use isoenergy::{classify, first_homology, poisson_bracket, Molecule, OrbitParams, Poly, Var};

const SCHEMA: u32 = 1;
const CORPUS_ENV: &str = "ISOENERGY_CORPUS";

#[derive(Parser, Debug)]
#[command(name = "isoenergy", version, about = "Poisson algebra, molecule topology and energy-level scans for the Kovalevskaya top on so(4)")]
struct Cli {
    /// Emit JSON on stdout instead of text.
    #[arg(long)]
    json: bool,
    /// Seed for randomised numerics.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct JsonFlag {
    /// Emit JSON on stdout instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the Casimir, involution and Jacobi identities symbolically.
    Verify {
        /// Corrupt one of the functions first (the checks must then fail).
        #[arg(long, value_enum)]
        mutate: Option<Mutation>,
        #[command(flatten)]
        out: JsonFlag,
    },
    /// Molecule file tooling.
    Molecule {
        #[command(subcommand)]
        command: MoleculeCommand,
    },
    /// First homology of the manifold glued from a molecule file.
    Homology {
        file: PathBuf,
        #[command(flatten)]
        out: JsonFlag,
    },
    /// Topological type of the manifold glued from a molecule file.
    Classify {
        file: PathBuf,
        /// Print the move sequence and base-case matches.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: JsonFlag,
    },
    /// Spread types over the corpus along its identification arrows.
    Propagate {
        /// Corpus directory (default: $ISOENERGY_CORPUS, else the built-in corpus).
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        out: JsonFlag,
    },
    /// Sample isoenergy surfaces over a grid of h values.
    Scan(ScanArgs),
}

#[derive(Subcommand, Debug)]
enum MoleculeCommand {
    /// Parse and validate; list every violated invariant.
    Check {
        file: PathBuf,
        #[command(flatten)]
        out: JsonFlag,
    },
    /// Print the canonical serialisation.
    Fmt { file: PathBuf },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mutation {
    #[value(name = "H")]
    H,
    #[value(name = "K")]
    K,
    #[value(name = "f1")]
    F1,
    #[value(name = "f2")]
    F2,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    /// Energy grid `lo:hi:steps`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    h: Grid,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    c1: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Constraint residual tolerance of the projection.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Singular-value threshold for critical points of K.
    #[arg(long, default_value_t = DEFAULT_SVD_TOL)]
    svd_tol: f64,
    /// Skip the critical-value search.
    #[arg(long)]
    no_critical: bool,
    /// Re-sample with 2n points and flag component counts that change.
    #[arg(long)]
    check_doubling: bool,
    /// Write the JSON report to this file.
    #[arg(long, value_name = "OUT")]
    json: Option<PathBuf>,
    /// Write every sampled point (with its h) to this CSV file.
    #[arg(long, value_name = "OUT")]
    csv: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Grid {
    lo: f64,
    hi: f64,
    steps: usize,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err("expected lo:hi:steps".into());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    let steps = steps.trim().parse::<usize>().map_err(|e| format!("`{steps}`: {e}"))?;
    Ok(Grid { lo: num(lo)?, hi: num(hi)?, steps })
}

/// A failed command: code 1 for domain errors, 2 for I/O and syntax errors.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn domain(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

type CmdResult = Result<(), Failure>;

fn print_json(value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| domain(anyhow!(e)))?;
    println!("{text}");
    Ok(())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(anyhow!("cannot read {}: {e}", path.display())))
}

fn read_molecule(path: &Path) -> Result<Molecule, Failure> {
    let m = parse_unchecked(&read_text(path)?).map_err(|e| input(anyhow!("{}: {e}", path.display())))?;
    let diags = validate(&m);
    if !diags.is_empty() {
        let err = MoleculeError::Validation(diags);
        return Err(domain(anyhow!("{}: {err}", path.display())));
    }
    Ok(m)
}

fn homology_failure(e: HomologyError) -> Failure {
    domain(anyhow!(e))
}

fn cmd_verify(mutate: Option<Mutation>, json: bool) -> CmdResult {
    let (mut f1, mut f2) = casimirs();
    let (mut h, mut k) = (hamiltonian(), first_integral());
    let extra = |v: Var| Poly::var(v);
    match mutate {
        Some(Mutation::H) => h = &h + &extra(Var::J1),
        Some(Mutation::K) => k = &k + &extra(Var::J3),
        Some(Mutation::F1) => f1 = &f1 + &extra(Var::J3),
        Some(Mutation::F2) => f2 = &f2 + &extra(Var::X1),
        None => {}
    }
    let coords: Vec<(Var, Poly)> = Var::PHASE.iter().map(|&v| (v, Poly::var(v))).collect();
    let mut checks: Vec<(String, Poly)> = Vec::new();
    for (name, f) in [("f1", &f1), ("f2", &f2)] {
        for (v, z) in &coords {
            checks.push((format!("{{{name}, {}}}", v.name()), poisson_bracket(f, z)));
        }
    }
    checks.push(("{H, K}".into(), poisson_bracket(&h, &k)));
    for i in 0..6 {
        for j in i..6 {
            for l in j..6 {
                let name = format!("Jacobi({}, {}, {})", coords[i].0.name(), coords[j].0.name(), coords[l].0.name());
                checks.push((name, jacobi_defect(&coords[i].1, &coords[j].1, &coords[l].1)));
            }
        }
    }
    let failed = checks.iter().filter(|(_, r)| !r.is_zero()).count();
    if json {
        let list: Vec<Value> = checks
            .iter()
            .map(|(name, r)| json!({"check": name, "ok": r.is_zero(), "residual": r.to_string()}))
            .collect();
        let mutated = mutate.map(|m| format!("{m:?}").to_lowercase());
        print_json(&json!({"schema": SCHEMA, "passed": failed == 0, "mutated": mutated, "checks": list}))?;
    } else {
        for (name, r) in &checks {
            if r.is_zero() {
                println!("ok    {name} = 0");
            } else {
                println!("FAIL  {name} = {r}");
            }
        }
        println!("{} of {} checks passed", checks.len() - failed, checks.len());
    }
    if failed > 0 {
        return Err(domain(anyhow!("{failed} symbolic check(s) failed")));
    }
    Ok(())
}

fn cmd_molecule_check(file: &Path, json: bool) -> CmdResult {
    let m = parse_unchecked(&read_text(file)?).map_err(|e| input(anyhow!("{}: {e}", file.display())))?;
    let diags = validate(&m);
    if json {
        print_json(&json!({
            "schema": SCHEMA,
            "valid": diags.is_empty(),
            "atoms": m.atoms.len(),
            "edges": m.edges.len(),
            "families": m.families().len(),
            "diagnostics": diags,
        }))?;
    } else if diags.is_empty() {
        println!(
            "ok: {} atoms, {} edges, {} families, {} component(s)",
            m.atoms.len(),
            m.edges.len(),
            m.families().len(),
            m.component_atoms().len()
        );
    } else {
        for d in &diags {
            println!("{d}");
        }
    }
    if !diags.is_empty() {
        return Err(domain(anyhow!("{}: {} invariant(s) violated", file.display(), diags.len())));
    }
    Ok(())
}

fn cmd_molecule_fmt(file: &Path) -> CmdResult {
    print!("{}", read_molecule(file)?.serialize());
    Ok(())
}

fn cmd_homology(file: &Path, json: bool) -> CmdResult {
    let m = read_molecule(file)?;
    let h = first_homology(&m).map_err(homology_failure)?;
    if json {
        print_json(&json!({"schema": SCHEMA, "rank": h.rank, "torsion": h.torsion}))
    } else {
        println!("H1 = {h}");
        Ok(())
    }
}

fn classification_json(c: &Classification) -> Value {
    let (class, components, h1, reason) = match &c.outcome {
        Outcome::Known(class) => {
            let comps: Vec<Value> = class
                .components
                .iter()
                .map(|comp| {
                    let summands: Vec<String> = comp.summands.iter().map(ToString::to_string).collect();
                    json!({"summands": summands, "name": comp.to_string()})
                })
                .collect();
            (json!(class.to_string()), json!(comps), Some(class.h1()), None)
        }
        Outcome::Unknown { h1, reason } => (Value::Null, json!([]), h1.clone(), Some(reason.clone())),
    };
    json!({
        "schema": SCHEMA,
        "class": class,
        "components": components,
        "h1": h1.map(|h| json!({"rank": h.rank, "torsion": h.torsion})),
        "unknown_reason": reason,
        "trace": c.trace.steps,
        "base": c.trace.base,
        "input_hash": c.trace.input,
        "final_hash": c.trace.final_hash,
    })
}

fn cmd_classify(file: &Path, trace: bool, json: bool) -> CmdResult {
    let m = read_molecule(file)?;
    let c = classify(&m);
    if json {
        return print_json(&classification_json(&c));
    }
    match &c.outcome {
        Outcome::Known(class) => println!("{class}"),
        Outcome::Unknown { h1, reason } => {
            let h1 = h1.as_ref().map_or("unavailable".to_string(), ToString::to_string);
            println!("unknown ({reason}); H1 = {h1}");
        }
    }
    if trace {
        for (i, s) in c.trace.steps.iter().enumerate() {
            println!("step {}: {} on piece {} edge {} [{}]", i + 1, s.op.name(), s.piece, s.edge, s.edge_label);
        }
        for b in &c.trace.base {
            println!("piece {}: base case {} ({})", b.piece, b.class, &b.hash[..12.min(b.hash.len())]);
        }
    }
    Ok(())
}

fn corpus_failure(e: CorpusError) -> Failure {
    if e.is_io_or_syntax() {
        input(e)
    } else {
        domain(e)
    }
}

fn cmd_propagate(dir: Option<PathBuf>, json: bool) -> CmdResult {
    let dir = dir.or_else(|| std::env::var_os(CORPUS_ENV).map(PathBuf::from));
    let corpus = match &dir {
        Some(d) => Corpus::load_dir(d).map_err(corpus_failure)?,
        None => Corpus::shipped(),
    };
    let p = corpus.propagate().map_err(domain)?;
    if json {
        return print_json(&json!({
            "schema": SCHEMA,
            "corpus": dir.as_ref().map_or("built-in".to_string(), |d| d.display().to_string()),
            "types": p.types,
            "unreached": p.unreached,
            "components": p.components,
        }));
    }
    let mut rows: Vec<(String, Vec<u32>)> = Vec::new();
    for (id, t) in &p.types {
        let name = t.class.to_string();
        match rows.iter_mut().find(|(c, _)| *c == name) {
            Some((_, ids)) => ids.push(*id),
            None => rows.push((name, vec![*id])),
        }
    }
    let width = rows.iter().map(|(c, _)| c.len()).max().unwrap_or(0);
    for (class, ids) in rows {
        let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
        println!("{class:<width$}  {}", ids.join(", "));
    }
    let unreached: Vec<String> = p.unreached.iter().map(u32::to_string).collect();
    println!("unreached: {}", if unreached.is_empty() { "none".into() } else { unreached.join(", ") });
    Ok(())
}

fn scan_failure(e: ScanError) -> Failure {
    match e {
        ScanError::InvalidArgument(_) => input(e),
        _ => domain(e),
    }
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| input(anyhow!("cannot write {}: {e}", path.display())))
}

fn cmd_scan(args: ScanArgs, seed: u64, json_stdout: bool) -> CmdResult {
    let mut p = OrbitParams::new(args.kappa, args.a, args.b, args.h.lo);
    p.c1 = args.c1;
    if !is_regular_orbit(&p) {
        return Err(domain(ScanError::Irregular { kappa: p.kappa, a: p.a, b: p.b }));
    }
    let grid = isoenergy::scanner::linear_grid(args.h.lo, args.h.hi, args.h.steps);
    let opts = ScanOptions {
        samples: args.samples,
        seed,
        tol: args.tol,
        svd_tol: args.svd_tol,
        check_doubling: args.check_doubling,
        critical_values: !args.no_critical,
    };
    let mut csv = args.csv.as_ref().map(|_| String::from("h,J1,J2,J3,x1,x2,x3\n"));
    let report = scan_h_with(&p, &grid, &opts, |cloud| {
        if let Some(out) = csv.as_mut() {
            for pt in &cloud.points {
                let _ = write!(out, "{:e}", cloud.params.h);
                for v in pt.j.iter().chain(&pt.x) {
                    let _ = write!(out, ",{v:.17e}");
                }
                out.push('\n');
            }
        }
    })
    .map_err(scan_failure)?;
    if let (Some(path), Some(text)) = (&args.csv, &csv) {
        write_file(path, text)?;
    }
    if let Some(path) = &args.json {
        write_file(path, &format!("{}\n", report.to_json()))?;
    }
    if json_stdout {
        println!("{}", report.to_json());
    } else {
        print_scan(&report);
    }
    Ok(())
}

fn print_scan(r: &ScanReport) {
    println!(
        "kappa={} a={} b={} c1={} samples={} seed={}",
        r.kappa, r.a, r.b, r.c1, r.options.samples, r.options.seed
    );
    println!("{:>12}  {:<16}  {:>7}  {:>10}  {:>10}  {:>10}  critical K", "h", "status", "points", "components", "radius", "residual");
    for e in &r.entries {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
        let crit: Vec<String> = e.critical_k.iter().map(|k| format!("{:.6}", k + 0.0)).collect();
        println!(
            "{:>12.6}  {:<16}  {:>7}  {:>10}  {:>10}  {:>10}  {}",
            e.h,
            format!("{:?}", e.status),
            e.points,
            e.components.map_or("-".to_string(), |c| c.to_string()),
            opt(e.radius),
            opt(e.max_residual),
            crit.join(" ")
        );
    }
    for &i in &r.count_changes {
        println!("component count changes between h={} and h={}", r.entries[i].h, r.entries[i + 1].h);
    }
    for d in &r.diagnostics {
        println!("note: {d}");
    }
}

fn run(cli: Cli) -> CmdResult {
    let json = |f: JsonFlag| cli.json || f.json;
    match cli.command {
        Command::Verify { mutate, out } => cmd_verify(mutate, json(out)),
        Command::Molecule { command } => match command {
            MoleculeCommand::Check { file, out } => cmd_molecule_check(&file, json(out)),
            MoleculeCommand::Fmt { file } => cmd_molecule_fmt(&file),
        },
        Command::Homology { file, out } => cmd_homology(&file, json(out)),
        Command::Classify { file, trace, out } => cmd_classify(&file, trace, json(out)),
        Command::Propagate { corpus, out } => cmd_propagate(corpus, json(out)),
        Command::Scan(args) => cmd_scan(args, cli.seed, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
