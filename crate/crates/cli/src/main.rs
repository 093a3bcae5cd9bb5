use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gkcert_core::cases::{
    case_names, default_fixture_dir, fpf_report, load_case, render_text, run_case, verify_report_str, LoadedCase,
};
use gkcert_core::chartab::{load_slice_file, OrderList};
use gkcert_core::feasibility::propagate::rows_match_system;
use gkcert_core::feasibility::{
    nonneg_integer_feasible, nonneg_rational_feasible, propagate, replay, verify_verdict, FeasVerdict, IntVerdict,
    Outcome, ParamSystem, Propagation,
};
use gkcert_core::primegraph::{build_graph, PrimeGraph};
use gkcert_core::rat::{fmt_rat, parse_rat, Rat};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gkcert", version, about = "Exact restriction certificates for modular characters")]
struct Cli {
    /// Fixture directory (default: $GKCERT_FIXTURES, then the bundled fixtures).
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct Format {
    #[arg(long, conflicts_with = "text")]
    json: bool,
    #[arg(long)]
    text: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Prime graph of an order list.
    Graph {
        orders: String,
        #[arg(long)]
        dot: bool,
        /// Expected graph file; exit nonzero on mismatch.
        #[arg(long)]
        expect: Option<String>,
        #[command(flatten)]
        format: Format,
    },
    /// Characters of a slice acting fixed-point freely on elements of an order.
    Fpf {
        slice: String,
        order: u64,
        #[command(flatten)]
        format: Format,
    },
    /// Run the case containing a stage and print that stage's systems.
    Build {
        /// Stage file (`stages/b_l5.json`), its stem, or `case:stage`.
        stage: String,
    },
    /// Decide or verify a system file.
    Solve {
        system: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Certificate file to write, or to check with `--mode verify`.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        bound_row: usize,
        /// Parameter values, `name=value`.
        #[arg(long = "at", value_parser = parse_assignment)]
        at: Vec<(String, Rat)>,
        /// Only the zero solution is excluded.
        #[arg(long)]
        nontrivial: bool,
    },
    Case {
        #[command(subcommand)]
        cmd: CaseCmd,
    },
}

#[derive(Subcommand)]
enum CaseCmd {
    List,
    Run {
        name: String,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        format: Format,
    },
    Verify {
        report: PathBuf,
        #[arg(long)]
        spec: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Rational,
    Integer,
    Propagate,
    Verify,
}

fn parse_assignment(s: &str) -> Result<(String, Rat), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s}"))?;
    Ok((k.trim().to_string(), parse_rat(v.trim()).map_err(|e| e.to_string())?))
}

/// A path as given if it exists, else relative to the fixture directory.
fn locate(root: &Path, p: &str) -> PathBuf {
    let direct = PathBuf::from(p);
    if direct.exists() {
        direct
    } else {
        root.join(p)
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn graph_json(g: &PrimeGraph) -> Value {
    json!({
        "vertices": g.vertices,
        "edges": g.edges,
        "components": g.components(),
        "isolated": g.isolated(),
    })
}

fn cmd_graph(root: &Path, orders: &str, dot: bool, expect: Option<&str>, format: Format) -> Result<bool> {
    let list = OrderList::load(&locate(root, orders))?;
    let g = build_graph(&list)?;
    if dot {
        print!("{}", g.to_dot(&list.group));
    } else if format.json {
        print_json(&graph_json(&g));
    } else {
        let vs: Vec<String> = g.vertices.iter().map(u64::to_string).collect();
        let es: Vec<String> = g.edges.iter().map(|(p, q)| format!("{p}-{q}")).collect();
        println!("{}", list.group);
        println!("vertices: {}", vs.join(" "));
        println!("edges: {}", es.join(" "));
        for c in g.components() {
            println!("component: {:?}", c);
        }
    }
    let Some(e) = expect else { return Ok(true) };
    let want: PrimeGraph = serde_json::from_value(read_json(&locate(root, e))?).context("expected graph")?;
    if want != g {
        eprintln!("graph differs from {e}");
        return Ok(false);
    }
    Ok(true)
}

fn cmd_fpf(root: &Path, slice: &str, order: u64, format: Format) -> Result<bool> {
    let s = load_slice_file(&locate(root, slice))?;
    let rep = fpf_report(&s, order)?;
    if format.json {
        print_json(&serde_json::to_value(&rep)?);
        return Ok(true);
    }
    println!("{}: classes of order {}: {}", s.group, order, rep.classes.join(" "));
    for (id, counts) in &rep.counts {
        let deg = s.character(*id)?.degree;
        let mark = if rep.survivors.contains(id) { "fixed-point free" } else { "" };
        println!("  {id:>3}  degree {deg:>8}  fixed dims {}  {mark}", counts.join(" "));
    }
    let degs: Vec<String> = rep.survivors.iter().map(|id| s.character(*id).map(|c| c.degree.to_string())).collect::<Result<_, _>>()?;
    println!("survivors: {:?} (degrees {})", rep.survivors, degs.join(", "));
    Ok(true)
}

fn find_stage(root: &Path, key: &str) -> Result<(LoadedCase, usize)> {
    let (case_key, stage_key) = match key.split_once(':') {
        Some((c, s)) => (Some(c), s),
        None => (None, key),
    };
    let mut hits = Vec::new();
    for name in case_names(root)? {
        if case_key.is_some_and(|c| !(name == c || name.starts_with(&format!("{c}_")))) {
            continue;
        }
        let case = load_case(root, &name)?;
        for (i, file) in case.spec.stages.iter().enumerate() {
            let stem = Path::new(file).file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let by_name = case_key.is_some() && case.stages[i].name == stage_key;
            if file == stage_key || stem == stage_key || by_name {
                hits.push((case.clone(), i));
            }
        }
    }
    match hits.len() {
        1 => Ok(hits.pop().expect("one hit")),
        0 => bail!("no stage matches {key}"),
        _ => bail!("stage {key} is ambiguous"),
    }
}

fn cmd_build(root: &Path, key: &str) -> Result<bool> {
    let (case, i) = find_stage(root, key)?;
    let r = run_case(&case)?;
    let name = &case.stages[i].name;
    let st = r.stage(name).ok_or_else(|| anyhow!("case {} stopped before stage {name}", case.spec.name))?;
    print_json(&json!({
        "case": r.case,
        "stage": st.name,
        "vars": st.vars,
        "built_system": st.built_system,
        "rational_system": st.rational_system,
        "rref": st.rref,
        "error": st.error,
    }));
    Ok(st.pass)
}

fn cmd_solve(
    path: &Path,
    mode: Mode,
    cert: Option<&Path>,
    bound_row: usize,
    at: BTreeMap<String, Rat>,
    nontrivial: bool,
) -> Result<bool> {
    let sys = ParamSystem::from_json(&read_json(path)?)?;
    let sys = if nontrivial { sys.with_nontrivial(true) } else { sys };
    let at_json: BTreeMap<&String, String> = at.iter().map(|(k, v)| (k, fmt_rat(v))).collect();
    let mut out = json!({ "system_hash": sys.hash(), "at": at_json });
    let feasible = match mode {
        Mode::Rational => {
            let v = nonneg_rational_feasible(&sys, &at)?;
            out["verdict"] = serde_json::to_value(&v)?;
            Some(v.is_feasible())
        }
        Mode::Integer => {
            let v = nonneg_integer_feasible(&sys, &at, bound_row)?;
            out["integer"] = serde_json::to_value(&v)?;
            Some(v.is_feasible())
        }
        Mode::Propagate => {
            let p = propagate(&sys);
            for s in &p.chain.steps {
                eprintln!("{}", s.text);
            }
            out["chain"] = serde_json::to_value(&p)?;
            (p.outcome == Outcome::Contradiction).then_some(false)
        }
        Mode::Verify => {
            let path = cert.ok_or_else(|| anyhow!("--mode verify needs --certificate"))?;
            let ok = verify_certificate(&sys, &read_json(path)?)?;
            println!("{}", if ok { "certificate verified" } else { "certificate REJECTED" });
            return Ok(ok);
        }
    };
    match feasible {
        Some(true) => println!("feasible"),
        Some(false) => println!("infeasible"),
        None => println!("undecided"),
    }
    match cert {
        Some(p) => std::fs::write(p, serde_json::to_string_pretty(&out)? + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => print_json(&out),
    }
    Ok(true)
}

fn verify_certificate(sys: &ParamSystem, cert: &Value) -> Result<bool> {
    if cert.get("system_hash").and_then(Value::as_str) != Some(sys.hash().as_str()) {
        eprintln!("certificate is for a different system");
        return Ok(false);
    }
    let at: BTreeMap<String, Rat> = match cert.get("at").and_then(Value::as_object) {
        None => BTreeMap::new(),
        Some(m) => m
            .iter()
            .map(|(k, v)| Ok((k.clone(), parse_rat(v.as_str().unwrap_or_default()).map_err(|e| anyhow!("{k}: {e}"))?)))
            .collect::<Result<_>>()?,
    };
    let mut checked = false;
    if let Some(v) = cert.get("verdict") {
        let v: FeasVerdict = serde_json::from_value(v.clone())?;
        if matches!(v, FeasVerdict::InfeasibleNontrivial { .. }) && !sys.nontrivial {
            eprintln!("nontrivial certificate for a system that allows zero");
            return Ok(false);
        }
        if !verify_verdict(&sys.a, &sys.instantiate(&at)?, &v)? {
            return Ok(false);
        }
        checked = true;
    }
    if let Some(v) = cert.get("integer") {
        let v: IntVerdict = serde_json::from_value(v.clone())?;
        let again = nonneg_integer_feasible(sys, &at, match &v {
            IntVerdict::Infeasible { bound_row, .. } => *bound_row,
            IntVerdict::Feasible { .. } => 0,
        });
        let ok = match (&v, again) {
            (IntVerdict::Feasible { witness }, _) => {
                gkcert_core::feasibility::check_witness(&sys.a, &sys.instantiate(&at)?, witness)
                    && witness.iter().all(gkcert_core::rat::is_integral)
            }
            (IntVerdict::Infeasible { .. }, Ok(w)) => !w.is_feasible(),
            (IntVerdict::Infeasible { .. }, Err(_)) => false,
        };
        if !ok {
            return Ok(false);
        }
        checked = true;
    }
    if let Some(p) = cert.get("chain") {
        let p: Propagation = serde_json::from_value(p.clone())?;
        let Ok(rp) = replay(&p.chain) else { return Ok(false) };
        if !rows_match_system(&p.chain, sys) || rp.outcome != p.outcome {
            return Ok(false);
        }
        checked = true;
    }
    if !checked {
        eprintln!("certificate contains nothing to check");
    }
    Ok(checked)
}

fn cmd_case(root: &Path, cmd: CaseCmd) -> Result<bool> {
    match cmd {
        CaseCmd::List => {
            for n in case_names(root)? {
                let c = load_case(root, &n)?;
                println!("{n}  {} p={}  expected {}", c.spec.group, c.spec.characteristic, c.spec.expected_verdict.as_str());
            }
            Ok(true)
        }
        CaseCmd::Run { name, out, format } => {
            let case = load_case(root, &name)?;
            let r = run_case(&case)?;
            let text = r.to_json_string();
            if let Some(p) = &out {
                std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            }
            if format.json {
                print!("{text}");
            } else if format.text || out.is_none() {
                print!("{}", render_text(&r));
            } else {
                println!("{}: {}", r.case, r.verdict);
            }
            Ok(r.pass)
        }
        CaseCmd::Verify { report, spec } => {
            let case = load_case(root, &spec)?;
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let v = verify_report_str(&text, &case)?;
            for f in &v.failures {
                println!("FAILED {f}");
            }
            println!("{} checks, {} failed", v.checks, v.failures.len());
            Ok(v.ok())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = cli.fixtures.clone().unwrap_or_else(default_fixture_dir);
    let res = match cli.cmd {
        Cmd::Graph { orders, dot, expect, format } => cmd_graph(&root, &orders, dot, expect.as_deref(), format),
        Cmd::Fpf { slice, order, format } => cmd_fpf(&root, &slice, order, format),
        Cmd::Build { stage } => cmd_build(&root, &stage),
        Cmd::Solve { system, mode, certificate, bound_row, at, nontrivial } => {
            cmd_solve(&locate(&root, &system), mode, certificate.as_deref(), bound_row, at.into_iter().collect(), nontrivial)
        }
        Cmd::Case { cmd } => cmd_case(&root, cmd),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
