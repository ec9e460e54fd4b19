//! `scfred`: runs the scfred-core diagnostics and writes JSON/CSV reports.
//!
//! Output goes to `--out`, else `$SCFRED_OUT`, else `out_dir` from the
//! config. Every JSON report carries `config_sha256` and `seed`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use scfred_core::algebra::{
    dq_operator, from_morse, height_function_datum, morse_points, representation_complex, square_witness,
    simplicial_betti_f2, CountingFile, ManifoldDatum, Ring,
};
use scfred_core::config::RunConfig;
use scfred_core::degen::{morse_chain, validate_structure, DegenerationStructure};
use scfred_core::germ::{solve_germ, ContractionGerm};
use scfred_core::morse::{
    correct_pregluing, counting_function, preglue_broken, shifted_distance, solve_trajectory, CorrectionOptions,
    MorseProblem, ShootingOptions, SolveOptions,
};
use scfred_core::morse::BrokenTrajectory;
use scfred_core::scspace::{embedding_diagnostic, make_scale_space, DomainSpec, GridFunction};
use scfred_core::sftsym::{normalize, OrbitTable, Word};
use scfred_core::splicing::{Alignment, FieldPair, GluingParameter, GluingProfile, SplicingKernel, Variant};
use scfred_core::suite::run_suite;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "scfred", version, about = "Scale-smooth Fredholm desk experiments")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides $SCFRED_OUT and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compact-embedding diagnostic for the configured scale space.
    Space(SpaceArgs),
    /// Gluing, anti-gluing and the splicing projection on a sample pair.
    Glue(GlueArgs),
    /// Fixed points of a contraction germ at every level.
    Germ(GermArgs),
    /// Critical points, connecting orbits and the counting function.
    Morse(MorseArgs),
    /// Degeneration structures.
    #[command(subcommand)]
    Degen(DegenCommand),
    /// Normal form of a word in the symbol algebra.
    Sft(SftArgs),
    /// Convolution algebra and homology.
    #[command(subcommand)]
    Algebra(AlgebraCommand),
    /// The acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long, default_value_t = 0)]
    lower: usize,
    #[arg(long, default_value_t = 1)]
    higher: usize,
    #[arg(long, default_value_t = 20)]
    rank: usize,
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
}

#[derive(Args)]
struct GlueArgs {
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    /// Also write glue_diag.csv.
    #[arg(long)]
    diag: bool,
}

#[derive(Args)]
struct GermArgs {
    #[arg(long)]
    name: Option<String>,
    /// Parameter, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v: Option<Vec<f64>>,
}

#[derive(Args)]
struct MorseArgs {
    /// quadratic, cubic, double-well, chain or degenerate.
    #[arg(long)]
    problem: Option<String>,
}

#[derive(Subcommand)]
enum DegenCommand {
    /// Check the axioms of a structure file.
    Validate { file: PathBuf },
    /// Write the Morse chain structure on `points` critical points.
    Chain {
        #[arg(long)]
        points: usize,
    },
}

#[derive(Args)]
struct SftArgs {
    /// e.g. "p_g q_g" or "ℏ q_a p_b".
    word: String,
    /// Orbit table JSON `{"orbits": [..]}`.
    #[arg(long)]
    orbits: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AlgebraCommand {
    /// `D_Q` homology of a counting function on a structure.
    Homology { structure: PathBuf, counting: PathBuf },
    /// Built-in manifold data: sphere-4 or sphere-height.
    Datum {
        #[arg(default_value = "sphere-4")]
        name: String,
    },
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure with a kind for the error report.
struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Self { kind: "input", message: message.to_string(), code: 2 }
    }
    fn compute(message: impl ToString) -> Self {
        Self { kind: "computation", message: message.to_string(), code: 3 }
    }
}

type Run<T> = Result<T, Failure>;

struct Out {
    dir: PathBuf,
    config_sha256: String,
    seed: u64,
    command: String,
}

impl Out {
    fn write_json(&self, name: &str, mut body: Value) -> Run<()> {
        if let Value::Object(m) = &mut body {
            m.insert("command".into(), self.command.clone().into());
            m.insert("config_sha256".into(), self.config_sha256.clone().into());
            m.insert("seed".into(), self.seed.into());
        }
        let text = serde_json::to_string_pretty(&body).expect("json") + "\n";
        self.write(name, &text)
    }

    fn write(&self, name: &str, text: &str) -> Run<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Failure::input(format!("{}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }
}

fn read(path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Run<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => RunConfig::from_toml(&read(p)?).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Space(_) => "space",
        Command::Glue(_) => "glue",
        Command::Germ(_) => "germ",
        Command::Morse(_) => "morse",
        Command::Degen(DegenCommand::Validate { .. }) => "degen validate",
        Command::Degen(DegenCommand::Chain { .. }) => "degen chain",
        Command::Sft(_) => "sft",
        Command::Algebra(AlgebraCommand::Homology { .. }) => "algebra homology",
        Command::Algebra(AlgebraCommand::Datum { .. }) => "algebra datum",
        Command::Suite(_) => "suite",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let mut cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(f) => return report_failure(name, None, f),
    };
    if let Command::Suite(SuiteArgs { seed: Some(s) }) = cli.command {
        cfg.seed = s;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("SCFRED_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    let out = Out {
        dir,
        config_sha256: Sha256::digest(cfg.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
        seed: cfg.seed,
        command: name.into(),
    };
    let result = match &cli.command {
        Command::Space(a) => space(&cfg, &out, a),
        Command::Glue(a) => glue(&cfg, &out, a),
        Command::Germ(a) => germ(&cfg, &out, a),
        Command::Morse(a) => morse(&cfg, &out, a),
        Command::Degen(DegenCommand::Validate { file }) => degen_validate(&out, file),
        Command::Degen(DegenCommand::Chain { points }) => degen_chain(&out, *points),
        Command::Sft(a) => sft(&out, a),
        Command::Algebra(AlgebraCommand::Homology { structure, counting }) => algebra_homology(&out, structure, counting),
        Command::Algebra(AlgebraCommand::Datum { name }) => algebra_datum(&out, name),
        Command::Suite(_) => suite(&out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => report_failure(name, Some(&out), f),
    }
}

/// Prints a JSON error report on stderr and, when possible, writes error.json.
fn report_failure(command: &str, out: Option<&Out>, f: Failure) -> ExitCode {
    let body = json!({ "status": "error", "kind": f.kind, "error": f.message });
    match out {
        Some(o) => {
            eprintln!("{}", serde_json::to_string_pretty(&json!({"command": command, "kind": f.kind, "error": f.message})).unwrap());
            let _ = o.write_json("error.json", body);
        }
        None => {
            let mut b = body;
            b["command"] = command.into();
            eprintln!("{}", serde_json::to_string_pretty(&b).unwrap());
        }
    }
    ExitCode::from(f.code)
}

// commands ------------------------------------------------------------------

fn space(cfg: &RunConfig, out: &Out, a: &SpaceArgs) -> Run<bool> {
    let sp = make_scale_space(&cfg.grid.space_spec()).map_err(Failure::input)?;
    let rep = embedding_diagnostic(&sp, a.lower, a.higher, a.rank, a.threshold).map_err(Failure::compute)?;
    out.write("embedding.csv", &rep.to_csv())?;
    out.write_json(
        "space.json",
        json!({
            "nodes": sp.node_count(),
            "levels": sp.levels_available(),
            "weights": sp.weights(),
            "embedding": rep,
            "decay_ratio": rep.decay_ratio(),
        }),
    )?;
    println!(
        "embedding {}→{}: {} singular values, decay ratio {:.3e}, compactness consistent: {}",
        a.higher,
        a.lower,
        rep.singular_values.len(),
        rep.decay_ratio().unwrap_or(f64::NAN),
        rep.compactness_consistent
    );
    Ok(true)
}

fn glue(cfg: &RunConfig, out: &Out, a: &GlueArgs) -> Run<bool> {
    let name = a.profile.clone().unwrap_or_else(|| cfg.glue.profile.clone());
    let profile = GluingProfile::from_name(&name).ok_or_else(|| Failure::input(format!("unknown profile `{name}`")))?;
    let r = a.r.unwrap_or(cfg.glue.r);
    let (l, h) = (cfg.grid.half_length, cfg.grid.step);
    let sp = make_scale_space(&scfred_core::scspace::SpaceSpec {
        domain: DomainSpec::Line { half_length: l, step: h },
        ..cfg.grid.space_spec()
    })
    .map_err(Failure::input)?;
    let alignment = if cfg.glue.round_to_grid { Alignment::RoundToGrid } else { Alignment::Interpolate };
    let kernel = SplicingKernel::new(profile.clone(), sp.clone(), Variant::MorseLine).with_alignment(alignment);
    let length = kernel.profile.length(r).map_err(Failure::input)?;
    // the standard pair: 1 + tanh and 3 + tanh meet at the value 2
    let hf = GridFunction::from_fn(&sp, 0, |s, _, o| o.iter_mut().for_each(|x| *x = 1.0 + s.tanh()));
    let kf = GridFunction::from_fn(&sp, 0, |s, _, o| o.iter_mut().for_each(|x| *x = 3.0 + s.tanh()));
    let (g, ag) = kernel.total_glue(&hf, &kf, length).map_err(Failure::compute)?;
    let back = kernel.total_unglue(&g, &ag, length).map_err(Failure::compute)?;
    let pair = FieldPair::new(hf.clone(), kf.clone());
    let roundtrip = back.sub(&pair).map_err(Failure::compute)?.sup_norm();
    let param = GluingParameter::real(r);
    let p1 = kernel.splicing_projection(param, &pair).map_err(Failure::compute)?;
    let p2 = kernel.splicing_projection(param, &p1).map_err(Failure::compute)?;
    let idem = p2.sub(&p1).map_err(Failure::compute)?.sup_norm();
    let det = kernel.min_determinant(length).map_err(Failure::compute)?;
    let mode = kernel.shift_mode(length).map_err(Failure::compute)?;
    if a.diag {
        out.write("glue_diag.csv", &kernel.diagnostic_csv(&hf, &kf, length).map_err(Failure::compute)?)?;
    }
    let tol = &cfg.tolerances;
    let passed = roundtrip <= tol.roundtrip && idem <= tol.idempotence && det >= 0.5;
    out.write_json(
        "glue.json",
        json!({
            "profile": profile.name(),
            "r": r,
            "length": length,
            "shift": mode,
            "roundtrip_error": roundtrip,
            "idempotence_error": idem,
            "min_determinant": det,
            "passed": passed,
        }),
    )?;
    println!(
        "{} r={r}: R={length:.6}, round trip {roundtrip:.2e}, ‖π²−π‖ {idem:.2e}, min det {det:.4}",
        profile.name()
    );
    Ok(passed)
}

fn germ(cfg: &RunConfig, out: &Out, a: &GermArgs) -> Run<bool> {
    let g = &cfg.germ;
    let name = a.name.clone().unwrap_or_else(|| g.name.clone());
    let v = a.v.clone().unwrap_or_else(|| g.parameter.clone());
    let germ = ContractionGerm::builtin(&name, v.len().max(1), g.levels)
        .ok_or_else(|| Failure::input(format!("unknown germ `{name}`")))?;
    let mut levels = vec![];
    let mut csv = String::new();
    for level in 0..germ.levels() {
        let sol = solve_germ(&germ, &v, level, cfg.tolerances.germ, g.max_iter).map_err(Failure::compute)?;
        let log = sol.log_csv();
        if level == 0 {
            csv.push_str(&log);
        } else {
            csv.extend(log.lines().skip(1).map(|l| format!("{l}\n")));
        }
        println!("level {level}: {} iterations, observed rate {:.4}", sol.log.len(), sol.observed_rate);
        levels.push(json!({
            "level": level,
            "value": sol.value,
            "iterations": sol.log.len(),
            "observed_rate": sol.observed_rate,
            "contraction_bound": germ.thetas[level],
            "roundoff_limited": sol.roundoff_limited,
        }));
    }
    out.write("germ_log.csv", &csv)?;
    out.write_json("germ.json", json!({ "germ": name, "parameter": v, "levels": levels }))?;
    Ok(true)
}

fn morse(cfg: &RunConfig, out: &Out, a: &MorseArgs) -> Run<bool> {
    let name = a.problem.clone().unwrap_or_else(|| cfg.morse.problem.clone());
    let problem = MorseProblem::builtin(&name).map_err(Failure::input)?;
    let data = counting_function(&problem, &ShootingOptions::default()).map_err(Failure::compute)?;
    for e in &data.enumerations {
        for (i, t) in e.trajectories.iter().enumerate() {
            out.write(&format!("orbit_{}_{}_{i}.csv", e.a, e.b), &t.to_csv())?;
        }
    }
    let enumerations: Vec<Value> = data
        .enumerations
        .iter()
        .map(|e| json!({"a": e.a, "b": e.b, "count": e.count, "parity": e.parity, "reliable": e.reliable, "warnings": e.warnings}))
        .collect();
    let q = from_morse(&problem, &data).map_err(Failure::compute)?;
    let square_zero = square_witness(&q).map_err(Failure::compute)?.is_none();
    let homology = if square_zero {
        let c = representation_complex(&q, &morse_points(&problem)).map_err(Failure::compute)?;
        Some(c.homology().map_err(Failure::compute)?)
    } else {
        None
    };
    let pregluing = if name == "chain" { Some(chain_pregluing(&problem, &cfg.morse.sweep)?) } else { None };
    out.write_json(
        "morse.json",
        json!({
            "problem": name,
            "critical_points": problem.critical_points,
            "counting": data.to_json(),
            "enumerations": enumerations,
            "warnings": data.warnings,
            "q_squared_zero": square_zero,
            "homology": homology,
            "pregluing": pregluing,
        }),
    )?;
    println!("{name}: {} critical points, Q = {}", problem.critical_points.len(), data.to_json());
    if let Some(h) = &homology {
        println!("betti {:?}", h.betti);
    }
    Ok(square_zero)
}

fn chain_pregluing(p: &MorseProblem, sweep: &[f64]) -> Run<Value> {
    let leg = |a: &str, b: &str| -> Run<_> {
        let o = SolveOptions::for_pair(p, a, b).map_err(Failure::compute)?;
        solve_trajectory(p, a, b, None, &o).map_err(Failure::compute)
    };
    let x = BrokenTrajectory::new(vec![leg("c0", "c1")?, leg("c1", "c3")?]).map_err(Failure::compute)?;
    let mut rows = vec![];
    for &r in sweep {
        let g = preglue_broken(p, &x, r, &GluingProfile::Exponential).map_err(Failure::compute)?;
        let c = correct_pregluing(p, &g, &CorrectionOptions::default()).map_err(Failure::compute)?;
        rows.push(json!({
            "r": r,
            "gluing_length": g.gluing_length,
            "preglued_residual": g.residual,
            "corrected_residual": c.trajectory.residual,
            "shifted_distance": shifted_distance(&c, &x),
        }));
    }
    Ok(json!({"broken": ["c0", "c1", "c3"], "sweep": rows}))
}

fn degen_validate(out: &Out, file: &Path) -> Run<bool> {
    let s = DegenerationStructure::from_json(&read(file)?).map_err(Failure::input)?;
    let rep = validate_structure(&s);
    out.write_json("degen_validate.json", json!({"file": file.display().to_string(), "report": rep.to_json()}))?;
    println!("{}: {}", file.display(), if rep.passed() { "all axioms pass" } else { "axioms violated" });
    Ok(rep.passed())
}

fn degen_chain(out: &Out, points: usize) -> Run<bool> {
    if points < 2 {
        return Err(Failure::input("--points must be at least 2"));
    }
    let s = morse_chain(points);
    let text = serde_json::to_string_pretty(&s.to_json()).expect("json") + "\n";
    out.write(&format!("morse{points}.json"), &text)?;
    let rep = validate_structure(&s);
    out.write_json("degen_chain.json", json!({"points": points, "labels": s.labels.len(), "report": rep.to_json()}))?;
    print!("{text}");
    Ok(rep.passed())
}

fn sft(out: &Out, a: &SftArgs) -> Run<bool> {
    let word = Word::parse(&a.word).map_err(Failure::input)?;
    let table = match &a.orbits {
        Some(p) => OrbitTable::from_json(&read(p)?).map_err(Failure::input)?,
        None => default_table(&word)?,
    };
    let nf = normalize(&table, &word).map_err(Failure::input)?;
    out.write_json(
        "sft.json",
        json!({"word": a.word, "orbits": table.to_json(), "normal_form": nf.to_json(), "display": nf.to_string()}),
    )?;
    println!("{nf}");
    Ok(true)
}

/// Each orbit named in the word, simply covered and even.
fn default_table(w: &Word) -> Run<OrbitTable> {
    let names: std::collections::BTreeSet<&str> = w.letters.iter().map(|l| l.orbit.as_str()).collect();
    OrbitTable::new(names.into_iter().map(|n| scfred_core::sftsym::Orbit::new(n, 1, scfred_core::sftsym::Parity::Even)).collect())
        .map_err(Failure::input)
}

fn algebra_homology(out: &Out, structure: &Path, counting: &Path) -> Run<bool> {
    let s = Arc::new(DegenerationStructure::from_json(&read(structure)?).map_err(Failure::input)?);
    let file = CountingFile::from_json(&read(counting)?).map_err(Failure::input)?;
    let q = file.function(s).map_err(Failure::input)?;
    let witness = square_witness(&q).map_err(Failure::compute)?;
    let mut body = json!({"q": q.to_json(), "q_squared_zero": witness.is_none(), "witness": witness});
    if witness.is_none() {
        let d = dq_operator(&q).map_err(Failure::compute)?;
        let h = d.complex().map_err(Failure::compute)?.homology().map_err(Failure::compute)?;
        out.write("dq_homology.csv", &h.to_csv())?;
        body["dq_squares_to_zero"] = d.squares_to_zero(q.ring).into();
        body["dq_homology"] = serde_json::to_value(&h).expect("json");
        println!("D_Q homology by parity: {:?}", h.betti);
        if let Some(points) = &file.points {
            let c = representation_complex(&q, points).map_err(Failure::compute)?;
            let hr = c.homology().map_err(Failure::compute)?;
            out.write("homology.csv", &hr.to_csv())?;
            println!("representation homology: {:?}", hr.betti);
            body["homology"] = serde_json::to_value(&hr).expect("json");
        }
    } else {
        println!("Q∗Q ≠ 0");
    }
    out.write_json("algebra.json", body)?;
    Ok(witness.is_none())
}

fn algebra_datum(out: &Out, name: &str) -> Run<bool> {
    let body = match name {
        "sphere-4" | "sphere-height" => {
            let d = if name == "sphere-4" { ManifoldDatum::sphere_four_points() } else { ManifoldDatum::sphere_height() };
            let q = d.counting_function(Ring::Z2).map_err(Failure::compute)?;
            let h = representation_complex(&q, &d.index_map()).map_err(Failure::compute)?.homology().map_err(Failure::compute)?;
            // boundary of the 3-simplex as the reference triangulation
            let sphere = simplicial_betti_f2(&[vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]]);
            let betti = h.betti_vec(2);
            out.write("homology.csv", &h.to_csv())?;
            println!("{name}: betti {betti:?}, simplicial sphere {sphere:?}");
            json!({"datum": d, "q": q.to_json(), "betti": betti, "simplicial_sphere": sphere, "agrees": betti == sphere})
        }
        "height" => {
            let q = height_function_datum();
            println!("height: Q = 0 on S = {{*}}");
            json!({"datum": "height", "q": q.to_json(), "q_is_zero": q.is_zero()})
        }
        other => return Err(Failure::input(format!("unknown datum `{other}` (sphere-4, sphere-height, height)"))),
    };
    out.write_json("datum.json", body)?;
    Ok(true)
}

fn suite(out: &Out) -> Run<bool> {
    let rep = run_suite(out.seed);
    for c in &rep.criteria {
        println!("{}", c.line());
    }
    let mut csv = String::from("id,name,passed\n");
    for c in &rep.criteria {
        csv.push_str(&format!("{},{},{}\n", c.id, c.name, c.passed));
    }
    out.write("suite.csv", &csv)?;
    let mut body = rep.to_json();
    body["summary"] = Value::Object(
        rep.criteria.iter().map(|c| (format!("{:02}", c.id), Value::from(c.passed))).collect::<serde_json::Map<_, _>>(),
    );
    out.write_json("suite.json", body)?;
    Ok(rep.passed)
}
