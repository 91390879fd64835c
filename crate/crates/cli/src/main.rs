//! `tck`: analyse coordinated-response scenarios from the command line.
//!
//! Exit status: 0 success, 1 I/O error, 2 parse error, 3 invariant
//! violation, 4 size guard, 5 unsolvable, 6 verification failure,
//! 7 internal inconsistency.

mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use timely_ck::fixed_point::{apply_f, gfp_bruteforce_oracle, timely_ck_traced, ORACLE_GUARD_BITS};
use timely_ck::nested::{verify_nested_equivalence, PathMode, EXPLICIT_PATH_CAP};
use timely_ck::props::{run_suite, DEFAULT_CASES};
use timely_ck::scenario::{
    enumerate_solutions, solvability, synthesize_optimal, verify_optimal, verify_solution, GenerateOptions,
    NormalizationDoc, ProtocolResult, ResultDoc, ScenarioSpec, TcrInstance, DEFAULT_SOLUTION_GUARD,
};
use timely_ck::{Delta, Event, SyncMode, UniverseDoc};

use table::{opt, Table};

#[derive(Parser)]
#[command(name = "tck", version, about = "Timely common knowledge and coordinated response")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Largest |Ω|·|I| the brute-force fixed-point oracle will enumerate.
    #[arg(long, global = true, default_value_t = ORACLE_GUARD_BITS)]
    oracle_guard: usize,

    /// Seed for randomized property runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Leave out the run in which the trigger never fires.
    #[arg(long, global = true)]
    no_never_run: bool,

    /// Local states do not include the clock.
    #[arg(long, global = true)]
    async_mode: bool,

    /// Also evaluate nested formulas path by path.
    #[arg(long, global = true)]
    explicit_paths: bool,

    /// Output format; `report` defaults to a table, everything else to JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write output here instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Psi {
    /// The trigger's first occurrence.
    Trigger,
    /// The trigger has occurred, now or earlier.
    Occurred,
    /// The trigger occurs at some time in the run.
    Eventually,
    /// Every point.
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Unfold a scenario into its system of runs.
    Generate { scenario: PathBuf },
    /// Timely common knowledge of an event under the scenario's bounds.
    Gfp {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "occurred")]
        psi: Psi,
    },
    /// Decide solvability, synthesize the optimal responses and check them.
    Solve { scenario: PathBuf },
    /// Check a result file against its scenario.
    Verify {
        scenario: PathBuf,
        #[arg(long)]
        result: PathBuf,
        /// Also compare against every solution of the scenario.
        #[arg(long)]
        optimal: bool,
    },
    /// Brute-force cross-checks on a scenario.
    Oracle { scenario: PathBuf },
    /// Randomized property suite.
    Props {
        #[arg(long, default_value_t = DEFAULT_CASES)]
        cases: usize,
    },
    /// Response times per run, from a result file or freshly solved.
    Report {
        scenario: PathBuf,
        #[arg(long)]
        result: Option<PathBuf>,
    },
}

enum Failure {
    Io(PathBuf, std::io::Error),
    Parse(String),
    Engine(timely_ck::Error),
    /// Output was produced, but the verdict is negative.
    Verdict(u8, String),
}

impl Failure {
    fn code(&self) -> u8 {
        use timely_ck::Error as E;
        match self {
            Failure::Io(..) => 1,
            Failure::Parse(_) => 2,
            Failure::Engine(e) => match e {
                E::InvalidScenario(_) | E::UnknownAgent(_) => 2,
                E::SizeGuard { .. } => 4,
                E::Unsolvable => 5,
                E::NotASolution(_) => 6,
                E::Inconsistency(_) | E::NotStabilized { .. } => 7,
                _ => 3,
            },
            Failure::Verdict(code, _) => *code,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(p, e) => format!("{}: {e}", p.display()),
            Failure::Parse(m) | Failure::Verdict(_, m) => m.clone(),
            Failure::Engine(e) => e.to_string(),
        }
    }
}

impl From<timely_ck::Error> for Failure {
    fn from(e: timely_ck::Error) -> Self {
        Failure::Engine(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

impl Cli {
    fn options(&self) -> GenerateOptions {
        GenerateOptions {
            include_never_run: self.no_never_run.then_some(false),
            sync: if self.async_mode {
                SyncMode::Asynchronous
            } else {
                SyncMode::Synchronous
            },
            ..GenerateOptions::default()
        }
    }

    fn instance(&self, path: &Path) -> Outcome<TcrInstance> {
        let spec = ScenarioSpec::from_json(&read(path)?)?;
        Ok(TcrInstance::generate(&spec, &self.options())?)
    }

    fn path_mode(&self) -> PathMode {
        if self.explicit_paths {
            PathMode::Explicit {
                cap: EXPLICIT_PATH_CAP,
            }
        } else {
            PathMode::Memoized
        }
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Outcome {
        match &self.output {
            Some(p) => fs::write(p, text).map_err(|e| Failure::Io(p.clone(), e)),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Outcome {
        let mut s = serde_json::to_string_pretty(value).expect("output serializes");
        s.push('\n');
        self.emit(&s)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Generate { scenario } => generate(cli, scenario),
        Command::Gfp { scenario, psi } => gfp(cli, scenario, *psi),
        Command::Solve { scenario } => solve(cli, scenario),
        Command::Verify {
            scenario,
            result,
            optimal,
        } => verify(cli, scenario, result, *optimal),
        Command::Oracle { scenario } => oracle(cli, scenario),
        Command::Props { cases } => props(cli, *cases),
        Command::Report { scenario, result } => report(cli, scenario, result.as_deref()),
    }
}

#[derive(Serialize)]
struct RunDoc {
    name: String,
    trigger_time: Option<usize>,
    obs_times: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct GenerateDoc {
    scenario: String,
    horizon: usize,
    horizon_auto: bool,
    sync_mode: SyncMode,
    normalizations: Vec<NormalizationDoc>,
    runs: Vec<RunDoc>,
    universe: UniverseDoc,
}

fn normalizations(inst: &TcrInstance) -> Vec<NormalizationDoc> {
    let names = inst.universe.agent_names();
    inst.normalizations
        .iter()
        .map(|n| NormalizationDoc {
            from: names[n.from.0].clone(),
            to: names[n.to.0].clone(),
            original: n.original,
            normalized: n.normalized,
        })
        .collect()
}

fn run_docs(inst: &TcrInstance) -> Vec<RunDoc> {
    let names = inst.universe.agent_names();
    inst.runs
        .iter()
        .map(|r| RunDoc {
            name: r.name.clone(),
            trigger_time: r.trigger_time,
            obs_times: names.iter().cloned().zip(r.obs_times.iter().copied()).collect(),
        })
        .collect()
}

fn generate(cli: &Cli, path: &Path) -> Outcome {
    let inst = cli.instance(path)?;
    let names = inst.universe.agent_names().to_vec();
    if cli.format(Format::Json) == Format::Table {
        let mut t = Table::new(["run", "trigger"].into_iter().map(String::from).chain(names.iter().map(|a| format!("obs {a}"))));
        for r in &inst.runs {
            let mut row = vec![r.name.clone(), opt(r.trigger_time)];
            row.extend((0..names.len()).map(|k| opt(r.obs_times.get(k).copied())));
            t.row(row);
        }
        return cli.emit(&t.render());
    }
    cli.emit_json(&GenerateDoc {
        scenario: inst.name.clone(),
        horizon: inst.horizon(),
        horizon_auto: inst.horizon_auto,
        sync_mode: inst.universe.sync_mode(),
        normalizations: normalizations(&inst),
        runs: run_docs(&inst),
        universe: inst.universe.to_doc(),
    })
}

fn psi_event(inst: &TcrInstance, psi: Psi) -> Event {
    match psi {
        Psi::Trigger => inst.trigger.clone(),
        Psi::Occurred => inst.occurred(),
        Psi::Eventually => inst.trigger.eventually(),
        Psi::Full => inst.universe.full(),
    }
}

fn psi_name(psi: Psi) -> &'static str {
    match psi {
        Psi::Trigger => "trigger",
        Psi::Occurred => "occurred",
        Psi::Eventually => "eventually",
        Psi::Full => "full",
    }
}

fn spec_map(inst: &TcrInstance) -> BTreeMap<String, Delta> {
    let u = &inst.universe;
    inst.spec
        .pairs()
        .map(|(i, j, d)| (format!("{}->{}", u.agent_name(i), u.agent_name(j)), d))
        .collect()
}

#[derive(Serialize)]
struct FirstTimes {
    run: String,
    first: BTreeMap<String, Option<usize>>,
}

#[derive(Serialize)]
struct GfpDoc {
    scenario: String,
    psi: &'static str,
    horizon: usize,
    delta: BTreeMap<String, Delta>,
    normalizations: Vec<NormalizationDoc>,
    iterations: usize,
    trace: Vec<Vec<usize>>,
    /// Whether the trigger is eventually followed by each coordinate.
    eventually_attained: BTreeMap<String, bool>,
    first_times: Vec<FirstTimes>,
    coordinates: BTreeMap<String, Vec<[usize; 2]>>,
}

fn gfp(cli: &Cli, path: &Path, psi: Psi) -> Outcome {
    let inst = cli.instance(path)?;
    let u = &inst.universe;
    let event = psi_event(&inst, psi);
    let out = timely_ck_traced(u, &event, &inst.spec)?;
    let names = u.agent_names();
    let first_times: Vec<FirstTimes> = inst
        .runs
        .iter()
        .enumerate()
        .map(|(r, info)| FirstTimes {
            run: info.name.clone(),
            first: names
                .iter()
                .cloned()
                .zip(out.value.coords().iter().map(|c| c.first_time(r)))
                .collect(),
        })
        .collect();
    if cli.format(Format::Json) == Format::Table {
        let mut t = Table::new(std::iter::once("run".to_string()).chain(names.iter().cloned()));
        for f in &first_times {
            t.row(std::iter::once(f.run.clone()).chain(f.first.values().map(|v| opt(*v))));
        }
        let mut text = format!(
            "C^δ({}) after {} iterations; first time each coordinate holds:\n",
            psi_name(psi),
            out.iterations
        );
        text.push_str(&t.render());
        return cli.emit(&text);
    }
    cli.emit_json(&GfpDoc {
        scenario: inst.name.clone(),
        psi: psi_name(psi),
        horizon: inst.horizon(),
        delta: spec_map(&inst),
        normalizations: normalizations(&inst),
        iterations: out.iterations,
        trace: out.trace.clone(),
        eventually_attained: out
            .value
            .iter()
            .map(|(a, c)| (u.agent_name(a).to_string(), inst.trigger.is_subset(&c.eventually())))
            .collect(),
        first_times,
        coordinates: out.value.to_map(u),
    })
}

fn response_table(doc: &ResultDoc) -> String {
    let label = |a: &String| match doc.actions.get(a) {
        Some(act) => format!("{a} ({act})"),
        None => a.clone(),
    };
    let mut t = Table::new(
        ["run", "trigger"]
            .into_iter()
            .map(String::from)
            .chain(doc.agents.iter().map(label)),
    );
    for r in &doc.runs {
        let mut row = vec![r.run.clone(), opt(r.trigger_time)];
        row.extend(doc.agents.iter().map(|a| opt(r.responses.get(a).copied().flatten())));
        t.row(row);
    }
    let mut text = format!("{} (horizon {})\n", doc.scenario, doc.horizon);
    text.push_str(&t.render());
    text
}

fn solve(cli: &Cli, path: &Path) -> Outcome {
    let inst = cli.instance(path)?;
    let s = solvability(&inst)?;
    if !s.solvable {
        let doc = json!({ "scenario": inst.name, "solvable": false });
        if cli.format(Format::Json) == Format::Json {
            cli.emit_json(&doc)?;
        } else {
            cli.emit(&format!("{}: unsolvable\n", inst.name))?;
        }
        return Err(Failure::Engine(timely_ck::Error::Unsolvable));
    }
    let result = synthesize_optimal(&inst)?;
    let checks = verify_solution(&inst, &result)?;
    let passed = checks.passed();
    let verdict = json!({ "solvable": true, "checks": checks });
    let doc = result.to_doc(&inst, Some(verdict));
    match cli.format(Format::Json) {
        Format::Json => cli.emit_json(&doc)?,
        Format::Table => cli.emit(&response_table(&doc))?,
    }
    if !passed {
        return Err(Failure::Verdict(6, "synthesized result fails verification".into()));
    }
    Ok(())
}

fn load_result(inst: &TcrInstance, path: &Path) -> Outcome<ProtocolResult> {
    let doc: ResultDoc = serde_json::from_str(&read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    Ok(ProtocolResult::from_doc(inst, &doc)?)
}

fn verify(cli: &Cli, path: &Path, result: &Path, optimal: bool) -> Outcome {
    let inst = cli.instance(path)?;
    let r = load_result(&inst, result)?;
    let checks = verify_solution(&inst, &r)?;
    let optimality = if optimal && checks.passed() {
        Some(verify_optimal(&inst, &r, DEFAULT_SOLUTION_GUARD)?)
    } else {
        None
    };
    let passed = checks.passed() && optimality.as_ref().is_none_or(|o| o.passed());
    match cli.format(Format::Json) {
        Format::Json => cli.emit_json(&json!({
            "scenario": inst.name,
            "passed": passed,
            "checks": checks,
            "optimality": optimality,
        }))?,
        Format::Table => {
            let mut t = Table::new(["check", "result", "counterexample"]);
            for c in &checks.checks {
                let ce = c
                    .counterexample
                    .as_ref()
                    .map_or_else(String::new, |c| format!("run {} time {} agent {}", c.run, c.time, c.agent));
                t.row([c.name.clone(), verdict_word(c.passed).into(), ce]);
            }
            if let Some(o) = &optimality {
                t.row(["optimal".to_string(), verdict_word(o.optimal).into(), format!("{} solutions", o.solutions)]);
                t.row(["necessity".to_string(), verdict_word(o.necessity).into(), String::new()]);
            }
            cli.emit(&t.render())?;
        }
    }
    if !passed {
        return Err(Failure::Verdict(6, "result fails verification".into()));
    }
    Ok(())
}

fn verdict_word(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct OracleCheck {
    name: &'static str,
    status: &'static str,
    detail: Value,
}

impl OracleCheck {
    fn new(name: &'static str, passed: bool, detail: Value) -> Self {
        OracleCheck {
            name,
            status: if passed { "passed" } else { "failed" },
            detail,
        }
    }

    fn skipped(name: &'static str, why: String) -> Self {
        OracleCheck {
            name,
            status: "skipped",
            detail: json!({ "reason": why }),
        }
    }
}

fn guarded<T>(r: timely_ck::Result<T>) -> Outcome<Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ timely_ck::Error::SizeGuard { .. }) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn oracle(cli: &Cli, path: &Path) -> Outcome {
    let inst = cli.instance(path)?;
    let u = &inst.universe;
    let psi = inst.occurred();
    let mut checks = Vec::new();

    let agents = inst.agents();
    let iterated = timely_ck_traced(u, &psi, &inst.spec)?.value;
    let brute = gfp_bruteforce_oracle(u, &agents, |x| apply_f(u, &psi, &inst.spec, x), cli.oracle_guard);
    checks.push(match guarded(brute)? {
        Ok(v) => OracleCheck::new("fixed-point", v == iterated, json!({ "bits": u.num_points() * agents.len() })),
        Err(why) => OracleCheck::skipped("fixed-point", why),
    });

    let solvable = solvability(&inst)?.solvable;
    if solvable {
        let best = synthesize_optimal(&inst)?;
        checks.push(match guarded(verify_optimal(&inst, &best, DEFAULT_SOLUTION_GUARD))? {
            Ok(rep) => OracleCheck::new("optimality", rep.passed(), serde_json::to_value(&rep).expect("serializes")),
            Err(why) => OracleCheck::skipped("optimality", why),
        });
    } else {
        checks.push(match guarded(enumerate_solutions(&inst, DEFAULT_SOLUTION_GUARD, |_| Ok(())))? {
            Ok(n) => OracleCheck::new("optimality", n == 0, json!({ "solvable": false, "solutions": n })),
            Err(why) => OracleCheck::skipped("optimality", why),
        });
    }

    let nested = verify_nested_equivalence(u, &psi, &inst.spec, cli.path_mode());
    checks.push(match guarded(nested)? {
        Ok(rep) => OracleCheck::new("nested", rep.passed(), serde_json::to_value(&rep).expect("serializes")),
        Err(why) => OracleCheck::skipped("nested", why),
    });

    match cli.format(Format::Json) {
        Format::Json => cli.emit_json(&json!({ "scenario": inst.name, "checks": checks }))?,
        Format::Table => {
            let mut t = Table::new(["check", "status"]);
            for c in &checks {
                t.row([c.name, c.status]);
            }
            cli.emit(&t.render())?;
        }
    }
    if checks.iter().any(|c| c.status == "failed") {
        return Err(Failure::Verdict(6, "oracle disagrees with the engine".into()));
    }
    if checks.iter().all(|c| c.status == "skipped") {
        return Err(Failure::Verdict(4, "every oracle check exceeded its size guard".into()));
    }
    Ok(())
}

fn props(cli: &Cli, cases: usize) -> Outcome {
    let report = run_suite(cli.seed, cases);
    match cli.format(Format::Json) {
        Format::Json => cli.emit_json(&report)?,
        Format::Table => {
            let mut t = Table::new(["group", "cases", "failures", "result"]);
            for g in &report.groups {
                let result = match (g.asserted, g.passed()) {
                    (false, _) => "reported",
                    (true, true) => "pass",
                    (true, false) => "FAIL",
                };
                t.row([g.name.clone(), g.cases.to_string(), g.failures.to_string(), result.to_string()]);
            }
            cli.emit(&format!("seed {}\n{}", report.seed, t.render()))?;
        }
    }
    if let Some(g) = report.groups.iter().find(|g| !g.passed()) {
        return Err(Failure::Verdict(
            6,
            format!("property group `{}` failed: {}", g.name, g.first_failure.clone().unwrap_or_default()),
        ));
    }
    Ok(())
}

fn report(cli: &Cli, path: &Path, result: Option<&Path>) -> Outcome {
    let inst = cli.instance(path)?;
    let r = match result {
        Some(p) => load_result(&inst, p)?,
        None => synthesize_optimal(&inst)?,
    };
    let doc = r.to_doc(&inst, None);
    match cli.format(Format::Table) {
        Format::Json => cli.emit_json(&doc),
        Format::Table => cli.emit(&response_table(&doc)),
    }
}
