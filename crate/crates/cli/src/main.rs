use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use assumegen::assume::{build_assume, AssumeResult, InterfaceAlphabet, Tag};
use assumegen::dtmc::{build_monitored_dtmc, read_profile_csv, to_prism, ConfusionProfile};
use assumegen::localspec::{records, synthesize_local_specs, SpecMode};
use assumegen::lts::{check_safety, compose_all, property_err, to_aut, to_dot, to_record, Lts};
use assumegen::random::random_lts;
use assumegen::taxinet::{self, DiscretizationConfig};
use assumegen::{fsp, Action};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "assumegen",
    version,
    about = "Assumption generation for perception-based systems"
)]
struct Cli {
    /// Seed for randomized generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a composition for reachability of the error state.
    Check(CheckArgs),
    /// Generate the weakest assumption of a model over an interface.
    Assume(AssumeArgs),
    /// Derive local perception specifications.
    Localspec(LocalspecArgs),
    /// Write the TaxiNet models as FSP.
    TaxinetGen(TaxinetGenArgs),
    /// Probability that the assumption monitor aborts within a horizon.
    MonitorProb(MonitorProbArgs),
    /// Convert a process to another format.
    Export(ExportArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// FSP files; all definitions share one namespace.
    files: Vec<PathBuf>,
    /// Built-in TaxiNet model with this MaxCTE instead of files.
    #[arg(long, value_name = "MAX_CTE", conflicts_with = "files")]
    taxinet: Option<u32>,
    /// Comma-separated processes composed into the model.
    #[arg(long, value_delimiter = ',')]
    compose: Vec<String>,
    /// Process used as safety property.
    #[arg(long)]
    property: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlphabetChoice {
    Est,
    EstAct,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Aut,
    Dot,
    Json,
    Fsp,
}

#[derive(Args)]
struct AssumeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = AlphabetChoice::Est)]
    alphabet: AlphabetChoice,
    /// Directory receiving the artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact formats; all when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeChoice {
    Merged,
    PerState,
}

#[derive(Args)]
struct LocalspecArgs {
    #[arg(long, value_name = "MAX_CTE")]
    taxinet: u32,
    #[arg(long, value_enum, default_value_t = ModeChoice::Merged)]
    mode: ModeChoice,
    /// Also write the specs as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct TaxinetGenArgs {
    #[arg(long)]
    max_cte: u32,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorProbArgs {
    #[arg(long, value_name = "MAX_CTE")]
    taxinet: u32,
    /// Profile table with header actual_cte,actual_he,est_cte,est_he,count.
    #[arg(long, conflicts_with = "accuracy")]
    profile: Option<PathBuf>,
    /// Synthetic profile with this probability of a correct estimate.
    #[arg(long)]
    accuracy: Option<f64>,
    /// Horizon in DTMC steps (two per control cycle).
    #[arg(long)]
    horizon: usize,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the model in PRISM syntax.
    #[arg(long)]
    prism: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    files: Vec<PathBuf>,
    #[arg(long, value_name = "MAX_CTE", conflicts_with = "files")]
    taxinet: Option<u32>,
    /// Process to export.
    #[arg(long, required_unless_present = "random")]
    process: Option<String>,
    /// Export a random LTS with at most this many states instead.
    #[arg(long, conflicts_with_all = ["files", "taxinet", "process"])]
    random: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Aut)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => check(a),
        Command::Assume(a) => assume(a),
        Command::Localspec(a) => localspec(a),
        Command::TaxinetGen(a) => taxinet_gen(a),
        Command::MonitorProb(a) => monitor_prob(a),
        Command::Export(a) => export(a, cli.seed),
    };
    match result {
        Ok(code) => code,
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<io::Error>()
                    .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_definitions(model: &ModelArgs) -> Result<Vec<(String, Lts)>> {
    if let Some(m) = model.taxinet {
        return Ok(fsp::parse(&taxinet::fsp_source(&DiscretizationConfig::new(m)))?);
    }
    if model.files.is_empty() {
        bail!("no model given; pass FSP files or --taxinet");
    }
    let mut text = String::new();
    for f in &model.files {
        text += &fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        text.push('\n');
    }
    Ok(fsp::parse(&text)?)
}

fn lookup<'a>(defs: &'a [(String, Lts)], name: &str) -> Result<&'a Lts> {
    defs.iter()
        .find(|(n, _)| n == name)
        .map(|(_, l)| l)
        .with_context(|| format!("no process named {name}"))
}

/// Composition of the requested processes and the property error LTS.
fn load_model(model: &ModelArgs) -> Result<(Lts, Lts)> {
    let defs = load_definitions(model)?;
    let names = if model.compose.is_empty() && model.taxinet.is_some() {
        vec!["Controller".to_string(), "Dynamics".to_string()]
    } else {
        model.compose.clone()
    };
    if names.is_empty() {
        bail!("nothing to compose; pass --compose");
    }
    let parts: Vec<Lts> = names.iter().map(|n| lookup(&defs, n).cloned()).collect::<Result<_>>()?;
    let m = compose_all(&parts).trim();
    let p = match &model.property {
        Some(n) => property_err(lookup(&defs, n)?),
        None => Lts::universal(),
    };
    Ok((m, p))
}

fn check(args: CheckArgs) -> Result<ExitCode> {
    let (m, p) = load_model(&args.model)?;
    let verdict = check_safety(&compose_all([&m, &p]));
    if verdict.safe {
        println!("safe");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("unsafe");
        if let Some(trace) = verdict.counterexample {
            println!("counterexample: {trace}");
        }
        Ok(ExitCode::from(1))
    }
}

fn interface(m: &Lts, choice: AlphabetChoice) -> InterfaceAlphabet {
    let mut iface = InterfaceAlphabet::new();
    for a in m.alphabet() {
        match a.base() {
            "est" => iface.insert(a.clone(), Tag::Estimate),
            "act" if choice == AlphabetChoice::EstAct => iface.insert(a.clone(), Tag::Actual),
            _ => {}
        }
    }
    iface
}

fn stats_line(m: Option<u32>, r: &AssumeResult) -> String {
    let mem = r.stats.peak_mem_kb.map_or("-".to_string(), |k| k.to_string());
    let m = m.map_or("-".to_string(), |m| m.to_string());
    format!(
        "m={m} states={} time_ms={} mem_kb={mem}",
        r.stats.states, r.stats.wall_time_ms
    )
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

fn assume(args: AssumeArgs) -> Result<ExitCode> {
    let (m, p) = load_model(&args.model)?;
    let iface = interface(&m, args.alphabet);
    if iface.is_empty() {
        bail!("the model has no est actions to form an interface");
    }
    let r = build_assume(&m, &p, &iface)?;
    println!("{}", stats_line(args.model.taxinet, &r));
    if r.assumption.no_safe_context {
        eprintln!("warning: no environment keeps this model safe; the assumption is empty");
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let formats = if args.format.is_empty() {
            vec![Format::Aut, Format::Dot, Format::Json, Format::Fsp]
        } else {
            args.format.clone()
        };
        let a = &r.assumption.lts;
        let e = &r.err_automaton.lts;
        for f in formats {
            match f {
                Format::Aut => {
                    write_file(&dir.join("assumption.aut"), &to_aut(a))?;
                    write_file(&dir.join("err_automaton.aut"), &to_aut(e))?;
                }
                Format::Dot => {
                    write_file(&dir.join("assumption.dot"), &to_dot(a, "Assumption"))?;
                    write_file(&dir.join("err_automaton.dot"), &to_dot(e, "ErrAutomaton"))?;
                }
                Format::Json => {
                    let mut v = serde_json::to_value(r.artifact())?;
                    if let Some(obj) = v.as_object_mut() {
                        obj.remove("stats");
                    }
                    write_file(&dir.join("assume.json"), &(serde_json::to_string_pretty(&v)? + "\n"))?;
                    write_file(
                        &dir.join("stats.json"),
                        &(serde_json::to_string_pretty(&r.stats)? + "\n"),
                    )?;
                }
                Format::Fsp => {
                    write_file(&dir.join("assumption.fsp"), &fsp::print(a, "ASSUMPTION"))?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn taxinet_assume(max_cte: u32, choice: AlphabetChoice) -> Result<(DiscretizationConfig, Lts, AssumeResult)> {
    let cfg = DiscretizationConfig::new(max_cte);
    let m = taxinet::m1(&cfg);
    let iface = match choice {
        AlphabetChoice::Est => taxinet::est_alphabet(&cfg),
        AlphabetChoice::EstAct => taxinet::est_act_alphabet(&cfg),
    };
    let r = build_assume(&m, &Lts::universal(), &iface)?;
    Ok((cfg, m, r))
}

fn localspec(args: LocalspecArgs) -> Result<ExitCode> {
    let (cfg, _, r) = taxinet_assume(args.taxinet, AlphabetChoice::EstAct)?;
    let mode = match args.mode {
        ModeChoice::Merged => SpecMode::Merged,
        ModeChoice::PerState => SpecMode::PerState,
    };
    let specs = synthesize_local_specs(&r.err_automaton, &r.iface, mode)?;
    let recs = records(&specs, &cfg)?;
    let mut out = io::stdout().lock();
    for rec in &recs {
        writeln!(out, "{}", rec.text)?;
        writeln!(out, "  {}", rec.interval_text)?;
    }
    if let Some(path) = &args.json {
        write_file(path, &(serde_json::to_string_pretty(&recs)? + "\n"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn taxinet_gen(args: TaxinetGenArgs) -> Result<ExitCode> {
    if args.max_cte == 0 {
        bail!("--max-cte must be at least 1");
    }
    emit(
        args.out.as_deref(),
        &taxinet::fsp_source(&DiscretizationConfig::new(args.max_cte)),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn monitor_prob(args: MonitorProbArgs) -> Result<ExitCode> {
    let (cfg, m, r) = taxinet_assume(args.taxinet, AlphabetChoice::Est)?;
    let profile = match (&args.profile, args.accuracy) {
        (Some(path), _) => {
            let f = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
            read_profile_csv(f, &cfg)?
        }
        (None, Some(acc)) if (0.0..=1.0).contains(&acc) => ConfusionProfile::with_accuracy(&cfg, acc),
        (None, Some(acc)) => bail!("accuracy {acc} is not a probability"),
        (None, None) => bail!("pass --profile or --accuracy"),
    };
    let d = build_monitored_dtmc(&m, &profile, &r.err_automaton, &cfg)?;
    let mut csv = String::from("n,probability\n");
    for (n, p) in d.abort_curve(args.horizon).iter().enumerate() {
        csv += &format!("{n},{p}\n");
    }
    emit(args.out.as_deref(), &csv)?;
    if let Some(path) = &args.prism {
        write_file(path, &to_prism(&d, &profile, &r.err_automaton, &cfg)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn export(args: ExportArgs, seed: u64) -> Result<ExitCode> {
    let (name, lts) = if let Some(max) = args.random {
        if max == 0 {
            bail!("--random must be at least 1");
        }
        let alphabet: Vec<Action> = ["a", "b", "c"].iter().map(|s| Action::new(*s)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ("RANDOM".to_string(), random_lts(&mut rng, &alphabet, max, true, false))
    } else {
        let model = ModelArgs {
            files: args.files.clone(),
            taxinet: args.taxinet,
            compose: Vec::new(),
            property: None,
        };
        let defs = load_definitions(&model)?;
        let name = args.process.clone().unwrap_or_default();
        let lts = lookup(&defs, &name)?.trim();
        (name, lts)
    };
    let text = match args.format {
        Format::Aut => to_aut(&lts),
        Format::Dot => to_dot(&lts, &name),
        Format::Json => serde_json::to_string_pretty(&to_record(&lts))? + "\n",
        Format::Fsp => fsp::print(&lts, &name.to_uppercase()),
    };
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
