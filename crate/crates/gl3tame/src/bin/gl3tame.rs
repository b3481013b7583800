use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gl3tame::cli::{self, CommandError, RunConfig};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "gl3tame", version, about = "Shape, gauge, monodromy, deformation-ring and Serre weight checks for rank-3 Kisin modules with tame descent data")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Prime for the first specialization and the weight computations.
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Parameters a,b,c (comma separated).
    #[arg(long, global = true, value_parser = parse_triple, allow_hyphen_values = true)]
    abc: Option<[i64; 3]>,
    /// p-adic precision N of the gauge computations.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// u-adic truncation D of the monodromy iteration (default 3e).
    #[arg(long, global = true)]
    trunc: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print JSON instead of a text summary.
    #[arg(long, global = true)]
    json: bool,
    /// Restrict verify-all to these groups or check-name prefixes.
    #[arg(long, global = true, value_delimiter = ',')]
    only: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// The (2,1,0)-admissible set.
    Adm {
        #[arg(value_parser = ["list", "orbits"], default_value = "list")]
        what: String,
    },
    /// Tame inertial types.
    Type {
        #[arg(value_parser = ["info"], default_value = "info")]
        what: String,
        #[arg(long, default_value_t = 1)]
        f: usize,
        #[arg(long, default_value_t = 1)]
        niveau: u32,
        #[arg(long, value_delimiter = ',')]
        a1: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        a2: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        a3: Vec<u64>,
    },
    /// Double cosets, table checks and the gauge algorithm.
    Shape {
        #[command(subcommand)]
        what: ShapeCmd,
    },
    /// Monodromy rows and the iteration.
    Monodromy {
        #[command(subcommand)]
        what: MonodromyCmd,
    },
    /// Presentations and special fibers of deformation rings.
    Defring {
        #[command(subcommand)]
        what: DefringCmd,
    },
    /// Serre weights, Jordan–Hölder factors and shapes.
    Weights {
        #[arg(value_parser = ["wq", "jh", "intersect", "shape-of"])]
        what: String,
        /// Family of ρ̄: split, mixed-a, irreducible or mixed-b.
        #[arg(long, default_value = "split")]
        family: String,
        /// Niveau of the type.
        #[arg(long, default_value_t = 1)]
        niveau: u32,
        /// Digits of the type (defaults to --abc).
        #[arg(long = "type-abc", value_parser = parse_triple, allow_hyphen_values = true)]
        type_abc: Option<[i64; 3]>,
    },
    /// Run every check and report per-check status.
    VerifyAll,
}

#[derive(Subcommand)]
enum ShapeCmd {
    /// Double coset of a matrix read from a JSON file {p, shift, entries}.
    Coset {
        #[arg(long)]
        matrix: std::path::PathBuf,
    },
    /// Table checks: cosets, height-det or lifts.
    VerifyTables {
        #[arg(long, value_parser = ["cosets", "height-det", "lifts"], default_value = "lifts")]
        which: String,
    },
    /// Normalize random lifts of every shape of length at least 2.
    Gauge,
}

#[derive(Subcommand)]
enum MonodromyCmd {
    Verify {
        #[arg(long)]
        shape: String,
    },
    Iterate,
}

#[derive(Subcommand)]
enum DefringCmd {
    Verify {
        #[arg(long)]
        shape: String,
    },
    Fiber {
        #[arg(long, value_parser = ["id", "alpha_ss", "alpha_nss"])]
        which: String,
    },
}

fn parse_triple(s: &str) -> Result<[i64; 3], String> {
    let v: Vec<i64> = s.split(',').map(|x| x.trim().parse::<i64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated integers".to_string())
}

fn config(g: &Global) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if g.p.is_some() || g.abc.is_some() {
        let p = g.p.unwrap_or(cfg.weights_p);
        let abc = g.abc.unwrap_or(cfg.weights_abc[0]);
        cfg = cfg.with_parameters(p, abc);
    }
    if let Some(n) = g.precision {
        cfg.precision = n;
    }
    cfg.trunc = g.trunc.or(cfg.trunc);
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Print a line, ignoring a closed stdout (e.g. piping into `head`).
fn out(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json(v: &Value) {
    out(&serde_json::to_string_pretty(v).expect("serializable"));
}

fn print_bundle(b: &cli::Bundle, json: bool) {
    if json {
        print_json(&serde_json::to_value(b).expect("serializable"));
        return;
    }
    for c in &b.checks {
        out(&format!("{} {:<48} {:>8.2}s  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.summary));
    }
    out(&format!("{} passed, {} failed in {:.1}s", b.passed, b.failed, b.seconds));
}

fn run(cli: Cli) -> Result<ExitCode, CommandError> {
    let cfg = config(&cli.global).map_err(CommandError::Usage)?;
    let g = &cli.global;
    let abc = cfg.weights_abc[0];
    let p = cfg.weights_p;
    match cli.command {
        Command::Adm { what } => print_json(&if what == "orbits" { cli::adm_orbits() } else { cli::adm_list() }),
        Command::Type { f, niveau, a1, a2, a3, .. } => {
            let p = g.p.ok_or_else(|| CommandError::Usage("type info needs --p".into()))?;
            print_json(&cli::type_info(p, f, niveau, [a1, a2, a3])?)
        }
        Command::Shape { what } => match what {
            ShapeCmd::Coset { matrix } => print_json(&cli::shape_coset(&std::fs::read_to_string(matrix)?)?),
            ShapeCmd::VerifyTables { which } => {
                let prefix = match which.as_str() {
                    "cosets" => "coset/",
                    "height-det" => "height-det/",
                    _ => "gauge/",
                };
                let b = cli::verify_all(&cfg, &[prefix.to_string()]);
                print_bundle(&b, g.json);
                return Ok(exit(b.all_passed()));
            }
            ShapeCmd::Gauge => {
                let b = cli::verify_all(&cfg, &["gauge/".to_string()]);
                print_bundle(&b, g.json);
                return Ok(exit(b.all_passed()));
            }
        },
        Command::Monodromy { what } => match what {
            MonodromyCmd::Verify { shape } => print_json(&cli::monodromy_verify(&shape, &cfg)?),
            MonodromyCmd::Iterate => print_json(&cli::monodromy_iterate(&cfg)),
        },
        Command::Defring { what } => {
            let v = match what {
                DefringCmd::Verify { shape } => cli::defring_verify(&shape, &cfg)?,
                DefringCmd::Fiber { which } => cli::defring_fiber(&which, &cfg)?,
            };
            if g.json {
                print_json(&v);
            } else {
                print_transcripts(&v);
            }
        }
        Command::Weights { what, family, niveau, type_abc } => {
            let t = type_abc.unwrap_or(abc);
            let v = match what.as_str() {
                "wq" => cli::weights_wq(&family, p, abc)?,
                "jh" => cli::weights_jh(p, niveau, t)?,
                "intersect" => cli::weights_intersect(&family, p, abc, niveau, t)?,
                _ => cli::weights_shape_of(&family, p, abc, niveau, t)?,
            };
            print_json(&v);
        }
        Command::VerifyAll => {
            let b = cli::verify_all(&cfg, &g.only);
            print_bundle(&b, g.json);
            return Ok(exit(b.all_passed()));
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Print every "transcript" array found in a report, one line per step.
fn print_transcripts(v: &Value) {
    match v {
        Value::Array(xs) => xs.iter().for_each(print_transcripts),
        Value::Object(m) => {
            if let Some(name) = m.get("case").or(m.get("which")).and_then(Value::as_str) {
                out(&format!("== {name}"));
            }
            if let Some(Value::Array(lines)) = m.get("transcript") {
                for l in lines.iter().filter_map(Value::as_str) {
                    out(&format!("  {l}"));
                }
            }
            for key in ["passed", "summary"] {
                if let Some(x) = m.get(key) {
                    out(&format!("  {key}: {x}"));
                }
            }
            if let Some(r) = m.get("report") {
                print_transcripts(r);
            }
        }
        _ => {}
    }
}

fn exit(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
