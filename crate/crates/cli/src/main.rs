//! `scrollnet`: batch access to the kernel.
//!
//! Exit codes: 0 success, 1 a negative answer (incorrect net, unprovable
//! sequent, blocked normalization), 2 usage or input errors.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use scrollnet::composition::{horizontal, vertical};
use scrollnet::correctness::{verdict, Verdict};
use scrollnet::derivation::{enumerate_applicable, replay};
use scrollnet::detour::{find_detours, normalize};
use scrollnet::net::Side;
use scrollnet::oracle::{kripke_countermodel, prove};
use scrollnet::{stlc, Error, NodeId, ScrollNet, ScrollStructure, Sequent, Step};

#[derive(Parser)]
#[command(name = "scrollnet", version, about = "Scroll net proof kernel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a structure, or a net with --net.
    Check {
        file: PathBuf,
        #[arg(long)]
        net: bool,
    },
    /// Print premiss and conclusion with their formulas.
    Boundaries { file: PathBuf },
    /// Print the formula of a structure.
    Interpret { file: PathBuf },
    /// Replay a script of steps on a structure and print the net.
    Derive {
        file: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
    /// List the steps applicable to a net.
    Applicable {
        file: PathBuf,
        #[arg(long)]
        at: Option<String>,
        #[arg(long, default_value_t = 1)]
        payload_bound: usize,
    },
    /// Decide whether a net is correct, printing a sequentialization.
    Correct { file: PathBuf },
    /// List the detours of a net.
    Detours { file: PathBuf },
    /// Reduce detours until none is left.
    Normalize {
        file: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
    },
    /// Compose two nets.
    Compose(Compose),
    /// Simply typed λ-terms, written `x:a, f:a -> b |- t`.
    Stlc {
        #[command(subcommand)]
        action: StlcAction,
    },
    /// Decide an intuitionistic sequent such as `a, a => b |- b`.
    Prove { sequent: String },
    /// Run the HTTP session service on localhost.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Mode {
    /// Horizontal (juxtaposition).
    #[arg(long = "h")]
    h: bool,
    /// Vertical (through the left conclusion).
    #[arg(long = "v")]
    v: bool,
}

#[derive(Args)]
struct Compose {
    #[command(flatten)]
    mode: Mode,
    a: PathBuf,
    b: PathBuf,
}

#[derive(Subcommand)]
enum StlcAction {
    /// Print the type of the term.
    Check { term: String },
    /// Print the translated net.
    Translate { term: String },
    /// Simulate one β-step on the translation.
    Reduce { term: String },
    /// Normalize the translation and print the reference normal form.
    Normalize { term: String },
}

/// A failure and its exit code.
struct Fail(u8, String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(2, e.to_string())
    }
}

type Out = Result<ExitCode, Fail>;

fn read(path: &PathBuf) -> Result<String, Fail> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Fail(2, format!("{}: {e}", path.display())))
    }
}

fn is_json(src: &str) -> bool {
    src.trim_start().starts_with('{')
}

fn structure(path: &PathBuf) -> Result<ScrollStructure, Fail> {
    let src = read(path)?;
    Ok(if is_json(&src) { ScrollStructure::decode_json(&src)? } else { ScrollStructure::parse(&src)? })
}

fn net(path: &PathBuf) -> Result<ScrollNet, Fail> {
    let src = read(path)?;
    Ok(if is_json(&src) { ScrollNet::decode_json(&src)? } else { ScrollNet::new(ScrollStructure::parse(&src)?) })
}

fn script(path: &PathBuf) -> Result<Vec<Step>, Fail> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum Script {
        Steps(Vec<Step>),
        Wrapped { steps: Vec<Step> },
    }
    Ok(match scrollnet::json::from_str::<Script>(&read(path)?)? {
        Script::Steps(s) | Script::Wrapped { steps: s } => s,
    })
}

/// Writes one line to stdout. A closed pipe is not an error.
fn emit(line: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_net(n: &ScrollNet) {
    emit(n.encode_json());
}

fn ok() -> Out {
    Ok(ExitCode::SUCCESS)
}

fn negative(msg: impl std::fmt::Display) -> Out {
    eprintln!("{msg}");
    Ok(ExitCode::from(1))
}

fn judgment(src: &str) -> Result<(stlc::Context, stlc::LambdaTerm), Fail> {
    let (ctx, t) = stlc::parse_judgment(src)?;
    stlc::infer(&ctx, &t)?;
    Ok((ctx, t))
}

fn run(cli: Cli) -> Out {
    match cli.command {
        Command::Check { file, net: as_net } => {
            let src = read(&file)?;
            let decoded = match (as_net, is_json(&src)) {
                (true, true) => ScrollNet::decode_json(&src).map(|n| n.validate()),
                (false, true) => ScrollStructure::decode_json(&src).map(|s| s.validate()),
                (_, false) => ScrollStructure::parse(&src).map(|s| s.validate()),
            };
            let report = match decoded {
                Ok(r) => r,
                Err(Error::InvalidStructure(r) | Error::InvalidNet(r)) => r,
                Err(e) => return Err(e.into()),
            };
            if report.is_ok() {
                emit("valid");
                ok()
            } else {
                emit(serde_json::to_string_pretty(&report)?);
                negative(format!("invalid: {report}"))
            }
        }
        Command::Boundaries { file } => {
            let n = net(&file)?;
            for (name, side) in [("premiss", Side::Premiss), ("conclusion", Side::Conclusion)] {
                let b = n.boundary(side)?;
                match b.to_text() {
                    Ok(t) => emit(format!("{name}: {t}")),
                    Err(_) => emit(format!("{name}: {}", b.encode_json())),
                }
            }
            for (name, side) in [("premiss", Side::Premiss), ("conclusion", Side::Conclusion)] {
                match n.boundary(side)?.interpret() {
                    Ok(f) => emit(format!("{name} formula: {f}")),
                    Err(e) => emit(format!("{name} formula: none ({e})")),
                }
            }
            ok()
        }
        Command::Interpret { file } => {
            emit(structure(&file)?.interpret()?);
            ok()
        }
        Command::Derive { file, script: steps } => {
            print_net(&replay(&structure(&file)?, &script(&steps)?)?);
            ok()
        }
        Command::Applicable { file, at, payload_bound } => {
            let n = net(&file)?;
            let at = at.map(NodeId::new);
            if let Some(v) = &at {
                if !n.structure().contains(v) {
                    return Err(Fail(2, format!("unknown node `{v}`")));
                }
            }
            for st in enumerate_applicable(&n, at.as_ref(), payload_bound)? {
                emit(serde_json::to_string(&st)?);
            }
            ok()
        }
        Command::Correct { file } => match verdict(&net(&file)?)? {
            Verdict::Correct(t) => {
                emit(serde_json::to_string_pretty(&t.to_json())?);
                eprintln!("correct");
                ok()
            }
            Verdict::Incorrect(why) => negative(format!("incorrect: {why}")),
            Verdict::Unknown => negative("unknown: sequentialization budget exhausted"),
        },
        Command::Detours { file } => {
            emit(serde_json::to_string_pretty(&find_detours(&net(&file)?)?)?);
            ok()
        }
        Command::Normalize { file, max_steps } => {
            let r = normalize(&net(&file)?, max_steps)?;
            print_net(&r.net);
            if r.normal {
                eprintln!("normal after {} steps", r.steps);
                ok()
            } else if r.blocked.is_empty() {
                negative(format!("stopped after {} steps", r.steps))
            } else {
                negative(format!("blocked after {} steps: {}", r.steps, serde_json::to_string(&r.blocked)?))
            }
        }
        Command::Compose(c) => {
            let (a, b) = (net(&c.a)?, net(&c.b)?);
            let out = if c.mode.h { horizontal(&a, &b) } else { vertical(&a, &b)? };
            print_net(&out);
            ok()
        }
        Command::Stlc { action } => match action {
            StlcAction::Check { term } => {
                let (ctx, t) = stlc::parse_judgment(&term)?;
                emit(stlc::infer(&ctx, &t)?);
                ok()
            }
            StlcAction::Translate { term } => {
                let (ctx, t) = judgment(&term)?;
                print_net(&stlc::translate(&ctx, &t)?);
                ok()
            }
            StlcAction::Reduce { term } => {
                let (ctx, t) = judgment(&term)?;
                let n = stlc::translate(&ctx, &t)?;
                match stlc::redexes(&n)?.first() {
                    Some(r) => {
                        print_net(&stlc::simulate_beta(&n, r)?);
                        ok()
                    }
                    None => negative("no redex"),
                }
            }
            StlcAction::Normalize { term } => {
                let (ctx, t) = judgment(&term)?;
                let n = stlc::translate(&ctx, &t)?;
                let nodes = n.structure().len();
                let r = normalize(&n, 10 * nodes * nodes)?;
                let nf = stlc::reference_normalize(&ctx, &t)?;
                emit(serde_json::to_string(&json!({
                    "normalForm": nf.to_string(),
                    "steps": r.steps,
                    "normal": r.normal,
                    "net": r.net.to_json(),
                }))?);
                if r.normal {
                    ok()
                } else {
                    negative("normalization blocked")
                }
            }
        },
        Command::Prove { sequent } => {
            let s = Sequent::parse(&sequent)?;
            if prove(&s) {
                emit("provable");
                ok()
            } else {
                emit("unprovable");
                if let Some(m) = kripke_countermodel(&s, 4) {
                    emit(serde_json::to_string_pretty(&m)?);
                }
                Ok(ExitCode::from(1))
            }
        }
        Command::Serve { port } => {
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://127.0.0.1:{port}");
            rt.block_on(scrollnet_service::serve(port))?;
            ok()
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
