use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use clap::{Parser, ValueEnum};
use migra_cli::manifest::Manifest;
use migra_cli::runner::{run_corpus, run_script};
use migra_cli::session::Session;
use migra_core::rules::LookupMode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Choice,
    Debug,
}

impl From<Mode> for LookupMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => LookupMode::Automatic,
            Mode::Choice => LookupMode::MultipleChoice,
            Mode::Debug => LookupMode::Debug,
        }
    }
}

/// Interactive rule-based source migration.
///
/// With `--script`, replays a directive script headlessly. With `--serve`,
/// exposes the session over HTTP. A manifest with a `[corpus]` table and
/// neither option migrates the whole corpus.
#[derive(Debug, Parser)]
#[command(name = "migra", version)]
struct Args {
    /// Session manifest (models, rules, mappings, corpus).
    #[arg(long)]
    manifest: PathBuf,
    /// Directive script to replay.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Serve the HTTP API on this port.
    #[arg(long)]
    serve: Option<u16>,
    /// Default lookup mode for produce directives.
    #[arg(long, value_enum, default_value = "auto")]
    mode: Mode,
    /// Directory receiving exported files.
    #[arg(long)]
    export_dir: Option<PathBuf>,
    /// Install Autowrap globally for corpus runs.
    #[arg(long)]
    autowrap: bool,
    /// Print reports as JSON.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MIGRA_LOG", "warn")).init();
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: Args) -> Result<bool, Box<dyn std::error::Error>> {
    let manifest = Manifest::load(&args.manifest)?;
    if let Some(dir) = &args.export_dir {
        std::fs::create_dir_all(dir)?;
    }
    let export_dir = args.export_dir.as_deref();

    if args.script.is_none() && args.serve.is_none() {
        let report = run_corpus(&manifest, args.autowrap, export_dir)?;
        if args.json {
            println!("{}", serde_json::to_string_pretty(&report)?);
        } else {
            print!("{report}");
        }
        return Ok(report.all_exports_reparse());
    }

    let mut session = Session::from_manifest(&manifest)?;
    session.default_mode = args.mode.into();
    let mut ok = true;
    if let Some(path) = &args.script {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let report = run_script(&mut session, &path.display().to_string(), &text, export_dir);
        if args.json {
            println!("{}", serde_json::to_string_pretty(&report)?);
        } else {
            print!("{report}");
        }
        ok = report.ok();
    }
    if let Some(port) = args.serve {
        let shared = Arc::new(Mutex::new(session));
        let addr = std::net::SocketAddr::from(([127, 0, 0, 1], port));
        tokio::runtime::Runtime::new()?.block_on(migra_cli::api::serve(shared, addr))?;
    }
    Ok(ok)
}
