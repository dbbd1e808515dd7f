//! `signcorpus`: run the server and administer a deployment's database.
//!
//! Output is `key: value` lines. Exit codes: 0 ok, 1 completed with errors,
//! 2 usage or configuration error.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{NaiveDate, Utc};
use clap::{Parser, Subcommand};
use signcorpus_core::config::Settings;
use signcorpus_core::domain::{LanguageCode, RecordingId, Role};
use signcorpus_core::platform::{ExportFilter, NewUser};
use signcorpus_core::{Error, Platform};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERRORS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "signcorpus", version, about = "Sign-language corpus platform")]
pub struct Cli {
    /// Path to the TOML config file.
    #[arg(long, global = true, env = "SIGNCORPUS_CONFIG", default_value = "signcorpus.toml")]
    pub config: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API until interrupted.
    Serve,
    /// Register the prompts of a `content,content_type,language` CSV file.
    Ingest { csv: PathBuf },
    /// Write a dataset snapshot of validated recordings.
    Export {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        language: Option<LanguageCode>,
        /// Snapshot date, YYYY-MM-DD; today (UTC) by default.
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Load a snapshot directory written by `export`.
    Import { dir: PathBuf },
    /// Print corpus statistics over validated recordings.
    Stats {
        #[arg(long)]
        language: Option<LanguageCode>,
    },
    /// Create an account, or add roles to an existing one.
    UserAdd {
        username: String,
        #[arg(long)]
        language: Option<LanguageCode>,
        /// Repeatable: contributor, validator, annotator, admin.
        #[arg(long = "role", value_parser = parse_role)]
        roles: Vec<Role>,
        #[arg(long, env = "SIGNCORPUS_PASSWORD", hide_env_values = true)]
        password: Option<String>,
        /// Read the password from the first line of stdin.
        #[arg(long, conflicts_with = "password")]
        password_stdin: bool,
    },
    /// Attach a keypoint sidecar (JSON lines) to a recording.
    Keypoints { recording: String, sidecar: PathBuf },
}

fn parse_role(s: &str) -> Result<Role, String> {
    Role::parse(s).ok_or_else(|| format!("{s:?} is not contributor, validator, annotator or admin"))
}

enum Failure {
    Usage(String),
    Errors(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Errors(format!("{}: {e}", e.code()))
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Errors(format!("E_IO: {e}"))
    }
}

pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(EXIT_ERRORS);
        }
    };
    let mut out = io::stdout().lock();
    match runtime.block_on(run(cli, &mut out)) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Errors(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_ERRORS)
        }
    }
}

fn load(config: &Path) -> Result<Settings, Failure> {
    Settings::load(config).map_err(|e| Failure::Usage(format!("config key {}: {}", e.key, e.message)))
}

fn open(settings: Settings) -> Result<Platform, Failure> {
    Platform::open(settings).map_err(Failure::from)
}

async fn run(cli: Cli, out: &mut impl Write) -> Result<u8, Failure> {
    let settings = load(&cli.config)?;
    match cli.command {
        Command::Serve => serve(settings).await,
        Command::Ingest { csv } => {
            let bytes = std::fs::read(&csv).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", csv.display())))?;
            let platform = open(settings)?;
            let report = match platform.ingest_csv(&bytes) {
                Ok(r) => r,
                Err(e @ Error::BadHeader(_)) => return Err(Failure::Usage(format!("{}: {e}", e.code()))),
                Err(e) => return Err(e.into()),
            };
            write!(out, "{}", report.to_lines())?;
            Ok(if report.errors.is_empty() { EXIT_OK } else { EXIT_ERRORS })
        }
        Command::Export { out: dir, language, date } => {
            let platform = open(settings)?;
            let filter = ExportFilter {
                language,
                ..Default::default()
            };
            let date = date.unwrap_or_else(|| Utc::now().date_naive());
            let report = platform.export_snapshot(&filter, &dir, date).await?;
            write!(out, "{}", report.to_lines())?;
            write!(out, "{}", report.stats.to_lines())?;
            Ok(EXIT_OK)
        }
        Command::Import { dir } => {
            let platform = open(settings)?;
            let report = platform.import_snapshot(&dir).await?;
            writeln!(out, "recordings: {}", report.recordings)?;
            writeln!(out, "users_created: {}", report.users_created)?;
            writeln!(out, "prompts_created: {}", report.prompts_created)?;
            Ok(EXIT_OK)
        }
        Command::Stats { language } => {
            let platform = open(settings)?;
            let filter = ExportFilter {
                language,
                ..Default::default()
            };
            write!(out, "{}", platform.corpus_stats(&filter)?.to_lines())?;
            Ok(EXIT_OK)
        }
        Command::UserAdd {
            username,
            language,
            roles,
            password,
            password_stdin,
        } => {
            let platform = open(settings)?;
            let password = if password_stdin {
                let mut line = String::new();
                io::stdin().lock().read_line(&mut line)?;
                Some(line.trim_end_matches(['\r', '\n']).to_string())
            } else {
                password
            };
            user_add(&platform, username, language, roles, password, out)
        }
        Command::Keypoints { recording, sidecar } => {
            let bytes = std::fs::read(&sidecar)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", sidecar.display())))?;
            let platform = open(settings)?;
            let key = platform.attach_keypoints(&RecordingId::from(recording), bytes.into()).await?;
            writeln!(out, "keypoints: {key}")?;
            Ok(EXIT_OK)
        }
    }
}

fn user_add(
    platform: &Platform,
    username: String,
    language: Option<LanguageCode>,
    roles: Vec<Role>,
    password: Option<String>,
    out: &mut impl Write,
) -> Result<u8, Failure> {
    let roles: BTreeSet<Role> = roles.into_iter().collect();
    let user = match platform.user_by_name(&username)? {
        Some(_) => platform.grant_roles(&username, &roles)?,
        None => {
            let language = language.ok_or_else(|| Failure::Usage("--language is required for a new user".into()))?;
            let password = password.ok_or_else(|| Failure::Usage("--password or --password-stdin is required".into()))?;
            let roles = if roles.is_empty() { Role::crowd_defaults() } else { roles };
            platform.register(
                NewUser {
                    username,
                    password,
                    selected_language: language,
                    gender: None,
                    age: None,
                    locality: None,
                },
                roles,
            )?
        }
    };
    let roles: Vec<&str> = user.roles.iter().map(|r| r.as_str()).collect();
    writeln!(out, "user: {}", user.username)?;
    writeln!(out, "id: {}", user.id)?;
    writeln!(out, "roles: {}", roles.join(","))?;
    Ok(EXIT_OK)
}

async fn serve(settings: Settings) -> Result<u8, Failure> {
    let listen = settings.listen.clone();
    let platform = Arc::new(open(settings)?);
    let listener = tokio::net::TcpListener::bind(&listen)
        .await
        .map_err(|e| Failure::Usage(format!("config key listen: cannot bind {listen}: {e}")))?;
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
    };
    signcorpus_server::serve(platform, listener, shutdown).await?;
    Ok(EXIT_OK)
}
