//! The `dhumbal` command line: tournaments, training, offline reports, record
//! export and an interactive table against AI seats.

mod play;

use std::ffi::OsString;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dhumbal::analytics::{compare_all, comparisons_csv, render_summary, summarize, MetricsSummary};
use dhumbal::arena::{
    championship, read_text, records_from_csv, records_to_csv, run_tournament, write_text, AgentSpec, ArenaError,
    RoundRecord, TournamentConfig, TournamentResult,
};
use dhumbal::heuristics::ProfileKind;
use dhumbal::learning::{
    checkpoint_select, train, write_training_log, LearnerCheckpoint, LearnerKind, OpponentKind, TrainConfig,
};
use dhumbal::search::SearchConfig;
use dhumbal::DEFAULT_SEED;

pub use play::{parse_input, play_session, PlayLog, PlayOptions, Rejection, RoundLog, AGENT_STREAM};

/// Overrides the default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "DHUMBAL_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "results";

/// Failures surfaced to the shell. Usage errors exit with 1, data errors with 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ArenaError> for CliError {
    fn from(e: ArenaError) -> Self {
        match e {
            ArenaError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dhumbal", version, about = "Dhumbal card game simulator and agent tournaments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a within-category tournament.
    Tournament(TournamentArgs),
    /// Run the cross-category final: rule-based, search, learning and random.
    Championship(ChampionshipArgs),
    /// Train a PPO or DQN agent and write checkpoints plus the training curve.
    Train(TrainArgs),
    /// Regenerate the summary, text report and comparisons from a records file.
    Report(ReportArgs),
    /// Play rounds against AI seats on the terminal.
    Play(PlayArgs),
    /// Convert a records file between CSV and JSON.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TournamentKind {
    Rule,
    Search,
    Learning,
}

impl TournamentKind {
    fn stem(self) -> &'static str {
        match self {
            TournamentKind::Rule => "rule",
            TournamentKind::Search => "search",
            TournamentKind::Learning => "learning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Ppo,
    Dqn,
}

/// Flags shared by the tournament-style commands.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Random seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rounds to play [default: 1024]
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Seats at the table; the entrant list is repeated to fill them
    #[arg(long)]
    pub players: Option<usize>,
    /// TOML tournament config; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $DHUMBAL_OUT_DIR or ./results]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Records file format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Search budget flags.
#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Iterations per decision; disables the wall-clock limit
    #[arg(long)]
    pub iterations: Option<u32>,
    /// Determinizations per decision
    #[arg(long)]
    pub determinizations: Option<u32>,
}

impl SearchArgs {
    fn apply(&self, mut c: SearchConfig) -> SearchConfig {
        if let Some(n) = self.iterations {
            c.iterations = n;
            c.time_limit_ms = None;
        }
        if let Some(d) = self.determinizations {
            c.determinizations = d;
        }
        c
    }
}

#[derive(Debug, Clone, Args)]
pub struct TournamentArgs {
    #[arg(value_enum)]
    pub kind: TournamentKind,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Comma-separated entrants, e.g. `aggressive,ismcts,ppo:ckpt.json,random`
    #[arg(long)]
    pub agents: Option<String>,
    /// Learned-agent checkpoints; the algorithm is read from each file
    #[arg(long, num_args = 1..)]
    pub checkpoint: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ChampionshipArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Trained PPO or DQN checkpoint for the learning seat
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = Algo::Ppo)]
    pub algo: Algo,
    /// Training episodes (one round each) [default: 200]
    #[arg(long)]
    pub episodes: Option<u32>,
    /// Random seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seats at the training table [default: 5]
    #[arg(long)]
    pub players: Option<usize>,
    /// Comma-separated opponents: random, aggressive, conservative, balanced, opportunistic
    #[arg(long)]
    pub opponents: Option<String>,
    /// Checkpoint interval in episodes [default: 1000]
    #[arg(long)]
    pub checkpoint_every: Option<u32>,
    /// Validation rounds per checkpoint; 0 keeps the last checkpoint
    #[arg(long, default_value_t = 0)]
    pub validation_rounds: u32,
    /// TOML training config; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $DHUMBAL_OUT_DIR or ./results]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Records file written by `tournament`, `championship` or `export`
    pub records: PathBuf,
    /// Output directory [default: $DHUMBAL_OUT_DIR or ./results]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Title printed above the table
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    /// Records file to convert
    pub records: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file [default: <out dir>/<input stem>.<format>]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlayArgs {
    /// Random seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rounds to play
    #[arg(long, default_value_t = 1)]
    pub rounds: u32,
    /// Seats at the table, yours included
    #[arg(long, default_value_t = 2)]
    pub players: usize,
    /// Comma-separated AI seats, repeated to fill the table
    #[arg(long, default_value = "aggressive")]
    pub agents: String,
    #[command(flatten)]
    pub search: SearchArgs,
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, input, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Tournament(a) => cmd_tournament(&a, out),
        Command::Championship(a) => cmd_championship(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Report(a) => cmd_report(&a, out),
        Command::Export(a) => cmd_export(&a, out),
        Command::Play(a) => cmd_play(&a, input, out),
    }
}

/// `--out`, then `$DHUMBAL_OUT_DIR`, then `./results`.
pub fn out_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn learned_spec(path: &Path) -> Result<AgentSpec, CliError> {
    let c = LearnerCheckpoint::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(match c.kind {
        LearnerKind::Ppo => AgentSpec::Ppo { checkpoint: path.to_path_buf() },
        LearnerKind::Dqn => AgentSpec::Dqn { checkpoint: path.to_path_buf() },
    })
}

/// Parses one entrant name: a profile, `random`, `mcts`, `ismcts`, or
/// `ppo:PATH` / `dqn:PATH` / `learned:PATH`.
pub fn parse_agent(token: &str, search: SearchConfig) -> Result<AgentSpec, CliError> {
    let t = token.trim();
    let (head, path) = match t.split_once(':') {
        Some((h, p)) => (h.to_ascii_lowercase(), Some(PathBuf::from(p))),
        None => (t.to_ascii_lowercase(), None),
    };
    let spec = match (head.as_str(), path) {
        ("random", None) => AgentSpec::Random,
        ("aggressive", None) => AgentSpec::Heuristic { profile: ProfileKind::Aggressive },
        ("conservative", None) => AgentSpec::Heuristic { profile: ProfileKind::Conservative },
        ("balanced", None) => AgentSpec::Heuristic { profile: ProfileKind::Balanced },
        ("opportunistic", None) => AgentSpec::Heuristic { profile: ProfileKind::Opportunistic },
        ("mcts", None) => AgentSpec::Mcts { search },
        ("ismcts", None) => AgentSpec::Ismcts { search },
        ("ppo", Some(checkpoint)) => AgentSpec::Ppo { checkpoint },
        ("dqn", Some(checkpoint)) => AgentSpec::Dqn { checkpoint },
        ("learned", Some(p)) => learned_spec(&p)?,
        _ => return Err(CliError::Usage(format!("unknown agent '{t}'"))),
    };
    Ok(spec)
}

pub fn parse_agents(list: &str, search: SearchConfig) -> Result<Vec<AgentSpec>, CliError> {
    let specs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_agent(s, search))
        .collect::<Result<Vec<_>, _>>()?;
    if specs.is_empty() {
        return Err(CliError::Usage("empty agent list".into()));
    }
    Ok(specs)
}

fn cycle_to(specs: &[AgentSpec], n: usize) -> Vec<AgentSpec> {
    (0..n).map(|i| specs[i % specs.len()].clone()).collect()
}

fn load_config(path: &Path) -> Result<TournamentConfig, CliError> {
    let text = read_text(path)?;
    TournamentConfig::from_toml(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Applies flags over a base config: search budgets, entrants, table size, seed, rounds.
fn apply_overrides(
    mut cfg: TournamentConfig,
    common: &Common,
    search: &SearchArgs,
    agents: Option<Vec<AgentSpec>>,
) -> Result<TournamentConfig, CliError> {
    for p in &mut cfg.participants {
        if let AgentSpec::Mcts { search: s } | AgentSpec::Ismcts { search: s } = p {
            *s = search.apply(*s);
        }
    }
    if let Some(a) = agents {
        cfg.players_per_game = a.len();
        cfg.participants = a;
    }
    if let Some(n) = common.players {
        if cfg.participants.is_empty() {
            return Err(CliError::Usage("no entrants".into()));
        }
        cfg.participants = cycle_to(&cfg.participants, n);
        cfg.players_per_game = n;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.rounds {
        cfg.rounds = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Builds the tournament config for `tournament <kind>` from defaults, the config
/// file and the flags, in increasing precedence.
pub fn tournament_config(a: &TournamentArgs) -> Result<TournamentConfig, CliError> {
    let search = a.search.apply(SearchConfig::default());
    let base = match &a.common.config {
        Some(p) => load_config(p)?,
        None => TournamentConfig::new(match a.kind {
            TournamentKind::Rule => TournamentConfig::rule_based().participants,
            TournamentKind::Search => vec![AgentSpec::Mcts { search }, AgentSpec::Ismcts { search }],
            TournamentKind::Learning => Vec::new(),
        }),
    };
    let agents = match (&a.agents, a.kind) {
        (Some(list), _) => Some(parse_agents(list, search)?),
        (None, TournamentKind::Learning) if !a.checkpoint.is_empty() => {
            Some(a.checkpoint.iter().map(|p| learned_spec(p)).collect::<Result<Vec<_>, _>>()?)
        }
        (None, TournamentKind::Learning) if base.participants.is_empty() => {
            return Err(CliError::Usage("a learning tournament needs --checkpoint files or --agents".into()))
        }
        _ => None,
    };
    apply_overrides(base, &a.common, &a.search, agents)
}

pub fn championship_config(a: &ChampionshipArgs) -> Result<TournamentConfig, CliError> {
    let base = match &a.common.config {
        Some(p) => {
            let mut c = load_config(p)?;
            if let Some(path) = &a.checkpoint {
                let learned = learned_spec(path)?;
                for s in &mut c.participants {
                    if matches!(s, AgentSpec::Ppo { .. } | AgentSpec::Dqn { .. }) {
                        *s = learned.clone();
                    }
                }
            }
            c
        }
        None => {
            let path = a.checkpoint.as_ref().ok_or_else(|| {
                CliError::Usage(
                    "the championship needs a trained checkpoint: pass --checkpoint or a --config naming one".into(),
                )
            })?;
            TournamentConfig::new(vec![
                AgentSpec::Heuristic { profile: ProfileKind::Aggressive },
                AgentSpec::Ismcts { search: SearchConfig::default() },
                learned_spec(path)?,
                AgentSpec::Random,
            ])
        }
    };
    apply_overrides(base, &a.common, &a.search, None)
}

/// Records as stored on disk in JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsFile {
    pub participants: Vec<String>,
    pub records: Vec<RoundRecord>,
}

pub fn records_to_json(participants: &[String], records: &[RoundRecord]) -> String {
    let file = RecordsFile { participants: participants.to_vec(), records: records.to_vec() };
    serde_json::to_string_pretty(&file).expect("records serialize")
}

/// Parses a records file in either format. Empty files and files without rounds are errors.
pub fn parse_records(text: &str) -> Result<(Vec<String>, Vec<RoundRecord>), CliError> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Err(CliError::Data("records file is empty".into()));
    }
    let (names, recs) = if trimmed.starts_with('{') {
        let f: RecordsFile =
            serde_json::from_str(trimmed).map_err(|e| CliError::Data(format!("malformed records: {e}")))?;
        (f.participants, f.records)
    } else {
        records_from_csv(text).map_err(|e| CliError::Data(e.to_string()))?
    };
    if recs.is_empty() {
        return Err(CliError::Data("records file holds no rounds".into()));
    }
    for r in &recs {
        let n = names.len();
        let lens = [
            r.seating.len(),
            r.coin_delta.len(),
            r.cards_discarded.len(),
            r.turns_taken.len(),
            r.rewards.len(),
            r.invalid_actions.len(),
            r.final_hand_values.len(),
            r.decisions.len(),
            r.decision_ms.len(),
        ];
        let out_of_range = r.winner.is_some_and(|w| w >= n) || r.jhyap.is_some_and(|j| j.declarer >= n);
        if lens.iter().any(|&l| l != n) || out_of_range || r.coin_delta.iter().sum::<i64>() != 0 {
            return Err(CliError::Data(format!("malformed records: round {} is inconsistent", r.round_index)));
        }
    }
    Ok((names, recs))
}

pub fn load_records(path: &Path) -> Result<(Vec<String>, Vec<RoundRecord>), CliError> {
    let text = read_text(path)?;
    parse_records(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn summary_json(summary: &MetricsSummary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes") + "\n"
}

/// Writes summary JSON, text report and comparison CSV under `dir/<stem>_*`;
/// returns the rendered report.
fn write_reports(
    dir: &Path,
    stem: &str,
    title: &str,
    participants: &[String],
    records: &[RoundRecord],
    summary: &MetricsSummary,
) -> Result<(String, Vec<PathBuf>), CliError> {
    let report = render_summary(title, summary);
    let comparisons = comparisons_csv(&compare_all(participants, records));
    let files = [
        (dir.join(format!("{stem}_summary.json")), summary_json(summary)),
        (dir.join(format!("{stem}_report.txt")), report.clone()),
        (dir.join(format!("{stem}_comparisons.csv")), comparisons),
    ];
    let mut written = Vec::new();
    for (path, text) in files {
        write_text(&path, &text)?;
        written.push(path);
    }
    Ok((report, written))
}

fn emit_run(
    res: &TournamentResult,
    stem: &str,
    title: &str,
    common: &Common,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let dir = out_dir(common.out.as_deref());
    let records_path = dir.join(format!("{stem}_records.{}", common.format.extension()));
    let text = match common.format {
        Format::Csv => records_to_csv(&res.participants, &res.records),
        Format::Json => records_to_json(&res.participants, &res.records),
    };
    write_text(&records_path, &text)?;
    let (report, mut files) = write_reports(&dir, stem, title, &res.participants, &res.records, &res.summary)?;
    files.insert(0, records_path);
    write!(out, "{report}")?;
    for f in files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn cmd_tournament(a: &TournamentArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = tournament_config(a)?;
    let res = run_tournament(&cfg)?;
    let title = format!("{} tournament, seed {}", a.kind.stem(), cfg.seed);
    emit_run(&res, a.kind.stem(), &title, &a.common, out)
}

fn cmd_championship(a: &ChampionshipArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = championship_config(a)?;
    let res = championship(&cfg)?;
    let title = format!("championship, seed {}", cfg.seed);
    emit_run(&res, "championship", &title, &a.common, out)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn train_config(a: &TrainArgs) -> Result<TrainConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::from_toml(&read_text(p)?).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        None => TrainConfig::default(),
    };
    cfg.kind = match a.algo {
        Algo::Ppo => LearnerKind::Ppo,
        Algo::Dqn => LearnerKind::Dqn,
    };
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(p) = a.players {
        cfg.players = p;
    }
    if let Some(list) = &a.opponents {
        cfg.opponents = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<OpponentKind>().map_err(CliError::Usage))
            .collect::<Result<_, _>>()?;
    }
    if let Some(c) = a.checkpoint_every {
        cfg.checkpoint_every = c;
    }
    if !(2..=5).contains(&cfg.players) {
        return Err(CliError::Usage(format!("--players {} is outside 2..=5", cfg.players)));
    }
    if cfg.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    Ok(cfg)
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = train_config(a)?;
    let dir = out_dir(a.out.as_deref());
    let stem = match cfg.kind {
        LearnerKind::Ppo => "ppo",
        LearnerKind::Dqn => "dqn",
    };
    let result = train(&cfg);
    let curve = dir.join(format!("{stem}_training.csv"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    write_training_log(&result.logs, &curve)
        .map_err(|e| CliError::Data(format!("{}: {e}", curve.display())))?;
    let save = |c: &LearnerCheckpoint, path: &Path| {
        c.save(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    };
    for c in &result.checkpoints {
        save(c, &dir.join(format!("{stem}_episode{}.json", c.episode)))?;
    }
    let chosen = if a.validation_rounds > 0 {
        let (i, rates) =
            checkpoint_select(&result.checkpoints, &cfg.opponents, cfg.players, a.validation_rounds, cfg.seed)
                .map_err(|e| CliError::Data(e.to_string()))?;
        for (c, r) in result.checkpoints.iter().zip(&rates) {
            writeln!(out, "checkpoint {:>6}: validation win rate {:.3}", c.episode, r)?;
        }
        i
    } else {
        result.checkpoints.len() - 1
    };
    let best = dir.join(format!("{stem}.json"));
    save(&result.checkpoints[chosen], &best)?;

    let k = result.logs.len().min(50);
    let first = mean(result.logs[..k].iter().map(|l| l.reward));
    let last = mean(result.logs[result.logs.len() - k..].iter().map(|l| l.reward));
    writeln!(out, "{} training: {} episodes, seed {}", cfg.kind.name(), result.logs.len(), cfg.seed)?;
    writeln!(out, "mean reward, first {k} episodes: {first:.2}")?;
    writeln!(out, "mean reward, last {k} episodes: {last:.2}")?;
    match result.converged_at {
        Some(e) => writeln!(out, "converged after episode {e}")?,
        None => writeln!(out, "not converged")?,
    }
    writeln!(out, "selected checkpoint: episode {}", result.checkpoints[chosen].episode)?;
    writeln!(out, "wrote {}", curve.display())?;
    writeln!(out, "wrote {}", best.display())?;
    Ok(())
}

fn stem_of(path: &Path) -> String {
    let s = path.file_stem().and_then(|s| s.to_str()).unwrap_or("records");
    s.strip_suffix("_records").unwrap_or(s).to_string()
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (names, recs) = load_records(&a.records)?;
    let summary = summarize(&names, &recs).map_err(|e| CliError::Data(e.to_string()))?;
    let stem = stem_of(&a.records);
    let title = a.title.clone().unwrap_or_else(|| format!("{stem} report"));
    let (report, files) = write_reports(&out_dir(a.out.as_deref()), &stem, &title, &names, &recs, &summary)?;
    write!(out, "{report}")?;
    for f in files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn cmd_export(a: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (names, recs) = load_records(&a.records)?;
    let text = match a.format {
        Format::Csv => records_to_csv(&names, &recs),
        Format::Json => records_to_json(&names, &recs),
    };
    let path = match &a.out {
        Some(p) => p.clone(),
        None => out_dir(None).join(format!("{}_records.{}", stem_of(&a.records), a.format.extension())),
    };
    if path == a.records {
        return Err(CliError::Usage("refusing to overwrite the input file".into()));
    }
    write_text(&path, &text)?;
    writeln!(out, "wrote {} ({} rounds)", path.display(), recs.len())?;
    Ok(())
}

fn cmd_play(a: &PlayArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    if !(2..=5).contains(&a.players) {
        return Err(CliError::Usage(format!("--players {} is outside 2..=5", a.players)));
    }
    if a.rounds == 0 {
        return Err(CliError::Usage("--rounds must be at least 1".into()));
    }
    let search = a.search.apply(SearchConfig::default());
    let opponents = cycle_to(&parse_agents(&a.agents, search)?, a.players - 1);
    let opts = PlayOptions {
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        rounds: a.rounds,
        opponents,
        human_seat: 0,
        rules: Default::default(),
    };
    play_session(&opts, input, out)?;
    Ok(())
}
