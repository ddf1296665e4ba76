use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stash_core::eval::{emit_report, EvalReport, Evaluator, SweepAxis};
use stash_core::ingest::{estimate_gravity, load_recording, resample, write_recording_to, RecordingFormat};
use stash_core::movement::aggregate_5s;
use stash_core::path_model::imu_sim::simulate_recording;
use stash_core::path_model::{quantize_legs, random_route, synthesize_corpus};
use stash_core::pipeline::{gate_sequence, run_pipeline, train_default_classifier};
use stash_core::protocol::{run_scenario, Actor, KeyStore, Scenario, ScenarioConfig, TransportKind};
use stash_core::trajectory::{merge_streams, strip_stationary, trim_to_duration};
use stash_core::turns::turns_from_stream;
use stash_core::{nw_score, Config, Corpus, MovementClassifier, PrimitiveSequence, Repository, SensorStream, TurnEvent};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "stash", version, about = "Trajectory-gated proximity authentication toolkit")]
struct Cli {
    /// TOML configuration; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory. Standard output when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resample a CSV or JSONL recording onto a fixed grid.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Detect turns in a recording and print them as JSONL.
    Turns { input: PathBuf },
    /// Per-second movement labels for a recording, as JSONL.
    Classify {
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Print 5 s M/S blocks as a sequence instead.
        #[arg(long)]
        blocks: bool,
    },
    /// Train the movement classifier on simulated rides.
    Train,
    /// Full pipeline: recording in, primitive sequence out.
    Primitives {
        input: PathBuf,
        /// Trained model; a fresh one is trained from `--seed` otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Simulate an inertial recording of a random route.
    Ride {
        #[arg(long, default_value_t = 6.0)]
        minutes: f64,
        /// Also write the route's ideal primitive sequence here.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Sequence utilities.
    Seq {
        #[command(subcommand)]
        op: SeqOp,
    },
    /// Alignment score of two sequences after removing `S`.
    Compare { a: PathBuf, b: PathBuf },
    /// Generate a synthetic route corpus into the `--out` directory.
    Synth {
        #[arg(long)]
        routes: Option<usize>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        minutes: Option<f64>,
    },
    /// Enroll a sequence as a new reference path.
    Enroll {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        verifier: String,
        input: PathBuf,
        #[arg(long)]
        length_min: Option<f64>,
    },
    /// Repository inspection.
    Repo {
        #[command(subcommand)]
        op: RepoOp,
    },
    /// Run the trajectory gate for a candidate sequence.
    Verify {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        verifier: String,
        input: PathBuf,
        /// Treat the candidate as explicitly confirmed and add it to the
        /// closest reference path (or enroll it).
        #[arg(long)]
        confirm: bool,
        /// Reference length used when confirming.
        #[arg(long)]
        length_min: Option<f64>,
    },
    /// Run a scripted challenge-response session.
    Simulate {
        #[arg(long, default_value = "benign")]
        scenario: Scenario,
        #[arg(long, default_value = "inproc")]
        transport: TransportKind,
        #[arg(long, default_value_t = 50)]
        latency_ms: u64,
    },
    /// Error-rate sweeps over a corpus.
    Eval {
        /// Corpus directory; synthesised from the config when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "length")]
        sweep: SweepAxis,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        length_min: Option<f64>,
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Derive a key file for the given verifier ids.
    Keys {
        #[arg(long = "verifier", required = true)]
        verifiers: Vec<String>,
    },
    /// Print the effective configuration.
    Config,
}

#[derive(Subcommand, Debug)]
enum SeqOp {
    /// Merge 5 s M/S blocks with a JSONL turn list.
    Merge { blocks: PathBuf, turns: PathBuf },
    Strip { input: PathBuf },
    /// Keep the final `--seconds` of a sequence.
    Trim {
        input: PathBuf,
        #[arg(long)]
        seconds: f64,
    },
}

#[derive(Subcommand, Debug)]
enum RepoOp {
    Show {
        #[arg(long)]
        repo: PathBuf,
    },
}

struct Ctx {
    cfg: Config,
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut stdout = io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(stdout.flush()?)
            }
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => bail!("--out <DIR> is required"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::load_or_default(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    if cli.seed.is_some() {
        cfg.corpus.seed = seed;
        cfg.eval.seed = seed;
    }
    let ctx = Ctx { cfg, seed, out: cli.out };
    match cli.command {
        Command::Ingest { input, rate } => ingest(&ctx, &input, rate),
        Command::Turns { input } => {
            let stream = load_resampled(&ctx, &input)?;
            let gravity = estimate_gravity(&stream, &ctx.cfg.ingest.gravity)?;
            let turns = turns_from_stream(&stream, &gravity, &ctx.cfg.turns)?;
            ctx.emit(&jsonl(&turns)?)
        }
        Command::Classify { input, model, blocks } => {
            let classifier = load_model(&model)?;
            let stream = load_resampled(&ctx, &input)?;
            let gravity = estimate_gravity(&stream, &ctx.cfg.ingest.gravity)?;
            let labels = classifier.classify(&stream, &gravity)?;
            if blocks {
                ctx.emit(&PrimitiveSequence::new(aggregate_5s(&labels))?.to_text())
            } else {
                ctx.emit(&jsonl(&labels)?)
            }
        }
        Command::Train => {
            let (classifier, cv) = train_default_classifier(&ctx.cfg, ctx.seed)?;
            eprintln!(
                "cross-validated accuracy {:.3} (M recall {:.3}, S recall {:.3})",
                cv.accuracy, cv.m_recall, cv.s_recall
            );
            ctx.emit(&(serde_json::to_string_pretty(&classifier)? + "\n"))
        }
        Command::Primitives { input, model } => {
            let classifier = match model {
                Some(p) => load_model(&p)?,
                None => train_default_classifier(&ctx.cfg, ctx.seed)?.0,
            };
            let raw = load_recording(&input, RecordingFormat::from_path(&input))?;
            let out = run_pipeline(&raw, &classifier, &ctx.cfg)?;
            ctx.emit(&out.sequence.to_text())
        }
        Command::Ride { minutes, truth } => ride(&ctx, minutes, truth.as_deref()),
        Command::Seq { op } => seq(&ctx, op),
        Command::Compare { a, b } => {
            let a = strip_stationary(&load_seq(&a)?);
            let b = strip_stationary(&load_seq(&b)?);
            ctx.emit(&format!("{}\n", nw_score(&a.symbols(), &b.symbols(), &ctx.cfg.scoring)))
        }
        Command::Synth { routes, instances, minutes } => {
            let mut cc = ctx.cfg.corpus;
            cc.n_routes = routes.unwrap_or(cc.n_routes);
            cc.instances_per_route = instances.unwrap_or(cc.instances_per_route);
            cc.route_length_min = minutes.unwrap_or(cc.route_length_min);
            let corpus = synthesize_corpus(&cc)?;
            let dir = ctx.out_dir()?;
            corpus.save_dir(dir)?;
            println!("{} routes x {} instances written to {}", cc.n_routes, cc.instances_per_route, dir.display());
            Ok(())
        }
        Command::Enroll { repo, verifier, input, length_min } => {
            let mut r = Repository::load_or_default(&repo)?;
            let seq = load_seq(&input)?;
            let l = length_min.unwrap_or(ctx.cfg.length_min);
            let idx = r.enroll(&verifier, &seq, l, &ctx.cfg.repository)?;
            r.save(&repo)?;
            println!("enrolled {verifier} path {idx}");
            Ok(())
        }
        Command::Repo { op: RepoOp::Show { repo } } => ctx.emit(&repo_summary(&Repository::load(&repo)?)),
        Command::Verify { repo, verifier, input, confirm, length_min } => {
            let confirm = confirm.then(|| length_min.unwrap_or(ctx.cfg.length_min));
            verify(&ctx, &repo, &verifier, &input, confirm)
        }
        Command::Simulate { scenario, transport, latency_ms } => simulate(&ctx, scenario, transport, latency_ms),
        Command::Eval { corpus, sweep, alpha, length_min, instances } => {
            let corpus = match corpus {
                Some(dir) => Corpus::load_dir(&dir)?,
                None => synthesize_corpus(&ctx.cfg.corpus)?,
            };
            let mut sc = ctx.cfg.eval;
            sc.alpha = alpha.unwrap_or(sc.alpha);
            sc.length_min = length_min.unwrap_or(sc.length_min);
            sc.n_instances = instances.unwrap_or(sc.n_instances);
            let reports = Evaluator::new(&corpus, ctx.cfg.scoring)?.sweep(sweep, &sc)?;
            if let Some(path) = &ctx.out {
                let summary = emit_report(&reports, path)?;
                eprintln!("wrote {} and {}", path.display(), summary.display());
            }
            print!("{}", eval_table(&reports));
            Ok(())
        }
        Command::Keys { verifiers } => {
            let keys = KeyStore::derive(ctx.seed, verifiers.iter().map(String::as_str));
            ctx.emit(&keys.to_text())
        }
        Command::Config => ctx.emit(&ctx.cfg.to_toml()),
    }
}

fn load_resampled(ctx: &Ctx, path: &Path) -> Result<SensorStream> {
    let raw = load_recording(path, RecordingFormat::from_path(path))?;
    Ok(resample(&raw, ctx.cfg.ingest.rate_hz)?)
}

fn load_seq(path: &Path) -> Result<PrimitiveSequence> {
    PrimitiveSequence::load(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<MovementClassifier> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: MovementClassifier = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(MovementClassifier::new(m.features, m.model, m.hmm)?)
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> Result<String> {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_stream(ctx: &Ctx, stream: &SensorStream) -> Result<()> {
    let format = ctx.out.as_deref().map_or(RecordingFormat::Csv, RecordingFormat::from_path);
    let mut buf = Vec::new();
    write_recording_to(stream, &mut buf, format)?;
    ctx.emit(std::str::from_utf8(&buf)?)
}

fn ingest(ctx: &Ctx, input: &Path, rate: Option<f64>) -> Result<()> {
    let raw = load_recording(input, RecordingFormat::from_path(input))?;
    let stream = resample(&raw, rate.unwrap_or(ctx.cfg.ingest.rate_hz))?;
    eprintln!("{} samples in, {} out over {:.1} s", raw.len(), stream.len(), stream.duration_s());
    write_stream(ctx, &stream)
}

fn ride(ctx: &Ctx, minutes: f64, truth: Option<&Path>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let legs = random_route(&mut rng, minutes);
    let rec = simulate_recording(&legs, &ctx.cfg.simulator, ctx.seed);
    if let Some(p) = truth {
        quantize_legs(&legs, &[]).save(p)?;
    }
    write_stream(ctx, &rec.stream)
}

fn seq(ctx: &Ctx, op: SeqOp) -> Result<()> {
    let out = match op {
        SeqOp::Merge { blocks, turns } => {
            let blocks = load_seq(&blocks)?;
            let text = fs::read_to_string(&turns).with_context(|| format!("reading {}", turns.display()))?;
            let events = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| serde_json::from_str::<TurnEvent>(l).with_context(|| format!("{}:{}", turns.display(), i + 1)))
                .collect::<Result<Vec<_>>>()?;
            merge_streams(blocks.primitives(), &events)
        }
        SeqOp::Strip { input } => strip_stationary(&load_seq(&input)?),
        SeqOp::Trim { input, seconds } => {
            if !(seconds > 0.0) {
                bail!("--seconds must be positive, got {seconds}");
            }
            trim_to_duration(&load_seq(&input)?, seconds)
        }
    };
    ctx.emit(&out.to_text())
}

fn repo_summary(repo: &Repository) -> String {
    let mut s = String::new();
    for (id, paths) in &repo.paths {
        for (i, p) in paths.iter().enumerate() {
            let t = &p.threshold;
            let d_l = t.d_l.map_or("-".to_string(), |d| format!("{d:.2}"));
            s.push_str(&format!(
                "{id}\tpath {i}\tL={} min\tn={}\tmedoid={}\td_i={:.2}\td_l={d_l}\td={:.2}\t{}\n",
                p.length_min,
                p.n(),
                p.medoid_index,
                t.d_i,
                t.d,
                p.medoid().word()
            ));
        }
    }
    if s.is_empty() {
        s.push_str("(empty repository)\n");
    }
    s
}

fn verify(ctx: &Ctx, repo_path: &Path, verifier: &str, input: &Path, confirm: Option<f64>) -> Result<()> {
    let mut repo = Repository::load(repo_path)?;
    let seq = PrimitiveSequence::load(input)?;
    let d = gate_sequence(&repo, verifier, &seq, &ctx.cfg)?;
    let best = d.best_score.map_or("-".to_string(), |s| s.to_string());
    ctx.emit(&format!(
        "{} after {} attempt(s), best score {best}\n",
        if d.passed { "PASS" } else { "FAIL" },
        d.attempts_used
    ))?;
    if let Some(length_min) = confirm {
        let idx = repo.confirm_best(verifier, &seq, length_min, &ctx.cfg.repository)?;
        repo.save(repo_path)?;
        eprintln!("confirmed into {verifier} path {idx}");
    }
    Ok(())
}

fn simulate(ctx: &Ctx, scenario: Scenario, transport: TransportKind, latency_ms: u64) -> Result<()> {
    let sc = ScenarioConfig {
        scenario,
        transport,
        latency: Duration::from_millis(latency_ms),
        seed: ctx.seed,
        length_min: ctx.cfg.length_min,
        gate: ctx.cfg.gate,
        noise: ctx.cfg.noise,
        ..Default::default()
    };
    let report = run_scenario(&sc)?;
    let mut s = String::new();
    for e in &report.transcript {
        let who = match e.from {
            Actor::Verifier => "verifier",
            Actor::Prover => "prover",
        };
        let kind = e.kind().map_or("?".to_string(), |k| format!("{k:?}"));
        s.push_str(&format!("{who:>8} -> {kind:<9} {}\n", hex::encode(&e.bytes)));
    }
    if !report.relay_transcript.is_empty() {
        s.push_str(&format!("relay forwarded {} frame(s)\n", report.relay_transcript.len()));
    }
    let o = report.outcome;
    let best = o.gate_score.map_or("-".to_string(), |v| v.to_string());
    s.push_str(&format!("gate attempts {}, best score {best}\n", o.attempts_used));
    s.push_str(&format!("verifier {}\n", if report.verifier_accepted { "accepted" } else { "did not accept" }));
    s.push_str(&format!("outcome {}\n", o.outcome));
    ctx.emit(&s)
}

fn eval_table(reports: &[EvalReport]) -> String {
    let mut s = String::from("axis\tL\tn\talpha\tscheme\tmean_far\tmean_frr\tmedian_far\tmedian_frr\teer\n");
    for r in reports {
        let m = &r.summary;
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
            r.axis, r.length_min, r.n_instances, r.alpha, r.scheme, m.mean_far, m.mean_frr, m.median_far, m.median_frr, r.eer
        ));
    }
    s
}
