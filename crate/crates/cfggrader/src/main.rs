//! Command-line driver: similarity, matching, ranking, training, grading.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfggrader::error::{Error, Result};
use cfggrader::grading::{compute_all_signals, feedback_band, predict, ModelFile};
use cfggrader::ir::{emit, Program};
use cfggrader::manifest::{load_corpus, load_program_file};
use cfggrader::neighbor::{
    graph_similarity, match_programs, rank_nearest, EngineConfig, SimilarityMode,
};

#[derive(Parser)]
#[command(
    name = "cfggrader",
    version,
    about = "Control-flow-graph similarity and grade prediction for program submissions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IterationArgs {
    /// Convergence threshold for the similarity iteration.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,

    /// Hard cap on similarity sweeps.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

impl IterationArgs {
    fn config(&self, mode: SimilarityMode) -> Result<EngineConfig> {
        let cfg = EngineConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EngineArgs {
    #[command(flatten)]
    iteration: IterationArgs,

    /// Node evidence: "topo" (shape only) or "content" (shape plus
    /// instruction similarity).
    #[arg(long, default_value_t = SimilarityMode::Content)]
    mode: SimilarityMode,
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig> {
        self.iteration.config(self.mode)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program file, printing a structure summary.
    Parse {
        /// Program file to parse.
        file: PathBuf,

        /// Print the program back in canonical form instead of a summary.
        #[arg(long)]
        emit: bool,
    },

    /// Print the similarity between two programs.
    Sim {
        /// First program file.
        a: PathBuf,

        /// Second program file.
        b: PathBuf,

        #[command(flatten)]
        engine: EngineArgs,

        /// Also print the similarity of every function pair.
        #[arg(long)]
        per_function: bool,
    },

    /// Print the best node pairing between two programs as JSON.
    Match {
        /// First program file.
        a: PathBuf,

        /// Second program file.
        b: PathBuf,

        #[command(flatten)]
        engine: EngineArgs,
    },

    /// Rank every .ir program in a directory by similarity to a target.
    Nearest {
        /// Directory holding candidate .ir programs.
        corpus_dir: PathBuf,

        /// Program to compare against; skipped if it lives in the corpus.
        target: PathBuf,

        #[command(flatten)]
        engine: EngineArgs,
    },

    /// Fit a grading model from a manifest of teacher-graded submissions.
    Train {
        /// Manifest describing model solutions and graded submissions.
        manifest: PathBuf,

        /// Where to write the trained model (JSON).
        model_out: PathBuf,

        #[command(flatten)]
        engine: IterationArgs,
    },

    /// Grade every submission in a manifest with a trained model.
    Grade {
        /// Manifest describing model solutions and submissions.
        manifest: PathBuf,

        /// Trained model file from `train`.
        model: PathBuf,

        /// Where to write the per-submission grades (CSV).
        csv_out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Honors GRADER_THREADS: a worker-count cap for similarity batches,
/// 0 meaning automatic.
fn configure_threads() -> std::result::Result<(), String> {
    let raw = match std::env::var("GRADER_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("GRADER_THREADS: {e}")),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("GRADER_THREADS must be a non-negative integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig { .. } => 1,
        Error::Parse(_)
        | Error::ParseFile { .. }
        | Error::Io { .. }
        | Error::Format { .. }
        | Error::InvalidGraph { .. }
        | Error::InvalidRecord { .. }
        | Error::NoModelSolutions
        | Error::MissingTeacherGrades { .. }
        | Error::TooFewRecords { .. } => 2,
        Error::InvalidWeight { .. }
        | Error::MismatchedRecords { .. }
        | Error::RankDeficient { .. }
        | Error::InvalidObservedMin { .. }
        | Error::SimilarityOutOfRange { .. } => 3,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Parse { file, emit } => cmd_parse(&file, emit),
        Command::Sim {
            a,
            b,
            engine,
            per_function,
        } => cmd_sim(&a, &b, &engine, per_function),
        Command::Match { a, b, engine } => cmd_match(&a, &b, &engine),
        Command::Nearest {
            corpus_dir,
            target,
            engine,
        } => cmd_nearest(&corpus_dir, &target, &engine),
        Command::Train {
            manifest,
            model_out,
            engine,
        } => cmd_train(&manifest, &model_out, &engine),
        Command::Grade {
            manifest,
            model,
            csv_out,
        } => cmd_grade(&manifest, &model, &csv_out),
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn cmd_parse(file: &Path, emit_canonical: bool) -> Result<()> {
    let program = load_program_file(file)?;
    if emit_canonical {
        print!("{}", emit(&program));
        return Ok(());
    }
    println!("functions: {}", program.function_count());
    for (name, cfg) in program.functions() {
        println!(
            "  {name}: {}, {}",
            plural(cfg.node_count(), "block"),
            plural(cfg.edge_count(), "edge")
        );
    }
    let unified = program.unified();
    println!(
        "unified: {}, {}",
        plural(unified.node_count(), "node"),
        plural(unified.edge_count(), "edge")
    );
    Ok(())
}

fn cmd_sim(a: &Path, b: &Path, engine: &EngineArgs, per_function: bool) -> Result<()> {
    let cfg = engine.config()?;
    let pa = load_program_file(a)?;
    let pb = load_program_file(b)?;
    let report = match_programs(&pa, &pb, &cfg);
    println!("{:.6}", report.similarity);
    println!(
        "mode={} iterations={} converged={}",
        cfg.mode,
        report.matrix.iterations(),
        report.matrix.converged()
    );
    if per_function {
        for (name_a, cfg_a) in pa.functions() {
            for (name_b, cfg_b) in pb.functions() {
                println!("{name_a} {name_b} {:.6}", graph_similarity(cfg_a, cfg_b, &cfg));
            }
        }
    }
    Ok(())
}

fn cmd_match(a: &Path, b: &Path, engine: &EngineArgs) -> Result<()> {
    let cfg = engine.config()?;
    let pa = load_program_file(a)?;
    let pb = load_program_file(b)?;
    let report = match_programs(&pa, &pb, &cfg);
    let ga = pa.unified();
    let gb = pb.unified();
    let pairs: Vec<serde_json::Value> = report
        .pairs
        .iter()
        .map(|p| {
            serde_json::json!({
                "a": ga.node(p.a).label,
                "b": gb.node(p.b).label,
                "similarity": p.similarity,
            })
        })
        .collect();
    let unmatched = |g: &cfggrader::ir::Cfg, indices: &[usize]| -> Vec<String> {
        indices.iter().map(|&i| g.node(i).label.clone()).collect()
    };
    let value = serde_json::json!({
        "mode": cfg.mode.to_string(),
        "iterations": report.matrix.iterations(),
        "converged": report.matrix.converged(),
        "similarity": report.similarity,
        "pairs": pairs,
        "unmatched_a": unmatched(ga, &report.unmatched_a),
        "unmatched_b": unmatched(gb, &report.unmatched_b),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("report serializes")
    );
    Ok(())
}

fn cmd_nearest(corpus_dir: &Path, target: &Path, engine: &EngineArgs) -> Result<()> {
    let cfg = engine.config()?;
    let target_program = load_program_file(target)?;
    let target_canonical = fs::canonicalize(target).ok();

    let io_err = |e: std::io::Error| Error::Io {
        path: corpus_dir.to_path_buf(),
        source: e,
    };
    let mut entries: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(corpus_dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("ir") {
            continue;
        }
        if let Some(target_path) = &target_canonical {
            if fs::canonicalize(&path).ok().as_ref() == Some(target_path) {
                continue;
            }
        }
        entries.push((entry.file_name().to_string_lossy().into_owned(), path));
    }
    entries.sort_by(|x, y| x.0.cmp(&y.0));
    if entries.is_empty() {
        return Err(Error::Format {
            path: corpus_dir.to_path_buf(),
            reason: "no .ir programs found in corpus directory".to_string(),
        });
    }

    let programs: Vec<Program> = entries
        .iter()
        .map(|(_, path)| load_program_file(path))
        .collect::<Result<_>>()?;
    let scores = rank_nearest(&target_program, &programs, &cfg);
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .total_cmp(&scores[i])
            .then_with(|| entries[i].0.cmp(&entries[j].0))
    });
    for i in order {
        println!("{:.6}  {}", scores[i], entries[i].0);
    }
    Ok(())
}

fn cmd_train(manifest: &Path, model_out: &Path, engine: &IterationArgs) -> Result<()> {
    let cfg = engine.config(SimilarityMode::Content)?;
    let corpus = load_corpus(manifest)?;
    let signals = compute_all_signals(&corpus.records, &corpus.models, &cfg)?;
    let model = cfggrader::grading::train(&corpus.records, &signals)?;
    ModelFile::new(&model, &cfg).save(model_out)?;
    println!("trained on {} records", model.trained_on);
    println!(
        "alpha {:.6} {:.6} {:.6}",
        model.alpha[0], model.alpha[1], model.alpha[2]
    );
    println!("train_mae {:.6}", model.train_mae);
    println!("train_r {:.6}", model.train_r);
    println!("wrote {}", model_out.display());
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn cmd_grade(manifest: &Path, model_path: &Path, csv_out: &Path) -> Result<()> {
    let file = ModelFile::load(model_path)?;
    let corpus = load_corpus(manifest)?;
    let signals = compute_all_signals(&corpus.records, &corpus.models, &file.engine)?;
    let model = file.model();

    let mut writer = csv::Writer::from_path(csv_out).map_err(|e| csv_error(csv_out, e))?;
    writer
        .write_record(["id", "x1", "x2", "x3", "best_model_id", "band", "raw", "grade"])
        .map_err(|e| csv_error(csv_out, e))?;
    for (record, signal) in corpus.records.iter().zip(&signals) {
        let x1 = record.tests_ratio();
        let band = feedback_band(signal.similarity)?;
        let prediction = predict(&model, x1, record.bug_free, signal.similarity);
        writer
            .write_record([
                record.id.as_str(),
                &format!("{x1:.6}"),
                if record.bug_free { "1" } else { "0" },
                &format!("{:.6}", signal.similarity),
                signal.best_model.as_str(),
                band.as_str(),
                &format!("{:.6}", prediction.raw),
                &format!("{:.6}", prediction.grade),
            ])
            .map_err(|e| csv_error(csv_out, e))?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: csv_out.to_path_buf(),
        source: e,
    })?;
    println!("graded {}", plural(corpus.records.len(), "submission"));
    println!("wrote {}", csv_out.display());
    Ok(())
}
