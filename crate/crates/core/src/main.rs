use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rulefuse::automata::{compile_rules, Mdfa};
use rulefuse::encoder::{encode_batch, EncodeOptions};
use rulefuse::harness::{
    evaluate_accuracy, examples_for, load_dataset, load_labels, rule_only_accuracy, run_experiment,
    sample_fewshot_one, synth, Dataset, ExperimentConfig,
};
use rulefuse::matcher::{run_trace_with, MatchMode, Sentence};
use rulefuse::neural::{checkpoint, train, Dims, ModelParams, TrainConfig, Variant, Vocab};
use rulefuse::{Error, Exec, Result, RuleSet};

#[derive(Parser)]
#[command(name = "rulefuse", version, about = "Word-level regex rules as features for a sentence classifier")]
#[command(args_override_self = true)]
struct Cli {
    /// Flat `key=value` file; its values override flags given on the command line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile rules and report state counts, or emit DOT graphs.
    Compile(CompileArgs),
    /// Print each rule's state trace for one sentence.
    Trace(TraceArgs),
    /// Write instance vectors and word tags as JSON Lines.
    Encode(EncodeArgs),
    /// Train one model and save a checkpoint.
    Train(TrainArgs),
    /// Accuracy of a checkpoint, or of the rules alone.
    Eval(EvalArgs),
    /// Few-shot experiment grid written as CSV.
    Fewshot(FewshotArgs),
    /// Generate the synthetic rule-governed corpus.
    SynthGen(SynthArgs),
}

#[derive(Args, Clone)]
struct MatchArgs {
    /// Consume every word instead of stopping at the first final state.
    #[arg(long)]
    full_match: bool,
    /// Zero instance vectors of rejecting rules.
    #[arg(long)]
    gate_instance: bool,
}

impl MatchArgs {
    fn mode(&self) -> MatchMode {
        if self.full_match {
            MatchMode::Full
        } else {
            MatchMode::EarlyStop
        }
    }

    fn options(&self) -> EncodeOptions {
        EncodeOptions {
            mode: self.mode(),
            gate_instance: self.gate_instance,
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    dot: bool,
    /// Only this rule id.
    #[arg(long)]
    rule: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    sentence: String,
    #[command(flatten)]
    matching: MatchArgs,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    rules: PathBuf,
    /// `label<TAB>sentence` file.
    #[arg(long, alias = "test", alias = "train")]
    input: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    matching: MatchArgs,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 16)]
    embed_dim: usize,
    #[arg(long, default_value_t = 16)]
    hidden_dim: usize,
    /// Gradient clipping norm; 0 disables.
    #[arg(long, default_value_t = 5.0)]
    clip: f64,
    /// Run batches sequentially even when built with the parallel feature.
    #[arg(long)]
    sequential: bool,
}

impl ModelArgs {
    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }

    fn train_config(&self, seed: u64, patience: Option<usize>) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            seed,
            patience,
            clip_norm: (self.clip > 0.0).then_some(self.clip),
            exec: self.exec(),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long, default_value = "NNSC")]
    variant: Variant,
    /// Train on a few-shot subsample with this many samples per class.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 0)]
    sample_seed: u64,
    #[arg(long)]
    augment_top3: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    patience: Option<usize>,
    /// Text file of `word v1 .. vd` lines.
    #[arg(long)]
    pretrained: Option<PathBuf>,
    /// Checkpoint path; `.json` writes JSON, anything else binary.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    matching: MatchArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    test: PathBuf,
    /// Defaults to `<model>.labels`.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Score the first-matching-rule classifier instead of a model.
    #[arg(long)]
    rule_only: bool,
    #[command(flatten)]
    matching: MatchArgs,
}

#[derive(Args)]
struct FewshotArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "NNSC,INSTANCE,WORD")]
    variant: Vec<Variant>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    q: Vec<usize>,
    /// Sampling seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    train_seeds: Vec<u64>,
    #[arg(long)]
    augment_top3: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    matching: MatchArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for rules.tsv, train.tsv, test.tsv, labels.txt.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 6)]
    classes: usize,
    #[arg(long, default_value_t = 8)]
    cues: usize,
    #[arg(long, default_value_t = 100)]
    train_per_class: usize,
    #[arg(long, default_value_t = 50)]
    test_per_class: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

/// Appends `--key value` pairs from a `key=value` file after the user's
/// arguments so they take precedence.
fn apply_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => argv
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| Error::InvalidConfig("--config needs a path".into()))?,
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone().into(),
        source: e,
    })?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::MalformedLine {
            line: i + 1,
            message: "expected key=value".into(),
        })?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        remove_flag(&mut argv, &flag);
        match value.trim() {
            "true" => argv.push(flag),
            "false" => {}
            v => {
                argv.push(flag);
                argv.push(v.to_string());
            }
        }
    }
    Ok(argv)
}

/// Drops every `--flag`, `--flag value` and `--flag=value` occurrence.
fn remove_flag(argv: &mut Vec<String>, flag: &str) {
    let prefixed = format!("{flag}=");
    let mut i = 0;
    while i < argv.len() {
        if argv[i] == flag {
            let has_value = argv.get(i + 1).is_some_and(|v| !v.starts_with("--"));
            argv.drain(i..i + 1 + usize::from(has_value));
        } else if argv[i].starts_with(&prefixed) {
            argv.remove(i);
        } else {
            i += 1;
        }
    }
}

fn read_rules(path: &Path, labels: Option<&[String]>) -> Result<(RuleSet, Vec<Mdfa>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let known: Option<HashSet<String>> = labels.map(|l| l.iter().cloned().collect());
    let rules = RuleSet::parse(&text, known.as_ref())?;
    let mdfas = compile_rules(&rules, Exec::default())?;
    Ok((rules, mdfas))
}

fn optional_rules(path: Option<&Path>, labels: &[String]) -> Result<(RuleSet, Vec<Mdfa>)> {
    match path {
        Some(p) => read_rules(p, Some(labels)),
        None => Ok((RuleSet::new(), Vec::new())),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(|e| Error::Io {
            path: p.into(),
            source: e,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()),
        source: e,
    }
}

fn labels_for(explicit: Option<&Path>) -> Result<Option<Vec<String>>> {
    explicit.map(load_labels).transpose()
}

fn cmd_compile(a: CompileArgs) -> Result<()> {
    let (rules, mdfas) = read_rules(&a.rules, None)?;
    if let Some(id) = a.rule.filter(|&id| !rules.iter().any(|r| r.id == id)) {
        return Err(Error::InvalidConfig(format!("no rule with id {id}; ids run from 1 to {}", rules.len())));
    }
    let mut out = output(a.out.as_deref())?;
    let werr = write_err(a.out.as_deref());
    for (rule, m) in rules.iter().zip(&mdfas) {
        if a.rule.is_some_and(|id| id != rule.id) {
            continue;
        }
        if a.dot {
            write!(out, "{}", m.to_dot(&format!("rule{}_{}", rule.id, rule.label))).map_err(&werr)?;
        } else {
            writeln!(
                out,
                "{}\t{}\tstates={}\tfinals={:?}\tdead={}",
                rule.id,
                rule.label,
                m.state_count(),
                m.finals().collect::<Vec<_>>(),
                m.dead().map(|d| d.to_string()).unwrap_or_else(|| "-".into())
            )
            .map_err(&werr)?;
        }
    }
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> Result<()> {
    let (rules, mdfas) = read_rules(&a.rules, None)?;
    let sentence = Sentence::new(&a.sentence);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let werr = write_err(None);
    for (rule, m) in rules.iter().zip(&mdfas) {
        let t = run_trace_with(m, &sentence, a.matching.mode());
        let visited: Vec<String> = t.visited.iter().map(|s| s.to_string()).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            rule.id,
            rule.label,
            t.accepted,
            t.consumed,
            visited.join(",")
        )
        .map_err(&werr)?;
    }
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let labels = labels_for(a.labels.as_deref())?;
    let data = load_dataset(&a.input, labels.as_deref())?;
    let (rules, mdfas) = read_rules(&a.rules, None)?;
    let feats = encode_batch(&rules, &mdfas, &data.sentences(), a.matching.options(), Exec::default())?;
    let mut out = output(a.out.as_deref())?;
    let werr = write_err(a.out.as_deref());
    for (s, f) in data.samples.iter().zip(&feats) {
        let instance: Vec<Vec<u8>> = f
            .instance
            .iter()
            .map(|u| u.values.iter().map(|&v| v as u8).collect())
            .collect();
        let tags: Vec<&[u8]> = f.tags.iter().map(|v| v.tags.as_slice()).collect();
        let line = serde_json::json!({
            "text": s.sentence.text(),
            "label": data.label_names[s.label],
            "instance": instance,
            "tags": tags,
        });
        writeln!(out, "{line}").map_err(&werr)?;
    }
    out.flush().map_err(&werr)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let labels = labels_for(a.labels.as_deref())?;
    let full = load_dataset(&a.train, labels.as_deref())?;
    let (rules, mdfas) = optional_rules(a.rules.as_deref(), &full.label_names)?;
    let data = match a.q {
        Some(q) => sample_fewshot_one(&full, q, a.sample_seed, a.augment_top3),
        None => full,
    };
    let opts = a.matching.options();
    let exec = a.model.exec();
    let feats = encode_batch(&rules, &mdfas, &data.sentences(), opts, exec)?;
    let train_set = examples_for(a.variant, &data, &feats);
    let dev = match &a.dev {
        Some(p) => {
            let d = load_dataset(p, Some(&data.label_names))?;
            let f = encode_batch(&rules, &mdfas, &d.sentences(), opts, exec)?;
            Some(examples_for(a.variant, &d, &f))
        }
        None => None,
    };
    let dims = Dims {
        embed: a.model.embed_dim,
        hidden: a.model.hidden_dim,
        classes: data.num_classes(),
        rules: rules.len(),
        instance_width: mdfas.iter().map(Mdfa::state_count).sum(),
    };
    let vocab = Vocab::from_sentences(data.samples.iter().map(|s| &s.sentence));
    let mut params = ModelParams::init(a.variant, dims, vocab, a.seed);
    if let Some(p) = &a.pretrained {
        let n = params.load_pretrained(p)?;
        eprintln!("loaded {n} pretrained vectors");
    }
    let cfg = a.model.train_config(a.seed, a.patience);
    let outcome = train(params, &train_set, dev.as_deref(), &cfg)?;
    for e in &outcome.history {
        match e.dev_accuracy {
            Some(acc) => eprintln!("epoch {:>3}  loss {:.5}  dev {:.4}", e.epoch, e.loss, acc),
            None => eprintln!("epoch {:>3}  loss {:.5}", e.epoch, e.loss),
        }
    }
    if let Some(msg) = &outcome.aborted {
        eprintln!("training aborted: {msg}; saving last finite parameters");
    }
    checkpoint::save(&outcome.params, &a.out)?;
    let labels_path = labels_path(&a.out);
    fs::write(&labels_path, data.label_names.join("\n") + "\n").map_err(|e| Error::Io {
        path: labels_path,
        source: e,
    })?;
    Ok(())
}

fn labels_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".labels");
    s.into()
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let opts = a.matching.options();
    if a.rule_only {
        let labels = labels_for(a.labels.as_deref())?;
        let test = load_dataset(&a.test, labels.as_deref())?;
        let rules_path = a
            .rules
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("--rule-only needs --rules".into()))?;
        let (rules, mdfas) = read_rules(rules_path, None)?;
        let acc = rule_only_accuracy(&rules, &mdfas, &test, opts.mode, Exec::default());
        println!("rule-only accuracy {acc:.4} on {} samples", test.len());
        return Ok(());
    }
    let model_path = a
        .model
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("eval needs --model or --rule-only".into()))?;
    let params = checkpoint::load(model_path)?;
    let labels = match &a.labels {
        Some(p) => load_labels(p)?,
        None => load_labels(labels_path(model_path))?,
    };
    let test: Dataset = load_dataset(&a.test, Some(&labels))?;
    let (rules, mdfas) = optional_rules(a.rules.as_deref(), &labels)?;
    let acc = evaluate_accuracy(&params, &rules, &mdfas, &test, opts, Exec::default())?;
    println!("{} accuracy {acc:.4} on {} samples", params.variant, test.len());
    Ok(())
}

fn cmd_fewshot(a: FewshotArgs) -> Result<()> {
    let labels = labels_for(a.labels.as_deref())?;
    let train_data = load_dataset(&a.train, labels.as_deref())?;
    let test_data = load_dataset(&a.test, Some(&train_data.label_names))?;
    let (rules, mdfas) = read_rules(&a.rules, Some(&train_data.label_names))?;
    let cfg = ExperimentConfig {
        variants: a.variant,
        qs: a.q,
        sample_seeds: a.seeds,
        train_seeds: a.train_seeds,
        augment_top3: a.augment_top3,
        embed_dim: a.model.embed_dim,
        hidden_dim: a.model.hidden_dim,
        train: a.model.train_config(0, None),
        encode: a.matching.options(),
        exec: a.model.exec(),
    };
    let results = run_experiment(&rules, &mdfas, &train_data, &test_data, &cfg)?;
    results.write_csv(output(a.out.as_deref())?)?;
    for agg in &results.aggregates {
        eprintln!(
            "{:<9} q={:<4} mean {:.4} ± {:.4} over {} runs",
            agg.variant, agg.q, agg.mean, agg.ci95, agg.runs
        );
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let cfg = synth::SynthConfig {
        classes: a.classes,
        cues_per_class: a.cues,
        train_per_class: a.train_per_class,
        test_per_class: a.test_per_class,
        noise: a.noise,
        seed: a.seed,
        ..Default::default()
    };
    let corpus = synth::generate(&cfg);
    fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let files = [
        ("rules.tsv", corpus.rules.to_text()),
        ("train.tsv", corpus.train.to_tsv()),
        ("test.tsv", corpus.test.to_tsv()),
        ("labels.txt", corpus.train.label_names.join("\n") + "\n"),
    ];
    for (name, body) in files {
        let path = a.out.join(name);
        fs::write(&path, body).map_err(|e| Error::Io { path, source: e })?;
    }
    eprintln!(
        "wrote {} rules, {} train and {} test samples to {}",
        corpus.rules.len(),
        corpus.train.len(),
        corpus.test.len(),
        a.out.display()
    );
    Ok(())
}

fn run() -> Result<()> {
    let argv = apply_config(std::env::args().collect())?;
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    let _ = cli.config;
    match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Fewshot(a) => cmd_fewshot(a),
        Command::SynthGen(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
