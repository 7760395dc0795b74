use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use log::{info, warn};
use roundtrip_core::channel::{self, DEFAULT_SMOOTHING};
use roundtrip_core::corrector::{DEFAULT_LM_SMOOTHING, DEFAULT_ORDER};
use roundtrip_core::io::write_string_atomic;
use roundtrip_core::ocr::OCR_BIN_ENV;
use roundtrip_core::pipeline::{shuffle_seed_for, Generated};
use roundtrip_core::render::{fonts_in_dir, DEFAULT_FONT_SIZE};
use roundtrip_core::*;

use crate::config::{settings_hash, ConfigFile};
use crate::*;

const DEFAULT_SEED: u64 = 0;
const DEFAULT_P_SUB: f64 = 0.05;

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let jobs = cfg.pick(cli.jobs, "jobs", 0usize)?;
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    match cli.command {
        Command::Generate(a) => generate(&cfg, a, jobs),
        Command::Simulate(a) => simulate(&cfg, a, jobs),
        Command::Split(a) => split(&cfg, a),
        Command::Evaluate(a) => evaluate(&cfg, a),
        Command::AnalyzeFonts(a) => analyze_fonts(a),
        Command::TrainChannel(a) => train_channel(&cfg, a),
        Command::TrainLm(a) => train_lm(&cfg, a),
        Command::Correct(a) => correct(&cfg, a),
        Command::ExportTsv(a) => export_tsv(a),
    }
}

fn lang(cfg: &ConfigFile, flag: Option<String>) -> Result<Lang> {
    let tag: String = cfg.require(flag, "lang")?;
    tag.parse::<Lang>().map_err(|e| UsageError(e.to_string()).into())
}

fn char_mode(grapheme: bool) -> CharMode {
    if grapheme {
        CharMode::Grapheme
    } else {
        CharMode::Codepoint
    }
}

fn load(cfg: &ConfigFile, corpus: Option<PathBuf>, lang_flag: Option<String>) -> Result<Corpus> {
    let path: PathBuf = cfg.require(corpus, "corpus")?;
    let lang = lang(cfg, lang_flag)?;
    let loaded = load_corpus(&path, lang)?;
    if !loaded.skipped.is_empty() {
        warn!("{}: skipped {} empty lines", path.display(), loaded.skipped.len());
    }
    let corpus = filter_corpus(&loaded.corpus, &FilterRules::default())?;
    info!(
        "{}: {} sentences kept of {}",
        path.display(),
        corpus.len(),
        loaded.corpus.len()
    );
    Ok(corpus)
}

/// Noise for the simulated engine: a saved channel, or uniform rates over
/// the corpus alphabet.
fn noise_model(cfg: &ConfigFile, noise: NoiseArgs, corpus: &Corpus, settings: &mut BTreeMap<&str, String>) -> Result<ConfusionModel> {
    if let Some(path) = noise.channel {
        settings.insert("channel", path.display().to_string());
        return ConfusionModel::load(&path).with_context(|| format!("loading channel {}", path.display()));
    }
    let p_sub = cfg.pick(noise.p_sub, "p-sub", DEFAULT_P_SUB)?;
    let p_del = cfg.pick(noise.p_del, "p-del", 0.0)?;
    let p_ins = cfg.pick(noise.p_ins, "p-ins", 0.0)?;
    settings.insert("p-sub", p_sub.to_string());
    settings.insert("p-del", p_del.to_string());
    settings.insert("p-ins", p_ins.to_string());
    let alphabet: BTreeSet<char> = corpus.texts().flat_map(str::chars).collect();
    ConfusionModel::uniform(alphabet, p_sub, p_del, p_ins).map_err(|e| UsageError(e.to_string()).into())
}

fn finish_dataset(generated: Generated, out: &Path) -> Result<()> {
    write_dataset(&generated.pairs, out)?;
    let manifest = out.with_extension("manifest.json");
    write_string_atomic(&manifest, &serde_json::to_string_pretty(&generated.manifest)?)
        .with_context(|| format!("writing {}", manifest.display()))?;
    info!(
        "{}: {} pairs from {} cells ({} skipped)",
        out.display(),
        generated.manifest.emitted,
        generated.manifest.cells,
        generated.manifest.skipped.len()
    );
    Ok(())
}

fn generate(cfg: &ConfigFile, a: GenerateArgs, jobs: usize) -> Result<()> {
    let engine_kind = cfg.pick(a.engine, "engine", EngineKind::External)?;
    let fonts_dir: Option<PathBuf> = cfg.pick_opt(a.fonts_dir, "fonts-dir")?;
    let Some(fonts_dir) = fonts_dir else {
        return Err(UsageError("generate needs --fonts-dir (a directory of .ttf/.otf files)".into()).into());
    };
    let seed = cfg.pick(a.seed, "seed", DEFAULT_SEED)?;
    let font_size = cfg.pick(a.font_size, "font-size", DEFAULT_FONT_SIZE)?;
    let retries = cfg.pick(a.retries, "retries", 0u32)?;
    let corpus = load(cfg, a.corpus, a.lang)?;

    let specs = fonts_in_dir(&fonts_dir, font_size).with_context(|| format!("reading {}", fonts_dir.display()))?;
    let mut fonts = Vec::new();
    for spec in &specs {
        match load_font(spec) {
            Ok(f) => fonts.push(f),
            Err(e) => warn!("skipping font {}: {e}", spec.path.display()),
        }
    }
    anyhow::ensure!(!fonts.is_empty(), "no usable fonts in {}", fonts_dir.display());

    let mut settings = BTreeMap::new();
    settings.insert("command", "generate".to_string());
    settings.insert("lang", corpus.lang.to_string());
    settings.insert("seed", seed.to_string());
    settings.insert("font-size", font_size.to_string());
    settings.insert(
        "fonts",
        fonts.iter().map(|f| f.font_id().to_string()).collect::<Vec<_>>().join(","),
    );
    let engine: Box<dyn OcrEngine> = match engine_kind {
        EngineKind::External => {
            let timeout = cfg.pick(a.timeout_secs, "timeout-secs", 30u64)?;
            let env_bin = std::env::var_os(OCR_BIN_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
            let exe = match a.ocr_bin.or(env_bin) {
                Some(p) => p,
                None => cfg.pick(None, "ocr-bin", PathBuf::from("tesseract"))?,
            };
            settings.insert("engine", "external".into());
            settings.insert("ocr-bin", exe.display().to_string());
            let mut engine_cfg = ExternalEngineConfig {
                executable: exe,
                timeout: Duration::from_secs(timeout),
                ..ExternalEngineConfig::default()
            };
            if jobs > 0 {
                engine_cfg.max_parallel = jobs;
            }
            Box::new(ExternalEngine::new(engine_cfg))
        }
        EngineKind::Simulate => {
            settings.insert("engine", "simulate".into());
            let noise = noise_model(cfg, a.noise, &corpus, &mut settings)?;
            Box::new(SimulatedEngine::new(&noise, seed::labeled(seed, "ocr")))
        }
    };
    let render_cfg = RenderConfig::default();
    let opts = GenerateOptions {
        retries,
        images_dir: a.images_dir,
        jobs,
        provenance: Provenance {
            engine_id: engine.engine_id(),
            config_hash: settings_hash(&settings),
            seed,
        },
    };
    if let Some(dir) = &opts.images_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let generated = generate_pairs(&corpus, &fonts, engine.as_ref(), &render_cfg, &opts)?;
    finish_dataset(generated, &a.out)
}

fn simulate(cfg: &ConfigFile, a: SimulateArgs, jobs: usize) -> Result<()> {
    let seed = cfg.pick(a.seed, "seed", DEFAULT_SEED)?;
    let corpus = load(cfg, a.corpus, a.lang)?;
    let mut settings = BTreeMap::new();
    settings.insert("command", "simulate".to_string());
    settings.insert("lang", corpus.lang.to_string());
    settings.insert("seed", seed.to_string());
    settings.insert("fonts", a.font_ids.join(","));
    let noise = noise_model(cfg, a.noise, &corpus, &mut settings)?;
    let engine = SimulatedEngine::new(&noise, seed::labeled(seed, "ocr"));
    let opts = GenerateOptions {
        jobs,
        provenance: Provenance {
            engine_id: engine.engine_id(),
            config_hash: settings_hash(&settings),
            seed,
        },
        ..GenerateOptions::default()
    };
    let generated = simulate_pairs(&corpus, &a.font_ids, &engine, &opts)?;
    finish_dataset(generated, &a.out)
}

fn split(cfg: &ConfigFile, a: SplitArgs) -> Result<()> {
    let seed = cfg.pick(a.seed, "seed", DEFAULT_SEED)?;
    let defaults = SplitConfig::default();
    let split_cfg = SplitConfig {
        valid_size: cfg.pick(a.valid_size, "valid-size", defaults.valid_size)?,
        test_size: cfg.pick(a.test_size, "test-size", defaults.test_size)?,
        shuffle_seed: shuffle_seed_for(seed),
    };
    let pairs = read_dataset(&a.dataset)?;
    let splits = split_dataset(&pairs, &split_cfg)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (name, set) in [("train", &splits.train), ("valid", &splits.valid), ("test", &splits.test)] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        write_dataset(set, &path)?;
        println!("{name}\t{}\t{}", set.len(), path.display());
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write_string_atomic(path, &(serde_json::to_string_pretty(value)? + "\n"))
        .with_context(|| format!("writing {}", path.display()))
}

fn evaluate(cfg: &ConfigFile, a: EvaluateArgs) -> Result<()> {
    let grapheme = cfg.switch(a.grapheme, "grapheme")?;
    let pairs = read_dataset(&a.dataset)?;
    let predictions = a.predictions.as_deref().map(read_predictions).transpose()?;
    let report = corpus_report(&pairs, predictions.as_deref(), char_mode(grapheme))?;
    print!("{}", report.render_table());
    if let Some(out) = &a.report_out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn analyze_fonts(a: AnalyzeArgs) -> Result<()> {
    let pairs = read_dataset(&a.dataset)?;
    let report = font_report(&pairs)?;
    print!("{}", report.render_table());
    if let Some(out) = &a.report_out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn train_channel(cfg: &ConfigFile, a: TrainChannelArgs) -> Result<()> {
    let k = cfg.pick(a.k, "k", DEFAULT_SMOOTHING)?;
    let pairs = read_dataset(&a.dataset)?;
    let model = channel::build_confusion(&pairs, k)?;
    model.save(&a.model_out)?;
    info!(
        "{}: channel over {} characters from {} pairs",
        a.model_out.display(),
        model.alphabet().count(),
        pairs.len()
    );
    Ok(())
}

fn train_lm(cfg: &ConfigFile, a: TrainLmArgs) -> Result<()> {
    let order = cfg.pick(a.order, "order", DEFAULT_ORDER)?;
    let k = cfg.pick(a.k, "k", DEFAULT_LM_SMOOTHING)?;
    let corpus = load(cfg, a.corpus, a.lang)?;
    let lm = train_char_lm(&corpus, order, k).map_err(|e| match e {
        LmError::InvalidOrder(_) | LmError::InvalidSmoothing(_) => anyhow::Error::new(UsageError(e.to_string())),
        e => e.into(),
    })?;
    lm.save(&a.model_out)?;
    info!("{}: order {order}, {} characters", a.model_out.display(), lm.vocab().count());
    Ok(())
}

fn correct(cfg: &ConfigFile, a: CorrectArgs) -> Result<()> {
    let defaults = CorrectorConfig::default();
    let corrector = CorrectorConfig {
        beam_width: cfg.pick(a.beam, "beam", defaults.beam_width)?,
        lambda: cfg.pick(a.lambda, "lambda", defaults.lambda)?,
        max_edits_per_token: cfg.pick(a.max_edits, "max-edits", defaults.max_edits_per_token)?,
        top_k: cfg.pick(a.top_k, "top-k", defaults.top_k)?,
    };
    corrector.validate().map_err(|e| UsageError(e.to_string()))?;
    let grapheme = cfg.switch(a.grapheme, "grapheme")?;
    let pairs = read_dataset(&a.dataset)?;
    let channel = ConfusionModel::load(&a.channel).with_context(|| format!("loading channel {}", a.channel.display()))?;
    let lm = CharLm::load(&a.lm).with_context(|| format!("loading LM {}", a.lm.display()))?;
    let result = correct_pairs(&pairs, &channel, &lm, &corrector, char_mode(grapheme))?;
    write_predictions(&result.predictions, &a.predictions)?;
    println!("before:");
    print!("{}", result.before.render_table());
    println!("after:");
    print!("{}", result.after.render_table());
    if let Some(out) = &a.report_out {
        write_json(out, &serde_json::json!({ "before": result.before, "after": result.after }))?;
    }
    Ok(())
}

fn export_tsv(a: ExportArgs) -> Result<()> {
    let pairs = read_dataset(&a.dataset)?;
    write_tsv(&pairs, &a.out)?;
    info!("{}: {} rows", a.out.display(), pairs.len());
    Ok(())
}
