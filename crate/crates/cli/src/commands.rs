use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use sentigram_core::corpus::{class_distribution, load_dataset, LabeledDataset};
use sentigram_core::evaluation::{fit_pipeline, round_seeds, run_experiment, EvalReport, PipelineConfig};
use sentigram_core::features::vectorize;
use sentigram_core::ngram::{build_dictionary, NGramDictionary};
use sentigram_core::{TokenSequence, TrainedEnsemble64};

/// Settings of one invocation, embedded in every artifact it writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    fn to_line(&self) -> String {
        serde_json::to_string(self).expect("run config serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    run_config: RunConfig,
    report: EvalReport,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    run_config: RunConfig,
    /// Ensemble container as written by the core library.
    model: serde_json::Value,
}

fn load(data: &Path) -> Result<LabeledDataset> {
    Ok(load_dataset(data)?)
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn tokens(ds: &LabeledDataset, cfg: &PipelineConfig) -> Result<Vec<TokenSequence>> {
    let pre = cfg.preprocessor()?;
    Ok(ds.documents.iter().map(|d| pre.process(&d.text)).collect())
}

pub fn stats(data: &Path) -> Result<()> {
    let ds = load(data)?;
    println!("{}: {} documents", data.display(), ds.len());
    println!("{}", class_distribution(&ds));
    Ok(())
}

pub fn extract(data: &Path, out: &Path, cfg: PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let ds = load(data)?;
    let run = RunConfig {
        command: "extract".into(),
        dataset: data.to_path_buf(),
        output_dir: out.to_path_buf(),
        pipeline: cfg,
    };
    let pre = run.pipeline.preprocessor()?;
    let mut d = build_dictionary(&tokens(&ds, &run.pipeline)?, &run.pipeline.build_options(&pre))?;
    d.set_provenance(Some(run.to_line()));
    let path = write(out, "dictionary.tsv", d.to_tsv_string())?;
    println!("{} n-grams written to {}", d.len(), path.display());
    Ok(())
}

pub fn train(data: &Path, out: &Path, cfg: PipelineConfig) -> Result<()> {
    let ds = load(data)?;
    ds.check_trainable()?;
    let run = RunConfig {
        command: "train".into(),
        dataset: data.to_path_buf(),
        output_dir: out.to_path_buf(),
        pipeline: cfg,
    };
    let cfg = &run.pipeline;
    let pre = cfg.preprocessor()?;
    let ids: Vec<usize> = ds.documents.iter().map(|d| d.id).collect();
    let (search_seed, smote_seed) = round_seeds(cfg.seed, 1)[0];
    let fitted = fit_pipeline::<f64>(
        &tokens(&ds, cfg)?,
        &ds.labels(),
        &ids,
        cfg,
        &pre,
        search_seed,
        smote_seed,
    )?;

    let mut dictionary = fitted.dictionary;
    dictionary.set_provenance(Some(run.to_line()));
    write(out, "dictionary.tsv", dictionary.to_tsv_string())?;
    let mut tsv = Vec::new();
    fitted
        .leaderboard
        .write_tsv(&mut tsv, &[format!("run_config: {}", run.to_line())])?;
    write(out, "leaderboard.tsv", tsv)?;
    let model = ModelFile {
        run_config: run.clone(),
        model: serde_json::from_str(&fitted.ensemble.to_json()?)?,
    };
    write(out, "model.json", serde_json::to_string(&model)?)?;

    println!(
        "{} candidates evaluated; best internal weighted F1 {:.4}",
        fitted.leaderboard.len(),
        fitted.leaderboard.best().map_or(0.0, |e| e.result.score)
    );
    println!("ensemble (internal weighted F1 {:.4}):", fitted.selection.score());
    for m in &fitted.selection.members {
        println!(
            "  x{} rank {} {}",
            m.multiplicity,
            m.rank + 1,
            m.config.hyperparams.to_json()
        );
    }
    println!("artifacts written to {}", out.display());
    Ok(())
}

pub fn evaluate(data: &Path, out: &Path, cfg: PipelineConfig) -> Result<()> {
    let ds = load(data)?;
    let run = RunConfig {
        command: "evaluate".into(),
        dataset: data.to_path_buf(),
        output_dir: out.to_path_buf(),
        pipeline: cfg,
    };
    let report = run_experiment::<f64>(&ds, &run.pipeline)?;
    let table = report.render_table();
    let file = ReportFile { run_config: run, report };
    let mut json = serde_json::to_string_pretty(&file)?;
    json.push('\n');
    write(out, "report.json", json)?;
    write(out, "report.txt", &table)?;
    print!("{table}");
    Ok(())
}

pub fn report(input: &Path) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let file: ReportFile =
        serde_json::from_str(&text).with_context(|| format!("{} is not an evaluation report", input.display()))?;
    print!("{}", file.report.render_table());
    Ok(())
}

pub fn predict(model_dir: &Path, texts: &[String]) -> Result<()> {
    let dict_path = model_dir.join("dictionary.tsv");
    let dict_file = fs::File::open(&dict_path).with_context(|| format!("cannot read {}", dict_path.display()))?;
    let dictionary = NGramDictionary::read_tsv(BufReader::new(dict_file))?;
    let model_path = model_dir.join("model.json");
    let text = fs::read_to_string(&model_path).with_context(|| format!("cannot read {}", model_path.display()))?;
    let file: ModelFile = serde_json::from_str(&text)?;
    let ensemble = TrainedEnsemble64::from_json(&file.model.to_string(), dictionary.fingerprint())?;
    let cfg = &file.run_config.pipeline;
    let pre = cfg.preprocessor()?;
    let rows: Vec<_> = texts
        .iter()
        .map(|t| vectorize(&pre.process(t), &dictionary, cfg.scheme))
        .collect();
    for (label, t) in ensemble.predict(&rows)?.into_iter().zip(texts) {
        println!("{label}\t{t}");
    }
    Ok(())
}
