use std::collections::BTreeMap;
use std::path::Path;

use lcp_core::recognition::{
    calibrate_threshold, distribution_histograms, fmr_by_category, generate_embeddings, histograms_to_csv,
    load_embeddings, pair_scores, render_fmr_table, write_embeddings, Demographic, SyntheticEmbeddingSpec,
};
use lcp_core::trainer::{evaluate, generate_synthetic, read_checkpoint, train, write_checkpoint, RunConfig, Split};
use lcp_core::{
    attribute_accuracy, audit_binary, binarize, compensate_binary, consistency_enforced_accuracy, AttributeSchema,
    BinaryMatrix, Error, Result, ScoreMatrix,
};

use crate::output::{load_schema, open, to_json, write_atomic, write_or_print};
use crate::{Command, FmrArgs, MetricsMode, ScoreInput, SynthCommand, TrainArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::SchemaValidate { schema, canonical } => schema_validate(&schema, canonical.as_deref()),
        Command::Audit { input, out } => audit(&input, out.as_deref()),
        Command::Compensate { input, out } => compensate(&input, &out),
        Command::Train(args) => train_cmd(&args),
        Command::Eval { model, features, schema, threshold, scores_out, preds_out, compensated_out } => {
            let schema = load_schema(&schema)?;
            let model = read_checkpoint(open(&model)?)?;
            let features = ScoreMatrix::read_csv(open(&features)?)?;
            let (scores, preds) = evaluate(&model, &features, &schema, threshold)?;
            write_atomic(&scores_out, &csv_bytes(|w| scores.write_csv(w))?)?;
            if let Some(p) = preds_out {
                write_atomic(&p, &csv_bytes(|w| preds.write_csv(w))?)?;
            }
            if let Some(p) = compensated_out {
                let comp = compensate_binary(&schema, &scores, &preds)?;
                write_atomic(&p, &csv_bytes(|w| comp.write_csv(w))?)?;
            }
            Ok(())
        }
        Command::Metrics { schema, preds, labels, mode, out } => metrics(&schema, &preds, &labels, mode, out.as_deref()),
        Command::FmrReport(args) => fmr_report(&args),
        Command::Synth(cmd) => synth(cmd),
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn schema_validate(source: &str, canonical: Option<&Path>) -> Result<()> {
    let schema = load_schema(source)?;
    println!(
        "ok: schema `{}`, {} attributes, {} exclusion rules, {} dependency rules, {} exhaustive groups",
        schema.name(),
        schema.n_attributes(),
        schema.exclusion_rules().len(),
        schema.dependency_rules().len(),
        schema.exhaustive_groups().len()
    );
    if let Some(p) = canonical {
        write_atomic(p, schema.to_dsl().as_bytes())?;
    }
    Ok(())
}

fn read_predictions(schema: &AttributeSchema, input: &ScoreInput) -> Result<(Option<ScoreMatrix>, BinaryMatrix)> {
    if input.binary {
        let preds = BinaryMatrix::read_csv(open(&input.scores)?)?;
        preds.ensure_columns(schema.attributes())?;
        return Ok((None, preds));
    }
    let scores = ScoreMatrix::read_csv(open(&input.scores)?)?;
    scores.ensure_columns(schema.attributes())?;
    let preds = binarize(&scores, input.threshold)?;
    Ok((Some(scores), preds))
}

fn audit(input: &ScoreInput, out: Option<&Path>) -> Result<()> {
    let schema = load_schema(&input.schema)?;
    let (_, preds) = read_predictions(&schema, input)?;
    let mut report = audit_binary(&schema, &preds)?;
    report.threshold = (!input.binary).then_some(input.threshold);
    log::info!(
        "{} rows: {} incomplete, {} impossible",
        report.n_total,
        report.n_incomplete,
        report.n_impossible
    );
    write_or_print(out, &to_json(&report)?)
}

fn compensate(input: &ScoreInput, out: &Path) -> Result<()> {
    if input.binary {
        return Err(Error::Input("compensation needs raw scores to rank group members".into()));
    }
    let schema = load_schema(&input.schema)?;
    let (scores, preds) = read_predictions(&schema, input)?;
    let comp = compensate_binary(&schema, scores.as_ref().expect("scores read"), &preds)?;
    write_atomic(out, &csv_bytes(|w| comp.write_csv(w))?)
}

fn run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => std::fs::read_to_string(p)?.parse(),
        None => Ok(RunConfig::default()),
    }
}

fn train_cmd(args: &TrainArgs) -> Result<()> {
    let mut cfg = run_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    let schema = load_schema(&cfg.schema)?;
    let (data, val) = match (&args.features, &args.labels) {
        (Some(f), Some(l)) => {
            let split = Split {
                features: ScoreMatrix::read_csv(open(f)?)?,
                labels: BinaryMatrix::read_csv(open(l)?)?,
            };
            split.labels.ensure_columns(schema.attributes())?;
            (split, None)
        }
        _ => {
            let synth = generate_synthetic(&schema, &cfg.data)?;
            (synth.train, Some(synth.val))
        }
    };
    let outcome = train(&schema, &cfg.train, &data, val.as_ref())?;
    let mut ckpt = Vec::new();
    write_checkpoint(&outcome.model, &mut ckpt)?;
    write_atomic(&args.out, &ckpt)?;
    if let Some(p) = &args.log {
        let mut lines = String::new();
        for e in &outcome.log {
            lines.push_str(&serde_json::to_string(e).map_err(|e| Error::Format(e.to_string()))?);
            lines.push('\n');
        }
        write_atomic(p, lines.as_bytes())?;
    }
    if let Some(last) = outcome.log.last() {
        println!(
            "epoch {}: loss {:.6} bce {:.6} lcp {:.6} p_ex {:.4} p_d {:.4}",
            last.epoch, last.loss, last.bce, last.lcp, last.p_ex, last.p_d
        );
    }
    Ok(())
}

fn metrics(schema: &str, preds: &Path, labels: &Path, mode: MetricsMode, out: Option<&Path>) -> Result<()> {
    let schema = load_schema(schema)?;
    let preds = BinaryMatrix::read_csv(open(preds)?)?;
    let labels = BinaryMatrix::read_csv(open(labels)?)?;
    preds.ensure_columns(schema.attributes())?;
    let mut reports = Vec::new();
    if mode != MetricsMode::Enforced {
        reports.push(("plain".to_string(), attribute_accuracy(&preds, &labels)?));
    }
    if mode != MetricsMode::Plain {
        reports.push(("consistency enforced".to_string(), consistency_enforced_accuracy(&schema, &preds, &labels)?));
    }
    print!("{}", lcp_core::metrics::render_table(&reports));
    if let Some(p) = out {
        let by_name: BTreeMap<_, _> = reports.iter().map(|(k, v)| (k.as_str(), v)).collect();
        write_atomic(p, to_json(&by_name)?.as_bytes())?;
    }
    Ok(())
}

fn fmr_report(args: &FmrArgs) -> Result<()> {
    let reference = Demographic::parse(&args.reference)
        .ok_or_else(|| Error::Input(format!("unknown demographic `{}`", args.reference)))?;
    let set = load_embeddings(&args.embeddings)?.filter_high_confidence(args.min_conf)?;
    log::info!("{} records at confidence >= {}", set.len(), args.min_conf);
    let mut streams = Vec::new();
    for d in set.demographics() {
        match pair_scores(&set, d) {
            Ok(s) => streams.push(s),
            Err(Error::EmptyDemographic(tag)) if d != reference => log::warn!("skipping {tag}: fewer than 2 records"),
            Err(e) => return Err(e),
        }
    }
    let reference_stream = streams
        .iter()
        .find(|s| s.demographic == reference)
        .ok_or_else(|| Error::EmptyDemographic(reference.tag()))?;
    let calibration = calibrate_threshold(&reference_stream.impostor_scores(), args.target_fmr)?;
    let report = fmr_by_category(&streams, &calibration, reference);
    let table = render_fmr_table(&report);
    print!("{table}");
    if let Some(p) = &args.table {
        write_atomic(p, table.as_bytes())?;
    }
    if let Some(p) = &args.out {
        write_atomic(p, to_json(&report)?.as_bytes())?;
    }
    if let Some(p) = &args.histograms {
        let hist = distribution_histograms(&streams, args.bins)?;
        write_atomic(p, histograms_to_csv(&hist).as_bytes())?;
    }
    Ok(())
}

fn synth(cmd: SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::Data { config, out_dir } => {
            let cfg = run_config(config.as_deref())?;
            let schema = load_schema(&cfg.schema)?;
            let data = generate_synthetic(&schema, &cfg.data)?;
            std::fs::create_dir_all(&out_dir)?;
            for (name, split) in [("train", &data.train), ("val", &data.val), ("test", &data.test)] {
                write_atomic(&out_dir.join(format!("{name}_features.csv")), &csv_bytes(|w| split.features.write_csv(w))?)?;
                write_atomic(&out_dir.join(format!("{name}_labels.csv")), &csv_bytes(|w| split.labels.write_csv(w))?)?;
            }
            println!("wrote {} rows ({} rejected draws) to {}", data.train.labels.n_rows() + data.val.labels.n_rows() + data.test.labels.n_rows(), data.rejected_draws, out_dir.display());
            Ok(())
        }
        SynthCommand::Embeddings { out, identities, images, dim, demographics, seed } => {
            let spec = SyntheticEmbeddingSpec {
                n_identities: identities,
                images_per_identity: images,
                dim,
                n_demographics: demographics,
                seed,
                ..Default::default()
            };
            let set = generate_embeddings(&spec)?;
            let mut buf = Vec::new();
            write_embeddings(&set, &mut buf)?;
            write_atomic(&out, &buf)
        }
    }
}
