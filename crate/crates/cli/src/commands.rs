use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;

use glace::checkpoint::{read_checkpoint, write_checkpoint};
use glace::eval::{
    concat_scores, embedding_features, export_embeddings, inductive_link_prediction, link_prediction, link_prediction_model,
    node_classification, ClassifyConfig, EmbeddingTable, EvalReport, F1Row, FeatureSet, Task,
};
use glace::graph::{
    hide_nodes, load_graph, load_labels, read_split_manifest, split_edges, split_train_val, write_id_map, write_split_manifest,
    InductiveSplit, SplitManifest,
};
use glace::trainer::{train_with, TrainOptions, ValCheck};
use glace::{seed, AttributedGraph, EdgeSplit, Executor, Kind, ModelParams, Pair, TrainConfig, TrainReport};

use crate::args::{EvalInductiveCmd, EvalLpCmd, EvalNcCmd, ExportCmd, GraphArgs, TrainArgs, TrainCmd};
use crate::manifest::RunManifest;
use crate::settings::Resolver;
use crate::UsageError;

const DEFAULT_OUT: &str = "glace-out";
/// Settings that do not influence results and stay out of report snapshots.
const NON_RESULT_KEYS: [&str; 2] = ["out", "workers"];

struct Loaded {
    graph: AttributedGraph,
    edges: PathBuf,
    attrs: PathBuf,
}

fn load(args: &GraphArgs, r: &mut Resolver) -> Result<Loaded> {
    let edges = r.required_path("edges", args.edges.as_ref())?;
    let attrs = r.required_path("attrs", args.attrs.as_ref())?;
    let directed = r.get("directed", args.directed, false)?;
    let graph = load_graph(&edges, &attrs, directed)?;
    info!("loaded {} nodes, {} edges, {} attributes", graph.num_nodes(), graph.num_edges(), graph.attr_dim());
    Ok(Loaded { graph, edges, attrs })
}

fn out_dir(r: &mut Resolver, flag: Option<&PathBuf>) -> Result<PathBuf> {
    let dir = r.path("out", flag)?.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    r.record("out", dir.display());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn executor(workers: usize) -> Result<Executor> {
    Executor::with_workers(workers).map_err(|e| UsageError(e.to_string()).into())
}

struct Fractions {
    test: f64,
    val: f64,
}

fn train_settings(t: &TrainArgs, r: &mut Resolver) -> Result<(TrainConfig, Fractions)> {
    let d = TrainConfig::default();
    let kl = r.get("kl", t.kl.clone(), "auto".to_string())?;
    let symmetric_kl = match kl.as_str() {
        "auto" => None,
        "symmetric" => Some(true),
        "asymmetric" => Some(false),
        other => bail!(UsageError(format!("--kl must be auto, symmetric or asymmetric, not {other:?}"))),
    };
    let cfg = TrainConfig {
        mode: r.get("mode", t.mode, d.mode)?,
        kind: r.get("kind", t.kind, d.kind)?,
        embed_dim: r.get("dim", t.dim, d.embed_dim)?,
        hidden_dim: r.get("hidden", t.hidden, d.hidden_dim)?,
        negatives: r.get("negatives", t.negatives, d.negatives)?,
        batch_size: r.get("batch", t.batch, d.batch_size)?,
        learning_rate: r.get("lr", t.lr, d.learning_rate)?,
        max_iters: r.get("iters", t.iters, d.max_iters)?,
        patience: r.get("patience", t.patience, d.patience)?,
        val_check_every: r.get("val_every", t.val_every, d.val_check_every)?,
        seed: r.get("seed", t.seed, d.seed)?,
        symmetric_kl,
        hidden_activation: r.get("activation", t.activation, d.hidden_activation)?,
        workers: r.get("workers", t.workers, d.workers)?,
    };
    cfg.validate()?;
    let fr = Fractions { test: r.get("test_frac", t.test_frac, 0.2)?, val: r.get("val_frac", t.val_frac, 0.05)? };
    Ok((cfg, fr))
}

/// The split to train on: loaded from `path` when it exists, generated
/// (and written to `path`) otherwise.
enum Prepared {
    Transductive(EdgeSplit),
    Inductive(Box<InductiveSplit>, EdgeSplit),
}

fn prepare_split(g: &AttributedGraph, path: &Path, hide_frac: Option<f64>, fr: &Fractions, seed_: u64) -> Result<(Prepared, bool)> {
    if path.exists() {
        let prepared = match (read_split_manifest(path, g)?, hide_frac) {
            (SplitManifest::Edges(s), None) => Prepared::Transductive(s),
            (SplitManifest::Edges(_), Some(_)) => {
                bail!(UsageError(format!("{} holds an edge split but --hide-frac asks for hidden nodes", path.display())))
            }
            (SplitManifest::Inductive(ind), _) => {
                let s = split_train_val(&ind.visible_graph, fr.val, seed_)?;
                Prepared::Inductive(Box::new(ind), s)
            }
        };
        return Ok((prepared, true));
    }
    let prepared = match hide_frac {
        None => {
            let s = split_edges(g, fr.test, fr.val, seed_)?;
            write_split_manifest(path, g, &SplitManifest::Edges(s.clone()))?;
            Prepared::Transductive(s)
        }
        Some(f) => {
            if !(f > 0.0 && f < 1.0) {
                bail!(UsageError(format!("--hide-frac {f} must lie in (0, 1)")));
            }
            let ind = hide_nodes(g, f, seed_)?;
            let s = split_train_val(&ind.visible_graph, fr.val, seed_)?;
            write_split_manifest(path, g, &SplitManifest::Inductive(ind.clone()))?;
            Prepared::Inductive(Box::new(ind), s)
        }
    };
    Ok((prepared, false))
}

fn run_training(
    graph: &AttributedGraph,
    split: &EdgeSplit,
    cfg: &TrainConfig,
    resume: Option<&Path>,
    log_path: &Path,
) -> Result<(ModelParams, TrainReport)> {
    let initial = resume.map(read_checkpoint).transpose()?;
    let mut log = BufWriter::new(File::create(log_path).with_context(|| format!("creating {}", log_path.display()))?);
    writeln!(log, "iter\tval_auc\telapsed_sec")?;
    let mut log_err = None;
    let on_check = |c: &ValCheck| {
        info!("iteration {:>5}  val auc {:.4}  {:.1}s", c.iteration, c.auc, c.elapsed_sec);
        if let Err(e) = writeln!(log, "{}\t{}\t{:.3}", c.iteration, c.auc, c.elapsed_sec) {
            log_err.get_or_insert(e);
        }
    };
    let opts = TrainOptions { initial, on_check: Some(Box::new(on_check)) };
    let result = train_with(graph, split, cfg, opts)?;
    if let Some(e) = log_err {
        return Err(e).with_context(|| format!("writing {}", log_path.display()));
    }
    log.flush()?;
    Ok(result)
}

fn summary_text(r: &TrainReport) -> String {
    let mut s = format!("iterations_run={}\nbest_iteration={}\n", r.iterations_run, r.best_iteration);
    if let Some(a) = r.best_val_auc {
        s += &format!("best_val_auc={a}\n");
    }
    if let Some(l) = r.loss_history.last() {
        s += &format!("final_loss={l}\n");
    }
    s
}

fn snapshot(r: &Resolver) -> std::collections::BTreeMap<String, String> {
    r.resolved().iter().filter(|(k, _)| !NON_RESULT_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn emit_report(report: &EvalReport, path: &Path) -> Result<()> {
    report.validate()?;
    let text = report.to_kv();
    print!("{text}");
    fs::write(path, &text).with_context(|| format!("writing {}", path.display()))
}

fn finish(mut manifest: RunManifest, start: Instant, path: &Path) -> Result<()> {
    manifest.wall_clock_sec = start.elapsed().as_secs_f64();
    manifest.write(path)?;
    info!("manifest written to {}", path.display());
    Ok(())
}

fn check_lace_sigma(kind: Kind, export_sigma: bool) -> Result<()> {
    if export_sigma && kind == Kind::Lace {
        bail!(UsageError("--export-sigma conflicts with --kind lace: point embeddings have no variances".into()));
    }
    Ok(())
}

pub fn train(cmd: &TrainCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(cmd.graph.config.as_deref())?;
    let (cfg, fr) = train_settings(&cmd.train, &mut r)?;
    let export_sigma = r.get("export_sigma", cmd.export_sigma.then_some(true), false)?;
    check_lace_sigma(cfg.kind, export_sigma)?;
    let data = load(&cmd.graph, &mut r)?;
    let out = out_dir(&mut r, cmd.out.as_ref())?;
    let hide_frac = r.opt("hide_frac", cmd.hide_frac)?;
    let split_path = r.path("split_manifest", cmd.split_manifest.as_ref())?.unwrap_or_else(|| out.join("split.txt"));
    r.record("split_manifest", split_path.display());
    let resume = r.path("resume", cmd.resume.as_ref())?;
    r.warn_unused();

    let (prepared, loaded) = prepare_split(&data.graph, &split_path, hide_frac, &fr, cfg.seed)?;
    let (train_graph, split) = match &prepared {
        Prepared::Transductive(s) => (&data.graph, s),
        Prepared::Inductive(ind, s) => (&ind.visible_graph, s),
    };
    let ckpt = out.join("model.ckpt");
    let log_path = out.join("train_log.tsv");
    let (model, report) = run_training(train_graph, split, &cfg, resume.as_deref(), &log_path)?;
    write_checkpoint(&ckpt, &model)?;
    let summary = out.join("train_summary.txt");
    fs::write(&summary, summary_text(&report))?;
    let id_map = out.join("id_map.tsv");
    write_id_map(data.graph.ids(), &id_map)?;
    println!(
        "trained {} iterations (best at {}), val auc {}",
        report.iterations_run,
        report.best_iteration,
        report.best_val_auc.map_or("n/a".to_string(), |a| format!("{a:.4}"))
    );

    let mut manifest = RunManifest::new("train", cfg.seed, r.resolved().clone());
    manifest.add_input("edges", &data.edges)?;
    manifest.add_input("attrs", &data.attrs)?;
    if loaded {
        manifest.add_input("split_manifest", &split_path)?;
    } else {
        manifest.add_output("split_manifest", &split_path);
    }
    if let Some(p) = &resume {
        manifest.add_input("resume", p)?;
    }
    if export_sigma {
        let path = out.join("embeddings.tsv");
        let table = EmbeddingTable::from_model(&model, data.graph.attributes(), &executor(cfg.workers)?)?;
        export_embeddings(&table, data.graph.ids(), true, &path)?;
        manifest.add_output("embeddings", &path);
    }
    for (name, p) in [("checkpoint", &ckpt), ("train_log", &log_path), ("summary", &summary), ("id_map", &id_map)] {
        manifest.add_output(name, p);
    }
    finish(manifest, start, &out.join("train.manifest"))
}

fn read_models(paths: &[PathBuf], g: &AttributedGraph) -> Result<Vec<ModelParams>> {
    let models = paths.iter().map(|p| read_checkpoint(p)).collect::<glace::Result<Vec<_>>>()?;
    for m in &models {
        if m.attr_dim() != g.attr_dim() {
            return Err(glace::Error::DimensionMismatch { expected: g.attr_dim(), got: m.attr_dim() }.into());
        }
        if m.embed_dim() != models[0].embed_dim() {
            return Err(glace::Error::DimensionMismatch { expected: models[0].embed_dim(), got: m.embed_dim() }.into());
        }
    }
    Ok(models)
}

pub fn eval_lp(cmd: &EvalLpCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(cmd.graph.config.as_deref())?;
    let data = load(&cmd.graph, &mut r)?;
    let workers = r.get("workers", cmd.workers, 1)?;
    let exec = executor(workers)?;
    let split_path = r.required_path("split_manifest", Some(&cmd.split_manifest))?;
    let ckpts: Vec<PathBuf> = match (&cmd.checkpoint, &cmd.concat) {
        (Some(c), _) => {
            r.record("checkpoint", c.display());
            vec![c.clone()]
        }
        (None, Some(pair)) => {
            r.record("concat", pair.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("\t"));
            pair.clone()
        }
        (None, None) => bail!(UsageError("--checkpoint or --concat is required".into())),
    };
    let normalize = !r.get("no_normalize", cmd.no_normalize.then_some(true), false)?;
    let use_val = r.get("validation", cmd.validation.then_some(true), false)?;
    let out = out_dir(&mut r, cmd.out.as_ref())?;
    r.warn_unused();

    let SplitManifest::Edges(split) = read_split_manifest(&split_path, &data.graph)? else {
        bail!(UsageError(format!("{} is an inductive split; use eval-inductive", split_path.display())));
    };
    let models = read_models(&ckpts, &data.graph)?;
    let (pos_edges, neg) = if use_val { (&split.val_pos, &split.val_neg) } else { (&split.test_pos, &split.test_neg) };
    let pos: Vec<Pair> = pos_edges.iter().map(|e| e.pair()).collect();
    let attrs = data.graph.attributes();
    let (auc, ap) = if models.len() == 1 {
        link_prediction_model(&models[0], attrs, &pos, neg, &exec)?
    } else {
        let refs: Vec<&ModelParams> = models.iter().collect();
        let (p, n) = concat_scores(&refs, attrs, &pos, neg, normalize, &exec)?;
        link_prediction(&p, &n)?
    };

    let mut report = EvalReport::new(Task::LinkPrediction, split.seed).with_link_metrics(auc, ap);
    report.config = snapshot(&r);
    let report_path = out.join("eval-lp.report");
    emit_report(&report, &report_path)?;

    let mut manifest = RunManifest::new("eval-lp", split.seed, r.resolved().clone());
    manifest.add_input("edges", &data.edges)?;
    manifest.add_input("attrs", &data.attrs)?;
    manifest.add_input("split_manifest", &split_path)?;
    for (k, c) in ckpts.iter().enumerate() {
        manifest.add_input(&format!("checkpoint_{k}"), c)?;
    }
    manifest.add_output("report", &report_path);
    finish(manifest, start, &out.join("eval-lp.manifest"))
}

/// `0.3` or `start:stop:step`, rounded to avoid accumulated float drift.
pub fn parse_fractions(spec: &str) -> Result<Vec<f64>> {
    let bad = || UsageError(format!("--train-frac {spec:?} is neither a number nor start:stop:step"));
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let fracs = match parts[..] {
        [f] => vec![f],
        [a, b, step] if step > 0.0 && b >= a => {
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9).collect()
        }
        _ => bail!(bad()),
    };
    if let Some(f) = fracs.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        bail!(UsageError(format!("training fraction {f} must lie in (0, 1)")));
    }
    Ok(fracs)
}

pub fn eval_nc(cmd: &EvalNcCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(cmd.graph.config.as_deref())?;
    let data = load(&cmd.graph, &mut r)?;
    let labels_path = r.required_path("labels", cmd.labels.as_ref())?;
    let checkpoint = r.path("checkpoint", cmd.checkpoint.as_ref())?;
    let frac_spec = r.get("train_frac", Some(cmd.train_frac.clone()), String::new())?;
    let fracs = parse_fractions(&frac_spec)?;
    let trials = r.get("trials", cmd.trials, glace::eval::DEFAULT_TRIALS)?;
    let with_sigma = r.get("with_sigma", cmd.with_sigma.then_some(true), false)?;
    let seed_ = r.get("seed", cmd.seed, 0)?;
    let workers = r.get("workers", cmd.workers, 1)?;
    let exec = executor(workers)?;
    let out = out_dir(&mut r, cmd.out.as_ref())?;
    r.warn_unused();

    let labels = load_labels(&labels_path, data.graph.ids())?;
    let features = match &checkpoint {
        Some(c) => {
            let model = read_models(std::slice::from_ref(c), &data.graph)?.remove(0);
            if with_sigma && model.kind == Kind::Lace {
                bail!(UsageError("--with-sigma needs Gaussian embeddings, the checkpoint is a point model".into()));
            }
            let table = EmbeddingTable::from_model(&model, data.graph.attributes(), &exec)?;
            embedding_features(&table, if with_sigma { FeatureSet::MuLogSigma } else { FeatureSet::Mu })
        }
        None => data.graph.attributes().to_dense(),
    };

    let mut report = EvalReport::new(Task::NodeClassification, seed_);
    for &f in &fracs {
        let cfg = ClassifyConfig { trials, ..ClassifyConfig::new(f, seed::derive(seed_, "eval-trials")) };
        let s = node_classification(&features, &labels, &cfg, &exec)?;
        info!("train_frac {f}: micro {:.4} macro {:.4}", s.micro, s.macro_);
        report.f1.push(F1Row { train_frac: f, micro: s.micro, macro_: s.macro_ });
    }
    report.config = snapshot(&r);
    let report_path = out.join("eval-nc.report");
    emit_report(&report, &report_path)?;

    let mut manifest = RunManifest::new("eval-nc", seed_, r.resolved().clone());
    manifest.add_input("edges", &data.edges)?;
    manifest.add_input("attrs", &data.attrs)?;
    manifest.add_input("labels", &labels_path)?;
    if let Some(c) = &checkpoint {
        manifest.add_input("checkpoint", c)?;
    }
    manifest.add_output("report", &report_path);
    finish(manifest, start, &out.join("eval-nc.manifest"))
}

pub fn eval_inductive(cmd: &EvalInductiveCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(cmd.graph.config.as_deref())?;
    let data = load(&cmd.graph, &mut r)?;
    let out = out_dir(&mut r, cmd.out.as_ref())?;
    let checkpoint = r.path("checkpoint", cmd.checkpoint.as_ref())?;
    let mut manifest_inputs: Vec<(&str, PathBuf)> = vec![("edges", data.edges.clone()), ("attrs", data.attrs.clone())];
    let mut outputs: Vec<(&str, PathBuf)> = Vec::new();

    let (model, ind, seed_, workers) = match checkpoint {
        Some(ckpt) => {
            let split_path = r.required_path("split_manifest", cmd.split_manifest.as_ref())?;
            let workers = r.get("workers", cmd.train.workers, 1)?;
            r.warn_unused();
            let SplitManifest::Inductive(ind) = read_split_manifest(&split_path, &data.graph)? else {
                bail!(UsageError(format!("{} is not an inductive split", split_path.display())));
            };
            let model = read_models(std::slice::from_ref(&ckpt), &data.graph)?.remove(0);
            manifest_inputs.push(("checkpoint", ckpt));
            manifest_inputs.push(("split_manifest", split_path));
            let s = ind.seed;
            (model, ind, s, workers)
        }
        None => {
            let (cfg, fr) = train_settings(&cmd.train, &mut r)?;
            let hide = r.get("hide_frac", cmd.hide_frac, 0.1)?;
            let split_path = r.path("split_manifest", cmd.split_manifest.as_ref())?.unwrap_or_else(|| out.join("split.txt"));
            r.record("split_manifest", split_path.display());
            r.warn_unused();
            let (prepared, loaded) = prepare_split(&data.graph, &split_path, Some(hide), &fr, cfg.seed)?;
            let Prepared::Inductive(ind, split) = prepared else { unreachable!("hidden-node split requested") };
            if loaded {
                manifest_inputs.push(("split_manifest", split_path));
            } else {
                outputs.push(("split_manifest", split_path));
            }
            let log_path = out.join("train_log.tsv");
            let (model, _) = run_training(&ind.visible_graph, &split, &cfg, None, &log_path)?;
            let ckpt = out.join("model.ckpt");
            write_checkpoint(&ckpt, &model)?;
            outputs.push(("checkpoint", ckpt));
            outputs.push(("train_log", log_path));
            (model, *ind, cfg.seed, cfg.workers)
        }
    };

    let (auc, ap) = inductive_link_prediction(&model, &ind, &executor(workers)?)?;
    let mut report = EvalReport::new(Task::Inductive, seed_).with_link_metrics(auc, ap);
    report.config = snapshot(&r);
    report.config.insert("hidden_nodes".into(), ind.hidden_nodes.len().to_string());
    let report_path = out.join("eval-inductive.report");
    emit_report(&report, &report_path)?;

    let mut manifest = RunManifest::new("eval-inductive", seed_, r.resolved().clone());
    for (name, p) in &manifest_inputs {
        manifest.add_input(name, p)?;
    }
    for (name, p) in &outputs {
        manifest.add_output(name, p);
    }
    manifest.add_output("report", &report_path);
    finish(manifest, start, &out.join("eval-inductive.manifest"))
}

pub fn export(cmd: &ExportCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(cmd.graph.config.as_deref())?;
    let data = load(&cmd.graph, &mut r)?;
    r.record("checkpoint", cmd.checkpoint.display());
    r.record("out", cmd.out.display());
    let model = read_models(std::slice::from_ref(&cmd.checkpoint), &data.graph)?.remove(0);
    check_lace_sigma(model.kind, cmd.export_sigma)?;
    let include_sigma = model.kind == Kind::Glace && !cmd.no_sigma;
    r.record("export_sigma", cmd.export_sigma);
    r.record("no_sigma", cmd.no_sigma);
    r.warn_unused();

    let table = EmbeddingTable::from_model(&model, data.graph.attributes(), &Executor::sequential())?;
    if let Some(parent) = cmd.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    export_embeddings(&table, data.graph.ids(), include_sigma, &cmd.out)?;
    println!("wrote {} embeddings to {}", table.len(), cmd.out.display());

    let mut manifest = RunManifest::new("export", model.seed, r.resolved().clone());
    manifest.add_input("edges", &data.edges)?;
    manifest.add_input("attrs", &data.attrs)?;
    manifest.add_input("checkpoint", &cmd.checkpoint)?;
    manifest.add_output("embeddings", &cmd.out);
    let mut mpath = cmd.out.clone().into_os_string();
    mpath.push(".manifest");
    finish(manifest, start, Path::new(&mpath))
}
