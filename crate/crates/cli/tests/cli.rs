mod common;

use std::fs;

use common::{ok, run, write_fixture, SMALL};
use glace::eval::{read_embeddings, EmbeddingTable, EvalReport};
use glace::Executor;

fn train_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["train", "--edges", "edges.txt", "--attrs", "attrs.txt"];
    v.extend(SMALL);
    v.extend(extra);
    v
}

#[test]
fn train_smoke_writes_checkpoint_and_log() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 20, 1);
    ok(&train_args(&["--mode", "second", "--kind", "glace", "--out", "run"]), dir.path());
    let run = dir.path().join("run");
    assert!(run.join("model.ckpt").metadata().unwrap().len() > 0);
    let log = fs::read_to_string(run.join("train_log.tsv")).unwrap();
    assert_eq!(log.lines().next(), Some("iter\tval_auc\telapsed_sec"));
    assert!(log.lines().count() > 1);
    for f in ["split.txt", "train.manifest", "id_map.tsv", "train_summary.txt"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
}

#[test]
fn same_seed_same_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 15, 2);
    ok(&train_args(&["--seed", "7", "--out", "a"]), dir.path());
    ok(&train_args(&["--seed", "7", "--out", "b"]), dir.path());
    ok(&train_args(&["--seed", "8", "--out", "c"]), dir.path());
    let read = |d: &str| fs::read(dir.path().join(d).join("model.ckpt")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn missing_attribute_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 10, 3);
    let out = run(&["train", "--edges", "edges.txt", "--attrs", "nowhere.attrs", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.attrs"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 10, 4);
    let code = |args: &[&str]| run(args, dir.path()).status.code();
    assert_eq!(code(&train_args(&["--kind", "lace", "--export-sigma", "--out", "x"])), Some(1));
    assert_eq!(code(&["train", "--no-such-flag"]), Some(1));
    assert_eq!(code(&train_args(&["--iters", "0", "--out", "x"])), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
    fs::write(dir.path().join("bad.txt"), "v0 v1 -2.0\n").unwrap();
    assert_eq!(code(&["train", "--edges", "bad.txt", "--attrs", "attrs.txt", "--out", "x"]), Some(2));
    let diverging = ["train", "--edges", "edges.txt", "--attrs", "attrs.txt", "--dim", "4", "--hidden", "8", "--lr", "1e300", "--out", "x"];
    assert_eq!(code(&diverging), Some(3));
}

#[test]
fn link_prediction_single_and_concat() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 20, 5);
    ok(&train_args(&["--out", "m1", "--seed", "3"]), dir.path());
    ok(&train_args(&["--out", "m2", "--seed", "3", "--mode", "second", "--split-manifest", "m1/split.txt"]), dir.path());
    let base = ["eval-lp", "--edges", "edges.txt", "--attrs", "attrs.txt", "--split-manifest", "m1/split.txt"];
    let single = EvalReport::from_kv(&ok(&[&base[..], &["--checkpoint", "m1/model.ckpt", "--out", "e1"]].concat(), dir.path())).unwrap();
    let selfcat =
        EvalReport::from_kv(&ok(&[&base[..], &["--concat", "m1/model.ckpt", "m1/model.ckpt", "--out", "e2"]].concat(), dir.path()))
            .unwrap();
    assert_eq!((single.auc, single.ap), (selfcat.auc, selfcat.ap));
    let both =
        EvalReport::from_kv(&ok(&[&base[..], &["--concat", "m1/model.ckpt", "m2/model.ckpt", "--out", "e3"]].concat(), dir.path()))
            .unwrap();
    assert!(both.auc.unwrap() > 0.5);
    assert!(dir.path().join("e3/eval-lp.manifest").exists());
}

#[test]
fn concat_rejects_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 12, 6);
    ok(&train_args(&["--out", "a"]), dir.path());
    ok(
        &["train", "--edges", "edges.txt", "--attrs", "attrs.txt", "--dim", "5", "--hidden", "8", "--iters", "20", "--split-manifest", "a/split.txt", "--out", "b"],
        dir.path(),
    );
    let out = run(
        &["eval-lp", "--edges", "edges.txt", "--attrs", "attrs.txt", "--split-manifest", "a/split.txt", "--concat", "a/model.ckpt", "b/model.ckpt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classification_sweep_rows_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 20, 7);
    ok(&train_args(&["--out", "m"]), dir.path());
    let args = ["eval-nc", "--edges", "edges.txt", "--attrs", "attrs.txt", "--labels", "labels.txt", "--checkpoint", "m/model.ckpt", "--seed", "4"];
    let a = ok(&[&args[..], &["--out", "a"]].concat(), dir.path());
    let b = ok(&[&args[..], &["--out", "b"]].concat(), dir.path());
    let ra = EvalReport::from_kv(&a).unwrap();
    assert_eq!(ra.f1.len(), 9);
    assert_eq!(ra, EvalReport::from_kv(&b).unwrap());
    // the block indicator attribute separates the labels
    let raw = ok(
        &["eval-nc", "--edges", "edges.txt", "--attrs", "attrs.txt", "--labels", "labels.txt", "--train-frac", "0.5", "--out", "raw"],
        dir.path(),
    );
    let rr = EvalReport::from_kv(&raw).unwrap();
    assert_eq!(rr.f1.len(), 1);
    assert_eq!(rr.f1[0].micro, 1.0);
}

#[test]
fn inductive_split_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 20, 8);
    let mut one_shot = vec!["eval-inductive", "--edges", "edges.txt", "--attrs", "attrs.txt", "--hide-frac", "0.2", "--out", "ind"];
    one_shot.extend(SMALL);
    let first = EvalReport::from_kv(&ok(&one_shot, dir.path())).unwrap();
    let again = EvalReport::from_kv(&ok(
        &[
            "eval-inductive", "--edges", "edges.txt", "--attrs", "attrs.txt", "--checkpoint", "ind/model.ckpt", "--split-manifest",
            "ind/split.txt", "--out", "ind2",
        ],
        dir.path(),
    ))
    .unwrap();
    assert_eq!((first.auc, first.ap), (again.auc, again.ap));

    ok(&train_args(&["--hide-frac", "0.2", "--out", "t"]), dir.path());
    assert_eq!(fs::read(dir.path().join("t/split.txt")).unwrap(), fs::read(dir.path().join("ind/split.txt")).unwrap());
    assert_eq!(fs::read(dir.path().join("t/model.ckpt")).unwrap(), fs::read(dir.path().join("ind/model.ckpt")).unwrap());
}

#[test]
fn export_shape_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 10, 9);
    ok(&train_args(&["--out", "m"]), dir.path());
    ok(&["export", "--edges", "edges.txt", "--attrs", "attrs.txt", "--checkpoint", "m/model.ckpt", "--out", "emb/e.tsv"], dir.path());
    let path = dir.path().join("emb/e.tsv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(header, ["node_id", "mu_1", "mu_2", "mu_3", "mu_4", "sigma_1", "sigma_2", "sigma_3", "sigma_4"]);
    assert_eq!(lines.count(), 20);

    let model = glace::checkpoint::read_checkpoint(&dir.path().join("m/model.ckpt")).unwrap();
    let g = glace::graph::load_graph(&dir.path().join("edges.txt"), &dir.path().join("attrs.txt"), false).unwrap();
    let table = EmbeddingTable::from_model(&model, g.attributes(), &Executor::sequential()).unwrap();
    let back = read_embeddings(&path).unwrap();
    assert_eq!(back.ids, *g.ids());
    for i in 0..20 {
        for j in 0..20 {
            assert!((back.table.score(i, j) - table.score(i, j)).abs() < 1e-9);
        }
    }

    ok(&train_args(&["--kind", "lace", "--out", "l"]), dir.path());
    ok(&["export", "--edges", "edges.txt", "--attrs", "attrs.txt", "--checkpoint", "l/model.ckpt", "--out", "l.tsv"], dir.path());
    let lace = fs::read_to_string(dir.path().join("l.tsv")).unwrap();
    assert!(!lace.contains("sigma_"));
    let out = run(&["export", "--edges", "edges.txt", "--attrs", "attrs.txt", "--checkpoint", "l/model.ckpt", "--export-sigma", "--out", "x.tsv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flag_beats_config_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 10, 10);
    fs::write(dir.path().join("run.cfg"), "dim = 3\nhidden = 5\nconfig.negatives = 2\niters = 10\n").unwrap();
    ok(&["train", "--edges", "edges.txt", "--attrs", "attrs.txt", "--config", "run.cfg", "--dim", "6", "--out", "p"], dir.path());
    let manifest = fs::read_to_string(dir.path().join("p/train.manifest")).unwrap();
    for expect in ["config.dim=6", "config.hidden=5", "config.negatives=2", "config.iters=10", "config.batch=512", "config.patience=10"] {
        assert!(manifest.lines().any(|l| l == expect), "{expect} not in manifest");
    }
    let model = glace::checkpoint::read_checkpoint(&dir.path().join("p/model.ckpt")).unwrap();
    assert_eq!((model.main.embed_dim, model.main.hidden_dim), (6, 5));
}

#[test]
fn replay_reproduces_train_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 15, 11);
    ok(&train_args(&["--out", "r1", "--seed", "5"]), dir.path());
    ok(&["replay", "r1/train.manifest", "--out", "r2"], dir.path());
    assert_eq!(fs::read(dir.path().join("r1/model.ckpt")).unwrap(), fs::read(dir.path().join("r2/model.ckpt")).unwrap());

    ok(&["eval-lp", "--edges", "edges.txt", "--attrs", "attrs.txt", "--checkpoint", "r1/model.ckpt", "--split-manifest", "r1/split.txt", "--out", "e1"], dir.path());
    ok(&["replay", "e1/eval-lp.manifest", "--out", "e2"], dir.path());
    assert_eq!(
        fs::read_to_string(dir.path().join("e1/eval-lp.report")).unwrap(),
        fs::read_to_string(dir.path().join("e2/eval-lp.report")).unwrap()
    );

    fs::write(dir.path().join("edges.txt"), "v0 v1\n").unwrap();
    assert_eq!(run(&["replay", "r1/train.manifest", "--out", "r3"], dir.path()).status.code(), Some(2));
}
