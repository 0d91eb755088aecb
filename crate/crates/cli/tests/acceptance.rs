//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.
//!
//! Criterion 1 also checks the public benchmark distributions when
//! `KGFORGE_BENCHMARKS` points at a directory holding them (subdirectories
//! named FB15k237, WN18RR, FB13, WN11, or their hyphenated spellings).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use kgforge_core::enrich::structure::{
    augment_training_set, extract_structure, match_score, synthesize_triples, top_k_pairs, KeywordSet,
    StructureConfig,
};
use kgforge_core::eval::{
    ab_compare, link_prediction, rank_entities, rank_from_scores, train, EmbeddingModel, FilterSetting,
    ModelKind, Norm, Query, RankMetrics, TrainConfig,
};
use kgforge_core::kg::{EntityId, KnowledgeGraph, LoadMode, SplitKind};
use kgforge_core::llm::{Gateway, GenerationParams, ReplayBackend};
use kgforge_core::prompt::{
    render_entity_prompt, render_keyword_prompt, render_relation_prompt, RelationMode, TemplateSet,
};
use kgforge_core::synthetic::{alias_dataset, alias_fixture, alias_pairs, toy_dataset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:.2?}, limit {limit:?}"))
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kgforge"));
    c.env_remove("LLM_MODEL");
    c
}

fn run_ok(cmd: &mut Command) -> Result<String, String> {
    let o = cmd.output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{:?} failed: {}", cmd, String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn parse_stats(text: &str) -> Result<Vec<usize>, String> {
    text.lines()
        .map(|l| {
            l.split('\t')
                .nth(1)
                .and_then(|n| n.trim().parse().ok())
                .ok_or_else(|| format!("bad stats line {l:?}"))
        })
        .collect()
}

fn c1_dataset_fidelity() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("toy");
    run_ok(bin().args(["fixtures", "toy", "--out"]).arg(&root))?;
    let stats = parse_stats(&run_ok(bin().arg("stats").arg(&root))?)?;
    ensure(stats == [8, 3, 12, 2, 2], || format!("toy stats {stats:?}"))?;

    let expected: [(&[&str], [usize; 5]); 4] = [
        (&["FB15k237", "FB15k-237", "fb15k237", "fb15k-237"], [14541, 237, 272115, 17535, 20466]),
        (&["WN18RR", "wn18rr"], [40943, 11, 86835, 3034, 3134]),
        (&["FB13", "fb13"], [75043, 13, 316232, 5908, 23733]),
        (&["WN11", "wn11"], [38696, 11, 112581, 2609, 10544]),
    ];
    let mut checked = Vec::new();
    if let Some(base) = std::env::var_os("KGFORGE_BENCHMARKS").map(PathBuf::from) {
        for (names, want) in expected {
            let Some(root) = names.iter().map(|n| base.join(n)).find(|p| p.is_dir()) else {
                continue;
            };
            let started = Instant::now();
            let got = parse_stats(&run_ok(bin().arg("stats").arg(&root))?)?;
            within(started.elapsed(), Duration::from_secs(10), names[0])?;
            ensure(got == want, || format!("{} stats {got:?}, expected {want:?}", names[0]))?;
            checked.push(names[0]);
        }
    }
    Ok(if checked.is_empty() {
        "toy (8, 3, 12, 2, 2); public benchmarks not supplied".into()
    } else {
        format!("toy (8, 3, 12, 2, 2); {} match the published counts", checked.join(", "))
    })
}

fn c2_template_fidelity() -> Check {
    let names = ["Michael Bay", "Transformers: Dark of the Moon", "Ω-3 fatty acid"];
    let relations = ["produced by", "/film/film/release_region", "hypernym"];
    let descriptions = [
        "American film director and producer.",
        "2011 science fiction action film",
        "a chemical compound; see also: {braces}",
    ];
    let mut n = 0;
    for name in names {
        let want = format!("Please provide all information about {name}. Give the rationale before answering:");
        let got = render_entity_prompt(name).map_err(|e| e.to_string())?.text;
        ensure(got == want, || format!("entity prompt {got:?}"))?;
        n += 1;
    }
    for rel in relations {
        let wants = [
            (RelationMode::Global, format!("Please provide an explanation of the significance of the relation {rel} in a knowledge graph with one sentence:")),
            (RelationMode::Local, format!("Please provide an explanation of the meaning of the triplet (head entity, {rel}, tail entity) and rephrase it into a sentence:")),
            (RelationMode::Reverse, format!("Please convert the relation {rel} into a verb form and provide a statement in the passive voice:")),
        ];
        for (mode, want) in wants {
            let got = render_relation_prompt(rel, mode).map_err(|e| e.to_string())?.text;
            ensure(got.as_bytes() == want.as_bytes(), || format!("{mode} prompt {got:?}"))?;
            n += 1;
        }
    }
    for desc in descriptions {
        let want = format!("Please extract the five most representative keywords from the following text: {desc}. Keywords:");
        let got = render_keyword_prompt(desc).map_err(|e| e.to_string())?.text;
        ensure(got == want, || format!("keyword prompt {got:?}"))?;
        n += 1;
    }
    Ok(format!("{n} rendered prompts byte-identical"))
}

fn random_words(rng: &mut ChaCha8Rng, vocab: u32, max: usize) -> BTreeSet<String> {
    let n = rng.random_range(1..=max.min(vocab as usize));
    let mut s = BTreeSet::new();
    while s.len() < n {
        s.insert(format!("w{}", rng.random_range(0..vocab)));
    }
    s
}

fn c3_matching_score_law() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n_pairs = 10_000;
    let mut n_ones = 0;
    for i in 0..n_pairs {
        let a = random_words(&mut rng, 15, 8);
        let b = random_words(&mut rng, 15, 8);
        let ka = KeywordSet::new(EntityId::new("a").unwrap(), a.iter()).map_err(|e| e.to_string())?;
        let kb = KeywordSet::new(EntityId::new("b").unwrap(), b.iter()).map_err(|e| e.to_string())?;
        let ab = match_score(&ka, &kb).map_err(|e| e.to_string())?.score;
        let ba = match_score(&kb, &ka).map_err(|e| e.to_string())?.score;
        let oracle = a.intersection(&b).count() as f64 / a.len().min(b.len()) as f64;
        let subset = a.is_subset(&b) || b.is_subset(&a);
        ensure(ab == ba, || format!("pair {i}: asymmetric {ab} vs {ba}"))?;
        ensure((0.0..=1.0).contains(&ab), || format!("pair {i}: out of range {ab}"))?;
        ensure(ab == oracle, || format!("pair {i}: {ab} vs oracle {oracle}"))?;
        ensure((ab == 1.0) == subset, || format!("pair {i}: score 1 iff subset violated"))?;
        n_ones += usize::from(subset);
    }
    within(started.elapsed(), Duration::from_secs(5), "criterion 3")?;
    Ok(format!("{n_pairs} random pairs ({n_ones} subset pairs) in {:.2?}", started.elapsed()))
}

fn c4_top_k_brute_force() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut n_pairs = 0;
    for inst in 0..200 {
        let n = rng.random_range(2..=50);
        let k = rng.random_range(1..=5);
        let vocab = rng.random_range(5..40);
        let sets: Vec<BTreeSet<String>> = (0..n).map(|_| random_words(&mut rng, vocab, 7)).collect();
        let ids: Vec<EntityId> = (0..n).map(|i| EntityId::new(format!("e{i:02}")).unwrap()).collect();
        let map: IndexMap<EntityId, KeywordSet> = ids
            .iter()
            .zip(&sets)
            .map(|(id, s)| (id.clone(), KeywordSet::new(id.clone(), s.iter()).unwrap()))
            .collect();
        let got: Vec<(String, String)> = top_k_pairs(&map, k)
            .into_iter()
            .map(|p| (p.head.to_string(), p.tail.to_string()))
            .collect();

        let mut want = Vec::new();
        for h in 0..n {
            let mut cands: Vec<(usize, usize, usize)> = (0..n)
                .filter(|&t| t != h)
                .map(|t| (t, sets[h].intersection(&sets[t]).count(), sets[h].len().min(sets[t].len())))
                .filter(|c| c.1 > 0)
                .collect();
            cands.sort_by(|x, y| match (y.1 * x.2).cmp(&(x.1 * y.2)) {
                Ordering::Equal => ids[x.0].cmp(&ids[y.0]),
                o => o,
            });
            want.extend(cands.iter().take(k).map(|c| (ids[h].to_string(), ids[c.0].to_string())));
        }
        ensure(got == want, || format!("instance {inst} (n={n}, k={k}) differs from exhaustive sort"))?;
        n_pairs += got.len();
    }
    within(started.elapsed(), Duration::from_secs(30), "criterion 4")?;
    Ok(format!("200 instances, {n_pairs} selected pairs identical in {:.2?}", started.elapsed()))
}

fn c5_metric_oracle() -> Check {
    let started = Instant::now();
    let m = RankMetrics::from_ranks(&[1, 2, 4]);
    ensure(m.mr == 7.0 / 3.0 && (m.mrr - 7.0 / 12.0).abs() < 1e-15, || format!("{{1,2,4}} gave {m:?}"))?;
    ensure((m.hits1, m.hits3, m.hits10) == (1.0 / 3.0, 2.0 / 3.0, 1.0), || format!("{{1,2,4}} hits {m:?}"))?;
    let m = RankMetrics::from_ranks(&[11, 12]);
    ensure(m.mr == 11.5 && m.hits10 == 0.0, || format!("{{11,12}} gave {m:?}"))?;

    // 1-D TransE with r = +1, score -|h + 1 - t|. Positions:
    // A 0, B 1, C 1.1, D 0.95, E 5, F 6.2, G 6, H 6.05, I 5.9.
    // (A, r, C) tail: B 0, D .05, C .1 -> raw 3; (A, r, B) is in train -> filtered 2.
    // (A, r, C) head: target 0.1, A is nearest -> 1.
    // (E, r, F) tail: G 0, H .05, I .1, F .2 -> 4. Head: target 5.2, E nearest -> 1.
    let ids = ["A", "B", "C", "D", "E", "F", "G", "H", "I"];
    let pos = [0.0, 1.0, 1.1, 0.95, 5.0, 6.2, 6.0, 6.05, 5.9];
    let mut b = KnowledgeGraph::builder().relation("r", "r");
    for id in ids {
        b = b.entity(id, id, "");
    }
    let kg = b
        .triple(SplitKind::Train, "A", "r", "B")
        .triple(SplitKind::Test, "A", "r", "C")
        .triple(SplitKind::Test, "E", "r", "F")
        .build(LoadMode::Strict)
        .map_err(|e| e.to_string())?
        .graph;
    let model = EmbeddingModel::new(
        ModelKind::TransE,
        Norm::L1,
        1,
        kg.entities().iter().cloned().collect(),
        kg.relations().iter().cloned().collect(),
        pos.to_vec(),
        vec![1.0],
    );
    let f = link_prediction(&model, &kg, SplitKind::Test, FilterSetting::Filtered).map_err(|e| e.to_string())?;
    let want = RankMetrics {
        mr: 2.0,
        mrr: 0.6875,
        hits1: 0.5,
        hits3: 0.75,
        hits10: 1.0,
    };
    ensure(f.metrics == want, || format!("filtered {:?}", f.metrics))?;
    let r = link_prediction(&model, &kg, SplitKind::Test, FilterSetting::Raw).map_err(|e| e.to_string())?;
    ensure(r.metrics.mr == 2.25, || format!("raw {:?}", r.metrics))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cfg in 0..1000 {
        let n = rng.random_range(1..=60);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(-5i32..5))).collect();
        let known: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let gold = rng.random_range(0..n);
        let (raw, filt) = rank_from_scores(&scores, gold, |c| known[c]);
        let above: Vec<usize> = (0..n).filter(|&c| c != gold && scores[c] >= scores[gold]).collect();
        ensure(raw == 1 + above.len(), || format!("config {cfg}: raw {raw}"))?;
        ensure(filt == 1 + above.iter().filter(|&&c| !known[c]).count(), || format!("config {cfg}: filtered {filt}"))?;
        ensure(filt <= raw, || format!("config {cfg}: filtered {filt} > raw {raw}"))?;
        if above.iter().all(|&c| !known[c]) {
            ensure(filt == raw, || format!("config {cfg}: empty filter changed rank"))?;
        }
    }
    within(started.elapsed(), Duration::from_secs(5), "criterion 5")?;
    Ok("hand-built ranks {2,1,4,1} give MR 2, MRR 0.6875; 1000 random filter configurations hold".into())
}

fn bits(m: &EmbeddingModel) -> Vec<u64> {
    m.entity_ids()
        .iter()
        .flat_map(|e| m.entity_vector(e.as_str()).unwrap().iter().map(|x| x.to_bits()))
        .collect()
}

fn c6_evaluator_sanity() -> Check {
    let started = Instant::now();
    let kg = toy_dataset();
    let cfg = TrainConfig {
        kind: ModelKind::TransE,
        dim: 16,
        epochs: 200,
        seed: 7,
        ..Default::default()
    };
    let a = train(&kg, &cfg).map_err(|e| e.to_string())?;
    let b = train(&kg, &cfg).map_err(|e| e.to_string())?;
    ensure(bits(&a.model) == bits(&b.model), || "same seed gave different weights".into())?;

    // every training triple is a query in both directions, filtered against all known facts
    let mut ranks = Vec::new();
    for t in kg.train().triples() {
        let tail = Query::Tail {
            head: t.head.clone(),
            relation: t.relation.clone(),
        };
        let head = Query::Head {
            relation: t.relation.clone(),
            tail: t.tail.clone(),
        };
        ranks.push(rank_entities(&a.model, &kg, &tail, &t.tail).map_err(|e| e.to_string())?.filtered_rank);
        ranks.push(rank_entities(&a.model, &kg, &head, &t.head).map_err(|e| e.to_string())?.filtered_rank);
    }
    let m = RankMetrics::from_ranks(&ranks);
    ensure(m.hits10 >= 0.9, || format!("train Hits@10 {:.3}", m.hits10))?;
    let ra = link_prediction(&a.model, &kg, SplitKind::Test, FilterSetting::Filtered).map_err(|e| e.to_string())?;
    let rb = link_prediction(&b.model, &kg, SplitKind::Test, FilterSetting::Filtered).map_err(|e| e.to_string())?;
    ensure(ra == rb, || "test reports differ between identical runs".into())?;
    within(started.elapsed(), Duration::from_secs(20), "criterion 6")?;
    Ok(format!(
        "train Hits@10 {:.3}, Hits@1 {:.3}, MRR {:.3} over {} queries; repeat bit-identical",
        m.hits10,
        m.hits1,
        m.mrr,
        ranks.len()
    ))
}

fn alias_bundle(self_loop: bool) -> Result<kgforge_core::enrich::structure::StructureBundle, String> {
    let kg = alias_dataset();
    let gw = Gateway::new(ReplayBackend::from_records(alias_fixture()));
    let cfg = StructureConfig {
        k: 1,
        self_loop,
        ..Default::default()
    };
    let b = extract_structure(&kg, &gw, &TemplateSet::default(), &GenerationParams::default(), &cfg)
        .map_err(|e| e.to_string())?;
    ensure(b.errors.is_empty(), || format!("{} extraction errors", b.errors.len()))?;
    Ok(b)
}

fn c7_structure_ablation() -> Check {
    let started = Instant::now();
    let base = alias_dataset();
    let cfg = TrainConfig {
        kind: ModelKind::TransE,
        norm: Norm::L2,
        dim: 32,
        epochs: 500,
        learning_rate: 0.01,
        seed: 7,
        ..Default::default()
    };
    let mut planted: BTreeSet<(String, String)> = BTreeSet::new();
    for (a, b) in alias_pairs() {
        planted.insert((b.clone(), a.clone()));
        planted.insert((a, b));
    }

    let mut medians = BTreeMap::new();
    for self_loop in [true, false] {
        let bundle = alias_bundle(self_loop)?;
        let found: BTreeSet<(String, String)> = bundle
            .triples
            .iter()
            .filter(|t| t.head != t.tail)
            .map(|t| (t.head.to_string(), t.tail.to_string()))
            .collect();
        ensure(found == planted, || format!("SameAs pairs {found:?} differ from the planted aliases"))?;
        let augmented = augment_training_set(&base, &bundle.triples).map_err(|e| e.to_string())?;
        let report = ab_compare(&base, &augmented, &cfg, 5).map_err(|e| e.to_string())?;
        medians.insert(self_loop, (report.median_delta.hits10, report.median_augmented.mrr));
    }
    let (d_on, mrr_on) = medians[&true];
    let (d_off, mrr_off) = medians[&false];
    ensure(d_on >= 0.0, || format!("self-loop on: median dHits@10 {d_on:.3} < 0"))?;
    ensure(d_off >= 0.0, || format!("self-loop off: median dHits@10 {d_off:.3} < 0"))?;
    ensure(mrr_on >= mrr_off - 0.02, || format!("self-loop on MRR {mrr_on:.3} below off {mrr_off:.3} - 0.02"))?;
    within(started.elapsed(), Duration::from_secs(180), "criterion 7")?;
    Ok(format!(
        "median dHits@10 {d_on:+.3} (loops on) {d_off:+.3} (off); MRR on {mrr_on:.3} vs off {mrr_off:.3}; {:.1?}",
        started.elapsed()
    ))
}

fn c8_count_law() -> Check {
    let mut runs = 0;
    for self_loop in [true, false] {
        let base = alias_dataset();
        let bundle = alias_bundle(self_loop)?;
        let aug = augment_training_set(&base, &bundle.triples).map_err(|e| e.to_string())?;
        let pairs: BTreeSet<_> = bundle.pairs.iter().map(|p| (p.head.clone(), p.tail.clone())).collect();
        let with_kw = base.entities().len() - bundle.n_without_keywords;
        let want = pairs.len() + if self_loop { with_kw } else { 0 };
        ensure(aug.train().len() - base.train().len() == want, || format!("alias run self_loop={self_loop}"))?;
        runs += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for inst in 0..500 {
        let n = rng.random_range(2..40);
        let mut b = KnowledgeGraph::builder().relation("r", "r");
        for i in 0..n {
            b = b.entity(&format!("e{i:02}"), &format!("e{i}"), "");
        }
        let kg = b
            .triple(SplitKind::Train, "e00", "r", "e01")
            .build(LoadMode::Strict)
            .map_err(|e| e.to_string())?
            .graph;
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        let covered = rng.random_range(0..=n);
        let map: IndexMap<EntityId, KeywordSet> = ids[..covered]
            .iter()
            .map(|&i| {
                let id = EntityId::new(format!("e{i:02}")).unwrap();
                let words = random_words(&mut rng, 10, 6);
                (id.clone(), KeywordSet::new(id, words.iter()).unwrap())
            })
            .collect();
        let cfg = StructureConfig {
            k: rng.random_range(1..=4),
            self_loop: rng.random_bool(0.5),
            ..Default::default()
        };
        let pairs = top_k_pairs(&map, cfg.k);
        let triples = synthesize_triples(&pairs, &map, &kg, &cfg).map_err(|e| e.to_string())?;
        let aug = augment_training_set(&kg, &triples).map_err(|e| e.to_string())?;
        let distinct: BTreeSet<_> = pairs.iter().map(|p| (p.head.clone(), p.tail.clone())).collect();
        let want = distinct.len() + if cfg.self_loop { covered } else { 0 };
        ensure(aug.train().len() - kg.train().len() == want, || format!("random instance {inst}"))?;
        ensure(aug.valid() == kg.valid() && aug.test() == kg.test(), || format!("instance {inst} moved eval splits"))?;
        runs += 1;
    }
    Ok(format!("{runs} runs obey |train'| - |train| = pairs + self-loops"))
}

fn tree(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) -> std::io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path)?);
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out).map_err(|e| format!("{}: {e}", root.display()))?;
    Ok(out)
}

fn pipeline(workdir: &Path) -> Result<(), String> {
    let root = workdir.join("toy");
    run_ok(bin().args(["fixtures", "toy", "--out"]).arg(&root))?;
    let cfg = root.join("run.json");
    let bundles = workdir.join("bundles");
    run_ok(
        bin()
            .args(["enrich", "--config"])
            .arg(&cfg)
            .args(["--strategy", "E", "--strategy", "R", "--strategy", "S", "--out"])
            .arg(&bundles),
    )?;
    let aug = workdir.join("augmented");
    let mut compose = bin();
    compose.args(["compose", "--base"]).arg(&root);
    for kind in ["entity", "relation", "structure"] {
        compose.arg("--bundle").arg(bundles.join(kind));
    }
    run_ok(compose.arg("--out").arg(&aug))?;
    run_ok(
        bin()
            .args(["eval", "--config"])
            .arg(&cfg)
            .arg("--base")
            .arg(&root)
            .arg("--augmented")
            .arg(&aug)
            .arg("--out")
            .arg(workdir.join("eval")),
    )?;
    Ok(())
}

fn c9_determinism() -> Check {
    let started = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    let (ta, tb) = (tree(a.path())?, tree(b.path())?);
    let names_a: Vec<_> = ta.keys().collect();
    let names_b: Vec<_> = tb.keys().collect();
    ensure(names_a == names_b, || format!("file sets differ: {names_a:?} vs {names_b:?}"))?;
    for (path, bytes) in &ta {
        ensure(&tb[path] == bytes, || format!("{} differs between runs", path.display()))?;
    }
    ensure(ta.keys().any(|p| p.ends_with("comparison.json")), || "no comparison.json produced".into())?;
    within(started.elapsed(), Duration::from_secs(120), "criterion 9")?;
    Ok(format!("{} output files byte-identical across two runs in {:.1?}", ta.len(), started.elapsed()))
}

fn c10_scope() -> Check {
    Ok("out of scope: absolute scores of description-based completion models trained on the enriched \
        datasets need GPU-scale language-model training; this crate's claim is the deterministic \
        production of the inputs those models consume, which criteria 1-9 verify"
        .into())
}

fn main() {
    let criteria: [(&str, &str, fn() -> Check); 10] = [
        ("1", "dataset fidelity", c1_dataset_fidelity),
        ("2", "template fidelity", c2_template_fidelity),
        ("3", "matching-score law", c3_matching_score_law),
        ("4", "top-k correctness", c4_top_k_brute_force),
        ("5", "metric oracle", c5_metric_oracle),
        ("6", "evaluator sanity", c6_evaluator_sanity),
        ("7", "structure ablation", c7_structure_ablation),
        ("8", "count law", c8_count_law),
        ("9", "determinism", c9_determinism),
        ("10", "non-reproducibility scope", c10_scope),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {id:>2} {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {id:>2} {name} ({secs:.2}s): {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
