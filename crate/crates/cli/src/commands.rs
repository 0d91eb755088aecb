use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use kgforge_core::bundle::{compose as compose_bundles, read_bundle, write_bundle, Bundle};
use kgforge_core::enrich::entity::expand_descriptions;
use kgforge_core::enrich::relation::describe_relations;
use kgforge_core::enrich::structure::{extract_structure, StructureConfig};
use kgforge_core::eval::{ab_compare, ModelKind, Norm};
use kgforge_core::kg::{self, load_dataset, write_dataset, KnowledgeGraph, LoadMode, RelationId};
use kgforge_core::llm::{
    write_fixture, Gateway, HttpBackend, RecordBackend, ReplayBackend, RetryPolicy, ENV_API_KEY,
    ENV_ENDPOINT,
};
use kgforge_core::prompt::TemplateSet;
use kgforge_core::synthetic;

use crate::config::{BackendKind, EvalConfig, RunConfig};
use crate::{
    ComposeArgs, EnrichArgs, EvalArgs, FixtureKind, FixturesArgs, PartialFailure, StatsArgs, StrategyArg,
    UsageError,
};

pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_TXT: &str = "comparison.txt";
pub const FIXTURE_FILE: &str = "fixture.jsonl";
pub const CONFIG_FILE: &str = "run.json";

const DATASET_FILES: [&str; 8] = [
    kg::ENTITY_LIST_FILE,
    kg::RELATION_LIST_FILE,
    kg::ENTITY_NAME_FILE,
    kg::ENTITY_DESC_FILE,
    kg::RELATION_NAME_FILE,
    kg::TRAIN_FILE,
    kg::VALID_FILE,
    kg::TEST_FILE,
];

fn load(root: &Path, mode: LoadMode) -> Result<KnowledgeGraph> {
    let outcome = load_dataset(root, mode).with_context(|| format!("loading dataset {}", root.display()))?;
    for w in &outcome.warnings {
        log::warn!("{}: {w}", root.display());
    }
    Ok(outcome.graph)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let mode = if args.lenient { LoadMode::Lenient } else { LoadMode::Strict };
    let started = Instant::now();
    let kg = load(&args.root, mode)?;
    let stats = kg.stats();
    if args.json {
        print!("{}", to_json(&stats));
    } else {
        println!("{stats}");
    }
    log::info!("loaded in {:.2?}", started.elapsed());
    Ok(())
}

fn build_gateway(cfg: &RunConfig) -> Result<Gateway> {
    let http = || -> Result<HttpBackend> {
        let endpoint = cfg
            .gateway
            .endpoint
            .clone()
            .or_else(|| std::env::var(ENV_ENDPOINT).ok())
            .ok_or_else(|| UsageError(format!("no gateway.endpoint and {ENV_ENDPOINT} is not set")))?;
        Ok(HttpBackend::new(endpoint, std::env::var(ENV_API_KEY).ok())
            .with_concurrency(cfg.gateway.concurrency)
            .with_retry(RetryPolicy {
                max_retries: cfg.gateway.max_retries,
                ..RetryPolicy::default()
            }))
    };
    let fixture = cfg.gateway.fixture.as_deref();
    let gateway = match cfg.gateway.backend {
        BackendKind::Replay => {
            Gateway::new(ReplayBackend::open(fixture.expect("validated")).context("opening fixture")?)
        }
        BackendKind::Record => {
            Gateway::new(RecordBackend::new(http()?, fixture.expect("validated")).context("opening fixture")?)
        }
        BackendKind::Http => Gateway::new(http()?),
    };
    match &cfg.gateway.cache {
        Some(path) => Ok(gateway.with_cache_file(path).context("opening response cache")?),
        None => Ok(gateway),
    }
}

fn bundle_dir(out: &Path, strategy: StrategyArg) -> PathBuf {
    out.join(match strategy {
        StrategyArg::E => "entity",
        StrategyArg::R => "relation",
        StrategyArg::S => "structure",
    })
}

pub fn enrich(args: &EnrichArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(k) = args.k {
        cfg.strategies.structure.k = k;
    }
    if args.self_loop {
        cfg.strategies.structure.self_loop = true;
    }
    if args.no_self_loop {
        cfg.strategies.structure.self_loop = false;
    }
    if let Some(modes) = &args.modes {
        cfg.strategies.relation.modes = modes.iter().copied().collect();
    }
    if let Some(b) = args.budget {
        cfg.strategies.entity.budget_tokens = b;
    }
    cfg.validate()?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.clone());

    let kg = load(&cfg.dataset.root, cfg.dataset.mode)?;
    let templates = match &cfg.templates {
        Some(p) => TemplateSet::load(p).map_err(|e| UsageError(e.to_string()))?,
        None => TemplateSet::default(),
    };
    let params = cfg.generation.params();
    let gateway = build_gateway(&cfg)?;

    let strategies: BTreeSet<StrategyArg> = args.strategies.iter().copied().collect();
    let mut n_errors = 0;
    for strategy in strategies {
        let bundle: Bundle = match strategy {
            StrategyArg::E => {
                expand_descriptions(&kg, &gateway, &templates, &params, cfg.strategies.entity.budget_tokens)?.into()
            }
            StrategyArg::R => {
                describe_relations(&kg, &gateway, &templates, &params, &cfg.strategies.relation.modes)?.into()
            }
            StrategyArg::S => {
                let s = &cfg.strategies.structure;
                let scfg = StructureConfig {
                    k: s.k,
                    self_loop: s.self_loop,
                    same_as_relation: RelationId::new(s.same_as_relation.clone())
                        .map_err(|e| UsageError(e.to_string()))?,
                };
                extract_structure(&kg, &gateway, &templates, &params, &scfg)?.into()
            }
        };
        let dir = bundle_dir(&out, strategy);
        write_bundle(&bundle, &dir)?;
        for e in bundle.errors() {
            log::warn!("{} {}: {}", bundle.kind(), e.subject, e.message);
        }
        n_errors += bundle.errors().len();
        println!(
            "{} bundle: {} items, {} errors -> {}",
            bundle.kind().letter(),
            bundle.n_items(),
            bundle.errors().len(),
            dir.display()
        );
    }
    log::info!("{} backend calls via {}", gateway.backend_calls(), gateway.backend_name());
    if n_errors > 0 && !args.allow_partial {
        return Err(PartialFailure(n_errors).into());
    }
    Ok(())
}

fn copy_dataset(from: &Path, to: &Path) -> Result<()> {
    fs::create_dir_all(to).with_context(|| format!("creating {}", to.display()))?;
    for name in DATASET_FILES {
        let src = from.join(name);
        if src.is_file() {
            fs::copy(&src, to.join(name)).with_context(|| format!("copying {}", src.display()))?;
        }
    }
    Ok(())
}

pub fn compose(args: &ComposeArgs) -> Result<()> {
    let cfg = args.config.as_deref().map(RunConfig::load).transpose()?;
    let base = args
        .base
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.dataset.root.clone()))
        .ok_or_else(|| UsageError("compose needs --base or --config".into()))?;
    let mode = if args.lenient {
        LoadMode::Lenient
    } else {
        cfg.as_ref().map_or(LoadMode::Strict, |c| c.dataset.mode)
    };
    let kg = load(&base, mode)?;
    if args.bundles.is_empty() {
        copy_dataset(&base, &args.out)?;
        println!("{}", kg.stats());
        return Ok(());
    }
    let bundles = args
        .bundles
        .iter()
        .map(|d| read_bundle(d).with_context(|| format!("reading bundle {}", d.display())))
        .collect::<Result<Vec<_>>>()?;
    let composed = compose_bundles(&kg, &bundles)?;
    write_dataset(&composed, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("{}", composed.stats());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let cfg = args.config.as_deref().map(RunConfig::load).transpose()?;
    let (eval_cfg, seed, mode) = match &cfg {
        Some(c) => (c.eval.clone(), c.seed, c.dataset.mode),
        None => (EvalConfig::default(), 7, LoadMode::Strict),
    };
    let n_seeds = args.seeds.unwrap_or(eval_cfg.n_seeds);
    if n_seeds == 0 {
        return Err(UsageError("--seeds must be >= 1".into()).into());
    }
    let train_cfg = eval_cfg.train_config(seed);
    train_cfg.validate().map_err(|e| UsageError(e.to_string()))?;

    let base = load(&args.base, mode)?;
    let augmented = load(&args.augmented, mode)?;
    let report = ab_compare(&base, &augmented, &train_cfg, n_seeds)?;
    let table = report.to_table();
    print!("{table}");

    if let Some(out) = args.out.clone().or_else(|| cfg.as_ref().map(|c| c.output.clone())) {
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        write_text(&out.join(COMPARISON_JSON), &to_json(&report))?;
        write_text(&out.join(COMPARISON_TXT), &table)?;
    }
    Ok(())
}

pub fn fixtures(args: &FixturesArgs) -> Result<()> {
    let (kg, records) = match args.kind {
        FixtureKind::Toy => (synthetic::toy_dataset(), synthetic::toy_fixture()),
        FixtureKind::Synthetic => (synthetic::alias_dataset(), synthetic::alias_fixture()),
    };
    write_dataset(&kg, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    write_fixture(&args.out.join(FIXTURE_FILE), &records)?;

    let mut cfg = RunConfig::for_dataset(".");
    cfg.gateway.fixture = Some(PathBuf::from(FIXTURE_FILE));
    match args.kind {
        FixtureKind::Toy => {
            cfg.eval = EvalConfig {
                dim: 16,
                epochs: 200,
                n_seeds: 3,
                ..EvalConfig::default()
            };
        }
        FixtureKind::Synthetic => {
            cfg.eval = EvalConfig {
                kind: ModelKind::TransE,
                norm: Norm::L2,
                dim: 32,
                epochs: 500,
                n_seeds: 5,
                ..EvalConfig::default()
            };
        }
    }
    write_text(&args.out.join(CONFIG_FILE), &to_json(&cfg))?;
    println!("{}", kg.stats());
    Ok(())
}
