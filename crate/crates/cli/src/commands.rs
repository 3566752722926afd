use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use bpexplain_core::batch::{run_batch, sample_targets, BatchOptions};
use bpexplain_core::eval::{
    evaluate_methods, format_cell, format_significant, format_table, EvalConfig, EvalMethod,
};
use bpexplain_core::io::{
    build_mrf, explain_documents, load_node_list, preset, synthetic_model, to_json,
    BeliefsDocument, DatasetSpec,
};
use bpexplain_core::{run_bp, BpConfig, Error, Mrf, NodeId, Schedule, SearchConfig};

use crate::args::{
    BatchArgs, BpArgs, EvalArgs, ExplainArgs, GraphArgs, InferArgs, SearchArgs, ServeArgs,
    TargetArgs,
};

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
/// `infer` stopped at the iteration limit.
pub const EXIT_NOT_CONVERGED: u8 = 4;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::InvalidConfig(_) => EXIT_USAGE,
            Error::DegenerateMessage { .. } | Error::DegenerateBelief(_) => EXIT_RUNTIME,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", path.display()),
    }
}

type Outcome = Result<u8, Failure>;

fn dataset_spec(g: &GraphArgs, seed: u64) -> DatasetSpec {
    DatasetSpec {
        edge_file: g.edges.clone(),
        labels_file: g.labels.clone(),
        priors_file: g.priors.clone(),
        class_count: g.classes,
        labeled_ratio: g.labeled_ratio,
        homophily: g.homophily,
        seed,
    }
}

fn load_model(g: &GraphArgs, seed: u64) -> Result<Mrf, Failure> {
    let spec = dataset_spec(g, seed);
    let mrf = if let Some(name) = &g.preset {
        if g.labels.is_some() || g.priors.is_some() {
            return Err(usage(
                "--labels and --priors cannot be combined with --preset",
            ));
        }
        preset(name)?
    } else if let Some(kind) = g.synthetic {
        if g.labels.is_some() || g.priors.is_some() {
            return Err(usage(
                "--labels and --priors cannot be combined with --synthetic",
            ));
        }
        synthetic_model(kind, g.nodes.unwrap_or_default(), &spec)?
    } else if g.edges.is_some() {
        build_mrf(&spec, &spec.load()?)?
    } else {
        return Err(usage("one of --edges, --preset or --synthetic is required"));
    };
    tracing::info!(
        nodes = mrf.node_count(),
        edges = mrf.edge_count(),
        classes = mrf.class_count(),
        "model loaded"
    );
    Ok(mrf)
}

fn bp_config(b: &BpArgs) -> Result<BpConfig, Failure> {
    let config = BpConfig {
        max_iters: b.max_iters,
        tolerance: b.tolerance,
        damping: b.damping,
        schedule: Schedule::Synchronous,
    };
    config.validate()?;
    Ok(config)
}

fn search_config(s: &SearchArgs, bp: BpConfig, seed: u64) -> Result<SearchConfig, Failure> {
    let config = SearchConfig {
        capacity: s.capacity,
        beam_width: s.beam,
        method: s.method,
        gel_variant: s.gel_variant,
        pruning_rate: s.prune,
        seed,
        bp,
    };
    config.validate()?;
    Ok(config)
}

fn select_targets(mrf: &Mrf, t: &TargetArgs, seed: u64) -> Result<Vec<NodeId>, Failure> {
    if let Some(path) = &t.targets {
        return Ok(load_node_list(path)?);
    }
    let pool: Vec<NodeId> = mrf
        .node_ids()
        .iter()
        .copied()
        .filter(|&n| !t.unlabeled || is_uniform(mrf, n))
        .collect();
    Ok(sample_targets(&pool, t.target_ratio, seed)?)
}

fn is_uniform(mrf: &Mrf, node: NodeId) -> bool {
    let p = mrf.prior_of(node).expect("node from the model").probs();
    p.iter().all(|&x| x == p[0])
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| io_failure(Path::new("<stdout>"), e))
        }
    }
}

pub fn infer(a: &InferArgs) -> Outcome {
    let bp = bp_config(&a.bp)?;
    let mrf = load_model(&a.graph, a.seed)?;
    let result = run_bp(&mrf, &bp)?;
    write_output(
        a.out.as_deref(),
        &to_json(&BeliefsDocument::new(&mrf, &result)),
    )?;
    eprintln!(
        "{} after {} iterations (max residual {:.3e})",
        if result.converged {
            "converged"
        } else {
            "not converged"
        },
        result.iterations,
        result.max_residual
    );
    Ok(if result.converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

pub fn explain(a: &ExplainArgs) -> Outcome {
    let bp = bp_config(&a.bp)?;
    let config = search_config(&a.search, bp, a.seed)?;
    let mrf = load_model(&a.graph, a.seed)?;
    let target = NodeId(a.target);
    if !mrf.contains(target) {
        return Err(Error::UnknownNode(target).into());
    }
    let full = run_bp(&mrf, &bp)?;
    let out = explain_documents(&mrf, &full, target, &config, a.comb)?;

    let mut summary = String::new();
    for (i, doc) in out.candidates.iter().enumerate() {
        summary.push_str(&format!(
            "candidate {}  objective {}  size {}\n",
            i + 1,
            format_significant(doc.objective),
            doc.size
        ));
    }
    if let Some(doc) = &out.comb {
        summary.push_str(&format!(
            "comb         objective {}  size {}\n",
            format_significant(doc.objective),
            doc.size
        ));
    }

    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            for (i, doc) in out.candidates.iter().enumerate() {
                let path = dir.join(format!("target-{}-candidate-{}.json", target, i + 1));
                write_output(Some(&path), &to_json(doc))?;
            }
            if let Some(doc) = &out.comb {
                write_output(
                    Some(&dir.join(format!("target-{target}-comb.json"))),
                    &to_json(doc),
                )?;
            }
            write_output(None, &summary)?;
        }
        None => {
            let mut docs: Vec<_> = out.candidates.iter().collect();
            docs.extend(out.comb.as_ref());
            write_output(None, &to_json(&docs))?;
            eprint!("{summary}");
        }
    }
    Ok(0)
}

pub fn batch(a: &BatchArgs) -> Outcome {
    let bp = bp_config(&a.bp)?;
    let config = search_config(&a.search, bp, a.seed)?;
    let mrf = load_model(&a.graph, a.seed)?;
    let targets = select_targets(&mrf, &a.targets, a.seed)?;
    let options = BatchOptions {
        workers: a.workers,
        combine: a.comb,
    };
    let report = run_batch(&mrf, &targets, &config, &options)?;
    let report = if a.timings {
        report
    } else {
        report.without_timings()
    };
    write_output(a.out.as_deref(), &to_json(&report))?;
    let agg = &report.aggregate;
    eprintln!(
        "{} targets, {} failed, mean {}, {} subgraph BP runs",
        agg.targets,
        agg.failed,
        match (agg.mean_objective, agg.mean_size) {
            (Some(o), Some(s)) => format_cell(o, s),
            _ => "n/a".into(),
        },
        agg.bp_invocations
    );
    Ok(0)
}

pub fn eval(a: &EvalArgs) -> Outcome {
    let bp = bp_config(&a.bp)?;
    let mrf = load_model(&a.graph, a.seed)?;
    let targets = select_targets(&mrf, &a.targets, a.seed)?;
    let config = EvalConfig {
        methods: if a.methods.is_empty() {
            EvalMethod::ALL.to_vec()
        } else {
            a.methods.clone()
        },
        capacity: a.capacity,
        seeds: (0..a.seeds).collect(),
        gel_variant: a.gel_variant,
        bp,
    };
    let report = evaluate_methods(&mrf, &targets, &config, a.workers)?;
    if let Some(path) = &a.out {
        write_output(Some(path), &to_json(&report))?;
    }
    write_output(None, &format_table(&report))?;
    Ok(0)
}

pub fn serve(a: &ServeArgs) -> Outcome {
    let addr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| usage(format!("bad address {}:{}: {e}", a.host, a.port)))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: e.to_string(),
    })?;
    runtime
        .block_on(bpexplain_service::serve_on(
            addr,
            Duration::from_secs(a.idle_minutes * 60),
        ))
        .map_err(|e| Failure {
            code: EXIT_RUNTIME,
            message: format!("server stopped: {e}"),
        })?;
    Ok(0)
}
