use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde_json::{json, Value};

use gls_core::bounds::BoundReport;
use gls_core::classify::{nested_cv, CvOptions, HyperGrid};
use gls_core::data::synthetic::erdos_renyi;
use gls_core::data::tu::{load_tu_dataset, GraphDataset};
use gls_core::embed::{choose_dimension, embed_all, format_significant, write_embeddings_csv, EmbeddingConfig};
use gls_core::experiments::{
    bound_sweep, edge_sweep, node_add_sweep, per_dimension_sweep, truncation_sweep as run_truncation,
    write_series_csv, EdgeSweepKind, SeriesPoint,
};
use gls_core::{Error, Graph, Result};

use crate::{
    BoundsArgs, ClassifyArgs, DatasetArgs, DimArgs, EmbedArgs, Format, GridArgs, GridPreset, OutputArgs,
    PerturbSweepArgs, SweepKind, TruncationArgs,
};

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs `write` against the requested file, or stdout.
fn with_output(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_error(path, e))?;
            let mut w = BufWriter::new(file);
            write(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            match write(&mut w).and_then(|_| w.flush()) {
                // Reader closed early, e.g. `| head`.
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| io_error(Path::new("<stdout>"), e)),
            }
        }
    }
}

fn write_json(output: &OutputArgs, value: &Value) -> Result<()> {
    with_output(&output.out, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
        writeln!(w)
    })
}

fn load(args: &DatasetArgs) -> Result<GraphDataset> {
    let ds = load_tu_dataset(&args.dataset_dir, &args.name)?;
    log::info!("loaded {} graphs from {}", ds.len(), args.dataset_dir.display());
    Ok(ds)
}

fn embedding_config(args: &DimArgs) -> Result<EmbeddingConfig> {
    match (args.dim, args.percentile) {
        (Some(d), _) => EmbeddingConfig::explicit(d),
        (None, Some(p)) => EmbeddingConfig::percentile(p),
        (None, None) => Ok(EmbeddingConfig::default()),
    }
}

fn hyper_grid(args: &GridArgs) -> Result<HyperGrid> {
    let preset = match args.grid {
        GridPreset::Molecular => HyperGrid::molecular(),
        GridPreset::Social => HyperGrid::social(),
    };
    let c = args.c_grid.as_deref().unwrap_or(preset.c_values());
    let gamma = args.gamma_grid.as_deref().unwrap_or(preset.gamma_values());
    HyperGrid::new(c, gamma)
}

fn cv_options(args: &GridArgs) -> CvOptions {
    CvOptions {
        k_outer: args.folds,
        k_inner: args.inner_folds,
        seed: args.seed,
    }
}

fn graph_by_id(ds: &GraphDataset, id: usize) -> Result<&Graph> {
    ds.graphs
        .iter()
        .find(|g| g.id() == Some(id))
        .ok_or_else(|| Error::Validation(format!("dataset {} has no graph with id {id}", ds.name)))
}

fn write_series(output: &OutputArgs, points: &[SeriesPoint]) -> Result<()> {
    match output.format.unwrap_or(Format::Csv) {
        Format::Csv => with_output(&output.out, |w| write_series_csv(w, points)),
        Format::Json => write_json(output, &json!(points)),
    }
}

pub fn embed(args: &EmbedArgs) -> Result<()> {
    let ds = load(&args.dataset)?;
    let d = choose_dimension(&ds.sizes(), &embedding_config(&args.dim)?)?;
    let embeddings = embed_all(&ds.graphs, d)?;
    log::info!("embedded {} graphs at d = {d}", ds.len());
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => with_output(&args.output.out, |w| write_embeddings_csv(w, &ds.graphs, &embeddings)),
        Format::Json => {
            let rows: Vec<Value> = ds
                .graphs
                .iter()
                .zip(&embeddings)
                .map(|(g, e)| json!({"graph_id": g.id(), "label": g.label(), "values": e.values()}))
                .collect();
            write_json(&args.output, &json!({"dataset": ds.name, "dim": d, "embeddings": rows}))
        }
    }
}

pub fn perturb_sweep(args: &PerturbSweepArgs) -> Result<()> {
    let base = match (&args.name, args.graph_id) {
        (Some(name), Some(id)) => {
            let dir = args.dataset_dir.clone().unwrap_or_else(|| PathBuf::from("data"));
            let ds = load_tu_dataset(&dir, name)?;
            graph_by_id(&ds, id)?.clone()
        }
        _ => erdos_renyi(args.nodes, args.edge_prob, args.graph_seed)?,
    };
    if args.k_step == 0 {
        return Err(Error::Validation("--k-step must be positive".into()));
    }
    let ks: Vec<usize> = (0..=args.k_max).step_by(args.k_step).collect();
    let mut points = Vec::new();
    for (i, kind) in args.kinds.iter().enumerate() {
        let seed = args.seed.wrapping_add(i as u64);
        match kind {
            SweepKind::EdgeAdd => points.extend(edge_sweep(&base, EdgeSweepKind::Add, &ks, args.trials, seed)?),
            SweepKind::EdgeRemove => {
                points.extend(edge_sweep(&base, EdgeSweepKind::Remove, &ks, args.trials, seed)?)
            }
            SweepKind::NodeAdd => {
                points.extend(node_add_sweep(&base, args.steps, &args.connectivities, args.trials, seed)?)
            }
        }
    }
    write_series(&args.output, &points)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format_significant(x, 12)).unwrap_or_default()
}

pub fn bounds(args: &BoundsArgs) -> Result<()> {
    let reports = bound_sweep(args.instances, args.max_nodes, args.seed, args.brute_force)?;
    let count = |f: fn(&BoundReport) -> Option<bool>| reports.iter().filter(|r| f(r) == Some(false)).count();
    eprintln!(
        "bounds: {} instances, {} spectral-distance violations, {} upper-bound violations, \
         {} orthogonal-equality failures, {} sandwich failures, {} divergence lower-bound failures",
        reports.len(),
        count(|r| r.flags.weyl_bound),
        count(|r| r.flags.eigenvector_upper_bound),
        count(|r| r.flags.orthogonal_equality),
        count(|r| r.flags.sandwich),
        count(|r| r.flags.dgi_lower_bound),
    );
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&args.output, &json!(reports)),
        Format::Csv => with_output(&args.output.out, |w| {
            writeln!(
                w,
                "instance,spectral_distance,perturbation_norm,dgi_frobenius,orthogonal_achieved,prop2_rhs,violations"
            )?;
            for (i, r) in reports.iter().enumerate() {
                writeln!(
                    w,
                    "{i},{},{},{},{},{},{}",
                    format_significant(r.spectral_distance, 12),
                    format_significant(r.perturbation_norm, 12),
                    opt(r.dgi_frobenius),
                    opt(r.orthogonal_achieved),
                    opt(r.prop2_rhs),
                    r.violations()
                )?;
            }
            Ok(())
        }),
    }
}

pub fn classify(args: &ClassifyArgs) -> Result<()> {
    let ds = load(&args.dataset)?;
    let res = nested_cv(&ds, &embedding_config(&args.dim)?, &hyper_grid(&args.grid)?, cv_options(&args.grid))?;
    log::info!("{}: mean accuracy {:.4} ± {:.4}", ds.name, res.mean, res.std);
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut value = json!(res);
            value["generated_at"] = json!(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true));
            write_json(&args.output, &value)
        }
        Format::Csv => with_output(&args.output.out, |w| {
            writeln!(w, "fold,accuracy,C,gamma")?;
            for (i, (acc, hp)) in res.per_fold_accuracy.iter().zip(&res.chosen_hyperparams).enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    i + 1,
                    format_significant(*acc, 12),
                    format_significant(hp.c, 12),
                    format_significant(hp.gamma, 12)
                )?;
            }
            Ok(())
        }),
    }
}

pub fn truncation_sweep(args: &TruncationArgs) -> Result<()> {
    let ds = load(&args.dataset)?;
    let sizes = ds.sizes();
    let dims = match &args.dims {
        Some(d) => d.clone(),
        None => {
            let p95 = choose_dimension(&sizes, &EmbeddingConfig::default())?;
            let max = sizes.iter().copied().max().unwrap_or(1);
            let mut d = vec![1, 2, 5, 10, p95, max];
            d.retain(|&x| x <= max);
            d.sort_unstable();
            d.dedup();
            d
        }
    };
    if dims.contains(&0) {
        return Err(Error::Validation("embedding dimensions must be positive".into()));
    }
    let results = run_truncation(&ds, &dims, &hyper_grid(&args.grid)?, cv_options(&args.grid))?;
    let mut points: Vec<SeriesPoint> = dims
        .iter()
        .zip(&results)
        .map(|(&d, r)| SeriesPoint {
            series: "accuracy".to_string(),
            x: d as f64,
            mean: r.mean,
            std: r.std,
        })
        .collect();

    let base = match args.graph_id {
        Some(id) => graph_by_id(&ds, id)?,
        None => {
            let max = sizes.iter().copied().max().unwrap_or(0);
            ds.graphs.iter().find(|g| g.n() == max).expect("non-empty dataset")
        }
    };
    points.extend(per_dimension_sweep(
        base,
        args.steps,
        &args.connectivities,
        args.max_dim,
        args.trials,
        args.grid.seed,
    )?);
    write_series(&args.output, &points)
}
