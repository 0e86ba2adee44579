use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use pfedgame::config::FlatConfig;
use pfedgame::simulator::{
    repeat_and_average, write_metrics_csv, write_trace_csv, RepeatSummary, SimConfig, SimOutcome,
};
use serde_json::json;

use crate::args::{CompareArgs, RunArgs, Settings};

fn default_output(label: &str) -> PathBuf {
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    PathBuf::from("out").join(format!("{stamp}-{label}"))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    // catches read-only directories before any computation starts
    tempfile::NamedTempFile::new_in(dir).with_context(|| format!("output directory {} is not writable", dir.display()))?;
    Ok(())
}

/// Writes through a temporary file in the same directory, so readers never
/// see a partial file.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut BufWriter<&mut fs::File>) -> std::io::Result<()>) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write {}", path.display()))?;
    {
        let mut buf = BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).with_context(|| format!("cannot write {}", path.display()))?;
        buf.flush()?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn load_file(path: Option<&PathBuf>) -> Result<Option<FlatConfig>> {
    path.map(|p| FlatConfig::from_path(p).with_context(|| format!("config file {}", p.display())))
        .transpose()
}

fn write_outcome(dir: &Path, out: &SimOutcome) -> Result<()> {
    write_atomic(&dir.join("metrics.csv"), |w| write_metrics_csv(&out.metrics, w))?;
    write_atomic(&dir.join("traces.csv"), |w| write_trace_csv(&out.traces, w))?;
    write_atomic(&dir.join("edges.csv"), |w| {
        writeln!(w, "fl_round,node_a,node_b,weight")?;
        for (t, adj) in &out.adjacencies {
            adj.write_edge_list(*t, w)?;
        }
        Ok(())
    })?;
    let ckpt = dir.join("checkpoints");
    fs::create_dir_all(&ckpt).with_context(|| format!("cannot create {}", ckpt.display()))?;
    for (id, model) in &out.final_models {
        let bytes = model.params().to_bytes();
        write_atomic(&ckpt.join(format!("node-{id}.pvec")), |w| w.write_all(&bytes))?;
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<()> {
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let file = load_file(args.config.as_ref())?;
    let flat = args.settings.layered(file.as_ref());
    let cfg = flat.resolve().context("invalid configuration")?;
    let dir = args.output.clone().unwrap_or_else(|| default_output(args.settings.label()));
    prepare_dir(&dir)?;

    let start = Instant::now();
    let (summary, runs) = repeat_and_average(&cfg, args.repeats)?;
    let wall = start.elapsed().as_secs_f64();

    if runs.len() == 1 {
        write_outcome(&dir, &runs[0])?;
    } else {
        for (i, out) in runs.iter().enumerate() {
            let sub = dir.join(format!("repeat-{i}"));
            fs::create_dir_all(&sub).with_context(|| format!("cannot create {}", sub.display()))?;
            write_outcome(&sub, out)?;
        }
    }
    let doc = json!({
        "config": FlatConfig::from(&cfg),
        "repeats": summary.repeats,
        "base_seed": summary.base_seed,
        "per_round": summary.per_round,
        "per_node": summary.per_node,
        "final_mean": summary.final_mean,
        "final_std": summary.final_std,
        "wall_time_secs": wall,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    write_atomic(&dir.join("summary.json"), |w| writeln!(w, "{text}"))?;
    println!(
        "final mean accuracy {:.4} (std {:.4}, {} repeat(s)); wrote {}",
        summary.final_mean,
        summary.final_std,
        summary.repeats,
        dir.display()
    );
    Ok(())
}

struct Cell {
    cfg: SimConfig,
    summary: Option<RepeatSummary>,
}

fn build_cells(args: &CompareArgs) -> Result<Vec<Cell>> {
    let s: &Settings = &args.settings;
    let mut flats = Vec::new();
    if args.config.len() > 1 {
        if !args.algorithms.is_empty() || !args.partitions.is_empty() {
            bail!("use either several --config files or --algorithms/--partitions, not both");
        }
        for path in &args.config {
            flats.push(s.layered(load_file(Some(path))?.as_ref()));
        }
    } else {
        let base = s.layered(load_file(args.config.first())?.as_ref());
        let algorithms = if args.algorithms.is_empty() { vec![base.algorithm] } else { args.algorithms.iter().map(|a| Some(*a)).collect() };
        let partitions = if args.partitions.is_empty() { vec![base.partition] } else { args.partitions.iter().map(|p| Some(*p)).collect() };
        for &algorithm in &algorithms {
            for &partition in &partitions {
                let mut flat = base.clone();
                flat.algorithm = algorithm;
                if partition != base.partition {
                    flat.partition = partition;
                    // node count and majority share follow the new partition unless given explicitly
                    flat.participants = s.participants;
                    flat.majority_fraction = s.majority_fraction;
                }
                flats.push(flat);
            }
        }
    }
    if flats.len() < 2 {
        bail!("compare needs at least two configurations (several --config files, or --algorithms/--partitions lists)");
    }
    let cells = flats
        .iter()
        .enumerate()
        .map(|(i, f)| f.resolve().with_context(|| format!("configuration {}", i + 1)).map(|cfg| Cell { cfg, summary: None }))
        .collect::<Result<Vec<_>>>()?;
    check_compatible(&cells)?;
    Ok(cells)
}

/// Cells may differ only in algorithm and partition mode.
fn check_compatible(cells: &[Cell]) -> Result<()> {
    let masked = |c: &SimConfig| SimConfig {
        algorithm: cells[0].cfg.algorithm,
        partition: cells[0].cfg.partition,
        ..c.clone()
    };
    let first = &cells[0].cfg;
    for (i, cell) in cells.iter().enumerate().skip(1) {
        let c = &cell.cfg;
        if c.master_seed != first.master_seed {
            bail!("configuration {} uses seed {} but configuration 1 uses {}", i + 1, c.master_seed, first.master_seed);
        }
        if c.dataset != first.dataset {
            bail!("configuration {} uses a different dataset than configuration 1", i + 1);
        }
        if masked(c) != masked(first) {
            bail!("configuration {} differs from configuration 1 in settings other than algorithm and partition", i + 1);
        }
    }
    Ok(())
}

fn render_table(cells: &[Cell]) -> String {
    let mut algorithms: Vec<String> = Vec::new();
    let mut partitions: Vec<String> = Vec::new();
    for c in cells {
        let a = c.cfg.algorithm.to_string();
        let p = c.cfg.partition.kind.to_string();
        if !algorithms.contains(&a) {
            algorithms.push(a);
        }
        if !partitions.contains(&p) {
            partitions.push(p);
        }
    }
    let value = |a: &str, p: &str| {
        cells
            .iter()
            .find(|c| c.cfg.algorithm.as_str() == a && c.cfg.partition.kind.as_str() == p)
            .and_then(|c| c.summary.as_ref())
            .map_or("-".to_string(), |s| format!("{:.4} ± {:.4}", s.final_mean, s.final_std))
    };
    let mut rows = vec![std::iter::once("algorithm".to_string()).chain(partitions.iter().cloned()).collect::<Vec<_>>()];
    for a in &algorithms {
        rows.push(std::iter::once(a.clone()).chain(partitions.iter().map(|p| value(a, p))).collect());
    }
    let widths: Vec<usize> = (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let mut cells = build_cells(args)?;
    let dir = args.output.clone().unwrap_or_else(|| default_output(args.settings.label()));
    prepare_dir(&dir)?;
    for cell in &mut cells {
        log::info!("running {} on {}", cell.cfg.algorithm, cell.cfg.partition.kind);
        cell.summary = Some(repeat_and_average(&cell.cfg, args.repeats)?.0);
    }
    write_atomic(&dir.join("compare.csv"), |w| {
        writeln!(w, "algorithm,partition,participants,repeats,final_mean,final_std")?;
        for c in &cells {
            let s = c.summary.as_ref().expect("every cell was run");
            writeln!(
                w,
                "{},{},{},{},{},{}",
                c.cfg.algorithm, c.cfg.partition.kind, c.cfg.partition.participants, s.repeats, s.final_mean, s.final_std
            )?;
        }
        Ok(())
    })?;
    print!("{}", render_table(&cells));
    Ok(())
}
