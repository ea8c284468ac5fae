use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hotskit::graph::{from_edge_list, from_matrix_market, EdgeListOptions};
use hotskit::ranking::{Ranking, TraceRecord};
use hotskit::{GraphMeta, SparseMatrix};

use crate::args::{Format, GraphArgs};
use crate::error::{CliError, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::File(path.display().to_string(), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::File(path.display().to_string(), e))
}

/// Loads the graph and applies the shift.
pub fn load_graph(args: &GraphArgs) -> Result<(SparseMatrix, GraphMeta)> {
    let reader = open(&args.input)?;
    let a = match args.format {
        Format::Edgelist => from_edge_list(reader, EdgeListOptions { weighted: args.weighted })?.0,
        Format::Mm => from_matrix_market(reader)?,
    };
    let a = a.with_shift(args.shift)?;
    let meta = GraphMeta::from_matrix(&a);
    Ok((a, meta))
}

pub fn write_ranking(path: &Path, ranking: &Ranking) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "node\tscore\trank")?;
    for (node, (score, rank)) in ranking.scores.iter().zip(ranking.ranks()).enumerate() {
        writeln!(w, "{node}\t{score:e}\t{rank}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `score` column of a rankings file, indexed by `node`.
pub fn read_scores(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut scores = vec![f64::NAN; n];
    for (lineno, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let bad = |message: String| CliError::Scores { line: lineno + 1, message };
        if lineno == 0 && line.starts_with("node") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(bad("expected 'node<TAB>score'".into()));
        }
        let node: usize = fields[0].trim().parse().map_err(|_| bad(format!("invalid node '{}'", fields[0])))?;
        let score: f64 = fields[1].trim().parse().map_err(|_| bad(format!("invalid score '{}'", fields[1])))?;
        if node >= n {
            return Err(bad(format!("node {node} outside the graph of {n} nodes")));
        }
        if !(score > 0.0 && score.is_finite()) {
            return Err(bad(format!("score {score} is not positive")));
        }
        scores[node] = score;
    }
    if let Some(missing) = scores.iter().position(|s| s.is_nan()) {
        return Err(CliError::Usage(format!("the scores file has no entry for node {missing}")));
    }
    Ok(scores)
}

pub fn write_flow(path: &Path, rho: &SparseMatrix) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "src\tdst\tflow")?;
    for (i, j, v) in rho.triplets() {
        writeln!(w, "{i}\t{j}\t{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edges(path: &Path, arcs: &[(usize, usize)]) -> Result<()> {
    let mut w = create(path)?;
    for (i, j) in arcs {
        writeln!(w, "{i} {j}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "iter,theta,residual,rate")?;
    for r in trace {
        writeln!(w, "{},{:e},{:e},{}", r.iter, r.theta, r.residual, r.rate)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_jsonl(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = create(path)?;
    for r in trace {
        // JSON has no NaN; an undefined rate becomes null
        let rate = if r.rate.is_finite() { serde_json::json!(r.rate) } else { serde_json::Value::Null };
        let record = serde_json::json!({
            "iter": r.iter,
            "theta": r.theta,
            "residual": r.residual,
            "rate": rate,
        });
        writeln!(w, "{record}")?;
    }
    w.flush()?;
    Ok(())
}

/// Single-line `key=value` summary.
#[derive(Debug, Default)]
pub struct Report(Vec<(String, String)>);

impl Report {
    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn line(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }
}
