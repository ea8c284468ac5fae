use std::fs::File;
use std::io::BufReader;

use clap::ValueEnum;

use hotskit::effective::{effective_cd_solve, effective_solve, rate_effective, AugmentedState, EffectiveOptions, EffectiveRateMethod};
use hotskit::ideal::{deformed_solve, dss_solve, ideal_solve, rate_ideal, recover_flow, DeformedOptions, IdealOptions, IdealRateMethod};
use hotskit::normalized::{build_normalized, normalized_solve};
use hotskit::ranking::{pagerank, trace_records, Ranking};
use hotskit::synth::{synth_graph, SynthModel};
use hotskit::truncated::{bounded_hots_solve, BoundsSet};
use hotskit::{Normalization, ScoreState, SolveReport, SolveStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{FlowArgs, Model, RankAlgo, RankArgs, RateAlgo, RateArgs, RateMethod, SolveArgs, SynthArgs};
use crate::error::{CliError, Result};
use crate::io::{load_graph, read_scores, write_edges, write_flow, write_ranking, write_trace_csv, write_trace_jsonl, Report};

/// Above this many nodes the trace keeps every tenth iteration, and the
/// rate defaults to the power method above [`DENSE_RATE_LIMIT`].
const FULL_TRACE_LIMIT: usize = 10_000;
const DENSE_RATE_LIMIT: usize = 2000;

/// What a command hands back to `main`: the report line and the status that
/// decides the exit code.
pub struct Outcome {
    pub report: Report,
    pub status: SolveStatus,
}

/// Zero potentials, or uniform draws in `[−1, 1)` when a seed is given.
fn start(len: usize, seed: Option<u64>) -> Vec<f64> {
    match seed {
        None => vec![0.0; len],
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    }
}

fn ideal_options(s: &SolveArgs) -> IdealOptions {
    IdealOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        add_diagonal: s.add_diagonal,
        ..Default::default()
    }
}

fn effective_options(s: &SolveArgs) -> EffectiveOptions {
    EffectiveOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        ..Default::default()
    }
}

/// Page scores `e^p` from page potentials recentred to mean zero.
fn page_scores(p: &[f64]) -> Vec<f64> {
    ScoreState::new(p.to_vec(), Normalization::MeanZero).scores()
}

fn write_traces(s: &SolveArgs, report: &SolveReport, n: usize) -> Result<()> {
    if s.trace.is_none() && s.trace_jsonl.is_none() {
        return Ok(());
    }
    let every = if n > FULL_TRACE_LIMIT { 10 } else { 1 };
    let records = trace_records(report, every);
    if let Some(path) = &s.trace {
        write_trace_csv(path, &records)?;
    }
    if let Some(path) = &s.trace_jsonl {
        write_trace_jsonl(path, &records)?;
    }
    Ok(())
}

fn solve_fields(out: &mut Report, rep: &SolveReport) {
    out.push("status", rep.status)
        .push("iterations", rep.iterations)
        .push("residual", format!("{:e}", rep.residual))
        .push("theta", rep.theta_trace.last().map_or("nan".into(), |t| format!("{t:e}")))
        .push("rate_estimate", format!("{:.6}", rep.rate_estimate));
}

pub fn rank(args: &RankArgs) -> Result<Outcome> {
    let (a, meta) = load_graph(&args.graph)?;
    let n = a.n();
    let s = &args.solve;
    let algo = args.algo.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut params = vec![("tol".to_string(), s.tol.to_string()), ("shift".to_string(), a.shift().to_string())];

    let (scores, rep) = match args.algo {
        RankAlgo::Ideal => {
            let p0 = ScoreState::new(start(n, s.seed), Normalization::MeanZero);
            let (p, rep) = ideal_solve(&a, &p0, &ideal_options(s))?;
            (p.scores(), rep)
        }
        RankAlgo::Dss => {
            let p0 = ScoreState::new(start(n, s.seed), Normalization::MeanZero);
            let (p, rep) = dss_solve(&a, &p0, &ideal_options(s))?;
            (p.scores(), rep)
        }
        RankAlgo::Deformed => {
            params.push(("deform_alpha".into(), args.deform_alpha.to_string()));
            let x0: Vec<f64> = start(n, s.seed).iter().map(|v| v.exp()).collect();
            let opts = DeformedOptions { tol: s.tol, max_iter: s.max_iter, ..Default::default() };
            deformed_solve(&a, &x0, args.deform_alpha, &opts)?
        }
        RankAlgo::Effective | RankAlgo::EffectiveCd | RankAlgo::Bounded => {
            params.push(("alpha".into(), s.alpha.to_string()));
            let p0 = AugmentedState::new(start(n + 1, s.seed))?;
            let opts = effective_options(s);
            let (p, _, rep) = match args.algo {
                RankAlgo::Effective => effective_solve(&a, &p0, s.alpha, &opts)?,
                RankAlgo::EffectiveCd => effective_cd_solve(&a, &p0, s.alpha, &opts)?,
                _ => {
                    let path = args
                        .bounds
                        .as_ref()
                        .ok_or_else(|| CliError::Usage("--algo bounded needs --bounds".into()))?;
                    let file = File::open(path).map_err(|e| CliError::File(path.display().to_string(), e))?;
                    let bounds = BoundsSet::from_reader(&a, BufReader::new(file))?;
                    params.push(("bounded_arcs".into(), bounds.bounded_count().to_string()));
                    bounded_hots_solve(&a, &bounds, s.alpha, &p0, &opts)?
                }
            };
            (page_scores(&p.p[..n]), rep)
        }
        RankAlgo::Normalized => {
            params.push(("alpha".into(), s.alpha.to_string()));
            let model = build_normalized(&a, &meta, s.alpha)?;
            let (sol, rep) = normalized_solve(&model, &start(n, s.seed), &effective_options(s))?;
            (sol.pages.scores(), rep)
        }
        RankAlgo::Pagerank => {
            params.push(("damping".into(), args.damping.to_string()));
            let (r, rep) = pagerank(&a, args.damping, s.tol)?;
            (r.scores, rep)
        }
    };

    let ranking = Ranking::new(scores, algo.clone(), params);
    if let Some(path) = &args.out {
        write_ranking(path, &ranking)?;
    }
    write_traces(s, &rep, n)?;

    let mut report = Report::default();
    report.push("command", "rank").push("algo", &algo).push("n", n).push("m", meta.m);
    solve_fields(&mut report, &rep);
    if let Some(&top) = ranking.order.first() {
        report.push("top", top);
    }
    Ok(Outcome { report, status: rep.status })
}

pub fn rate(args: &RateArgs) -> Result<Outcome> {
    let (a, meta) = load_graph(&args.graph)?;
    let n = a.n();
    let s = &args.solve;
    let dense = n <= DENSE_RATE_LIMIT;
    let mut report = Report::default();
    report.push("command", "rate").push("n", n).push("m", meta.m);

    // the rate is a property of the fixed point, so the solution is found by
    // coordinate descent, which needs no primitivity and converges fast
    let (rep, estimate) = match args.algo {
        RateAlgo::Ideal => {
            report.push("algo", "ideal");
            let method = match args.method {
                None if dense => IdealRateMethod::Dense,
                None => IdealRateMethod::Power,
                Some(RateMethod::Dense) => IdealRateMethod::Dense,
                Some(RateMethod::Power) => IdealRateMethod::Power,
                Some(m) => return Err(CliError::Usage(format!("--method {m:?} applies to the effective models"))),
            };
            let p0 = ScoreState::new(start(n, s.seed), Normalization::MeanZero);
            let (p, rep) = dss_solve(&a, &p0, &ideal_options(s))?;
            let est = if rep.status.is_converged() { Some(rate_ideal(&a, &p.p, method)?) } else { None };
            (rep, est)
        }
        RateAlgo::Effective | RateAlgo::Normalized => {
            let method = match args.method {
                None if dense => EffectiveRateMethod::FdDense,
                None => EffectiveRateMethod::FdPower,
                Some(RateMethod::FdDense) => EffectiveRateMethod::FdDense,
                Some(RateMethod::FdPower) => EffectiveRateMethod::FdPower,
                Some(m) => return Err(CliError::Usage(format!("--method {m:?} applies to the ideal model"))),
            };
            let opts = effective_options(s);
            let (inner, p0) = if args.algo == RateAlgo::Normalized {
                report.push("algo", "normalized");
                let model = build_normalized(&a, &meta, s.alpha)?;
                let mut p0 = start(n, s.seed);
                p0.extend([0.0, 0.0]);
                (model.inner, p0)
            } else {
                report.push("algo", "effective");
                (a.clone(), start(n + 1, s.seed))
            };
            let (p, _, rep) = effective_cd_solve(&inner, &AugmentedState::new(p0)?, s.alpha, &opts)?;
            let est = if rep.status.is_converged() {
                Some(rate_effective(&inner, &p.p, s.alpha, method)?)
            } else {
                None
            };
            (rep, est)
        }
    };
    write_traces(s, &rep, n)?;
    report.push("solver_status", rep.status).push("solver_iterations", rep.iterations);
    let status = match estimate {
        Some(e) => {
            report.push("rate", format!("{:.6}", e.rate)).push("rate_status", e.status);
            e.status
        }
        None => rep.status,
    };
    report.push("status", status);
    Ok(Outcome { report, status })
}

pub fn flow(args: &FlowArgs) -> Result<Outcome> {
    let (a, meta) = load_graph(&args.graph)?;
    let scores = read_scores(&args.scores, a.n())?;
    let p: Vec<f64> = scores.iter().map(|v| v.ln()).collect();
    let flow = recover_flow(&a, &p, None)?;
    write_flow(&args.out, &flow.rho)?;
    let status = if flow.balanced { SolveStatus::Converged } else { SolveStatus::MaxIter };
    let mut report = Report::default();
    report
        .push("command", "flow")
        .push("n", a.n())
        .push("m", meta.m)
        .push("mu", format!("{:.12}", flow.mu))
        .push("shift_mass", format!("{:e}", flow.shift_mass))
        .push("balance_residual", format!("{:e}", flow.balance_residual))
        .push("balanced", flow.balanced)
        .push("status", status);
    Ok(Outcome { report, status })
}

pub fn synth(args: &SynthArgs) -> Result<Outcome> {
    let model = match args.model {
        Model::CyclePlusChords => SynthModel::CyclePlusChords { chords: args.chords.unwrap_or(args.n) },
        Model::Preferential => SynthModel::preferential(),
    };
    let arcs = synth_graph(args.n, model, args.seed)?;
    let used = arcs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    if used < args.n {
        log::warn!("nodes {used}..{} have no arcs and will not appear in the edge list", args.n);
    }
    write_edges(&args.out, &arcs)?;
    let mut out_degree = vec![0usize; args.n];
    for &(i, _) in &arcs {
        out_degree[i] += 1;
    }
    let mut report = Report::default();
    report
        .push("command", "synth")
        .push("n", args.n)
        .push("m", arcs.len())
        .push("dangling", out_degree.iter().filter(|&&d| d == 0).count())
        .push("seed", args.seed)
        .push("status", SolveStatus::Converged);
    Ok(Outcome { report, status: SolveStatus::Converged })
}
