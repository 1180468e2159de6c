use std::path::Path;

use jdiag::apps::{
    bss_separate, load_matrix_csv, match_topics, perturb_moments, synthetic_mixture,
    topic_moments_exact, topic_recover, SignalMatrix, TopicModel,
};
use jdiag::drjd::{column_residuals, drjd};
use jdiag::matfam::load_family;
use jdiag::metrics::{least_squares_measure, moreau_amari};
use jdiag::numfmt::sig17;
use jdiag::rjd::rjd;
use jdiag::synth::{
    bench_rows_to_csv, failure_probability_experiment, failure_rows_to_csv, run_bench, Algorithm,
    BenchSetting, EigenvalueLaw, ExperimentGrid,
};
use jdiag::{JdError, Result};

use crate::json;
use crate::{Algo, BenchArgs, BssArgs, FailprobArgs, RunArgs, TopicsArgs};

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| JdError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(args: RunArgs, verbose: bool) -> Result<()> {
    let family = load_family(&args.family)?;
    let c = &args.common;
    let (q, trace) = match c.algo {
        Algo::Rjd => (rjd(&family, c.trials, c.seed)?.into_best().q, None),
        Algo::Drjd => {
            let out = drjd(&family, c.trials, c.seed)?;
            (out.q, Some(out.trace))
        }
    };
    let ls = least_squares_measure(&family, &q)?;
    let per_column = column_residuals(&family, &q)?;
    let mut fields = vec![
        ("q", json::rows(q.matrix())),
        ("least_squares", sig17(ls)),
        ("per_column", json::array(&per_column)),
    ];
    if let Some(trace) = trace {
        let levels: Vec<String> = trace
            .levels
            .iter()
            .map(|l| {
                format!(
                    "{{\"dimension\": {}, \"threshold\": {}, \"accepted\": {}, \"trial\": {}}}",
                    l.dimension,
                    sig17(l.threshold),
                    l.accepted,
                    l.trial
                )
            })
            .collect();
        fields.push(("trace", format!("[{}]", levels.join(", "))));
    }
    if verbose {
        eprintln!(
            "n={} d={} algo={:?} trials={} sqrt(L)={:.3e}",
            family.n(),
            family.d(),
            c.algo,
            c.trials,
            ls.sqrt()
        );
    }
    emit(c.out.as_deref(), &json::object(&fields))
}

pub fn bench(args: BenchArgs, verbose: bool) -> Result<()> {
    let algorithms = match args.algo {
        Some(a) => vec![a.into()],
        None => vec![Algorithm::Rjd, Algorithm::Drjd],
    };
    let mut rows = Vec::new();
    for &n in &args.n {
        for &d in &args.d {
            for &epsilon in &args.epsilon {
                for &algorithm in &algorithms {
                    let row = run_bench(&BenchSetting {
                        n,
                        d,
                        epsilon,
                        algorithm,
                        trials: args.trials,
                        repeats: args.repeats,
                        seed: args.seed,
                    })?;
                    if verbose {
                        eprintln!(
                            "n={n} d={d} eps={epsilon:e} {}: mean {:.3e}",
                            algorithm.name(),
                            row.mean_err
                        );
                    }
                    rows.push(row);
                }
            }
        }
    }
    emit(args.out.as_deref(), &bench_rows_to_csv(&rows, args.timings))
}

pub fn failprob(args: FailprobArgs, verbose: bool) -> Result<()> {
    let grid = ExperimentGrid {
        n: args.n,
        d: args.d,
        epsilon: args.epsilon,
        trials: args.trials,
        repeats: args.repeats,
        r_values: args
            .r_values
            .unwrap_or_else(ExperimentGrid::default_r_values),
        seed: args.seed,
        eigenvalue_law: EigenvalueLaw::Symmetric,
    };
    let rows = failure_probability_experiment(&grid)?;
    if verbose {
        for &l in &grid.trials {
            match jdiag::synth::loglog_slope(&rows, l, 10.0, 100.0, 30) {
                Some(s) => eprintln!("L={l}: slope over R-1 in [10, 100] = {s:.3}"),
                None => eprintln!("L={l}: too few failures for a slope"),
            }
        }
    }
    emit(args.out.as_deref(), &failure_rows_to_csv(&rows))
}

pub fn bss(args: BssArgs, verbose: bool) -> Result<()> {
    let c = &args.common;
    let (signals, mixing) = if args.demo {
        let mix = synthetic_mixture(3, 1, args.samples, true, c.seed)?;
        (mix.signals, Some(mix.mixing))
    } else {
        let path = args
            .signals
            .as_deref()
            .expect("clap requires signals without --demo");
        let mixing = args.mixing.as_deref().map(load_matrix_csv).transpose()?;
        (SignalMatrix::load(path)?, mixing)
    };
    let n = signals.channels();
    let probes = args.probes.unwrap_or(n * (n + 1) / 2);
    let result = bss_separate(&signals, probes, c.algo.into(), c.trials, c.seed)?;
    let ma = match &mixing {
        Some(a) => {
            if a.shape() != (n, n) {
                return Err(JdError::DimensionMismatch(format!(
                    "mixing matrix is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            Some(moreau_amari(&(&result.unmixing * a))?)
        }
        None => None,
    };
    if verbose {
        eprintln!("T={} n={n} probes={probes}", signals.len());
    }
    let fields = [
        ("unmixing", json::rows(&result.unmixing)),
        ("moreau_amari", ma.map_or("null".to_string(), sig17)),
    ];
    emit(c.out.as_deref(), &json::object(&fields))
}

pub fn topics(args: TopicsArgs, verbose: bool) -> Result<()> {
    let c = &args.common;
    let model = TopicModel::load(&args.model)?;
    let mut moments = topic_moments_exact(&model);
    if args.epsilon > 0.0 {
        moments = perturb_moments(&moments, args.epsilon, c.seed)?;
    } else if !(args.epsilon == 0.0) {
        return Err(JdError::InvalidArgument(format!(
            "epsilon must be nonnegative, got {}",
            args.epsilon
        )));
    }
    let estimate = topic_recover(&moments, model.topics(), c.algo.into(), c.trials, c.seed)?;
    let err = match_topics(&model, &estimate)?;
    if verbose {
        eprintln!(
            "n={} k={} max error {:.3e}",
            model.vocabulary(),
            model.topics(),
            err.max_err()
        );
    }
    let perm: Vec<String> = err.permutation.iter().map(usize::to_string).collect();
    let fields = [
        ("omega_err", sig17(err.omega_err)),
        ("mu_err", sig17(err.mu_err)),
        ("max_err", sig17(err.max_err())),
        ("permutation", format!("[{}]", perm.join(","))),
        ("omega", json::array(estimate.omega.iter())),
        ("mu", json::columns(&estimate.mu)),
    ];
    emit(c.out.as_deref(), &json::object(&fields))
}
