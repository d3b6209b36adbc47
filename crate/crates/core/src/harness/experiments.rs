//! The experiment registry. Each entry lists the parameter keys it accepts;
//! anything else is a configuration error.

use super::svg::PlotSpec;
use super::{CsvTable, ExperimentConfig, HarnessError, RunOutput};
use crate::agnostic::{
    build_agnostic_coupling, gamma_star, loss_budget, strassen_max_deficit, EtaStar, STRASSEN_MAX_N,
};
use crate::csv_row;
use crate::prob::{excess_mass, DiscreteDist, ExactRational};
use crate::rates::{hard_instance, n_required_empirical, rate_bounds};
use crate::rng::substream;
use crate::robust::{hamming_graph, robust_solve};
use crate::schemes::{estimate_errors_multi, SchemeConfig, SchemeVariant, ToyLM};
use crate::ump::{optimal_type2, type1_exact, type2_exact, ump_build, ump_oracle, ORACLE_MAX_K};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeMap;

const AGNOSTIC_RHO_DOMAIN: u16 = 0x6001;

type Params = BTreeMap<String, String>;

pub struct Experiment {
    pub name: &'static str,
    pub keys: &'static [&'static str],
    pub run: fn(&ExperimentConfig) -> Result<RunOutput, HarnessError>,
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "ump",
        keys: &["rho", "eps", "alpha_min", "alpha_max", "alpha_steps"],
        run: run_ump,
    },
    Experiment {
        name: "rates",
        keys: &["h", "alpha", "beta", "n_max", "k"],
        run: run_rates,
    },
    Experiment {
        name: "agnostic",
        keys: &["n", "alpha", "trials"],
        run: run_agnostic,
    },
    Experiment {
        name: "robust",
        keys: &["rho0", "seq_len", "c", "alpha"],
        run: run_robust,
    },
    Experiment {
        name: "schemes",
        keys: &[
            "lm",
            "n",
            "alpha",
            "trials",
            "srl_gamma",
            "srl_delta",
            "christ_lambda",
            "its_resamples",
            "its_block",
            "its_shared",
        ],
        run: run_schemes,
    },
];

pub fn lookup(name: &str) -> Result<&'static Experiment, HarnessError> {
    EXPERIMENTS.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        HarnessError::config(
            "experiment",
            format!("unknown experiment `{name}`; expected one of {}", names.join(", ")),
        )
    })
}

pub fn check_keys(exp: &Experiment, params: &Params) -> Result<(), HarnessError> {
    match params.keys().find(|k| !exp.keys.contains(&k.as_str())) {
        Some(k) => Err(HarnessError::config(
            k,
            format!(
                "unknown parameter for `{}`; accepted: {}",
                exp.name,
                exp.keys.join(", ")
            ),
        )),
        None => Ok(()),
    }
}

fn required<'a>(p: &'a Params, key: &str) -> Result<&'a str, HarnessError> {
    p.get(key)
        .map(String::as_str)
        .ok_or_else(|| HarnessError::config(key, "required parameter is missing"))
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| HarnessError::config(key, format!("cannot parse `{v}`: {e}")))
}

fn get<T: std::str::FromStr>(p: &Params, key: &str, default: T) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    p.get(key).map_or(Ok(default), |v| parse_one(key, v))
}

fn get_required<T: std::str::FromStr>(p: &Params, key: &str) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    parse_one(key, required(p, key)?)
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, HarnessError>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = v.split(',').map(|s| parse_one(key, s)).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(HarnessError::config(key, "empty list"));
    }
    Ok(items)
}

fn get_list<T: std::str::FromStr>(p: &Params, key: &str, default: &str) -> Result<Vec<T>, HarnessError>
where
    T::Err: std::fmt::Display,
{
    parse_list(key, p.get(key).map_or(default, String::as_str))
}

/// Exact value of `"p/q"` or a finite decimal such as `"0.25"`.
fn parse_rational(key: &str, v: &str) -> Result<ExactRational, HarnessError> {
    let v = v.trim();
    let bad = || HarnessError::config(key, format!("`{v}` is not a fraction p/q or a decimal"));
    if let Some((num, den)) = v.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(ExactRational::new(num, den));
    }
    let (int, frac) = v.split_once('.').unwrap_or((v, ""));
    if int.is_empty() && frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Ok(ExactRational::new(digits, scale))
}

fn dist(key: &str, probs: Vec<f64>) -> Result<DiscreteDist, HarnessError> {
    DiscreteDist::new(probs).map_err(|e| HarnessError::config(key, e))
}

fn lib<T>(key: &str, r: crate::error::Result<T>) -> Result<T, HarnessError> {
    r.map_err(|e| HarnessError::from_lib(key, e))
}

fn plot(title: &str, x: &str, ys: &[&str], group: &[&str]) -> PlotSpec {
    PlotSpec {
        title: title.into(),
        x: x.into(),
        ys: ys.iter().map(|s| s.to_string()).collect(),
        group: group.iter().map(|s| s.to_string()).collect(),
    }
}

/// Type I and Type II of the UMP coupling over a grid of levels.
fn run_ump(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let p = &cfg.params;
    let rho = dist("rho", parse_list("rho", required(p, "rho")?)?)?;
    let eps: f64 = get(p, "eps", 0.0)?;
    let a0: f64 = get(p, "alpha_min", 0.01)?;
    let a1: f64 = get(p, "alpha_max", 0.5)?;
    let steps: usize = get(p, "alpha_steps", 50)?;
    if steps == 0 {
        return Err(HarnessError::config("alpha_steps", "must be at least 1"));
    }
    if a1 < a0 {
        return Err(HarnessError::config("alpha_max", "must not be below alpha_min"));
    }
    let with_oracle = rho.len() <= ORACLE_MAX_K && eps == 0.0;
    let mut header = vec!["alpha", "eps", "type1", "type2", "closed_form"];
    if with_oracle {
        header.push("oracle");
    }
    let mut table = CsvTable::new(&header);
    for i in 0..steps {
        let alpha = if steps == 1 {
            a0
        } else {
            a0 + (a1 - a0) * i as f64 / (steps - 1) as f64
        };
        let c = lib("alpha", ump_build(&rho, alpha, eps))?;
        let closed = lib("alpha", optimal_type2(&rho, alpha, eps))?;
        let mut row = csv_row![alpha, eps, type1_exact(&c), type2_exact(&c), closed];
        if with_oracle {
            row.extend(csv_row![lib("rho", ump_oracle(&rho, alpha))?]);
        }
        table.push(row);
    }
    Ok(RunOutput {
        table,
        plot: plot("UMP Type II error", "alpha", &["type2", "closed_form"], &[]),
    })
}

/// Exact β(n) at the two-point instance of entropy `h`, next to the bounds.
fn run_rates(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let p = &cfg.params;
    let h: f64 = get_required(p, "h")?;
    let alpha: f64 = get_required(p, "alpha")?;
    let beta: f64 = get_required(p, "beta")?;
    let n_max: u64 = get(p, "n_max", 1000)?;
    let k: usize = get(p, "k", 2)?;
    let bounds = rate_bounds(h, alpha, beta, k).map_err(|e| match e {
        crate::error::Error::Domain { name, .. } => HarnessError::config(name, e),
        other => HarnessError::from_lib("h", other),
    })?;
    let rho0 = lib("h", hard_instance(h))?;
    let (_, curve) = lib("n_max", n_required_empirical(&rho0, alpha, beta, n_max))?;
    let mut table = CsvTable::new(&["n", "beta_exact", "lower", "upper"]);
    for pt in &curve.entries {
        table.push(csv_row![pt.n, pt.beta, bounds.lower, bounds.upper]);
    }
    Ok(RunOutput {
        table,
        plot: plot("Exact Type II error at the hard instance", "n", &["beta_exact"], &[]),
    })
}

/// Max-flow coupling losses against η* on uniform and random models.
fn run_agnostic(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let p = &cfg.params;
    let n: u64 = get_required(p, "n")?;
    let alpha = parse_rational("alpha", required(p, "alpha")?)?;
    let trials: u64 = get(p, "trials", 50)?;
    let es = lib("alpha", EtaStar::from_alpha(n, &alpha))?;
    let gamma = lib("alpha", gamma_star(n, &alpha))?.to_f64().unwrap_or(f64::NAN);
    let alpha_f = alpha.to_f64().unwrap_or(f64::NAN);
    let k = n as usize;
    let mut table = CsvTable::new(&[
        "trial",
        "loss",
        "gamma",
        "excess",
        "budget",
        "strassen_ok",
        "max_deficit",
    ]);
    for t in 0..trials {
        let rho = if t == 0 {
            let m = (es.inv_alpha() as usize).min(k);
            DiscreteDist::uniform_on(k, &(0..m).collect::<Vec<_>>())
        } else {
            DiscreteDist::random(k, &mut substream(cfg.seed, AGNOSTIC_RHO_DOMAIN, t))
        };
        let (_, loss) = lib("n", build_agnostic_coupling(&rho, &es))?;
        let budget = loss_budget(&rho, &es);
        let (ok, deficit) = if k <= STRASSEN_MAX_N {
            let d = lib("n", strassen_max_deficit(&rho, &es))?;
            // Same tolerance as `strassen_check`.
            ((d <= budget + 1e-12).to_string(), d)
        } else {
            ("skipped".to_string(), f64::NAN)
        };
        table.push(csv_row![t, loss, gamma, excess_mass(&rho, alpha_f), budget, ok, deficit]);
    }
    Ok(RunOutput {
        table,
        plot: plot("Model-agnostic coupling loss", "trial", &["loss", "budget"], &[]),
    })
}

/// Robust optima on product models over a Hamming perturbation graph.
fn run_robust(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let p = &cfg.params;
    let rho0 = dist("rho0", parse_list("rho0", required(p, "rho0")?)?)?;
    let seq_len: usize = get(p, "seq_len", 2)?;
    let cs: Vec<usize> = get_list(p, "c", "0,1,2")?;
    let alphas: Vec<f64> = get_list(p, "alpha", "0.05,0.1,0.2")?;
    if seq_len == 0 {
        return Err(HarnessError::config("seq_len", "must be at least 1"));
    }
    let k = rho0.len();
    let size = (k as u128).checked_pow(seq_len as u32).unwrap_or(u128::MAX);
    if size > crate::robust::HAMMING_MAX_VERTICES {
        return Err(HarnessError::Runtime(format!(
            "{k}^{seq_len} sequences exceed the limit of {}",
            crate::robust::HAMMING_MAX_VERTICES
        )));
    }
    let mut probs = vec![1.0];
    for _ in 0..seq_len {
        probs = probs
            .iter()
            .flat_map(|&a| rho0.probs().iter().map(move |&b| a * b))
            .collect();
    }
    let rho = DiscreteDist::from_weights(&probs).map_err(|e| HarnessError::config("rho0", e))?;
    let mut table = CsvTable::new(&["c", "alpha", "beta_robust", "beta_robust_sum_row", "beta_ump"]);
    for &c in &cs {
        let g = lib("c", hamming_graph(k, seq_len, c))?;
        for &alpha in &alphas {
            let plain = lib("alpha", robust_solve(&rho, alpha, &g, false))?;
            let summed = lib("alpha", robust_solve(&rho, alpha, &g, true))?;
            let ump = lib("alpha", optimal_type2(&rho, alpha, 0.0))?;
            table.push(csv_row![c, alpha, plain.beta, summed.beta, ump]);
        }
    }
    Ok(RunOutput {
        table,
        plot: plot("Robust Type II error", "alpha", &["beta_robust"], &["c"]),
    })
}

fn scheme_variants(p: &Params, vocab: usize) -> Result<Vec<SchemeVariant>, HarnessError> {
    let mut out = vec![
        SchemeVariant::Ump,
        SchemeVariant::SoftRedList {
            gamma: get(p, "srl_gamma", 0.5)?,
            delta: get(p, "srl_delta", 2.0)?,
        },
    ];
    if vocab == 2 {
        out.push(SchemeVariant::ChristBinary {
            lambda: get(p, "christ_lambda", 4.0)?,
        });
    }
    out.push(SchemeVariant::Its {
        resamples: get(p, "its_resamples", 99)?,
        block_k: get(p, "its_block", 10)?,
        shared_permutation: get(p, "its_shared", true)?,
    });
    Ok(out)
}

fn variant_key(v: &SchemeVariant) -> &'static str {
    match v {
        SchemeVariant::SoftRedList { .. } => "srl_gamma",
        SchemeVariant::ChristBinary { .. } => "christ_lambda",
        SchemeVariant::Its { .. } => "its_block",
        SchemeVariant::Ump => "lm",
    }
}

/// Empirical Type I/II of every scheme, the UMP baseline included.
fn run_schemes(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let p = &cfg.params;
    let lm_spec = p.get("lm").map_or("builtin:binary-markov", String::as_str);
    let lm = lib("lm", ToyLM::from_spec(lm_spec))?;
    let ns: Vec<usize> = get_list(p, "n", "50,100,200")?;
    let alphas: Vec<f64> = get_list(p, "alpha", "0.01,0.05")?;
    let trials: usize = get(p, "trials", 200)?;
    if let Some(&a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
        return Err(HarnessError::config("alpha", format!("{a} is outside (0, 1]")));
    }
    let mut table = CsvTable::new(&["scheme", "n", "alpha", "type1", "type1_se", "type2", "type2_se"]);
    for variant in scheme_variants(p, lm.vocab_size())? {
        for &n in &ns {
            let key = variant_key(&variant);
            let sc = lib(key, SchemeConfig::new(variant.clone(), alphas[0], n))?;
            let est = lib("trials", estimate_errors_multi(&lm, &sc, &alphas, trials, cfg.seed))?;
            for e in est {
                table.push(csv_row![
                    variant.name(),
                    n,
                    e.alpha,
                    e.type1,
                    e.type1_se,
                    e.type2,
                    e.type2_se
                ]);
            }
        }
    }
    Ok(RunOutput {
        table,
        plot: plot("Empirical Type II error", "n", &["type2"], &["scheme", "alpha"]),
    })
}
