use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentConfig, ConfiguredAgent, ExperimentConfig, ExperimentKind};
use super::stats::{Check, MetricSummary};
use crate::agent::{Agent, Percept};
use crate::env::{ControllableEnv, Environment, MazeEnv, MazeSpec, PerceptMode, StochasticEnv};
use crate::error::{Error, Result};
use crate::history::History;
use crate::interaction::games_to_first_win;
use crate::qagent::{
    aq_construct, build_hermitian_extension, hijack_scavenge_oracularize, hijack_with_mutation,
    synthesized_map_distance, AqConfig, AqStatus, HijackMutation,
};
use crate::qsim::{Layout, QaaSystem, Register, StateVector, C64};
use crate::rng::RngStream;
use crate::tester::{lemma_check, LemmaScenario, Scenario, TesterPolicy, TesterRecord};

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub experiment: String,
    /// Stream id of the trial; the base seed is in the summary.
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub units: String,
    /// Wall time of the trial. The only column that differs between reruns.
    pub runtime_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: String,
    pub base_seed: u64,
    pub trials: u64,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub rows: Vec<ResultsRow>,
    pub summary: Summary,
    /// Per-trial histories, when requested.
    pub histories: Histories,
}

struct Metric {
    name: String,
    value: f64,
    units: &'static str,
}

fn metric(name: impl Into<String>, value: f64, units: &'static str) -> Metric {
    Metric {
        name: name.into(),
        value,
        units,
    }
}

/// Per-trial histories keyed by stream id.
type Histories = Vec<(u64, History)>;

/// Rows, histories and checks of one experiment.
type Outcome = (Vec<ResultsRow>, Histories, Vec<Check>);

#[derive(Default)]
struct TrialOutput {
    metrics: Vec<Metric>,
    history: Option<History>,
}

/// Runs `trial` for stream ids `0..trials` in parallel.
fn run_trials<F>(cfg: &ExperimentConfig, trial: F) -> Result<(Vec<ResultsRow>, Histories)>
where
    F: Fn(u64, &mut RngStream) -> Result<TrialOutput> + Sync,
{
    let work = || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let start = Instant::now();
                let mut rng = RngStream::new(cfg.seed, t);
                let out = trial(t, &mut rng).map_err(|e| Error::Trial {
                    trial: t,
                    source: Box::new(e),
                })?;
                Ok((t, start.elapsed().as_millis() as u64, out))
            })
            .collect::<Result<Vec<_>>>()
    };
    let outputs = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut rows = Vec::new();
    let mut histories = Vec::new();
    for (t, ms, out) in outputs {
        for m in out.metrics {
            rows.push(ResultsRow {
                experiment: cfg.experiment.id().into(),
                seed: t,
                metric: m.name,
                value: m.value,
                units: m.units.into(),
                runtime_ms: ms,
            });
        }
        if let Some(h) = out.history {
            histories.push((t, h));
        }
    }
    rows.sort_by(|a, b| (a.seed, &a.metric).cmp(&(b.seed, &b.metric)));
    Ok((rows, histories))
}

/// Per-metric mean and standard error.
pub fn summarize_rows(rows: &[ResultsRow]) -> BTreeMap<String, MetricSummary> {
    let mut by: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by.entry(r.metric.clone()).or_default().push(r.value);
    }
    by.into_iter()
        .map(|(k, v)| (k, MetricSummary::of(&v)))
        .collect()
}

fn maze_env(cfg: &ExperimentConfig) -> Result<MazeEnv> {
    cfg.env
        .as_ref()
        .ok_or_else(|| Error::Config("missing `env`".into()))?
        .build()
}

fn agent_config(cfg: &ExperimentConfig, default: AgentConfig) -> AgentConfig {
    cfg.agent.clone().unwrap_or(default)
}

/// `(num_items, winners, epoch_len)` of a maze.
fn maze_shape(env: &MazeEnv) -> Result<(u64, u64, usize)> {
    let ctl = ControllableEnv::new(env.clone())?;
    Ok((
        ctl.table().num_items() as u64,
        ctl.table().num_winners() as u64,
        ctl.epoch_len(),
    ))
}

/// Plays `games` epochs, appending to `h`; returns rewards in those games.
fn play_recorded<A: Agent, E: Environment>(
    agent: &mut A,
    env: &mut E,
    pending: &mut Percept,
    games: u64,
    h: &mut History,
    rng: &mut RngStream,
) -> Result<u64> {
    let spaces = agent.spaces().clone();
    let mut rewards = 0;
    for _ in 0..games * spaces.epoch_len as u64 {
        let a = agent.act(*pending, rng);
        h.push_action(spaces.actions.label(a).clone())?;
        *pending = env.respond(a, rng);
        h.push_percept(spaces.percepts.label(pending.index).clone(), pending.reward)?;
        rewards += u64::from(pending.reward);
    }
    Ok(rewards)
}

fn first_win_benchmark(cfg: &ExperimentConfig) -> Result<Outcome> {
    let env = maze_env(cfg)?;
    let (items, winners, _) = maze_shape(&env)?;
    let k = cfg.k.expect("validated");
    let agent_cfg = agent_config(cfg, AgentConfig::Rur);
    let cap = 100 * items;
    let (rows, histories) = run_trials(cfg, |_, rng| {
        let mut classical_rng = rng.fork(1);
        let mut agent = agent_cfg.build(env.spaces())?;
        let games = games_to_first_win(&mut agent, &mut env.clone(), cap, &mut classical_rng)?;
        let mut aq_rng = rng.fork(2);
        let mut ctl = ControllableEnv::new(env.clone())?;
        let base = agent_cfg.build(env.spaces())?;
        let (aq, cost) = aq_construct(&base, &mut ctl, &AqConfig::new(k), &mut aq_rng)?;
        Ok(TrialOutput {
            metrics: vec![
                metric(
                    "classical_games_to_first_win",
                    games.unwrap_or(cap + 1) as f64,
                    "games",
                ),
                metric(
                    "aq_found",
                    f64::from(u8::from(aq.status() == AqStatus::Trained)),
                    "indicator",
                ),
                metric("aq_oracle_games_billed", cost.oracle_games as f64, "games"),
                metric("aq_oracle_calls", aq.queries_used() as f64, "games"),
            ],
            history: None,
        })
    })?;
    let metrics = summarize_rows(&rows);
    let expected = items as f64 / winners.max(1) as f64;
    let failure = 1.0 - metrics["aq_found"].mean;
    let checks = vec![
        Check::within(
            "classical_mean_games",
            metrics["classical_games_to_first_win"].mean,
            0.9 * expected,
            1.1 * expected,
        ),
        Check::at_most("aq_failure_rate", failure, 0.5f64.powi(k as i32) + 0.02),
    ];
    Ok((rows, histories, checks))
}

/// Rate of A and of A^q over the same window after the quantum phase.
fn rate_comparison(cfg: &ExperimentConfig) -> Result<Outcome> {
    let env = maze_env(cfg)?;
    let (items, _, m) = maze_shape(&env)?;
    let k = cfg.k.expect("validated");
    let agent_cfg = agent_config(cfg, AgentConfig::Rur);
    let aq_cfg = AqConfig::new(k);
    // t′ + M steps: the search budget in games plus the harvest epoch.
    let untested_games = aq_cfg.search_budget(items) + 1;
    let window = cfg.window_games;
    let window_entries = (2 * window * m as u64) as f64;
    // First tested entry: the action after t′ + M steps.
    let policy = TesterPolicy::Sporadic {
        t_switch: 2 * untested_games * m as u64 + 1,
    };
    let record = cfg.record_histories;
    let (rows, histories) = run_trials(cfg, |_, rng| {
        // Classical agent: untested games, then the window.
        let mut a_rng = rng.fork(1);
        let mut agent = agent_cfg.build(env.spaces())?;
        let mut e = env.clone();
        e.reset();
        let mut h = History::new();
        let mut pending = Percept::EMPTY;
        play_recorded(
            &mut agent,
            &mut e,
            &mut pending,
            untested_games,
            &mut h,
            &mut a_rng,
        )?;
        play_recorded(&mut agent, &mut e, &mut pending, window, &mut h, &mut a_rng)?;
        let rec = TesterRecord::from_history(&h, policy);
        let rate_a = rec.rewards_between(0, u64::MAX) as f64 / window_entries;

        // Quantum-enhanced agent: the construction uses the untested steps.
        let mut q_rng = rng.fork(2);
        let mut ctl = ControllableEnv::new(env.clone())?;
        let base: ConfiguredAgent = agent_cfg.build(env.spaces())?;
        let (mut aq, cost) = aq_construct(&base, &mut ctl, &aq_cfg, &mut q_rng)?;
        debug_assert_eq!(cost.interaction_steps, untested_games * m as u64);
        let mut e = env.clone();
        e.reset();
        let mut hq = History::new();
        let mut pending = Percept::EMPTY;
        let rewards_q = play_recorded(&mut aq, &mut e, &mut pending, window, &mut hq, &mut q_rng)?;
        let rate_aq = rewards_q as f64 / window_entries;
        Ok(TrialOutput {
            metrics: vec![
                metric("rate_a", rate_a, "rewards/entry"),
                metric("rate_aq", rate_aq, "rewards/entry"),
                metric("rate_gain", rate_aq - rate_a, "rewards/entry"),
                metric(
                    "aq_trained",
                    f64::from(u8::from(aq.status() == AqStatus::Trained)),
                    "indicator",
                ),
            ],
            history: record.then_some(h),
        })
    })?;
    let metrics = summarize_rows(&rows);
    let gain = metrics["rate_gain"];
    let checks = vec![Check::above(
        "rate_gain_over_3_stderr",
        gain.mean,
        3.0 * gain.stderr,
    )];
    Ok((rows, histories, checks))
}

fn p_bound(cfg: &ExperimentConfig) -> Result<Outcome> {
    let env = maze_env(cfg)?;
    let (items, _, _) = maze_shape(&env)?;
    let k = cfg.k.expect("validated");
    let agent_cfg = agent_config(cfg, AgentConfig::RurWithoutReplacement);
    let budget = AqConfig::new(k).search_budget(items);
    let (rows, histories) = run_trials(cfg, |_, rng| {
        let mut agent = agent_cfg.build(env.spaces())?;
        let won = games_to_first_win(&mut agent, &mut env.clone(), budget, rng)?.is_some();
        Ok(TrialOutput {
            metrics: vec![metric(
                "win_within_budget",
                f64::from(u8::from(won)),
                "indicator",
            )],
            history: None,
        })
    })?;
    let metrics = summarize_rows(&rows);
    let p = metrics["win_within_budget"];
    let bound = k as f64 / (items as f64).sqrt() + 1.0 / items as f64;
    let checks = vec![Check::at_most(
        "win_probability",
        p.mean,
        bound + 3.0 * p.stderr,
    )];
    Ok((rows, histories, checks))
}

/// The scenarios the lemma suite runs by default.
pub fn default_lemma_scenarios(lemma: u8) -> Result<Vec<LemmaScenario>> {
    Ok(match lemma {
        1 => vec![
            LemmaScenario::Interaction(Scenario::scripted_classical(4)?),
            LemmaScenario::Interaction(Scenario::superposition_agent(4)?),
        ],
        2 | 3 => vec![
            LemmaScenario::Interaction(Scenario::scripted_classical(4)?),
            LemmaScenario::Interaction(Scenario::superposition_agent(2)?),
            LemmaScenario::Interaction(Scenario::coherent_memory(3)?),
        ],
        4 => vec![LemmaScenario::Search {
            epoch_len: 6,
            trials: 2000,
        }],
        other => return Err(Error::Config(format!("no lemma {other}"))),
    })
}

fn lemma_suite(cfg: &ExperimentConfig) -> Result<Outcome> {
    let lemmas: Vec<u8> = match cfg.lemma {
        Some(l) => vec![l],
        None => vec![1, 2, 3, 4],
    };
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for l in lemmas {
        for sc in default_lemma_scenarios(l)? {
            let start = Instant::now();
            let r = lemma_check(l, &sc, cfg.seed)?;
            let name = format!("lemma{}:{}:{}", r.lemma, r.scenario, r.metric);
            rows.push(ResultsRow {
                experiment: cfg.experiment.id().into(),
                seed: 0,
                metric: name.clone(),
                value: r.value,
                units: String::new(),
                runtime_ms: start.elapsed().as_millis() as u64,
            });
            checks.push(Check {
                name,
                value: r.value,
                threshold: r.threshold,
                relation: "lemma".into(),
                pass: r.pass,
            });
        }
    }
    rows.sort_by(|a, b| (a.seed, &a.metric).cmp(&(b.seed, &b.metric)));
    Ok((rows, Vec::new(), checks))
}

/// Deviations reported by `qaa-check`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QaaErrors {
    /// Exact target action distribution against brute-force enumeration.
    pub target_distribution: f64,
    /// Conditioned-reflector fidelity trace, percept-dependent reward.
    pub conditioned_trace: f64,
    /// Literal-reflector fidelity trace, action-only reward.
    pub literal_trace_action_reward: f64,
    /// Literal-reflector fidelity trace, percept-dependent reward.
    pub literal_trace_percept_reward: f64,
}

/// Brute-force `P(a | R = 1)` against the exact target state of `coin`,
/// and fidelity traces against the rotation formula.
pub fn qaa_errors(coin: &StochasticEnv) -> Result<QaaErrors> {
    let sys = QaaSystem::new(coin)?;
    let got = sys.psi_target.register_probabilities("A")?;
    let (n, t) = (coin.num_actions(), coin.epoch_len());
    let ns = coin.num_raw_percepts();
    let mut joint = vec![0.0; got.len()];
    for (a, slot) in joint.iter_mut().enumerate() {
        let actions = crate::space::decode(a, n, t);
        for s in 0..ns.pow(t as u32) {
            let percepts = crate::space::decode(s, ns, t);
            if coin.reward(&actions, &percepts) {
                *slot += coin.sequence_probability(&actions, &percepts);
            }
        }
    }
    let z: f64 = joint.iter().sum();
    let target_distribution = got
        .iter()
        .zip(&joint)
        .map(|(g, j)| (g - j / z).abs())
        .fold(0.0, f64::max);
    let percept_reward = QaaSystem::new(&qaa_trace_instance(|a, s| {
        s.iter().filter(|&&v| v == 0).count() == 3 && a[0] == 1
    })?)?;
    let action_reward = QaaSystem::new(&qaa_trace_instance(|a, _| a == [1, 0, 1])?)?;
    Ok(QaaErrors {
        target_distribution,
        conditioned_trace: percept_reward.max_trace_error(true)?,
        literal_trace_action_reward: action_reward.max_trace_error(false)?,
        literal_trace_percept_reward: percept_reward.max_trace_error(false)?,
    })
}

/// Two actions, three steps; the last action and elapsed steps set the bias.
pub fn qaa_trace_instance(reward: impl Fn(&[usize], &[usize]) -> bool) -> Result<StochasticEnv> {
    StochasticEnv::from_fn(
        2,
        &["x", "y"],
        3,
        |a, s| {
            let bias = 0.15
                + 0.2 * a[a.len() - 1] as f64
                + 0.1 * s.iter().filter(|&&v| v == 0).count() as f64;
            vec![bias, 1.0 - bias]
        },
        reward,
    )
}

fn qaa_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (rows, _) = run_trials(
        &ExperimentConfig {
            trials: 1,
            ..cfg.clone()
        },
        |_, _| {
            let e = qaa_errors(&StochasticEnv::coin(&[0.8, 0.2])?)?;
            Ok(TrialOutput {
                metrics: vec![
                    metric(
                        "target_distribution_error",
                        e.target_distribution,
                        "probability",
                    ),
                    metric("fidelity_trace_error", e.conditioned_trace, "fidelity"),
                    metric(
                        "literal_fidelity_trace_error_action_reward",
                        e.literal_trace_action_reward,
                        "fidelity",
                    ),
                    metric(
                        "literal_fidelity_trace_error_percept_reward",
                        e.literal_trace_percept_reward,
                        "fidelity",
                    ),
                ],
                history: None,
            })
        },
    )?;
    let m = summarize_rows(&rows);
    let checks = vec![
        Check::at_most(
            "target_distribution_error",
            m["target_distribution_error"].mean,
            1e-12,
        ),
        Check::at_most("fidelity_trace_error", m["fidelity_trace_error"].mean, 1e-9),
        Check::at_most(
            "literal_fidelity_trace_error_action_reward",
            m["literal_fidelity_trace_error_action_reward"].mean,
            1e-9,
        ),
    ];
    Ok((rows, Vec::new(), checks))
}

/// Random input superpositions per epoch length in `hijack-check`.
pub const HIJACK_PURITY_INPUTS: u64 = 100;

/// Purity of the action marginal after the protocol on random inputs.
pub fn hijack_min_purity(
    m: usize,
    inputs: u64,
    mutation: HijackMutation,
    rng: &mut RngStream,
) -> Result<f64> {
    let task = MazeEnv::with_mode(MazeSpec::line(2, m, m)?, PerceptMode::ArrowOnly)?;
    let ext = build_hermitian_extension(&task)?;
    let items = 1usize << m;
    let layout = Layout::new(vec![Register::indexed("A", items)])?;
    let names: Vec<String> = (1..=m).map(|t| format!("A{t}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut worst: f64 = 1.0;
    for _ in 0..inputs {
        let amps = (0..items)
            .map(|_| C64::new(rng.unit() - 0.5, rng.unit() - 0.5))
            .collect();
        let input = StateVector::normalized(layout.clone(), amps)?;
        let (out, _) = hijack_with_mutation(&ext, &input, mutation)?;
        worst = worst.min(out.reduced(&names)?.purity());
    }
    Ok(worst)
}

fn hijack_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mutation = if cfg.mutate {
        HijackMutation::KeepPhiMinus
    } else {
        HijackMutation::None
    };
    let (rows, _) = run_trials(
        &ExperimentConfig {
            trials: 1,
            ..cfg.clone()
        },
        |_, rng| {
            let mut metrics = Vec::new();
            for m in 1..=5usize {
                let task = MazeEnv::with_mode(MazeSpec::line(2, m, m)?, PerceptMode::ArrowOnly)?;
                let ext = build_hermitian_extension(&task)?;
                metrics.push(metric(
                    format!("operator_distance_m{m}"),
                    synthesized_map_distance(&ext, mutation)?,
                    "frobenius",
                ));
                let input =
                    StateVector::uniform(Layout::new(vec![Register::indexed("A", 1 << m)])?);
                let (_, cost) = hijack_scavenge_oracularize(&ext, &input)?;
                let exact = cost.oracle_games == 2 && cost.interaction_steps == 5 * m as u64 + 1;
                metrics.push(metric(
                    format!("cost_exact_m{m}"),
                    f64::from(u8::from(exact)),
                    "indicator",
                ));
                metrics.push(metric(
                    format!("min_purity_m{m}"),
                    hijack_min_purity(m, HIJACK_PURITY_INPUTS, mutation, rng)?,
                    "purity",
                ));
            }
            Ok(TrialOutput {
                metrics,
                history: None,
            })
        },
    )?;
    let mut checks = Vec::new();
    for r in &rows {
        checks.push(if r.metric.starts_with("operator_distance") {
            Check::at_most(&r.metric, r.value, 1e-9)
        } else if r.metric.starts_with("cost_exact") {
            Check::above(&r.metric, r.value, 0.5)
        } else {
            Check::above(&r.metric, r.value, 1.0 - 1e-10 - f64::EPSILON)
        });
    }
    Ok((rows, Vec::new(), checks))
}

/// Runs an experiment: trials in parallel, then summary and checks.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (rows, histories, checks) = match cfg.experiment {
        ExperimentKind::FirstWinBenchmark => first_win_benchmark(cfg)?,
        ExperimentKind::RateComparison => rate_comparison(cfg)?,
        ExperimentKind::PBound => p_bound(cfg)?,
        ExperimentKind::LemmaCheck => lemma_suite(cfg)?,
        ExperimentKind::QaaCheck => qaa_check(cfg)?,
        ExperimentKind::HijackCheck => hijack_check(cfg)?,
    };
    let summary = Summary {
        schema_version: super::config::SCHEMA_VERSION,
        experiment: cfg.experiment.id().into(),
        base_seed: cfg.seed,
        trials: cfg.trials,
        metrics: summarize_rows(&rows),
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    Ok(ExperimentResult {
        rows,
        summary,
        histories,
    })
}

/// Writes `results.csv`, `summary.json` and, if present, `histories/<seed>.jsonl`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
    for r in &result.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&result.summary)? + "\n",
    )?;
    if !result.histories.is_empty() {
        let hdir = dir.join("histories");
        fs::create_dir_all(&hdir)?;
        for (seed, h) in &result.histories {
            let f = fs::File::create(hdir.join(format!("{seed}.jsonl")))?;
            h.write_jsonl(std::io::BufWriter::new(f))?;
        }
    }
    Ok(())
}

/// Reads `results.csv` back.
pub fn read_results(path: &Path) -> Result<Vec<ResultsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::EnvConfig;

    fn line(m: usize) -> Option<EnvConfig> {
        Some(EnvConfig::Line {
            n: 2,
            m,
            m_max: None,
        })
    }

    #[test]
    fn smoke_run_writes_one_row_per_metric() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::FirstWinBenchmark);
        cfg.env = line(4);
        cfg.k = Some(2);
        let res = run_experiment(&cfg).unwrap();
        write_outputs(&res, dir.path()).unwrap();
        let rows = read_results(&dir.path().join("results.csv")).unwrap();
        assert_eq!(rows.len(), 4);
        let mut names: Vec<&str> = rows.iter().map(|r| r.metric.as_str()).collect();
        names.dedup();
        assert_eq!(names.len(), 4);
        assert!(rows.iter().all(|r| r.seed == 0));
    }

    #[test]
    fn reruns_are_identical_apart_from_timing() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RateComparison);
        cfg.env = line(4);
        cfg.k = Some(2);
        cfg.trials = 16;
        cfg.window_games = 20;
        cfg.agent = Some(AgentConfig::PsLite {
            glow: 50.0,
            damping: 0.0,
        });
        let strip = |rows: Vec<ResultsRow>| {
            rows.into_iter()
                .map(|r| ResultsRow { runtime_ms: 0, ..r })
                .collect::<Vec<_>>()
        };
        let a = strip(run_experiment(&cfg).unwrap().rows);
        cfg.threads = Some(3);
        let b = strip(run_experiment(&cfg).unwrap().rows);
        assert_eq!(a, b);
    }

    #[test]
    fn summary_matches_the_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::PBound);
        cfg.env = line(6);
        cfg.k = Some(2);
        cfg.trials = 200;
        let res = run_experiment(&cfg).unwrap();
        write_outputs(&res, dir.path()).unwrap();
        let rows = read_results(&dir.path().join("results.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let summary: Summary = serde_json::from_str(&text).unwrap();
        for (name, s) in summarize_rows(&rows) {
            let j = summary.metrics[&name];
            assert!((s.mean - j.mean).abs() <= 1e-12);
            assert!((s.stderr - j.stderr).abs() <= 1e-12);
        }
    }

    #[test]
    fn trial_errors_carry_the_trial_index() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::FirstWinBenchmark);
        cfg.env = line(3);
        cfg.k = Some(1);
        cfg.trials = 2;
        let r = run_trials(&cfg, |t, _| {
            if t == 1 {
                Err(Error::InvalidState("boom".into()))
            } else {
                Ok(TrialOutput::default())
            }
        });
        assert!(matches!(r, Err(Error::Trial { trial: 1, .. })));
    }

    #[test]
    fn histories_are_written_on_request() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::RateComparison);
        cfg.env = line(3);
        cfg.k = Some(1);
        cfg.trials = 2;
        cfg.window_games = 5;
        cfg.record_histories = true;
        let res = run_experiment(&cfg).unwrap();
        write_outputs(&res, dir.path()).unwrap();
        let f = std::fs::File::open(dir.path().join("histories/1.jsonl")).unwrap();
        let h = History::read_jsonl(std::io::BufReader::new(f)).unwrap();
        // (k·⌈√8⌉ + 1 + 5) games of 3 steps, plus ε.
        assert_eq!(h.len(), 2 * (3 + 1 + 5) * 3 + 1);
    }

    #[test]
    fn mutated_hijack_check_fails() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::HijackCheck);
        assert!(run_experiment(&cfg).unwrap().summary.pass);
        cfg.mutate = true;
        assert!(!run_experiment(&cfg).unwrap().summary.pass);
    }
}
