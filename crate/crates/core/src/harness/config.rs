use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, Percept, PsLiteAgent, RurAgent, RurWithoutReplacement};
use crate::env::{MazeEnv, MazeSpec, PerceptMode};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::space::Spaces;
use crate::tester::{LemmaScenario, Scenario};

/// Current configuration schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides the configured base seed.
pub const SEED_ENV_VAR: &str = "QRL_SEED";

/// Default glow of the ps_lite reference agent.
pub const PS_LITE_GLOW: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FirstWinBenchmark,
    /// Rate of A against A^q over a common window; id `theorem1`.
    #[serde(rename = "theorem1")]
    RateComparison,
    PBound,
    LemmaCheck,
    QaaCheck,
    HijackCheck,
}

impl ExperimentKind {
    pub fn id(&self) -> &'static str {
        match self {
            ExperimentKind::FirstWinBenchmark => "first-win-benchmark",
            ExperimentKind::RateComparison => "theorem1",
            ExperimentKind::PBound => "p-bound",
            ExperimentKind::LemmaCheck => "lemma-check",
            ExperimentKind::QaaCheck => "qaa-check",
            ExperimentKind::HijackCheck => "hijack-check",
        }
    }
}

/// Where the maze comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvConfig {
    /// Unique-path line maze with `n` actions and shortest path `m`.
    Line {
        n: usize,
        m: usize,
        m_max: Option<usize>,
    },
    File {
        path: PathBuf,
    },
}

impl EnvConfig {
    pub fn spec(&self) -> Result<MazeSpec> {
        match self {
            EnvConfig::Line { n, m, m_max } => MazeSpec::line(*n, *m, m_max.unwrap_or(*m)),
            EnvConfig::File { path } => MazeSpec::load(path),
        }
    }

    pub fn build(&self) -> Result<MazeEnv> {
        MazeEnv::with_mode(self.spec()?, PerceptMode::WithId)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentConfig {
    Rur,
    RurWithoutReplacement,
    PsLite {
        #[serde(default = "default_glow")]
        glow: f64,
        #[serde(default)]
        damping: f64,
    },
}

fn default_glow() -> f64 {
    PS_LITE_GLOW
}

impl AgentConfig {
    pub fn build(&self, spaces: &Spaces) -> Result<ConfiguredAgent> {
        Ok(match self {
            AgentConfig::Rur => ConfiguredAgent::Rur(RurAgent::new(spaces.clone())),
            AgentConfig::RurWithoutReplacement => {
                ConfiguredAgent::RurWithoutReplacement(RurWithoutReplacement::new(spaces.clone()))
            }
            AgentConfig::PsLite { glow, damping } => {
                ConfiguredAgent::PsLite(PsLiteAgent::new(spaces.clone(), *glow, *damping)?)
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AgentConfig::Rur => "rur",
            AgentConfig::RurWithoutReplacement => "rur-without-replacement",
            AgentConfig::PsLite { .. } => "ps-lite",
        }
    }
}

/// One of the reference agents, chosen at run time.
#[derive(Clone, Debug)]
pub enum ConfiguredAgent {
    Rur(RurAgent),
    RurWithoutReplacement(RurWithoutReplacement),
    PsLite(PsLiteAgent),
}

impl Agent for ConfiguredAgent {
    fn spaces(&self) -> &Spaces {
        match self {
            ConfiguredAgent::Rur(a) => a.spaces(),
            ConfiguredAgent::RurWithoutReplacement(a) => a.spaces(),
            ConfiguredAgent::PsLite(a) => a.spaces(),
        }
    }

    fn reset(&mut self) {
        match self {
            ConfiguredAgent::Rur(a) => a.reset(),
            ConfiguredAgent::RurWithoutReplacement(a) => a.reset(),
            ConfiguredAgent::PsLite(a) => a.reset(),
        }
    }

    fn act(&mut self, percept: Percept, rng: &mut RngStream) -> usize {
        match self {
            ConfiguredAgent::Rur(a) => a.act(percept, rng),
            ConfiguredAgent::RurWithoutReplacement(a) => a.act(percept, rng),
            ConfiguredAgent::PsLite(a) => a.act(percept, rng),
        }
    }
}

fn default_trials() -> u64 {
    1
}

fn default_window_games() -> u64 {
    200
}

/// A single experiment, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub env: Option<EnvConfig>,
    #[serde(default)]
    pub agent: Option<AgentConfig>,
    /// Confidence parameter of the quantum-enhanced agent.
    #[serde(default)]
    pub k: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Games in the comparison window of `theorem1`.
    #[serde(default = "default_window_games")]
    pub window_games: u64,
    /// Lemma for `lemma-check`; all four when absent.
    #[serde(default)]
    pub lemma: Option<u8>,
    /// Write one JSONL history per trial under `histories/`.
    #[serde(default)]
    pub record_histories: bool,
    /// Run `hijack-check` with the reward slot left mis-signed.
    #[serde(default)]
    pub mutate: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            env: None,
            agent: None,
            k: None,
            trials: 1,
            seed: 0,
            output: None,
            threads: None,
            window_games: default_window_games(),
            lemma: None,
            record_histories: false,
            mutate: false,
        }
    }

    /// Parses and validates; `QRL_SEED` wins over the file's seed.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        if let Ok(s) = std::env::var(SEED_ENV_VAR) {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV_VAR}={s} is not an integer")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0
            || self.window_games == 0
            || self.k == Some(0)
            || self.threads == Some(0)
        {
            return Err(Error::Config("counts must be positive".into()));
        }
        if let Some(l) = self.lemma {
            if !(1..=4).contains(&l) {
                return Err(Error::Config(format!("no lemma {l}")));
            }
        }
        if let Some(EnvConfig::File { path }) = &self.env {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "environment file {} not found",
                    path.display()
                )));
            }
        }
        let needs_env = matches!(
            self.experiment,
            ExperimentKind::FirstWinBenchmark
                | ExperimentKind::RateComparison
                | ExperimentKind::PBound
        );
        if needs_env && self.env.is_none() {
            return Err(Error::Config(format!(
                "{} needs an `env`",
                self.experiment.id()
            )));
        }
        if needs_env && self.k.is_none() {
            return Err(Error::Config(format!("{} needs `k`", self.experiment.id())));
        }
        Ok(())
    }

    /// Sets one numeric parameter by name, for sweeps.
    /// `output`, or `results/<experiment id>` when unset.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| Path::new("results").join(self.experiment.id()))
    }

    pub fn set_param(&mut self, name: &str, value: &str) -> Result<()> {
        let parse = |v: &str| -> Result<u64> {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{v}` is not a non-negative integer")))
        };
        match name {
            "k" => self.k = Some(parse(value)?),
            "trials" => self.trials = parse(value)?,
            "seed" => self.seed = parse(value)?,
            "window_games" => self.window_games = parse(value)?,
            "m" | "n" | "m_max" => match &mut self.env {
                Some(EnvConfig::Line { n, m, m_max }) => {
                    let v = parse(value)? as usize;
                    match name {
                        "m" => *m = v,
                        "n" => *n = v,
                        _ => *m_max = Some(v),
                    }
                }
                _ => return Err(Error::Config(format!("`{name}` needs a line environment"))),
            },
            other => return Err(Error::Config(format!("cannot sweep `{other}`"))),
        }
        self.validate()
    }
}

/// A lemma scenario as written in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioFile {
    ScriptedClassical { rounds: usize },
    SuperpositionAgent { rounds: usize },
    CoherentMemory { rounds: usize },
    Search { epoch_len: usize, trials: u64 },
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<LemmaScenario> {
        Ok(match *self {
            ScenarioFile::ScriptedClassical { rounds } => {
                LemmaScenario::Interaction(Scenario::scripted_classical(rounds)?)
            }
            ScenarioFile::SuperpositionAgent { rounds } => {
                LemmaScenario::Interaction(Scenario::superposition_agent(rounds)?)
            }
            ScenarioFile::CoherentMemory { rounds } => {
                LemmaScenario::Interaction(Scenario::coherent_memory(rounds)?)
            }
            ScenarioFile::Search { epoch_len, trials } => {
                LemmaScenario::Search { epoch_len, trials }
            }
        })
    }
}
