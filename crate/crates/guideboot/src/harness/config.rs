//! Line-oriented `dotted.key = value` experiment configs.
//!
//! Unknown keys are rejected, duplicates are rejected with both line
//! numbers, and every `agent.*` hyperparameter must apply to at least one
//! of the configured agents. Missing keys take the documented defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::guidance::DensityKind;
use crate::models::ModelKind;

/// Which environment serves the candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    GlmSynthetic,
    NonlinearSynthetic,
    LoggedPool,
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub horizon: u64,
    pub pool_path: Option<PathBuf>,
}

/// Shared hyperparameter block; each agent reads only the fields that
/// apply to it (validated at parse time).
#[derive(Debug, Clone)]
pub struct AgentHyper {
    pub models: usize,
    pub alpha: f64,
    pub density: DensityKind,
    pub batch_size: usize,
    pub capacity: usize,
    pub minibatches: usize,
    pub epsilon: f64,
    pub pair_prob: f64,
    pub dropout_rate: f64,
    pub shaping: f64,
    pub refit_period: usize,
    pub learning_rate: f64,
    pub ucb_alpha: f64,
    pub model_kind: ModelKind,
}

impl Default for AgentHyper {
    fn default() -> Self {
        AgentHyper {
            models: 5,
            alpha: 1.0,
            density: DensityKind::Harmonic,
            batch_size: 512,
            capacity: 512,
            minibatches: 4,
            epsilon: 0.1,
            pair_prob: 0.5,
            dropout_rate: 0.1,
            shaping: 0.25,
            refit_period: 50,
            learning_rate: 1e-3,
            ucb_alpha: 0.1,
            model_kind: ModelKind::Glm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub stride: u64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub agents: Vec<String>,
    pub hyper: AgentHyper,
    pub output: OutputConfig,
    pub seeds: Vec<u64>,
}

/// The registered agent names.
pub const AGENT_REGISTRY: &[&str] = &[
    "uniform",
    "epsilon-greedy",
    "epsilon-greedy-decay",
    "glm-ucb",
    "ts-blr",
    "bootstrap",
    "obb",
    "giro",
    "guideboot",
    "online-guideboot",
    "greedy-online",
    "deep-ucb1",
    "deep-ts-beta",
    "mc-dropout",
];

/// Which `agent.*` hyperparameter keys each agent accepts.
fn applicable_keys(agent: &str) -> &'static [&'static str] {
    match agent {
        "uniform" => &[],
        "epsilon-greedy" => &[
            "agent.model",
            "agent.capacity",
            "agent.minibatches",
            "agent.learning_rate",
            "agent.epsilon",
        ],
        "epsilon-greedy-decay" | "greedy-online" => &[
            "agent.model",
            "agent.capacity",
            "agent.minibatches",
            "agent.learning_rate",
        ],
        "glm-ucb" | "ts-blr" => &["agent.refit_period"],
        "bootstrap" => &[
            "agent.model",
            "agent.models",
            "agent.batch_size",
            "agent.learning_rate",
        ],
        "obb" => &["agent.model", "agent.models", "agent.learning_rate"],
        "giro" => &[
            "agent.model",
            "agent.models",
            "agent.batch_size",
            "agent.learning_rate",
            "agent.pair_prob",
        ],
        "guideboot" => &[
            "agent.model",
            "agent.models",
            "agent.batch_size",
            "agent.learning_rate",
            "agent.alpha",
            "agent.density",
        ],
        "online-guideboot" => &[
            "agent.model",
            "agent.models",
            "agent.capacity",
            "agent.minibatches",
            "agent.learning_rate",
            "agent.alpha",
            "agent.density",
        ],
        "deep-ucb1" => &[
            "agent.model",
            "agent.capacity",
            "agent.minibatches",
            "agent.learning_rate",
            "agent.ucb_alpha",
        ],
        "deep-ts-beta" => &[
            "agent.model",
            "agent.capacity",
            "agent.minibatches",
            "agent.learning_rate",
            "agent.shaping",
        ],
        "mc-dropout" => &[
            "agent.capacity",
            "agent.minibatches",
            "agent.learning_rate",
            "agent.dropout_rate",
        ],
        _ => &[],
    }
}

const KNOWN_KEYS: &[&str] = &[
    "env.kind",
    "env.horizon",
    "env.pool_path",
    "agent.name",
    "agent.model",
    "agent.models",
    "agent.alpha",
    "agent.density",
    "agent.batch_size",
    "agent.capacity",
    "agent.minibatches",
    "agent.epsilon",
    "agent.pair_prob",
    "agent.dropout_rate",
    "agent.shaping",
    "agent.refit_period",
    "agent.learning_rate",
    "agent.ucb_alpha",
    "output.records",
    "output.summary",
    "output.stride",
    "seeds",
];

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, path)
}

pub fn parse_config_str(text: &str, path: &Path) -> Result<RunConfig> {
    let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(path, line_no, format!("expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::parse(path, line_no, format!("unknown key `{key}`")));
        }
        if let Some((_, first_line)) = entries.get(&key) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate key `{key}` (first set on line {first_line})"),
            ));
        }
        entries.insert(key, (value, line_no));
    }

    let get = |key: &str| entries.get(key).cloned();
    let parse_err = |line: usize, msg: String| Error::parse(path, line, msg);

    // Environment.
    let kind = match get("env.kind") {
        Some((v, line)) => match v.as_str() {
            "glm-synthetic" => EnvKind::GlmSynthetic,
            "nonlinear-synthetic" => EnvKind::NonlinearSynthetic,
            "logged-pool" => EnvKind::LoggedPool,
            other => {
                return Err(parse_err(
                    line,
                    format!(
                        "unknown environment `{other}` (expected glm-synthetic, \
                         nonlinear-synthetic, or logged-pool)"
                    ),
                ))
            }
        },
        None => EnvKind::GlmSynthetic,
    };
    let horizon = match get("env.horizon") {
        Some((v, line)) => v
            .parse::<u64>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| parse_err(line, format!("horizon must be an integer >= 1, got `{v}`")))?,
        None => 10_000,
    };
    let pool_path = match get("env.pool_path") {
        Some((v, line)) => {
            if kind != EnvKind::LoggedPool {
                return Err(parse_err(
                    line,
                    "env.pool_path only applies to the logged-pool environment".into(),
                ));
            }
            Some(PathBuf::from(v))
        }
        None => {
            if kind == EnvKind::LoggedPool {
                return Err(Error::parse(
                    path,
                    0,
                    "logged-pool environment requires env.pool_path",
                ));
            }
            None
        }
    };

    // Agents.
    let (names_raw, names_line) = get("agent.name")
        .ok_or_else(|| Error::parse(path, 0, "missing required key `agent.name`"))?;
    let agents: Vec<String> = names_raw
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if agents.is_empty() {
        return Err(parse_err(names_line, "agent.name lists no agents".into()));
    }
    for name in &agents {
        if !AGENT_REGISTRY.contains(&name.as_str()) {
            return Err(parse_err(
                names_line,
                format!(
                    "unknown agent `{name}` (registered: {})",
                    AGENT_REGISTRY.join(", ")
                ),
            ));
        }
    }
    {
        let mut sorted = agents.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != agents.len() {
            return Err(parse_err(names_line, "agent.name lists an agent twice".into()));
        }
    }

    // Every provided hyperparameter must matter to some configured agent.
    for key in entries.keys() {
        if key.starts_with("agent.") && key != "agent.name" {
            let used = agents.iter().any(|a| applicable_keys(a).contains(&key.as_str()));
            if !used {
                let (_, line) = entries[key];
                return Err(parse_err(
                    line,
                    format!(
                        "key `{key}` does not apply to any configured agent ({})",
                        agents.join(", ")
                    ),
                ));
            }
        }
    }

    let mut hyper = AgentHyper::default();
    // Deep agents default to the MLP reward network.
    if agents.iter().all(|a| matches!(a.as_str(), "deep-ucb1" | "deep-ts-beta" | "mc-dropout")) {
        hyper.model_kind = ModelKind::Mlp;
    }
    macro_rules! set_num {
        ($key:expr, $field:ident, $ty:ty, $check:expr, $desc:expr) => {
            if let Some((v, line)) = get($key) {
                let parsed = v.parse::<$ty>().ok().filter($check).ok_or_else(|| {
                    parse_err(line, format!("{} must be {}, got `{}`", $key, $desc, v))
                })?;
                hyper.$field = parsed;
            }
        };
    }
    set_num!("agent.models", models, usize, |&k| k >= 1, "an integer >= 1");
    set_num!(
        "agent.alpha",
        alpha,
        f64,
        |&a| a >= 0.0 && a.is_finite(),
        "a finite number >= 0"
    );
    set_num!("agent.batch_size", batch_size, usize, |&b| b >= 1, "an integer >= 1");
    set_num!("agent.capacity", capacity, usize, |&c| c >= 1, "an integer >= 1");
    set_num!("agent.minibatches", minibatches, usize, |&n| n >= 1, "an integer >= 1");
    set_num!(
        "agent.epsilon",
        epsilon,
        f64,
        |&e| (0.0..=1.0).contains(&e),
        "a number in [0, 1]"
    );
    set_num!(
        "agent.pair_prob",
        pair_prob,
        f64,
        |&p| (0.0..=1.0).contains(&p),
        "a number in [0, 1]"
    );
    set_num!(
        "agent.dropout_rate",
        dropout_rate,
        f64,
        |&r| (0.0..1.0).contains(&r),
        "a number in [0, 1)"
    );
    set_num!(
        "agent.shaping",
        shaping,
        f64,
        |&s| s > 0.0 && s.is_finite(),
        "a positive number"
    );
    set_num!("agent.refit_period", refit_period, usize, |&p| p >= 1, "an integer >= 1");
    set_num!(
        "agent.learning_rate",
        learning_rate,
        f64,
        |&lr| lr > 0.0 && lr.is_finite(),
        "a positive number"
    );
    set_num!(
        "agent.ucb_alpha",
        ucb_alpha,
        f64,
        |&a| a >= 0.0 && a.is_finite(),
        "a finite number >= 0"
    );
    if let Some((v, line)) = get("agent.density") {
        hyper.density = match v.as_str() {
            "action-count" => DensityKind::ActionCount,
            "harmonic" => DensityKind::Harmonic,
            other => {
                return Err(parse_err(
                    line,
                    format!("unknown density `{other}` (expected action-count or harmonic)"),
                ))
            }
        };
    }
    if let Some((v, line)) = get("agent.model") {
        hyper.model_kind = match v.as_str() {
            "glm" => ModelKind::Glm,
            "mlp" => ModelKind::Mlp,
            other => {
                return Err(parse_err(
                    line,
                    format!("unknown model `{other}` (expected glm or mlp)"),
                ))
            }
        };
        if hyper.model_kind == ModelKind::Glm && agents.iter().any(|a| a == "mc-dropout") {
            return Err(parse_err(line, "mc-dropout requires the mlp model".into()));
        }
    }

    // Output.
    let records = get("output.records")
        .map(|(v, _)| PathBuf::from(v))
        .unwrap_or_else(|| PathBuf::from("records.csv"));
    let summary = get("output.summary")
        .map(|(v, _)| PathBuf::from(v))
        .unwrap_or_else(|| PathBuf::from("summary.csv"));
    let stride = match get("output.stride") {
        Some((v, line)) => v
            .parse::<u64>()
            .ok()
            .filter(|&s| s >= 1)
            .ok_or_else(|| parse_err(line, format!("stride must be an integer >= 1, got `{v}`")))?,
        None => 100,
    };

    // Seeds: either `a..b` (half-open) or a comma list.
    let seeds = match get("seeds") {
        Some((v, line)) => parse_seeds(&v)
            .ok_or_else(|| parse_err(line, format!("seeds must be `a..b` or a comma list, got `{v}`")))?,
        None => (0..50).collect(),
    };
    if seeds.is_empty() {
        return Err(Error::parse(path, 0, "seed list is empty"));
    }

    Ok(RunConfig {
        env: EnvConfig {
            kind,
            horizon,
            pool_path,
        },
        agents,
        hyper,
        output: OutputConfig {
            records,
            summary,
            stride,
        },
        seeds,
    })
}

/// `a..b` half-open range or `s1,s2,...` list.
pub fn parse_seeds(text: &str) -> Option<Vec<u64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a = a.trim().parse::<u64>().ok()?;
        let b = b.trim().parse::<u64>().ok()?;
        if a >= b {
            return None;
        }
        return Some((a..b).collect());
    }
    let mut out = Vec::new();
    for part in text.split(',') {
        out.push(part.trim().parse::<u64>().ok()?);
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}
