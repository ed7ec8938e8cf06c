//! JSON-facing configuration schemas and their builders.
//!
//! Probabilities may be written as doubles or as decimal strings
//! (`0.5` or `"0.5"`); they always serialize back as doubles. Every config
//! carries a `schema_version` field.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::bounds::{BoundParams, BoundRegime};
use crate::channel::{make_bec, make_bsc, make_custom, make_erasure, Dmc};
use crate::composition::BatchNetwork;
use crate::error::{Error, Result};
use crate::infotheory::InputDistribution;
use crate::montecarlo::InputLaw;
use crate::recoding::{
    builtin_scheme, BuiltinScheme, NodeMatrix, NodeStage, RecodingScheme, SchemeParams,
    SourceRecoder,
};

pub const SCHEMA_VERSION: &str = "1";

/// A probability that accepts numbers or decimal strings in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbValue(pub f64);

impl<'de> Deserialize<'de> for ProbValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = ProbValue;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or a decimal string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ProbValue, E> {
                Ok(ProbValue(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ProbValue, E> {
                Ok(ProbValue(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ProbValue, E> {
                Ok(ProbValue(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ProbValue, E> {
                v.trim()
                    .parse::<f64>()
                    .map(ProbValue)
                    .map_err(|_| E::custom(format!("not a decimal number: {v:?}")))
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Channel description: `{"kind": ..., "params": {...}, "alphabet": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ChannelSpec {
    Erasure {
        q_star_size: usize,
        epsilon: ProbValue,
    },
    Bsc {
        p: ProbValue,
    },
    Bec {
        p: ProbValue,
    },
    Custom {
        rows: Vec<Vec<ProbValue>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetSpec {
    pub input: Vec<String>,
    pub output: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Optional when the channel block is embedded in a larger config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    #[serde(flatten)]
    pub spec: ChannelSpec,
    /// Required for custom channels, ignored otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<AlphabetSpec>,
}

impl ChannelConfig {
    pub fn build(&self) -> Result<Dmc> {
        if let Some(v) = &self.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::Config(format!(
                    "unsupported schema_version {v:?} (expected {SCHEMA_VERSION:?})"
                )));
            }
        }
        match &self.spec {
            ChannelSpec::Erasure {
                q_star_size,
                epsilon,
            } => make_erasure(*q_star_size, epsilon.0),
            ChannelSpec::Bsc { p } => make_bsc(p.0),
            ChannelSpec::Bec { p } => make_bec(p.0),
            ChannelSpec::Custom { rows } => {
                let alphabet = self.alphabet.as_ref().ok_or_else(|| {
                    Error::Config("custom channels need an \"alphabet\" block".into())
                })?;
                let input = Alphabet::new(alphabet.input.iter().cloned())?;
                let output = Alphabet::new(alphabet.output.iter().cloned())?;
                let rows = rows
                    .iter()
                    .map(|r| r.iter().map(|p| p.0).collect())
                    .collect();
                make_custom(input, output, rows)
            }
        }
    }
}

/// Recoding scheme description. Custom schemes give the full lookup tables
/// (stochastic rows, lexicographic index order); machine-backed recoders are
/// available through the library API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SchemeSpec {
    StoreAndForward,
    RandomMap {
        seed: u64,
    },
    Constant {
        /// Channel-input labels, one per use.
        word: Vec<String>,
    },
    Custom {
        source_rows: Vec<Vec<ProbValue>>,
        node_rows: Vec<Vec<Vec<ProbValue>>>,
    },
}

/// A full network: channel(s), dimensions and the scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: String,
    /// Applied to every link unless `links` is present.
    pub channel: ChannelConfig,
    /// Optional per-link override; length must equal `l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<ChannelConfig>>,
    pub l: usize,
    pub n: usize,
    pub m: usize,
    /// Batch alphabet labels. Defaults to the non-erasure inputs for
    /// erasure links and to the full channel input alphabet otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_alphabet: Option<Vec<String>>,
    pub scheme: SchemeSpec,
}

fn default_schema_version() -> String {
    SCHEMA_VERSION.to_string()
}

impl NetworkConfig {
    pub fn build(&self) -> Result<BatchNetwork> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})",
                self.schema_version
            )));
        }
        if self.l == 0 || self.n == 0 || self.m == 0 {
            return Err(Error::Config("l, n and m must be >= 1".into()));
        }
        let links: Vec<Dmc> = match &self.links {
            Some(list) => {
                if list.len() != self.l {
                    return Err(Error::Config(format!(
                        "{} per-link channels for l = {}",
                        list.len(),
                        self.l
                    )));
                }
                list.iter()
                    .map(ChannelConfig::build)
                    .collect::<Result<_>>()?
            }
            None => {
                let link = self.channel.build()?;
                vec![link; self.l]
            }
        };
        let batch_alphabet = match &self.batch_alphabet {
            Some(labels) => Alphabet::new(labels.iter().cloned())?,
            None => default_batch_alphabet(&self.channel.spec, &links[0])?,
        };
        let scheme = self.build_scheme(&batch_alphabet, &links[0])?;
        BatchNetwork::new(links, scheme)
    }

    fn build_scheme(&self, batch_alphabet: &Alphabet, link: &Dmc) -> Result<RecodingScheme> {
        let params = SchemeParams {
            batch_alphabet,
            batch_size: self.m,
            inner_blocklength: self.n,
            length: self.l,
            channel_input: link.input_alphabet(),
            channel_output: link.output_alphabet(),
        };
        match &self.scheme {
            SchemeSpec::StoreAndForward => builtin_scheme(&BuiltinScheme::StoreAndForward, &params),
            SchemeSpec::RandomMap { seed } => {
                builtin_scheme(&BuiltinScheme::RandomMap { seed: *seed }, &params)
            }
            SchemeSpec::Constant { word } => {
                let word = word
                    .iter()
                    .map(|label| {
                        link.input_alphabet().position(label).ok_or_else(|| {
                            Error::Config(format!("unknown channel input label {label:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                builtin_scheme(&BuiltinScheme::Constant { word }, &params)
            }
            SchemeSpec::Custom {
                source_rows,
                node_rows,
            } => {
                if node_rows.len() + 1 != self.l {
                    return Err(Error::Config(format!(
                        "{} node tables for l = {}",
                        node_rows.len(),
                        self.l
                    )));
                }
                let source = SourceRecoder::new(
                    batch_alphabet.clone(),
                    self.m,
                    self.n,
                    link.input_alphabet().clone(),
                    source_rows
                        .iter()
                        .map(|r| r.iter().map(|p| p.0).collect())
                        .collect(),
                )?;
                let nodes = node_rows
                    .iter()
                    .map(|rows| {
                        Ok(NodeStage::Matrix(NodeMatrix::from_rows(
                            link.output_alphabet(),
                            link.input_alphabet(),
                            self.n,
                            rows.iter()
                                .map(|r| r.iter().map(|p| p.0).collect())
                                .collect(),
                        )?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                RecodingScheme::new(source, nodes)
            }
        }
    }
}

/// Batches default to the symbols that actually carry data: everything but
/// the erasure for erasure links, the whole input alphabet otherwise.
fn default_batch_alphabet(spec: &ChannelSpec, link: &Dmc) -> Result<Alphabet> {
    let labels: Vec<String> = match spec {
        ChannelSpec::Erasure { .. } => link
            .input_alphabet()
            .symbols()
            .iter()
            .skip(1)
            .cloned()
            .collect(),
        _ => link.input_alphabet().symbols().to_vec(),
    };
    Alphabet::new(labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLawSpec {
    Uniform,
    Explicit(Vec<ProbValue>),
}

impl InputLawSpec {
    pub fn build(&self) -> Result<InputLaw> {
        Ok(match self {
            InputLawSpec::Uniform => InputLaw::Uniform,
            InputLawSpec::Explicit(probs) => {
                InputLaw::Explicit(InputDistribution::new(probs.iter().map(|p| p.0).collect())?)
            }
        })
    }
}

fn default_input_law() -> InputLawSpec {
    InputLawSpec::Uniform
}

/// One simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: String,
    pub network: NetworkConfig,
    pub trials: u64,
    pub rng_seed: u64,
    #[serde(default = "default_input_law")]
    pub input_law: InputLawSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeSpec {
    Erasure,
    Canonical,
    General,
}

impl From<RegimeSpec> for BoundRegime {
    fn from(r: RegimeSpec) -> Self {
        match r {
            RegimeSpec::Erasure => BoundRegime::Erasure,
            RegimeSpec::Canonical => BoundRegime::Canonical,
            RegimeSpec::General => BoundRegime::General,
        }
    }
}

/// A sweep over network lengths: simulate each length and print the
/// empirical rate next to the regime bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: String,
    pub channel: ChannelConfig,
    pub scheme: SchemeSpec,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_alphabet: Option<Vec<String>>,
    pub l_values: Vec<usize>,
    pub regime: RegimeSpec,
    /// Hop group size for the general regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    pub trials: u64,
    pub rng_seed: u64,
    #[serde(default = "default_input_law")]
    pub input_law: InputLawSpec,
}

impl SweepConfig {
    pub fn network_at(&self, l: usize) -> NetworkConfig {
        NetworkConfig {
            schema_version: SCHEMA_VERSION.to_string(),
            channel: self.channel.clone(),
            links: None,
            l,
            n: self.n,
            m: self.m,
            batch_alphabet: self.batch_alphabet.clone(),
            scheme: self.scheme.clone(),
        }
    }
}

/// Closed-form bound evaluation; either derive the channel floor from a
/// channel block or give `eps` and the alphabet sizes explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: String,
    pub regime: RegimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_values: Option<Vec<u64>>,
    pub n: u32,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<ProbValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_alphabet_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_in_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_out_size: Option<usize>,
}

impl BoundConfig {
    pub fn lengths(&self) -> Result<Vec<u64>> {
        match (&self.l, &self.l_values) {
            (Some(l), None) => Ok(vec![*l]),
            (None, Some(list)) if !list.is_empty() => Ok(list.clone()),
            _ => Err(Error::Config(
                "give exactly one of \"l\" or a non-empty \"l_values\"".into(),
            )),
        }
    }

    /// Bound parameters at one length.
    pub fn params_at(&self, length: u64) -> Result<BoundParams> {
        let (eps, q_in_size, q_out_size) = match (&self.channel, self.eps) {
            (Some(cfg), None) => {
                let link = cfg.build()?;
                let eps = match self.regime {
                    RegimeSpec::Erasure | RegimeSpec::Canonical => {
                        crate::channel::canonical_witness(&link)
                            .map(|w| w.eps)
                            .ok_or_else(|| {
                                Error::Config(
                                    "channel has no canonical witness; use the general regime"
                                        .into(),
                                )
                            })?
                    }
                    RegimeSpec::General => {
                        let floor = crate::channel::pairwise_overlap(&link);
                        if floor <= 0.0 {
                            return Err(Error::ZeroErrorPositive);
                        }
                        floor
                    }
                };
                (eps, link.num_inputs(), link.num_outputs())
            }
            (None, Some(eps)) => {
                let q_in = self
                    .q_in_size
                    .ok_or_else(|| Error::Config("explicit bounds need q_in_size".into()))?;
                let q_out = self
                    .q_out_size
                    .ok_or_else(|| Error::Config("explicit bounds need q_out_size".into()))?;
                (eps.0, q_in, q_out)
            }
            _ => {
                return Err(Error::Config(
                    "give exactly one of \"channel\" or \"eps\" (+ sizes)".into(),
                ))
            }
        };
        let batch_alphabet_size = match self.batch_alphabet_size {
            Some(s) => s,
            None => match (&self.channel, self.regime) {
                (
                    Some(ChannelConfig {
                        spec: ChannelSpec::Erasure { q_star_size, .. },
                        ..
                    }),
                    _,
                ) => *q_star_size,
                _ => q_in_size,
            },
        };
        Ok(BoundParams {
            length,
            blocklength: self.n,
            batch_size: self.m,
            group: self.k.unwrap_or(1),
            batch_alphabet_size,
            q_in_size,
            q_out_size,
            eps,
        })
    }
}
