//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! at most once per file; command-line overrides are applied afterwards
//! through [`RunConfig::set`].

use std::fmt;
use std::path::PathBuf;

use crate::coupling::{Pairing, DEFAULT_BURN_IN, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::targets::{independence_proposal, rw_proposal, IndependenceProposal, PlanarProposal, RandomWalkProposal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    RandomWalk,
    Independence,
}

impl ProposalKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProposalKind::RandomWalk => "rw",
            ProposalKind::Independence => "is",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Silverman => write!(f, "auto"),
            Bandwidth::Fixed(h) => write!(f, "{h}"),
        }
    }
}

/// Every parameter of a run. Serialized in full into each output header.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub pair: Pairing,
    pub proposal: ProposalKind,
    pub step_scale: f64,
    pub inflation: f64,
    pub m: usize,
    pub m_list: Vec<usize>,
    pub n_updates: usize,
    pub burn_in: usize,
    pub replicates: usize,
    pub cap: u64,
    pub stationary_updates: usize,
    pub seed: u64,
    pub thin: usize,
    pub bandwidth: Bandwidth,
    pub negative_controls: bool,
    /// Empty means the command's default file name.
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            pair: Pairing::PenaltyVsNaive,
            proposal: ProposalKind::RandomWalk,
            step_scale: RandomWalkProposal::DEFAULT_SCALE,
            inflation: IndependenceProposal::DEFAULT_INFLATION,
            m: 8,
            m_list: vec![8, 16, 32, 64],
            n_updates: 10_000,
            burn_in: DEFAULT_BURN_IN,
            replicates: 1000,
            cap: DEFAULT_CAP,
            stationary_updates: 100_000,
            seed: 1,
            thin: 1,
            bandwidth: Bandwidth::Silverman,
            negative_controls: false,
            out: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "command",
    "pair",
    "proposal",
    "step_scale",
    "inflation",
    "m",
    "m_list",
    "n_updates",
    "burn_in",
    "replicates",
    "cap",
    "stationary_updates",
    "seed",
    "thin",
    "bandwidth",
    "negative_controls",
    "out",
];

fn bad(location: &str, key: &str, msg: impl fmt::Display) -> Error {
    Error::Config { location: location.to_string(), message: format!("`{key}`: {msg}") }
}

fn parse_num<T: std::str::FromStr>(location: &str, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(location, key, format!("cannot parse {value:?}: {e}")))
}

fn positive_f64(location: &str, key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_num(location, key, value)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(bad(location, key, format!("must be a positive finite number, got {value}")));
    }
    Ok(v)
}

fn positive_usize(location: &str, key: &str, value: &str) -> Result<usize> {
    let v: usize = parse_num(location, key, value)?;
    if v == 0 {
        return Err(bad(location, key, "must be positive"));
    }
    Ok(v)
}

/// Splits `text` into (line number, key, value) triples.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let n = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
            location: format!("line {n}"),
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::Config { location: format!("line {n}"), message: "empty key".into() });
        }
        if let Some((first, ..)) = out.iter().find(|(_, prev, _)| prev == key) {
            return Err(Error::Config {
                location: format!("line {n}"),
                message: format!("`{key}` already set on line {first}"),
            });
        }
        out.push((n, key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults overridden by the contents of a config file.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (line, key, value) in parse_pairs(text)? {
            cfg.set(&key, &value, &format!("line {line}"))?;
        }
        Ok(cfg)
    }

    /// Sets one key; `location` names the source in error messages.
    pub fn set(&mut self, key: &str, value: &str, location: &str) -> Result<()> {
        match key {
            "command" => self.command = value.to_string(),
            "pair" => {
                self.pair = Pairing::from_name(value).ok_or_else(|| {
                    bad(location, key, format!("expected penalty-naive or penalty-estimate, got {value:?}"))
                })?
            }
            "proposal" => {
                self.proposal = match value {
                    "rw" => ProposalKind::RandomWalk,
                    "is" => ProposalKind::Independence,
                    _ => return Err(bad(location, key, format!("expected rw or is, got {value:?}"))),
                }
            }
            "step_scale" => self.step_scale = positive_f64(location, key, value)?,
            "inflation" => self.inflation = positive_f64(location, key, value)?,
            "m" => self.m = positive_usize(location, key, value)?,
            "m_list" => {
                let list = if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|s| positive_usize(location, key, s.trim())).collect::<Result<Vec<_>>>()?
                };
                if list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad(location, key, "must be strictly increasing"));
                }
                self.m_list = list;
            }
            "n_updates" => self.n_updates = parse_num(location, key, value)?,
            "burn_in" => self.burn_in = parse_num(location, key, value)?,
            "replicates" => self.replicates = positive_usize(location, key, value)?,
            "cap" => {
                self.cap = parse_num(location, key, value)?;
                if self.cap == 0 {
                    return Err(bad(location, key, "must be positive"));
                }
            }
            "stationary_updates" => self.stationary_updates = parse_num(location, key, value)?,
            "seed" => self.seed = parse_num(location, key, value)?,
            "thin" => self.thin = positive_usize(location, key, value)?,
            "bandwidth" => {
                self.bandwidth = if value == "auto" {
                    Bandwidth::Silverman
                } else {
                    Bandwidth::Fixed(positive_f64(location, key, value)?)
                }
            }
            "negative_controls" => {
                self.negative_controls = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad(location, key, format!("expected true or false, got {value:?}"))),
                }
            }
            "out" => self.out = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            _ => {
                return Err(Error::Config { location: location.to_string(), message: format!("unknown key `{key}`") });
            }
        }
        Ok(())
    }

    /// The planar proposal selected by `proposal`, `step_scale` and `inflation`.
    pub fn planar_proposal(&self) -> Result<PlanarProposal> {
        Ok(match self.proposal {
            ProposalKind::RandomWalk => PlanarProposal::RandomWalk(rw_proposal(self.step_scale)?),
            ProposalKind::Independence => PlanarProposal::Independence(independence_proposal(self.inflation)?),
        })
    }

    /// `key = value` lines for every field, in [`KEYS`] order.
    pub fn to_lines(&self) -> Vec<String> {
        let list = self.m_list.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
        let out = self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let values: [String; 17] = [
            self.command.clone(),
            self.pair.name().to_string(),
            self.proposal.name().to_string(),
            self.step_scale.to_string(),
            self.inflation.to_string(),
            self.m.to_string(),
            list,
            self.n_updates.to_string(),
            self.burn_in.to_string(),
            self.replicates.to_string(),
            self.cap.to_string(),
            self.stationary_updates.to_string(),
            self.seed.to_string(),
            self.thin.to_string(),
            self.bandwidth.to_string(),
            self.negative_controls.to_string(),
            out,
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}")).collect()
    }
}
