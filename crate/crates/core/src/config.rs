//! Flat `key=value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, keys are case-insensitive.
//! Lists are comma separated (`t0=7.5,8.5`); the SINR grid also accepts
//! `start:step:stop`. Later lines win over earlier ones (with a warning) and
//! command-line overrides win over the file.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `b` | 2 | JT set size, serving BS included |
//! | `nr`, `nt` | 2, 4 | receive / transmit antennas |
//! | `l` | `min(nr, nt)` | sub-streams |
//! | `power` | 1 | per-BS power `P` |
//! | `snr_db` | `0:2:20` | SINR grid, `P/N0` in dB |
//! | `schemes` | `GP,AGP,SIP` | any of GP, AGP, SIP, ST |
//! | `feedback` | `perfect` | `perfect`, `codebook` or both |
//! | `d` | 4 | codebook bits per BS (list allowed) |
//! | `alpha`, `beta` | 1, 2.5 | delay scale and shape, scalar or per helper |
//! | `t0` | `7.5,8.5` | delay shift per helper (ms); extra entries ignored |
//! | `deadline` | 11 | transmission deadline `T` (ms) |
//! | `p` | unset | helper probabilities; bypasses the delay model |
//! | `delta`, `xi_th`, `n_max` | 0.01, 0.01, 100 | SIP loop controls |
//! | `realizations`, `symbols` | 1000, 10000 | Monte Carlo size |
//! | `seed` | 1 | master seed |
//! | `pa`, `gp_pa` | `auto` | `auto`, `waterfill` or `equal` |
//! | `filter` | `realized` | `realized` or `full_jt` |

use std::collections::BTreeMap;
use std::path::Path;

use crate::backhaul::{BackhaulParams, Deadline, ParticipationProfile};
use crate::error::{Error, Result};
use crate::gp::PowerAllocation;
use crate::montecarlo::{default_allocation, Feedback, Scheme, SimConfig};
use crate::sip::SipConfig;

const KEYS: &[&str] = &[
    "b", "nr", "nt", "l", "power", "snr_db", "schemes", "feedback", "d", "alpha", "beta", "t0", "deadline", "p", "delta",
    "xi_th", "n_max", "realizations", "symbols", "seed", "pa", "gp_pa", "filter",
];

pub const FULL_REALIZATIONS: usize = 10_000;
pub const FULL_SYMBOLS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// Source line, `None` for overrides.
    line: Option<usize>,
}

/// Parsed but not yet interpreted settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
    warnings: Vec<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse { line, message: format!("expected key=value, got `{content}`") });
            };
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse { line, message: format!("bad key `{}`", key) });
            }
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Parse { line, message: format!("unknown key `{key}`") });
            }
            if let Some(prev) = cfg.entries.get(&key) {
                cfg.warnings.push(format!(
                    "line {line}: `{key}` overrides the value from line {}",
                    prev.line.unwrap_or(0)
                ));
            }
            cfg.entries.insert(key, Entry { value: value.trim().to_string(), line: Some(line) });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies a `key=value` override on top of the file.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::Validation {
            field: assignment.to_string(),
            message: "override must look like key=value".into(),
        })?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Validation { field: key, message: "unknown key".into() });
        }
        self.entries.insert(key, Entry { value: value.trim().to_string(), line: None });
        Ok(())
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn value<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        let Some(entry) = self.entries.get(key) else {
            return Ok(None);
        };
        parse(&entry.value).map(Some).ok_or_else(|| {
            let message = format!("cannot read `{}` as a value for `{key}`", entry.value);
            match entry.line {
                Some(line) => Error::Parse { line, message },
                None => Error::Validation { field: key.to_string(), message },
            }
        })
    }

    pub fn to_sim_config(&self) -> Result<SimConfig> {
        let b = self.value("b", parse_num::<usize>)?.unwrap_or(2);
        if b == 0 {
            return Err(field("b", "need at least one BS"));
        }
        let nr = self.value("nr", parse_num::<usize>)?.unwrap_or(2);
        let nt = self.value("nt", parse_num::<usize>)?.unwrap_or(4);
        let helpers = b - 1;

        let probs = match self.value("p", parse_list::<f64>)? {
            Some(p) => {
                if p.len() != helpers {
                    return Err(field("p", &format!("{} probabilities given for {helpers} helpers", p.len())));
                }
                p
            }
            None => {
                let alpha = per_helper(self.value("alpha", parse_list::<f64>)?, vec![1.0], helpers, "alpha")?;
                let beta = per_helper(self.value("beta", parse_list::<f64>)?, vec![2.5], helpers, "beta")?;
                let t0 = match self.value("t0", parse_list::<f64>)? {
                    Some(t) if t.len() == 1 || t.len() == helpers => per_helper(Some(t), vec![], helpers, "t0")?,
                    Some(t) => return Err(field("t0", &format!("{} shifts given for {helpers} helpers", t.len()))),
                    None => default_t0(helpers),
                };
                let deadline = Deadline::new(self.value("deadline", parse_num::<f64>)?.unwrap_or(11.0))?;
                let params = (0..helpers)
                    .map(|i| BackhaulParams::new(alpha[i], beta[i], t0[i]))
                    .collect::<Result<Vec<_>>>()?;
                ParticipationProfile::from_backhaul(&params, deadline).probs()[1..].to_vec()
            }
        };

        let mut cfg = SimConfig::for_scenario(b, nr, &probs)?;
        cfg.nt = nt;
        cfg.streams = self.value("l", parse_num::<usize>)?.unwrap_or(nr.min(nt));
        if let Some(p) = self.value("power", parse_num::<f64>)? {
            cfg.power = p;
        }
        if let Some(grid) = self.value("snr_db", parse_grid)? {
            cfg.snr_db = grid;
        }
        if let Some(s) = self.value("schemes", |v| v.split(',').map(|s| s.parse::<Scheme>().ok()).collect())? {
            cfg.schemes = s;
        }
        let bits = self.value("d", parse_list::<u32>)?.unwrap_or(vec![4]);
        if let Some(modes) = self.value("feedback", parse_feedback_modes)? {
            cfg.feedback = Vec::new();
            for codebook in modes {
                if codebook {
                    cfg.feedback.extend(bits.iter().map(|&bits| Feedback::Codebook { bits }));
                } else {
                    cfg.feedback.push(Feedback::Perfect);
                }
            }
        }
        let mut sip = SipConfig::default();
        if let Some(v) = self.value("delta", parse_num::<f64>)? {
            sip.delta = v;
        }
        if let Some(v) = self.value("xi_th", parse_num::<f64>)? {
            sip.xi_th = v;
        }
        if let Some(v) = self.value("n_max", parse_num::<usize>)? {
            sip.n_max = v;
        }
        cfg.sip = SipConfig::new(sip.delta, sip.xi_th, sip.n_max)?;
        if let Some(v) = self.value("realizations", parse_num::<usize>)? {
            cfg.realizations = v;
        }
        if let Some(v) = self.value("symbols", parse_num::<usize>)? {
            cfg.symbols_per_realization = v;
        }
        if let Some(v) = self.value("seed", parse_num::<u64>)? {
            cfg.master_seed = v;
        }
        let auto = default_allocation(nr);
        cfg.serving_allocation = self.value("pa", parse_allocation)?.flatten().unwrap_or(auto);
        cfg.global_allocation = self.value("gp_pa", parse_allocation)?.flatten().unwrap_or(auto);
        if let Some(full) = self.value("filter", |v| match v {
            "realized" => Some(false),
            "full_jt" => Some(true),
            _ => None,
        })? {
            cfg.filter_assumes_full_jt = full;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Full Monte Carlo size: 10,000 realizations x 10^6 symbols.
pub fn apply_full_scale(cfg: &mut SimConfig) {
    cfg.realizations = FULL_REALIZATIONS;
    cfg.symbols_per_realization = FULL_SYMBOLS;
}

fn field(name: &str, message: &str) -> Error {
    Error::Validation { field: name.into(), message: message.into() }
}

fn default_t0(helpers: usize) -> Vec<f64> {
    // helpers beyond the third keep the largest shift
    (0..helpers).map(|i| if i == 0 { 7.5 } else { 8.5 }).collect()
}

fn per_helper(given: Option<Vec<f64>>, default: Vec<f64>, helpers: usize, name: &str) -> Result<Vec<f64>> {
    let v = given.unwrap_or(default);
    match v.len() {
        1 => Ok(vec![v[0]; helpers]),
        n if n == helpers => Ok(v),
        n => Err(field(name, &format!("{n} values given for {helpers} helpers"))),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Option<T> {
    v.trim().parse().ok()
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(parse_num).collect()
}

fn parse_grid(v: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop): (f64, f64, f64) = (parse_num(start)?, parse_num(step)?, parse_num(stop)?);
            if !(step > 0.0) || stop < start {
                return None;
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Some((0..=n).map(|i| start + step * i as f64).collect())
        }
        [_] => parse_list(v),
        _ => None,
    }
}

/// `true` for codebook, `false` for perfect.
fn parse_feedback_modes(v: &str) -> Option<Vec<bool>> {
    v.split(',')
        .map(|m| match m.trim() {
            "perfect" => Some(false),
            "codebook" => Some(true),
            _ => None,
        })
        .collect()
}

fn parse_allocation(v: &str) -> Option<Option<PowerAllocation>> {
    match v {
        "auto" => Some(None),
        "waterfill" => Some(Some(PowerAllocation::WaterFilling)),
        "equal" => Some(Some(PowerAllocation::Equal)),
        _ => None,
    }
}
