//! INI-style experiment configuration.
//!
//! ```text
//! [experiment]
//! scheme = c2-mixed      # c1 | c2-exterior | c2-mixed | superposition
//! trials = 200000
//! seed = 7
//! workers = 0            # 0 = default thread pool
//!
//! [c2]
//! a = 0.3333333333333333
//! b = 0.1666666666666667
//! d = 0.1
//! m = 1
//! p = 0.7
//! deltas = optimal       # or `zero`, or a comma list like `0.2032`
//! ```
//!
//! `#` starts a comment; keys are `name = value` under a `[section]`.
//! Errors carry the offending line and field.

use std::collections::BTreeMap;
use std::fmt;

use crate::c2::SwitchingPolicy;
use crate::channel::DEFAULT_MAX_WRITES;
use crate::harness::{ExperimentConfig, SchemeSpec, StateSpec};

/// Configuration problem, positioned at a line and named field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number; 0 when the problem is the absence of a line.
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "config line {}: field `{}`: {}",
            self.line, self.field, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Raw {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    section_lines: BTreeMap<String, usize>,
}

const KNOWN_SECTIONS: [&str; 5] = ["experiment", "state", "c1", "c2", "superposition"];

fn parse_raw(text: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw::default();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::new(line_no, line, "unterminated section header"));
            };
            let name = name.trim().to_ascii_lowercase();
            if !KNOWN_SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::new(
                    line_no,
                    &name,
                    format!("unknown section; expected one of {KNOWN_SECTIONS:?}"),
                ));
            }
            if raw.sections.contains_key(&name) {
                return Err(ConfigError::new(line_no, &name, "duplicate section"));
            }
            raw.section_lines.insert(name.clone(), line_no);
            raw.sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
        } else if let Some((key, value)) = line.split_once('=') {
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            let Some(section) = &current else {
                return Err(ConfigError::new(line_no, &key, "key outside any [section]"));
            };
            let entries = raw.sections.get_mut(section).unwrap();
            if entries.contains_key(&key) {
                return Err(ConfigError::new(line_no, &key, "duplicate key"));
            }
            entries.insert(key, Entry { value, line: line_no });
        } else {
            return Err(ConfigError::new(line_no, line, "expected `key = value`"));
        }
    }
    Ok(raw)
}

struct Section<'a> {
    entries: Option<&'a BTreeMap<String, Entry>>,
    header_line: usize,
    name: &'a str,
}

impl<'a> Section<'a> {
    fn of(raw: &'a Raw, name: &'a str) -> Self {
        Self {
            entries: raw.sections.get(name),
            header_line: raw.section_lines.get(name).copied().unwrap_or(0),
            name,
        }
    }

    fn exists(&self) -> bool {
        self.entries.is_some()
    }

    fn entry(&self, key: &str) -> Option<&'a Entry> {
        self.entries.and_then(|e| e.get(key))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        if let Some(entries) = self.entries {
            for (key, entry) in entries {
                if !allowed.contains(&key.as_str()) {
                    return Err(ConfigError::new(
                        entry.line,
                        key,
                        format!("unknown key in [{}]; expected one of {allowed:?}", self.name),
                    ));
                }
            }
        }
        Ok(())
    }

    fn num<T: std::str::FromStr>(&self, key: &str, kind: &str) -> Result<Option<T>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(entry) => entry.value.parse().map(Some).map_err(|_| {
                ConfigError::new(
                    entry.line,
                    key,
                    format!("expected {kind}, got `{}`", entry.value),
                )
            }),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str, kind: &str) -> Result<(T, usize), ConfigError> {
        match self.entry(key) {
            None => Err(ConfigError::new(
                self.header_line,
                key,
                format!("missing required key in [{}]", self.name),
            )),
            Some(entry) => match entry.value.parse() {
                Ok(v) => Ok((v, entry.line)),
                Err(_) => Err(ConfigError::new(
                    entry.line,
                    key,
                    format!("expected {kind}, got `{}`", entry.value),
                )),
            },
        }
    }
}

fn check_channel(
    a: f64,
    a_line: usize,
    b: f64,
    b_line: usize,
) -> Result<(), ConfigError> {
    if !a.is_finite() || a <= 0.0 {
        return Err(ConfigError::new(
            a_line,
            "a",
            format!("noise width must be positive, got {a}"),
        ));
    }
    if !b.is_finite() || b <= 0.0 {
        return Err(ConfigError::new(
            b_line,
            "b",
            format!("offset width must be positive for this scheme, got {b}"),
        ));
    }
    if b >= a {
        return Err(ConfigError::new(
            b_line,
            "b",
            format!("offset width b = {b} must be smaller than the noise width a = {a}"),
        ));
    }
    Ok(())
}

fn parse_deltas(section: &Section, m: u32) -> Result<Vec<f64>, ConfigError> {
    let Some(entry) = section.entry("deltas") else {
        return Ok(vec![0.0; m as usize]);
    };
    let text = entry.value.to_ascii_lowercase();
    match text.as_str() {
        "optimal" => SwitchingPolicy::optimal(m)
            .map(|p| p.deltas().to_vec())
            .map_err(|e| {
                ConfigError::new(entry.line, "deltas", format!("cannot solve thresholds: {e}"))
            }),
        "zero" => Ok(vec![0.0; m as usize]),
        _ => {
            let mut out = Vec::new();
            for piece in text.split(',') {
                let v: f64 = piece.trim().parse().map_err(|_| {
                    ConfigError::new(
                        entry.line,
                        "deltas",
                        format!("expected `optimal`, `zero`, or comma-separated numbers, got `{}`", entry.value),
                    )
                })?;
                if !v.is_finite() || !(0.0..1.0).contains(&v) {
                    return Err(ConfigError::new(
                        entry.line,
                        "deltas",
                        format!("threshold {v} outside [0, 1)"),
                    ));
                }
                out.push(v);
            }
            if out.len() != m as usize {
                return Err(ConfigError::new(
                    entry.line,
                    "deltas",
                    format!("expected {m} thresholds, got {}", out.len()),
                ));
            }
            Ok(out)
        }
    }
}

fn parse_state(raw: &Raw) -> Result<StateSpec, ConfigError> {
    let section = Section::of(raw, "state");
    section.check_keys(&["kind", "s", "lo", "hi"])?;
    if !section.exists() {
        return Ok(StateSpec::Random);
    }
    let kind = section
        .entry("kind")
        .map(|e| (e.value.to_ascii_lowercase(), e.line));
    match kind.as_ref().map(|(k, l)| (k.as_str(), *l)) {
        None | Some(("random", _)) => Ok(StateSpec::Random),
        Some(("fixed", _)) => {
            let (s, _) = section.require::<f64>("s", "a number")?;
            Ok(StateSpec::Fixed(s))
        }
        Some(("range", _)) => {
            let (lo, _) = section.require::<f64>("lo", "a number")?;
            let (hi, hi_line) = section.require::<f64>("hi", "a number")?;
            // NaN lo/hi parses successfully and must be rejected here too.
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(ConfigError::new(
                    hi_line,
                    "hi",
                    format!("range [{lo}, {hi}) is empty"),
                ));
            }
            Ok(StateSpec::Range { lo, hi })
        }
        Some((other, line)) => Err(ConfigError::new(
            line,
            "kind",
            format!("expected random, fixed, or range, got `{other}`"),
        )),
    }
}

fn parse_scheme(raw: &Raw, scheme: &str, scheme_line: usize) -> Result<SchemeSpec, ConfigError> {
    match scheme {
        "c1" => {
            let section = Section::of(raw, "c1");
            if !section.exists() {
                return Err(ConfigError::new(
                    scheme_line,
                    "c1",
                    "scheme `c1` needs a [c1] section",
                ));
            }
            section.check_keys(&["a", "b", "kappa", "interval", "sub"])?;
            let (a, a_line) = section.require::<f64>("a", "a number")?;
            let (b, b_line) = section.require::<f64>("b", "a number")?;
            check_channel(a, a_line, b, b_line)?;
            let (kappa, kappa_line) = section.require::<u32>("kappa", "an unsigned integer")?;
            if kappa < 2 {
                return Err(ConfigError::new(
                    kappa_line,
                    "kappa",
                    format!("write budget must be an integer >= 2, got {kappa}"),
                ));
            }
            let interval = section.num::<u32>("interval", "an unsigned integer")?;
            let sub = section.num::<u32>("sub", "an unsigned integer")?;
            let region = match (interval, sub) {
                (Some(i), Some(t)) => Some((i, t)),
                (None, None) => None,
                (Some(_), None) => {
                    return Err(ConfigError::new(
                        section.entry("interval").unwrap().line,
                        "sub",
                        "fixing a region needs both `interval` and `sub`",
                    ))
                }
                (None, Some(_)) => {
                    return Err(ConfigError::new(
                        section.entry("sub").unwrap().line,
                        "interval",
                        "fixing a region needs both `interval` and `sub`",
                    ))
                }
            };
            Ok(SchemeSpec::C1 { a, b, kappa, region })
        }
        "c2-exterior" | "c2-mixed" => {
            let section = Section::of(raw, "c2");
            if !section.exists() {
                return Err(ConfigError::new(
                    scheme_line,
                    "c2",
                    format!("scheme `{scheme}` needs a [c2] section"),
                ));
            }
            section.check_keys(&["a", "b", "d", "m", "p", "deltas", "i"])?;
            let (a, a_line) = section.require::<f64>("a", "a number")?;
            let (b, b_line) = section.require::<f64>("b", "a number")?;
            check_channel(a, a_line, b, b_line)?;
            let (m, m_line) = section.require::<u32>("m", "an unsigned integer")?;
            if m < 1 {
                return Err(ConfigError::new(m_line, "m", "m must be at least 1"));
            }
            let deltas = parse_deltas(&section, m)?;
            if scheme == "c2-exterior" {
                let i = section.num::<u32>("i", "an unsigned integer")?;
                if let Some(i) = i {
                    if i < 1 || i > 2 * m {
                        return Err(ConfigError::new(
                            section.entry("i").unwrap().line,
                            "i",
                            format!("exterior region must lie in 1..={}", 2 * m),
                        ));
                    }
                }
                Ok(SchemeSpec::C2Exterior { a, b, m, i, deltas })
            } else {
                let (d, d_line) = section.require::<f64>("d", "a number")?;
                if !d.is_finite() || d <= 0.0 || d >= a - b {
                    return Err(ConfigError::new(
                        d_line,
                        "d",
                        format!("interior width must lie in (0, a-b) = (0, {}), got {d}", a - b),
                    ));
                }
                let (p, p_line) = section.require::<f64>("p", "a number")?;
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(ConfigError::new(
                        p_line,
                        "p",
                        format!("interior probability must lie in [0, 1], got {p}"),
                    ));
                }
                Ok(SchemeSpec::C2Mixed { a, b, d, m, p, deltas })
            }
        }
        "superposition" => {
            let section = Section::of(raw, "superposition");
            if !section.exists() {
                return Err(ConfigError::new(
                    scheme_line,
                    "superposition",
                    "scheme `superposition` needs a [superposition] section",
                ));
            }
            section.check_keys(&["n", "sigma_s2", "power", "l", "kappa", "delta"])?;
            let (n, n_line) = section.require::<f64>("n", "a number")?;
            if !n.is_finite() || n <= 0.0 {
                return Err(ConfigError::new(n_line, "n", "write noise variance must be positive"));
            }
            let (sigma_s2, s_line) = section.require::<f64>("sigma_s2", "a number")?;
            if !sigma_s2.is_finite() || sigma_s2 < 0.0 {
                return Err(ConfigError::new(
                    s_line,
                    "sigma_s2",
                    "offset variance must be nonnegative",
                ));
            }
            let (power, p_line) = section.require::<f64>("power", "a number")?;
            if !power.is_finite() || power <= 0.0 {
                return Err(ConfigError::new(p_line, "power", "write power must be positive"));
            }
            let (l, _) = section.require::<u32>("l", "an unsigned integer")?;
            let (kappa, kappa_line) = section.require::<u32>("kappa", "an unsigned integer")?;
            if kappa <= l {
                return Err(ConfigError::new(
                    kappa_line,
                    "kappa",
                    format!("budget kappa = {kappa} leaves no data writes after {l} probes"),
                ));
            }
            let (delta, d_line) = section.require::<f64>("delta", "a number")?;
            if !delta.is_finite() || delta <= 0.0 {
                return Err(ConfigError::new(d_line, "delta", "tooth width must be positive"));
            }
            Ok(SchemeSpec::Superposition { n, sigma_s2, power, l, kappa, delta })
        }
        other => Err(ConfigError::new(
            scheme_line,
            "scheme",
            format!("expected c1, c2-exterior, c2-mixed, or superposition, got `{other}`"),
        )),
    }
}

const EXPERIMENT_KEYS: [&str; 5] = ["scheme", "trials", "seed", "workers", "max_writes"];

/// Parse a full experiment description.
pub fn parse_experiment(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw = parse_raw(text)?;
    let experiment = Section::of(&raw, "experiment");
    if !experiment.exists() {
        return Err(ConfigError::new(0, "experiment", "missing [experiment] section"));
    }
    experiment.check_keys(&EXPERIMENT_KEYS)?;
    let scheme_entry = experiment.entry("scheme").ok_or_else(|| {
        ConfigError::new(experiment.header_line, "scheme", "missing required key in [experiment]")
    })?;
    let scheme = parse_scheme(
        &raw,
        &scheme_entry.value.to_ascii_lowercase(),
        scheme_entry.line,
    )?;
    let trials = experiment.num::<u64>("trials", "an unsigned integer")?.unwrap_or(100_000);
    if trials == 0 {
        return Err(ConfigError::new(
            experiment.entry("trials").unwrap().line,
            "trials",
            "trials must be >= 1",
        ));
    }
    let seed = experiment.num::<u64>("seed", "an unsigned integer")?.unwrap_or(1234);
    let workers = experiment.num::<usize>("workers", "an unsigned integer")?.unwrap_or(0);
    let max_writes = experiment
        .num::<u64>("max_writes", "an unsigned integer")?
        .unwrap_or(DEFAULT_MAX_WRITES);
    let state = parse_state(&raw)?;
    Ok(ExperimentConfig {
        scheme,
        trials,
        seed,
        workers,
        max_writes,
        state,
    })
}

/// Knobs for the validation battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationOptions {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1234,
            workers: 0,
        }
    }
}

/// Parse validation options from the `[experiment]` section (`trials`,
/// `seed`, `workers`); anything else in the file is ignored so a simulate
/// config can be reused.
pub fn parse_validation(text: &str) -> Result<ValidationOptions, ConfigError> {
    let raw = parse_raw(text)?;
    let experiment = Section::of(&raw, "experiment");
    let defaults = ValidationOptions::default();
    let trials = experiment
        .num::<u64>("trials", "an unsigned integer")?
        .unwrap_or(defaults.trials);
    if trials == 0 {
        return Err(ConfigError::new(
            experiment.entry("trials").unwrap().line,
            "trials",
            "trials must be >= 1",
        ));
    }
    Ok(ValidationOptions {
        trials,
        seed: experiment
            .num::<u64>("seed", "an unsigned integer")?
            .unwrap_or(defaults.seed),
        workers: experiment
            .num::<usize>("workers", "an unsigned integer")?
            .unwrap_or(defaults.workers),
    })
}
