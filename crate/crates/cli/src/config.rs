use std::path::{Path, PathBuf};

use kdv_actions::actions::ActionOptions;
use kdv_actions::format::{parse_inline, parse_potential, KeyValues};
use kdv_actions::kdv::FlowConfig;
use kdv_actions::verify::{Battery, Decay};
use kdv_actions::{Error, Result, TrigPotential};

const KEYS: &[&str] = &[
    "potential",
    "potential_file",
    "n_max",
    "n_min",
    "n_cap",
    "tol",
    "out",
    "seed",
    "flow.modes",
    "flow.dt",
    "flow.t_end",
    "flow.record_every",
    "flow.dealias",
    "flow.action_gaps",
    "flow.projections",
    "cascade",
    "cascade.n0",
    "cascade.cutoff",
    "cascade.amplitude",
    "battery.count",
    "battery.max_modes",
    "battery.decay",
    "battery.norm_min",
    "battery.norm_max",
    "riccati.input",
    "verify.sweep",
    "plot.gaps",
    "plot.points",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiccatiInput {
    /// The potential is `p`; `q = R(p)` is computed and inverted back.
    P,
    /// The potential is `q`.
    Q,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub n0: usize,
    pub cutoff: usize,
    pub amplitude: f64,
}

/// Effective configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Entries as given, with command-line overrides applied; echoed into every output.
    pub raw: KeyValues,
    /// Directory holding relative `potential_file` paths.
    pub base: PathBuf,
    pub out: PathBuf,
    pub n_max: Option<usize>,
    pub n_min: usize,
    pub n_cap: usize,
    pub tol: Option<f64>,
    pub flow: FlowConfig,
    pub cascade: Option<Cascade>,
    pub battery: Battery,
    pub riccati_input: RiccatiInput,
    pub sweep: bool,
    pub plot_gaps: usize,
    pub plot_points: usize,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn get<T: std::str::FromStr>(kv: &KeyValues, key: &str) -> Result<Option<T>> {
    kv.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| cfg_err(format!("`{key}` has invalid value `{v}`")))
        })
        .transpose()
}

fn positive(kv: &KeyValues, key: &str) -> Result<Option<f64>> {
    match get::<f64>(kv, key)? {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(cfg_err(format!("`{key}` must be positive, got {v}"))),
        v => Ok(v),
    }
}

fn boolean(kv: &KeyValues, key: &str) -> Result<Option<bool>> {
    match kv.get(key) {
        None => Ok(None),
        Some("true" | "yes" | "on" | "1") => Ok(Some(true)),
        Some("false" | "no" | "off" | "0") => Ok(Some(false)),
        Some(v) => Err(cfg_err(format!("`{key}` must be a boolean, got `{v}`"))),
    }
}

fn parse_decay(s: &str) -> Result<Decay> {
    let bad = || {
        cfg_err(format!(
            "`battery.decay` must be `power:<alpha>` or `exp:<beta>`, got `{s}`"
        ))
    };
    let (kind, x) = s.split_once(':').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    match kind.trim() {
        "power" => Ok(Decay::Power(x)),
        "exp" => Ok(Decay::Exponential(x)),
        _ => Err(bad()),
    }
}

impl RunConfig {
    pub fn from_key_values(raw: KeyValues, base: &Path) -> Result<Self> {
        if let Some((k, _)) = raw.entries.iter().find(|(k, _)| !KEYS.contains(&k.as_str())) {
            return Err(cfg_err(format!("unknown key `{k}`")));
        }
        let kv = &raw;
        let mut flow = FlowConfig::default();
        if let Some(m) = get(kv, "flow.modes")? {
            flow.modes = m;
        }
        if let Some(dt) = positive(kv, "flow.dt")? {
            flow.dt = dt;
        }
        if let Some(t) = get::<f64>(kv, "flow.t_end")? {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(cfg_err("`flow.t_end` must be non-negative"));
            }
            flow.t_end = t;
        }
        if let Some(r) = get(kv, "flow.record_every")? {
            flow.record_every = r;
        }
        if let Some(d) = boolean(kv, "flow.dealias")? {
            flow.dealias = d;
        }
        flow.action_gaps = get(kv, "flow.action_gaps")?.unwrap_or(8);
        if let Some(list) = kv.get("flow.projections") {
            flow.projections = list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| cfg_err(format!("bad projection cutoff `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        let cascade = if boolean(kv, "cascade")?.unwrap_or(false) {
            let c = Cascade {
                n0: get(kv, "cascade.n0")?.unwrap_or(16),
                cutoff: get(kv, "cascade.cutoff")?.unwrap_or(2),
                amplitude: get(kv, "cascade.amplitude")?.unwrap_or(1.0),
            };
            if c.n0 == 0 || c.cutoff == 0 || !(c.amplitude >= 0.0 && c.amplitude.is_finite()) {
                return Err(cfg_err(
                    "cascade needs n0 >= 1, cutoff >= 1 and a finite amplitude >= 0",
                ));
            }
            if !flow.projections.contains(&c.cutoff) {
                flow.projections.push(c.cutoff);
            }
            Some(c)
        } else {
            None
        };
        let defaults = Battery::default();
        let battery = Battery {
            seed: get(kv, "seed")?.unwrap_or(defaults.seed),
            count: get(kv, "battery.count")?.unwrap_or(defaults.count),
            max_modes: get(kv, "battery.max_modes")?.unwrap_or(defaults.max_modes),
            decay: kv
                .get("battery.decay")
                .map(parse_decay)
                .transpose()?
                .unwrap_or(defaults.decay),
            norm_range: (
                positive(kv, "battery.norm_min")?.unwrap_or(defaults.norm_range.0),
                positive(kv, "battery.norm_max")?.unwrap_or(defaults.norm_range.1),
            ),
        };
        battery.validate()?;
        let riccati_input = match kv.get("riccati.input") {
            None | Some("p") => RiccatiInput::P,
            Some("q") => RiccatiInput::Q,
            Some(v) => return Err(cfg_err(format!("`riccati.input` must be `p` or `q`, got `{v}`"))),
        };
        let n_max: Option<usize> = get(kv, "n_max")?;
        if n_max == Some(0) {
            return Err(cfg_err("`n_max` must be at least 1"));
        }
        let opts = ActionOptions::default();
        let cfg = RunConfig {
            base: base.to_path_buf(),
            out: kv
                .get("out")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("results")),
            n_max,
            n_min: get(kv, "n_min")?.unwrap_or(opts.n_min).max(1),
            n_cap: get(kv, "n_cap")?.unwrap_or(opts.n_cap).max(1),
            tol: positive(kv, "tol")?,
            flow,
            cascade,
            battery,
            riccati_input,
            sweep: boolean(kv, "verify.sweep")?.unwrap_or(true),
            plot_gaps: get(kv, "plot.gaps")?.unwrap_or(4),
            plot_points: get::<usize>(kv, "plot.points")?.unwrap_or(101).max(3),
            raw: raw.clone(),
        };
        if kv.get("potential").is_some() && kv.get("potential_file").is_some() {
            return Err(cfg_err("give either `potential` or `potential_file`, not both"));
        }
        Ok(cfg)
    }

    pub fn has_potential(&self) -> bool {
        self.raw.get("potential").is_some() || self.raw.get("potential_file").is_some()
    }

    pub fn potential(&self) -> Result<TrigPotential> {
        if let Some(spec) = self.raw.get("potential") {
            return parse_inline(spec);
        }
        if let Some(path) = self.raw.get("potential_file") {
            let p = self.base.join(path);
            let text = std::fs::read_to_string(&p)
                .map_err(|e| cfg_err(format!("cannot read potential file {}: {e}", p.display())))?;
            return parse_potential(&text);
        }
        Err(cfg_err("no potential given; set `potential` or `potential_file`"))
    }

    pub fn action_options(&self) -> ActionOptions {
        match self.n_max {
            Some(n) => ActionOptions::fixed(n),
            None => ActionOptions {
                n_min: self.n_min,
                n_cap: self.n_cap.max(self.n_min),
                adaptive: true,
            },
        }
    }
}
