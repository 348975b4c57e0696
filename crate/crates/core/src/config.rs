//! Strict configuration files: flat `key = value` lines under `[section]`
//! headers, `#` comments, no quoting.
//!
//! Sections are `[experiment]` + `[screen]` + `[emission]` for the
//! interference model and `[constraint]` for the doubled-space solver; a
//! file may carry any subset. Unknown sections, unknown keys, duplicates,
//! and invariant violations are all hard errors naming the offending key.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use crate::constraint::{hamiltonian_free, hamiltonian_harmonic, Hamiltonian, HamiltonianKind};
use crate::error::{Error, Result};
use crate::experiment::{EmissionModel, ExperimentConfig, PathId};
use crate::grid::GridSpec;
use crate::state::StateVector;

/// Initial q-space slice for the constraint solver.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStateSpec {
    /// Normalized Gaussian packet `exp(-(q-center)²/(2 width²) + i p q/ħ)`.
    Gaussian { center: f64, width: f64, momentum: f64 },
    /// Lowest eigenstate of the configured Hamiltonian.
    Ground,
    /// Equal-weight superposition of the two lowest eigenstates.
    TwoLevel,
}

/// Resolved `[constraint]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSetup {
    pub kind: HamiltonianKind,
    pub hbar: f64,
    pub grid_q: GridSpec,
    pub grid_t: GridSpec,
    pub initial: InitialStateSpec,
}

impl ConstraintSetup {
    /// Materialize the Hamiltonian and the initial slice.
    pub fn build(&self) -> Result<(Hamiltonian, StateVector)> {
        let h = match self.kind {
            HamiltonianKind::Free { mass } => hamiltonian_free(&self.grid_q, mass, self.hbar)?,
            HamiltonianKind::Harmonic { mass, omega } => {
                hamiltonian_harmonic(&self.grid_q, mass, omega, self.hbar)?
            }
        };
        let initial = match &self.initial {
            InitialStateSpec::Gaussian {
                center,
                width,
                momentum,
            } => {
                if *width <= 0.0 {
                    return Err(Error::parameter("width", "must be positive"));
                }
                let (c, w, p, hbar) = (*center, *width, *momentum, self.hbar);
                StateVector::from_fn(self.grid_q.clone(), move |q| {
                    Complex64::from_polar((-(q - c).powi(2) / (2.0 * w * w)).exp(), p * q / hbar)
                })
                .normalized()?
            }
            InitialStateSpec::Ground => h.lowest_eigenstates(1).remove(0).1,
            InitialStateSpec::TwoLevel => {
                let pairs = h.lowest_eigenstates(2);
                let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                StateVector::new(
                    self.grid_q.clone(),
                    pairs[0].1.amp() * c + pairs[1].1.amp() * c,
                )?
            }
        };
        Ok((h, initial))
    }
}

/// Fully parsed and validated configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Option<ExperimentConfig>,
    pub emission: Option<EmissionModel>,
    pub constraint: Option<ConstraintSetup>,
}

impl RunConfig {
    /// Canonical `(section.key, value)` pairs of the resolved configuration,
    /// defaults included; float values round-trip through `str::parse`.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if let Some(exp) = &self.experiment {
            let pairs: [(&str, f64); 10] = [
                ("experiment.wavelength", exp.wavelength),
                ("experiment.v_group", exp.v_group),
                ("experiment.v_phase", exp.v_phase),
                ("experiment.slit_separation", exp.slit_separation),
                ("experiment.screen_distance", exp.screen_distance),
                ("experiment.extra_long_path", exp.extra_long_path),
                ("experiment.delta_t", exp.delta_t),
                ("experiment.pulse_sigma", exp.pulse_sigma),
                ("experiment.t1", exp.t1),
                ("experiment.hbar", exp.hbar),
            ];
            for (k, v) in pairs {
                out.push((k.to_string(), format!("{v:e}")));
            }
            out.push(("screen.lo".into(), format!("{:e}", exp.screen.lo())));
            out.push(("screen.hi".into(), format!("{:e}", exp.screen.hi())));
            out.push(("screen.n".into(), format!("{}", exp.screen.n())));
        }
        if let Some(emission) = &self.emission {
            out.push(("emission.model".into(), emission.label()));
            match emission {
                EmissionModel::Coherent { c_a, c_b } => {
                    out.push(("emission.weight_a".into(), format!("{:e}", c_a.norm_sqr())));
                    out.push(("emission.phase".into(), format!("{:e}", (c_a * c_b.conj()).arg())));
                }
                EmissionModel::Single(_) => {}
                EmissionModel::Incoherent { p_a, p_b } => {
                    out.push(("emission.p_a".into(), format!("{p_a:e}")));
                    out.push(("emission.p_b".into(), format!("{p_b:e}")));
                }
            }
        }
        if let Some(cons) = &self.constraint {
            match cons.kind {
                HamiltonianKind::Free { mass } => {
                    out.push(("constraint.hamiltonian".into(), "free".into()));
                    out.push(("constraint.mass".into(), format!("{mass:e}")));
                }
                HamiltonianKind::Harmonic { mass, omega } => {
                    out.push(("constraint.hamiltonian".into(), "harmonic".into()));
                    out.push(("constraint.mass".into(), format!("{mass:e}")));
                    out.push(("constraint.omega".into(), format!("{omega:e}")));
                }
            }
            out.push(("constraint.hbar".into(), format!("{:e}", cons.hbar)));
            out.push(("constraint.q_lo".into(), format!("{:e}", cons.grid_q.lo())));
            out.push(("constraint.q_hi".into(), format!("{:e}", cons.grid_q.hi())));
            out.push(("constraint.n_q".into(), format!("{}", cons.grid_q.n())));
            out.push(("constraint.t_lo".into(), format!("{:e}", cons.grid_t.lo())));
            out.push(("constraint.t_hi".into(), format!("{:e}", cons.grid_t.hi())));
            out.push(("constraint.n_t".into(), format!("{}", cons.grid_t.n())));
            out.push((
                "constraint.t_periodic".into(),
                format!("{}", cons.grid_t.periodic()),
            ));
            let initial = match &cons.initial {
                InitialStateSpec::Gaussian { center, width, momentum } => {
                    out.push(("constraint.center".into(), format!("{center:e}")));
                    out.push(("constraint.width".into(), format!("{width:e}")));
                    out.push(("constraint.momentum".into(), format!("{momentum:e}")));
                    "gaussian"
                }
                InitialStateSpec::Ground => "ground",
                InitialStateSpec::TwoLevel => "two_level",
            };
            out.push(("constraint.initial".into(), initial.into()));
        }
        out
    }
}

const SECTIONS: [&str; 4] = ["experiment", "screen", "emission", "constraint"];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "experiment" => &[
            "wavelength",
            "v_group",
            "v_phase",
            "slit_separation",
            "screen_distance",
            "extra_long_path",
            "delta_t",
            "pulse_sigma",
            "t1",
            "hbar",
        ],
        "screen" => &["lo", "hi", "n"],
        "emission" => &["model", "weight_a", "phase", "which", "p_a", "p_b"],
        "constraint" => &[
            "hamiltonian",
            "mass",
            "omega",
            "hbar",
            "q_lo",
            "q_hi",
            "n_q",
            "t_lo",
            "t_hi",
            "n_t",
            "t_periodic",
            "initial",
            "center",
            "width",
            "momentum",
        ],
        _ => &[],
    }
}

/// Raw value plus the line it came from.
type RawSection = BTreeMap<String, (String, usize)>;

struct RawConfig {
    origin: String,
    sections: BTreeMap<String, RawSection>,
}

impl RawConfig {
    fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::ConfigParse {
                origin: origin.to_string(),
                line: line_no,
                message,
            };
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err("section header is missing `]`".into()))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(format!("unknown section `[{name}]`")));
                }
                if sections.contains_key(name) {
                    return Err(err(format!("duplicate section `[{name}]`")));
                }
                sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(err("expected `key = value`".into()));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| err(format!("key `{key}` appears before any [section]")))?;
            if !known_keys(section).contains(&key) {
                return Err(err(format!("unknown key `{key}` in [{section}]")));
            }
            let entries = sections.get_mut(section).expect("section exists");
            if entries.contains_key(key) {
                return Err(err(format!("duplicate key `{key}` in [{section}]")));
            }
            entries.insert(key.to_string(), (value.to_string(), line_no));
        }
        Ok(RawConfig {
            origin: origin.to_string(),
            sections,
        })
    }

    fn section(&self, name: &str) -> Option<&RawSection> {
        self.sections.get(name)
    }
}

struct SectionReader<'a> {
    origin: &'a str,
    name: &'a str,
    raw: &'a RawSection,
    used: std::cell::RefCell<Vec<String>>,
}

impl<'a> SectionReader<'a> {
    fn new(origin: &'a str, name: &'a str, raw: &'a RawSection) -> Self {
        SectionReader {
            origin,
            name,
            raw,
            used: std::cell::RefCell::new(Vec::new()),
        }
    }

    fn err_at(&self, line: usize, message: String) -> Error {
        Error::ConfigParse {
            origin: self.origin.to_string(),
            line,
            message,
        }
    }

    fn raw_value(&self, key: &str) -> Option<&(String, usize)> {
        let found = self.raw.get(key);
        if found.is_some() {
            self.used.borrow_mut().push(key.to_string());
        }
        found
    }

    fn require(&self, key: &str) -> Result<&(String, usize)> {
        self.raw_value(key).ok_or_else(|| {
            Error::parameter(key, format!("missing from [{}]", self.name))
        })
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        let (value, line) = self.require(key)?;
        value
            .parse::<f64>()
            .map_err(|_| self.err_at(*line, format!("key `{key}`: `{value}` is not a number")))
    }

    fn f64_opt(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw_value(key) {
            None => Ok(default),
            Some((value, line)) => value.parse::<f64>().map_err(|_| {
                self.err_at(*line, format!("key `{key}`: `{value}` is not a number"))
            }),
        }
    }

    fn usize_req(&self, key: &str) -> Result<usize> {
        let (value, line) = self.require(key)?;
        value.parse::<usize>().map_err(|_| {
            self.err_at(*line, format!("key `{key}`: `{value}` is not a positive integer"))
        })
    }

    fn bool_opt(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw_value(key) {
            None => Ok(default),
            Some((value, line)) => value.parse::<bool>().map_err(|_| {
                self.err_at(*line, format!("key `{key}`: `{value}` is not true/false"))
            }),
        }
    }

    fn word_req(&self, key: &str) -> Result<(String, usize)> {
        let (value, line) = self.require(key)?;
        Ok((value.clone(), *line))
    }

    /// Every key present in the section must have been consumed; leftovers
    /// are keys that are not valid for the chosen variant.
    fn finish(self) -> Result<()> {
        let used = self.used.borrow();
        for (key, (_, line)) in self.raw.iter() {
            if !used.contains(key) {
                return Err(self.err_at(
                    *line,
                    format!("key `{key}` is not valid for this [{}] variant", self.name),
                ));
            }
        }
        Ok(())
    }
}

fn build_experiment(raw: &RawConfig) -> Result<Option<ExperimentConfig>> {
    let section = match raw.section("experiment") {
        Some(s) => s,
        None => return Ok(None),
    };
    let screen_raw = raw.section("screen").ok_or_else(|| {
        Error::parameter("screen", "config with [experiment] also needs a [screen] section")
    })?;
    let screen = {
        let r = SectionReader::new(&raw.origin, "screen", screen_raw);
        let lo = r.f64_req("lo")?;
        let hi = r.f64_req("hi")?;
        let n = r.usize_req("n")?;
        r.finish()?;
        GridSpec::new(lo, hi, n, false)?
    };
    let r = SectionReader::new(&raw.origin, "experiment", section);
    let cfg = ExperimentConfig {
        wavelength: r.f64_req("wavelength")?,
        v_group: r.f64_req("v_group")?,
        v_phase: r.f64_req("v_phase")?,
        slit_separation: r.f64_req("slit_separation")?,
        screen_distance: r.f64_req("screen_distance")?,
        extra_long_path: r.f64_req("extra_long_path")?,
        delta_t: r.f64_req("delta_t")?,
        pulse_sigma: r.f64_req("pulse_sigma")?,
        t1: r.f64_req("t1")?,
        hbar: r.f64_opt("hbar", crate::HBAR_SI)?,
        screen,
    };
    r.finish()?;
    cfg.validate()?;
    Ok(Some(cfg))
}

fn build_emission(raw: &RawConfig) -> Result<Option<EmissionModel>> {
    let section = match raw.section("emission") {
        Some(s) => s,
        None => return Ok(None),
    };
    let r = SectionReader::new(&raw.origin, "emission", section);
    let (model, line) = r.word_req("model")?;
    let emission = match model.as_str() {
        "coherent" => {
            let weight_a = r.f64_opt("weight_a", 0.5)?;
            let phase = r.f64_opt("phase", 0.0)?;
            EmissionModel::coherent_weights(weight_a, phase)?
        }
        "single" => {
            let (which, wline) = r.word_req("which")?;
            match which.as_str() {
                "A" => EmissionModel::Single(PathId::A),
                "B" => EmissionModel::Single(PathId::B),
                other => {
                    return Err(r.err_at(wline, format!("key `which`: expected A or B, got `{other}`")))
                }
            }
        }
        "incoherent" => EmissionModel::incoherent(r.f64_req("p_a")?, r.f64_req("p_b")?)?,
        other => {
            return Err(r.err_at(
                line,
                format!("key `model`: expected coherent, single, or incoherent, got `{other}`"),
            ))
        }
    };
    r.finish()?;
    Ok(Some(emission))
}

fn build_constraint(raw: &RawConfig) -> Result<Option<ConstraintSetup>> {
    let section = match raw.section("constraint") {
        Some(s) => s,
        None => return Ok(None),
    };
    let r = SectionReader::new(&raw.origin, "constraint", section);
    let (kind_word, kline) = r.word_req("hamiltonian")?;
    let mass = r.f64_req("mass")?;
    let kind = match kind_word.as_str() {
        "free" => HamiltonianKind::Free { mass },
        "harmonic" => HamiltonianKind::Harmonic {
            mass,
            omega: r.f64_req("omega")?,
        },
        other => {
            return Err(r.err_at(
                kline,
                format!("key `hamiltonian`: expected free or harmonic, got `{other}`"),
            ))
        }
    };
    let hbar = r.f64_opt("hbar", 1.0)?;
    let grid_q = GridSpec::new(r.f64_req("q_lo")?, r.f64_req("q_hi")?, r.usize_req("n_q")?, true)?;
    let grid_t = GridSpec::new(
        r.f64_req("t_lo")?,
        r.f64_req("t_hi")?,
        r.usize_req("n_t")?,
        r.bool_opt("t_periodic", true)?,
    )?;
    let (initial_word, iline) = r.word_req("initial")?;
    let initial = match initial_word.as_str() {
        "gaussian" => InitialStateSpec::Gaussian {
            center: r.f64_opt("center", 0.0)?,
            width: r.f64_req("width")?,
            momentum: r.f64_opt("momentum", 0.0)?,
        },
        "ground" => InitialStateSpec::Ground,
        "two_level" => InitialStateSpec::TwoLevel,
        other => {
            return Err(r.err_at(
                iline,
                format!("key `initial`: expected gaussian, ground, or two_level, got `{other}`"),
            ))
        }
    };
    r.finish()?;
    Ok(Some(ConstraintSetup {
        kind,
        hbar,
        grid_q,
        grid_t,
        initial,
    }))
}

/// Parse configuration text; `origin` labels error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let raw = RawConfig::parse(text, origin)?;
    Ok(RunConfig {
        experiment: build_experiment(&raw)?,
        emission: build_emission(&raw)?,
        constraint: build_constraint(&raw)?,
    })
}

/// Read and parse a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::parameter("config", format!("cannot read {}: {e}", path.display()))
    })?;
    parse_config_str(&text, &path.display().to_string())
}
