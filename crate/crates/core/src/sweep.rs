//! Config-driven parameter sweeps.
//!
//! A JSON document selects a mode, its axes (first axis = outer loop) and
//! fixed values; [`run_sweep`] evaluates every grid point, in parallel, and
//! returns the rows in grid order. Axis and fixed-value names carry their
//! unit as a suffix (`L_nH`, `Istar_uA`, `f_GHz`, ...).

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cavity::{mode_table, s21_coupled, CoupledSystem, RectCavity, DEFAULT_DIMS};
use crate::circuit::KineticonCircuit;
use crate::constants::CONSTANTS_VERSION;
use crate::error::{Error, ReasonCode, Result, Validity};
use crate::export::{self, mode_table_rows, s21_table, Cell, OutputFormat, Table};
use crate::materials::{Material, MaterialRegistry, NanowireGeometry, DEFAULT_XI};
use crate::quantum::{spectrum_quiet, DEFAULT_DIM, LAMBDA_VALIDITY};
use crate::resonator::{
    s21, DuffingOptions, KerrConvention, Lumped, Nanowire, NetworkElement, ResonatorDesign, ResonatorNetwork,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Status value of a point that evaluated cleanly.
pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    #[serde(rename = "alpha_vs_L_Istar")]
    AlphaVsLIstar,
    #[serde(rename = "alpha_vs_dimension")]
    AlphaVsDimension,
    #[serde(rename = "resonator_s21")]
    ResonatorS21,
    #[serde(rename = "duffing_power")]
    DuffingPower,
    #[serde(rename = "cavity_modes")]
    CavityModes,
    #[serde(rename = "coupled_s21")]
    CoupledS21,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::AlphaVsLIstar => "alpha_vs_L_Istar",
            SweepMode::AlphaVsDimension => "alpha_vs_dimension",
            SweepMode::ResonatorS21 => "resonator_s21",
            SweepMode::DuffingPower => "duffing_power",
            SweepMode::CavityModes => "cavity_modes",
            SweepMode::CoupledS21 => "coupled_s21",
        }
    }

    fn axes(self) -> &'static [&'static str] {
        match self {
            SweepMode::AlphaVsLIstar => &["L_nH", "Istar_uA"],
            SweepMode::AlphaVsDimension => &["w_um"],
            SweepMode::ResonatorS21 | SweepMode::CoupledS21 => &["f_GHz"],
            SweepMode::DuffingPower => &["power_W"],
            SweepMode::CavityModes => &[],
        }
    }

    /// Accepted fixed values and their defaults.
    fn fixed_defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            SweepMode::AlphaVsLIstar => &[("f_r_GHz", 100.0)],
            SweepMode::AlphaVsDimension => &[("f_r_GHz", 100.0), ("t_nm", 5.0)],
            SweepMode::ResonatorS21 | SweepMode::DuffingPower => NETWORK_DEFAULTS,
            SweepMode::CavityModes => &[
                ("a_mm", 1.0),
                ("b_mm", 2.54),
                ("d_mm", 1.4),
                ("eps_eff", 1.0),
                ("max_index", 3.0),
                ("f_max_GHz", 400.0),
            ],
            SweepMode::CoupledS21 => &[
                ("f_cavity_GHz", 100.0),
                ("f_qubit_GHz", 100.0),
                ("lambda_q", 0.0),
                ("g_MHz", 20.0),
                ("kappa1_MHz", 1.0),
                ("kappa2_MHz", 1.0),
                ("gamma_MHz", 0.1),
            ],
        }
    }

    /// Whether rows carry a `status` column.
    pub fn has_status(self) -> bool {
        matches!(
            self,
            SweepMode::AlphaVsLIstar | SweepMode::AlphaVsDimension | SweepMode::DuffingPower
        )
    }
}

const NETWORK_DEFAULTS: &[(&str, f64)] = &[
    ("z0_ohm", 50.0),
    ("eps_eff", 6.45),
    ("f_design_GHz", 100.0),
    ("coupler_fF", 1.0),
    ("loss_np_per_m", 0.0),
    ("zref_ohm", 50.0),
    ("l0k_pH", 10.0),
    ("istar_uA", 10.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        let last = (n - 1) as f64;
        let mut v: Vec<f64> = match self.scale {
            Scale::Linear => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / last)
                .collect(),
            Scale::Log => {
                let (a, b) = (self.start.log10(), self.stop.log10());
                (0..n).map(|k| 10f64.powf(a + (b - a) * k as f64 / last)).collect()
            }
        };
        v[0] = self.start;
        v[n - 1] = self.stop;
        v
    }

    fn problems(&self, out: &mut Vec<String>) {
        let name = &self.name;
        if self.points < 2 {
            out.push(format!("axis `{name}`: points must be >= 2, got {}", self.points));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            out.push(format!("axis `{name}`: bounds must be finite"));
        } else if !(self.start < self.stop) {
            out.push(format!(
                "axis `{name}`: start ({}) must be < stop ({})",
                self.start, self.stop
            ));
        }
        if self.scale == Scale::Log && !(self.start > 0.0) {
            out.push(format!("axis `{name}`: log scale needs positive bounds"));
        }
        if name != "power_W" && !(self.start > 0.0) {
            out.push(format!("axis `{name}`: values must be positive"));
        }
        if name == "power_W" && self.start < 0.0 {
            out.push(format!("axis `{name}`: power must be >= 0"));
        }
    }
}

/// A built-in material name or a full record in laboratory units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialEntry {
    Name(String),
    Record(MaterialRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRecord {
    pub name: String,
    pub tc_k: f64,
    pub delta_mev: f64,
    #[serde(default)]
    pub n0_ev_um3: Option<f64>,
    #[serde(default)]
    pub rho_uohm_cm: Option<f64>,
    #[serde(default)]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LumpedKind {
    R,
    L,
    C,
}

/// Custom resonator layout, SI units for lumped values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ElementSpec {
    Line {
        z0_ohm: f64,
        eps_eff: f64,
        length_um: f64,
        #[serde(default)]
        loss_np_per_m: f64,
    },
    Series {
        kind: LumpedKind,
        value: f64,
    },
    Shunt {
        kind: LumpedKind,
        value: f64,
    },
    Nanowire,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub elements: Vec<ElementSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMethod {
    /// `3 I_zpf² / I*²`.
    #[default]
    Perturbative,
    /// Exact diagonalization of the truncated oscillator.
    Diagonalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KerrChoice {
    #[default]
    EnergyConsistent,
    LiteralRms,
}

impl From<KerrChoice> for KerrConvention {
    fn from(k: KerrChoice) -> Self {
        match k {
            KerrChoice::EnergyConsistent => KerrConvention::EnergyConsistent,
            KerrChoice::LiteralRms => KerrConvention::LiteralRms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub mode: SweepMode,
    #[serde(default)]
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub materials: Vec<MaterialEntry>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub network: Option<NetworkSpec>,
    #[serde(default)]
    pub method: AlphaMethod,
    /// Fock truncation for `method = diagonalization`.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub kerr: KerrChoice,
    /// Turn soft validity warnings into per-point failures.
    #[serde(default)]
    pub strict: bool,
}

impl SweepConfig {
    /// Fixed value or the mode default; `None` if the mode has no such key.
    pub fn fixed_value(&self, key: &str) -> Option<f64> {
        let default = self.mode.fixed_defaults().iter().find(|(k, _)| *k == key)?.1;
        Some(self.fixed.get(key).copied().unwrap_or(default))
    }

    fn fixed(&self, key: &str) -> f64 {
        self.fixed.get(key).copied().unwrap_or_else(|| {
            self.mode
                .fixed_defaults()
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .expect("fixed key belongs to the mode")
        })
    }

    fn validity(&self) -> Validity {
        if self.strict {
            Validity::Strict
        } else {
            Validity::Soft
        }
    }

    pub fn output_format(&self) -> OutputFormat {
        self.output.as_ref().map(|o| o.format).unwrap_or_default()
    }

    /// Checks everything and resolves the material list. All problems are
    /// collected; an unknown material on its own is reported as such.
    pub fn validate(&self, registry: &MaterialRegistry) -> Result<Vec<Material>> {
        self.validate_inner(registry, true)
    }

    /// Same as [`validate`](Self::validate) but ignores `axes`, for evaluating
    /// a single point with the mode's fixed values.
    pub fn validate_point(&self, registry: &MaterialRegistry) -> Result<Vec<Material>> {
        self.validate_inner(registry, false)
    }

    fn validate_inner(&self, registry: &MaterialRegistry, check_axes: bool) -> Result<Vec<Material>> {
        let mut problems = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            problems.push(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }

        let wanted = self.mode.axes();
        let got: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        let mut sorted_w = wanted.to_vec();
        let mut sorted_g = got.clone();
        sorted_w.sort_unstable();
        sorted_g.sort_unstable();
        if check_axes && sorted_w != sorted_g {
            problems.push(format!(
                "mode {} needs axes [{}], got [{}]",
                self.mode.name(),
                wanted.join(", "),
                got.join(", ")
            ));
        }
        if check_axes {
            for axis in &self.axes {
                axis.problems(&mut problems);
            }
        }

        let defaults = self.mode.fixed_defaults();
        for (key, value) in &self.fixed {
            if !defaults.iter().any(|(k, _)| k == key) {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                problems.push(format!(
                    "fixed `{key}` is not used by mode {} (accepted: {})",
                    self.mode.name(),
                    known.join(", ")
                ));
            } else if !value.is_finite() {
                problems.push(format!("fixed `{key}` must be finite"));
            }
        }

        if self.network.is_some() && !matches!(self.mode, SweepMode::ResonatorS21 | SweepMode::DuffingPower) {
            problems.push(format!("mode {} does not take a network", self.mode.name()));
        }
        if self.dim.is_some_and(|d| d < 4) {
            problems.push(format!("dim must be >= 4, got {}", self.dim.unwrap_or(0)));
        }

        let mut unknown = None;
        let mut materials = Vec::new();
        for entry in &self.materials {
            match resolve_material(entry, registry) {
                Ok(m) => materials.push(m),
                Err(e @ Error::UnknownMaterial { .. }) => {
                    problems.push(e.to_string());
                    unknown.get_or_insert(e);
                }
                Err(e) => problems.push(e.to_string()),
            }
        }

        if problems.is_empty() {
            // Only reached when the shape is right, so fixed lookups are safe.
            if let Err(e) = self.mode_specific(&materials) {
                problems.push(e.to_string());
            }
        }

        match (problems.len(), unknown) {
            (0, _) => Ok(materials),
            (1, Some(e)) => Err(e),
            _ => Err(Error::ConfigValidation(problems)),
        }
    }

    fn mode_specific(&self, materials: &[Material]) -> Result<()> {
        match self.mode {
            SweepMode::AlphaVsLIstar => {
                positive(&[("f_r_GHz", self.fixed("f_r_GHz"))])?;
                if !materials.is_empty() {
                    return Err(Error::Domain("alpha_vs_L_Istar takes no materials".into()));
                }
            }
            SweepMode::AlphaVsDimension => {
                positive(&[("f_r_GHz", self.fixed("f_r_GHz")), ("t_nm", self.fixed("t_nm"))])?;
                if materials.is_empty() {
                    return Err(Error::Domain("alpha_vs_dimension needs at least one material".into()));
                }
                for m in materials {
                    m.condensation_energy_density()?;
                }
                let mut names: Vec<String> = materials.iter().map(|m| m.name.to_lowercase()).collect();
                names.sort();
                names.dedup();
                if names.len() != materials.len() {
                    return Err(Error::Domain("material names must be distinct".into()));
                }
            }
            SweepMode::ResonatorS21 | SweepMode::DuffingPower => {
                self.network()?;
            }
            SweepMode::CavityModes => {
                self.cavity()?;
                let k = self.fixed("max_index");
                if !(k.fract() == 0.0 && (1.0..=20.0).contains(&k)) {
                    return Err(Error::Domain(format!(
                        "max_index must be an integer in 1..=20, got {k}"
                    )));
                }
                positive(&[("f_max_GHz", self.fixed("f_max_GHz"))])?;
            }
            SweepMode::CoupledS21 => {
                let sys = self.coupled();
                sys.validate()?;
                if sys.kappa1 + sys.kappa2 <= 0.0 {
                    return Err(Error::Domain("at least one port rate must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Resonator from the fixed design values, or from `network.elements`.
    pub fn network(&self) -> Result<ResonatorNetwork> {
        let nanowire = Nanowire {
            l0k: self.fixed("l0k_pH") * 1e-12,
            istar: self.fixed("istar_uA") * 1e-6,
        };
        let f_design = self.fixed("f_design_GHz") * 1e9;
        let zref = self.fixed("zref_ohm");
        let Some(spec) = &self.network else {
            let v_ph = ResonatorDesign::default().v_ph * (6.45 / self.fixed("eps_eff")).sqrt();
            return ResonatorDesign {
                z0: self.fixed("z0_ohm"),
                v_ph,
                f_design,
                coupler_c: self.fixed("coupler_fF") * 1e-15,
                loss: self.fixed("loss_np_per_m"),
                zref,
                nanowire,
            }
            .build();
        };
        let mut index = None;
        let mut elements = Vec::new();
        for (k, e) in spec.elements.iter().enumerate() {
            let lumped = |kind: LumpedKind, value: f64| match kind {
                LumpedKind::R => Lumped::Resistor(value),
                LumpedKind::L => Lumped::Inductor(value),
                LumpedKind::C => Lumped::Capacitor(value),
            };
            elements.push(match *e {
                ElementSpec::Line {
                    z0_ohm,
                    eps_eff,
                    length_um,
                    loss_np_per_m,
                } => {
                    positive(&[("eps_eff", eps_eff)])?;
                    NetworkElement::TransmissionLine {
                        z0: z0_ohm,
                        v_ph: crate::constants::C_LIGHT / eps_eff.sqrt(),
                        length: length_um * 1e-6,
                        loss: loss_np_per_m,
                    }
                }
                ElementSpec::Series { kind, value } => NetworkElement::SeriesImpedance(lumped(kind, value)),
                ElementSpec::Shunt { kind, value } => NetworkElement::ShuntAdmittance(lumped(kind, value)),
                ElementSpec::Nanowire => {
                    if index.replace(k).is_some() {
                        return Err(Error::Domain("network has more than one nanowire".into()));
                    }
                    NetworkElement::SeriesImpedance(Lumped::Inductor(nanowire.l0k))
                }
            });
        }
        let index = index.ok_or_else(|| Error::Domain("network needs one `nanowire` element".into()))?;
        ResonatorNetwork::new(elements, zref, index, nanowire, f_design)
    }

    pub fn cavity(&self) -> Result<RectCavity> {
        RectCavity::new(
            self.fixed("a_mm") * 1e-3,
            self.fixed("b_mm") * 1e-3,
            self.fixed("d_mm") * 1e-3,
        )?
        .with_eps(self.fixed("eps_eff"))
    }

    pub fn coupled(&self) -> CoupledSystem {
        CoupledSystem {
            f_cavity: self.fixed("f_cavity_GHz") * 1e9,
            f_qubit: self.fixed("f_qubit_GHz") * 1e9,
            lambda_q: self.fixed("lambda_q"),
            g: self.fixed("g_MHz") * 1e6,
            kappa1: self.fixed("kappa1_MHz") * 1e6,
            kappa2: self.fixed("kappa2_MHz") * 1e6,
            gamma: self.fixed("gamma_MHz") * 1e6,
            dims: DEFAULT_DIMS,
        }
    }

    /// SHA-256 of the canonical JSON form (defaults filled, keys ordered).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

fn positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn resolve_material(entry: &MaterialEntry, registry: &MaterialRegistry) -> Result<Material> {
    match entry {
        MaterialEntry::Name(name) => registry.get(name).cloned(),
        MaterialEntry::Record(r) => Material::from_lab_units(
            r.name.clone(),
            r.tc_k,
            r.delta_mev,
            r.n0_ev_um3,
            r.rho_uohm_cm,
            r.xi.unwrap_or(DEFAULT_XI),
        ),
    }
}

/// Parses and validates a JSON config against the built-in materials.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    parse_config_with(text, &MaterialRegistry::default())
}

pub fn parse_config_with(text: &str, registry: &MaterialRegistry) -> Result<SweepConfig> {
    let config: SweepConfig = serde_json::from_str(text).map_err(|e| Error::ConfigValidation(vec![e.to_string()]))?;
    config.validate(registry)?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub constants_version: &'static str,
    pub schema_version: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub table: Table,
    pub provenance: Provenance,
    /// Rows whose status is not `ok`.
    pub failures: usize,
}

impl SweepResult {
    pub fn comments(&self) -> Vec<String> {
        vec![
            format!("mode {}", self.mode.name()),
            format!("config sha256 {}", self.provenance.config_hash),
            format!("constants {}", self.provenance.constants_version),
        ]
    }

    pub fn render(&self, format: OutputFormat) -> Vec<u8> {
        export::render(&self.table, format, &self.comments())
    }

    /// Writes the result to `path`.
    pub fn emit(&self, format: OutputFormat, path: &Path) -> Result<()> {
        export::write_file(path, &self.render(format))
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, &MaterialRegistry::default())
}

pub fn run_sweep_with(config: &SweepConfig, registry: &MaterialRegistry) -> Result<SweepResult> {
    let materials = config.validate(registry)?;
    let table = match config.mode {
        SweepMode::AlphaVsLIstar => alpha_grid(config)?,
        SweepMode::AlphaVsDimension => alpha_dimension(config, &materials)?,
        SweepMode::ResonatorS21 => {
            let net = config.network()?;
            let freqs = axis_hz(config);
            let samples: Vec<_> = freqs.par_iter().map(|&f| (f, s21(&net.abcd(f), net.zref))).collect();
            s21_table(&samples)
        }
        SweepMode::DuffingPower => duffing(config)?,
        SweepMode::CavityModes => {
            let modes = mode_table(
                &config.cavity()?,
                config.fixed("max_index") as u32,
                config.fixed("f_max_GHz") * 1e9,
            )?;
            mode_table_rows(&modes)
        }
        SweepMode::CoupledS21 => s21_table(&s21_coupled(&config.coupled(), &axis_hz(config))?),
    };
    let failures = match table.column("status") {
        Some(k) => table
            .rows
            .iter()
            .filter(|r| !matches!(&r[k], Cell::Text(s) if s == STATUS_OK))
            .count(),
        None => 0,
    };
    if failures > 0 {
        log::warn!(
            "{failures} of {} points failed; see the status column",
            table.rows.len()
        );
    }
    let provenance = Provenance {
        config_hash: config.hash(),
        constants_version: CONSTANTS_VERSION,
        schema_version: SCHEMA_VERSION,
    };
    log::info!(
        "sweep {}: {} rows, config sha256 {}, constants {}",
        config.mode.name(),
        table.rows.len(),
        provenance.config_hash,
        provenance.constants_version
    );
    Ok(SweepResult {
        mode: config.mode,
        table,
        provenance,
        failures,
    })
}

fn axis_hz(config: &SweepConfig) -> Vec<f64> {
    config.axes[0].values().into_iter().map(|f| f * 1e9).collect()
}

/// Cartesian grid over the configured axes, outermost first.
fn grid(config: &SweepConfig) -> (Vec<usize>, Vec<Vec<f64>>) {
    let values: Vec<Vec<f64>> = config.axes.iter().map(AxisSpec::values).collect();
    let shape: Vec<usize> = values.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let points = (0..total)
        .map(|mut k| {
            let mut p = vec![0.0; shape.len()];
            for d in (0..shape.len()).rev() {
                p[d] = values[d][k % shape[d]];
                k /= shape[d];
            }
            p
        })
        .collect();
    (shape, points)
}

fn status(err: Option<&Error>) -> Cell {
    Cell::Text(err.map_or(STATUS_OK, |e| e.reason_code().as_str()).to_string())
}

fn alpha_grid(config: &SweepConfig) -> Result<Table> {
    let (shape, points) = grid(config);
    let il = config.axes.iter().position(|a| a.name == "L_nH").expect("validated");
    let ii = 1 - il;
    let f_r = config.fixed("f_r_GHz") * 1e9;
    let validity = config.validity();
    let dim = config.dim.unwrap_or(DEFAULT_DIM);
    let method = config.method;

    let evaluated: Vec<(Result<f64>, bool)> = points
        .par_iter()
        .map(|p| {
            let (l, istar) = (p[il] * 1e-9, p[ii] * 1e-6);
            let circuit = match KineticonCircuit::with_frequency(l, f_r, istar) {
                Ok(c) => c,
                Err(e) => return (Err(e), false),
            };
            let d = circuit.derive();
            let outside = d.lambda.abs() >= LAMBDA_VALIDITY;
            if outside && validity == Validity::Strict {
                return (
                    Err(Error::Validity(format!("|lambda| = {:e}", d.lambda.abs()))),
                    outside,
                );
            }
            let alpha = match method {
                AlphaMethod::Perturbative => Ok(3.0 * d.i_zpf * d.i_zpf / (istar * istar)),
                AlphaMethod::Diagonalization => spectrum_quiet(d.f_r, d.lambda, dim).map(|s| s.alpha_rel),
            };
            (alpha, outside)
        })
        .collect();
    let outside = evaluated.iter().filter(|e| e.1).count();
    if outside > 0 && validity == Validity::Soft {
        log::warn!("{outside} points have |lambda| >= {LAMBDA_VALIDITY:e}, outside the weak-anharmonic regime");
    }

    let mut columns: Vec<String> = config.axes.iter().map(|a| a.name.clone()).collect();
    columns.extend(["alpha".to_string(), "status".to_string()]);
    let rows = points
        .iter()
        .zip(evaluated)
        .map(|(p, (alpha, _))| {
            let mut row: Vec<Cell> = p.iter().map(|&x| Cell::Num(x)).collect();
            row.push(Cell::Num(*alpha.as_ref().unwrap_or(&f64::NAN)));
            row.push(status(alpha.as_ref().err()));
            row
        })
        .collect();
    Ok(Table { columns, rows, shape })
}

fn alpha_dimension(config: &SweepConfig, materials: &[Material]) -> Result<Table> {
    let (shape, points) = grid(config);
    let f_r = config.fixed("f_r_GHz") * 1e9;
    let t = config.fixed("t_nm") * 1e-9;
    let mut columns = vec![config.axes[0].name.clone()];
    columns.extend(materials.iter().map(|m| format!("alpha_{}", m.name)));
    columns.push("status".into());
    let rows = points
        .par_iter()
        .map(|p| {
            let w = p[0] * 1e-6;
            let mut row = vec![Cell::Num(p[0])];
            let mut first_err = None;
            for m in materials {
                let alpha = NanowireGeometry::square(w, t).and_then(|g| m.alpha_volume(f_r, g.volume()));
                row.push(Cell::Num(*alpha.as_ref().unwrap_or(&f64::NAN)));
                if let Err(e) = alpha {
                    first_err.get_or_insert(e);
                }
            }
            row.push(status(first_err.as_ref()));
            row
        })
        .collect();
    Ok(Table { columns, rows, shape })
}

fn duffing(config: &SweepConfig) -> Result<Table> {
    let net = config.network()?;
    let small = net.small_signal_peak()?;
    let opts = DuffingOptions {
        kerr: config.kerr.into(),
        validity: config.validity(),
        ..DuffingOptions::default()
    };
    let powers = config.axes[0].values();
    let rows: Vec<Vec<Cell>> = powers
        .par_iter()
        .map(|&p| {
            let r = net.duffing_shift_with(p, opts);
            let (f0, df, n) = match &r {
                Ok(r) => (r.f0_shifted, r.delta_f(), r.n_photons),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            };
            vec![
                Cell::Num(p),
                Cell::Num(f0),
                Cell::Num(df),
                Cell::Num(n),
                status(r.as_ref().err()),
            ]
        })
        .collect();
    log::info!("small-signal resonance {:e} Hz, FWHM {:e} Hz", small.f0, small.fwhm);
    Ok(Table {
        columns: ["power_W", "f0_hz", "delta_f_hz", "n_photons", "status"]
            .map(String::from)
            .to_vec(),
        shape: vec![rows.len()],
        rows,
    })
}

/// Reason code of a status cell, `None` for `ok`.
pub fn parse_status(cell: &Cell) -> Option<ReasonCode> {
    match cell {
        Cell::Text(s) => match s.as_str() {
            "validity" => Some(ReasonCode::Validity),
            "convergence" => Some(ReasonCode::Convergence),
            "bifurcation" => Some(ReasonCode::Bifurcation),
            "domain" => Some(ReasonCode::Domain),
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "mode": "alpha_vs_L_Istar",
        "axes": [
            {"name": "L_nH", "start": 0.1, "stop": 10, "points": 5, "scale": "log"},
            {"name": "Istar_uA", "start": 1, "stop": 100, "points": 4, "scale": "log"}
        ]
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.fixed("f_r_GHz"), 100.0);
        assert_eq!(c.method, AlphaMethod::Perturbative);
        assert_eq!(c.output_format(), OutputFormat::Csv);
        assert!(!c.strict);
    }

    #[test]
    fn bad_axes_are_all_reported() {
        let text = MINIMAL
            .replace("\"points\": 5", "\"points\": 1")
            .replace("\"start\": 1,", "\"start\": 200,");
        match parse_config(&text) {
            Err(Error::ConfigValidation(p)) => {
                assert_eq!(p.len(), 2, "{p:?}");
                assert!(p[0].contains("L_nH") && p[0].contains("points"));
                assert!(p[1].contains("Istar_uA"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_material_lists_names() {
        let text = r#"{"schema_version": 1, "mode": "alpha_vs_dimension",
            "axes": [{"name": "w_um", "start": 0.1, "stop": 2, "points": 3}],
            "materials": ["XYZ"]}"#;
        match parse_config(text) {
            Err(Error::UnknownMaterial { name, available }) => {
                assert_eq!(name, "XYZ");
                assert!(available.contains(&"TiN".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fixed_key_and_schema() {
        let text = MINIMAL.replace(
            "\"schema_version\": 1",
            "\"schema_version\": 2, \"fixed\": {\"f_r_Ghz\": 1}",
        );
        match parse_config(&text) {
            Err(Error::ConfigValidation(p)) => assert_eq!(p.len(), 2, "{p:?}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("{"), Err(Error::ConfigValidation(_))));
    }

    #[test]
    fn log_axis_endpoints_are_exact() {
        let a = AxisSpec {
            name: "L_nH".into(),
            start: 0.1,
            stop: 10.0,
            points: 3,
            scale: Scale::Log,
        };
        let v = a.values();
        assert_eq!(v[0], 0.1);
        assert_eq!(v[2], 10.0);
        assert!((v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_order_is_outer_first() {
        let c = parse_config(MINIMAL).unwrap();
        let (shape, pts) = grid(&c);
        assert_eq!(shape, vec![5, 4]);
        assert_eq!(pts[0], vec![0.1, 1.0]);
        assert_eq!(pts[3], vec![0.1, 100.0]);
        assert_eq!(pts[4][0], c.axes[0].values()[1]);
    }

    #[test]
    fn strict_mode_flags_strong_nonlinearity() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.strict = true;
        let r = run_sweep(&c).unwrap();
        assert!(r.failures > 0);
        let k = r.table.column("status").unwrap();
        let failed = r.table.rows.iter().find(|row| parse_status(&row[k]).is_some()).unwrap();
        assert!(failed[2].as_f64().unwrap().is_nan());
        c.strict = false;
        assert_eq!(run_sweep(&c).unwrap().failures, 0);
    }

    #[test]
    fn custom_network_elements() {
        let text = r#"{"schema_version": 1, "mode": "resonator_s21",
            "axes": [{"name": "f_GHz", "start": 80, "stop": 110, "points": 7}],
            "network": {"elements": [
                {"type": "series", "kind": "c", "value": 1e-15},
                {"type": "line", "z0_ohm": 50, "eps_eff": 6.45, "length_um": 295},
                {"type": "nanowire"},
                {"type": "line", "z0_ohm": 50, "eps_eff": 6.45, "length_um": 295},
                {"type": "series", "kind": "c", "value": 1e-15}
            ]}}"#;
        let r = run_sweep(&parse_config(text).unwrap()).unwrap();
        assert_eq!(r.table.rows.len(), 7);
        let two = text.replace(
            "{\"type\": \"nanowire\"},",
            "{\"type\": \"nanowire\"}, {\"type\": \"nanowire\"},",
        );
        assert!(matches!(parse_config(&two), Err(Error::ConfigValidation(_))));
    }

    #[test]
    fn hash_changes_with_content() {
        let a = parse_config(MINIMAL).unwrap();
        let mut b = a.clone();
        b.fixed.insert("f_r_GHz".into(), 90.0);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), parse_config(MINIMAL).unwrap().hash());
        assert_eq!(a.hash().len(), 64);
    }
}
