use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use kineticon::cavity::{chi_perturbative, dressed_spectrum_with, loading_for_target, ModeFamily};
use kineticon::constants::{dos_to_ev_um3, resistivity_from_uohm_cm, H, MEV};
use kineticon::export::{self, Cell, OutputFormat, Table};
use kineticon::quantum::{spectrum_with, DEFAULT_DIM};
use kineticon::resonator::{find_resonance, readout_ok, DuffingOptions};
use kineticon::sweep::{parse_config_with, run_sweep_with, AxisSpec, Scale, SweepConfig, SweepMode, SCHEMA_VERSION};
use kineticon::{Complex64, Error, KineticonCircuit, Material, MaterialRegistry, NanowireGeometry, Result, Validity};

use crate::{CavityAction, Cli, Command, Family, Format, Global, MaterialsAction, QubitArgs, ResonatorAction, Window};

struct Context<'a> {
    global: &'a Global,
    seed: Option<SweepConfig>,
    registry: MaterialRegistry,
}

impl Context<'_> {
    fn validity(&self) -> Validity {
        if self.global.strict || self.seed.as_ref().is_some_and(|c| c.strict) {
            Validity::Strict
        } else {
            Validity::Soft
        }
    }

    fn format(&self) -> OutputFormat {
        match self.global.format {
            Some(Format::Csv) => OutputFormat::Csv,
            Some(Format::Contour) => OutputFormat::Contour,
            None => self.seed.as_ref().map(SweepConfig::output_format).unwrap_or_default(),
        }
    }

    /// Config for one point of `mode`: the seed's fixed values and network,
    /// then `--set` overrides, checked against the mode.
    fn point_config(&self, mode: SweepMode, sets: &[(String, f64)]) -> Result<SweepConfig> {
        let mut fixed = BTreeMap::new();
        let mut network = None;
        let mut kerr = Default::default();
        if let Some(seed) = &self.seed {
            fixed.extend(seed.fixed.iter().map(|(k, v)| (k.clone(), *v)));
            network = seed.network.clone();
            kerr = seed.kerr;
        }
        fixed.extend(sets.iter().cloned());
        let config = SweepConfig {
            schema_version: SCHEMA_VERSION,
            mode,
            axes: Vec::new(),
            fixed,
            materials: Vec::new(),
            output: None,
            network,
            method: Default::default(),
            dim: self.global.dim,
            kerr,
            strict: self.validity() == Validity::Strict,
        };
        config.validate_point(&self.registry)?;
        Ok(config)
    }

    fn write_table(&self, table: &Table, comments: &[String]) -> Result<()> {
        self.write_bytes(&export::render(table, self.format(), comments))
    }

    fn write_bytes(&self, bytes: &[u8]) -> Result<()> {
        match &self.global.out {
            Some(path) => {
                export::write_file(path, bytes)?;
                log::info!("wrote {}", path.display());
                Ok(())
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(bytes)
                    .and_then(|()| stdout.flush())
                    .map_err(|e| io_error(Path::new("<stdout>"), &e))
            }
        }
    }
}

fn io_error(path: &Path, err: &std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

fn load_seed(global: &Global) -> Result<(Option<SweepConfig>, MaterialRegistry)> {
    let mut registry = MaterialRegistry::default();
    let Some(path) = &global.config else {
        return Ok((None, registry));
    };
    let text = fs::read_to_string(path).map_err(|e| io_error(path, &e))?;
    let config = parse_config_with(&text, &registry)?;
    for m in config.validate(&registry)? {
        registry.insert(m);
    }
    Ok((Some(config), registry))
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let (seed, registry) = load_seed(&cli.global)?;
    let ctx = Context {
        global: &cli.global,
        seed,
        registry,
    };
    match &cli.command {
        Command::Qubit(args) => qubit(&ctx, args),
        Command::Sweep => sweep(&ctx),
        Command::Resonator { action } => resonator(&ctx, action),
        Command::Cavity { action } => cavity(&ctx, action),
        Command::Materials { action } => materials(&ctx, action),
    }
}

fn report(lines: &[(&str, String)]) -> String {
    let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in lines {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    s
}

fn qubit(ctx: &Context, args: &QubitArgs) -> Result<ExitCode> {
    let validity = ctx.validity();
    let f_r = args.f_ghz * 1e9;
    let mut extra = Vec::new();
    let (l0k, istar) = match (&args.material, args.l_nh, args.istar_ua) {
        (Some(name), _, _) => {
            let rho = args.rho_uohm_cm.expect("clap enforces --rho-uohm-cm");
            let material = ctx
                .registry
                .get(name)?
                .clone()
                .with_rho_n(resistivity_from_uohm_cm(rho))?;
            let w = args.w_um.expect("clap enforces --w-um") * 1e-6;
            let geometry = NanowireGeometry::new(w, args.l_um.map_or(w, |l| l * 1e-6), args.t_nm * 1e-9)?;
            let (l0k, istar) = material.nanowire_lumped(&geometry)?;
            extra.push((
                "alpha (volume)",
                format!("{:e}", material.alpha_volume(f_r, geometry.volume())?),
            ));
            (l0k, istar)
        }
        (None, Some(l), Some(i)) => (l * 1e-9, i * 1e-6),
        _ => {
            return Err(Error::ConfigValidation(vec![
                "qubit needs --l-nh and --istar-ua, or --material with --w-um and --rho-uohm-cm".into(),
            ]))
        }
    };
    let circuit = KineticonCircuit::with_frequency(l0k, f_r, istar)?;
    let d = circuit.derive();
    let alpha = circuit.alpha_perturbative_with(validity)?;
    let dim = ctx.global.dim.unwrap_or(DEFAULT_DIM);
    let fock = spectrum_with(d.f_r, d.lambda, dim, validity)?;

    let mut lines = vec![
        ("L0k (H)", format!("{l0k:e}")),
        ("I* (A)", format!("{istar:e}")),
        ("C (F)", format!("{:e}", circuit.c)),
        ("f_r (Hz)", format!("{:e}", d.f_r)),
        ("Z0 (ohm)", format!("{:e}", d.z0)),
        ("phi_zpf (Wb)", format!("{:e}", d.phi_zpf)),
        ("I_zpf (A)", format!("{:e}", d.i_zpf)),
        ("lambda", format!("{:e}", d.lambda)),
        ("alpha (3 Izpf^2/I*^2)", format!("{alpha:e}")),
        ("dim", dim.to_string()),
        ("f01 (Hz)", format!("{:e}", fock.f01)),
        ("f12 (Hz)", format!("{:e}", fock.f12)),
        ("alpha (diagonalized)", format!("{:e}", fock.alpha_rel)),
    ];
    lines.extend(extra);

    match &ctx.global.out {
        Some(_) => {
            let n = args.levels.min(fock.levels.len());
            let rows = (0..n)
                .map(|k| {
                    let t = fock.transition(k).map_or(Cell::Num(f64::NAN), Cell::Num);
                    vec![Cell::Int(k as u32), Cell::Num(fock.levels[k]), t]
                })
                .collect();
            let table = Table {
                columns: ["n", "level_hz", "transition_hz"].map(String::from).to_vec(),
                rows,
                shape: vec![n],
            };
            ctx.write_table(&table, &[])?;
            eprint!("{}", report(&lines));
        }
        None => print!("{}", report(&lines)),
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(ctx: &Context) -> Result<ExitCode> {
    let Some(seed) = &ctx.seed else {
        return Err(Error::ConfigValidation(vec!["sweep needs --config".into()]));
    };
    let mut config = seed.clone();
    config.strict |= ctx.global.strict;
    if ctx.global.dim.is_some() {
        config.dim = ctx.global.dim;
    }
    let result = run_sweep_with(&config, &ctx.registry)?;
    let bytes = result.render(ctx.format());
    match (&ctx.global.out, config.output.as_ref().and_then(|o| o.path.as_ref())) {
        (None, Some(path)) => {
            export::write_file(Path::new(path), &bytes)?;
            log::info!("wrote {path}");
        }
        _ => ctx.write_bytes(&bytes)?,
    }
    if result.failures > 0 {
        eprintln!("{} of {} points failed", result.failures, result.table.rows.len());
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn frequency_axis(window: &Window, default: (f64, f64)) -> AxisSpec {
    let (start, stop) = match (window.start_ghz, window.stop_ghz) {
        (Some(a), Some(b)) => (a, b),
        _ => default,
    };
    AxisSpec {
        name: "f_GHz".into(),
        start,
        stop,
        points: window.points,
        scale: Scale::Linear,
    }
}

fn run_table(ctx: &Context, config: &SweepConfig) -> Result<()> {
    let result = run_sweep_with(config, &ctx.registry)?;
    ctx.write_table(&result.table, &result.comments())
}

fn resonator(ctx: &Context, action: &ResonatorAction) -> Result<ExitCode> {
    match action {
        ResonatorAction::S21 { window, sets } => {
            let mut config = ctx.point_config(SweepMode::ResonatorS21, sets)?;
            let default = if window.start_ghz.is_none() {
                let peak = config.network()?.small_signal_peak()?;
                let span = 10.0 * peak.fwhm;
                ((peak.f0 - span) * 1e-9, (peak.f0 + span) * 1e-9)
            } else {
                (0.0, 0.0)
            };
            config.axes = vec![frequency_axis(window, default)];
            let result = run_sweep_with(&config, &ctx.registry)?;
            let samples: Vec<_> = result
                .table
                .rows
                .iter()
                .filter_map(|r| {
                    let c = |k: usize| r[k].as_f64();
                    Some((c(0)?, Complex64::new(c(1)?, c(2)?)))
                })
                .collect();
            match find_resonance(&samples) {
                Ok(r) => log::info!("resonance at {:e} Hz, loaded Q {:e}", r.f0, r.q_loaded),
                Err(e) => log::info!("no single resonance in window: {e}"),
            }
            ctx.write_table(&result.table, &result.comments())?;
        }
        ResonatorAction::Duffing { power, sets } => {
            let config = ctx.point_config(SweepMode::DuffingPower, sets)?;
            let net = config.network()?;
            let opts = DuffingOptions {
                kerr: config.kerr.into(),
                validity: ctx.validity(),
                ..DuffingOptions::default()
            };
            let res = net.small_signal_resonance()?;
            let r = net.duffing_shift_with(*power, opts)?;
            let (circuit, _) = net.equivalent_circuit()?;
            let lambda = circuit.derive().lambda;
            let ok = readout_ok(r.delta_f().abs(), r.n_photons, res.bandwidth);
            print!(
                "{}",
                report(&[
                    ("power (W)", format!("{power:e}")),
                    ("f0 small-signal (Hz)", format!("{:e}", r.f0_small_signal)),
                    ("loaded Q", format!("{:e}", res.q_loaded)),
                    ("bandwidth (Hz)", format!("{:e}", res.bandwidth)),
                    ("f0 shifted (Hz)", format!("{:e}", r.f0_shifted)),
                    ("delta f (Hz)", format!("{:e}", r.delta_f())),
                    ("photons", format!("{:e}", r.n_photons)),
                    ("delta f per photon (Hz)", format!("{:e}", r.delta_f() / r.n_photons)),
                    ("3 lambda f0 (Hz)", format!("{:e}", 3.0 * lambda * r.f0_small_signal)),
                    ("nanowire current rms (A)", format!("{:e}", r.current_rms)),
                    ("iterations", r.iterations.to_string()),
                    ("|delta f| > n B / 2pi", ok.to_string()),
                ])
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cavity(ctx: &Context, action: &CavityAction) -> Result<ExitCode> {
    match action {
        CavityAction::Modes { sets } => run_table(ctx, &ctx.point_config(SweepMode::CavityModes, sets)?)?,
        CavityAction::Loading {
            target_ghz,
            family,
            m,
            n,
            p,
            sets,
        } => {
            let config = ctx.point_config(SweepMode::CavityModes, sets)?;
            let family = match family {
                Family::Te => ModeFamily::TE,
                Family::Tm => ModeFamily::TM,
            };
            let eps = loading_for_target(&config.cavity()?, *m, *n, *p, family, target_ghz * 1e9)?;
            print!(
                "{}",
                report(&[
                    ("mode", format!("{family}{m}{n}{p}")),
                    ("target (Hz)", format!("{:e}", target_ghz * 1e9)),
                    ("eps_eff", format!("{eps:e}")),
                ])
            );
        }
        CavityAction::Dressed { sets } => {
            let config = ctx.point_config(SweepMode::CoupledS21, sets)?;
            let mut sys = config.coupled();
            if let Some(d) = ctx.global.dim {
                sys.dims.1 = d;
            }
            let ds = dressed_spectrum_with(&sys, ctx.validity())?;
            let mut lines = vec![
                ("f_cavity dressed (Hz)", format!("{:e}", ds.f_cavity_dressed)),
                ("f_qubit dressed (Hz)", format!("{:e}", ds.f_qubit_dressed)),
                ("chi (Hz)", format!("{:e}", ds.chi)),
                ("chi perturbative (Hz)", format!("{:e}", chi_perturbative(&sys))),
            ];
            let shown: Vec<String> = ds.levels.iter().take(6).map(|e| format!("{e:e}")).collect();
            lines.push(("lowest levels (Hz)", shown.join(" ")));
            print!("{}", report(&lines));
        }
        CavityAction::S21 { window, sets } => {
            let mut config = ctx.point_config(SweepMode::CoupledS21, sets)?;
            let sys = config.coupled();
            let span = 5.0 * sys.g.max(sys.kappa1 + sys.kappa2);
            let lo = sys.f_cavity.min(sys.f_qubit) - span;
            let hi = sys.f_cavity.max(sys.f_qubit) + span;
            config.axes = vec![frequency_axis(window, (lo * 1e-9, hi * 1e-9))];
            run_table(ctx, &config)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn material_lines(m: &Material) -> Vec<(&'static str, String)> {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:e}"));
    vec![
        ("name", m.name.clone()),
        ("Tc (K)", format!("{:e}", m.tc)),
        ("Delta (meV)", format!("{:e}", m.delta / MEV)),
        ("2Delta/h (Hz)", format!("{:e}", 2.0 * m.delta / H)),
        ("N0 (1/(eV um^3))", opt(m.n0.map(dos_to_ev_um3))),
        ("rho_n (uOhm cm)", opt(m.rho_n.map(|r| r * 1e8))),
        ("xi", format!("{:e}", m.xi)),
    ]
}

fn materials(ctx: &Context, action: &MaterialsAction) -> Result<ExitCode> {
    match action {
        MaterialsAction::List => {
            let num = |v: Option<f64>| v.map_or(Cell::Text(String::new()), Cell::Num);
            let rows: Vec<Vec<Cell>> = ctx
                .registry
                .iter()
                .map(|m| {
                    vec![
                        Cell::Text(m.name.clone()),
                        Cell::Num(m.tc),
                        Cell::Num(m.delta / MEV),
                        num(m.n0.map(dos_to_ev_um3)),
                        num(m.rho_n.map(|r| r * 1e8)),
                    ]
                })
                .collect();
            let table = Table {
                columns: ["name", "tc_k", "delta_mev", "n0_ev_um3", "rho_uohm_cm"]
                    .map(String::from)
                    .to_vec(),
                shape: vec![rows.len()],
                rows,
            };
            ctx.write_table(&table, &[])?;
        }
        MaterialsAction::Show { name } => print!("{}", report(&material_lines(ctx.registry.get(name)?))),
    }
    Ok(ExitCode::SUCCESS)
}
