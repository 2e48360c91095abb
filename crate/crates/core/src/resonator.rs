//! ABCD-matrix model of a half-wave Fabry–Perot readout resonator with a
//! nonlinear nanowire at its current antinode.
//!
//! Phasors are RMS: an incident wave `V⁺` on a `Zref` port carries power
//! `|V⁺|² / Zref`, and time-averaged energies are `L|I|²/2`, `C|V|²/2`.
//!
//! The power-dependent resonance is a damped fixed point on the nanowire
//! inductance, `L = L0k (1 + κ I²/I*²)`, with the drive parked on the
//! resonance of the previous iterate. See [`KerrConvention`] for κ.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::KineticonCircuit;
use crate::constants::{C_LIGHT, H};
use crate::error::{ensure_positive, Error, Result, Validity};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// 2×2 transfer matrix `[[A, B], [C, D]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

/// Scattering parameters of a two-port referenced to a real `Zref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SParams {
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
}

impl Abcd {
    pub fn identity() -> Self {
        Abcd {
            a: ONE,
            b: ZERO,
            c: ZERO,
            d: ONE,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Abcd) -> Abcd {
        Abcd {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    /// Network seen from the other side (ports swapped).
    pub fn reversed(&self) -> Abcd {
        let det = self.det();
        Abcd {
            a: self.d / det,
            b: self.b / det,
            c: self.c / det,
            d: self.a / det,
        }
    }

    /// Applies the matrix to the output state `(V, I)`, giving the input state.
    pub fn apply(&self, v: Complex64, i: Complex64) -> (Complex64, Complex64) {
        (self.a * v + self.b * i, self.c * v + self.d * i)
    }

    pub fn s_params(&self, zref: f64) -> SParams {
        let z = Complex64::from(zref);
        let denom = self.a + self.b / z + self.c * z + self.d;
        SParams {
            s11: (self.a + self.b / z - self.c * z - self.d) / denom,
            s12: 2.0 * self.det() / denom,
            s21: 2.0 / denom,
            s22: (-self.a + self.b / z - self.c * z + self.d) / denom,
        }
    }
}

/// `S21 = 2 / (A + B/Zref + C·Zref + D)`.
pub fn s21(m: &Abcd, zref: f64) -> Complex64 {
    m.s_params(zref).s21
}

/// A two-terminal lumped component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lumped {
    Resistor(f64),
    Inductor(f64),
    Capacitor(f64),
    /// Frequency-independent impedance.
    Fixed(Complex64),
}

impl Lumped {
    pub fn impedance(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f;
        match *self {
            Lumped::Resistor(r) => Complex64::from(r),
            Lumped::Inductor(l) => J * w * l,
            Lumped::Capacitor(c) => -J / (w * c),
            Lumped::Fixed(z) => z,
        }
    }

    /// Time-averaged (magnetic, electric) energy for an RMS current through it.
    fn energy_for_current(&self, f: f64, i: Complex64) -> (f64, f64) {
        let w = 2.0 * PI * f;
        match *self {
            Lumped::Inductor(l) => (0.5 * l * i.norm_sqr(), 0.0),
            Lumped::Capacitor(c) => (0.0, 0.5 * c * (i / (w * c)).norm_sqr()),
            Lumped::Resistor(_) | Lumped::Fixed(_) => (0.0, 0.0),
        }
    }

    fn energy_for_voltage(&self, f: f64, v: Complex64) -> (f64, f64) {
        let w = 2.0 * PI * f;
        match *self {
            Lumped::Inductor(l) => (0.5 * l * (v / (w * l)).norm_sqr(), 0.0),
            Lumped::Capacitor(c) => (0.0, 0.5 * c * v.norm_sqr()),
            Lumped::Resistor(_) | Lumped::Fixed(_) => (0.0, 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Lumped::Resistor(r) if !(r.is_finite() && r >= 0.0) => {
                Err(Error::Domain(format!("resistance must be >= 0, got {r}")))
            }
            Lumped::Inductor(v) | Lumped::Capacitor(v) => ensure_positive(&[("component value", v)]),
            Lumped::Fixed(z) if !(z.re.is_finite() && z.im.is_finite()) => {
                Err(Error::Domain("fixed impedance must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkElement {
    TransmissionLine {
        /// Characteristic impedance, Ω.
        z0: f64,
        /// Phase velocity, m/s.
        v_ph: f64,
        length: f64,
        /// Attenuation, Np/m.
        loss: f64,
    },
    SeriesImpedance(Lumped),
    /// Shunt branch; its admittance is `1 / Z` of the component.
    ShuntAdmittance(Lumped),
}

impl NetworkElement {
    pub fn lossless_line(z0: f64, v_ph: f64, length: f64) -> Self {
        NetworkElement::TransmissionLine {
            z0,
            v_ph,
            length,
            loss: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NetworkElement::TransmissionLine { z0, v_ph, length, loss } => {
                ensure_positive(&[("Z0", z0), ("v_ph", v_ph)])?;
                if v_ph > C_LIGHT {
                    return Err(Error::Domain(format!("v_ph = {v_ph} exceeds c")));
                }
                if !(length.is_finite() && length >= 0.0) {
                    return Err(Error::Domain(format!("line length must be >= 0, got {length}")));
                }
                if !(loss.is_finite() && loss >= 0.0) {
                    return Err(Error::Domain(format!("line loss must be >= 0, got {loss}")));
                }
                Ok(())
            }
            NetworkElement::SeriesImpedance(l) | NetworkElement::ShuntAdmittance(l) => l.validate(),
        }
    }

    pub fn abcd(&self, f: f64) -> Abcd {
        match *self {
            NetworkElement::TransmissionLine { z0, v_ph, length, loss } => {
                let gl = Complex64::new(loss * length, 2.0 * PI * f * length / v_ph);
                let (ch, sh) = (gl.cosh(), gl.sinh());
                Abcd {
                    a: ch,
                    b: sh * z0,
                    c: sh / z0,
                    d: ch,
                }
            }
            NetworkElement::SeriesImpedance(l) => Abcd {
                b: l.impedance(f),
                ..Abcd::identity()
            },
            NetworkElement::ShuntAdmittance(l) => Abcd {
                c: ONE / l.impedance(f),
                ..Abcd::identity()
            },
        }
    }

    /// Time-averaged (magnetic, electric) energy stored in the element given
    /// the RMS state `(V, I)` at its input terminal.
    fn stored_energy(&self, f: f64, v: Complex64, i: Complex64) -> (f64, f64) {
        match *self {
            NetworkElement::TransmissionLine { z0, v_ph, length, loss } => {
                if length == 0.0 {
                    return (0.0, 0.0);
                }
                let l_per_m = z0 / v_ph;
                let c_per_m = 1.0 / (z0 * v_ph);
                let gamma = Complex64::new(loss, 2.0 * PI * f / v_ph);
                // Simpson over the line; the integrands are smooth sinusoids.
                let intervals = 128;
                let step = length / intervals as f64;
                let (mut wm, mut we) = (0.0, 0.0);
                for k in 0..=intervals {
                    let z = step * k as f64;
                    let gz = gamma * z;
                    let (ch, sh) = (gz.cosh(), gz.sinh());
                    let vz = ch * v - sh * i * z0;
                    let iz = ch * i - sh * v / z0;
                    let weight = if k == 0 || k == intervals {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    wm += weight * iz.norm_sqr();
                    we += weight * vz.norm_sqr();
                }
                (0.5 * l_per_m * wm * step / 3.0, 0.5 * c_per_m * we * step / 3.0)
            }
            NetworkElement::SeriesImpedance(l) => l.energy_for_current(f, i),
            NetworkElement::ShuntAdmittance(l) => l.energy_for_voltage(f, v),
        }
    }
}

/// Ordered product of the element matrices.
pub fn cascade(elements: &[NetworkElement], f: f64) -> Result<Abcd> {
    if elements.is_empty() {
        return Err(Error::Domain("cascade needs at least one element".into()));
    }
    Ok(elements.iter().fold(Abcd::identity(), |acc, e| acc.then(&e.abcd(f))))
}

/// The nonlinear series inductor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nanowire {
    /// Zero-bias inductance, H.
    pub l0k: f64,
    /// Characteristic current, A.
    pub istar: f64,
}

/// Coefficient κ in `L = L0k (1 + κ I_rms²/I*²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KerrConvention {
    /// κ = 3: first-harmonic (describing-function) inductance of the circuit
    /// energy `E_k(Φ²/Φ*² − Φ⁴/Φ*⁴)`, the same quartic that yields the
    /// `3λ f_r` shift per photon of the quantum model.
    #[default]
    EnergyConsistent,
    /// κ = 1: `I_rms` inserted directly into `L0k(1 + I²/I*²)`.
    LiteralRms,
}

impl KerrConvention {
    pub fn kappa(self) -> f64 {
        match self {
            KerrConvention::EnergyConsistent => 3.0,
            KerrConvention::LiteralRms => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorNetwork {
    pub elements: Vec<NetworkElement>,
    /// Port reference impedance, Ω.
    pub zref: f64,
    /// Position of the nanowire, a `SeriesImpedance(Inductor)` element.
    pub nanowire_index: usize,
    pub nanowire: Nanowire,
    /// Rough location of the fundamental, Hz; resonance searches start here.
    pub f_guess: f64,
}

/// Parameters of the default symmetric layout
/// `coupler – line/2 – nanowire – line/2 – coupler`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorDesign {
    pub z0: f64,
    pub v_ph: f64,
    /// Frequency at which the bare line is a half wavelength.
    pub f_design: f64,
    /// Series coupling capacitance at each end, F.
    pub coupler_c: f64,
    pub loss: f64,
    pub zref: f64,
    pub nanowire: Nanowire,
}

impl Default for ResonatorDesign {
    /// Illustrative values: 50 Ω line with a silicon-like effective
    /// permittivity of 6.45, half-wave at 100 GHz, 1 fF couplers, and a
    /// 10 pH / 10 µA nanowire.
    fn default() -> Self {
        ResonatorDesign {
            z0: 50.0,
            v_ph: C_LIGHT / 6.45f64.sqrt(),
            f_design: 100e9,
            coupler_c: 1e-15,
            loss: 0.0,
            zref: 50.0,
            nanowire: Nanowire {
                l0k: 10e-12,
                istar: 10e-6,
            },
        }
    }
}

impl ResonatorDesign {
    pub fn line_length(&self) -> f64 {
        self.v_ph / (2.0 * self.f_design)
    }

    pub fn build(&self) -> Result<ResonatorNetwork> {
        let half = NetworkElement::TransmissionLine {
            z0: self.z0,
            v_ph: self.v_ph,
            length: 0.5 * self.line_length(),
            loss: self.loss,
        };
        let coupler = NetworkElement::SeriesImpedance(Lumped::Capacitor(self.coupler_c));
        let elements = vec![
            coupler,
            half,
            NetworkElement::SeriesImpedance(Lumped::Inductor(self.nanowire.l0k)),
            half,
            coupler,
        ];
        ResonatorNetwork::new(elements, self.zref, 2, self.nanowire, self.f_design)
    }
}

/// Output of [`find_resonance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceResult {
    pub f0: f64,
    pub q_loaded: f64,
    /// Half-power bandwidth `f0 / Q_loaded`, Hz.
    pub bandwidth: f64,
    /// Smallest `|S21|` in the sweep.
    pub s21_min: f64,
    /// Largest `|S21|` in the sweep.
    pub s21_max: f64,
    pub kind: ResonanceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceKind {
    /// Transmission maximum (series-coupled resonator).
    Peak,
    /// Transmission minimum (notch / hanger).
    Dip,
}

/// Result of [`ResonatorNetwork::duffing_shift`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuffingResult {
    pub f0_small_signal: f64,
    pub f0_shifted: f64,
    pub n_photons: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Self-consistent nanowire inductance, H.
    pub inductance: f64,
    /// RMS nanowire current at the operating point, A.
    pub current_rms: f64,
}

impl DuffingResult {
    pub fn delta_f(&self) -> f64 {
        self.f0_shifted - self.f0_small_signal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuffingOptions {
    pub kerr: KerrConvention,
    /// Step factor of the damped update.
    pub damping: f64,
    pub max_iterations: usize,
    /// Relative change in f0 between iterates that counts as converged.
    pub tolerance: f64,
    /// Check for coexisting branches after convergence.
    pub detect_bistability: bool,
    pub validity: Validity,
}

impl Default for DuffingOptions {
    fn default() -> Self {
        DuffingOptions {
            kerr: KerrConvention::default(),
            damping: 0.5,
            max_iterations: 1000,
            tolerance: 1e-12,
            detect_bistability: true,
            validity: Validity::Soft,
        }
    }
}

/// Small-signal resonance of the nanowire-loaded network, found from the
/// peak of the nanowire current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentPeak {
    pub f0: f64,
    pub fwhm: f64,
}

impl ResonatorNetwork {
    pub fn new(
        elements: Vec<NetworkElement>,
        zref: f64,
        nanowire_index: usize,
        nanowire: Nanowire,
        f_guess: f64,
    ) -> Result<Self> {
        ensure_positive(&[
            ("Zref", zref),
            ("nanowire L0k", nanowire.l0k),
            ("nanowire I*", nanowire.istar),
            ("f_guess", f_guess),
        ])?;
        for e in &elements {
            e.validate()?;
        }
        match elements.get(nanowire_index) {
            Some(NetworkElement::SeriesImpedance(Lumped::Inductor(_))) => {}
            _ => {
                return Err(Error::Domain(format!(
                    "element {nanowire_index} must be the series nanowire inductor"
                )))
            }
        }
        let mut elements = elements;
        elements[nanowire_index] = NetworkElement::SeriesImpedance(Lumped::Inductor(nanowire.l0k));
        Ok(ResonatorNetwork {
            elements,
            zref,
            nanowire_index,
            nanowire,
            f_guess,
        })
    }

    fn element(&self, k: usize, l_nw: f64) -> NetworkElement {
        if k == self.nanowire_index {
            NetworkElement::SeriesImpedance(Lumped::Inductor(l_nw))
        } else {
            self.elements[k]
        }
    }

    /// Elements with the nanowire set to inductance `l_nw`.
    pub fn elements_with(&self, l_nw: f64) -> Vec<NetworkElement> {
        (0..self.elements.len()).map(|k| self.element(k, l_nw)).collect()
    }

    pub fn abcd_with(&self, f: f64, l_nw: f64) -> Abcd {
        (0..self.elements.len()).fold(Abcd::identity(), |acc, k| acc.then(&self.element(k, l_nw).abcd(f)))
    }

    /// Small-signal transfer matrix (nanowire at L0k).
    pub fn abcd(&self, f: f64) -> Abcd {
        self.abcd_with(f, self.nanowire.l0k)
    }

    /// RMS `(V, I)` at every element boundary for an incident power `power`
    /// on port 1 and a matched load on port 2. Entry `k` is the input of
    /// element `k`; the last entry is the load.
    pub fn node_states(&self, f: f64, l_nw: f64, power: f64) -> Vec<(Complex64, Complex64)> {
        let n = self.elements.len();
        let mut states = vec![(ZERO, ZERO); n + 1];
        states[n] = (ONE, ONE / self.zref);
        for k in (0..n).rev() {
            let (v, i) = states[k + 1];
            states[k] = self.element(k, l_nw).abcd(f).apply(v, i);
        }
        let (v1, i1) = states[0];
        let incident = 0.5 * (v1 + i1 * self.zref);
        let scale = (power * self.zref).sqrt() / incident;
        for s in &mut states {
            s.0 *= scale;
            s.1 *= scale;
        }
        states
    }

    /// RMS nanowire current magnitude.
    pub fn nanowire_current(&self, f: f64, l_nw: f64, power: f64) -> f64 {
        // Only the states up to the nanowire are needed, but the chain is short.
        self.node_states(f, l_nw, power)[self.nanowire_index].1.norm()
    }

    /// Time-averaged stored energy (magnetic + electric), J.
    pub fn stored_energy(&self, f: f64, l_nw: f64, power: f64) -> f64 {
        let states = self.node_states(f, l_nw, power);
        (0..self.elements.len())
            .map(|k| {
                let (v, i) = states[k];
                let (wm, we) = self.element(k, l_nw).stored_energy(f, v, i);
                wm + we
            })
            .sum()
    }

    /// Frequency of maximum nanowire current near `center`, plus its FWHM.
    fn locate_peak(&self, l_nw: f64, center: f64, halfwidth: f64) -> Result<CurrentPeak> {
        let g = |f: f64| self.nanowire_current(f, l_nw, 1.0).powi(2);
        let (mut lo, mut hi) = ((center - halfwidth).max(center * 1e-3), center + halfwidth);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut g1, mut g2) = (g(x1), g(x2));
        while hi - lo > 1e-11 * center {
            if g1 > g2 {
                hi = x2;
                x2 = x1;
                g2 = g1;
                x1 = hi - ratio * (hi - lo);
                g1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                g1 = g2;
                x2 = lo + ratio * (hi - lo);
                g2 = g(x2);
            }
        }
        let mut f_peak = 0.5 * (lo + hi);
        let peak = g(f_peak);
        if !(peak.is_finite() && peak > 0.0) {
            return Err(Error::Domain("no nanowire current at the resonance".into()));
        }

        let half_crossing = |dir: f64| -> Option<f64> {
            let target = 0.5 * peak;
            let mut step = halfwidth * 1e-3;
            let mut inner = f_peak;
            let mut outer = f_peak + dir * step;
            while g(outer) > target {
                inner = outer;
                step *= 2.0;
                outer = f_peak + dir * step;
                if step > 0.5 * f_peak || outer <= 0.0 {
                    return None;
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (inner + outer);
                if g(mid) > target {
                    inner = mid;
                } else {
                    outer = mid;
                }
                if (outer - inner).abs() < 1e-14 * f_peak {
                    break;
                }
            }
            Some(0.5 * (inner + outer))
        };
        let (Some(f_lo), Some(f_hi)) = (half_crossing(-1.0), half_crossing(1.0)) else {
            return Err(Error::AmbiguousResonance { count: 0 });
        };
        let fwhm = f_hi - f_lo;

        // Near a Lorentzian maximum 1/|I|² is a parabola in f.
        for _ in 0..3 {
            let h = 0.25 * fwhm;
            let (a, b, c) = (1.0 / g(f_peak - h), 1.0 / g(f_peak), 1.0 / g(f_peak + h));
            let curv = a - 2.0 * b + c;
            if curv > 0.0 {
                let shift = 0.5 * h * (a - c) / curv;
                if shift.abs() < h {
                    f_peak += shift;
                }
            }
        }
        Ok(CurrentPeak { f0: f_peak, fwhm })
    }

    /// Small-signal resonance from a coarse scan of the nanowire current
    /// over `[0.2, 1.5]·f_guess`, refined locally.
    pub fn small_signal_peak(&self) -> Result<CurrentPeak> {
        let (start, stop) = (0.2 * self.f_guess, 1.5 * self.f_guess);
        let n = 4001;
        let step = (stop - start) / (n - 1) as f64;
        let l0k = self.nanowire.l0k;
        let (best, _) = (0..n)
            .map(|k| {
                let f = start + step * k as f64;
                (f, self.nanowire_current(f, l0k, 1.0))
            })
            .fold((start, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= start + step || best >= stop - step {
            return Err(Error::AmbiguousResonance { count: 0 });
        }
        self.locate_peak(l0k, best, 2.0 * step)
    }

    /// Small-signal S21 resonance from a sweep around the current peak.
    pub fn small_signal_resonance(&self) -> Result<ResonanceResult> {
        let peak = self.small_signal_peak()?;
        let span = 15.0 * peak.fwhm;
        let sweep = sweep_s21(self, peak.f0 - span, peak.f0 + span, 3001)?;
        find_resonance(&sweep)
    }

    /// Lumped equivalent of the fundamental mode as seen by the nanowire.
    ///
    /// The mode inductance `L_mode = E / |I_nw|²` references the total stored
    /// energy to the nanowire current; the capacitor restores `f0`; and
    /// `I*_eq = I*·√(L_mode / L_nw)` gives the same quartic energy as the
    /// nanowire alone.
    pub fn equivalent_circuit(&self) -> Result<(KineticonCircuit, f64)> {
        let f0 = self.small_signal_peak()?.f0;
        let l0k = self.nanowire.l0k;
        let energy = self.stored_energy(f0, l0k, 1.0);
        let current = self.nanowire_current(f0, l0k, 1.0);
        let l_mode = energy / (current * current);
        let circuit = KineticonCircuit::with_frequency(l_mode, f0, self.nanowire.istar * (l_mode / l0k).sqrt())?;
        Ok((circuit, f0))
    }

    pub fn duffing_shift(&self, drive_power: f64) -> Result<DuffingResult> {
        self.duffing_shift_with(drive_power, DuffingOptions::default())
    }

    /// Self-consistent resonance at incident power `drive_power` (W).
    pub fn duffing_shift_with(&self, drive_power: f64, opts: DuffingOptions) -> Result<DuffingResult> {
        if !(drive_power.is_finite() && drive_power >= 0.0) {
            return Err(Error::Domain(format!("drive power must be >= 0, got {drive_power}")));
        }
        let small = self.small_signal_peak()?;
        let l0k = self.nanowire.l0k;
        if drive_power == 0.0 {
            return Ok(DuffingResult {
                f0_small_signal: small.f0,
                f0_shifted: small.f0,
                n_photons: 0.0,
                converged: true,
                iterations: 0,
                inductance: l0k,
                current_rms: 0.0,
            });
        }
        let kappa = opts.kerr.kappa();
        let istar = self.nanowire.istar;
        let wire = KineticonCircuit::new(l0k, 1.0, istar)?;

        let mut l_nw = l0k;
        let mut f = small.f0;
        let mut fwhm = small.fwhm;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            iterations += 1;
            let current = self.nanowire_current(f, l_nw, drive_power);
            // Flux through the wire at L0k sets the validity of the expansion.
            wire.nonlinear_inductance_with(current * l0k, opts.validity)?;
            let target = l0k * (1.0 + kappa * (current / istar).powi(2));
            l_nw += opts.damping * (target - l_nw);
            let peak = self.locate_peak(l_nw, f, 3.0 * fwhm)?;
            fwhm = peak.fwhm;
            let change = ((peak.f0 - f) / peak.f0).abs();
            f = peak.f0;
            if change < opts.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::FixedPointNoConvergence { iterations, last_hz: f });
        }

        let current = self.nanowire_current(f, l_nw, drive_power);
        if opts.detect_bistability {
            self.check_bistability(drive_power, kappa, small, f, fwhm, current)?;
        }
        let energy = self.stored_energy(f, l_nw, drive_power);
        Ok(DuffingResult {
            f0_small_signal: small.f0,
            f0_shifted: f,
            n_photons: energy / (H * f),
            converged,
            iterations,
            inductance: l_nw,
            current_rms: current,
        })
    }

    /// Looks for drive frequencies where the fixed-frequency balance
    /// `L = L0k(1 + κ|I(L, f_d)|²/I*²)` has more than one solution.
    ///
    /// The lowest and highest roots are the branches reached from the
    /// low- and high-inductance extremes.
    fn check_bistability(
        &self,
        power: f64,
        kappa: f64,
        small: CurrentPeak,
        f_shifted: f64,
        fwhm: f64,
        current: f64,
    ) -> Result<()> {
        let l0k = self.nanowire.l0k;
        let istar = self.nanowire.istar;
        let l_up = l0k * (1.0 + kappa * (1.5 * current / istar).powi(2));
        let balance = |l: f64, fd: f64| l0k * (1.0 + kappa * (self.nanowire_current(fd, l, power) / istar).powi(2)) - l;
        let f_lo = f_shifted.min(small.f0) - 2.0 * fwhm;
        let f_hi = f_shifted.max(small.f0) + 2.0 * fwhm;
        let n_f = (((f_hi - f_lo) / (0.05 * fwhm)).ceil() as usize).clamp(20, 4000);
        let n_l = 600;

        let found = (0..=n_f).into_par_iter().find_map_first(|k| {
            let fd = f_lo + (f_hi - f_lo) * k as f64 / n_f as f64;
            let ls: Vec<f64> = (0..=n_l).map(|j| l0k + (l_up - l0k) * j as f64 / n_l as f64).collect();
            let hs: Vec<f64> = ls.iter().map(|&l| balance(l, fd)).collect();
            let brackets: Vec<usize> = (0..n_l)
                .filter(|&j| hs[j] > 0.0 && hs[j + 1] <= 0.0 || hs[j] <= 0.0 && hs[j + 1] > 0.0)
                .collect();
            if brackets.len() < 3 {
                return None;
            }
            let root = |j: usize| {
                let (mut a, mut b) = (ls[j], ls[j + 1]);
                let sa = hs[j] > 0.0;
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if (balance(m, fd) > 0.0) == sa {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            };
            Some((root(brackets[0]), root(*brackets.last().unwrap())))
        });
        if let Some((l_low, l_high)) = found {
            let low = self.locate_peak(l_low, small.f0, 3.0 * fwhm)?.f0;
            let high = self.locate_peak(l_high, f_shifted, 3.0 * fwhm)?.f0;
            return Err(Error::Bifurcation {
                low_branch_hz: low,
                high_branch_hz: high,
            });
        }
        Ok(())
    }
}

/// Small-signal S21 on a linear grid, in grid order.
pub fn sweep_s21(
    network: &ResonatorNetwork,
    f_start: f64,
    f_stop: f64,
    n_points: usize,
) -> Result<Vec<(f64, Complex64)>> {
    let grid = linear_grid(f_start, f_stop, n_points)?;
    Ok(grid
        .into_par_iter()
        .map(|f| (f, s21(&network.abcd(f), network.zref)))
        .collect())
}

pub(crate) fn linear_grid(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    ensure_positive(&[("f_start", start), ("f_stop", stop)])?;
    if !(start < stop) || n < 2 {
        return Err(Error::Domain(format!(
            "frequency grid needs start < stop and at least 2 points (got {start}, {stop}, {n})"
        )));
    }
    let step = (stop - start) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| start + step * k as f64).collect();
    grid[n - 1] = stop;
    Ok(grid)
}

/// Locates a single resonance feature in a sweep.
///
/// The feature is the largest deviation of `|S21|²` from the baseline (mean
/// of the end points). `f0` comes from a parabola through `1/deviation`
/// around the extremum, the bandwidth from interpolated half-power points.
pub fn find_resonance(samples: &[(f64, Complex64)]) -> Result<ResonanceResult> {
    if samples.len() < 5 {
        return Err(Error::Domain("resonance search needs at least 5 points".into()));
    }
    let n = samples.len();
    let freqs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let power: Vec<f64> = samples.iter().map(|s| s.1.norm_sqr()).collect();
    let baseline = 0.5 * (power[0] + power[n - 1]);
    let raw: Vec<f64> = power.iter().map(|p| p - baseline).collect();
    let hi = raw.iter().cloned().fold(f64::MIN, f64::max);
    let lo = raw.iter().cloned().fold(f64::MAX, f64::min);
    let kind = if hi >= -lo {
        ResonanceKind::Peak
    } else {
        ResonanceKind::Dip
    };
    let dev: Vec<f64> = match kind {
        ResonanceKind::Peak => raw,
        ResonanceKind::Dip => raw.iter().map(|d| -d).collect(),
    };
    let (k, &dmax) = dev
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let scale = power.iter().cloned().fold(0.0, f64::max);
    if !(dmax > 1e-9 * scale.max(f64::MIN_POSITIVE)) || k == 0 || k == n - 1 {
        return Err(Error::AmbiguousResonance { count: 0 });
    }
    let half = 0.5 * dmax;
    let runs = dev.windows(2).filter(|w| w[0] <= half && w[1] > half).count() + usize::from(dev[0] > half);
    if runs != 1 {
        return Err(Error::AmbiguousResonance { count: runs });
    }

    // Vertex of the parabola through 1/dev at k-1, k, k+1.
    let (x0, x1, x2) = (freqs[k - 1], freqs[k], freqs[k + 1]);
    let (y0, y1, y2) = if dev[k - 1] > 0.0 && dev[k + 1] > 0.0 {
        (1.0 / dev[k - 1], 1.0 / dev[k], 1.0 / dev[k + 1])
    } else {
        (-dev[k - 1], -dev[k], -dev[k + 1])
    };
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    let f0 = if den != 0.0 {
        let v = x1 - 0.5 * num / den;
        if v > x0 && v < x2 {
            v
        } else {
            x1
        }
    } else {
        x1
    };

    let mut left = None;
    for j in (0..k).rev() {
        if dev[j] <= half {
            let t = (half - dev[j]) / (dev[j + 1] - dev[j]);
            left = Some(freqs[j] + t * (freqs[j + 1] - freqs[j]));
            break;
        }
    }
    let mut right = None;
    for j in (k + 1)..n {
        if dev[j] <= half {
            let t = (dev[j - 1] - half) / (dev[j - 1] - dev[j]);
            right = Some(freqs[j - 1] + t * (freqs[j] - freqs[j - 1]));
            break;
        }
    }
    let (Some(left), Some(right)) = (left, right) else {
        return Err(Error::Domain("half-power point lies outside the sweep".into()));
    };
    let bandwidth = right - left;
    let mags: Vec<f64> = power.iter().map(|p| p.sqrt()).collect();
    Ok(ResonanceResult {
        f0,
        q_loaded: f0 / bandwidth,
        bandwidth,
        s21_min: mags.iter().cloned().fold(f64::MAX, f64::min),
        s21_max: mags.iter().cloned().fold(0.0, f64::max),
        kind,
    })
}

/// Readout criterion `δf > n·B/2π` (strict).
pub fn readout_ok(delta_f: f64, n: f64, bandwidth: f64) -> bool {
    delta_f > n * bandwidth / (2.0 * PI)
}

/// First-order shift of a half-wave line's fundamental when a small series
/// inductor is inserted at its center: `δf/f0 ≈ −L_nw / L_line`, where
/// `L_line = Z0 / (2 f0)` is the total inductance of the line.
pub fn center_inductor_shift(z0: f64, f0: f64, l_nw: f64) -> f64 {
    -f0 * l_nw / (z0 / (2.0 * f0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn zero_length_line_is_identity() {
        let m = NetworkElement::lossless_line(50.0, 1e8, 0.0).abcd(1e11);
        assert!(close(m.a, ONE, 0.0) && close(m.b, ZERO, 0.0));
        assert!(close(m.c, ZERO, 0.0) && close(m.d, ONE, 0.0));
    }

    #[test]
    fn zero_series_impedance_is_identity() {
        let m = NetworkElement::SeriesImpedance(Lumped::Fixed(ZERO)).abcd(1e9);
        assert_eq!(m, Abcd::identity());
    }

    #[test]
    fn quarter_wave_line() {
        let (z0, v, f) = (35.0, 1.2e8, 50e9);
        let m = NetworkElement::lossless_line(z0, v, v / (4.0 * f)).abcd(f);
        assert!(close(m.a, ZERO, 1e-15));
        assert!(close(m.b, J * z0, 1e-13));
        assert!(close(m.c, J / z0, 1e-15));
        assert!(close(m.d, ZERO, 1e-15));
    }

    #[test]
    fn lossless_elements_have_unit_determinant() {
        let elements = [
            NetworkElement::lossless_line(50.0, 1e8, 3.3e-4),
            NetworkElement::SeriesImpedance(Lumped::Capacitor(2e-15)),
            NetworkElement::ShuntAdmittance(Lumped::Inductor(1e-10)),
        ];
        for e in elements {
            assert!((e.abcd(97e9).det() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn cascade_examples() {
        let a = NetworkElement::lossless_line(50.0, 1e8, 1e-4);
        let b = NetworkElement::lossless_line(50.0, 1e8, 2.5e-4);
        let ab = NetworkElement::lossless_line(50.0, 1e8, 3.5e-4);
        let f = 83e9;
        assert_eq!(cascade(&[a], f).unwrap(), a.abcd(f));
        let m = cascade(&[a, b], f).unwrap();
        let r = ab.abcd(f);
        assert!(close(m.a, r.a, 1e-12) && close(m.b, r.b, 1e-10));
        assert!(close(m.c, r.c, 1e-14) && close(m.d, r.d, 1e-12));
        assert!(cascade(&[], f).is_err());
    }

    #[test]
    fn s21_examples() {
        assert!(close(s21(&Abcd::identity(), 50.0), ONE, 0.0));
        let series = NetworkElement::SeriesImpedance(Lumped::Resistor(50.0)).abcd(1e9);
        assert!(close(s21(&series, 50.0), Complex64::from(2.0 / 3.0), 1e-15));
        let qw = NetworkElement::lossless_line(50.0, 1e8, 1e8 / (4.0 * 1e10)).abcd(1e10);
        assert!((s21(&qw, 50.0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matched_line_transmits_everything() {
        let net = ResonatorNetwork::new(
            vec![
                NetworkElement::lossless_line(50.0, 1e8, 1e-3),
                NetworkElement::SeriesImpedance(Lumped::Inductor(1e-30)),
            ],
            50.0,
            1,
            Nanowire { l0k: 1e-30, istar: 1.0 },
            1e11,
        )
        .unwrap();
        for (_, s) in sweep_s21(&net, 50e9, 150e9, 101).unwrap() {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn network_requires_nanowire_inductor() {
        let err = ResonatorNetwork::new(
            vec![NetworkElement::lossless_line(50.0, 1e8, 1e-3)],
            50.0,
            0,
            Nanowire {
                l0k: 1e-12,
                istar: 1e-6,
            },
            1e11,
        );
        assert!(err.is_err());
        let bad_line = NetworkElement::lossless_line(50.0, 2.0 * C_LIGHT, 1e-3);
        assert!(bad_line.validate().is_err());
    }

    #[test]
    fn readout_criterion() {
        assert!(readout_ok(1e6, 1.0, 1e6));
        assert!(!readout_ok(0.0, 1.0, 1e6));
        let b = 2.0 * PI * 1e6;
        assert!(!readout_ok(3.0 * b / (2.0 * PI), 3.0, b));
    }

    #[test]
    fn default_resonator_has_single_peak_below_design() {
        let net = ResonatorDesign::default().build().unwrap();
        let res = net.small_signal_resonance().unwrap();
        assert_eq!(res.kind, ResonanceKind::Peak);
        assert!(res.f0 < 100e9 && res.f0 > 90e9, "{res:?}");
        assert!(res.q_loaded > 100.0);
        let peak = net.small_signal_peak().unwrap();
        assert!(((peak.f0 - res.f0) / res.f0).abs() < 1e-4);
    }

    #[test]
    fn stored_energy_of_lumped_inductor() {
        let e = NetworkElement::SeriesImpedance(Lumped::Inductor(2e-9));
        let (wm, we) = e.stored_energy(1e9, ZERO, Complex64::new(0.0, 3.0));
        assert!((wm - 9e-9).abs() < 1e-22 && we == 0.0);
    }

    fn lorentzian(f0: f64, q: f64, dip: bool, n: usize) -> Vec<(f64, Complex64)> {
        let kappa = f0 / q;
        linear_grid(f0 - 10.0 * kappa, f0 + 10.0 * kappa, n)
            .unwrap()
            .into_iter()
            .map(|f| {
                let l = Complex64::from(0.5 * kappa) / (J * (f - f0) + 0.5 * kappa);
                (f, if dip { ONE - 0.8 * l } else { 0.6 * l })
            })
            .collect()
    }

    #[test]
    fn synthetic_peak_and_dip_recovered() {
        for dip in [false, true] {
            let (f0, q) = (97.3e9, 4200.0);
            let r = find_resonance(&lorentzian(f0, q, dip, 4001)).unwrap();
            assert_eq!(r.kind == ResonanceKind::Dip, dip);
            assert!(((r.f0 - f0) / f0).abs() < 1e-6, "{r:?}");
            // Finite span leaves a small baseline offset in the half-power level.
            assert!(((r.q_loaded - q) / q).abs() < 0.01, "{r:?}");
        }
    }

    #[test]
    fn flat_or_double_features_are_ambiguous() {
        let flat: Vec<_> = (0..50).map(|k| (1e9 + k as f64, ONE)).collect();
        assert!(matches!(find_resonance(&flat), Err(Error::AmbiguousResonance { .. })));
        let mut two = lorentzian(10e9, 500.0, false, 2001);
        for (f, s) in two.iter_mut() {
            let kappa = 10e9 / 500.0;
            *s += Complex64::from(0.5 * kappa) * 0.6 / (J * (*f - 10e9 - 6.0 * kappa) + 0.5 * kappa);
        }
        assert!(matches!(
            find_resonance(&two),
            Err(Error::AmbiguousResonance { count: 2 })
        ));
    }

    #[test]
    fn stronger_coupling_lowers_q() {
        let weak = ResonatorDesign::default().build().unwrap();
        let strong = ResonatorDesign {
            coupler_c: 2e-15,
            ..ResonatorDesign::default()
        }
        .build()
        .unwrap();
        let (qw, qs) = (
            weak.small_signal_resonance().unwrap().q_loaded,
            strong.small_signal_resonance().unwrap().q_loaded,
        );
        assert!(qs < qw, "{qs} vs {qw}");
    }

    #[test]
    fn resonance_is_grid_independent() {
        let net = ResonatorDesign::default().build().unwrap();
        let peak = net.small_signal_peak().unwrap();
        let span = 15.0 * peak.fwhm;
        let a = find_resonance(&sweep_s21(&net, peak.f0 - span, peak.f0 + span, 3001).unwrap()).unwrap();
        let b = find_resonance(&sweep_s21(&net, peak.f0 - span, peak.f0 + span, 6001).unwrap()).unwrap();
        assert!(((a.f0 - b.f0) / a.f0).abs() < 1e-7);
    }

    #[test]
    fn center_inductor_pulls_fundamental_down() {
        let design = ResonatorDesign {
            coupler_c: 0.2e-15,
            ..ResonatorDesign::default()
        };
        let with = |l0k: f64| {
            ResonatorDesign {
                nanowire: Nanowire { l0k, istar: 1e-5 },
                ..design
            }
            .build()
            .unwrap()
            .small_signal_peak()
            .unwrap()
            .f0
        };
        let bare = with(1e-18);
        for l in [1e-12, 5e-12, 10e-12] {
            let ratio = (with(l) - bare) / center_inductor_shift(design.z0, bare, l);
            assert!((ratio - 1.0).abs() < 0.05, "L = {l:e}: ratio {ratio}");
        }
    }

    #[test]
    fn duffing_zero_power_is_small_signal() {
        let net = ResonatorDesign::default().build().unwrap();
        let r = net.duffing_shift(0.0).unwrap();
        assert_eq!(r.delta_f(), 0.0);
        assert_eq!(r.n_photons, 0.0);
        assert!(net.duffing_shift(-1.0).is_err());
        assert!(net.duffing_shift(f64::NAN).is_err());
    }

    #[test]
    fn literal_rms_convention_gives_a_third_of_the_shift() {
        let net = ResonatorDesign::default().build().unwrap();
        let p = 1e-16;
        let e = net.duffing_shift(p).unwrap();
        let l = net
            .duffing_shift_with(
                p,
                DuffingOptions {
                    kerr: KerrConvention::LiteralRms,
                    ..DuffingOptions::default()
                },
            )
            .unwrap();
        assert!((l.delta_f() / e.delta_f() - 1.0 / 3.0).abs() < 1e-3);
    }
}
