//! Measured quantities derived from the effective static forms: Stark and
//! Lamb shifts, cross-nonlinearity ratios, renormalized Rabi frequency,
//! and renormalized coherence times.
//!
//! Noise spectral densities carry arbitrary units and enter only through
//! ratios (T̃₁/T₁ and friends); no absolute calibration is attempted.

use crate::coupled::{DressedSystem, Model};
use crate::device::{drive_constants, DeviceParams};
use crate::error::{Error, Result};
use crate::operator::solve_linear3;
use crate::transmon::{dipole_matrices, DipoleMatrices, DressedTransmon};
use crate::two_state::{TsDressed, TsParams};

/// The uncoupled (resonator-free) qubit frequencies a Lamb shift is
/// measured against: the driven value ω̃_q and the bare value ω_q.
#[derive(Debug, Clone, Copy)]
pub struct UncoupledReference {
    pub omega_driven: f64,
    pub omega_bare: f64,
}

impl From<&DressedTransmon> for UncoupledReference {
    fn from(k: &DressedTransmon) -> Self {
        Self {
            omega_driven: k.omega_q_tilde,
            omega_bare: k.omega_q_bare(),
        }
    }
}

impl UncoupledReference {
    pub fn from_two_state(dressed: &TsDressed, ts: &TsParams) -> Self {
        Self {
            omega_driven: dressed.omega0_dressed,
            omega_bare: ts.omega0_ts,
        }
    }
}

/// Stark shift and the renormalization ratios of Lamb shift and
/// cross-nonlinearity.
#[derive(Debug, Clone, Copy)]
pub struct RenormalizedSpectrumReport {
    /// δω_q⁰ = ω̃_q⁰ − ω_q⁰, signed, GHz.
    pub stark: f64,
    /// L̃_q/L_q with L̃_q = ω̃_q⁰ − ω̃_q.
    pub lamb_ratio: f64,
    /// χ̃_qr/χ_qr.
    pub chiqr_ratio: f64,
    pub model: Model,
}

/// Build the report from a driven system, its zero-drive baseline and the
/// matching uncoupled qubit reference.
pub fn spectrum_report(
    full: &DressedSystem,
    baseline: &DressedSystem,
    uncoupled: &UncoupledReference,
) -> Result<RenormalizedSpectrumReport> {
    if full.model != baseline.model {
        return Err(Error::Mismatch(format!(
            "model mismatch: {} vs baseline {}",
            full.model, baseline.model
        )));
    }
    if baseline.drive.omega_amp != 0.0 {
        return Err(Error::Mismatch("baseline must be at zero drive".into()));
    }
    if full.device != baseline.device {
        return Err(Error::Mismatch(
            "driven and baseline systems use different device parameters".into(),
        ));
    }
    let lamb_bare = baseline.omega_q0 - uncoupled.omega_bare;
    if lamb_bare == 0.0 {
        return Err(Error::Domain("undriven Lamb shift vanishes".into()));
    }
    Ok(RenormalizedSpectrumReport {
        stark: full.omega_q0 - baseline.omega_q0,
        lamb_ratio: (full.omega_q0 - uncoupled.omega_driven) / lamb_bare,
        chiqr_ratio: full.chi_qr / baseline.chi_qr,
        model: full.model,
    })
}

/// Noise power spectral density in arbitrary units: a quadratic
/// representation of the transverse density S_⊥(ω)/S_⊥(ω_ref), plus the
/// zero-frequency longitudinal value. S_⊥ vanishes for ω < 0
/// (low-temperature convention: no absorption from the bath).
#[derive(Debug, Clone, Copy)]
pub struct NoisePsd {
    /// (c₀, c₁, c₂) of S_⊥(ω) = c₀ + c₁ω + c₂ω².
    pub coeffs: [f64; 3],
    /// Frequency the quadratic was normalized at.
    pub omega_ref: f64,
    /// S_∥(0), arbitrary units.
    pub s_par_zero: f64,
    /// Optional quadratic for S_∥(ω), used only to audit the size of the
    /// neglected longitudinal relaxation channel.
    pub s_par_coeffs: Option<[f64; 3]>,
}

impl NoisePsd {
    /// Frequency-independent transverse noise of unit weight.
    pub fn flat() -> Self {
        Self {
            coeffs: [1.0, 0.0, 0.0],
            omega_ref: 0.0,
            s_par_zero: 1.0,
            s_par_coeffs: None,
        }
    }

    pub fn s_perp(&self, omega: f64) -> f64 {
        if omega < 0.0 {
            return 0.0;
        }
        let [c0, c1, c2] = self.coeffs;
        (c0 + c1 * omega + c2 * omega * omega).max(0.0)
    }

    fn s_par(&self, omega: f64) -> Option<f64> {
        self.s_par_coeffs
            .map(|[c0, c1, c2]| (c0 + c1 * omega + c2 * omega * omega).max(0.0))
    }
}

/// Renormalized coherence times (arbitrary units: inverse of π·S·d²).
#[derive(Debug, Clone, Copy)]
pub struct CoherenceTimes {
    pub t1: f64,
    pub t_phi: f64,
    pub t2: f64,
    /// Magnitude of the neglected longitudinal channel
    /// π S_∥(ω̃_q⁰ − ω_d) ñ₀₁², available when a full longitudinal PSD is
    /// supplied. Kept for auditing the neglect, never added to the rates.
    pub neglected_t1_rate: Option<f64>,
}

/// Evaluate the renormalized relaxation, pure-dephasing and combined
/// coherence times from the dressed dipole/number matrices at n_r = 0:
///
///   1/T̃₁ = π S_⊥(ω̃_q⁰) |d̃₀₁|²,
///   1/T̃_φ = π [S_∥(0)(ñ₁₁−ñ₀₀)² + S_⊥(ω_d)|d̃₁₁−d̃₀₀|²],
///   1/T̃₂ = 1/(2T̃₁) + 1/T̃_φ.
pub fn coherence_times(
    dm: &DipoleMatrices,
    psd: &NoisePsd,
    omega_q_tilde0: f64,
    omega_d: f64,
) -> Result<CoherenceTimes> {
    let s_relax = psd.s_perp(omega_q_tilde0);
    if s_relax <= 0.0 {
        return Err(Error::Domain(format!(
            "transverse noise density vanishes at the qubit frequency {omega_q_tilde0} GHz"
        )));
    }
    let d01 = dm.d_minus[(0, 1)].norm();
    let rate1 = std::f64::consts::PI * s_relax * d01 * d01;

    let n_diff = dm.n_tilde[(1, 1)].re - dm.n_tilde[(0, 0)].re;
    let d_diff = (dm.d_minus[(1, 1)] - dm.d_minus[(0, 0)]).norm();
    let rate_phi = std::f64::consts::PI
        * (psd.s_par_zero * n_diff * n_diff + psd.s_perp(omega_d) * d_diff * d_diff);

    let neglected = psd.s_par(omega_q_tilde0 - omega_d).map(|s| {
        let n01 = dm.n_tilde[(0, 1)].norm();
        std::f64::consts::PI * s * n01 * n01
    });

    if rate1 <= 0.0 || rate_phi < 0.0 {
        return Err(Error::Domain("non-positive relaxation rate".into()));
    }
    Ok(CoherenceTimes {
        t1: 1.0 / rate1,
        t_phi: if rate_phi > 0.0 {
            1.0 / rate_phi
        } else {
            f64::INFINITY
        },
        t2: 1.0 / (0.5 * rate1 + rate_phi),
        neglected_t1_rate: neglected,
    })
}

/// Renormalized Rabi frequency Ω̃_R = Γ·|d̃₀₁| for a resonant Rabi tone;
/// Γ is an opaque transfer scalar (instrument-specific).
pub fn rabi_frequency(dm: &DipoleMatrices, gamma: f64) -> f64 {
    gamma * dm.d_minus[(0, 1)].norm()
}

/// The transfer-function bundle Γ = 2·√(κ_ex γ P_R / ω̃_q⁰): the product
/// κ_ex·γ·P_R is a single opaque scalar (its factors are not separately
/// calibratable).
pub fn transfer_gamma(kappa_gamma_power: f64, omega_q_tilde0: f64) -> Result<f64> {
    if omega_q_tilde0 <= 0.0 || kappa_gamma_power < 0.0 {
        return Err(Error::Domain(
            "transfer bundle needs a positive qubit frequency and non-negative power".into(),
        ));
    }
    Ok(2.0 * (kappa_gamma_power / omega_q_tilde0).sqrt())
}

/// Dipole/number matrices in the n_r = 0 approximation: the resonator's
/// presence is folded in by shifting the drive frequency by the undriven
/// Lamb shift before dressing the bare transmon.
pub fn nr0_dipole_matrices(
    p: &DeviceParams,
    omega_d: f64,
    omega_amp: f64,
    undriven_lamb: f64,
) -> Result<DipoleMatrices> {
    let d = drive_constants(p, omega_d - undriven_lamb, omega_amp)?;
    dipole_matrices(p, &d)
}

/// Least-squares quadratic fit of relative spectral-density samples
/// (ω_i, s_i), normalized to 1 at the first point's frequency. In the
/// far-detuned recipe the samples come from measured T₁ ratios via
/// s_i = T₁/T̃₁(ω_i).
pub fn fit_noise_psd(points: &[(f64, f64)]) -> Result<NoisePsd> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "quadratic fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    // Normal equations for [1, ω, ω²].
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(w, y) in points {
        let row = [1.0, w, w * w];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let mut coeffs = solve_linear3(&ata, &atb).ok_or(Error::InsufficientData(
        "degenerate abscissas in PSD fit".into(),
    ))?;
    let omega_ref = points[0].0;
    let at_ref = coeffs[0] + coeffs[1] * omega_ref + coeffs[2] * omega_ref * omega_ref;
    if at_ref.abs() < 1e-12 {
        return Err(Error::Domain(
            "fitted spectral density vanishes at the reference frequency".into(),
        ));
    }
    for c in coeffs.iter_mut() {
        *c /= at_ref;
    }
    Ok(NoisePsd {
        coeffs,
        omega_ref,
        s_par_zero: 1.0,
        s_par_coeffs: None,
    })
}
