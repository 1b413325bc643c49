//! Validity-criteria report: the dimensionless ratios that control every
//! approximation in the effective-Hamiltonian pipeline, evaluated from the
//! current device and drive parameters.
//!
//! Detunings are evaluated at the experimentally accessible frequencies:
//! the static transmon frame frequency ω̄_q = √(8 E_J E_C) for the qubit
//! and the undriven dressed resonator frequency ω̃_r⁰ for the resonator.
//! ξ₃ is the pipeline's own counter-rotating elimination parameter
//! g/(ω̄_q + ω_r).

use crate::coupled::{effective_coupled, Model};
use crate::device::{drive_constants, DeviceParams, DriveParams};
use crate::error::Result;
use crate::transmon::transmon_ladder_elements;

/// Evaluated approximation criteria. Fields named by the approximation
/// they control; see the module docs of [`crate::coupled`] for where each
/// enters.
#[derive(Debug, Clone, Copy)]
pub struct CriteriaReport {
    /// |Σ_qd/Δ_qd| · |B₀₁/B₁₀|, the margin by which the kept co-rotating
    /// ladder element dominates the dropped counter-rotating one (≫ 1).
    pub cr_element_margin: f64,
    /// g² / (2 ω̄_q |Δ_rd|), size of the resonator-displacement feedback
    /// on the drive (≪ 1).
    pub displacement_feedback: f64,
    /// 2 ω̄_q |Δ_rd Σ_qd| / (g² |Δ_qd|), margin of the drive-amplitude
    /// redefinition (≫ 1).
    pub drive_redefinition_margin: f64,
    /// g ξ₃ / |Δ_rd|, residual of the counter-rotating interaction
    /// elimination (≪ 1).
    pub exchange_elimination_residual: f64,
    /// |Σ_qd/Δ_qd|, the plain rotating-wave margin for the drive (≫ 1
    /// would justify the RWA; its smallness here is why the RWA fails).
    pub rwa_drive_margin: f64,
    /// |Σ_qr/Δ_qr|, the rotating-wave margin for the coupling.
    pub rwa_coupling_margin: f64,
    /// α₄/ω_q, relative anharmonicity (≪ 1 defines the weakly anharmonic
    /// regime).
    pub relative_anharmonicity: f64,
    /// Reference frequencies the detunings were evaluated at.
    pub omega_q_ref: f64,
    pub omega_r_ref: f64,
}

/// Evaluate every criterion from the device parameters and drive
/// frequency.
pub fn approximation_report(p: &DeviceParams, d: &DriveParams) -> Result<CriteriaReport> {
    let omega_q = p.omega_plasma();
    // Undriven dressed resonator frequency.
    let d0 = drive_constants(p, d.omega_d, 0.0)?;
    let omega_r = effective_coupled(p, &d0, Model::Full)?.omega_r0;

    let delta_qd = omega_q - d.omega_d;
    let sigma_qd = omega_q + d.omega_d;
    let delta_rd = omega_r - d.omega_d;
    let delta_qr = omega_q - omega_r;
    let sigma_qr = omega_q + omega_r;
    let xi3 = p.g / (p.omega_plasma() + p.omega_r);

    let lad = transmon_ladder_elements(p)?;
    let co = lad.co_rotating(0).norm();
    let counter = lad.counter_rotating(0).norm();
    let element_ratio = if counter > 0.0 {
        co / counter
    } else {
        f64::INFINITY
    };

    Ok(CriteriaReport {
        cr_element_margin: (sigma_qd / delta_qd).abs() * element_ratio,
        displacement_feedback: p.g * p.g / (2.0 * omega_q * delta_rd.abs()),
        drive_redefinition_margin: 2.0 * omega_q * (delta_rd * sigma_qd).abs()
            / (p.g * p.g * delta_qd.abs()),
        exchange_elimination_residual: p.g * xi3 / delta_rd.abs(),
        rwa_drive_margin: (sigma_qd / delta_qd).abs(),
        rwa_coupling_margin: (sigma_qr / delta_qr).abs(),
        relative_anharmonicity: p.ec / omega_q,
        omega_q_ref: omega_q,
        omega_r_ref: omega_r,
    })
}
