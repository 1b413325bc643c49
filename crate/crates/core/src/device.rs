//! Physical device parameters and bare Hamiltonians.
//!
//! The transmon is a Josephson cosine potential in the E_J ≫ E_C regime,
//! expanded in the oscillator (ladder) basis:
//!
//!   H_q = ω_p b†b + Σ_{n≥2} c_{2n} (b + b†)^{2n},
//!   ω_p = √(8 E_J E_C),  c_{2n} = (−1)^{n+1} E_J (2E_C/E_J)^{n/2} / (2n)!,
//!
//! so c₄ = −E_C/12. The series is kept up to `cosine_order` (4, 6 or 8).
//! All frequencies here and throughout the crate are linear (value = ω/2π,
//! GHz); the offset charge is fixed to zero.

use crate::error::{Error, Result};
use crate::operator::{eigh_sorted, ladder, BasisLabel, CMatrix, Operator, C64};

/// Physical constants of the transmon + resonator + coupling, plus
/// truncation choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Josephson energy E_J/2π in GHz.
    pub ej: f64,
    /// Charging energy E_C/2π in GHz.
    pub ec: f64,
    /// Bare resonator frequency ω_r/2π in GHz.
    pub omega_r: f64,
    /// Transmon–resonator coupling g/2π in GHz.
    pub g: f64,
    /// Transmon Fock truncation.
    pub dim_q: usize,
    /// Resonator Fock truncation (1 disables the resonator).
    pub dim_r: usize,
    /// Highest kept power of the cosine expansion (4, 6 or 8).
    pub cosine_order: usize,
}

impl DeviceParams {
    /// Default truncations: dim_q = 12, dim_r = 4, cosine order 6.
    pub fn new(ej: f64, ec: f64, omega_r: f64, g: f64) -> Self {
        Self {
            ej,
            ec,
            omega_r,
            g,
            dim_q: 12,
            dim_r: 4,
            cosine_order: 6,
        }
    }

    pub fn with_dims(mut self, dim_q: usize, dim_r: usize) -> Self {
        self.dim_q = dim_q;
        self.dim_r = dim_r;
        self
    }

    pub fn with_cosine_order(mut self, order: usize) -> Self {
        self.cosine_order = order;
        self
    }

    /// Static diagonal (plasma) frequency ω̄_q = √(8 E_J E_C) in GHz.
    pub fn omega_plasma(&self) -> f64 {
        (8.0 * self.ej * self.ec).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ej > 0.0 && self.ec > 0.0) {
            return Err(Error::Config("ej and ec must be positive".into()));
        }
        if self.ej / self.ec <= 20.0 {
            return Err(Error::Config(format!(
                "ej/ec = {:.2} is outside the transmon regime (need > 20)",
                self.ej / self.ec
            )));
        }
        if self.dim_q < 6 {
            return Err(Error::Config(format!(
                "dim_q = {} too small (need >= 6)",
                self.dim_q
            )));
        }
        if self.dim_r < 1 {
            return Err(Error::Config("dim_r must be >= 1".into()));
        }
        validate_cosine_order(self.cosine_order)?;
        Ok(())
    }

    pub fn product_dim(&self) -> usize {
        self.dim_q * self.dim_r
    }
}

fn validate_cosine_order(order: usize) -> Result<()> {
    match order {
        4 | 6 | 8 => Ok(()),
        _ => Err(Error::Config(format!(
            "cosine_order must be 4, 6 or 8, got {order}"
        ))),
    }
}

/// Drive frequency, amplitude and the gauge-derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Drive frequency ω_d/2π in GHz.
    pub omega_d: f64,
    /// Charge-gauge drive amplitude Ω_d/2π in GHz.
    pub omega_amp: f64,
    /// Gauge factor ζ = ω_d / √(8 E_J E_C).
    pub zeta: f64,
    /// Counter-rotating elimination fraction ξ = (1 + ω̄_q/ω_d)⁻¹.
    pub xi: f64,
    /// Effective co-rotating amplitude Ω̄_d = ζΩ_d(1−ξ) + ζξΩ_d ω̄_q/ω_d.
    pub omega_bar: f64,
}

/// Compute the drive-derived constants for a device.
///
/// ξ is chosen so the counter-rotating drive terms cancel exactly; the two
/// surviving co-rotating pieces then add up to
/// Ω̄_d = 2ζΩ_d ω̄_q / (ω̄_q + ω_d).
pub fn drive_constants(p: &DeviceParams, omega_d: f64, omega_amp: f64) -> Result<DriveParams> {
    if omega_d <= 0.0 {
        return Err(Error::Config(format!(
            "drive frequency must be positive, got {omega_d}"
        )));
    }
    let omega_bar_q = p.omega_plasma();
    let zeta = omega_d / omega_bar_q;
    let xi = 1.0 / (1.0 + omega_bar_q / omega_d);
    let omega_bar = zeta * omega_amp * (1.0 - xi) + zeta * xi * omega_amp * (omega_bar_q / omega_d);
    Ok(DriveParams {
        omega_d,
        omega_amp,
        zeta,
        xi,
        omega_bar,
    })
}

/// Oscillator-basis Hamiltonian ω_n b†b + Σ_k coeff_k (b+b†)^{p_k}.
///
/// Powers of (b+b†) are taken with a truncation margin so that the
/// retained block is the faithful truncation of the infinite-dimensional
/// operator.
pub(crate) fn oscillator_series_hamiltonian(
    dim: usize,
    number_coeff: f64,
    series: &[(usize, f64)],
) -> CMatrix {
    let margin = series.iter().map(|&(p, _)| p).max().unwrap_or(0);
    let big = dim + margin;
    let b = ladder(big.max(2)).expect("dim >= 2");
    let x = b.matrix() + b.matrix().adjoint();
    let mut acc = CMatrix::zeros(big, big);
    // number operator
    for n in 0..big {
        acc[(n, n)] += C64::new(number_coeff * n as f64, 0.0);
    }
    let mut powers: Vec<CMatrix> = vec![CMatrix::identity(big, big)];
    let max_p = series.iter().map(|&(p, _)| p).max().unwrap_or(0);
    for k in 1..=max_p {
        let next = &powers[k - 1] * &x;
        powers.push(next);
    }
    for &(p, coeff) in series {
        acc += powers[p].scale(coeff);
    }
    acc.view((0, 0), (dim, dim)).into_owned()
}

/// Cosine-series coefficients for −E_J cos φ in the oscillator basis,
/// starting at the quartic term: [(4, −E_C/12), (6, …), (8, …)].
pub(crate) fn cosine_series(ej: f64, ec: f64, order: usize) -> Vec<(usize, f64)> {
    let ratio = 2.0 * ec / ej;
    let mut out = Vec::new();
    let factorials = [24.0, 720.0, 40320.0]; // (2n)! for n = 2, 3, 4
    for (idx, n) in (2..=order / 2).enumerate() {
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        let coeff = sign * ej * ratio.powf(n as f64 / 2.0) / factorials[idx];
        out.push((2 * n, coeff));
    }
    out
}

/// Bare transmon Hamiltonian in the oscillator basis from the Taylor
/// expansion of −E_J cos φ up to `cosine_order`, offset charge zero.
/// Constant terms are dropped; spectra are used relative to the ground
/// state throughout.
pub fn build_bare_transmon(p: &DeviceParams) -> Result<Operator> {
    p.validate()?;
    let series = cosine_series(p.ej, p.ec, p.cosine_order);
    let h = oscillator_series_hamiltonian(p.dim_q, p.omega_plasma(), &series);
    Ok(Operator::new(h, BasisLabel::TransmonFock))
}

/// Eigenlevels of the bare transmon, relative to the ground state, plus
/// the eigenbasis (columns by ascending level). A bound spectrum is
/// labeled by order; deeply truncated upper levels need not resemble a
/// single Fock state.
pub fn transmon_levels(p: &DeviceParams) -> Result<(Vec<f64>, CMatrix)> {
    let h = build_bare_transmon(p)?;
    let eig = eigh_sorted(&h)?;
    let e0 = eig.values[0];
    let levels = eig.values.iter().map(|e| e - e0).collect();
    Ok((levels, eig.vectors))
}

/// Effective transmon drive amplitude (GHz) for a drive applied through
/// the resonator feedline: g·Ω_feed·|1/Δ_rd − 1/Σ_rd| with
/// Δ_rd = ω_r − ω_d and Σ_rd = ω_r + ω_d.
pub fn map_feedline_drive(p: &DeviceParams, omega_feed_amp: f64, omega_d: f64) -> Result<f64> {
    let delta_rd = p.omega_r - omega_d;
    if delta_rd == 0.0 {
        return Err(Error::Domain(
            "resonant feedline drive (omega_d == omega_r) is outside the model".into(),
        ));
    }
    let sigma_rd = p.omega_r + omega_d;
    Ok(p.g * omega_feed_amp * (1.0 / delta_rd - 1.0 / sigma_rd).abs())
}
