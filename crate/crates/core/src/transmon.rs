//! Effective static Hamiltonian of the driven transmon alone, and the
//! renormalized dipole / number matrices derived from its dressing.
//!
//! Pipeline: the counter-rotating drive components are removed exactly by
//! the gauge constants of [`crate::device::drive_constants`]; the static
//! transmon is diagonalized (eigenbasis V, levels E_n); the drive then
//! couples adjacent eigenlevels through the co-rotating ladder elements
//! B = V†bV. In the frame rotating at the drive, the surviving static
//! matrix is
//!
//!   H_rot = diag(E_n − n ω_d) + (Ω̄_d/2) Σ_n (B_{n,n+1} |n⟩⟨n+1| + h.c.),
//!
//! every other element rotates at a multiple of ω_d and is dropped
//! (harmonic-generation terms; negligible away from odd resonances).
//! Diagonalizing with assignment and adding back n·ω_d gives level
//! energies adiabatically connected to the bare ones as Ω_d → 0.

use crate::device::{build_bare_transmon, transmon_levels, DeviceParams, DriveParams};
use crate::error::Result;
use crate::operator::{
    eigh_assigned, eigh_sorted, ladder, BasisLabel, CMatrix, EigenDecomposition, Operator, C64,
};

/// Bare transmon eigenlevels plus the ladder operator expressed in the
/// eigenbasis. `b_eig[n][m]` is ⟨n|b|m⟩ over eigenstates; the superdiagonal
/// carries the co-rotating couplings, the subdiagonal the (small)
/// counter-rotating ones.
#[derive(Debug, Clone)]
pub struct LadderElements {
    /// E_n − E_0 in GHz.
    pub levels: Vec<f64>,
    /// Eigenbasis columns by ascending level.
    pub basis: CMatrix,
    /// B = V† b V.
    pub b_eig: CMatrix,
}

impl LadderElements {
    /// Co-rotating element B_{n,n+1} (reduces to √(n+1) for a harmonic
    /// oscillator).
    pub fn co_rotating(&self, n: usize) -> C64 {
        self.b_eig[(n, n + 1)]
    }

    /// Counter-rotating element B_{n+1,n}; zero for a harmonic oscillator,
    /// small but nonzero under the cosine nonlinearity.
    pub fn counter_rotating(&self, n: usize) -> C64 {
        self.b_eig[(n + 1, n)]
    }
}

/// Diagonalize the bare transmon and transform the ladder operator into
/// its eigenbasis.
pub fn transmon_ladder_elements(p: &DeviceParams) -> Result<LadderElements> {
    let (levels, basis) = transmon_levels(p)?;
    let b = ladder(p.dim_q)?;
    let b_eig = basis.adjoint() * b.matrix() * &basis;
    Ok(LadderElements {
        levels,
        basis,
        b_eig,
    })
}

/// Effective static form of the driven transmon.
#[derive(Debug, Clone)]
pub struct DressedTransmon {
    /// Renormalized fundamental transition ω̃_q (GHz).
    pub omega_q_tilde: f64,
    /// Diagonal nonlinearities [ã₄, ã₆] (GHz) of the effective Kerr-like
    /// form, extracted from the lowest levels.
    pub a_tilde: Vec<f64>,
    /// Frame-restored level energies Ẽ_n − Ẽ_0 (GHz), adiabatically
    /// connected to the bare levels.
    pub energies: Vec<f64>,
    /// Bare levels E_n − E_0 (GHz).
    pub bare_levels: Vec<f64>,
    /// Dressing of the static rotating-frame matrix: eigenvector k is the
    /// dressed state assigned to bare level `assignment[k]`.
    pub dressing: EigenDecomposition,
    pub drive: DriveParams,
    pub device: DeviceParams,
}

impl DressedTransmon {
    /// Bare fundamental transition E₁ − E₀.
    pub fn omega_q_bare(&self) -> f64 {
        self.bare_levels[1]
    }

    /// Drive-induced shift ω̃_q − ω_q of the fundamental transition.
    pub fn stark_shift(&self) -> f64 {
        self.omega_q_tilde - self.omega_q_bare()
    }
}

/// Static rotating-frame matrix of the driven transmon (the matrix whose
/// assigned diagonalization yields the effective static form). Exposed for
/// residual checks and for the validation suite.
pub fn transmon_static_matrix(p: &DeviceParams, d: &DriveParams) -> Result<Operator> {
    let lad = transmon_ladder_elements(p)?;
    Ok(transmon_static_from_parts(&lad, d, p.dim_q))
}

fn transmon_static_from_parts(lad: &LadderElements, d: &DriveParams, dim: usize) -> Operator {
    let mut h = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        h[(n, n)] = C64::new(lad.levels[n] - n as f64 * d.omega_d, 0.0);
    }
    let half = C64::new(0.5 * d.omega_bar, 0.0);
    for n in 0..dim - 1 {
        let coupling = half * lad.co_rotating(n);
        h[(n, n + 1)] += coupling;
        h[(n + 1, n)] += coupling.conj();
    }
    Operator::new(h, BasisLabel::TransmonFock)
}

/// Effective static form of the driven transmon: diagonalize the static
/// rotating-frame matrix with assignment and restore the frame by adding
/// back n·ω_d to the assigned level energies.
pub fn effective_transmon(p: &DeviceParams, d: &DriveParams) -> Result<DressedTransmon> {
    let lad = transmon_ladder_elements(p)?;
    let h = transmon_static_from_parts(&lad, d, p.dim_q);
    let dressing = eigh_assigned(&h, None)?;
    let restored: Vec<f64> = (0..p.dim_q)
        .map(|n| dressing.value_for_bare(n) + n as f64 * d.omega_d)
        .collect();
    let e0 = restored[0];
    let energies: Vec<f64> = restored.iter().map(|e| e - e0).collect();
    let omega_q_tilde = energies[1];
    let a_tilde = diagonal_nonlinearities(&energies);
    Ok(DressedTransmon {
        omega_q_tilde,
        a_tilde,
        energies,
        bare_levels: lad.levels,
        dressing,
        drive: *d,
        device: *p,
    })
}

/// Rotating-wave-approximation variant: the transmon is truncated to its
/// Fock-diagonal (Kerr) part, the drive keeps only its co-rotating half
/// with the bare amplitude ζΩ_d, and the full bare ladder operator couples
/// adjacent Fock states.
pub fn effective_transmon_rwa(p: &DeviceParams, d: &DriveParams) -> Result<DressedTransmon> {
    let bare = build_bare_transmon(p)?;
    let sorted = eigh_sorted(&bare)?;
    let bare_levels: Vec<f64> = sorted.values.iter().map(|e| e - sorted.values[0]).collect();

    let dim = p.dim_q;
    let kerr_levels: Vec<f64> = {
        // Fock-diagonal part of the cosine expansion, relative to the
        // lowest diagonal entry.
        let m = bare.matrix();
        let d0 = m[(0, 0)].re;
        (0..dim).map(|n| m[(n, n)].re - d0).collect()
    };
    let mut h = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        h[(n, n)] = C64::new(kerr_levels[n] - n as f64 * d.omega_d, 0.0);
    }
    let amp = C64::new(0.5 * d.zeta * d.omega_amp, 0.0);
    for n in 0..dim - 1 {
        let el = amp * C64::new(((n + 1) as f64).sqrt(), 0.0);
        h[(n, n + 1)] += el;
        h[(n + 1, n)] += el;
    }
    let op = Operator::new(h, BasisLabel::TransmonFock);
    let dressing = eigh_assigned(&op, None)?;
    let restored: Vec<f64> = (0..dim)
        .map(|n| dressing.value_for_bare(n) + n as f64 * d.omega_d)
        .collect();
    let e0 = restored[0];
    let energies: Vec<f64> = restored.iter().map(|e| e - e0).collect();
    let omega_q_tilde = energies[1];
    let a_tilde = diagonal_nonlinearities(&energies);
    Ok(DressedTransmon {
        omega_q_tilde,
        a_tilde,
        energies,
        bare_levels,
        dressing,
        drive: *d,
        device: *p,
    })
}

/// [ã₄, ã₆] from the lowest four level energies of a Kerr-like ladder
/// Ẽ_n = ω̃ n − (ã₄/2) n(n−1) + ã₆ n(n−1)(n−2).
fn diagonal_nonlinearities(energies: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    if energies.len() >= 3 {
        out.push(2.0 * energies[1] - energies[2]);
    }
    if energies.len() >= 4 {
        let omega = energies[1];
        let a4 = out[0];
        out.push((energies[3] - 3.0 * omega + 3.0 * a4) / 6.0);
    }
    out
}

/// Renormalized dipole element tables and the transformed number operator.
///
/// The dressed operators are expressed on the bare-label basis by
/// sandwiching the co-rotating seed elements between dressed eigenvectors:
/// `d_minus = W D⁻ W†` with `D⁻ = Σ_n B_{n,n+1} |n⟩⟨n+1|` and W the
/// dressing ordered by bare label, `d_plus = (d_minus)†`'s counterpart
/// from `D⁺ = (D⁻)†`, and `n_tilde = W diag(√(i+1)) W†` for the number
/// operator with matrix elements √(i+1).
#[derive(Debug, Clone)]
pub struct DipoleMatrices {
    pub d_plus: CMatrix,
    pub d_minus: CMatrix,
    pub n_tilde: CMatrix,
    pub device: DeviceParams,
    pub drive: DriveParams,
}

impl DipoleMatrices {
    /// |d̃⁽⁻⁾₀₁|, the element driving dressed 0 ↔ 1 transitions.
    pub fn d01_minus(&self) -> C64 {
        self.d_minus[(0, 1)]
    }
}

/// Compute the renormalized dipole matrices of the driven transmon.
pub fn dipole_matrices(p: &DeviceParams, d: &DriveParams) -> Result<DipoleMatrices> {
    let lad = transmon_ladder_elements(p)?;
    let dressed = effective_transmon(p, d)?;
    Ok(dipole_matrices_from_parts(&lad, &dressed, p, d))
}

pub(crate) fn dipole_matrices_from_parts(
    lad: &LadderElements,
    dressed: &DressedTransmon,
    p: &DeviceParams,
    d: &DriveParams,
) -> DipoleMatrices {
    let dim = p.dim_q;
    let w = dressed.dressing.vectors_by_bare();
    let mut d_minus_seed = CMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        d_minus_seed[(n, n + 1)] = lad.co_rotating(n);
    }
    let d_plus_seed = d_minus_seed.adjoint();
    let d_minus = &w * d_minus_seed * w.adjoint();
    let d_plus = &w * d_plus_seed * w.adjoint();
    let mut n_seed = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        n_seed[(i, i)] = C64::new(((i + 1) as f64).sqrt(), 0.0);
    }
    let n_tilde = &w * n_seed * w.adjoint();
    DipoleMatrices {
        d_plus,
        d_minus,
        n_tilde,
        device: *p,
        drive: *d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::drive_constants;
    use crate::operator::max_abs;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn paper_device() -> DeviceParams {
        DeviceParams::new(28.6, 0.149, 4.334, 0.245)
    }

    fn drive(omega_d: f64, amp: f64) -> DriveParams {
        drive_constants(&paper_device(), omega_d, amp).unwrap()
    }

    #[test]
    fn adiabatic_limit_reproduces_bare_transmon() {
        // Ω_d = 0: ω̃_q = ω_q, ã₄ = χ_q, dressing = identity.
        let p = paper_device();
        let d = drive(5.89, 0.0);
        let k = effective_transmon(&p, &d).unwrap();
        assert_abs_diff_eq!(k.omega_q_tilde, k.bare_levels[1], epsilon = 1e-12);
        let chi_q = (k.bare_levels[1] - k.bare_levels[0]) - (k.bare_levels[2] - k.bare_levels[1]);
        assert_abs_diff_eq!(k.a_tilde[0], chi_q, epsilon = 1e-12);
        // Dressing is the identity: each dressed vector is a bare basis
        // vector (the rotating-frame diagonal need not be ascending in n,
        // so the assignment permutation itself need not be trivial).
        let w = k.dressing.vectors_by_bare();
        let id = CMatrix::identity(p.dim_q, p.dim_q);
        assert!(max_abs(&(w - id)) < 1e-12);
        assert_abs_diff_eq!(k.stark_shift(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ladder_elements_dominated_by_co_rotating() {
        // The co-rotating superdiagonal stays near √(n+1); the
        // counter-rotating subdiagonal is a small nonlinear correction.
        let lad = transmon_ladder_elements(&paper_device()).unwrap();
        for n in 0..4 {
            let co = lad.co_rotating(n).norm();
            let counter = lad.counter_rotating(n).norm();
            assert_relative_eq!(co, ((n + 1) as f64).sqrt(), max_relative = 0.05);
            assert!(counter < 0.1 * co, "n={n}: counter {counter} vs co {co}");
            assert!(counter > 0.0);
        }
    }

    #[test]
    fn stark_shift_matches_perturbation_theory_far_detuned() {
        // Far-detuned weak drive: second-order perturbation theory on the
        // static rotating-frame matrix is an independent oracle.
        let p = paper_device();
        let d = drive(10.0, 0.05);
        let k = effective_transmon(&p, &d).unwrap();

        let lad = transmon_ladder_elements(&p).unwrap();
        let e = |n: usize| lad.levels[n] - n as f64 * d.omega_d;
        let half = 0.5 * d.omega_bar;
        let shift = |n: usize| {
            let mut s = 0.0;
            if n + 1 < p.dim_q {
                let m = half * lad.co_rotating(n).norm();
                s += m * m / (e(n) - e(n + 1));
            }
            if n > 0 {
                let m = half * lad.co_rotating(n - 1).norm();
                s += m * m / (e(n) - e(n - 1));
            }
            s
        };
        let pt = shift(1) - shift(0);
        let actual = k.stark_shift();
        assert_relative_eq!(actual, pt, max_relative = 0.05);
    }

    #[test]
    fn stark_shift_quadratic_in_amplitude() {
        let p = paper_device();
        let s1 = effective_transmon(&p, &drive(10.0, 0.04)).unwrap().stark_shift();
        let s2 = effective_transmon(&p, &drive(10.0, 0.08)).unwrap().stark_shift();
        assert_relative_eq!(s2 / s1, 4.0, max_relative = 0.02);
    }

    #[test]
    fn frame_offset_invariance() {
        // Adding a global constant to the bare Hamiltonian must not move
        // ω̃_q: energies are used relative to the ground state throughout.
        let p = paper_device();
        let d = drive(5.89, 0.1);
        let lad = transmon_ladder_elements(&p).unwrap();
        let base = effective_transmon(&p, &d).unwrap();

        let mut shifted = lad.clone();
        for lv in shifted.levels.iter_mut() {
            *lv += 7.5;
        }
        // The frame machinery subtracts n·ω_d from shifted absolute levels;
        // rebuild manually to apply the offset.
        let h = transmon_static_from_parts(&shifted, &d, p.dim_q);
        let eig = eigh_assigned(&h, None).unwrap();
        let restored: Vec<f64> = (0..p.dim_q)
            .map(|n| eig.value_for_bare(n) + n as f64 * d.omega_d)
            .collect();
        let omega = restored[1] - restored[0];
        assert_relative_eq!(omega, base.omega_q_tilde, max_relative = 1e-12);
    }

    #[test]
    fn continuity_over_amplitude_ramp() {
        // Eigenvalue trajectories stay continuous over an Ω_d ramp.
        let p = paper_device();
        let amps: Vec<f64> = (0..=20).map(|k| 0.01 * k as f64).collect();
        let mut prev: Option<f64> = None;
        for &a in &amps {
            let k = effective_transmon(&p, &drive(5.89, a)).unwrap();
            if let Some(last) = prev {
                assert!(
                    (k.omega_q_tilde - last).abs() < 0.02,
                    "jump at amp {a}: {} -> {}",
                    last,
                    k.omega_q_tilde
                );
            }
            prev = Some(k.omega_q_tilde);
        }
    }

    #[test]
    fn rwa_deviates_far_detuned() {
        // At ω_d = 10 GHz the co-rotating-only model visibly departs from
        // the full pipeline at strong drive.
        let p = paper_device();
        let d = drive(10.0, 0.8);
        let full = effective_transmon(&p, &d).unwrap();
        let rwa = effective_transmon_rwa(&p, &d).unwrap();
        let full_shift = full.stark_shift();
        let rwa_shift = rwa.omega_q_tilde - rwa.bare_levels[1];
        assert!(
            (full_shift - rwa_shift).abs() > 0.2 * full_shift.abs().max(rwa_shift.abs()),
            "full {full_shift} vs rwa {rwa_shift}"
        );
    }

    #[test]
    fn dipole_reduces_to_bare_at_zero_drive() {
        // Ω_d = 0: d̃⁽⁻⁾ has only (n, n+1) entries with the bare values,
        // diagonals vanish, ñ is diag(√(i+1)).
        let p = paper_device();
        let d = drive(5.89, 0.0);
        let dm = dipole_matrices(&p, &d).unwrap();
        let lad = transmon_ladder_elements(&p).unwrap();
        for i in 0..p.dim_q {
            for j in 0..p.dim_q {
                let v = dm.d_minus[(i, j)];
                if j == i + 1 {
                    assert_abs_diff_eq!(v.re, lad.co_rotating(i).re, epsilon = 1e-12);
                } else {
                    assert!(v.norm() < 1e-12, "({i},{j}) = {v}");
                }
            }
            assert_abs_diff_eq!(
                dm.n_tilde[(i, i)].re,
                ((i + 1) as f64).sqrt(),
                epsilon = 1e-12
            );
        }
        assert!(dm.d_minus[(0, 0)].norm() < 1e-12);
        assert!(dm.d_minus[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn transmon_diagonal_dipoles_asymmetric_near_resonance() {
        // |d̃₀₀| ≠ |d̃₁₁| at finite drive near resonance (multi-level
        // effect absent for a two-state system).
        let p = paper_device();
        let d = drive(5.6, 0.08);
        let dm = dipole_matrices(&p, &d).unwrap();
        let d00 = dm.d_minus[(0, 0)].norm();
        let d11 = dm.d_minus[(1, 1)].norm();
        assert!(d00 > 1e-4 || d11 > 1e-4);
        assert!(
            (d00 - d11).abs() > 0.05 * d00.max(d11),
            "d00 {d00} vs d11 {d11}"
        );
    }

    #[test]
    fn dipole_column_norms_continuous_and_match_bare_at_zero() {
        let p = paper_device();
        let bare = dipole_matrices(&p, &drive(5.89, 0.0)).unwrap();
        let mut prev: Option<f64> = None;
        for k in 0..=10 {
            let amp = 0.02 * k as f64;
            let dm = dipole_matrices(&p, &drive(5.89, amp)).unwrap();
            let col1: f64 = (0..p.dim_q)
                .map(|i| dm.d_minus[(i, 1)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if k == 0 {
                let bare_col: f64 = (0..p.dim_q)
                    .map(|i| bare.d_minus[(i, 1)].norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert_abs_diff_eq!(col1, bare_col, epsilon = 1e-12);
            }
            if let Some(lastv) = prev {
                assert!((col1 - lastv).abs() < 0.1, "column norm jump at {amp}");
            }
            prev = Some(col1);
        }
    }

    #[test]
    fn d_plus_is_adjoint_of_d_minus() {
        let p = paper_device();
        let dm = dipole_matrices(&p, &drive(6.5, 0.12)).unwrap();
        assert!(max_abs(&(dm.d_plus.clone() - dm.d_minus.adjoint())) < 1e-12);
    }
}
