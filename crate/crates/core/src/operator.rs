//! Dense complex operators on truncated Fock spaces.
//!
//! Everything downstream works with dense `DMatrix<Complex64>` wrapped in
//! [`Operator`] so that dimension and basis metadata travel with the data.
//! Problem sizes here are desk-scale (product spaces of a few tens of
//! states), so dense storage and a dense Hermitian eigensolver are the
//! right tools.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Which truncated basis a matrix is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    TransmonFock,
    ResonatorFock,
    /// Product basis with transmon-major index: `idx = q * dim_r + r`.
    ProductFock { dim_q: usize, dim_r: usize },
}

/// A dense complex square matrix with basis metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    data: CMatrix,
    basis: BasisLabel,
}

impl Operator {
    /// Wrap a square matrix. Panics if the matrix is not square or if a
    /// product label disagrees with the dimension.
    pub fn new(data: CMatrix, basis: BasisLabel) -> Self {
        assert_eq!(data.nrows(), data.ncols(), "operator matrix must be square");
        if let BasisLabel::ProductFock { dim_q, dim_r } = basis {
            assert_eq!(data.nrows(), dim_q * dim_r, "product dimension mismatch");
        }
        Self { data, basis }
    }

    pub fn zeros(dim: usize, basis: BasisLabel) -> Self {
        Self::new(CMatrix::zeros(dim, dim), basis)
    }

    pub fn identity(dim: usize, basis: BasisLabel) -> Self {
        Self::new(CMatrix::identity(dim, dim), basis)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn basis(&self) -> BasisLabel {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn adjoint(&self) -> Operator {
        Operator::new(self.data.adjoint(), self.basis)
    }

    /// Relative Hermiticity deviation ‖A − A†‖_max / ‖A‖_max.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.data)
    }
}

/// Annihilation (lowering) operator on a truncated Fock space:
/// ⟨n−1|b|n⟩ = √n.
pub fn ladder(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "ladder operator needs at least two levels",
        });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator::new(m, BasisLabel::TransmonFock))
}

/// Kronecker product; the left factor is the transmon (slow) index.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let m = a.matrix().kronecker(b.matrix());
    Operator::new(
        m,
        BasisLabel::ProductFock {
            dim_q: a.dim(),
            dim_r: b.dim(),
        },
    )
}

/// Largest element magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ‖A − A†‖_max / ‖A‖_max (0 for the zero matrix).
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let dev = max_abs(&(m - m.adjoint()));
    dev / scale
}

/// Minimum overlap gap below which an assignment is treated as degenerate.
const ASSIGNMENT_GAP_TOL: f64 = 1e-6;

/// Hermiticity tolerance for [`eigh_assigned`] inputs.
const HERMITICITY_TOL: f64 = 1e-9;

/// Eigendecomposition of a Hermitian operator with a deterministic mapping
/// between dressed (eigen) states and bare (reference) states.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
    /// `assignment[k]` is the bare index claimed by dressed state `k`.
    pub assignment: Vec<usize>,
    /// Global phases fixed: each column's largest-magnitude entry is real
    /// positive.
    pub phases_fixed: bool,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalue of the dressed state assigned to bare index `bare`.
    pub fn value_for_bare(&self, bare: usize) -> f64 {
        let k = self
            .assignment
            .iter()
            .position(|&b| b == bare)
            .expect("assignment is a bijection");
        self.values[k]
    }

    /// Eigenvalues reordered by bare label.
    pub fn values_by_bare(&self) -> Vec<f64> {
        (0..self.dim()).map(|b| self.value_for_bare(b)).collect()
    }

    /// Eigenvector matrix with column `b` holding the dressed state
    /// assigned to bare index `b`.
    pub fn vectors_by_bare(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (k, &b) in self.assignment.iter().enumerate() {
            out.set_column(b, &self.vectors.column(k));
        }
        out
    }

    /// Max residual ‖H v_k − λ_k v_k‖_∞ over all eigenpairs.
    pub fn reconstruction_residual(&self, h: &CMatrix) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.dim() {
            let v = self.vectors.column(k);
            let r = h * v - v * C64::new(self.values[k], 0.0);
            worst = worst.max(r.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }
}

/// Diagonalize a Hermitian operator labeling states by ascending
/// eigenvalue, with the same phase convention as [`eigh_assigned`] but no
/// overlap-based assignment. This is the right labeling for a bare bound
/// spectrum (level n = n-th eigenvalue), where deeply truncated upper
/// levels need not resemble any single Fock state.
pub fn eigh_sorted(h: &Operator) -> Result<EigenDecomposition> {
    let dev = h.hermiticity_deviation();
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let n = h.dim();
    let sym = (h.matrix() + h.matrix().adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        vectors.set_column(k, &eig.eigenvectors.column(src));
    }
    fix_phases(&mut vectors);
    Ok(EigenDecomposition {
        values,
        vectors,
        assignment: (0..n).collect(),
        phases_fixed: true,
    })
}

fn fix_phases(vectors: &mut CMatrix) {
    let n = vectors.nrows();
    for k in 0..vectors.ncols() {
        let mut idx = 0usize;
        let mut mag = -1.0f64;
        for i in 0..n {
            let m = vectors[(i, k)].norm();
            if m > mag {
                mag = m;
                idx = i;
            }
        }
        let z = vectors[(idx, k)];
        if z.norm() > 0.0 {
            let correction = (z / z.norm()).conj();
            for i in 0..n {
                vectors[(i, k)] *= correction;
            }
        }
    }
}

/// Diagonalize a Hermitian operator and assign every eigenvector to the
/// reference (bare) state with which it has maximum |overlap|².
///
/// `reference` columns must be orthonormal; pass `None` for the identity.
/// Eigenvalues come out ascending; each eigenvector's global phase is fixed
/// so its largest-magnitude component is real positive. If a dressed state
/// cannot be attributed unambiguously (top two overlaps closer than 1e-6,
/// or two dressed states claiming the same bare state) the degeneracy is
/// reported as an error rather than broken silently.
pub fn eigh_assigned(h: &Operator, reference: Option<&CMatrix>) -> Result<EigenDecomposition> {
    let dev = h.hermiticity_deviation();
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let n = h.dim();
    // Symmetrize to kill round-off asymmetry before factorizing.
    let sym = (h.matrix() + h.matrix().adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        vectors.set_column(k, &eig.eigenvectors.column(src));
    }

    // Overlaps with the reference basis: o[k][b] = |⟨ref_b|v_k⟩|².
    let overlaps: CMatrix = match reference {
        Some(r) => r.adjoint() * &vectors,
        None => vectors.clone(),
    };

    // Globally greedy matching by descending overlap. Wherever per-vector
    // argmax is collision-free this coincides with it; strongly hybridized
    // manifolds (resonant exchange ladders high in the spectrum) are
    // resolved by global preference instead of failing. A genuine tie —
    // the best remaining overlap within 1e-6 of the next free alternative
    // — marks a physical resonance and is reported as an error.
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(n * n);
    for k in 0..n {
        for b in 0..n {
            pairs.push((k, b, overlaps[(b, k)].norm_sqr()));
        }
    }
    pairs.sort_by(|x, y| {
        y.2.partial_cmp(&x.2)
            .unwrap()
            .then(x.0.cmp(&y.0))
            .then(x.1.cmp(&y.1))
    });
    let mut assignment = vec![usize::MAX; n];
    let mut bare_free = vec![true; n];
    let mut remaining = n;
    for &(k, b, o) in &pairs {
        if assignment[k] != usize::MAX || !bare_free[b] {
            continue;
        }
        let mut second = -1.0f64;
        let mut second_b = b;
        for b2 in 0..n {
            if b2 != b && bare_free[b2] {
                let o2 = overlaps[(b2, k)].norm_sqr();
                if o2 > second {
                    second = o2;
                    second_b = b2;
                }
            }
        }
        if second >= 0.0 && (o - second) < ASSIGNMENT_GAP_TOL {
            return Err(Error::DegenerateAssignment {
                dressed: k,
                first: b.min(second_b),
                second: b.max(second_b),
                gap: o - second,
            });
        }
        assignment[k] = b;
        bare_free[b] = false;
        remaining -= 1;
        if remaining == 0 {
            break;
        }
    }

    // Phase convention: largest-|component| entry made real positive.
    fix_phases(&mut vectors);

    Ok(EigenDecomposition {
        values,
        vectors,
        assignment,
        phases_fixed: true,
    })
}

/// Solve a 3×3 linear system by Gaussian elimination with partial
/// pivoting; `None` on a singular matrix.
pub(crate) fn solve_linear3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// exp(s·A) for anti-Hermitian A, computed through the Hermitian
/// eigendecomposition of iA. Used for the counter-rotating elimination
/// unitary on the joint space.
pub fn exp_anti_hermitian(a: &CMatrix, s: f64) -> Result<CMatrix> {
    let i = C64::new(0.0, 1.0);
    let m = a.map(|z| i * z);
    let dev = hermiticity_deviation(&m);
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let sym = (&m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let n = a.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for k in 0..n {
        // exp(s·A) = exp(-i·s·(iA)) = Q exp(-i s λ) Q†
        diag[(k, k)] = (-i * C64::new(s * eig.eigenvalues[k], 0.0)).exp();
    }
    Ok(&eig.eigenvectors * diag * eig.eigenvectors.adjoint())
}
