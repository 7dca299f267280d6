//! Dense complex linear algebra for Hermitian and unitary matrices.
//!
//! Everything in this module is self-contained: a cyclic Jacobi eigensolver
//! for Hermitian matrices, a joint-diagonalization scheme for unitaries built
//! on top of it, the principal logarithm of a unitary, one-parameter unitary
//! groups `t -> e^{itA}`, and the functional calculus `f(U)`.
//!
//! Unitary matrices are diagonalized by splitting `U = C + iS` with
//! `C = (U + U*)/2` and `S = (U - U*)/(2i)`. Both parts are Hermitian and
//! commute because `U` is normal, so a basis diagonalizing `C` cluster-wise
//! and `S` within each cluster diagonalizes `U` itself. Clusters of `C` that
//! stay unresolved after the `S` pass (angles agreeing in both cosine and
//! sine to the cluster gap) are refined recursively at a tighter gap.

use num_complex::Complex;
use std::f64::consts::{PI, TAU};

pub type Complex64 = Complex<f64>;

/// Max-entry tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Max-entry tolerance on `U*U - I` for accepting a matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Eigenvalue angles closer than this to the branch cut at `pi` make the
/// principal logarithm ambiguous.
pub const BRANCH_CUT_TOL: f64 = 1e-8;

const JACOBI_SWEEP_BUDGET: usize = 30;
const JACOBI_REL_OFF_TOL: f64 = 1e-14;
const CLUSTER_GAP: f64 = 1e-8;
const REFINE_GAP: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |H - H*| = {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("matrix is not unitary: max |U*U - I| = {defect:.3e} exceeds {tol:.1e}")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("Jacobi solver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix entries must be finite")]
    NonFiniteEntry,
}

/// `e^{i theta}` as a complex number.
pub fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Wrap an angle into `(-pi, pi]`; the value `-pi` maps to `+pi`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t > PI {
        t -= TAU;
    } else if t <= -PI {
        t += TAU;
    }
    if t == -PI {
        t = PI;
    }
    t
}

/// Distance between two angles measured around the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Dense square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        assert!(dim >= 1, "matrix dimension must be at least 1");
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.at(j, i).conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sub");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self { dim: self.dim, data }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        Self { dim: self.dim, data }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in mul");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self.at(i, k);
                if aik.re == 0.0 && aik.im == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += aik * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch in matvec");
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for i in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..d {
                acc += self.data[i * d + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-entry norm of `H - H*`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self.at(i, j) - self.at(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Max-entry norm of `U*U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let product = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let expected = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((product.at(i, j) - expected).norm());
            }
        }
        worst
    }

    /// `(M + M*)/2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        self.add(&adj).scale(Complex64::new(0.5, 0.0))
    }

    /// `(M - M*)/(2i)`.
    pub fn skew_part_over_i(&self) -> Self {
        let adj = self.adjoint();
        self.sub(&adj).scale(Complex64::new(0.0, -0.5))
    }

    fn offdiag_frobenius(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    acc += self.at(i, j).norm_sqr();
                }
            }
        }
        acc.sqrt()
    }
}

fn ensure_finite(m: &ComplexMatrix) -> Result<(), LinalgError> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(LinalgError::NonFiniteEntry)
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in ascending
/// order and an orthonormal eigenvector basis (columns of `vectors`).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    eigenvalues: Vec<f64>,
    vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let diag: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect();
        assemble(&self.vectors, &diag)
    }
}

/// Eigendecomposition of a unitary matrix: eigenvalue angles in `(-pi, pi]`
/// sorted ascending, plus an orthonormal eigenvector basis.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    angles: Vec<f64>,
    vectors: ComplexMatrix,
}

impl UnitaryEigen {
    /// Spectral data with the standard basis as eigenvectors. Angles must be
    /// ascending and inside `(-pi, pi]`.
    pub fn from_angles(angles: Vec<f64>) -> Result<Self, LinalgError> {
        if angles.is_empty() {
            return Err(LinalgError::DimensionMismatch { left: 0, right: 1 });
        }
        for w in angles.windows(2) {
            if w[1] < w[0] {
                return Err(LinalgError::NotUnitary {
                    defect: w[0] - w[1],
                    tol: 0.0,
                });
            }
        }
        if angles.iter().any(|&a| !(a > -PI && a <= PI) || !a.is_finite()) {
            return Err(LinalgError::NonFiniteEntry);
        }
        let dim = angles.len();
        Ok(Self {
            angles,
            vectors: ComplexMatrix::identity(dim),
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn eigenvalue(&self, k: usize) -> Complex64 {
        cis(self.angles[k])
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let diag: Vec<Complex64> = self.angles.iter().map(|&a| cis(a)).collect();
        assemble(&self.vectors, &diag)
    }
}

/// `W diag(d) W*` for an orthonormal column basis `W`.
pub fn assemble(vectors: &ComplexMatrix, diag: &[Complex64]) -> ComplexMatrix {
    let d = vectors.dim();
    assert_eq!(diag.len(), d, "dimension mismatch in assemble");
    let mut scaled = vectors.clone();
    for j in 0..d {
        for i in 0..d {
            let v = scaled.at(i, j) * diag[j];
            scaled.set(i, j, v);
        }
    }
    scaled.mul(&vectors.adjoint())
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Convergence: off-diagonal Frobenius mass below `1e-14 * ||H||_F`, within a
/// budget of 30 sweeps.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    ensure_finite(h)?;
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian {
            defect,
            tol: HERMITIAN_TOL,
        });
    }
    jacobi(&h.hermitian_part())
}

fn jacobi(h: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    let d = h.dim();
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(d);
    let norm = a.frobenius();
    let target = JACOBI_REL_OFF_TOL * norm;
    let skip = if d > 0 { target / (10.0 * d as f64) } else { 0.0 };

    let mut converged = norm == 0.0 || a.offdiag_frobenius() <= target;
    if !converged {
        for _sweep in 0..JACOBI_SWEEP_BUDGET {
            for p in 0..d {
                for q in (p + 1)..d {
                    rotate(&mut a, &mut v, p, q, skip);
                }
            }
            if a.offdiag_frobenius() <= target {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            sweeps: JACOBI_SWEEP_BUDGET,
        });
    }

    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a.at(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(d, |i, j| v.at(i, order[j]));
    Ok(HermitianEigen {
        eigenvalues,
        vectors,
    })
}

/// One Jacobi rotation annihilating the `(p, q)` entry.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, skip: f64) {
    let z = a.at(p, q);
    let az = z.norm();
    if az <= skip {
        return;
    }
    let d = a.dim();
    let app = a.at(p, p).re;
    let aqq = a.at(q, q).re;
    let phase = z / az;
    let tau = (app - aqq) / (2.0 * az);
    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G = [[c, -s*phase], [s*conj(phase), c]] on the (p, q) plane.
    let g_pq = -phase * s;
    let g_qp = phase.conj() * s;

    // A <- A G (columns p, q)
    for k in 0..d {
        let akp = a.at(k, p);
        let akq = a.at(k, q);
        a.set(k, p, akp * c + akq * g_qp);
        a.set(k, q, akp * g_pq + akq * c);
    }
    // A <- G* A (rows p, q)
    for k in 0..d {
        let apk = a.at(p, k);
        let aqk = a.at(q, k);
        a.set(p, k, apk * c + aqk * g_qp.conj());
        a.set(q, k, apk * g_pq.conj() + aqk * c);
    }
    // Clean the rotated pair.
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    let rpp = a.at(p, p).re;
    let rqq = a.at(q, q).re;
    a.set(p, p, Complex64::new(rpp, 0.0));
    a.set(q, q, Complex64::new(rqq, 0.0));

    // V <- V G
    for k in 0..d {
        let vkp = v.at(k, p);
        let vkq = v.at(k, q);
        v.set(k, p, vkp * c + vkq * g_qp);
        v.set(k, q, vkp * g_pq + vkq * c);
    }
}

/// Joint eigenbasis for the commuting Hermitian pair `(C, S)`: diagonalize
/// `C`, then `S` restricted to each eigenvalue cluster of `C`.
fn two_stage(
    c_mat: &ComplexMatrix,
    s_mat: &ComplexMatrix,
    gap: f64,
) -> Result<ComplexMatrix, LinalgError> {
    let ec = jacobi(&c_mat.hermitian_part())?;
    let vals = ec.eigenvalues().to_vec();
    let mut w = ec.vectors;
    let d = c_mat.dim();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && vals[end] - vals[end - 1] <= gap {
            end += 1;
        }
        if end - start > 1 {
            let block = project_block(s_mat, &w, start, end);
            let eb = jacobi(&block.hermitian_part())?;
            apply_block_rotation(&mut w, start, end, eb.vectors());
        }
        start = end;
    }
    Ok(w)
}

/// `W[:, start..end]* M W[:, start..end]` as a small dense block.
fn project_block(m: &ComplexMatrix, w: &ComplexMatrix, start: usize, end: usize) -> ComplexMatrix {
    let d = m.dim();
    let k = end - start;
    let mut tmp = vec![Complex64::new(0.0, 0.0); d * k];
    for j in 0..k {
        for i in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..d {
                acc += m.at(i, l) * w.at(l, start + j);
            }
            tmp[i * k + j] = acc;
        }
    }
    ComplexMatrix::from_fn(k, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..d {
            acc += w.at(l, start + i).conj() * tmp[l * k + j];
        }
        acc
    })
}

/// `W[:, start..end] <- W[:, start..end] R` for a small square rotation `R`.
fn apply_block_rotation(w: &mut ComplexMatrix, start: usize, end: usize, r: &ComplexMatrix) {
    let d = w.dim();
    let k = end - start;
    for i in 0..d {
        let row: Vec<Complex64> = (0..k).map(|j| w.at(i, start + j)).collect();
        for j in 0..k {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..k {
                acc += row[l] * r.at(l, j);
            }
            w.set(i, start + j, acc);
        }
    }
}

/// Eigendecomposition of a unitary matrix.
pub fn unitary_eig(u: &ComplexMatrix) -> Result<UnitaryEigen, LinalgError> {
    ensure_finite(u)?;
    let defect = u.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(LinalgError::NotUnitary {
            defect,
            tol: UNITARY_TOL,
        });
    }

    let c = u.hermitian_part();
    let s = u.skew_part_over_i();
    let mut w = two_stage(&c, &s, CLUSTER_GAP)?;

    // Sort columns by eigenvalue angle.
    let mut r = w.adjoint().mul(u).mul(&w);
    sort_columns_by_angle(&mut w, &mut r, u);

    // Near-degenerate angle groups that survive the C/S split are refined at
    // a tighter gap; without this the reconstruction residual can sit at the
    // cluster-gap scale instead of machine scale.
    for _pass in 0..2 {
        let angles: Vec<f64> = (0..w.dim()).map(|k| r.at(k, k).arg()).collect();
        let groups = residual_groups(&angles, &r);
        if groups.is_empty() {
            break;
        }
        for (gs, ge) in groups {
            let block = ComplexMatrix::from_fn(ge - gs, |i, j| r.at(gs + i, gs + j));
            let bc = block.hermitian_part();
            let bs = block.skew_part_over_i();
            let wb = two_stage(&bc, &bs, REFINE_GAP)?;
            apply_block_rotation(&mut w, gs, ge, &wb);
        }
        r = w.adjoint().mul(u).mul(&w);
        sort_columns_by_angle(&mut w, &mut r, u);
    }

    let angles: Vec<f64> = (0..w.dim())
        .map(|k| normalize_angle(r.at(k, k).arg()))
        .collect();
    let mut order: Vec<usize> = (0..angles.len()).collect();
    order.sort_by(|&i, &j| angles[i].partial_cmp(&angles[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| angles[i]).collect();
    let vectors = ComplexMatrix::from_fn(w.dim(), |i, j| w.at(i, order[j]));
    Ok(UnitaryEigen {
        angles: sorted,
        vectors,
    })
}

fn sort_columns_by_angle(w: &mut ComplexMatrix, r: &mut ComplexMatrix, u: &ComplexMatrix) {
    let d = w.dim();
    let angles: Vec<f64> = (0..d).map(|k| r.at(k, k).arg()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| angles[i].partial_cmp(&angles[j]).unwrap());
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return;
    }
    *w = ComplexMatrix::from_fn(d, |i, j| w.at(i, order[j]));
    *r = w.adjoint().mul(u).mul(w);
}

/// Consecutive runs of near-equal angles (circular gap below `1e-7`) that
/// still carry off-diagonal residual above `1e-12`. Angles are assumed
/// sorted; a run that wraps across the cut is split, which only costs one
/// extra refinement pass.
fn residual_groups(angles: &[f64], r: &ComplexMatrix) -> Vec<(usize, usize)> {
    const ANGLE_GROUP_GAP: f64 = 1e-7;
    const RESIDUAL_TOL: f64 = 1e-12;
    let d = angles.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && circular_distance(angles[end], angles[end - 1]) <= ANGLE_GROUP_GAP {
            end += 1;
        }
        if end - start > 1 {
            let mut worst: f64 = 0.0;
            for i in start..end {
                for j in start..end {
                    if i != j {
                        worst = worst.max(r.at(i, j).norm());
                    }
                }
            }
            if worst > RESIDUAL_TOL {
                out.push((start, end));
            }
        }
        start = end;
    }
    out
}

/// Result of the principal logarithm of a unitary: the Hermitian generator
/// `A` with `e^{iA} = W` and spectrum in `(-pi, pi]`, plus a flag marking
/// eigenvalues within `1e-8` of the branch cut at `-1`.
#[derive(Debug, Clone)]
pub struct UnitaryLog {
    pub matrix: ComplexMatrix,
    pub branch_ambiguous: bool,
}

/// Principal logarithm: Hermitian `A` with `e^{iA} = W`, eigenvalues of `A`
/// in `(-pi, pi]`. Spectrum near `-1` sets `branch_ambiguous` instead of
/// failing; any branch is a valid generator.
pub fn principal_log_unitary(w: &ComplexMatrix) -> Result<UnitaryLog, LinalgError> {
    let eig = unitary_eig(w)?;
    let branch_ambiguous = eig
        .angles()
        .iter()
        .any(|&a| circular_distance(a, PI) < BRANCH_CUT_TOL);
    let diag: Vec<Complex64> = eig
        .angles()
        .iter()
        .map(|&a| Complex64::new(a, 0.0))
        .collect();
    let matrix = assemble(eig.vectors(), &diag).hermitian_part();
    Ok(UnitaryLog {
        matrix,
        branch_ambiguous,
    })
}

/// Functional calculus `f(U) = W diag(f(e^{i angle})) W*` for an already
/// diagonalized unitary.
pub fn matrix_function(eig: &UnitaryEigen, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
    let diag: Vec<Complex64> = eig.angles().iter().map(|&a| f(cis(a))).collect();
    assemble(eig.vectors(), &diag)
}

/// `e^{itA}` for Hermitian `A`.
pub fn unitary_exp(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, LinalgError> {
    let eig = herm_eig(a)?;
    Ok(unitary_exp_eigen(&eig, t))
}

/// `e^{itA}` from a precomputed eigendecomposition of `A`.
pub fn unitary_exp_eigen(eig: &HermitianEigen, t: f64) -> ComplexMatrix {
    let diag: Vec<Complex64> = eig.eigenvalues().iter().map(|&l| cis(t * l)).collect();
    assemble(eig.vectors(), &diag)
}

/// Certified lower estimate of the operator norm by power iteration on
/// `M*M`: 200 iterations or relative change below `1e-12`. Every returned
/// value is `||M v||` for some unit vector `v`.
pub fn op_norm_lower(m: &ComplexMatrix) -> f64 {
    let d = m.dim();
    let adj = m.adjoint();
    power_norm(
        d,
        d,
        |v, out| {
            let r = m.matvec(v);
            out.copy_from_slice(&r);
        },
        |v, out| {
            let r = adj.matvec(v);
            out.copy_from_slice(&r);
        },
    )
}

/// Power iteration for a general (possibly rectangular) operator given by
/// `apply: C^cols -> C^rows` and its adjoint.
pub fn power_norm(
    rows: usize,
    cols: usize,
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    apply_adjoint: impl Fn(&[Complex64], &mut [Complex64]),
) -> f64 {
    const MAX_ITERS: usize = 200;
    const REL_TOL: f64 = 1e-12;

    // Deterministic generic-position start vector.
    let mut v: Vec<Complex64> = (0..cols)
        .map(|j| {
            let x = j as f64;
            Complex64::new(1.0 + 0.3 * (1.3 * x).sin(), 0.3 * (0.7 * x + 0.2).cos())
        })
        .collect();
    let nv = vec_norm(&v);
    if nv == 0.0 {
        return 0.0;
    }
    for z in &mut v {
        *z /= nv;
    }

    let mut w = vec![Complex64::new(0.0, 0.0); rows];
    let mut u = vec![Complex64::new(0.0, 0.0); cols];
    let mut best = 0.0f64;
    let mut prev = 0.0f64;
    for _ in 0..MAX_ITERS {
        apply(&v, &mut w);
        let sigma = vec_norm(&w);
        best = best.max(sigma);
        if sigma == 0.0 {
            break;
        }
        apply_adjoint(&w, &mut u);
        let nu = vec_norm(&u);
        if nu == 0.0 {
            break;
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / nu;
        }
        if (sigma - prev).abs() <= REL_TOL * sigma {
            break;
        }
        prev = sigma;
    }
    best
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Trace norm (sum of singular values) via the eigenvalues of `M*M`.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    let gram = m.adjoint().mul(m);
    let eig = herm_eig(&gram)?;
    Ok(eig
        .eigenvalues()
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum())
}
