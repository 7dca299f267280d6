//! Double operator integrals over the spectral data of unitary pairs.
//!
//! In finite dimension the transformer `T -> \iint Phi dE_1 T dE_2` is
//! conjugated entrywise multiplication: with eigenvector matrices `W_1, W_2`
//! and the kernel sampled on the two spectra,
//! `W_1 (K .* (W_1^* T W_2)) W_2^*`. The kernel of interest is the divided
//! difference of a circle function, whose matrix on two spectra is the
//! Loewner matrix.
//!
//! Exact Schur-multiplier norms are completely-bounded-norm computations; the
//! module instead ships a certified sandwich: lower bounds from explicit test
//! operators (every reported value is `||K .* T||/||T||` for a concrete `T`,
//! or an exact elementary-matrix value `|K_ij|`) and upper bounds from
//! Haagerup factorizations `Phi = sum phi_k psi_k`.

use std::f64::consts::{PI, TAU};

use crate::circlefn::{CircleFnError, CircleFunction, CircleFunctionKind};
use crate::linalg::{
    cis, herm_eig, matrix_function, power_norm, unitary_eig, unitary_exp_eigen, Complex64,
    ComplexMatrix, UnitaryEigen,
};
use crate::random::{complex_gaussian, random_hermitian, random_unitary, seeded_rng};

/// Spectral gaps below this switch the divided-difference quotient to the
/// derivative. Only non-coefficient kinds take the quotient path; it balances
/// cancellation in `f(z) - f(w)` against the derivative substitution error.
pub const DIAGONAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DoiError {
    #[error("kernel is {k_rows}x{k_cols} but spectra have sizes {left} and {right}")]
    DimensionMismatch {
        k_rows: usize,
        k_cols: usize,
        left: usize,
        right: usize,
    },
    #[error("monomial degree must be nonzero")]
    ZeroDegree,
    #[error("no Haagerup factorization is constructed for this function kind")]
    UnsupportedKind,
    #[error(transparent)]
    Function(#[from] CircleFnError),
}

/// Rectangular complex matrix holding a kernel sampled on two spectral grids.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: usize,
    cols: usize,
    values: Vec<Complex64>,
}

impl KernelMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows >= 1 && cols >= 1);
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    pub fn constant(rows: usize, cols: usize, value: Complex64) -> Self {
        Self::from_fn(rows, cols, |_, _| value)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.cols + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hadamard(&self, other: &KernelMatrix) -> KernelMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        KernelMatrix {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }

    fn matvec(&self, v: &[Complex64], out: &mut [Complex64]) {
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.values[i * self.cols + j] * v[j];
            }
            out[i] = acc;
        }
    }

    fn adjoint_matvec(&self, v: &[Complex64], out: &mut [Complex64]) {
        for j in 0..self.cols {
            out[j] = Complex64::new(0.0, 0.0);
        }
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self.values[i * self.cols + j].conj() * vi;
            }
        }
    }

    /// Certified lower estimate of the operator norm (power iteration).
    pub fn op_norm_lower(&self) -> f64 {
        power_norm(
            self.rows,
            self.cols,
            |v, out| self.matvec(v, out),
            |v, out| self.adjoint_matvec(v, out),
        )
    }
}

/// Divided difference of a circle function:
/// `(f(z) - f(w)) / (z - w)` off the diagonal, `f'(z)` on it.
///
/// Coefficient-backed kinds are evaluated in the algebraically summed form
/// `D z^n = sum_j z^j w^{n-1-j}` (and its negative-power analog), which has
/// no cancellation near the diagonal and reduces to `f'` exactly on it. Other
/// kinds use the quotient with the `DIAGONAL_TOL` switch.
pub fn divided_difference(
    f: &CircleFunction,
    z: Complex64,
    w: Complex64,
) -> Result<Complex64, DoiError> {
    if let Some(coeffs) = f.coeffs() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&n, &c) in coeffs {
            acc += c * monomial_divided_difference(n, z, w);
        }
        return Ok(acc);
    }
    if (z - w).norm() <= DIAGONAL_TOL {
        Ok(f.deriv(z)?)
    } else {
        Ok((f.eval(z) - f.eval(w)) / (z - w))
    }
}

/// `D z^n (z, w)` in summed form. For `n > 0` this is
/// `sum_{j=0}^{n-1} z^j w^{n-1-j}`; for `n < 0` with `m = -n` it is
/// `-sum_{j=0}^{m-1} z^{j-m} w^{-1-j}`.
fn monomial_divided_difference(n: i64, z: Complex64, w: Complex64) -> Complex64 {
    let tz = z.arg();
    let tw = w.arg();
    let mut acc = Complex64::new(0.0, 0.0);
    if n > 0 {
        for j in 0..n {
            acc += cis(j as f64 * tz + (n - 1 - j) as f64 * tw);
        }
        acc
    } else if n < 0 {
        let m = -n;
        for j in 0..m {
            acc += cis((j - m) as f64 * tz + (-1 - j) as f64 * tw);
        }
        -acc
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// The Loewner matrix: the divided difference sampled on two spectra,
/// `values[i][j] = Df(e^{i a_i}, e^{i b_j})`.
pub fn loewner_kernel(
    f: &CircleFunction,
    e1: &UnitaryEigen,
    e2: &UnitaryEigen,
) -> Result<KernelMatrix, DoiError> {
    let a = e1.angles();
    let b = e2.angles();
    let mut values = Vec::with_capacity(a.len() * b.len());
    for &ai in a {
        for &bj in b {
            values.push(divided_difference(f, cis(ai), cis(bj))?);
        }
    }
    Ok(KernelMatrix {
        rows: a.len(),
        cols: b.len(),
        values,
    })
}

/// Evaluate the double operator integral `\iint K dE_1 T dE_2` as
/// `W_1 (K .* (W_1^* T W_2)) W_2^*`.
pub fn doi_apply(
    kernel: &KernelMatrix,
    e1: &UnitaryEigen,
    e2: &UnitaryEigen,
    t: &ComplexMatrix,
) -> Result<ComplexMatrix, DoiError> {
    if kernel.rows() != e1.dim() || kernel.cols() != e2.dim() || t.dim() != e1.dim()
        || e1.dim() != e2.dim()
    {
        return Err(DoiError::DimensionMismatch {
            k_rows: kernel.rows(),
            k_cols: kernel.cols(),
            left: e1.dim(),
            right: e2.dim(),
        });
    }
    let w1 = e1.vectors();
    let w2 = e2.vectors();
    let mut inner = w1.adjoint().mul(t).mul(w2);
    let d = t.dim();
    for i in 0..d {
        for j in 0..d {
            let v = inner.at(i, j) * kernel.at(i, j);
            inner.set(i, j, v);
        }
    }
    Ok(w1.mul(&inner).mul(&w2.adjoint()))
}

/// Trace of the double operator integral over a single spectral measure:
/// `sum_i K[i][i] (W^* T W)[i][i]`. The diagonal of `W^* T W` realizes the
/// complex measure `mu(.) = trace(T E(.))` on the atoms of the spectrum.
pub fn doi_trace(
    kernel: &KernelMatrix,
    e: &UnitaryEigen,
    t: &ComplexMatrix,
) -> Result<Complex64, DoiError> {
    if kernel.rows() != e.dim() || kernel.cols() != e.dim() || t.dim() != e.dim() {
        return Err(DoiError::DimensionMismatch {
            k_rows: kernel.rows(),
            k_cols: kernel.cols(),
            left: e.dim(),
            right: t.dim(),
        });
    }
    let w = e.vectors();
    let d = e.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        // (W^* T W)_{ii} = w_i^* T w_i
        let wi: Vec<Complex64> = (0..d).map(|r| w.at(r, i)).collect();
        let tw = t.matvec(&wi);
        let mu: Complex64 = wi.iter().zip(&tw).map(|(a, b)| a.conj() * b).sum();
        acc += kernel.at(i, i) * mu;
    }
    Ok(acc)
}

/// Haagerup factorization `Phi(z, w) = sum_k phi_k(z) psi_k(w)` with the
/// square-sum bounds that certify the multiplier norm.
#[derive(Debug, Clone)]
pub struct HaagerupRep {
    terms: Vec<(CircleFunction, CircleFunction)>,
    row_bound: f64,
    col_bound: f64,
}

impl HaagerupRep {
    pub fn terms(&self) -> &[(CircleFunction, CircleFunction)] {
        &self.terms
    }

    /// `sup_z sum_k |phi_k(z)|^2`.
    pub fn row_bound(&self) -> f64 {
        self.row_bound
    }

    /// `sup_w sum_k |psi_k(w)|^2`.
    pub fn col_bound(&self) -> f64 {
        self.col_bound
    }

    /// Certified multiplier upper bound `sqrt(row_bound * col_bound)`.
    pub fn upper_bound(&self) -> f64 {
        (self.row_bound * self.col_bound).sqrt()
    }

    /// Sample `sum_k phi_k(z_i) psi_k(w_j)` on a pair of grids.
    pub fn kernel_on(&self, zs: &[Complex64], ws: &[Complex64]) -> KernelMatrix {
        KernelMatrix::from_fn(zs.len(), ws.len(), |i, j| {
            self.terms
                .iter()
                .map(|(phi, psi)| phi.eval(zs[i]) * psi.eval(ws[j]))
                .sum()
        })
    }
}

/// Explicit factorization of `D z^n`: for `n > 0` the `n` terms
/// `z^j w^{n-1-j}`, each factor unimodular, so both square-sum bounds equal
/// `|n|` and the multiplier bound is exactly `|n|`. Negative degrees carry a
/// `-1` on the first factor.
pub fn haagerup_rep_monomial(n: i64) -> Result<HaagerupRep, DoiError> {
    if n == 0 {
        return Err(DoiError::ZeroDegree);
    }
    let one = Complex64::new(1.0, 0.0);
    let mut terms = Vec::with_capacity(n.unsigned_abs() as usize);
    if n > 0 {
        for j in 0..n {
            terms.push((
                CircleFunction::monomial(j, one),
                CircleFunction::monomial(n - 1 - j, one),
            ));
        }
    } else {
        let m = -n;
        for j in 0..m {
            terms.push((
                CircleFunction::monomial(j - m, -one),
                CircleFunction::monomial(-1 - j, one),
            ));
        }
    }
    let bound = n.unsigned_abs() as f64;
    Ok(HaagerupRep {
        terms,
        row_bound: bound,
        col_bound: bound,
    })
}

/// Term-by-term factorization of `Df` for a coefficient-backed function:
/// each monomial contributes its representation weighted by `|c_n|^{1/2}` on
/// both sides (phase on the left), giving the bound `sum |c_n| |n|`.
pub fn haagerup_rep(f: &CircleFunction) -> Result<HaagerupRep, DoiError> {
    let coeffs = match f.kind() {
        CircleFunctionKind::TrigPoly | CircleFunctionKind::AbsSeries => f.coeffs().unwrap(),
        _ => return Err(DoiError::UnsupportedKind),
    };
    let mut terms = Vec::new();
    let mut mass = 0.0;
    for (&n, &c) in coeffs {
        if n == 0 || c.norm() == 0.0 {
            continue;
        }
        let weight = c.norm().sqrt();
        let phase = c / c.norm();
        let monomial = haagerup_rep_monomial(n)?;
        for (phi, psi) in monomial.terms {
            let phi_coeffs = phi.coeffs().unwrap();
            let psi_coeffs = psi.coeffs().unwrap();
            let (&pn, &pc) = phi_coeffs.iter().next().unwrap();
            let (&qn, &qc) = psi_coeffs.iter().next().unwrap();
            terms.push((
                CircleFunction::monomial(pn, pc * phase * weight),
                CircleFunction::monomial(qn, qc * weight),
            ));
        }
        mass += c.norm() * n.abs() as f64;
    }
    Ok(HaagerupRep {
        terms,
        row_bound: mass,
        col_bound: mass,
    })
}

/// Lower bound for the Schur multiplier norm of a kernel, reliable up to
/// power-iteration accuracy (about `1e-10` relative).
///
/// Every candidate contributes `||K .* T||/||T||` for a concrete test
/// operator `T`, so the maximum is a genuine lower bound. Elementary matrices
/// `e_i e_j^*` are folded in exactly as `max |K_ij|`. Gaussian candidates and
/// elementary matrices alone cannot see the logarithmic growth of
/// non-multiplier kernels on refining grids (their ratios stall at grid-size-
/// independent values), so two deterministic families are added:
///
/// * structured test operators (one-sided frequency band projections and
///   conjugate-kernel Toeplitz matrices), the shapes that excite
///   triangular-truncation growth;
/// * duality certificates: for unit vectors `u, v` the multiplier norm
///   dominates `||diag(conj(u)) K diag(v)||_tr`, with equality at the
///   maximizing pair, and the extremal test operator is the polar factor of
///   that matrix. Alternating ascent over `(u, v)` from kink-localized
///   starting profiles tightens the certificate.
pub fn schur_norm_lower_bound(kernel: &KernelMatrix, trials: usize, seed: u64) -> f64 {
    assert!(trials >= 1, "at least one trial is required");
    let mut best = kernel.max_abs();
    let rows = kernel.rows();
    let cols = kernel.cols();

    let consider = |t: &KernelMatrix, best: &mut f64| {
        let denom = t.op_norm_lower();
        if denom <= 1e-300 {
            return;
        }
        let numer = kernel.hadamard(t).op_norm_lower();
        let ratio = numer / denom;
        if ratio > *best {
            *best = ratio;
        }
    };

    if rows == cols {
        for t in structured_candidates(rows) {
            consider(&t, &mut best);
        }
        best = best.max(duality_certificate(kernel));
    }
    for trial in 0..trials {
        let mut rng = seeded_rng(seed, 0x5c48 + trial as u64);
        let t = KernelMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng));
        consider(&t, &mut best);
    }
    best
}

/// Best duality certificate `||diag(conj(u)) K diag(v)||_tr` over a few
/// alternating-ascent runs. Starting profiles concentrate near the middle
/// and the ends of the grid ordering, which is where divided-difference
/// kernels of non-smooth functions on sorted spectra carry their mass.
fn duality_certificate(kernel: &KernelMatrix) -> f64 {
    let d = kernel.rows();
    if d < 2 {
        return 0.0;
    }
    let center: Vec<Complex64> = (0..d)
        .map(|j| Complex64::new(1.0 / ((j as f64 - d as f64 / 2.0).abs() + 1.0).sqrt(), 0.0))
        .collect();
    let wrap: Vec<Complex64> = (0..d)
        .map(|j| Complex64::new(1.0 / ((j + 1).min(d - j) as f64).sqrt(), 0.0))
        .collect();
    let mut best = 0.0f64;
    for start in [center, wrap] {
        best = best.max(duality_ascent(kernel, start));
    }
    best
}

fn duality_ascent(kernel: &KernelMatrix, start: Vec<Complex64>) -> f64 {
    const ROUNDS: usize = 10;
    let d = kernel.rows();
    let mut u = start.clone();
    let mut v = start;
    normalize_vec(&mut u);
    normalize_vec(&mut v);

    let mut best = 0.0f64;
    for _ in 0..ROUNDS {
        let m = ComplexMatrix::from_fn(d, |i, j| u[i].conj() * kernel.at(i, j) * v[j]);
        let Some((tn, polar)) = trace_norm_with_polar(&m) else {
            break;
        };
        best = best.max(tn);
        // F = Re <Z, M> is linear in u and in v for fixed polar factor Z;
        // each maximization step keeps the certified value nondecreasing.
        let mut new_u: Vec<Complex64> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| polar.at(i, j).conj() * kernel.at(i, j) * v[j])
                    .sum()
            })
            .collect();
        if !normalize_vec(&mut new_u) {
            break;
        }
        u = new_u;
        let mut new_v: Vec<Complex64> = (0..d)
            .map(|j| {
                let e: Complex64 = (0..d)
                    .map(|i| polar.at(i, j).conj() * u[i].conj() * kernel.at(i, j))
                    .sum();
                e.conj()
            })
            .collect();
        if !normalize_vec(&mut new_v) {
            break;
        }
        v = new_v;
    }
    best
}

fn normalize_vec(v: &mut [Complex64]) -> bool {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-300 {
        return false;
    }
    for z in v.iter_mut() {
        *z /= norm;
    }
    true
}

/// Trace norm and polar factor `Z = M (M^*M)^{-1/2}` from the eigenvalues of
/// the Gram matrix. Gram eigenvalues carry additive rounding noise of order
/// `eps * ||M||^2`, whose square root would pollute the sum at the `1e-8`
/// scale; singular values below that floor are dropped from both the sum and
/// the polar inverse, which only weakens the certificate.
fn trace_norm_with_polar(m: &ComplexMatrix) -> Option<(f64, ComplexMatrix)> {
    let gram = m.adjoint().mul(m);
    let eig = herm_eig(&gram).ok()?;
    let scale = eig
        .eigenvalues()
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
        .sqrt();
    // Gram rounding perturbs eigenvalues by O(d eps ||M||^2); anything whose
    // square root sits below that scale is noise, not signal.
    let floor = 4e-7 * (1.0 + scale) * (gram.dim() as f64).sqrt();
    let singulars: Vec<f64> = eig
        .eigenvalues()
        .iter()
        .map(|&l| {
            let s = l.max(0.0).sqrt();
            if s > floor {
                s
            } else {
                0.0
            }
        })
        .collect();
    let trace_norm: f64 = singulars.iter().sum();
    let inv_sqrt: Vec<Complex64> = singulars
        .iter()
        .map(|&s| {
            if s > 0.0 {
                Complex64::new(1.0 / s, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let polar = m.mul(&crate::linalg::assemble(eig.vectors(), &inv_sqrt));
    Some((trace_norm, polar))
}

fn structured_candidates(d: usize) -> Vec<KernelMatrix> {
    let mut out = Vec::new();
    if d < 2 {
        return out;
    }
    // One-sided frequency band projections sum_{k=0..band} v_k v_k^* with
    // (v_k)_j = e^{2 pi i k j / d} / sqrt(d).
    let mut band = 1usize;
    while band <= d / 2 {
        out.push(KernelMatrix::from_fn(d, d, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=band {
                acc += cis(TAU * k as f64 * (i as f64 - j as f64) / d as f64);
            }
            acc / d as f64
        }));
        band *= 2;
    }
    // Discrete conjugate-function kernels, full and triangularly truncated.
    for &scale in &[1.0f64, 4.0] {
        let cot = |i: usize, j: usize| -> Complex64 {
            if i == j {
                return Complex64::new(0.0, 0.0);
            }
            let x = PI * (i as f64 - j as f64) / (scale * d as f64);
            Complex64::new(0.0, 1.0 / x.tan() / d as f64)
        };
        out.push(KernelMatrix::from_fn(d, d, cot));
        out.push(KernelMatrix::from_fn(d, d, |i, j| {
            if i > j {
                cot(i, j)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }));
    }
    out
}

/// Certified lower bound for the operator Lipschitz seminorm
/// `sup ||f(U) - f(V)|| / ||U - V||`.
///
/// The trial set contains `trials` seeded random pairs `V = e^{i eps A} U`
/// with `eps` cycling through `{1, 0.1, 0.01}` (the small-perturbation regime
/// is where the ratio peaks), plus a deterministic family of two-point pairs:
/// `U = diag(z, w)`, `V = R U R^T` for a real rotation `R`, padded by the
/// identity up to `dim`. On that orbit both differences have closed-form
/// norms and the ratio equals `|Df(z, w)|` exactly, so the family realizes
/// divided-difference values, including near-diagonal ones approaching
/// `|f'|`, as honest unitary-pair ratios.
pub fn ol_seminorm_lower_bound(f: &CircleFunction, dim: usize, trials: usize, seed: u64) -> f64 {
    assert!(dim >= 1 && trials >= 1);
    let mut best: f64 = 0.0;

    if dim >= 2 {
        for (z, w) in two_point_probe_pairs() {
            best = best.max(two_point_ratio(f, z, w));
        }
    }

    for trial in 0..trials {
        let mut rng = seeded_rng(seed, 0x01_1000 + trial as u64);
        let u = random_unitary(dim, &mut rng);
        let a = random_hermitian(dim, &mut rng);
        let ea = match herm_eig(&a) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let peak = ea
            .eigenvalues()
            .iter()
            .fold(0.0f64, |m, &l| m.max(l.abs()));
        if peak == 0.0 {
            continue;
        }
        let eps = [1.0, 0.1, 0.01][trial % 3] / peak;
        let v = unitary_exp_eigen(&ea, eps).mul(&u);
        let (eu, ev) = match (unitary_eig(&u), unitary_eig(&v)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let fu = matrix_function(&eu, |z| f.eval(z));
        let fv = matrix_function(&ev, |z| f.eval(z));
        let denom = crate::linalg::op_norm_lower(&u.sub(&v));
        if denom <= 1e-300 {
            continue;
        }
        let numer = crate::linalg::op_norm_lower(&fu.sub(&fv));
        best = best.max(numer / denom);
    }
    best
}

fn two_point_probe_pairs() -> Vec<(Complex64, Complex64)> {
    let mut pairs = Vec::new();
    let base = 16usize;
    for k in 0..base {
        let theta = -PI + (k as f64 + 0.5) * TAU / base as f64;
        for &delta in &[1e-3, 1e-2, 0.1, 0.5, PI / 2.0, PI - 1e-3] {
            pairs.push((cis(theta), cis(theta + delta)));
        }
    }
    pairs
}

/// Ratio `||f(U) - f(V)|| / ||U - V||` for the padded two-point pair
/// `U = diag(z, w) (+) I`, `V = R U R^T (+) I`. Both differences are
/// supported on the leading 2x2 block, so the padded ratio equals the block
/// ratio; `f` acts through the explicit functional calculus of the block.
fn two_point_ratio(f: &CircleFunction, z: Complex64, w: Complex64) -> f64 {
    let eps = 0.3f64;
    let s = eps.sin();
    let fu = [f.eval(z), f.eval(w)];
    let diff_norm = |a: Complex64, b: Complex64| -> f64 {
        // || diag(a,b) - R diag(a,b) R^T || = |s| * |a - b| for the real
        // rotation R = [[c, -s], [s, c]]; the residual matrix is
        // s (a - b) [[s, c], [c, -s]], and the bracket has norm one.
        s.abs() * (a - b).norm()
    };
    let denom = diff_norm(z, w);
    if denom <= 1e-300 {
        return 0.0;
    }
    diff_norm(fu[0], fu[1]) / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{op_norm_lower, trace_norm};
    use std::collections::BTreeMap;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn grid_eigen(n: usize) -> UnitaryEigen {
        let angles: Vec<f64> = (0..n)
            .map(|k| -PI + (k as f64 + 0.5) * TAU / n as f64)
            .collect();
        UnitaryEigen::from_angles(angles).unwrap()
    }

    #[test]
    fn divided_difference_linear() {
        let f = CircleFunction::monomial(1, one());
        for &(a, b) in &[(0.1, 2.0), (-1.0, -1.0), (3.0, 3.0000001)] {
            let got = divided_difference(&f, cis(a), cis(b)).unwrap();
            assert!((got - one()).norm() <= 1e-13, "at ({a}, {b}): {got}");
        }
    }

    #[test]
    fn divided_difference_square() {
        let f = CircleFunction::monomial(2, one());
        let (z, w) = (cis(0.4), cis(-1.7));
        let got = divided_difference(&f, z, w).unwrap();
        assert!((got - (z + w)).norm() <= 1e-13);
    }

    #[test]
    fn divided_difference_diagonal_is_derivative() {
        let f = CircleFunction::trig_poly(
            [(-3, Complex64::new(0.2, 0.1)), (5, Complex64::new(0.0, -1.0))]
                .into_iter()
                .collect(),
        );
        let z = cis(0.9);
        let got = divided_difference(&f, z, z).unwrap();
        let expected = f.deriv(z).unwrap();
        assert!((got - expected).norm() <= 1e-13);
    }

    #[test]
    fn divided_difference_quotient_path_for_sawtooth() {
        let f = CircleFunction::sawtooth();
        let (z, w) = (cis(0.5), cis(1.3));
        let got = divided_difference(&f, z, w).unwrap();
        let expected = (f.eval(z) - f.eval(w)) / (z - w);
        assert_eq!(got, expected);
        // Diagonal hits the derivative, which fails at the kink.
        assert!(divided_difference(&f, one(), one()).is_err());
    }

    #[test]
    fn loewner_kernel_linear_is_all_ones() {
        let f = CircleFunction::monomial(1, one());
        let e = grid_eigen(5);
        let k = loewner_kernel(&f, &e, &e).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((k.at(i, j) - one()).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn loewner_kernel_square_diagonal() {
        let f = CircleFunction::monomial(2, one());
        let e = grid_eigen(4);
        let k = loewner_kernel(&f, &e, &e).unwrap();
        for (i, &a) in e.angles().iter().enumerate() {
            let expected = cis(a) * 2.0;
            assert!((k.at(i, i) - expected).norm() <= 1e-13);
        }
    }

    #[test]
    fn loewner_kernel_scalar_grids() {
        let f = CircleFunction::monomial(3, one());
        let e1 = UnitaryEigen::from_angles(vec![0.3]).unwrap();
        let e2 = UnitaryEigen::from_angles(vec![-1.1]).unwrap();
        let k = loewner_kernel(&f, &e1, &e2).unwrap();
        assert_eq!((k.rows(), k.cols()), (1, 1));
        let expected = divided_difference(&f, cis(0.3), cis(-1.1)).unwrap();
        assert_eq!(k.at(0, 0), expected);
    }

    #[test]
    fn doi_apply_constant_kernel_is_identity_transformer() {
        let mut rng = seeded_rng(31, 0);
        let u = random_unitary(4, &mut rng);
        let v = random_unitary(4, &mut rng);
        let (eu, ev) = (unitary_eig(&u).unwrap(), unitary_eig(&v).unwrap());
        let t = random_hermitian(4, &mut rng);
        let k = KernelMatrix::constant(4, 4, one());
        let got = doi_apply(&k, &eu, &ev, &t).unwrap();
        assert!(got.sub(&t).max_abs() <= 1e-12);
    }

    #[test]
    fn doi_apply_reproduces_function_difference() {
        let mut rng = seeded_rng(32, 0);
        let u = random_unitary(8, &mut rng);
        let v = random_unitary(8, &mut rng);
        let (eu, ev) = (unitary_eig(&u).unwrap(), unitary_eig(&v).unwrap());
        let f = CircleFunction::trig_poly(
            [
                (-5, Complex64::new(0.3, -0.2)),
                (-1, Complex64::new(0.0, 0.5)),
                (2, Complex64::new(1.0, 0.0)),
                (5, Complex64::new(-0.1, 0.4)),
            ]
            .into_iter()
            .collect(),
        );
        let k = loewner_kernel(&f, &eu, &ev).unwrap();
        let got = doi_apply(&k, &eu, &ev, &u.sub(&v)).unwrap();
        // Functional-calculus oracle.
        let expected = matrix_function(&eu, |z| f.eval(z)).sub(&matrix_function(&ev, |z| f.eval(z)));
        assert!(got.sub(&expected).max_abs() <= 1e-10);
    }

    #[test]
    fn doi_apply_rank_one_kernel_factors() {
        let mut rng = seeded_rng(33, 0);
        let u = random_unitary(5, &mut rng);
        let v = random_unitary(5, &mut rng);
        let (eu, ev) = (unitary_eig(&u).unwrap(), unitary_eig(&v).unwrap());
        let t = random_hermitian(5, &mut rng);
        let phi = CircleFunction::monomial(2, Complex64::new(0.5, 0.5));
        let psi = CircleFunction::monomial(-1, Complex64::new(0.0, 1.0));
        let k = KernelMatrix::from_fn(5, 5, |i, j| {
            phi.eval(eu.eigenvalue(i)) * psi.eval(ev.eigenvalue(j))
        });
        let got = doi_apply(&k, &eu, &ev, &t).unwrap();
        let expected = matrix_function(&eu, |z| phi.eval(z))
            .mul(&t)
            .mul(&matrix_function(&ev, |z| psi.eval(z)));
        assert!(got.sub(&expected).max_abs() <= 1e-10);
    }

    #[test]
    fn doi_apply_dimension_mismatch() {
        let e = grid_eigen(3);
        let t = ComplexMatrix::identity(4);
        let k = KernelMatrix::constant(3, 3, one());
        assert!(matches!(
            doi_apply(&k, &e, &e, &t),
            Err(DoiError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn doi_trace_constant_kernel() {
        let mut rng = seeded_rng(34, 0);
        let u = random_unitary(6, &mut rng);
        let e = unitary_eig(&u).unwrap();
        let t = random_hermitian(6, &mut rng);
        let k = KernelMatrix::constant(6, 6, one());
        let got = doi_trace(&k, &e, &t).unwrap();
        assert!((got - t.trace()).norm() <= 1e-11);
    }

    #[test]
    fn doi_trace_rank_one_kernel() {
        let mut rng = seeded_rng(35, 0);
        let u = random_unitary(5, &mut rng);
        let e = unitary_eig(&u).unwrap();
        let t = random_hermitian(5, &mut rng);
        let phi = CircleFunction::monomial(3, one());
        let psi = CircleFunction::monomial(-2, Complex64::new(0.5, -0.5));
        let k = KernelMatrix::from_fn(5, 5, |i, j| {
            phi.eval(e.eigenvalue(i)) * psi.eval(e.eigenvalue(j))
        });
        let got = doi_trace(&k, &e, &t).unwrap();
        let expected = matrix_function(&e, |z| phi.eval(z))
            .mul(&t)
            .mul(&matrix_function(&e, |z| psi.eval(z)))
            .trace();
        assert!((got - expected).norm() <= 1e-10);
    }

    #[test]
    fn doi_trace_matches_trace_of_apply() {
        for &dim in &[2usize, 7, 16] {
            let mut rng = seeded_rng(36 + dim as u64, 0);
            let u = random_unitary(dim, &mut rng);
            let e = unitary_eig(&u).unwrap();
            let t = gaussian(dim, 36);
            let f = CircleFunction::trig_poly(
                [(1, one()), (-2, Complex64::new(0.0, 0.7))].into_iter().collect(),
            );
            let k = loewner_kernel(&f, &e, &e).unwrap();
            let via_trace = doi_trace(&k, &e, &t).unwrap();
            let via_apply = doi_apply(&k, &e, &e, &t).unwrap().trace();
            assert!(
                (via_trace - via_apply).norm() <= 1e-10,
                "dim {dim}: {via_trace} vs {via_apply}"
            );
        }
    }

    fn gaussian(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seeded_rng(seed, 99);
        ComplexMatrix::from_fn(dim, |_, _| complex_gaussian(&mut rng))
    }

    #[test]
    fn haagerup_monomial_degree_one() {
        let rep = haagerup_rep_monomial(1).unwrap();
        assert_eq!(rep.terms().len(), 1);
        assert!((rep.upper_bound() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn haagerup_monomial_degree_two() {
        let rep = haagerup_rep_monomial(2).unwrap();
        assert_eq!(rep.terms().len(), 2);
        assert!((rep.upper_bound() - 2.0).abs() <= 1e-15);
        let (z, w) = (cis(0.3), cis(-0.9));
        let k = rep.kernel_on(&[z], &[w]);
        assert!((k.at(0, 0) - (z + w)).norm() <= 1e-14);
    }

    #[test]
    fn haagerup_monomial_reproduces_divided_difference() {
        for &n in &[5i64, -4] {
            let rep = haagerup_rep_monomial(n).unwrap();
            let f = CircleFunction::monomial(n, one());
            let grid: Vec<Complex64> = (0..16)
                .map(|k| cis(-PI + (k as f64 + 0.5) * TAU / 16.0))
                .collect();
            let k_rep = rep.kernel_on(&grid, &grid);
            for i in 0..16 {
                for j in 0..16 {
                    let dd = divided_difference(&f, grid[i], grid[j]).unwrap();
                    assert!(
                        (k_rep.at(i, j) - dd).norm() <= 1e-12,
                        "n={n} at ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn haagerup_monomial_rejects_zero() {
        assert!(matches!(haagerup_rep_monomial(0), Err(DoiError::ZeroDegree)));
    }

    #[test]
    fn haagerup_rep_single_monomial_bounds() {
        let f = CircleFunction::monomial(1, one());
        let rep = haagerup_rep(&f).unwrap();
        assert!((rep.upper_bound() - 1.0).abs() <= 1e-15);

        let g = CircleFunction::monomial(2, Complex64::new(3.0, 0.0));
        let rep = haagerup_rep(&g).unwrap();
        assert!((rep.upper_bound() - 6.0).abs() <= 1e-12);
    }

    #[test]
    fn haagerup_rep_symmetric_pair() {
        let f = CircleFunction::trig_poly([(1, one()), (-1, one())].into_iter().collect());
        let rep = haagerup_rep(&f).unwrap();
        assert!((rep.upper_bound() - 2.0).abs() <= 1e-12);
        assert!((rep.row_bound() - rep.col_bound()).abs() <= 1e-15);
    }

    #[test]
    fn haagerup_rep_rejects_sawtooth() {
        assert!(matches!(
            haagerup_rep(&CircleFunction::sawtooth()),
            Err(DoiError::UnsupportedKind)
        ));
    }

    #[test]
    fn haagerup_rep_reproduces_kernel_on_grid() {
        let f = CircleFunction::trig_poly(
            [
                (-3, Complex64::new(0.2, 0.4)),
                (1, one()),
                (4, Complex64::new(-0.3, 0.0)),
            ]
            .into_iter()
            .collect(),
        );
        let rep = haagerup_rep(&f).unwrap();
        let grid: Vec<Complex64> = (0..32)
            .map(|k| cis(-PI + (k as f64 + 0.5) * TAU / 32.0))
            .collect();
        let sampled = rep.kernel_on(&grid, &grid);
        for i in 0..32 {
            for j in 0..32 {
                let dd = divided_difference(&f, grid[i], grid[j]).unwrap();
                assert!((sampled.at(i, j) - dd).norm() <= 1e-10);
            }
        }
        assert!((rep.upper_bound() - (rep.row_bound() * rep.col_bound()).sqrt()).abs() <= 1e-15);
    }

    #[test]
    fn schur_bound_constant_kernel() {
        let k = KernelMatrix::constant(6, 6, one());
        let got = schur_norm_lower_bound(&k, 10, 0);
        assert!((got - 1.0).abs() <= 1e-12, "got {got}");
    }

    #[test]
    fn schur_bound_diagonal_pattern() {
        // Brute-force oracle over parameterized 2x2 test operators: the
        // multiplier T -> diag(T) has norm 1 (achieved on diagonal T, never
        // exceeded since a diagonal compression is a contraction).
        let k = KernelMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                one()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut brute: f64 = 0.0;
        for trial in 0..200 {
            let mut rng = seeded_rng(1000 + trial, 0);
            let t = KernelMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng));
            let masked = k.hadamard(&t);
            let ratio = masked.op_norm_lower() / t.op_norm_lower();
            brute = brute.max(ratio);
        }
        assert!(brute <= 1.0 + 1e-10, "oracle says multiplier norm is 1, got {brute}");
        let got = schur_norm_lower_bound(&k, 50, 0);
        assert!((got - 1.0).abs() <= 1e-12, "got {got}");
    }

    #[test]
    fn schur_bound_sawtooth_grows_with_grid() {
        let f = CircleFunction::sawtooth();
        let k16 = loewner_kernel(&f, &grid_eigen(16), &grid_eigen(16)).unwrap();
        let k256 = loewner_kernel(&f, &grid_eigen(256), &grid_eigen(256)).unwrap();
        let b16 = schur_norm_lower_bound(&k16, 20, 0);
        let b256 = schur_norm_lower_bound(&k256, 20, 0);
        assert!(
            b256 > b16,
            "expected growth: bound(16) = {b16}, bound(256) = {b256}"
        );
    }

    #[test]
    fn trace_class_bound_from_haagerup() {
        // ||DOI(K)T||_tr <= upper * ||T||_tr for kernels with a Haagerup
        // factorization, checked through singular-value sums.
        for &dim in &[3usize, 6, 8] {
            let mut rng = seeded_rng(70 + dim as u64, 0);
            let u = random_unitary(dim, &mut rng);
            let v = random_unitary(dim, &mut rng);
            let (eu, ev) = (unitary_eig(&u).unwrap(), unitary_eig(&v).unwrap());
            let f = CircleFunction::trig_poly(
                [(-2, Complex64::new(0.4, 0.1)), (3, one())].into_iter().collect(),
            );
            let rep = haagerup_rep(&f).unwrap();
            let zs: Vec<Complex64> = (0..dim).map(|k| eu.eigenvalue(k)).collect();
            let ws: Vec<Complex64> = (0..dim).map(|k| ev.eigenvalue(k)).collect();
            let kernel = rep.kernel_on(&zs, &ws);
            let t = gaussian(dim, 70 + dim as u64);
            let image = doi_apply(&kernel, &eu, &ev, &t).unwrap();
            let lhs = trace_norm(&image).unwrap();
            let rhs = rep.upper_bound() * trace_norm(&t).unwrap();
            assert!(lhs <= rhs + 1e-9, "dim {dim}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn schur_lower_never_exceeds_haagerup_upper() {
        let f = CircleFunction::trig_poly(
            [(-1, Complex64::new(0.3, 0.0)), (2, one()), (4, Complex64::new(0.0, 0.2))]
                .into_iter()
                .collect(),
        );
        let rep = haagerup_rep(&f).unwrap();
        let e = grid_eigen(24);
        let zs: Vec<Complex64> = (0..24).map(|k| e.eigenvalue(k)).collect();
        let kernel = rep.kernel_on(&zs, &zs);
        let lower = schur_norm_lower_bound(&kernel, 40, 3);
        assert!(
            lower <= rep.upper_bound() + 1e-9,
            "lower {lower} vs upper {}",
            rep.upper_bound()
        );
    }

    #[test]
    fn ol_bound_identity_function() {
        let f = CircleFunction::monomial(1, one());
        let got = ol_seminorm_lower_bound(&f, 4, 9, 0);
        assert!((got - 1.0).abs() <= 1e-9, "got {got}");
    }

    #[test]
    fn ol_bound_constant_function() {
        let f = CircleFunction::monomial(0, Complex64::new(2.0, -1.0));
        let got = ol_seminorm_lower_bound(&f, 4, 9, 0);
        assert!(got.abs() <= 1e-12, "got {got}");
    }

    #[test]
    fn ol_bound_monomial_sandwich() {
        // Upper bound n from the Haagerup factorization; the estimate must
        // stay below it and, with the near-diagonal probes included, land
        // close to it.
        let n = 5i64;
        let f = CircleFunction::monomial(n, one());
        let got = ol_seminorm_lower_bound(&f, 16, 200, 0);
        assert!(got <= n as f64 + 1e-9, "got {got}");
        assert!(got >= 0.9 * n as f64, "got {got}");
    }

    #[test]
    fn ol_bound_dominates_sampled_divided_differences() {
        let f = CircleFunction::trig_poly(
            [(2, one()), (-3, Complex64::new(0.0, 0.5))].into_iter().collect(),
        );
        let mut sampled_sup: f64 = 0.0;
        for (z, w) in two_point_probe_pairs() {
            let dd = divided_difference(&f, z, w).unwrap().norm();
            sampled_sup = sampled_sup.max(dd);
        }
        let got = ol_seminorm_lower_bound(&f, 4, 3, 0);
        assert!(
            got >= sampled_sup - 1e-9,
            "bound {got} vs sampled sup {sampled_sup}"
        );
    }

    #[test]
    fn ol_probe_ratio_equals_divided_difference() {
        let f = CircleFunction::trig_poly(
            [(3, one()), (-1, Complex64::new(0.2, 0.2))].into_iter().collect(),
        );
        let (z, w) = (cis(0.4), cis(0.4 + 1e-3));
        let ratio = two_point_ratio(&f, z, w);
        let dd = divided_difference(&f, z, w).unwrap().norm();
        assert!((ratio - dd).abs() <= 1e-12 * (1.0 + dd));
    }

    #[test]
    fn kernel_op_norm_against_dense_oracle() {
        let mut rng = seeded_rng(55, 0);
        let m = ComplexMatrix::from_fn(6, |_, _| complex_gaussian(&mut rng));
        let k = KernelMatrix::from_fn(6, 6, |i, j| m.at(i, j));
        let a = k.op_norm_lower();
        let b = op_norm_lower(&m);
        assert!((a - b).abs() <= 1e-9 * (1.0 + b));
    }

    #[test]
    fn haagerup_rep_ignores_constant_term() {
        let f = CircleFunction::trig_poly(
            [(0, Complex64::new(9.0, 0.0)), (1, one())].into_iter().collect(),
        );
        let rep = haagerup_rep(&f).unwrap();
        assert!((rep.upper_bound() - 1.0).abs() <= 1e-12);
        let coeffs: BTreeMap<i64, Complex64> = [(0, Complex64::new(9.0, 0.0))].into_iter().collect();
        let constant = CircleFunction::trig_poly(coeffs);
        let rep0 = haagerup_rep(&constant).unwrap();
        assert_eq!(rep0.terms().len(), 0);
        assert_eq!(rep0.upper_bound(), 0.0);
    }
}
