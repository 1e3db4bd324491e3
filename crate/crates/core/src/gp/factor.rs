//! Factorizations of the noisy Gram matrix `K + σ_n² I`.

use std::io::{self, Write};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::hodlr::HodlrMatrix;
use super::kernel::Entries;
use super::GpError;

/// First nonzero diagonal jitter, relative to the largest diagonal entry.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

pub const DEFAULT_LEAF_SIZE: usize = 32;
pub const DEFAULT_HODLR_TOL: f64 = 1e-8;

/// Linear-algebra backend used to factor the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Backend {
    /// Direct symmetric (Cholesky) factorization.
    Dense,
    /// Hierarchical off-diagonal low-rank factorization.
    Hodlr { tol: f64, leaf_size: usize },
}

impl Backend {
    pub fn hodlr() -> Self {
        Backend::Hodlr {
            tol: DEFAULT_HODLR_TOL,
            leaf_size: DEFAULT_LEAF_SIZE,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Dense => "dense",
            Backend::Hodlr { .. } => "hodlr",
        }
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Dense(Cholesky<f64, Dyn>),
    Hodlr(HodlrMatrix),
}

/// A factored `K + (σ_n² + jitter) I` supporting solves and log-determinants.
#[derive(Debug, Clone)]
pub struct Factorization {
    inner: Inner,
    size: usize,
    logdet: f64,
    jitter: f64,
    backend: Backend,
}

impl Factorization {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Absolute diagonal jitter that was added on top of the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        self.solve_matrix_mut(&mut x);
        DVector::from_column_slice(x.as_slice())
    }

    pub fn solve_matrix_mut(&self, b: &mut DMatrix<f64>) {
        assert_eq!(b.nrows(), self.size, "right-hand side has wrong row count");
        match &self.inner {
            Inner::Dense(chol) => chol.solve_mut(b),
            Inner::Hodlr(h) => h.solve_mut(b),
        }
    }

    /// Explicit inverse. Only the dense backend builds it directly; the
    /// hierarchical one solves against the identity.
    pub fn inverse(&self) -> DMatrix<f64> {
        match &self.inner {
            Inner::Dense(chol) => chol.inverse(),
            Inner::Hodlr(h) => {
                let mut eye = DMatrix::identity(self.size, self.size);
                h.solve_mut(&mut eye);
                eye
            }
        }
    }

    /// Plain-text dump for debugging: the Cholesky factor for the dense
    /// backend, the block tree with off-diagonal ranks for the hierarchical one.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# backend={} size={} jitter={:e} logdet={}",
            self.backend.name(),
            self.size,
            self.jitter,
            self.logdet
        )?;
        match &self.inner {
            Inner::Dense(chol) => write_matrix(&chol.l(), w),
            Inner::Hodlr(h) => h.dump(&mut w, 0),
        }
    }
}

/// Writes a matrix as whitespace-separated rows.
pub fn write_matrix<W: Write>(m: &DMatrix<f64>, mut w: W) -> io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.12e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Factors `K + σ_n² I`, escalating diagonal jitter on failure.
pub fn factor(k: &DMatrix<f64>, sigma_n: f64, backend: Backend) -> Result<Factorization, GpError> {
    if !k.is_square() || k.nrows() == 0 {
        return Err(GpError::InvalidArgument(format!(
            "expected a non-empty square matrix, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    if !(sigma_n >= 0.0 && sigma_n.is_finite()) {
        return Err(GpError::InvalidArgument(format!("invalid sigma_n {sigma_n}")));
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(GpError::InvalidArgument("matrix has non-finite entries".into()));
    }
    factor_entries(k, sigma_n * sigma_n, backend)
}

pub(crate) fn factor_entries<E: Entries>(
    src: &E,
    noise_var: f64,
    backend: Backend,
) -> Result<Factorization, GpError> {
    if let Backend::Hodlr { tol, leaf_size } = backend {
        if !(tol > 0.0 && tol < 1.0) || leaf_size == 0 {
            return Err(GpError::InvalidArgument(format!(
                "invalid hierarchical backend settings tol={tol} leaf_size={leaf_size}"
            )));
        }
    }
    let m = src.dim();
    let scale = (0..m)
        .map(|i| src.entry(i, i) + noise_var)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut jitter_rel = 0.0;
    loop {
        let jitter = jitter_rel * scale;
        let diag = noise_var + jitter;
        let attempt = match backend {
            Backend::Dense => dense(src, diag),
            Backend::Hodlr { tol, leaf_size } => {
                HodlrMatrix::build(src, diag, tol, leaf_size).map(|h| {
                    let logdet = h.logdet();
                    (Inner::Hodlr(h), logdet)
                })
            }
        };
        if let Some((inner, logdet)) = attempt.filter(|(_, ld)| ld.is_finite()) {
            return Ok(Factorization {
                inner,
                size: m,
                logdet,
                jitter,
                backend,
            });
        }
        if jitter_rel == 0.0 {
            jitter_rel = JITTER_START;
        } else if jitter_rel * 10.0 <= JITTER_MAX * (1.0 + 1e-9) {
            jitter_rel *= 10.0;
        } else {
            return Err(GpError::NumericalFailure { jitter });
        }
    }
}

fn dense<E: Entries>(src: &E, diag: f64) -> Option<(Inner, f64)> {
    let m = src.dim();
    let a = DMatrix::from_fn(m, m, |i, j| {
        let v = src.entry(i, j);
        if i == j {
            v + diag
        } else {
            v
        }
    });
    let chol = Cholesky::new(a)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Some((Inner::Dense(chol), logdet))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::kernel::{gram, KernelParams};
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_trivial() {
        let k = DMatrix::identity(4, 4);
        for backend in [Backend::Dense, Backend::hodlr()] {
            let f = factor(&k, 0.0, backend).unwrap();
            let b = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
            assert_relative_eq!(f.solve(&b), b, epsilon = 1e-14);
            assert_relative_eq!(f.logdet(), 0.0, epsilon = 1e-14);
            assert_eq!(f.jitter(), 0.0);
        }
    }

    #[test]
    fn singular_matrix_gets_jitter() {
        // rank one
        let k = DMatrix::from_element(3, 3, 1.0);
        let f = factor(&k, 0.0, Backend::Dense).unwrap();
        assert!(f.jitter() > 0.0 && f.jitter() <= JITTER_MAX);
    }

    #[test]
    fn indefinite_matrix_reports_last_jitter() {
        let mut k = DMatrix::identity(3, 3);
        k[(2, 2)] = -1.0;
        match factor(&k, 0.0, Backend::Dense) {
            Err(GpError::NumericalFailure { jitter }) => {
                assert_relative_eq!(jitter, JITTER_MAX, max_relative = 1e-9)
            }
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(factor(&DMatrix::zeros(2, 3), 0.0, Backend::Dense).is_err());
        assert!(factor(&DMatrix::identity(2, 2), -1.0, Backend::Dense).is_err());
        let bad = Backend::Hodlr {
            tol: 0.0,
            leaf_size: 4,
        };
        assert!(factor(&DMatrix::identity(2, 2), 0.0, bad).is_err());
    }

    #[test]
    fn dump_writes_header_and_rows() {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let p = KernelParams::new(1.0, 0.5, 0.01).unwrap();
        let f = factor(&gram(&x, &p), p.sigma_n, Backend::Dense).unwrap();
        let mut out = Vec::new();
        f.dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# backend=dense size=6"));
        assert_eq!(text.lines().count(), 7);

        let f = factor(
            &gram(&x, &p),
            p.sigma_n,
            Backend::Hodlr {
                tol: 1e-8,
                leaf_size: 2,
            },
        )
        .unwrap();
        let mut out = Vec::new();
        f.dump(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().contains("rank="));
    }
}
