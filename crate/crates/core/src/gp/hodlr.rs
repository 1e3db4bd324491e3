//! Hierarchical off-diagonal low-rank (HODLR) factorization.
//!
//! The index range is split recursively in halves. At every split the
//! symmetric matrix is written as
//!
//! ```text
//! A = [A11  U Vᵀ]  = D + W C Wᵀ,   D = diag(A11, A22),  W = diag(U, V),
//!     [V Uᵀ  A22]                  C = [[0, I], [I, 0]]
//! ```
//!
//! where `U Vᵀ` is an adaptive cross approximation of the off-diagonal block.
//! Solves use the Woodbury identity
//! `A⁻¹ = D⁻¹ − D⁻¹W (I + C Wᵀ D⁻¹ W)⁻¹ C Wᵀ D⁻¹` and the determinant lemma
//! `det A = det D · det(I + C Wᵀ D⁻¹ W)`, recursing into `D`. Leaves are
//! dense Cholesky blocks carrying the diagonal noise.

use std::io::{self, Write};

use nalgebra::{Cholesky, DMatrix, Dyn, LU};

use super::kernel::Entries;

#[derive(Debug, Clone)]
pub(crate) struct HodlrMatrix {
    root: Node,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        chol: Cholesky<f64, Dyn>,
        logdet: f64,
    },
    Split(Box<Split>),
}

#[derive(Debug, Clone)]
struct Split {
    n1: usize,
    left: Node,
    right: Node,
    /// Off-diagonal block `A12 ≈ u vᵀ`.
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    /// `A11⁻¹ u` and `A22⁻¹ v`.
    yu: DMatrix<f64>,
    yv: DMatrix<f64>,
    /// `I + C Wᵀ D⁻¹ W`.
    core: LU<f64, Dyn, Dyn>,
    logdet: f64,
}

impl HodlrMatrix {
    /// Returns `None` when a leaf is not positive definite or the Woodbury
    /// core is singular, so the caller can retry with more jitter.
    pub(crate) fn build<E: Entries>(src: &E, diag: f64, tol: f64, leaf_size: usize) -> Option<Self> {
        let root = Node::build(src, 0, src.dim(), diag, tol, leaf_size.max(1))?;
        Some(Self { root })
    }

    pub(crate) fn logdet(&self) -> f64 {
        self.root.logdet()
    }

    pub(crate) fn solve_mut(&self, b: &mut DMatrix<f64>) {
        self.root.solve_mut(b);
    }

    pub(crate) fn dump<W: Write>(&self, w: &mut W, depth: usize) -> io::Result<()> {
        self.root.dump(w, depth, 0)
    }

    #[cfg(test)]
    pub(crate) fn max_rank(&self) -> usize {
        self.root.max_rank()
    }
}

impl Node {
    fn build<E: Entries>(
        src: &E,
        start: usize,
        n: usize,
        diag: f64,
        tol: f64,
        leaf_size: usize,
    ) -> Option<Node> {
        if n <= leaf_size {
            let a = DMatrix::from_fn(n, n, |i, j| {
                let v = src.entry(start + i, start + j);
                if i == j {
                    v + diag
                } else {
                    v
                }
            });
            let chol = Cholesky::new(a)?;
            let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            return Some(Node::Leaf { chol, logdet });
        }

        let n1 = n / 2;
        let n2 = n - n1;
        let left = Node::build(src, start, n1, diag, tol, leaf_size)?;
        let right = Node::build(src, start + n1, n2, diag, tol, leaf_size)?;
        let (u, v) = cross_approximation(src, start, n1, start + n1, n2, tol);
        let k = u.ncols();

        let mut yu = u.clone();
        left.solve_mut(&mut yu);
        let mut yv = v.clone();
        right.solve_mut(&mut yv);

        let mut core = DMatrix::identity(2 * k, 2 * k);
        if k > 0 {
            // C Wᵀ D⁻¹ W = [[0, vᵀ yv], [uᵀ yu, 0]]
            core.view_mut((0, k), (k, k)).copy_from(&(v.transpose() * &yv));
            core.view_mut((k, 0), (k, k)).copy_from(&(u.transpose() * &yu));
        }
        let core = LU::new(core);
        let det = core.determinant();
        if !(det.is_finite() && det > 0.0) {
            return None;
        }
        let logdet = left.logdet() + right.logdet() + det.ln();
        Some(Node::Split(Box::new(Split {
            n1,
            left,
            right,
            u,
            v,
            yu,
            yv,
            core,
            logdet,
        })))
    }

    fn logdet(&self) -> f64 {
        match self {
            Node::Leaf { logdet, .. } => *logdet,
            Node::Split(s) => s.logdet,
        }
    }

    fn solve_mut(&self, b: &mut DMatrix<f64>) {
        match self {
            Node::Leaf { chol, .. } => chol.solve_mut(b),
            Node::Split(s) => {
                let n = b.nrows();
                let n2 = n - s.n1;
                let mut top = b.rows(0, s.n1).into_owned();
                let mut bot = b.rows(s.n1, n2).into_owned();
                s.left.solve_mut(&mut top);
                s.right.solve_mut(&mut bot);
                let k = s.u.ncols();
                if k > 0 {
                    let ncols = b.ncols();
                    let mut t = DMatrix::zeros(2 * k, ncols);
                    t.rows_mut(0, k).copy_from(&(s.v.transpose() * &bot));
                    t.rows_mut(k, k).copy_from(&(s.u.transpose() * &top));
                    if s.core.solve_mut(&mut t) {
                        top -= &s.yu * t.rows(0, k);
                        bot -= &s.yv * t.rows(k, k);
                    }
                }
                b.rows_mut(0, s.n1).copy_from(&top);
                b.rows_mut(s.n1, n2).copy_from(&bot);
            }
        }
    }

    fn dump<W: Write>(&self, w: &mut W, depth: usize, offset: usize) -> io::Result<()> {
        let pad = "  ".repeat(depth);
        match self {
            Node::Leaf { chol, logdet } => writeln!(
                w,
                "{pad}leaf [{offset}, {}) logdet={logdet}",
                offset + chol.l_dirty().nrows()
            ),
            Node::Split(s) => {
                writeln!(
                    w,
                    "{pad}split at {} rank={} logdet={}",
                    offset + s.n1,
                    s.u.ncols(),
                    s.logdet
                )?;
                s.left.dump(w, depth + 1, offset)?;
                s.right.dump(w, depth + 1, offset + s.n1)
            }
        }
    }

    #[cfg(test)]
    fn max_rank(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split(s) => s.u.ncols().max(s.left.max_rank()).max(s.right.max_rank()),
        }
    }
}

/// Adaptive cross approximation with partial pivoting of the block
/// `A[r0..r0+nr, c0..c0+nc] ≈ u vᵀ`. Terminates once the newest rank-one term
/// is below `tol` relative to the Frobenius norm of the running approximation.
fn cross_approximation<E: Entries>(
    src: &E,
    r0: usize,
    nr: usize,
    c0: usize,
    nc: usize,
    tol: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let max_rank = nr.min(nc);
    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut used_rows = vec![false; nr];
    let mut norm2 = 0.0f64;
    let mut row_idx = 0usize;

    while us.len() < max_rank {
        used_rows[row_idx] = true;
        let mut row: Vec<f64> = (0..nc).map(|j| src.entry(r0 + row_idx, c0 + j)).collect();
        for (u, v) in us.iter().zip(&vs) {
            let ui = u[row_idx];
            for (r, vj) in row.iter_mut().zip(v) {
                *r -= ui * vj;
            }
        }
        let (pivot_col, pivot) = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, &r)| if r.abs() > best.1.abs() { (j, r) } else { best });

        if pivot.abs() <= f64::MIN_POSITIVE {
            // An all-zero leading row says nothing about the rest of the block.
            if norm2 == 0.0 {
                if let Some(next) = used_rows.iter().position(|used| !used) {
                    row_idx = next;
                    continue;
                }
            }
            break;
        }

        let v: Vec<f64> = row.iter().map(|r| r / pivot).collect();
        let mut u: Vec<f64> = (0..nr).map(|i| src.entry(r0 + i, c0 + pivot_col)).collect();
        for (ul, vl) in us.iter().zip(&vs) {
            let vj = vl[pivot_col];
            for (x, y) in u.iter_mut().zip(ul) {
                *x -= vj * y;
            }
        }

        let uu: f64 = u.iter().map(|x| x * x).sum();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let term = (uu * vv).sqrt();
        // The new term estimates the residual; once it is negligible the
        // approximation so far already meets the tolerance.
        if !us.is_empty() && term <= tol * norm2.max(0.0).sqrt() {
            break;
        }
        let mut cross = 0.0;
        for (ul, vl) in us.iter().zip(&vs) {
            let a: f64 = ul.iter().zip(&u).map(|(x, y)| x * y).sum();
            let b: f64 = vl.iter().zip(&v).map(|(x, y)| x * y).sum();
            cross += a * b;
        }
        norm2 += 2.0 * cross + uu * vv;

        let next_row = u
            .iter()
            .enumerate()
            .filter(|(i, _)| !used_rows[*i])
            .fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
                Some((_, b)) if b >= x.abs() => best,
                _ => Some((i, x.abs())),
            });

        us.push(u);
        vs.push(v);

        if term <= tol * norm2.max(0.0).sqrt() {
            break;
        }
        match next_row {
            Some((i, _)) => row_idx = i,
            None => break,
        }
    }

    let k = us.len();
    let u = DMatrix::from_fn(nr, k, |i, l| us[l][i]);
    let v = DMatrix::from_fn(nc, k, |j, l| vs[l][j]);
    (u, v)
}
