//! Sparse symmetric linear systems: assembly, direct LDL^T factorization with
//! reverse Cuthill-McKee reordering, a Jacobi-preconditioned conjugate
//! gradient fallback, Dirichlet-constraint elimination, and the cotangent
//! Laplacian.
//!
//! The direct factorization handles definite matrices of either sign and
//! symmetric indefinite matrices without zero pivots; mixed pivot signs are
//! reported as a warning rather than an error.

use std::collections::BTreeMap;

use nalgebra::Point3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Square sparse matrix in compressed row storage. Triplets passed to
/// [`SparseMatrix::from_triplets`] are summed per position and stored sorted
/// by column within each row.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets.to_vec();
        // Stable sort keeps the accumulation order of duplicates deterministic.
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((i, j, v)) = iter.next() {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range");
            let mut acc = v;
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    acc += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(acc);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        SparseMatrix::from_triplets(n, &triplets, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// Exact structural + numerical symmetry check (used by tests).
    pub fn symmetry_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveWarning {
    /// The factorization produced pivots of both signs: the system is
    /// symmetric indefinite and was solved as such.
    Indefinite { negative_pivots: usize },
    /// Some free vertices have no path to any constrained vertex.
    DisconnectedFreeRegion { vertices: usize },
    /// Direct factorization broke down; conjugate gradient produced the
    /// solution instead.
    CgFallback,
}

/// Count of factored systems and right-hand sides solved, accumulated across
/// pipeline stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub systems_factored: usize,
    pub rhs_solved: usize,
}

impl SolveStats {
    pub fn absorb(&mut self, other: SolveStats) {
        self.systems_factored += other.systems_factored;
        self.rhs_solved += other.rhs_solved;
    }
}

// ---------------------------------------------------------------------------
// Reverse Cuthill-McKee ordering
// ---------------------------------------------------------------------------

fn adjacency(a: &SparseMatrix) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); a.n()];
    for i in 0..a.n() {
        let (cols, _) = a.row(i);
        for &j in cols {
            if j != i {
                adj[i].push(j);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, level: &mut [usize]) -> (usize, usize) {
    level.fill(usize::MAX);
    level[start] = 0;
    let mut frontier = vec![start];
    let mut depth = 0;
    let mut last = start;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    next.push(v);
                }
            }
        }
        if !next.is_empty() {
            depth += 1;
            last = next[0];
        }
        frontier = next;
    }
    (depth, last)
}

/// Reverse Cuthill-McKee ordering; `perm[new] = old`. Components are ordered
/// one after another.
fn rcm_order(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n();
    let adj = adjacency(a);
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut level = vec![usize::MAX; n];

    for seed in 0..n {
        if placed[seed] {
            continue;
        }
        // Pseudo-peripheral start: walk to a deepest BFS leaf a few times.
        let mut start = seed;
        let (mut depth, mut far) = bfs_levels(&adj, start, &mut level);
        for _ in 0..4 {
            let (d2, f2) = bfs_levels(&adj, far, &mut level);
            if d2 > depth {
                depth = d2;
                start = far;
                far = f2;
            } else {
                start = far;
                break;
            }
        }
        // Cuthill-McKee from `start`, neighbors by ascending degree.
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        placed[start] = true;
        let base = order.len();
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !placed[v]).collect();
            nbrs.sort_by_key(|&v| (adj[v].len(), v));
            for v in nbrs {
                placed[v] = true;
                queue.push_back(v);
            }
        }
        order[base..].reverse();
    }
    order
}

// ---------------------------------------------------------------------------
// Skyline LDL^T factorization
// ---------------------------------------------------------------------------

struct SkylineLdlt {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    low: Vec<f64>,
    diag: Vec<f64>,
    negative_pivots: usize,
}

enum FactorOutcome {
    Ok(SkylineLdlt),
    Breakdown,
}

fn factor_skyline(a: &SparseMatrix, perm: &[usize]) -> FactorOutcome {
    let n = a.n();
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }

    // Profile of the permuted lower triangle.
    let mut first: Vec<usize> = (0..n).collect();
    for old_i in 0..n {
        let (cols, _) = a.row(old_i);
        let i = inv[old_i];
        for &old_j in cols {
            let j = inv[old_j];
            let (r, c) = if j <= i { (i, j) } else { (j, i) };
            if c < first[r] {
                first[r] = c;
            }
        }
    }
    let mut start = vec![0usize; n + 1];
    for i in 0..n {
        start[i + 1] = start[i] + (i - first[i]);
    }
    let mut low = vec![0.0f64; start[n]];
    let mut diag = vec![0.0f64; n];

    // Scatter the permuted matrix into the envelope.
    for old_i in 0..n {
        let (cols, vals) = a.row(old_i);
        let i = inv[old_i];
        for (&old_j, &v) in cols.iter().zip(vals) {
            let j = inv[old_j];
            if j == i {
                diag[i] = v;
            } else if j < i {
                low[start[i] + (j - first[i])] = v;
            }
        }
    }

    let mut negative_pivots = 0usize;
    for i in 0..n {
        let fi = first[i];
        let (prev, cur) = low.split_at_mut(start[i]);
        let row_i = &mut cur[..i - fi];
        for j in fi..i {
            let fj = first[j];
            let lo = fi.max(fj);
            let s = if lo < j {
                let wi = &row_i[lo - fi..j - fi];
                let lj = &prev[start[j] + (lo - fj)..start[j] + (j - fj)];
                dot(wi, lj)
            } else {
                0.0
            };
            row_i[j - fi] -= s;
        }
        // Scale row and accumulate the pivot.
        let mut d = diag[i];
        for k in fi..i {
            let c = row_i[k - fi];
            let dk = diag[k];
            let l = c / dk;
            d -= c * l;
            row_i[k - fi] = l;
        }
        if d == 0.0 || !d.is_finite() {
            return FactorOutcome::Breakdown;
        }
        if d < 0.0 {
            negative_pivots += 1;
        }
        diag[i] = d;
    }
    FactorOutcome::Ok(SkylineLdlt {
        n,
        first,
        start,
        low,
        diag,
        negative_pivots,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

impl SkylineLdlt {
    /// Solve in permuted coordinates, in place.
    fn solve_permuted(&self, y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.low[self.start[i]..self.start[i + 1]];
            if !row.is_empty() {
                y[i] -= dot(row, &y[fi..i]);
            }
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.low[self.start[i]..self.start[i + 1]];
            let xi = y[i];
            if xi != 0.0 {
                for (k, l) in row.iter().enumerate() {
                    y[fi + k] -= l * xi;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Conjugate gradient fallback
// ---------------------------------------------------------------------------

fn jacobi_cg(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = a.n();
    // Work on a definite orientation: flip signs if the diagonal is mostly
    // negative.
    let mut neg = 0usize;
    for i in 0..n {
        if a.get(i, i) < 0.0 {
            neg += 1;
        }
    }
    let sign = if neg * 2 > n { -1.0 } else { 1.0 };

    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let precond: Vec<f64> = (0..n)
        .map(|i| {
            let d = sign * a.get(i, i);
            if d.abs() > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();

    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut ax = vec![0.0; n];
    a.mul_vec(&x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| sign * (b[i] - ax[i])).collect();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for _ in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        a.mul_vec(&p, &mut ap);
        if sign < 0.0 {
            for v in &mut ap {
                *v = -*v;
            }
        }
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Solver(format!(
                "conjugate gradient breakdown: p^T A p = {pap}; matrix is not positive definite"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rnorm <= tol * bnorm {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "conjugate gradient did not reach tolerance {tol} in {max_iter} iterations \
             (relative residual {:.3e})",
            rnorm / bnorm
        )))
    }
}

// ---------------------------------------------------------------------------
// Reusable direct solver
// ---------------------------------------------------------------------------

/// Factored symmetric system. The factorization is immutable after
/// construction, so solves may run concurrently from shared references.
pub struct SpdSolver {
    a: SparseMatrix,
    inv: Vec<usize>,
    factor: Option<SkylineLdlt>,
    tol: f64,
    pub warnings: Vec<SolveWarning>,
}

impl SpdSolver {
    pub fn new(a: SparseMatrix, tol: f64) -> Result<Self> {
        let n = a.n();
        if n == 0 {
            return Err(Error::Solver("empty system".into()));
        }
        let perm = rcm_order(&a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut warnings = Vec::new();
        let factor = match factor_skyline(&a, &perm) {
            FactorOutcome::Ok(f) => {
                if f.negative_pivots > 0 && f.negative_pivots < f.n {
                    warnings.push(SolveWarning::Indefinite {
                        negative_pivots: f.negative_pivots,
                    });
                }
                Some(f)
            }
            FactorOutcome::Breakdown => {
                warnings.push(SolveWarning::CgFallback);
                None
            }
        };
        Ok(SpdSolver {
            a,
            inv,
            factor,
            tol,
            warnings,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    /// Solve one right-hand side to the relative-residual contract.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.a.n();
        assert_eq!(b.len(), n);
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }

        let mut x = match &self.factor {
            Some(f) => {
                let mut y = vec![0.0; n];
                for i in 0..n {
                    y[self.inv[i]] = b[i];
                }
                f.solve_permuted(&mut y);
                let mut x = vec![0.0; n];
                for i in 0..n {
                    x[i] = y[self.inv[i]];
                }
                x
            }
            None => jacobi_cg(&self.a, b, None, self.tol, 40 * n + 200)?,
        };

        // Residual contract with one round of refinement, then CG polish.
        for attempt in 0..3 {
            let mut ax = vec![0.0; n];
            self.a.mul_vec(&x, &mut ax);
            let rnorm = (0..n)
                .map(|i| (b[i] - ax[i]) * (b[i] - ax[i]))
                .sum::<f64>()
                .sqrt();
            if rnorm <= self.tol * bnorm {
                return Ok(x);
            }
            match (attempt, &self.factor) {
                (0, Some(f)) => {
                    let mut y = vec![0.0; n];
                    for i in 0..n {
                        y[self.inv[i]] = b[i] - ax[i];
                    }
                    f.solve_permuted(&mut y);
                    for i in 0..n {
                        x[i] += y[self.inv[i]];
                    }
                }
                _ => {
                    x = jacobi_cg(&self.a, b, Some(&x), self.tol, 40 * n + 200)?;
                }
            }
        }
        let mut ax = vec![0.0; n];
        self.a.mul_vec(&x, &mut ax);
        let rel = (0..n)
            .map(|i| (b[i] - ax[i]) * (b[i] - ax[i]))
            .sum::<f64>()
            .sqrt()
            / bnorm;
        Err(Error::Solver(format!(
            "relative residual {rel:.3e} exceeds tolerance {:.1e} (n = {n})",
            self.tol
        )))
    }
}

/// One-shot solve of a symmetric positive definite system for one or more
/// right-hand sides. All columns share a single factorization.
pub fn solve_spd(
    a: &SparseMatrix,
    rhs: &[Vec<f64>],
    tol: f64,
) -> Result<(Vec<Vec<f64>>, Vec<SolveWarning>, SolveStats)> {
    let solver = SpdSolver::new(a.clone(), tol)?;
    let mut out = Vec::with_capacity(rhs.len());
    for b in rhs {
        out.push(solver.solve(b)?);
    }
    let stats = SolveStats {
        systems_factored: 1,
        rhs_solved: rhs.len(),
    };
    Ok((out, solver.warnings.clone(), stats))
}

// ---------------------------------------------------------------------------
// Dirichlet elimination
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub values: Vec<Complex64>,
    pub warnings: Vec<SolveWarning>,
    pub stats: SolveStats,
}

/// Solve `(A x)_i = rhs_i` on free rows with `x` pinned to the given values
/// on constrained vertices. Complex values are solved as two real columns
/// sharing one factorization.
pub fn solve_with_dirichlet(
    a: &SparseMatrix,
    fixed: &[(usize, Complex64)],
    rhs: &[Complex64],
    tol: f64,
) -> Result<DirichletSolution> {
    let n = a.n();
    assert_eq!(rhs.len(), n);
    if fixed.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    let mut fixed_val: Vec<Option<Complex64>> = vec![None; n];
    for &(v, c) in fixed {
        assert!(v < n, "constrained vertex {v} out of range");
        fixed_val[v] = Some(c);
    }

    let free: Vec<usize> = (0..n).filter(|&i| fixed_val[i].is_none()).collect();
    let mut warnings = Vec::new();

    if free.is_empty() {
        let values = (0..n).map(|i| fixed_val[i].unwrap()).collect();
        return Ok(DirichletSolution {
            values,
            warnings,
            stats: SolveStats::default(),
        });
    }

    // Warn if part of the free region cannot reach any constraint.
    let unreachable = count_unreachable(a, &fixed_val);
    if unreachable > 0 {
        warnings.push(SolveWarning::DisconnectedFreeRegion {
            vertices: unreachable,
        });
    }

    let mut free_index = vec![usize::MAX; n];
    for (k, &v) in free.iter().enumerate() {
        free_index[v] = k;
    }

    let mut triplets = Vec::new();
    let mut b_re = vec![0.0; free.len()];
    let mut b_im = vec![0.0; free.len()];
    for (k, &i) in free.iter().enumerate() {
        b_re[k] = rhs[i].re;
        b_im[k] = rhs[i].im;
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            match fixed_val[j] {
                None => triplets.push((k, free_index[j], v)),
                Some(c) => {
                    b_re[k] -= v * c.re;
                    b_im[k] -= v * c.im;
                }
            }
        }
    }
    let reduced = SparseMatrix::from_triplets(free.len(), &triplets, a.is_symmetric_flagged());
    let solver = SpdSolver::new(reduced, tol)?;
    warnings.extend(solver.warnings.iter().copied());
    let x_re = solver.solve(&b_re)?;
    let x_im = solver.solve(&b_im)?;

    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        values[i] = match fixed_val[i] {
            Some(c) => c,
            None => Complex64::new(x_re[free_index[i]], x_im[free_index[i]]),
        };
    }
    Ok(DirichletSolution {
        values,
        warnings,
        stats: SolveStats {
            systems_factored: 1,
            rhs_solved: 2,
        },
    })
}

fn count_unreachable(a: &SparseMatrix, fixed: &[Option<Complex64>]) -> usize {
    let n = a.n();
    let mut seen: Vec<bool> = fixed.iter().map(|f| f.is_some()).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    while let Some(u) = stack.pop() {
        let (cols, _) = a.row(u);
        for &v in cols {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().filter(|&&s| !s).count()
}

// ---------------------------------------------------------------------------
// Cotangent Laplacian
// ---------------------------------------------------------------------------

/// Per-edge cotangent weights `k_uv = cot(alpha) + cot(beta)` over the one or
/// two faces incident to edge `[u, v]`.
#[derive(Debug, Clone)]
pub struct LaplacianWeights {
    weights: BTreeMap<(usize, usize), f64>,
}

impl LaplacianWeights {
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.weights.get(&key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Discrete harmonic energy `1/2 sum k_uv |psi(u) - psi(v)|^2`.
    pub fn harmonic_energy(&self, psi: &[Complex64]) -> f64 {
        0.5 * self
            .iter()
            .map(|(u, v, k)| k * (psi[u] - psi[v]).norm_sqr())
            .sum::<f64>()
    }
}

/// Cotangent of the interior angle at each corner of a 3D triangle.
pub fn face_corner_cotangents(pts: &[Point3<f64>; 3]) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = pts[k];
        let u = pts[(k + 1) % 3] - a;
        let v = pts[(k + 2) % 3] - a;
        let cross = u.cross(&v).norm();
        if cross == 0.0 {
            return Err(Error::degenerate_faces(vec![]));
        }
        out[k] = u.dot(&v) / cross;
    }
    Ok(out)
}

/// Accumulate per-edge cotangent weights from a face list with a caller
/// supplied per-face cotangent table. Shared by the plain and the
/// symmetry-exploiting glued assembly.
pub fn weights_from_cotangents(
    faces: &[[usize; 3]],
    cots: &[[f64; 3]],
) -> LaplacianWeights {
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (f, cot) in faces.iter().zip(cots) {
        for k in 0..3 {
            let (u, v) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let key = if u < v { (u, v) } else { (v, u) };
            *weights.entry(key).or_insert(0.0) += cot[k];
        }
    }
    LaplacianWeights { weights }
}

pub fn laplacian_weights(mesh: &TriMesh) -> Result<LaplacianWeights> {
    let mut cots = Vec::with_capacity(mesh.face_count());
    let mut bad = Vec::new();
    for f in 0..mesh.face_count() {
        match face_corner_cotangents(&mesh.face_points(f)) {
            Ok(c) => cots.push(c),
            Err(_) => bad.push(f),
        }
    }
    if !bad.is_empty() {
        return Err(Error::degenerate_faces(bad));
    }
    Ok(weights_from_cotangents(mesh.faces(), &cots))
}

/// Laplacian matrix from edge weights: `A_ij = k_ij` off-diagonal,
/// `A_ii = -sum_j k_ij`. Rows sum to zero; each undirected edge is assembled
/// once so `A_ij == A_ji` exactly.
pub fn laplacian_from_weights(n: usize, weights: &LaplacianWeights) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(4 * weights.len());
    for (u, v, k) in weights.iter() {
        triplets.push((u, v, k));
        triplets.push((v, u, k));
        triplets.push((u, u, -k));
        triplets.push((v, v, -k));
    }
    SparseMatrix::from_triplets(n, &triplets, true)
}

pub fn cotangent_laplacian(mesh: &TriMesh) -> Result<SparseMatrix> {
    let weights = laplacian_weights(mesh)?;
    Ok(laplacian_from_weights(mesh.vertex_count(), &weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;
    use rand::{RngExt, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = SparseMatrix::identity(4);
        let b = vec![vec![1.0, -2.0, 3.0, 0.5]];
        let (x, warnings, stats) = solve_spd(&a, &b, 1e-10).unwrap();
        assert_eq!(x[0], b[0]);
        assert!(warnings.is_empty());
        assert_eq!(stats.systems_factored, 1);
        assert_eq!(stats.rhs_solved, 1);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let a = SparseMatrix::from_triplets(
            2,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)],
            true,
        );
        let (x, _, _) = solve_spd(&a, &[vec![1.0, 1.0]], 1e-12).unwrap();
        assert!((x[0][0] - 1.0).abs() < 1e-12);
        assert!((x[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let a = SparseMatrix::from_triplets(3, &[], true);
        assert!(solve_spd(&a, &[vec![1.0, 0.0, 0.0]], 1e-10).is_err());
    }

    #[test]
    fn triplets_sum_and_sort() {
        let a = SparseMatrix::from_triplets(
            2,
            &[(0, 1, 1.0), (0, 0, 2.0), (0, 1, 3.0), (1, 1, 1.0)],
            false,
        );
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
        let (cols, _) = a.row(0);
        assert_eq!(cols, &[0, 1]);
    }

    #[test]
    fn indefinite_system_solves_with_warning() {
        let a = SparseMatrix::from_triplets(
            3,
            &[(0, 0, 1.0), (1, 1, -1.0), (2, 2, 5.0)],
            true,
        );
        let fixed = [(2usize, c(7.0, 0.0))];
        let rhs = vec![c(3.0, 0.0), c(4.0, 0.0), c(0.0, 0.0)];
        let sol = solve_with_dirichlet(&a, &fixed, &rhs, 1e-12).unwrap();
        assert!((sol.values[0].re - 3.0).abs() < 1e-12);
        assert!((sol.values[1].re + 4.0).abs() < 1e-12);
        assert_eq!(sol.values[2], c(7.0, 0.0));
        assert!(sol
            .warnings
            .iter()
            .any(|w| matches!(w, SolveWarning::Indefinite { .. })));
    }

    #[test]
    fn path_graph_dirichlet_is_linear_interpolation() {
        // Unit-weight Laplacian on a path of 5 vertices.
        let mut triplets = Vec::new();
        for (u, v) in [(0, 1), (1, 2), (2, 3), (3, 4)] {
            triplets.push((u, v, 1.0));
            triplets.push((v, u, 1.0));
            triplets.push((u, u, -1.0));
            triplets.push((v, v, -1.0));
        }
        let a = SparseMatrix::from_triplets(5, &triplets, true);
        let fixed = [(0usize, c(0.0, 0.0)), (4usize, c(1.0, 0.0))];
        let rhs = vec![c(0.0, 0.0); 5];
        let sol = solve_with_dirichlet(&a, &fixed, &rhs, 1e-12).unwrap();
        for (i, expect) in [(1usize, 0.25), (2, 0.5), (3, 0.75)] {
            assert!(
                (sol.values[i].re - expect).abs() < 1e-10,
                "vertex {i}: {}",
                sol.values[i]
            );
        }
        assert_eq!(sol.stats.rhs_solved, 2);
        assert_eq!(sol.stats.systems_factored, 1);
    }

    #[test]
    fn empty_fixed_set_is_rejected() {
        let a = SparseMatrix::identity(3);
        let rhs = vec![c(0.0, 0.0); 3];
        match solve_with_dirichlet(&a, &[], &rhs, 1e-10).unwrap_err() {
            Error::EmptyConstraints => {}
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn all_vertices_fixed_returns_fixed_values() {
        let a = SparseMatrix::identity(2);
        let fixed = [(0usize, c(1.0, 2.0)), (1usize, c(-3.0, 4.0))];
        let rhs = vec![c(0.0, 0.0); 2];
        let sol = solve_with_dirichlet(&a, &fixed, &rhs, 1e-10).unwrap();
        assert_eq!(sol.values[0], c(1.0, 2.0));
        assert_eq!(sol.values[1], c(-3.0, 4.0));
        assert_eq!(sol.stats.systems_factored, 0);
    }

    #[test]
    fn disconnected_free_region_warns() {
        // Vertices 0-1 connected; vertex 2 isolated (diagonal only) and free.
        let a = SparseMatrix::from_triplets(
            3,
            &[
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (2, 2, 1.0),
            ],
            true,
        );
        let fixed = [(0usize, c(1.0, 0.0))];
        let rhs = vec![c(0.0, 0.0); 3];
        let sol = solve_with_dirichlet(&a, &fixed, &rhs, 1e-10).unwrap();
        assert!(sol
            .warnings
            .iter()
            .any(|w| matches!(w, SolveWarning::DisconnectedFreeRegion { vertices: 1 })));
    }

    #[test]
    fn equilateral_fan_edge_weights() {
        // Hexagonal fan of six equilateral triangles: every interior edge has
        // weight cot(pi/3) + cot(pi/3) = 2/sqrt(3).
        let mesh = hex_fan();
        let w = laplacian_weights(&mesh).unwrap();
        let expect = 2.0 / 3f64.sqrt();
        for i in 1..=6 {
            let k = w.get(0, i).unwrap();
            assert!((k - expect).abs() < 1e-12, "edge (0, {i}): {k}");
        }
    }

    fn hex_fan() -> TriMesh {
        let mut vertices = vec![Point3::new(0.0, 0.0, 0.0)];
        for i in 0..6 {
            let t = i as f64 * std::f64::consts::FRAC_PI_3;
            vertices.push(Point3::new(t.cos(), t.sin(), 0.0));
        }
        let faces: Vec<[usize; 3]> = (0..6).map(|i| [0, i + 1, (i + 1) % 6 + 1]).collect();
        TriMesh::new(vertices, faces).unwrap()
    }

    #[test]
    fn right_angle_opposite_edge_has_zero_weight() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let w = laplacian_weights(&mesh).unwrap();
        assert!(w.get(1, 2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn laplacian_rows_sum_to_zero_and_symmetric() {
        let mesh = crate::synth::bumpy_disk_mesh(7);
        let a = cotangent_laplacian(&mesh).unwrap();
        assert!(a.max_abs_row_sum() < 1e-10 * a.max_abs_entry());
        assert_eq!(a.symmetry_violation(), 0.0);
    }

    #[test]
    fn dirichlet_solution_minimizes_harmonic_energy() {
        let mesh = crate::synth::disk_mesh(4);
        let weights = laplacian_weights(&mesh).unwrap();
        let a = laplacian_from_weights(mesh.vertex_count(), &weights);
        let boundary = crate::mesh::boundary_loop(&mesh).unwrap();
        let fixed: Vec<(usize, Complex64)> = boundary
            .iter()
            .map(|&v| {
                let p = mesh.position(v);
                (v, c(p.x, p.y))
            })
            .collect();
        let rhs = vec![c(0.0, 0.0); mesh.vertex_count()];
        let sol = solve_with_dirichlet(&a, &fixed, &rhs, 1e-12).unwrap();
        let base = weights.harmonic_energy(&sol.values);

        let on_boundary: std::collections::HashSet<usize> = boundary.into_iter().collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let mut perturbed = sol.values.clone();
            let v = loop {
                let v = rng.random_range(0..mesh.vertex_count());
                if !on_boundary.contains(&v) {
                    break v;
                }
            };
            perturbed[v] += c(
                rng.random_range(-0.1..0.1f64),
                rng.random_range(-0.1..0.1f64),
            );
            assert!(weights.harmonic_energy(&perturbed) > base);
        }
    }

    #[test]
    fn mesh_laplacian_dirichlet_meets_residual_contract() {
        let mesh = crate::synth::bumpy_disk_mesh(10);
        let a = cotangent_laplacian(&mesh).unwrap();
        let boundary = crate::mesh::boundary_loop(&mesh).unwrap();
        let fixed: Vec<(usize, Complex64)> = boundary
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / boundary.len() as f64;
                (v, c(t.cos(), t.sin()))
            })
            .collect();
        let rhs = vec![c(0.0, 0.0); mesh.vertex_count()];
        let sol = solve_with_dirichlet(&a, &fixed, &rhs, 1e-10).unwrap();

        // Verify the free rows directly against the full matrix.
        let on_boundary: std::collections::HashSet<usize> =
            boundary.iter().copied().collect();
        let xs: Vec<f64> = sol.values.iter().map(|z| z.re).collect();
        let mut ax = vec![0.0; xs.len()];
        a.mul_vec(&xs, &mut ax);
        let scale = a.max_abs_entry();
        for i in 0..xs.len() {
            if !on_boundary.contains(&i) {
                assert!(ax[i].abs() < 1e-9 * scale, "row {i}: {}", ax[i]);
            }
        }
    }

    #[test]
    fn factorization_is_shareable_across_threads() {
        let mesh = crate::synth::disk_mesh(6);
        let lap = cotangent_laplacian(&mesh).unwrap();
        // Shift to a definite system: I - L is SPD for the negative
        // semidefinite Laplacian.
        let n = lap.n();
        let mut triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        for i in 0..n {
            let (cols, vals) = lap.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triplets.push((i, j, -v));
            }
        }
        let spd = SparseMatrix::from_triplets(n, &triplets, true);
        let solver = std::sync::Arc::new(SpdSolver::new(spd, 1e-12).unwrap());
        let handles: Vec<_> = (0..4)
            .map(|k| {
                let solver = solver.clone();
                std::thread::spawn(move || {
                    let b: Vec<f64> = (0..n).map(|i| ((i + k) % 7) as f64 - 3.0).collect();
                    let x = solver.solve(&b).unwrap();
                    let mut ax = vec![0.0; n];
                    solver.matrix().mul_vec(&x, &mut ax);
                    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let rnorm = (0..n)
                        .map(|i| (b[i] - ax[i]) * (b[i] - ax[i]))
                        .sum::<f64>()
                        .sqrt();
                    assert!(rnorm <= 1e-12 * bnorm);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let mesh = crate::synth::saddle_mesh(6);
        let a = cotangent_laplacian(&mesh).unwrap();
        let boundary = crate::mesh::boundary_loop(&mesh).unwrap();
        let fixed: Vec<(usize, Complex64)> = boundary
            .iter()
            .map(|&v| (v, c(mesh.position(v).x, mesh.position(v).y)))
            .collect();
        let rhs = vec![c(0.0, 0.0); mesh.vertex_count()];
        let s1 = solve_with_dirichlet(&a, &fixed, &rhs, 1e-10).unwrap();
        let s2 = solve_with_dirichlet(&a, &fixed, &rhs, 1e-10).unwrap();
        assert_eq!(s1.values, s2.values);
    }
}
