//! Newton systems with block-diagonal plus low-rank structure.
//!
//! Beamforming blocks couple their per-turbine variables only through a few
//! constraint gradients, so the negated Hessian of the barrier is a
//! block-diagonal matrix plus a sum of sparse rank-one terms. Solving through
//! the Woodbury identity costs a few small Cholesky factorizations and one
//! dense system whose size is the number of coupling terms. Variables with no
//! curvature of their own (epigraph and slack variables) are eliminated
//! through a small Schur complement.

use crate::linalg::{regularized_cholesky, Cholesky, DenseMatrix};
use crate::scalar::Real;

/// Receiver for `−∇²f` contributions.
pub trait HessianSink<T> {
    fn add_diag(&mut self, i: usize, value: T);
    /// `+= coeff · v vᵀ` on the coordinates `offset..offset + v.len()`.
    fn add_outer(&mut self, offset: usize, v: &[T], coeff: T);
}

impl<T: Real> HessianSink<T> for DenseMatrix<T> {
    fn add_diag(&mut self, i: usize, value: T) {
        self.add(i, i, value);
    }

    fn add_outer(&mut self, offset: usize, v: &[T], coeff: T) {
        DenseMatrix::add_outer(self, offset, v, coeff);
    }
}

/// `Σ_b D_b + Σ_i c_i a_i a_iᵀ` over a fixed partition of the variables
/// into contiguous blocks.
#[derive(Clone, Debug)]
pub struct BlockLowRank<T> {
    starts: Vec<usize>,
    block_of: Vec<usize>,
    blocks: Vec<DenseMatrix<T>>,
    low_rank: Vec<(T, Vec<(usize, T)>)>,
}

impl<T: Real> BlockLowRank<T> {
    /// `sizes` must sum to the problem dimension; an empty slice means one
    /// dense block of size `dim`.
    pub fn new(dim: usize, sizes: &[usize]) -> Self {
        let sizes = if sizes.is_empty() { vec![dim] } else { sizes.to_vec() };
        assert_eq!(sizes.iter().sum::<usize>(), dim, "block sizes must cover the variables");
        let mut starts = Vec::with_capacity(sizes.len() + 1);
        let mut block_of = Vec::with_capacity(dim);
        let mut at = 0;
        for (b, &s) in sizes.iter().enumerate() {
            starts.push(at);
            block_of.extend(std::iter::repeat_n(b, s));
            at += s;
        }
        starts.push(at);
        let blocks = sizes.iter().map(|&s| DenseMatrix::zeros(s)).collect();
        Self {
            starts,
            block_of,
            blocks,
            low_rank: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn clear(&mut self) {
        for b in &mut self.blocks {
            *b = DenseMatrix::zeros(b.dim());
        }
        self.low_rank.clear();
    }

    #[cfg(test)]
    fn low_rank_terms(&self) -> usize {
        self.low_rank.len()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut h = DenseMatrix::zeros(self.dim());
        for (b, m) in self.blocks.iter().enumerate() {
            let s = self.starts[b];
            for r in 0..m.dim() {
                for c in 0..m.dim() {
                    h.add(s + r, s + c, m.get(r, c));
                }
            }
        }
        for (c, a) in &self.low_rank {
            for &(i, ai) in a {
                for &(j, aj) in a {
                    h.add(i, j, *c * ai * aj);
                }
            }
        }
        h
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); x.len()];
        for (b, m) in self.blocks.iter().enumerate() {
            let s = self.starts[b];
            let part = m.mul_vec(&x[s..self.starts[b + 1]]);
            for (yi, p) in y[s..].iter_mut().zip(part) {
                *yi = *yi + p;
            }
        }
        for (c, a) in &self.low_rank {
            let d: T = a.iter().map(|&(i, ai)| ai * x[i]).sum();
            for &(i, ai) in a {
                y[i] = y[i] + *c * d * ai;
            }
        }
        y
    }

    /// Solves `H x = rhs`. Falls back to a dense factorization when the
    /// structured solve is unavailable or inaccurate.
    pub fn solve(&self, rhs: &[T]) -> Option<Vec<T>> {
        self.solve_structured(rhs)
            .or_else(|| regularized_cholesky(&self.to_dense()).map(|f| f.solve(rhs)))
    }

    fn solve_structured(&self, rhs: &[T]) -> Option<Vec<T>> {
        if self.low_rank.is_empty() && self.blocks.len() == 1 {
            return self.blocks[0].cholesky().map(|f| f.solve(rhs));
        }
        let factored = Factored::new(self)?;
        let mut x = factored.apply(rhs)?;
        // Backward-error test, the guarantee a dense Cholesky would give.
        let accept = |x: &[T], residual: &[T]| {
            norm(residual) <= T::epsilon().sqrt() * (self.norm_bound() * norm(x) + norm(rhs))
        };
        for _ in 0..2 {
            let residual: Vec<T> = self.mul_vec(&x).iter().zip(rhs).map(|(a, b)| *b - *a).collect();
            if accept(&x, &residual) {
                return Some(x);
            }
            let dx = factored.apply(&residual)?;
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi = *xi + d;
            }
        }
        let residual: Vec<T> = self.mul_vec(&x).iter().zip(rhs).map(|(a, b)| *b - *a).collect();
        accept(&x, &residual).then_some(x)
    }

    /// Upper bound on the spectral norm.
    fn norm_bound(&self) -> T {
        let blocks = self
            .blocks
            .iter()
            .map(|m| {
                (0..m.dim())
                    .flat_map(|r| (0..m.dim()).map(move |c| (r, c)))
                    .map(|(r, c)| m.get(r, c) * m.get(r, c))
                    .sum::<T>()
                    .sqrt()
            })
            .fold(T::zero(), |a, b| a.max(b));
        let low_rank: T = self.low_rank.iter().map(|(c, a)| c.abs() * a.iter().map(|(_, v)| *v * *v).sum::<T>()).sum();
        blocks + low_rank
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

/// Factorization of a [`BlockLowRank`] matrix. Blocks whose own curvature
/// is significant next to the coupling they receive form the local part `L`, inverted through
/// `(D + B Bᵀ)⁻¹ = D⁻¹ − D⁻¹B (I + BᵀD⁻¹B)⁻¹ BᵀD⁻¹` with `B = A C^{1/2}`.
/// The remaining coordinates `G` are few (epigraph and slack variables)
/// and are eliminated through their Schur complement.
struct Factored<'a, T> {
    h: &'a BlockLowRank<T>,
    factors: Vec<Option<Cholesky<T>>>,
    global: Vec<usize>,
    /// `B` restricted to `L`, one sparse column per coupling term.
    b: Vec<Vec<(usize, T)>>,
    /// `D⁻¹ b_i` as dense vectors.
    z: Vec<Vec<T>>,
    capacitance: Option<Cholesky<T>>,
    /// `H_LL⁻¹ H_Lg` for every global coordinate g.
    coupling: Vec<Vec<T>>,
    schur: Option<Cholesky<T>>,
}

impl<'a, T: Real> Factored<'a, T> {
    fn new(h: &'a BlockLowRank<T>) -> Option<Self> {
        let n = h.dim();
        // Coupling mass each block receives from the rank-one terms.
        let mut mass = vec![T::zero(); h.blocks.len()];
        for (c, a) in &h.low_rank {
            for &(i, ai) in a {
                mass[h.block_of[i]] = mass[h.block_of[i]] + c.abs() * ai * ai;
            }
        }
        let mut factors = Vec::with_capacity(h.blocks.len());
        let mut global = Vec::new();
        for (bi, m) in h.blocks.iter().enumerate() {
            let diag = (0..m.dim()).map(|i| m.get(i, i)).fold(T::zero(), |a, b| a.max(b));
            let f = if diag > T::epsilon().sqrt() * mass[bi] { m.cholesky() } else { None };
            if f.is_none() {
                global.extend(h.starts[bi]..h.starts[bi + 1]);
            }
            factors.push(f);
        }
        if global.len() > 8 || h.low_rank.iter().any(|(c, _)| !(*c >= T::zero())) {
            return None;
        }
        let local_mask: Vec<bool> = factors.iter().map(Option::is_some).collect();
        let is_global = |i: usize| !local_mask[h.block_of[i]];

        let b: Vec<Vec<(usize, T)>> = h
            .low_rank
            .iter()
            .map(|(c, a)| {
                let s = c.sqrt();
                a.iter().filter(|(i, _)| !is_global(*i)).map(|&(i, ai)| (i, s * ai)).collect()
            })
            .collect();
        let mut partial = Self {
            h,
            factors,
            global,
            b,
            z: Vec::new(),
            capacitance: None,
            coupling: Vec::new(),
            schur: None,
        };
        let mut dense = vec![T::zero(); n];
        let mut z = Vec::with_capacity(partial.b.len());
        for col in &partial.b {
            dense.iter_mut().for_each(|v| *v = T::zero());
            for &(i, v) in col {
                dense[i] = v;
            }
            let mut touched: Vec<usize> = col.iter().map(|&(i, _)| h.block_of[i]).collect();
            touched.dedup();
            let mut zi = vec![T::zero(); n];
            partial.local_block_solve(&dense, &mut zi, &touched);
            z.push(zi);
        }
        let r = partial.b.len();
        let mut cap = DenseMatrix::zeros(r);
        for (i, col) in partial.b.iter().enumerate() {
            cap.add(i, i, T::one());
            for (j, zj) in z.iter().enumerate().skip(i) {
                let d: T = col.iter().map(|&(k, v)| v * zj[k]).sum();
                cap.add(i, j, d);
                if j != i {
                    cap.add(j, i, d);
                }
            }
        }
        partial.z = z;
        if r > 0 {
            partial.capacitance = Some(regularized_cholesky(&cap)?);
        }

        let g = partial.global.len();
        if g > 0 {
            // H_Lg and H_gg' from the coupling terms and the global blocks.
            let mut h_gg = DenseMatrix::zeros(g);
            let mut coupling = Vec::with_capacity(g);
            for (p, &gi) in partial.global.iter().enumerate() {
                let mut col = vec![T::zero(); n];
                for (c, a) in &h.low_rank {
                    let Some(&(_, ag)) = a.iter().find(|(i, _)| *i == gi) else { continue };
                    for &(i, ai) in a {
                        if is_global(i) {
                            if let Some(q) = partial.global.iter().position(|&x| x == i) {
                                h_gg.add(p, q, *c * ag * ai);
                            }
                        } else {
                            col[i] = col[i] + *c * ag * ai;
                        }
                    }
                }
                let bi = h.block_of[gi];
                let s = h.starts[bi];
                for (q, &gj) in partial.global.iter().enumerate() {
                    if h.block_of[gj] == bi {
                        h_gg.add(p, q, h.blocks[bi].get(gi - s, gj - s));
                    }
                }
                coupling.push(col);
            }
            let mut schur = h_gg;
            let mut solved = Vec::with_capacity(g);
            for col in &coupling {
                solved.push(partial.apply_local(col));
            }
            for (p, col_p) in coupling.iter().enumerate() {
                for (q, sol_q) in solved.iter().enumerate() {
                    let d: T = col_p.iter().zip(sol_q).map(|(a, b)| *a * *b).sum();
                    schur.add(p, q, -d);
                }
            }
            partial.schur = Some(regularized_cholesky(&schur)?);
            partial.coupling = solved;
        }
        Some(partial)
    }

    fn local_block_solve(&self, rhs: &[T], out: &mut [T], touched: &[usize]) {
        for &bi in touched {
            if let Some(f) = &self.factors[bi] {
                let (s, e) = (self.h.starts[bi], self.h.starts[bi + 1]);
                out[s..e].copy_from_slice(&f.solve(&rhs[s..e]));
            }
        }
    }

    /// `H_LL⁻¹ v` for `v` supported on `L`.
    fn apply_local(&self, v: &[T]) -> Vec<T> {
        let all: Vec<usize> = (0..self.factors.len()).collect();
        let mut y = vec![T::zero(); v.len()];
        self.local_block_solve(v, &mut y, &all);
        let Some(cap) = &self.capacitance else {
            return y;
        };
        let u: Vec<T> = self.b.iter().map(|col| col.iter().map(|&(k, c)| c * y[k]).sum()).collect();
        let w = cap.solve(&u);
        for (wj, zj) in w.iter().zip(&self.z) {
            for (yi, zi) in y.iter_mut().zip(zj) {
                *yi = *yi - *wj * *zi;
            }
        }
        y
    }

    fn apply(&self, rhs: &[T]) -> Option<Vec<T>> {
        let mut local = rhs.to_vec();
        for &g in &self.global {
            local[g] = T::zero();
        }
        let mut x = self.apply_local(&local);
        if let Some(schur) = &self.schur {
            // x_G = S⁻¹ (b_G − H_GL H_LL⁻¹ b_L); x_L = H_LL⁻¹ b_L − H_LL⁻¹ H_LG x_G.
            let reduced: Vec<T> = self
                .global
                .iter()
                .zip(&self.coupling)
                .map(|(&g, sol)| rhs[g] - sol.iter().zip(&local).map(|(a, b)| *a * *b).sum::<T>())
                .collect();
            let xg = schur.solve(&reduced);
            for (p, sol) in self.coupling.iter().enumerate() {
                for (xi, si) in x.iter_mut().zip(sol) {
                    *xi = *xi - xg[p] * *si;
                }
            }
            for (&g, v) in self.global.iter().zip(xg) {
                x[g] = v;
            }
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

impl<T: Real> HessianSink<T> for BlockLowRank<T> {
    fn add_diag(&mut self, i: usize, value: T) {
        let b = self.block_of[i];
        let local = i - self.starts[b];
        self.blocks[b].add(local, local, value);
    }

    fn add_outer(&mut self, offset: usize, v: &[T], coeff: T) {
        if coeff == T::zero() {
            return;
        }
        let Some(first) = v.iter().position(|x| *x != T::zero()) else {
            return;
        };
        let last = v.iter().rposition(|x| *x != T::zero()).unwrap();
        let (lo, hi) = (offset + first, offset + last);
        let b = self.block_of[lo];
        if self.block_of[hi] == b {
            let local = lo - self.starts[b];
            self.blocks[b].add_outer(local, &v[first..=last], coeff);
        } else {
            let sparse = v
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != T::zero())
                .map(|(i, x)| (offset + i, *x))
                .collect();
            self.low_rank.push((coeff, sparse));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn structured_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Three PD blocks and one scalar block that is only reached through
        // the coupling terms.
        let sizes = [4, 3, 5, 1];
        let mut h = BlockLowRank::<f64>::new(13, &sizes);
        let mut offset = 0;
        for &s in &sizes[..3] {
            for i in 0..s {
                h.add_diag(offset + i, 1.0 + rng.random::<f64>());
            }
            let v: Vec<f64> = (0..s).map(|_| rng.random::<f64>() - 0.5).collect();
            HessianSink::add_outer(&mut h, offset, &v, 2.0);
            offset += s;
        }
        for _ in 0..4 {
            let v: Vec<f64> = (0..13).map(|_| rng.random::<f64>() - 0.5).collect();
            HessianSink::add_outer(&mut h, 0, &v, 0.5 + rng.random::<f64>());
        }
        assert!(h.low_rank_terms() >= 4);
        let rhs: Vec<f64> = (0..13).map(|_| rng.random::<f64>()).collect();
        let x = h.solve_structured(&rhs).expect("structured path succeeds");
        let reference = regularized_cholesky(&h.to_dense()).unwrap().solve(&rhs);
        for (a, b) in x.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn single_block_is_plain_cholesky() {
        let mut h = BlockLowRank::<f64>::new(2, &[]);
        h.add_diag(0, 2.0);
        h.add_diag(1, 3.0);
        HessianSink::add_outer(&mut h, 0, &[1.0, 1.0], 1.0);
        assert_eq!(h.low_rank_terms(), 0);
        let x = h.solve(&[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
