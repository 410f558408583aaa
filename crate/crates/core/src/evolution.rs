//! Spectral decomposition and exact real/imaginary-time propagation.
//!
//! Hamiltonians of this model split into independent blocks (charge sectors
//! at `gamma = 1`, spin-flip parity otherwise). The decomposition detects
//! the blocks from the sparsity pattern and diagonalizes each one on its
//! own, using the real symmetric solver whenever a block has no imaginary
//! part. Propagation over a whole observation grid is a single matrix
//! product per block.

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{hamiltonian_terms, ModelParams, Operator, PauliSum};
use crate::state::StateVector;

/// Tolerated `max |H - H^dagger|` before decomposition is refused.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    Real,
    Imaginary,
}

#[derive(Clone, Debug)]
enum BlockVectors {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

#[derive(Clone, Debug)]
struct Block {
    /// Basis states spanned by the block, ascending.
    indices: Vec<usize>,
    /// Global eigenvalue position of each block column.
    positions: Vec<usize>,
    vectors: BlockVectors,
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<f64>,
    blocks: Vec<Block>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }

    /// Components as ascending index lists, ordered by smallest member.
    fn components(mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

fn blocks_of_operator(h: &Operator) -> Vec<Vec<usize>> {
    let n = h.dim();
    let m = h.matrix();
    let mut uf = UnionFind::new(n);
    let zero = c64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != zero || m[(j, i)] != zero {
                uf.union(i, j);
            }
        }
    }
    uf.components()
}

/// Net column entries of a Pauli sum; cancelling terms leave no link.
fn column_entries(terms: &PauliSum, col: usize, buf: &mut Vec<(usize, c64)>) {
    buf.clear();
    terms.for_each_in_column(col, |row, v| buf.push((row, v)));
    buf.sort_by_key(|&(r, _)| r);
    let mut w = 0;
    for k in 0..buf.len() {
        if w > 0 && buf[w - 1].0 == buf[k].0 {
            let v = buf[k].1;
            buf[w - 1].1 += v;
        } else {
            buf[w] = buf[k];
            w += 1;
        }
    }
    buf.truncate(w);
    buf.retain(|&(_, v)| v != c64::new(0.0, 0.0));
}

fn blocks_of_terms(terms: &PauliSum) -> Vec<Vec<usize>> {
    let n = 1usize << terms.sites;
    let mut uf = UnionFind::new(n);
    let mut buf = Vec::new();
    for col in 0..n {
        column_entries(terms, col, &mut buf);
        for &(row, _) in &buf {
            uf.union(row, col);
        }
    }
    uf.components()
}

fn block_from_terms(terms: &PauliSum, indices: &[usize], lookup: &mut [usize]) -> Mat<c64> {
    for (pos, &i) in indices.iter().enumerate() {
        lookup[i] = pos;
    }
    let nb = indices.len();
    let mut m = Mat::<c64>::zeros(nb, nb);
    let mut buf = Vec::new();
    for (c, &col) in indices.iter().enumerate() {
        column_entries(terms, col, &mut buf);
        for &(row, v) in &buf {
            m[(lookup[row], c)] = v;
        }
    }
    m
}

fn as_real(block: &Mat<c64>) -> Option<Mat<f64>> {
    let n = block.nrows();
    for j in 0..n {
        for i in 0..n {
            if block[(i, j)].im != 0.0 {
                return None;
            }
        }
    }
    Some(Mat::from_fn(n, n, |i, j| block[(i, j)].re))
}

fn evd_failure(e: impl std::fmt::Debug) -> Error {
    Error::numerical(format!("eigensolver did not converge: {e:?}"))
}

fn eigh_block(block: &Mat<c64>) -> Result<(Vec<f64>, BlockVectors)> {
    if let Some(real) = as_real(block) {
        let evd = real.self_adjoint_eigen(Side::Lower).map_err(evd_failure)?;
        let values = evd.S().column_vector().iter().copied().collect();
        Ok((values, BlockVectors::Real(evd.U().to_owned())))
    } else {
        let evd = block.self_adjoint_eigen(Side::Lower).map_err(evd_failure)?;
        let values = evd.S().column_vector().iter().map(|z| z.re).collect();
        Ok((values, BlockVectors::Complex(evd.U().to_owned())))
    }
}

fn eigvalsh_block(block: &Mat<c64>) -> Result<Vec<f64>> {
    if let Some(real) = as_real(block) {
        real.self_adjoint_eigenvalues(Side::Lower).map_err(evd_failure)
    } else {
        block
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(evd_failure)
    }
}

fn assemble(dim: usize, parts: Vec<(Vec<usize>, Vec<f64>, BlockVectors)>) -> SpectralDecomposition {
    let mut order: Vec<(f64, usize, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(b, (_, vals, _))| vals.iter().enumerate().map(move |(c, &e)| (e, b, c)))
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut blocks: Vec<Block> = parts
        .into_iter()
        .map(|(indices, vals, vectors)| Block {
            positions: vec![0; vals.len()],
            indices,
            vectors,
        })
        .collect();
    let mut eigenvalues = Vec::with_capacity(dim);
    for (pos, &(e, b, c)) in order.iter().enumerate() {
        blocks[b].positions[c] = pos;
        eigenvalues.push(e);
    }
    SpectralDecomposition {
        dim,
        eigenvalues,
        blocks,
    }
}

/// Full decomposition of a dense Hermitian operator.
pub fn spectral_decompose(h: &Operator) -> Result<SpectralDecomposition> {
    let err = h.hermiticity_error();
    if !(err <= HERMITICITY_TOL) {
        return Err(Error::NotHermitian(err));
    }
    let mut parts = Vec::new();
    for indices in blocks_of_operator(h) {
        let block = h.restrict(&indices).into_matrix();
        let (vals, vecs) = eigh_block(&block)?;
        parts.push((indices, vals, vecs));
    }
    Ok(assemble(h.dim(), parts))
}

/// Decomposition of a Pauli sum without forming the full dense matrix.
pub fn decompose_terms(terms: &PauliSum) -> Result<SpectralDecomposition> {
    let dim = 1usize << terms.sites;
    let mut lookup = vec![0usize; dim];
    let mut parts = Vec::new();
    for indices in blocks_of_terms(terms) {
        let block = block_from_terms(terms, &indices, &mut lookup);
        let (vals, vecs) = eigh_block(&block)?;
        parts.push((indices, vals, vecs));
    }
    Ok(assemble(dim, parts))
}

/// Decomposition of the model Hamiltonian for `p`.
pub fn decompose_model(p: &ModelParams) -> Result<SpectralDecomposition> {
    decompose_terms(&hamiltonian_terms(p)?)
}

/// Ascending spectrum of a dense Hermitian operator.
pub fn eigenvalues_of(h: &Operator) -> Result<Vec<f64>> {
    let err = h.hermiticity_error();
    if !(err <= HERMITICITY_TOL) {
        return Err(Error::NotHermitian(err));
    }
    let mut all = Vec::with_capacity(h.dim());
    for indices in blocks_of_operator(h) {
        all.extend(eigvalsh_block(&h.restrict(&indices).into_matrix())?);
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Sizes of the independently diagonalized blocks.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// Columns are states; returns eigenbasis coefficients `<n|psi>`.
    fn to_eigenbasis(&self, states: MatRef<'_, c64>) -> Mat<c64> {
        let t = states.ncols();
        let mut out = Mat::<c64>::zeros(self.dim, t);
        for block in &self.blocks {
            let nb = block.indices.len();
            match &block.vectors {
                BlockVectors::Real(v) => {
                    let x = Mat::<f64>::from_fn(nb, 2 * t, |r, c| {
                        let z = states[(block.indices[r], c % t)];
                        if c < t {
                            z.re
                        } else {
                            z.im
                        }
                    });
                    let y = v.transpose() * &x;
                    for (r, &pos) in block.positions.iter().enumerate() {
                        for c in 0..t {
                            out[(pos, c)] = c64::new(y[(r, c)], y[(r, t + c)]);
                        }
                    }
                }
                BlockVectors::Complex(v) => {
                    let x = Mat::<c64>::from_fn(nb, t, |r, c| states[(block.indices[r], c)]);
                    let y = v.adjoint() * &x;
                    for (r, &pos) in block.positions.iter().enumerate() {
                        for c in 0..t {
                            out[(pos, c)] = y[(r, c)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`Self::to_eigenbasis`].
    fn eigenbasis_to_computational(&self, coeffs: MatRef<'_, c64>) -> Mat<c64> {
        let t = coeffs.ncols();
        let mut out = Mat::<c64>::zeros(self.dim, t);
        for block in &self.blocks {
            let nb = block.indices.len();
            match &block.vectors {
                BlockVectors::Real(v) => {
                    let x = Mat::<f64>::from_fn(nb, 2 * t, |r, c| {
                        let z = coeffs[(block.positions[r], c % t)];
                        if c < t {
                            z.re
                        } else {
                            z.im
                        }
                    });
                    let y = v * &x;
                    for (r, &idx) in block.indices.iter().enumerate() {
                        for c in 0..t {
                            out[(idx, c)] = c64::new(y[(r, c)], y[(r, t + c)]);
                        }
                    }
                }
                BlockVectors::Complex(v) => {
                    let x = Mat::<c64>::from_fn(nb, t, |r, c| coeffs[(block.positions[r], c)]);
                    let y = v * &x;
                    for (r, &idx) in block.indices.iter().enumerate() {
                        for c in 0..t {
                            out[(idx, c)] = y[(r, c)];
                        }
                    }
                }
            }
        }
        out
    }

    fn check_states(&self, states: &[StateVector]) -> Result<()> {
        for s in states {
            check_dim(self.dim, s.dim())?;
        }
        Ok(())
    }

    fn stack(&self, states: &[StateVector]) -> Mat<c64> {
        Mat::from_fn(self.dim, states.len(), |r, c| states[c].amplitudes()[r])
    }

    /// Overlaps `c_n = <n|psi>` in ascending-energy order.
    pub fn coefficients(&self, psi: &StateVector) -> Result<Vec<c64>> {
        self.check_states(std::slice::from_ref(psi))?;
        let c = self.to_eigenbasis(self.stack(std::slice::from_ref(psi)).as_ref());
        Ok(c.col(0).iter().copied().collect())
    }

    /// State with the given eigenbasis coefficients.
    pub fn synthesize(&self, coeffs: &[c64]) -> Result<StateVector> {
        check_dim(self.dim, coeffs.len())?;
        let c = Mat::from_fn(self.dim, 1, |r, _| coeffs[r]);
        StateVector::new(self.eigenbasis_to_computational(c.as_ref()).col(0).iter().copied().collect())
    }

    /// `sum_n |c_n|^2 E_n` for each state.
    pub fn expectations(&self, states: &[StateVector]) -> Result<Vec<f64>> {
        self.check_states(states)?;
        if states.is_empty() {
            return Ok(Vec::new());
        }
        let c = self.to_eigenbasis(self.stack(states).as_ref());
        Ok((0..states.len())
            .map(|k| {
                c.col(k)
                    .iter()
                    .zip(&self.eigenvalues)
                    .map(|(z, e)| z.norm_sqr() * e)
                    .sum()
            })
            .collect())
    }

    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        Ok(self.expectations(std::slice::from_ref(psi))?[0])
    }

    pub fn eigenvector(&self, n: usize) -> Result<StateVector> {
        if n >= self.dim {
            return Err(Error::invalid(format!("eigenvector {n} out of range")));
        }
        let mut e = vec![c64::new(0.0, 0.0); self.dim];
        e[n] = c64::new(1.0, 0.0);
        self.synthesize(&e)
    }

    /// Dense eigenvector matrix; column `n` belongs to `eigenvalues()[n]`.
    pub fn eigenvector_matrix(&self) -> Mat<c64> {
        self.eigenbasis_to_computational(Mat::<c64>::identity(self.dim, self.dim).as_ref())
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> Operator {
        let v = self.eigenvector_matrix();
        let scaled = Mat::from_fn(self.dim, self.dim, |i, j| v[(i, j)] * self.eigenvalues[j]);
        Operator::from_matrix(&scaled * v.adjoint()).expect("square")
    }

    /// Evolves `psi` by each duration in `times` under one kind of time.
    pub fn evolve_many(
        &self,
        psi: &StateVector,
        kind: TimeKind,
        times: &[f64],
    ) -> Result<Vec<StateVector>> {
        check_dim(self.dim, psi.dim())?;
        for &t in times {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid(format!("evolution time {t} must be finite and >= 0")));
            }
        }
        if kind == TimeKind::Imaginary && psi.norm() == 0.0 {
            return Err(Error::invalid("cannot project a zero state in imaginary time"));
        }
        let pending: Vec<usize> = (0..times.len()).filter(|&k| times[k] != 0.0).collect();
        let mut out: Vec<Option<StateVector>> = times
            .iter()
            .map(|&t| (t == 0.0).then(|| psi.clone()))
            .collect();
        if pending.is_empty() {
            return Ok(out.into_iter().map(Option::unwrap).collect());
        }

        let c0 = self.coefficients(psi)?;
        // Exponents are measured from the lowest populated level so that
        // e^{-(E - E_ref) tau} never underflows to an all-zero vector.
        let e_ref = match kind {
            TimeKind::Real => 0.0,
            TimeKind::Imaginary => c0
                .iter()
                .zip(&self.eigenvalues)
                .find(|(z, _)| z.norm_sqr() > 0.0)
                .map(|(_, &e)| e)
                .ok_or_else(|| Error::numerical("state has no spectral weight"))?,
        };
        let coeffs = Mat::<c64>::from_fn(self.dim, pending.len(), |n, k| {
            let t = times[pending[k]];
            let e = self.eigenvalues[n];
            if c0[n] == c64::new(0.0, 0.0) {
                return c0[n];
            }
            let factor = match kind {
                TimeKind::Real => c64::from_polar(1.0, -e * t),
                TimeKind::Imaginary => c64::new((-(e - e_ref) * t).exp(), 0.0),
            };
            c0[n] * factor
        });
        let states = self.eigenbasis_to_computational(coeffs.as_ref());
        for (k, &slot) in pending.iter().enumerate() {
            let psi_t = StateVector::new(states.col(k).iter().copied().collect())?;
            out[slot] = Some(match kind {
                TimeKind::Real => psi_t,
                TimeKind::Imaginary => psi_t.normalized()?,
            });
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }
}

/// `V e^{-iEt} V^dagger psi`.
pub fn propagate_real(psi: &StateVector, sd: &SpectralDecomposition, t: f64) -> Result<StateVector> {
    Ok(sd.evolve_many(psi, TimeKind::Real, &[t])?.remove(0))
}

/// `V e^{-E tau} V^dagger psi`, renormalized.
pub fn propagate_imag(
    psi: &StateVector,
    sd: &SpectralDecomposition,
    tau: f64,
) -> Result<StateVector> {
    Ok(sd.evolve_many(psi, TimeKind::Imaginary, &[tau])?.remove(0))
}

/// One piece of a piecewise-constant protocol.
#[derive(Clone, Debug)]
pub struct ProtocolStage {
    pub params: ModelParams,
    /// May be `f64::INFINITY` for the final stage.
    pub duration: f64,
    pub kind: TimeKind,
}

/// A stage whose Hamiltonian is already decomposed.
#[derive(Clone, Copy, Debug)]
pub struct StagePlan<'a> {
    pub decomposition: &'a SpectralDecomposition,
    pub duration: f64,
    pub kind: TimeKind,
}

fn validate_durations(durations: impl Iterator<Item = f64>, count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::invalid("protocol needs at least one stage"));
    }
    for (k, d) in durations.enumerate() {
        let last = k + 1 == count;
        let ok = d >= 0.0 && (d.is_finite() || (last && d == f64::INFINITY));
        if !ok {
            return Err(Error::invalid(format!("stage {k} has invalid duration {d}")));
        }
    }
    Ok(())
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    for (k, &t) in grid.iter().enumerate() {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid(format!("grid time {t} must be finite and >= 0")));
        }
        if k > 0 && t <= grid[k - 1] {
            return Err(Error::invalid("grid must be strictly increasing"));
        }
    }
    Ok(())
}

/// Evolves `psi0` through pre-decomposed stages, returning the state at each
/// grid time. A grid time equal to a stage boundary is reported from the
/// earlier stage.
pub fn run_plan(psi0: &StateVector, plan: &[StagePlan<'_>], grid: &[f64]) -> Result<Vec<StateVector>> {
    validate_durations(plan.iter().map(|s| s.duration), plan.len())?;
    validate_grid(grid)?;
    for stage in plan {
        check_dim(psi0.dim(), stage.decomposition.dim())?;
    }

    let mut out = Vec::with_capacity(grid.len());
    let mut state = psi0.clone();
    let mut start = 0.0;
    let mut next = 0;
    for (k, stage) in plan.iter().enumerate() {
        if next == grid.len() {
            break;
        }
        let end = start + stage.duration;
        let tol = 1e-12 * end.abs().max(1.0);
        let mut local = Vec::new();
        while next < grid.len() && grid[next] <= end + tol {
            local.push((grid[next] - start).max(0.0));
            next += 1;
        }
        out.extend(stage.decomposition.evolve_many(&state, stage.kind, &local)?);
        if next < grid.len() && k + 1 < plan.len() {
            state = stage
                .decomposition
                .evolve_many(&state, stage.kind, &[stage.duration])?
                .remove(0);
            start = end;
        }
    }
    if next < grid.len() {
        let total: f64 = plan.iter().map(|s| s.duration).sum();
        return Err(Error::invalid(format!(
            "grid time {} exceeds total protocol duration {total}",
            grid[next]
        )));
    }
    Ok(out)
}

/// Decomposes each stage Hamiltonian once and evolves along the grid.
pub fn run_protocol(
    psi0: &StateVector,
    stages: &[ProtocolStage],
    grid: &[f64],
) -> Result<Vec<(f64, StateVector)>> {
    validate_durations(stages.iter().map(|s| s.duration), stages.len())?;
    let sites = stages[0].params.sites;
    if stages.iter().any(|s| s.params.sites != sites) {
        return Err(Error::invalid("all stages must share the chain length"));
    }
    let decomps = stages
        .iter()
        .map(|s| decompose_model(&s.params))
        .collect::<Result<Vec<_>>>()?;
    let plan: Vec<StagePlan<'_>> = stages
        .iter()
        .zip(&decomps)
        .map(|(s, d)| StagePlan {
            decomposition: d,
            duration: s.duration,
            kind: s.kind,
        })
        .collect();
    let states = run_plan(psi0, &plan, grid)?;
    Ok(grid.iter().copied().zip(states).collect())
}
