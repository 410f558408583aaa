//! Reduced density matrices, entanglement asymmetry, energy, charge
//! statistics and eigenstate-overlap histograms.

use faer::{c64, Mat, MatRef, Side};

use crate::error::{check_dim, Error, Result};
use crate::evolution::SpectralDecomposition;
use crate::hilbert::{charge_of, Operator};
use crate::state::StateVector;

/// Eigenvalues of a density matrix below this are treated as exact zeros.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;
const ENTROPY_CUTOFF: f64 = 1e-14;

/// Density matrix of the block made of sites `0..sites`.
#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    sites: usize,
    matrix: Mat<c64>,
}

impl ReducedDensityMatrix {
    pub fn from_matrix(sites: usize, matrix: Mat<c64>) -> Result<Self> {
        check_dim(1 << sites, matrix.nrows())?;
        check_dim(1 << sites, matrix.ncols())?;
        Ok(ReducedDensityMatrix { sites, matrix })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += self.matrix[(i, j)].norm_sqr();
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &ReducedDensityMatrix) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        Ok(worst)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::numerical(format!("density matrix eigensolver: {e:?}")))
    }
}

/// `rho_A = Tr_{sites l..L}(|psi><psi|)`.
pub fn partial_trace(psi: &StateVector, sites: usize) -> Result<ReducedDensityMatrix> {
    let total = psi.sites();
    if sites == 0 || sites >= total {
        return Err(Error::invalid(format!(
            "subsystem size {sites} must lie in 1..{total}"
        )));
    }
    let rest = 1usize << (total - sites);
    let amps = psi.amplitudes();
    // rows: subsystem index, cols: environment index
    let psi_mat = Mat::<c64>::from_fn(1 << sites, rest, |a, b| amps[a * rest + b]);
    let matrix = &psi_mat * psi_mat.adjoint();
    Ok(ReducedDensityMatrix { sites, matrix })
}

fn entropy_of_spectrum(values: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &v in values {
        if v < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::numerical(format!(
                "density matrix has eigenvalue {v:e}"
            )));
        }
        if v > ENTROPY_CUTOFF {
            s -= v * v.ln();
        }
    }
    Ok(s)
}

/// `-Tr(rho ln rho)` in nats.
pub fn von_neumann_entropy(rho: &ReducedDensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues()?)
}

/// Charge of each subsystem basis state.
fn subsystem_charges(sites: usize) -> Vec<i32> {
    (0..1usize << sites).map(|a| charge_of(sites, a)).collect()
}

/// `sum_q Pi_q rho Pi_q`: drops coherences between subsystem charge sectors.
pub fn symmetry_resolved_rdm(rho: &ReducedDensityMatrix) -> ReducedDensityMatrix {
    let q = subsystem_charges(rho.sites);
    let matrix = Mat::from_fn(rho.dim(), rho.dim(), |i, j| {
        if q[i] == q[j] {
            rho.matrix[(i, j)]
        } else {
            c64::new(0.0, 0.0)
        }
    });
    ReducedDensityMatrix {
        sites: rho.sites,
        matrix,
    }
}

/// Entropy of the symmetry-resolved matrix, one sector block at a time.
fn resolved_entropy(rho: &ReducedDensityMatrix) -> Result<f64> {
    let q = subsystem_charges(rho.sites);
    let mut total = 0.0;
    for k in 0..=rho.sites {
        let charge = 2 * k as i32 - rho.sites as i32;
        let idx: Vec<usize> = (0..rho.dim()).filter(|&i| q[i] == charge).collect();
        let block = Mat::<c64>::from_fn(idx.len(), idx.len(), |i, j| rho.matrix[(idx[i], idx[j])]);
        let values = if idx.len() == 1 {
            vec![block[(0, 0)].re]
        } else {
            block
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::numerical(format!("sector eigensolver: {e:?}")))?
        };
        total += entropy_of_spectrum(&values)?;
    }
    Ok(total)
}

/// `S(rho_{A,Q}) - S(rho_A)` for an already reduced matrix.
pub fn asymmetry_of(rho: &ReducedDensityMatrix) -> Result<f64> {
    Ok(resolved_entropy(rho)? - von_neumann_entropy(rho)?)
}

/// Entanglement asymmetry of the first `sites` sites.
pub fn entanglement_asymmetry(psi: &StateVector, sites: usize) -> Result<f64> {
    asymmetry_of(&partial_trace(psi, sites)?)
}

/// `<psi|H|psi>`; fails if the imaginary part exceeds `1e-10`.
pub fn energy_expectation(psi: &StateVector, h: &Operator) -> Result<f64> {
    check_dim(h.dim(), psi.dim())?;
    let hpsi = h.apply(psi.amplitudes())?;
    let z: c64 = psi
        .amplitudes()
        .iter()
        .zip(&hpsi)
        .map(|(a, b)| a.conj() * b)
        .sum();
    if z.im.abs() > 1e-10 {
        return Err(Error::numerical(format!(
            "expectation value has imaginary part {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `(<Q>, <Q^2>)` of the total charge.
pub fn charge_moments(psi: &StateVector) -> (f64, f64) {
    let l = psi.sites();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        let q = charge_of(l, i) as f64;
        m1 += p * q;
        m2 += p * q * q;
    }
    (m1, m2)
}

/// `<Q^2> - <Q>^2`.
pub fn charge_variance(psi: &StateVector) -> f64 {
    let (m1, m2) = charge_moments(psi);
    m2 - m1 * m1
}

/// Weight of a state in each total-charge sector.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeDistribution {
    sites: usize,
    /// `probs[k]` is the weight of charge `2k - L`.
    probs: Vec<f64>,
}

impl ChargeDistribution {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn charges(&self) -> impl Iterator<Item = i32> + '_ {
        (0..=self.sites).map(move |k| 2 * k as i32 - self.sites as i32)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, charge: i32) -> f64 {
        let k = charge + self.sites as i32;
        if k < 0 || k % 2 != 0 || k as usize / 2 > self.sites {
            0.0
        } else {
            self.probs[k as usize / 2]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.charges().zip(self.probs.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(q, p)| q as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.iter().map(|(q, p)| p * (q as f64 - m).powi(2)).sum()
    }
}

/// `P_Q = sum_{i in sector Q} |psi_i|^2`.
pub fn charge_sector_probs(psi: &StateVector) -> ChargeDistribution {
    let l = psi.sites();
    let mut probs = vec![0.0; l + 1];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        probs[l - i.count_ones() as usize] += a.norm_sqr();
    }
    ChargeDistribution { sites: l, probs }
}

/// Eigenstate overlap mass `sum |c_n|^2` per energy bin.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapHistogram {
    pub bin_edges: Vec<f64>,
    pub weights: Vec<f64>,
}

impl OverlapHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted mean of the bin centers.
    pub fn mean_energy(&self) -> f64 {
        self.centers()
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| c * w)
            .sum::<f64>()
            / self.total()
    }
}

/// `bins + 1` uniform edges spanning the spectrum of `sd`.
pub fn spectrum_bins(sd: &SpectralDecomposition, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let e = sd.eigenvalues();
    let (lo, mut hi) = (e[0], e[e.len() - 1]);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    edges[bins] = hi;
    Ok(edges)
}

/// Bins `|<n|psi>|^2` by eigenvalue `E_n`. The last bin is closed on the right.
pub fn eigenstate_overlap_hist(
    psi: &StateVector,
    sd: &SpectralDecomposition,
    bin_edges: &[f64],
) -> Result<OverlapHistogram> {
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("bin edges must be strictly increasing with at least two entries"));
    }
    let coeffs = sd.coefficients(psi)?;
    let nbins = bin_edges.len() - 1;
    let (lo, hi) = (bin_edges[0], bin_edges[nbins]);
    let mut weights = vec![0.0; nbins];
    for (c, &e) in coeffs.iter().zip(sd.eigenvalues()) {
        if e < lo || e > hi {
            return Err(Error::invalid(format!(
                "eigenvalue {e} outside bin range [{lo}, {hi}]"
            )));
        }
        // first edge strictly greater than e, minus one
        let b = bin_edges.partition_point(|&x| x <= e).saturating_sub(1).min(nbins - 1);
        weights[b] += c.norm_sqr();
    }
    Ok(OverlapHistogram {
        bin_edges: bin_edges.to_vec(),
        weights,
    })
}
