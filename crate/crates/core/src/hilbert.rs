//! Computational basis, charge sectors and dense operator builders.
//!
//! Basis index `i` encodes a spin string with site 0 stored in the most
//! significant of the `L` bits. A zero bit is the `+1` eigenstate of
//! `sigma^z`, so the total charge of index `i` is `L - 2 * popcount(i)`.

use faer::{c64, Mat, MatRef};

use crate::error::{check_dim, Error, Result};

/// Largest chain handled by the dense builders (dim 16384).
pub const MAX_SITES: usize = 14;

pub const DEFAULT_MU: f64 = -0.5;
pub const DEFAULT_DISORDER: f64 = 1.0;

/// Couplings of the disordered XYZ chain
/// `H = -sum_j (XX + gamma YY + mu ZZ)_{j,j+1} + sum_j h_j Z_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub sites: usize,
    pub gamma: f64,
    pub mu: f64,
    /// Half-width `W` of the uniform field distribution.
    pub disorder: f64,
    pub fields: Vec<f64>,
    pub periodic: bool,
}

impl ModelParams {
    /// Clean periodic chain with the default `mu` and `W`.
    pub fn new(sites: usize, gamma: f64) -> Self {
        ModelParams {
            sites,
            gamma,
            mu: DEFAULT_MU,
            disorder: DEFAULT_DISORDER,
            fields: vec![0.0; sites],
            periodic: true,
        }
    }

    pub fn with_fields(mut self, fields: Vec<f64>) -> Self {
        self.fields = fields;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        ModelParams {
            gamma,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    pub fn is_symmetric(&self) -> bool {
        self.gamma == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 3 {
            return Err(Error::invalid(format!(
                "chain needs at least 3 sites, got {}",
                self.sites
            )));
        }
        if self.sites > MAX_SITES {
            return Err(Error::invalid(format!(
                "chain of {} sites exceeds the dense limit of {MAX_SITES}",
                self.sites
            )));
        }
        if self.fields.len() != self.sites {
            return Err(Error::invalid(format!(
                "expected {} field values, got {}",
                self.sites,
                self.fields.len()
            )));
        }
        if !(self.gamma.is_finite() && self.mu.is_finite()) {
            return Err(Error::invalid("couplings must be finite"));
        }
        if !(self.disorder.is_finite() && self.disorder >= 0.0) {
            return Err(Error::invalid("disorder strength must be finite and >= 0"));
        }
        if self.fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("fields must be finite"));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds `(j, j+1)`, closing the ring when periodic.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.sites;
        let count = if self.periodic { n } else { n - 1 };
        (0..count).map(|j| (j, (j + 1) % n)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// `coeff * P_{s1} P_{s2} ...` with distinct sites.
#[derive(Clone, Debug)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, Pauli)>,
}

/// Real-weighted sum of Pauli strings on a chain of `sites` spins.
#[derive(Clone, Debug)]
pub struct PauliSum {
    pub sites: usize,
    pub terms: Vec<PauliTerm>,
}

impl PauliSum {
    fn new(sites: usize) -> Self {
        PauliSum {
            sites,
            terms: Vec::new(),
        }
    }

    fn push(&mut self, coeff: f64, ops: &[(usize, Pauli)]) {
        if coeff != 0.0 {
            self.terms.push(PauliTerm {
                coeff,
                ops: ops.to_vec(),
            });
        }
    }

    /// Calls `f(row, value)` for every term acting on basis state `col`.
    /// Rows may repeat; callers accumulate.
    pub fn for_each_in_column(&self, col: usize, mut f: impl FnMut(usize, c64)) {
        for term in &self.terms {
            let (row, phase) = apply_string(self.sites, col, &term.ops);
            f(row, phase * term.coeff);
        }
    }

    pub fn to_operator(&self) -> Operator {
        let dim = 1usize << self.sites;
        let mut m = Mat::<c64>::zeros(dim, dim);
        for col in 0..dim {
            self.for_each_in_column(col, |row, v| m[(row, col)] += v);
        }
        Operator { matrix: m }
    }
}

#[inline]
fn bit_of(sites: usize, index: usize, site: usize) -> usize {
    (index >> (sites - 1 - site)) & 1
}

/// Acts with a Pauli string on a basis state, returning the image state and
/// its phase.
fn apply_string(sites: usize, index: usize, ops: &[(usize, Pauli)]) -> (usize, c64) {
    let mut out = index;
    let mut phase = c64::new(1.0, 0.0);
    for &(site, p) in ops.iter().rev() {
        let shift = sites - 1 - site;
        let bit = (out >> shift) & 1;
        match p {
            Pauli::X => out ^= 1 << shift,
            Pauli::Y => {
                // Y|0> = i|1>, Y|1> = -i|0>
                phase *= if bit == 0 {
                    c64::new(0.0, 1.0)
                } else {
                    c64::new(0.0, -1.0)
                };
                out ^= 1 << shift;
            }
            Pauli::Z => {
                if bit == 1 {
                    phase = -phase;
                }
            }
        }
    }
    (out, phase)
}

pub fn hamiltonian_terms(p: &ModelParams) -> Result<PauliSum> {
    p.validate()?;
    use Pauli::*;
    let mut sum = PauliSum::new(p.sites);
    for (j, k) in p.bonds() {
        sum.push(-1.0, &[(j, X), (k, X)]);
        sum.push(-p.gamma, &[(j, Y), (k, Y)]);
        sum.push(-p.mu, &[(j, Z), (k, Z)]);
    }
    for (j, &h) in p.fields.iter().enumerate() {
        sum.push(h, &[(j, Z)]);
    }
    Ok(sum)
}

/// Closed form of `U_theta^dagger H U_theta` expanded in Pauli strings,
/// from `U^dagger X U = cos X + sin Z` and `U^dagger Z U = cos Z - sin X`.
pub fn transformed_terms(p: &ModelParams, theta: f64) -> Result<PauliSum> {
    p.validate()?;
    use Pauli::*;
    let (s, c) = theta.sin_cos();
    let xx = c * c + p.mu * s * s;
    let zz = s * s + p.mu * c * c;
    let cross = (1.0 - p.mu) * s * c;
    let mut sum = PauliSum::new(p.sites);
    for (j, k) in p.bonds() {
        sum.push(-xx, &[(j, X), (k, X)]);
        sum.push(-p.gamma, &[(j, Y), (k, Y)]);
        sum.push(-zz, &[(j, Z), (k, Z)]);
        sum.push(-cross, &[(j, X), (k, Z)]);
        sum.push(-cross, &[(j, Z), (k, X)]);
    }
    for (j, &h) in p.fields.iter().enumerate() {
        sum.push(h * c, &[(j, Z)]);
        sum.push(-h * s, &[(j, X)]);
    }
    Ok(sum)
}

/// Dense complex square matrix: Hamiltonians, rotations, projectors.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: Mat<c64>,
}

impl Operator {
    pub fn from_matrix(matrix: Mat<c64>) -> Result<Self> {
        check_dim(matrix.nrows(), matrix.ncols())?;
        Ok(Operator { matrix })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        Operator {
            matrix: Mat::from_fn(dim, dim, f),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Operator {
            matrix: Mat::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Mat::<c64>::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c64::new(v, 0.0);
        }
        Operator { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            matrix: self.matrix.adjoint().to_owned(),
        }
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Operator {
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn commutator(&self, rhs: &Operator) -> Result<Operator> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Operator {
            matrix: &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix,
        })
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Operator) -> Result<f64> {
        check_dim(self.dim(), rhs.dim())?;
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.matrix[(i, j)] - rhs.matrix[(i, j)]).norm());
            }
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max(self.matrix[(i, j)].norm());
            }
        }
        worst
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |A A^dagger - 1|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = Operator {
            matrix: &self.matrix * self.matrix.adjoint(),
        };
        prod.max_abs_diff(&Operator::identity(self.dim()))
            .expect("square by construction")
    }

    pub fn apply(&self, v: &[c64]) -> Result<Vec<c64>> {
        let n = self.dim();
        check_dim(n, v.len())?;
        let mut out = vec![c64::new(0.0, 0.0); n];
        for (j, &x) in v.iter().enumerate() {
            if x == c64::new(0.0, 0.0) {
                continue;
            }
            let col = self.matrix.col(j);
            for (o, a) in out.iter_mut().zip(col.iter()) {
                *o += *a * x;
            }
        }
        Ok(out)
    }

    /// Principal submatrix on `indices`.
    pub fn restrict(&self, indices: &[usize]) -> Operator {
        Operator::from_fn(indices.len(), |i, j| self.matrix[(indices[i], indices[j])])
    }
}

pub fn build_hamiltonian(p: &ModelParams) -> Result<Operator> {
    Ok(hamiltonian_terms(p)?.to_operator())
}

pub fn build_transformed_hamiltonian(p: &ModelParams, theta: f64) -> Result<Operator> {
    Ok(transformed_terms(p, theta)?.to_operator())
}

/// Total `sigma^z` eigenvalue of a basis state.
#[inline]
pub fn charge_of(sites: usize, index: usize) -> i32 {
    sites as i32 - 2 * index.count_ones() as i32
}

pub fn build_charge_operator(sites: usize) -> Operator {
    let values: Vec<f64> = (0..1usize << sites)
        .map(|i| charge_of(sites, i) as f64)
        .collect();
    Operator::diagonal(&values)
}

/// Basis states sharing one total-charge eigenvalue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChargeSector {
    pub charge: i32,
    pub indices: Vec<usize>,
}

impl ChargeSector {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// All sectors in ascending charge, indices ascending within each.
pub fn charge_sectors(sites: usize) -> Vec<ChargeSector> {
    let mut sectors: Vec<ChargeSector> = (0..=sites)
        .map(|k| ChargeSector {
            charge: 2 * k as i32 - sites as i32,
            indices: Vec::new(),
        })
        .collect();
    for i in 0..1usize << sites {
        let q = charge_of(sites, i);
        sectors[((q + sites as i32) / 2) as usize].indices.push(i);
    }
    sectors
}

pub fn charge_sector(sites: usize, charge: i32) -> Result<ChargeSector> {
    let n = sites as i32;
    if charge < -n || charge > n || (charge + n) % 2 != 0 {
        return Err(Error::invalid(format!(
            "charge {charge} impossible on {sites} sites"
        )));
    }
    let indices = (0..1usize << sites)
        .filter(|&i| charge_of(sites, i) == charge)
        .collect();
    Ok(ChargeSector { charge, indices })
}

/// Single-site matrix of `exp(-i theta/2 sigma^y)`, row-major.
pub fn rotation_2x2(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c, -s], [s, c]]
}

/// `U_theta = exp(-i theta/2 sum_j sigma^y_j)` as the L-fold tensor power.
pub fn build_rotation(sites: usize, theta: f64) -> Operator {
    let r = rotation_2x2(theta);
    let dim = 1usize << sites;
    Operator::from_fn(dim, |i, j| {
        let mut v = 1.0;
        for site in 0..sites {
            v *= r[bit_of(sites, i, site)][bit_of(sites, j, site)];
            if v == 0.0 {
                break;
            }
        }
        c64::new(v, 0.0)
    })
}

/// `H` restricted to one charge sector, built without the full matrix.
pub fn hamiltonian_sector_block(p: &ModelParams, sector: &ChargeSector) -> Result<Operator> {
    let terms = hamiltonian_terms(p)?;
    Ok(restrict_terms(&terms, &sector.indices))
}

pub(crate) fn restrict_terms(terms: &PauliSum, indices: &[usize]) -> Operator {
    let n = indices.len();
    let mut lookup = std::collections::HashMap::with_capacity(n);
    for (pos, &i) in indices.iter().enumerate() {
        lookup.insert(i, pos);
    }
    let mut m = Mat::<c64>::zeros(n, n);
    for (col, &i) in indices.iter().enumerate() {
        terms.for_each_in_column(i, |row, v| {
            if let Some(&r) = lookup.get(&row) {
                m[(r, col)] += v;
            }
        });
    }
    Operator { matrix: m }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(n: usize) -> Vec<f64> {
        (0..n).map(|j| (j as f64 * 1.7).sin() * 0.9).collect()
    }

    #[test]
    fn ferromagnet_diagonal_element() {
        let h = build_hamiltonian(&ModelParams::new(3, 1.0)).unwrap();
        assert!((h.get(0, 0).re - 1.5).abs() < 1e-15);
        assert_eq!(h.get(0, 0).im, 0.0);
    }

    #[test]
    fn all_up_energy_includes_fields() {
        let f = fields(5);
        let p = ModelParams::new(5, 0.3).with_fields(f.clone());
        let h = build_hamiltonian(&p).unwrap();
        let expect = 0.5 * 5.0 + f.iter().sum::<f64>();
        assert!((h.get(0, 0).re - expect).abs() < 1e-13);
    }

    #[test]
    fn rejects_short_chain_and_bad_fields() {
        assert!(build_hamiltonian(&ModelParams::new(2, 1.0)).is_err());
        let p = ModelParams::new(4, 1.0).with_fields(vec![0.0; 3]);
        assert!(matches!(
            build_hamiltonian(&p),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn symmetric_hamiltonian_commutes_with_charge() {
        for &(n, gamma) in &[(6usize, 1.0f64), (6, 0.4)] {
            let p = ModelParams::new(n, gamma).with_fields(fields(n));
            let h = build_hamiltonian(&p).unwrap();
            assert!(h.hermiticity_error() < 1e-12);
            let comm = h.commutator(&build_charge_operator(n)).unwrap().max_abs();
            if gamma == 1.0 {
                assert!(comm < 1e-12, "{comm}");
            } else {
                assert!(comm > 0.1, "{comm}");
            }
        }
    }

    #[test]
    fn charge_operator_small() {
        let q = build_charge_operator(2);
        let diag: Vec<f64> = (0..4).map(|i| q.get(i, i).re).collect();
        assert_eq!(diag, vec![2.0, 0.0, 0.0, -2.0]);
        for n in 1..8 {
            let q = build_charge_operator(n);
            let tr: f64 = (0..q.dim()).map(|i| q.get(i, i).re).sum();
            assert_eq!(tr, 0.0);
        }
    }

    #[test]
    fn sector_sizes_are_binomial() {
        let s = charge_sectors(12);
        let total: usize = s.iter().map(|c| c.len()).sum();
        assert_eq!(total, 4096);
        let half = s.iter().find(|c| c.charge == 0).unwrap();
        assert_eq!(half.len(), 924);
        let s2 = charge_sectors(2);
        let sizes: Vec<(i32, usize)> = s2.iter().map(|c| (c.charge, c.len())).collect();
        assert_eq!(sizes, vec![(-2, 1), (0, 2), (2, 1)]);
        assert!(charge_sectors(5).iter().all(|c| c.charge != 0));
        assert!(charge_sector(4, 1).is_err());
    }

    #[test]
    fn rotation_limits() {
        let id = build_rotation(3, 0.0);
        assert!(id.max_abs_diff(&Operator::identity(8)).unwrap() < 1e-15);
        let flip = build_rotation(1, std::f64::consts::PI);
        // column 0 is the image of |0>
        assert!(flip.get(0, 0).norm() < 1e-15);
        assert!((flip.get(1, 0).re - 1.0).abs() < 1e-15);
        for &t in &[0.3, 1.9, -2.4] {
            assert!(build_rotation(4, t).unitarity_error() < 1e-12);
        }
    }

    #[test]
    fn transformed_hamiltonian_special_points() {
        let p = ModelParams::new(4, 0.6).with_fields(fields(4));
        let h = build_hamiltonian(&p).unwrap();
        let hp = build_transformed_hamiltonian(&p, 0.0).unwrap();
        assert!(h.max_abs_diff(&hp).unwrap() < 1e-15);

        let iso = ModelParams::new(4, 1.0).with_mu(1.0);
        let h = build_hamiltonian(&iso).unwrap();
        let hp = build_transformed_hamiltonian(&iso, 0.77).unwrap();
        assert!(h.max_abs_diff(&hp).unwrap() < 1e-14);
    }

    #[test]
    fn transformed_hamiltonian_is_conjugation() {
        let p = ModelParams::new(4, 0.3).with_mu(-0.5).with_fields(fields(4));
        let h = build_hamiltonian(&p).unwrap();
        for &t in &[0.2, 1.1, 2.9] {
            let u = build_rotation(4, t);
            let conj = u.adjoint().matmul(&h).unwrap().matmul(&u).unwrap();
            let hp = build_transformed_hamiltonian(&p, t).unwrap();
            assert!(hp.max_abs_diff(&conj).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sector_block_matches_full_matrix() {
        let p = ModelParams::new(6, 1.0).with_fields(fields(6));
        let h = build_hamiltonian(&p).unwrap();
        for sector in charge_sectors(6) {
            let block = hamiltonian_sector_block(&p, &sector).unwrap();
            let direct = h.restrict(&sector.indices);
            assert_eq!(block.max_abs_diff(&direct).unwrap(), 0.0);
        }
    }
}
