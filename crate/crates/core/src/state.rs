//! Pure states on the computational basis and the tilted product states.

use faer::c64;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::rotation_2x2;

/// Amplitudes over the `2^L` computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    sites: usize,
    amplitudes: Vec<c64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<c64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "state dimension {dim} is not a power of two >= 2"
            )));
        }
        Ok(StateVector {
            sites: dim.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| c64::new(a, 0.0)).collect())
    }

    pub fn basis(sites: usize, index: usize) -> Self {
        let mut amplitudes = vec![c64::new(0.0, 0.0); 1 << sites];
        amplitudes[index] = c64::new(1.0, 0.0);
        StateVector { sites, amplitudes }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<c64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::numerical("cannot normalize a zero or non-finite state"));
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<c64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Product of per-site columns of the rotation applied to `reference` bits.
fn rotated_product(sites: usize, reference: usize, theta: f64) -> StateVector {
    let r = rotation_2x2(theta);
    let dim = 1usize << sites;
    let amplitudes = (0..dim)
        .map(|i| {
            let mut a = 1.0;
            for site in 0..sites {
                let shift = sites - 1 - site;
                let out = (i >> shift) & 1;
                let inp = (reference >> shift) & 1;
                a *= r[out][inp];
            }
            c64::new(a, 0.0)
        })
        .collect();
    StateVector { sites, amplitudes }
}

/// `U_theta |00...0>`: every site in `(cos(theta/2), sin(theta/2))`.
pub fn tilted_ferromagnet(sites: usize, theta: f64) -> Result<StateVector> {
    if sites == 0 {
        return Err(Error::invalid("need at least one site"));
    }
    Ok(rotated_product(sites, 0, theta))
}

/// Néel pattern `|0101...01>`, site 0 up.
pub fn neel_index(sites: usize) -> usize {
    (0..sites)
        .filter(|site| site % 2 == 1)
        .map(|site| 1usize << (sites - 1 - site))
        .sum()
}

/// `U_theta |0101...01>`.
pub fn tilted_neel(sites: usize, theta: f64) -> Result<StateVector> {
    if sites == 0 || !sites.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "tilted Néel state needs an even number of sites, got {sites}"
        )));
    }
    Ok(rotated_product(sites, neel_index(sites), theta))
}
