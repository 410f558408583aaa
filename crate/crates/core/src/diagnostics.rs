//! Level-spacing statistics in the half-filling sector and the charge
//! sector of the symmetric ground state over disorder.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{mean_and_stderr, pin_dense_kernels, sample_fields};
use crate::error::{Error, Result};
use crate::evolution::eigenvalues_of;
use crate::hilbert::{charge_sector, charge_sectors, hamiltonian_sector_block, ModelParams};

/// Gaps at or below this are treated as exact degeneracies.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Poisson-spectrum average `2 ln 2 - 1`.
pub const POISSON_R: f64 = 0.386_294_361_119_890_6;

#[derive(Clone, Debug, PartialEq)]
pub struct LevelStatistics {
    pub r_values: Vec<f64>,
    /// NaN when every ratio was skipped.
    pub r_mean: f64,
    /// Ratios dropped because one of their gaps was degenerate.
    pub skipped_degenerate: usize,
}

/// `r_n = min(d_n, d_{n+1}) / max(d_n, d_{n+1})` over an ascending spectrum.
pub fn level_spacing_ratios(energies: &[f64]) -> Result<LevelStatistics> {
    if energies.len() < 3 {
        return Err(Error::invalid("need at least three levels"));
    }
    if energies.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::invalid("energies must be ascending"));
    }
    let gaps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let mut r_values = Vec::with_capacity(gaps.len() - 1);
    let mut skipped = 0;
    for w in gaps.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a <= DEGENERACY_TOL || b <= DEGENERACY_TOL {
            skipped += 1;
        } else {
            r_values.push(a.min(b) / a.max(b));
        }
    }
    let r_mean = if r_values.is_empty() {
        f64::NAN
    } else {
        r_values.iter().sum::<f64>() / r_values.len() as f64
    };
    Ok(LevelStatistics {
        r_values,
        r_mean,
        skipped_degenerate: skipped,
    })
}

/// Ensemble summary of the half-filling level statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfFillingStats {
    /// Average of all retained `r_n` over levels and realizations.
    pub r_mean: f64,
    /// Standard error of the per-realization means.
    pub r_stderr: f64,
    pub n_realizations: usize,
    pub skipped_degenerate: usize,
    pub total_ratios: usize,
    /// Fraction of spectrum edges dropped on each side before averaging.
    pub edge_trim_fraction: f64,
    /// False when more than 1% of the ratios hit exact degeneracies.
    pub reliable: bool,
}

fn require_symmetric(p: &ModelParams) -> Result<()> {
    if !p.is_symmetric() {
        return Err(Error::invalid(format!(
            "charge sectors require gamma = 1, got {}",
            p.gamma
        )));
    }
    Ok(())
}

/// Level statistics of the `Q = 0` block over `realizations` disorder draws.
pub fn half_filling_r(p: &ModelParams, realizations: usize, seed: u64) -> Result<HalfFillingStats> {
    half_filling_r_trimmed(p, realizations, seed, 0.0)
}

/// As [`half_filling_r`], dropping `trim` of the levels at each spectral edge.
pub fn half_filling_r_trimmed(
    p: &ModelParams,
    realizations: usize,
    seed: u64,
    trim: f64,
) -> Result<HalfFillingStats> {
    require_symmetric(p)?;
    if !p.sites.is_multiple_of(2) {
        return Err(Error::invalid("half filling needs an even chain"));
    }
    if realizations == 0 {
        return Err(Error::invalid("need at least one realization"));
    }
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::invalid("trim fraction must lie in [0, 0.5)"));
    }
    p.validate()?;
    pin_dense_kernels();
    let sector = charge_sector(p.sites, 0)?;
    let per: Vec<LevelStatistics> = (0..realizations as u64)
        .into_par_iter()
        .map(|i| {
            let params = p.clone().with_fields(sample_fields(seed, i, p.sites, p.disorder));
            let block = hamiltonian_sector_block(&params, &sector)?;
            let levels = eigenvalues_of(&block)?;
            let cut = (trim * levels.len() as f64).floor() as usize;
            level_spacing_ratios(&levels[cut..levels.len() - cut])
        })
        .collect::<Result<_>>()?;

    let retained: usize = per.iter().map(|s| s.r_values.len()).sum();
    let skipped: usize = per.iter().map(|s| s.skipped_degenerate).sum();
    let all_sum: f64 = per.iter().flat_map(|s| s.r_values.iter()).sum();
    let means: Vec<f64> = per.iter().filter(|s| !s.r_values.is_empty()).map(|s| s.r_mean).collect();
    let (_, r_stderr) = mean_and_stderr(&means);
    let total = retained + skipped;
    Ok(HalfFillingStats {
        r_mean: if retained > 0 { all_sum / retained as f64 } else { f64::NAN },
        r_stderr,
        n_realizations: realizations,
        skipped_degenerate: skipped,
        total_ratios: total,
        edge_trim_fraction: trim,
        reliable: retained > 0 && (skipped as f64) <= 0.01 * total as f64,
    })
}

/// Counts of realizations whose ground state lies in each charge sector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChargeCensus {
    /// `(charge, count)` in ascending charge, every sector listed.
    pub counts: Vec<(i32, usize)>,
}

impl ChargeCensus {
    pub fn total(&self) -> usize {
        self.counts.iter().map(|&(_, n)| n).sum()
    }

    pub fn count(&self, charge: i32) -> usize {
        self.counts
            .iter()
            .find(|&&(q, _)| q == charge)
            .map(|&(_, n)| n)
            .unwrap_or(0)
    }
}

/// Energies closer than this count as a tie between sectors.
const TIE_TOL: f64 = 1e-10;

/// Sector of the lowest level; ties go to smaller `|Q|`, then to `Q > 0`.
pub fn ground_state_sector(p: &ModelParams) -> Result<(i32, f64)> {
    require_symmetric(p)?;
    let mut best: Option<(i32, f64)> = None;
    for sector in charge_sectors(p.sites) {
        let block = hamiltonian_sector_block(p, &sector)?;
        let e0 = eigenvalues_of(&block)?[0];
        best = Some(match best {
            None => (sector.charge, e0),
            Some((q, e)) => {
                let better_tie = (sector.charge.abs(), -sector.charge) < (q.abs(), -q);
                if e0 < e - TIE_TOL || ((e0 - e).abs() <= TIE_TOL && better_tie) {
                    (sector.charge, e0)
                } else {
                    (q, e)
                }
            }
        });
    }
    Ok(best.expect("at least one sector"))
}

pub fn ground_state_census(realizations: usize, seed: u64, p_sym: &ModelParams) -> Result<ChargeCensus> {
    require_symmetric(p_sym)?;
    p_sym.validate()?;
    pin_dense_kernels();
    let sectors: Vec<i32> = (0..=p_sym.sites as i32)
        .map(|k| 2 * k - p_sym.sites as i32)
        .collect();
    let found: Vec<i32> = (0..realizations as u64)
        .into_par_iter()
        .map(|i| {
            let params = p_sym
                .clone()
                .with_fields(sample_fields(seed, i, p_sym.sites, p_sym.disorder));
            ground_state_sector(&params).map(|(q, _)| q)
        })
        .collect::<Result<_>>()?;
    let counts = sectors
        .iter()
        .map(|&q| (q, found.iter().filter(|&&f| f == q).count()))
        .collect();
    Ok(ChargeCensus { counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::decompose_model;

    #[test]
    fn equally_spaced_levels() {
        let e: Vec<f64> = (0..20).map(|k| 0.5 * k as f64).collect();
        let s = level_spacing_ratios(&e).unwrap();
        assert!(s.r_values.iter().all(|&r| r == 1.0));
        assert_eq!(s.r_mean, 1.0);
    }

    #[test]
    fn single_ratio() {
        let s = level_spacing_ratios(&[0.0, 1.0, 4.0]).unwrap();
        assert_eq!(s.r_values, vec![1.0 / 3.0]);
    }

    #[test]
    fn degenerate_gaps_are_skipped() {
        let s = level_spacing_ratios(&[0.0, 1.0, 1.0, 2.5, 3.0]).unwrap();
        assert_eq!(s.skipped_degenerate, 2);
        assert_eq!(s.r_values.len(), 1);
        assert!(level_spacing_ratios(&[0.0, 1.0]).is_err());
        assert!(level_spacing_ratios(&[0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_asymmetric_model() {
        let p = ModelParams::new(8, 0.5);
        assert!(half_filling_r(&p, 2, 0).is_err());
        assert!(ground_state_census(2, 0, &p).is_err());
    }

    #[test]
    fn half_filling_is_reproducible() {
        let p = ModelParams::new(8, 1.0);
        let a = half_filling_r(&p, 4, 9).unwrap();
        let b = half_filling_r(&p, 4, 9).unwrap();
        assert_eq!(a.r_mean.to_bits(), b.r_mean.to_bits());
        assert!(a.r_mean > 0.0 && a.r_mean < 1.0);
    }

    #[test]
    fn clean_chain_is_flagged() {
        let mut p = ModelParams::new(8, 1.0);
        p.disorder = 0.0;
        let s = half_filling_r(&p, 1, 0).unwrap();
        assert!(s.skipped_degenerate > 0);
        assert!(!s.reliable);
    }

    #[test]
    fn sector_minimum_matches_full_spectrum() {
        let p = ModelParams::new(8, 1.0).with_fields(sample_fields(4, 2, 8, 1.0));
        let (_, e0) = ground_state_sector(&p).unwrap();
        let full = decompose_model(&p).unwrap();
        assert!((e0 - full.ground_energy()).abs() < 1e-9);
    }

    #[test]
    fn census_counts_and_seeds() {
        let p = ModelParams::new(6, 1.0);
        let c = ground_state_census(1, 3, &p).unwrap();
        assert_eq!(c.total(), 1);
        assert_eq!(c.counts.len(), 7);
        let a = ground_state_census(6, 1, &p).unwrap();
        assert_eq!(a.total(), 6);
        assert_eq!(a, ground_state_census(6, 1, &p).unwrap());
    }
}
