//! Independent reference constructions: Kronecker products and a second
//! eigensolver (nalgebra), brute-force partial traces and closed forms.

use nalgebra::{Complex, DMatrix, DVector};
use qpme::diagnostics::{level_spacing_ratios, POISSON_R};
use qpme::ensemble::sample_fields;
use qpme::hilbert::{build_hamiltonian, build_rotation, build_transformed_hamiltonian};
use qpme::observables::{
    charge_moments, charge_sector_probs, entanglement_asymmetry, partial_trace,
    von_neumann_entropy,
};
use qpme::state::{tilted_ferromagnet, tilted_neel};
use qpme::{c64, decompose_model, propagate_real, ModelParams, Operator, StateVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

type C = Complex<f64>;
type CMat = DMatrix<C>;

fn pauli(which: char) -> CMat {
    let z = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    match which {
        'x' => CMat::from_row_slice(2, 2, &[z, one, one, z]),
        'y' => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        'z' => CMat::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => CMat::identity(2, 2),
    }
}

/// `ops[0] (x) ops[1] (x) ...`, site 0 leftmost.
fn kron_chain(ops: &[CMat]) -> CMat {
    ops.iter()
        .skip(1)
        .fold(ops[0].clone(), |acc, op| acc.kronecker(op))
}

fn local(sites: usize, placed: &[(usize, char)]) -> CMat {
    let ops: Vec<CMat> = (0..sites)
        .map(|s| {
            placed
                .iter()
                .find(|&&(site, _)| site == s)
                .map(|&(_, p)| pauli(p))
                .unwrap_or_else(|| pauli('1'))
        })
        .collect();
    kron_chain(&ops)
}

fn reference_hamiltonian(p: &ModelParams) -> CMat {
    let l = p.sites;
    let mut h = CMat::zeros(1 << l, 1 << l);
    let bonds = if p.periodic { l } else { l - 1 };
    for j in 0..bonds {
        let k = (j + 1) % l;
        h -= local(l, &[(j, 'x'), (k, 'x')]);
        h -= local(l, &[(j, 'y'), (k, 'y')]) * C::new(p.gamma, 0.0);
        h -= local(l, &[(j, 'z'), (k, 'z')]) * C::new(p.mu, 0.0);
    }
    for (j, &hj) in p.fields.iter().enumerate() {
        h += local(l, &[(j, 'z')]) * C::new(hj, 0.0);
    }
    h
}

fn reference_rotation(sites: usize, theta: f64) -> CMat {
    let (s, c) = (theta / 2.0).sin_cos();
    let r = CMat::from_row_slice(
        2,
        2,
        &[C::new(c, 0.0), C::new(-s, 0.0), C::new(s, 0.0), C::new(c, 0.0)],
    );
    kron_chain(&vec![r; sites])
}

fn to_nalgebra(op: &Operator) -> CMat {
    CMat::from_fn(op.dim(), op.dim(), |i, j| {
        let v = op.get(i, j);
        C::new(v.re, v.im)
    })
}

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sorted_eigenvalues(h: &CMat) -> Vec<f64> {
    // the Hamiltonian is real symmetric; its real part carries everything
    let real = h.map(|z| z.re);
    assert!(h.iter().all(|z| z.im.abs() < 1e-14));
    let mut e: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn random_model(rng: &mut ChaCha8Rng, sites: usize, periodic: bool) -> ModelParams {
    let gamma = rng.random::<f64>() * 1.5;
    let mu = 2.0 * rng.random::<f64>() - 1.0;
    let mut p = ModelParams::new(sites, gamma)
        .with_mu(mu)
        .with_fields((0..sites).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect());
    p.periodic = periodic;
    p
}

fn to_dvector(psi: &StateVector) -> DVector<C> {
    DVector::from_iterator(psi.dim(), psi.amplitudes().iter().map(|a| C::new(a.re, a.im)))
}

#[test]
fn hamiltonian_matches_kronecker_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &(sites, periodic) in &[(3, true), (4, true), (4, false), (5, true)] {
        for _ in 0..3 {
            let p = random_model(&mut rng, sites, periodic);
            let ours = to_nalgebra(&build_hamiltonian(&p).unwrap());
            assert!(max_diff(&ours, &reference_hamiltonian(&p)) < 1e-13);
        }
    }
}

#[test]
fn spectrum_matches_second_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for &(sites, gamma) in &[(4, 1.0), (4, 0.2), (6, 1.0), (6, 0.6), (7, 0.3)] {
        let p = random_model(&mut rng, sites, true).with_gamma(gamma);
        let ours = decompose_model(&p).unwrap();
        let reference = sorted_eigenvalues(&reference_hamiltonian(&p));
        let err = ours
            .eigenvalues()
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "L={sites} gamma={gamma}: {err:e}");
    }
}

#[test]
fn transformed_hamiltonian_matches_similarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..6 {
        let p = random_model(&mut rng, 4, true);
        let theta = PI * rng.random::<f64>();
        let u = reference_rotation(4, theta);
        let similar = u.adjoint() * reference_hamiltonian(&p) * &u;
        let ours = to_nalgebra(&build_transformed_hamiltonian(&p, theta).unwrap());
        assert!(max_diff(&ours, &similar) < 1e-12);
        assert!(max_diff(&to_nalgebra(&build_rotation(4, theta)), &u) < 1e-14);
    }
}

#[test]
fn tilted_states_match_rotated_basis_states() {
    for &theta in &[0.05 * PI, 0.2 * PI, 0.9 * PI] {
        let u = reference_rotation(4, theta);
        let ferro = to_dvector(&tilted_ferromagnet(4, theta).unwrap());
        assert!((ferro - u.column(0)).norm() < 1e-14);
        let neel = to_dvector(&tilted_neel(4, theta).unwrap());
        assert!((neel - u.column(0b0101)).norm() < 1e-14);
    }
}

#[test]
fn real_time_evolution_matches_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = random_model(&mut rng, 5, true).with_gamma(0.4);
    let h = reference_hamiltonian(&p).map(|z| z.re);
    let eig = h.symmetric_eigen();
    let psi0 = tilted_ferromagnet(5, 0.3 * PI).unwrap();
    let sd = decompose_model(&p).unwrap();
    for &t in &[0.3, 2.0, 17.5] {
        let phases = eig.eigenvalues.map(|e| C::from_polar(1.0, -e * t));
        let v = eig.eigenvectors.map(|x| C::new(x, 0.0));
        let expected = &v * CMat::from_diagonal(&phases) * v.adjoint() * to_dvector(&psi0);
        let ours = to_dvector(&propagate_real(&psi0, &sd, t).unwrap());
        assert!((ours - expected).norm() < 1e-10, "t={t}");
    }
}

fn random_state(rng: &mut ChaCha8Rng, sites: usize) -> StateVector {
    let amps: Vec<c64> = (0..1usize << sites)
        .map(|_| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    StateVector::new(amps).unwrap().normalized().unwrap()
}

#[test]
fn partial_trace_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &(sites, keep) in &[(4, 1), (4, 2), (5, 3), (6, 2)] {
        let psi = random_state(&mut rng, sites);
        let rho = partial_trace(&psi, keep).unwrap();
        let env = sites - keep;
        for a in 0..1usize << keep {
            for a2 in 0..1usize << keep {
                let mut sum = c64::new(0.0, 0.0);
                for b in 0..1usize << env {
                    let x = psi.amplitudes()[(a << env) | b];
                    let y = psi.amplitudes()[(a2 << env) | b];
                    sum += x * y.conj();
                }
                assert!((rho.get(a, a2) - sum).norm() < 1e-14);
            }
        }
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// For a product state the block is pure and each charge projection has
/// rank one, so the asymmetry is the Shannon entropy of the binomial charge
/// distribution of the block.
fn binomial_entropy(l: usize, theta: f64) -> f64 {
    let q = (theta / 2.0).sin().powi(2);
    (0..=l)
        .map(|k| binomial(l, k) * q.powi(k as i32) * (1.0 - q).powi((l - k) as i32))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

#[test]
fn tilted_ferromagnet_asymmetry_is_binomial_entropy() {
    for &theta in &[0.05 * PI, 0.1 * PI, 0.2 * PI, 0.3 * PI, 0.5 * PI] {
        for l in 1..=5 {
            let psi = tilted_ferromagnet(8, theta).unwrap();
            let got = entanglement_asymmetry(&psi, l).unwrap();
            let want = binomial_entropy(l, theta);
            assert!((got - want).abs() < 1e-9, "theta={theta} l={l}: {got} vs {want}");
        }
    }
}

#[test]
fn product_state_block_is_pure() {
    let psi = tilted_ferromagnet(6, 0.3 * PI).unwrap();
    let rho = partial_trace(&psi, 3).unwrap();
    assert!((rho.purity() - 1.0).abs() < 1e-12);
    assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-10);
}

#[test]
fn tilted_ferromagnet_charge_statistics() {
    for &theta in &[0.05 * PI, 0.2 * PI, 0.7 * PI] {
        let l = 7;
        let psi = tilted_ferromagnet(l, theta).unwrap();
        let (mean, second) = charge_moments(&psi);
        let var = second - mean * mean;
        assert!((mean - l as f64 * theta.cos()).abs() < 1e-12);
        assert!((var - l as f64 * theta.sin().powi(2)).abs() < 1e-12);
        let q = (theta / 2.0).sin().powi(2);
        let dist = charge_sector_probs(&psi);
        for (charge, p) in dist.iter() {
            let k = ((l as i32 - charge) / 2) as usize;
            let want = binomial(l, k) * q.powi(k as i32) * (1.0 - q).powi((l - k) as i32);
            assert!((p - want).abs() < 1e-13);
        }
    }
}

#[test]
fn poisson_spectrum_gives_poisson_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut e = 0.0;
    let levels: Vec<f64> = (0..100_002)
        .map(|_| {
            e += -(1.0 - rng.random::<f64>()).ln();
            e
        })
        .collect();
    let stats = level_spacing_ratios(&levels).unwrap();
    assert_eq!(stats.r_values.len(), 100_000);
    assert!((stats.r_mean - POISSON_R).abs() < 0.005, "{}", stats.r_mean);
}

#[test]
fn goe_matrices_give_goe_ratio() {
    // dense real symmetric Gaussian matrices: <r> ~ 0.53
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 200;
    let mut all = Vec::new();
    for _ in 0..10 {
        let g = DMatrix::from_fn(n, n, |_, _| {
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * PI * v).cos()
        });
        let sym = (&g + g.transpose()) * 0.5;
        let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let cut = n / 5;
        all.extend(level_spacing_ratios(&e[cut..n - cut]).unwrap().r_values);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    assert!((mean - 0.5307).abs() < 0.02, "{mean}");
}

#[test]
fn field_samples_are_uniform_on_the_disorder_interval() {
    let w = 1.0;
    let values: Vec<f64> = (0..2000u64).flat_map(|r| sample_fields(9, r, 12, w)).collect();
    assert!(values.iter().all(|&h| (-w..w).contains(&h)));
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 0.02);
    assert!((var - w * w / 3.0).abs() < 0.01);
}

#[test]
fn tilted_dynamics_equal_rotated_transformed_dynamics() {
    use qpme::evolution::spectral_decompose;
    let p = ModelParams::new(6, 1.0).with_fields(sample_fields(3, 0, 6, 1.0));
    let theta = 0.2 * PI;
    let sd = decompose_model(&p).unwrap();
    let sd_prime = spectral_decompose(&build_transformed_hamiltonian(&p, theta).unwrap()).unwrap();
    let u = build_rotation(6, theta);
    let psi0 = tilted_ferromagnet(6, theta).unwrap();
    let up = StateVector::basis(6, 0);
    for &t in &[0.5, 3.0, 12.0] {
        let direct = propagate_real(&psi0, &sd, t).unwrap();
        let moved = propagate_real(&up, &sd_prime, t).unwrap();
        let rotated = StateVector::new(u.apply(moved.amplitudes()).unwrap()).unwrap();
        assert!((direct.fidelity(&rotated).unwrap() - 1.0).abs() < 1e-9);
        assert!(direct.max_abs_diff(&rotated).unwrap() < 1e-9);
    }
}
