#![allow(dead_code)]

use qentangle::entanglement::{
    ConfigDescriptor, EntanglementMatrix, Origin, SamplingMode, SamplingSpec,
};
use qentangle::experiment::{prepare, Dataset};
use qentangle::features::SyntheticSpec;
use qentangle::statevector::Gate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// eigenvalue descending. Eigenvectors are returned as rows.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let tau = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let values = idx.iter().map(|&i| m[i][i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance with the S - 1 denominator.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let s = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / s)
        .collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x /= s - 1.0;
        }
    }
    c
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// Reference vote: for every sample, walk the classes and keep the first one
/// whose summed probability is strictly larger than the best so far.
pub fn brute_force_vote(member_probs: &[Vec<Vec<f64>>]) -> Vec<usize> {
    let n_samples = member_probs[0].len();
    let n_classes = member_probs[0][0].len();
    (0..n_samples)
        .map(|s| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for c in 0..n_classes {
                let mut score = 0.0;
                for m in member_probs {
                    score += m[s][c];
                }
                if score > best_score {
                    best = c;
                    best_score = score;
                }
            }
            best
        })
        .collect()
}

pub fn random_circuit(rng: &mut impl Rng, n_q: usize, max_gates: usize) -> Vec<Gate> {
    let len = rng.random_range(1..=max_gates);
    (0..len)
        .map(|_| {
            let q = rng.random_range(1..=n_q);
            match rng.random_range(0..3) {
                0 => Gate::H(q),
                1 => Gate::Ry(
                    q,
                    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                ),
                _ if n_q >= 2 => {
                    let mut t = rng.random_range(1..=n_q);
                    while t == q {
                        t = rng.random_range(1..=n_q);
                    }
                    Gate::Cnot {
                        control: q,
                        target: t,
                    }
                }
                _ => Gate::H(q),
            }
        })
        .collect()
}

pub fn constrained(n_q: usize, k: usize, seed: u64) -> ConfigDescriptor {
    let mode = SamplingMode::Constrained { k };
    let m = SamplingSpec::new(n_q, mode)
        .unwrap()
        .sample(&mut rng(seed))
        .unwrap();
    ConfigDescriptor::new(&m, mode.into(), Some(seed))
}

pub fn explicit(m: &EntanglementMatrix) -> ConfigDescriptor {
    ConfigDescriptor::new(m, Origin::Explicit, None)
}

pub fn synthetic(samples_per_class: usize, separation: f64, seed: u64) -> Dataset {
    let table = SyntheticSpec {
        samples_per_class,
        dim: 20,
        separation,
        patients_per_class: samples_per_class / 5,
        seed,
    }
    .generate()
    .unwrap();
    prepare(&table, 20, [0.5, 0.25, 0.25], seed + 1)
        .unwrap()
        .data
}

/// Central difference of `f` in every coordinate of `x`.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
