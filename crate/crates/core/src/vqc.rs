//! The single-layer variational circuit and its parameter-shift gradients.
//!
//! Circuit on `n_q` qubits, left to right:
//!
//! ```text
//! H^n -> RY(f_1..f_n) -> CNOT block from beta -> RY(theta_1..theta_n) -> <Z_j>
//! ```
//!
//! The CNOT block applies every set entry of the entanglement matrix in
//! ascending control order, then ascending target order within a row.

use std::f64::consts::FRAC_PI_2;

use crate::entanglement::EntanglementMatrix;
use crate::error::{Error, Result};
use crate::statevector::{StateVector, MAX_QUBITS};

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    beta: EntanglementMatrix,
    cnots: Vec<(usize, usize)>,
}

impl CircuitSpec {
    pub fn new(beta: EntanglementMatrix) -> Result<Self> {
        if let Err(v) = beta.validate() {
            return Err(Error::InvalidMatrix(format!("{} violations", v.len())));
        }
        if beta.n_q() > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_q: beta.n_q(),
                max: MAX_QUBITS,
            });
        }
        let cnots = beta.cnot_pairs();
        Ok(Self { beta, cnots })
    }

    pub fn n_q(&self) -> usize {
        self.beta.n_q()
    }

    pub fn beta(&self) -> &EntanglementMatrix {
        &self.beta
    }

    fn check(&self, f: &[f64], theta: &[f64]) -> Result<()> {
        let n = self.n_q();
        if f.len() != n {
            return Err(Error::dim("encoding angles", n, f.len()));
        }
        if theta.len() != n {
            return Err(Error::dim("trainable angles", n, theta.len()));
        }
        Ok(())
    }

    /// State right after the entanglement block.
    fn entangled_state(&self, f: &[f64]) -> StateVector {
        let n = self.n_q();
        let mut s = StateVector::zero(n).expect("qubit count checked at construction");
        for (q, &fq) in f.iter().enumerate() {
            s.apply_h_index(q);
            s.apply_ry_index(fq, q);
        }
        for &(c, t) in &self.cnots {
            s.apply_cnot_index(c, t);
        }
        s
    }

    fn measure(&self, mut s: StateVector, theta: &[f64]) -> Vec<f64> {
        for (q, &tq) in theta.iter().enumerate() {
            s.apply_ry_index(tq, q);
        }
        s.expectation_z_all()
    }

    /// Pauli-Z expectation of every qubit.
    pub fn forward(&self, f: &[f64], theta: &[f64]) -> Result<QuantumOutputs> {
        self.check(f, theta)?;
        Ok(QuantumOutputs {
            z: self.measure(self.entangled_state(f), theta),
        })
    }

    /// Exact partials of every output by the two-point shift rule
    /// `dz/dx = (z(x + pi/2) - z(x - pi/2)) / 2`.
    pub fn gradients(&self, f: &[f64], theta: &[f64]) -> Result<QuantumGradients> {
        self.check(f, theta)?;
        let n = self.n_q();
        let base = self.entangled_state(f);
        let mut theta_s = theta.to_vec();
        let mut d_theta = Vec::with_capacity(n);
        for i in 0..n {
            theta_s[i] = theta[i] + FRAC_PI_2;
            let plus = self.measure(base.clone(), &theta_s);
            theta_s[i] = theta[i] - FRAC_PI_2;
            let minus = self.measure(base.clone(), &theta_s);
            theta_s[i] = theta[i];
            d_theta.push(half_diff(&plus, &minus));
        }

        let mut f_s = f.to_vec();
        let mut d_f = Vec::with_capacity(n);
        for i in 0..n {
            f_s[i] = f[i] + FRAC_PI_2;
            let plus = self.measure(self.entangled_state(&f_s), theta);
            f_s[i] = f[i] - FRAC_PI_2;
            let minus = self.measure(self.entangled_state(&f_s), theta);
            f_s[i] = f[i];
            d_f.push(half_diff(&plus, &minus));
        }
        Ok(QuantumGradients { d_theta, d_f })
    }
}

fn half_diff(plus: &[f64], minus: &[f64]) -> Vec<f64> {
    plus.iter().zip(minus).map(|(p, m)| 0.5 * (p - m)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOutputs {
    pub z: Vec<f64>,
}

/// `d_theta[i][j]` is `dz_j / dtheta_i`; `d_f[i][j]` is `dz_j / df_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumGradients {
    pub d_theta: Vec<Vec<f64>>,
    pub d_f: Vec<Vec<f64>>,
}
