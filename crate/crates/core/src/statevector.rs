//! Dense statevector simulation for small registers.
//!
//! Qubit 1 is the most significant bit of the basis-state index, so the
//! amplitude at index `b` belongs to `|q1 q2 ... qn>` with `b` written in
//! binary left to right. Qubit arguments are 1-based.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitGate {
    m: [[Complex64; 2]; 2],
}

impl SingleQubitGate {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        // G^dagger G - I
        let mut dev = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let s = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((s - Complex64::new(target, 0.0)).norm());
            }
        }
        if dev > UNITARY_TOL || !dev.is_finite() {
            return Err(Error::NonUnitary(dev));
        }
        Ok(Self { m })
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            m: [[h, h], [h, -h]],
        }
    }

    /// `RY(theta) = exp(-i theta Y / 2)`.
    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self {
            m: [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }
}

/// A gate in a circuit; qubits are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    Ry(usize, f64),
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_q: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_q` qubits.
    pub fn zero(n_q: usize) -> Result<Self> {
        if n_q == 0 {
            return Err(Error::TooFewQubits { n_q, min: 1 });
        }
        if n_q > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_q,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_q];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_q, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two. No
    /// normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_q = len.trailing_zeros() as usize;
        if n_q > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_q,
                max: MAX_QUBITS,
            });
        }
        Ok(Self { n_q, amps })
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, q: usize) -> Result<usize> {
        if q == 0 || q > self.n_q {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_q: self.n_q,
            });
        }
        Ok(1 << (self.n_q - q))
    }

    pub fn apply_single(&mut self, gate: &SingleQubitGate, q: usize) -> Result<()> {
        let mask = self.mask(q)?;
        self.apply_single_mask(gate, mask);
        Ok(())
    }

    /// Stride kernel: walks pairs `(b, b | mask)` with the target bit clear.
    fn apply_single_mask(&mut self, gate: &SingleQubitGate, mask: usize) {
        let [[g00, g01], [g10, g11]] = gate.m;
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for i0 in base..base + mask {
                let i1 = i0 | mask;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = g00 * a0 + g01 * a1;
                self.amps[i1] = g10 * a0 + g11 * a1;
            }
            base += mask << 1;
        }
    }

    /// RY with real arithmetic only; same result as `apply_single(ry(theta))`.
    pub(crate) fn apply_ry_index(&mut self, theta: f64, q0: usize) {
        let mask = 1 << (self.n_q - 1 - q0);
        let (s, c) = (theta / 2.0).sin_cos();
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for i0 in base..base + mask {
                let i1 = i0 | mask;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = a0 * c - a1 * s;
                self.amps[i1] = a0 * s + a1 * c;
            }
            base += mask << 1;
        }
    }

    pub(crate) fn apply_h_index(&mut self, q0: usize) {
        let mask = 1 << (self.n_q - 1 - q0);
        self.apply_single_mask(&SingleQubitGate::hadamard(), mask);
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        let cm = self.mask(control)?;
        let tm = self.mask(target)?;
        if cm == tm {
            return Err(Error::SelfEntanglement(control));
        }
        self.apply_cnot_masks(cm, tm);
        Ok(())
    }

    pub(crate) fn apply_cnot_index(&mut self, c0: usize, t0: usize) {
        let cm = 1 << (self.n_q - 1 - c0);
        let tm = 1 << (self.n_q - 1 - t0);
        self.apply_cnot_masks(cm, tm);
    }

    fn apply_cnot_masks(&mut self, cm: usize, tm: usize) {
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::H(q) => self.apply_single(&SingleQubitGate::hadamard(), q),
            Gate::Ry(q, theta) => self.apply_single(&SingleQubitGate::ry(theta), q),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// `<Z_q>`: probability of bit 0 minus probability of bit 1 on qubit `q`.
    pub fn expectation_z(&self, q: usize) -> Result<f64> {
        let mask = self.mask(q)?;
        Ok(self.expectation_z_mask(mask))
    }

    fn expectation_z_mask(&self, mask: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if i & mask == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }

    /// `<Z_q>` for every qubit, in qubit order.
    pub fn expectation_z_all(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n_q];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, zq) in z.iter_mut().enumerate() {
                if i & (1 << (self.n_q - 1 - q)) == 0 {
                    *zq += p;
                } else {
                    *zq -= p;
                }
            }
        }
        z
    }
}

/// Brute-force reference: full unitaries from Kronecker products.
///
/// Independent of the stride kernel above; only meant for checking it on
/// tiny registers.
pub mod oracle {
    use super::{Gate, SingleQubitGate};
    use crate::error::{Error, Result};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    pub const MAX_ORACLE_QUBITS: usize = 3;

    fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a.kronecker(b)
    }

    fn single(n_q: usize, q: usize, g: &SingleQubitGate) -> DMatrix<Complex64> {
        let m = g.matrix();
        let g = DMatrix::from_fn(2, 2, |i, j| m[i][j]);
        let id = DMatrix::<Complex64>::identity(2, 2);
        let mut u = DMatrix::<Complex64>::identity(1, 1);
        for k in 1..=n_q {
            u = kron(&u, if k == q { &g } else { &id });
        }
        u
    }

    // CNOT = |0><0|_c (x) I + |1><1|_c (x) X_t
    fn cnot(n_q: usize, c: usize, t: usize) -> DMatrix<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let p0 = DMatrix::from_row_slice(2, 2, &[one, zero, zero, zero]);
        let p1 = DMatrix::from_row_slice(2, 2, &[zero, zero, zero, one]);
        let x = DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let id = DMatrix::<Complex64>::identity(2, 2);
        let mut a = DMatrix::<Complex64>::identity(1, 1);
        let mut b = DMatrix::<Complex64>::identity(1, 1);
        for k in 1..=n_q {
            let (fa, fb) = if k == c {
                (&p0, &p1)
            } else if k == t {
                (&id, &x)
            } else {
                (&id, &id)
            };
            a = kron(&a, fa);
            b = kron(&b, fb);
        }
        a + b
    }

    /// Full `2^n x 2^n` unitary of `gates` (applied first to last).
    pub fn dense_unitary(gates: &[Gate], n_q: usize) -> Result<DMatrix<Complex64>> {
        if n_q == 0 {
            return Err(Error::TooFewQubits { n_q, min: 1 });
        }
        if n_q > MAX_ORACLE_QUBITS {
            return Err(Error::TooManyQubits {
                n_q,
                max: MAX_ORACLE_QUBITS,
            });
        }
        let check = |q: usize| {
            if q == 0 || q > n_q {
                Err(Error::QubitOutOfRange { index: q, n_q })
            } else {
                Ok(())
            }
        };
        let dim = 1 << n_q;
        let mut u = DMatrix::<Complex64>::identity(dim, dim);
        for g in gates {
            let step = match *g {
                Gate::H(q) => {
                    check(q)?;
                    single(n_q, q, &SingleQubitGate::hadamard())
                }
                Gate::Ry(q, th) => {
                    check(q)?;
                    single(n_q, q, &SingleQubitGate::ry(th))
                }
                Gate::Cnot { control, target } => {
                    check(control)?;
                    check(target)?;
                    if control == target {
                        return Err(Error::SelfEntanglement(control));
                    }
                    cnot(n_q, control, target)
                }
            };
            u = step * u;
        }
        Ok(u)
    }
}
