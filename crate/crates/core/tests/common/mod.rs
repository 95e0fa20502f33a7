//! Independent reference implementations used by the integration tests.
//! Apart from [`crosscheck`], nothing here calls into the library's numerics.

#![allow(dead_code)]

pub mod crosscheck;

use nalgebra::{DMatrix, DVector};

/// Circuit constants for the oracles, kept separate from the library types.
#[derive(Clone, Copy, Debug)]
pub struct Circuit {
    pub r_e: f64,
    pub r_c: f64,
    pub r_t: f64,
    pub c_b: f64,
    pub c_c: f64,
}

/// Solve the two loop equations for the bulk branch current and terminal voltage:
///
/// ```text
/// V_O - I_b R_e            = I_S R_t + V_b
/// V_O + I_b R_c            = I_S (R_t + R_c) + V_c
/// ```
///
/// by Cramer's rule. Returns `(I_b, V_O)`.
pub fn circuit_solve(c: &Circuit, v_b: f64, v_c: f64, i_s: f64) -> (f64, f64) {
    let (a11, a12, b1) = (-c.r_e, 1.0, i_s * c.r_t + v_b);
    let (a21, a22, b2) = (c.r_c, 1.0, i_s * (c.r_t + c.r_c) + v_c);
    let det = a11 * a22 - a12 * a21;
    let i_b = (b1 * a22 - a12 * b2) / det;
    let v_o = (a11 * b2 - b1 * a21) / det;
    (i_b, v_o)
}

/// Capacitor voltage rates from the branch currents of [`circuit_solve`].
pub fn rates(c: &Circuit, v_b: f64, v_c: f64, i_s: f64) -> (f64, f64) {
    let (i_b, _) = circuit_solve(c, v_b, v_c, i_s);
    let i_c = i_s - i_b;
    (i_b / c.c_b, i_c / c.c_c)
}

/// Classical RK4 over `dt` with `substeps` equal substeps, constant current.
pub fn rk4(c: &Circuit, v: (f64, f64), i_s: f64, dt: f64, substeps: usize) -> (f64, f64) {
    let h = dt / substeps as f64;
    let (mut b, mut cc) = v;
    for _ in 0..substeps {
        let k1 = rates(c, b, cc, i_s);
        let k2 = rates(c, b + 0.5 * h * k1.0, cc + 0.5 * h * k1.1, i_s);
        let k3 = rates(c, b + 0.5 * h * k2.0, cc + 0.5 * h * k2.1, i_s);
        let k4 = rates(c, b + h * k3.0, cc + h * k3.1, i_s);
        b += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        cc += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (b, cc)
}

/// Central differences of `f` at `x`, column by column. The step is large on
/// purpose: the battery map is bilinear, so truncation error vanishes and only
/// roundoff matters. It is capped at half of `|x|` so positive coordinates
/// stay positive.
pub fn central_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let rows = f(x).len();
    let mut j = DMatrix::zeros(rows, n);
    for col in 0..n {
        let h = (1e-3 * x[col].abs().max(1.0)).min(0.5 * x[col].abs()).max(1e-12);
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[col] += h;
        down[col] -= h;
        let (fu, fd) = (f(&up), f(&down));
        for row in 0..rows {
            j[(row, col)] = (fu[row] - fd[row]) / (2.0 * h);
        }
    }
    j
}

/// Textbook linear Kalman filter on dynamic matrices.
#[derive(Clone, Debug)]
pub struct ReferenceKf {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl ReferenceKf {
    pub fn step(&mut self, u: f64, z: &DVector<f64>) {
        let x_prior = &self.a * &self.x + &self.b * u;
        let p_prior = &self.a * &self.p * self.a.transpose() + &self.q;
        let s = &self.c * &p_prior * self.c.transpose() + &self.r;
        let s_inv = s.try_inverse().expect("innovation covariance invertible");
        let k = &p_prior * self.c.transpose() * s_inv;
        self.x = &x_prior + &k * (z - &self.c * &x_prior);
        let n = self.x.len();
        self.p = (DMatrix::identity(n, n) - &k * &self.c) * p_prior;
    }
}

/// `E[x^p]` for a standard normal: 0 for odd `p`, `(p-1)!!` for even.
pub fn normal_moment(p: u32) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    (1..p).step_by(2).map(f64::from).product()
}

/// Small deterministic generator for test inputs (SplitMix64).
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(f64::MIN_POSITIVE);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Linear 4-state, 2-output system shared by the filter cross-checks.
pub fn linear_system() -> ReferenceKf {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.97, 0.02, 0.0,  0.0,
        0.01, 0.95, 0.03, 0.0,
        0.0,  0.0,  0.99, 0.01,
        0.0,  0.0,  0.0,  1.0,
    ]);
    #[rustfmt::skip]
    let c = DMatrix::from_row_slice(2, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.5,
    ]);
    ReferenceKf {
        a,
        b: DVector::from_vec(vec![0.1, 0.05, 0.0, 0.0]),
        c,
        q: DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.02, 0.005, 0.001])),
        r: DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.2])),
        x: DVector::from_vec(vec![1.0, -0.5, 0.3, 0.2]),
        p: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 0.5, 0.25])),
    }
}

/// Measurement sequence simulated from [`linear_system`] with a fixed seed.
pub fn linear_measurements(steps: usize, seed: u64) -> Vec<(f64, DVector<f64>)> {
    let sys = linear_system();
    let mut rng = TestRng(seed);
    let mut x = DVector::from_vec(vec![1.2, -0.3, 0.1, 0.4]);
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let u = (k as f64 * 0.05).sin();
        let w = DVector::from_fn(4, |i, _| sys.q[(i, i)].sqrt() * rng.normal());
        x = &sys.a * &x + &sys.b * u + w;
        let v = DVector::from_fn(2, |i, _| sys.r[(i, i)].sqrt() * rng.normal());
        out.push((u, &sys.c * &x + v));
    }
    out
}
