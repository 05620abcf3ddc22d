//! Independent simulation oracles. They share no code with `blochsim`: state
//! vectors and density matrices are propagated with explicit complex 2×2
//! matrices.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Mat = [[C; 2]; 2];

#[derive(Clone, Copy, Debug)]
pub enum Gate {
    Ry(f64),
    Rx(f64),
    H,
}

pub fn matrix(g: Gate) -> Mat {
    match g {
        Gate::Ry(t) => {
            let (s, c) = (t / 2.0).sin_cos();
            [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]
        }
        Gate::Rx(t) => {
            let (s, c) = (t / 2.0).sin_cos();
            [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
        }
        Gate::H => {
            let r = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [[r, r], [r, -r]]
        }
    }
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn dagger(a: &Mat) -> Mat {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// P(1) after applying `gates` (application order) to |0⟩, by state vectors.
pub fn p1_statevector(gates: &[Gate]) -> f64 {
    let mut psi = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    for &g in gates {
        let m = matrix(g);
        psi = [m[0][0] * psi[0] + m[0][1] * psi[1], m[1][0] * psi[0] + m[1][1] * psi[1]];
    }
    psi[1].norm_sqr()
}

/// P(1) with a depolarizing channel of strength `d` after every gate, by
/// density matrices: ρ → (1−d)·UρU† + d·I/2.
pub fn p1_density(gates: &[Gate], d: f64) -> f64 {
    let half = C::new(0.5, 0.0);
    let zero = C::new(0.0, 0.0);
    let mut rho: Mat = [[C::new(1.0, 0.0), zero], [zero, zero]];
    for &g in gates {
        let u = matrix(g);
        let r = mul(&mul(&u, &rho), &dagger(&u));
        let keep = C::new(1.0 - d, 0.0);
        let mix = C::new(d, 0.0) * half;
        rho = [[keep * r[0][0] + mix, keep * r[0][1]], [keep * r[1][0], keep * r[1][1] + mix]];
    }
    rho[1][1].re
}

/// Gates for `H ∘ chain` with the given application-order axes and angles.
pub fn chain_gates(axes: &str, angles: &[f64]) -> Vec<Gate> {
    let mut gates: Vec<Gate> = axes
        .chars()
        .zip(angles)
        .map(|(a, &t)| match a {
            'X' => Gate::Rx(t),
            'Y' => Gate::Ry(t),
            _ => panic!("axis {a}"),
        })
        .collect();
    gates.push(Gate::H);
    gates
}
