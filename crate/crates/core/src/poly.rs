//! Dense polynomial helpers. Coefficients are stored in ascending order,
//! `c[k]` multiplying `x^k`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

pub fn eval_complex(c: &[Complex64], x: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * x + ck)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| k as f64 * ck)
        .collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn mul_complex(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(0.0) + b.get(k).copied().unwrap_or(0.0))
        .collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|v| v * s).collect()
}

/// Drops leading coefficients whose magnitude is below `rel_tol` times the
/// largest coefficient.
pub fn trim(c: &[f64], rel_tol: f64) -> Vec<f64> {
    let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut n = c.len();
    while n > 0 && c[n - 1].abs() <= rel_tol * max {
        n -= 1;
    }
    c[..n].to_vec()
}

/// All complex roots of a real polynomial, as eigenvalues of its companion
/// matrix. A polynomial of degree 0 has no roots.
pub fn roots(c: &[f64]) -> Result<Vec<Complex64>> {
    let c = trim(c, 0.0);
    if c.len() <= 1 {
        return Ok(Vec::new());
    }
    let deg = c.len() - 1;
    let lead = c[deg];
    // Zero roots are split off so the companion matrix stays well scaled.
    let zeros = c.iter().take_while(|v| **v == 0.0).count();
    let c = &c[zeros..];
    let deg_nz = c.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    if deg_nz == 0 {
        return Ok(out);
    }
    let mut m = DMatrix::<f64>::zeros(deg_nz, deg_nz);
    for i in 1..deg_nz {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg_nz {
        m[(i, deg_nz - 1)] = -c[i] / lead;
    }
    balance(&mut m);
    // nalgebra's Francis iteration has no exceptional shifts and can stall on
    // spectra symmetric about the imaginary axis; Aberth iteration on the
    // same polynomial takes over in that case.
    let eig: Vec<Complex64> = match m.try_schur(f64::EPSILON, 10_000) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect(),
        None => aberth(c)?,
    };
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(format!(
            "companion eigenvalues not finite for degree-{deg} polynomial"
        )));
    }
    out.extend(eig);
    Ok(out)
}

/// Simultaneous Aberth–Ehrlich iteration for all roots.
fn aberth(c: &[f64]) -> Result<Vec<Complex64>> {
    let n = c.len() - 1;
    let lead = c[n];
    let cc: Vec<Complex64> = c.iter().map(|v| Complex64::new(v / lead, 0.0)).collect();
    let dc: Vec<Complex64> = derivative(&c.iter().map(|v| v / lead).collect::<Vec<_>>())
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let radius = 1.0 + cc[..n].iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let pz = eval_complex(&cc, z[k]);
            if pz.norm() == 0.0 {
                continue;
            }
            let ratio = pz / eval_complex(&dc, z[k]);
            let sum: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| 1.0 / (z[k] - z[j]))
                .sum();
            let w = ratio / (1.0 - ratio * sum);
            if w.re.is_finite() && w.im.is_finite() {
                z[k] -= w;
                max_step = max_step.max(w.norm() / z[k].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            return Ok(z);
        }
    }
    Err(Error::Numerical(format!("root iteration did not converge for degree-{n} polynomial")))
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch), which
/// leaves eigenvalues unchanged and evens out row and column norms.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let total = c + r;
            let mut f = 1.0;
            let (mut c2, mut r2) = (c, r);
            while c2 < r2 / 2.0 {
                c2 *= 2.0;
                r2 /= 2.0;
                f *= 2.0;
            }
            while c2 > r2 * 2.0 {
                c2 /= 2.0;
                r2 *= 2.0;
                f /= 2.0;
            }
            if (c2 + r2) < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Newton refinement of a real root estimate; returns the input unchanged if
/// an iterate leaves the finite range or the derivative vanishes.
pub fn polish(c: &[f64], x0: f64, iters: usize) -> f64 {
    let d = derivative(c);
    let mut x = x0;
    for _ in 0..iters {
        let fx = eval(c, x);
        let dx = eval(&d, x);
        if dx == 0.0 || !dx.is_finite() {
            break;
        }
        let step = fx / dx;
        let next = x - step;
        if !next.is_finite() {
            break;
        }
        x = next;
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    x
}
