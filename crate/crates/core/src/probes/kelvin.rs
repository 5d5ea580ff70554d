//! Kelvin's fundamental solution of the homogeneous isotropic system and
//! checks of its decay and of the equation it solves.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::Num;

/// `Gamma(x) = [(3 - 4 nu) I + xhat xhat^T] / (16 pi mu (1 - nu) |x|)`.
pub fn kelvin_eval(mu: f64, nu: f64, x: [f64; 3]) -> Result<Matrix3<f64>> {
    let v = Vector3::from(x);
    let r = v.norm();
    if r < 1e-12 {
        return Err(Error::AtSingularity);
    }
    let xh = v / r;
    let m = Matrix3::identity() * (3.0 - 4.0 * nu) + xh * xh.transpose();
    Ok(m / (16.0 * std::f64::consts::PI * mu * (1.0 - nu) * r))
}

fn eval(mu: f64, nu: f64, x: Vector3<f64>) -> Matrix3<f64> {
    kelvin_eval(mu, nu, x.into()).expect("FD stencil stays away from the origin")
}

/// Frobenius norm of the 27 first derivatives, by fourth-order central differences.
pub fn kelvin_gradient_norm(mu: f64, nu: f64, x: [f64; 3]) -> Result<f64> {
    let v = Vector3::from(x);
    let h = 1e-3 * v.norm();
    kelvin_eval(mu, nu, x)?;
    let mut s = 0.0;
    for k in 0..3 {
        let e = Vector3::ith(k, h);
        let d = (eval(mu, nu, v - 2.0 * e) - eval(mu, nu, v + 2.0 * e) + (eval(mu, nu, v + e) - eval(mu, nu, v - e)) * 8.0)
            / (12.0 * h);
        s += d.norm_squared();
    }
    Ok(s.sqrt())
}

const D2: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

/// Largest entry of `mu Lap Gamma + (lam + mu) grad div Gamma` at `x`,
/// column by column, with sixth-order differences of step `h`.
pub fn kelvin_pde_residual(mu: f64, nu: f64, x: [f64; 3], h: f64) -> Result<f64> {
    let v = Vector3::from(x);
    if v.norm() < 1e-12 + 3.0 * h {
        return Err(Error::AtSingularity);
    }
    let lam = 2.0 * mu * nu / (1.0 - 2.0 * nu);
    let mut lap = Matrix3::zeros();
    for k in 0..3 {
        for (s, w) in D2.iter().enumerate() {
            lap += eval(mu, nu, v + Vector3::ith(k, (s as f64 - 3.0) * h)) * *w;
        }
    }
    lap /= h * h;
    // grad div: (d_i d_k Gamma_kj)
    let mut gd = Matrix3::zeros();
    for i in 0..3 {
        for k in 0..3 {
            let mut dik = Matrix3::zeros();
            if i == k {
                for (s, w) in D2.iter().enumerate() {
                    dik += eval(mu, nu, v + Vector3::ith(k, (s as f64 - 3.0) * h)) * *w;
                }
                dik /= h * h;
            } else {
                for (a, wa) in D1.iter().enumerate() {
                    if *wa == 0.0 {
                        continue;
                    }
                    for (b, wb) in D1.iter().enumerate() {
                        if *wb == 0.0 {
                            continue;
                        }
                        let off = Vector3::ith(i, (a as f64 - 3.0) * h) + Vector3::ith(k, (b as f64 - 3.0) * h);
                        dik += eval(mu, nu, v + off) * (wa * wb);
                    }
                }
                dik /= h * h;
            }
            for j in 0..3 {
                gd[(i, j)] += dik[(k, j)];
            }
        }
    }
    Ok((lap * mu + gd * (lam + mu)).amax())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KelvinDecay {
    /// Log-log slope of `|Gamma|`.
    pub value_slope: Num,
    /// Log-log slope of `|grad Gamma|`.
    pub gradient_slope: Num,
    pub n_points: usize,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Regress `log|Gamma|` and `log|grad Gamma|` against `log|x|` over
/// `|x| in [1, 100]`, at `n_points` log-spaced radii along each direction.
pub fn kelvin_decay_fit(mu: f64, nu: f64, directions: &[[f64; 3]], n_points: usize) -> Result<KelvinDecay> {
    let (mut lx, mut lv, mut lg) = (Vec::new(), Vec::new(), Vec::new());
    for d in directions {
        let dv = Vector3::from(*d).normalize();
        for k in 0..n_points {
            let r = 10f64.powf(2.0 * k as f64 / (n_points - 1) as f64);
            let x: [f64; 3] = (dv * r).into();
            lx.push(r.ln());
            lv.push(kelvin_eval(mu, nu, x)?.norm().ln());
            lg.push(kelvin_gradient_norm(mu, nu, x)?.ln());
        }
    }
    Ok(KelvinDecay { value_slope: Num(slope(&lx, &lv)), gradient_slope: Num(slope(&lx, &lg)), n_points: lx.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_point_values() {
        let g = kelvin_eval(1.0, 0.0, [1.0, 0.0, 0.0]).unwrap();
        assert!((g[(0, 0)] - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((g[(1, 1)] - 3.0 / (16.0 * PI)).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn parity_and_symmetry() {
        let x = [0.3, -1.2, 0.7];
        let g = kelvin_eval(0.8, 0.3, x).unwrap();
        assert_eq!(g, g.transpose());
        assert_eq!(g, kelvin_eval(0.8, 0.3, x.map(|c| -c)).unwrap());
        assert_eq!(kelvin_eval(1.0, 0.2, [0.0; 3]).unwrap_err().code(), "AT_SINGULARITY");
    }

    #[test]
    fn solves_the_equation_away_from_the_origin() {
        let r = kelvin_pde_residual(1.0, 0.25, [1.0, 0.5, -0.3], 1e-2).unwrap();
        assert!(r < 1e-6, "{r}");
    }
}
