//! Derivative-free brute-force evaluation of the decomposition norm for tiny
//! problems, independent of the SVD and proximal machinery.
//!
//! With `N <= 2` and `d1, d2 <= 2` both grams are at most `2 x 2`, so their
//! eigenvalues have a closed form. The objective is smoothed by replacing
//! each singular value `sigma` with `sqrt(sigma^2 + mu^2)` and minimised by a
//! multistart pattern search over coordinate and random directions while
//! `mu` is driven to zero.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::schatten::SchattenExponent;
use crate::square::OperatorSequence;

const ORACLE_SEED: u64 = 0x0ac1e;

/// Upper bound on `|||(x_n)|||_p` from `resolution` random starts plus the
/// three canonical ones (`y = x/2`, `y = x`, `y = 0`).
pub fn triple_norm_oracle<T: Real>(seq: &OperatorSequence<T>, p: SchattenExponent, resolution: usize) -> Result<T> {
    let (d1, d2) = seq.shape();
    if seq.len() > 2 || d1 > 2 || d2 > 2 {
        return Err(Error::TooLarge(format!(
            "oracle supports N <= 2 and d1, d2 <= 2; got N = {}, shape {d1}x{d2}",
            seq.len()
        )));
    }
    let x: Vec<f64> = seq
        .terms()
        .iter()
        .flat_map(|t| t.entries().iter().flat_map(|z| [z.re.as_f64(), z.im.as_f64()]))
        .collect();
    let problem = Problem { n: seq.len(), d1, d2, x, p: p.value() };
    let scale = problem.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(T::zero());
    }

    let dim = problem.x.len();
    let mut rng = stream_rng(ORACLE_SEED, 0);
    let mut starts: Vec<Vec<f64>> =
        vec![problem.x.iter().map(|v| v * 0.5).collect(), problem.x.clone(), vec![0.0; dim]];
    for _ in 0..resolution {
        starts.push((0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect());
    }

    let mut best = f64::INFINITY;
    for start in starts {
        let mut y = start;
        for mu in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 0.0] {
            let f = |v: &[f64]| problem.objective(v, mu * scale);
            y = pattern_search(&f, y, 0.1 * scale, 1e-10 * scale, &mut rng);
        }
        best = best.min(problem.objective(&y, 0.0));
    }
    Ok(T::lit(best))
}

struct Problem {
    n: usize,
    d1: usize,
    d2: usize,
    x: Vec<f64>,
    p: f64,
}

type C = Complex<f64>;

impl Problem {
    fn entry(v: &[f64], d1: usize, d2: usize, n: usize, i: usize, j: usize) -> C {
        let k = (n * d1 * d2 + i * d2 + j) * 2;
        C::new(v[k], v[k + 1])
    }

    fn objective(&self, y: &[f64], mu: f64) -> f64 {
        let (d1, d2) = (self.d1, self.d2);
        let z: Vec<f64> = self.x.iter().zip(y).map(|(a, b)| a - b).collect();
        // column gram of y (d2 x d2) and row gram of z (d1 x d1)
        let mut col = [[C::new(0.0, 0.0); 2]; 2];
        let mut row = [[C::new(0.0, 0.0); 2]; 2];
        for n in 0..self.n {
            for a in 0..d2 {
                for b in 0..d2 {
                    for i in 0..d1 {
                        col[a][b] += Self::entry(y, d1, d2, n, i, a).conj() * Self::entry(y, d1, d2, n, i, b);
                    }
                }
            }
            for a in 0..d1 {
                for b in 0..d1 {
                    for j in 0..d2 {
                        row[a][b] += Self::entry(&z, d1, d2, n, a, j) * Self::entry(&z, d1, d2, n, b, j).conj();
                    }
                }
            }
        }
        self.root_norm(&col, d2, mu) + self.root_norm(&row, d1, mu)
    }

    /// Schatten norm of the square root of a PSD gram of order 1 or 2.
    fn root_norm(&self, g: &[[C; 2]; 2], order: usize, mu: f64) -> f64 {
        let eig: Vec<f64> = if order == 1 {
            vec![g[0][0].re]
        } else {
            let (a, d) = (g[0][0].re, g[1][1].re);
            let h = ((0.5 * (a - d)).powi(2) + g[0][1].norm_sqr()).sqrt();
            vec![0.5 * (a + d) + h, 0.5 * (a + d) - h]
        };
        let sv: Vec<f64> = eig.iter().map(|&l| (l.max(0.0) + mu * mu).sqrt()).collect();
        if self.p.is_infinite() {
            sv.iter().cloned().fold(0.0, f64::max)
        } else {
            sv.iter().map(|s| s.powf(self.p)).sum::<f64>().powf(1.0 / self.p)
        }
    }
}

fn pattern_search<R: Rng>(f: &dyn Fn(&[f64]) -> f64, mut x: Vec<f64>, mut step: f64, min_step: f64, rng: &mut R) -> Vec<f64> {
    let dim = x.len();
    let mut fx = f(&x);
    let mut stalls = 0;
    while step > min_step {
        let mut improved = false;
        let mut dirs: Vec<Vec<f64>> = (0..dim)
            .map(|k| {
                let mut e = vec![0.0; dim];
                e[k] = 1.0;
                e
            })
            .collect();
        for _ in 0..dim {
            let mut d: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let nrm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            d.iter_mut().for_each(|v| *v /= nrm);
            dirs.push(d);
        }
        for d in &dirs {
            for sign in [1.0, -1.0] {
                let cand: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + sign * step * b).collect();
                let fc = f(&cand);
                if fc < fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
        }
        if improved {
            stalls = 0;
        } else {
            stalls += 1;
            // two failed polls before shrinking lets the random directions retry
            if stalls >= 2 {
                step *= 0.5;
                stalls = 0;
            }
        }
    }
    x
}
