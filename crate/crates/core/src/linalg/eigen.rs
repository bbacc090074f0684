use super::{noise_floor, ComplexMatrix, C64, TOL};
use crate::error::{Error, Result};

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are real and sorted
/// in descending order; `vectors` holds the matching eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpectrum {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianSpectrum {
    /// `V · diag(g(λ)) · V†`
    pub fn map(&self, g: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let weights: Vec<C64> = self.values.iter().map(|&l| g(l)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * weights[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

/// Eigenvalues of a general (non-normal) square matrix, sorted by descending
/// real part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<C64>,
}

/// In-place cyclic Jacobi diagonalisation of an `n×n` Hermitian matrix.
///
/// On return `vals` holds the eigenvalues in descending order, `vecs` the
/// eigenvectors as columns (row-major) and `a` is destroyed. No allocation,
/// so it can sit on the propagation hot path.
pub fn eigh_in_place(n: usize, a: &mut [C64], vecs: &mut [C64], vals: &mut [f64]) -> Result<()> {
    debug_assert!(a.len() >= n * n && vecs.len() >= n * n && vals.len() >= n);
    for (idx, v) in vecs[..n * n].iter_mut().enumerate() {
        *v = if idx / n == idx % n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
    }
    for i in 0..n {
        a[i * n + i].im = 0.0;
    }

    let total: f64 = a[..n * n].iter().map(|z| z.norm_sqr()).sum();
    // Also catches entries so large their squares overflow, which would
    // otherwise make every off-diagonal look negligible.
    if !total.is_finite() {
        return Err(Error::NonFinite("matrix to diagonalise"));
    }
    let absolute_floor = total * 1e-36;

    let mut converged = false;
    for _ in 0..TOL.jacobi_max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                if g <= 0.5 * f64::EPSILON * (app.abs() + aqq.abs()) || g * g <= absolute_floor {
                    a[p * n + q] = C64::new(0.0, 0.0);
                    a[q * n + p] = C64::new(0.0, 0.0);
                    continue;
                }
                rotated = true;
                let phase_conj = (apq / g).conj();
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau.abs() > 1e150 {
                    0.5 / tau
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation J acting on columns p, q.
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = phase_conj * (-s);
                let jqq = phase_conj * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * jpp + akq * jqp;
                    a[k * n + q] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[p * n + q] = C64::new(0.0, 0.0);
                a[q * n + p] = C64::new(0.0, 0.0);
                a[p * n + p] = C64::new(app - t * g, 0.0);
                a[q * n + q] = C64::new(aqq + t * g, 0.0);

                for k in 0..n {
                    let vkp = vecs[k * n + p];
                    let vkq = vecs[k * n + q];
                    vecs[k * n + p] = vkp * jpp + vkq * jqp;
                    vecs[k * n + q] = vkp * jpq + vkq * jqq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: TOL.jacobi_max_sweeps,
        });
    }

    for i in 0..n {
        vals[i] = a[i * n + i].re;
    }
    // Selection sort, descending; n is tiny.
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            if vals[j] > vals[best] {
                best = j;
            }
        }
        if best != i {
            vals.swap(i, best);
            for k in 0..n {
                vecs.swap(k * n + i, k * n + best);
            }
        }
    }
    Ok(())
}

fn require_hermitian(h: &ComplexMatrix, tol: f64) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let deviation = h.hermitian_deviation();
    if deviation > tol {
        return Err(Error::NonHermitianInput { deviation });
    }
    Ok(())
}

pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianSpectrum> {
    require_hermitian(h, TOL.hermitian)?;
    let n = h.rows();
    let mut a = h.as_slice().to_vec();
    let mut vecs = ComplexMatrix::zeros(n, n);
    let mut values = vec![0.0; n];
    eigh_in_place(n, &mut a, vecs.as_mut_slice(), &mut values)?;
    Ok(HermitianSpectrum {
        values,
        vectors: vecs,
    })
}

/// `exp(-i·h·dt)` for Hermitian `h`, through its eigen-decomposition.
pub fn expm_unitary(h: &ComplexMatrix, dt: f64) -> Result<ComplexMatrix> {
    let spectrum = eig_hermitian(h)?;
    Ok(spectrum.map(|l| C64::from_polar(1.0, -l * dt)))
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
///
/// Eigenvalues in `[-psd_negative, 0)` are clamped to zero, as are positive
/// eigenvalues below the rounding-noise floor of the spectrum.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_hermitian(m, TOL.psd_negative)?;
    let n = m.rows();
    // Symmetrise so tiny anti-Hermitian noise does not leak into the result.
    let sym = ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut a = sym.as_slice().to_vec();
    let mut vecs = ComplexMatrix::zeros(n, n);
    let mut values = vec![0.0; n];
    eigh_in_place(n, &mut a, vecs.as_mut_slice(), &mut values)?;
    let smallest = values[n - 1];
    if smallest < -TOL.psd_negative {
        return Err(Error::NotPositiveSemidefinite {
            eigenvalue: smallest,
        });
    }
    let floor = noise_floor(n, values[0].abs());
    let spectrum = HermitianSpectrum {
        values,
        vectors: vecs,
    };
    Ok(spectrum.map(|l| C64::new(if l <= floor { 0.0 } else { l.sqrt() }, 0.0)))
}

fn hessenberg(n: usize, a: &mut [C64]) {
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n)
            .map(|i| a[i * n + k].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[i * n + k]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // A ← (I - 2vv†) A
        for j in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(l, vl)| vl.conj() * a[(k + 1 + l) * n + j])
                .sum();
            for (l, vl) in v.iter().enumerate() {
                a[(k + 1 + l) * n + j] -= vl * dot * 2.0;
            }
        }
        // A ← A (I - 2vv†)
        for i in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(l, vl)| a[i * n + k + 1 + l] * vl)
                .sum();
            for (l, vl) in v.iter().enumerate() {
                a[i * n + k + 1 + l] -= dot * vl.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            a[i * n + k] = C64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalues of a general square complex matrix via Hessenberg reduction
/// and Wilkinson-shifted QR with Givens rotations.
pub fn eig_general(m: &ComplexMatrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut h = m.as_slice().to_vec();
    hessenberg(n, &mut h);
    let scale = m.frobenius_norm();

    let mut hi = n - 1;
    let mut iterations = 0usize;
    let mut since_deflation = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1) * n + l - 1].norm() + h[l * n + l].norm();
            let s = if s == 0.0 { scale } else { s };
            if h[l * n + l - 1].norm() <= f64::EPSILON * s {
                h[l * n + l - 1] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iterations += 1;
        since_deflation += 1;
        if iterations > TOL.qr_max_iterations {
            return Err(Error::NoConvergence { iterations });
        }

        let a = h[(hi - 1) * n + hi - 1];
        let b = h[(hi - 1) * n + hi];
        let c = h[hi * n + hi - 1];
        let d = h[hi * n + hi];
        let mut shift = if since_deflation % 11 == 10 {
            // Exceptional shift to break cycles.
            d + C64::new(0.75 * c.norm(), 0.0)
        } else {
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let mid = (a + d) * 0.5;
            let mu1 = mid + disc;
            let mu2 = mid - disc;
            if (mu1 - d).norm() < (mu2 - d).norm() {
                mu1
            } else {
                mu2
            }
        };
        if !shift.re.is_finite() || !shift.im.is_finite() {
            shift = d;
        }

        for k in l..=hi {
            h[k * n + k] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[k * n + k];
            let y = h[(k + 1) * n + k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cg, sg) = if r == 0.0 {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (x / r, y / r)
            };
            for j in l..=hi {
                let top = h[k * n + j];
                let bot = h[(k + 1) * n + j];
                h[k * n + j] = cg.conj() * top + sg.conj() * bot;
                h[(k + 1) * n + j] = -sg * top + cg * bot;
            }
            rotations.push((cg, sg));
        }
        for (offset, &(cg, sg)) in rotations.iter().enumerate() {
            let k = l + offset;
            for i in l..=hi {
                let left = h[i * n + k];
                let right = h[i * n + k + 1];
                h[i * n + k] = left * cg + right * sg;
                h[i * n + k + 1] = -left * sg.conj() + right * cg.conj();
            }
        }
        for k in l..=hi {
            h[k * n + k] += shift;
        }
    }

    let mut values: Vec<C64> = (0..n).map(|i| h[i * n + i]).collect();
    values.sort_by(|x, y| y.re.total_cmp(&x.re));
    Ok(Spectrum { values })
}
