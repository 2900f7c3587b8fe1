use std::collections::HashMap;

use super::{eig::eig_general_with, ensure_square, sparsity_components, submatrix, CMatrix, CVector, Tolerances, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum PropagatorKind {
    /// `V diag(e^{λt}) V⁻¹`, used when the eigenvector basis is well conditioned.
    Spectral,
    /// Padé scaling and squaring of `A t`.
    ScalingSquaring,
}

/// Reusable evaluator of `e^{At} v` for a fixed generator `A`.
///
/// `A` is split into the connected components of its sparsity pattern and
/// each component gets its own evaluator, spectral when its eigenvector
/// basis is well conditioned and scaling-and-squaring otherwise.
#[derive(Clone, Debug)]
pub struct Propagator {
    dim: usize,
    parts: Vec<(Vec<usize>, Dense)>,
}

#[derive(Clone, Debug)]
struct Dense {
    a: CMatrix,
    spectral: Option<Spectral>,
    eigenvector_condition: f64,
}

#[derive(Clone, Debug)]
struct Spectral {
    values: Vec<C64>,
    vectors: CMatrix,
    inverse: CMatrix,
}

impl Propagator {
    pub fn new(a: &CMatrix) -> Result<Self> {
        Self::with_tolerances(a, &Tolerances::default())
    }

    pub fn with_tolerances(a: &CMatrix, tol: &Tolerances) -> Result<Self> {
        ensure_square(a)?;
        let parts = sparsity_components(a)
            .into_iter()
            .map(|idx| {
                let dense = Dense::new(submatrix(a, &idx), tol);
                (idx, dense)
            })
            .collect();
        Ok(Self { dim: a.nrows(), parts })
    }

    /// Forces a single scaling-and-squaring evaluator (used as a reference).
    pub fn scaling_squaring(a: &CMatrix) -> Result<Self> {
        let n = ensure_square(a)?;
        Ok(Self {
            dim: n,
            parts: vec![(
                (0..n).collect(),
                Dense {
                    a: a.clone(),
                    spectral: None,
                    eigenvector_condition: f64::NAN,
                },
            )],
        })
    }

    /// `Spectral` only if every component uses the spectral path.
    pub fn kind(&self) -> PropagatorKind {
        if self.parts.iter().all(|(_, d)| d.spectral.is_some()) {
            PropagatorKind::Spectral
        } else {
            PropagatorKind::ScalingSquaring
        }
    }

    /// Largest eigenvector-basis condition number over the components.
    pub fn eigenvector_condition(&self) -> f64 {
        self.parts
            .iter()
            .map(|(_, d)| d.eigenvector_condition)
            .fold(0.0, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues of the generator, available on the spectral path.
    pub fn eigenvalues(&self) -> Option<Vec<C64>> {
        let mut out = Vec::with_capacity(self.dim);
        for (_, d) in &self.parts {
            out.extend_from_slice(&d.spectral.as_ref()?.values);
        }
        Some(out)
    }

    fn check(&self, v: &CVector, t: f64) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "propagation time must be finite and non-negative, got {t}"
            )));
        }
        Ok(())
    }

    pub fn apply(&self, v: &CVector, t: f64) -> Result<CVector> {
        self.check(v, t)?;
        if t == 0.0 {
            return Ok(v.clone());
        }
        let mut out = CVector::zeros(self.dim);
        for (idx, d) in &self.parts {
            let sub = gather(v, idx);
            if sub.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            scatter(&mut out, idx, &d.apply(&sub, t));
        }
        Ok(out)
    }

    /// Evaluates `e^{A t_k} v` on an ascending grid.
    ///
    /// On the scaling-and-squaring path the grid is walked step by step and
    /// the step exponentials are cached, so uniform grids cost one matrix
    /// exponential.
    pub fn apply_grid(&self, v: &CVector, times: &[f64]) -> Result<Vec<CVector>> {
        if times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Domain("time grid must be ascending".into()));
        }
        let Some(&first) = times.first() else {
            return Ok(Vec::new());
        };
        self.check(v, first)?;
        let mut out = vec![CVector::zeros(self.dim); times.len()];
        for (idx, d) in &self.parts {
            let sub = gather(v, idx);
            if sub.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            for (o, x) in out.iter_mut().zip(d.apply_grid(&sub, times)) {
                scatter(o, idx, &x);
            }
        }
        Ok(out)
    }
}

fn gather(v: &CVector, idx: &[usize]) -> CVector {
    CVector::from_fn(idx.len(), |k, _| v[idx[k]])
}

fn scatter(out: &mut CVector, idx: &[usize], x: &CVector) {
    for (k, &i) in idx.iter().enumerate() {
        out[i] = x[k];
    }
}

impl Dense {
    fn new(a: CMatrix, tol: &Tolerances) -> Self {
        let mut out = Self {
            a,
            spectral: None,
            eigenvector_condition: f64::INFINITY,
        };
        if let Ok(eig) = eig_general_with(&out.a, tol) {
            if let Some(inverse) = eig.vectors.clone().try_inverse() {
                let cond = norm1(&eig.vectors) * norm1(&inverse);
                out.eigenvector_condition = cond;
                if cond.is_finite() && cond < tol.spectral_condition {
                    out.spectral = Some(Spectral {
                        values: eig.values,
                        vectors: eig.vectors,
                        inverse,
                    });
                }
            }
        }
        out
    }

    fn apply(&self, v: &CVector, t: f64) -> CVector {
        match &self.spectral {
            Some(s) => s.apply_coeffs(&(&s.inverse * v), t),
            None => (&self.a * C64::from(t)).exp() * v,
        }
    }

    fn apply_grid(&self, v: &CVector, times: &[f64]) -> Vec<CVector> {
        if let Some(s) = &self.spectral {
            let coeffs = &s.inverse * v;
            return times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        v.clone()
                    } else {
                        s.apply_coeffs(&coeffs, t)
                    }
                })
                .collect();
        }
        let mut cache: HashMap<u64, CMatrix> = HashMap::new();
        let mut out = Vec::with_capacity(times.len());
        let mut current = if times[0] == 0.0 {
            v.clone()
        } else {
            self.apply(v, times[0])
        };
        let mut prev = times[0];
        out.push(current.clone());
        for &t in &times[1..] {
            let dt = t - prev;
            if dt > 0.0 {
                // Steps equal to ~12 digits share one exponential.
                let key = quantize(dt);
                let step = cache.entry(key).or_insert_with(|| (&self.a * C64::from(dt)).exp());
                current = &*step * &current;
            }
            prev = t;
            out.push(current.clone());
        }
        out
    }
}

impl Spectral {
    fn apply_coeffs(&self, coeffs: &CVector, t: f64) -> CVector {
        let scaled = CVector::from_fn(coeffs.len(), |k, _| coeffs[k] * (self.values[k] * t).exp());
        &self.vectors * scaled
    }
}

fn quantize(dt: f64) -> u64 {
    let digits = 12;
    let e = dt.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - e);
    ((dt * scale).round() / scale).to_bits()
}

fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{At} v` for a single time.
pub fn expm_action(a: &CMatrix, v: &CVector, t: f64) -> Result<CVector> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "backward propagation is not supported (t = {t})"
        )));
    }
    if t == 0.0 {
        ensure_square(a)?;
        return Ok(v.clone());
    }
    Propagator::new(a)?.apply(v, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::vec_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dissipative(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        a - CMatrix::identity(n, n) * C64::from(n as f64 / 2.0)
    }

    #[test]
    fn zero_time_is_identity() {
        let a = random_dissipative(5, 1);
        let v = CVector::from_element(5, C64::new(0.3, -1.0));
        assert_eq!(expm_action(&a, &v, 0.0).unwrap(), v);
    }

    #[test]
    fn scalar_decay() {
        let a = CMatrix::from_element(1, 1, C64::from(-1.0));
        let v = CVector::from_element(1, C64::from(1.0));
        let r = expm_action(&a, &v, 1.0).unwrap();
        assert!((r[0].re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn negative_time_rejected() {
        let a = CMatrix::identity(2, 2);
        let v = CVector::zeros(2);
        assert!(matches!(expm_action(&a, &v, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn spectral_matches_pade_reference() {
        let a = random_dissipative(20, 3);
        let v = CVector::from_fn(20, |i, _| C64::new(i as f64, 1.0));
        let p = Propagator::new(&a).unwrap();
        assert_eq!(p.kind(), PropagatorKind::Spectral);
        let reference = Propagator::scaling_squaring(&a).unwrap();
        for &t in &[0.1, 0.7, 2.5] {
            let x = p.apply(&v, t).unwrap();
            let y = reference.apply(&v, t).unwrap();
            assert!(vec_norm(&(&x - &y)) < 1e-9 * vec_norm(&y));
        }
    }

    #[test]
    fn semigroup_property() {
        let a = random_dissipative(16, 9);
        let v = CVector::from_fn(16, |i, _| C64::new(1.0, i as f64 * 0.1));
        let (t1, t2) = (0.4, 1.3);
        let direct = expm_action(&a, &v, t1 + t2).unwrap();
        let composed = expm_action(&a, &expm_action(&a, &v, t1).unwrap(), t2).unwrap();
        assert!(vec_norm(&(&direct - &composed)) < 1e-8 * vec_norm(&direct));
    }

    #[test]
    fn grid_walk_matches_pointwise() {
        let a = random_dissipative(8, 4);
        let v = CVector::from_element(8, C64::from(1.0));
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let p = Propagator::scaling_squaring(&a).unwrap();
        let walked = p.apply_grid(&v, &times).unwrap();
        for (t, w) in times.iter().zip(&walked) {
            let direct = p.apply(&v, *t).unwrap();
            assert!(vec_norm(&(w - &direct)) < 1e-12 * (1.0 + vec_norm(&direct)));
        }
    }

    #[test]
    fn defective_falls_back() {
        // Exact Jordan block: eigenvectors are parallel.
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[C64::from(-1.0), C64::from(1.0), C64::from(0.0), C64::from(-1.0)],
        );
        let p = Propagator::new(&a).unwrap();
        assert_eq!(p.kind(), PropagatorKind::ScalingSquaring);
        let v = CVector::from_vec(vec![C64::from(0.0), C64::from(1.0)]);
        let r = p.apply(&v, 2.0).unwrap();
        // e^{At} = e^{-t} [[1, t], [0, 1]]
        let e = (-2.0f64).exp();
        assert!((r[0].re - 2.0 * e).abs() < 1e-13);
        assert!((r[1].re - e).abs() < 1e-13);
    }
}
