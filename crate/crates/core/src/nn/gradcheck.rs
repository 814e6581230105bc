use super::params::ParamSet;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index where the worst error occurred.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares the gradients stored in `params` against central differences of `f`.
///
/// The per-entry error is `|analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn grad_check<S, F>(params: &ParamSet<S>, step: f64, mut f: F) -> Result<GradCheckReport>
where
    S: Scalar,
    F: FnMut(&ParamSet<S>) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {step}")));
    }
    let mut probe = params.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0 };
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in &names {
        let n = params.value(name)?.len();
        for i in 0..n {
            let analytic = params.grad(name)?.data()[i].as_f64();
            let original = params.value(name)?.data()[i];
            probe.value_mut(name)?.data_mut()[i] = original + S::of(step);
            let up = f(&probe)?;
            probe.value_mut(name)?.data_mut()[i] = original - S::of(step);
            let down = f(&probe)?;
            probe.value_mut(name)?.data_mut()[i] = original;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::numeric(format!("objective not finite while perturbing {name}[{i}]")));
            }
            let numeric = (up - down) / (2.0 * step);
            let denom = analytic.abs().max(numeric.abs()).max(1e-12);
            let err = (analytic - numeric).abs() / denom;
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn params(values: &[f64], grads: &[f64]) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.insert("p", Tensor::vector(values.to_vec()));
        p.get_mut("p").unwrap().grad.data_mut().copy_from_slice(grads);
        p
    }

    #[test]
    fn linear_objective() {
        let p = params(&[0.3, -1.2, 4.0], &[1.0, 1.0, 1.0]);
        let r = grad_check(&p, 1e-5, |q| Ok(q.flat_values().iter().sum())).unwrap();
        assert!(r.max_rel_error <= 1e-10, "{r:?}");
        assert_eq!(r.checked, 3);
    }

    #[test]
    fn quadratic_objective() {
        let p = params(&[2.0, -3.0], &[2.0, -3.0]);
        let r = grad_check(&p, 1e-5, |q| Ok(0.5 * q.flat_values().iter().map(|x| x * x).sum::<f64>())).unwrap();
        assert!(r.max_rel_error <= 1e-8, "{r:?}");
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let p = params(&[2.0], &[1.0]);
        let r = grad_check(&p, 1e-5, |q| Ok(q.flat_values()[0].powi(2))).unwrap();
        assert!(r.max_rel_error > 0.5);
    }

    #[test]
    fn non_finite_objective_is_numeric_error() {
        let p = params(&[0.0], &[0.0]);
        assert!(matches!(grad_check(&p, 1e-5, |_| Ok(f64::NAN)), Err(Error::Numeric(_))));
        assert!(grad_check(&p, 0.0, |_| Ok(0.0)).is_err());
    }
}
