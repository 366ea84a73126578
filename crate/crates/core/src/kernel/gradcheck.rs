use super::{Matrix, Tape, Var};
use crate::error::{Error, Result};

/// Denominator floor for relative errors so exact zeros compare cleanly.
const REL_FLOOR: f64 = 1e-6;

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub coordinates: usize,
}

/// Compare tape gradients of a scalar computation against central finite
/// differences `(f(p+eps) - f(p-eps)) / 2eps`, coordinate by coordinate.
///
/// `f` receives a fresh tape and one leaf per entry of `params`, and must
/// return a `1×1` node. It has to be deterministic in the parameters.
/// Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn check_gradients<F>(f: F, params: &[Matrix], eps: f64) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(Error::parameter(format!("finite-difference step {eps} must be positive")));
    }
    let eval = |ps: &[Matrix]| -> Result<(Tape, Vec<Var>, Var)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.leaf(p.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok((tape, vars, out))
    };

    let (tape, vars, out) = eval(params)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Matrix> = vars.iter().zip(params).map(|(&v, p)| grads.get_or_zeros(v, p)).collect();

    let mut report = GradCheck { max_rel_error: 0.0, max_abs_error: 0.0, coordinates: 0 };
    let mut work = params.to_vec();
    for (pi, p) in params.iter().enumerate() {
        for k in 0..p.as_slice().len() {
            let orig = p.as_slice()[k];
            work[pi].as_mut_slice()[k] = orig + eps;
            let (t_plus, _, o_plus) = eval(&work)?;
            work[pi].as_mut_slice()[k] = orig - eps;
            let (t_minus, _, o_minus) = eval(&work)?;
            work[pi].as_mut_slice()[k] = orig;

            let numeric = (t_plus.scalar(o_plus) - t_minus.scalar(o_minus)) / (2.0 * eps);
            let a = analytic[pi].as_slice()[k];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(REL_FLOOR);
            if !rel.is_finite() {
                return Err(Error::NonFinite(format!("gradient check at param {pi}[{k}]")));
            }
            report.max_abs_error = report.max_abs_error.max(abs);
            report.max_rel_error = report.max_rel_error.max(rel);
            report.coordinates += 1;
        }
    }
    Ok(report)
}
