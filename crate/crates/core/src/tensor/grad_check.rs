//! Central-difference gradient checking.

/// Outcome of a finite-difference sweep.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error over the sampled coordinates.
    pub max_rel_err: f64,
    /// Flat index of the worst coordinate.
    pub worst_coord: usize,
    /// Number of coordinates checked.
    pub checked: usize,
}

/// Compare `analytic_grad` against central differences of `loss` at `theta`.
///
/// For each sampled coordinate i the relative error is
/// |fd − analytic| / max(|fd|, |analytic|, 1e−8) with
/// fd = (loss(θ+ε·e_i) − loss(θ−ε·e_i)) / 2ε. The loss must be evaluable
/// at the perturbed points; double precision throughout.
pub fn grad_check(
    mut loss: impl FnMut(&[f64]) -> f64,
    analytic_grad: &[f64],
    theta: &[f64],
    coords: &[usize],
    eps: f64,
) -> GradCheckReport {
    assert_eq!(theta.len(), analytic_grad.len());
    let mut work = theta.to_vec();
    let mut max_rel_err = 0.0;
    let mut worst_coord = 0;
    for &i in coords {
        let orig = work[i];
        work[i] = orig + eps;
        let up = loss(&work);
        work[i] = orig - eps;
        let down = loss(&work);
        work[i] = orig;
        let fd = (up - down) / (2.0 * eps);
        let a = analytic_grad[i];
        let rel = (fd - a).abs() / fd.abs().max(a.abs()).max(1e-8);
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_coord = i;
        }
    }
    GradCheckReport {
        max_rel_err,
        worst_coord,
        checked: coords.len(),
    }
}
