use crate::params::ParamStore;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// `(parameter name, max relative error over checked coordinates)`.
    pub per_param: Vec<(String, f64)>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "grad check max rel err {:.3e} (tol {:.0e}) {}",
            self.max_rel_error,
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        for (name, e) in &self.per_param {
            writeln!(f, "  {name:<32} {e:.3e}")?;
        }
        Ok(())
    }
}

/// Relative error with an absolute floor so that gradients that are zero up
/// to rounding do not produce spurious failures.
pub fn rel_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    pub tolerance: f64,
    pub floor: f64,
    /// Check at most this many coordinates per parameter (evenly strided).
    pub max_per_param: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            epsilon: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            max_per_param: usize::MAX,
        }
    }
}

/// Compares analytic gradients against central differences.
///
/// `loss_and_grad` must zero and then fill the store's gradient buffers and
/// return the loss; `loss` evaluates the loss only.
pub fn grad_check(
    store: &mut ParamStore,
    loss_and_grad: &mut dyn FnMut(&mut ParamStore) -> f64,
    loss: &mut dyn FnMut(&ParamStore) -> f64,
    config: &GradCheckConfig,
) -> GradCheckReport {
    store.zero_grad();
    loss_and_grad(store);
    let analytic: Vec<Vec<f64>> = store.ids().map(|id| store.grad(id).to_vec()).collect();
    let mut per_param = Vec::new();
    let mut overall: f64 = 0.0;
    let ids: Vec<_> = store.ids().collect();
    for (pi, id) in ids.into_iter().enumerate() {
        let n = store.get(id).len();
        let stride = n.div_ceil(config.max_per_param.max(1)).max(1);
        let mut worst: f64 = 0.0;
        let mut j = 0;
        while j < n {
            let orig = store.get(id)[j];
            store.value_mut(id).data[j] = orig + config.epsilon;
            let up = loss(store);
            store.value_mut(id).data[j] = orig - config.epsilon;
            let down = loss(store);
            store.value_mut(id).data[j] = orig;
            let numeric = (up - down) / (2.0 * config.epsilon);
            worst = worst.max(rel_error(analytic[pi][j], numeric, config.floor));
            j += stride;
        }
        overall = overall.max(worst);
        per_param.push((store.name(id).to_string(), worst));
    }
    GradCheckReport {
        per_param,
        max_rel_error: overall,
        tolerance: config.tolerance,
        passed: overall < config.tolerance,
    }
}

/// Gradient check for a function of a plain vector (used for input gradients).
pub fn grad_check_vec(
    x: &[f64],
    analytic: &[f64],
    f: &mut dyn FnMut(&[f64]) -> f64,
    config: &GradCheckConfig,
) -> f64 {
    let mut p = x.to_vec();
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let orig = p[j];
        p[j] = orig + config.epsilon;
        let up = f(&p);
        p[j] = orig - config.epsilon;
        let down = f(&p);
        p[j] = orig;
        let numeric = (up - down) / (2.0 * config.epsilon);
        worst = worst.max(rel_error(analytic[j], numeric, config.floor));
    }
    worst
}
