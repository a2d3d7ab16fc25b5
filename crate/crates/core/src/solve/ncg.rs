//! Preconditioned nonlinear conjugate gradients (Polak–Ribière+) with
//! Armijo backtracking, over a flat vector of real unknowns.

pub(crate) trait Objective {
    /// Raw gradient at the current point.
    fn gradient(&mut self) -> Vec<f64>;
    /// Approximate inverse Hessian applied to a gradient.
    fn precondition(&self, g: &[f64]) -> Vec<f64> {
        g.to_vec()
    }
    /// Energy change along `step · dir`, accurate relative to the change.
    fn change(&self, dir: &[f64], step: f64) -> f64;
    fn advance(&mut self, dir: &[f64], step: f64);
    /// Stationarity measure for the gradient just computed.
    fn residual(&self, g: &[f64]) -> f64;
    /// Hook after each accepted step; returns the energy change it made, or
    /// `None` when the point was left alone.
    fn after_step(&mut self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NcgSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub restart_every: usize,
    /// Largest first trial step, measured as the sup-norm of the update.
    pub first_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct NcgReport {
    pub outcome: Outcome,
    pub iterations: usize,
    pub residual: f64,
    /// Running energy relative to the start, one entry per accepted step.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // fixed-order pairwise chunks keep the result thread-count independent
    a.chunks(4096).zip(b.chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn line_search<O: Objective>(obj: &O, dir: &[f64], slope: f64, mut step: f64, s: &NcgSettings) -> Option<(f64, f64)> {
    let armijo_ok = |a: f64, fa: f64| fa.is_finite() && fa <= s.armijo * a * slope;
    let mut fa = obj.change(dir, step);
    for _ in 0..200 {
        if armijo_ok(step, fa) {
            // one quadratic refinement along the accepted segment
            let curv = (fa - slope * step) / (step * step);
            if curv > 0.0 {
                let aq = (-slope / (2.0 * curv)).min(4.0 * step);
                if (aq / step - 1.0).abs() > 0.1 {
                    let fq = obj.change(dir, aq);
                    if armijo_ok(aq, fq) && fq < fa {
                        return Some((aq, fq));
                    }
                }
            } else {
                let big = 2.0 * step;
                let fb = obj.change(dir, big);
                if armijo_ok(big, fb) && fb < fa {
                    return Some((big, fb));
                }
            }
            return Some((step, fa));
        }
        step *= s.shrink;
        if step == 0.0 {
            return None;
        }
        fa = obj.change(dir, step);
    }
    None
}

pub(crate) fn run<O: Objective>(
    obj: &mut O,
    s: &NcgSettings,
    mut observe: impl FnMut(&O, usize, f64, f64),
) -> NcgReport {
    let mut g = obj.gradient();
    let mut z = obj.precondition(&g);
    let mut gz = dot(&g, &z);
    let mut dir: Vec<f64> = z.iter().map(|v| -v).collect();
    let mut energy = 0.0;
    let mut trace = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut steepest = true;
    let mut since_restart = 0usize;
    for it in 0..s.max_iter {
        let residual = obj.residual(&g);
        observe(obj, it, energy, residual);
        if residual <= s.tol {
            return NcgReport { outcome: Outcome::Converged, iterations: it, residual, trace };
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            dir = z.iter().map(|v| -v).collect();
            slope = -gz;
            steepest = true;
            since_restart = 0;
        }
        let trial = match prev {
            Some((step, old_slope)) => step * (old_slope / slope).min(10.0),
            None => s.first_step / sup(&dir).max(f64::MIN_POSITIVE),
        };
        let Some((step, delta)) = line_search(obj, &dir, slope, trial, s) else {
            if steepest {
                return NcgReport { outcome: Outcome::Stalled, iterations: it, residual, trace };
            }
            dir = z.iter().map(|v| -v).collect();
            steepest = true;
            since_restart = 0;
            prev = None;
            continue;
        };
        obj.advance(&dir, step);
        energy += delta;
        let mut reset = false;
        if let Some(extra) = obj.after_step() {
            energy += extra;
            reset = true;
        }
        trace.push(energy);
        prev = Some((step, slope));

        let g_new = obj.gradient();
        let z_new = obj.precondition(&g_new);
        let gz_new = dot(&g_new, &z_new);
        let beta = ((gz_new - dot(&g, &z_new)) / gz).max(0.0);
        since_restart += 1;
        let restart = reset || since_restart >= s.restart_every || !beta.is_finite();
        g = g_new;
        z = z_new;
        gz = gz_new;
        if restart {
            dir = z.iter().map(|v| -v).collect();
            steepest = true;
            since_restart = 0;
        } else {
            dir.iter_mut().zip(&z).for_each(|(d, zi)| *d = beta * *d - zi);
            steepest = beta == 0.0;
        }
    }
    let residual = obj.residual(&g);
    let outcome = if residual <= s.tol { Outcome::Converged } else { Outcome::MaxIterations };
    NcgReport { outcome, iterations: s.max_iter, residual, trace }
}
