//! Budgeted Nelder–Mead simplex descent.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    pub max_evals: usize,
    /// Converged once the simplex diameter and the spread of values both fall below these.
    pub xatol: f64,
    pub fatol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            max_evals: 200,
            xatol: 1e-4,
            fatol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Budget<F> {
    f: F,
    used: usize,
    max: usize,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Budget<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.used >= self.max {
            return None;
        }
        self.used += 1;
        let v = (self.f)(x);
        if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((x.to_vec(), v));
        }
        Some(v)
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimises `f` from `x0` using at most `options.max_evals` evaluations; the best
/// point ever evaluated is returned even when the budget runs out.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], options: &NelderMeadOptions) -> NelderMeadResult {
    let dim = x0.len();
    let mut budget = Budget {
        f,
        used: 0,
        max: options.max_evals,
        best: None,
    };
    let converged = run(&mut budget, x0, dim, options);
    let (x, value) = budget.best.unwrap_or_else(|| (x0.to_vec(), f64::INFINITY));
    NelderMeadResult {
        x,
        value,
        evals: budget.used,
        converged,
    }
}

fn run<F: FnMut(&[f64]) -> f64>(budget: &mut Budget<F>, x0: &[f64], dim: usize, options: &NelderMeadOptions) -> bool {
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let Some(v0) = budget.eval(x0) else { return false };
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += options.initial_step;
        let Some(v) = budget.eval(&x) else { return false };
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (&simplex[0], &simplex[dim]);
        let spread = worst.1 - best.1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= options.fatol && diameter <= options.xatol {
            return true;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst_x = simplex[dim].0.clone();
        let worst_v = simplex[dim].1;

        let reflected = affine(&centroid, &worst_x, -REFLECT);
        let Some(fr) = budget.eval(&reflected) else { return false };

        if fr < simplex[0].1 {
            let expanded = affine(&centroid, &worst_x, -EXPAND);
            let Some(fe) = budget.eval(&expanded) else { return false };
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        // contraction, outside when the reflection beat the worst point
        let (point, reference) = if fr < worst_v {
            (affine(&centroid, &reflected, CONTRACT), fr)
        } else {
            (affine(&centroid, &worst_x, CONTRACT), worst_v)
        };
        let Some(fc) = budget.eval(&point) else { return false };
        if fc < reference {
            simplex[dim] = (point, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = affine(&anchor, &vertex.0, SHRINK);
            let Some(v) = budget.eval(&x) else { return false };
            *vertex = (x, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evals: 2000,
            xatol: 1e-8,
            fatol: 1e-10,
            ..NelderMeadOptions::default()
        };
        let r = minimize(rosen, &[-1.2, 1.0], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn respects_budget() {
        let mut calls = 0;
        let r = minimize(
            |x: &[f64]| {
                calls += 1;
                x.iter().map(|v| v * v).sum()
            },
            &[3.0, -2.0, 1.0],
            &NelderMeadOptions {
                max_evals: 7,
                ..NelderMeadOptions::default()
            },
        );
        assert_eq!(calls, 7);
        assert_eq!(r.evals, 7);
        assert!(!r.converged);

        let r = minimize(|x: &[f64]| x[0].abs(), &[0.25], &NelderMeadOptions {
            max_evals: 1,
            ..NelderMeadOptions::default()
        });
        assert_eq!((r.evals, r.x.clone(), r.value), (1, vec![0.25], 0.25));
    }
}
