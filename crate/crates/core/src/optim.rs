//! Derivative-free minimization.

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Stop when the spread of objective values across the simplex drops
    /// below this.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Edge length of the initial simplex.
    pub step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iter: 500,
            step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Non-finite objective values are treated as `+inf`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], opts: &NelderMead) -> Minimum {
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        return Minimum {
            x: Vec::new(),
            value: eval(start),
            iterations: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += opts.step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        // stable sort keeps earlier vertices first among ties
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        if spread.is_finite() && spread.abs() <= opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };

        let reflected = along(-1.0);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(-0.5);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = along(0.5);
            let fc = eval(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for k in 0..n {
                simplex[i][k] = best[k] + 0.5 * (simplex[i][k] - best[k]);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Maps unconstrained `θ ∈ Rᵈ⁻¹` onto the open simplex, with the last
/// coordinate's logit pinned at zero.
pub fn softmax_simplex(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().copied().fold(0.0f64, f64::max);
    let mut w: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    w.push((-m).exp());
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Inverse of [`softmax_simplex`] for interior points; zero entries are
/// floored at `floor`.
pub fn simplex_logits(w: &[f64], floor: f64) -> Vec<f64> {
    let d = w.len();
    let last = w[d - 1].max(floor);
    w[..d - 1].iter().map(|x| (x.max(floor) / last).ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(
            f,
            &[-1.2, 1.0],
            &NelderMead {
                tolerance: 1e-14,
                max_iter: 5000,
                step: 0.5,
            },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn quadratic_converges() {
        let m = nelder_mead(
            |x| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 5.0,
            &[0.0, 0.0],
            &NelderMead::default(),
        );
        assert!(m.converged);
        assert!((m.value - 5.0).abs() < 1e-7);
    }

    #[test]
    fn flat_objective_stays_at_start() {
        let m = nelder_mead(|_| 1.0, &[0.3, -0.2], &NelderMead::default());
        assert_eq!(m.x, vec![0.3, -0.2]);
        assert_eq!(m.iterations, 0);
    }

    #[test]
    fn softmax_round_trip() {
        let w = [0.2, 0.5, 0.3];
        let back = softmax_simplex(&simplex_logits(&w, 1e-12));
        for (a, b) in w.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let big = softmax_simplex(&[800.0, -800.0]);
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-12 && big[0] > 0.999);
    }
}
