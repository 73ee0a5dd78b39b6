//! Small derivative-free optimizers: golden-section line search and
//! Nelder-Mead with an evaluation budget.

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(x_max, f_max)`. Assumes `f` is unimodal on the bracket; callers
/// feed it brackets around grid-scan local maxima.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while (b - a).abs() > xtol && iters < 200 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iters += 1;
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Nelder-Mead minimization with standard coefficients.
///
/// `f` is called at most `max_evals` times; the search also stops when the
/// simplex spread in function value drops below `ftol`. Fully deterministic
/// for a fixed starting point.
pub fn nelder_mead_min<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    max_evals: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut evals = 0usize;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += if v[i].abs() > 1e-8 { v[i] * step } else { step };
        simplex.push(v);
    }
    let mut scores: Vec<f64> = simplex
        .iter()
        .map(|v| {
            evals += 1;
            f(v)
        })
        .collect();

    while evals < max_evals {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];
        if (scores[worst] - scores[best]).abs() <= ftol {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += simplex[i][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + alpha * (centroid[d] - simplex[worst][d]))
            .collect();
        evals += 1;
        let fr = f(&reflect);

        if fr < scores[best] {
            if evals >= max_evals {
                simplex[worst] = reflect;
                scores[worst] = fr;
                break;
            }
            let expand: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + gamma * (reflect[d] - centroid[d]))
                .collect();
            evals += 1;
            let fe = f(&expand);
            if fe < fr {
                simplex[worst] = expand;
                scores[worst] = fe;
            } else {
                simplex[worst] = reflect;
                scores[worst] = fr;
            }
            continue;
        }
        if fr < scores[second_worst] {
            simplex[worst] = reflect;
            scores[worst] = fr;
            continue;
        }
        if evals >= max_evals {
            break;
        }
        let contract: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + rho * (simplex[worst][d] - centroid[d]))
            .collect();
        evals += 1;
        let fc = f(&contract);
        if fc < scores[worst] {
            simplex[worst] = contract;
            scores[worst] = fc;
            continue;
        }
        for &i in order.iter().skip(1) {
            if evals >= max_evals {
                break;
            }
            for d in 0..dim {
                simplex[i][d] = simplex[best][d] + sigma * (simplex[i][d] - simplex[best][d]);
            }
            evals += 1;
            scores[i] = f(&simplex[i]);
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if scores[i] < scores[best] {
            best = i;
        }
    }
    (simplex[best].clone(), scores[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|t| 3.0 - (t - 1.25) * (t - 1.25), 0.0, 4.0, 1e-12);
        // The argmax is only resolvable to ~sqrt(machine eps) on a flat peak.
        assert!((x - 1.25).abs() < 1e-6);
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_minimizes_quadratic_bowl() {
        let (x, v) = nelder_mead_min(
            |t| (t[0] - 2.0).powi(2) + (t[1] + 1.0).powi(2),
            &[0.0, 0.0],
            0.5,
            500,
            1e-14,
        );
        assert!((x[0] - 2.0).abs() < 1e-5 && (x[1] + 1.0).abs() < 1e-5);
        assert!(v < 1e-9);
    }
}
