/// Outcome of a Nelder–Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<const D: usize> {
    pub x: [f64; D],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction ½, shrink ½)
/// started from an axis-aligned simplex. Stops when both the simplex diameter
/// and the spread of values fall below `tol`, or after `max_evals` calls.
pub fn nelder_mead<const D: usize, F: FnMut(&[f64; D]) -> f64>(
    mut f: F,
    start: [f64; D],
    step: f64,
    tol: f64,
    max_evals: usize,
) -> Minimum<D> {
    let mut evals = 0;
    let mut eval = |x: &[f64; D], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    simplex.push((start, eval(&start, &mut evals)));
    for i in 0..D {
        let mut x = start;
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[D].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| dist(x, &simplex[0].0))
            .fold(0.0, f64::max);
        if spread <= tol && diameter <= tol {
            converged = true;
            break;
        }

        let mut centroid = [0.0; D];
        for (x, _) in &simplex[..D] {
            for k in 0..D {
                centroid[k] += x[k] / D as f64;
            }
        }
        let worst = simplex[D];
        let along = |t: f64| -> [f64; D] {
            let mut p = [0.0; D];
            for k in 0..D {
                p[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
            }
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-0.5);
                (x, eval(&x, &mut evals))
            } else {
                let x = along(0.5);
                (x, eval(&x, &mut evals))
            };
            if fc < worst.1.min(fr) {
                simplex[D] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let mut x = [0.0; D];
                    for k in 0..D {
                        x[k] = best[k] + 0.5 * (entry.0[k] - best[k]);
                    }
                    *entry = (x, eval(&x, &mut evals));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum {
        x: simplex[0].0,
        value: simplex[0].1,
        evaluations: evals,
        converged,
    }
}

fn dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
