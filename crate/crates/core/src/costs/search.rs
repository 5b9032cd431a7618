use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `rel_tol` times its midpoint
/// magnitude (never below a few machine epsilons) or after `max_iter`
/// shrink steps.
pub fn golden_section<T, F>(mut f: F, lo: T, hi: T, rel_tol: T, max_iter: usize) -> Minimum<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let inv_phi = (T::of(5.0).sqrt() - T::one()) / T::of(2.0);
    let tol = rel_tol.max(T::of(4.0) * T::epsilon());
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while iterations < max_iter {
        let scale = (a.abs() + b.abs()) / T::of(2.0);
        if b - a <= tol * scale.max(T::min_positive_value()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let mid = (a + b) / T::of(2.0);
    let fm = f(mid);
    let (x, fx) = [(c, fc), (d, fd)].into_iter().fold((mid, fm), |best, cand| if cand.1 < best.1 { cand } else { best });
    Minimum { x, fx, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let m = golden_section(|x: f64| (x - 3.25).powi(2) + 1.0, 0.0, 10.0, 1e-12, 500);
        assert!((m.x - 3.25).abs() < 1e-7);
        assert!((m.fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_minimum() {
        let m = golden_section(|x: f64| x, 1.0, 2.0, 1e-10, 500);
        assert!((m.x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn swapped_bounds_and_f32() {
        let m = golden_section(|x: f32| (x + 1.0).abs(), 3.0f32, -4.0, 1e-9, 500);
        assert!((m.x + 1.0).abs() < 1e-5);
    }
}
