use nalgebra::{DMatrix, DVector};

/// Levenberg–Marquardt with a central-difference Jacobian. Returns the final
/// point and its squared residual norm.
pub(crate) fn minimize(residual: impl Fn(&[f64]) -> Vec<f64>, start: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut x = DVector::from_column_slice(start);
    let mut r = DVector::from_vec(residual(x.as_slice()));
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        if cost < 1e-26 {
            break;
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(r.len(), n);
        for p in 0..n {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[p] += h;
            dn[p] -= h;
            let (ru, rd) = (residual(up.as_slice()), residual(dn.as_slice()));
            for k in 0..r.len() {
                jac[(k, p)] = (ru[k] - rd[k]) / (2.0 * h);
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for p in 0..n {
                a[(p, p)] += lambda * (1.0 + jtj[(p, p)]);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let cand = &x + step;
            let rc = DVector::from_vec(residual(cand.as_slice()));
            let cc = rc.norm_squared();
            if cc < cost {
                x = cand;
                r = rc;
                cost = cc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (x.as_slice().to_vec(), cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let (x, cost) = minimize(|v| vec![1.0 - v[0], 10.0 * (v[1] - v[0] * v[0])], &[-1.2, 1.0], 500);
        assert!(cost < 1e-20);
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }
}
