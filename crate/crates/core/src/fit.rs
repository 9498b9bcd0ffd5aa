//! Straight-line least squares used by the local-behaviour checks.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
    /// Root-mean-square residual of the fit.
    pub rms: f64,
}

/// Fit y = slope·x + intercept. The data are centred first, which keeps the
/// slope accurate when x spans a narrow range far from zero.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(LineFit {
        slope,
        intercept,
        n,
        rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| 1e6 + i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -0.6 * x + 3.0).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope + 0.6).abs() < 1e-9);
        assert!(fit.rms < 1e-6);
        assert_eq!(fit.n, 10);
    }

    #[test]
    fn degenerate_input() {
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert!(fit_line(&[1.0, 2.0], &[2.0]).is_none());
    }
}
