//! Exact fits of integer cost sweeps.

use std::fmt;

use super::Growth;

/// A polynomial with rational coefficients `num[i] / den` for `x^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fit {
    pub degree: usize,
    pub num: Vec<i128>,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn poly_mul(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Lowest-degree polynomial through every point, up to `max_degree`.
///
/// The `xs` must be consecutive integers. A fit of degree `d` is only
/// reported when at least `d + 2` points confirm it.
pub fn exact_fit(xs: &[u64], ys: &[u64], max_degree: usize) -> Option<Fit> {
    if xs.len() != ys.len() || xs.is_empty() || xs.windows(2).any(|w| w[1] != w[0] + 1) {
        return None;
    }
    let mut rows: Vec<Vec<i128>> = vec![ys.iter().map(|&y| y as i128).collect()];
    for _ in 0..=max_degree {
        let last = rows.last().expect("nonempty");
        if last.len() < 2 {
            break;
        }
        rows.push(last.windows(2).map(|w| w[1] - w[0]).collect());
    }
    let degree = (0..=max_degree).find(|&d| rows.get(d + 1).is_some_and(|r| !r.is_empty() && r.iter().all(|&v| v == 0)))?;
    // Newton form: p(x) = sum_j D^j y0 * C(x - x0, j).
    let x0 = xs[0] as i128;
    let den: i128 = (1..=degree as i128).product::<i128>().max(1);
    let mut num = vec![0i128; degree + 1];
    let mut falling = vec![1i128];
    let mut fact = 1i128;
    for j in 0..=degree {
        if j > 0 {
            falling = poly_mul(&falling, &[-(x0 + j as i128 - 1), 1]);
            fact *= j as i128;
        }
        let scale = rows[j][0] * (den / fact);
        for (i, c) in falling.iter().enumerate() {
            num[i] += scale * c;
        }
    }
    let g = num.iter().fold(den, |g, &c| gcd(g, c));
    let g = if g == 0 { 1 } else { g };
    Some(Fit { degree, num: num.iter().map(|c| c / g).collect(), den: den / g })
}

impl Fit {
    pub fn eval(&self, x: u64) -> f64 {
        self.num.iter().rev().fold(0.0, |acc, &c| acc * x as f64 + c as f64) / self.den as f64
    }

    /// The fit printed in the variable `var`, e.g. `23n + 3`.
    pub fn show(&self, var: &str) -> String {
        let mut terms = Vec::new();
        for (i, &c) in self.num.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let g = gcd(c, self.den);
            let (n, d) = (c / g, self.den / g);
            let coeff = if d == 1 { n.abs().to_string() } else { format!("{}/{}", n.abs(), d) };
            let body = match i {
                0 => coeff,
                _ => {
                    let c = if coeff == "1" { String::new() } else { coeff };
                    if i == 1 {
                        format!("{c}{var}")
                    } else {
                        format!("{c}{var}^{i}")
                    }
                }
            };
            terms.push((c < 0, body));
        }
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (j, (neg, body)) in terms.into_iter().enumerate() {
            match (j, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(&body);
        }
        out
    }
}

impl fmt::Display for Fit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.show("x"))
    }
}

/// Growth class of a sweep: the lowest exact polynomial of degree at most
/// two, or exponential when every step at least multiplies by 1.5.
pub fn classify(xs: &[u64], ys: &[u64]) -> Option<Growth> {
    if let Some(fit) = exact_fit(xs, ys, 2) {
        return Some(match fit.degree {
            0 => Growth::Constant,
            1 => Growth::Affine,
            _ => Growth::Quadratic,
        });
    }
    let exp = ys.len() >= 3 && ys.windows(2).all(|w| w[0] > 0 && w[1] as f64 >= 1.5 * w[0] as f64);
    exp.then_some(Growth::Exponential)
}

impl Growth {
    /// Whether a measured class satisfies this expected one. `Quadratic`
    /// means "polynomial of degree at most two".
    pub fn admits(self, measured: Growth) -> bool {
        match self {
            Growth::Quadratic => matches!(measured, Growth::Constant | Growth::Affine | Growth::Quadratic),
            _ => self == measured,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_sweep() {
        let xs = [1, 2, 3, 4, 5, 6];
        let ys: Vec<u64> = xs.iter().map(|n| 23 * n + 3).collect();
        let f = exact_fit(&xs, &ys, 2).unwrap();
        assert_eq!(f.degree, 1);
        assert_eq!(f.show("n"), "23n + 3");
        assert_eq!(classify(&xs, &ys), Some(Growth::Affine));
    }

    #[test]
    fn quadratic_with_halves() {
        let xs: Vec<u64> = (4..=12).collect();
        let ys: Vec<u64> = xs.iter().map(|k| (k * k + k) / 2 + 1).collect();
        let f = exact_fit(&xs, &ys, 2).unwrap();
        assert_eq!(f.show("k"), "1/2k^2 + 1/2k + 1");
        assert_eq!(f.eval(10), 56.0);
    }

    #[test]
    fn doubling_is_exponential() {
        let xs = [1, 2, 3, 4, 5];
        let ys = [3, 7, 15, 31, 63];
        assert_eq!(exact_fit(&xs, &ys, 2), None);
        assert_eq!(classify(&xs, &ys), Some(Growth::Exponential));
    }

    #[test]
    fn constant_and_short_sweeps() {
        assert_eq!(classify(&[1, 2, 3], &[4, 4, 4]), Some(Growth::Constant));
        assert_eq!(exact_fit(&[1, 2], &[1, 5], 2), None);
        assert_eq!(exact_fit(&[1, 3], &[1, 1], 2), None);
    }
}
