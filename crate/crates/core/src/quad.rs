//! Fixed Gauss–Legendre rules.

/// 8-point nodes on [-1, 1] (positive half) and weights.
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_26,
];

/// `∫_a^b f` with the 8-point rule.
#[inline]
pub fn gauss8<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..4 {
        let dx = r * GL8_X[k];
        acc += GL8_W[k] * (f(c - dx) + f(c + dx));
    }
    acc * r
}

/// Composite 8-point rule over `panels` equal sub-intervals.
pub fn gauss8_composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let n = panels.max(1);
    let w = (b - a) / n as f64;
    (0..n)
        .map(|k| {
            let lo = a + w * k as f64;
            gauss8(lo, lo + w, &mut f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_15() {
        let f = |x: f64| x.powi(15) - 3.0 * x.powi(8) + x;
        let exact = |x: f64| x.powi(16) / 16.0 - x.powi(9) / 3.0 + x * x / 2.0;
        let v = gauss8(-0.3, 1.7, f);
        assert!((v - (exact(1.7) - exact(-0.3))).abs() < 1e-11);
    }

    #[test]
    fn composite_smooth() {
        let v = gauss8_composite(0.0, std::f64::consts::PI, 4, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
