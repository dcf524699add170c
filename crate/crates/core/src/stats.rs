//! Two-sided Wilcoxon rank-sum (Mann–Whitney U) test, normal approximation
//! with tie-corrected variance and a 0.5 continuity correction.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankSum {
    /// U statistic of the first sample.
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Midranks (1-based) of the pooled sample.
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

pub fn rank_sum_test(a: &[f64], b: &[f64]) -> RankSum {
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = midranks(&pooled);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return RankSum {
            u,
            z: 0.0,
            p_value: 1.0,
        };
    }
    let diff = (u - mean).abs();
    let z = (diff - 0.5).max(0.0) / var.sqrt();
    let p_value = libm::erfc(z / std::f64::consts::SQRT_2).min(1.0);
    RankSum {
        u,
        z: if u < mean { -z } else { z },
        p_value,
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Quartiles by linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    (q(0.25), q(0.5), q(0.75))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: &[i32]) -> Vec<f64> {
        v.iter().map(|&x| x as f64).collect()
    }

    // Reference values from scipy.stats.mannwhitneyu(method="asymptotic",
    // use_continuity=True, alternative="two-sided").
    #[test]
    fn matches_reference_values() {
        let cases: [(&[i32], &[i32], f64, f64); 4] = [
            (
                &[1, 2, 3, 4, 5],
                &[6, 7, 8, 9, 10],
                0.0,
                0.012185780355344813,
            ),
            (
                &[3, 1, 4, 1, 5, 9, 2, 6],
                &[5, 3, 5, 8, 9, 7, 9, 3, 2],
                22.5,
                0.20702196820234253,
            ),
            (
                &[10, 10, 11, 12, 12, 12, 13],
                &[9, 10, 10, 11, 11, 14, 15, 15],
                28.0,
                1.0,
            ),
            (
                &[10, 10, 11, 12, 12, 12, 13, 13],
                &[9, 9, 10, 10, 11, 11, 11, 11, 12],
                55.5,
                0.06048726665415855,
            ),
        ];
        for (a, b, u, p) in cases {
            let r = rank_sum_test(&f(a), &f(b));
            assert_eq!(r.u, u);
            assert!((r.p_value - p).abs() < 1e-12, "{} vs {p}", r.p_value);
        }
    }

    #[test]
    fn identical_samples() {
        let a: Vec<f64> = (0..30).map(|x| x as f64).collect();
        assert_eq!(rank_sum_test(&a, &a).p_value, 1.0);
        let c = vec![7.0; 10];
        assert_eq!(rank_sum_test(&c, &c).p_value, 1.0);
    }

    #[test]
    fn separated_samples() {
        let a: Vec<f64> = (0..30).map(|x| x as f64).collect();
        let b: Vec<f64> = (100..130).map(|x| x as f64).collect();
        let r = rank_sum_test(&a, &b);
        assert!(r.p_value < 1e-6);
        assert!(r.z < 0.0);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]), (2.0, 3.0, 4.0));
    }
}
