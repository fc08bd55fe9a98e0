//! Bessel-function ratios needed by the step-index eigenvalue equations.
//!
//! Only ratios are exposed: J₀/J₁ on the fundamental-mode interval and K₀/K₁
//! for any positive argument. Working with ratios keeps the large-argument
//! modified functions free of exp(−x) underflow.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// J₀(x)/J₁(x) for 0 < x ≤ ~3 by the ascending series of both functions.
pub(crate) fn j0_over_j1(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x < 4.0);
    let t = -0.25 * x * x;
    let mut term0 = 1.0;
    let mut term1 = 1.0;
    let mut s0 = 1.0;
    let mut s1 = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        term0 *= t / (kf * kf);
        term1 *= t / (kf * (kf + 1.0));
        s0 += term0;
        s1 += term1;
        if term0.abs() < 1e-18 * s0.abs().max(1e-300) && term1.abs() < 1e-18 * s1.abs() {
            break;
        }
    }
    s0 / (0.5 * x * s1)
}

/// K₀(x)/K₁(x) for x > 0.
pub(crate) fn k0_over_k1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 2.0 {
        let (k0, k1) = k01_series(x);
        k0 / k1
    } else {
        x / (x + 0.5 - steed_cf2(x))
    }
}

/// Ascending series for K₀ and K₁ (small argument).
fn k01_series(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();

    // K0 = -(ln(x/2)+γ) I0 + Σ_{k≥1} t^k/(k!)² H_k
    // K1 = 1/x + ln(x/2) I1 - (x/4) Σ_{k≥0} t^k/(k!(k+1)!) (ψ(k+1)+ψ(k+2))
    let mut i0 = 1.0;
    let mut i1_sum = 1.0;
    let mut k0_sum = 0.0;
    let mut psi_sum = -2.0 * EULER_GAMMA + 1.0; // ψ(1)+ψ(2)
    let mut term0 = 1.0;
    let mut term1 = 1.0;
    let mut harmonic = 0.0;
    let mut psi_acc = term1 * psi_sum;
    for k in 1..60 {
        let kf = k as f64;
        term0 *= t / (kf * kf);
        term1 *= t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        psi_sum += 1.0 / kf + 1.0 / (kf + 1.0);
        i0 += term0;
        i1_sum += term1;
        k0_sum += term0 * harmonic;
        psi_acc += term1 * psi_sum;
        if term0 < 1e-18 * i0 && term1 < 1e-18 * i1_sum {
            break;
        }
    }
    let i1 = 0.5 * x * i1_sum;
    let k0 = -(ln_half + EULER_GAMMA) * i0 + k0_sum;
    let k1 = 1.0 / x + ln_half * i1 - 0.25 * x * psi_acc;
    (k0, k1)
}

/// Steed's continued fraction for the order-zero modified Bessel function,
/// returning the quantity `h` with K₁/K₀ = (x + ½ − h)/x.
fn steed_cf2(x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    a1 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference ratios from 30-digit arbitrary-precision evaluation.
    #[test]
    fn k_ratio_matches_high_precision_values() {
        let cases = [
            (0.3, 0.449_104_593_702_620_6),
            (1.0, 0.699_483_935_593_772_3),
            (1.9, 0.807_001_476_753_468_2),
            (2.0, 0.814_307_758_763_789_5),
            (2.1, 0.821_072_808_816_529_1),
            (5.0, 0.912_596_069_766_056_7),
            (40.0, 0.987_728_700_070_166_6),
            (600.0, 0.999_167_706_601_009_2),
        ];
        for (x, want) in cases {
            let got = k0_over_k1(x);
            assert!((got - want).abs() < 2e-15, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn j_ratio_matches_high_precision_values() {
        let cases = [
            (0.1, 19.974_989_576_818_572),
            (1.0, 1.738_885_735_744_703_7),
            (2.0, 0.388_210_765_567_795_8),
            (2.4, 0.004_820_750_318_455_414),
        ];
        for (x, want) in cases {
            let got = j0_over_j1(x);
            assert!((got - want).abs() < 1e-13 * want.abs().max(1.0), "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn k_ratio_is_continuous_across_branch_switch() {
        let below = k0_over_k1(2.0 - 1e-12);
        let above = k0_over_k1(2.0);
        assert!((below - above).abs() < 1e-12);
    }
}
