//! Rényi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//!
//! Costs are tabulated on a grid of Rényi orders. Integer orders use the
//! binomial expansion of `A_α = E_{z~μ0}[(μ(z)/μ0(z))^α]`; fractional orders
//! use the convergent two-sided series around `z = 1/2`,
//! both evaluated in log space.

use alloc::vec::Vec;

use crate::error::{invalid_arg, Error, Result};
use crate::ledger::{PrivacySpec, UserPrivacy};
use crate::math::{exp, floor, ln, log_add, log_erfc, log_ndtr, log_sub};

/// Terms of the fractional-order series below `e^-30` are dropped.
const FRAC_SERIES_CUTOFF: f64 = -30.0;
const FRAC_SERIES_MAX_TERMS: usize = 1_000_000;

/// The default order grid: `1.1, 1.2, …, 10.9` followed by `12, …, 64`.
pub fn default_orders() -> Vec<f64> {
    (1..100)
        .map(|x| 1.0 + f64::from(x) / 10.0)
        .chain((12..=64).map(f64::from))
        .collect()
}

/// Integer orders `lo..=hi`.
pub fn integer_orders(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

/// Rényi-DP cost `ρ(α)` tabulated on an order grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RdpCurve {
    orders: Vec<f64>,
    costs: Vec<f64>,
}

impl RdpCurve {
    pub fn new(orders: Vec<f64>, costs: Vec<f64>) -> Result<Self> {
        validate_orders(&orders)?;
        if costs.len() != orders.len() {
            return Err(invalid_arg!(
                "{} costs for {} orders",
                costs.len(),
                orders.len()
            ));
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(invalid_arg!("RDP cost {c} is not finite and non-negative"));
        }
        Ok(Self { orders, costs })
    }

    /// The zero-cost curve (no mechanism run yet).
    pub fn zeros(orders: &[f64]) -> Result<Self> {
        Self::new(orders.to_vec(), alloc::vec![0.0; orders.len()])
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn cost_at(&self, order: f64) -> Option<f64> {
        self.orders
            .iter()
            .position(|&a| a == order)
            .map(|i| self.costs[i])
    }

    /// `steps`-fold self composition.
    pub fn repeated(&self, steps: u64) -> Self {
        let k = steps as f64;
        Self {
            orders: self.orders.clone(),
            costs: self.costs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn compose(&self, other: &RdpCurve) -> Result<Self> {
        compose(self, other)
    }

    pub fn to_dp(&self, delta: f64) -> Result<DpConversion> {
        rdp_to_dp(self, delta)
    }
}

fn validate_orders(orders: &[f64]) -> Result<()> {
    if let Some(a) = orders.iter().find(|a| !(**a > 1.0) || !a.is_finite()) {
        return Err(invalid_arg!("Rényi order {a} must be finite and > 1"));
    }
    if orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid_arg!("Rényi orders must be strictly increasing"));
    }
    Ok(())
}

/// RDP of the Poisson-subsampled Gaussian mechanism with noise multiplier
/// `sigma` and sampling rate `q`, composed over `steps` iterations.
pub fn subsampled_gaussian_rdp(
    sigma: f64,
    sample_rate: f64,
    steps: u64,
    orders: &[f64],
) -> Result<RdpCurve> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid_arg!("noise multiplier must be positive, got {sigma}"));
    }
    if !(0.0..=1.0).contains(&sample_rate) {
        return Err(invalid_arg!("sample rate must lie in [0, 1], got {sample_rate}"));
    }
    if steps == 0 {
        return Err(invalid_arg!("steps must be at least 1"));
    }
    validate_orders(orders)?;
    let k = steps as f64;
    let costs = orders
        .iter()
        .map(|&alpha| one_step_rdp(sample_rate, sigma, alpha).map(|c| c * k))
        .collect::<Result<Vec<_>>>()?;
    RdpCurve::new(orders.to_vec(), costs)
}

fn one_step_rdp(q: f64, sigma: f64, alpha: f64) -> Result<f64> {
    if q == 0.0 {
        return Ok(0.0);
    }
    if q == 1.0 {
        return Ok(alpha / (2.0 * sigma * sigma));
    }
    let log_a = if floor(alpha) == alpha {
        log_a_int(q, sigma, alpha as u64)
    } else {
        log_a_frac(q, sigma, alpha)?
    };
    // rounding can push tiny costs a hair below zero
    Ok((log_a / (alpha - 1.0)).max(0.0))
}

/// `ln A_α` for integer `α` via the binomial expansion.
fn log_a_int(q: f64, sigma: f64, alpha: u64) -> f64 {
    let (ln_q, ln_1q) = (ln(q), libm::log1p(-q));
    let two_s2 = 2.0 * sigma * sigma;
    let a = alpha as f64;
    let mut log_binom = 0.0;
    let mut log_a = f64::NEG_INFINITY;
    for i in 0..=alpha {
        let fi = i as f64;
        if i > 0 {
            log_binom += ln(a - fi + 1.0) - ln(fi);
        }
        let term = log_binom + fi * ln_q + (a - fi) * ln_1q + (fi * fi - fi) / two_s2;
        log_a = log_add(log_a, term);
    }
    log_a
}

/// `ln A_α` for fractional `α`, summing both tails of the series until the
/// terms fall below `e^-30`.
fn log_a_frac(q: f64, sigma: f64, alpha: f64) -> Result<f64> {
    let (ln_q, ln_1q) = (ln(q), libm::log1p(-q));
    let s2 = sigma * sigma;
    let z0 = s2 * ln(1.0 / q - 1.0) + 0.5;
    let erfc_scale = core::f64::consts::SQRT_2 * sigma;
    let half = ln(0.5);

    let mut log_a0 = f64::NEG_INFINITY;
    let mut log_a1 = f64::NEG_INFINITY;
    // generalized binomial coefficient C(α, i), tracked as (ln|c|, sign)
    let mut log_coef = 0.0;
    let mut positive = true;
    for i in 0..FRAC_SERIES_MAX_TERMS {
        let fi = i as f64;
        if i > 0 {
            let factor = (alpha - fi + 1.0) / fi;
            if factor < 0.0 {
                positive = !positive;
            }
            log_coef += ln(factor.abs());
        }
        let j = alpha - fi;
        let log_t0 = log_coef + fi * ln_q + j * ln_1q;
        let log_t1 = log_coef + j * ln_q + fi * ln_1q;
        let log_e0 = half + log_erfc((fi - z0) / erfc_scale);
        let log_e1 = half + log_erfc((z0 - j) / erfc_scale);
        let log_s0 = log_t0 + (fi * fi - fi) / (2.0 * s2) + log_e0;
        let log_s1 = log_t1 + (j * j - j) / (2.0 * s2) + log_e1;
        if positive {
            log_a0 = log_add(log_a0, log_s0);
            log_a1 = log_add(log_a1, log_s1);
        } else {
            log_a0 = log_sub(log_a0, log_s0);
            log_a1 = log_sub(log_a1, log_s1);
        }
        if log_s0.max(log_s1) < FRAC_SERIES_CUTOFF {
            return Ok(log_add(log_a0, log_a1));
        }
    }
    Err(Error::Convergence {
        iterations: FRAC_SERIES_MAX_TERMS,
    })
}

/// Elementwise sum of two curves on the same order grid.
pub fn compose(a: &RdpCurve, b: &RdpCurve) -> Result<RdpCurve> {
    if a.orders != b.orders {
        return Err(invalid_arg!("cannot compose RDP curves on different order grids"));
    }
    Ok(RdpCurve {
        orders: a.orders.clone(),
        costs: a.costs.iter().zip(&b.costs).map(|(x, y)| x + y).collect(),
    })
}

/// Result of converting an RDP curve to an `(ε, δ)` guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConversion {
    pub epsilon: f64,
    /// The order at which the minimum was attained.
    pub order: f64,
}

/// `ε = min_α ρ(α) + ln(1/δ)/(α − 1)` over the curve's grid.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<DpConversion> {
    check_delta(delta)?;
    if curve.is_empty() {
        return Err(invalid_arg!("empty RDP curve"));
    }
    let log_inv_delta = -ln(delta);
    let mut best = DpConversion {
        epsilon: f64::INFINITY,
        order: curve.orders[0],
    };
    for (&alpha, &rho) in curve.orders.iter().zip(&curve.costs) {
        let eps = rho + log_inv_delta / (alpha - 1.0);
        if eps < best.epsilon {
            best = DpConversion {
                epsilon: eps,
                order: alpha,
            };
        }
    }
    Ok(best)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid_arg!("delta must lie in (0, 1), got {delta}"))
    }
}

/// Per-user RDP costs `Γ = {ρ_i}` at one shared order `α`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndividualRdp {
    order: f64,
    costs: Vec<f64>,
}

impl IndividualRdp {
    pub fn new(order: f64, costs: Vec<f64>) -> Result<Self> {
        validate_orders(&[order])?;
        if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(invalid_arg!("individual RDP cost {c} must be finite and >= 0"));
        }
        Ok(Self { order, costs })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

/// Converts individual RDP into per-user `(ε_i, δ_i)` with
/// `ε_i = ρ_i + ln(1/δ_i)/(α − 1)`. Users are numbered `0..n` and the
/// returned spec's per-round base δ is the smallest `δ_i`.
pub fn irdp_to_pdp(gamma: &IndividualRdp, deltas: &[f64]) -> Result<PrivacySpec> {
    if gamma.costs.len() != deltas.len() {
        return Err(invalid_arg!(
            "{} individual costs but {} deltas",
            gamma.costs.len(),
            deltas.len()
        ));
    }
    let mut users = Vec::with_capacity(deltas.len());
    for (i, (&rho, &delta)) in gamma.costs.iter().zip(deltas).enumerate() {
        check_delta(delta)?;
        users.push(UserPrivacy {
            id: i as crate::UserId,
            epsilon: rho + -ln(delta) / (gamma.order - 1.0),
            delta,
        });
    }
    let base_delta = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let base_delta = if base_delta.is_finite() { base_delta } else { 1e-5 };
    PrivacySpec::new(users, base_delta)
}

/// Classical sufficient condition for the sensitivity-1 Gaussian mechanism:
/// any `δ > (4/5)·exp(−σ²ε²/2)` certifies `(ε, δ)`-DP, valid for `ε < 1`.
pub fn gaussian_dp_sufficient_delta(sigma: f64, epsilon: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid_arg!("sigma must be positive, got {sigma}"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid_arg!(
            "the sufficient-delta bound only holds for 0 < epsilon < 1, got {epsilon}"
        ));
    }
    Ok(0.8 * exp(-sigma * sigma * epsilon * epsilon / 2.0))
}

/// Exact `δ(ε)` of the sensitivity-1 Gaussian mechanism with noise `σ`:
/// `Φ(1/(2σ) − εσ) − e^ε Φ(−1/(2σ) − εσ)`.
pub fn analytic_gaussian_delta(sigma: f64, epsilon: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid_arg!("sigma must be positive, got {sigma}"));
    }
    if !(epsilon >= 0.0) {
        return Err(invalid_arg!("epsilon must be non-negative, got {epsilon}"));
    }
    let a = 1.0 / (2.0 * sigma) - epsilon * sigma;
    let b = -1.0 / (2.0 * sigma) - epsilon * sigma;
    let log_first = log_ndtr(a);
    let log_second = epsilon + log_ndtr(b);
    if log_second >= log_first {
        return Ok(0.0);
    }
    let delta = exp(log_first) * -libm::expm1(log_second - log_first);
    Ok(delta.clamp(0.0, 1.0))
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gaussian_rdp_closed_form() {
        let c = subsampled_gaussian_rdp(1.0, 1.0, 1, &[2.0]).unwrap();
        assert_eq!(c.costs(), &[1.0]);
        let c = subsampled_gaussian_rdp(2.0, 1.0, 10, &[4.0]).unwrap();
        assert_eq!(c.costs(), &[5.0]);
    }

    #[test]
    fn full_rate_matches_closed_form_on_default_grid() {
        let orders = default_orders();
        for &sigma in &[0.5, 1.3, 4.0] {
            let c = subsampled_gaussian_rdp(sigma, 1.0, 3, &orders).unwrap();
            for (a, rho) in orders.iter().zip(c.costs()) {
                let exact = 3.0 * a / (2.0 * sigma * sigma);
                assert!(((rho - exact) / exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_rate_costs_nothing() {
        let c = subsampled_gaussian_rdp(0.7, 0.0, 100, &default_orders()).unwrap();
        assert!(c.costs().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(subsampled_gaussian_rdp(0.0, 0.1, 1, &[2.0]).is_err());
        assert!(subsampled_gaussian_rdp(-1.0, 0.1, 1, &[2.0]).is_err());
        assert!(subsampled_gaussian_rdp(1.0, 1.5, 1, &[2.0]).is_err());
        assert!(subsampled_gaussian_rdp(1.0, -0.1, 1, &[2.0]).is_err());
        assert!(subsampled_gaussian_rdp(1.0, 0.1, 0, &[2.0]).is_err());
        assert!(subsampled_gaussian_rdp(1.0, 0.1, 1, &[1.0]).is_err());
        assert!(subsampled_gaussian_rdp(1.0, 0.1, 1, &[3.0, 2.0]).is_err());
    }

    #[test]
    fn integer_order_matches_direct_sum() {
        // no log-space tricks: small order, moderate values
        let (q, s, a) = (0.2f64, 1.1f64, 5u32);
        let mut direct = 0.0;
        let mut binom = 1.0;
        for i in 0..=a {
            if i > 0 {
                binom = binom * f64::from(a - i + 1) / f64::from(i);
            }
            let fi = f64::from(i);
            direct += binom
                * q.powi(i as i32)
                * (1.0 - q).powi((a - i) as i32)
                * ((fi * fi - fi) / (2.0 * s * s)).exp();
        }
        let expected = direct.ln() / f64::from(a - 1);
        let got = subsampled_gaussian_rdp(s, q, 1, &[f64::from(a)]).unwrap();
        assert_relative_eq!(got.costs()[0], expected, max_relative = 1e-13);
    }

    #[test]
    fn fractional_orders_interpolate_monotonically() {
        // RDP is non-decreasing in the order
        let orders = default_orders();
        let c = subsampled_gaussian_rdp(1.1, 0.02, 1, &orders).unwrap();
        for w in c.costs().windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-9), "{w:?}");
        }
    }

    #[test]
    fn compose_identity_and_sum() {
        let a = RdpCurve::new(alloc::vec![2.0], alloc::vec![1.0]).unwrap();
        let b = RdpCurve::new(alloc::vec![2.0], alloc::vec![2.5]).unwrap();
        assert_eq!(compose(&a, &b).unwrap().costs(), &[3.5]);
        let zero = RdpCurve::zeros(&[2.0]).unwrap();
        assert_eq!(compose(&zero, &a).unwrap(), a);
        let other_grid = RdpCurve::zeros(&[3.0]).unwrap();
        assert!(compose(&a, &other_grid).is_err());
    }

    #[test]
    fn curve_validation() {
        assert!(RdpCurve::new(alloc::vec![2.0], alloc::vec![-1.0]).is_err());
        assert!(RdpCurve::new(alloc::vec![2.0], alloc::vec![f64::NAN]).is_err());
        assert!(RdpCurve::new(alloc::vec![2.0, 3.0], alloc::vec![1.0]).is_err());
        assert!(RdpCurve::new(alloc::vec![0.5], alloc::vec![1.0]).is_err());
    }

    #[test]
    fn conversion_examples() {
        let c = RdpCurve::new(alloc::vec![2.0], alloc::vec![1.0]).unwrap();
        let dp = rdp_to_dp(&c, 1e-5).unwrap();
        // 1 + ln(1e5)
        assert_relative_eq!(dp.epsilon, 12.512_925_464_970_229, max_relative = 1e-14);
        assert_eq!(dp.order, 2.0);

        let orders = default_orders();
        let zero = RdpCurve::zeros(&orders).unwrap();
        let dp = rdp_to_dp(&zero, 0.5).unwrap();
        assert_eq!(dp.order, 64.0);
        assert_relative_eq!(dp.epsilon, 2f64.ln() / 63.0, max_relative = 1e-14);

        assert!(rdp_to_dp(&c, 0.0).is_err());
        assert!(rdp_to_dp(&c, 1.0).is_err());
        let empty = RdpCurve::new(alloc::vec![], alloc::vec![]).unwrap();
        assert!(rdp_to_dp(&empty, 0.1).is_err());
    }

    #[test]
    fn irdp_examples() {
        let g = IndividualRdp::new(2.0, alloc::vec![1.0]).unwrap();
        let spec = irdp_to_pdp(&g, &[1e-5]).unwrap();
        assert!((spec.users()[0].epsilon - 12.5129).abs() < 1e-4);

        let g = IndividualRdp::new(3.0, alloc::vec![0.0, 0.5]).unwrap();
        let spec = irdp_to_pdp(&g, &[0.1, 0.1]).unwrap();
        let half_ln10 = 10f64.ln() / 2.0;
        assert_relative_eq!(spec.users()[0].epsilon, half_ln10, max_relative = 1e-14);
        assert_relative_eq!(spec.users()[1].epsilon, 0.5 + half_ln10, max_relative = 1e-14);
        assert!((spec.users()[0].epsilon - 1.1513).abs() < 1e-4);
        assert!((spec.users()[1].epsilon - 1.6513).abs() < 1e-4);

        assert!(irdp_to_pdp(&g, &[0.1]).is_err());
        assert!(irdp_to_pdp(&g, &[0.1, 1.5]).is_err());
    }

    #[test]
    fn sufficient_delta_examples() {
        assert_relative_eq!(
            gaussian_dp_sufficient_delta(4.0, 0.5).unwrap(),
            0.108_268_226_589_290_15,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            gaussian_dp_sufficient_delta(10.0, 0.9).unwrap(),
            2.061_405_687_323_980_6e-18,
            max_relative = 1e-10
        );
        assert!(gaussian_dp_sufficient_delta(1e6, 0.5).unwrap() < 1e-300);
        assert!(gaussian_dp_sufficient_delta(1.0, 1.0).is_err());
        assert!(gaussian_dp_sufficient_delta(1.0, 0.0).is_err());
        assert!(gaussian_dp_sufficient_delta(0.0, 0.5).is_err());
    }

    #[test]
    fn analytic_delta_at_zero_epsilon() {
        // Φ(0.5) − Φ(−0.5)
        assert_relative_eq!(
            analytic_gaussian_delta(1.0, 0.0).unwrap(),
            0.382_924_922_548_026,
            max_relative = 1e-12
        );
        assert!(analytic_gaussian_delta(0.0, 1.0).is_err());
        assert!(analytic_gaussian_delta(1.0, -1.0).is_err());
    }

    #[test]
    fn rdp_is_conservative_against_exact_gaussian() {
        let orders = default_orders();
        for &sigma in &[0.5, 1.0, 2.0, 4.0] {
            let curve = subsampled_gaussian_rdp(sigma, 1.0, 1, &orders).unwrap();
            for &eps in &[0.05, 0.3, 1.0, 3.0] {
                let delta = analytic_gaussian_delta(sigma, eps).unwrap();
                if delta <= 0.0 || delta >= 1.0 {
                    continue;
                }
                assert!(rdp_to_dp(&curve, delta).unwrap().epsilon >= eps);
            }
        }
    }

    proptest! {
        #[test]
        fn compose_commutes_and_associates(
            xs in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 1..20)
        ) {
            let orders: Vec<f64> = (0..xs.len()).map(|i| 2.0 + i as f64).collect();
            let a = RdpCurve::new(orders.clone(), xs.iter().map(|t| t.0).collect()).unwrap();
            let b = RdpCurve::new(orders.clone(), xs.iter().map(|t| t.1).collect()).unwrap();
            let c = RdpCurve::new(orders, xs.iter().map(|t| t.2).collect()).unwrap();
            prop_assert_eq!(compose(&a, &b).unwrap(), compose(&b, &a).unwrap());
            let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
            let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
            for (l, r) in left.costs().iter().zip(right.costs()) {
                prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
            }
        }

        #[test]
        fn epsilon_non_increasing_in_delta(
            costs in proptest::collection::vec(0.0f64..5.0, 5),
            d1 in 1e-12f64..0.5,
            d2 in 1e-12f64..0.5,
        ) {
            let curve = RdpCurve::new(alloc::vec![1.5, 2.0, 4.0, 8.0, 32.0], costs).unwrap();
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(rdp_to_dp(&curve, hi).unwrap().epsilon <= rdp_to_dp(&curve, lo).unwrap().epsilon);
        }

        #[test]
        fn linear_in_steps(sigma in 0.5f64..5.0, q in 0.001f64..0.5, steps in 1u64..5000) {
            let orders = [1.5, 2.0, 8.0, 32.0];
            let one = subsampled_gaussian_rdp(sigma, q, 1, &orders).unwrap();
            let many = subsampled_gaussian_rdp(sigma, q, steps, &orders).unwrap();
            for (a, b) in one.costs().iter().zip(many.costs()) {
                prop_assert!((a * steps as f64 - b).abs() <= 1e-12 * b.max(1e-300));
            }
        }

        #[test]
        fn uniform_irdp_reduces_to_scalar(rho in 0.0f64..5.0, delta in 1e-9f64..0.5, order in 1.1f64..64.0, n in 1usize..10) {
            let g = IndividualRdp::new(order, alloc::vec![rho; n]).unwrap();
            let spec = irdp_to_pdp(&g, &alloc::vec![delta; n]).unwrap();
            let scalar = rdp_to_dp(&RdpCurve::new(alloc::vec![order], alloc::vec![rho]).unwrap(), delta).unwrap();
            for u in spec.users() {
                prop_assert_eq!(u.epsilon, scalar.epsilon);
            }
        }

        #[test]
        fn analytic_delta_decreasing(sigma in 0.3f64..10.0, e1 in 0.0f64..5.0, e2 in 0.0f64..5.0) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let d_lo = analytic_gaussian_delta(sigma, lo).unwrap();
            let d_hi = analytic_gaussian_delta(sigma, hi).unwrap();
            prop_assert!(d_hi <= d_lo * (1.0 + 1e-12));
        }
    }
}
