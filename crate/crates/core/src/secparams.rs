//! Concrete security bounds and parameter search.
//!
//! Every bound is a sum of a privacy-amplification term and two sampling
//! tails. Terms are combined in natural-log space so values far below
//! `1e-300` never appear as intermediate zeros.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;

/// Hash output length `ℓ = λ_PQS` used by default in every bound.
pub const DEFAULT_ELL: usize = 256;
/// Equivocal commitments per OT layer in the BCKM21 count.
pub const LAMBDA_EQ: usize = 128;
/// Oracle query budget for the ABKK23 rows.
pub const DEFAULT_Q_RO: f64 = 18_446_744_073_709_551_616.0;
/// States per second assumed for acquisition times.
pub const ACQUISITION_RATE_HZ: f64 = 1e6;
/// Targets above this are flagged as an insecure regime.
pub const INSECURE_ABOVE: f64 = 1.0 / 1_099_511_627_776.0;
/// Relaxed-extraction model recorded with every optimizer output.
pub const CHI_MODEL: &str = "chi = 2*log2(k)^2/k, eta = zeta = log2(k)^2/k";

const LN_2: f64 = std::f64::consts::LN_2;

/// `h₂(x) = -x·log₂x - (1-x)·log₂(1-x)` with `h₂(0) = h₂(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(x) + term(1.0 - x))
}

/// `η(k) = (log₂k)²/k`; `χ = 2η`.
pub fn eta_for(k: usize) -> f64 {
    let k = k as f64;
    k.log2().powi(2) / k
}

/// How the ERE exponent charges multiphoton leakage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leakage {
    /// `2ϑ·λ_EX` bits, as displayed.
    Verbatim,
    /// `2ϑ·m` bits: leakage charged on the hashed substring only.
    Proportional,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    pub lambda_ot: usize,
    pub lambda_ex: usize,
    pub m: usize,
    pub k: usize,
    pub w: usize,
    /// Multi-OT block size and count, when chosen.
    pub v: Option<usize>,
    pub n_ot: Option<usize>,
    pub ell: usize,
    /// Syndrome bits charged to the OT and ERE exponents.
    pub q_ot: usize,
    pub q_ere: usize,
    pub xi_ot: f64,
    pub delta_ot: f64,
    pub xi_ex: f64,
    pub delta_ex: f64,
    pub alpha: f64,
    pub vartheta: f64,
    pub chi: f64,
    pub eta: f64,
    pub zeta: f64,
    pub leakage: Leakage,
    pub target_delta: f64,
}

impl SecurityParams {
    /// `N = 2λ_OT + 4λ_EX`.
    pub fn n_bb84(&self) -> usize {
        2 * self.lambda_ot + 4 * self.lambda_ex
    }

    /// Structural invariants shared by every output of [`optimize_params`].
    pub fn validate(&self) -> Result<(), Error> {
        let fail = |what: &str| Err(Error::Domain(format!("{what}: {self:?}")));
        if self.m == 0 || self.k != self.lambda_ex / self.m {
            return fail("k must equal floor(lambda_ex / m)");
        }
        if self.w * self.k < 4 * self.lambda_ot {
            return fail("w*k must cover 4*lambda_ot commit slots");
        }
        if (self.chi - self.eta - self.zeta).abs() > 1e-12 || (self.eta - self.zeta).abs() > 1e-12 {
            return fail("chi must equal eta + zeta with eta = zeta");
        }
        if self.delta_ot + self.alpha + self.chi > 0.5 || self.delta_ex + self.alpha + self.eta > 0.5 {
            return fail("entropy arguments must stay at most 1/2");
        }
        Ok(())
    }
}

fn slack_ok(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

fn check_slacks(xi: f64, delta: f64) -> Result<(), Error> {
    if !slack_ok(xi) || !slack_ok(delta) {
        return Err(Error::Domain(format!("sampling slacks xi = {xi}, delta = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

fn entropy_arg(x: f64) -> Result<f64, Error> {
    if x > 0.5 {
        return Err(Error::Domain(format!("entropy argument {x} exceeds 1/2")));
    }
    binary_entropy(x)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln` of `½·2^{-e/2} + √6·exp(-a) + 2·exp(-b)`.
fn ln_three_terms(exponent: f64, a: f64, b: f64) -> f64 {
    log_sum_exp(&[0.5f64.ln() - 0.5 * exponent * LN_2, 6f64.sqrt().ln() - a, LN_2 - b])
}

/// Privacy-amplification exponent of the single-OT bound.
pub fn exponent_ot(p: &SecurityParams) -> Result<f64, Error> {
    let lot = p.lambda_ot as f64;
    let h = entropy_arg(p.delta_ot + p.alpha + p.chi)?;
    Ok((0.5 - p.xi_ot - 2.0 * p.vartheta) * lot / 2.0 - h * lot / 2.0 * (1.0 - 2.0 * p.vartheta) - p.ell as f64 - p.q_ot as f64)
}

/// `ln Δ` for a malicious Bob.
pub fn ln_bound_ot_malicious_bob(p: &SecurityParams) -> Result<f64, Error> {
    check_slacks(p.xi_ot, p.delta_ot)?;
    let lot = p.lambda_ot as f64;
    Ok(ln_three_terms(exponent_ot(p)?, lot * p.delta_ot.powi(2) / 100.0, p.xi_ot.powi(2) * lot / 2.0))
}

pub fn bound_ot_malicious_bob(p: &SecurityParams) -> Result<f64, Error> {
    ln_bound_ot_malicious_bob(p).map(f64::exp)
}

fn ere_leakage(p: &SecurityParams) -> f64 {
    match p.leakage {
        Leakage::Verbatim => 2.0 * p.vartheta * p.lambda_ex as f64,
        Leakage::Proportional => 2.0 * p.vartheta * p.m as f64,
    }
}

pub fn exponent_ere(p: &SecurityParams) -> Result<f64, Error> {
    let m = p.m as f64;
    let leak = ere_leakage(p);
    let h = entropy_arg(p.delta_ex + p.alpha + p.eta)?;
    Ok((0.5 - p.xi_ex) * m - leak - h * (m - leak) - p.ell as f64 - p.q_ere as f64)
}

/// `ln Δ` for a malicious ERE receiver.
pub fn ln_bound_ere_malicious_receiver(p: &SecurityParams) -> Result<f64, Error> {
    check_slacks(p.xi_ex, p.delta_ex)?;
    let lex = p.lambda_ex as f64;
    Ok(ln_three_terms(exponent_ere(p)?, 2.0 * lex * p.delta_ex.powi(2) / 100.0, 4.0 * p.xi_ex.powi(2) * lex))
}

pub fn bound_ere_malicious_receiver(p: &SecurityParams) -> Result<f64, Error> {
    ln_bound_ere_malicious_receiver(p).map(f64::exp)
}

/// `ln Δ` for each of `n_ot = floor(λ_OT / v)` distilled transfers, with
/// `ℓ = p.ell`. The syndrome is charged at the same rate as in the single
/// transfer: `q = q_ot·v/λ_OT` for a corrected block of `v/2` bits.
pub fn ln_bound_multi_ot(p: &SecurityParams, v: usize, n_ot: usize) -> Result<f64, Error> {
    check_slacks(p.xi_ot, p.delta_ot)?;
    if v == 0 || n_ot != p.lambda_ot / v {
        return Err(Error::Domain(format!("n_ot = {n_ot} must equal floor({} / {v})", p.lambda_ot)));
    }
    let lot = p.lambda_ot as f64;
    let half = v as f64 / 2.0;
    let leak = p.vartheta * lot;
    let h = entropy_arg(p.delta_ot + p.alpha + p.chi)?;
    let q = (p.q_ot as f64 * v as f64 / lot).ceil();
    let e = (0.5 - p.xi_ot) * half - leak - h * (half - leak) - p.ell as f64 - q;
    Ok(ln_three_terms(e, lot * p.delta_ot.powi(2) / 100.0, p.xi_ot.powi(2) * lot / 2.0))
}

pub fn bound_multi_ot(p: &SecurityParams, v: usize, n_ot: usize) -> Result<f64, Error> {
    ln_bound_multi_ot(p, v, n_ot).map(f64::exp)
}

/// Shares of the target given to the `δ` and `ξ` tails; the rest goes to
/// the privacy-amplification term.
fn tail_splits() -> impl Iterator<Item = (f64, f64)> {
    const F1: [f64; 7] = [0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 0.8];
    const F2: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.45];
    F1.into_iter()
        .flat_map(|f1| F2.into_iter().map(move |f2| (f1, f2)))
        .filter(|(f1, f2)| f1 + f2 < 0.98)
}

/// Slacks that put exactly `f1·target` and `f2·target` into the OT tails.
fn ot_slacks(lot: f64, target: f64, f1: f64, f2: f64) -> (f64, f64) {
    let delta = (100.0 * (6f64.sqrt() / (f1 * target)).ln() / lot).sqrt();
    let xi = (2.0 * (2.0 / (f2 * target)).ln() / lot).sqrt();
    (xi, delta)
}

fn ere_slacks(lex: f64, target: f64, f1: f64, f2: f64) -> (f64, f64) {
    let delta = (50.0 * (6f64.sqrt() / (f1 * target)).ln() / lex).sqrt();
    let xi = ((2.0 / (f2 * target)).ln() / (4.0 * lex)).sqrt();
    (xi, delta)
}

/// Noise-dependent settings fixed before the search.
#[derive(Clone, Copy, Debug)]
struct Regime {
    target: f64,
    alpha: f64,
    vartheta: f64,
    /// Syndrome length as a fraction of `λ_OT` and of `m`.
    q_ot_frac: f64,
    q_ere_frac: f64,
}

impl Regime {
    fn new(target: f64, alpha: f64, vartheta: f64) -> Self {
        let noisy = alpha > 0.0;
        Regime {
            target,
            alpha,
            vartheta,
            q_ot_frac: if noisy { 0.05 } else { 0.0 },
            q_ere_frac: if noisy { 0.1 } else { 0.0 },
        }
    }

    fn base(&self, k: usize) -> SecurityParams {
        let eta = eta_for(k.max(2));
        SecurityParams {
            lambda_ot: 0,
            lambda_ex: 0,
            m: 0,
            k,
            w: 0,
            v: None,
            n_ot: None,
            ell: DEFAULT_ELL,
            q_ot: 0,
            q_ere: 0,
            xi_ot: 0.5,
            delta_ot: 0.5,
            xi_ex: 0.5,
            delta_ex: 0.5,
            alpha: self.alpha,
            vartheta: self.vartheta,
            chi: 2.0 * eta,
            eta,
            zeta: eta,
            leakage: Leakage::Proportional,
            target_delta: self.target,
        }
    }

    fn fit_ot(&self, mut p: SecurityParams, lot: usize) -> Option<SecurityParams> {
        p.lambda_ot = lot;
        p.q_ot = (self.q_ot_frac * lot as f64).ceil() as usize;
        tail_splits().find_map(|(f1, f2)| {
            (p.xi_ot, p.delta_ot) = ot_slacks(lot as f64, self.target, f1, f2);
            let ok = ln_bound_ot_malicious_bob(&p).is_ok_and(|b| b <= self.target.ln());
            ok.then_some(p)
        })
    }

    fn fit_ere(&self, lex: usize, m: usize) -> Option<SecurityParams> {
        let mut p = self.base(lex / m);
        (p.lambda_ex, p.m) = (lex, m);
        p.q_ere = (self.q_ere_frac * m as f64).ceil() as usize;
        tail_splits().find_map(|(f1, f2)| {
            (p.xi_ex, p.delta_ex) = ere_slacks(lex as f64, self.target, f1, f2);
            let ok = ln_bound_ere_malicious_receiver(&p).is_ok_and(|b| b <= self.target.ln());
            ok.then_some(p)
        })
    }

    /// Smallest `m` (on a 0.1% grid) whose ERE bound meets the target.
    fn smallest_m(&self, lex: usize) -> Option<SecurityParams> {
        let mut m = 16;
        while lex / m >= 2 {
            if let Some(p) = self.fit_ere(lex, m) {
                return Some(p);
            }
            m += (m / 1000).max(1);
        }
        None
    }

    /// Smallest `λ_OT` by bisection, given the ERE layer.
    fn smallest_lot(&self, ere: SecurityParams) -> Option<SecurityParams> {
        let (mut lo, mut hi) = (2usize, 100_000_000_000usize);
        let mut best = self.fit_ot(ere, hi)?;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            match self.fit_ot(ere, mid) {
                Some(p) => {
                    hi = mid;
                    best = p;
                }
                None => lo = mid,
            }
        }
        best.w = (4 * best.lambda_ot).div_ceil(best.k);
        Some(best)
    }

    fn candidate(&self, lex: usize) -> Option<SecurityParams> {
        self.smallest_lot(self.smallest_m(lex)?)
    }
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<usize> {
    (0..n)
        .map(|i| (lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).round() as usize)
        .collect()
}

/// Minimizes `N = 2λ_OT + 4λ_EX` subject to both bounds meeting `target`.
///
/// Search: a log grid over `λ_EX`, refined twice around the best point.
/// For each `λ_EX` the smallest feasible `m` is taken, which maximizes `k`
/// and so minimizes `χ`; `λ_OT` is then found by bisection. Syndromes are
/// charged only when `alpha > 0`.
pub fn optimize_params(target: f64, alpha: f64, vartheta: f64) -> Result<SecurityParams, Error> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target {target} outside (0, 1)")));
    }
    if !(0.0..0.5).contains(&alpha) || !(0.0..0.5).contains(&vartheta) {
        return Err(Error::Domain(format!("alpha = {alpha}, vartheta = {vartheta} outside [0, 1/2)")));
    }
    let regime = Regime::new(target, alpha, vartheta);
    let mut grid = geomspace(1e3, 1e10, 57);
    let mut best: Option<SecurityParams> = None;
    for _ in 0..3 {
        let mut best_at = None;
        for (i, &lex) in grid.iter().enumerate() {
            if let Some(p) = regime.candidate(lex) {
                if best.is_none_or(|b| p.n_bb84() < b.n_bb84()) {
                    best = Some(p);
                    best_at = Some(i);
                }
            }
        }
        let Some(i) = best_at else { break };
        let lo = grid[i.saturating_sub(1)] as f64;
        let hi = grid[(i + 1).min(grid.len() - 1)] as f64;
        grid = geomspace(lo, hi, 21);
    }
    let p = best.ok_or_else(|| Error::Infeasible(format!("no lambda_ex in [1e3, 1e10] meets {target}")))?;
    p.validate()?;
    if bound_ot_malicious_bob(&p)? > target || bound_ere_malicious_receiver(&p)? > target {
        return Err(Error::Infeasible("closed-loop check failed".into()));
    }
    Ok(p)
}

/// Smallest block size `v` whose multi-OT bound meets the target with the
/// slacks already in `p`, and the resulting `n_ot`.
pub fn smallest_block(p: &SecurityParams) -> Result<(usize, usize), Error> {
    let ok = |v: usize| ln_bound_multi_ot(p, v, p.lambda_ot / v).is_ok_and(|b| b <= p.target_delta.ln());
    let v = smallest_integer(p.lambda_ot, |v| v > 0 && ok(v))?;
    Ok((v, p.lambda_ot / v))
}

/// Parameters and bound of one table column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub protocol: String,
    pub target_delta: f64,
    pub alpha: Option<f64>,
    pub vartheta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_ro: Option<f64>,
    pub params: serde_json::Value,
    pub n_bb84: f64,
    pub t_acq_seconds: f64,
    pub chi_model: Option<String>,
    pub insecure_regime: bool,
}

impl BenchmarkRow {
    fn new(protocol: &str, target: f64, n_bb84: f64, params: serde_json::Value) -> Self {
        BenchmarkRow {
            protocol: protocol.into(),
            target_delta: target,
            alpha: None,
            vartheta: None,
            q_ro: None,
            params,
            n_bb84,
            t_acq_seconds: n_bb84 / ACQUISITION_RATE_HZ,
            chi_model: None,
            insecure_regime: target > INSECURE_ABOVE,
        }
    }
}

/// Row for this protocol, including the multi-OT block size.
pub fn bench_ours(target: f64, alpha: f64, vartheta: f64) -> Result<BenchmarkRow, Error> {
    let mut p = optimize_params(target, alpha, vartheta)?;
    if let Ok((v, n_ot)) = smallest_block(&p) {
        (p.v, p.n_ot) = (Some(v), Some(n_ot));
    }
    let name = if alpha == 0.0 && vartheta == 0.0 { "ours-ideal" } else { "ours-noisy" };
    let mut row = BenchmarkRow::new(name, target, p.n_bb84() as f64, serde_json::to_value(p).expect("params serialize"));
    row.alpha = Some(alpha);
    row.vartheta = Some(vartheta);
    row.chi_model = Some(CHI_MODEL.into());
    Ok(row)
}

/// `ln` of the BCKM21 OT-layer bound with `l` output bits.
pub fn ln_bckm_ot_layer(lot: f64, l: f64, xi: f64, delta: f64) -> f64 {
    let h = binary_entropy(delta.min(1.0)).unwrap_or(1.0);
    ln_three_terms((1.0 - xi - h) * 4.0 * lot - l, delta * delta * 8.0 * lot / 100.0, xi * xi * 4.0 * lot)
}

/// `ln` of the BCKM21 extractable-layer bound.
pub fn ln_bckm_ex_layer(lex: f64, xi: f64, delta: f64) -> f64 {
    let h = binary_entropy(delta.min(1.0)).unwrap_or(1.0);
    let cube = lex.powi(3);
    ln_three_terms((0.5 - xi - h) * lex * lex - 1.0, cube * delta * delta / 100.0, 2.0 * xi * xi * cube)
}

/// Minimum over a grid of `δ ∈ (0, 1/2]` (1000 points) and
/// `ξ ∈ (0, 1/2]` (600 points).
fn grid_min(f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 1..=1000 {
        let delta = 0.5 * i as f64 / 1000.0;
        for j in 1..=600 {
            best = best.min(f(0.5 * j as f64 / 600.0, delta));
        }
    }
    best
}

fn smallest_integer(hi: usize, ok: impl Fn(usize) -> bool) -> Result<usize, Error> {
    if !ok(hi) {
        return Err(Error::Infeasible(format!("no size up to {hi} meets the target")));
    }
    let (mut lo, mut hi) = (0, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// BCKM21 state count `16·λ_OT·λ_eq·4·2·λ_EX³ + 16·λ_OT` with each layer
/// sized to meet `target` on its own; the OT layer uses `l = ℓ` output bits.
pub fn bench_bckm21(target: f64, lambda_eq: usize) -> Result<BenchmarkRow, Error> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target {target} outside (0, 1)")));
    }
    let ln_t = target.ln();
    let l = DEFAULT_ELL as f64;
    let lot = smallest_integer(1 << 24, |n| grid_min(|xi, d| ln_bckm_ot_layer(n as f64, l, xi, d)) <= ln_t)?;
    let lex = smallest_integer(1 << 12, |n| grid_min(|xi, d| ln_bckm_ex_layer(n as f64, xi, d)) <= ln_t)?;
    let (lot_f, lex_f) = (lot as f64, lex as f64);
    let n = 16.0 * lot_f * lambda_eq as f64 * 4.0 * 2.0 * lex_f.powi(3) + 16.0 * lot_f;
    Ok(BenchmarkRow::new(
        "bckm21",
        target,
        n,
        json!({ "lambda_ot": lot, "lambda_ex": lex, "lambda_eq": lambda_eq, "ell": DEFAULT_ELL }),
    ))
}

fn log2_sum(terms: &[f64]) -> f64 {
    log_sum_exp(&terms.iter().map(|t| t * LN_2).collect::<Vec<_>>()) / LN_2
}

/// `log₂ max(μ_R, μ_S)` for the 3- or 4-round ABKK23 protocol.
pub fn log2_abkk23(lambda: f64, q_ro: f64, rounds: u8) -> Result<f64, Error> {
    let lq = q_ro.log2();
    let (mu_r, mu_s) = match rounds {
        3 => (
            log2_sum(&[
                5f64.sqrt().log2() - lambda,
                2.0 + lq - 18.0 * lambda,
                (148.0 * (q_ro + 46000.0 * lambda + 1.0).powi(3) + 1.0).log2() - 2.0 * lambda,
                (368000.0 * lambda).log2() + lq - lambda,
            ]),
            430f64.log2() + lq + 0.5 * lambda.log2() - lambda,
        ),
        4 => {
            let n = 10300.0 * lambda;
            (
                log2_sum(&[
                    5f64.sqrt().log2() - lambda,
                    -9.0 * lambda,
                    (148.0 * (q_ro + 2.0 * n + 1.0).powi(3) + 1.0).log2() - 2.0 * lambda,
                    (16.0 * n).log2() + lq - lambda,
                ]),
                288f64.log2() + lq + 0.5 * lambda.log2() - lambda,
            )
        }
        r => return Err(Error::Domain(format!("ABKK23 has 3- and 4-round variants, not {r}"))),
    };
    Ok(mu_r.max(mu_s))
}

/// Smallest integer `λ` with `max(μ_R, μ_S) ≤ target`; `N = 23000λ` or
/// `10300λ`.
pub fn bench_abkk23(target: f64, q_ro: f64, rounds: u8) -> Result<BenchmarkRow, Error> {
    if q_ro < 1.0 || !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("need q_ro >= 1 and target in (0, 1), got {q_ro}, {target}")));
    }
    let per_lambda = match rounds {
        3 => 23000.0,
        4 => 10300.0,
        r => return Err(Error::Domain(format!("ABKK23 has 3- and 4-round variants, not {r}"))),
    };
    let lt = target.log2();
    let mut lambda = 1usize;
    while log2_abkk23(lambda as f64, q_ro, rounds)? > lt {
        lambda += 1;
    }
    let mut row = BenchmarkRow::new(
        &format!("abkk23-{rounds}round"),
        target,
        per_lambda * lambda as f64,
        json!({ "lambda": lambda }),
    );
    row.q_ro = Some(q_ro);
    Ok(row)
}

/// The five table columns: BCKM21, ABKK23 (3 and 4 rounds), this protocol
/// ideal and noisy.
pub fn bench_all(target: f64) -> Result<Vec<BenchmarkRow>, Error> {
    Ok(vec![
        bench_bckm21(target, LAMBDA_EQ)?,
        bench_abkk23(target, DEFAULT_Q_RO, 3)?,
        bench_abkk23(target, DEFAULT_Q_RO, 4)?,
        bench_ours(target, 0.0, 0.0)?,
        bench_ours(target, 0.006, 0.001)?,
    ])
}

/// `3.22×10^6` style with three significant digits.
pub fn format_count(x: f64) -> String {
    if x <= 0.0 {
        return "0".into();
    }
    let exp = x.log10().floor() as i32;
    let mantissa = x / 10f64.powi(exp);
    if mantissa >= 9.995 {
        return format!("1.00×10^{}", exp + 1);
    }
    format!("{mantissa:.2}×10^{exp}")
}

fn sig3(x: f64) -> String {
    let digits = if x >= 100.0 {
        0
    } else if x >= 10.0 {
        1
    } else {
        2
    };
    format!("{x:.digits$}")
}

/// Seconds, minutes, hours, days or 30.44-day months.
pub fn format_duration(seconds: f64) -> String {
    const UNITS: [(f64, &str); 4] = [(2_630_016.0, "months"), (86_400.0, "days"), (3_600.0, "h"), (60.0, "min")];
    UNITS
        .iter()
        .find(|(s, _)| seconds >= 2.0 * s)
        .map(|(s, u)| format!("{} {u}", sig3(seconds / s)))
        .unwrap_or_else(|| format!("{} s", sig3(seconds)))
}

/// Plain-text table with one column per row.
pub fn render_table(rows: &[BenchmarkRow]) -> String {
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| if v == 0.0 { "-".into() } else { format!("{v}") });
    let lines: [(&str, Box<dyn Fn(&BenchmarkRow) -> String>); 6] = [
        ("", Box::new(|r| r.protocol.clone())),
        ("alpha", Box::new(move |r| opt(r.alpha))),
        ("vartheta", Box::new(move |r| opt(r.vartheta))),
        ("q_RO", Box::new(|r| r.q_ro.map_or("-".into(), |q| format!("2^{}", q.log2().round())))),
        ("N_BB84", Box::new(|r| format_count(r.n_bb84))),
        ("T_acq", Box::new(|r| format_duration(r.t_acq_seconds))),
    ];
    let cells: Vec<Vec<String>> = lines
        .iter()
        .map(|(label, f)| std::iter::once(label.to_string()).chain(rows.iter().map(f)).collect())
        .collect();
    let widths: Vec<usize> = (0..=rows.len())
        .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let padded: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        let _ = writeln!(out, "| {} |", padded.join(" | "));
    }
    out
}
