//! Syndrome-based error correction with seeded low-density parity-check codes.
//!
//! A code is fully described by `(n, q, seed)`; both parties rebuild the same
//! parity-check matrix from those three values. Decoding works on the
//! difference pattern: given the sender's syndrome `s` and the receiver's noisy
//! string `y`, find a low-weight `e` with `H·e = s ⊕ H·y` and return `y ⊕ e`.

use rand::seq::SliceRandom;

use crate::bits::BitString;
use crate::error::check_len;
use crate::rng::Seed;
use crate::Error;

/// Default syndrome length for a corrected string of `n` bits.
pub fn default_syndrome_len(n: usize) -> usize {
    (n as f64 * 0.1).ceil() as usize
}

const BP_ITERATIONS: usize = 50;
const BP_MIN_PRIOR: f64 = 1e-3;
const OSD_ORDER: usize = 100;
const BP_RETRIES: usize = 32;
const RETRY_ITERATIONS: usize = 15;

/// Column weight used by [`build_code`].
pub const COLUMN_WEIGHT: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    n: usize,
    q: usize,
    seed: Seed,
    /// Check rows touching each column.
    col_rows: Vec<Vec<u32>>,
    /// Columns in each check row.
    row_cols: Vec<Vec<u32>>,
}

impl LinearCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.col_rows[j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.row_cols[i]
    }

    /// Column `j` of `H` as a `q`-bit string.
    pub fn column_bits(&self, j: usize) -> BitString {
        let mut out = BitString::zeros(self.q);
        for &r in &self.col_rows[j] {
            out.set(r as usize, true);
        }
        out
    }
}

/// Builds a `q × n` parity-check matrix by progressive edge growth with
/// column weight `min(COLUMN_WEIGHT, q)`.
pub fn build_code(n: usize, q: usize, seed: Seed) -> Result<LinearCode, Error> {
    build_code_with_weight(n, q, COLUMN_WEIGHT, seed)
}

/// Progressive edge growth: each new edge of a column goes to a check outside
/// the column's current Tanner-graph neighbourhood if one exists, otherwise to
/// one of the farthest checks, preferring low check degree and breaking ties
/// with a generator seeded from `seed`. This keeps short cycles out as long as
/// the dimensions allow.
pub fn build_code_with_weight(
    n: usize,
    q: usize,
    column_weight: usize,
    seed: Seed,
) -> Result<LinearCode, Error> {
    if q == 0 || q >= n {
        return Err(Error::Domain(format!("code needs 1 <= q < n, got n={n} q={q}")));
    }
    if column_weight == 0 {
        return Err(Error::Domain("column weight must be positive".into()));
    }
    let wc = q.min(column_weight);
    let mut rng = seed.rng_for("peg");
    let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); q];
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut row_seen = vec![usize::MAX; q];
    let mut col_seen = vec![usize::MAX; n];
    let mut stamp = 0usize;
    for j in 0..n {
        for k in 0..wc {
            let candidates: Vec<usize> = if k == 0 {
                (0..q).collect()
            } else {
                stamp += 1;
                peg_frontier(
                    j,
                    &row_cols,
                    &col_rows,
                    &mut row_seen,
                    &mut col_seen,
                    stamp,
                )
            };
            let min_deg = candidates.iter().map(|&r| row_cols[r].len()).min().unwrap();
            let lightest: Vec<usize> = candidates
                .into_iter()
                .filter(|&r| row_cols[r].len() == min_deg)
                .collect();
            let r = *lightest.choose(&mut rng).expect("candidate set is nonempty");
            row_cols[r].push(j as u32);
            col_rows[j].push(r as u32);
        }
        col_rows[j].sort_unstable();
    }
    Ok(LinearCode {
        n,
        q,
        seed,
        col_rows,
        row_cols,
    })
}

/// Checks not yet reachable from column `j`, or failing that the checks first
/// reached at the greatest depth.
fn peg_frontier(
    j: usize,
    row_cols: &[Vec<u32>],
    col_rows: &[Vec<u32>],
    row_seen: &mut [usize],
    col_seen: &mut [usize],
    stamp: usize,
) -> Vec<usize> {
    let q = row_cols.len();
    col_seen[j] = stamp;
    let mut layer: Vec<usize> = col_rows[j].iter().map(|&r| r as usize).collect();
    for &r in &layer {
        row_seen[r] = stamp;
    }
    let mut reached = layer.len();
    loop {
        let mut next = Vec::new();
        for &r in &layer {
            for &c in &row_cols[r] {
                let c = c as usize;
                if col_seen[c] == stamp {
                    continue;
                }
                col_seen[c] = stamp;
                for &r2 in &col_rows[c] {
                    let r2 = r2 as usize;
                    if row_seen[r2] != stamp {
                        row_seen[r2] = stamp;
                        next.push(r2);
                    }
                }
            }
        }
        if next.is_empty() || reached + next.len() == q {
            if reached + next.len() < q {
                return (0..q).filter(|&r| row_seen[r] != stamp).collect();
            }
            if next.is_empty() {
                return layer;
            }
            // Everything is reachable: prefer checks outside the reach before
            // this last layer, i.e. the last layer itself.
            return next;
        }
        reached += next.len();
        layer = next;
    }
}

pub fn syndrome(code: &LinearCode, x: &BitString) -> Result<BitString, Error> {
    check_len(code.n, x.len())?;
    let mut s = BitString::zeros(code.q);
    for j in x.ones() {
        for &r in &code.col_rows[j] {
            s.flip(r as usize);
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decoder {
    /// `BpOsd` with the library's default settings.
    Auto,
    /// Gallager-style hard-decision flipping.
    BitFlip { max_iterations: usize },
    /// Log-domain sum-product with early exit on a syndrome match.
    BeliefPropagation { max_iterations: usize },
    /// Belief propagation followed by ordered-statistics decoding. When the
    /// first run does not converge, the `retries` least reliable bits are
    /// each forced to "error" in a fresh run. The lightest pattern wins.
    BpOsd {
        max_iterations: usize,
        osd_order: usize,
        retries: usize,
    },
}

impl Decoder {
    pub const DEFAULT: Decoder = Decoder::BpOsd {
        max_iterations: BP_ITERATIONS,
        osd_order: OSD_ORDER,
        retries: BP_RETRIES,
    };
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeOutcome {
    Corrected(BitString),
    Failure,
}

impl DecodeOutcome {
    pub fn corrected(self) -> Option<BitString> {
        match self {
            DecodeOutcome::Corrected(x) => Some(x),
            DecodeOutcome::Failure => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, DecodeOutcome::Failure)
    }
}

/// Decodes with [`Decoder::Auto`] and a channel prior of `max_flips / 2n`.
pub fn decode(
    code: &LinearCode,
    y: &BitString,
    target: &BitString,
    max_flips: usize,
) -> Result<DecodeOutcome, Error> {
    let prior = max_flips as f64 / (2.0 * code.n as f64);
    decode_with(code, y, target, max_flips, Decoder::Auto, prior)
}

/// Correction budget for strings whose error rate is at most `rate`: twice
/// the expected error weight, plus one.
pub fn max_flips_for(n: usize, rate: f64) -> usize {
    (2.0 * rate * n as f64).ceil() as usize + 1
}

pub fn decode_with(
    code: &LinearCode,
    y: &BitString,
    target: &BitString,
    max_flips: usize,
    decoder: Decoder,
    prior: f64,
) -> Result<DecodeOutcome, Error> {
    check_len(code.n, y.len())?;
    check_len(code.q, target.len())?;
    let mut diff = syndrome(code, y)?;
    diff.xor_assign(target);
    if diff.is_zero() {
        return Ok(DecodeOutcome::Corrected(y.clone()));
    }
    let decoder = if decoder == Decoder::Auto {
        Decoder::DEFAULT
    } else {
        decoder
    };
    let pattern = match decoder {
        Decoder::Auto => unreachable!("resolved above"),
        Decoder::BitFlip { max_iterations } => bit_flip(code, &diff, max_iterations),
        Decoder::BeliefPropagation { max_iterations } => {
            belief_propagation(code, &diff, max_iterations, &channel_llrs(code.n, prior)).pattern
        }
        Decoder::BpOsd {
            max_iterations,
            osd_order,
            retries,
        } => bp_osd(code, &diff, max_iterations, osd_order, retries, prior),
    };
    Ok(match pattern {
        Some(e) if e.count_ones() <= max_flips => DecodeOutcome::Corrected(y.xor(&e)),
        _ => DecodeOutcome::Failure,
    })
}

fn channel_llrs(n: usize, prior: f64) -> Vec<f64> {
    let p = prior.clamp(BP_MIN_PRIOR, 0.5 - 1e-9);
    vec![((1.0 - p) / p).ln(); n]
}

fn bp_osd(
    code: &LinearCode,
    diff: &BitString,
    max_iterations: usize,
    osd_order: usize,
    retries: usize,
    prior: f64,
) -> Option<BitString> {
    let channel = channel_llrs(code.n, prior);
    let osd = OrderedStatistics::new(code, diff);
    let first = belief_propagation(code, diff, max_iterations, &channel);
    let mut best = osd.run(&first.posterior, osd_order);
    let keep = |best: &mut Option<BitString>, e: BitString| {
        if best.as_ref().is_none_or(|b| e.count_ones() < b.count_ones()) {
            *best = Some(e);
        }
    };
    if let Some(e) = first.pattern {
        keep(&mut best, e);
        return best;
    }
    let mut doubtful: Vec<usize> = (0..code.n).collect();
    doubtful.sort_by(|&a, &b| first.posterior[a].total_cmp(&first.posterior[b]));
    for &j in doubtful.iter().take(retries) {
        let mut pinned = channel.clone();
        pinned[j] = -pinned[j];
        let run = belief_propagation(code, diff, max_iterations.min(RETRY_ITERATIONS), &pinned);
        let found = run.pattern.or_else(|| osd.run(&run.posterior, osd_order));
        if let Some(e) = found {
            keep(&mut best, e);
        }
    }
    best
}

fn unsatisfied(code: &LinearCode, e: &BitString, diff: &BitString) -> BitString {
    let mut s = syndrome(code, e).expect("length checked");
    s.xor_assign(diff);
    s
}

fn bit_flip(code: &LinearCode, diff: &BitString, max_iterations: usize) -> Option<BitString> {
    let mut e = BitString::zeros(code.n);
    let mut unsat = diff.clone();
    for _ in 0..max_iterations {
        if unsat.is_zero() {
            return Some(e);
        }
        let counts: Vec<usize> = (0..code.n)
            .map(|j| code.col_rows[j].iter().filter(|&&r| unsat.get(r as usize)).count())
            .collect();
        let top = *counts.iter().max().unwrap();
        if top == 0 {
            return None;
        }
        for (j, &c) in counts.iter().enumerate() {
            if c == top {
                e.flip(j);
            }
        }
        unsat = unsatisfied(code, &e, diff);
    }
    unsat.is_zero().then_some(e)
}

struct BpRun {
    pattern: Option<BitString>,
    /// Posterior log-likelihood ratios, positive meaning "no error".
    posterior: Vec<f64>,
}

/// Layered sum-product starting from per-bit channel log-likelihood ratios.
/// Checks are visited one after another and each updates the variable
/// posteriors immediately.
fn belief_propagation(
    code: &LinearCode,
    diff: &BitString,
    max_iterations: usize,
    channel: &[f64],
) -> BpRun {
    let mut row_start = Vec::with_capacity(code.q + 1);
    row_start.push(0);
    for row in &code.row_cols {
        row_start.push(row_start.last().unwrap() + row.len());
    }
    let mut c2v = vec![0.0f64; *row_start.last().unwrap()];
    let mut posterior = channel.to_vec();
    let mut incoming = Vec::new();
    let mut hard = BitString::zeros(code.n);
    for _ in 0..max_iterations {
        for r in 0..code.q {
            let cols = &code.row_cols[r];
            let edges = row_start[r]..row_start[r + 1];
            incoming.clear();
            incoming.extend(
                cols.iter()
                    .zip(&c2v[edges.clone()])
                    .map(|(&c, &m)| posterior[c as usize] - m),
            );
            let sign = if diff.get(r) { -1.0 } else { 1.0 };
            let mut zeros = 0;
            let mut prod = 1.0;
            for m in incoming.iter_mut() {
                let t = (*m / 2.0).tanh();
                *m = t;
                if t == 0.0 {
                    zeros += 1;
                } else {
                    prod *= t;
                }
            }
            for (i, (e, &c)) in edges.zip(cols).enumerate() {
                let t = incoming[i];
                let others = match zeros {
                    0 => prod / t,
                    1 if t == 0.0 => prod,
                    _ => 0.0,
                };
                let x = (sign * others).clamp(-0.999_999_999_999, 0.999_999_999_999);
                let msg = 2.0 * x.atanh();
                let c = c as usize;
                posterior[c] += msg - c2v[e];
                c2v[e] = msg;
            }
        }
        for (j, &l) in posterior.iter().enumerate() {
            hard.set(j, l < 0.0);
        }
        if unsatisfied(code, &hard, diff).is_zero() {
            return BpRun {
                pattern: Some(hard),
                posterior,
            };
        }
    }
    BpRun {
        pattern: None,
        posterior,
    }
}

/// Incremental GF(2) echelon basis over the columns of `H`, each reduced
/// vector remembering which chosen columns it combines.
struct ColumnBasis {
    vectors: Vec<(usize, BitString, BitString)>,
    capacity: usize,
}

impl ColumnBasis {
    fn new(capacity: usize) -> Self {
        ColumnBasis {
            vectors: Vec::new(),
            capacity,
        }
    }

    /// Reduces `v` in place and returns the combination of basis members used.
    fn reduce(&self, v: &mut BitString) -> BitString {
        let mut combo = BitString::zeros(self.capacity);
        for (pivot, vec, mask) in &self.vectors {
            if v.get(*pivot) {
                v.xor_assign(vec);
                combo.xor_assign(mask);
            }
        }
        combo
    }

    /// Adds `v` if it is independent of the current span.
    fn insert(&mut self, mut v: BitString) -> bool {
        let mut combo = self.reduce(&mut v);
        let Some(pivot) = v.ones().next() else {
            return false;
        };
        combo.flip(self.vectors.len());
        self.vectors.push((pivot, v, combo));
        true
    }
}

/// Ordered-statistics decoding. Columns are ranked by how likely a posterior
/// says they are in error and the first independent ones form a set that
/// absorbs the syndrome. The `order` least reliable columns outside the set
/// are also tried as single and paired flips. The lightest consistent
/// pattern wins.
struct OrderedStatistics<'a> {
    code: &'a LinearCode,
    diff: &'a BitString,
    columns: Vec<BitString>,
}

/// A column expressed over the chosen set: which members it combines and
/// what is left outside their span.
struct Reduced {
    combo: BitString,
    residual: BitString,
}

impl<'a> OrderedStatistics<'a> {
    fn new(code: &'a LinearCode, diff: &'a BitString) -> Self {
        let columns = (0..code.n).map(|j| code.column_bits(j)).collect();
        OrderedStatistics {
            code,
            diff,
            columns,
        }
    }

    fn run(&self, posterior: &[f64], order: usize) -> Option<BitString> {
        let n = self.code.n;
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&a, &b| posterior[a].total_cmp(&posterior[b]));
        let mut basis = ColumnBasis::new(self.code.q);
        let mut chosen = Vec::new();
        let mut rest = Vec::new();
        for &j in &ranked {
            if chosen.len() < self.code.q && basis.insert(self.columns[j].clone()) {
                chosen.push(j);
            } else {
                rest.push(j);
            }
        }
        let reduce = |v: &BitString| {
            let mut residual = v.clone();
            let combo = basis.reduce(&mut residual);
            Reduced { combo, residual }
        };
        let target = reduce(self.diff);
        let sweep: Vec<(usize, Reduced)> = rest
            .iter()
            .take(order)
            .map(|&j| (j, reduce(&self.columns[j])))
            .collect();
        let mut best: Option<(usize, Vec<usize>, BitString)> = None;
        let mut consider = |flips: &[usize], combo: BitString| {
            let weight = combo.count_ones() + flips.len();
            if best.as_ref().is_none_or(|(w, _, _)| weight < *w) {
                best = Some((weight, flips.to_vec(), combo));
            }
        };
        if target.residual.is_zero() {
            consider(&[], target.combo.clone());
        }
        for (a, (i, ri)) in sweep.iter().enumerate() {
            let mut residual = target.residual.xor(&ri.residual);
            let single = target.combo.xor(&ri.combo);
            if residual.is_zero() {
                consider(&[*i], single.clone());
            }
            for (j, rj) in &sweep[a + 1..] {
                residual.xor_assign(&rj.residual);
                if residual.is_zero() {
                    consider(&[*i, *j], single.xor(&rj.combo));
                }
                residual.xor_assign(&rj.residual);
            }
        }
        let (_, flips, combo) = best?;
        let mut e = BitString::zeros(n);
        for k in combo.ones() {
            e.set(chosen[k], true);
        }
        for j in flips {
            e.flip(j);
        }
        Some(e)
    }
}
