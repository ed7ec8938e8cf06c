//! Converse upper bounds on the per-use rate of a batched code over a line
//! network, and the constructive collapse witnesses behind the general
//! bound.
//!
//! All three bounds share the same shape: (probability that no link
//! collapses a batch) x (cardinality cap on what one batch can carry), per
//! channel use. They differ in the collapse event and hence in the exponent
//! of the collapse probability. Bounds are evaluated in log space so that
//! very long networks report a finite log value even when the bound itself
//! underflows.

use std::collections::BTreeSet;

use crate::alphabet::Word;
use crate::channel::{
    apply_noise, canonical_witness, noise_probability, pairwise_overlap, Dmc, NoiseRealization,
};
use crate::composition::{run_deterministic, BatchNetwork};
use crate::error::{Error, Result};

/// Which collapse event the bound is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundRegime {
    /// Packet erasure links; `eps` is the erasure probability.
    Erasure,
    /// Links sharing a canonical witness output; `eps` is the smallest
    /// witness floor across links.
    Canonical,
    /// Arbitrary links with zero zero-error capacity; `eps` is the smallest
    /// pairwise overlap floor across links, and hops are grouped `K` at a
    /// time.
    General,
}

/// Parameters a closed-form bound is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    /// Network length (number of links).
    pub length: u64,
    /// Inner blocklength (channel uses per link per batch).
    pub blocklength: u32,
    /// Batch size (symbols per batch).
    pub batch_size: u32,
    /// Hop group size for the general regime; 1 elsewhere.
    pub group: u64,
    pub batch_alphabet_size: usize,
    pub q_in_size: usize,
    pub q_out_size: usize,
    /// Regime-dependent channel floor, in (0, 1].
    pub eps: f64,
}

impl BoundParams {
    fn validate(&self) -> Result<()> {
        if self.length == 0 || self.blocklength == 0 || self.batch_size == 0 || self.group == 0 {
            return Err(Error::InvalidParameter(
                "length, blocklength, batch size and group must be >= 1".into(),
            ));
        }
        if self.batch_alphabet_size < 2 || self.q_in_size < 2 || self.q_out_size < 2 {
            return Err(Error::InvalidParameter(
                "alphabet sizes must be >= 2".into(),
            ));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1], got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// `min(M ln|A|, N ln|Q_out|)`: the most one batch can carry, in nats.
    pub fn cardinality_cap(&self) -> f64 {
        let by_batch = self.batch_size as f64 * (self.batch_alphabet_size as f64).ln();
        let by_output = self.blocklength as f64 * (self.q_out_size as f64).ln();
        by_batch.min(by_output)
    }

    /// Parameters read off a concrete network; `eps` is derived per regime
    /// from the links (minimum across links for heterogeneous networks).
    pub fn from_network(net: &BatchNetwork, regime: BoundRegime, group: u64) -> Result<Self> {
        let eps = match regime {
            BoundRegime::Erasure | BoundRegime::Canonical => net
                .links()
                .iter()
                .enumerate()
                .map(|(i, link)| {
                    canonical_witness(link).map(|w| w.eps).ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "link {i} has no canonical witness output; use the general regime"
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min),
            BoundRegime::General => {
                let floor = net
                    .links()
                    .iter()
                    .map(pairwise_overlap)
                    .fold(f64::INFINITY, f64::min);
                if floor <= 0.0 {
                    return Err(Error::ZeroErrorPositive);
                }
                floor
            }
        };
        Ok(BoundParams {
            length: net.length() as u64,
            blocklength: net.inner_blocklength() as u32,
            batch_size: net.batch_size() as u32,
            group,
            batch_alphabet_size: net.batch_alphabet().len(),
            q_in_size: net.q_in().len(),
            q_out_size: net.q_out().len(),
            eps,
        })
    }
}

/// A bound value in nats per channel use, with its natural logarithm
/// (finite even when the value underflows to zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub nats_per_use: f64,
    pub ln_nats_per_use: f64,
}

impl BoundValue {
    fn from_log(ln_value: f64) -> Self {
        BoundValue {
            nats_per_use: ln_value.exp(),
            ln_nats_per_use: ln_value,
        }
    }
}

/// `ln[(1 - eps^exponent)^count * cap / N]` assembled in log space.
fn assemble(count: f64, eps: f64, exponent: f64, cap: f64, blocklength: f64) -> f64 {
    // ln(1 - eps^exponent) via ln1p for small masses
    let collapse = (exponent * eps.ln()).exp();
    let per_group = if collapse >= 1.0 {
        f64::NEG_INFINITY
    } else {
        (-collapse).ln_1p()
    };
    count * per_group + cap.ln() - blocklength.ln()
}

/// Rate bound for identical packet-erasure links:
/// `(1 - eps^N)^L * min(M ln|A|, N ln|Q_out|) / N`.
pub fn erasure_bound(p: &BoundParams) -> Result<BoundValue> {
    p.validate()?;
    Ok(BoundValue::from_log(assemble(
        p.length as f64,
        p.eps,
        p.blocklength as f64,
        p.cardinality_cap(),
        p.blocklength as f64,
    )))
}

/// Rate bound for links with a canonical witness output:
/// `(1 - eps^(|Q_in| N))^L * min(M ln|A|, N ln|Q_out|) / N`.
pub fn canonical_bound(p: &BoundParams) -> Result<BoundValue> {
    p.validate()?;
    Ok(BoundValue::from_log(assemble(
        p.length as f64,
        p.eps,
        p.q_in_size as f64 * p.blocklength as f64,
        p.cardinality_cap(),
        p.blocklength as f64,
    )))
}

/// Rate bound for arbitrary links with zero zero-error capacity, hops
/// grouped `K` at a time:
/// `(1 - eps^(N K |Q_in|))^(L/K) * min(M ln|A|, N ln|Q_out|) / N`.
///
/// Requires `K | L` and `K >= N log2 |Q_in|` (the group must be long enough
/// for the halving construction to reach a single word).
pub fn general_bound(p: &BoundParams) -> Result<BoundValue> {
    p.validate()?;
    if !p.length.is_multiple_of(p.group) {
        return Err(Error::GroupSize {
            group: p.group as usize,
            length: p.length as usize,
        });
    }
    let needed = (p.blocklength as f64) * (p.q_in_size as f64).log2();
    if (p.group as f64) < needed - 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "group size {} is below N log2|Q_in| = {needed}",
            p.group
        )));
    }
    Ok(BoundValue::from_log(assemble(
        (p.length / p.group) as f64,
        p.eps,
        p.blocklength as f64 * p.group as f64 * p.q_in_size as f64,
        p.cardinality_cap(),
        p.blocklength as f64,
    )))
}

/// A single-hop collapse witness: one noise realization that maps every
/// word of the given input set into a small output set.
#[derive(Debug, Clone)]
pub struct HalvingWitness {
    pub noise: NoiseRealization,
    /// Image of the input set under the witness noise; at most
    /// `ceil(|inputs| / 2)` words.
    pub outputs: Vec<Word>,
    /// Exact probability that the channel realizes this noise.
    pub probability: f64,
}

/// Builds a noise realization for `n` uses of `q` that folds the input set
/// onto at most half as many output words, with probability at least
/// `overlap^(|Q_in| n)`.
///
/// Words are paired in lexicographic order (the last one self-paired when
/// the set is odd); each pair shares, position by position, the output that
/// maximizes the smaller of the two channel masses. Noise entries already
/// fixed by an earlier pair win; a pair that cannot reuse them without
/// dropping below the overlap floor is broken up, its second word re-pooled
/// for the next pairing round. The cardinality ceiling is verified and a
/// violation reported rather than silently weakened.
pub fn halving_witness(q: &Dmc, n: usize, inputs: &BTreeSet<Word>) -> Result<HalvingWitness> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("empty input set".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
    }
    for w in inputs {
        if w.len() != n || w.iter().any(|&s| s >= q.num_inputs()) {
            return Err(Error::InvalidParameter(format!(
                "input word {w:?} is not a length-{n} word over the channel inputs"
            )));
        }
    }
    let overlap = pairwise_overlap(q);
    if overlap <= 0.0 {
        return Err(Error::ZeroErrorPositive);
    }
    let floor = overlap - 1e-12;

    let mut assignment: Vec<Vec<Option<usize>>> = vec![vec![None; q.num_inputs()]; n];
    let mut outputs: BTreeSet<Word> = BTreeSet::new();
    let mut pool: Vec<Word> = inputs.iter().cloned().collect();

    while !pool.is_empty() {
        let mut displaced = Vec::new();
        let mut i = 0;
        while i < pool.len() {
            if i + 1 < pool.len() {
                let (first, second) = (pool[i].clone(), pool[i + 1].clone());
                i += 2;
                match try_pair(q, &first, &second, floor, &mut assignment) {
                    Some(y) => {
                        outputs.insert(y);
                    }
                    None => {
                        outputs.insert(assign_single(q, &first, &mut assignment));
                        displaced.push(second);
                    }
                }
            } else {
                let word = pool[i].clone();
                i += 1;
                outputs.insert(assign_single(q, &word, &mut assignment));
            }
        }
        pool = displaced;
    }

    let limit = inputs.len().div_ceil(2);
    if outputs.len() > limit {
        return Err(Error::WitnessCardinality {
            got: outputs.len(),
            limit,
        });
    }

    // unassigned components default to each input's likeliest output
    for position in &mut assignment {
        for (x, slot) in position.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = Some(argmax_output(q, x));
            }
        }
    }
    let noise = NoiseRealization::new(
        assignment
            .into_iter()
            .map(|pos| pos.into_iter().map(Option::unwrap).collect())
            .collect(),
    );

    for w in inputs {
        let image = apply_noise(w, &noise)?;
        if !outputs.contains(&image) {
            return Err(Error::InternalConsistency(format!(
                "witness noise maps {w:?} outside the collapsed output set"
            )));
        }
    }
    let probability = noise_probability(q, &noise);
    let guarantee = overlap.powi((q.num_inputs() * n) as i32);
    if probability < guarantee - 1e-15 {
        return Err(Error::InternalConsistency(format!(
            "witness probability {probability} fell below the floor {guarantee}"
        )));
    }
    Ok(HalvingWitness {
        noise,
        outputs: outputs.into_iter().collect(),
        probability,
    })
}

fn argmax_output(q: &Dmc, x: usize) -> usize {
    let mut best = 0;
    let mut best_p = f64::NEG_INFINITY;
    for y in 0..q.num_outputs() {
        let p = q.prob(x, y);
        if p > best_p {
            best_p = p;
            best = y;
        }
    }
    best
}

/// Attempts to give `first` and `second` one shared output word without
/// disturbing existing assignments; commits and returns it, or returns
/// `None` leaving the assignment untouched.
fn try_pair(
    q: &Dmc,
    first: &[usize],
    second: &[usize],
    floor: f64,
    assignment: &mut [Vec<Option<usize>>],
) -> Option<Word> {
    let mut pending: Vec<(usize, usize, usize)> = Vec::new();
    let mut shared = Vec::with_capacity(first.len());
    for (i, (&a, &b)) in first.iter().zip(second).enumerate() {
        let slot_a = assignment[i][a];
        let slot_b = assignment[i][b];
        let y = match (slot_a, slot_b) {
            (Some(ya), Some(yb)) => {
                if ya != yb {
                    return None;
                }
                ya
            }
            (Some(ya), None) => {
                if q.prob(b, ya) < floor {
                    return None;
                }
                pending.push((i, b, ya));
                ya
            }
            (None, Some(yb)) => {
                if q.prob(a, yb) < floor {
                    return None;
                }
                pending.push((i, a, yb));
                yb
            }
            (None, None) => {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for y in 0..q.num_outputs() {
                    let v = q.prob(a, y).min(q.prob(b, y));
                    if v > best_v {
                        best_v = v;
                        best = y;
                    }
                }
                pending.push((i, a, best));
                if b != a {
                    pending.push((i, b, best));
                }
                best
            }
        };
        shared.push(y);
    }
    for (i, x, y) in pending {
        assignment[i][x] = Some(y);
    }
    Some(shared)
}

/// Routes one word through existing assignments, filling gaps with each
/// symbol's likeliest output. Always succeeds.
fn assign_single(q: &Dmc, word: &[usize], assignment: &mut [Vec<Option<usize>>]) -> Word {
    word.iter()
        .enumerate()
        .map(|(i, &x)| match assignment[i][x] {
            Some(y) => y,
            None => {
                let y = argmax_output(q, x);
                assignment[i][x] = Some(y);
                y
            }
        })
        .collect()
}

/// A multi-hop collapse witness: per-hop noise realizations under which
/// every batch word is delivered as the same output word.
#[derive(Debug, Clone)]
pub struct CollapseWitness {
    /// One realization per hop consumed.
    pub per_hop_noise: Vec<NoiseRealization>,
    /// The word every batch collapses onto, over the output alphabet.
    pub final_output: Word,
    /// `eps^(|Q_in| N k)` with `eps` the smallest overlap floor on the hops
    /// consumed — the guaranteed probability of the witness event.
    pub probability_lower_bound: f64,
    /// Exact probability of the witness event.
    pub probability: f64,
    /// Candidate-set sizes: the reachable set, then the image after each
    /// hop.
    pub set_trace: Vec<usize>,
}

/// Builds a collapse witness for the first hops of a deterministic-recoding
/// network: starting from the words the source can emit, each hop applies a
/// halving witness and pushes the surviving outputs through the node, until
/// one word is left. Must finish within `k >= N log2 |Q_in|` hops, and the
/// network must have at least `k` links.
pub fn collapse_chain(net: &BatchNetwork, k: usize) -> Result<CollapseWitness> {
    if !net.scheme().is_deterministic() {
        return Err(Error::NotDeterministic(
            "collapse chains require a deterministic recoding scheme".into(),
        ));
    }
    let n = net.inner_blocklength();
    let q_in_size = net.q_in().len();
    let needed = (n as f64) * (q_in_size as f64).log2();
    if (k as f64) < needed - 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "k = {k} is below N log2|Q_in| = {needed}"
        )));
    }
    if k > net.length() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} hops in a length-{} network",
            net.length()
        )));
    }

    let source = net.scheme().source();
    let mut current: BTreeSet<Word> = (0..source.num_batch_words())
        .map(|x| source.apply_deterministic(x))
        .collect::<Result<_>>()?;
    let mut trace = vec![current.len()];
    let mut per_hop_noise = Vec::new();
    let mut exact = 1.0;
    let mut final_output = None;

    for hop in 0..k {
        let witness = halving_witness(&net.links()[hop], n, &current)?;
        exact *= witness.probability;
        per_hop_noise.push(witness.noise);
        trace.push(witness.outputs.len());
        if witness.outputs.len() == 1 {
            final_output = Some(witness.outputs[0].clone());
            break;
        }
        if hop + 1 >= k {
            return Err(Error::CollapseNotReached {
                hops: k,
                survivors: witness.outputs.len(),
            });
        }
        current = witness
            .outputs
            .iter()
            .map(|y| net.scheme().nodes()[hop].apply_deterministic(y))
            .collect::<Result<_>>()?;
    }
    let final_output = final_output.expect("loop exits by break or error");

    let eps = net.links()[..per_hop_noise.len()]
        .iter()
        .map(pairwise_overlap)
        .fold(f64::INFINITY, f64::min);
    let lower = eps.powi((q_in_size * n * k) as i32);
    if exact < lower - 1e-15 {
        return Err(Error::InternalConsistency(format!(
            "collapse probability {exact} fell below its floor {lower}"
        )));
    }
    Ok(CollapseWitness {
        per_hop_noise,
        final_output,
        probability_lower_bound: lower,
        probability: exact,
        set_trace: trace,
    })
}

/// Replays the witness: every batch word, pushed through the consumed hops
/// under the witness noise, must be delivered as `final_output`.
pub fn verify_collapse(net: &BatchNetwork, witness: &CollapseWitness) -> Result<()> {
    let words = net.scheme().source().num_batch_words();
    for x in 0..words {
        let delivered = run_deterministic(net, x, &witness.per_hop_noise)?;
        if delivered != witness.final_output {
            return Err(Error::InternalConsistency(format!(
                "batch word {x} delivered {delivered:?} instead of the collapse output {:?}",
                witness.final_output
            )));
        }
    }
    Ok(())
}
