//! Exact end-to-end composition of a line network under a recoding scheme,
//! the bottleneck-event split of the end-to-end matrix, and hop grouping.

use crate::alphabet::{word_index, Word};
use crate::channel::{canonical_witness, kron_power_with, Dmc, SizeBudget};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::recoding::{NodeStage, RecodingScheme};

/// A chain of `L` channels plus the recoding scheme run over it.
///
/// All links share one input/output alphabet pair; the scheme provides
/// exactly `L - 1` node stages and a source map over the links' input
/// alphabet.
#[derive(Debug, Clone)]
pub struct BatchNetwork {
    links: Vec<Dmc>,
    scheme: RecodingScheme,
}

impl BatchNetwork {
    pub fn new(links: Vec<Dmc>, scheme: RecodingScheme) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::InvalidParameter(
                "a network needs at least one link".into(),
            ));
        }
        let q_in = links[0].input_alphabet().clone();
        let q_out = links[0].output_alphabet().clone();
        for (i, link) in links.iter().enumerate() {
            if link.input_alphabet() != &q_in || link.output_alphabet() != &q_out {
                return Err(Error::DimensionMismatch(format!(
                    "link {i} uses a different alphabet pair than link 0"
                )));
            }
        }
        if scheme.source().channel_input() != &q_in {
            return Err(Error::DimensionMismatch(
                "source map emits over a different alphabet than the links accept".into(),
            ));
        }
        if scheme.nodes().len() + 1 != links.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} node stages for {} links (need links - 1)",
                scheme.nodes().len(),
                links.len()
            )));
        }
        let n = scheme.inner_blocklength();
        for (i, stage) in scheme.nodes().iter().enumerate() {
            match stage {
                NodeStage::Machine(m) => {
                    if m.receive_alphabet() != &q_out {
                        return Err(Error::DimensionMismatch(format!(
                            "node {i} receives over a different alphabet than the links emit"
                        )));
                    }
                }
                NodeStage::Matrix(m) => {
                    if m.as_channel().input_alphabet() != &q_out.power(n)? {
                        return Err(Error::DimensionMismatch(format!(
                            "node {i} matrix is not indexed by received words"
                        )));
                    }
                }
            }
        }
        Ok(BatchNetwork { links, scheme })
    }

    pub fn links(&self) -> &[Dmc] {
        &self.links
    }

    pub fn scheme(&self) -> &RecodingScheme {
        &self.scheme
    }

    /// Number of links `L`.
    pub fn length(&self) -> usize {
        self.links.len()
    }

    pub fn inner_blocklength(&self) -> usize {
        self.scheme.inner_blocklength()
    }

    pub fn batch_size(&self) -> usize {
        self.scheme.source().batch_size()
    }

    pub fn batch_alphabet(&self) -> &crate::alphabet::Alphabet {
        self.scheme.source().batch_alphabet()
    }

    pub fn q_in(&self) -> &crate::alphabet::Alphabet {
        self.links[0].input_alphabet()
    }

    pub fn q_out(&self) -> &crate::alphabet::Alphabet {
        self.links[0].output_alphabet()
    }
}

/// The end-to-end batch channel from `A^M` to `Q_out^N`: the source map
/// chained through every link's blockwise channel and every node stage.
pub fn end_to_end(net: &BatchNetwork) -> Result<Dmc> {
    end_to_end_with(net, SizeBudget::default())
}

pub fn end_to_end_with(net: &BatchNetwork, budget: SizeBudget) -> Result<Dmc> {
    compose_prefix(net, net.length(), budget, None)
}

/// The end-to-end matrix truncated after `hops` links (`1 <= hops <= L`).
pub fn prefix_matrix(net: &BatchNetwork, hops: usize) -> Result<Dmc> {
    prefix_matrix_with(net, hops, SizeBudget::default())
}

pub fn prefix_matrix_with(net: &BatchNetwork, hops: usize, budget: SizeBudget) -> Result<Dmc> {
    if hops == 0 || hops > net.length() {
        return Err(Error::InvalidParameter(format!(
            "prefix of {hops} hops in a length-{} network",
            net.length()
        )));
    }
    compose_prefix(net, hops, budget, None)
}

/// Composes source · link_1 · stage_1 · ... · link_hops, substituting
/// `replace[i]` for link `i`'s blockwise matrix when provided.
fn compose_prefix(
    net: &BatchNetwork,
    hops: usize,
    budget: SizeBudget,
    replace: Option<&[Dmc]>,
) -> Result<Dmc> {
    let n = net.inner_blocklength();
    let mut acc = net.scheme.source().as_matrix()?;
    for (i, link) in net.links[..hops].iter().enumerate() {
        let block = match replace {
            Some(sub) => sub[i].clone(),
            None => kron_power_with(link, n, budget)?,
        };
        acc = acc.compose(&block)?;
        if i + 1 < hops {
            let phi = net.scheme.nodes()[i].phi(n, budget)?;
            acc = acc.compose(phi.as_channel())?;
        }
    }
    Ok(acc)
}

/// The end-to-end matrix split over the bottleneck event: with probability
/// `p0` some link collapsed every channel use of the batch onto its witness
/// output (so the delivered word carries nothing about the batch), and with
/// probability `1 - p0` no link did.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Probability that at least one link collapsed.
    pub p0: f64,
    /// End-to-end matrix conditioned on the collapse event; all rows are
    /// identical up to rounding.
    pub w0: Dmc,
    /// End-to-end matrix conditioned on no link collapsing.
    pub w1: Dmc,
}

/// Splits the end-to-end matrix over the per-link collapse events at the
/// given witness outputs (`y0_per_link[i]` must be link `i`'s canonical
/// witness).
///
/// Per link the collapse probability is `eps^N` when the link has exact
/// packet-erasure structure (the collapse indicator is the per-use erasure
/// flag), and `(prod_x Q(y0|x))^N` otherwise (every noise component equals
/// the witness output). Conditioned on its event a link outputs the witness
/// word regardless of input, so the conditional no-collapse matrix is
/// `(Q^(kron N) - q0 T) / (1 - q0)` with `T` the constant-output matrix, and
/// `w0` follows by subtraction from the law of total probability.
pub fn bottleneck_decompose(net: &BatchNetwork, y0_per_link: &[usize]) -> Result<Decomposition> {
    bottleneck_decompose_with(net, y0_per_link, SizeBudget::default())
}

pub fn bottleneck_decompose_with(
    net: &BatchNetwork,
    y0_per_link: &[usize],
    budget: SizeBudget,
) -> Result<Decomposition> {
    if y0_per_link.len() != net.length() {
        return Err(Error::DimensionMismatch(format!(
            "{} witness outputs for {} links",
            y0_per_link.len(),
            net.length()
        )));
    }
    let n = net.inner_blocklength();
    let mut p1 = 1.0;
    let mut conditionals = Vec::with_capacity(net.length());
    for (i, link) in net.links.iter().enumerate() {
        let y0 = y0_per_link[i];
        let witness = canonical_witness(link).ok_or_else(|| {
            Error::InvalidParameter(format!("link {i} has no canonical witness output"))
        })?;
        if witness.output != y0 {
            return Err(Error::InvalidParameter(format!(
                "output {y0} is not the canonical witness of link {i} (expected {})",
                witness.output
            )));
        }
        let q0 = match erasure_epsilon(link, y0) {
            Some(eps) => eps.powi(n as i32),
            None => {
                let per_use: f64 = (0..link.num_inputs()).map(|x| link.prob(x, y0)).product();
                per_use.powi(n as i32)
            }
        };
        if q0 <= 0.0 {
            return Err(Error::DegenerateDecomposition(format!(
                "link {i} has collapse probability 0"
            )));
        }
        if q0 >= 1.0 {
            return Err(Error::DegenerateDecomposition(format!(
                "link {i} collapses almost surely; the complement matrix is undefined"
            )));
        }
        p1 *= 1.0 - q0;
        conditionals.push(conditional_no_collapse(link, y0, n, q0, budget)?);
    }
    let p0 = 1.0 - p1;
    if p0 <= 0.0 {
        return Err(Error::DegenerateDecomposition(
            "collapse event has probability 0".into(),
        ));
    }

    let w_full = end_to_end_with(net, budget)?;
    let w1 = compose_prefix(net, net.length(), budget, Some(&conditionals))?;

    // w0 = (W - p1 w1) / p0, entrywise; rounding dust is clamped and each
    // row renormalized, anything worse is an error.
    let rows = w_full.num_inputs();
    let cols = w_full.num_outputs();
    let mut w0 = Mat::zeros(rows, cols);
    for r in 0..rows {
        let mut sum = 0.0;
        for c in 0..cols {
            let v = (w_full.prob(r, c) - p1 * w1.prob(r, c)) / p0;
            if v < -1e-12 {
                return Err(Error::InternalConsistency(format!(
                    "conditional entry ({r},{c}) = {v} is negative beyond rounding"
                )));
            }
            let v = v.max(0.0);
            w0.set(r, c, v);
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InternalConsistency(format!(
                "conditional row {r} sums to {sum}"
            )));
        }
        for c in 0..cols {
            w0.set(r, c, w0.get(r, c) / sum);
        }
    }
    let w0 = Dmc::from_mat(
        w_full.input_alphabet().clone(),
        w_full.output_alphabet().clone(),
        w0,
    )?;
    Ok(Decomposition { p0, w0, w1 })
}

/// `Some(eps)` when the link is exactly a packet erasure channel whose
/// erasure symbol is `y0`: shared input/output alphabet, `Q(y0|y0) = 1`, and
/// every other input passes through with `1 - eps` or erases with `eps`.
fn erasure_epsilon(q: &Dmc, y0: usize) -> Option<f64> {
    if q.input_alphabet() != q.output_alphabet() {
        return None;
    }
    let n = q.num_inputs();
    if q.prob(y0, y0) != 1.0 {
        return None;
    }
    let mut eps = None;
    for x in 0..n {
        if x == y0 {
            continue;
        }
        let e = q.prob(x, y0);
        match eps {
            None => eps = Some(e),
            Some(prev) if (prev - e).abs() > 1e-12 => return None,
            _ => {}
        }
        for y in 0..n {
            let expect = if y == y0 {
                e
            } else if y == x {
                1.0 - e
            } else {
                0.0
            };
            if (q.prob(x, y) - expect).abs() > 1e-12 {
                return None;
            }
        }
    }
    eps.filter(|&e| e > 0.0 && e < 1.0)
}

/// `(Q^(kron N) - q0 T_{y0}) / (1 - q0)` where `T_{y0}` sends every input
/// word to the all-`y0` word.
fn conditional_no_collapse(
    link: &Dmc,
    y0: usize,
    n: usize,
    q0: f64,
    budget: SizeBudget,
) -> Result<Dmc> {
    let block = kron_power_with(link, n, budget)?;
    let collapse_col = word_index(&vec![y0; n], link.num_outputs());
    let rows = block.num_inputs();
    let cols = block.num_outputs();
    let mut mat = Mat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut v = block.prob(r, c);
            if c == collapse_col {
                v -= q0;
            }
            v /= 1.0 - q0;
            if v < -1e-12 {
                return Err(Error::InternalConsistency(format!(
                    "no-collapse conditional entry ({r},{c}) = {v} is negative beyond rounding"
                )));
            }
            mat.set(r, c, v.max(0.0));
        }
    }
    Dmc::from_mat(
        block.input_alphabet().clone(),
        block.output_alphabet().clone(),
        mat,
    )
}

/// `K` consecutive hops fused into one composite channel, repeated `L / K`
/// times, with the node matrices that sit between the groups.
#[derive(Debug, Clone)]
pub struct HopGrouping {
    /// `L / K` composite channels from `Q_in^N` to `Q_out^N` words.
    pub groups: Vec<Dmc>,
    /// The node matrices between consecutive groups (`L / K - 1` of them).
    pub connectors: Vec<Dmc>,
}

impl HopGrouping {
    /// groups[0] · connectors[0] · groups[1] · ... — everything after the
    /// source map.
    pub fn chain_product(&self) -> Result<Dmc> {
        let mut acc = self.groups[0].clone();
        for (connector, group) in self.connectors.iter().zip(&self.groups[1..]) {
            acc = acc.compose(connector)?.compose(group)?;
        }
        Ok(acc)
    }
}

/// Fuses the links of a deterministic-recoding network into groups of `k`
/// consecutive hops. `k` must divide the length exactly; no silent padding.
pub fn group_hops(net: &BatchNetwork, k: usize) -> Result<HopGrouping> {
    group_hops_with(net, k, SizeBudget::default())
}

pub fn group_hops_with(net: &BatchNetwork, k: usize, budget: SizeBudget) -> Result<HopGrouping> {
    let length = net.length();
    if k == 0 || !length.is_multiple_of(k) {
        return Err(Error::GroupSize { group: k, length });
    }
    if !net.scheme.is_deterministic() {
        return Err(Error::NotDeterministic(
            "hop grouping assumes a deterministic recoding scheme".into(),
        ));
    }
    let n = net.inner_blocklength();
    let num_groups = length / k;
    let mut groups = Vec::with_capacity(num_groups);
    let mut connectors = Vec::with_capacity(num_groups.saturating_sub(1));
    for g in 0..num_groups {
        let mut acc: Option<Dmc> = None;
        for j in 0..k {
            let link_index = g * k + j;
            let block = kron_power_with(&net.links[link_index], n, budget)?;
            acc = Some(match acc {
                None => block,
                Some(prev) => prev.compose(&block)?,
            });
            if j + 1 < k {
                let phi = net.scheme.nodes()[link_index].phi(n, budget)?;
                acc = Some(acc.unwrap().compose(phi.as_channel())?);
            }
        }
        groups.push(acc.expect("k >= 1"));
        if g + 1 < num_groups {
            let boundary = g * k + k - 1;
            connectors.push(
                net.scheme.nodes()[boundary]
                    .phi(n, budget)?
                    .as_channel()
                    .clone(),
            );
        }
    }
    Ok(HopGrouping { groups, connectors })
}

/// Pushes one batch word through the network under fixed per-link noise,
/// using deterministic recoders. Returns the delivered word.
pub fn run_deterministic(
    net: &BatchNetwork,
    batch_word_index: usize,
    noise_per_link: &[crate::channel::NoiseRealization],
) -> Result<Word> {
    if noise_per_link.len() > net.length() {
        return Err(Error::DimensionMismatch(format!(
            "{} noise realizations for {} links",
            noise_per_link.len(),
            net.length()
        )));
    }
    let mut word = net.scheme.source().apply_deterministic(batch_word_index)?;
    let mut delivered = Vec::new();
    for (i, noise) in noise_per_link.iter().enumerate() {
        delivered = crate::channel::apply_noise(&word, noise)?;
        if i + 1 < noise_per_link.len() {
            word = net.scheme.nodes()[i].apply_deterministic(&delivered)?;
        }
    }
    Ok(delivered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::channel::{make_bsc, make_erasure};
    use crate::infotheory::{mutual_information, InputDistribution};
    use crate::recoding::{builtin_scheme, BuiltinScheme, SchemeParams};

    fn store_and_forward_net(
        link: &Dmc,
        batch: &Alphabet,
        m: usize,
        n: usize,
        l: usize,
    ) -> BatchNetwork {
        let scheme = builtin_scheme(
            &BuiltinScheme::StoreAndForward,
            &SchemeParams {
                batch_alphabet: batch,
                batch_size: m,
                inner_blocklength: n,
                length: l,
                channel_input: link.input_alphabet(),
                channel_output: link.output_alphabet(),
            },
        )
        .unwrap();
        BatchNetwork::new(vec![link.clone(); l], scheme).unwrap()
    }

    #[test]
    fn single_noiseless_link_is_identity() {
        let a = Alphabet::binary();
        let link = Dmc::new(a.clone(), a.clone(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let net = store_and_forward_net(&link, &a, 1, 1, 1);
        let w = end_to_end(&net).unwrap();
        assert_eq!(w.row(0), &[1.0, 0.0]);
        assert_eq!(w.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn two_hop_erasure_equals_cascade() {
        let link = make_erasure(2, 0.5).unwrap();
        let batch = Alphabet::new(["a", "b"]).unwrap();
        let net = store_and_forward_net(&link, &batch, 1, 1, 2);
        let w = end_to_end(&net).unwrap();
        // effective erasure probability 1 - 0.25 = 0.75
        assert_eq!(w.num_inputs(), 2);
        let row_a = w.row(0);
        assert!((row_a[0] - 0.75).abs() < 1e-12);
        assert!((row_a[1] - 0.25).abs() < 1e-12);
        assert_eq!(row_a[2], 0.0);
    }

    #[test]
    fn erasure_decomposition_matches_closed_form() {
        let link = make_erasure(2, 0.5).unwrap();
        let batch = Alphabet::new(["a", "b"]).unwrap();
        let net = store_and_forward_net(&link, &batch, 1, 1, 2);
        let d = bottleneck_decompose(&net, &[0, 0]).unwrap();
        assert!((d.p0 - 0.75).abs() < 1e-12, "p0 = {}", d.p0);

        // reconstruction and the zero-information property
        let w = end_to_end(&net).unwrap();
        let p1 = 1.0 - d.p0;
        for r in 0..w.num_inputs() {
            for c in 0..w.num_outputs() {
                let back = d.p0 * d.w0.prob(r, c) + p1 * d.w1.prob(r, c);
                assert!((back - w.prob(r, c)).abs() < 1e-9);
            }
        }
        let p = InputDistribution::uniform(2);
        assert!(mutual_information(&p, &d.w0).unwrap() < 1e-9);
    }

    #[test]
    fn bsc_decomposition_uses_noise_vector_event() {
        let link = make_bsc(0.1).unwrap();
        let batch = Alphabet::binary();
        let net = store_and_forward_net(&link, &batch, 1, 1, 3);
        let d = bottleneck_decompose(&net, &[0, 0, 0]).unwrap();
        // per-link collapse probability 0.9 * 0.1 = 0.09
        let expect = 1.0 - (1.0 - 0.09_f64).powi(3);
        assert!((d.p0 - expect).abs() < 1e-12);
    }

    #[test]
    fn decompose_rejects_non_witness_outputs() {
        let link = make_erasure(2, 0.5).unwrap();
        let batch = Alphabet::new(["a", "b"]).unwrap();
        let net = store_and_forward_net(&link, &batch, 1, 1, 2);
        assert!(bottleneck_decompose(&net, &[1, 0]).is_err());
        assert!(bottleneck_decompose(&net, &[0]).is_err());
    }

    #[test]
    fn grouping_reproduces_the_chain() {
        let link = make_bsc(0.2).unwrap();
        let batch = Alphabet::binary();
        let net = store_and_forward_net(&link, &batch, 1, 1, 4);
        for k in [1, 2, 4] {
            let grouping = group_hops(&net, k).unwrap();
            assert_eq!(grouping.groups.len(), 4 / k);
            let chained = net
                .scheme()
                .source()
                .as_matrix()
                .unwrap()
                .compose(&grouping.chain_product().unwrap())
                .unwrap();
            let direct = end_to_end(&net).unwrap();
            assert!(chained.max_abs_diff(&direct) < 1e-12);
        }
        assert!(matches!(
            group_hops(&net, 3).unwrap_err(),
            Error::GroupSize { .. }
        ));
    }

    #[test]
    fn single_group_collapses_to_definition() {
        let link = make_bsc(0.2).unwrap();
        let batch = Alphabet::binary();
        let net = store_and_forward_net(&link, &batch, 1, 1, 2);
        let grouping = group_hops(&net, 2).unwrap();
        assert_eq!(grouping.groups.len(), 1);
        assert!(grouping.connectors.is_empty());

        let by_one = group_hops(&net, 1).unwrap();
        let block = kron_power_with(&link, 1, SizeBudget::default()).unwrap();
        assert!(by_one.groups[0].max_abs_diff(&block) < 1e-15);
    }

    #[test]
    fn prefix_matrices_lose_information_along_the_chain() {
        let link = make_bsc(0.2).unwrap();
        let batch = Alphabet::binary();
        let net = store_and_forward_net(&link, &batch, 1, 1, 3);
        let p = InputDistribution::uniform(2);
        let mut last = f64::INFINITY;
        for hops in 1..=3 {
            let w = prefix_matrix(&net, hops).unwrap();
            let mi = mutual_information(&p, &w).unwrap();
            assert!(mi <= last + 1e-12);
            last = mi;
        }
    }

    /// Conditional-split oracle: enumerate the joint noise space of a
    /// two-link network with each link's collapse event marked, and build
    /// the conditional matrices by direct weighting. `noise_space` yields
    /// every (realization, probability, collapsed?) triple for one link.
    fn enumerate_split(
        net: &BatchNetwork,
        noise_space: &[(crate::channel::NoiseRealization, f64, bool)],
    ) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = net.inner_blocklength();
        let out_words = net.q_out().len().pow(n as u32);
        let batch_words = net.scheme().source().num_batch_words();
        let mut on_event = vec![vec![0.0; out_words]; batch_words];
        let mut off_event = vec![vec![0.0; out_words]; batch_words];
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        for (z1, pr1, hit1) in noise_space {
            for (z2, pr2, hit2) in noise_space {
                let pr = pr1 * pr2;
                let collapsed = *hit1 || *hit2;
                if collapsed {
                    p0 += pr;
                } else {
                    p1 += pr;
                }
                for x in 0..batch_words {
                    let y = run_deterministic(net, x, &[z1.clone(), z2.clone()]).unwrap();
                    let idx = word_index(&y, net.q_out().len());
                    if collapsed {
                        on_event[x][idx] += pr;
                    } else {
                        off_event[x][idx] += pr;
                    }
                }
            }
        }
        for row in &mut on_event {
            for v in row.iter_mut() {
                *v /= p0;
            }
        }
        for row in &mut off_event {
            for v in row.iter_mut() {
                *v /= p1;
            }
        }
        (p0, on_event, off_event)
    }

    fn assert_split_matches(d: &Decomposition, oracle: (f64, Vec<Vec<f64>>, Vec<Vec<f64>>)) {
        let (p0, w0, w1) = oracle;
        assert!((d.p0 - p0).abs() < 1e-12, "p0 {} vs oracle {p0}", d.p0);
        for x in 0..d.w0.num_inputs() {
            for y in 0..d.w0.num_outputs() {
                assert!((d.w0.prob(x, y) - w0[x][y]).abs() < 1e-12);
                assert!((d.w1.prob(x, y) - w1[x][y]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn erasure_split_matches_indicator_enumeration() {
        // the collapse event of an erasure link is its per-use erasure
        // indicator being zero on every use; enumerate that coupling
        let eps = 0.5;
        let link = make_erasure(2, eps).unwrap();
        let batch = Alphabet::new(["a", "b"]).unwrap();
        for n in [1usize, 2] {
            let net = store_and_forward_net(&link, &batch, 1, n, 2);
            let d = bottleneck_decompose(&net, &[0, 0]).unwrap();

            let mut space = Vec::new();
            for mask in 0..(1u32 << n) {
                let mut maps = Vec::with_capacity(n);
                let mut pr = 1.0;
                for i in 0..n {
                    let pass = mask & (1 << i) != 0;
                    pr *= if pass { 1.0 - eps } else { eps };
                    // indicator 1 passes symbols through, 0 erases them
                    maps.push(if pass {
                        (0..link.num_inputs()).collect()
                    } else {
                        vec![0; link.num_inputs()]
                    });
                }
                space.push((crate::channel::NoiseRealization::new(maps), pr, mask == 0));
            }
            assert_split_matches(&d, enumerate_split(&net, &space));
        }
    }

    #[test]
    fn symmetric_binary_split_matches_noise_vector_enumeration() {
        // for non-erasure links the collapse event is every noise component
        // equalling the witness output; enumerate all noise functions
        let link = make_bsc(0.1).unwrap();
        let batch = Alphabet::binary();
        for n in [1usize, 2] {
            let net = store_and_forward_net(&link, &batch, 1, n, 2);
            let d = bottleneck_decompose(&net, &[0, 0]).unwrap();

            let q_in = link.num_inputs();
            let q_out = link.num_outputs();
            let slots = n * q_in;
            let mut space = Vec::new();
            for combo in 0..(q_out as u32).pow(slots as u32) {
                let mut maps = vec![vec![0usize; q_in]; n];
                let mut pr = 1.0;
                let mut rem = combo;
                let mut collapsed = true;
                for position in maps.iter_mut() {
                    for (x, slot) in position.iter_mut().enumerate() {
                        let y = (rem % q_out as u32) as usize;
                        rem /= q_out as u32;
                        *slot = y;
                        pr *= link.prob(x, y);
                        collapsed &= y == 0;
                    }
                }
                space.push((crate::channel::NoiseRealization::new(maps), pr, collapsed));
            }
            assert_split_matches(&d, enumerate_split(&net, &space));
        }
    }

    #[test]
    fn links_may_differ_but_alphabets_may_not() {
        let a = make_bsc(0.1).unwrap();
        let b = make_bsc(0.3).unwrap();
        let batch = Alphabet::binary();
        let scheme = builtin_scheme(
            &BuiltinScheme::StoreAndForward,
            &SchemeParams {
                batch_alphabet: &batch,
                batch_size: 1,
                inner_blocklength: 1,
                length: 2,
                channel_input: a.input_alphabet(),
                channel_output: a.output_alphabet(),
            },
        )
        .unwrap();
        let net = BatchNetwork::new(vec![a.clone(), b.clone()], scheme.clone()).unwrap();
        let w = end_to_end(&net).unwrap();
        // chained crossover: 0.1*0.7 + 0.9*0.3 = 0.34
        assert!((w.prob(0, 1) - 0.34).abs() < 1e-12);

        let bec = crate::channel::make_bec(0.3).unwrap();
        assert!(matches!(
            BatchNetwork::new(vec![a.clone(), bec], scheme.clone()),
            Err(Error::DimensionMismatch(_))
        ));
        // node count must be exactly links - 1
        assert!(matches!(
            BatchNetwork::new(vec![a.clone(), b, a], scheme),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn almost_sure_collapse_is_rejected() {
        // a constant-output channel collapses with probability one; the
        // complement matrix is undefined
        let a = Alphabet::binary();
        let link = Dmc::new(a.clone(), a.clone(), vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let scheme = builtin_scheme(
            &BuiltinScheme::StoreAndForward,
            &SchemeParams {
                batch_alphabet: &a,
                batch_size: 1,
                inner_blocklength: 1,
                length: 1,
                channel_input: link.input_alphabet(),
                channel_output: link.output_alphabet(),
            },
        )
        .unwrap();
        let net = BatchNetwork::new(vec![link], scheme).unwrap();
        assert!(matches!(
            bottleneck_decompose(&net, &[0]),
            Err(Error::DegenerateDecomposition(_))
        ));
    }

    #[test]
    fn grouping_rejects_randomized_schemes() {
        use crate::recoding::{NodeRecoder, NodeStage, RecodingScheme, SourceRecoder, StepOutcome};
        use std::collections::BTreeMap;

        let link = make_bsc(0.2).unwrap();
        let batch = Alphabet::binary();
        let mut step = BTreeMap::new();
        for sym in 0..2usize {
            step.insert(
                (0usize, Some(sym)),
                vec![
                    StepOutcome {
                        next_state: 0,
                        emit: Some(0),
                        prob: 0.5,
                    },
                    StepOutcome {
                        next_state: 0,
                        emit: Some(1),
                        prob: 0.5,
                    },
                ],
            );
        }
        let machine = NodeRecoder::new(
            Alphabet::new(["."]).unwrap(),
            0,
            0,
            link.output_alphabet().clone(),
            link.input_alphabet().clone(),
            step,
        )
        .unwrap();
        let source = SourceRecoder::deterministic(
            batch.clone(),
            1,
            1,
            link.input_alphabet().clone(),
            &[0, 1],
        )
        .unwrap();
        let scheme = RecodingScheme::new(source, vec![NodeStage::Machine(machine)]).unwrap();
        let net = BatchNetwork::new(vec![link.clone(), link], scheme).unwrap();
        assert!(matches!(
            group_hops(&net, 2),
            Err(Error::NotDeterministic(_))
        ));
    }
}
