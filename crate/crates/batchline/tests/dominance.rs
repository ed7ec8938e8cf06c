//! Wide converse-dominance sweep: the exact rate of a thousand randomized
//! deterministic schemes never exceeds the applicable bound, across all
//! three regimes, lengths up to 4 and both blocklengths.

use batchline::{
    batch_rate, builtin_scheme, canonical_bound, erasure_bound, general_bound, make_bsc,
    make_erasure, Alphabet, BatchNetwork, BoundParams, BoundRegime, BuiltinScheme, SchemeParams,
};

#[test]
fn random_schemes_never_beat_their_regime_bound() {
    let channels = vec![
        (make_erasure(2, 0.2).unwrap(), BoundRegime::Erasure),
        (make_erasure(2, 0.5).unwrap(), BoundRegime::Erasure),
        (make_erasure(2, 0.8).unwrap(), BoundRegime::Erasure),
        (make_erasure(3, 0.5).unwrap(), BoundRegime::Erasure),
        (make_bsc(0.1).unwrap(), BoundRegime::Canonical),
        (make_bsc(0.3).unwrap(), BoundRegime::Canonical),
        (make_bsc(0.3).unwrap(), BoundRegime::General),
    ];
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for (link, regime) in &channels {
        let batch = if link.input_alphabet().symbol(0) == "0" && link.num_inputs() > 2 {
            Alphabet::new(link.input_alphabet().symbols()[1..].to_vec()).unwrap()
        } else {
            Alphabet::binary()
        };
        for l in [2usize, 3, 4] {
            for n in [1usize, 2] {
                if *regime == BoundRegime::General {
                    // need K | L with K >= N log2 |Qin|
                    let k = ((n as f64) * (link.num_inputs() as f64).log2()).ceil() as u64;
                    if !(l as u64).is_multiple_of(k) {
                        continue;
                    }
                }
                for seed in 0..25u64 {
                    let scheme = builtin_scheme(
                        &BuiltinScheme::RandomMap { seed },
                        &SchemeParams {
                            batch_alphabet: &batch,
                            batch_size: 1,
                            inner_blocklength: n,
                            length: l,
                            channel_input: link.input_alphabet(),
                            channel_output: link.output_alphabet(),
                        },
                    )
                    .unwrap();
                    let net = BatchNetwork::new(vec![link.clone(); l], scheme).unwrap();
                    let rate = batch_rate(&net, 1e-9).unwrap();
                    let k = ((n as f64) * (link.num_inputs() as f64).log2()).ceil() as u64;
                    let params = BoundParams::from_network(&net, *regime, k).unwrap();
                    let bound = match regime {
                        BoundRegime::Erasure => erasure_bound(&params).unwrap(),
                        BoundRegime::Canonical => canonical_bound(&params).unwrap(),
                        BoundRegime::General => general_bound(&params).unwrap(),
                    };
                    let margin = bound.nats_per_use - rate;
                    assert!(
                        margin >= -1e-9,
                        "violation: rate {rate} > bound {} ({regime:?}, L={l}, N={n}, seed={seed})",
                        bound.nats_per_use
                    );
                    min_margin = min_margin.min(margin);
                    checked += 1;
                }
            }
        }
    }
    println!("checked {checked} schemes, min margin {min_margin:.3e}");
    assert!(checked >= 700);
}
