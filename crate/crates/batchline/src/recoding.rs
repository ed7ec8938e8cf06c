//! Inner-code recoders: the source map from batch words to channel words and
//! the per-node transducers that turn received words into retransmitted ones.
//!
//! A node recoder is a finite state machine over a buffer alphabet. For a
//! blocklength `N` and latency `N'` it runs `N + N'` steps: the first `N`
//! steps consume the received symbols (later steps see an empty input), and
//! every step after the first `N'` must emit exactly one symbol. Emissions
//! and inputs outside those windows are protocol violations, so every run
//! emits exactly `N` symbols.
//!
//! Randomness is represented explicitly as per-row / per-step outcome
//! distributions rather than ambient RNG: deriving a node's transition
//! matrix stays a pure function, and the deterministic machines obtained by
//! fixing each random choice are enumerable.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{checked_word_count, word_from_index, word_index, words, Alphabet, Word};
use crate::channel::{sample_row, SizeBudget, STOCHASTIC_TOL};
use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Stochastic map from batch words in `A^M` to channel-input words in
/// `Q_in^N`, one distribution row per batch word (point masses when
/// deterministic).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRecoder {
    batch_alphabet: Alphabet,
    batch_size: usize,
    inner_blocklength: usize,
    channel_input: Alphabet,
    mat: Mat,
}

impl SourceRecoder {
    pub fn new(
        batch_alphabet: Alphabet,
        batch_size: usize,
        inner_blocklength: usize,
        channel_input: Alphabet,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if batch_size == 0 || inner_blocklength == 0 {
            return Err(Error::InvalidParameter(
                "batch size and blocklength must be >= 1".into(),
            ));
        }
        let domain = checked_word_count(batch_alphabet.len(), batch_size)
            .ok_or_else(|| Error::InvalidParameter("batch word count overflows".into()))?;
        let range = checked_word_count(channel_input.len(), inner_blocklength)
            .ok_or_else(|| Error::InvalidParameter("channel word count overflows".into()))?;
        if rows.len() != domain {
            return Err(Error::DimensionMismatch(format!(
                "source map has {} rows for {} batch words",
                rows.len(),
                domain
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != range {
                return Err(Error::DimensionMismatch(format!(
                    "source row {} has {} entries for {} channel words",
                    i,
                    row.len(),
                    range
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::RowNotStochastic { row: i, sum });
            }
            if let Some((c, &v)) = row
                .iter()
                .enumerate()
                .find(|(_, &v)| !(0.0..=1.0 + 1e-12).contains(&v))
            {
                return Err(Error::EntryOutOfRange {
                    row: i,
                    col: c,
                    value: v,
                });
            }
        }
        let mat = Mat::from_rows(&rows)
            .ok_or_else(|| Error::DimensionMismatch("empty source map".into()))?;
        Ok(SourceRecoder {
            batch_alphabet,
            batch_size,
            inner_blocklength,
            channel_input,
            mat,
        })
    }

    /// Deterministic source map given as the channel-word index for each
    /// batch word (lexicographic order).
    pub fn deterministic(
        batch_alphabet: Alphabet,
        batch_size: usize,
        inner_blocklength: usize,
        channel_input: Alphabet,
        map: &[usize],
    ) -> Result<Self> {
        let range = checked_word_count(channel_input.len(), inner_blocklength)
            .ok_or_else(|| Error::InvalidParameter("channel word count overflows".into()))?;
        let rows = map
            .iter()
            .map(|&target| {
                if target >= range {
                    return Err(Error::InvalidParameter(format!(
                        "source target {target} out of range {range}"
                    )));
                }
                let mut row = vec![0.0; range];
                row[target] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        SourceRecoder::new(
            batch_alphabet,
            batch_size,
            inner_blocklength,
            channel_input,
            rows,
        )
    }

    pub fn batch_alphabet(&self) -> &Alphabet {
        &self.batch_alphabet
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn inner_blocklength(&self) -> usize {
        self.inner_blocklength
    }

    pub fn channel_input(&self) -> &Alphabet {
        &self.channel_input
    }

    pub fn num_batch_words(&self) -> usize {
        self.mat.rows()
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.mat.rows()).all(|r| self.mat.row(r).contains(&1.0))
    }

    /// The channel word for a batch word under a deterministic map.
    pub fn apply_deterministic(&self, batch_word_index: usize) -> Result<Word> {
        let row = self.mat.row(batch_word_index);
        let target = row
            .iter()
            .position(|&p| p == 1.0)
            .ok_or_else(|| Error::NotDeterministic("source map row is a distribution".into()))?;
        Ok(word_from_index(
            target,
            self.channel_input.len(),
            self.inner_blocklength,
        ))
    }

    pub(crate) fn sample<R: Rng>(&self, batch_word_index: usize, rng: &mut R) -> Word {
        let target = sample_row(self.mat.row(batch_word_index), rng);
        word_from_index(target, self.channel_input.len(), self.inner_blocklength)
    }

    /// The source map as a stochastic matrix from `A^M` to `Q_in^N`.
    pub fn as_matrix(&self) -> Result<crate::channel::Dmc> {
        crate::channel::Dmc::from_mat(
            self.batch_alphabet.power(self.batch_size)?,
            self.channel_input.power(self.inner_blocklength)?,
            self.mat.clone(),
        )
    }
}

/// One possible result of a recoder step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    /// Emitted channel-input symbol, or `None` while the latency window is
    /// still open.
    pub emit: Option<usize>,
    pub prob: f64,
}

type StepKey = (usize, Option<usize>);

/// Buffer-constrained node transducer.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecoder {
    buffer_alphabet: Alphabet,
    latency: usize,
    initial_state: usize,
    receive_alphabet: Alphabet,
    emit_alphabet: Alphabet,
    step: BTreeMap<StepKey, Vec<StepOutcome>>,
}

impl NodeRecoder {
    /// `step` maps `(buffer state, Some(received symbol) | None)` to a
    /// distribution over `(next state, emitted symbol | None)`. The map may
    /// be partial; reaching an undefined pair is an error at run time.
    pub fn new(
        buffer_alphabet: Alphabet,
        latency: usize,
        initial_state: usize,
        receive_alphabet: Alphabet,
        emit_alphabet: Alphabet,
        step: BTreeMap<StepKey, Vec<StepOutcome>>,
    ) -> Result<Self> {
        if initial_state >= buffer_alphabet.len() {
            return Err(Error::InvalidParameter(format!(
                "initial buffer state {initial_state} out of range"
            )));
        }
        for (&(state, input), outcomes) in &step {
            if state >= buffer_alphabet.len() {
                return Err(Error::InvalidParameter(format!(
                    "step key state {state} out of range"
                )));
            }
            if let Some(sym) = input {
                if sym >= receive_alphabet.len() {
                    return Err(Error::InvalidParameter(format!(
                        "step key input symbol {sym} out of range"
                    )));
                }
            }
            let mut sum = 0.0;
            for o in outcomes {
                if o.next_state >= buffer_alphabet.len() {
                    return Err(Error::InvalidParameter(format!(
                        "outcome state {} out of range",
                        o.next_state
                    )));
                }
                if let Some(sym) = o.emit {
                    if sym >= emit_alphabet.len() {
                        return Err(Error::InvalidParameter(format!(
                            "outcome emit symbol {sym} out of range"
                        )));
                    }
                }
                if !(0.0..=1.0 + 1e-12).contains(&o.prob) {
                    return Err(Error::InvalidParameter(format!(
                        "outcome probability {} out of range",
                        o.prob
                    )));
                }
                sum += o.prob;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidParameter(format!(
                    "step outcomes for state {state}, input {input:?} sum to {sum}"
                )));
            }
        }
        Ok(NodeRecoder {
            buffer_alphabet,
            latency,
            initial_state,
            receive_alphabet,
            emit_alphabet,
            step,
        })
    }

    /// Deterministic machine from a closure over all `(state, input)` pairs;
    /// the closure returns `None` to leave a pair undefined.
    pub fn from_fn(
        buffer_alphabet: Alphabet,
        latency: usize,
        initial_state: usize,
        receive_alphabet: Alphabet,
        emit_alphabet: Alphabet,
        f: impl Fn(usize, Option<usize>) -> Option<(usize, Option<usize>)>,
    ) -> Result<Self> {
        let mut step = BTreeMap::new();
        for state in 0..buffer_alphabet.len() {
            let mut inputs: Vec<Option<usize>> = (0..receive_alphabet.len()).map(Some).collect();
            inputs.push(None);
            for input in inputs {
                if let Some((next_state, emit)) = f(state, input) {
                    step.insert(
                        (state, input),
                        vec![StepOutcome {
                            next_state,
                            emit,
                            prob: 1.0,
                        }],
                    );
                }
            }
        }
        NodeRecoder::new(
            buffer_alphabet,
            latency,
            initial_state,
            receive_alphabet,
            emit_alphabet,
            step,
        )
    }

    pub fn buffer_alphabet(&self) -> &Alphabet {
        &self.buffer_alphabet
    }

    pub fn latency(&self) -> usize {
        self.latency
    }

    pub fn receive_alphabet(&self) -> &Alphabet {
        &self.receive_alphabet
    }

    pub fn emit_alphabet(&self) -> &Alphabet {
        &self.emit_alphabet
    }

    pub fn is_deterministic(&self) -> bool {
        self.step.values().all(|outcomes| outcomes.len() == 1)
    }

    /// Every deterministic machine obtained by fixing one outcome per step
    /// key, in a deterministic order. Exponential in the number of
    /// randomized keys; intended for small machines.
    pub fn determinizations(&self) -> Vec<NodeRecoder> {
        let keys: Vec<StepKey> = self.step.keys().copied().collect();
        let mut out = vec![self.step.clone()];
        for key in keys {
            let options = self.step[&key].clone();
            if options.len() == 1 {
                continue;
            }
            let mut next = Vec::with_capacity(out.len() * options.len());
            for table in out {
                for opt in &options {
                    let mut t = table.clone();
                    t.insert(key, vec![StepOutcome { prob: 1.0, ..*opt }]);
                    next.push(t);
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|step| NodeRecoder {
                step,
                buffer_alphabet: self.buffer_alphabet.clone(),
                latency: self.latency,
                initial_state: self.initial_state,
                receive_alphabet: self.receive_alphabet.clone(),
                emit_alphabet: self.emit_alphabet.clone(),
            })
            .collect()
    }

    fn lookup(&self, state: usize, input: Option<usize>) -> Result<&[StepOutcome]> {
        self.step
            .get(&(state, input))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::StepUndefined {
                state: self.buffer_alphabet.symbol(state).to_string(),
                input: input.map(|s| self.receive_alphabet.symbol(s).to_string()),
            })
    }

    fn check_emission(
        &self,
        step_index: usize,
        blocklength: usize,
        emit: Option<usize>,
    ) -> Result<()> {
        let must_be_empty = step_index <= self.latency;
        if emit.is_some() == must_be_empty {
            return Err(Error::EmissionProtocol {
                action: if emit.is_some() {
                    "emitted a symbol"
                } else {
                    "stayed silent"
                },
                step: step_index,
                latency: self.latency,
                blocklength,
            });
        }
        Ok(())
    }

    /// Runs the machine on one received word, returning the distribution it
    /// induces over emitted words (as probabilities indexed lexicographically).
    fn run_distribution(&self, received: &[usize], blocklength: usize) -> Result<Vec<f64>> {
        let emit_size = self.emit_alphabet.len();
        let out_len = checked_word_count(emit_size, blocklength)
            .ok_or_else(|| Error::InvalidParameter("emitted word count overflows".into()))?;
        // distribution over (buffer state, emitted prefix)
        let mut states: BTreeMap<(usize, Word), f64> = BTreeMap::new();
        states.insert((self.initial_state, Vec::new()), 1.0);
        for i in 1..=blocklength + self.latency {
            let input = if i <= blocklength {
                Some(received[i - 1])
            } else {
                None
            };
            let mut next: BTreeMap<(usize, Word), f64> = BTreeMap::new();
            for ((state, prefix), mass) in states {
                for o in self.lookup(state, input)? {
                    if o.prob == 0.0 {
                        continue;
                    }
                    self.check_emission(i, blocklength, o.emit)?;
                    let mut p = prefix.clone();
                    if let Some(sym) = o.emit {
                        p.push(sym);
                    }
                    *next.entry((o.next_state, p)).or_insert(0.0) += mass * o.prob;
                }
            }
            states = next;
        }
        let mut row = vec![0.0; out_len];
        for ((_, emitted), mass) in states {
            debug_assert_eq!(emitted.len(), blocklength);
            row[word_index(&emitted, emit_size)] += mass;
        }
        Ok(row)
    }

    /// Runs a deterministic machine on one received word.
    pub fn apply_deterministic(&self, received: &[usize]) -> Result<Word> {
        let blocklength = received.len();
        let mut state = self.initial_state;
        let mut emitted = Vec::with_capacity(blocklength);
        for i in 1..=blocklength + self.latency {
            let input = if i <= blocklength {
                Some(received[i - 1])
            } else {
                None
            };
            let outcomes = self.lookup(state, input)?;
            if outcomes.len() != 1 {
                return Err(Error::NotDeterministic(format!(
                    "step for buffer state {} is randomized",
                    self.buffer_alphabet.symbol(state)
                )));
            }
            let o = outcomes[0];
            self.check_emission(i, blocklength, o.emit)?;
            if let Some(sym) = o.emit {
                emitted.push(sym);
            }
            state = o.next_state;
        }
        Ok(emitted)
    }

    /// Runs the machine on one received word, sampling randomized steps.
    pub(crate) fn run_sampled<R: Rng>(&self, received: &[usize], rng: &mut R) -> Result<Word> {
        let blocklength = received.len();
        let mut state = self.initial_state;
        let mut emitted = Vec::with_capacity(blocklength);
        for i in 1..=blocklength + self.latency {
            let input = if i <= blocklength {
                Some(received[i - 1])
            } else {
                None
            };
            let outcomes = self.lookup(state, input)?;
            let o = if outcomes.len() == 1 {
                outcomes[0]
            } else {
                let probs: Vec<f64> = outcomes.iter().map(|o| o.prob).collect();
                outcomes[sample_row(&probs, rng)]
            };
            self.check_emission(i, blocklength, o.emit)?;
            if let Some(sym) = o.emit {
                emitted.push(sym);
            }
            state = o.next_state;
        }
        Ok(emitted)
    }
}

/// Per-batch buffer footprint in bits: `log2 |B|` at zero latency, doubled
/// once the node must hold state across the latency window.
pub fn buffer_bits(r: &NodeRecoder) -> f64 {
    let base = (r.buffer_alphabet.len() as f64).log2();
    if r.latency == 0 {
        base
    } else {
        2.0 * base
    }
}

/// A node's transition matrix from received words to emitted words.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatrix {
    dmc: crate::channel::Dmc,
    receive_size: usize,
    emit_size: usize,
    blocklength: usize,
}

impl NodeMatrix {
    /// Rows indexed by received words over `receive_base^n`, columns by
    /// emitted words over `emit_base^n`.
    pub fn from_rows(
        receive_base: &Alphabet,
        emit_base: &Alphabet,
        blocklength: usize,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dmc = crate::channel::Dmc::new(
            receive_base.power(blocklength)?,
            emit_base.power(blocklength)?,
            rows,
        )?;
        Ok(NodeMatrix {
            dmc,
            receive_size: receive_base.len(),
            emit_size: emit_base.len(),
            blocklength,
        })
    }

    pub fn as_channel(&self) -> &crate::channel::Dmc {
        &self.dmc
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.dmc.num_inputs()).all(|r| self.dmc.row(r).contains(&1.0))
    }

    /// Maps a received word through a deterministic table.
    pub fn apply_deterministic(&self, received: &[usize]) -> Result<Word> {
        let row = word_index(received, self.receive_size);
        let target = self
            .dmc
            .row(row)
            .iter()
            .position(|&p| p == 1.0)
            .ok_or_else(|| Error::NotDeterministic("node matrix row is a distribution".into()))?;
        Ok(word_from_index(target, self.emit_size, self.blocklength))
    }

    pub(crate) fn sample_word<R: Rng>(&self, received: &[usize], rng: &mut R) -> Word {
        let row = word_index(received, self.receive_size);
        word_from_index(
            sample_row(self.dmc.row(row), rng),
            self.emit_size,
            self.blocklength,
        )
    }
}

/// Derives the word-level transition matrix of a node recoder for
/// blocklength `n` by running the step recursion from the initial buffer on
/// every received word. Deterministic machines yield 0/1 rows.
pub fn derive_phi(r: &NodeRecoder, n: usize) -> Result<NodeMatrix> {
    derive_phi_with(r, n, SizeBudget::default())
}

pub fn derive_phi_with(r: &NodeRecoder, n: usize, budget: SizeBudget) -> Result<NodeMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
    }
    if r.latency > n {
        return Err(Error::InvalidParameter(format!(
            "latency {} exceeds blocklength {}",
            r.latency, n
        )));
    }
    let rows_n = checked_word_count(r.receive_alphabet.len(), n);
    let cols_n = checked_word_count(r.emit_alphabet.len(), n);
    match (rows_n, cols_n) {
        (Some(rows), Some(cols)) => budget.check(rows, cols)?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "a {}^{n} x {}^{n} node matrix overflows the address space",
                r.receive_alphabet.len(),
                r.emit_alphabet.len()
            )))
        }
    }
    let rows = words(r.receive_alphabet.len(), n)
        .map(|received| r.run_distribution(&received, n))
        .collect::<Result<Vec<_>>>()?;
    NodeMatrix::from_rows(&r.receive_alphabet, &r.emit_alphabet, n, rows)
}

/// One hop of a recoding scheme: either a state machine or a direct matrix.
///
/// Direct matrices let converse experiments plug in arbitrary per-node maps
/// unconstrained by buffer structure; buffer accounting applies to machines
/// only.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeStage {
    Machine(NodeRecoder),
    Matrix(NodeMatrix),
}

impl NodeStage {
    pub fn is_deterministic(&self) -> bool {
        match self {
            NodeStage::Machine(m) => m.is_deterministic(),
            NodeStage::Matrix(m) => m.is_deterministic(),
        }
    }

    /// Buffer footprint in bits; `None` for direct matrices.
    pub fn buffer_bits(&self) -> Option<f64> {
        match self {
            NodeStage::Machine(m) => Some(buffer_bits(m)),
            NodeStage::Matrix(_) => None,
        }
    }

    /// The stage's word-level matrix for blocklength `n`.
    pub fn phi(&self, n: usize, budget: SizeBudget) -> Result<NodeMatrix> {
        match self {
            NodeStage::Machine(m) => derive_phi_with(m, n, budget),
            NodeStage::Matrix(m) => Ok(m.clone()),
        }
    }

    /// Maps a received word through a deterministic stage.
    pub fn apply_deterministic(&self, received: &[usize]) -> Result<Word> {
        match self {
            NodeStage::Machine(m) => m.apply_deterministic(received),
            NodeStage::Matrix(m) => m.apply_deterministic(received),
        }
    }
}

/// A full inner code: the source map plus one stage per intermediate node.
#[derive(Debug, Clone, PartialEq)]
pub struct RecodingScheme {
    source: SourceRecoder,
    nodes: Vec<NodeStage>,
}

impl RecodingScheme {
    pub fn new(source: SourceRecoder, nodes: Vec<NodeStage>) -> Result<Self> {
        let n = source.inner_blocklength();
        for (i, stage) in nodes.iter().enumerate() {
            match stage {
                NodeStage::Machine(m) => {
                    if m.latency() > n {
                        return Err(Error::InvalidParameter(format!(
                            "node {} latency {} exceeds blocklength {}",
                            i,
                            m.latency(),
                            n
                        )));
                    }
                    if m.emit_alphabet() != source.channel_input() {
                        return Err(Error::DimensionMismatch(format!(
                            "node {i} emits over a different alphabet than the source"
                        )));
                    }
                }
                NodeStage::Matrix(m) => {
                    let expect = source.channel_input().power(n)?;
                    if m.as_channel().output_alphabet() != &expect {
                        return Err(Error::DimensionMismatch(format!(
                            "node {i} matrix emits over a different word alphabet than the source"
                        )));
                    }
                }
            }
        }
        Ok(RecodingScheme { source, nodes })
    }

    pub fn source(&self) -> &SourceRecoder {
        &self.source
    }

    pub fn nodes(&self) -> &[NodeStage] {
        &self.nodes
    }

    pub fn inner_blocklength(&self) -> usize {
        self.source.inner_blocklength()
    }

    pub fn is_deterministic(&self) -> bool {
        self.source.is_deterministic() && self.nodes.iter().all(NodeStage::is_deterministic)
    }
}

/// The built-in baseline schemes.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinScheme {
    /// Pass-through at every node; the source embeds batch words into
    /// channel words (symbol-by-symbol when `M == N` and every batch label
    /// exists in the channel input alphabet, by lexicographic rank
    /// otherwise). Requires `|A|^M <= |Q_in|^N`.
    StoreAndForward,
    /// Deterministic uniformly-seeded lookup tables at the source and at
    /// every node.
    RandomMap { seed: u64 },
    /// Every node (and the source) emits one fixed word regardless of input.
    Constant { word: Word },
}

/// Dimensions a builtin scheme is instantiated for.
#[derive(Debug, Clone, Copy)]
pub struct SchemeParams<'a> {
    pub batch_alphabet: &'a Alphabet,
    pub batch_size: usize,
    pub inner_blocklength: usize,
    /// Number of links; the scheme gets `length - 1` node stages.
    pub length: usize,
    pub channel_input: &'a Alphabet,
    pub channel_output: &'a Alphabet,
}

pub fn builtin_scheme(which: &BuiltinScheme, p: &SchemeParams) -> Result<RecodingScheme> {
    if p.length == 0 {
        return Err(Error::InvalidParameter(
            "network length must be >= 1".into(),
        ));
    }
    // the dense source map is a materialized matrix; refuse absurd shapes
    // before allocating them
    let domain = checked_word_count(p.batch_alphabet.len(), p.batch_size);
    let range = checked_word_count(p.channel_input.len(), p.inner_blocklength);
    match (domain, range) {
        (Some(rows), Some(cols)) => SizeBudget::default().check(rows, cols)?,
        _ => {
            return Err(Error::InvalidParameter(
                "batch or channel word count overflows".into(),
            ))
        }
    }
    match which {
        BuiltinScheme::StoreAndForward => store_and_forward(p),
        BuiltinScheme::RandomMap { seed } => random_map(p, *seed),
        BuiltinScheme::Constant { word } => constant_scheme(p, word),
    }
}

fn store_and_forward(p: &SchemeParams) -> Result<RecodingScheme> {
    let domain = checked_word_count(p.batch_alphabet.len(), p.batch_size)
        .ok_or_else(|| Error::InvalidParameter("batch word count overflows".into()))?;
    let range = checked_word_count(p.channel_input.len(), p.inner_blocklength)
        .ok_or_else(|| Error::InvalidParameter("channel word count overflows".into()))?;
    if domain > range {
        return Err(Error::DimensionMismatch(format!(
            "cannot embed {domain} batch words into {range} channel words"
        )));
    }
    let by_label: Option<Vec<usize>> = if p.batch_size == p.inner_blocklength {
        p.batch_alphabet
            .symbols()
            .iter()
            .map(|s| p.channel_input.position(s))
            .collect()
    } else {
        None
    };
    let map: Vec<usize> = match by_label {
        Some(symbol_map) => words(p.batch_alphabet.len(), p.batch_size)
            .map(|w| {
                let mapped: Word = w.iter().map(|&s| symbol_map[s]).collect();
                word_index(&mapped, p.channel_input.len())
            })
            .collect(),
        None => (0..domain).collect(),
    };
    let source = SourceRecoder::deterministic(
        p.batch_alphabet.clone(),
        p.batch_size,
        p.inner_blocklength,
        p.channel_input.clone(),
        &map,
    )?;
    let relay: Vec<usize> = p
        .channel_output
        .symbols()
        .iter()
        .map(|s| {
            p.channel_input.position(s).ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "pass-through needs output symbol {s:?} in the input alphabet"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let singleton = Alphabet::new(["."])?;
    let node = NodeRecoder::from_fn(
        singleton,
        0,
        0,
        p.channel_output.clone(),
        p.channel_input.clone(),
        |_, input| input.map(|sym| (0, Some(relay[sym]))),
    )?;
    let nodes = vec![NodeStage::Machine(node); p.length.saturating_sub(1)];
    RecodingScheme::new(source, nodes)
}

fn random_map(p: &SchemeParams, seed: u64) -> Result<RecodingScheme> {
    let domain = checked_word_count(p.batch_alphabet.len(), p.batch_size)
        .ok_or_else(|| Error::InvalidParameter("batch word count overflows".into()))?;
    let range = checked_word_count(p.channel_input.len(), p.inner_blocklength)
        .ok_or_else(|| Error::InvalidParameter("channel word count overflows".into()))?;
    let recv = checked_word_count(p.channel_output.len(), p.inner_blocklength)
        .ok_or_else(|| Error::InvalidParameter("received word count overflows".into()))?;
    SizeBudget::default().check(recv, range)?;

    let mut rng = ChaCha8Rng::seed_from_u64(crate::montecarlo::substream(
        seed,
        crate::montecarlo::LANE_SCHEME_SOURCE,
        0,
    ));
    let map: Vec<usize> = (0..domain).map(|_| rng.random_range(0..range)).collect();
    let source = SourceRecoder::deterministic(
        p.batch_alphabet.clone(),
        p.batch_size,
        p.inner_blocklength,
        p.channel_input.clone(),
        &map,
    )?;

    let mut nodes = Vec::with_capacity(p.length.saturating_sub(1));
    for node_index in 0..p.length.saturating_sub(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::montecarlo::substream(
            seed,
            crate::montecarlo::LANE_SCHEME_NODE,
            node_index as u64,
        ));
        let rows: Vec<Vec<f64>> = (0..recv)
            .map(|_| {
                let mut row = vec![0.0; range];
                row[rng.random_range(0..range)] = 1.0;
                row
            })
            .collect();
        nodes.push(NodeStage::Matrix(NodeMatrix::from_rows(
            p.channel_output,
            p.channel_input,
            p.inner_blocklength,
            rows,
        )?));
    }
    RecodingScheme::new(source, nodes)
}

fn constant_scheme(p: &SchemeParams, word: &Word) -> Result<RecodingScheme> {
    if word.len() != p.inner_blocklength {
        return Err(Error::DimensionMismatch(format!(
            "constant word has length {} for blocklength {}",
            word.len(),
            p.inner_blocklength
        )));
    }
    if word.iter().any(|&s| s >= p.channel_input.len()) {
        return Err(Error::InvalidParameter(
            "constant word symbol out of range".into(),
        ));
    }
    let domain = checked_word_count(p.batch_alphabet.len(), p.batch_size)
        .ok_or_else(|| Error::InvalidParameter("batch word count overflows".into()))?;
    let target = word_index(word, p.channel_input.len());
    let source = SourceRecoder::deterministic(
        p.batch_alphabet.clone(),
        p.batch_size,
        p.inner_blocklength,
        p.channel_input.clone(),
        &vec![target; domain],
    )?;
    // counter buffer: state i emits word[i] whatever arrives
    let counter = Alphabet::new((0..p.inner_blocklength).map(|i| format!("i{i}")))?;
    let word = word.clone();
    let n = p.inner_blocklength;
    let node = NodeRecoder::from_fn(
        counter,
        0,
        0,
        p.channel_output.clone(),
        p.channel_input.clone(),
        move |state, input| input.map(|_| ((state + 1) % n, Some(word[state]))),
    )?;
    let nodes = vec![NodeStage::Machine(node); p.length.saturating_sub(1)];
    RecodingScheme::new(source, nodes)
}
