//! Discrete memoryless channels over finite alphabets.
//!
//! A [`Dmc`] is a row-stochastic matrix together with its input and output
//! alphabets. Besides the standard constructors this module provides the
//! blockwise extension to `n` independent uses ([`kron_power`]), a functional
//! noise model in which one draw fixes the output for every possible input
//! ([`sample_noise`] / [`apply_noise`]), and the two channel parameters that
//! drive the converse bounds: the canonical witness output and the pairwise
//! overlap floor.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{checked_word_count, Alphabet, Word};
use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Row-sum tolerance for stochasticity validation.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Upper limit on materialized matrix sizes, in entries.
///
/// Blockwise channel extensions grow exponentially in the blocklength;
/// anything above the budget is refused with an explicit error instead of
/// thrashing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBudget {
    pub max_entries: usize,
}

impl Default for SizeBudget {
    fn default() -> Self {
        SizeBudget {
            max_entries: 1 << 20,
        }
    }
}

impl SizeBudget {
    pub fn new(max_entries: usize) -> Self {
        SizeBudget { max_entries }
    }

    pub fn check(&self, rows: usize, cols: usize) -> Result<()> {
        let entries = (rows as u128) * (cols as u128);
        if entries > self.max_entries as u128 {
            return Err(Error::SizeBudgetExceeded {
                rows,
                cols,
                entries,
                budget: self.max_entries,
            });
        }
        Ok(())
    }
}

/// A discrete memoryless channel: one probability row per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    input_alphabet: Alphabet,
    output_alphabet: Alphabet,
    mat: Mat,
}

impl Dmc {
    /// Validates entry ranges, row sums and shape against the alphabets.
    pub fn new(
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != input_alphabet.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows for {} input symbols",
                rows.len(),
                input_alphabet.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != output_alphabet.len() {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries for {} output symbols",
                    i,
                    row.len(),
                    output_alphabet.len()
                )));
            }
        }
        let mat = Mat::from_rows(&rows)
            .ok_or_else(|| Error::DimensionMismatch("empty or ragged rows".into()))?;
        Self::from_mat(input_alphabet, output_alphabet, mat)
    }

    pub(crate) fn from_mat(
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        mat: Mat,
    ) -> Result<Self> {
        debug_assert_eq!(mat.rows(), input_alphabet.len());
        debug_assert_eq!(mat.cols(), output_alphabet.len());
        for r in 0..mat.rows() {
            let mut sum = 0.0;
            for c in 0..mat.cols() {
                let v = mat.get(r, c);
                if !(-1e-12..=1.0 + 1e-12).contains(&v) || !v.is_finite() {
                    return Err(Error::EntryOutOfRange {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::RowNotStochastic { row: r, sum });
            }
        }
        Ok(Dmc {
            input_alphabet,
            output_alphabet,
            mat,
        })
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input_alphabet
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output_alphabet
    }

    pub fn num_inputs(&self) -> usize {
        self.input_alphabet.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_alphabet.len()
    }

    /// `P(output = y | input = x)` by symbol index.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.mat.get(x, y)
    }

    pub fn row(&self, x: usize) -> &[f64] {
        self.mat.row(x)
    }

    /// Chains `self` into `next`: the output alphabet of `self` must equal
    /// the input alphabet of `next` (same labels, same order).
    pub fn compose(&self, next: &Dmc) -> Result<Dmc> {
        if self.output_alphabet != next.input_alphabet {
            return Err(Error::DimensionMismatch(format!(
                "cannot chain: {} outputs feed a channel with {} inputs (or labels differ)",
                self.num_outputs(),
                next.num_inputs()
            )));
        }
        Dmc::from_mat(
            self.input_alphabet.clone(),
            next.output_alphabet.clone(),
            self.mat.matmul(&next.mat),
        )
    }

    /// Largest entrywise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Dmc) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }

    /// Row-major CSV export in the alphabets' index order: a header of
    /// output labels, then one line per input symbol.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("input");
        for y in self.output_alphabet.symbols() {
            out.push(',');
            out.push_str(y);
        }
        out.push('\n');
        for x in 0..self.num_inputs() {
            out.push_str(self.input_alphabet.symbol(x));
            for v in self.row(x) {
                out.push(',');
                out.push_str(&crate::format_sig(*v));
            }
            out.push('\n');
        }
        out
    }

    pub(crate) fn mat(&self) -> &Mat {
        &self.mat
    }
}

/// Packet erasure channel on `{0} ∪ Q*` with `|Q*| = q_star_size`.
///
/// Symbol 0 is the erasure (and the "channel unused" input, which always
/// yields the erasure); each `x ∈ Q*` passes through with probability
/// `1 - epsilon` and erases with probability `epsilon`.
pub fn make_erasure(q_star_size: usize, epsilon: f64) -> Result<Dmc> {
    if q_star_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "q_star_size must be >= 2, got {q_star_size}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "erasure probability must lie in (0,1), got {epsilon}"
        )));
    }
    let mut labels = vec!["0".to_string()];
    labels.extend((0..q_star_size).map(spreadsheet_label));
    let alphabet = Alphabet::new(labels)?;
    let n = alphabet.len();
    let mut rows = vec![vec![0.0; n]; n];
    rows[0][0] = 1.0;
    for (x, row) in rows.iter_mut().enumerate().skip(1) {
        row[0] = epsilon;
        row[x] = 1.0 - epsilon;
    }
    Dmc::new(alphabet.clone(), alphabet, rows)
}

/// `a, b, ..., z, aa, ab, ...`
fn spreadsheet_label(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (i % 26) as u8);
        i /= 26;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Binary symmetric channel with crossover probability `p`.
///
/// ```
/// let q = batchline::make_bsc(0.1).unwrap();
/// assert_eq!(q.row(0), &[0.9, 0.1]);
/// ```
pub fn make_bsc(p: f64) -> Result<Dmc> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "crossover probability must lie in [0,1], got {p}"
        )));
    }
    let a = Alphabet::binary();
    Dmc::new(a.clone(), a, vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
}

/// Binary erasure channel with erasure probability `p`; outputs `0, e, 1`.
pub fn make_bec(p: f64) -> Result<Dmc> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "erasure probability must lie in [0,1], got {p}"
        )));
    }
    let input = Alphabet::binary();
    let output = Alphabet::new(["0", "e", "1"])?;
    Dmc::new(
        input,
        output,
        vec![vec![1.0 - p, p, 0.0], vec![0.0, p, 1.0 - p]],
    )
}

/// Arbitrary channel from explicit rows; rejects non-stochastic input naming
/// the offending row.
pub fn make_custom(
    input_alphabet: Alphabet,
    output_alphabet: Alphabet,
    rows: Vec<Vec<f64>>,
) -> Result<Dmc> {
    Dmc::new(input_alphabet, output_alphabet, rows)
}

/// The channel seen over `n` independent uses: alphabets become length-`n`
/// words and the transition probability is the product over positions.
/// Indexing is lexicographic in the base alphabets.
pub fn kron_power(q: &Dmc, n: usize) -> Result<Dmc> {
    kron_power_with(q, n, SizeBudget::default())
}

pub fn kron_power_with(q: &Dmc, n: usize, budget: SizeBudget) -> Result<Dmc> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
    }
    if n == 1 {
        return Ok(q.clone());
    }
    let rows = checked_word_count(q.num_inputs(), n);
    let cols = checked_word_count(q.num_outputs(), n);
    match (rows, cols) {
        (Some(r), Some(c)) => budget.check(r, c)?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "a {}^{n} x {}^{n} block channel overflows the address space",
                q.num_inputs(),
                q.num_outputs()
            )))
        }
    }
    let mut mat = q.mat().clone();
    for _ in 1..n {
        mat = mat.kron(q.mat());
    }
    Dmc::from_mat(
        q.input_alphabet().power(n)?,
        q.output_alphabet().power(n)?,
        mat,
    )
}

/// One realization of the functional noise model for `n` channel uses:
/// `maps[i][x]` is the output produced at use `i` if the input there is `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseRealization {
    maps: Vec<Vec<usize>>,
}

impl NoiseRealization {
    pub fn new(maps: Vec<Vec<usize>>) -> Self {
        NoiseRealization { maps }
    }

    /// Number of channel uses covered.
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn input_size(&self) -> usize {
        self.maps.first().map_or(0, Vec::len)
    }

    /// Output symbol at use `i` for input symbol `x`.
    pub fn map(&self, i: usize, x: usize) -> usize {
        self.maps[i][x]
    }
}

/// Draws a noise realization for `n` uses of `q`, each component independent
/// with the law of its channel row. Deterministic in the seed.
pub fn sample_noise(q: &Dmc, n: usize, rng_seed: u64) -> NoiseRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_noise_with(q, n, &mut rng)
}

pub(crate) fn sample_noise_with<R: Rng>(q: &Dmc, n: usize, rng: &mut R) -> NoiseRealization {
    let maps = (0..n)
        .map(|_| {
            (0..q.num_inputs())
                .map(|x| sample_row(q.row(x), rng))
                .collect()
        })
        .collect();
    NoiseRealization { maps }
}

/// Samples an index from a probability row by inverse CDF walk.
pub(crate) fn sample_row<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
            acc += p;
            if r < acc {
                return i;
            }
        }
    }
    last_nonzero
}

/// Pushes an input word through a noise realization: `y[i] = maps[i][u[i]]`.
pub fn apply_noise(input: &[usize], noise: &NoiseRealization) -> Result<Word> {
    if input.len() != noise.len() {
        return Err(Error::DimensionMismatch(format!(
            "input word of length {} against noise for {} uses",
            input.len(),
            noise.len()
        )));
    }
    input
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            noise.maps[i]
                .get(x)
                .copied()
                .ok_or_else(|| Error::DimensionMismatch(format!("symbol {x} out of range")))
        })
        .collect()
}

/// Probability that `n` independent uses of `q` realize exactly this noise:
/// the product of the channel masses of every component.
pub fn noise_probability(q: &Dmc, noise: &NoiseRealization) -> f64 {
    let mut p = 1.0;
    for i in 0..noise.len() {
        for x in 0..q.num_inputs() {
            p *= q.prob(x, noise.map(i, x));
        }
    }
    p
}

/// An output symbol reached from every input with probability at least `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalWitness {
    /// Output symbol index.
    pub output: usize,
    /// `min_x Q(output | x)`, maximized over outputs.
    pub eps: f64,
}

/// The output maximizing `min_x Q(y|x)`, with that floor value, or `None`
/// when every output misses some input entirely. Ties break toward the
/// earliest output symbol.
pub fn canonical_witness(q: &Dmc) -> Option<CanonicalWitness> {
    let mut best: Option<CanonicalWitness> = None;
    for y in 0..q.num_outputs() {
        let floor = (0..q.num_inputs())
            .map(|x| q.prob(x, y))
            .fold(f64::INFINITY, f64::min);
        if best.is_none_or(|b| floor > b.eps) {
            best = Some(CanonicalWitness {
                output: y,
                eps: floor,
            });
        }
    }
    best.filter(|b| b.eps > 0.0)
}

/// Largest probability floor shared by every input pair on some common
/// output: `min` over unordered pairs `(x, x')` (diagonal included) of
/// `max_y min(Q(y|x), Q(y|x'))`.
///
/// Positive exactly when no two inputs can be told apart with certainty,
/// i.e. when the zero-error capacity vanishes.
pub fn pairwise_overlap(q: &Dmc) -> f64 {
    let n = q.num_inputs();
    let mut floor = f64::INFINITY;
    for x in 0..n {
        for x2 in x..n {
            let best = (0..q.num_outputs())
                .map(|y| q.prob(x, y).min(q.prob(x2, y)))
                .fold(0.0, f64::max);
            floor = floor.min(best);
        }
    }
    floor
}
