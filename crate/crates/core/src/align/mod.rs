//! Supervised alignment of two monolingual embedding spaces.
//!
//! An orthogonal map `W` is fitted on seed dictionary pairs by Procrustes
//! (`W = U·Vᵀ` from the SVD of `Y·Xᵀ`), then refined by alternating CSLS
//! dictionary induction and refitting. All retrieval works on unit-normalized
//! vectors; the Procrustes fit uses the raw vectors.

mod csls;
mod svd;

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

pub use csls::{csls_score, mean_topk_similarity, normalize_rows, CslsSpace, DEFAULT_CSLS_K};
pub use svd::{svd_small, Svd};

use crate::embedding::WordVectors;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAP_MAGIC: &str = "XLMAP1";
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryRole {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilingualDictionary {
    pub pairs: Vec<(String, String)>,
    pub role: DictionaryRole,
}

impl BilingualDictionary {
    pub fn new(pairs: Vec<(String, String)>, role: DictionaryRole) -> Self {
        BilingualDictionary { pairs, role }
    }

    /// One `source target` pair per line, whitespace separated. A source word
    /// may appear on several lines.
    pub fn read<R: BufRead>(r: R, role: DictionaryRole) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let mut f = line.split_whitespace();
            match (f.next(), f.next(), f.next()) {
                (None, _, _) => continue,
                (Some(s), Some(t), None) => pairs.push((s.to_owned(), t.to_owned())),
                _ => {
                    return Err(Error::format(format!(
                        "dictionary line {}: expected `source target`",
                        i + 1
                    )))
                }
            }
        }
        Ok(BilingualDictionary { pairs, role })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (s, t) in &self.pairs {
            writeln!(w, "{s} {t}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Drops pairs with a word missing from either table; returns the kept
    /// dictionary and how many pairs were dropped.
    pub fn filter(&self, source: &WordVectors, target: &WordVectors) -> (BilingualDictionary, usize) {
        let kept: Vec<(String, String)> = self
            .pairs
            .iter()
            .filter(|(s, t)| source.id(s).is_some() && target.id(t).is_some())
            .cloned()
            .collect();
        let dropped = self.pairs.len() - kept.len();
        (BilingualDictionary { pairs: kept, role: self.role }, dropped)
    }

    fn index_pairs(&self, source: &WordVectors, target: &WordVectors) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .filter_map(|(s, t)| Some((source.id(s)?, target.id(t)?)))
            .collect()
    }
}

/// Orthogonal `d × d` matrix mapping source vectors into the target space.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    w: Matrix<f64>,
}

impl OrthogonalMap {
    pub fn new(w: Matrix<f64>) -> Result<Self> {
        if w.rows() != w.cols() {
            return Err(Error::invalid(format!("map must be square, got {}x{}", w.rows(), w.cols())));
        }
        let err = orthogonality_error(&w);
        if !(err <= ORTHOGONALITY_TOLERANCE) {
            return Err(Error::Numerical(format!("map is not orthogonal: |WᵀW − I|max = {err:e}")));
        }
        Ok(OrthogonalMap { w })
    }

    pub fn identity(dim: usize) -> Self {
        OrthogonalMap { w: Matrix::identity(dim) }
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    pub fn transpose(&self) -> Self {
        OrthogonalMap { w: self.w.transpose() }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.w.mul_vec(x)
    }

    /// Applies `W` to every row of `rows` (`n × d`).
    pub fn apply_rows(&self, rows: &Matrix<f64>) -> Matrix<f64> {
        rows.matmul(&self.w.transpose())
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAP_MAGIC}")?;
        writeln!(w, "{}", self.dim())?;
        for i in 0..self.dim() {
            let line: Vec<String> = self.w.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let magic = lines.next().ok_or_else(|| Error::format("empty map file"))??;
        if magic.trim() != MAP_MAGIC {
            return Err(Error::format(format!("expected {MAP_MAGIC} header, got {magic:?}")));
        }
        let d: usize = lines
            .next()
            .ok_or_else(|| Error::format("map file is missing the dimension line"))??
            .trim()
            .parse()
            .map_err(|_| Error::format("bad map dimension"))?;
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            let line = lines.next().ok_or_else(|| Error::format(format!("map row {i} missing")))??;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse::<f64>().map_err(|_| Error::format(format!("map row {i}: bad value {f:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            data.extend(row);
        }
        OrthogonalMap::new(Matrix::from_vec(d, d, data))
    }
}

pub fn orthogonality_error(w: &Matrix<f64>) -> f64 {
    w.transpose().matmul(w).sub(&Matrix::identity(w.cols())).max_abs()
}

/// Orthogonal `W` minimizing `Σ‖W xᵢ − yᵢ‖²` for paired columns of `x` and
/// `y` (both `d × n`).
pub fn procrustes(x: &Matrix<f64>, y: &Matrix<f64>) -> Result<OrthogonalMap> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch { expected: y.rows(), found: x.rows() });
    }
    if x.cols() != y.cols() {
        return Err(Error::invalid(format!("{} source columns but {} target columns", x.cols(), y.cols())));
    }
    if x.cols() < x.rows() {
        log::warn!("procrustes fit with {} pairs in dimension {}; map is underdetermined", x.cols(), x.rows());
    }
    fit_cross_covariance(y.matmul(&x.transpose()))
}

/// Same as [`procrustes`] with pairs given as rows (`n × d` each).
pub fn procrustes_rows(source_rows: &Matrix<f64>, target_rows: &Matrix<f64>) -> Result<OrthogonalMap> {
    if source_rows.rows() != target_rows.rows() {
        return Err(Error::invalid(format!(
            "{} source rows but {} target rows",
            source_rows.rows(),
            target_rows.rows()
        )));
    }
    if source_rows.cols() != target_rows.cols() {
        return Err(Error::DimensionMismatch { expected: target_rows.cols(), found: source_rows.cols() });
    }
    if source_rows.rows() < source_rows.cols() {
        log::warn!(
            "procrustes fit with {} pairs in dimension {}; map is underdetermined",
            source_rows.rows(),
            source_rows.cols()
        );
    }
    fit_cross_covariance(target_rows.transpose().matmul(source_rows))
}

fn fit_cross_covariance(m: Matrix<f64>) -> Result<OrthogonalMap> {
    if m.max_abs() == 0.0 {
        return Err(Error::DegenerateAlignment("cross-covariance Y·Xᵀ is zero".into()));
    }
    let svd = svd_small(&m)?;
    OrthogonalMap::new(svd.u.matmul(&svd.v.transpose()))
}

fn fit_pairs(source: &WordVectors, target: &WordVectors, pairs: &[(usize, usize)]) -> Result<OrthogonalMap> {
    if pairs.is_empty() {
        return Err(Error::DegenerateAlignment("no dictionary pairs to fit".into()));
    }
    let d = source.dim();
    let xs = Matrix::from_fn(pairs.len(), d, |i, j| source.vector(pairs[i].0)[j]);
    let ys = Matrix::from_fn(pairs.len(), d, |i, j| target.vector(pairs[i].1)[j]);
    procrustes_rows(&xs, &ys)
}

fn check_dims(source: &WordVectors, target: &WordVectors) -> Result<()> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: source.dim() });
    }
    Ok(())
}

/// Every vector replaced by `W·x`; words and order unchanged.
pub fn apply_map(map: &OrthogonalMap, table: &WordVectors) -> Result<WordVectors> {
    if map.dim() != table.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), found: table.dim() });
    }
    WordVectors::from_rows(table.words().to_vec(), map.apply_rows(&table.to_matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub iterations: usize,
    pub csls_k: usize,
    /// Induction considers only this many leading (most frequent) words of
    /// each table.
    pub top_k_vocab: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            iterations: 5,
            csls_k: DEFAULT_CSLS_K,
            top_k_vocab: 10_000,
        }
    }
}

/// Mutual CSLS nearest neighbours between the first `top_k_vocab` words of
/// the mapped source and target tables, sorted by descending score.
pub fn induce_dictionary(
    mapped_source: &WordVectors,
    target: &WordVectors,
    top_k_vocab: usize,
    csls_k: usize,
) -> Result<BilingualDictionary> {
    Ok(induce_scored(mapped_source, target, top_k_vocab, csls_k)?.0)
}

fn induce_scored(
    mapped_source: &WordVectors,
    target: &WordVectors,
    top_k_vocab: usize,
    csls_k: usize,
) -> Result<(BilingualDictionary, Vec<(usize, usize)>)> {
    check_dims(mapped_source, target)?;
    let ns = mapped_source.len().min(top_k_vocab);
    let nt = target.len().min(top_k_vocab);
    let src = Matrix::from_vec(ns, mapped_source.dim(), leading_rows(mapped_source, ns));
    let tgt = Matrix::from_vec(nt, target.dim(), leading_rows(target, nt));
    let space = CslsSpace::new(&src, &tgt, csls_k)?;
    let fwd = space.best_targets();
    let bwd = space.best_sources();
    let mut mutual: Vec<(usize, usize, f64)> = fwd
        .iter()
        .enumerate()
        .filter(|(s, (t, _))| bwd[*t].0 == *s)
        .map(|(s, &(t, score))| (s, t, score))
        .collect();
    if mutual.is_empty() {
        return Err(Error::DegenerateAlignment("dictionary induction found no mutual nearest neighbours".into()));
    }
    mutual.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    let pairs = mutual
        .iter()
        .map(|&(s, t, _)| (mapped_source.word(s).to_owned(), target.word(t).to_owned()))
        .collect();
    let ids = mutual.iter().map(|&(s, t, _)| (s, t)).collect();
    Ok((BilingualDictionary::new(pairs, DictionaryRole::Train), ids))
}

fn leading_rows(table: &WordVectors, n: usize) -> Vec<f64> {
    (0..n).flat_map(|i| table.vector(i).iter().copied()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineStep {
    pub iteration: usize,
    pub dictionary_size: usize,
    pub precision_at_1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub map: OrthogonalMap,
    pub steps: Vec<RefineStep>,
    pub seed_pairs_dropped: usize,
}

/// Procrustes on the seed dictionary, then `iterations` rounds of CSLS
/// induction and refitting on the induced pairs alone.
pub fn refine(
    source: &WordVectors,
    target: &WordVectors,
    seed: &BilingualDictionary,
    config: &RefineConfig,
    eval: Option<&BilingualDictionary>,
) -> Result<Alignment> {
    check_dims(source, target)?;
    let (seed_kept, dropped) = seed.filter(source, target);
    if dropped > 0 {
        log::info!("seed dictionary: dropped {dropped} of {} pairs with out-of-vocabulary words", seed.len());
    }
    if seed_kept.is_empty() {
        return Err(Error::invalid("seed dictionary has no in-vocabulary pairs"));
    }
    let eval = eval.map(|e| e.filter(source, target).0);
    let precision = |map: &OrthogonalMap| -> Result<Option<f64>> {
        match &eval {
            Some(e) if !e.is_empty() => Ok(Some(evaluate_translation(map, source, target, e, 1, config.csls_k)?)),
            _ => Ok(None),
        }
    };
    let tag = |iteration: usize| move |e: Error| Error::Refinement { iteration, source: Box::new(e) };

    let mut map = fit_pairs(source, target, &seed_kept.index_pairs(source, target)).map_err(tag(0))?;
    let mut steps = vec![RefineStep {
        iteration: 0,
        dictionary_size: seed_kept.len(),
        precision_at_1: precision(&map).map_err(tag(0))?,
    }];
    log_step(&steps[0]);
    for it in 1..=config.iterations {
        let mapped = apply_map(&map, source).map_err(tag(it))?;
        let (_, ids) = induce_scored(&mapped, target, config.top_k_vocab, config.csls_k).map_err(tag(it))?;
        map = fit_pairs(source, target, &ids).map_err(tag(it))?;
        steps.push(RefineStep {
            iteration: it,
            dictionary_size: ids.len(),
            precision_at_1: precision(&map).map_err(tag(it))?,
        });
        log_step(steps.last().unwrap());
    }
    Ok(Alignment {
        map,
        steps,
        seed_pairs_dropped: dropped,
    })
}

fn log_step(step: &RefineStep) {
    match step.precision_at_1 {
        Some(p) => log::info!(
            "refinement iteration {}: {} pairs, precision@1 {:.4}",
            step.iteration,
            step.dictionary_size,
            p
        ),
        None => log::info!("refinement iteration {}: {} pairs", step.iteration, step.dictionary_size),
    }
}

/// Fraction of distinct source words in `eval` whose top-`k` CSLS targets
/// contain one of their listed translations.
pub fn evaluate_translation(
    map: &OrthogonalMap,
    source: &WordVectors,
    target: &WordVectors,
    eval: &BilingualDictionary,
    k: usize,
    csls_k: usize,
) -> Result<f64> {
    check_dims(source, target)?;
    let (eval, _) = eval.filter(source, target);
    if eval.is_empty() {
        return Err(Error::invalid("evaluation dictionary has no in-vocabulary pairs"));
    }
    let mut gold: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for (s, t) in eval.index_pairs(source, target) {
        gold.entry(s).or_default().insert(t);
    }
    let mapped = map.apply_rows(&source.to_matrix());
    let space = CslsSpace::new(&mapped, &target.to_matrix(), csls_k)?;
    let mut queries: Vec<usize> = gold.keys().copied().collect();
    queries.sort_unstable();
    let hits = queries
        .iter()
        .filter(|s| space.top_targets(**s, k).iter().any(|t| gold[s].contains(t)))
        .count();
    Ok(hits as f64 / queries.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_orthogonal(d: usize, rng: &mut impl Rng) -> Matrix<f64> {
        let g = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let svd = svd_small(&g).unwrap();
        svd.u.matmul(&svd.v.transpose())
    }

    fn random_table(n: usize, d: usize, prefix: &str, rng: &mut impl Rng) -> WordVectors {
        let m = Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        WordVectors::from_rows((0..n).map(|i| format!("{prefix}{i}")).collect(), m).unwrap()
    }

    fn twin(n: usize, d: usize, seed: u64) -> (WordVectors, WordVectors, OrthogonalMap) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_table(n, d, "s", &mut rng);
        let q = OrthogonalMap::new(random_orthogonal(d, &mut rng)).unwrap();
        let mapped = apply_map(&q, &src).unwrap();
        let tgt = WordVectors::from_rows((0..n).map(|i| format!("t{i}")).collect(), mapped.to_matrix()).unwrap();
        (src, tgt, q)
    }

    fn identity_dict(range: std::ops::Range<usize>, role: DictionaryRole) -> BilingualDictionary {
        BilingualDictionary::new(range.map(|i| (format!("s{i}"), format!("t{i}"))).collect(), role)
    }

    #[test]
    fn procrustes_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Matrix::from_fn(4, 10, |_, _| rng.random_range(-1.0..1.0));
        let w = procrustes(&x, &x).unwrap();
        assert!(w.matrix().sub(&Matrix::identity(4)).max_abs() < 1e-10);
    }

    #[test]
    fn procrustes_recovers_quarter_turn() {
        let q = Matrix::from_vec(2, 2, vec![0.0, -1.0, 1.0, 0.0]);
        let x = Matrix::from_vec(2, 3, vec![1.0, 0.3, -2.0, 0.5, 2.0, 0.7]);
        let y = q.matmul(&x);
        let w = procrustes(&x, &y).unwrap();
        assert!(w.matrix().sub(&q).max_abs() < 1e-10);
    }

    #[test]
    fn procrustes_recovers_random_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_orthogonal(10, &mut rng);
        let x = Matrix::from_fn(10, 200, |_, _| rng.random_range(-1.0..1.0));
        let w = procrustes(&x, &q.matmul(&x)).unwrap();
        assert!(w.matrix().sub(&q).frobenius_norm() <= 1e-8);
    }

    #[test]
    fn procrustes_is_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 5;
        let x = Matrix::from_fn(d, 40, |_, _| rng.random_range(-1.0..1.0));
        let noise = Matrix::from_fn(d, 40, |_, _| rng.random_range(-0.3..0.3));
        let q = random_orthogonal(d, &mut rng);
        let y = q.matmul(&x);
        let y = Matrix::from_fn(d, 40, |i, j| y.get(i, j) + noise.get(i, j));
        let w = procrustes(&x, &y).unwrap();
        let cost = |w: &Matrix<f64>| w.matmul(&x).sub(&y).frobenius_norm().powi(2);
        let best = cost(w.matrix());
        for _ in 0..100 {
            // small rotation exp(εA) ≈ via Cayley transform of a skew matrix
            let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let skew = a.sub(&a.transpose()).map(|v| v * 0.5e-2);
            let r = cayley(&skew);
            assert!(orthogonality_error(&r) < 1e-10);
            assert!(best <= cost(&w.matrix().matmul(&r)) + 1e-12);
        }
    }

    // (I − S)⁻¹(I + S) for skew S, via solving with Gaussian elimination
    fn cayley(s: &Matrix<f64>) -> Matrix<f64> {
        let n = s.rows();
        let i = Matrix::identity(n);
        let a = i.sub(s);
        let b = Matrix::from_fn(n, n, |r, c| i.get(r, c) + s.get(r, c));
        let mut aug: Vec<Vec<f64>> = (0..n).map(|r| a.row(r).iter().chain(b.row(r)).copied().collect()).collect();
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs())).unwrap();
            aug.swap(col, piv);
            let p = aug[col][col];
            aug[col].iter_mut().for_each(|v| *v /= p);
            for r in 0..n {
                if r != col {
                    let f = aug[r][col];
                    let pivot_row = aug[col].clone();
                    aug[r].iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
        Matrix::from_fn(n, n, |r, c| aug[r][n + c])
    }

    #[test]
    fn degenerate_fit_is_an_error() {
        let z = Matrix::zeros(3, 5);
        assert!(matches!(procrustes(&z, &z), Err(Error::DegenerateAlignment(_))));
    }

    #[test]
    fn apply_map_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let table = random_table(20, 6, "w", &mut rng);
        assert_eq!(apply_map(&OrthogonalMap::identity(6), &table).unwrap(), table);
        let q = OrthogonalMap::new(random_orthogonal(6, &mut rng)).unwrap();
        let mapped = apply_map(&q, &table).unwrap();
        let back = apply_map(&q.transpose(), &mapped).unwrap();
        for i in 0..table.len() {
            let (a, b) = (crate::matrix::norm(table.vector(i)), crate::matrix::norm(mapped.vector(i)));
            assert!((a - b).abs() <= 1e-9 * a);
            for (x, y) in table.vector(i).iter().zip(back.vector(i)) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        assert!(apply_map(&OrthogonalMap::identity(5), &table).is_err());
    }

    #[test]
    fn map_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = OrthogonalMap::new(random_orthogonal(7, &mut rng)).unwrap();
        let mut buf = Vec::new();
        q.save(&mut buf).unwrap();
        assert!(buf.starts_with(b"XLMAP1\n7\n"));
        assert_eq!(OrthogonalMap::load(buf.as_slice()).unwrap(), q);
        assert!(OrthogonalMap::load("XLMAP1\n2\n1 0\n0 3\n".as_bytes()).is_err());
    }

    #[test]
    fn induction_on_twins_is_exact() {
        let (src, tgt, q) = twin(300, 8, 6);
        let mapped = apply_map(&q, &src).unwrap();
        let dict = induce_dictionary(&mapped, &tgt, 10_000, 10).unwrap();
        assert_eq!(dict.len(), 300);
        for (s, t) in &dict.pairs {
            assert_eq!(&s[1..], &t[1..]);
        }
        let single = induce_dictionary(&mapped, &tgt, 1, 10).unwrap();
        assert_eq!(single.pairs, vec![("s0".to_string(), "t0".to_string())]);
    }

    #[test]
    fn induction_on_unrelated_spaces_finds_few_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_table(400, 20, "a", &mut rng);
        let b = random_table(400, 20, "b", &mut rng);
        let dict = induce_dictionary(&a, &b, 10_000, 10).unwrap();
        // measured: about 55% of points are mutual neighbours by chance here,
        // against 100% for twins
        assert!(dict.len() < 300, "{} mutual pairs", dict.len());
    }

    #[test]
    fn refine_with_zero_iterations_is_plain_procrustes() {
        let (src, tgt, _) = twin(100, 6, 8);
        let seed = identity_dict(0..30, DictionaryRole::Train);
        let refined = refine(&src, &tgt, &seed, &RefineConfig { iterations: 0, ..Default::default() }, None).unwrap();
        let plain = fit_pairs(&src, &tgt, &seed.index_pairs(&src, &tgt)).unwrap();
        assert_eq!(refined.map, plain);
    }

    #[test]
    fn refine_keeps_exact_recovery() {
        let (src, tgt, q) = twin(200, 10, 9);
        let seed = identity_dict(0..50, DictionaryRole::Train);
        let eval = identity_dict(100..200, DictionaryRole::Eval);
        let a = refine(&src, &tgt, &seed, &RefineConfig::default(), Some(&eval)).unwrap();
        assert!(a.map.matrix().sub(q.matrix()).frobenius_norm() <= 1e-6);
        assert_eq!(a.steps.len(), 6);
        assert!(a.steps.iter().all(|s| s.precision_at_1 == Some(1.0)));
    }

    #[test]
    fn refine_recovers_from_noisy_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (src, tgt, _) = twin(400, 10, 11);
        // perturb the target so the twins are near, not exact, copies
        let noisy = Matrix::from_fn(tgt.len(), 10, |i, j| tgt.vector(i)[j] + rng.random_range(-0.15..0.15));
        let tgt = WordVectors::from_rows(tgt.words().to_vec(), noisy).unwrap();
        let mut pairs = identity_dict(0..60, DictionaryRole::Train).pairs;
        for (i, p) in pairs.iter_mut().enumerate().take(12) {
            p.1 = format!("t{}", 300 + i);
        }
        let seed = BilingualDictionary::new(pairs, DictionaryRole::Train);
        let eval = identity_dict(200..400, DictionaryRole::Eval);
        let a = refine(&src, &tgt, &seed, &RefineConfig::default(), Some(&eval)).unwrap();
        let first = a.steps[0].precision_at_1.unwrap();
        let last = a.steps.last().unwrap().precision_at_1.unwrap();
        assert!(last >= first, "{last} < {first}");
        assert!(orthogonality_error(a.map.matrix()) <= 1e-6);
    }

    #[test]
    fn translation_precision() {
        let (src, tgt, q) = twin(150, 8, 12);
        let eval = identity_dict(0..150, DictionaryRole::Eval);
        assert_eq!(evaluate_translation(&q, &src, &tgt, &eval, 1, 10).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let wrong = OrthogonalMap::new(random_orthogonal(8, &mut rng)).unwrap();
        let p1 = evaluate_translation(&wrong, &src, &tgt, &eval, 1, 10).unwrap();
        let p5 = evaluate_translation(&wrong, &src, &tgt, &eval, 5, 10).unwrap();
        assert!(p5 >= p1);
        assert!(p1 < 0.1, "random map precision {p1}");

        let empty = BilingualDictionary::new(vec![("nope".into(), "t1".into())], DictionaryRole::Eval);
        assert!(evaluate_translation(&q, &src, &tgt, &empty, 1, 10).is_err());
    }

    #[test]
    fn dictionary_file_parsing() {
        let d = BilingualDictionary::read("a x\nb\ty\n\na z\n".as_bytes(), DictionaryRole::Train).unwrap();
        assert_eq!(d.len(), 3);
        assert!(BilingualDictionary::read("a b c\n".as_bytes(), DictionaryRole::Train).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let src = random_table(3, 2, "", &mut rng);
        let words = ["x".to_string(), "q".to_string(), "r".to_string()];
        let tgt = WordVectors::from_rows(words.to_vec(), Matrix::from_fn(3, 2, |i, j| (i + j) as f64 + 1.0)).unwrap();
        let d = BilingualDictionary::read("0 x\n1 nope\n9 x\n".as_bytes(), DictionaryRole::Eval).unwrap();
        let (kept, dropped) = d.filter(&src, &tgt);
        assert_eq!((kept.len(), dropped), (1, 2));
    }
}
