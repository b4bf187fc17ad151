//! Flowshop problem representation, objective evaluation and the
//! permutation / permutation-matrix algebra the rest of the crate builds on.
//!
//! Jobs and machines are 0-indexed in memory. Anything that leaves the
//! process (display, serde, file formats) is 1-indexed.

use std::fmt;
use std::ops::Mul;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scheduling criterion minimized over job permutations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    /// Completion time of the last job on the last machine.
    Makespan,
    /// Sum over jobs of the completion time on the last machine.
    TotalCompletion,
    /// Number of jobs finishing strictly after their due date.
    TardyCount,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Objective::Makespan => "makespan",
            Objective::TotalCompletion => "total-completion",
            Objective::TardyCount => "tardy-count",
        };
        f.write_str(name)
    }
}

/// A permutation flowshop instance: `n` jobs (rows) by `m` machines (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    p: Array2<f64>,
    objective: Objective,
    due: Option<Vec<f64>>,
    signed: bool,
}

impl Instance {
    /// Builds an instance, rejecting empty matrices, negative processing
    /// times and due dates that do not match the objective.
    pub fn new(p: Array2<f64>, objective: Objective, due: Option<Vec<f64>>) -> Result<Self> {
        let inst = Self::build(p, objective, due, false)?;
        if let Some(((job, machine), &value)) = inst.p.indexed_iter().find(|(_, &v)| v < 0.0) {
            return Err(Error::NegativeProcessingTime { job: job + 1, machine: machine + 1, value });
        }
        Ok(inst)
    }

    /// Makespan instance from a processing-time matrix.
    pub fn makespan(p: Array2<f64>) -> Result<Self> {
        Self::new(p, Objective::Makespan, None)
    }

    /// Convenience constructor from job rows.
    pub fn from_rows(rows: &[Vec<f64>], objective: Objective, due: Option<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::arg("job rows have differing machine counts"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let p = Array2::from_shape_vec((n, m), flat).map_err(|e| Error::arg(e.to_string()))?;
        Self::new(p, objective, due)
    }

    pub(crate) fn build(p: Array2<f64>, objective: Objective, due: Option<Vec<f64>>, signed: bool) -> Result<Self> {
        let (n, m) = p.dim();
        if n == 0 || m == 0 {
            return Err(Error::arg("an instance needs at least one job and one machine"));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("processing times must be finite"));
        }
        match (objective, &due) {
            (Objective::TardyCount, None) => return Err(Error::MissingDueDates),
            (Objective::TardyCount, Some(d)) if d.len() != n => {
                return Err(Error::dims(format!("{n} due dates"), format!("{} due dates", d.len())))
            }
            (Objective::Makespan | Objective::TotalCompletion, Some(_)) => {
                return Err(Error::UnexpectedDueDates)
            }
            _ => {}
        }
        let p = p.as_standard_layout().into_owned();
        Ok(Self { p, objective, due, signed })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn m(&self) -> usize {
        self.p.ncols()
    }

    /// Processing-time matrix, jobs by machines.
    pub fn p(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn due(&self) -> Option<&[f64]> {
        self.due.as_deref()
    }

    /// True when the instance came out of [`Instance::scale_shift`] with
    /// negative entries explicitly permitted.
    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn total_processing(&self) -> f64 {
        self.p.sum()
    }

    /// The matrix the distance metric compares: `P`, or `[P, d]` for
    /// tardy-count instances.
    pub fn spec_matrix(&self) -> Array2<f64> {
        match &self.due {
            Some(d) => {
                let col = Array2::from_shape_vec((d.len(), 1), d.clone()).expect("one due date per job");
                ndarray::concatenate(Axis(1), &[self.p.view(), col.view()]).expect("row counts agree")
            }
            None => self.p.clone(),
        }
    }

    /// Same data, different criterion.
    pub fn with_objective(&self, objective: Objective, due: Option<Vec<f64>>) -> Result<Self> {
        Self::build(self.p.clone(), objective, due, self.signed)
    }

    /// `P' = O · P`: row `i` of the result is row `o(i)` of `P`. Due dates
    /// travel with their rows.
    pub fn row_transform(&self, o: &SolutionMatrix) -> Result<Self> {
        if o.n() != self.n() {
            return Err(Error::dims(format!("{0}x{0} transformation", self.n()), format!("{0}x{0}", o.n())));
        }
        let p = self.p.select(Axis(0), o.cols());
        let due = self.due.as_ref().map(|d| o.cols().iter().map(|&r| d[r]).collect());
        Self::build(p, self.objective, due, self.signed)
    }

    /// `P' = t·P + b·E` with `t > 0`. Due dates (when present) receive the
    /// same affine map as the augmented `[P, d]` column.
    ///
    /// Negative results are rejected unless `allow_negative` is set; the
    /// flag is carried on the returned instance.
    pub fn scale_shift(&self, t: f64, b: f64, allow_negative: bool) -> Result<Self> {
        if t <= 0.0 || !t.is_finite() {
            return Err(Error::NonPositiveScale(t));
        }
        let p = self.p.mapv(|v| t * v + b);
        let due = self.due.as_ref().map(|d| d.iter().map(|v| t * v + b).collect());
        if !allow_negative {
            if let Some(((job, machine), &value)) = p.indexed_iter().find(|(_, &v)| v < 0.0) {
                return Err(Error::NegativeProcessingTime { job: job + 1, machine: machine + 1, value });
            }
        }
        Self::build(p, self.objective, due, allow_negative || self.signed)
    }

    /// Objective value of an arbitrary (possibly partial) job sequence.
    /// `row` is scratch space of length `m`.
    pub(crate) fn sequence_value(&self, seq: &[usize], row: &mut [f64]) -> f64 {
        let m = self.m();
        let p = self.p.as_slice().expect("standard layout");
        let mut total = 0.0;
        let mut tardy = 0usize;
        for (pos, &job) in seq.iter().enumerate() {
            let pr = &p[job * m..(job + 1) * m];
            let mut prev = 0.0;
            for j in 0..m {
                let ready = match (pos, j) {
                    (0, 0) => 0.0,
                    (0, _) => prev,
                    (_, 0) => row[0],
                    _ => row[j].max(prev),
                };
                let c = ready + pr[j];
                row[j] = c;
                prev = c;
            }
            match self.objective {
                Objective::Makespan => {}
                Objective::TotalCompletion => total += prev,
                Objective::TardyCount => {
                    if prev > self.due.as_ref().expect("validated at construction")[job] {
                        tardy += 1;
                    }
                }
            }
        }
        match self.objective {
            Objective::Makespan => {
                if seq.is_empty() {
                    0.0
                } else {
                    row[m - 1]
                }
            }
            Objective::TotalCompletion => total,
            Objective::TardyCount => tardy as f64,
        }
    }
}

/// A job sequence; `seq[i]` is the job processed in position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Validates a 0-based sequence.
    pub fn new(seq: Vec<usize>) -> Result<Self> {
        let n = seq.len();
        let mut seen = vec![false; n];
        for &j in &seq {
            if j >= n {
                return Err(Error::InvalidPermutation(format!("job {} out of range 1..={n}", j + 1)));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidPermutation(format!("job {} repeated", j + 1)));
            }
        }
        Ok(Self(seq))
    }

    pub(crate) fn new_unchecked(seq: Vec<usize>) -> Self {
        debug_assert!(Self::new(seq.clone()).is_ok());
        Self(seq)
    }

    /// Parses the 1-based form used in files and output, e.g. `[3, 1, 2]`.
    pub fn from_one_based(seq: &[usize]) -> Result<Self> {
        if seq.contains(&0) {
            return Err(Error::InvalidPermutation("jobs are numbered from 1".into()));
        }
        Self::new(seq.iter().map(|&j| j - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&j| j + 1).collect()
    }

    /// `positions()[job]` is the position of `job` in the sequence.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            pos[j] = i;
        }
        pos
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(one_based: Vec<usize>) -> Result<Self> {
        Self::from_one_based(&one_based)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.to_one_based()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", j + 1)?;
        }
        f.write_str("]")
    }
}

/// An `n×n` permutation matrix, stored sparsely: row `i` holds its single 1
/// in column `cols[i]`.
///
/// Solution matrices, transformation functions and job-matching assignments
/// all share this type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Permutation", into = "Permutation")]
pub struct SolutionMatrix {
    cols: Vec<usize>,
}

impl SolutionMatrix {
    pub fn identity(n: usize) -> Self {
        Self { cols: (0..n).collect() }
    }

    /// Builds from the column index of the 1 in each row.
    pub fn from_cols(cols: Vec<usize>) -> Result<Self> {
        Permutation::new(cols)
            .map(|p| Self { cols: p.0 })
            .map_err(|e| Error::InvalidSolutionMatrix(e.to_string()))
    }

    /// Validates a dense 0/1 matrix.
    pub fn from_dense(x: &Array2<u8>) -> Result<Self> {
        let (rows, cols) = x.dim();
        if rows != cols {
            return Err(Error::InvalidSolutionMatrix(format!("{rows}x{cols} is not square")));
        }
        let mut out = Vec::with_capacity(rows);
        for (i, row) in x.outer_iter().enumerate() {
            if row.iter().any(|&v| v > 1) {
                return Err(Error::InvalidSolutionMatrix(format!("row {} has a non-binary entry", i + 1)));
            }
            let ones: Vec<usize> = row.iter().enumerate().filter(|(_, &v)| v == 1).map(|(r, _)| r).collect();
            if ones.len() != 1 {
                return Err(Error::InvalidSolutionMatrix(format!("row {} has {} ones", i + 1, ones.len())));
            }
            out.push(ones[0]);
        }
        Self::from_cols(out)
    }

    pub fn to_dense(&self) -> Array2<u8> {
        let n = self.n();
        let mut x = Array2::zeros((n, n));
        for (i, &r) in self.cols.iter().enumerate() {
            x[[i, r]] = 1;
        }
        x
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cols[row] == col
    }

    /// Transpose, which for permutation matrices is also the inverse.
    pub fn transpose(&self) -> Self {
        let mut t = vec![0; self.n()];
        for (i, &r) in self.cols.iter().enumerate() {
            t[r] = i;
        }
        Self { cols: t }
    }

    pub fn is_identity(&self) -> bool {
        self.cols.iter().enumerate().all(|(i, &r)| i == r)
    }
}

impl Mul for &SolutionMatrix {
    type Output = SolutionMatrix;

    /// `(A·B)` has row `i` equal to row `a(i)` of `B`.
    fn mul(self, rhs: &SolutionMatrix) -> SolutionMatrix {
        assert_eq!(self.n(), rhs.n(), "permutation matrix product needs equal sizes");
        SolutionMatrix { cols: self.cols.iter().map(|&r| rhs.cols[r]).collect() }
    }
}

impl TryFrom<Permutation> for SolutionMatrix {
    type Error = Error;

    fn try_from(p: Permutation) -> Result<Self> {
        Ok(perm_to_matrix(&p))
    }
}

impl From<SolutionMatrix> for Permutation {
    fn from(x: SolutionMatrix) -> Self {
        matrix_to_perm(&x)
    }
}

/// `φ`: `x[i][r] = 1` iff `perm[i] = r`.
pub fn perm_to_matrix(perm: &Permutation) -> SolutionMatrix {
    SolutionMatrix { cols: perm.0.clone() }
}

/// `φ⁻¹`: `π = [1..n] · Xᵀ`.
pub fn matrix_to_perm(x: &SolutionMatrix) -> Permutation {
    Permutation(x.cols.clone())
}

/// Objective value plus, on request, the completion-time matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    /// `completion[[i, j]]` is the completion time on machine `j` of the job
    /// in position `i`.
    pub completion: Option<Array2<f64>>,
}

fn check_perm(inst: &Instance, perm: &Permutation) -> Result<()> {
    if perm.len() != inst.n() {
        return Err(Error::dims(format!("permutation of {} jobs", inst.n()), perm.len()));
    }
    Ok(())
}

/// Evaluates the instance's objective for a complete permutation.
pub fn evaluate(inst: &Instance, perm: &Permutation) -> Result<EvalResult> {
    check_perm(inst, perm)?;
    let mut row = vec![0.0; inst.m()];
    Ok(EvalResult { value: inst.sequence_value(perm.as_slice(), &mut row), completion: None })
}

/// Like [`evaluate`], additionally returning every completion time.
pub fn evaluate_with_completion(inst: &Instance, perm: &Permutation) -> Result<EvalResult> {
    check_perm(inst, perm)?;
    let (n, m) = (inst.n(), inst.m());
    let mut c = Array2::<f64>::zeros((n, m));
    let mut row = vec![0.0; m];
    let value = inst.sequence_value(perm.as_slice(), &mut row);
    for (i, &job) in perm.as_slice().iter().enumerate() {
        for j in 0..m {
            let ready = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => c[[0, j - 1]],
                (_, 0) => c[[i - 1, 0]],
                _ => c[[i - 1, j]].max(c[[i, j - 1]]),
            };
            c[[i, j]] = ready + inst.p[[job, j]];
        }
    }
    Ok(EvalResult { value, completion: Some(c) })
}

/// Best-so-far objective value after each improving evaluation.
pub type Convergence = Vec<(u64, f64)>;

/// Budgeted, counting evaluator shared by every search component.
///
/// Every call to [`Evaluator::try_value`] bills one evaluation, whether the
/// sequence is complete or partial. Complete sequences also update the
/// best-so-far record and the convergence trace.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    inst: &'a Instance,
    row: Vec<f64>,
    count: u64,
    limit: u64,
    best: Option<(f64, Vec<usize>)>,
    trace: Convergence,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self::with_budget(inst, u64::MAX)
    }

    pub fn with_budget(inst: &'a Instance, limit: u64) -> Self {
        Self { inst, row: vec![0.0; inst.m()], count: 0, limit, best: None, trace: Vec::new() }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    /// Evaluates `seq`, or returns `None` once the budget is spent.
    pub fn try_value(&mut self, seq: &[usize]) -> Option<f64> {
        if self.count >= self.limit {
            return None;
        }
        self.count += 1;
        let v = self.inst.sequence_value(seq, &mut self.row);
        if seq.len() == self.inst.n() && self.best.as_ref().is_none_or(|(b, _)| v < *b) {
            self.best = Some((v, seq.to_vec()));
            self.trace.push((self.count, v));
        }
        Some(v)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.count
    }

    pub fn exhausted(&self) -> bool {
        self.count >= self.limit
    }

    /// Lowers (or raises) the budget; used to hold evaluations in reserve.
    pub fn set_limit(&mut self, limit: u64) {
        self.limit = limit.max(self.count);
    }

    pub fn best(&self) -> Option<(f64, &[usize])> {
        self.best.as_ref().map(|(v, s)| (*v, s.as_slice()))
    }

    pub fn trace(&self) -> &Convergence {
        &self.trace
    }
}
