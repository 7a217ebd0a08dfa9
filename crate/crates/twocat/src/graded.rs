//! Finite tables for categorically graded sets, pre-n-categories and strict
//! n-categories, together with exhaustive axiom checkers.
//!
//! A table stores every element explicitly and every structure map totally,
//! so each axiom can be checked by quantifying over all element tuples. A
//! `k`-morphism doubles as its own identity at every higher level: there are
//! no separate identity elements, an element fixed by `src0`/`tgt0` *is* an
//! object.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Index of an element in a table.
pub type Elem = usize;

/// Identifies one axiom instance class.
///
/// The flat names `1.a.i` … `1.b.iv` cover the graded/strict table axioms;
/// the remaining variants are used by the monoidal and action validators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomId {
    /// `ρ_i σ_i = σ_i`
    GlobularSameLevel,
    /// `a *_i s_i(a) = a = t_i(a) *_i a`
    Unit,
    /// `(a *_i b) *_i c = a *_i (b *_i c)`
    Assoc,
    /// `s_i(a *_i b) = s_i(b)` and `t_i(a *_i b) = t_i(a)`
    CompBoundary,
    /// `ρ_j σ_i = σ_i` for `i < j`
    GlobularUpDown,
    /// `σ_i ρ_j = σ_i` for `i < j`
    GlobularDownUp,
    /// `ρ_j(a *_i b) = ρ_j(a) *_i ρ_j(b)` for `i < j`
    CompGraded,
    /// `(a *_j b) *_i (c *_j d) = (a *_i c) *_j (b *_i d)` when one side is defined
    Interchange,
    /// Tensor or action table fails to preserve identities or composition.
    Functoriality,
    /// A structure component is not natural in one of its arguments.
    Naturality,
    /// A structure component has no two-sided inverse.
    Invertibility,
    /// The pentagon for the associativity constraint fails.
    Pentagon,
    /// The unit-compatibility triangle fails.
    Triangle,
    /// A hexagon for the optional symmetry fails.
    Hexagon,
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AxiomId::GlobularSameLevel => "1.a.i",
            AxiomId::Unit => "1.a.ii",
            AxiomId::Assoc => "1.a.iii",
            AxiomId::CompBoundary => "1.a.iv",
            AxiomId::GlobularUpDown => "1.b.i",
            AxiomId::GlobularDownUp => "1.b.ii",
            AxiomId::CompGraded => "1.b.iii",
            AxiomId::Interchange => "1.b.iv",
            AxiomId::Functoriality => "functoriality",
            AxiomId::Naturality => "naturality",
            AxiomId::Invertibility => "invertibility",
            AxiomId::Pentagon => "pentagon",
            AxiomId::Triangle => "triangle",
            AxiomId::Hexagon => "hexagon",
        };
        f.write_str(s)
    }
}

/// One failed axiom instance with the elements that witness it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub axiom: AxiomId,
    pub witness: Vec<Elem>,
}

/// Outcome of an exhaustive axiom scan.
///
/// `passed` holds exactly when `violations` is empty. Violations are listed
/// in a fixed scan order, so identical inputs give identical reports.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AxiomReport {
    pub violations: Vec<Violation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, axiom: AxiomId, witness: Vec<Elem>) {
        self.violations.push(Violation { axiom, witness });
    }

    pub fn merge(mut self, other: AxiomReport) -> AxiomReport {
        self.violations.extend(other.violations);
        self
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "passed");
        }
        writeln!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f,"  {} at {:?}", v.axiom, v.witness)?;
        }
        Ok(())
    }
}

/// Errors for malformed table inputs, reported before any axiom scan.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("map {map} at element {elem} refers to unknown element {target}")]
    UnknownElement {
        map: String,
        elem: Elem,
        target: Elem,
    },
    #[error("level {level} composition defined on non-composable pair ({lhs}, {rhs})")]
    NonComposable { level: usize, lhs: Elem, rhs: Elem },
    #[error("level {level} composition missing on composable pair ({lhs}, {rhs})")]
    MissingComposite { level: usize, lhs: Elem, rhs: Elem },
    #[error("composite at level {level} of ({lhs}, {rhs}) is unknown element {target}")]
    UnknownComposite {
        level: usize,
        lhs: Elem,
        rhs: Elem,
        target: Elem,
    },
    #[error("table declares {levels} levels but carries {maps} source maps")]
    LevelMismatch { levels: usize, maps: usize },
}

/// An n-categorically graded set: elements plus total `src_i`/`tgt_i` maps
/// for each `i < levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedSetTable {
    pub names: Vec<String>,
    pub levels: usize,
    pub src: Vec<Vec<Elem>>,
    pub tgt: Vec<Vec<Elem>>,
}

impl GradedSetTable {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e]
    }

    pub fn elem_by_name(&self, name: &str) -> Option<Elem> {
        self.names.iter().position(|n| n == name)
    }

    fn validate(&self) -> Result<(), TableError> {
        if self.src.len() != self.levels || self.tgt.len() != self.levels {
            return Err(TableError::LevelMismatch {
                levels: self.levels,
                maps: self.src.len().min(self.tgt.len()),
            });
        }
        let n = self.len();
        for (i, (s, t)) in self.src.iter().zip(&self.tgt).enumerate() {
            for (which, map) in [("src", s), ("tgt", t)] {
                if map.len() != n {
                    return Err(TableError::LevelMismatch {
                        levels: n,
                        maps: map.len(),
                    });
                }
                for (e, &img) in map.iter().enumerate() {
                    if img >= n {
                        return Err(TableError::UnknownElement {
                            map: format!("{which}{i}"),
                            elem: e,
                            target: img,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// A graded set with a partial composition `*_i` per level, stored as an
/// explicit domain: a pair is in the map exactly when it is meant to compose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionTable {
    pub base: GradedSetTable,
    pub comp: Vec<BTreeMap<(Elem, Elem), Elem>>,
}

impl CompositionTable {
    /// Composability of `(a, b)` at level `i`: `src_i(a) = tgt_i(b)`,
    /// reading `a *_i b` as "a after b".
    pub fn composable(&self, level: usize, a: Elem, b: Elem) -> bool {
        self.base.src[level][a] == self.base.tgt[level][b]
    }

    pub fn composite(&self, level: usize, a: Elem, b: Elem) -> Option<Elem> {
        self.comp[level].get(&(a, b)).copied()
    }

    /// Shape validation: maps total and in range, composition defined on
    /// exactly the composable pairs.
    pub fn validate(&self) -> Result<(), TableError> {
        self.base.validate()?;
        if self.comp.len() != self.base.levels {
            return Err(TableError::LevelMismatch {
                levels: self.base.levels,
                maps: self.comp.len(),
            });
        }
        let n = self.base.len();
        for (i, table) in self.comp.iter().enumerate() {
            for (&(a, b), &c) in table {
                if a >= n || b >= n {
                    return Err(TableError::UnknownComposite {
                        level: i,
                        lhs: a,
                        rhs: b,
                        target: c,
                    });
                }
                if !self.composable(i, a, b) {
                    return Err(TableError::NonComposable {
                        level: i,
                        lhs: a,
                        rhs: b,
                    });
                }
                if c >= n {
                    return Err(TableError::UnknownComposite {
                        level: i,
                        lhs: a,
                        rhs: b,
                        target: c,
                    });
                }
            }
            for a in 0..n {
                for b in 0..n {
                    if self.composable(i, a, b) && !self.comp[i].contains_key(&(a, b)) {
                        return Err(TableError::MissingComposite {
                            level: i,
                            lhs: a,
                            rhs: b,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Checks the graded-set axioms `1.a.i`, `1.b.i`, `1.b.ii`.
pub fn check_graded(table: &GradedSetTable) -> Result<AxiomReport, TableError> {
    table.validate()?;
    let mut report = AxiomReport::default();
    let n = table.len();
    // 1.a.i: rho_i sigma_i = sigma_i for rho, sigma in {src_i, tgt_i}.
    for i in 0..table.levels {
        for rho in [&table.src[i], &table.tgt[i]] {
            for sigma in [&table.src[i], &table.tgt[i]] {
                for e in 0..n {
                    if rho[sigma[e]] != sigma[e] {
                        report.record(AxiomId::GlobularSameLevel, vec![e]);
                    }
                }
            }
        }
    }
    for i in 0..table.levels {
        for j in (i + 1)..table.levels {
            // 1.b.i: rho_j sigma_i = sigma_i.
            for rho in [&table.src[j], &table.tgt[j]] {
                for sigma in [&table.src[i], &table.tgt[i]] {
                    for e in 0..n {
                        if rho[sigma[e]] != sigma[e] {
                            report.record(AxiomId::GlobularUpDown, vec![e]);
                        }
                    }
                }
            }
            // 1.b.ii: sigma_i rho_j = sigma_i.
            for sigma in [&table.src[i], &table.tgt[i]] {
                for rho in [&table.src[j], &table.tgt[j]] {
                    for e in 0..n {
                        if sigma[rho[e]] != sigma[e] {
                            report.record(AxiomId::GlobularDownUp, vec![e]);
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Checks the pre-n-category axioms `1.a.iv` and `1.b.iii` only.
pub fn check_pre_n(table: &CompositionTable) -> Result<AxiomReport, TableError> {
    table.validate()?;
    let mut report = AxiomReport::default();
    let base = &table.base;
    for i in 0..base.levels {
        // 1.a.iv: src_i(a *_i b) = src_i(b), tgt_i(a *_i b) = tgt_i(a).
        for (&(a, b), &c) in &table.comp[i] {
            if base.src[i][c] != base.src[i][b] || base.tgt[i][c] != base.tgt[i][a] {
                report.record(AxiomId::CompBoundary, vec![a, b]);
            }
        }
        // 1.b.iii: rho_j(a *_i b) = rho_j(a) *_i rho_j(b) for j > i.
        for j in (i + 1)..base.levels {
            for (&(a, b), &c) in &table.comp[i] {
                for rho in [&base.src[j], &base.tgt[j]] {
                    match table.composite(i, rho[a], rho[b]) {
                        Some(rc) if rc == rho[c] => {}
                        _ => report.record(AxiomId::CompGraded, vec![a, b]),
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Checks every strict n-category axiom `1.a.i`–`1.a.iv`, `1.b.i`–`1.b.iv`,
/// including the interchange law over all quadruples where one side is
/// defined.
pub fn check_strict_n(table: &CompositionTable) -> Result<AxiomReport, TableError> {
    let mut report = check_graded(&table.base)?;
    report = report.merge(check_pre_n(table)?);
    let base = &table.base;
    let n = base.len();
    for i in 0..base.levels {
        // 1.a.ii: a *_i s_i(a) = a = t_i(a) *_i a.
        for a in 0..n {
            if table.composite(i, a, base.src[i][a]) != Some(a)
                || table.composite(i, base.tgt[i][a], a) != Some(a)
            {
                report.record(AxiomId::Unit, vec![a]);
            }
        }
        // 1.a.iii: (a *_i b) *_i c = a *_i (b *_i c).
        for (&(a, b), &ab) in &table.comp[i] {
            for c in 0..n {
                if !table.composable(i, b, c) {
                    continue;
                }
                let bc = match table.composite(i, b, c) {
                    Some(bc) => bc,
                    None => continue,
                };
                if table.composite(i, ab, c) != table.composite(i, a, bc) {
                    report.record(AxiomId::Assoc, vec![a, b, c]);
                }
            }
        }
    }
    // 1.b.iv: (a *_j b) *_i (c *_j d) = (a *_i c) *_j (b *_i d), i < j,
    // checked whenever one side is defined.
    for i in 0..base.levels {
        for j in (i + 1)..base.levels {
            for a in 0..n {
                for b in 0..n {
                    if !table.composable(j, a, b) {
                        continue;
                    }
                    for c in 0..n {
                        for d in 0..n {
                            if !table.composable(j, c, d) {
                                continue;
                            }
                            let lhs = table
                                .composite(j, a, b)
                                .zip(table.composite(j, c, d))
                                .filter(|&(ab, cd)| table.composable(i, ab, cd))
                                .and_then(|(ab, cd)| table.composite(i, ab, cd));
                            let rhs = (table.composable(i, a, c) && table.composable(i, b, d))
                                .then(|| {
                                    table
                                        .composite(i, a, c)
                                        .zip(table.composite(i, b, d))
                                        .filter(|&(ac, bd)| table.composable(j, ac, bd))
                                        .and_then(|(ac, bd)| table.composite(j, ac, bd))
                                })
                                .flatten();
                            match (lhs, rhs) {
                                (None, None) => {}
                                (Some(l), Some(r)) if l == r => {}
                                _ => report.record(AxiomId::Interchange, vec![a, b, c, d]),
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// A finite category: a 1-level composition table satisfying all the strict
/// axioms. Objects are the elements fixed by `src0` and `tgt0` and serve as
/// their own identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteCategory {
    pub table: CompositionTable,
}

impl FiniteCategory {
    /// Wraps a 1-level table after verifying the category axioms.
    pub fn new(table: CompositionTable) -> Result<FiniteCategory, FiniteCategoryError> {
        if table.base.levels != 1 {
            return Err(FiniteCategoryError::NotOneLevel(table.base.levels));
        }
        let report = check_strict_n(&table).map_err(FiniteCategoryError::Table)?;
        if !report.passed() {
            return Err(FiniteCategoryError::Axioms(report));
        }
        Ok(FiniteCategory { table })
    }

    pub fn len(&self) -> usize {
        self.table.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.base.is_empty()
    }

    pub fn name(&self, e: Elem) -> &str {
        self.table.base.name(e)
    }

    pub fn elem_by_name(&self, name: &str) -> Option<Elem> {
        self.table.base.elem_by_name(name)
    }

    pub fn dom(&self, e: Elem) -> Elem {
        self.table.base.src[0][e]
    }

    pub fn cod(&self, e: Elem) -> Elem {
        self.table.base.tgt[0][e]
    }

    pub fn is_object(&self, e: Elem) -> bool {
        self.dom(e) == e && self.cod(e) == e
    }

    pub fn objects(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.len()).filter(|&e| self.is_object(e))
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.len()
    }

    /// `a ∘ b` ("a after b"); defined exactly when `dom(a) = cod(b)`.
    pub fn compose(&self, a: Elem, b: Elem) -> Option<Elem> {
        self.table.composite(0, a, b)
    }
}

#[derive(Debug, Error)]
pub enum FiniteCategoryError {
    #[error("category table must have exactly 1 level, found {0}")]
    NotOneLevel(usize),
    #[error(transparent)]
    Table(TableError),
    #[error("category axioms fail: {0}")]
    Axioms(AxiomReport),
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One element, all maps identity.
    pub(crate) fn terminal() -> CompositionTable {
        CompositionTable {
            base: GradedSetTable {
                names: vec!["pt".into()],
                levels: 2,
                src: vec![vec![0], vec![0]],
                tgt: vec![vec![0], vec![0]],
            },
            comp: vec![
                BTreeMap::from([((0, 0), 0)]),
                BTreeMap::from([((0, 0), 0)]),
            ],
        }
    }

    /// One object, identity 1-cell, 2-cells forming Z/2 under both
    /// compositions.
    pub(crate) fn zmod2_cells() -> CompositionTable {
        // elements: 0 = the point (object and identity 1-cell), 1 = z
        CompositionTable {
            base: GradedSetTable {
                names: vec!["pt".into(), "z".into()],
                levels: 2,
                src: vec![vec![0, 0], vec![0, 0]],
                tgt: vec![vec![0, 0], vec![0, 0]],
            },
            comp: vec![
                BTreeMap::from([((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 0)]),
                BTreeMap::from([((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 0)]),
            ],
        }
    }

    #[test]
    fn terminal_is_strict() {
        let t = terminal();
        assert!(check_graded(&t.base).unwrap().passed());
        assert!(check_pre_n(&t).unwrap().passed());
        assert!(check_strict_n(&t).unwrap().passed());
    }

    #[test]
    fn one_loop_quiver_is_graded() {
        // two elements a, x with all boundaries a
        let t = GradedSetTable {
            names: vec!["a".into(), "x".into()],
            levels: 1,
            src: vec![vec![0, 0]],
            tgt: vec![vec![0, 0]],
        };
        assert!(check_graded(&t).unwrap().passed());
    }

    #[test]
    fn broken_globularity_is_witnessed() {
        // tgt_0(src_0(x)) != src_0(x): make src0(x) = a but tgt0(a) = x.
        let t = GradedSetTable {
            names: vec!["a".into(), "x".into()],
            levels: 1,
            src: vec![vec![0, 0]],
            tgt: vec![vec![1, 0]],
        };
        let report = check_graded(&t).unwrap();
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .any(|v| v.axiom == AxiomId::GlobularSameLevel && v.witness.contains(&1)));
    }

    #[test]
    fn zmod2_cells_is_strict() {
        assert!(check_strict_n(&zmod2_cells()).unwrap().passed());
    }

    #[test]
    fn comp_on_non_composable_pair_is_input_error() {
        let mut t = terminal();
        t.base.names.push("b".into());
        t.base.src[0].push(1);
        t.base.tgt[0].push(1);
        t.base.src[1].push(1);
        t.base.tgt[1].push(1);
        // (pt, b) is not composable at level 0 but gets an entry.
        t.comp[0].insert((0, 1), 0);
        t.comp[1].insert((1, 1), 1);
        match check_pre_n(&t) {
            Err(TableError::NonComposable { level: 0, .. }) => {}
            other => panic!("expected NonComposable, got {other:?}"),
        }
    }

    #[test]
    fn finite_category_objects_and_identities() {
        // a --x--> b, a two-object category.
        let t = CompositionTable {
            base: GradedSetTable {
                names: vec!["a".into(), "b".into(), "x".into()],
                levels: 1,
                src: vec![vec![0, 1, 0]],
                tgt: vec![vec![0, 1, 1]],
            },
            comp: vec![BTreeMap::from([
                ((0, 0), 0),
                ((1, 1), 1),
                ((2, 0), 2),
                ((1, 2), 2),
            ])],
        };
        let cat = FiniteCategory::new(t).unwrap();
        assert_eq!(cat.objects().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(cat.compose(2, 0), Some(2));
        assert_eq!(cat.compose(0, 2), None);
        assert_eq!(cat.dom(2), 0);
        assert_eq!(cat.cod(2), 1);
    }
}
