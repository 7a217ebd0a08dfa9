//! Free constructions: generator declarations, hash-consed composition
//! trees, recursive source/target, and the bounded stratified enumerator.
//!
//! A term is either a generator leaf or `Comp(i, x, y)` encoding `x *_i y`
//! ("x after y"). Terms are interned in a per-session bank, so structural
//! equality coincides with id equality. Boundaries are computed once at
//! intern time:
//!
//! * `src_i(Comp(i, x, y)) = src_i(y)`, `tgt_i(Comp(i, x, y)) = tgt_i(x)`;
//! * `σ_1(x *_0 y) = σ_1(x) *_0 σ_1(y)` when the composite is a 2-cell;
//! * `σ_i(t) = t` whenever `grade(t) <= i`.
//!
//! There is no unit or associativity collapse here: `f *_0 s_0(f)` and `f`
//! are different terms, and objects compose with themselves (`a *_0 a` is a
//! 1-cell). Quotients are the business of the congruence module.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index of a generator declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenId(pub u32);

/// Index of an interned term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

/// Composition level: `*_0` (alongside 0-cells) or `*_1` (alongside 1-cells).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Zero,
    One,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Zero => 0,
            Level::One => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Level::Zero => "*0",
            Level::One => "*1",
        }
    }
}

/// One declared generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenKind {
    /// A 0-cell.
    Object,
    /// A 1-cell between declared objects.
    Arrow { src: GenId, tgt: GenId },
    /// A 2-cell between parallel 1-level terms.
    Cell { src1: TermId, tgt1: TermId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorDecl {
    pub name: String,
    pub kind: GenKind,
}

impl GeneratorDecl {
    pub fn grade(&self) -> u8 {
        match self.kind {
            GenKind::Object => 0,
            GenKind::Arrow { .. } => 1,
            GenKind::Cell { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermNode {
    Gen(GenId),
    Comp(Level, TermId, TermId),
}

#[derive(Debug, Clone, Copy)]
struct TermMeta {
    grade: u8,
    leaves: u32,
    src0: TermId,
    tgt0: TermId,
    src1: TermId,
    tgt1: TermId,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("generator name `{0}` is reserved")]
    ReservedGenerator(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("`{name}` boundary must be a term of grade <= 1, found grade {grade}")]
    CellBoundaryGrade { name: String, grade: u8 },
    #[error("`{0}` boundaries are not 0-parallel: src/tgt of the two sides differ")]
    CellBoundaryMismatch(String),
    #[error("level {level} composition undefined: src of `{x}` is `{x_src}` but tgt of `{y}` is `{y_tgt}`")]
    NotComposable {
        level: usize,
        x: String,
        x_src: String,
        y: String,
        y_tgt: String,
    },
}

/// Generator names the term printer claims for structure cells.
pub const RESERVED_NAMES: &[&str] = &[
    "alpha",
    "alpha_inv",
    "lambda",
    "lambda_inv",
    "rho",
    "rho_inv",
    "zeta",
    "eta_c",
    "eta_c_inv",
    "eta_m",
    "eta_m_inv",
];

/// Generator declarations together with the term bank over them.
///
/// The bank is the session-wide intern table: every term ever formed over
/// this data lives here, and ids are stable for the lifetime of the value.
#[derive(Debug, Clone, Default)]
pub struct GeneratingData {
    gens: Vec<GeneratorDecl>,
    by_name: HashMap<String, GenId>,
    nodes: Vec<TermNode>,
    meta: Vec<TermMeta>,
    dedup: HashMap<TermNode, TermId>,
}

impl GeneratingData {
    pub fn new() -> GeneratingData {
        GeneratingData::default()
    }

    pub fn gens(&self) -> &[GeneratorDecl] {
        &self.gens
    }

    pub fn gen_decl(&self, g: GenId) -> &GeneratorDecl {
        &self.gens[g.0 as usize]
    }

    pub fn gen_by_name(&self, name: &str) -> Option<GenId> {
        self.by_name.get(name).copied()
    }

    pub fn gen_ids(&self) -> impl Iterator<Item = GenId> {
        (0..self.gens.len() as u32).map(GenId)
    }

    fn check_fresh(&self, name: &str, allow_reserved: bool) -> Result<(), TermError> {
        if self.by_name.contains_key(name) {
            return Err(TermError::DuplicateGenerator(name.to_string()));
        }
        if !allow_reserved {
            let stem = name.split('[').next().unwrap_or(name);
            if RESERVED_NAMES.contains(&stem) {
                return Err(TermError::ReservedGenerator(name.to_string()));
            }
        }
        Ok(())
    }

    pub fn add_object(&mut self, name: &str) -> Result<GenId, TermError> {
        self.check_fresh(name, false)?;
        Ok(self.push_gen(name, GenKind::Object))
    }

    pub fn add_arrow(&mut self, name: &str, src: GenId, tgt: GenId) -> Result<GenId, TermError> {
        self.check_fresh(name, false)?;
        for end in [src, tgt] {
            if self.gen_decl(end).grade() != 0 {
                return Err(TermError::CellBoundaryGrade {
                    name: name.to_string(),
                    grade: self.gen_decl(end).grade(),
                });
            }
        }
        Ok(self.push_gen(name, GenKind::Arrow { src, tgt }))
    }

    pub fn add_cell(&mut self, name: &str, src1: TermId, tgt1: TermId) -> Result<GenId, TermError> {
        self.check_fresh(name, false)?;
        self.add_cell_decl(name, src1, tgt1)
    }

    /// Like [`add_cell`](Self::add_cell) but allowing reserved structure-cell
    /// names; used by the augmentation and quotient emitters.
    pub fn add_structure_cell(
        &mut self,
        name: &str,
        src1: TermId,
        tgt1: TermId,
    ) -> Result<GenId, TermError> {
        self.check_fresh(name, true)?;
        self.add_cell_decl(name, src1, tgt1)
    }

    /// 1-cell generator under a reserved name (used for the `zeta` cells).
    pub fn add_structure_arrow(
        &mut self,
        name: &str,
        src: GenId,
        tgt: GenId,
    ) -> Result<GenId, TermError> {
        self.check_fresh(name, true)?;
        Ok(self.push_gen(name, GenKind::Arrow { src, tgt }))
    }

    fn add_cell_decl(&mut self, name: &str, src1: TermId, tgt1: TermId) -> Result<GenId, TermError> {
        for side in [src1, tgt1] {
            if self.grade(side) > 1 {
                return Err(TermError::CellBoundaryGrade {
                    name: name.to_string(),
                    grade: self.grade(side),
                });
            }
        }
        // The composability hypothesis on 2-generators: both boundary terms
        // are 0-parallel.
        if self.source(Level::Zero, src1) != self.source(Level::Zero, tgt1)
            || self.target(Level::Zero, src1) != self.target(Level::Zero, tgt1)
        {
            return Err(TermError::CellBoundaryMismatch(name.to_string()));
        }
        Ok(self.push_gen(name, GenKind::Cell { src1, tgt1 }))
    }

    /// Re-declares a generator verbatim; used when cloning data across banks.
    pub(crate) fn push_gen_clone(&mut self, name: &str, kind: GenKind) -> GenId {
        self.push_gen(name, kind)
    }

    fn push_gen(&mut self, name: &str, kind: GenKind) -> GenId {
        let id = GenId(self.gens.len() as u32);
        self.gens.push(GeneratorDecl {
            name: name.to_string(),
            kind,
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// The leaf term of a generator.
    pub fn gen_term(&mut self, g: GenId) -> TermId {
        self.intern(TermNode::Gen(g))
    }

    pub fn node(&self, t: TermId) -> TermNode {
        self.nodes[t.0 as usize]
    }

    pub fn grade(&self, t: TermId) -> u8 {
        self.meta[t.0 as usize].grade
    }

    pub fn leaves(&self, t: TermId) -> u32 {
        self.meta[t.0 as usize].leaves
    }

    pub fn term_count(&self) -> usize {
        self.nodes.len()
    }

    /// Recursive source at a level; total on well-formed terms.
    pub fn source(&self, level: Level, t: TermId) -> TermId {
        let m = &self.meta[t.0 as usize];
        match level {
            Level::Zero => m.src0,
            Level::One => m.src1,
        }
    }

    /// Recursive target at a level; total on well-formed terms.
    pub fn target(&self, level: Level, t: TermId) -> TermId {
        let m = &self.meta[t.0 as usize];
        match level {
            Level::Zero => m.tgt0,
            Level::One => m.tgt1,
        }
    }

    pub fn composable(&self, level: Level, x: TermId, y: TermId) -> bool {
        self.source(level, x) == self.target(level, y)
    }

    /// Forms `x *_level y`, the hash-consed composition tree.
    pub fn compose(&mut self, level: Level, x: TermId, y: TermId) -> Result<TermId, TermError> {
        if !self.composable(level, x, y) {
            return Err(TermError::NotComposable {
                level: level.index(),
                x: self.print_term(x),
                x_src: self.print_term(self.source(level, x)),
                y: self.print_term(y),
                y_tgt: self.print_term(self.target(level, y)),
            });
        }
        Ok(self.intern(TermNode::Comp(level, x, y)))
    }

    fn intern(&mut self, node: TermNode) -> TermId {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        // Pre-intern every term the metadata needs. Boundaries of a fresh
        // node never include the node itself, so `id` below stays final.
        let (grade, leaves, src0, tgt0, src1, tgt1) = match node {
            TermNode::Gen(g) => match self.gen_decl(g).kind.clone() {
                GenKind::Object => (0, 1, None, None, None, None),
                GenKind::Arrow { src, tgt } => {
                    let s = self.gen_term(src);
                    let t = self.gen_term(tgt);
                    (1, 1, Some(s), Some(t), None, None)
                }
                GenKind::Cell { src1, tgt1 } => (
                    2,
                    1,
                    Some(self.source(Level::Zero, src1)),
                    Some(self.target(Level::Zero, src1)),
                    Some(src1),
                    Some(tgt1),
                ),
            },
            TermNode::Comp(Level::Zero, x, y) => {
                let grade = self.grade(x).max(self.grade(y)).max(1);
                let leaves = self.leaves(x) + self.leaves(y);
                let src0 = self.source(Level::Zero, y);
                let tgt0 = self.target(Level::Zero, x);
                let (src1, tgt1) = if grade <= 1 {
                    (None, None)
                } else {
                    // sigma_1(x *_0 y) = sigma_1(x) *_0 sigma_1(y)
                    let sx = self.source(Level::One, x);
                    let sy = self.source(Level::One, y);
                    let tx = self.target(Level::One, x);
                    let ty = self.target(Level::One, y);
                    (
                        Some(self.intern(TermNode::Comp(Level::Zero, sx, sy))),
                        Some(self.intern(TermNode::Comp(Level::Zero, tx, ty))),
                    )
                };
                (grade, leaves, Some(src0), Some(tgt0), src1, tgt1)
            }
            TermNode::Comp(Level::One, x, y) => (
                2,
                self.leaves(x) + self.leaves(y),
                Some(self.source(Level::Zero, y)),
                Some(self.target(Level::Zero, x)),
                Some(self.source(Level::One, y)),
                Some(self.target(Level::One, x)),
            ),
        };
        let id = TermId(self.nodes.len() as u32);
        let meta = TermMeta {
            grade,
            leaves,
            src0: src0.unwrap_or(id),
            tgt0: tgt0.unwrap_or(id),
            src1: src1.unwrap_or(id),
            tgt1: tgt1.unwrap_or(id),
        };
        self.nodes.push(node);
        self.meta.push(meta);
        self.dedup.insert(node, id);
        id
    }

    /// Canonical term order: leaf count, then recursive lexicographic
    /// structure with generators before composites.
    pub fn cmp_terms(&self, a: TermId, b: TermId) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        self.leaves(a)
            .cmp(&self.leaves(b))
            .then_with(|| match (self.node(a), self.node(b)) {
                (TermNode::Gen(x), TermNode::Gen(y)) => {
                    self.gen_decl(x).name.cmp(&self.gen_decl(y).name)
                }
                (TermNode::Gen(_), TermNode::Comp(..)) => Ordering::Less,
                (TermNode::Comp(..), TermNode::Gen(_)) => Ordering::Greater,
                (TermNode::Comp(l1, x1, y1), TermNode::Comp(l2, x2, y2)) => l1
                    .index()
                    .cmp(&l2.index())
                    .then_with(|| self.cmp_terms(x1, x2))
                    .then_with(|| self.cmp_terms(y1, y2)),
            })
    }

    /// Canonical fully parenthesized syntax: `(x *0 y)`, `(u *1 v)`.
    pub fn print_term(&self, t: TermId) -> String {
        let mut out = String::new();
        self.write_term(t, &mut out);
        out
    }

    fn write_term(&self, t: TermId, out: &mut String) {
        match self.node(t) {
            TermNode::Gen(g) => out.push_str(&self.gen_decl(g).name),
            TermNode::Comp(level, x, y) => {
                out.push('(');
                self.write_term(x, out);
                out.push(' ');
                out.push_str(level.symbol());
                out.push(' ');
                self.write_term(y, out);
                out.push(')');
            }
        }
    }

    /// All terms with at most `max_leaves` generator leaves over the
    /// generators of grade `<= alphabet_grade`, stratified by leaf count and
    /// canonically ordered inside each stratum.
    ///
    /// For `alphabet_grade <= 1` this is the chain fragment of the free
    /// pre-1-category (level-0 composition only); for grade 2 it is the free
    /// pre-2-category fragment with both composition levels.
    pub fn enumerate_free(&mut self, max_leaves: u32, alphabet_grade: u8) -> Vec<TermId> {
        let levels: &[Level] = if alphabet_grade <= 1 {
            &[Level::Zero]
        } else {
            &[Level::Zero, Level::One]
        };
        let mut strata: Vec<Vec<TermId>> = Vec::new();
        let mut first: Vec<TermId> = self
            .gen_ids()
            .filter(|&g| self.gen_decl(g).grade() <= alphabet_grade)
            .collect::<Vec<_>>()
            .into_iter()
            .map(|g| self.gen_term(g))
            .collect();
        first.sort_by(|&a, &b| self.cmp_terms(a, b));
        strata.push(first);
        for n in 2..=max_leaves {
            let mut stratum = Vec::new();
            for p in 1..n {
                let q = n - p;
                let (left, right) = (strata[p as usize - 1].clone(), strata[q as usize - 1].clone());
                for &x in &left {
                    for &y in &right {
                        for &level in levels {
                            if self.composable(level, x, y) {
                                stratum.push(self.intern(TermNode::Comp(level, x, y)));
                            }
                        }
                    }
                }
            }
            stratum.sort_by(|&a, &b| self.cmp_terms(a, b));
            stratum.dedup();
            strata.push(stratum);
        }
        strata.into_iter().flatten().collect()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Extends a map of the generators into a finite pre-2-category table to all
/// enumerated terms: `F(x *_i y) = F(x) *_i F(y)`.
///
/// Returns `None` when some composite is missing in the target table, i.e.
/// the assignment does not extend.
pub fn extend_to_table(
    data: &GeneratingData,
    assignment: &HashMap<GenId, crate::graded::Elem>,
    target: &crate::graded::CompositionTable,
    term: TermId,
) -> Option<crate::graded::Elem> {
    match data.node(term) {
        TermNode::Gen(g) => assignment.get(&g).copied(),
        TermNode::Comp(level, x, y) => {
            let fx = extend_to_table(data, assignment, target, x)?;
            let fy = extend_to_table(data, assignment, target, y)?;
            target.composite(level.index(), fx, fy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain(k: usize) -> (GeneratingData, Vec<GenId>, Vec<GenId>) {
        let mut data = GeneratingData::new();
        let objects: Vec<GenId> = (0..=k)
            .map(|i| data.add_object(&format!("o{i}")).unwrap())
            .collect();
        let arrows: Vec<GenId> = (0..k)
            .map(|i| {
                data.add_arrow(&format!("f{}", i + 1), objects[i], objects[i + 1])
                    .unwrap()
            })
            .collect();
        (data, objects, arrows)
    }

    #[test]
    fn source_of_chain_composite_reads_the_tail() {
        let (mut data, objects, arrows) = chain(2);
        let f1 = data.gen_term(arrows[0]);
        let f2 = data.gen_term(arrows[1]);
        let c = data.compose(Level::Zero, f2, f1).unwrap();
        assert_eq!(data.source(Level::Zero, c), data.gen_term(objects[0]));
        assert_eq!(data.target(Level::Zero, c), data.gen_term(objects[2]));
    }

    #[test]
    fn one_boundary_of_zero_composite_distributes() {
        // two 2-generators alpha: f1 => g1, beta: f2 => g2 with composable
        // boundaries; src_1(alpha *_0 beta) = src1(alpha) *_0 src1(beta).
        let mut data = GeneratingData::new();
        let a = data.add_object("a").unwrap();
        let b = data.add_object("b").unwrap();
        let c = data.add_object("c").unwrap();
        let f1 = data.add_arrow("f1", a, b).unwrap();
        let g1 = data.add_arrow("g1", a, b).unwrap();
        let f2 = data.add_arrow("f2", b, c).unwrap();
        let g2 = data.add_arrow("g2", b, c).unwrap();
        let (tf1, tg1) = (data.gen_term(f1), data.gen_term(g1));
        let (tf2, tg2) = (data.gen_term(f2), data.gen_term(g2));
        let al = data.add_cell("al", tf1, tg1).unwrap();
        let be = data.add_cell("be", tf2, tg2).unwrap();
        let (tal, tbe) = (data.gen_term(al), data.gen_term(be));
        let comp = data.compose(Level::Zero, tbe, tal).unwrap();
        let expect = data.compose(Level::Zero, tf2, tf1).unwrap();
        assert_eq!(data.source(Level::One, comp), expect);
        assert_eq!(data.grade(comp), 2);
    }

    #[test]
    fn one_cell_is_its_own_identity_at_level_one() {
        let (mut data, _, arrows) = chain(1);
        let f = data.gen_term(arrows[0]);
        assert_eq!(data.target(Level::One, f), f);
        assert_eq!(data.source(Level::One, f), f);
    }

    #[test]
    fn no_unit_collapse_on_loops() {
        let mut data = GeneratingData::new();
        let a = data.add_object("a").unwrap();
        let x = data.add_arrow("x", a, a).unwrap();
        let tx = data.gen_term(x);
        let xx = data.compose(Level::Zero, tx, tx).unwrap();
        assert_ne!(xx, tx);
        let ta = data.gen_term(a);
        let xa = data.compose(Level::Zero, tx, ta).unwrap();
        assert_ne!(xa, tx);
    }

    #[test]
    fn non_composable_cells_error() {
        let mut data = GeneratingData::new();
        let a = data.add_object("a").unwrap();
        let b = data.add_object("b").unwrap();
        let f = data.add_arrow("f", a, b).unwrap();
        let g = data.add_arrow("g", a, b).unwrap();
        let (tf, tg) = (data.gen_term(f), data.gen_term(g));
        let al = data.add_cell("al", tf, tg).unwrap();
        let tal = data.gen_term(al);
        // src_1(al) = f, tgt_1(al) = g, so al *_1 al is undefined.
        match data.compose(Level::One, tal, tal) {
            Err(TermError::NotComposable { level: 1, .. }) => {}
            other => panic!("expected NotComposable, got {other:?}"),
        }
    }

    #[test]
    fn self_composable_cell_composes_at_level_one() {
        let mut data = GeneratingData::new();
        let a = data.add_object("a").unwrap();
        let f = data.add_arrow("f", a, a).unwrap();
        let tf = data.gen_term(f);
        let eta = data.add_cell("eta", tf, tf).unwrap();
        let teta = data.gen_term(eta);
        let c = data.compose(Level::One, teta, teta).unwrap();
        assert_eq!(data.grade(c), 2);
        assert_eq!(data.source(Level::One, c), tf);
    }

    #[test]
    fn single_object_enumeration_counts_bracketings() {
        let mut data = GeneratingData::new();
        data.add_object("a").unwrap();
        let terms = data.enumerate_free(3, 0);
        // a ; (a *0 a) ; two bracketings of three a's.
        let printed: Vec<_> = terms.iter().map(|&t| data.print_term(t)).collect();
        assert_eq!(
            printed,
            vec!["a", "(a *0 a)", "(a *0 (a *0 a))", "((a *0 a) *0 a)"]
        );
    }

    #[test]
    fn full_composition_terms_follow_catalan() {
        for k in 2..=5usize {
            let (mut data, _, arrows) = chain(k);
            let terms = data.enumerate_free(k as u32, 1);
            let full: Vec<_> = terms
                .iter()
                .filter(|&&t| {
                    data.leaves(t) == k as u32 && {
                        let mut seen = vec![false; k];
                        count_arrow_leaves(&data, t, &arrows, &mut seen);
                        seen.iter().all(|&s| s)
                    }
                })
                .collect();
            assert_eq!(full.len() as u64, catalan(k as u64 - 1), "k = {k}");
        }
    }

    fn count_arrow_leaves(
        data: &GeneratingData,
        t: TermId,
        arrows: &[GenId],
        seen: &mut [bool],
    ) {
        match data.node(t) {
            TermNode::Gen(g) => {
                if let Some(pos) = arrows.iter().position(|&a| a == g) {
                    seen[pos] = true;
                }
            }
            TermNode::Comp(_, x, y) => {
                count_arrow_leaves(data, x, arrows, seen);
                count_arrow_leaves(data, y, arrows, seen);
            }
        }
    }

    pub(crate) fn catalan(n: u64) -> u64 {
        // C(n) = (2n)! / (n! (n+1)!)
        let mut c: u64 = 1;
        for i in 0..n {
            c = c * 2 * (2 * i + 1) / (i + 2);
        }
        c
    }

    #[test]
    fn catalan_helper_matches_known_values() {
        let expect = [1u64, 1, 2, 5, 14, 42, 132];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(catalan(n as u64), e);
        }
    }

    #[test]
    fn round_trip_printing_is_stable() {
        let (mut data, _, arrows) = chain(3);
        let f1 = data.gen_term(arrows[0]);
        let f2 = data.gen_term(arrows[1]);
        let f3 = data.gen_term(arrows[2]);
        let c21 = data.compose(Level::Zero, f2, f1).unwrap();
        let c = data.compose(Level::Zero, f3, c21).unwrap();
        assert_eq!(data.print_term(c), "(f3 *0 (f2 *0 f1))");
    }
}
