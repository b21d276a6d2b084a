//! Mask-based search shared by all learners. Example sets are bit masks over
//! the rows of the underlying matrix, so no data is copied per task.

use rand::seq::index::sample;
use statrs::function::factorial::ln_binomial;

use super::{foil_gain, prune_metric, BinaryTask, LearnerConfig, DL_SLACK_BITS};
use crate::bits::Bits;
use crate::data::{AttributeKind, Column, FeatureMatrix};
use crate::rules::{Check, Literal, Test};
use crate::seed::Rng;

#[derive(Clone, Debug)]
pub(super) struct Cond {
    pub check: Check,
    pub literal: Literal,
}

#[derive(Clone, Debug)]
pub(super) struct Learned {
    pub conds: Vec<Cond>,
    /// Task rows covered by the rule.
    pub mask: Bits,
}

pub(super) struct Engine<'a> {
    m: &'a FeatureMatrix,
    pos: Bits,
    neg: Bits,
    all: Bits,
    max_literals: usize,
    min_gain: f64,
    /// log2 of the candidate-literal count for the empty rule.
    literal_bits: f64,
}

fn used(conds: &[Check], col: usize, slot: u8) -> bool {
    conds.iter().any(|c| c.col == col && c.slot() == slot)
}

fn used_col(conds: &[Check], col: usize) -> bool {
    conds.iter().any(|c| c.col == col)
}

#[inline]
fn masked_count(a: &[u64], b: &[u64], active: &[u32]) -> usize {
    active
        .iter()
        .map(|&w| (a[w as usize] & b[w as usize]).count_ones() as usize)
        .sum()
}

/// Midpoint strictly below `hi`, so that `v > t` separates `lo` from `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) / 2.0;
    if t >= hi {
        lo
    } else {
        t
    }
}

/// Visits every candidate refinement of `conds` in the fixed order
/// (attribute, then Eq0/Eq1 | Gt thresholds ascending, Lt thresholds ascending | levels),
/// passing the positive and negative counts among `cp` / `cn` it would keep.
pub(super) fn for_each_candidate(
    m: &FeatureMatrix,
    conds: &[Cond],
    cp: &Bits,
    cn: &Bits,
    mut visit: impl FnMut(Check, usize, usize),
) {
    let checks: Vec<Check> = conds.iter().map(|c| c.check.clone()).collect();
    let p0 = cp.count();
    let n0 = cn.count();
    let active_p = cp.active_words();
    let active_n = cn.active_words();
    for col in 0..m.width() {
        match (m.column(col), &m.schema().attribute(col).kind) {
            (Column::Binary(bits), _) => {
                if used_col(&checks, col) {
                    continue;
                }
                let on_p = masked_count(cp.words(), bits.words(), &active_p);
                let on_n = masked_count(cn.words(), bits.words(), &active_n);
                visit(
                    Check {
                        col,
                        test: Test::Bit(false),
                    },
                    p0 - on_p,
                    n0 - on_n,
                );
                visit(
                    Check {
                        col,
                        test: Test::Bit(true),
                    },
                    on_p,
                    on_n,
                );
            }
            (Column::Numeric(values), _) => {
                let gt_free = !used(&checks, col, 1);
                let lt_free = !used(&checks, col, 2);
                if !gt_free && !lt_free {
                    continue;
                }
                let mut seen: Vec<(f64, bool)> = cp
                    .iter_ones()
                    .map(|r| (values[r], true))
                    .chain(cn.iter_ones().map(|r| (values[r], false)))
                    .collect();
                seen.sort_by(|a, b| a.0.total_cmp(&b.0));
                // distinct values with their positive / negative multiplicities
                let mut groups: Vec<(f64, usize, usize)> = Vec::new();
                for (v, is_pos) in seen {
                    match groups.last_mut() {
                        Some(g) if g.0 == v => {
                            if is_pos {
                                g.1 += 1
                            } else {
                                g.2 += 1
                            }
                        }
                        _ => groups.push((v, is_pos as usize, (!is_pos) as usize)),
                    }
                }
                if groups.len() < 2 {
                    continue;
                }
                let mut below = Vec::with_capacity(groups.len() - 1);
                let (mut bp, mut bn) = (0, 0);
                for w in groups.windows(2) {
                    bp += w[0].1;
                    bn += w[0].2;
                    below.push((midpoint(w[0].0, w[1].0), bp, bn));
                }
                if gt_free {
                    for &(t, bp, bn) in &below {
                        visit(Check { col, test: Test::Gt(t) }, p0 - bp, n0 - bn);
                    }
                }
                if lt_free {
                    for &(t, bp, bn) in &below {
                        visit(Check { col, test: Test::Lt(t) }, bp, bn);
                    }
                }
            }
            (Column::Categorical(codes), AttributeKind::Categorical { levels }) => {
                if used_col(&checks, col) {
                    continue;
                }
                let mut counts = vec![(0usize, 0usize); levels.len()];
                for r in cp.iter_ones() {
                    counts[codes[r] as usize].0 += 1;
                }
                for r in cn.iter_ones() {
                    counts[codes[r] as usize].1 += 1;
                }
                for (code, (p, n)) in counts.into_iter().enumerate() {
                    visit(
                        Check {
                            col,
                            test: Test::Level(Some(code as u32)),
                        },
                        p,
                        n,
                    );
                }
            }
            _ => unreachable!("matrix columns match their schema"),
        }
    }
}

fn log2_binomial(n: usize, k: usize) -> f64 {
    ln_binomial(n as u64, k as u64) / std::f64::consts::LN_2
}

impl<'a> Engine<'a> {
    pub fn new(task: &BinaryTask<'a>, cfg: &LearnerConfig) -> Self {
        let m = task.data;
        let pos = Bits::from_indices(m.rows(), task.positives.iter().copied());
        let neg = Bits::from_indices(m.rows(), task.negatives.iter().copied());
        let all = pos.or(&neg);
        let mut count = 0usize;
        for_each_candidate(m, &[], &all, &Bits::zeros(m.rows()), |_, _, _| count += 1);
        Engine {
            m,
            pos,
            neg,
            all,
            max_literals: cfg.max_literals_per_rule.unwrap_or(m.width()),
            min_gain: cfg.min_gain,
            literal_bits: if count > 1 { (count as f64).log2() } else { 0.0 },
        }
    }

    pub fn pos(&self) -> &Bits {
        &self.pos
    }

    pub fn neg(&self) -> &Bits {
        &self.neg
    }

    fn restrict(&self, conds: &[Cond], mask: &mut Bits) {
        for c in conds {
            c.check.restrict(self.m, mask);
        }
    }

    /// Task rows covered by a conjunction.
    pub fn cover(&self, conds: &[Cond]) -> Bits {
        let mut mask = self.all.clone();
        self.restrict(conds, &mut mask);
        mask
    }

    pub fn learned(&self, conds: Vec<Cond>) -> Learned {
        let mask = self.cover(&conds);
        Learned { conds, mask }
    }

    fn best_refinement(&self, conds: &[Cond], cp: &Bits, cn: &Bits) -> Option<(Check, f64)> {
        let p0 = cp.count();
        let n0 = cn.count();
        let mut best: Option<(Check, f64)> = None;
        for_each_candidate(self.m, conds, cp, cn, |check, p1, n1| {
            let gain = foil_gain(p0, n0, p1, n1);
            if best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((check, gain));
            }
        });
        best
    }

    /// Adds max-gain literals to `seed` using the examples in `gp` / `gn`.
    pub fn grow(&self, seed: &[Cond], gp: &Bits, gn: &Bits) -> Vec<Cond> {
        let mut conds = seed.to_vec();
        let mut cp = gp.clone();
        let mut cn = gn.clone();
        self.restrict(&conds, &mut cp);
        self.restrict(&conds, &mut cn);
        while cn.any() && cp.any() && conds.len() < self.max_literals {
            let Some((check, gain)) = self.best_refinement(&conds, &cp, &cn) else {
                break;
            };
            if gain <= self.min_gain {
                break;
            }
            check.restrict(self.m, &mut cp);
            check.restrict(self.m, &mut cn);
            let literal = check.to_literal(self.m.schema());
            conds.push(Cond { check, literal });
        }
        conds
    }

    /// Keeps the best-scoring non-empty prefix on (`pp`, `pn`); ties favour the longer one.
    pub fn prune(&self, conds: Vec<Cond>, pp: &Bits, pn: &Bits) -> Vec<Cond> {
        if conds.is_empty() {
            return conds;
        }
        let mut cp = pp.clone();
        let mut cn = pn.clone();
        let mut best = (0, f64::NEG_INFINITY);
        for (k, c) in conds.iter().enumerate() {
            c.check.restrict(self.m, &mut cp);
            c.check.restrict(self.m, &mut cn);
            let score = prune_metric(cp.count(), cn.count());
            if score >= best.1 {
                best = (k + 1, score);
            }
        }
        let mut conds = conds;
        conds.truncate(best.0);
        conds
    }

    fn theory_bits(&self, literals: usize) -> f64 {
        let c = literals as f64;
        0.5 * ((c + 1.0).log2() + c * self.literal_bits)
    }

    fn exception_bits(&self, covered: &Bits) -> f64 {
        let total = self.all.count();
        let cov = covered.and_count(&self.all);
        let fp = covered.and_count(&self.neg);
        let unc = total - cov;
        let fn_ = self.pos.count() - covered.and_count(&self.pos);
        ((cov + 1) as f64).log2() + log2_binomial(cov, fp) + ((unc + 1) as f64).log2() + log2_binomial(unc, fn_)
    }

    fn dl_of<'r>(&self, rules: impl Iterator<Item = &'r Learned>) -> f64 {
        let mut union = Bits::zeros(self.m.rows());
        let mut theory = 0.0;
        for r in rules {
            union.or_assign(&r.mask);
            theory += self.theory_bits(r.conds.len());
        }
        theory + self.exception_bits(&union)
    }

    pub fn dl(&self, rules: &[Learned]) -> f64 {
        self.dl_of(rules.iter())
    }

    /// Stratified grow/prune split of the given positives and negatives.
    fn split(&self, rp: &Bits, rn: &Bits, fraction: f64, rng: &mut Rng) -> (Bits, Bits, Bits, Bits) {
        let p: Vec<usize> = rp.iter_ones().collect();
        let n: Vec<usize> = rn.iter_ones().collect();
        let grow_total = (fraction * (p.len() + n.len()) as f64).round() as usize;
        let grow_p = ((fraction * p.len() as f64).round() as usize).clamp(p.len().min(1), p.len());
        let grow_n = grow_total.saturating_sub(grow_p).min(n.len());
        let rows = self.m.rows();
        let pick = |items: &[usize], k: usize, rng: &mut Rng| {
            let chosen = sample(rng, items.len(), k);
            Bits::from_indices(rows, chosen.into_iter().map(|i| items[i]))
        };
        let gp = pick(&p, grow_p, rng);
        let gn = pick(&n, grow_n, rng);
        let pp = rp.and_not(&gp);
        let pn = rn.and_not(&gn);
        (gp, gn, pp, pn)
    }

    pub fn foil(&self, cap: usize) -> Vec<Learned> {
        let mut rules = Vec::new();
        let mut remaining = self.pos.clone();
        while remaining.any() && rules.len() < cap {
            let conds = self.grow(&[], &remaining, &self.neg);
            let mask = self.cover(&conds);
            let p = mask.and_count(&remaining);
            let n = mask.and_count(&self.neg);
            // a guard stopped growth early: keep only rules that are mostly right
            if p == 0 || (n > 0 && p <= n) {
                break;
            }
            remaining.and_not_assign(&mask);
            rules.push(Learned { conds, mask });
        }
        rules
    }

    pub fn generate(&self, cfg: &LearnerConfig, rng: &mut Rng) -> Vec<Learned> {
        let mut rules: Vec<Learned> = Vec::new();
        let mut best = self.dl(&rules);
        let mut rp = self.pos.clone();
        let mut rn = self.neg.clone();
        while rp.any() && rules.len() < cfg.rule_cap {
            let (gp, gn, pp, pn) = self.split(&rp, &rn, cfg.grow_fraction, rng);
            let conds = self.prune(self.grow(&[], &gp, &gn), &pp, &pn);
            let mask = self.cover(&conds);
            if mask.and_count(&rp) == 0 {
                break;
            }
            rp.and_not_assign(&mask);
            rn.and_not_assign(&mask);
            rules.push(Learned { conds, mask });
            let dl = self.dl(&rules);
            if dl > best + DL_SLACK_BITS {
                self.prune_ruleset(&mut rules, dl);
                break;
            }
            best = best.min(dl);
        }
        rules
    }

    /// Drops rules, last first, whenever doing so lowers the current description length.
    fn prune_ruleset(&self, rules: &mut Vec<Learned>, mut current: f64) {
        for i in (0..rules.len()).rev() {
            let without = self.dl_of(rules.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r));
            if without < current {
                rules.remove(i);
                current = without;
            }
        }
    }

    pub fn optimize(&self, mut rules: Vec<Learned>, cfg: &LearnerConfig, rng: &mut Rng) -> Vec<Learned> {
        for i in 0..rules.len() {
            let mut others = Bits::zeros(self.m.rows());
            for (j, r) in rules.iter().enumerate() {
                if j != i {
                    others.or_assign(&r.mask);
                }
            }
            let punc = self.pos.and_not(&others);
            if !punc.any() {
                continue;
            }
            let nunc = self.neg.and_not(&others);
            let (gp, gn, pp, pn) = self.split(&punc, &nunc, cfg.grow_fraction, rng);
            let replacement = self.learned(self.prune(self.grow(&[], &gp, &gn), &pp, &pn));
            let revision = self.learned(self.prune(self.grow(&rules[i].conds, &gp, &gn), &pp, &pn));
            let score = |candidate: &Learned| {
                self.dl_of(
                    rules
                        .iter()
                        .enumerate()
                        .map(|(j, r)| if j == i { candidate } else { r }),
                )
            };
            let mut chosen = None;
            let mut best = score(&rules[i]);
            for cand in [replacement, revision] {
                let s = score(&cand);
                if s < best {
                    best = s;
                    chosen = Some(cand);
                }
            }
            if let Some(c) = chosen {
                rules[i] = c;
            }
        }
        rules
    }
}
