//! Analytic time/space accounting for one wave layer against a
//! self-attention reference, plus the wave layer's parameter count.

use serde::Serialize;
use std::collections::BTreeMap;

/// `coef · n^n_pow · d^d_pow`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Term {
    pub coef: u64,
    pub n_pow: u32,
    pub d_pow: u32,
}

impl Term {
    pub const fn new(coef: u64, n_pow: u32, d_pow: u32) -> Self {
        Self { coef, n_pow, d_pow }
    }

    pub fn degree(&self) -> u32 {
        self.n_pow + self.d_pow
    }

    pub fn eval(&self, n: u64, d: u64) -> u64 {
        self.coef * n.pow(self.n_pow) * d.pow(self.d_pow)
    }

    /// Human-readable monomial such as `2·n·d^2`.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if self.coef != 1 || (self.n_pow == 0 && self.d_pow == 0) {
            parts.push(self.coef.to_string());
        }
        for (sym, p) in [("n", self.n_pow), ("d", self.d_pow)] {
            match p {
                0 => {}
                1 => parts.push(sym.to_string()),
                _ => parts.push(format!("{sym}^{p}")),
            }
        }
        parts.join("·")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub name: &'static str,
    pub time: Vec<Term>,
    pub space: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelCost {
    pub stages: Vec<Stage>,
    pub time_total: u64,
    pub space_total: u64,
    /// Like terms merged, highest total degree only.
    pub time_dominant: Vec<Term>,
    pub space_dominant: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub n: u64,
    pub d: u64,
    pub wave: ModelCost,
    pub attention: ModelCost,
    /// Smallest `n` at which attention time `n²·d` exceeds wave time `n·d²`.
    pub crossover_n: u64,
}

const N: u32 = 1;

fn t(coef: u64, n_pow: u32, d_pow: u32) -> Term {
    Term::new(coef, n_pow, d_pow)
}

pub fn wave_stages() -> Vec<Stage> {
    vec![
        Stage { name: "source_target", time: vec![t(1, N, 2)], space: vec![t(1, 0, 2), t(1, N, 1)] },
        Stage { name: "to_complex", time: vec![t(1, N, 1)], space: vec![t(1, N, 1)] },
        Stage { name: "combine", time: vec![t(1, N, 1)], space: vec![t(1, N, 1)] },
        Stage { name: "feed_forward", time: vec![t(1, N, 2)], space: vec![t(1, 0, 2), t(1, N, 1)] },
        Stage { name: "normalization", time: vec![t(1, N, 1)], space: vec![t(1, 0, 1)] },
        Stage { name: "to_embedding", time: vec![t(1, N, 1)], space: vec![t(1, N, 1)] },
    ]
}

pub fn attention_stages() -> Vec<Stage> {
    vec![Stage { name: "self_attention", time: vec![t(1, 2, 1)], space: vec![t(1, 2, 0), t(1, 1, 1), t(1, 0, 2)] }]
}

/// Merges like monomials and keeps those of the highest total degree,
/// ordered by descending `n` power.
pub fn dominant_terms<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Vec<Term> {
    let mut merged: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for term in terms {
        *merged.entry((term.n_pow, term.d_pow)).or_default() += term.coef;
    }
    let top = merged.keys().map(|(a, b)| a + b).max().unwrap_or(0);
    merged
        .into_iter()
        .rev()
        .filter(|((a, b), _)| a + b == top)
        .map(|((n_pow, d_pow), coef)| Term { coef, n_pow, d_pow })
        .collect()
}

fn cost(stages: Vec<Stage>, n: u64, d: u64) -> ModelCost {
    let time_total = stages.iter().flat_map(|s| &s.time).map(|x| x.eval(n, d)).sum();
    let space_total = stages.iter().flat_map(|s| &s.space).map(|x| x.eval(n, d)).sum();
    let time_dominant = dominant_terms(stages.iter().flat_map(|s| &s.time));
    let space_dominant = dominant_terms(stages.iter().flat_map(|s| &s.space));
    ModelCost { stages, time_total, space_total, time_dominant, space_dominant }
}

pub fn complexity_report(n: u64, d: u64) -> ComplexityReport {
    ComplexityReport {
        n,
        d,
        wave: cost(wave_stages(), n, d),
        attention: cost(attention_stages(), n, d),
        crossover_n: d + 1,
    }
}

/// The figure printed alongside the `(d²+d)·4` formula for `d = 768`.
pub const PUBLISHED_TOTAL_768: u64 = 2_365_184;

/// Wave-layer parameter accounting.
///
/// `formula_total` is the closed form `(d²+d)·4`, which counts the two
/// projections plus a feed-forward block assumed to cost another `2(d²+d)`
/// and leaves normalisation out. `implementation_total` itemises what the
/// model actually allocates: a `d→4d→d` feed-forward costs `8d²+5d` and the
/// two normalisations `2·2d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    pub d: u64,
    pub source_target: u64,
    pub feed_forward_stated: u64,
    pub feed_forward_actual: u64,
    pub normalization: u64,
    pub formula_total: u64,
    pub implementation_total: u64,
    /// Only known for `d = 768`.
    pub published_total: Option<u64>,
    /// `published_total − formula_total`.
    pub published_discrepancy: Option<i64>,
}

pub fn count_params(d: u64) -> ParamCount {
    let linear = d * d + d;
    let source_target = 2 * linear;
    let feed_forward_actual = (4 * d * d + 4 * d) + (4 * d * d + d);
    let normalization = 2 * 2 * d;
    let formula_total = 4 * linear;
    let published_total = (d == 768).then_some(PUBLISHED_TOTAL_768);
    ParamCount {
        d,
        source_target,
        feed_forward_stated: 2 * linear,
        feed_forward_actual,
        normalization,
        formula_total,
        implementation_total: source_target + feed_forward_actual + normalization,
        published_total,
        published_discrepancy: published_total.map(|p| p as i64 - formula_total as i64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes(terms: &[Term]) -> Vec<(u32, u32)> {
        terms.iter().map(|t| (t.n_pow, t.d_pow)).collect()
    }

    #[test]
    fn unit_sizes_make_every_term_one() {
        let r = complexity_report(1, 1);
        for s in r.wave.stages.iter().chain(&r.attention.stages) {
            for term in s.time.iter().chain(&s.space) {
                assert_eq!(term.eval(1, 1), 1);
            }
        }
        assert_eq!(r.wave.time_total, 6);
        assert_eq!(r.wave.space_total, 8);
    }

    #[test]
    fn dominant_terms_by_layer() {
        let r = complexity_report(64, 768);
        assert_eq!(r.wave.time_dominant, vec![t(2, 1, 2)]);
        assert_eq!(shapes(&r.wave.space_dominant), vec![(1, 1), (0, 2)]);
        assert_eq!(shapes(&r.attention.time_dominant), vec![(2, 1)]);
        assert_eq!(shapes(&r.attention.space_dominant), vec![(2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn hand_summed_totals() {
        let r = complexity_report(64, 768);
        // 2·64·768² + 4·64·768
        assert_eq!(r.wave.time_total, 75_694_080);
        // 2·768² + 5·64·768 + 768
        assert_eq!(r.wave.space_total, 1_426_176);
        assert_eq!(r.attention.time_total, 64 * 64 * 768);
        assert_eq!(r.attention.space_total, 64 * 64 + 64 * 768 + 768 * 768);
    }

    #[test]
    fn crossover() {
        let r = complexity_report(10, 768);
        assert_eq!(r.crossover_n, 769);
        let time = |n: u64| complexity_report(n, 768);
        assert!(time(769).attention.time_total > 769 * 768 * 768);
        assert!(time(768).attention.time_total <= 768 * 768 * 768);
    }

    #[test]
    fn totals_are_monotone() {
        for n in 1..20 {
            for d in 1..20 {
                let base = complexity_report(n, d);
                for next in [complexity_report(n + 1, d), complexity_report(n, d + 1)] {
                    assert!(next.wave.time_total >= base.wave.time_total);
                    assert!(next.wave.space_total >= base.wave.space_total);
                    assert!(next.attention.time_total >= base.attention.time_total);
                    assert!(next.attention.space_total >= base.attention.space_total);
                }
            }
        }
    }

    #[test]
    fn render() {
        assert_eq!(t(2, 1, 2).render(), "2·n·d^2");
        assert_eq!(t(1, 0, 0).render(), "1");
        assert_eq!(t(1, 2, 0).render(), "n^2");
    }

    #[test]
    fn formula_values() {
        assert_eq!(count_params(1).formula_total, 8);
        assert_eq!(count_params(2).formula_total, 24);
        let big = count_params(768);
        assert_eq!(big.formula_total, 2_362_368);
        assert_eq!(big.published_total, Some(2_365_184));
        assert_eq!(big.published_discrepancy, Some(2_816));
        assert_eq!(count_params(64).published_total, None);
    }

    #[test]
    fn itemised_total() {
        for d in [1u64, 3, 768] {
            let c = count_params(d);
            assert_eq!(c.implementation_total, 10 * d * d + 11 * d);
            assert_eq!(c.source_target + c.feed_forward_stated, c.formula_total);
        }
    }
}
