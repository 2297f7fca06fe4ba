use log::warn;

use crate::decoders::hypothesis::LFMMI_RESCORE;
use crate::decoders::nbest::{sort_entries, NBestList};
use crate::error::Result;
use crate::forward::{forward_score, EmissionMatrix};
use crate::graphs::{build_ctc_topology, build_numerator_with_topology, Fsa, Lexicon};
use crate::semiring::weighted;

/// Adds `lambda * term[i]` to entry `i` and re-ranks. `lambda == 0` returns
/// the list unchanged.
pub fn rescore_with_terms(nbest: &NBestList, terms: &[f64], lambda: f64) -> NBestList {
    assert_eq!(terms.len(), nbest.entries.len(), "one term per entry");
    if lambda == 0.0 {
        return nbest.clone();
    }
    let mut out = nbest.clone();
    for (e, &term) in out.entries.iter_mut().zip(terms) {
        let add = weighted(lambda, term);
        e.total += add;
        e.breakdown.add(LFMMI_RESCORE, add);
    }
    sort_entries(&mut out.entries);
    out
}

/// Re-ranks an N-best list by `total + lambda * log P(O | G_num(W))`.
///
/// The denominator is shared by every hypothesis of an utterance and does
/// not change the ranking; pass `g_den` to report true log-posteriors
/// instead of numerator scores. Entries whose numerator admits no path get
/// a `-inf` term and sink to the bottom.
pub fn lfmmi_rescore(
    nbest: &NBestList,
    emissions: &EmissionMatrix,
    lex: &Lexicon,
    g_den: Option<&Fsa>,
    lambda: f64,
) -> Result<NBestList> {
    if lambda == 0.0 {
        return Ok(nbest.clone());
    }
    let topo = build_ctc_topology(lex.num_units())?;
    let den = g_den.map(|g| forward_score(g, emissions)).transpose()?;
    let mut infeasible = 0;
    let terms = nbest
        .entries
        .iter()
        .map(|e| {
            let ids = lex.lookup_all(&e.tokens)?;
            let g = build_numerator_with_topology(&ids, lex, &topo)?;
            let num = forward_score(&g, emissions)?;
            if num == f64::NEG_INFINITY {
                infeasible += 1;
                return Ok(f64::NEG_INFINITY);
            }
            Ok(num - den.unwrap_or(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = rescore_with_terms(nbest, &terms, lambda);
    if infeasible > 0 {
        warn!("{}: {infeasible} hypotheses have no numerator path", nbest.utt_id);
        out.warnings.push(format!(
            "{infeasible} hypotheses admit no numerator path and were demoted"
        ));
    }
    Ok(out)
}
