use crate::error::{Error, Result};
use crate::graphs::fsa::Fsa;
use crate::graphs::lexicon::{Lexicon, TokenId};
use crate::graphs::topology::{build_ctc_topology, PhoneGraph};

/// Builds `G_num(W)`: the token sequence's pronunciation as a linear phone
/// chain with optional silence at the start, the end and between tokens,
/// expanded by the CTC topology.
///
/// Taking a silence costs `log(silence_prob)`, skipping it
/// `log(1 - silence_prob)`. An empty `tokens` yields the graph that accepts
/// only blanks and one optional silence.
pub fn build_numerator_graph(tokens: &[TokenId], lex: &Lexicon) -> Result<Fsa> {
    let topo = build_ctc_topology(lex.num_units())?;
    build_numerator_with_topology(tokens, lex, &topo)
}

/// Same as [`build_numerator_graph`] but resolves token strings first.
pub fn build_numerator_graph_from_symbols<S: AsRef<str>>(
    tokens: &[S],
    lex: &Lexicon,
) -> Result<Fsa> {
    let ids = lex.lookup_all(tokens)?;
    build_numerator_graph(&ids, lex)
}

pub(crate) fn build_numerator_with_topology(
    tokens: &[TokenId],
    lex: &Lexicon,
    topo: &Fsa,
) -> Result<Fsa> {
    let take = lex.silence_prob().ln();
    let skip = (1.0 - lex.silence_prob()).ln();
    let sil = lex.silence_phone();

    let mut g = PhoneGraph::default();
    let mut boundary = g.add_state();
    g.set_start(boundary);
    for (i, &tok) in tokens.iter().enumerate() {
        let pron = lex.pronunciation(tok).ok_or(Error::UnknownTokenId(tok.0))?;
        let mut cur = optional_silence(&mut g, boundary, sil, take, skip);
        for &p in pron {
            let next = g.add_state();
            g.add_arc(cur, next, Some(p), 0.0);
            cur = next;
        }
        boundary = cur;
        debug_assert!(i < tokens.len());
    }
    let end = optional_silence(&mut g, boundary, sil, take, skip);
    g.set_final(end, 0.0);
    g.remove_epsilons()?.expand_ctc(topo)
}

fn optional_silence(g: &mut PhoneGraph, from: usize, sil: u32, take: f64, skip: f64) -> usize {
    let after = g.add_state();
    g.add_arc(from, after, Some(sil), take);
    g.add_arc(from, after, None, skip);
    after
}
