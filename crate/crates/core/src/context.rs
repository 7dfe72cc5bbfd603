//! Sub-sentence construction around kept entity spans.
//!
//! A window heuristic stands in for dependency parsing. Left of an anchor it
//! takes up to [`LEFT_CONTEXT_CAP`] modifier tokens (quantities, numbers,
//! plain words). Right of an anchor it follows a connector word ("to play
//! videogames") until a boundary. Boundary and connector lists come from the
//! lexicon.

use serde::{Deserialize, Serialize};

use crate::extraction::EntitySpan;
use crate::text::{LexiconConfig, Token, TokenKind};

pub const LEFT_CONTEXT_CAP: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSentence {
    pub anchor: EntitySpan,
    /// Indices outside the anchor, ascending.
    pub context_token_indices: Vec<usize>,
    pub rendered: String,
}

impl SubSentence {
    /// Anchor and context indices in sentence order.
    pub fn token_indices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = (self.anchor.token_range.start..self.anchor.token_range.end)
            .chain(self.context_token_indices.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }
}

struct Window<'a> {
    tokens: &'a [Token],
    kept: &'a [EntitySpan],
    lexicon: &'a LexiconConfig,
}

impl Window<'_> {
    fn in_span(&self, i: usize) -> bool {
        self.kept.iter().any(|s| s.token_range.contains(i))
    }

    fn is_stop(&self, i: usize) -> bool {
        let t = &self.tokens[i];
        t.kind == TokenKind::Punctuation || self.lexicon.is_boundary(&t.normalized) || self.in_span(i)
    }

    fn is_connector(&self, i: usize) -> bool {
        self.tokens[i].kind == TokenKind::Word && self.lexicon.is_connector(&self.tokens[i].normalized)
    }

    fn left(&self, anchor_start: usize) -> Vec<usize> {
        let mut cursor = anchor_start;
        // "<quantity> of <anchor>": step over the connector, keep the quantity
        if cursor >= 2
            && self.is_connector(cursor - 1)
            && self.tokens[cursor - 2].is_numeric()
            && !self.in_span(cursor - 2)
        {
            cursor -= 1;
        }
        let mut taken = Vec::new();
        while taken.len() < LEFT_CONTEXT_CAP && cursor > 0 {
            let i = cursor - 1;
            if self.is_stop(i) || self.is_connector(i) {
                break;
            }
            taken.push(i);
            cursor = i;
        }
        taken.reverse();
        taken
    }

    fn right(&self, anchor_end: usize) -> Vec<usize> {
        if anchor_end >= self.tokens.len() || !self.is_connector(anchor_end) || self.in_span(anchor_end) {
            return Vec::new();
        }
        let mut taken = vec![anchor_end];
        let mut i = anchor_end + 1;
        while i < self.tokens.len() && !self.is_stop(i) {
            taken.push(i);
            i += 1;
        }
        taken
    }
}

/// One sub-sentence per kept span, in input order.
pub fn build_subsentences(tokens: &[Token], kept: &[EntitySpan], lexicon: &LexiconConfig) -> Vec<SubSentence> {
    let window = Window { tokens, kept, lexicon };
    kept.iter()
        .map(|span| {
            let mut context = window.left(span.token_range.start);
            context.extend(window.right(span.token_range.end));
            let mut sub = SubSentence {
                anchor: span.clone(),
                context_token_indices: context,
                rendered: String::new(),
            };
            sub.rendered = sub
                .token_indices()
                .iter()
                .map(|&i| tokens[i].normalized.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            sub
        })
        .collect()
}
