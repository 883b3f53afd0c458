//! Protocol trees, decision trees, and the refinement that keeps every
//! iteration's rectangle structured.
//!
//! Text grammar shared by protocol and decision-tree files:
//!
//! ```text
//! file     := (comment | header | entry)*
//! comment  := '#' to end of line
//! header   := 'instance' INSTANCE          (a whole line, e.g. "instance n=2 g=index(4)")
//! entry    := ['weight' RATIONAL] tree
//! ptree    := '(' 'L' OUTPUT ')' | '(' ('A'|'B') TABLE ptree ptree ')'
//! dtree    := '(' 'L' OUTPUT ')' | '(' 'Q' COORD dtree dtree ')'
//! OUTPUT   := non-negative integer | 'bot'
//! TABLE    := 0/1 string, one character per input of the speaking player in
//!             encoding order (block 1 most significant)
//! COORD    := 1-based block index
//! ```
//!
//! A file with a single unweighted entry is deterministic; otherwise every entry
//! needs a weight and the weights must sum to one.

mod decision;
mod refine;
mod tree;

pub use decision::{dt_eval, dt_to_protocol, DecisionTree, RandomizedDecisionTree};
pub use refine::{
    AliceBranch, IterationNode, Message, RefinedPart, RefinedProtocol, Step, Transcript, TranscriptOutcome,
};
pub use tree::{leaf_rectangles, run_protocol, Output, PNode, Player, ProtocolTree, RandomizedProtocol};

use crate::error::{Error, Result};
use crate::exact::{parse_q, Q};
use crate::gadget::ComposedInstance;

/// Parsed contents of a tree file before weights are validated.
#[derive(Clone, Debug)]
pub struct TreeFile<T> {
    pub instance: Option<ComposedInstance>,
    pub entries: Vec<(Option<Q>, T)>,
}

impl<T> TreeFile<T> {
    /// Mixture weights; a lone unweighted entry gets weight one.
    pub fn weighted(self) -> Result<Vec<(Q, T)>> {
        if self.entries.len() == 1 && self.entries[0].0.is_none() {
            let (_, t) = self.entries.into_iter().next().expect("one entry");
            return Ok(vec![(num_traits::One::one(), t)]);
        }
        self.entries
            .into_iter()
            .map(|(w, t)| w.map(|w| (w, t)).ok_or_else(|| Error::parse("every entry of a mixture needs a weight")))
            .collect()
    }
}

pub(crate) struct Tokens {
    toks: Vec<String>,
    pos: usize,
}

impl Tokens {
    pub(crate) fn new(text: &str) -> Self {
        let mut toks = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            let mut cur = String::new();
            for ch in line.chars() {
                match ch {
                    '(' | ')' => {
                        if !cur.is_empty() {
                            toks.push(std::mem::take(&mut cur));
                        }
                        toks.push(ch.to_string());
                    }
                    c if c.is_whitespace() => {
                        if !cur.is_empty() {
                            toks.push(std::mem::take(&mut cur));
                        }
                    }
                    c => cur.push(c),
                }
            }
            if !cur.is_empty() {
                toks.push(cur);
            }
        }
        Tokens { toks, pos: 0 }
    }

    pub(crate) fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(String::as_str)
    }

    pub(crate) fn next(&mut self) -> Result<&str> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| Error::parse("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    pub(crate) fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got != want {
            return Err(Error::parse(format!("expected '{want}', found '{got}'")));
        }
        Ok(())
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

pub(crate) fn parse_tree_file<T>(text: &str, mut tree: impl FnMut(&mut Tokens) -> Result<T>) -> Result<TreeFile<T>> {
    let mut instance = None;
    let mut body = String::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("instance") {
            if instance.is_some() {
                return Err(Error::parse("duplicate instance header"));
            }
            let rest = rest.split('#').next().unwrap_or("").trim();
            instance = Some(rest.parse::<ComposedInstance>()?);
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut toks = Tokens::new(&body);
    let mut entries = Vec::new();
    while !toks.is_done() {
        let weight = if toks.peek() == Some("weight") {
            toks.next()?;
            Some(parse_q(toks.next()?)?)
        } else {
            None
        };
        entries.push((weight, tree(&mut toks)?));
    }
    if entries.is_empty() {
        return Err(Error::parse("no tree in input"));
    }
    Ok(TreeFile { instance, entries })
}

/// Renders a mixture in the file grammar; a single weight-one entry is written
/// without a weight.
pub(crate) fn render_tree_file<T: std::fmt::Display>(
    instance: Option<&ComposedInstance>,
    entries: &[(Q, T)],
) -> String {
    let mut out = String::new();
    if let Some(g) = instance {
        out.push_str(&format!("instance {g}\n"));
    }
    let single = entries.len() == 1 && num_traits::One::is_one(&entries[0].0);
    for (w, t) in entries {
        if single {
            out.push_str(&format!("{t}\n"));
        } else {
            out.push_str(&format!("weight {} {t}\n", crate::exact::fmt_q(w)));
        }
    }
    out
}
