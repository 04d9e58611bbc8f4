//! Horn-clause knowledge bases: parsing, forward-chaining entailment,
//! replayable proofs, and natural-language rendering.
//!
//! The fragment is function-free Horn (Datalog-style): unary concept
//! assertions, binary role assertions, and range-restricted rules. Casing
//! decides the term kind — `socrates` is a constant, `X` a variable. The
//! Herbrand base over a knowledge base's constants is finite, so the
//! fixpoint always terminates.

mod engine;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::read_to_string;

pub use engine::{consequences, entails};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(String),
    Variable(String),
}

impl Term {
    /// Uppercase first letter means variable, anything else constant.
    pub fn from_name(name: &str) -> Term {
        if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            Term::Variable(name.to_string())
        } else {
            Term::Constant(name.to_string())
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Constant(n) | Term::Variable(n) => n,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unary concept assertion or binary role assertion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_variable())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

/// Range-restricted Horn rule: every head variable occurs in the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

/// TBox rules plus ground ABox facts, arity-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    rules: Vec<Rule>,
    facts: Vec<Atom>,
    arities: BTreeMap<String, usize>,
}

impl KnowledgeBase {
    /// Parse the textual axiom format. Grammar:
    ///
    /// ```text
    /// Man(socrates).                 # ground fact
    /// spouse(ellen,portia).          # binary fact
    /// Mortal(X) :- Man(X).           # rule
    /// Man subClassOf Mortal.         # sugar for the rule above
    /// ```
    pub fn parse(source: &str) -> Result<KnowledgeBase> {
        parse::parse_kb(source)
    }

    pub fn parse_file(path: &Path) -> Result<KnowledgeBase> {
        Self::parse(&read_to_string(path)?)
    }

    pub(crate) fn from_parts(rules: Vec<Rule>, facts: Vec<Atom>) -> Result<KnowledgeBase> {
        let mut arities = BTreeMap::new();
        let mut check = |atom: &Atom| -> Result<()> {
            match arities.get(&atom.predicate) {
                None => {
                    arities.insert(atom.predicate.clone(), atom.args.len());
                    Ok(())
                }
                Some(&expected) if expected != atom.args.len() => Err(Error::ArityConflict {
                    predicate: atom.predicate.clone(),
                    got: atom.args.len(),
                    expected,
                }),
                Some(_) => Ok(()),
            }
        };
        for rule in &rules {
            check(&rule.head)?;
            for atom in &rule.body {
                check(atom)?;
            }
        }
        for fact in &facts {
            check(fact)?;
        }
        Ok(KnowledgeBase {
            rules,
            facts,
            arities,
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn facts(&self) -> &[Atom] {
        &self.facts
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.arities.get(predicate).copied()
    }

    /// Parse a single ground atom like `Mortal(socrates)` as a query goal.
    pub fn parse_goal(source: &str) -> Result<Atom> {
        parse::parse_goal(source)
    }
}

/// Whether a goal is in the least fixpoint, with a minimal replayable proof.
#[derive(Debug, Clone, PartialEq)]
pub enum Entailment {
    Entailed(Proof),
    NotEntailed,
}

impl Entailment {
    pub fn is_entailed(&self) -> bool {
        matches!(self, Entailment::Entailed(_))
    }

    pub fn proof(&self) -> Option<&Proof> {
        match self {
            Entailment::Entailed(p) => Some(p),
            Entailment::NotEntailed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Asserted,
    /// Index into the knowledge base's rule list.
    Rule(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofStep {
    pub atom: Atom,
    pub justification: Justification,
    /// Indices of earlier steps instantiating the rule body, in body order.
    pub premises: Vec<usize>,
}

/// Replayable derivation: every step is an asserted fact or a rule head
/// whose instantiated body appears at earlier steps; the last step is the
/// goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Proof {
    pub goal: Atom,
    pub steps: Vec<ProofStep>,
}

/// Independent replay validation. Re-derives the substitution for every rule
/// step by matching, without trusting anything the engine recorded beyond
/// the premise pointers.
pub fn verify_proof(kb: &KnowledgeBase, proof: &Proof) -> std::result::Result<(), String> {
    if proof.steps.is_empty() {
        return Err("proof has no steps".to_string());
    }
    for (i, step) in proof.steps.iter().enumerate() {
        if !step.atom.is_ground() {
            return Err(format!("step {i} is not ground: {}", step.atom));
        }
        for &p in &step.premises {
            if p >= i {
                return Err(format!("step {i} cites premise {p} not strictly earlier"));
            }
        }
        match &step.justification {
            Justification::Asserted => {
                if !kb.facts.contains(&step.atom) {
                    return Err(format!(
                        "step {i} claims asserted fact {} not in ABox",
                        step.atom
                    ));
                }
                if !step.premises.is_empty() {
                    return Err(format!("asserted step {i} must not cite premises"));
                }
            }
            Justification::Rule(ri) => {
                let rule = kb
                    .rules
                    .get(*ri)
                    .ok_or_else(|| format!("step {i} cites unknown rule {ri}"))?;
                if rule.body.len() != step.premises.len() {
                    return Err(format!(
                        "step {i}: rule has {} body atoms but {} premises cited",
                        rule.body.len(),
                        step.premises.len()
                    ));
                }
                let mut subst: BTreeMap<&str, &str> = BTreeMap::new();
                for (body_atom, &p) in rule.body.iter().zip(&step.premises) {
                    let premise = &proof.steps[p].atom;
                    if body_atom.predicate != premise.predicate
                        || body_atom.args.len() != premise.args.len()
                    {
                        return Err(format!(
                            "step {i}: body atom {body_atom} does not match premise {premise}"
                        ));
                    }
                    for (pattern, value) in body_atom.args.iter().zip(&premise.args) {
                        match pattern {
                            Term::Constant(c) => {
                                if c != value.name() {
                                    return Err(format!(
                                        "step {i}: constant {c} clashes with {value}"
                                    ));
                                }
                            }
                            Term::Variable(v) => match subst.get(v.as_str()) {
                                None => {
                                    subst.insert(v, value.name());
                                }
                                Some(&bound) if bound != value.name() => {
                                    return Err(format!(
                                        "step {i}: variable {v} bound to both {bound} and {value}"
                                    ));
                                }
                                Some(_) => {}
                            },
                        }
                    }
                }
                // Instantiated head must equal the step's atom.
                if rule.head.predicate != step.atom.predicate
                    || rule.head.args.len() != step.atom.args.len()
                {
                    return Err(format!("step {i}: head predicate mismatch"));
                }
                for (pattern, value) in rule.head.args.iter().zip(&step.atom.args) {
                    let expected = match pattern {
                        Term::Constant(c) => c.as_str(),
                        Term::Variable(v) => subst
                            .get(v.as_str())
                            .copied()
                            .ok_or_else(|| format!("step {i}: unbound head variable {v}"))?,
                    };
                    if expected != value.name() {
                        return Err(format!(
                            "step {i}: head instantiates to {expected}, step claims {value}"
                        ));
                    }
                }
            }
        }
    }
    let last = proof.steps.last().unwrap();
    if last.atom != proof.goal {
        return Err(format!(
            "final step {} does not equal goal {}",
            last.atom, proof.goal
        ));
    }
    Ok(())
}

/// Sentence templates for rendering proofs. Atom templates use `<arg>`,
/// `<arg1>`, `<arg2>` placeholders; rule preambles are keyed by the rule's
/// display string (e.g. `Mortal(X) :- Man(X)`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Lexicon {
    #[serde(default)]
    pub atoms: BTreeMap<String, String>,
    #[serde(default)]
    pub rules: BTreeMap<String, String>,
}

fn capitalize(sentence: &str) -> String {
    let mut chars = sentence.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn render_atom(atom: &Atom, lexicon: &Lexicon) -> String {
    if let Some(template) = lexicon.atoms.get(&atom.predicate) {
        let mut out = template.clone();
        if let Some(first) = atom.args.first() {
            out = out
                .replace("<arg1>", first.name())
                .replace("<arg>", first.name());
        }
        if let Some(second) = atom.args.get(1) {
            out = out.replace("<arg2>", second.name());
        }
        return out;
    }
    match atom.args.len() {
        1 => format!("{} is a {}.", atom.args[0], atom.predicate),
        _ => format!(
            "{}({}) holds.",
            atom.predicate,
            atom.args
                .iter()
                .map(|t| t.name().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn default_preamble(rule: &Rule, lexicon: &Lexicon) -> String {
    let strip = |s: String| s.trim_end_matches('.').to_string();
    let body = rule
        .body
        .iter()
        .map(|a| strip(render_atom(a, lexicon)))
        .collect::<Vec<_>>()
        .join(" and ");
    let head = strip(render_atom(&rule.head, lexicon));
    format!("whenever {body}, {head}.")
}

/// Render a proof as one sentence per step, preceded by one preamble
/// sentence per rule used (in first-use order). Sentence-initial letters
/// are capitalized.
pub fn proof_to_text(kb: &KnowledgeBase, proof: &Proof, lexicon: &Lexicon) -> String {
    let mut sentences: Vec<String> = Vec::new();
    let mut seen_rules: Vec<usize> = Vec::new();
    for step in &proof.steps {
        if let Justification::Rule(ri) = step.justification {
            if !seen_rules.contains(&ri) {
                seen_rules.push(ri);
            }
        }
    }
    for &ri in &seen_rules {
        let rule = &kb.rules[ri];
        let key = rule.to_string();
        let preamble = lexicon
            .rules
            .get(&key)
            .cloned()
            .unwrap_or_else(|| default_preamble(rule, lexicon));
        sentences.push(capitalize(&preamble));
    }
    for step in &proof.steps {
        sentences.push(capitalize(&render_atom(&step.atom, lexicon)));
    }
    sentences.join(" ")
}

/// Binary channel score: 1.0 with a proof when entailed, else 0.0.
pub fn reasoner_channel_score(kb: &KnowledgeBase, goal: &Atom) -> Result<(f64, Option<Proof>)> {
    match entails(kb, goal)? {
        Entailment::Entailed(proof) => Ok((1.0, Some(proof))),
        Entailment::NotEntailed => Ok((0.0, None)),
    }
}

// ---- proof document schema ----------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofStepDoc {
    pub atom: String,
    pub justification: String,
    pub premises: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofDoc {
    pub schema_version: u32,
    pub goal: String,
    pub steps: Vec<ProofStepDoc>,
    pub rendered: String,
}

pub const PROOF_SCHEMA_VERSION: u32 = 1;

impl ProofDoc {
    pub fn from_proof(kb: &KnowledgeBase, proof: &Proof, lexicon: &Lexicon) -> Self {
        let steps = proof
            .steps
            .iter()
            .map(|step| ProofStepDoc {
                atom: step.atom.to_string(),
                justification: match &step.justification {
                    Justification::Asserted => "asserted".to_string(),
                    Justification::Rule(ri) => kb.rules[*ri].to_string(),
                },
                premises: step.premises.clone(),
            })
            .collect();
        ProofDoc {
            schema_version: PROOF_SCHEMA_VERSION,
            goal: proof.goal.to_string(),
            steps,
            rendered: proof_to_text(kb, proof, lexicon),
        }
    }
}
