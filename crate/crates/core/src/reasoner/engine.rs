//! Semi-naive forward chaining over the finite Herbrand base, with
//! derivation provenance for minimal proof extraction.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{Atom, Entailment, Justification, KnowledgeBase, Proof, ProofStep, Rule, Term};

#[derive(Debug, Clone)]
enum Derivation {
    Asserted,
    Rule { rule: usize, premises: Vec<usize> },
}

/// Fact arena in derivation order. The first derivation of an atom wins,
/// which makes proof extraction prefer earlier-derived premises.
struct Saturation {
    atoms: Vec<Atom>,
    provenance: Vec<Derivation>,
    index: HashMap<Atom, usize>,
    by_predicate: HashMap<String, Vec<usize>>,
}

impl Saturation {
    fn insert(&mut self, atom: Atom, derivation: Derivation) -> Option<usize> {
        if self.index.contains_key(&atom) {
            return None;
        }
        let id = self.atoms.len();
        self.index.insert(atom.clone(), id);
        self.by_predicate
            .entry(atom.predicate.clone())
            .or_default()
            .push(id);
        self.atoms.push(atom);
        self.provenance.push(derivation);
        Some(id)
    }

    fn candidates(&self, predicate: &str) -> &[usize] {
        self.by_predicate
            .get(predicate)
            .map_or(&[], |v| v.as_slice())
    }
}

type Subst = HashMap<String, String>;

fn match_atom(pattern: &Atom, fact: &Atom, subst: &mut Subst) -> bool {
    debug_assert_eq!(pattern.predicate, fact.predicate);
    if pattern.args.len() != fact.args.len() {
        return false;
    }
    let mut added: Vec<String> = Vec::new();
    for (p, f) in pattern.args.iter().zip(&fact.args) {
        let value = f.name();
        match p {
            Term::Constant(c) => {
                if c != value {
                    undo(subst, &added);
                    return false;
                }
            }
            Term::Variable(v) => match subst.get(v) {
                Some(bound) if bound != value => {
                    undo(subst, &added);
                    return false;
                }
                Some(_) => {}
                None => {
                    subst.insert(v.clone(), value.to_string());
                    added.push(v.clone());
                }
            },
        }
    }
    true
}

fn undo(subst: &mut Subst, added: &[String]) {
    for v in added {
        subst.remove(v);
    }
}

fn instantiate(atom: &Atom, subst: &Subst) -> Atom {
    Atom::new(
        atom.predicate.clone(),
        atom.args
            .iter()
            .map(|t| match t {
                Term::Constant(c) => Term::Constant(c.clone()),
                Term::Variable(v) => Term::Constant(
                    subst
                        .get(v)
                        .expect("range restriction guarantees bound head variables")
                        .clone(),
                ),
            })
            .collect(),
    )
}

/// One semi-naive join: body position `pivot` is restricted to the delta
/// window `[delta_start, delta_end)`, positions before the pivot see only
/// pre-delta facts, positions after see everything below `delta_end`.
struct Join<'a> {
    sat: &'a Saturation,
    rule_index: usize,
    rule: &'a Rule,
    pivot: usize,
    delta_start: usize,
    delta_end: usize,
}

impl Join<'_> {
    fn run(&self, out: &mut Vec<(Atom, Derivation)>) {
        let mut subst = Subst::new();
        let mut premises = Vec::new();
        self.recurse(0, &mut subst, &mut premises, out);
    }

    fn recurse(
        &self,
        position: usize,
        subst: &mut Subst,
        premises: &mut Vec<usize>,
        out: &mut Vec<(Atom, Derivation)>,
    ) {
        if position == self.rule.body.len() {
            let head = instantiate(&self.rule.head, subst);
            out.push((
                head,
                Derivation::Rule {
                    rule: self.rule_index,
                    premises: premises.clone(),
                },
            ));
            return;
        }
        let pattern = &self.rule.body[position];
        let (lo, hi) = if position < self.pivot {
            (0, self.delta_start)
        } else if position == self.pivot {
            (self.delta_start, self.delta_end)
        } else {
            (0, self.delta_end)
        };
        for &fact_id in self.sat.candidates(&pattern.predicate) {
            if fact_id < lo || fact_id >= hi {
                continue;
            }
            let before: Vec<String> = subst.keys().cloned().collect();
            if match_atom(pattern, &self.sat.atoms[fact_id], subst) {
                premises.push(fact_id);
                self.recurse(position + 1, subst, premises, out);
                premises.pop();
                let added: Vec<String> = subst
                    .keys()
                    .filter(|k| !before.contains(k))
                    .cloned()
                    .collect();
                undo(subst, &added);
            }
        }
    }
}

fn saturate(kb: &KnowledgeBase) -> Saturation {
    let mut sat = Saturation {
        atoms: Vec::new(),
        provenance: Vec::new(),
        index: HashMap::new(),
        by_predicate: HashMap::new(),
    };
    for fact in kb.facts() {
        sat.insert(fact.clone(), Derivation::Asserted);
    }

    let mut delta_start = 0usize;
    let mut delta_end = sat.atoms.len();
    while delta_start < delta_end {
        let mut derived: Vec<(Atom, Derivation)> = Vec::new();
        for (rule_index, rule) in kb.rules().iter().enumerate() {
            for pivot in 0..rule.body.len() {
                Join {
                    sat: &sat,
                    rule_index,
                    rule,
                    pivot,
                    delta_start,
                    delta_end,
                }
                .run(&mut derived);
            }
        }
        delta_start = delta_end;
        for (atom, derivation) in derived {
            sat.insert(atom, derivation);
        }
        delta_end = sat.atoms.len();
    }
    sat
}

/// Every fact in the least fixpoint of `kb`, in derivation order.
pub fn consequences(kb: &KnowledgeBase) -> Vec<Atom> {
    saturate(kb).atoms
}

/// Decide whether `goal` is in the least fixpoint of `kb`. Terminates on
/// every well-formed knowledge base; the proof replays via earlier steps
/// only.
pub fn entails(kb: &KnowledgeBase, goal: &Atom) -> Result<Entailment> {
    if let Some(var) = goal.args.iter().find(|t| t.is_variable()) {
        return Err(Error::NonGroundGoal {
            variable: var.name().to_string(),
        });
    }
    if let Some(expected) = kb.arity(&goal.predicate) {
        if expected != goal.args.len() {
            return Err(Error::ArityConflict {
                predicate: goal.predicate.clone(),
                got: goal.args.len(),
                expected,
            });
        }
    }

    let sat = saturate(kb);
    let Some(&goal_id) = sat.index.get(goal) else {
        return Ok(Entailment::NotEntailed);
    };

    // Walk provenance from the goal, keep only needed facts, and emit them
    // in derivation order so premises always precede their conclusions.
    let mut needed = vec![false; sat.atoms.len()];
    let mut stack = vec![goal_id];
    while let Some(id) = stack.pop() {
        if needed[id] {
            continue;
        }
        needed[id] = true;
        if let Derivation::Rule { premises, .. } = &sat.provenance[id] {
            stack.extend(premises.iter().copied());
        }
    }
    let mut step_of = vec![usize::MAX; sat.atoms.len()];
    let mut steps = Vec::new();
    for id in 0..sat.atoms.len() {
        if !needed[id] {
            continue;
        }
        let justification = match &sat.provenance[id] {
            Derivation::Asserted => Justification::Asserted,
            Derivation::Rule { rule, .. } => Justification::Rule(*rule),
        };
        let premises = match &sat.provenance[id] {
            Derivation::Asserted => Vec::new(),
            Derivation::Rule { premises, .. } => premises.iter().map(|&p| step_of[p]).collect(),
        };
        step_of[id] = steps.len();
        steps.push(ProofStep {
            atom: sat.atoms[id].clone(),
            justification,
            premises,
        });
    }
    // Premises always precede their conclusions in the arena, so the goal
    // carries the largest needed id and lands on the final step.
    debug_assert_eq!(step_of[goal_id], steps.len() - 1);
    Ok(Entailment::Entailed(Proof {
        goal: goal.clone(),
        steps,
    }))
}
