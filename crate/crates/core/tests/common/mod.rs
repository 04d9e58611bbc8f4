//! Shared oracles for integration tests. Everything here is intentionally
//! independent of the implementation paths it checks: the fixpoint oracle
//! grounds rules exhaustively, the path oracle enumerates candidate node
//! sequences, and the gradient oracle is central finite differences.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::collections::HashMap;

use evigraph::graph::PropertyGraph;
use evigraph::reasoner::{Atom, KnowledgeBase, Rule, Term};
use evigraph::rng::Rng;

/// Naive bottom-up fixpoint: instantiate every rule over every constant
/// combination until saturation.
pub fn naive_fixpoint(kb: &KnowledgeBase) -> BTreeSet<Atom> {
    let mut constants: Vec<String> = Vec::new();
    {
        let mut note = |t: &Term| {
            if let Term::Constant(c) = t {
                if !constants.contains(c) {
                    constants.push(c.clone());
                }
            }
        };
        for fact in kb.facts() {
            fact.args.iter().for_each(&mut note);
        }
        for rule in kb.rules() {
            rule.head.args.iter().for_each(&mut note);
            for atom in &rule.body {
                atom.args.iter().for_each(&mut note);
            }
        }
    }
    let mut facts: BTreeSet<Atom> = kb.facts().iter().cloned().collect();
    if constants.is_empty() {
        return facts;
    }
    loop {
        let mut added = false;
        for rule in kb.rules() {
            for subst in all_substitutions(rule, &constants) {
                let ground = |atom: &Atom| -> Atom {
                    Atom::new(
                        atom.predicate.clone(),
                        atom.args
                            .iter()
                            .map(|t| match t {
                                Term::Constant(c) => Term::Constant(c.clone()),
                                Term::Variable(v) => Term::Constant(subst[v.as_str()].clone()),
                            })
                            .collect(),
                    )
                };
                if rule.body.iter().all(|b| facts.contains(&ground(b)))
                    && facts.insert(ground(&rule.head))
                {
                    added = true;
                }
            }
        }
        if !added {
            return facts;
        }
    }
}

fn all_substitutions(rule: &Rule, constants: &[String]) -> Vec<HashMap<String, String>> {
    let mut vars: Vec<String> = Vec::new();
    for atom in std::iter::once(&rule.head).chain(&rule.body) {
        for term in &atom.args {
            if let Term::Variable(v) = term {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut assignment = vec![0usize; vars.len()];
    loop {
        out.push(
            vars.iter()
                .zip(&assignment)
                .map(|(v, &i)| (v.clone(), constants[i].clone()))
                .collect(),
        );
        let mut pos = 0;
        loop {
            if pos == assignment.len() {
                return out;
            }
            assignment[pos] += 1;
            if assignment[pos] < constants.len() {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Random Horn KB within the acceptance bounds: up to 8 constants, up to 10
/// rules, up to 6 predicates of arity 1 or 2.
pub fn random_kb(rng: &mut Rng) -> KnowledgeBase {
    loop {
        let n_constants = 2 + rng.index(7); // 2..=8
        let constants: Vec<String> = (0..n_constants).map(|i| format!("c{i}")).collect();
        let n_preds = 2 + rng.index(5); // 2..=6
        let arities: Vec<usize> = (0..n_preds).map(|_| 1 + rng.index(2)).collect();
        let vars = ["X", "Y", "Z"];

        let mut source = String::new();
        let n_facts = 2 + rng.index(7);
        for _ in 0..n_facts {
            let p = rng.index(n_preds);
            let args: Vec<&str> = (0..arities[p])
                .map(|_| constants[rng.index(n_constants)].as_str())
                .collect();
            source.push_str(&format!("p{p}({}).\n", args.join(",")));
        }
        let n_rules = 1 + rng.index(10);
        for _ in 0..n_rules {
            let n_body = 1 + rng.index(3);
            let mut body_vars: Vec<&str> = Vec::new();
            let mut body = Vec::new();
            for _ in 0..n_body {
                let p = rng.index(n_preds);
                let args: Vec<String> = (0..arities[p])
                    .map(|_| {
                        if rng.next_f64() < 0.7 {
                            let v = vars[rng.index(3)];
                            if !body_vars.contains(&v) {
                                body_vars.push(v);
                            }
                            v.to_string()
                        } else {
                            constants[rng.index(n_constants)].clone()
                        }
                    })
                    .collect();
                body.push(format!("p{p}({})", args.join(",")));
            }
            let hp = rng.index(n_preds);
            let head_args: Vec<String> = (0..arities[hp])
                .map(|_| {
                    if !body_vars.is_empty() && rng.next_f64() < 0.8 {
                        body_vars[rng.index(body_vars.len())].to_string()
                    } else {
                        constants[rng.index(n_constants)].clone()
                    }
                })
                .collect();
            source.push_str(&format!(
                "p{hp}({}) :- {}.\n",
                head_args.join(","),
                body.join(", ")
            ));
        }
        if let Ok(kb) = KnowledgeBase::parse(&source) {
            return kb;
        }
        // Arity clash between generated atoms; draw again.
    }
}

/// Every ground atom formable from the KB's predicates and constants.
pub fn herbrand_base(kb: &KnowledgeBase) -> Vec<Atom> {
    let mut constants: BTreeSet<String> = BTreeSet::new();
    let mut predicates: Vec<(String, usize)> = Vec::new();
    let mut note_atom = |atom: &Atom| {
        if !predicates.iter().any(|(p, _)| p == &atom.predicate) {
            predicates.push((atom.predicate.clone(), atom.args.len()));
        }
        for t in &atom.args {
            if let Term::Constant(c) = t {
                constants.insert(c.clone());
            }
        }
    };
    for f in kb.facts() {
        note_atom(f);
    }
    for r in kb.rules() {
        note_atom(&r.head);
        for b in &r.body {
            note_atom(b);
        }
    }
    let constants: Vec<String> = constants.into_iter().collect();
    let mut out = Vec::new();
    for (pred, arity) in predicates {
        if arity == 1 {
            for c in &constants {
                out.push(Atom::new(pred.clone(), vec![Term::Constant(c.clone())]));
            }
        } else {
            for a in &constants {
                for b in &constants {
                    out.push(Atom::new(
                        pred.clone(),
                        vec![Term::Constant(a.clone()), Term::Constant(b.clone())],
                    ));
                }
            }
        }
    }
    out
}

/// All simple node sequences from `u` to `v` with at most `max_len` edges:
/// generate every ordered selection of distinct intermediate nodes, then
/// validate every hop against the adjacency matrix. Shares no traversal
/// logic with the implementation. Sorted by (length, lexicographic
/// sequence) to match the ranking contract.
pub fn brute_force_simple_paths(
    adjacency: &[Vec<bool>],
    u: usize,
    v: usize,
    max_len: usize,
) -> Vec<Vec<usize>> {
    fn extend(
        others: &[usize],
        chosen: &mut Vec<usize>,
        max_mid: usize,
        u: usize,
        v: usize,
        adjacency: &[Vec<bool>],
        out: &mut Vec<Vec<usize>>,
    ) {
        let mut seq = Vec::with_capacity(chosen.len() + 2);
        seq.push(u);
        seq.extend_from_slice(chosen);
        seq.push(v);
        if seq.windows(2).all(|w| adjacency[w[0]][w[1]]) {
            out.push(seq);
        }
        if chosen.len() == max_mid {
            return;
        }
        for &candidate in others {
            if !chosen.contains(&candidate) {
                chosen.push(candidate);
                extend(others, chosen, max_mid, u, v, adjacency, out);
                chosen.pop();
            }
        }
    }

    let n = adjacency.len();
    let others: Vec<usize> = (0..n).filter(|&x| x != u && x != v).collect();
    let max_mid = max_len.saturating_sub(1).min(others.len());
    let mut out = Vec::new();
    if max_len >= 1 {
        let mut chosen = Vec::new();
        extend(&others, &mut chosen, max_mid, u, v, adjacency, &mut out);
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Random undirected graph as TSV text plus its adjacency matrix.
pub fn random_graph_tsv(
    rng: &mut Rng,
    n: usize,
    edge_prob: f64,
    feature_dim: usize,
) -> (String, String, Vec<Vec<bool>>) {
    let mut nodes = String::from("id\tlabel\tfeatures\n");
    for i in 0..n {
        let feats: Vec<String> = (0..feature_dim)
            .map(|_| format!("{:.3}", rng.uniform(-1.0, 1.0)))
            .collect();
        nodes.push_str(&format!("v{i}\t\t{}\n", feats.join(",")));
    }
    let mut edges = String::from("src_id\trelation\tdst_id\n");
    let mut matrix = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.next_f64() < edge_prob {
                edges.push_str(&format!("v{i}\tr\tv{j}\n"));
                matrix[i][j] = true;
                matrix[j][i] = true;
            }
        }
    }
    (nodes, edges, matrix)
}

/// Undirected BFS distances from `start` over an adjacency matrix.
pub fn bfs_distances(matrix: &[Vec<bool>], start: usize) -> Vec<Option<usize>> {
    let n = matrix.len();
    let mut dist = vec![None; n];
    dist[start] = Some(0);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for v in 0..n {
            if matrix[u][v] && dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn connected(matrix: &[Vec<bool>]) -> bool {
    bfs_distances(matrix, 0).iter().all(|d| d.is_some())
}

/// The mask-learning bridge fixture shared by acceptance criterion 4:
/// exactly one edge (index 0, m-v) carries all signal for the pair (0, 2).
pub fn bridge_fixture() -> (PropertyGraph, evigraph::gnn::GnnModel) {
    let g = PropertyGraph::from_tsv(
        "id\tlabel\tfeatures\nu\t\t1.0,0.0\nm\t\t3.0,0.0\nv\t\t0.0,0.0\nd1\t\t-1.0,0.0\nd2\t\t-0.5,0.0\n",
        "src_id\trelation\tdst_id\nm\tr\tv\nv\tr\td1\nu\tr\td2\n",
    )
    .unwrap();
    let model = evigraph::gnn::GnnModel::from_parts(
        vec![evigraph::gnn::Layer {
            weight: evigraph::gnn::Matrix::identity(2),
            bias: vec![0.0; 2],
        }],
        vec![0.0, 0.0, 1.0, 1.0],
        0,
    )
    .unwrap();
    (g, model)
}

/// Relative error with an absolute floor, for finite-difference checks.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-4);
    (analytic - numeric).abs() / denom
}
