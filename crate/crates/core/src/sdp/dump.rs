//! JSON debug dump of a problem. Complex numbers are `[re, im]` pairs.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Constraint, LinearFunctional, Relation, SdpProblem, Sense, SparseHermitian};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct BlockTerm {
    block: usize,
    entries: Vec<(usize, usize, [f64; 2])>,
}

#[derive(Serialize, Deserialize)]
struct Functional {
    blocks: Vec<BlockTerm>,
    #[serde(default)]
    free: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintDoc {
    #[serde(flatten)]
    functional: Functional,
    relation: Relation,
    rhs: f64,
}

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    blocks: Vec<usize>,
    #[serde(default)]
    free_vars: usize,
    #[serde(default = "default_sense")]
    sense: Sense,
    objective: Vec<BlockTerm>,
    #[serde(default)]
    objective_free: Vec<(usize, f64)>,
    constraints: Vec<ConstraintDoc>,
}

fn default_sense() -> Sense {
    Sense::Minimize
}

fn to_doc(f: &LinearFunctional) -> Functional {
    Functional {
        blocks: f
            .blocks
            .iter()
            .map(|(k, a)| BlockTerm {
                block: *k,
                entries: a.entries().iter().map(|&(r, c, v)| (r, c, [v.re, v.im])).collect(),
            })
            .collect(),
        free: f.free.clone(),
    }
}

fn from_doc(f: Functional, dims: &[usize]) -> Result<LinearFunctional> {
    let mut blocks = Vec::with_capacity(f.blocks.len());
    for term in f.blocks {
        let dim = *dims
            .get(term.block)
            .ok_or_else(|| Error::Parse(format!("unknown block {}", term.block)))?;
        let entries = term.entries.into_iter().map(|(r, c, [re, im])| (r, c, Complex64::new(re, im)));
        blocks.push((term.block, SparseHermitian::from_entries(dim, entries)?));
    }
    Ok(LinearFunctional { blocks, free: f.free })
}

pub fn write_problem<W: Write>(p: &SdpProblem, w: W) -> Result<()> {
    let doc = ProblemDoc {
        blocks: p.blocks.clone(),
        free_vars: p.free_vars,
        sense: p.sense,
        objective: to_doc(&p.objective).blocks,
        objective_free: p.objective.free.clone(),
        constraints: p
            .constraints
            .iter()
            .map(|c| ConstraintDoc { functional: to_doc(&c.functional), relation: c.relation, rhs: c.rhs })
            .collect(),
    };
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

pub fn read_problem<R: Read>(r: R) -> Result<SdpProblem> {
    let doc: ProblemDoc = serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))?;
    let objective = from_doc(Functional { blocks: doc.objective, free: doc.objective_free }, &doc.blocks)?;
    let mut constraints = Vec::with_capacity(doc.constraints.len());
    for c in doc.constraints {
        constraints.push(Constraint {
            functional: from_doc(c.functional, &doc.blocks)?,
            rhs: c.rhs,
            relation: c.relation,
        });
    }
    let p = SdpProblem { blocks: doc.blocks, free_vars: doc.free_vars, objective, constraints, sense: doc.sense };
    p.validate()?;
    Ok(p)
}
