//! Workload runners: static query lists, the greedy adaptive adversary and
//! insert/delete scripts.
//!
//! Oracle values come from brute-force summation over the structure's
//! current dataset, never from the estimator itself.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::Mode;
use super::report::{relative_error, Contract, Report, ReportRow};
use super::structure::Structure;
use crate::dataset::{norm, PointId};
use crate::error::{Error, Result};
use crate::oracle::pse_bruteforce;

pub fn contract(s: &Structure) -> Contract {
    Contract {
        accuracy: s.spec().accuracy(),
        tau: s.spec().tau,
    }
}

fn timed_row(s: &Structure, qid: usize, q: &[f64], rng: &mut ChaCha8Rng) -> Result<ReportRow> {
    let start = Instant::now();
    let est = s.query(q, rng)?;
    let micros = start.elapsed().as_micros() as u64;
    let oracle = pse_bruteforce(s.dataset(), s.kernel(), q)?;
    Ok(ReportRow {
        qid,
        mode: s.mode(),
        estimate: est.value,
        oracle,
        rel_err: relative_error(est.value, oracle),
        zero_flag: est.zero_flag,
        samples: est.samples_used,
        micros,
    })
}

/// Queries every point in order with one generator seeded from `seed`.
pub fn run_queries(s: &Structure, queries: &[Vec<f64>], seed: u64) -> Result<Report> {
    let dim = s.dataset().dim();
    if let Some(q) = queries.iter().find(|q| q.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: q.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Report::new(contract(s));
    for (qid, q) in queries.iter().enumerate() {
        report.rows.push(timed_row(s, qid, q, &mut rng)?);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarySettings {
    pub rounds: usize,
    /// Perturbation radius `ρ`.
    pub radius: f64,
    /// Candidates per round, including the previous worst query.
    pub candidates: usize,
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub query: Vec<f64>,
    pub answer: f64,
    pub oracle: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryState {
    pub radius: f64,
    pub candidates: usize,
    /// Every probe, grouped by round.
    pub history: Vec<Vec<Probe>>,
}

impl AdversaryState {
    /// The worst probe of the most recent round.
    pub fn worst(&self) -> Option<&Probe> {
        self.history.last().and_then(|round| worst_of(round))
    }
}

fn worst_of(round: &[Probe]) -> Option<&Probe> {
    round.iter().reduce(|a, b| if b.rel_err > a.rel_err { b } else { a })
}

/// Uniform point in the unit ball.
pub fn random_ball_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let dir = random_direction(dim, rng);
    let r = rng.random::<f64>().powf(1.0 / dim as f64);
    dir.into_iter().map(|v| v * r).collect()
}

fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Radial projection onto the unit ball.
pub fn project_to_ball(mut q: Vec<f64>) -> Vec<f64> {
    let n = norm(&q);
    if n > 1.0 {
        q.iter_mut().for_each(|v| *v /= n);
        // Division can leave the norm a few ulps above one.
        while q.iter().map(|v| v * v).sum::<f64>() > 1.0 {
            q.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
        }
    }
    q
}

/// Greedy worst-error hill climbing against an Adam-Hash structure.
///
/// Each round queries the previous round's worst query together with
/// `candidates − 1` perturbations of it at distance `radius` (projected back
/// into the ball), scores each answer against the oracle, and records the
/// worst one as the round's report row. The first round starts from a
/// uniform point of the ball. Every random choice, including the query
/// generators, comes from `seed`.
pub fn run_adversary(s: &Structure, settings: AdversarySettings, seed: u64) -> Result<(Report, AdversaryState)> {
    if s.mode() != Mode::Adam {
        return Err(Error::Config(format!(
            "the adversary needs an adam structure, got {}",
            s.mode()
        )));
    }
    if settings.candidates == 0 {
        return Err(Error::param("candidates", "must be positive"));
    }
    let dim = s.dataset().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut center = random_ball_point(dim, &mut rng);
    let mut report = Report::new(contract(s));
    let mut state = AdversaryState {
        radius: settings.radius,
        candidates: settings.candidates,
        history: Vec::with_capacity(settings.rounds),
    };
    for round in 0..settings.rounds {
        let mut proposals = vec![center.clone()];
        for _ in 1..settings.candidates {
            let dir = random_direction(dim, &mut rng);
            let q = center.iter().zip(&dir).map(|(c, u)| c + settings.radius * u).collect();
            proposals.push(project_to_ball(q));
        }
        let mut rows = Vec::with_capacity(proposals.len());
        let mut probes = Vec::with_capacity(proposals.len());
        for q in proposals {
            let row = timed_row(s, round, &q, &mut rng)?;
            probes.push(Probe {
                query: q,
                answer: row.estimate,
                oracle: row.oracle,
                rel_err: row.rel_err,
            });
            rows.push(row);
        }
        let worst = (0..rows.len())
            .reduce(|a, b| if rows[b].rel_err > rows[a].rel_err { b } else { a })
            .expect("at least one candidate");
        center = probes[worst].query.clone();
        report.rows.push(rows.swap_remove(worst));
        state.history.push(probes);
    }
    Ok((report, state))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Insert(Vec<f64>),
    Delete(PointId),
}

/// Parses an operation script: `I,<coords…>` or `D,<id>` per line; blank
/// lines are skipped. Errors carry the 1-based line number.
pub fn parse_ops(text: &str, path: &Path) -> Result<Vec<Op>> {
    let mut ops = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let (tag, rest) = line.split_once(',').ok_or_else(|| err("expected `I,…` or `D,<id>`".into()))?;
        let op = match tag.trim() {
            "I" => Op::Insert(
                rest.split(',')
                    .map(|f| {
                        let f = f.trim();
                        f.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(format!("bad coordinate `{f}`")))
                    })
                    .collect::<Result<_>>()?,
            ),
            "D" => Op::Delete(
                rest.trim()
                    .parse()
                    .map_err(|_| err(format!("bad id `{}`", rest.trim())))?,
            ),
            other => return Err(err(format!("unknown op `{other}`"))),
        };
        ops.push(op);
    }
    Ok(ops)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpRecord {
    pub index: usize,
    pub op: char,
    pub id: PointId,
    pub hash_evals: u64,
}

pub const OPS_HEADER: &str = "op_index,op,id,hash_evals";

pub fn ops_csv(records: &[OpRecord]) -> String {
    let mut out = format!("{OPS_HEADER}\n");
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.index, r.op, r.id, r.hash_evals));
    }
    out
}

/// Applies `ops` in order, recording the hash evaluations each one cost.
/// Stops at the first failing operation; the structure keeps the earlier ones.
pub fn apply_ops(s: &mut Structure, ops: &[Op]) -> Result<Vec<OpRecord>> {
    let mut records = Vec::with_capacity(ops.len());
    for (index, op) in ops.iter().enumerate() {
        let before = s.hash_evals();
        let (tag, id) = match op {
            Op::Insert(x) => ('I', s.insert(x)?),
            Op::Delete(id) => ('D', s.delete(*id)?.id),
        };
        records.push(OpRecord {
            index,
            op: tag,
            id,
            hash_evals: s.hash_evals() - before,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ops_parse() {
        let ops = parse_ops("I,0.6,0.8\n\nD,3\n", Path::new("ops")).unwrap();
        assert_eq!(ops, vec![Op::Insert(vec![0.6, 0.8]), Op::Delete(3)]);
    }

    #[test]
    fn malformed_op_reports_line() {
        for bad in ["I,1,0\nX,1\n", "I,1,0\nD,-1\n", "I,1,0\nD\n", "I,1,0\nI,1,zz\n"] {
            match parse_ops(bad, Path::new("ops")) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 2, "{bad:?}"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn ball_helpers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert!(norm(&random_ball_point(4, &mut rng)) <= 1.0);
        }
        let p = project_to_ball(vec![3.0, 4.0]);
        assert!(norm(&p) <= 1.0 && (p[0] - 0.6).abs() < 1e-12);
        assert_eq!(project_to_ball(vec![0.1, 0.2]), vec![0.1, 0.2]);
    }
}
