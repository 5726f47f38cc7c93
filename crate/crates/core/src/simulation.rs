//! Monte Carlo estimates of workflow latency and success.
//!
//! Each sample draws every infrastructure delay and non-LLM service time from
//! its distribution and flips an independent coin per agent with the agent's
//! reliability. Latencies aggregate like the analytic model except that a
//! parallel stage takes the max of the *sampled* branch latencies, so the
//! estimate converges to the expected max rather than the max of means.
//! Failures do not cut a sample short; every agent always runs.
//!
//! Randomness is keyed by `(seed, sample index, leaf visit index)`: sample `i`
//! reads ChaCha8 stream `i`, and the `k`-th leaf visited in that sample reads
//! from word `256 k` on. Samples are reduced in fixed-size chunks merged in
//! order, so reports are bit-identical for any number of worker threads.
//!
//! Intervals use the normal approximation and are unreliable below roughly
//! a hundred samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};
use crate::model::{
    Agent, Allocation, DelayDistribution, NonLlmLatency, ParallelMode, PricingModel, Workflow,
    WorkflowNode,
};

const CHUNK: usize = 1024;
const WORDS_PER_LEAF: u128 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_samples: usize,
    pub seed: u64,
    /// Confidence level of the reported intervals.
    pub confidence: f64,
    /// Worker threads; `None` uses the global pool. Never changes the result.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn new(num_samples: usize, seed: u64) -> Self {
        SimConfig {
            num_samples,
            seed,
            confidence: 0.95,
            workers: None,
        }
    }
}

/// A sample mean with the half-width of its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeLatency {
    /// Position in the tree, e.g. `root.1.body`.
    pub path: String,
    pub label: String,
    /// Times the node ran across all samples.
    pub executions: u64,
    pub latency: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub samples: usize,
    pub seed: u64,
    pub confidence: f64,
    pub latency: Estimate,
    pub success_rate: Estimate,
    pub nodes: Vec<NodeLatency>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * (other.n as f64 / n as f64),
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64),
        }
    }

    fn estimate(&self, z: f64) -> Estimate {
        let std_error = if self.n > 1 {
            (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            half_width: z * std_error,
            std_error,
        }
    }
}

enum Draw {
    Const(f64),
    Exp(Exp<f64>),
    LogNormal(LogNormal<f64>),
}

impl Draw {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Draw::Const(v) => *v,
            Draw::Exp(d) => d.sample(rng),
            Draw::LogNormal(d) => d.sample(rng),
        }
    }
}

enum SimNode {
    Llm {
        idx: usize,
        delay: Draw,
        think: f64,
        generate: f64,
        reliability: f64,
    },
    Tool {
        idx: usize,
        latency: Draw,
        reliability: f64,
    },
    Sequential {
        idx: usize,
        children: Vec<SimNode>,
    },
    Parallel {
        idx: usize,
        mode: ParallelMode,
        children: Vec<SimNode>,
    },
    Feedback {
        idx: usize,
        body: Box<SimNode>,
        iterations: u32,
    },
}

fn compile(
    node: &WorkflowNode,
    alloc: &Allocation,
    path: String,
    index: &mut Vec<(String, String)>,
) -> Result<SimNode> {
    let idx = index.len();
    index.push((path.clone(), node.label()));
    let bad = |e: rand_distr::ExpError| domain(format!("{path}: {e}"));
    Ok(match node {
        WorkflowNode::Leaf(Agent::Llm(a)) => {
            let length = alloc
                .get(&a.id)
                .ok_or_else(|| crate::Error::MissingAllocation(a.id.clone()))?;
            let delay = match a.infra_delay_dist {
                None => Draw::Const(a.mean_infra_delay),
                Some(DelayDistribution::Constant { value }) => Draw::Const(value),
                Some(DelayDistribution::Exponential { mean }) => {
                    Draw::Exp(Exp::new(1.0 / mean).map_err(bad)?)
                }
                Some(DelayDistribution::LogNormal { mean, sigma }) => Draw::LogNormal(
                    LogNormal::new(mean.ln() - 0.5 * sigma * sigma, sigma)
                        .map_err(|e| domain(format!("{path}: {e}")))?,
                ),
            };
            SimNode::Llm {
                idx,
                delay,
                think: a.reasoning_tokens / a.rate_think,
                generate: length / a.rate_gen,
                reliability: a.reliability(length)?,
            }
        }
        WorkflowNode::Leaf(Agent::NonLlm(a)) => SimNode::Tool {
            idx,
            latency: match a.latency {
                NonLlmLatency::Mean(m) => Draw::Const(m),
                NonLlmLatency::ServiceRate(r) => Draw::Exp(Exp::new(r).map_err(bad)?),
            },
            reliability: a.reliability,
        },
        WorkflowNode::Sequential(children) => SimNode::Sequential {
            idx,
            children: children
                .iter()
                .enumerate()
                .map(|(i, c)| compile(c, alloc, format!("{path}.{i}"), index))
                .collect::<Result<_>>()?,
        },
        WorkflowNode::Parallel { mode, children } => SimNode::Parallel {
            idx,
            mode: *mode,
            children: children
                .iter()
                .enumerate()
                .map(|(i, c)| compile(c, alloc, format!("{path}.{i}"), index))
                .collect::<Result<_>>()?,
        },
        WorkflowNode::Feedback { body, iterations } => SimNode::Feedback {
            idx,
            body: Box::new(compile(body, alloc, format!("{path}.body"), index)?),
            iterations: *iterations,
        },
    })
}

struct SampleCtx<'a> {
    rng: ChaCha8Rng,
    leaf_visits: u128,
    nodes: &'a mut [Moments],
}

impl SampleCtx<'_> {
    fn leaf_rng(&mut self) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(self.leaf_visits * WORDS_PER_LEAF);
        self.leaf_visits += 1;
        &mut self.rng
    }
}

/// Runs `node` once; returns its latency and whether it succeeded.
fn run(node: &SimNode, ctx: &mut SampleCtx<'_>) -> (f64, bool) {
    let (idx, latency, ok) = match node {
        SimNode::Llm {
            idx,
            delay,
            think,
            generate,
            reliability,
        } => {
            let rng = ctx.leaf_rng();
            let tau = delay.sample(rng);
            let ok = rng.random::<f64>() < *reliability;
            (*idx, (tau + think) + generate, ok)
        }
        SimNode::Tool {
            idx,
            latency,
            reliability,
        } => {
            let rng = ctx.leaf_rng();
            let t = latency.sample(rng);
            let ok = rng.random::<f64>() < *reliability;
            (*idx, t, ok)
        }
        SimNode::Sequential { idx, children } => {
            let (mut total, mut ok) = (0.0, true);
            for c in children {
                let (t, s) = run(c, ctx);
                total += t;
                ok &= s;
            }
            (*idx, total, ok)
        }
        SimNode::Parallel {
            idx,
            mode,
            children,
        } => {
            let mut longest = 0.0f64;
            let mut all = true;
            let mut any = false;
            for c in children {
                let (t, s) = run(c, ctx);
                longest = longest.max(t);
                all &= s;
                any |= s;
            }
            let ok = match mode {
                ParallelMode::Conjunctive => all,
                ParallelMode::Redundant => any,
            };
            (*idx, longest, ok)
        }
        SimNode::Feedback {
            idx,
            body,
            iterations,
        } => {
            let (mut total, mut ok) = (0.0, true);
            for _ in 0..*iterations {
                let (t, s) = run(body, ctx);
                total += t;
                ok &= s;
            }
            (*idx, total, ok)
        }
    };
    ctx.nodes[idx].push(latency);
    (latency, ok)
}

struct ChunkStats {
    nodes: Vec<Moments>,
    successes: u64,
}

fn run_chunk(root: &SimNode, node_count: usize, base: &ChaCha8Rng, range: std::ops::Range<usize>) -> ChunkStats {
    let mut nodes = vec![Moments::default(); node_count];
    let mut successes = 0;
    for sample in range {
        let mut rng = base.clone();
        rng.set_stream(sample as u64);
        let mut ctx = SampleCtx {
            rng,
            leaf_visits: 0,
            nodes: &mut nodes,
        };
        let (_, ok) = run(root, &mut ctx);
        successes += u64::from(ok);
    }
    ChunkStats { nodes, successes }
}

/// Simulates `config.num_samples` independent executions of `workflow` with
/// response lengths from `alloc`.
pub fn simulate(workflow: &Workflow, alloc: &Allocation, config: &SimConfig) -> Result<SimReport> {
    if config.num_samples == 0 {
        return Err(domain("num_samples must be >= 1"));
    }
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(domain(format!("confidence must lie in (0, 1), got {}", config.confidence)));
    }
    // rejects missing or stray allocation entries
    workflow.evaluate(alloc, &PricingModel::new(1.0, 1.0)?)?;

    let mut index = Vec::new();
    let root = compile(workflow.root(), alloc, "root".into(), &mut index)?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let chunks: Vec<_> = (0..config.num_samples)
        .step_by(CHUNK)
        .map(|start| start..(start + CHUNK).min(config.num_samples))
        .collect();

    let work = || -> Vec<ChunkStats> {
        chunks
            .par_iter()
            .map(|r| run_chunk(&root, index.len(), &base, r.clone()))
            .collect()
    };
    let parts = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| domain(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut nodes = vec![Moments::default(); index.len()];
    let mut successes = 0u64;
    for part in parts {
        for (acc, m) in nodes.iter_mut().zip(part.nodes) {
            *acc = acc.merge(m);
        }
        successes += part.successes;
    }

    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + 0.5 * config.confidence);
    let n = config.num_samples as f64;
    let p = successes as f64 / n;
    let p_se = (p * (1.0 - p) / n).sqrt();
    Ok(SimReport {
        samples: config.num_samples,
        seed: config.seed,
        confidence: config.confidence,
        latency: nodes[0].estimate(z),
        success_rate: Estimate {
            mean: p,
            half_width: z * p_se,
            std_error: p_se,
        },
        nodes: index
            .into_iter()
            .zip(&nodes)
            .map(|((path, label), m)| NodeLatency {
                path,
                label,
                executions: m.n,
                latency: m.estimate(z),
            })
            .collect(),
    })
}
