use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DeterministicTask, Environment};
use crate::agent::Percept;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::space::{FiniteSpace, Spaces};

const TOWARD: &str = "↑";
const AWAY: &str = "×";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    /// Arrow label such as `(↑,×)`: `↑` at each action index that shortens
    /// the distance to the finish.
    pub label: String,
    /// Target vertex id for each action index.
    pub edges: Vec<usize>,
}

/// A labelled maze with regular out-degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeSpec {
    pub n: usize,
    pub vertices: Vec<Vertex>,
    pub start: usize,
    pub finish: usize,
    pub m_max: usize,
}

/// How maze vertices appear as percepts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerceptMode {
    /// Arrow label plus vertex id, e.g. `(↑,×)@3`.
    #[default]
    WithId,
    /// Arrow label only.
    ArrowOnly,
}

/// Arrow label for the given set of shortening action indices.
pub fn arrow_label(n: usize, toward: &[usize]) -> String {
    let marks: Vec<&str> = (0..n)
        .map(|i| if toward.contains(&i) { TOWARD } else { AWAY })
        .collect();
    format!("({})", marks.join(","))
}

impl MazeSpec {
    /// A corridor `v0 → v1 → … → v_M` where only action `(i + 1) mod n` moves
    /// forward from `v_i`; every other action stays put. The finish loops
    /// onto itself. The all-zeros sequence never wins.
    pub fn line(n: usize, m: usize, m_max: usize) -> Result<Self> {
        if n < 2 || m == 0 {
            return Err(Error::InvalidMaze(
                "line maze needs n >= 2 and M >= 1".into(),
            ));
        }
        let vertices = (0..=m)
            .map(|i| {
                let (edges, toward) = if i == m {
                    (vec![m; n], vec![])
                } else {
                    let good = (i + 1) % n;
                    let edges = (0..n).map(|a| if a == good { i + 1 } else { i }).collect();
                    (edges, vec![good])
                };
                Vertex {
                    id: i,
                    label: arrow_label(n, &toward),
                    edges,
                }
            })
            .collect();
        let spec = Self {
            n,
            vertices,
            start: 0,
            finish: m,
            m_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The unique shortest winning path of [`MazeSpec::line`].
    pub fn line_winner(n: usize, m: usize) -> Vec<usize> {
        (0..m).map(|i| (i + 1) % n).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MazeSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn position(&self, id: usize) -> Result<usize> {
        self.vertices
            .iter()
            .position(|v| v.id == id)
            .ok_or_else(|| Error::InvalidMaze(format!("unknown vertex id {id}")))
    }

    /// Successor table over vertex positions.
    fn transitions(&self) -> Result<Vec<Vec<usize>>> {
        self.vertices
            .iter()
            .map(|v| {
                if v.edges.len() != self.n {
                    return Err(Error::InvalidMaze(format!(
                        "vertex {} has {} edges, expected {}",
                        v.id,
                        v.edges.len(),
                        self.n
                    )));
                }
                v.edges.iter().map(|&e| self.position(e)).collect()
            })
            .collect()
    }

    /// BFS distance of each vertex to the finish.
    fn distances_to_finish(&self, delta: &[Vec<usize>], finish: usize) -> Vec<Option<usize>> {
        let mut rev = vec![Vec::new(); delta.len()];
        for (v, succ) in delta.iter().enumerate() {
            for &w in succ {
                rev[w].push(v);
            }
        }
        bfs(&rev, finish)
    }

    /// Length of the shortest start-to-finish path.
    pub fn shortest_path_len(&self) -> Result<usize> {
        let delta = self.transitions()?;
        let start = self.position(self.start)?;
        let finish = self.position(self.finish)?;
        self.distances_to_finish(&delta, finish)[start]
            .ok_or_else(|| Error::DisconnectedGraph("finish unreachable from start".into()))
    }

    /// Checks totality, connectivity, label consistency and `M <= M_max`.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.vertices.is_empty() {
            return Err(Error::InvalidMaze("empty maze".into()));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if self.vertices[..i].iter().any(|o| o.id == v.id) {
                return Err(Error::InvalidMaze(format!("duplicate vertex id {}", v.id)));
            }
        }
        let delta = self.transitions()?;
        let start = self.position(self.start)?;
        let finish = self.position(self.finish)?;
        let from_start = bfs(&delta, start);
        if let Some(v) = from_start.iter().position(Option::is_none) {
            return Err(Error::DisconnectedGraph(format!(
                "vertex {} unreachable from start",
                self.vertices[v].id
            )));
        }
        let dist = self.distances_to_finish(&delta, finish);
        if let Some(v) = dist.iter().position(Option::is_none) {
            return Err(Error::DisconnectedGraph(format!(
                "finish unreachable from vertex {}",
                self.vertices[v].id
            )));
        }
        let dist: Vec<usize> = dist.into_iter().map(|d| d.expect("checked")).collect();
        for (v, vert) in self.vertices.iter().enumerate() {
            let toward: Vec<usize> = (0..self.n)
                .filter(|&a| dist[delta[v][a]] < dist[v])
                .collect();
            let want = arrow_label(self.n, &toward);
            if vert.label != want {
                return Err(Error::LabelInconsistentWithBfs {
                    vertex: vert.id,
                    detail: format!("label {} but BFS gives {want}", vert.label),
                });
            }
        }
        let m = dist[start];
        if m > self.m_max {
            return Err(Error::InvalidMaze(format!(
                "shortest path {m} exceeds M_max {}",
                self.m_max
            )));
        }
        if self.m_max == 0 {
            return Err(Error::InvalidMaze("M_max must be positive".into()));
        }
        Ok(())
    }
}

fn bfs(adj: &[Vec<usize>], from: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[from] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued vertices have distances");
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// The maze as a deterministic single-win fixed-time game.
///
/// After each action the percept is the label of the vertex reached; the
/// final percept of an epoch carries the reward flag if the finish was
/// visited at any point in the epoch.
#[derive(Clone, Debug)]
pub struct MazeEnv {
    spec: MazeSpec,
    spaces: Spaces,
    delta: Vec<Vec<usize>>,
    percept_of: Vec<usize>,
    start: usize,
    finish: usize,
    vertex: usize,
    steps: usize,
    visited_finish: bool,
}

impl MazeEnv {
    pub fn new(spec: MazeSpec) -> Result<Self> {
        Self::with_mode(spec, PerceptMode::WithId)
    }

    pub fn with_mode(spec: MazeSpec, mode: PerceptMode) -> Result<Self> {
        spec.validate()?;
        let delta = spec.transitions()?;
        let names: Vec<String> = spec
            .vertices
            .iter()
            .map(|v| match mode {
                PerceptMode::WithId => format!("{}@{}", v.label, v.id),
                PerceptMode::ArrowOnly => v.label.clone(),
            })
            .collect();
        let mut distinct: Vec<String> = Vec::new();
        for n in &names {
            if !distinct.contains(n) {
                distinct.push(n.clone());
            }
        }
        let percepts = FiniteSpace::new("percepts", &distinct, true)?;
        let percept_of = names
            .iter()
            .map(|n| percepts.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        let spaces = Spaces::new(
            percepts,
            FiniteSpace::indexed("actions", spec.n)?,
            spec.m_max,
        )?;
        let start = spec.position(spec.start)?;
        let finish = spec.position(spec.finish)?;
        Ok(Self {
            spec,
            spaces,
            delta,
            percept_of,
            start,
            finish,
            vertex: start,
            steps: 0,
            visited_finish: start == finish,
        })
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    fn check_len(&self, actions: &[usize]) -> Result<()> {
        if actions.len() != self.spec.m_max {
            return Err(Error::LengthMismatch {
                expected: self.spec.m_max,
                got: actions.len(),
            });
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= self.spec.n) {
            return Err(Error::UnknownLabel {
                space: "actions".into(),
                label: a.to_string(),
            });
        }
        Ok(())
    }
}

impl Environment for MazeEnv {
    fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    fn reset(&mut self) {
        self.vertex = self.start;
        self.steps = 0;
        self.visited_finish = self.start == self.finish;
    }

    fn respond(&mut self, action: usize, _rng: &mut RngStream) -> Percept {
        self.vertex = self.delta[self.vertex][action];
        self.steps += 1;
        self.visited_finish |= self.vertex == self.finish;
        let last = self.steps == self.spec.m_max;
        let p = Percept::new(self.percept_of[self.vertex], last && self.visited_finish);
        if last {
            self.reset();
        }
        p
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl DeterministicTask for MazeEnv {
    fn reward_of(&self, actions: &[usize]) -> Result<bool> {
        self.check_len(actions)?;
        let mut v = self.start;
        let mut hit = v == self.finish;
        for &a in actions {
            v = self.delta[v][a];
            hit |= v == self.finish;
        }
        Ok(hit)
    }

    fn percepts_of(&self, actions: &[usize]) -> Result<Vec<Percept>> {
        self.check_len(actions)?;
        let mut env = self.clone();
        env.reset();
        let mut rng = RngStream::new(0, 0);
        Ok(actions.iter().map(|&a| env.respond(a, &mut rng)).collect())
    }
}
