//! Procedurally generated crossing gridworlds: the agent must cross a
//! river of wall or lava through a single gap to reach the goal.

use indexmap::IndexSet;
use rand::Rng;

use super::oracle::{MdpModel, Outcome};
use super::{EnvStep, Environment};
use crate::rng::Prng;
use crate::types::Observation;

/// Observation channels: wall, lava, goal, agent facing E/S/W/N.
pub const N_CHANNELS: usize = 7;

pub const ACTION_TURN_LEFT: usize = 0;
pub const ACTION_TURN_RIGHT: usize = 1;
pub const ACTION_FORWARD: usize = 2;

/// Heading deltas in E, S, W, N order.
const DELTAS: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridVariant {
    SimpleCrossing,
    LavaCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Empty,
    Wall,
    Lava,
    Goal,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    cells: Vec<Cell>,
    width: usize,
    height: usize,
}

impl Layout {
    fn at(&self, x: usize, y: usize) -> Cell {
        self.cells[y * self.width + x]
    }

    fn set(&mut self, x: usize, y: usize, c: Cell) {
        self.cells[y * self.width + x] = c;
    }

    /// Start-to-goal reachability over passable (non-wall, non-lava)
    /// cells, 4-connected.
    fn solvable(&self) -> bool {
        let (w, h) = (self.width, self.height);
        let goal = (w - 2, h - 2);
        let mut seen = vec![false; w * h];
        let mut queue = std::collections::VecDeque::from([(1usize, 1usize)]);
        seen[w + 1] = true;
        while let Some((x, y)) = queue.pop_front() {
            if (x, y) == goal {
                return true;
            }
            for (dx, dy) in DELTAS {
                let nx = x.wrapping_add_signed(dx);
                let ny = y.wrapping_add_signed(dy);
                if nx >= w || ny >= h || seen[ny * w + nx] {
                    continue;
                }
                if matches!(self.at(nx, ny), Cell::Empty | Cell::Goal) {
                    seen[ny * w + nx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        false
    }
}

fn gen_layout(width: usize, height: usize, variant: GridVariant, rng: &mut Prng) -> Layout {
    loop {
        let mut l = Layout {
            cells: vec![Cell::Empty; width * height],
            width,
            height,
        };
        for x in 0..width {
            l.set(x, 0, Cell::Wall);
            l.set(x, height - 1, Cell::Wall);
        }
        for y in 0..height {
            l.set(0, y, Cell::Wall);
            l.set(width - 1, y, Cell::Wall);
        }
        let material = match variant {
            GridVariant::SimpleCrossing => Cell::Wall,
            GridVariant::LavaCrossing => Cell::Lava,
        };
        // One river with a single gap, clear of the start and goal
        // columns/rows.
        if rng.gen_bool(0.5) {
            let col = rng.gen_range(2..width - 2);
            let gap = rng.gen_range(1..height - 1);
            for y in 1..height - 1 {
                if y != gap {
                    l.set(col, y, material);
                }
            }
        } else {
            let row = rng.gen_range(2..height - 2);
            let gap = rng.gen_range(1..width - 1);
            for x in 1..width - 1 {
                if x != gap {
                    l.set(x, row, material);
                }
            }
        }
        l.set(width - 2, height - 2, Cell::Goal);
        if l.solvable() {
            return l;
        }
    }
}

/// Crossing gridworld. The agent starts at (1, 1) facing east; the goal
/// sits at (width-2, height-2) behind a river of wall (simple) or lava
/// (lava variant) with one gap. Actions: turn left, turn right, move
/// forward. Rewards: +MAXSTEPS on reaching the goal, -MAXSTEPS on
/// entering lava (both terminal), -1 otherwise; MAXSTEPS = 4wh, with
/// timeout when it runs out.
///
/// The non-terminal variant disables goal termination: entering the
/// goal pays +MAXSTEPS, leaving it pays -MAXSTEPS, staying on it pays
/// 0, and only lava or the timeout ends the episode.
///
/// `fixed` freezes one seeded layout for the whole run instead of
/// regenerating per episode, which also makes the exact model available.
#[derive(Debug, Clone)]
pub struct GridEnv {
    width: usize,
    height: usize,
    variant: GridVariant,
    nonterminal: bool,
    fixed_layout: Option<Layout>,
    layout: Layout,
    pos: (usize, usize),
    dir: usize,
    steps: u64,
    done: bool,
}

impl GridEnv {
    pub fn new(
        width: usize,
        height: usize,
        variant: GridVariant,
        nonterminal: bool,
        fixed: bool,
        seed: u64,
    ) -> Self {
        assert!(width >= 5 && height >= 5);
        let mut layout_rng = crate::rng::stream_rng(seed, crate::rng::Stream::Env);
        let layout = gen_layout(width, height, variant, &mut layout_rng);
        Self {
            width,
            height,
            variant,
            nonterminal,
            fixed_layout: fixed.then(|| layout.clone()),
            layout,
            pos: (1, 1),
            dir: 0,
            steps: 0,
            done: true,
        }
    }

    pub fn maxsteps(&self) -> u64 {
        (4 * self.width * self.height) as u64
    }

    fn obs_at(&self, layout: &Layout, pos: (usize, usize), dir: usize) -> Observation {
        let mut v = vec![0.0; self.width * self.height * N_CHANNELS];
        for y in 0..self.height {
            for x in 0..self.width {
                let base = (y * self.width + x) * N_CHANNELS;
                match layout.at(x, y) {
                    Cell::Wall => v[base] = 1.0,
                    Cell::Lava => v[base + 1] = 1.0,
                    Cell::Goal => v[base + 2] = 1.0,
                    Cell::Empty => {}
                }
            }
        }
        let base = (pos.1 * self.width + pos.0) * N_CHANNELS;
        v[base + 3 + dir] = 1.0;
        Observation(v)
    }

    /// Pure dynamics shared by step() and the model: next (pos, dir),
    /// reward, terminal.
    fn dynamics(
        &self,
        layout: &Layout,
        pos: (usize, usize),
        dir: usize,
        action: usize,
    ) -> ((usize, usize), usize, f64, bool) {
        let m = self.maxsteps() as f64;
        let on_goal = layout.at(pos.0, pos.1) == Cell::Goal;
        match action {
            ACTION_TURN_LEFT | ACTION_TURN_RIGHT => {
                let nd = if action == ACTION_TURN_LEFT {
                    (dir + 3) % 4
                } else {
                    (dir + 1) % 4
                };
                let r = if on_goal { 0.0 } else { -1.0 };
                (pos, nd, r, false)
            }
            ACTION_FORWARD => {
                let (dx, dy) = DELTAS[dir];
                let nx = pos.0.wrapping_add_signed(dx);
                let ny = pos.1.wrapping_add_signed(dy);
                match layout.at(nx, ny) {
                    Cell::Wall => {
                        let r = if on_goal { 0.0 } else { -1.0 };
                        (pos, dir, r, false)
                    }
                    Cell::Lava => ((nx, ny), dir, -m, true),
                    Cell::Goal => {
                        if self.nonterminal {
                            ((nx, ny), dir, m, false)
                        } else {
                            ((nx, ny), dir, m, true)
                        }
                    }
                    Cell::Empty => {
                        let r = if on_goal { -m } else { -1.0 };
                        ((nx, ny), dir, r, false)
                    }
                }
            }
            _ => panic!("invalid action {action}"),
        }
    }
}

impl Environment for GridEnv {
    fn obs_dim(&self) -> usize {
        self.width * self.height * N_CHANNELS
    }

    fn n_actions(&self) -> usize {
        3
    }

    fn reset(&mut self, rng: &mut Prng) -> Observation {
        self.layout = match &self.fixed_layout {
            Some(l) => l.clone(),
            None => gen_layout(self.width, self.height, self.variant, rng),
        };
        self.pos = (1, 1);
        self.dir = 0;
        self.steps = 0;
        self.done = false;
        self.obs_at(&self.layout, self.pos, self.dir)
    }

    fn step(&mut self, action: usize) -> EnvStep {
        assert!(!self.done, "step on finished episode");
        let (npos, ndir, reward, terminal) =
            self.dynamics(&self.layout, self.pos, self.dir, action);
        self.pos = npos;
        self.dir = ndir;
        self.steps += 1;
        let timeout = !terminal && self.steps >= self.maxsteps();
        self.done = terminal || timeout;
        EnvStep {
            obs: self.obs_at(&self.layout, self.pos, self.dir),
            reward,
            terminal,
            timeout,
        }
    }

    fn return_bounds(&self) -> (f64, f64) {
        let m = self.maxsteps() as f64;
        match (self.variant, self.nonterminal) {
            (GridVariant::SimpleCrossing, false) => (-m, m),
            _ => (-2.0 * m, m),
        }
    }

    fn max_episode_steps(&self) -> Option<u64> {
        Some(self.maxsteps())
    }

    fn model(&self) -> Option<MdpModel> {
        let layout = self.fixed_layout.as_ref()?;
        // Enumerate (x, y, dir) over agent-occupiable cells; terminal
        // cells (goal unless nonterminal, lava always) get absorbing
        // state ids too so outcomes can reference them.
        let mut ids = indexmap::IndexMap::new();
        let mut observations = Vec::new();
        let mut terminal_states = IndexSet::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let cell = layout.at(x, y);
                let (occupiable, terminal) = match cell {
                    Cell::Empty => (true, false),
                    Cell::Goal => (true, !self.nonterminal),
                    Cell::Lava => (true, true),
                    Cell::Wall => (false, false),
                };
                if !occupiable {
                    continue;
                }
                for dir in 0..4 {
                    let id = observations.len();
                    ids.insert((x, y, dir), id);
                    observations.push(self.obs_at(layout, (x, y), dir));
                    if terminal {
                        terminal_states.insert(id);
                    }
                }
            }
        }
        let mut transitions = vec![vec![Vec::new(); 3]; observations.len()];
        for (&(x, y, dir), &sid) in &ids {
            if terminal_states.contains(&sid) {
                continue;
            }
            for action in 0..3 {
                let (npos, ndir, reward, terminal) = self.dynamics(layout, (x, y), dir, action);
                let nid = ids[&(npos.0, npos.1, ndir)];
                transitions[sid][action] = vec![Outcome {
                    prob: 1.0,
                    next: nid,
                    reward,
                    terminal,
                }];
            }
        }
        Some(MdpModel {
            observations,
            n_actions: 3,
            transitions,
            terminal_states,
            start_state: ids[&(1, 1, 0)],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::oracle::value_iteration;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn thousand_resets_all_solvable_with_goal_and_border() {
        let mut env = GridEnv::new(7, 7, GridVariant::LavaCrossing, false, false, 0);
        let mut rng = stream_rng(1, Stream::Env);
        for _ in 0..1000 {
            env.reset(&mut rng);
            assert!(env.layout.solvable());
            assert_eq!(env.layout.at(5, 5), Cell::Goal);
            for x in 0..7 {
                assert_eq!(env.layout.at(x, 0), Cell::Wall);
                assert_eq!(env.layout.at(x, 6), Cell::Wall);
            }
        }
    }

    #[test]
    fn fixed_layout_is_stable_across_resets() {
        let mut env = GridEnv::new(7, 7, GridVariant::LavaCrossing, false, true, 3);
        let mut rng = stream_rng(2, Stream::Env);
        let a = env.reset(&mut rng);
        for _ in 0..5 {
            env.reset(&mut rng);
        }
        let b = env.reset(&mut rng);
        assert_eq!(a, b);
    }

    #[test]
    fn walking_into_wall_stays_put() {
        let mut env = GridEnv::new(7, 7, GridVariant::SimpleCrossing, false, true, 0);
        let mut rng = stream_rng(3, Stream::Env);
        env.reset(&mut rng);
        // Face north (turn left from east) into the border wall.
        env.step(ACTION_TURN_LEFT);
        let s = env.step(ACTION_FORWARD);
        assert_eq!(env.pos, (1, 1));
        assert_eq!(s.reward, -1.0);
        assert!(!s.terminal && !s.timeout);
    }

    #[test]
    fn rewards_stay_in_declared_alphabet() {
        let mut env = GridEnv::new(7, 7, GridVariant::LavaCrossing, false, false, 0);
        let mut rng = stream_rng(4, Stream::Env);
        let m = env.maxsteps() as f64;
        for _ in 0..200 {
            env.reset(&mut rng);
            loop {
                let a = rng.gen_range(0..3);
                let s = env.step(a);
                assert!(
                    s.reward == -1.0 || s.reward == m || s.reward == -m,
                    "reward {}",
                    s.reward
                );
                if s.terminal || s.timeout {
                    break;
                }
            }
        }
    }

    #[test]
    fn timeout_fires_at_maxsteps() {
        let mut env = GridEnv::new(5, 5, GridVariant::SimpleCrossing, false, true, 0);
        let mut rng = stream_rng(5, Stream::Env);
        env.reset(&mut rng);
        let mut last = None;
        // Spin in place until the clock runs out.
        for _ in 0..env.maxsteps() {
            last = Some(env.step(ACTION_TURN_LEFT));
        }
        let last = last.unwrap();
        assert!(last.timeout && !last.terminal);
    }

    #[test]
    fn optimal_policy_reaches_goal_on_fixed_lava_layout() {
        let env = GridEnv::new(7, 7, GridVariant::LavaCrossing, false, true, 7);
        let model = env.model().unwrap();
        model.validate();
        let q = value_iteration(&model, 0.99).unwrap();
        // Roll the greedy policy through the real environment.
        let mut env = env;
        let mut rng = stream_rng(6, Stream::Env);
        env.reset(&mut rng);
        let mut sid = model.start_state;
        let mut total = 0.0;
        for _ in 0..env.maxsteps() {
            let a = (0..3)
                .max_by(|&i, &j| q[sid][i].partial_cmp(&q[sid][j]).unwrap())
                .unwrap();
            let s = env.step(a);
            total += s.reward;
            if s.terminal {
                assert_eq!(s.reward, env.maxsteps() as f64);
                return;
            }
            assert!(!s.timeout, "greedy policy timed out, return {total}");
            sid = model.transitions[sid][a][0].next;
        }
        panic!("never terminated");
    }

    #[test]
    fn nonterminal_goal_entry_exit_rewards() {
        let mut env = GridEnv::new(7, 7, GridVariant::LavaCrossing, true, true, 7);
        let model = env.model().unwrap();
        model.validate();
        let q = value_iteration(&model, 0.95).unwrap();
        let mut rng = stream_rng(7, Stream::Env);
        env.reset(&mut rng);
        let m = env.maxsteps() as f64;
        let mut sid = model.start_state;
        // Follow the greedy policy until the goal pays out, then verify
        // staying (turning) is free and walking off pays -MAXSTEPS.
        let mut entered = false;
        for _ in 0..env.maxsteps() {
            let a = (0..3)
                .max_by(|&i, &j| q[sid][i].partial_cmp(&q[sid][j]).unwrap())
                .unwrap();
            let s = env.step(a);
            assert!(!s.terminal, "nonterminal variant terminated at goal");
            sid = model.transitions[sid][a][0].next;
            if s.reward == m {
                entered = true;
                break;
            }
        }
        assert!(entered, "greedy policy never entered the goal");
        let stay = env.step(ACTION_TURN_LEFT);
        assert_eq!(stay.reward, 0.0);
        // Point away from the adjacent border and step off the goal.
        let before = env.pos;
        let mut paid_exit = false;
        for _ in 0..4 {
            let s = env.step(ACTION_FORWARD);
            if env.pos != before {
                assert_eq!(s.reward, -m);
                paid_exit = true;
                break;
            }
            env.step(ACTION_TURN_LEFT);
        }
        assert!(paid_exit, "could not step off the goal cell");
    }
}
