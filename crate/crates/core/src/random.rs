//! Seeded generation of random processes and observers for property tests
//! and the `--seed` option of the command line.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{Name, Process};

/// Shape bounds for generated terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    /// Maximum nesting of prefixes, restrictions and replications.
    pub depth: usize,
    /// Maximum number of components of one parallel composition.
    pub width: usize,
    /// Number of free channel names (`a`, `b`, ...).
    pub channels: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            depth: 5,
            width: 4,
            channels: 3,
        }
    }
}

/// A deterministic generator of random terms.
pub struct TermGenerator {
    rng: ChaCha8Rng,
    shape: Shape,
    free: Vec<Name>,
}

impl TermGenerator {
    pub fn new(seed: u64, shape: Shape) -> Self {
        let free = (0..shape.channels.clamp(1, 26))
            .map(|i| Name::new(&((b'a' + i as u8) as char).to_string()))
            .collect();
        TermGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            shape,
            free,
        }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(seed, Shape::default())
    }

    /// A random process without success.
    pub fn process(&mut self) -> Process {
        let scope = self.free.clone();
        self.term(self.shape.depth, &scope, false)
    }

    /// A random observer: a process in which success occurs at least once.
    pub fn observer(&mut self) -> Process {
        let scope = self.free.clone();
        loop {
            let o = self.term(self.shape.depth.min(3), &scope, true);
            if o.mentions_success() {
                return o;
            }
        }
    }

    fn pick(&mut self, scope: &[Name]) -> Name {
        scope
            .choose(&mut self.rng)
            .expect("scope is never empty")
            .clone()
    }

    fn fresh(&self, scope: &[Name]) -> Name {
        let prefix = ["x", "y", "z", "n"][scope.len() % 4];
        Name::new(&format!("{prefix}{}", scope.len()))
    }

    fn term(&mut self, depth: usize, scope: &[Name], success: bool) -> Process {
        if depth == 0 {
            return if success && self.rng.gen_bool(0.3) {
                Process::success(Process::Nil)
            } else {
                Process::Nil
            };
        }
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=9 => Process::Nil,
            10..=34 => {
                let chan = self.pick(scope);
                let binder = self.fresh(scope);
                let mut inner = scope.to_vec();
                inner.push(binder.clone());
                Process::input(chan, binder, self.term(depth - 1, &inner, success))
            }
            35..=59 => {
                let chan = self.pick(scope);
                let object = self.pick(scope);
                Process::output(chan, object, self.term(depth - 1, scope, success))
            }
            60..=74 => {
                let n = self.rng.gen_range(2..=self.shape.width.max(2));
                Process::par_all((0..n).map(|_| self.term(depth - 1, scope, success)))
            }
            75..=86 => {
                let binder = self.fresh(scope);
                let mut inner = scope.to_vec();
                inner.push(binder.clone());
                Process::res(binder, self.term(depth - 1, &inner, success))
            }
            87..=94 => Process::rep(self.term(depth - 1, scope, success)),
            _ if success => Process::success(self.term(depth - 1, scope, success)),
            _ => Process::Nil,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depth(p: &Process) -> usize {
        match p {
            Process::Nil => 0,
            Process::Par(l, r) => depth(l).max(depth(r)),
            Process::Input { body, .. }
            | Process::Output { body, .. }
            | Process::Res { body, .. }
            | Process::Rep(body)
            | Process::Success(body) => 1 + depth(body),
        }
    }

    #[test]
    fn same_seed_same_terms() {
        let mut a = TermGenerator::with_seed(7);
        let mut b = TermGenerator::with_seed(7);
        for _ in 0..20 {
            assert_eq!(a.process(), b.process());
            assert_eq!(a.observer(), b.observer());
        }
    }

    #[test]
    fn respects_shape() {
        let mut g = TermGenerator::with_seed(1);
        for _ in 0..200 {
            let p = g.process();
            assert!(!p.mentions_success());
            assert!(depth(&p) <= 5, "{p}");
            assert!(g.observer().mentions_success());
        }
    }
}
