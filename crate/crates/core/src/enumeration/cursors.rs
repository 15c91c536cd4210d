//! Cursor implementations. Cursors hold no reference to the structure; it is
//! passed to every call. `out` has exactly the cursor's arity.

use super::StepMeter;
use crate::structure::{eval_term_c, BijStructure, CTerm, Compiled, Elem};

pub(crate) trait Cursor: Send {
    fn next(&mut self, s: &BijStructure, m: &mut StepMeter, out: &mut [Elem]) -> bool;
}

pub(crate) struct Empty;

impl Cursor for Empty {
    fn next(&mut self, _: &BijStructure, _: &mut StepMeter, _: &mut [Elem]) -> bool {
        false
    }
}

/// Emits the empty tuple once.
pub(crate) struct Single {
    pub(crate) done: bool,
}

impl Cursor for Single {
    fn next(&mut self, _: &BijStructure, _: &mut StepMeter, _: &mut [Elem]) -> bool {
        !std::mem::replace(&mut self.done, true)
    }
}

/// Walks a materialized list of elements.
pub(crate) struct List {
    pub(crate) items: Vec<Elem>,
    pub(crate) pos: usize,
}

impl Cursor for List {
    fn next(&mut self, _: &BijStructure, m: &mut StepMeter, out: &mut [Elem]) -> bool {
        m.tick(1);
        match self.items.get(self.pos) {
            Some(&e) => {
                self.pos += 1;
                out[0] = e;
                true
            }
            None => false,
        }
    }
}

/// Buffers one tuple ahead so emptiness is known after precomputation.
pub(crate) struct Lookahead {
    inner: Box<dyn Cursor>,
    buf: Vec<Elem>,
    full: bool,
}

impl Lookahead {
    pub(crate) fn new(
        mut inner: Box<dyn Cursor>,
        arity: usize,
        s: &BijStructure,
        m: &mut StepMeter,
    ) -> Self {
        let mut buf = vec![0; arity];
        let full = inner.next(s, m, &mut buf);
        Lookahead { inner, buf, full }
    }

    pub(crate) fn is_empty(&self) -> bool {
        !self.full
    }
}

impl Cursor for Lookahead {
    fn next(&mut self, s: &BijStructure, m: &mut StepMeter, out: &mut [Elem]) -> bool {
        if !self.full {
            return false;
        }
        out.copy_from_slice(&self.buf);
        self.full = self.inner.next(s, m, &mut self.buf);
        true
    }
}

/// Drains nonempty parts left to right.
pub(crate) struct Union {
    pub(crate) parts: Vec<Lookahead>,
    pub(crate) idx: usize,
}

impl Cursor for Union {
    fn next(&mut self, s: &BijStructure, m: &mut StepMeter, out: &mut [Elem]) -> bool {
        while let Some(p) = self.parts.get_mut(self.idx) {
            m.tick(1);
            if p.next(s, m, out) {
                return true;
            }
            self.idx += 1;
        }
        false
    }
}

/// Extends each child tuple by the value of a term over it.
pub(crate) struct Decorate {
    pub(crate) child: Box<dyn Cursor>,
    pub(crate) term: CTerm,
}

impl Cursor for Decorate {
    fn next(&mut self, s: &BijStructure, m: &mut StepMeter, out: &mut [Elem]) -> bool {
        let k = out.len();
        if !self.child.next(s, m, &mut out[..k - 1]) {
            return false;
        }
        let mut steps = 0;
        out[k - 1] = eval_term_c(&self.term, s, &out[..k - 1], &mut steps);
        m.tick(steps + 1);
        true
    }
}

/// Extends each child tuple by a fixed element.
pub(crate) struct AppendConst {
    pub(crate) child: Box<dyn Cursor>,
    pub(crate) value: Elem,
}

impl Cursor for AppendConst {
    fn next(&mut self, s: &BijStructure, m: &mut StepMeter, out: &mut [Elem]) -> bool {
        let k = out.len();
        if !self.child.next(s, m, &mut out[..k - 1]) {
            return false;
        }
        out[k - 1] = self.value;
        m.tick(1);
        true
    }
}

/// Outer tuples `ā` from the child, crossed with the candidates `b ∈ Q2`,
/// skipping `b` equal to one of the forbidden values `τi(ā)`. A forbidden
/// value with an escape condition is lifted for the `ā` satisfying it.
///
/// Requires more candidates than forbidden terms, so every `ā` yields at
/// least one tuple and a skip run spans at most two outer tuples.
pub(crate) struct NestedLoop {
    child: Box<dyn Cursor>,
    q2: Vec<Elem>,
    forbidden: Vec<(Option<Compiled>, CTerm)>,
    fvals: Vec<Elem>,
    pos: usize,
    have_outer: bool,
    run: u64,
    yielded: usize,
    done: bool,
}

impl NestedLoop {
    pub(crate) fn new(
        child: Box<dyn Cursor>,
        q2: Vec<Elem>,
        forbidden: Vec<(Option<Compiled>, CTerm)>,
        m: &mut StepMeter,
    ) -> Self {
        debug_assert!(q2.len() > forbidden.len());
        m.case2_mut().loops += 1;
        let r = forbidden.len();
        NestedLoop {
            child,
            q2,
            forbidden,
            fvals: Vec::with_capacity(r),
            pos: 0,
            have_outer: false,
            run: 0,
            yielded: 0,
            done: false,
        }
    }

    fn close_run(&mut self, m: &mut StepMeter) {
        let r = self.forbidden.len() as u64;
        let st = m.case2_mut();
        st.max_skip_run = st.max_skip_run.max(self.run);
        if self.run > 2 * r {
            st.run_violations += 1;
        }
        debug_assert!(
            self.run <= 2 * r,
            "skip run {} exceeds 2r = {}",
            self.run,
            2 * r
        );
        self.run = 0;
    }

    fn close_outer(&mut self, m: &mut StepMeter) {
        let need = self.q2.len() - self.forbidden.len();
        if self.yielded < need {
            m.case2_mut().yield_violations += 1;
        }
        debug_assert!(self.yielded >= need);
    }
}

impl Cursor for NestedLoop {
    fn next(&mut self, s: &BijStructure, m: &mut StepMeter, out: &mut [Elem]) -> bool {
        if self.done {
            return false;
        }
        let k = out.len();
        loop {
            if self.have_outer {
                while let Some(&b) = self.q2.get(self.pos) {
                    self.pos += 1;
                    m.tick(1 + self.fvals.len() as u64);
                    if self.fvals.contains(&b) {
                        self.run += 1;
                        continue;
                    }
                    self.close_run(m);
                    self.yielded += 1;
                    out[k - 1] = b;
                    return true;
                }
                self.close_outer(m);
                self.have_outer = false;
            }
            if !self.child.next(s, m, &mut out[..k - 1]) {
                self.close_run(m);
                self.done = true;
                return false;
            }
            let mut steps = 0;
            self.fvals.clear();
            for (escape, t) in &self.forbidden {
                let outer = &out[..k - 1];
                if escape
                    .as_ref()
                    .is_some_and(|e| e.eval(s, outer, &mut steps))
                {
                    continue;
                }
                self.fvals.push(eval_term_c(t, s, outer, &mut steps));
            }
            m.tick(steps);
            self.pos = 0;
            self.yielded = 0;
            self.have_outer = true;
        }
    }
}
