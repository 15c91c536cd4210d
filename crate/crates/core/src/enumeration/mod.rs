//! Constant-delay enumeration over bijective structures.
//!
//! An [`Enumerator`] is built in a precomputation phase and then drained
//! tuple by tuple. All work is charged to a [`StepMeter`] in abstract steps:
//! one per domain element read, per term hop, per literal test and per
//! emission.

mod build;
mod cursors;
mod ir;

use std::time::{Duration, Instant};

use crate::structure::{BijStructure, Elem};

pub use build::{
    disjoint_union, enum_conjunction, enum_query, enum_query_with, from_linear_scan, EnumOptions,
    Strategy,
};
pub(crate) use cursors::Cursor;

/// Counters kept by the nested-loop cursor of the all-negative case.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Case2Stats {
    /// Nested-loop cursors created.
    pub loops: u64,
    /// Longest run of skipped candidates between two emissions.
    pub max_skip_run: u64,
    /// Runs longer than twice the number of disequalities.
    pub run_violations: u64,
    /// Outer tuples that yielded fewer than `|Q2| - r` emissions.
    pub yield_violations: u64,
}

/// Monotone step counter with per-gap statistics.
#[derive(Clone, Debug, Default)]
pub struct StepMeter {
    steps: u64,
    precompute: Option<u64>,
    mark: u64,
    emissions: u64,
    max_gap: u64,
    gap_sum: u64,
    gap_count: u64,
    final_gap: Option<u64>,
    idle_max: u64,
    gaps: Option<Vec<u64>>,
    case2: Case2Stats,
}

impl StepMeter {
    pub fn new() -> Self {
        Self::default()
    }

    /// A meter that keeps every gap, not only aggregates.
    pub fn recording() -> Self {
        StepMeter {
            gaps: Some(Vec::new()),
            ..Self::default()
        }
    }

    #[inline]
    pub fn tick(&mut self, n: u64) {
        self.steps += n;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub(crate) fn finish_precompute(&mut self) {
        if self.precompute.is_none() {
            self.precompute = Some(self.steps);
            self.mark = self.steps;
        }
    }

    fn close_gap(&mut self) -> u64 {
        let gap = self.steps - self.mark;
        self.mark = self.steps;
        self.max_gap = self.max_gap.max(gap);
        self.gap_sum += gap;
        self.gap_count += 1;
        if let Some(g) = &mut self.gaps {
            g.push(gap);
        }
        gap
    }

    pub(crate) fn emit(&mut self) {
        self.steps += 1;
        self.emissions += 1;
        self.close_gap();
    }

    pub(crate) fn exhaust(&mut self) {
        self.steps += 1;
        if self.final_gap.is_none() {
            let g = self.close_gap();
            self.final_gap = Some(g);
        } else {
            let g = self.steps - self.mark;
            self.mark = self.steps;
            self.idle_max = self.idle_max.max(g);
        }
    }

    pub fn precompute_steps(&self) -> u64 {
        self.precompute.unwrap_or(self.steps)
    }

    pub fn emissions(&self) -> u64 {
        self.emissions
    }

    /// Largest gap so far, the first and the final gap included.
    pub fn max_gap(&self) -> u64 {
        self.max_gap
    }

    pub fn mean_gap(&self) -> f64 {
        if self.gap_count == 0 {
            0.0
        } else {
            self.gap_sum as f64 / self.gap_count as f64
        }
    }

    pub fn final_gap(&self) -> Option<u64> {
        self.final_gap
    }

    /// Largest cost of a call made after exhaustion.
    pub fn idle_max(&self) -> u64 {
        self.idle_max
    }

    pub fn gaps(&self) -> Option<&[u64]> {
        self.gaps.as_deref()
    }

    pub fn case2(&self) -> &Case2Stats {
        &self.case2
    }

    pub(crate) fn case2_mut(&mut self) -> &mut Case2Stats {
        &mut self.case2
    }
}

/// A two-phase enumerator: built (precomputation) and then drained.
pub struct Enumerator<'s> {
    s: &'s BijStructure,
    vars: Vec<String>,
    cursor: Box<dyn Cursor>,
    meter: StepMeter,
    buf: Vec<Elem>,
    done: bool,
    precompute_time: Duration,
    enum_time: Duration,
}

impl<'s> Enumerator<'s> {
    pub(crate) fn new(
        s: &'s BijStructure,
        vars: Vec<String>,
        cursor: Box<dyn Cursor>,
        mut meter: StepMeter,
        precompute_time: Duration,
    ) -> Self {
        meter.finish_precompute();
        let buf = vec![0; vars.len()];
        Enumerator {
            s,
            vars,
            cursor,
            meter,
            buf,
            done: false,
            precompute_time,
            enum_time: Duration::ZERO,
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<String>, Box<dyn Cursor>, StepMeter) {
        (self.vars, self.cursor, self.meter)
    }

    pub fn structure(&self) -> &'s BijStructure {
        self.s
    }

    /// Output variables, in tuple order.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn meter(&self) -> &StepMeter {
        &self.meter
    }

    /// Move to the next tuple; `false` once exhausted, and on every later call.
    pub fn advance(&mut self) -> bool {
        let start = Instant::now();
        let ok = if self.done {
            false
        } else {
            self.cursor.next(self.s, &mut self.meter, &mut self.buf)
        };
        if ok {
            self.meter.emit();
        } else {
            self.done = true;
            self.meter.exhaust();
        }
        self.enum_time += start.elapsed();
        ok
    }

    /// The tuple produced by the last successful [`advance`](Self::advance).
    pub fn current(&self) -> &[Elem] {
        &self.buf
    }

    pub fn is_exhausted(&self) -> bool {
        self.done
    }
}

impl Iterator for Enumerator<'_> {
    type Item = Vec<Elem>;

    fn next(&mut self) -> Option<Vec<Elem>> {
        if self.advance() {
            Some(self.buf.clone())
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayReport {
    pub precompute_steps: u64,
    pub tuples: u64,
    pub max_gap: u64,
    pub mean_gap: f64,
    pub final_gap: u64,
    pub total_steps: u64,
    pub case2: Case2Stats,
    pub precompute_time: Duration,
    pub enum_time: Duration,
}

/// Drain an enumerator and summarize its step profile.
pub fn measure_delay(mut e: Enumerator<'_>) -> DelayReport {
    while e.advance() {}
    let m = &e.meter;
    DelayReport {
        precompute_steps: m.precompute_steps(),
        tuples: m.emissions(),
        max_gap: m.max_gap(),
        mean_gap: m.mean_gap(),
        final_gap: m.final_gap().unwrap_or(0),
        total_steps: m.steps(),
        case2: m.case2,
        precompute_time: e.precompute_time,
        enum_time: e.enum_time,
    }
}
