use num_traits::One;

use super::{fire, is_mnce, saturate, wait_step, MarkingState, Mnce, SemanticsError};
use crate::rational::{Impact, Rational};
use crate::spin::Spin;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Fire(Mnce),
    /// `n` consecutive wait steps.
    Wait(u64),
}

/// A run of the net: `states[i + 1]` follows from `states[i]` by `steps[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Computation {
    steps: Vec<Step>,
    states: Vec<MarkingState>,
}

impl Computation {
    pub fn new(start: MarkingState) -> Self {
        Computation { steps: Vec::new(), states: vec![start] }
    }

    /// Starts from the initial marking.
    pub fn start(net: &Spin) -> Self {
        Self::new(MarkingState::initial(net))
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn states(&self) -> &[MarkingState] {
        &self.states
    }

    pub fn last(&self) -> &MarkingState {
        self.states.last().unwrap()
    }

    /// Fires a maximal set enabled in the current marking.
    pub fn fire(&mut self, net: &Spin, set: Mnce) -> Result<&MarkingState, SemanticsError> {
        if !is_mnce(net, self.last(), &set) {
            return Err(SemanticsError::NotMnce);
        }
        let next = fire(net, self.last(), set.transitions());
        self.steps.push(Step::Fire(set));
        self.states.push(next);
        Ok(self.last())
    }

    /// Waits `n > 0` time units; consecutive waits are merged.
    pub fn wait(&mut self, n: u64) -> &MarkingState {
        if n == 0 {
            return self.last();
        }
        let mut next = self.last().clone();
        for _ in 0..n {
            next = wait_step(&next);
        }
        if let Some(Step::Wait(m)) = self.steps.last_mut() {
            *m += n;
            *self.states.last_mut().unwrap() = next;
        } else {
            self.steps.push(Step::Wait(n));
            self.states.push(next);
        }
        self.last()
    }

    /// Waits until the current marking is saturated.
    pub fn saturate(&mut self, net: &Spin) -> Result<&MarkingState, SemanticsError> {
        let target = saturate(net, self.last())?;
        let delta = match (target.marked().next(), self.last().marked().next()) {
            (Some((_, a)), Some((_, b))) => a - b,
            _ => 0,
        };
        Ok(self.wait(delta))
    }

    /// One line for the start marking, then one per step: the fired set or
    /// `wait(n)`, followed by the resulting marking.
    pub fn dump(&self, net: &Spin) -> String {
        let mut out = format!("start {}\n", self.states[0].render(net));
        for (step, state) in self.steps.iter().zip(&self.states[1..]) {
            let head = match step {
                Step::Fire(m) => m.render(net),
                Step::Wait(n) => format!("wait({n})"),
            };
            out.push_str(&format!("{head} {}\n", state.render(net)));
        }
        out
    }
}

/// Total impact of the fired transitions and product of the probabilities of
/// the fired probabilistic ones.
pub fn play_measures(net: &Spin, c: &Computation) -> (Impact, Rational) {
    let mut impact = Impact::zero(net.impact_dim());
    let mut prob = Rational::one();
    for step in c.steps() {
        if let Step::Fire(m) = step {
            for &t in m.transitions() {
                impact += net.impact(t);
                if let Some(p) = net.prob(t) {
                    prob *= p;
                }
            }
        }
    }
    (impact, prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_process;
    use crate::rational::ratio;
    use crate::semantics::enumerate_mnce;
    use crate::spin::translate_to_spin;

    #[test]
    fn single_branch_measures() {
        let process = parse_process("A[100, 10]{2}, (B[15, 1]{1} ^ [N: 0.2] C[35, 2]{1})").unwrap();
        let (net, _) = translate_to_spin(&process).unwrap();
        let mut c = Computation::start(&net);
        c.saturate(&net).unwrap();
        while !c.last().is_final(&net) {
            let options = enumerate_mnce(&net, c.last()).unwrap();
            // always take the left branch of the nature split
            let pick = options
                .iter()
                .find(|m| m.names(&net).iter().all(|n| *n != "N.right"))
                .unwrap()
                .clone();
            c.fire(&net, pick).unwrap();
            c.saturate(&net).unwrap();
        }
        let (impact, prob) = play_measures(&net, &c);
        assert_eq!(impact, Impact::from_ints(&[115, 11]));
        assert_eq!(prob, ratio(1, 5));
        let dump = c.dump(&net);
        assert!(dump.starts_with("start @start:0\n"));
        assert!(dump.contains("wait(2) A:2"), "{dump}");
        assert!(dump.lines().last().unwrap().ends_with("@end:0"));
    }

    #[test]
    fn waits_merge() {
        let net = crate::spin::fixtures::fork_net();
        let mut c = Computation::start(&net);
        c.wait(2);
        c.wait(3);
        assert_eq!(c.steps(), &[Step::Wait(5)]);
        let (impact, prob) = play_measures(&net, &c);
        assert!(impact.components().iter().all(num_traits::Zero::is_zero));
        assert!(prob.is_one());
    }
}
