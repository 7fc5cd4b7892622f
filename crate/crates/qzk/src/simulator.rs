//! Simulator ensembles: per-turn generating circuits whose reduced outputs stand in for views.

use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::qip::{ProofSystem, ProverStrategy, Step};
use crate::qla::{LowRankState, PureState, RegisterLayout};
use crate::tol;

/// Name of the optional failure-flag register placed before the verifier layout.
pub const FLAG: &str = "FLAG";
/// Name of the simulator's private ancilla register placed after the verifier layout.
pub const SIM: &str = "SIM";

/// One mixture component: run `circuit` from `|0…0⟩` with probability `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimBranch {
    pub weight: f64,
    pub circuit: Circuit,
}

/// Generating procedure for one simulated view; a single branch is a plain circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEntry {
    pub branches: Vec<SimBranch>,
}

impl SimEntry {
    pub fn single(circuit: Circuit) -> Self {
        Self { branches: vec![SimBranch { weight: 1.0, circuit }] }
    }

    pub fn mixture(parts: Vec<(f64, Circuit)>) -> Self {
        Self { branches: parts.into_iter().map(|(weight, circuit)| SimBranch { weight, circuit }).collect() }
    }

    /// The circuit of a single-branch entry.
    pub fn circuit(&self) -> Option<&Circuit> {
        match self.branches.as_slice() {
            [b] => Some(&b.circuit),
            _ => None,
        }
    }
}

/// Generating circuits over `[FLAG] ++ verifier layout ++ [SIM]`, one entry per prover turn.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorEnsemble {
    pub ancilla: usize,
    pub fail_flag: bool,
    pub entries: Vec<SimEntry>,
}

/// Simulator layout for `ps` with the given ancilla width and flag choice.
pub fn sim_layout(ps: &ProofSystem, ancilla: usize, fail_flag: bool) -> Result<RegisterLayout> {
    let mut l = if fail_flag { RegisterLayout::new([(FLAG, 1)])?.concat(&ps.layout)? } else { ps.layout.clone() };
    l.push(SIM, ancilla)?;
    Ok(l)
}

impl SimulatorEnsemble {
    pub fn layout(&self, ps: &ProofSystem) -> Result<RegisterLayout> {
        sim_layout(ps, self.ancilla, self.fail_flag)
    }

    /// Offset of the verifier layout inside the simulator layout.
    pub fn shift(&self) -> usize {
        usize::from(self.fail_flag)
    }

    pub fn validate(&self, ps: &ProofSystem) -> Result<()> {
        if self.entries.len() != ps.prover_turns() {
            return Err(QzkError::Arity(format!(
                "{} simulator entries for {} prover turns",
                self.entries.len(),
                ps.prover_turns()
            )));
        }
        let layout = self.layout(ps)?;
        for (j, e) in self.entries.iter().enumerate() {
            if e.branches.is_empty() {
                return Err(QzkError::Schema(format!("simulator entry {} has no branches", j + 1)));
            }
            let total: f64 = e.branches.iter().map(|b| b.weight).sum();
            if e.branches.iter().any(|b| !(b.weight >= 0.0)) || (total - 1.0).abs() > tol::STRUCTURAL {
                return Err(QzkError::Parameter(format!("simulator entry {} weights must be a distribution", j + 1)));
            }
            for b in &e.branches {
                if b.circuit.layout != layout {
                    return Err(QzkError::Dimension(format!("simulator entry {} uses a different layout", j + 1)));
                }
                b.circuit.validate()?;
            }
        }
        Ok(())
    }

    /// Registers the output of entry `j` (0-based) is reduced to: the flag, then the view.
    pub fn output_registers(&self, ps: &ProofSystem, j: usize) -> Vec<String> {
        let mut regs = if self.fail_flag { vec![FLAG.to_string()] } else { vec![] };
        regs.extend(ps.view_registers(j));
        regs
    }

    /// Simulated state for prover turn `j` (0-based).
    pub fn output(&self, ps: &ProofSystem, j: usize) -> Result<LowRankState> {
        let layout = self.layout(ps)?;
        let n = layout.total();
        tol::check_state_cap("simulator", n)?;
        let keep = layout.wires_of(&self.output_registers(ps, j))?;
        let entry = self.entries.get(j).ok_or_else(|| QzkError::Arity(format!("no simulator entry {}", j + 1)))?;
        let parts = entry
            .branches
            .iter()
            .filter(|b| b.weight > 0.0)
            .map(|b| {
                let mut s = PureState::zero(n);
                b.circuit.apply_to(s.amps.as_mut_slice(), n);
                LowRankState::from_vector_wires(s.amps.as_slice(), n, &keep).scaled(b.weight)
            })
            .collect::<Vec<_>>();
        LowRankState::sum(&parts)
    }

    pub fn outputs(&self, ps: &ProofSystem) -> Result<Vec<LowRankState>> {
        self.validate(ps)?;
        (0..self.entries.len()).map(|j| self.output(ps, j)).collect()
    }

    /// Exact view generator: entry `j` replays the honest execution through prover turn `j`
    /// with the prover register as simulator ancilla.
    pub fn honest_replay(ps: &ProofSystem, pr: &ProverStrategy) -> Result<Self> {
        pr.validate(ps)?;
        let layout = sim_layout(ps, pr.width, false)?;
        let ident: Vec<usize> = (0..layout.total()).collect();
        let mut entries = Vec::new();
        let mut acc = Circuit::new(layout.clone());
        for step in ps.schedule() {
            match step {
                Step::Verifier(i) => {
                    acc.append_mapped(&ps.verifier[i], &ident[..ps.layout.total()])?;
                }
                Step::Prover(j) => {
                    acc.append_mapped(&pr.circuits[j], &ident)?;
                    entries.push(SimEntry::single(acc.clone()));
                }
            }
        }
        Ok(Self { ancilla: pr.width, fail_flag: false, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qip::{views, ProverStrategy};

    #[test]
    fn honest_replay_reproduces_views() {
        let l = RegisterLayout::new([("V", 1), ("M", 1)]).unwrap();
        let mut v1 = Circuit::new(l.clone());
        v1.h(0).unwrap().cnot(0, 1).unwrap();
        let ps = ProofSystem::normal_form(1, 1, 4, vec![v1.clone(), v1.clone(), v1], 0).unwrap();
        let mut p = Circuit::new(ps.exec_layout(1).unwrap());
        p.h(2).unwrap().cnot(2, 1).unwrap().h(1).unwrap();
        let pr = ProverStrategy { width: 1, circuits: vec![p.clone(), p] };
        let sim = SimulatorEnsemble::honest_replay(&ps, &pr).unwrap();
        let out = sim.outputs(&ps).unwrap();
        for (v, s) in views(&ps, &pr).unwrap().iter().zip(&out) {
            assert!(v.state.trace_distance(s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let l = RegisterLayout::new([("V", 1), ("M", 1)]).unwrap();
        let ps = ProofSystem::normal_form(1, 1, 1, vec![Circuit::new(l)], 0).unwrap();
        let c = Circuit::new(sim_layout(&ps, 0, false).unwrap());
        let sim = SimulatorEnsemble { ancilla: 0, fail_flag: false, entries: vec![SimEntry::mixture(vec![(0.5, c.clone()), (0.4, c)])] };
        assert!(matches!(sim.validate(&ps), Err(QzkError::Parameter(_))));
    }
}
