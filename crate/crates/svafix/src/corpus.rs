//! Synthetic benchmark generator: seeded register-file designs with
//! known-good assertions, a reference simulator for their traces, and
//! mutation harnesses that inject delay shifts or guard-constant errors.
//! Labels are known by construction, so the corpus doubles as the oracle
//! for classifier and fixer recovery rates.
//!
//! Constructive guarantees, enforced by asserts at generation time:
//! every golden assertion passes and is covered on its trace, and every
//! mutant fails on the same trace.

use crate::expr::Expr;
use crate::hdl::{parse_assertion, SvaAssertion};
use crate::trace::{evaluate_assertion, shift_consequent, CounterexampleTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ADDR_BITS: u32 = 3;
const DATA_BITS: u32 = 8;
/// Reads are spaced so no mutation window (|k| <= 3 plus the search bound)
/// overlaps a neighboring transaction.
const READ_SPACING: usize = 8;
const FIRST_READ: usize = 4;

#[derive(Debug, Clone)]
pub struct SynthDesign {
    pub source: String,
    pub name: String,
    pub clock: String,
    pub regs: usize,
    /// Distinct nonzero reset values, one per register; reads of different
    /// registers are therefore distinguishable in the trace.
    pub reg_init: Vec<u64>,
    /// Address that selects no register (the read mux default).
    pub idle_addr: u64,
}

impl SynthDesign {
    pub fn reg_name(i: usize) -> String {
        format!("r{}", i)
    }

    /// The known-good read assertion for register `i`.
    pub fn golden_assertion(&self, i: usize) -> SvaAssertion {
        let text = format!(
            "assert property (@(posedge clk) (adr == {}'d{}) |-> ##1 (dout == $past(r{})));",
            ADDR_BITS, i, i
        );
        parse_assertion(&text).expect("golden assertion parses")
    }
}

/// Emits a register file with a write port and a registered read mux:
/// `dout` answers one cycle after the address is presented.
pub fn generate_design(seed: u64, regs: usize) -> SynthDesign {
    assert!((2..=6).contains(&regs), "register count out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = (1u64 << DATA_BITS) - 1;
    let mut reg_init = Vec::with_capacity(regs);
    while reg_init.len() < regs {
        let v = rng.gen_range(1..=mask);
        if !reg_init.contains(&v) {
            reg_init.push(v);
        }
    }

    let mut src = String::new();
    src.push_str("module synth_regs (\n");
    src.push_str("  input              clk,\n");
    src.push_str("  input              we,\n");
    src.push_str(&format!("  input      [{}:0] adr,\n", ADDR_BITS - 1));
    src.push_str(&format!("  input      [{}:0] din,\n", DATA_BITS - 1));
    src.push_str(&format!("  output reg [{}:0] dout\n", DATA_BITS - 1));
    src.push_str(");\n");
    for i in 0..regs {
        src.push_str(&format!("  reg [{}:0] r{};\n", DATA_BITS - 1, i));
    }
    src.push('\n');
    for i in 0..regs {
        src.push_str(&format!(
            "  always @(posedge clk)\n    if (we && adr == {}'d{}) r{} <= din;\n\n",
            ADDR_BITS, i, i
        ));
    }
    src.push_str("  always @(posedge clk)\n    case (adr)\n");
    for i in 0..regs {
        src.push_str(&format!("      {}'d{}: dout <= r{};\n", ADDR_BITS, i, i));
    }
    src.push_str(&format!("      default: dout <= {}'d0;\n", DATA_BITS));
    src.push_str("    endcase\nendmodule\n");

    SynthDesign {
        source: src,
        name: "synth_regs".to_string(),
        clock: "clk".to_string(),
        regs,
        reg_init,
        idle_addr: regs as u64,
    }
}

/// Reference simulator for the generated family. State advances by
/// `state[t] = step(state[t-1], inputs[t-1])`: nonblocking semantics, so a
/// read launched at cycle t answers at t+1 with the register's old value.
/// Row t of the trace holds inputs[t] alongside state[t].
pub fn simulate(
    d: &SynthDesign,
    we: &[bool],
    adr: &[u64],
    din: &[u64],
) -> CounterexampleTrace {
    let len = adr.len();
    assert_eq!(we.len(), len);
    assert_eq!(din.len(), len);
    let mut regs = d.reg_init.clone();
    let mut rows_regs: Vec<Vec<u64>> = Vec::with_capacity(len);
    let mut rows_dout: Vec<u64> = Vec::with_capacity(len);
    let mut dout: u64 = 0;
    for t in 0..len {
        if t > 0 {
            // sample previous-cycle inputs against previous-cycle state
            let (pw, pa, pd) = (we[t - 1], adr[t - 1], din[t - 1]);
            dout = match regs.get(pa as usize) {
                Some(&v) if pa < d.regs as u64 => v,
                _ => 0,
            };
            if pw && (pa as usize) < d.regs {
                regs[pa as usize] = pd;
            }
        }
        rows_regs.push(regs.clone());
        rows_dout.push(dout);
    }

    let mut t = CounterexampleTrace::new(&d.clock, len);
    t.add_signal("we", 1, &we.iter().map(|&b| b as u64).collect::<Vec<_>>());
    t.add_signal("adr", ADDR_BITS, adr);
    t.add_signal("din", DATA_BITS, din);
    t.add_signal("dout", DATA_BITS, &rows_dout);
    for i in 0..d.regs {
        let col: Vec<u64> = rows_regs.iter().map(|r| r[i]).collect();
        t.add_signal(&SynthDesign::reg_name(i), DATA_BITS, &col);
    }
    t
}

/// One read of every register, widely spaced, idle address elsewhere, no
/// writes. Every golden assertion fires exactly once and holds.
pub fn standard_trace(d: &SynthDesign) -> CounterexampleTrace {
    let len = FIRST_READ + READ_SPACING * d.regs + READ_SPACING;
    let mut adr = vec![d.idle_addr; len];
    for i in 0..d.regs {
        adr[FIRST_READ + READ_SPACING * i] = i as u64;
    }
    simulate(d, &vec![false; len], &adr, &vec![0; len])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    /// Consequent moved `k` cycles off the correct alignment.
    DelayShift { k: i32 },
    /// Antecedent address constant replaced with another register's.
    GuardConstant { from: u64, to: u64 },
}

#[derive(Debug, Clone)]
pub struct Mutant {
    pub design: SynthDesign,
    pub golden: SvaAssertion,
    pub assertion: SvaAssertion,
    pub kind: MutationKind,
    pub trace: CounterexampleTrace,
}

fn check_constructive(m: &Mutant) {
    let golden = evaluate_assertion(&m.golden, &m.trace).expect("golden evaluates");
    assert!(
        golden.passes_and_covered(),
        "golden assertion must pass covered on the generated trace"
    );
    let mutated = evaluate_assertion(&m.assertion, &m.trace).expect("mutant evaluates");
    assert!(!mutated.passed, "mutant must fail on the generated trace");
}

fn pick_design(rng: &mut ChaCha8Rng, seed: u64) -> (SynthDesign, usize) {
    let regs = rng.gen_range(3..=6);
    let d = generate_design(seed, regs);
    let reg = rng.gen_range(0..regs);
    (d, reg)
}

/// `count` delay-shift mutants, labels Timing by construction. The shift
/// keeps the mutated delay nonnegative, so k ranges over {-1, 1, 2, 3}.
pub fn timing_corpus(base_seed: u64, count: usize) -> Vec<Mutant> {
    let shifts = [1i32, -1, 2, 3];
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed ^ (i as u64).wrapping_mul(0x9e37));
        let (design, reg) = pick_design(&mut rng, base_seed + i as u64);
        let golden = design.golden_assertion(reg);
        let k = shifts[i % shifts.len()];
        let assertion = shift_consequent(&golden, k).expect("shift applies");
        let trace = standard_trace(&design);
        let m = Mutant {
            design,
            golden,
            assertion,
            kind: MutationKind::DelayShift { k },
            trace,
        };
        check_constructive(&m);
        out.push(m);
    }
    out
}

/// `count` guard-constant mutants, labels Logic by construction: the
/// antecedent reads the wrong register's address while the consequent
/// still expects the right register's value.
pub fn logic_corpus(base_seed: u64, count: usize) -> Vec<Mutant> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed ^ (i as u64).wrapping_mul(0x51f1));
        let (design, reg) = pick_design(&mut rng, base_seed + 77_000 + i as u64);
        let golden = design.golden_assertion(reg);
        let wrong = (reg + 1 + rng.gen_range(0..design.regs - 1)) % design.regs;
        let mut assertion = golden.clone();
        assertion.antecedent = Expr::ident("adr").eq(Expr::constant(
            Some(ADDR_BITS),
            wrong as u64,
        ));
        let trace = standard_trace(&design);
        let m = Mutant {
            design,
            golden,
            assertion,
            kind: MutationKind::GuardConstant {
                from: reg as u64,
                to: wrong as u64,
            },
            trace,
        };
        check_constructive(&m);
        out.push(m);
    }
    out
}
