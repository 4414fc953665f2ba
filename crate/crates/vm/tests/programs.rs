use proptest::prelude::*;
use qudot_vm::{
    execute, parse_program, Header, IReg, Instr, ParseErrorKind, Program, QReg, RunConfig, RuntimeErrorKind,
};
use qumvn_core::{BitString, Precision, QumvnError, RegisterRange};

const APPENDIX: &str = include_str!("../fixtures/shor_10057.qudot");

fn run(src: &str, cfg: RunConfig) -> qudot_vm::RunResult {
    execute(&parse_program(src).unwrap(), &cfg).unwrap()
}

#[test]
fn appendix_parses_and_round_trips() {
    let p = parse_program(APPENDIX).unwrap();
    assert_eq!(p.header(), Header { qubits: 41, ensemble: 500_000 });
    assert_eq!(p.gate().regs, 9);
    assert_eq!(p.gate().qubit_regs, 7);
    assert_eq!(p.instructions()[9], Instr::ILoad(IReg(5), 10057));
    assert_eq!(p.label("ModExp"), Some(13));
    assert_eq!(p.to_string(), APPENDIX);
    assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    let mults = p.instructions().iter().filter(|i| matches!(i, Instr::CIQuMulMod(..))).count();
    assert_eq!(mults, 1);
}

/// Period finding for 15 with a 4-qubit control register, written out by hand.
const SMALL_SHOR: &str = "\
.qudot qubits=8, ensemble=4000
.gate main: args=0, regs=9, qubit_regs=7
iload r1, 1
iload r2, 4
iload r3, 5
iload r4, 8
qload_seq q0, 1, 4
qloadr q1, r3
qloadr q2, r4
hon q0
xon q2
iload r5, 15
iload r6, 7
move r7, r2
iload r9, 0
ModExp:
printr r7
brlez r7, doneModExp
modpow r8, r6, r9, r5
qloadr q3, r7
ciqumul_mod r8, r5, q1, q2, q3
decr r7
incr r9
br ModExp
doneModExp:
qload_seq q4, 5, 8
mon q4
qloadr q5, r1
qloadr q6, r2
qft_inv q5, q6
halt
";

#[test]
fn small_period_finding_run() {
    let res = run(SMALL_SHOR, RunConfig { seed: 3, ..RunConfig::default() });
    assert_eq!(res.diagnostics, "4\n3\n2\n1\n0\n");
    assert_eq!(res.peak_layers, 16);
    assert_eq!(res.table.total(), 4000);
    assert_eq!(res.collapses.len(), 1);
    let lower = [1u64, 7, 4, 13];
    assert!(lower.contains(&res.collapses[0]));
    // order of 7 mod 15 is 4, so the control register lands on multiples of 16/4
    let upper = res.table.register_counts(RegisterRange::new(1, 4).unwrap());
    assert!(upper.keys().all(|m| m % 4 == 0), "{upper:?}");
    assert_eq!(upper.len(), 4);
    for (bits, _) in res.table.iter() {
        assert_eq!(bits.register_value(RegisterRange::new(5, 8).unwrap()), res.collapses[0]);
    }
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let cfg = RunConfig { seed: 11, ..RunConfig::default() };
    let a = run(SMALL_SHOR, cfg.clone());
    let b = run(SMALL_SHOR, cfg);
    assert_eq!(a.table, b.table);
    let c = run(SMALL_SHOR, RunConfig { seed: 12, ..RunConfig::default() });
    assert_ne!(a.table, c.table);
}

#[test]
fn sample_override_and_precision() {
    let res = run(SMALL_SHOR, RunConfig { samples: Some(10), precision: Precision::Double, ..RunConfig::default() });
    assert_eq!(res.table.total(), 10);
}

#[test]
fn resample_collapse_spreads_over_lower_outcomes() {
    let res = run(
        SMALL_SHOR,
        RunConfig { samples: Some(20_000), resample_collapse: true, seed: 5, ..RunConfig::default() },
    );
    assert_eq!(res.table.total(), 20_000);
    let lower = res.table.register_counts(RegisterRange::new(5, 8).unwrap());
    assert_eq!(lower.keys().copied().collect::<Vec<_>>(), vec![1, 4, 7, 13]);
    for &c in lower.values() {
        assert!((c as f64 / 20_000.0 - 0.25).abs() < 0.02);
    }
    assert!(res.collapses.is_empty());
}

#[test]
fn hadamard_ensemble_is_fair() {
    let src = ".qudot qubits=1, ensemble=100000\n.gate main: args=0, regs=1, qubit_regs=1\nqload_seq q0, 1, 1\nhon q0\nhalt\n";
    let res = run(src, RunConfig { seed: 1, ..RunConfig::default() });
    let zero = res.table.frequency(&"0".parse::<BitString>().unwrap());
    assert!((zero - 0.5).abs() < 0.005, "{zero}");
}

#[test]
fn controlled_phase_extensions() {
    // H on both, CR_2 then inverse CR_2 restores |++>
    let src = "\
.qudot qubits=2, ensemble=1000
.gate main: args=0, regs=2, qubit_regs=2
iload r1, 1
iload r2, 2
qloadr q0, r1
qloadr q1, r2
hon q0
hon q1
cron q0, q1, 2
cron q0, q1, -2
ron q1, 3
ron q1, -3
hon q1
hon q0
cxon q0, q1
halt
";
    let res = run(src, RunConfig::default());
    assert_eq!(res.table.count(&"00".parse().unwrap()), 1000);
}

#[test]
fn runtime_errors_name_the_instruction() {
    let src = "\
.qudot qubits=3, ensemble=10
.gate main: args=0, regs=5, qubit_regs=3
qload_seq q0, 1, 3
hon q0
iload r1, 2
iload r2, 3
iload r3, 1
iload r4, 2
qloadr q1, r3
qloadr q2, r4
ciqumul_mod r1, r2, q1, q2, q1
halt
";
    let err = execute(&parse_program(src).unwrap(), &RunConfig::default()).unwrap_err();
    assert_eq!(err.index, 8);
    assert_eq!(err.line, 11);
    assert!(matches!(err.kind, RuntimeErrorKind::Engine(QumvnError::ControlInRegister { .. })));

    let unset = ".qudot qubits=2, ensemble=1\n.gate main: args=0, regs=1, qubit_regs=2\nhon q1\nhalt\n";
    let err = execute(&parse_program(unset).unwrap(), &RunConfig::default()).unwrap_err();
    assert_eq!(err.kind, RuntimeErrorKind::UnsetQubitRegister(QReg(1)));

    let no_halt = ".qudot qubits=1, ensemble=1\n.gate main: args=0, regs=1, qubit_regs=1\nincr r1\n";
    let err = execute(&parse_program(no_halt).unwrap(), &RunConfig::default()).unwrap_err();
    assert_eq!(err.kind, RuntimeErrorKind::NoHalt);

    let spin = ".qudot qubits=1, ensemble=1\n.gate main: args=0, regs=1, qubit_regs=1\nL:\nbr L\n";
    let err = execute(&parse_program(spin).unwrap(), &RunConfig { max_steps: 100, ..RunConfig::default() }).unwrap_err();
    assert_eq!(err.kind, RuntimeErrorKind::StepLimit(100));
}

#[test]
fn non_definite_register_is_rejected() {
    let src = "\
.qudot qubits=3, ensemble=10
.gate main: args=0, regs=5, qubit_regs=3
qload_seq q0, 1, 3
hon q0
iload r1, 2
iload r2, 3
iload r3, 2
iload r4, 3
qloadr q1, r3
qloadr q2, r4
iquadd_mod r1, r2, q1, q2
halt
";
    let err = execute(&parse_program(src).unwrap(), &RunConfig::default()).unwrap_err();
    assert!(matches!(err.kind, RuntimeErrorKind::Engine(QumvnError::NonDefiniteRegister { .. })));
}

#[test]
fn bad_program_reports_line() {
    let e = parse_program(".qudot qubits=2, ensemble=1\n.gate main: args=0, regs=1, qubit_regs=1\n\nhon q0\nmystery q0\n").unwrap_err();
    assert_eq!(e.line, 5);
    assert_eq!(e.kind, ParseErrorKind::UnknownOpcode("mystery".into()));
}

fn ireg() -> impl Strategy<Value = IReg> {
    (1u16..=9).prop_map(IReg)
}

fn ireg_any() -> impl Strategy<Value = IReg> {
    (0u16..=9).prop_map(IReg)
}

fn qreg() -> impl Strategy<Value = QReg> {
    (0u16..7).prop_map(QReg)
}

fn instr() -> impl Strategy<Value = Instr> {
    prop_oneof![
        (ireg(), any::<i64>()).prop_map(|(r, v)| Instr::ILoad(r, v)),
        (ireg(), ireg_any()).prop_map(|(a, b)| Instr::Move(a, b)),
        ireg().prop_map(Instr::Incr),
        ireg().prop_map(Instr::Decr),
        ireg_any().prop_map(Instr::PrintR),
        Just(Instr::Br("Top".into())),
        ireg_any().prop_map(|r| Instr::Brlez(r, "End".into())),
        (qreg(), ireg_any()).prop_map(|(q, r)| Instr::QLoadR(q, r)),
        (qreg(), 1i64..=8, 0i64..8).prop_map(|(q, lo, d)| Instr::QLoadSeq(q, lo, (lo + d).min(8))),
        qreg().prop_map(Instr::Hon),
        qreg().prop_map(Instr::Xon),
        (qreg(), -9i64..9).prop_map(|(q, k)| Instr::Ron(q, k)),
        (qreg(), qreg()).prop_map(|(a, b)| Instr::Cxon(a, b)),
        (qreg(), qreg(), -9i64..9).prop_map(|(a, b, k)| Instr::Cron(a, b, k)),
        (ireg_any(), qreg(), qreg()).prop_map(|(r, a, b)| Instr::IQuAdd(r, a, b)),
        (ireg_any(), ireg_any(), qreg(), qreg()).prop_map(|(r, n, a, b)| Instr::IQuAddMod(r, n, a, b)),
        (ireg_any(), ireg_any(), qreg(), qreg(), qreg()).prop_map(|(r, n, a, b, c)| Instr::CIQuMulMod(r, n, a, b, c)),
        (ireg(), ireg_any(), ireg_any(), ireg_any()).prop_map(|(d, b, e, m)| Instr::ModPow(d, b, e, m)),
        qreg().prop_map(Instr::Mon),
        (qreg(), qreg()).prop_map(|(a, b)| Instr::QftInv(a, b)),
        Just(Instr::Halt),
    ]
}

fn render(body: &[Instr]) -> String {
    let mut s = String::from(".qudot qubits=8, ensemble=100\n.gate main: args=0, regs=9, qubit_regs=7\nTop:\n");
    for i in body {
        s.push_str(&format!("{i}\n"));
    }
    s.push_str("End:\nhalt\n");
    s
}

proptest! {
    #[test]
    fn printing_and_parsing_round_trip(body in prop::collection::vec(instr(), 0..40)) {
        let text = render(&body);
        let p: Program = parse_program(&text).unwrap();
        prop_assert_eq!(&p.instructions()[..body.len()], &body[..]);
        prop_assert_eq!(p.to_string(), text.clone());
        prop_assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn modpow_is_repeated_squaring(base in -1000i64..100_000, e in 1i64..40, m in 2i64..1_000_000) {
        let prev = qudot_vm::modpow_semantics(base, e - 1, m).unwrap();
        prop_assert_eq!(qudot_vm::modpow_semantics(base, e, m).unwrap(), (prev as i128 * prev as i128 % m as i128) as i64);
    }
}
