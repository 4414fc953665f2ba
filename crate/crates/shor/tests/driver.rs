use proptest::prelude::*;
use qudot_vm::{parse_program, Instr};
use qumvn_core::SamplingMode;
use qumvn_shor::arith::{multiplicative_order, pow_mod};
use qumvn_shor::*;

const APPENDIX: &str = include_str!("../../vm/fixtures/shor_10057.qudot");

#[test]
fn table_one_sizing() {
    let rows = [
        (77, 7, 13, 15, 35),
        (145, 8, 15, 17, 40),
        (731, 10, 19, 21, 50),
        (1273, 11, 21, 23, 55),
        (2291, 12, 23, 25, 60),
        (10057, 14, 27, 29, 70),
    ];
    for (n, lower, upper, arith, total) in rows {
        let a = (2..n).find(|&a| arith::gcd(a, n) == 1).unwrap();
        let inst = ShorInstance::new(n, a, SizingPolicy::default()).unwrap();
        assert_eq!(
            (inst.lower, inst.upper, inst.arithmetic_qubits(), inst.reported_total()),
            (lower, upper, arith, total),
            "N = {n}"
        );
    }
}

#[test]
fn generated_program_matches_the_published_listing() {
    let fixture = parse_program(APPENDIX).unwrap();
    let inst = ShorInstance::new(10057, 4983, SizingPolicy::default()).unwrap();
    let text = generate_program(&inst, 500_000);
    let generated = parse_program(&text).unwrap();
    assert_eq!(generated.header(), fixture.header());
    assert_eq!(generated.gate(), fixture.gate());
    assert_eq!(generated.instructions(), fixture.instructions());
    assert_eq!(generated.label("ModExp"), fixture.label("ModExp"));
    assert_eq!(generated.label("doneModExp"), fixture.label("doneModExp"));
    assert_eq!(generated.to_string(), text);
}

#[test]
fn generated_programs_round_trip() {
    for (n, a) in [(15, 7), (21, 2), (77, 69), (145, 73), (731, 3), (1273, 5), (2291, 7)] {
        for sizing in [SizingPolicy::TwiceLowerMinusOne, SizingPolicy::SquareBound] {
            let inst = ShorInstance::new(n, a, sizing).unwrap();
            let text = generate_program(&inst, 1234);
            let p = parse_program(&text).unwrap();
            assert_eq!(p.to_string(), text);
            assert_eq!(p.header().qubits, inst.declared_qubits());
        }
    }
}

#[test]
fn seventy_seven_dispatches_thirteen_multiplications() {
    let inst = ShorInstance::new(77, 69, SizingPolicy::default()).unwrap();
    let opts = FactorOptions { witness: Some(69), samples: 2000, seed: 4, ..FactorOptions::default() };
    let run = run_program(&inst, &opts).unwrap();
    let countdown: Vec<u64> = run.diagnostics.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(countdown[..14], (0..=13).rev().collect::<Vec<_>>()[..]);
    assert_eq!(countdown.len(), 16);
    // loop body: brlez through br, 8 instructions per multiplication
    let program = parse_program(&generate_program(&inst, 2000)).unwrap();
    let mults = program.instructions().iter().filter(|i| matches!(i, Instr::CIQuMulMod(..))).count();
    assert_eq!(mults, 1);
    assert_eq!(run.peak_layers, 1 << 13);
}

#[test]
fn program_and_engine_routes_agree() {
    for (n, a, sizing) in [(15, 7, SizingPolicy::SquareBound), (21, 2, SizingPolicy::default()), (33, 5, SizingPolicy::default())] {
        let inst = ShorInstance::new(n, a, sizing).unwrap();
        for seed in [0, 1, 99] {
            let opts = FactorOptions { samples: 5000, seed, sizing, ..FactorOptions::default() };
            let vm = run_program(&inst, &opts).unwrap();
            let direct = run_direct::<f32>(&inst, 5000, seed, SamplingMode::Auto).unwrap();
            assert_eq!(vm.table, direct, "N = {n}, seed {seed}");
        }
    }
}

#[test]
fn end_to_end_small_moduli() {
    let opts = FactorOptions { witness: Some(7), samples: 20_000, seed: 1, sizing: SizingPolicy::SquareBound, ..FactorOptions::default() };
    let out = factor(15, &opts).unwrap();
    assert_eq!(out.factors(), Some((3, 5)));

    let classical = factor(21, &FactorOptions { witness: Some(3), ..FactorOptions::default() }).unwrap();
    assert!(matches!(classical, Factored::Classical { a: 3, p: 3, q: 7 }));

    let out = factor(21, &FactorOptions { witness: Some(2), samples: 20_000, seed: 2, ..FactorOptions::default() }).unwrap();
    let Factored::Quantum { report, .. } = out else { panic!("expected a quantum run") };
    assert!(report.successes > 0);
    assert_eq!(report.factors, Some((3, 7)));
    assert_eq!(report.samples, 20_000);
}

#[test]
fn every_success_is_a_valid_factorisation() {
    for (n, a, seed) in [(15, 7, 3), (21, 2, 5), (33, 5, 6), (35, 3, 7), (39, 7, 8), (77, 69, 9)] {
        for policy in [PeriodPolicy::BestApproximation, PeriodPolicy::order_checked()] {
            let opts = FactorOptions { witness: Some(a), samples: 5000, seed, policy, ..FactorOptions::default() };
            let Factored::Quantum { report, .. } = factor(n, &opts).unwrap() else { panic!() };
            for row in report.rows.iter().filter(|r| r.success()) {
                let (p, q) = row.factors.unwrap();
                assert!(1 < p && p <= q && q < n && p * q == n, "N = {n}: {row:?}");
            }
            assert_eq!(report.successes, report.rows.iter().filter(|r| r.success()).map(|r| r.count).sum::<u64>());
        }
    }
}

#[test]
fn csv_lists_every_reading() {
    let opts = FactorOptions { witness: Some(7), samples: 1000, seed: 3, sizing: SizingPolicy::SquareBound, ..FactorOptions::default() };
    let Factored::Quantum { report, .. } = factor(15, &opts).unwrap() else { panic!() };
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("value,frequency,success"));
    let total: u64 = lines.map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 1000);
}

fn odd_composite() -> impl Strategy<Value = (u64, u64)> {
    (15u64..10_000)
        .prop_filter("odd composite, not a prime power", |&n| {
            n % 2 == 1 && !arith::is_prime(n) && arith::prime_power(n).is_none()
        })
        .prop_flat_map(|n| (Just(n), 2..n))
        .prop_filter("coprime witness", |&(n, a)| arith::gcd(a, n) == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn order_checked_periods_are_sound((n, a) in odd_composite(), frac in 0.0f64..1.0) {
        let k = SizingPolicy::default().upper_size(n);
        let m = ((frac * (1u64 << k) as f64) as u64).min((1 << k) - 1);
        if let Some(r) = recover_period(m, k, n, a, PeriodPolicy::order_checked()) {
            prop_assert_eq!(pow_mod(a, r, n), 1);
        }
    }

    #[test]
    fn exact_peaks_recover_the_order((n, a) in odd_composite(), j in 1u64..1000) {
        let r = multiplicative_order(a, n).unwrap();
        let j = j % r;
        prop_assume!(j > 0 && arith::gcd(j, r) == 1);
        let k = SizingPolicy::default().upper_size(n);
        let m = ((j as u128) << k) / r as u128;
        let m = if ((j as u128) << k) % r as u128 * 2 >= r as u128 { m + 1 } else { m } as u64;
        prop_assert_eq!(recover_period(m, k, n, a, PeriodPolicy::order_checked()), Some(r));
    }

    #[test]
    fn best_approximation_is_closest(num in 0u64..1 << 20, den in 1u64..1 << 20, max_den in 1u64..200) {
        let (p, q) = best_approximation(num, den, max_den);
        prop_assert!(q >= 1 && q <= max_den.max(1));
        let target = num as f64 / den as f64;
        let err = (p as f64 / q as f64 - target).abs();
        for d in 1..=max_den {
            let c = (target * d as f64).round();
            prop_assert!(err <= (c / d as f64 - target).abs() + 1e-12);
        }
    }
}
