use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hh_inverse::{
    run_inversion, solve_adjoint_conductances, solve_adjoint_exponents, ParameterKind,
    ResidualSignal, StoppingRule,
};
use hh_inverse_bench::{conductances, exponents, Fixture};

fn kernels(c: &mut Criterion) {
    for (name, f) in [("conductances", conductances()), ("exponents", exponents())] {
        let Fixture {
            problem,
            observation,
            iterate,
        } = f;
        let (g, e) = problem.parameters_at(&iterate);
        let fwd = problem.forward(&iterate).unwrap();
        let resid = ResidualSignal::between(&observation, &fwd).unwrap();

        c.bench_function(&format!("{name}/forward"), |b| {
            b.iter(|| problem.forward(black_box(&iterate)).unwrap())
        });
        c.bench_function(&format!("{name}/adjoint"), |b| {
            b.iter(|| match iterate.kind {
                ParameterKind::Conductances => {
                    solve_adjoint_conductances(&problem.consts, &g, &e, black_box(&fwd), &resid)
                        .unwrap()
                }
                ParameterKind::Exponents => {
                    solve_adjoint_exponents(&problem.consts, &g, &e, black_box(&fwd), &resid)
                        .unwrap()
                }
            })
        });
        c.bench_function(&format!("{name}/direction"), |b| {
            b.iter(|| {
                problem
                    .landweber_direction(black_box(&iterate), &observation)
                    .unwrap()
            })
        });
        // 100 safeguarded iterations with a threshold that is never reached.
        let rule = StoppingRule::new(2.01, 0.0, 100).unwrap();
        c.bench_function(&format!("{name}/100_iterations"), |b| {
            b.iter(|| {
                run_inversion(&problem, black_box(&iterate), &observation, &rule, None).unwrap()
            })
        });
    }
}

criterion_group!(benches, kernels);
criterion_main!(benches);
