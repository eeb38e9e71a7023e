use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;
use tpo_bench::{engaged_stack, sample_state};
use tpo_core::robot::{load_robot_description, DEFAULT_ROBOT};
use tpo_core::station::{
    decode_message, encode_message, run_headless, Condition, ConfigSnapshot, Script,
};

fn kinematics(c: &mut Criterion) {
    let model = load_robot_description(DEFAULT_ROBOT).unwrap();
    let q = DVector::from_vec(vec![0.1, 0.5, -0.2, -1.1, 0.3, 0.4]);
    c.bench_function("jacobian_6dof", |b| {
        b.iter(|| model.right.chain.jacobian(black_box(q.as_slice())).unwrap())
    });
    c.bench_function("forward_kinematics_6dof", |b| {
        b.iter(|| {
            model
                .right
                .chain
                .forward_kinematics(black_box(q.as_slice()))
                .unwrap()
        })
    });
}

fn stack_tick(c: &mut Criterion) {
    let stack = engaged_stack();
    c.bench_function("stack_tick", |b| {
        b.iter_batched_ref(
            || stack.clone(),
            |s| s.step().unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

fn codec(c: &mut Criterion) {
    let message = sample_state();
    let bytes = encode_message(&message).unwrap();
    c.bench_function("encode_robot_state", |b| {
        b.iter(|| encode_message(black_box(&message)).unwrap())
    });
    c.bench_function("decode_robot_state", |b| {
        b.iter(|| decode_message(black_box(&bytes)).unwrap())
    });
}

fn headless(c: &mut Criterion) {
    let config = ConfigSnapshot::shipped(Condition::C);
    let script = Script::parse(
        r#"{"duration":5.0,"right_wrist":[[0.0,0.3,-0.2,1.0],[2.0,0.4,-0.2,0.95]],"events":[{"t":0.1,"button":"right1"}]}"#,
    )
    .unwrap();
    let mut group = c.benchmark_group("headless");
    group.sample_size(10);
    group.bench_function("five_seconds", |b| {
        b.iter(|| run_headless(&config, &script, std::io::sink()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kinematics, stack_tick, codec, headless);
criterion_main!(benches);
