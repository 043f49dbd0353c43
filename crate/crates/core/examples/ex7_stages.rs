use std::collections::HashMap;
use std::time::Instant;

use gnd_core::pipeline::*;
use gnd_core::ring::{RingContext, TermOrder};
use gnd_core::text::{eval_expr, parse_expr, parse_poly, print_poly};

fn main() {
    let nterms: i64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let hi2: i64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(50);
    let ring = RingContext::new(
        &["a1", "a2", "a3"],
        &["x1", "x2", "x3"],
        &["Y1", "Y2", "Y3"],
        &[],
        &[],
        TermOrder::Degrevlex,
    );
    let aid = parse_poly("a3^2-a1*a2", &ring).unwrap().num;
    ring.set_param_rels(vec![aid.clone().monic()]);
    let xid1 = parse_poly("x2^3-x3^2", &ring).unwrap().num;
    let xid2 = parse_poly("x1^3-x3^2", &ring).unwrap().num;
    let yid = parse_poly("Y1^3-Y2^3", &ring).unwrap().num;
    let y1 = parse_poly("a3*x1", &ring).unwrap();
    let y2 = parse_poly("a3*x2", &ring).unwrap();
    let y3e = parse_expr(
        &format!("sum(i, 0, {nterms}, a1*x3^i/factorial(i)) + sum(i, {}, {hi2}, a2*x3^i/factorial(i))", nterms+1),
        1,
    )
    .unwrap();
    let y3 = eval_expr(&y3e, &ring, &HashMap::new(), 1).unwrap();
    let spec = ProblemSpec {
        ring: ring.clone(),
        aid: vec![aid],
        xid: vec![xid1, xid2],
        yid: vec![yid],
        images: vec![y1, y2, y3],
        trunc_order: 31,
        injective: false,
        debug: true,
        pivot: None,
        budget: None,
    };
    eprintln!("start"); let t = Instant::now();
    eprintln!("validating"); spec.validate().unwrap();
    println!("validate: {:?}", t.elapsed());
    let t = Instant::now();
    let (spec2, kernel) = image_reduction(&spec).unwrap();
    println!("image_reduction: {:?} ({} kernel gens)", t.elapsed(), kernel.gens.len());
    for g in &kernel.gens {
        println!("  ker: {}", print_poly(&g.primitive_part()));
    }
    let t = Instant::now();
    let choice = choose_pnm(&spec2).unwrap();
    println!("choose_pnm: {:?}", t.elapsed());
    println!("  f[0] = {}", print_poly(&choice.f[0]));
    println!("  M = {}", print_poly(&choice.m_poly));
    println!("  N = {}", print_poly(&choice.n_poly));
    println!("  P' = {}", print_poly(&choice.pprime));
    let t = Instant::now();
    let red = augment_z(&spec2, &choice, kernel).unwrap();
    println!("augment_z: {:?} (route {:?})", t.elapsed(), red.z_route);
    println!("  d = {}", print_poly(&red.d));
    let t = Instant::now();
    let base = build_cd(&red).unwrap();
    println!("build_cd: {:?}", t.elapsed());
    for g in &base.c_basis {
        println!("  C: {}", print_poly(&g.primitive_part()));
    }
    let t = Instant::now();
    let yprime = compute_yprime(&red, &base).unwrap();
    println!("compute_yprime: {:?}", t.elapsed());
    let t = Instant::now();
    let dd = compute_shgb(&red, &base, &yprime).unwrap();
    println!("compute_shgb: {:?}", t.elapsed());
    let t = Instant::now();
    let out = build_qg(&dd).unwrap();
    println!("build_qg: {:?}", t.elapsed());
    let t = Instant::now();
    let rep = verify_output(&dd, &out).unwrap();
    println!("verify: {:?}", t.elapsed());
    for c in &rep.checks {
        println!("  [{}] {}", if c.passed { "ok" } else { "FAIL" }, c.name);
    }
}
