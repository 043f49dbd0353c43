use std::collections::HashMap;
use std::time::Instant;

use gnd_core::pipeline::{run_pipeline, ProblemSpec, ZRoute};
use gnd_core::ring::{RingContext, TermOrder};
use gnd_core::text::{eval_expr, parse_expr, parse_poly, print_fraction, print_poly};

fn main() {
    let ring = RingContext::new(
        &["a1", "a2", "a3"],
        &["x1", "x2"],
        &["Y1", "Y2", "Y3"],
        &[],
        &[],
        TermOrder::Degrevlex,
    );
    let aid = parse_poly("a3^2+a3+1", &ring).unwrap().num;
    ring.set_param_rels(vec![aid.clone().monic()]);
    let xid = parse_poly("x1^3-x2^2", &ring).unwrap().num;
    let yid = parse_poly("Y1^3-Y2^3", &ring).unwrap().num;
    let y1 = parse_poly("a1*x2", &ring).unwrap();
    let y2 = parse_poly("a1*a3*x2", &ring).unwrap();
    let nterms: i64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let hi2: i64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(50);
    let expr = parse_expr(
        &format!("sum(i, 0, {nterms}, a1*x1^i/factorial(i)) + sum(i, {}, {hi2}, a2*x2*x1^i/factorial(i))", nterms + 1),
        1,
    )
    .unwrap();
    let y3 = eval_expr(&expr, &ring, &HashMap::new(), 1).unwrap();
    let spec = ProblemSpec {
        ring: ring.clone(),
        aid: vec![aid],
        xid: vec![xid],
        yid: vec![yid],
        images: vec![y1, y2, y3],
        trunc_order: 31,
        injective: false,
        debug: true,
        pivot: None,
        budget: None,
    };
    let t0 = Instant::now();
    match run_pipeline(&spec) {
        Ok(res) => {
            println!("elapsed: {:?}", t0.elapsed());
            println!("kernel:");
            for g in &res.kernel.gens {
                println!("  {}", print_poly(g));
            }
            println!("d' = {}", print_poly(&res.red.dprime));
            println!("d  = {}", print_poly(&res.red.d));
            println!("route = {:?}", res.red.z_route);
            println!("C basis:");
            for g in &res.base.c_basis {
                println!("  {}", print_poly(&g.primitive_part()));
            }
            println!("H:");
            for i in 0..res.dd.h_matrix.rows {
                let row: Vec<String> = (0..res.dd.h_matrix.cols)
                    .map(|j| print_poly(res.dd.h_matrix.at(i, j)))
                    .collect();
                println!("  {}", row.join(",  "));
            }
            println!("G:");
            for i in 0..res.dd.g_matrix.rows {
                let row: Vec<String> = (0..res.dd.g_matrix.cols)
                    .map(|j| print_poly(res.dd.g_matrix.at(i, j)))
                    .collect();
                println!("  {}", row.join(",  "));
            }
            println!("s = {}", print_fraction(&res.dd.s));
            println!("p = {}", res.dd.p_deg);
            for (i, h) in res.output.h.iter().enumerate() {
                println!("h[{}] = {}", i + 1, print_fraction(h));
            }
            for (i, q) in res.output.q.iter().enumerate() {
                println!("QT[{}] = {}", i + 1, print_fraction(q));
            }
            for (i, g) in res.output.g.iter().enumerate() {
                println!("g[{}] = {}", i + 1, print_fraction(g));
            }
            println!("report:");
            for c in &res.report.checks {
                println!("  [{}] {} {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
            }
        }
        Err(e) => {
            println!("elapsed: {:?}", t0.elapsed());
            println!("ERROR: {e}");
        }
    }
}
