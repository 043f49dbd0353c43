use std::collections::HashMap;
use std::time::Instant;

use gnd_core::pipeline::{run_pipeline, ProblemSpec};
use gnd_core::ring::{RingContext, TermOrder};
use gnd_core::text::{eval_expr, parse_expr, parse_poly, print_fraction, print_poly};

fn run(name: &str, spec: &ProblemSpec) {
    let t0 = Instant::now();
    match run_pipeline(spec) {
        Ok(res) => {
            println!("== {name}: {:?}", t0.elapsed());
            println!("kernel gens: {}", res.kernel.gens.len());
            for g in &res.kernel.gens {
                println!("  ker: {}", print_poly(&g.primitive_part()));
            }
            println!("route = {:?}", res.red.z_route);
            println!("d' = {}", print_poly(&res.red.dprime));
            println!("d  = {}", print_poly(&res.red.d));
            println!("C:");
            for g in &res.base.c_basis {
                println!("  {}", print_poly(&g.primitive_part()));
            }
            println!("s = {}", print_fraction(&res.dd.s));
            println!("p = {}", res.dd.p_deg);
            for (i, q) in res.output.q.iter().enumerate() {
                let s = print_fraction(q);
                println!("QT[{}] = {}", i + 1, if s.len() > 300 { format!("{}... ({} chars)", &s[..300], s.len()) } else { s });
            }
            for (i, g) in res.output.g.iter().enumerate() {
                let s = print_fraction(g);
                println!("g[{}] = {}", i + 1, if s.len() > 300 { format!("{}... ({} chars)", &s[..300], s.len()) } else { s });
            }
            println!("report:");
            for c in &res.report.checks {
                println!("  [{}] {} {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
            }
        }
        Err(e) => {
            println!("== {name}: ERROR after {:?}: {e}", t0.elapsed());
        }
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "ex7".into());
    match which.as_str() {
        "ex7" => {
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
                "sum(i, 0, 30, a1*x3^i/factorial(i)) + sum(i, 31, 50, a2*x3^i/factorial(i))",
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
            run("ex7", &spec);
        }
        "ex4p" => {
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
            let y3e = parse_expr(
                "sum(i, 0, 30, a1*x1^i/factorial(i)) + sum(i, 31, 50, a2*x2*x1^i/factorial(i))",
                1,
            )
            .unwrap();
            let y3 = eval_expr(&y3e, &ring, &HashMap::new(), 1).unwrap();
            let spec = ProblemSpec {
                ring: ring.clone(),
                aid: vec![aid],
                xid: vec![xid],
                yid: vec![yid],
                images: vec![y1, y2, y3],
                trunc_order: 31,
                injective: true,
                debug: true,
                pivot: None,
                budget: None,
            };
            run("ex4p (injective)", &spec);
        }
        "ex16" => {
            let ring = RingContext::new(
                &["a1", "a2"],
                &["x1", "x2"],
                &["Y1", "Y2", "Y3", "Y4"],
                &[],
                &[],
                TermOrder::Degrevlex,
            );
            let xid = parse_poly("x1^2-x2^3", &ring).unwrap().num;
            let f1 = parse_poly("Y3^2-x2^2*Y1*Y2", &ring).unwrap().num;
            let f2 = parse_poly("Y4^2-x2*Y2*Y3", &ring).unwrap().num;
            let y3 = parse_poly("x2*(1+a1*x2)", &ring).unwrap();
            let y4 = parse_poly("x2*(1+a2*x2^2)", &ring).unwrap();
            let y1e = parse_expr("(1+a1*x2)^3*invp((1+a2*x2^2)^2, 12)", 1).unwrap();
            let y1 = eval_expr(&y1e, &ring, &HashMap::new(), 1).unwrap();
            let y2e = parse_expr("(1+a2*x2^2)^2*invp(1+a1*x2, 12)", 1).unwrap();
            let y2 = eval_expr(&y2e, &ring, &HashMap::new(), 1).unwrap();
            let spec = ProblemSpec {
                ring: ring.clone(),
                aid: vec![],
                xid: vec![xid],
                yid: vec![f1, f2],
                images: vec![y1, y2, y3, y4],
                trunc_order: 12,
                injective: true,
                debug: true,
                pivot: None,
                budget: None,
            };
            run("ex16 (injective)", &spec);
        }
        _ => eprintln!("unknown example"),
    }
}
