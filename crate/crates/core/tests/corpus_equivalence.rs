use ndf_core::corpus::generate_corpus;
use ndf_core::engine::{run, Limits, Policy};
use ndf_core::frontend::{interpret, Env};
use ndf_core::lower::{lower_conventional, lower_ndf, stats};

fn close(a: &Env, b: &Env, exact: bool) -> bool {
    a.len() == b.len()
        && a.iter().all(|(k, x)| {
            b.get(k).is_some_and(|y| if exact { x == y } else { (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0) })
        })
}

#[test]
fn lowered_graphs_match_the_interpreter() {
    let corpus = generate_corpus(200, 10, 1);
    for (i, p) in corpus.iter().enumerate() {
        let conv = lower_conventional(&p.ast);
        let ndf = lower_ndf(&p.ast);
        for inputs in &p.inputs {
            let want = interpret(&p.ast, inputs).unwrap();
            for (name, g) in [("conventional", &conv), ("ndf", &ndf)] {
                let got = run(g, inputs, Policy::Fifo, &Limits::default())
                    .unwrap_or_else(|e| panic!("program {i} {name} failed: {e}\n{}", p.source))
                    .outputs;
                assert!(close(&want, &got, p.exact), "program {i} {name} on {inputs:?}: {want:?} vs {got:?}\n{}", p.source);
            }
        }
        if p.ast.has_control() {
            let (s_ndf, s_conv) = (stats(&ndf), stats(&conv));
            assert!(
                s_ndf.total_actors_excluding_copies <= s_conv.total_actors_excluding_copies,
                "program {i}: ndf {} > conventional {}\n{}",
                s_ndf.total_actors_excluding_copies,
                s_conv.total_actors_excluding_copies,
                p.source
            );
        }
    }
}
