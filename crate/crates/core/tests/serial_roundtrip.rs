use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ndf_core::corpus::generate_program;
use ndf_core::fusion::auto_fuse;
use ndf_core::graph::{deserialize, serialize, ActorKind, DataflowGraph};
use ndf_core::learn::{export_ndf, DiffModel};
use ndf_core::lower::{lower_conventional, lower_ndf};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lowered_graphs_round_trip(seed in any::<u64>(), inexact in any::<bool>(), ndf in any::<bool>(), fuse in any::<bool>()) {
        let ast = generate_program(&mut ChaCha8Rng::seed_from_u64(seed), inexact);
        let mut g = if ndf { lower_ndf(&ast) } else { lower_conventional(&ast) };
        if fuse {
            g = auto_fuse(&g, 12);
        }
        let text = serialize(&g).unwrap();
        prop_assert_eq!(deserialize(&text).unwrap(), g);
    }

    #[test]
    fn constants_keep_every_bit(value in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let mut g = DataflowGraph::new();
        let c = g.add_actor(ActorKind::Const { value });
        let s = g.add_actor(ActorKind::Sink { name: "y".into() });
        g.connect(c, 0, s, 0);
        let back = deserialize(&serialize(&g).unwrap()).unwrap();
        let ActorKind::Const { value: v } = back.actors[0].kind else { panic!("kind changed") };
        prop_assert_eq!(v.to_bits(), value.to_bits());
    }

    #[test]
    fn trained_weights_round_trip(seed in 0u64..1000, hidden in 1usize..8) {
        let g = export_ndf(&DiffModel::new(hidden, 4.0, seed));
        prop_assert_eq!(deserialize(&serialize(&g).unwrap()).unwrap(), g);
    }
}
