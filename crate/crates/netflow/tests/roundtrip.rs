use std::path::Path;

use netflow::network_io::{network_to_string, parse_network};
use netflow_core::{generate_tree, TreeParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tree_files_round_trip(
        generations in 1u32..6,
        radius in 1e-6f64..1e-3,
        exponent in 2.0f64..3.5,
        ratio in 0.5f64..0.95,
        angle in 0.1f64..1.2,
        scale in prop::option::of(1e8f64..1e14),
    ) {
        let params = TreeParams {
            generations,
            root_radius: radius,
            murray_exponent: exponent,
            root_length: 40.0 * radius,
            length_ratio: ratio,
            branch_angle: angle,
        };
        let mut net = generate_tree(&params).unwrap();
        if let Some(s) = scale {
            net = net.with_resistances(|e| s * (1.0 + e.id as f64)).unwrap();
        }
        let text = network_to_string(&net);
        let back = parse_network(&text, Path::new("t.json")).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(network_to_string(&back), text);
    }
}
