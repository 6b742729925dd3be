use std::io::BufReader;

use moyalrel::phasegrid::{dft_q, Direction, GridField, PhaseGrid, UnitSystem};
use moyalrel::C64;
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = PhaseGrid> {
    (3u32..6, 1.0f64..40.0, -2.0f64..2.0, 0.5f64..2.0)
        .prop_map(|(e, l, pc, h)| PhaseGrid::new(1 << e, l, pc, UnitSystem::new(h, 1.0, 1.0, 1.0).unwrap()).unwrap())
}

fn field() -> impl Strategy<Value = GridField> {
    grid().prop_flat_map(|g| {
        proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), g.n * g.n).prop_map(move |v| {
            let vals = ndarray::Array2::from_shape_fn((g.n, g.n), |(k, j)| C64::new(v[k * g.n + j].0, v[k * g.n + j].1));
            GridField::from_values(g, vals).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattices_are_conjugate(g in grid()) {
        prop_assert!((g.dq * g.dp * g.n as f64 - 2.0 * std::f64::consts::PI * g.hbar()).abs() < 1e-12 * g.hbar());
        prop_assert!((g.p(g.n / 2) - g.p_center()).abs() < 1e-12);
    }

    #[test]
    fn dft_round_trip(f in field()) {
        let back = dft_q(&dft_q(&f, Direction::Forward), Direction::Inverse);
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn csv_round_trip_is_exact(f in field()) {
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = GridField::read_csv(*f.grid(), BufReader::new(buf.as_slice())).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn json_round_trip_is_exact(f in field()) {
        let mut buf = Vec::new();
        f.write_json(&mut buf).unwrap();
        let back = GridField::read_json(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), f.values());
        // The header stores extents; steps are rebuilt from them.
        let (a, b) = (back.grid(), f.grid());
        prop_assert_eq!(a.n, b.n);
        for (x, y) in [(a.dq, b.dq), (a.dp, b.dp), (a.p_min, b.p_min), (a.q_min, b.q_min)] {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}
