use cptsim::table::{Format, Precision, ResultTable};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..1e3,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

fn table() -> impl Strategy<Value = ResultTable> {
    (1usize..5, 0usize..20).prop_flat_map(|(ncols, nrows)| {
        (
            prop::collection::vec(prop::collection::vec(finite(), nrows), ncols),
            prop::collection::vec(("[a-z][a-z0-9_.]{0,8}", "[ -~]{0,20}"), 0..4),
        )
            .prop_map(|(cols, meta)| {
                let mut t = ResultTable::new();
                for (k, v) in meta {
                    t.set_meta(k, v.trim_end()).unwrap();
                }
                for (i, c) in cols.into_iter().enumerate() {
                    t.add_column(format!("c{i}"), c).unwrap();
                }
                t
            })
    })
}

fn precision() -> impl Strategy<Value = Precision> {
    prop_oneof![Just(Precision::Full), (1usize..=17).prop_map(Precision::Significant)]
}

proptest! {
    #[test]
    fn rerendering_is_stable(t in table(), p in precision(), json in any::<bool>()) {
        let fmt = if json { Format::Json } else { Format::Csv };
        let text = t.render(fmt, p);
        let back = ResultTable::parse(fmt, &text).unwrap();
        prop_assert_eq!(back.names(), t.names());
        prop_assert_eq!(back.meta(), t.meta());
        prop_assert_eq!(back.render(fmt, p), text);
        for name in t.names() {
            let (a, b) = (t.column(name).unwrap(), back.column(name).unwrap());
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(p.round(*x).to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn full_precision_is_bit_exact(t in table(), json in any::<bool>()) {
        let fmt = if json { Format::Json } else { Format::Csv };
        let back = ResultTable::parse(fmt, &t.render(fmt, Precision::Full)).unwrap();
        prop_assert_eq!(back, t);
    }
}
