#![no_main]
use libfuzzer_sys::fuzz_target;
use tailindex::entropy_index::{IndexCurve, IndexKind};
use tailindex::io::{parse_curves_csv, write_curves_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(table) = parse_curves_csv(text) else { return };
    let curves: Vec<IndexCurve> = table
        .columns
        .iter()
        .map(|values| IndexCurve {
            grid: table.grid.clone(),
            values: values.clone(),
            kind: IndexKind::Shannon,
            components: vec![1, 2],
        })
        .collect();
    let again = parse_curves_csv(&write_curves_csv(&curves).unwrap()).unwrap();
    assert_eq!(again.grid, table.grid);
    assert_eq!(again.columns, table.columns);
});
