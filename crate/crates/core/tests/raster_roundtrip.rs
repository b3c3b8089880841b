mod common;

use common::grid_from;
use proptest::prelude::*;
use terraslope_core::raster::{
    encode_ascii_grid, encode_pgm, gray_level, parse_ascii_grid, read_ascii_grid, write_ascii_grid,
};

fn masked(max: usize) -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(
        prop_oneof![1 => Just(None), 6 => (-1e4f64..1e4).prop_map(Some)],
        1..=max,
    )
}

proptest! {
    #[test]
    fn ascii_round_trip(cols in 1usize..12, cells in masked(96), cell_size in 0.1f64..100.0) {
        let rows = cells.len().div_ceil(cols);
        let mut cells = cells;
        cells.resize(rows * cols, None);
        let g = terraslope_core::HeightGrid::from_options(rows, cols, cell_size, -9999.0, cells).unwrap();
        let back = parse_ascii_grid(&encode_ascii_grid(&g)).unwrap();
        prop_assert_eq!(back.dims(), g.dims());
        prop_assert_eq!(back.mask(), g.mask());
        prop_assert_eq!(back.valid_count(), g.valid_count());
        prop_assert_eq!(back.cell_size(), g.cell_size());
        for i in 0..g.len() {
            if let (Some(a), Some(b)) = (g.value(i), back.value(i)) {
                prop_assert!((a - b).abs() <= 1e-5 * a.abs().max(1e-300), "{} -> {}", a, b);
            }
        }
    }

    #[test]
    fn pgm_is_monotone(a in -50.0f64..150.0, b in -50.0f64..150.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(gray_level(lo, 0.0, 100.0) <= gray_level(hi, 0.0, 100.0));
    }
}

#[test]
fn file_round_trip_and_pgm_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.asc");
    let g = grid_from(
        2,
        3,
        &[
            Some(0.0),
            Some(50.0),
            Some(100.0),
            None,
            Some(25.0),
            Some(75.0),
        ],
    );
    write_ascii_grid(&g, &path).unwrap();
    assert_eq!(read_ascii_grid(&path).unwrap(), g);

    let body = &encode_pgm(&g, 0.0, 100.0).unwrap()[b"P5\n3 2\n255\n".len()..];
    assert_eq!(body, &[0, 127, 255, 0, 63, 191]);
}

#[test]
fn missing_file_is_io_error() {
    let err = read_ascii_grid("/nonexistent/dir/x.asc").unwrap_err();
    assert!(matches!(err, terraslope_core::Error::Io { .. }));
}
