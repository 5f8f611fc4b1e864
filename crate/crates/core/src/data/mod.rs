//! Graph bundles on disk and in memory, plus the three split protocols.
//!
//! A bundle directory holds five UTF-8 files:
//!
//! | file           | content                                                   |
//! |----------------|-----------------------------------------------------------|
//! | `meta.json`    | `{"n": int, "d0": int, "c": int, "dataset": string}`      |
//! | `features.csv` | `node_id,v_1,...,v_d0` per node                            |
//! | `edges.csv`    | `src,dst` per directed citation                           |
//! | `labels.csv`   | `node_id,class_index` per node                            |
//! | `split.json`   | `{"train": [ids], "val": [ids], "test": [ids]}`           |

mod bundle;
mod split;
pub mod synthetic;

pub use bundle::{
    load_bundle, save_bundle, BundleMeta, FixedSplit, GraphBundle, EDGES_FILE, FEATURES_FILE,
    LABELS_FILE, META_FILE, SPLIT_FILE,
};
pub use split::{make_split, SplitId, SplitMask};

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;
    use crate::error::Error;

    fn write_fixture(dir: &std::path::Path) {
        fs::write(dir.join(META_FILE), r#"{"n": 3, "d0": 2, "c": 2, "dataset": "tiny"}"#).unwrap();
        fs::write(dir.join(FEATURES_FILE), "0,1,3\n2,0,0\n1,0.5,0.5\n").unwrap();
        fs::write(dir.join(EDGES_FILE), "0,1\n1,0\n1,2\n").unwrap();
        fs::write(dir.join(LABELS_FILE), "0,0\n1,1\n2,1\n").unwrap();
        fs::write(dir.join(SPLIT_FILE), r#"{"train": [0], "val": [1], "test": [2]}"#).unwrap();
    }

    #[test]
    fn fixture_loads_and_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path());
        let b = load_bundle(tmp.path()).unwrap();
        assert_eq!((b.n(), b.d0(), b.num_classes), (3, 2, 2));
        assert_eq!(b.adjacency.num_edges(), 2);
        assert_eq!(b.features.column(0), vec![0.25, 0.75]);
        assert_eq!(b.features.column(2), vec![0.0, 0.0]);
        assert_eq!(b.labels, vec![0, 1, 1]);

        let out = tmp.path().join("copy");
        save_bundle(&b, &out).unwrap();
        let again = load_bundle(&out).unwrap();
        assert_eq!(again.meta(), b.meta());
        assert_eq!(again.adjacency, b.adjacency);
        assert_eq!(again.fixed_split, b.fixed_split);
        assert!(again.features.sub(&b.features).unwrap().max_abs() < 1e-15);
    }

    fn expect_load_error(file: &str, contents: &str, line: usize) {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path());
        fs::write(tmp.path().join(file), contents).unwrap();
        match load_bundle(tmp.path()) {
            Err(Error::Load { file: f, line: l, .. }) => {
                assert!(f.ends_with(file), "{f:?}");
                assert_eq!(l, line);
            }
            other => panic!("expected load error in {file}, got {other:?}"),
        }
    }

    #[test]
    fn malformed_files_name_file_and_line() {
        expect_load_error(FEATURES_FILE, "0,1,3\n1,x,0\n2,0,0\n", 2);
        expect_load_error(FEATURES_FILE, "0,1,3\n1,0\n2,0,0\n", 2);
        expect_load_error(LABELS_FILE, "0,0\n1,5\n2,1\n", 2);
        expect_load_error(EDGES_FILE, "0,1\n0,9\n", 2);
        expect_load_error(LABELS_FILE, "0,0\n0,1\n2,1\n", 2);
    }

    #[test]
    fn missing_file_is_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path());
        fs::remove_file(tmp.path().join(EDGES_FILE)).unwrap();
        let err = load_bundle(tmp.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains(EDGES_FILE));
    }
}
