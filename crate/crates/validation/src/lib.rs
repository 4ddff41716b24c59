//! Holds the `acceptance` test target. Run it with
//! `cargo test -p minosc-validation --test acceptance`.
