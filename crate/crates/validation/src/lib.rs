//! Holds the `acceptance` test target; run it with
//! `cargo test -p walllaw-validation --test acceptance`.
