//! Holds the acceptance suite (`cargo test -p validation`); there is no library code.
