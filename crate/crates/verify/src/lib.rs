//! Holds no code. The checks live in `tests/acceptance.rs`, kept in their
//! own package so they run after every unit and integration suite.
