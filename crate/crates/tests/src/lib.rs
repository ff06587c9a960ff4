//! Holds the `acceptance` test target. Nothing to link against.
