//! Problem-file I/O, the independent desk-scale active-set oracle, and the
//! command-line driver plumbing shared by the binary and the test suites.

pub mod io;
pub mod oracle;
