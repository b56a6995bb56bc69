pub use debias_core as core;
