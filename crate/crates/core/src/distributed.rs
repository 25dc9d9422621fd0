//! Finite-horizon distributed control under quadratic invariance (in progress).
