#pragma once

// Umbrella header for the LSE solver library: sparse containers,
// factorizations, Krylov solvers, the six equality-constrained least
// squares solution strategies and the benchmark harness.

#include "lse/augmented.hpp"
#include "lse/core_types.hpp"
#include "lse/dense_la.hpp"
#include "lse/direct_elim.hpp"
#include "lse/errors.hpp"
#include "lse/factor_cholesky.hpp"
#include "lse/factor_qr.hpp"
#include "lse/harness.hpp"
#include "lse/krylov.hpp"
#include "lse/matrix_market.hpp"
#include "lse/normal_matrix.hpp"
#include "lse/nullspace.hpp"
#include "lse/ordering.hpp"
#include "lse/problem.hpp"
#include "lse/rng.hpp"
#include "lse/sparse_matrix.hpp"
#include "lse/tri_solve.hpp"
