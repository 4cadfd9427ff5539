#pragma once

#include <Eigen/Core>

#include "prpca/tv_denoise.hpp"

namespace oracle {

struct TvDualResult {
  Eigen::VectorXd s;
  double primal = 0.0;
  double dual = 0.0;
  int iterations = 0;
};

/// Weighted TV denoising through its dual box-constrained problem
///   min_{|q| <= 1} 1/2 || z - lam A^T q ||^2,  A = rows of C with weight 1,
/// solved by FISTA with adaptive restart until the duality gap falls below
/// rel_gap * max(1, primal). Differences are evaluated by plain loops.
TvDualResult tv_dual_solve(const Eigen::VectorXd& z, double lam, const Eigen::VectorXd& weights,
                           const prpca::TvShape& shape, double rel_gap = 1e-12,
                           int max_iters = 2000000);

}  // namespace oracle
