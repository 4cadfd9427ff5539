#pragma once

#include <Eigen/Core>
#include <vector>

namespace prpca {

/// Singular value thresholding: sum_i (sigma_i - lam)_+ u_i v_i^T.
/// Throws ArgumentError for lam < 0 and NumericError for non-finite input.
Eigen::MatrixXd svt(const Eigen::MatrixXd& z, double lam);

/// Elementwise sign(z) * (|z| - lam)_+.
Eigen::MatrixXd soft(const Eigen::MatrixXd& z, double lam);
/// Per-entry thresholds; lam must match z's shape and be nonnegative.
Eigen::MatrixXd soft(const Eigen::MatrixXd& z, const Eigen::MatrixXd& lam);
Eigen::VectorXd soft(const Eigen::VectorXd& z, const Eigen::VectorXd& lam);

/// Empirical distribution of the noise-only singular values.
struct SpectralMass {
  Eigen::VectorXd noise;  // sigma_{r+1} .. sigma_q, descending, >= 0
  double aspect = 1.0;    // c = min(a,b) / max(a,b), in (0, 1]

  SpectralMass() = default;
  SpectralMass(Eigen::VectorXd values, double c);
};

struct DTransformValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// D-transform of the empirical mass and its analytic derivative.
/// Throws DomainError unless sigma exceeds every noise singular value.
DTransformValue d_transform(double sigma, const SpectralMass& mass);

struct OptShrinkResult {
  Eigen::MatrixXd estimate;
  Eigen::VectorXd weights;           // shrunken singular values, one per rank
  Eigen::VectorXd singular_values;   // full spectrum of the input
  bool ill_separated = false;        // sigma_r and sigma_{r+1} not separated
};

/// Rank-r OptShrink estimate. Requires 1 <= r < min(a, b) (RankError).
OptShrinkResult optshrink(const Eigen::MatrixXd& z, int r);

/// Closed-form weights minimizing ||L - sum_i w_i u~_i v~_i^T||_F for the
/// planted L = sum_j theta_j u_j v_j^T. Validation support; not on the solver path.
Eigen::VectorXd oracle_weights(const Eigen::VectorXd& theta, const Eigen::MatrixXd& u,
                               const Eigen::MatrixXd& v, const Eigen::MatrixXd& u_obs,
                               const Eigen::MatrixXd& v_obs);

}  // namespace prpca
