#pragma once

#include <Eigen/Core>
#include <memory>

#include "prpca/video_model.hpp"

namespace prpca {

enum class TvMode { TwoD, ThreeD };

struct TvShape {
  Index m = 0, n = 0, p = 0;
  Index size() const { return m * n * p; }
  bool operator==(const TvShape&) const = default;
};

/// {0,1} weights on the x (row), y (column) and z (frame) first differences.
/// Wrap-around differences and any difference touching an unobserved pixel
/// carry weight 0; in 2D mode every temporal weight is 0.
struct TVWeights {
  TvShape shape;
  TvMode mode = TvMode::ThreeD;
  Eigen::VectorXd wx, wy, wz;  // each length mnp, vec() layout

  /// diag(W) as one length-3mnp vector, matching apply_diff's output layout.
  Eigen::VectorXd stacked() const;
};

TVWeights build_tv_weights(const MaskTensor& mask, TvMode mode);

/// Weighted anisotropic TV as a direct triple sum over non-wrapping differences.
double tv_value(const VideoTensor& x, const TVWeights& w);
double tv_value(const Eigen::VectorXd& x, const TVWeights& w);

/// C x: circulant first differences along rows, columns, then frames,
/// wrap terms included. Output length 3mnp.
Eigen::VectorXd apply_diff(const Eigen::VectorXd& x, const TvShape& shape);
/// C^T y for y of length 3mnp.
Eigen::VectorXd apply_diff_adjoint(const Eigen::VectorXd& y, const TvShape& shape);

/// Eigenvalues of C^T C laid out as an m x n x p tensor (vec() order):
/// T(i,j,k) = 4 sin^2(pi i/m) + 4 sin^2(pi j/n) + 4 sin^2(pi k/p).
struct CirculantSpectrum {
  TvShape shape;
  double rho = 1.0;
  Eigen::VectorXd eigenvalues;
};

CirculantSpectrum precompute_spectrum(const TvShape& shape, double rho);

/// Solves (I + rho C^T C) s = rhs with 3D FFTs. Owns its FFT plans and
/// scratch buffers, so one instance must not be shared across threads.
class CirculantSolver {
 public:
  explicit CirculantSolver(CirculantSpectrum spectrum);
  ~CirculantSolver();
  CirculantSolver(CirculantSolver&&) noexcept;
  CirculantSolver& operator=(CirculantSolver&&) noexcept;
  CirculantSolver(const CirculantSolver&) = delete;
  CirculantSolver& operator=(const CirculantSolver&) = delete;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs);
  const CirculantSpectrum& spectrum() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Eigen::VectorXd circulant_solve(const Eigen::VectorXd& rhs, const CirculantSpectrum& spectrum);

/// ADMM for min_s 1/2 ||z - s||^2 + lam * ||W C s||_1 with the split v = C s.
/// Reuses one CirculantSolver across calls; one instance per thread.
class TvDenoiser {
 public:
  TvDenoiser(TVWeights weights, double rho);

  /// Runs `iters` ADMM steps from v = C z, u = 0 and returns the s iterate.
  Eigen::VectorXd denoise(const Eigen::VectorXd& z, double lam, int iters);

  const TVWeights& weights() const { return weights_; }
  double rho() const { return rho_; }

 private:
  TVWeights weights_;
  Eigen::VectorXd stacked_weights_;
  double rho_;
  CirculantSolver solver_;
};

VideoTensor tvdn(const VideoTensor& z, double lam, const TVWeights& w, double rho, int iters);

/// 1/2 ||z - s||^2 + lam * tv_value(s, w).
double tvdn_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& s, double lam,
                      const TVWeights& w);

}  // namespace prpca
