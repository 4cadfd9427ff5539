#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "prpca/tv_denoise.hpp"
#include "prpca/video_model.hpp"

namespace prpca {

enum class LowRankVariant { OptShrink, Svt };

struct SolverConfig {
  int rank = 1;
  double lambda_s = 0.0;   // TV weight on the foreground
  double lambda_e = 0.0;   // l1 weight on sparse corruptions
  double lambda_l = 0.0;   // nuclear-norm weight, SVT variant only
  double tau = 1.0 / 3.0;
  double rho = 1.0;
  int inner_iters = 10;
  int outer_iters = 150;
  TvMode tv_mode = TvMode::ThreeD;
  LowRankVariant variant = LowRankVariant::OptShrink;
  /// Stop once every relative change stays below this for `early_exit_patience`
  /// consecutive iterations. Disabled when unset.
  std::optional<double> early_exit_tol;
  int early_exit_patience = 5;

  /// lambda_s = 0.01 / sqrt(mn), lambda_e = 0.001 / sqrt(mn), r = 1,
  /// tau = 1/3, rho = 1, K = 10, 150 iterations.
  static SolverConfig defaults_for(Index m, Index n, TvMode mode = TvMode::ThreeD);

  /// Throws ConfigurationError on out-of-range values.
  void validate() const;
};

struct IterateRecord {
  int iteration = 0;          // 1-based
  double rel_change_l = 0.0;  // ||X^{k+1} - X^k||_F / ||X^k||_F (0 when both vanish)
  double rel_change_s = 0.0;
  double rel_change_e = 0.0;
  std::optional<double> cost;  // objective, SVT variant only
};

struct Decomposition {
  Eigen::MatrixXd L, S, E;
  std::vector<IterateRecord> history;
  bool ill_separated_seen = false;  // OptShrink reported an unseparated spectrum
};

/// 1/2 ||P_M(Y - L - S - E)||_F^2 + lam_l ||L||_* + lam_s TV_w(S) + lam_e ||E||_1.
double prpca_cost(const VideoTensor& y, const MaskTensor& mask, const Eigen::MatrixXd& L,
                  const Eigen::MatrixXd& S, const Eigen::MatrixXd& E, const TVWeights& w,
                  double lambda_l, double lambda_s, double lambda_e);

/// Dense residual P_M(Y - L - S - E) on demand.
Eigen::MatrixXd residual(const VideoTensor& y, const MaskTensor& mask, const Decomposition& d);

/// Called after every outer iteration with the current iterates.
using IterateObserver = std::function<void(const IterateRecord&, const Decomposition&)>;

/// Proximal updates with an OptShrink (or SVT, per cfg.variant) low-rank step,
/// K-step ADMM TV denoising for S and soft thresholding for E.
Decomposition prpca_run(const VideoTensor& y, const MaskTensor& mask, const SolverConfig& cfg,
                        const IterateObserver& observer = {});

/// True proximal gradient scheme (SVT low-rank step); records the cost per iteration.
Decomposition prpca_svt_run(const VideoTensor& y, const MaskTensor& mask, SolverConfig cfg,
                            const IterateObserver& observer = {});

struct RpcaResult {
  Eigen::MatrixXd L, S;
};

/// Missing-data RPCA: Z = P_M(L + S - Y), L <- SVT(L - tau Z), S <- soft(S - tau Z).
RpcaResult rpca_missing_run(const Eigen::MatrixXd& y, const MaskTensor& mask, double lambda_l,
                            double lambda_s, double tau, int iters);

struct TvrpcaConfig {
  double lambda1 = 0.0;  // l1 on G
  double lambda2 = 0.0;  // l1 on E
  double lambda3 = 0.0;  // TV on S
  double mu = 1.0;
  int iters = 100;
  int soft_impute_iters = 2;
  int tv_inner_iters = 10;
  double tv_rho = 1.0;
  TvMode tv_mode = TvMode::ThreeD;
};

struct TvrpcaResult {
  Eigen::MatrixXd L, G, E, S;
  std::vector<double> constraint_residual;  // ||P_M(Y - L - G)||_F per iteration
};

/// Alternating minimization of the masked TVRPCA augmented Lagrangian.
/// The S step uses unweighted (all-ones mask) TV.
TvrpcaResult tvrpca_missing_run(const VideoTensor& y, const MaskTensor& mask, const TvrpcaConfig& cfg);

}  // namespace prpca
