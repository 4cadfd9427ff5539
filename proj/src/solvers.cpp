#include "prpca/solvers.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>

#include "prpca/error.hpp"
#include "prpca/shrinkage.hpp"

namespace prpca {

namespace {

double relative_change(const Eigen::MatrixXd& next, const Eigen::MatrixXd& prev) {
  const double diff = (next - prev).norm();
  const double base = prev.norm();
  if (base == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / base;
}

void check_inputs(const VideoTensor& y, const MaskTensor& mask) {
  if (y.m() != mask.m() || y.n() != mask.n() || y.p() != mask.p()) {
    throw DimensionError("solver: data and mask shapes differ");
  }
  if (!y.matrix().allFinite()) throw NumericError("solver: data has non-finite entries");
}

void check_finite(const Eigen::MatrixXd& x, const char* name, int iteration) {
  if (!x.allFinite()) {
    throw DivergenceError(std::string("solver diverged: ") + name +
                          " has non-finite entries at iteration " + std::to_string(iteration));
  }
}

double nuclear_norm(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
  return svd.singularValues().sum();
}

// Rows of the data matrix observed in at least one frame.
std::vector<Index> observed_rows(const MaskTensor& mask) {
  std::vector<Index> rows;
  const Eigen::MatrixXd& m = mask.matrix();
  for (Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() != 0.0).any()) rows.push_back(r);
  }
  return rows;
}

// Low-rank step restricted to rows that are ever observed; all other rows of
// L are identically zero and stay that way.
class LowRankStep {
 public:
  LowRankStep(const MaskTensor& mask, Index total_rows)
      : rows_(observed_rows(mask)), total_rows_(total_rows) {}

  template <typename Fn>
  Eigen::MatrixXd apply(const Eigen::MatrixXd& z, Fn&& fn) const {
    if (static_cast<Index>(rows_.size()) == total_rows_) return fn(z);
    Eigen::MatrixXd compact(static_cast<Index>(rows_.size()), z.cols());
    for (std::size_t i = 0; i < rows_.size(); ++i) compact.row(static_cast<Index>(i)) = z.row(rows_[i]);
    const Eigen::MatrixXd out = fn(compact);
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(total_rows_, z.cols());
    for (std::size_t i = 0; i < rows_.size(); ++i) full.row(rows_[i]) = out.row(static_cast<Index>(i));
    return full;
  }

 private:
  std::vector<Index> rows_;
  Index total_rows_;
};

}  // namespace

SolverConfig SolverConfig::defaults_for(Index m, Index n, TvMode mode) {
  SolverConfig cfg;
  const double scale = std::sqrt(static_cast<double>(m * n));
  cfg.lambda_s = 0.01 / scale;
  cfg.lambda_e = 0.001 / scale;
  cfg.tv_mode = mode;
  return cfg;
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigurationError("SolverConfig: " + msg); };
  if (rank < 1) fail("rank must be >= 1");
  if (!(lambda_s >= 0.0) || !(lambda_e >= 0.0) || !(lambda_l >= 0.0)) fail("lambdas must be >= 0");
  if (!(tau > 0.0 && tau < 2.0 / 3.0)) fail("tau must lie in (0, 2/3)");
  if (!(rho > 0.0)) fail("rho must be positive");
  if (inner_iters < 1) fail("inner iterations must be >= 1");
  if (outer_iters < 1) fail("outer iterations must be >= 1");
  if (early_exit_patience < 1) fail("early-exit patience must be >= 1");
}

double prpca_cost(const VideoTensor& y, const MaskTensor& mask, const Eigen::MatrixXd& L,
                  const Eigen::MatrixXd& S, const Eigen::MatrixXd& E, const TVWeights& w,
                  double lambda_l, double lambda_s, double lambda_e) {
  check_inputs(y, mask);
  const Eigen::MatrixXd r = project_mask(y.matrix() - L - S - E, mask);
  double cost = 0.5 * r.squaredNorm();
  if (lambda_l != 0.0) cost += lambda_l * nuclear_norm(L);
  if (lambda_s != 0.0) cost += lambda_s * tv_value(Eigen::VectorXd(S.reshaped()), w);
  if (lambda_e != 0.0) cost += lambda_e * E.cwiseAbs().sum();
  return cost;
}

Eigen::MatrixXd residual(const VideoTensor& y, const MaskTensor& mask, const Decomposition& d) {
  return project_mask(y.matrix() - d.L - d.S - d.E, mask);
}

Decomposition prpca_run(const VideoTensor& y, const MaskTensor& mask, const SolverConfig& cfg,
                        const IterateObserver& observer) {
  cfg.validate();
  check_inputs(y, mask);
  const Index rows = y.matrix().rows(), cols = y.matrix().cols();
  const double tau = cfg.tau;

  const TVWeights weights = build_tv_weights(mask, cfg.tv_mode);
  TvDenoiser denoiser(weights, cfg.rho);
  const LowRankStep low_rank(mask, rows);

  Decomposition d;
  d.L = project_mask(y.matrix(), mask);
  d.S = Eigen::MatrixXd::Zero(rows, cols);
  d.E = Eigen::MatrixXd::Zero(rows, cols);

  int quiet_streak = 0;
  for (int it = 1; it <= cfg.outer_iters; ++it) {
    const Eigen::MatrixXd u = project_mask(d.L + d.S + d.E - y.matrix(), mask);

    Eigen::MatrixXd l_next;
    if (cfg.variant == LowRankVariant::OptShrink) {
      l_next = low_rank.apply(d.L - tau * u, [&](const Eigen::MatrixXd& z) {
        if (cfg.rank >= std::min(z.rows(), z.cols())) {
          throw RankError("prpca_run: rank " + std::to_string(cfg.rank) +
                          " leaves no noise singular values for a " + std::to_string(z.rows()) +
                          "x" + std::to_string(z.cols()) + " problem");
        }
        auto res = optshrink(z, cfg.rank);
        d.ill_separated_seen = d.ill_separated_seen || res.ill_separated;
        return res.estimate;
      });
    } else {
      l_next = low_rank.apply(d.L - tau * u,
                              [&](const Eigen::MatrixXd& z) { return svt(z, tau * cfg.lambda_l); });
    }

    const Eigen::MatrixXd s_arg = d.S - tau * u;
    Eigen::MatrixXd s_next = denoiser.denoise(Eigen::VectorXd(s_arg.reshaped()), tau * cfg.lambda_s,
                                              cfg.inner_iters)
                                 .reshaped(rows, cols);
    s_next = project_mask(s_next, mask);
    Eigen::MatrixXd e_next = project_mask(soft(d.E - tau * u, tau * cfg.lambda_e), mask);

    check_finite(l_next, "L", it);
    check_finite(s_next, "S", it);
    check_finite(e_next, "E", it);

    IterateRecord rec;
    rec.iteration = it;
    rec.rel_change_l = relative_change(l_next, d.L);
    rec.rel_change_s = relative_change(s_next, d.S);
    rec.rel_change_e = relative_change(e_next, d.E);
    d.L = std::move(l_next);
    d.S = std::move(s_next);
    d.E = std::move(e_next);
    if (cfg.variant == LowRankVariant::Svt) {
      rec.cost = prpca_cost(y, mask, d.L, d.S, d.E, weights, cfg.lambda_l, cfg.lambda_s, cfg.lambda_e);
    }
    d.history.push_back(rec);
    if (observer) observer(rec, d);

    if (cfg.early_exit_tol) {
      const double tol = *cfg.early_exit_tol;
      const bool quiet = rec.rel_change_l < tol && rec.rel_change_s < tol && rec.rel_change_e < tol;
      quiet_streak = quiet ? quiet_streak + 1 : 0;
      if (quiet_streak >= cfg.early_exit_patience) break;
    }
  }
  return d;
}

Decomposition prpca_svt_run(const VideoTensor& y, const MaskTensor& mask, SolverConfig cfg,
                            const IterateObserver& observer) {
  cfg.variant = LowRankVariant::Svt;
  return prpca_run(y, mask, cfg, observer);
}

RpcaResult rpca_missing_run(const Eigen::MatrixXd& y, const MaskTensor& mask, double lambda_l,
                            double lambda_s, double tau, int iters) {
  if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("rpca_missing_run: tau must lie in (0, 1)");
  if (!(lambda_l >= 0.0) || !(lambda_s >= 0.0)) throw ArgumentError("rpca_missing_run: lambdas must be >= 0");
  if (iters < 1) throw ArgumentError("rpca_missing_run: iters must be >= 1");
  if (y.rows() != mask.matrix().rows() || y.cols() != mask.matrix().cols()) {
    throw DimensionError("rpca_missing_run: data and mask shapes differ");
  }
  RpcaResult r{Eigen::MatrixXd::Zero(y.rows(), y.cols()), Eigen::MatrixXd::Zero(y.rows(), y.cols())};
  for (int it = 1; it <= iters; ++it) {
    const Eigen::MatrixXd z = project_mask(r.L + r.S - y, mask);
    Eigen::MatrixXd l_next = svt(r.L - tau * z, tau * lambda_l);
    Eigen::MatrixXd s_next = soft(r.S - tau * z, tau * lambda_s);
    check_finite(l_next, "L", it);
    check_finite(s_next, "S", it);
    r.L = std::move(l_next);
    r.S = std::move(s_next);
  }
  return r;
}

TvrpcaResult tvrpca_missing_run(const VideoTensor& y, const MaskTensor& mask, const TvrpcaConfig& cfg) {
  check_inputs(y, mask);
  if (!(cfg.mu > 0.0)) throw ArgumentError("tvrpca_missing_run: mu must be positive");
  if (!(cfg.lambda1 >= 0.0) || !(cfg.lambda2 >= 0.0) || !(cfg.lambda3 >= 0.0)) {
    throw ArgumentError("tvrpca_missing_run: lambdas must be >= 0");
  }
  if (cfg.iters < 1 || cfg.soft_impute_iters < 1 || cfg.tv_inner_iters < 1) {
    throw ArgumentError("tvrpca_missing_run: iteration counts must be >= 1");
  }
  const Index rows = y.matrix().rows(), cols = y.matrix().cols();
  const double mu = cfg.mu;
  const Eigen::MatrixXd& yy = y.matrix();
  const auto observed = mask.matrix().array() != 0.0;

  TvDenoiser denoiser(build_tv_weights(MaskTensor::ones(y.m(), y.n(), y.p()), cfg.tv_mode), cfg.tv_rho);

  TvrpcaResult r;
  r.L = Eigen::MatrixXd::Zero(rows, cols);
  r.G = Eigen::MatrixXd::Zero(rows, cols);
  r.E = Eigen::MatrixXd::Zero(rows, cols);
  r.S = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(rows, cols);  // dual of P_M(Y - L - G), zero off M
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(rows, cols);  // dual of G - E - S

  for (int it = 1; it <= cfg.iters; ++it) {
    // L: SOFT-IMPUTE steps, observed entries from the data, the rest from L.
    const Eigen::MatrixXd target = yy - r.G + x / mu;
    for (int inner = 0; inner < cfg.soft_impute_iters; ++inner) {
      r.L = svt(observed.select(target, r.L), 1.0 / mu);
    }
    // G: two soft-thresholds with different levels on and off the mask.
    const Eigen::MatrixXd g_obs =
        soft(0.5 * (yy - r.L + r.E + r.S) + (x - z) / (2.0 * mu), cfg.lambda1 / (2.0 * mu));
    const Eigen::MatrixXd g_unobs = soft(r.E + r.S - z / mu, cfg.lambda1 / mu);
    r.G = observed.select(g_obs, g_unobs);
    r.E = soft(r.G - r.S + z / mu, cfg.lambda2 / mu);
    const Eigen::MatrixXd s_arg = r.G - r.E + z / mu;
    r.S = denoiser.denoise(Eigen::VectorXd(s_arg.reshaped()), cfg.lambda3 / mu, cfg.tv_inner_iters)
              .reshaped(rows, cols);
    const Eigen::MatrixXd gap = project_mask(yy - r.L - r.G, mask);
    x += mu * gap;
    z += mu * (r.G - r.E - r.S);
    check_finite(r.L, "L", it);
    check_finite(r.G, "G", it);
    check_finite(r.S, "S", it);
    check_finite(x, "X", it);
    r.constraint_residual.push_back(gap.norm());
  }
  return r;
}

}  // namespace prpca
