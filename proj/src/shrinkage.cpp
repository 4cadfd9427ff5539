#include "prpca/shrinkage.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "prpca/error.hpp"

namespace prpca {

namespace {

void require_finite(const Eigen::MatrixXd& z, const char* who) {
  if (!z.allFinite()) throw NumericError(std::string(who) + ": input has non-finite entries");
}

}  // namespace

Eigen::MatrixXd svt(const Eigen::MatrixXd& z, double lam) {
  if (!(lam >= 0.0)) throw ArgumentError("svt: threshold must be nonnegative");
  require_finite(z, "svt");
  if (z.size() == 0) return z;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = (svd.singularValues().array() - lam).cwiseMax(0.0).matrix();
  Eigen::Index keep = 0;
  while (keep < s.size() && s(keep) > 0.0) ++keep;
  if (keep == 0) return Eigen::MatrixXd::Zero(z.rows(), z.cols());
  return svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() *
         svd.matrixV().leftCols(keep).transpose();
}

Eigen::MatrixXd soft(const Eigen::MatrixXd& z, double lam) {
  if (!(lam >= 0.0)) throw ArgumentError("soft: threshold must be nonnegative");
  return z.unaryExpr([lam](double v) {
    const double mag = std::abs(v) - lam;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

Eigen::MatrixXd soft(const Eigen::MatrixXd& z, const Eigen::MatrixXd& lam) {
  if (z.rows() != lam.rows() || z.cols() != lam.cols()) {
    throw DimensionError("soft: threshold shape does not match input");
  }
  if (!(lam.array() >= 0.0).all()) throw ArgumentError("soft: thresholds must be nonnegative");
  return z.binaryExpr(lam, [](double v, double t) {
    const double mag = std::abs(v) - t;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

Eigen::VectorXd soft(const Eigen::VectorXd& z, const Eigen::VectorXd& lam) {
  return soft(Eigen::MatrixXd(z), Eigen::MatrixXd(lam));
}

SpectralMass::SpectralMass(Eigen::VectorXd values, double c) : noise(std::move(values)), aspect(c) {
  if (!(c > 0.0 && c <= 1.0)) throw ArgumentError("SpectralMass: aspect ratio must lie in (0, 1]");
  if (noise.size() == 0) throw ArgumentError("SpectralMass: needs at least one noise singular value");
  if (!(noise.array() >= 0.0).all()) throw ArgumentError("SpectralMass: negative singular value");
}

DTransformValue d_transform(double sigma, const SpectralMass& mass) {
  const double t_max = mass.noise.maxCoeff();
  if (!(sigma > t_max) || !(sigma > 0.0)) {
    throw DomainError("d_transform: sigma must exceed every noise singular value");
  }
  const double c = mass.aspect;
  const double s2 = sigma * sigma;
  // phi(s) = mean_t s / (s^2 - t^2), phi'(s) = mean_t -(s^2 + t^2) / (s^2 - t^2)^2
  double phi = 0.0, dphi = 0.0;
  for (Eigen::Index i = 0; i < mass.noise.size(); ++i) {
    const double t2 = mass.noise(i) * mass.noise(i);
    const double gap = s2 - t2;
    phi += sigma / gap;
    dphi -= (s2 + t2) / (gap * gap);
  }
  const double count = static_cast<double>(mass.noise.size());
  phi /= count;
  dphi /= count;
  const double psi = c * phi + (1.0 - c) / sigma;
  const double dpsi = c * dphi - (1.0 - c) / s2;
  return {phi * psi, dphi * psi + phi * dpsi};
}

OptShrinkResult optshrink(const Eigen::MatrixXd& z, int r) {
  const Eigen::Index q = std::min(z.rows(), z.cols());
  if (r < 1 || r >= q) {
    throw RankError("optshrink: rank " + std::to_string(r) + " must satisfy 1 <= r < " +
                    std::to_string(q));
  }
  require_finite(z, "optshrink");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  OptShrinkResult out;
  out.singular_values = svd.singularValues();
  const Eigen::VectorXd& s = out.singular_values;
  const double c = static_cast<double>(q) / static_cast<double>(std::max(z.rows(), z.cols()));
  const SpectralMass mass(s.tail(q - r), c);
  const double t_max = s(r);

  out.weights = Eigen::VectorXd::Zero(r);
  for (int i = 0; i < r; ++i) {
    if (!(s(i) > t_max * (1.0 + 1e-12)) || !(s(i) > 0.0)) {
      out.ill_separated = true;
      continue;  // no usable shrinkage estimate; the component is dropped
    }
    const auto d = d_transform(s(i), mass);
    double w = -2.0 * d.value / d.derivative;
    if (!std::isfinite(w)) w = 0.0;
    out.weights(i) = std::clamp(w, 0.0, s(i));
  }
  out.estimate = svd.matrixU().leftCols(r) * out.weights.asDiagonal() *
                 svd.matrixV().leftCols(r).transpose();
  return out;
}

Eigen::VectorXd oracle_weights(const Eigen::VectorXd& theta, const Eigen::MatrixXd& u,
                               const Eigen::MatrixXd& v, const Eigen::MatrixXd& u_obs,
                               const Eigen::MatrixXd& v_obs) {
  if (u.cols() != theta.size() || v.cols() != theta.size() || u.rows() != u_obs.rows() ||
      v.rows() != v_obs.rows() || u_obs.cols() != v_obs.cols()) {
    throw DimensionError("oracle_weights: inconsistent factor shapes");
  }
  const Eigen::MatrixXd left = u_obs.transpose() * u;    // (u~_i^T u_j)
  const Eigen::MatrixXd right = v_obs.transpose() * v;   // (v~_i^T v_j)
  return (left.array() * right.array()).matrix() * theta;
}

}  // namespace prpca
