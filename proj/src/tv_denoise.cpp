#include "prpca/tv_denoise.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "prpca/error.hpp"
#include "prpca/shrinkage.hpp"

namespace prpca {

namespace {

void check_length(Index got, Index want, const char* who) {
  if (got != want) {
    throw DimensionError(std::string(who) + ": length " + std::to_string(got) + ", expected " +
                         std::to_string(want));
  }
}

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

Eigen::VectorXd TVWeights::stacked() const {
  Eigen::VectorXd out(3 * shape.size());
  out << wx, wy, wz;
  return out;
}

TVWeights build_tv_weights(const MaskTensor& mask, TvMode mode) {
  const Index m = mask.m(), n = mask.n(), p = mask.p();
  TVWeights w;
  w.shape = {m, n, p};
  w.mode = mode;
  w.wx = Eigen::VectorXd::Zero(m * n * p);
  w.wy = Eigen::VectorXd::Zero(m * n * p);
  w.wz = Eigen::VectorXd::Zero(m * n * p);
  const Eigen::MatrixXd& mk = mask.matrix();
  for (Index k = 0; k < p; ++k) {
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < m; ++i) {
        const Index row = i + m * j;
        const Index idx = row + m * n * k;
        const double here = mk(row, k);
        if (i + 1 < m) w.wx(idx) = here * mk(row + 1, k);
        if (j + 1 < n) w.wy(idx) = here * mk(row + m, k);
        if (mode == TvMode::ThreeD && k + 1 < p) w.wz(idx) = here * mk(row, k + 1);
      }
    }
  }
  return w;
}

double tv_value(const Eigen::VectorXd& x, const TVWeights& w) {
  const auto [m, n, p] = w.shape;
  check_length(x.size(), w.shape.size(), "tv_value");
  const Index mn = m * n;
  double total = 0.0;
  for (Index k = 0; k < p; ++k) {
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < m; ++i) {
        const Index idx = i + m * j + mn * k;
        if (i + 1 < m) total += w.wx(idx) * std::abs(x(idx + 1) - x(idx));
        if (j + 1 < n) total += w.wy(idx) * std::abs(x(idx + m) - x(idx));
        if (k + 1 < p) total += w.wz(idx) * std::abs(x(idx + mn) - x(idx));
      }
    }
  }
  return total;
}

double tv_value(const VideoTensor& x, const TVWeights& w) {
  if (x.m() != w.shape.m || x.n() != w.shape.n || x.p() != w.shape.p) {
    throw DimensionError("tv_value: tensor shape does not match weights");
  }
  return tv_value(Eigen::VectorXd(x.matrix().reshaped()), w);
}

Eigen::VectorXd apply_diff(const Eigen::VectorXd& x, const TvShape& shape) {
  const auto [m, n, p] = shape;
  const Index total = shape.size();
  check_length(x.size(), total, "apply_diff");
  const Index mn = m * n;
  Eigen::VectorXd out(3 * total);
  for (Index k = 0; k < p; ++k) {
    const Index kn = (k + 1 == p) ? 0 : k + 1;
    for (Index j = 0; j < n; ++j) {
      const Index jn = (j + 1 == n) ? 0 : j + 1;
      for (Index i = 0; i < m; ++i) {
        const Index in = (i + 1 == m) ? 0 : i + 1;
        const Index idx = i + m * j + mn * k;
        const double here = x(idx);
        out(idx) = x(in + m * j + mn * k) - here;
        out(total + idx) = x(i + m * jn + mn * k) - here;
        out(2 * total + idx) = x(i + m * j + mn * kn) - here;
      }
    }
  }
  return out;
}

Eigen::VectorXd apply_diff_adjoint(const Eigen::VectorXd& y, const TvShape& shape) {
  const auto [m, n, p] = shape;
  const Index total = shape.size();
  check_length(y.size(), 3 * total, "apply_diff_adjoint");
  const Index mn = m * n;
  Eigen::VectorXd out(total);
  // (D^T y)_i = y_{i-1} - y_i with circular wrap, per axis.
  for (Index k = 0; k < p; ++k) {
    const Index kp = (k == 0) ? p - 1 : k - 1;
    for (Index j = 0; j < n; ++j) {
      const Index jp = (j == 0) ? n - 1 : j - 1;
      for (Index i = 0; i < m; ++i) {
        const Index ip = (i == 0) ? m - 1 : i - 1;
        const Index idx = i + m * j + mn * k;
        out(idx) = (y(ip + m * j + mn * k) - y(idx)) +
                   (y(total + i + m * jp + mn * k) - y(total + idx)) +
                   (y(2 * total + i + m * j + mn * kp) - y(2 * total + idx));
      }
    }
  }
  return out;
}

CirculantSpectrum precompute_spectrum(const TvShape& shape, double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ArgumentError("precompute_spectrum: rho must be >= 0");
  if (shape.m < 1 || shape.n < 1 || shape.p < 1) throw DimensionError("precompute_spectrum: empty shape");
  auto axis = [](Index len) {
    Eigen::VectorXd e(len);
    for (Index i = 0; i < len; ++i) {
      const double s = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
      e(i) = 4.0 * s * s;
    }
    return e;
  };
  const Eigen::VectorXd ex = axis(shape.m), ey = axis(shape.n), ez = axis(shape.p);
  CirculantSpectrum spec;
  spec.shape = shape;
  spec.rho = rho;
  spec.eigenvalues.resize(shape.size());
  for (Index k = 0; k < shape.p; ++k)
    for (Index j = 0; j < shape.n; ++j)
      for (Index i = 0; i < shape.m; ++i)
        spec.eigenvalues(i + shape.m * j + shape.m * shape.n * k) = ex(i) + ey(j) + ez(k);
  return spec;
}

struct CirculantSolver::Impl {
  CirculantSpectrum spectrum;
  Index half_m = 0;
  std::vector<double> real;
  std::vector<std::complex<double>> freq;
  Eigen::VectorXd denom;  // 1 + rho*T on the r2c half grid
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

CirculantSolver::CirculantSolver(CirculantSpectrum spectrum) : impl_(std::make_unique<Impl>()) {
  const auto [m, n, p] = spectrum.shape;
  impl_->half_m = m / 2 + 1;
  impl_->real.assign(static_cast<std::size_t>(m * n * p), 0.0);
  impl_->freq.assign(static_cast<std::size_t>(impl_->half_m * n * p), {});
  impl_->denom.resize(impl_->half_m * n * p);
  for (Index k = 0; k < p; ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < impl_->half_m; ++i)
        impl_->denom(i + impl_->half_m * (j + n * k)) =
            1.0 + spectrum.rho * spectrum.eigenvalues(i + m * j + m * n * k);
  {
    // Column-major m x n x p is row-major p x n x m for FFTW.
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* cplx = reinterpret_cast<fftw_complex*>(impl_->freq.data());
    impl_->forward = fftw_plan_dft_r2c_3d(static_cast<int>(p), static_cast<int>(n), static_cast<int>(m),
                                          impl_->real.data(), cplx, FFTW_ESTIMATE);
    impl_->backward = fftw_plan_dft_c2r_3d(static_cast<int>(p), static_cast<int>(n), static_cast<int>(m),
                                           cplx, impl_->real.data(), FFTW_ESTIMATE);
  }
  if (!impl_->forward || !impl_->backward) throw NumericError("CirculantSolver: FFT planning failed");
  impl_->spectrum = std::move(spectrum);
}

CirculantSolver::~CirculantSolver() = default;
CirculantSolver::CirculantSolver(CirculantSolver&&) noexcept = default;
CirculantSolver& CirculantSolver::operator=(CirculantSolver&&) noexcept = default;

const CirculantSpectrum& CirculantSolver::spectrum() const { return impl_->spectrum; }

Eigen::VectorXd CirculantSolver::solve(const Eigen::VectorXd& rhs) {
  Impl& s = *impl_;
  const Index total = s.spectrum.shape.size();
  check_length(rhs.size(), total, "circulant_solve");
  Eigen::Map<Eigen::VectorXd>(s.real.data(), total) = rhs;
  fftw_execute(s.forward);
  for (std::size_t i = 0; i < s.freq.size(); ++i) s.freq[i] /= s.denom(static_cast<Index>(i));
  fftw_execute(s.backward);  // c2r overwrites freq, which is rebuilt on every call
  return Eigen::Map<const Eigen::VectorXd>(s.real.data(), total) / static_cast<double>(total);
}

Eigen::VectorXd circulant_solve(const Eigen::VectorXd& rhs, const CirculantSpectrum& spectrum) {
  CirculantSolver solver(spectrum);
  return solver.solve(rhs);
}

TvDenoiser::TvDenoiser(TVWeights weights, double rho)
    : weights_(std::move(weights)),
      stacked_weights_(weights_.stacked()),
      rho_(rho),
      solver_([&] {
        if (!(rho > 0.0) || !std::isfinite(rho)) throw ArgumentError("tvdn: rho must be positive");
        return precompute_spectrum(weights_.shape, rho);
      }()) {}

Eigen::VectorXd TvDenoiser::denoise(const Eigen::VectorXd& z, double lam, int iters) {
  if (!(lam >= 0.0)) throw ArgumentError("tvdn: lambda must be nonnegative");
  if (iters < 1) throw ArgumentError("tvdn: need at least one ADMM iteration");
  const TvShape& shape = weights_.shape;
  check_length(z.size(), shape.size(), "tvdn");
  const Eigen::VectorXd thresholds = (lam / rho_) * stacked_weights_;
  Eigen::VectorXd v = apply_diff(z, shape);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(v.size());
  Eigen::VectorXd s = z;
  for (int it = 0; it < iters; ++it) {
    s = solver_.solve(z + rho_ * apply_diff_adjoint(v - u, shape));
    const Eigen::VectorXd cs = apply_diff(s, shape);
    v = soft(Eigen::VectorXd(cs + u), thresholds);
    u += cs - v;
  }
  return s;
}

VideoTensor tvdn(const VideoTensor& z, double lam, const TVWeights& w, double rho, int iters) {
  if (z.m() != w.shape.m || z.n() != w.shape.n || z.p() != w.shape.p) {
    throw DimensionError("tvdn: tensor shape does not match weights");
  }
  TvDenoiser denoiser(w, rho);
  Eigen::VectorXd s = denoiser.denoise(Eigen::VectorXd(z.matrix().reshaped()), lam, iters);
  return VideoTensor(z.m(), z.n(), s.reshaped(z.m() * z.n(), z.p()));
}

double tvdn_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& s, double lam,
                      const TVWeights& w) {
  return 0.5 * (z - s).squaredNorm() + lam * tv_value(s, w);
}

}  // namespace prpca
