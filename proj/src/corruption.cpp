#include "prpca/corruption.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "prpca/error.hpp"

namespace prpca {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

template <typename Fn>
void per_frame(Index p, std::uint64_t seed, std::uint64_t salt, Fn&& fn) {
  for (Index k = 0; k < p; ++k) {
    std::mt19937_64 rng(mix_seed(seed ^ salt, static_cast<std::uint64_t>(k)));
    fn(k, rng);
  }
}

// Shot noise at photon budget lam0: counts ~ Poisson(lam0 * v), rescaled by 1/lam0.
Eigen::MatrixXd poisson_sample(const Eigen::MatrixXd& clean, double lam0, std::uint64_t seed) {
  Eigen::MatrixXd out(clean.rows(), clean.cols());
  per_frame(clean.cols(), seed, 0x706f6973ULL, [&](Index k, std::mt19937_64& rng) {
    for (Index i = 0; i < clean.rows(); ++i) {
      const double mean = lam0 * clean(i, k);
      if (mean <= 0.0) {
        out(i, k) = 0.0;
        continue;
      }
      std::poisson_distribution<long long> d(mean);
      out(i, k) = static_cast<double>(d(rng)) / lam0;
    }
  });
  return out;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::SaltPepper: return "salt_pepper";
    case CorruptionKind::Gaussian: return "gaussian";
    case CorruptionKind::Poisson: return "poisson";
    case CorruptionKind::Missing: return "missing";
  }
  return "unknown";
}

CorruptionKind parse_corruption_kind(const std::string& name) {
  if (name == "salt_pepper" || name == "salt-pepper") return CorruptionKind::SaltPepper;
  if (name == "gaussian") return CorruptionKind::Gaussian;
  if (name == "poisson") return CorruptionKind::Poisson;
  if (name == "missing") return CorruptionKind::Missing;
  throw ArgumentError("unknown corruption kind '" + name + "'");
}

void CorruptionSpec::validate() const {
  if (kind == CorruptionKind::SaltPepper || kind == CorruptionKind::Missing) {
    if (!(level >= 0.0 && level <= 1.0)) {
      throw ArgumentError(to_string(kind) + ": probability " + std::to_string(level) +
                          " outside [0, 1]");
    }
  } else if (!std::isfinite(level)) {
    throw ArgumentError(to_string(kind) + ": target SNR must be finite");
  }
}

double empirical_snr_db(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) {
    throw DimensionError("empirical_snr_db: shape mismatch");
  }
  const double noise = (noisy - clean).squaredNorm();
  const double signal = clean.squaredNorm();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

CorruptedVideo corrupt(const VideoTensor& v, const CorruptionSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd& x = v.matrix();
  if (!x.allFinite() || (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0))) {
    throw ArgumentError("corrupt: input intensities must lie in [0, 1]");
  }
  Eigen::MatrixXd out = x;
  Eigen::MatrixXd keep = Eigen::MatrixXd::Ones(x.rows(), x.cols());

  switch (spec.kind) {
    case CorruptionKind::SaltPepper:
      per_frame(x.cols(), spec.seed, 0x73616c74ULL, [&](Index k, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Index i = 0; i < x.rows(); ++i) {
          const double hit = u(rng);
          const double coin = u(rng);
          if (hit < spec.level) {
            out(i, k) = coin < 0.5 ? 0.0 : 1.0;
            keep(i, k) = 0.0;
          }
        }
      });
      break;
    case CorruptionKind::Missing:
      per_frame(x.cols(), spec.seed, 0x6d697373ULL, [&](Index k, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Index i = 0; i < x.rows(); ++i) {
          if (u(rng) < spec.level) {
            out(i, k) = 0.0;
            keep(i, k) = 0.0;
          }
        }
      });
      break;
    case CorruptionKind::Gaussian: {
      const double signal = x.squaredNorm();
      if (signal == 0.0) throw ArgumentError("gaussian: signal power is zero, SNR undefined");
      Eigen::MatrixXd noise(x.rows(), x.cols());
      per_frame(x.cols(), spec.seed, 0x67617573ULL, [&](Index k, std::mt19937_64& rng) {
        std::normal_distribution<double> d(0.0, 1.0);
        for (Index i = 0; i < x.rows(); ++i) noise(i, k) = d(rng);
      });
      // Scale the draw so the realized SNR hits the target exactly.
      const double target_noise = signal / std::pow(10.0, spec.level / 10.0);
      out = x + noise * std::sqrt(target_noise / noise.squaredNorm());
      break;
    }
    case CorruptionKind::Poisson: {
      const double signal = x.squaredNorm();
      const double total = x.sum();
      if (signal == 0.0) throw ArgumentError("poisson: signal power is zero, SNR undefined");
      // E||noise||^2 = sum(v) / lam0 gives the starting budget.
      double lo = 0.0, hi = 0.0;
      double lam0 = total * std::pow(10.0, spec.level / 10.0) / signal;
      Eigen::MatrixXd best = poisson_sample(x, lam0, spec.seed);
      double best_gap = std::abs(empirical_snr_db(x, best) - spec.level);
      for (int trial = 0; trial < 60 && best_gap > 0.2; ++trial) {
        const Eigen::MatrixXd cand = poisson_sample(x, lam0, spec.seed);
        const double snr = empirical_snr_db(x, cand);
        const double gap = std::abs(snr - spec.level);
        if (gap < best_gap) {
          best_gap = gap;
          best = cand;
        }
        if (gap <= 0.2) break;
        // SNR grows with the photon budget: bisect in log space once bracketed.
        if (snr < spec.level) lo = lam0; else hi = lam0;
        lam0 = (lo > 0.0 && hi > 0.0) ? std::sqrt(lo * hi)
                                      : lam0 * std::pow(10.0, (spec.level - snr) / 10.0);
      }
      out = best;
      break;
    }
  }
  return {VideoTensor(v.m(), v.n(), std::move(out)), MaskTensor(v.m(), v.n(), std::move(keep))};
}

}  // namespace prpca
