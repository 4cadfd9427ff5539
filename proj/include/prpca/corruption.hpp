#pragma once

#include <cstdint>
#include <string>

#include "prpca/video_model.hpp"

namespace prpca {

enum class CorruptionKind { SaltPepper, Gaussian, Poisson, Missing };

std::string to_string(CorruptionKind kind);
/// Accepts salt_pepper, gaussian, poisson, missing.
CorruptionKind parse_corruption_kind(const std::string& name);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::SaltPepper;
  double level = 0.0;  // probability for salt_pepper / missing, SNR in dB otherwise
  std::uint64_t seed = 0;

  /// Throws ArgumentError for a probability outside [0,1] or a non-finite SNR.
  void validate() const;
};

struct CorruptedVideo {
  VideoTensor video;
  /// 1 where the pixel is untouched (salt_pepper) or kept (missing).
  /// Dense noise touches every pixel and reports all ones.
  MaskTensor mask;
};

/// Deterministic in (v, spec). Frame k draws from its own generator seeded
/// from spec.seed and k, so the result does not depend on evaluation order.
CorruptedVideo corrupt(const VideoTensor& v, const CorruptionSpec& spec);

/// 10 log10(sum clean^2 / sum (noisy - clean)^2).
double empirical_snr_db(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noisy);

/// splitmix64 finalizer, used for per-frame seed derivation.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace prpca
