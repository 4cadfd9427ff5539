#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prpca/video_model.hpp"

namespace prpca {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / mse) for peak 1, capped at kPsnrCap.
double psnr_from_mse(double mse);

/// Frames taking part in an evaluation. Empty means every frame.
using FrameSelection = std::vector<Index>;

/// PSNR over the pixels where fg_mask equals `foreground`.
/// Throws UndefinedMetricError when that region is empty.
double region_psnr(const VideoTensor& estimate, const VideoTensor& truth, const MaskTensor& fg_mask,
                   bool foreground, const FrameSelection& frames = {});

struct PsnrPair {
  double f_psnr = 0.0;
  double b_psnr = 0.0;
};

PsnrPair fb_psnr(const VideoTensor& estimate, const VideoTensor& truth, const MaskTensor& fg_mask,
                 const FrameSelection& frames = {});

struct ThresholdPolicy {
  enum class Kind { Fixed, Sweep };
  Kind kind = Kind::Sweep;
  double fixed = 0.0;   // |S| > fixed counts as foreground
  int sweep_count = 64; // thresholds max|S| * i / count, i = 0 .. count-1

  static ThresholdPolicy fixed_at(double t) { return {Kind::Fixed, t, 64}; }
  static ThresholdPolicy sweep(int count = 64) { return {Kind::Sweep, 0.0, count}; }
};

struct FMeasureResult {
  double f_measure = 0.0;
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// F1 of the binarized |S| against the labels. Sweeps keep the first best
/// threshold. Throws UndefinedMetricError when the labels hold no positives.
FMeasureResult f_measure(const VideoTensor& s, const MaskTensor& fg_mask,
                         const ThresholdPolicy& policy = {}, const FrameSelection& frames = {});

/// F1 of an explicit prediction.
FMeasureResult f_measure_binary(const MaskTensor& predicted, const MaskTensor& fg_mask,
                                const FrameSelection& frames = {});

struct MetricsReport {
  std::optional<double> f_psnr;
  std::optional<double> b_psnr;
  std::optional<double> f_measure;
  std::optional<double> threshold;
  std::string threshold_policy = "sweep64";
  double psnr_peak = 1.0;
  std::map<std::string, std::string> errors;  // metric name -> reason it is undefined

  std::string to_key_value() const;
  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  bool operator==(const MetricsReport&) const = default;
};

/// Fills every metric it can; undefined ones land in `errors`.
MetricsReport evaluate_metrics(const VideoTensor& reconstruction, const VideoTensor& truth,
                               const VideoTensor& foreground, const MaskTensor& fg_mask,
                               const ThresholdPolicy& policy = {},
                               const FrameSelection& frames = {});

}  // namespace prpca
