#include "prpca/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "prpca/error.hpp"

namespace prpca {

namespace {

FrameSelection resolve(const FrameSelection& frames, Index p) {
  if (frames.empty()) {
    FrameSelection all(static_cast<std::size_t>(p));
    for (Index k = 0; k < p; ++k) all[static_cast<std::size_t>(k)] = k;
    return all;
  }
  for (Index k : frames) {
    if (k < 0 || k >= p) throw ArgumentError("metrics: frame index " + std::to_string(k) + " out of range");
  }
  return frames;
}

void check_shapes(const VideoTensor& a, const MaskTensor& mask, const char* what) {
  if (a.m() != mask.m() || a.n() != mask.n() || a.p() != mask.p()) {
    throw DimensionError(std::string(what) + ": shape mismatch with mask");
  }
}

struct Counts {
  double tp = 0, fp = 0, fn = 0;
};

FMeasureResult score(const Counts& c, double threshold) {
  FMeasureResult r;
  r.threshold = threshold;
  r.precision = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0.0;
  r.f_measure = c.tp > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

void put(std::ostringstream& os, const char* key, const std::optional<double>& v) {
  os << key << '=';
  if (v) os << std::setprecision(17) << *v; else os << "nan";
  os << '\n';
}

}  // namespace

double psnr_from_mse(double mse) {
  if (!(mse >= 0.0)) throw NumericError("psnr: invalid mse");
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double region_psnr(const VideoTensor& estimate, const VideoTensor& truth, const MaskTensor& fg_mask,
                   bool foreground, const FrameSelection& frames) {
  if (!estimate.same_shape(truth)) throw DimensionError("psnr: estimate and truth shapes differ");
  check_shapes(truth, fg_mask, "psnr");
  double sum = 0.0;
  Index count = 0;
  for (Index k : resolve(frames, truth.p())) {
    const auto diff = estimate.matrix().col(k) - truth.matrix().col(k);
    for (Index i = 0; i < diff.size(); ++i) {
      if ((fg_mask.matrix()(i, k) != 0.0) == foreground) {
        sum += diff(i) * diff(i);
        ++count;
      }
    }
  }
  if (count == 0) {
    throw UndefinedMetricError(foreground ? "f-PSNR: no foreground pixels" : "b-PSNR: no background pixels");
  }
  return psnr_from_mse(sum / static_cast<double>(count));
}

PsnrPair fb_psnr(const VideoTensor& estimate, const VideoTensor& truth, const MaskTensor& fg_mask,
                 const FrameSelection& frames) {
  return {region_psnr(estimate, truth, fg_mask, true, frames),
          region_psnr(estimate, truth, fg_mask, false, frames)};
}

FMeasureResult f_measure_binary(const MaskTensor& predicted, const MaskTensor& fg_mask,
                                const FrameSelection& frames) {
  if (!(predicted.m() == fg_mask.m() && predicted.n() == fg_mask.n() && predicted.p() == fg_mask.p())) {
    throw DimensionError("f_measure: prediction and labels differ in shape");
  }
  Counts c;
  for (Index k : resolve(frames, fg_mask.p())) {
    for (Index i = 0; i < fg_mask.matrix().rows(); ++i) {
      const bool pred = predicted.matrix()(i, k) != 0.0;
      const bool label = fg_mask.matrix()(i, k) != 0.0;
      c.tp += pred && label;
      c.fp += pred && !label;
      c.fn += !pred && label;
    }
  }
  if (c.tp + c.fn == 0) throw UndefinedMetricError("F-measure: labels contain no foreground");
  return score(c, 0.5);
}

FMeasureResult f_measure(const VideoTensor& s, const MaskTensor& fg_mask, const ThresholdPolicy& policy,
                         const FrameSelection& frames) {
  check_shapes(s, fg_mask, "f_measure");
  const FrameSelection sel = resolve(frames, s.p());
  std::vector<double> mags, labels;
  for (Index k : sel) {
    for (Index i = 0; i < s.matrix().rows(); ++i) {
      mags.push_back(std::abs(s.matrix()(i, k)));
      labels.push_back(fg_mask.matrix()(i, k));
    }
  }
  double positives = 0.0;
  for (double l : labels) positives += l != 0.0;
  if (positives == 0.0) throw UndefinedMetricError("F-measure: labels contain no foreground");

  auto at = [&](double t) {
    Counts c;
    for (std::size_t i = 0; i < mags.size(); ++i) {
      const bool pred = mags[i] > t;
      const bool label = labels[i] != 0.0;
      c.tp += pred && label;
      c.fp += pred && !label;
      c.fn += !pred && label;
    }
    return score(c, t);
  };

  if (policy.kind == ThresholdPolicy::Kind::Fixed) return at(policy.fixed);
  if (policy.sweep_count < 1) throw ArgumentError("f_measure: sweep needs at least one threshold");
  double peak = 0.0;
  for (double m : mags) peak = std::max(peak, m);
  FMeasureResult best = at(0.0);
  for (int i = 1; i < policy.sweep_count; ++i) {
    const FMeasureResult r = at(peak * i / policy.sweep_count);
    if (r.f_measure > best.f_measure) best = r;
  }
  return best;
}

std::string MetricsReport::to_key_value() const {
  std::ostringstream os;
  put(os, "f_psnr", f_psnr);
  put(os, "b_psnr", b_psnr);
  put(os, "f_measure", f_measure);
  put(os, "threshold", threshold);
  os << "threshold_policy=" << threshold_policy << '\n';
  os << "psnr_peak=" << psnr_peak << '\n';
  for (const auto& [k, v] : errors) os << "error." << k << '=' << v << '\n';
  return os.str();
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["f_psnr"] = opt(f_psnr);
  j["b_psnr"] = opt(b_psnr);
  j["f_measure"] = opt(f_measure);
  j["threshold"] = opt(threshold);
  j["threshold_policy"] = threshold_policy;
  j["psnr_peak"] = psnr_peak;
  j["errors"] = errors;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  MetricsReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      return j[key].get<double>();
    };
    r.f_psnr = opt("f_psnr");
    r.b_psnr = opt("b_psnr");
    r.f_measure = opt("f_measure");
    r.threshold = opt("threshold");
    r.threshold_policy = j.value("threshold_policy", r.threshold_policy);
    r.psnr_peak = j.value("psnr_peak", 1.0);
    if (j.contains("errors")) r.errors = j["errors"].get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("metrics report: ") + e.what());
  }
  return r;
}

MetricsReport evaluate_metrics(const VideoTensor& reconstruction, const VideoTensor& truth,
                               const VideoTensor& foreground, const MaskTensor& fg_mask,
                               const ThresholdPolicy& policy, const FrameSelection& frames) {
  MetricsReport r;
  r.threshold_policy = policy.kind == ThresholdPolicy::Kind::Sweep
                           ? "sweep" + std::to_string(policy.sweep_count)
                           : "fixed";
  try {
    r.f_psnr = region_psnr(reconstruction, truth, fg_mask, true, frames);
  } catch (const UndefinedMetricError& e) {
    r.errors["f_psnr"] = e.what();
  }
  try {
    r.b_psnr = region_psnr(reconstruction, truth, fg_mask, false, frames);
  } catch (const UndefinedMetricError& e) {
    r.errors["b_psnr"] = e.what();
  }
  try {
    const auto f = f_measure(foreground, fg_mask, policy, frames);
    r.f_measure = f.f_measure;
    r.threshold = f.threshold;
  } catch (const UndefinedMetricError& e) {
    r.errors["f_measure"] = e.what();
  }
  return r;
}

}  // namespace prpca
