#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prpca/corruption.hpp"
#include "prpca/image_io.hpp"
#include "prpca/metrics.hpp"
#include "prpca/registration.hpp"
#include "prpca/solvers.hpp"

namespace prpca {

enum class Variant { PrpcaOptShrink, PrpcaSvt, Rpca, Tvrpca };
enum class RegistrationSource { Internal, File, Static };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
std::string to_string(RegistrationSource r);
std::string to_string(TvMode m);
TvMode parse_tv_mode(const std::string& s);

struct PipelineConfig {
  std::string input;   // frame pattern, directory, or a .dmp video
  std::string output;  // output directory
  std::uint64_t seed = 0;

  Variant variant = Variant::PrpcaOptShrink;
  int rank = 1;
  std::optional<double> lambda_s, lambda_e, lambda_l;  // unset: derived from the canvas size
  double tau = 1.0 / 3.0;
  double rho = 1.0;
  int inner_iters = 10;
  int iters = 150;
  std::optional<TvMode> tv;  // unset: 3D when every homography is the identity, else 2D

  // tvrpca baseline
  std::optional<double> lambda1, lambda2, lambda3, mu;
  int soft_impute_iters = 2;

  RegistrationSource registration = RegistrationSource::Internal;
  std::string homography_file;
  RegistrationConfig registration_options;

  std::string input_mask;    // optional observed-pixel masks for the input frames
  std::optional<CorruptionSpec> corruption;
  std::string truth_frames;  // optional clean frames or .dmp
  std::string truth_masks;   // optional foreground labels or .dmp
  std::optional<double> fixed_threshold;
  ColorMode color = ColorMode::Luminance;

  /// Checks parameter ranges and that every referenced path exists.
  /// Throws ConfigurationError or IngestionError.
  void validate() const;
  std::string to_json() const;
  /// Fields present in the JSON override the current values.
  void apply_json(const std::string& text);
  void apply_json_file(const std::filesystem::path& path);
};

struct RunManifest {
  std::string command;
  std::string config_json;  // resolved configuration
  std::uint64_t seed = 0;
  Index canvas_m = 0, canvas_n = 0;
  Index frames = 0;
  int iterations = 0;
  std::map<std::string, double> resolved;      // resolved numeric parameters
  std::map<std::string, double> timings_ms;    // per stage
  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

/// Frames from an image pattern or a video .dmp file.
std::vector<std::vector<Frame>> load_input_channels(const std::string& input, ColorMode color);
std::vector<Frame> load_input(const std::string& input);
VideoTensor load_video(const std::string& input);
MaskTensor load_mask(const std::string& input);

struct SolveOutput {
  Eigen::MatrixXd L, S, E;
  std::vector<IterateRecord> history;
  std::map<std::string, double> resolved;
  bool ill_separated = false;
};

/// Runs the configured variant on registered data.
SolveOutput solve_variant(const VideoTensor& y, const MaskTensor& mask, const PipelineConfig& cfg,
                          TvMode mode);

/// Exclusive-create guard on <dir>/.prpca.lock, removed on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

RunManifest cmd_register(const PipelineConfig& cfg);
RunManifest cmd_corrupt(const PipelineConfig& cfg);
RunManifest cmd_decompose(const PipelineConfig& cfg);
/// cfg.input is a decompose output directory.
MetricsReport cmd_evaluate(const PipelineConfig& cfg);

}  // namespace prpca
