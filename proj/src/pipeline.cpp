#include "prpca/pipeline.hpp"

#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "prpca/dump_io.hpp"
#include "prpca/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace prpca {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kSvtLambdaFraction = 0.05;  // of the observed data's spectral norm

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <typename Fn>
  auto run(const std::string& stage, Fn&& fn) {
    const auto start = Clock::now();
    struct Record {
      StageTimer* self;
      const std::string& stage;
      Clock::time_point start;
      ~Record() {
        self->sink_[stage] +=
            std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      }
    } record{this, stage, start};
    return labeled(stage, std::forward<Fn>(fn));
  }

  // Rethrows library errors with the stage name prepended, keeping the type.
  template <typename Fn>
  static auto labeled(const std::string& stage, Fn&& fn) {
    try {
      return fn();
    }
#define PRPCA_RELABEL(Type) \
    catch (const Type& e) { throw Type(stage + ": " + e.what()); }
    PRPCA_RELABEL(DimensionError)
    PRPCA_RELABEL(ArgumentError)
    PRPCA_RELABEL(NumericError)
    PRPCA_RELABEL(DomainError)
    PRPCA_RELABEL(RankError)
    PRPCA_RELABEL(DivergenceError)
    PRPCA_RELABEL(InsufficientDataError)
    PRPCA_RELABEL(DegenerateConfigurationError)
    PRPCA_RELABEL(RegistrationFailure)
    PRPCA_RELABEL(InsufficientFeaturesError)
    PRPCA_RELABEL(CanvasTooLargeError)
    PRPCA_RELABEL(ConfigurationError)
    PRPCA_RELABEL(IngestionError)
    PRPCA_RELABEL(UndefinedMetricError)
#undef PRPCA_RELABEL
  }

 private:
  std::map<std::string, double>& sink_;
};

bool is_dump(const std::string& path) { return fs::path(path).extension() == ".dmp"; }

std::string registration_string(const PipelineConfig& c) {
  switch (c.registration) {
    case RegistrationSource::Internal: return "auto";
    case RegistrationSource::Static: return "static";
    case RegistrationSource::File: return "file=" + c.homography_file;
  }
  return "auto";
}

void parse_registration(PipelineConfig& c, const std::string& s) {
  if (s == "auto") {
    c.registration = RegistrationSource::Internal;
  } else if (s == "static") {
    c.registration = RegistrationSource::Static;
  } else if (s.rfind("file=", 0) == 0 && s.size() > 5) {
    c.registration = RegistrationSource::File;
    c.homography_file = s.substr(5);
  } else {
    throw ConfigurationError("registration must be auto, static or file=PATH, got '" + s + "'");
  }
}

void check_path(const std::string& p, const char* what) {
  if (p.empty()) return;
  if (is_dump(p)) {
    if (!fs::exists(p)) throw IngestionError(std::string(what) + " " + p + ": no such file");
  } else {
    list_frame_files(p);
  }
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IngestionError(path.string() + ": cannot write");
  os << text;
}

void write_trace(const fs::path& path, const std::vector<IterateRecord>& history) {
  std::ofstream os(path);
  if (!os) throw IngestionError(path.string() + ": cannot write");
  os << "iteration,rel_change_l,rel_change_s,rel_change_e,cost\n";
  for (const auto& r : history) {
    os << r.iteration << ',' << format_double(r.rel_change_l) << ',' << format_double(r.rel_change_s)
       << ',' << format_double(r.rel_change_e) << ',' << (r.cost ? format_double(*r.cost) : "") << '\n';
  }
}

VideoTensor clamp_video(const VideoTensor& v) {
  Eigen::MatrixXd x = v.matrix().cwiseMax(0.0).cwiseMin(1.0);
  return VideoTensor(v.m(), v.n(), std::move(x));
}

RegisteredVideo register_frames(const std::vector<Frame>& frames, const PipelineConfig& cfg) {
  switch (cfg.registration) {
    case RegistrationSource::Static:
      return register_static(frames);
    case RegistrationSource::File: {
      std::ifstream is(cfg.homography_file);
      if (!is) throw IngestionError(cfg.homography_file + ": cannot open");
      const auto hs = read_homographies(is);
      if (hs.size() != frames.size()) {
        throw IngestionError(cfg.homography_file + ": " + std::to_string(hs.size()) +
                             " homographies for " + std::to_string(frames.size()) + " frames");
      }
      return register_with_homographies(frames, hs, cfg.registration_options.max_canvas_pixels);
    }
    case RegistrationSource::Internal: {
      if (frames.size() < 2) throw ConfigurationError("internal registration needs at least 2 frames");
      RegistrationConfig opts = cfg.registration_options;
      opts.ransac.seed = cfg.seed;
      return register_video(frames, opts);
    }
  }
  throw ConfigurationError("unknown registration source");
}

// Same geometry as `reg`, applied to another channel.
RegisteredVideo register_like(const std::vector<Frame>& frames, const RegisteredVideo& reg,
                              const PipelineConfig& cfg) {
  if (cfg.registration == RegistrationSource::Static) return register_static(frames);
  return register_with_homographies(frames, reg.anchored, cfg.registration_options.max_canvas_pixels);
}

// Canvas mask combined with user-supplied input masks pushed through the warp.
MaskTensor combined_mask(const RegisteredVideo& reg, const PipelineConfig& cfg) {
  if (cfg.input_mask.empty()) return reg.mask;
  const MaskTensor in = load_mask(cfg.input_mask);
  if (in.m() != reg.frame_height || in.n() != reg.frame_width ||
      in.p() != static_cast<Index>(reg.composites.size())) {
    throw IngestionError(cfg.input_mask + ": mask shape differs from the frames");
  }
  Eigen::MatrixXd out = reg.mask.matrix();
  for (Index k = 0; k < in.p(); ++k) {
    const WarpedFrame w = warp_frame(Frame(Eigen::MatrixXd(in.frame(k))), reg.composites[k], reg.m, reg.n);
    const Eigen::VectorXd keep = (w.pixels.reshaped().array() > 1.0 - 1e-12).cast<double>();
    out.col(k) = out.col(k).cwiseProduct(keep);
  }
  return MaskTensor(reg.m, reg.n, std::move(out));
}

bool all_identity(const RegisteredVideo& reg) {
  for (const auto& h : reg.anchored)
    if (!h.is_identity()) return false;
  return true;
}

VideoTensor luminance(const std::vector<VideoTensor>& ch) {
  if (ch.size() == 1) return ch.front();
  Eigen::MatrixXd x = 0.299 * ch[0].matrix() + 0.587 * ch[1].matrix() + 0.114 * ch[2].matrix();
  return VideoTensor(ch[0].m(), ch[0].n(), std::move(x));
}

double spectral_norm(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
  return svd.singularValues()(0);
}

std::string dump_name(const std::string& prefix, const std::string& name) { return prefix + name + ".dmp"; }

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::PrpcaOptShrink: return "prpca-optshrink";
    case Variant::PrpcaSvt: return "prpca-svt";
    case Variant::Rpca: return "rpca";
    case Variant::Tvrpca: return "tvrpca";
  }
  return "unknown";
}

Variant parse_variant(const std::string& s) {
  if (s == "prpca-optshrink") return Variant::PrpcaOptShrink;
  if (s == "prpca-svt") return Variant::PrpcaSvt;
  if (s == "rpca") return Variant::Rpca;
  if (s == "tvrpca") return Variant::Tvrpca;
  throw ConfigurationError("unknown variant '" + s + "'");
}

std::string to_string(RegistrationSource r) {
  switch (r) {
    case RegistrationSource::Internal: return "auto";
    case RegistrationSource::File: return "file";
    case RegistrationSource::Static: return "static";
  }
  return "unknown";
}

std::string to_string(TvMode m) { return m == TvMode::TwoD ? "2d" : "3d"; }

TvMode parse_tv_mode(const std::string& s) {
  if (s == "2d" || s == "2D") return TvMode::TwoD;
  if (s == "3d" || s == "3D") return TvMode::ThreeD;
  throw ConfigurationError("tv mode must be 2d or 3d, got '" + s + "'");
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigurationError(m); };
  if (input.empty()) fail("input path is required");
  if (output.empty()) fail("output directory is required");
  if (rank < 1) fail("rank must be >= 1");
  const double tau_max = variant == Variant::Rpca ? 1.0 : 2.0 / 3.0;
  if (!(tau > 0.0 && tau < tau_max)) fail("tau out of range for " + to_string(variant));
  if (!(rho > 0.0)) fail("rho must be positive");
  if (inner_iters < 1 || iters < 1 || soft_impute_iters < 1) fail("iteration counts must be >= 1");
  for (const auto& v : {lambda_s, lambda_e, lambda_l, lambda1, lambda2, lambda3})
    if (v && !(*v >= 0.0)) fail("lambdas must be >= 0");
  if (mu && !(*mu > 0.0)) fail("mu must be positive");
  if (corruption) corruption->validate();
  if (registration == RegistrationSource::File) {
    if (homography_file.empty()) fail("registration file=PATH needs a path");
    if (!fs::exists(homography_file)) throw IngestionError(homography_file + ": no such file");
  }
  check_path(input, "input");
  check_path(input_mask, "input mask");
  check_path(truth_frames, "truth frames");
  check_path(truth_masks, "truth masks");
}

std::string PipelineConfig::to_json() const {
  json j;
  j["input"] = input;
  j["output"] = output;
  j["seed"] = seed;
  j["variant"] = to_string(variant);
  j["rank"] = rank;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j["lambda_s"] = opt(lambda_s);
  j["lambda_e"] = opt(lambda_e);
  j["lambda_l"] = opt(lambda_l);
  j["lambda1"] = opt(lambda1);
  j["lambda2"] = opt(lambda2);
  j["lambda3"] = opt(lambda3);
  j["mu"] = opt(mu);
  j["tau"] = tau;
  j["rho"] = rho;
  j["inner_iters"] = inner_iters;
  j["iters"] = iters;
  j["soft_impute_iters"] = soft_impute_iters;
  j["tv"] = tv ? json(to_string(*tv)) : json(nullptr);
  j["registration"] = registration_string(*this);
  j["max_features"] = registration_options.max_features;
  j["ransac_threshold"] = registration_options.ransac.inlier_threshold_px;
  j["ransac_max_iters"] = registration_options.ransac.max_iters;
  j["input_mask"] = input_mask;
  if (corruption) {
    j["corruption"] = {{"kind", to_string(corruption->kind)}, {"level", corruption->level}};
  } else {
    j["corruption"] = nullptr;
  }
  j["truth_frames"] = truth_frames;
  j["truth_masks"] = truth_masks;
  j["threshold"] = opt(fixed_threshold);
  j["color"] = color == ColorMode::Luminance ? "luminance" : "per-channel";
  return j.dump(2);
}

void PipelineConfig::apply_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigurationError("config: top level must be an object");
  try {
    auto str = [&](const char* k, std::string& dst) {
      if (j.contains(k) && !j[k].is_null()) dst = j[k].get<std::string>();
    };
    auto num = [&](const char* k, auto& dst) {
      if (j.contains(k) && !j[k].is_null()) dst = j[k].get<std::decay_t<decltype(dst)>>();
    };
    auto opt = [&](const char* k, std::optional<double>& dst) {
      if (j.contains(k)) dst = j[k].is_null() ? std::nullopt : std::optional<double>(j[k].get<double>());
    };
    str("input", input);
    str("output", output);
    num("seed", seed);
    if (j.contains("variant")) variant = parse_variant(j["variant"].get<std::string>());
    num("rank", rank);
    opt("lambda_s", lambda_s);
    opt("lambda_e", lambda_e);
    opt("lambda_l", lambda_l);
    opt("lambda1", lambda1);
    opt("lambda2", lambda2);
    opt("lambda3", lambda3);
    opt("mu", mu);
    num("tau", tau);
    num("rho", rho);
    num("inner_iters", inner_iters);
    num("iters", iters);
    num("soft_impute_iters", soft_impute_iters);
    if (j.contains("tv")) tv = j["tv"].is_null() ? std::nullopt : std::optional(parse_tv_mode(j["tv"]));
    if (j.contains("registration")) parse_registration(*this, j["registration"].get<std::string>());
    num("max_features", registration_options.max_features);
    num("ransac_threshold", registration_options.ransac.inlier_threshold_px);
    num("ransac_max_iters", registration_options.ransac.max_iters);
    str("input_mask", input_mask);
    if (j.contains("corruption")) {
      if (j["corruption"].is_null()) {
        corruption.reset();
      } else {
        CorruptionSpec spec;
        spec.kind = parse_corruption_kind(j["corruption"].at("kind").get<std::string>());
        spec.level = j["corruption"].at("level").get<double>();
        spec.seed = seed;
        corruption = spec;
      }
    }
    str("truth_frames", truth_frames);
    str("truth_masks", truth_masks);
    opt("threshold", fixed_threshold);
    if (j.contains("color")) {
      const auto c = j["color"].get<std::string>();
      if (c == "luminance") color = ColorMode::Luminance;
      else if (c == "per-channel") color = ColorMode::PerChannel;
      else throw ConfigurationError("config: color must be luminance or per-channel");
    }
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  if (corruption) corruption->seed = seed;
}

void PipelineConfig::apply_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IngestionError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << is.rdbuf();
  apply_json(ss.str());
}

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["config"] = json::parse(config_json.empty() ? "{}" : config_json);
  j["seed"] = seed;
  j["canvas"] = {{"m", canvas_m}, {"n", canvas_n}};
  j["frames"] = frames;
  j["iterations"] = iterations;
  j["resolved"] = resolved;
  j["timings_ms"] = timings_ms;
  return j.dump(2);
}

RunManifest RunManifest::from_json(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.command = j.at("command").get<std::string>();
    m.config_json = j.at("config").dump(2);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.canvas_m = j.at("canvas").at("m").get<Index>();
    m.canvas_n = j.at("canvas").at("n").get<Index>();
    m.frames = j.at("frames").get<Index>();
    m.iterations = j.at("iterations").get<int>();
    m.resolved = j.at("resolved").get<std::map<std::string, double>>();
    m.timings_ms = j.at("timings_ms").get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw IngestionError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::vector<std::vector<Frame>> load_input_channels(const std::string& input, ColorMode color) {
  if (is_dump(input)) return {video_from_dump(read_dump_file(input)).frames()};
  if (color == ColorMode::Luminance) return {load_frames(input)};
  return load_frame_channels(input);
}

std::vector<Frame> load_input(const std::string& input) {
  return load_input_channels(input, ColorMode::Luminance).front();
}

VideoTensor load_video(const std::string& input) {
  if (is_dump(input)) return video_from_dump(read_dump_file(input));
  return VideoTensor::from_frames(load_frames(input));
}

MaskTensor load_mask(const std::string& input) {
  if (is_dump(input)) return mask_from_dump(read_dump_file(input));
  return load_mask_frames(input);
}

SolveOutput solve_variant(const VideoTensor& y, const MaskTensor& mask, const PipelineConfig& cfg,
                          TvMode mode) {
  SolveOutput out;
  switch (cfg.variant) {
    case Variant::PrpcaOptShrink:
    case Variant::PrpcaSvt: {
      SolverConfig sc = SolverConfig::defaults_for(y.m(), y.n(), mode);
      sc.rank = cfg.rank;
      if (cfg.lambda_s) sc.lambda_s = *cfg.lambda_s;
      if (cfg.lambda_e) sc.lambda_e = *cfg.lambda_e;
      sc.tau = cfg.tau;
      sc.rho = cfg.rho;
      sc.inner_iters = cfg.inner_iters;
      sc.outer_iters = cfg.iters;
      Decomposition d;
      if (cfg.variant == Variant::PrpcaSvt) {
        sc.lambda_l = cfg.lambda_l.value_or(spectral_norm(project_mask(y.matrix(), mask)) * kSvtLambdaFraction);
        out.resolved["lambda_l"] = sc.lambda_l;
        d = prpca_svt_run(y, mask, sc);
      } else {
        d = prpca_run(y, mask, sc);
      }
      out.resolved["lambda_s"] = sc.lambda_s;
      out.resolved["lambda_e"] = sc.lambda_e;
      out.resolved["rank"] = sc.rank;
      out.L = std::move(d.L);
      out.S = std::move(d.S);
      out.E = std::move(d.E);
      out.history = std::move(d.history);
      out.ill_separated = d.ill_separated_seen;
      break;
    }
    case Variant::Rpca: {
      // lambda_l as for svt; lambda_s keeps the classic 1/sqrt(max(mn, p)) ratio.
      const double lam_l =
          cfg.lambda_l.value_or(spectral_norm(project_mask(y.matrix(), mask)) * kSvtLambdaFraction);
      const double lam_s = cfg.lambda_s.value_or(
          lam_l / std::sqrt(static_cast<double>(std::max(y.m() * y.n(), y.p()))));
      out.resolved["lambda_l"] = lam_l;
      out.resolved["lambda_s"] = lam_s;
      auto r = rpca_missing_run(y.matrix(), mask, lam_l, lam_s, cfg.tau, cfg.iters);
      out.L = std::move(r.L);
      out.S = std::move(r.S);
      out.E = Eigen::MatrixXd::Zero(out.L.rows(), out.L.cols());
      break;
    }
    case Variant::Tvrpca: {
      TvrpcaConfig tc;
      const double base = 1.0 / std::sqrt(static_cast<double>(std::max(y.m() * y.n(), y.p())));
      tc.lambda1 = cfg.lambda1.value_or(base);
      tc.lambda2 = cfg.lambda2.value_or(base);
      tc.lambda3 = cfg.lambda3.value_or(base);
      const double norm = spectral_norm(project_mask(y.matrix(), mask));
      tc.mu = cfg.mu.value_or(norm > 0.0 ? 1.25 / norm : 1.0);
      tc.iters = cfg.iters;
      tc.soft_impute_iters = cfg.soft_impute_iters;
      tc.tv_inner_iters = cfg.inner_iters;
      tc.tv_rho = cfg.rho;
      tc.tv_mode = mode;
      for (const auto& [k, v] : std::map<std::string, double>{
               {"lambda1", tc.lambda1}, {"lambda2", tc.lambda2}, {"lambda3", tc.lambda3}, {"mu", tc.mu}})
        out.resolved[k] = v;
      auto r = tvrpca_missing_run(y, mask, tc);
      out.L = std::move(r.L);
      out.S = std::move(r.S);
      out.E = std::move(r.E);
      break;
    }
  }
  out.resolved["tv_3d"] = mode == TvMode::ThreeD ? 1.0 : 0.0;
  return out;
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".prpca.lock") {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw ConfigurationError(dir.string() + ": output directory is locked by another run");
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

RunManifest cmd_register(const PipelineConfig& cfg) {
  cfg.validate();
  RunManifest man;
  man.command = "register";
  man.config_json = cfg.to_json();
  man.seed = cfg.seed;
  StageTimer t(man.timings_ms);
  const fs::path out(cfg.output);
  OutputLock lock(out);
  const auto frames = t.run("load", [&] { return load_input(cfg.input); });
  const RegisteredVideo reg = t.run("register", [&] { return register_frames(frames, cfg); });
  t.run("write", [&] {
    fs::create_directories(out / "masks");
    fs::create_directories(out / "dumps");
    std::ofstream hs(out / "homographies.txt");
    write_homographies(hs, reg.anchored);
    if (!hs) throw IngestionError((out / "homographies.txt").string() + ": write failed");
    write_png(out / "panorama.png", median_composite(reg.frames, reg.mask), 16);
    VideoTensor masks(reg.m, reg.n, reg.mask.matrix());
    write_frame_sequence(out / "masks", "mask", masks);
    write_dump_file(out / "dumps" / "registered.dmp", to_dump(reg.frames));
    write_dump_file(out / "dumps" / "mask.dmp", to_dump(reg.mask));
    return 0;
  });
  man.canvas_m = reg.m;
  man.canvas_n = reg.n;
  man.frames = reg.frames.p();
  man.resolved["anchor"] = static_cast<double>(reg.anchor);
  write_text(out / "manifest.json", man.to_json());
  return man;
}

RunManifest cmd_corrupt(const PipelineConfig& cfg) {
  cfg.validate();
  if (!cfg.corruption) throw ConfigurationError("corrupt: a corruption kind and level are required");
  RunManifest man;
  man.command = "corrupt";
  man.config_json = cfg.to_json();
  man.seed = cfg.seed;
  StageTimer t(man.timings_ms);
  const fs::path out(cfg.output);
  OutputLock lock(out);
  const auto channels = t.run("load", [&] { return load_input_channels(cfg.input, cfg.color); });
  CorruptionSpec spec = *cfg.corruption;
  spec.seed = cfg.seed;
  std::vector<CorruptedVideo> results = t.run("corrupt", [&] {
    std::vector<CorruptedVideo> r;
    for (const auto& ch : channels) r.push_back(corrupt(VideoTensor::from_frames(ch), spec));
    return r;
  });
  t.run("write", [&] {
    fs::create_directories(out);
    for (std::size_t c = 0; c < results.size(); ++c) {
      const std::string prefix = results.size() == 1 ? "" : "c" + std::to_string(c) + "_";
      write_frame_sequence(out / "frames", prefix + "corrupted", results[c].video, 16);
      write_dump_file(out / (prefix + "corrupted.dmp"), to_dump(results[c].video));
    }
    VideoTensor mask(results[0].mask.m(), results[0].mask.n(), results[0].mask.matrix());
    write_frame_sequence(out / "masks", "mask", mask);
    write_dump_file(out / "mask.dmp", to_dump(results[0].mask));
    return 0;
  });
  const auto& m = results[0].mask;
  man.canvas_m = m.m();
  man.canvas_n = m.n();
  man.frames = m.p();
  man.resolved["level"] = spec.level;
  man.resolved["affected_fraction"] =
      1.0 - static_cast<double>(m.count_observed()) / static_cast<double>(m.matrix().size());
  write_text(out / "manifest.json", man.to_json());
  return man;
}

RunManifest cmd_decompose(const PipelineConfig& cfg) {
  cfg.validate();
  RunManifest man;
  man.command = "decompose";
  man.config_json = cfg.to_json();
  man.seed = cfg.seed;
  StageTimer t(man.timings_ms);
  const fs::path out(cfg.output);
  OutputLock lock(out);

  const auto channels = t.run("load", [&] { return load_input_channels(cfg.input, cfg.color); });
  const std::vector<Frame> luma =
      channels.size() == 1 ? channels[0] : luminance([&] {
        std::vector<VideoTensor> v;
        for (const auto& ch : channels) v.push_back(VideoTensor::from_frames(ch));
        return v;
      }()).frames();

  const RegisteredVideo reg = t.run("register", [&] { return register_frames(luma, cfg); });
  const MaskTensor mask = t.run("register", [&] { return combined_mask(reg, cfg); });
  const TvMode mode = cfg.tv.value_or(all_identity(reg) ? TvMode::ThreeD : TvMode::TwoD);

  fs::create_directories(out / "dumps");
  fs::create_directories(out / "panorama");
  fs::create_directories(out / "frames");
  {
    std::ofstream hs(out / "homographies.txt");
    write_homographies(hs, reg.anchored);
  }
  write_dump_file(out / "dumps" / "M.dmp", to_dump(mask));

  std::vector<VideoTensor> ls_frames, s_frames;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const std::string prefix = channels.size() == 1 ? "" : "c" + std::to_string(c) + "_";
    const RegisteredVideo creg = channels.size() == 1 ? reg : register_like(channels[c], reg, cfg);
    const VideoTensor y(creg.m, creg.n, project_mask(creg.frames.matrix(), mask));
    SolveOutput sol = t.run("solve", [&] { return solve_variant(y, mask, cfg, mode); });
    man.iterations = sol.history.empty() ? cfg.iters : static_cast<int>(sol.history.size());
    for (const auto& [k, v] : sol.resolved) man.resolved[k] = v;
    if (sol.ill_separated) man.resolved["ill_separated"] = 1.0;

    const VideoTensor L(reg.m, reg.n, sol.L), S(reg.m, reg.n, sol.S), E(reg.m, reg.n, sol.E);
    const VideoTensor LS(reg.m, reg.n, sol.L + sol.S);
    const auto unreg = t.run("unregister", [&] { return unregister({L, S, E, LS}, reg); });
    ls_frames.push_back(unreg[3]);
    s_frames.push_back(unreg[1]);

    t.run("write", [&] {
      write_dump_file(out / "dumps" / dump_name(prefix, "Y"), to_dump(y));
      write_dump_file(out / "dumps" / dump_name(prefix, "L"), to_dump(L));
      write_dump_file(out / "dumps" / dump_name(prefix, "S"), to_dump(S));
      write_dump_file(out / "dumps" / dump_name(prefix, "E"), to_dump(E));
      write_frame_sequence(out / "panorama", prefix + "L", clamp_video(L));
      write_frame_sequence(out / "panorama", prefix + "S", signed_visualization(S));
      write_frame_sequence(out / "panorama", prefix + "E", signed_visualization(E));
      const char* names[] = {"L_frames", "S_frames", "E_frames", "LS_frames"};
      for (int i = 0; i < 4; ++i)
        write_dump_file(out / "dumps" / dump_name(prefix, names[i]), to_dump(unreg[i]));
      write_frame_sequence(out / "frames", prefix + "L", clamp_video(unreg[0]));
      write_frame_sequence(out / "frames", prefix + "S", signed_visualization(unreg[1]));
      write_frame_sequence(out / "frames", prefix + "E", signed_visualization(unreg[2]));
      write_frame_sequence(out / "frames", prefix + "LS", clamp_video(unreg[3]));
      write_trace(out / (prefix + "trace.csv"), sol.history);
      return 0;
    });
  }
  if (channels.size() > 1) {
    write_dump_file(out / "dumps" / "LS_frames.dmp", to_dump(luminance(ls_frames)));
    write_dump_file(out / "dumps" / "S_frames.dmp", to_dump(luminance(s_frames)));
  }

  man.canvas_m = reg.m;
  man.canvas_n = reg.n;
  man.frames = reg.frames.p();
  man.resolved["anchor"] = static_cast<double>(reg.anchor);

  if (!cfg.truth_frames.empty() && !cfg.truth_masks.empty()) {
    const MetricsReport rep = t.run("evaluate", [&] {
      const ThresholdPolicy policy =
          cfg.fixed_threshold ? ThresholdPolicy::fixed_at(*cfg.fixed_threshold) : ThresholdPolicy::sweep();
      return evaluate_metrics(luminance(ls_frames), load_video(cfg.truth_frames), luminance(s_frames),
                              load_mask(cfg.truth_masks), policy);
    });
    write_text(out / "metrics.txt", rep.to_key_value());
    write_text(out / "metrics.json", rep.to_json());
  }
  write_text(out / "manifest.json", man.to_json());
  return man;
}

MetricsReport cmd_evaluate(const PipelineConfig& cfg) {
  if (cfg.input.empty()) throw ConfigurationError("evaluate: input (decompose output directory) is required");
  if (cfg.truth_frames.empty() || cfg.truth_masks.empty()) {
    throw ConfigurationError("evaluate: truth frames and truth masks are required");
  }
  check_path(cfg.truth_frames, "truth frames");
  check_path(cfg.truth_masks, "truth masks");
  const fs::path in(cfg.input);
  const fs::path out(cfg.output.empty() ? cfg.input : cfg.output);
  const VideoTensor ls = video_from_dump(read_dump_file(in / "dumps" / "LS_frames.dmp"));
  const VideoTensor s = video_from_dump(read_dump_file(in / "dumps" / "S_frames.dmp"));
  const ThresholdPolicy policy =
      cfg.fixed_threshold ? ThresholdPolicy::fixed_at(*cfg.fixed_threshold) : ThresholdPolicy::sweep();
  const MetricsReport rep = StageTimer::labeled("evaluate", [&] {
    return evaluate_metrics(ls, load_video(cfg.truth_frames), s, load_mask(cfg.truth_masks), policy);
  });
  OutputLock lock(out);
  write_text(out / "metrics.txt", rep.to_key_value());
  write_text(out / "metrics.json", rep.to_json());
  return rep;
}

}  // namespace prpca
