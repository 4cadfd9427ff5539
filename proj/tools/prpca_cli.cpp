#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "prpca/error.hpp"
#include "prpca/pipeline.hpp"

namespace {

struct Flags {
  prpca::PipelineConfig cfg;
  std::string config_file;
  std::string variant = "prpca-optshrink";
  std::string tv;
  std::string registration = "auto";
  std::string color = "luminance";
  std::string kind;
  double level = 0.0;
  std::optional<double> lambda_s, lambda_e, lambda_l, lambda1, lambda2, lambda3, mu, threshold;
};

void shared(CLI::App* cmd, Flags& f, bool input_required = true) {
  auto* in = cmd->add_option("--input,-i", f.cfg.input, "frame directory, pattern, or .dmp video");
  if (input_required) in->required();
  cmd->add_option("--output,-o", f.cfg.output, "output directory")->required();
  cmd->add_option("--seed", f.cfg.seed, "random seed");
  cmd->add_option("--config", f.config_file, "JSON config; its fields override flags");
  cmd->add_option("--color", f.color, "luminance | per-channel")
      ->check(CLI::IsMember({"luminance", "per-channel"}));
}

prpca::PipelineConfig resolve(Flags& f) {
  auto& c = f.cfg;
  c.variant = prpca::parse_variant(f.variant);
  if (!f.tv.empty()) c.tv = prpca::parse_tv_mode(f.tv);
  if (f.registration == "auto") {
    c.registration = prpca::RegistrationSource::Internal;
  } else if (f.registration == "static") {
    c.registration = prpca::RegistrationSource::Static;
  } else if (f.registration.rfind("file=", 0) == 0) {
    c.registration = prpca::RegistrationSource::File;
    c.homography_file = f.registration.substr(5);
  } else {
    throw prpca::ConfigurationError("--registration must be auto, static or file=PATH");
  }
  c.color = f.color == "per-channel" ? prpca::ColorMode::PerChannel : prpca::ColorMode::Luminance;
  c.lambda_s = f.lambda_s;
  c.lambda_e = f.lambda_e;
  c.lambda_l = f.lambda_l;
  c.lambda1 = f.lambda1;
  c.lambda2 = f.lambda2;
  c.lambda3 = f.lambda3;
  c.mu = f.mu;
  c.fixed_threshold = f.threshold;
  if (!f.kind.empty()) c.corruption = prpca::CorruptionSpec{prpca::parse_corruption_kind(f.kind), f.level, c.seed};
  if (!f.config_file.empty()) c.apply_json_file(f.config_file);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust foreground/background separation for corrupted, moving-camera video"};
  app.require_subcommand(1);
  Flags f;

  auto* reg = app.add_subcommand("register", "register frames onto a panoramic canvas");
  shared(reg, f);
  reg->add_option("--registration", f.registration, "auto | static | file=PATH");
  reg->add_option("--max-features", f.cfg.registration_options.max_features);

  auto* cor = app.add_subcommand("corrupt", "apply seeded corruption to a frame sequence");
  shared(cor, f);
  cor->add_option("--kind", f.kind, "salt_pepper | gaussian | poisson | missing")->required();
  cor->add_option("--level", f.level, "probability, or target SNR in dB")->required();

  auto* dec = app.add_subcommand("decompose", "register and separate L, S and E");
  shared(dec, f);
  dec->add_option("--variant", f.variant)
      ->check(CLI::IsMember({"prpca-optshrink", "prpca-svt", "rpca", "tvrpca"}));
  dec->add_option("--rank", f.cfg.rank);
  dec->add_option("--lambda-s", f.lambda_s);
  dec->add_option("--lambda-e", f.lambda_e);
  dec->add_option("--lambda-l", f.lambda_l);
  dec->add_option("--lambda1", f.lambda1, "tvrpca: l1 weight on G");
  dec->add_option("--lambda2", f.lambda2, "tvrpca: l1 weight on E");
  dec->add_option("--lambda3", f.lambda3, "tvrpca: TV weight on S");
  dec->add_option("--mu", f.mu, "tvrpca: augmented Lagrangian parameter");
  dec->add_option("--tau", f.cfg.tau);
  dec->add_option("--rho", f.cfg.rho);
  dec->add_option("--inner-iters", f.cfg.inner_iters);
  dec->add_option("--iters", f.cfg.iters);
  dec->add_option("--tv", f.tv)->check(CLI::IsMember({"2d", "3d"}));
  dec->add_option("--registration", f.registration, "auto | static | file=PATH");
  dec->add_option("--mask", f.cfg.input_mask, "observed-pixel masks for the input frames");
  dec->add_option("--truth", f.cfg.truth_frames, "clean frames for metrics");
  dec->add_option("--truth-masks", f.cfg.truth_masks, "foreground labels for metrics");
  dec->add_option("--threshold", f.threshold, "fixed F-measure threshold (default: sweep)");

  auto* ev = app.add_subcommand("evaluate", "score a decompose output against ground truth");
  ev->add_option("--input,-i", f.cfg.input, "decompose output directory")->required();
  ev->add_option("--output,-o", f.cfg.output, "report directory (default: input)");
  ev->add_option("--config", f.config_file);
  ev->add_option("--truth", f.cfg.truth_frames)->required();
  ev->add_option("--truth-masks", f.cfg.truth_masks)->required();
  ev->add_option("--threshold", f.threshold);

  CLI11_PARSE(app, argc, argv);

  try {
    const prpca::PipelineConfig cfg = resolve(f);
    if (reg->parsed()) {
      const auto man = prpca::cmd_register(cfg);
      std::cout << "registered " << man.frames << " frames onto a " << man.canvas_m << "x"
                << man.canvas_n << " canvas\n";
    } else if (cor->parsed()) {
      const auto man = prpca::cmd_corrupt(cfg);
      std::cout << "corrupted " << man.frames << " frames, affected fraction "
                << man.resolved.at("affected_fraction") << "\n";
    } else if (dec->parsed()) {
      const auto man = prpca::cmd_decompose(cfg);
      std::cout << "decomposed " << man.frames << " frames on a " << man.canvas_m << "x"
                << man.canvas_n << " canvas, " << man.iterations << " iterations\n";
    } else if (ev->parsed()) {
      std::cout << prpca::cmd_evaluate(cfg).to_key_value();
    }
  } catch (const prpca::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
