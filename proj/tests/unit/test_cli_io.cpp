#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "prpca/dump_io.hpp"
#include "prpca/error.hpp"
#include "prpca/homography.hpp"
#include "prpca/image_io.hpp"
#include "prpca/pipeline.hpp"
#include "prpca/synthetic.hpp"

using namespace prpca;
using Eigen::Index;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory, removed with the test.
class Scratch {
 public:
  Scratch() {
    static std::atomic<int> counter{0};
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("prpca_" + std::string(info->name()) + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

VideoTensor random_video(Index m, Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd d(m * n, p);
  for (auto& v : d.reshaped()) v = u(rng);
  return VideoTensor(m, n, d);
}

VideoTensor rank_one_video(Index m, Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  Eigen::VectorXd a(m * n), b(p);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = 0.8 + 0.4 * u(rng);
  return VideoTensor(m, n, a * b.transpose());
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f << bytes;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string(PRPCA_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(err)};
}

PipelineConfig base_config(const std::string& input, const fs::path& out) {
  PipelineConfig cfg;
  cfg.input = input;
  cfg.output = out.string();
  return cfg;
}

}  // namespace

TEST(Dump, RoundTrips) {
  auto v = random_video(3, 4, 5, 1);
  std::stringstream ss;
  write_dump(ss, to_dump(v));
  EXPECT_EQ(ss.str().substr(0, 8), "PRPCADMP");
  EXPECT_EQ(video_from_dump(read_dump(ss)), v);

  MaskTensor m(2, 2, Eigen::MatrixXd((Eigen::MatrixXd(4, 2) << 1, 0, 0, 1, 1, 1, 0, 0).finished()));
  std::stringstream ms;
  write_dump(ms, to_dump(m));
  EXPECT_EQ(mask_from_dump(read_dump(ms)), m);

  Eigen::MatrixXd x = random_video(5, 1, 3, 2).matrix();
  x(0, 0) = -1.25e-300;
  std::stringstream xs;
  write_dump(xs, to_dump(x));
  EXPECT_EQ(matrix_from_dump(read_dump(xs)), x);
}

TEST(Dump, HeaderLayout) {
  std::stringstream ss;
  write_dump(ss, NumericDump{{2, 1}, {1.0, -2.0}});
  const std::string b = ss.str();
  ASSERT_EQ(b.size(), 8u + 4 + 4 + 4 + 2 * 8 + 2 * 8);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 1);   // version
  EXPECT_EQ(static_cast<unsigned char>(b[12]), 1);  // float64
  EXPECT_EQ(static_cast<unsigned char>(b[16]), 2);  // ndim
  double first;
  std::memcpy(&first, b.data() + 36, 8);
  EXPECT_EQ(first, 1.0);
}

TEST(Dump, RejectsCorruptFiles) {
  std::stringstream bad("NOTADUMP........");
  EXPECT_THROW(read_dump(bad), IngestionError);
  std::stringstream ss;
  write_dump(ss, NumericDump{{3}, {1, 2, 3}});
  std::stringstream cut(ss.str().substr(0, ss.str().size() - 4));
  EXPECT_THROW(read_dump(cut), IngestionError);
  EXPECT_THROW(read_dump_file("/nonexistent/x.dmp"), IngestionError);
  EXPECT_THROW(video_from_dump(NumericDump{{4, 2}, std::vector<double>(8)}), IngestionError);
}

TEST(ImageIo, PgmEightBitScaling) {
  Scratch s;
  write_bytes(s / "a.pgm", std::string("P5\n2 1\n255\n") + char(255) + char(0));
  auto img = read_image(s / "a.pgm");
  ASSERT_EQ(img.channels.size(), 1u);
  EXPECT_EQ(img.channels[0](0, 0), 1.0);
  EXPECT_EQ(img.channels[0](0, 1), 0.0);
  EXPECT_EQ(img.bit_depth, 8);
}

TEST(ImageIo, SixteenBitPng) {
  Scratch s;
  Eigen::MatrixXd g(2, 3);
  g << 1.0, 0.0, 0.5, 0.25, 1.0, 0.75;
  write_png(s / "a.png", g, 16);
  auto img = read_image(s / "a.png");
  EXPECT_EQ(img.bit_depth, 16);
  EXPECT_EQ(img.channels[0](0, 0), 1.0);
  EXPECT_LE((img.channels[0] - g).cwiseAbs().maxCoeff(), 0.5 / 65535.0 + 1e-15);
  write_pgm(s / "b.pgm", g, 16);
  EXPECT_LE((read_image(s / "b.pgm").channels[0] - g).cwiseAbs().maxCoeff(), 0.5 / 65535.0 + 1e-15);
}

TEST(ImageIo, RgbLuminance) {
  Scratch s;
  std::vector<Eigen::MatrixXd> rgb{Eigen::MatrixXd::Constant(2, 2, 1.0), Eigen::MatrixXd::Zero(2, 2),
                                   Eigen::MatrixXd::Zero(2, 2)};
  write_ppm(s / "f1.ppm", rgb);
  auto frames = load_frames((s / "f1.ppm").string());
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_NEAR(frames[0].pixels(0, 0), 0.299, 1e-12);
  auto channels = load_frame_channels((s / "f1.ppm").string());
  ASSERT_EQ(channels.size(), 3u);
  EXPECT_EQ(channels[0][0].pixels(1, 1), 1.0);
}

TEST(ImageIo, NaturalOrderAndErrors) {
  EXPECT_TRUE(natural_less("frame2.png", "frame10.png"));
  EXPECT_FALSE(natural_less("frame10.png", "frame2.png"));
  Scratch s;
  for (int k : {10, 2, 1}) write_png(s / ("frame" + std::to_string(k) + ".png"), Eigen::MatrixXd::Constant(3, 3, k / 10.0));
  auto files = list_frame_files(s.path().string());
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "frame1.png");
  EXPECT_EQ(files[2].filename(), "frame10.png");
  EXPECT_EQ(list_frame_files((s / "frame1*.png").string()).size(), 2u);

  write_png(s / "frame11.png", Eigen::MatrixXd::Zero(4, 3));
  try {
    load_frames(s.path().string());
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("frame11.png"), std::string::npos);
  }
  EXPECT_THROW(list_frame_files((s / "none*.png").string()), IngestionError);
  write_bytes(s / "junk.png", "not an image");
  EXPECT_THROW(read_image(s / "junk.png"), IngestionError);
}

TEST(ImageIo, SignedVisualization) {
  Eigen::MatrixXd d(3, 1);
  d << -2.0, 0.0, 1.0;
  auto v = signed_visualization(VideoTensor(3, 1, d));
  EXPECT_EQ(v.matrix()(0, 0), 0.0);
  EXPECT_EQ(v.matrix()(1, 0), 0.5);
  EXPECT_EQ(v.matrix()(2, 0), 0.75);
}

TEST(Config, JsonRoundTripAndOverride) {
  Scratch s;
  PipelineConfig a = base_config(s.path().string(), s / "out");
  a.variant = Variant::Tvrpca;
  a.lambda1 = 0.2;
  a.tv = TvMode::TwoD;
  a.corruption = CorruptionSpec{CorruptionKind::Gaussian, 30.0, 0};
  PipelineConfig b;
  b.apply_json(a.to_json());
  EXPECT_EQ(b.to_json(), a.to_json());

  PipelineConfig c = a;
  c.apply_json(R"({"iters": 7, "tau": 0.25})");
  EXPECT_EQ(c.iters, 7);
  EXPECT_EQ(c.tau, 0.25);
  EXPECT_EQ(c.lambda1, a.lambda1);
  EXPECT_THROW(c.apply_json("{bad"), Error);
}

TEST(Config, Validation) {
  Scratch s;
  auto cfg = base_config((s / "missing").string(), s / "out");
  EXPECT_THROW(cfg.validate(), IngestionError);
  cfg.input = s.path().string();
  EXPECT_THROW(cfg.validate(), IngestionError);  // no frames yet
  write_png(s / "f1.png", Eigen::MatrixXd::Zero(3, 3));
  EXPECT_NO_THROW(cfg.validate());
  cfg.tau = 0.7;
  EXPECT_THROW(cfg.validate(), ConfigurationError);
  cfg.tau = 0.3;
  cfg.registration = RegistrationSource::File;
  cfg.homography_file = (s / "h.txt").string();
  EXPECT_THROW(cfg.validate(), IngestionError);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.command = "decompose";
  m.config_json = "{}";
  m.seed = 42;
  m.canvas_m = 64;
  m.canvas_n = 121;
  m.frames = 20;
  m.iterations = 150;
  m.resolved["lambda_s"] = 1e-4;
  m.timings_ms["solve"] = 12.5;
  auto b = RunManifest::from_json(m.to_json());
  EXPECT_EQ(b.to_json(), m.to_json());
  EXPECT_EQ(b.iterations, 150);
}

TEST(CmdRegister, StaticVideo) {
  Scratch s;
  auto v = random_video(12, 10, 3, 3);
  const Eigen::MatrixXd f = v.frame(0);
  fs::create_directories(s / "in");
  for (int k = 1; k <= 3; ++k) write_png(s / ("in/f" + std::to_string(k) + ".png"), f, 16);
  auto cfg = base_config((s / "in").string(), s / "out");
  cfg.registration = RegistrationSource::Static;
  auto man = cmd_register(cfg);
  EXPECT_EQ(man.canvas_m, 12);
  EXPECT_EQ(man.canvas_n, 10);
  std::ifstream hs(s / "out/homographies.txt");
  auto hom = read_homographies(hs);
  ASSERT_EQ(hom.size(), 3u);
  for (const auto& h : hom) EXPECT_TRUE(h.is_identity(0.0));
  auto pano = read_image(s / "out/panorama.png").channels[0];
  EXPECT_LE((pano - f).cwiseAbs().maxCoeff(), 1.0 / 65535.0);
  EXPECT_TRUE(fs::exists(s / "out/manifest.json"));
}

TEST(CmdCorrupt, ZeroLevelDeterminismAndFraction) {
  Scratch s;
  auto v = random_video(50, 50, 40, 4);  // 1e5 pixels
  write_dump_file(s / "v.dmp", to_dump(v));
  auto cfg = base_config((s / "v.dmp").string(), s / "zero");
  cfg.corruption = CorruptionSpec{CorruptionKind::SaltPepper, 0.0, 0};
  cmd_corrupt(cfg);
  EXPECT_EQ(video_from_dump(read_dump_file(s / "zero/corrupted.dmp")), v);

  cfg.corruption->level = 0.2;
  cfg.seed = 9;
  cfg.output = (s / "a").string();
  auto man = cmd_corrupt(cfg);
  cfg.output = (s / "b").string();
  cmd_corrupt(cfg);
  EXPECT_EQ(read_text(s / "a/corrupted.dmp"), read_text(s / "b/corrupted.dmp"));
  EXPECT_EQ(read_text(s / "a/frames/corrupted_0001.png"), read_text(s / "b/frames/corrupted_0001.png"));
  auto mask = mask_from_dump(read_dump_file(s / "a/mask.dmp"));
  const double hit = 1.0 - static_cast<double>(mask.count_observed()) / 1e5;
  EXPECT_NEAR(hit, 0.2, 0.01);
  EXPECT_DOUBLE_EQ(man.resolved.at("affected_fraction"), hit);
  EXPECT_EQ(RunManifest::from_json(read_text(s / "a/manifest.json")).seed, 9u);
}

TEST(CmdDecompose, StaticMatchesDirectSolver) {
  Scratch s;
  auto v = rank_one_video(8, 9, 6, 5);
  Eigen::MatrixXd d = v.matrix();
  d(10, 2) = 1.0;
  d(40, 4) = 0.0;
  VideoTensor y(8, 9, d);
  write_dump_file(s / "v.dmp", to_dump(y));
  auto cfg = base_config((s / "v.dmp").string(), s / "out");
  cfg.registration = RegistrationSource::Static;
  auto man = cmd_decompose(cfg);
  EXPECT_EQ(man.iterations, 150);

  auto direct = prpca_run(y, MaskTensor::ones(8, 9, 6), SolverConfig::defaults_for(8, 9, TvMode::ThreeD));
  auto L = video_from_dump(read_dump_file(s / "out/dumps/L.dmp")).matrix();
  auto S = video_from_dump(read_dump_file(s / "out/dumps/S.dmp")).matrix();
  auto E = video_from_dump(read_dump_file(s / "out/dumps/E.dmp")).matrix();
  EXPECT_LE((L - direct.L).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((S - direct.S).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((E - direct.E).cwiseAbs().maxCoeff(), 1e-9);
  for (const char* f : {"frames/L_0001.png", "frames/LS_0006.png", "panorama/S_0001.png", "trace.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(s / "out" / f)) << f;

  // An identity homography file gives the static result.
  {
    std::ofstream hs(s / "h.txt");
    write_homographies(hs, std::vector<Homography>(6));
  }
  cfg.output = (s / "file").string();
  cfg.registration = RegistrationSource::File;
  cfg.homography_file = (s / "h.txt").string();
  cmd_decompose(cfg);
  EXPECT_EQ(read_text(s / "file/dumps/L.dmp"), read_text(s / "out/dumps/L.dmp"));
  EXPECT_EQ(read_text(s / "file/dumps/S.dmp"), read_text(s / "out/dumps/S.dmp"));
}

TEST(CmdDecompose, MissingInputFailsEarly) {
  Scratch s;
  auto cfg = base_config((s / "nothing").string(), s / "out");
  EXPECT_THROW(cmd_decompose(cfg), IngestionError);
  EXPECT_FALSE(fs::exists(s / "out"));
}

TEST(CmdEvaluate, PerfectEstimateAndInProcessEquivalence) {
  Scratch s;
  auto truth = random_video(6, 6, 3, 6);
  Eigen::MatrixXd labels = (random_video(6, 6, 3, 7).matrix().array() > 0.7).cast<double>();
  write_dump_file(s / "truth.dmp", to_dump(truth));
  write_dump_file(s / "labels.dmp", to_dump(MaskTensor(6, 6, labels)));
  fs::create_directories(s / "run/dumps");
  write_dump_file(s / "run/dumps/LS_frames.dmp", to_dump(truth));
  write_dump_file(s / "run/dumps/S_frames.dmp", to_dump(VideoTensor(6, 6, labels)));

  auto cfg = base_config((s / "run").string(), s / "run");
  cfg.truth_frames = (s / "truth.dmp").string();
  cfg.truth_masks = (s / "labels.dmp").string();
  auto rep = cmd_evaluate(cfg);
  EXPECT_EQ(*rep.f_psnr, kPsnrCap);
  EXPECT_EQ(*rep.b_psnr, kPsnrCap);
  EXPECT_EQ(*rep.f_measure, 1.0);
  EXPECT_EQ(MetricsReport::from_json(read_text(s / "run/metrics.json")), rep);

  auto noisy = random_video(6, 6, 3, 8);
  auto s_est = random_video(6, 6, 3, 9);
  write_dump_file(s / "run/dumps/LS_frames.dmp", to_dump(noisy));
  write_dump_file(s / "run/dumps/S_frames.dmp", to_dump(s_est));
  auto cli = cmd_evaluate(cfg);
  auto direct = evaluate_metrics(noisy, truth, s_est, MaskTensor(6, 6, labels));
  EXPECT_EQ(cli, direct);
}

TEST(Cli, RegisterSyntheticPan) {
  Scratch s;
  auto scene = make_synthetic_scene(SyntheticConfig{});
  fs::create_directories(s / "in");
  for (std::size_t k = 0; k < scene.frames.size(); ++k)
    write_png(s / ("in/frame" + std::to_string(k + 1) + ".png"), scene.frames[k].pixels, 16);
  auto r = run_cli("register --input " + (s / "in").string() + " --output " + (s / "out").string(), s.path());
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream hs(s / "out/homographies.txt");
  auto hom = read_homographies(hs);
  ASSERT_EQ(hom.size(), scene.frames.size());
  for (std::size_t k = 0; k < hom.size(); ++k)
    for (auto p : {Eigen::Vector2d(0, 0), Eigen::Vector2d(63, 0), Eigen::Vector2d(63, 63), Eigen::Vector2d(0, 63)})
      EXPECT_LE((hom[k].apply(p) - scene.true_anchored[k].apply(p)).norm(), 0.5) << "frame " << k;
}

TEST(Cli, FlatFramesNamePair) {
  Scratch s;
  fs::create_directories(s / "in");
  for (int k = 1; k <= 2; ++k) write_png(s / ("in/f" + std::to_string(k) + ".png"), Eigen::MatrixXd::Constant(20, 20, 0.4));
  auto r = run_cli("register --input " + (s / "in").string() + " --output " + (s / "out").string(), s.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("frame pair (1,2)"), std::string::npos) << r.err;
}

TEST(Cli, ErrorsExitNonzero) {
  Scratch s;
  auto missing = run_cli("decompose --input " + (s / "none").string() + " --output " + (s / "out").string(), s.path());
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("none"), std::string::npos) << missing.err;
  auto bad_tv = run_cli("decompose --input x --output y --tv 4d", s.path());
  EXPECT_NE(bad_tv.code, 0);
}

TEST(Cli, DecomposeAndEvaluate) {
  Scratch s;
  SyntheticConfig c;
  c.height = 32;
  c.width = 32;
  c.frames = 6;
  c.pan_x = 0;
  c.blob_velocity = {2.0, 2.0};
  auto scene = make_synthetic_scene(c);
  write_dump_file(s / "clean.dmp", to_dump(scene.clean));
  write_dump_file(s / "labels.dmp", to_dump(scene.fg_mask));
  auto r = run_cli("decompose --input " + (s / "clean.dmp").string() + " --output " + (s / "out").string() +
                       " --registration static --iters 20 --truth " + (s / "clean.dmp").string() +
                       " --truth-masks " + (s / "labels.dmp").string(),
                   s.path());
  ASSERT_EQ(r.code, 0) << r.err;
  auto man = RunManifest::from_json(read_text(s / "out/manifest.json"));
  EXPECT_EQ(man.iterations, 20);
  EXPECT_EQ(man.frames, 6);
  auto rep = MetricsReport::from_json(read_text(s / "out/metrics.json"));
  ASSERT_TRUE(rep.f_measure.has_value());

  auto ev = run_cli("evaluate --input " + (s / "out").string() + " --output " + (s / "eval").string() +
                        " --truth " + (s / "clean.dmp").string() + " --truth-masks " +
                        (s / "labels.dmp").string(),
                    s.path());
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(MetricsReport::from_json(read_text(s / "eval/metrics.json")), rep);
}
