// Command-line entry points: fixture generation, the two training phases,
// inference, and directory evaluation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "texc/fixtures.hpp"
#include "texc/metrics.hpp"
#include "texc/train.hpp"

namespace fs = std::filesystem;

namespace {

texc::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  texc::Config cfg = path.empty() ? texc::Config() : texc::Config::load(path);
  for (const auto& kv : overrides) cfg.apply_override(kv);
  return cfg;
}

int run_prepare_data(const std::string& spec_path, const std::string& out_dir) {
  texc::Config spec = texc::Config::load(spec_path);
  texc::FixtureSpec fx;
  fx.count = static_cast<int>(spec.get_int("count", fx.count));
  fx.resolution = static_cast<int>(spec.get_int("resolution", fx.resolution));
  fx.densepose_count = static_cast<int>(spec.get_int("densepose_count", fx.densepose_count));
  fx.seed = static_cast<std::uint64_t>(spec.get_int("seed", 1));
  fx.p_halfplane = static_cast<float>(spec.get_double("p_halfplane", fx.p_halfplane));
  fx.p_hidden = static_cast<float>(spec.get_double("p_hidden", fx.p_hidden));
  fx.mirror_symmetric = spec.get_bool("mirror_symmetric", fx.mirror_symmetric);
  texc::generate_fixtures(fx, out_dir);
  std::cout << "wrote " << fx.count << " fixtures to " << out_dir << "\n";
  return 0;
}

int run_train_sampler(const texc::Config& cfg) {
  texc::TrainConfig tc = texc::TrainConfig::from_config(cfg);
  texc::FixtureSet dataset = texc::FixtureSet::load(tc.fixtures);
  texc::TrainResult res = texc::train_sampler(tc, dataset);
  std::cout << "sampler checkpoint: " << res.checkpoint_path << "\n";
  return 0;
}

int run_train_refiner(const texc::Config& cfg, const std::string& sampler_ckpt) {
  texc::TrainConfig tc = texc::TrainConfig::from_config(cfg);
  texc::FixtureSet dataset = texc::FixtureSet::load(tc.fixtures);
  texc::TrainResult res = texc::train_refiner(tc, dataset, sampler_ckpt);
  std::cout << "refiner checkpoint: " << res.checkpoint_path << "\n";
  return 0;
}

struct InferCliArgs {
  std::string image, iuv, partial, vis, normal, out_dir;
  std::string sampler_ckpt, refiner_ckpt;
  bool no_refiner = false;
  bool blend_one = false;
  bool save_intermediates = false;
};

int run_infer(const texc::Config& cfg, const InferCliArgs& args) {
  texc::TrainConfig tc = texc::TrainConfig::from_config(cfg);
  texc::FixtureSet dataset = texc::FixtureSet::load(tc.fixtures);

  texc::InferInputs in;
  if (!args.image.empty()) in.image = texc::read_texture(args.image);
  if (!args.iuv.empty()) in.iuv = texc::read_iuv(args.iuv);
  if (!args.partial.empty()) in.partial = texc::read_texture(args.partial);
  if (!args.vis.empty()) in.vis = texc::read_mask(args.vis);
  in.normal = texc::read_texture(args.normal);

  auto sampler = texc::load_sampler(args.sampler_ckpt, tc.resolution, tc.sampler_width);
  std::optional<texc::nn::RefinerNet> refiner;
  if (!args.refiner_ckpt.empty() && !args.no_refiner)
    refiner.emplace(texc::load_refiner(args.refiner_ckpt, tc.resolution, tc.refiner_width));

  texc::InferOptions opts;
  opts.use_refiner = refiner.has_value() && !args.no_refiner;
  if (args.blend_one) opts.blend_override = 1.0f;

  texc::InferResult res =
      texc::infer(in, dataset.atlas, sampler, refiner ? &*refiner : nullptr, opts);

  fs::create_directories(args.out_dir);
  texc::write_texture((fs::path(args.out_dir) / "t_final.ppm").string(), res.t_final);
  if (args.save_intermediates) {
    texc::write_texture((fs::path(args.out_dir) / "t_input.ppm").string(), res.t_input);
    texc::write_texture((fs::path(args.out_dir) / "t_sample.ppm").string(), res.t_sample);
    texc::write_texture((fs::path(args.out_dir) / "t_refine.ppm").string(), res.t_refine);
    texc::write_mask((fs::path(args.out_dir) / "m_blend.pgm").string(), res.m_blend);
    texc::write_mask((fs::path(args.out_dir) / "m_occ.pgm").string(), res.m_occ);
  }
  std::cout << "wrote " << (fs::path(args.out_dir) / "t_final.ppm").string() << "\n";
  return 0;
}

int run_evaluate(const std::string& pred, const std::string& gt, bool strict,
                 const std::string& report_path) {
  texc::nn::PerceptualFeatureExtractor extractor;
  texc::MetricReport report = texc::evaluate(pred, gt, extractor);
  std::cout << report.summary();
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << report.table();
    std::cout << "report: " << report_path << "\n";
  } else {
    std::cout << report.table();
  }
  if (strict && !report.unmatched.empty()) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UV texture completion pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  auto* prep = app.add_subcommand("prepare-data", "generate synthetic fixtures");
  std::string spec_path, prep_out;
  prep->add_option("--spec", spec_path, "fixture spec file")->required();
  prep->add_option("--out", prep_out, "output directory")->required();

  auto* ts = app.add_subcommand("train-sampler", "train the grid-predicting sampler");
  ts->add_option("--config", config_path, "flat key=value config file");
  ts->add_option("--set", overrides, "config override key=value");

  auto* tr = app.add_subcommand("train-refiner", "train the refiner against a frozen sampler");
  std::string sampler_ckpt;
  tr->add_option("--config", config_path, "flat key=value config file");
  tr->add_option("--set", overrides, "config override key=value");
  tr->add_option("--sampler-ckpt", sampler_ckpt, "frozen sampler checkpoint")->required();

  auto* inf = app.add_subcommand("infer", "complete a texture from an image or partial texture");
  InferCliArgs ia;
  inf->add_option("--config", config_path, "flat key=value config file");
  inf->add_option("--set", overrides, "config override key=value");
  inf->add_option("--image", ia.image, "source image (ppm)");
  inf->add_option("--iuv", ia.iuv, "IUV map (16-bit ppm)");
  inf->add_option("--partial", ia.partial, "partial texture (ppm)");
  inf->add_option("--vis", ia.vis, "visibility mask (pgm)");
  inf->add_option("--normal", ia.normal, "normal map (ppm)")->required();
  inf->add_option("--sampler-ckpt", ia.sampler_ckpt, "sampler checkpoint")->required();
  inf->add_option("--refiner-ckpt", ia.refiner_ckpt, "refiner checkpoint");
  inf->add_option("--out", ia.out_dir, "output directory")->required();
  inf->add_flag("--no-refiner", ia.no_refiner, "sampler-only output");
  inf->add_flag("--blend-one", ia.blend_one, "force M_blend to 1 (T_final == T_sample)");
  inf->add_flag("--save-intermediates", ia.save_intermediates, "write all intermediates");

  auto* ev = app.add_subcommand("evaluate", "texture-space metrics over two directories");
  std::string pred_dir, gt_dir, report_path;
  bool strict = false;
  ev->add_option("--pred", pred_dir, "predictions directory")->required();
  ev->add_option("--gt", gt_dir, "ground-truth directory")->required();
  ev->add_option("--report", report_path, "write the per-sample table here");
  ev->add_flag("--strict", strict, "nonzero exit on unmatched files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prep->parsed()) return run_prepare_data(spec_path, prep_out);
    texc::Config cfg = load_config(config_path, overrides);
    if (ts->parsed()) return run_train_sampler(cfg);
    if (tr->parsed()) return run_train_refiner(cfg, sampler_ckpt);
    if (inf->parsed()) return run_infer(cfg, ia);
    if (ev->parsed()) return run_evaluate(pred_dir, gt_dir, strict, report_path);
  } catch (const texc::TrainingAbort& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
