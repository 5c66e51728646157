#pragma once

// Texture-space quality metrics and the directory evaluation protocol.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "texc/image_io.hpp"
#include "texc/losses.hpp"
#include "texc/nets.hpp"
#include "texc/uv_types.hpp"

namespace texc {

constexpr double kPsnrCap = 99.0;  // reported for zero MSE

inline double mse(const TextureMap& a, const TextureMap& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

/// 10*log10(1/MSE) on [0,1] data, capped at 99 dB.
inline double psnr(const TextureMap& a, const TextureMap& b) {
  double m = mse(a, b);
  if (m <= 0.0) return kPsnrCap;
  return std::min(10.0 * std::log10(1.0 / m), kPsnrCap);
}

namespace detail {

inline std::vector<double> luminance(const TextureMap& t) {
  std::vector<double> y(static_cast<std::size_t>(t.height) * t.width);
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c)
      y[static_cast<std::size_t>(r) * t.width + c] =
          0.299 * t.at(r, c, 0) + 0.587 * t.at(r, c, 1) + 0.114 * t.at(r, c, 2);
  return y;
}

inline std::vector<double> gaussian_window11() {
  std::vector<double> w(11);
  double sigma = 1.5, sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    double d = i - 5;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// separable valid-mode filter over a h x w field
inline std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                        const std::vector<double>& k) {
  int n = static_cast<int>(k.size());
  int wh = h, ww = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(wh) * ww, 0.0);
  for (int y = 0; y < wh; ++y)
    for (int x = 0; x < ww; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ww + x] = s;
    }
  int oh = h - n + 1;
  std::vector<double> out(static_cast<std::size_t>(oh) * ww, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ww; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(y + i) * ww + x];
      out[static_cast<std::size_t>(y) * ww + x] = s;
    }
  return out;
}

}  // namespace detail

/// Mean local SSIM over the luminance channel (Rec. 601 weights), 11-tap
/// Gaussian window (sigma 1.5), C1=(0.01)^2, C2=(0.03)^2, valid windows only.
inline double ssim(const TextureMap& ta, const TextureMap& tb) {
  if (!ta.same_shape(tb)) throw std::invalid_argument("ssim: shape mismatch");
  if (ta.height < 11 || ta.width < 11) throw std::invalid_argument("ssim: inputs smaller than window");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  auto a = detail::luminance(ta);
  auto b = detail::luminance(tb);
  int h = ta.height, w = ta.width;
  auto win = detail::gaussian_window11();

  std::vector<double> a2(a.size()), b2(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a2[i] = a[i] * a[i];
    b2[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  auto mu_a = detail::filter_valid(a, h, w, win);
  auto mu_b = detail::filter_valid(b, h, w, win);
  auto m_a2 = detail::filter_valid(a2, h, w, win);
  auto m_b2 = detail::filter_valid(b2, h, w, win);
  auto m_ab = detail::filter_valid(ab, h, w, win);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    double va = m_a2[i] - mu_a[i] * mu_a[i];
    double vb = m_b2[i] - mu_b[i] * mu_b[i];
    double cov = m_ab[i] - mu_a[i] * mu_b[i];
    double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

/// Feature-space distance through the pluggable extractor; same contract as
/// the sampler's training perceptual term, reported separately so a
/// pretrained backbone can be slotted in.
inline double perceptual_metric(const TextureMap& a, const TextureMap& b,
                                const nn::PerceptualFeatureExtractor& extractor) {
  nn::Var va = nn::to_var(a);
  nn::Var vb = nn::to_var(b);
  return static_cast<double>(nn::perceptual_distance(va, vb, extractor).item());
}

struct SampleMetrics {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double perceptual = 0.0;
};

struct MetricReport {
  std::vector<SampleMetrics> samples;
  std::vector<std::string> unmatched;  // files present on one side only
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_perceptual = 0.0;
  std::string config_echo;

  void finalize() {
    double sp = 0.0, ss = 0.0, sl = 0.0;
    for (const auto& s : samples) {
      sp += s.psnr;
      ss += s.ssim;
      sl += s.perceptual;
    }
    double n = samples.empty() ? 1.0 : static_cast<double>(samples.size());
    mean_psnr = sp / n;
    mean_ssim = ss / n;
    mean_perceptual = sl / n;
  }

  /// Tab-separated table, one row per sample plus a mean row.
  std::string table() const {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "id\tpsnr_db\tssim\tperceptual\n";
    for (const auto& s : samples)
      out << s.id << "\t" << s.psnr << "\t" << s.ssim << "\t" << s.perceptual << "\n";
    out << "mean\t" << mean_psnr << "\t" << mean_ssim << "\t" << mean_perceptual << "\n";
    return out.str();
  }

  std::string summary() const {
    std::ostringstream out;
    out << "samples: " << samples.size() << "\n"
        << "mean psnr (dB): " << mean_psnr << "\n"
        << "mean ssim: " << mean_ssim << "\n"
        << "mean perceptual: " << mean_perceptual << "\n";
    for (const auto& u : unmatched) out << "unmatched: " << u << "\n";
    return out.str();
  }
};

/// Evaluates matching *.ppm files of two directories. Unmatched files are
/// listed and skipped; callers running in strict mode turn a non-empty
/// unmatched list into a nonzero exit code.
inline MetricReport evaluate(const std::string& pred_dir, const std::string& gt_dir,
                             const nn::PerceptualFeatureExtractor& extractor) {
  namespace fs = std::filesystem;
  auto list = [](const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".ppm")
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
  };
  auto preds = list(pred_dir);
  auto gts = list(gt_dir);

  MetricReport report;
  std::size_t i = 0, j = 0;
  while (i < preds.size() || j < gts.size()) {
    if (i < preds.size() && j < gts.size() && preds[i] == gts[j]) {
      TextureMap a = read_texture((fs::path(pred_dir) / preds[i]).string());
      TextureMap b = read_texture((fs::path(gt_dir) / gts[j]).string());
      SampleMetrics m;
      m.id = preds[i];
      m.psnr = psnr(a, b);
      m.ssim = ssim(a, b);
      m.perceptual = perceptual_metric(a, b, extractor);
      report.samples.push_back(m);
      ++i;
      ++j;
    } else if (j >= gts.size() || (i < preds.size() && preds[i] < gts[j])) {
      report.unmatched.push_back("pred-only: " + preds[i++]);
    } else {
      report.unmatched.push_back("gt-only: " + gts[j++]);
    }
  }
  report.finalize();
  return report;
}

}  // namespace texc
