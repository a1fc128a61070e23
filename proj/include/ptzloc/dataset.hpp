#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <json.hpp>

#include "ptzloc/detect.hpp"
#include "ptzloc/geometry.hpp"
#include "ptzloc/math.hpp"

namespace ptzloc {

struct NoBackgrounds : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackgroundUnreadable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rendering and augmentation knobs that are not part of the per-sample draw.
struct RenderOptions {
  int canvas_px = 299;
  int stroke_px = 3;          // LED strip width
  double blur_sigma_px = 1.0; // softens the stroke edge like LED bloom
  int max_speckle = 300;      // random green pixels per image
  int max_cutouts = 4;        // NoisyCutout-style occlusion rectangles
  int cutout_min_px = 10;
  int cutout_max_px = 80;
  double brightness_min = 0.4;
  double brightness_max = 1.3;
};

/// One fully-specified synthetic sample. All randomness is decided here so
/// rendering is a pure function of the spec.
struct SampleSpec {
  bool has_marker = false;
  std::string background_path;
  std::array<int, 3> green_rgb{0, 200, 0};  // stored as (R, G, B)
  EllipseParams ellipse;                    // pixel coordinates on the canvas
  double arc_start_rad = 0.0;
  double arc_end_rad = kPi;
  double brightness_factor = 1.0;
  std::uint64_t distractor_seed = 0;
};

struct DatasetManifest {
  int total = 9000;
  int positives = 4500;
  std::string image_dir = "images";
  std::string label_file = "labels.jsonl";
  std::uint64_t seed = 0;
};

/// Label record as written to labels.jsonl: u, v, a, b normalised to [0, 1]
/// by the canvas size, phi to [-1, 1] by pi. Arc angles are kept in radians
/// for auditability.
struct DatasetLabel {
  std::string file;
  NormalizedLabel label;
  double arc_start = 0.0;
  double arc_end = 0.0;
};

inline std::vector<std::string> list_backgrounds(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file()) paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw NoBackgrounds("no background images in '" + dir + "'");
  return paths;
}

/// Draws one sample. Field draws happen in a fixed order so a given rng state
/// always yields the same spec. The caller decides has_marker so the manifest
/// ratio can be honoured exactly.
inline SampleSpec sample_spec(std::mt19937_64& rng, const std::vector<std::string>& backgrounds,
                              bool has_marker, const RenderOptions& opts = {}) {
  if (backgrounds.empty()) throw NoBackgrounds("background list is empty");
  SampleSpec spec;
  spec.has_marker = has_marker;
  spec.background_path = backgrounds[uniform_int(rng, 0, static_cast<int>(backgrounds.size()) - 1)];

  const int g = uniform_int(rng, 150, 255);
  spec.green_rgb = {uniform_int(rng, 0, g - 15), g, uniform_int(rng, 0, g - 15)};

  const int a = uniform_int(rng, 20, 140);
  const int b = uniform_int(rng, 0, a);
  const double phi = uniform(rng, -kPi, kPi);

  // Keep the whole ellipse (plus stroke) inside the canvas.
  const double ext_u = std::sqrt(a * a * std::cos(phi) * std::cos(phi) +
                                 b * b * std::sin(phi) * std::sin(phi));
  const double ext_v = std::sqrt(a * a * std::sin(phi) * std::sin(phi) +
                                 b * b * std::cos(phi) * std::cos(phi));
  const double margin = 0.5 * opts.stroke_px + 2.0 * opts.blur_sigma_px + 1.0;
  spec.ellipse.a = a;
  spec.ellipse.b = b;
  spec.ellipse.phi = phi;
  spec.ellipse.u = uniform(rng, ext_u + margin, opts.canvas_px - 1 - ext_u - margin);
  spec.ellipse.v = uniform(rng, ext_v + margin, opts.canvas_px - 1 - ext_v - margin);

  spec.arc_start_rad = uniform(rng, -0.5 * kPi, 0.0);
  spec.arc_end_rad = uniform(rng, kPi, 1.5 * kPi);
  spec.brightness_factor = uniform(rng, opts.brightness_min, opts.brightness_max);
  spec.distractor_seed = rng();
  return spec;
}

/// Binary mask (CV_8U, 0/255) of the stroked elliptic arc. Arc angles are
/// parametric angles of the ellipse before rotation by phi.
inline cv::Mat render_arc_mask(const EllipseParams& ellipse, double arc_start_rad,
                               double arc_end_rad, int stroke_px, int canvas_px) {
  cv::Mat mask = cv::Mat::zeros(canvas_px, canvas_px, CV_8UC1);
  cv::ellipse(mask, cv::Point2d(ellipse.u, ellipse.v),
              cv::Size2d(ellipse.a, ellipse.b), rad2deg(ellipse.phi),
              rad2deg(arc_start_rad), rad2deg(arc_end_rad), cv::Scalar(255),
              std::max(stroke_px, 1), cv::LINE_8);
  return mask;
}

namespace detail {

inline cv::Mat fit_to_canvas(const cv::Mat& src, int n) {
  const double s = static_cast<double>(n) / std::min(src.cols, src.rows);
  cv::Mat scaled;
  cv::resize(src, scaled, cv::Size(), s, s,
             s < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  const int x0 = (scaled.cols - n) / 2;
  const int y0 = (scaled.rows - n) / 2;
  return scaled(cv::Rect(x0, y0, n, n)).clone();
}

class BackgroundCache {
 public:
  explicit BackgroundCache(int canvas_px) : canvas_px_(canvas_px) {}

  const cv::Mat& get(const std::string& path) {
    auto it = cache_.find(path);
    if (it != cache_.end()) return it->second;
    cv::Mat raw = cv::imread(path, cv::IMREAD_COLOR);
    if (raw.empty()) throw BackgroundUnreadable("cannot read background '" + path + "'");
    return cache_.emplace(path, fit_to_canvas(raw, canvas_px_)).first->second;
  }

 private:
  int canvas_px_;
  std::map<std::string, cv::Mat> cache_;
};

}  // namespace detail

/// Renders one sample to an 8-bit BGR canvas: background, stroked arc (when
/// the marker is present), brightness scaling, green speckle, NoisyCutout
/// rectangles and an occasional global blur, all driven by distractor_seed.
inline cv::Mat render(const SampleSpec& spec, const RenderOptions& opts = {},
                      detail::BackgroundCache* cache = nullptr) {
  cv::Mat img;
  if (cache != nullptr) {
    img = cache->get(spec.background_path).clone();
  } else {
    cv::Mat raw = cv::imread(spec.background_path, cv::IMREAD_COLOR);
    if (raw.empty())
      throw BackgroundUnreadable("cannot read background '" + spec.background_path + "'");
    img = detail::fit_to_canvas(raw, opts.canvas_px);
  }

  if (spec.has_marker) {
    cv::Mat mask = render_arc_mask(spec.ellipse, spec.arc_start_rad, spec.arc_end_rad,
                                   opts.stroke_px, opts.canvas_px);
    cv::Mat alpha;
    if (opts.blur_sigma_px > 0.0)
      cv::GaussianBlur(mask, alpha, cv::Size(0, 0), opts.blur_sigma_px);
    else
      alpha = mask;
    const cv::Vec3d bgr(spec.green_rgb[2], spec.green_rgb[1], spec.green_rgb[0]);
    for (int r = 0; r < img.rows; ++r) {
      const auto* am = alpha.ptr<std::uint8_t>(r);
      auto* px = img.ptr<cv::Vec3b>(r);
      for (int c = 0; c < img.cols; ++c) {
        if (am[c] == 0) continue;
        const double a = am[c] / 255.0;
        for (int ch = 0; ch < 3; ++ch)
          px[c][ch] = cv::saturate_cast<std::uint8_t>((1.0 - a) * px[c][ch] + a * bgr[ch]);
      }
    }
  }

  img.convertTo(img, -1, spec.brightness_factor, 0.0);

  std::mt19937_64 rng(spec.distractor_seed);
  const int n_speckle = uniform_int(rng, 0, opts.max_speckle);
  for (int i = 0; i < n_speckle; ++i) {
    const int x = uniform_int(rng, 0, opts.canvas_px - 1);
    const int y = uniform_int(rng, 0, opts.canvas_px - 1);
    const int g = uniform_int(rng, 150, 255);
    const int r = uniform_int(rng, 0, g - 15);
    const int b = uniform_int(rng, 0, g - 15);
    img.at<cv::Vec3b>(y, x) = cv::Vec3b(static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(g),
                                        static_cast<std::uint8_t>(r));
  }

  const int n_cutouts = uniform_int(rng, 0, opts.max_cutouts);
  for (int i = 0; i < n_cutouts; ++i) {
    const int w = uniform_int(rng, opts.cutout_min_px, opts.cutout_max_px);
    const int h = uniform_int(rng, opts.cutout_min_px, opts.cutout_max_px);
    const int x = uniform_int(rng, 0, std::max(0, opts.canvas_px - w - 1));
    const int y = uniform_int(rng, 0, std::max(0, opts.canvas_px - h - 1));
    cv::Mat patch = img(cv::Rect(x, y, w, h));
    if (uniform_int(rng, 0, 1) == 0) {
      for (int rr = 0; rr < patch.rows; ++rr) {
        auto* px = patch.ptr<cv::Vec3b>(rr);
        for (int cc = 0; cc < patch.cols; ++cc)
          px[cc] = cv::Vec3b(static_cast<std::uint8_t>(uniform_int(rng, 0, 255)),
                             static_cast<std::uint8_t>(uniform_int(rng, 0, 255)),
                             static_cast<std::uint8_t>(uniform_int(rng, 0, 255)));
      }
    } else {
      patch.setTo(cv::Scalar(0, 0, 0));
    }
  }

  if (uniform_int(rng, 0, 3) == 0)
    cv::GaussianBlur(img, img, cv::Size(0, 0), uniform(rng, 0.5, 1.5));
  return img;
}

inline DatasetLabel make_label(const SampleSpec& spec, const std::string& file, int canvas_px) {
  DatasetLabel rec;
  rec.file = file;
  if (spec.has_marker) {
    rec.label.m = 1.0;
    rec.label.u = spec.ellipse.u / canvas_px;
    rec.label.v = spec.ellipse.v / canvas_px;
    rec.label.a = spec.ellipse.a / canvas_px;
    rec.label.b = spec.ellipse.b / canvas_px;
    rec.label.phi = spec.ellipse.phi / kPi;
    rec.arc_start = spec.arc_start_rad;
    rec.arc_end = spec.arc_end_rad;
  }
  return rec;
}

inline nlohmann::ordered_json label_to_json(const DatasetLabel& rec) {
  nlohmann::ordered_json j;
  j["file"] = rec.file;
  j["m"] = rec.label.m;
  j["u"] = rec.label.u;
  j["v"] = rec.label.v;
  j["a"] = rec.label.a;
  j["b"] = rec.label.b;
  j["phi"] = rec.label.phi;
  j["arc_start"] = rec.arc_start;
  j["arc_end"] = rec.arc_end;
  return j;
}

inline DatasetLabel label_from_json(const nlohmann::json& j) {
  DatasetLabel rec;
  rec.file = j.at("file").get<std::string>();
  rec.label.m = j.at("m").get<double>();
  rec.label.u = j.at("u").get<double>();
  rec.label.v = j.at("v").get<double>();
  rec.label.a = j.at("a").get<double>();
  rec.label.b = j.at("b").get<double>();
  rec.label.phi = j.at("phi").get<double>();
  rec.arc_start = j.at("arc_start").get<double>();
  rec.arc_end = j.at("arc_end").get<double>();
  return rec;
}

inline std::vector<DatasetLabel> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file '" + path + "'");
  std::vector<DatasetLabel> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(label_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

/// Generates the dataset under <image_dir>/NNNNNN.png with one label line per
/// image. The positive/negative split is exact and shuffled; identical
/// (seed, backgrounds) input produces a byte-identical label file.
inline void generate(const DatasetManifest& manifest, const std::vector<std::string>& backgrounds,
                     const RenderOptions& opts = {}) {
  namespace fs = std::filesystem;
  if (backgrounds.empty()) throw NoBackgrounds("background list is empty");
  if (manifest.total < 0 || manifest.positives < 0 || manifest.positives > manifest.total)
    throw std::invalid_argument("manifest positives must lie in [0, total]");

  std::error_code ec;
  fs::create_directories(manifest.image_dir, ec);
  if (ec) throw IoError("cannot create image dir '" + manifest.image_dir + "'");
  const fs::path label_path(manifest.label_file);
  if (label_path.has_parent_path()) fs::create_directories(label_path.parent_path(), ec);

  std::mt19937_64 rng(manifest.seed);
  std::vector<char> positive(manifest.total, 0);
  std::fill(positive.begin(), positive.begin() + manifest.positives, 1);
  std::shuffle(positive.begin(), positive.end(), rng);

  std::ofstream labels(manifest.label_file, std::ios::binary);
  if (!labels) throw IoError("cannot open label file '" + manifest.label_file + "' for writing");

  detail::BackgroundCache cache(opts.canvas_px);
  const std::vector<int> png_params{cv::IMWRITE_PNG_COMPRESSION, 1};
  for (int i = 0; i < manifest.total; ++i) {
    const SampleSpec spec = sample_spec(rng, backgrounds, positive[i] != 0, opts);
    const cv::Mat img = render(spec, opts, &cache);
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", i);
    const fs::path img_path = fs::path(manifest.image_dir) / name;
    if (!cv::imwrite(img_path.string(), img, png_params))
      throw IoError("cannot write image '" + img_path.string() + "'");
    labels << label_to_json(make_label(spec, std::string("images/") + name, opts.canvas_px)).dump()
           << '\n';
  }
  if (!labels.good()) throw IoError("label file write failed");
}

}  // namespace ptzloc
