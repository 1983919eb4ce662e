#include "opca/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <vector>

#include "opca/errors.hpp"

namespace opca {

DenseMatrix LowRankDataset::covariance() const {
  DenseMatrix scaled = basis;
  for (std::size_t r = 0; r < scaled.rows(); ++r)
    for (std::size_t c = 0; c < scaled.cols(); ++c) scaled(r, c) *= spectrum[c];
  return matmul(scaled, basis.transpose());
}

LowRankDataset gen_gaussian_lowrank(const GaussianLowRankSpec& spec) {
  const std::size_t n = spec.dimension;
  const std::size_t rank = spec.spectrum.size();
  if (n == 0) reject("gen_gaussian_lowrank: dimension must be positive");
  if (rank == 0 || rank > n) reject("gen_gaussian_lowrank: spectrum length must lie in [1, dimension]");
  for (std::size_t i = 0; i < rank; ++i) {
    if (!(spec.spectrum[i] > 0.0) || !std::isfinite(spec.spectrum[i])) {
      reject("gen_gaussian_lowrank: spectrum entries must be positive");
    }
    if (i > 0 && spec.spectrum[i] > spec.spectrum[i - 1]) {
      reject("gen_gaussian_lowrank: spectrum must be non-increasing");
    }
  }
  if (!spec.mean.empty() && spec.mean.size() != n) {
    reject(InputErrorKind::dimension_mismatch, "gen_gaussian_lowrank: mean has wrong dimension");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;

  // Random orthogonal frame from the leading columns of a Gaussian N x N draw.
  DenseMatrix g(n, n);
  for (double& x : g.data()) x = normal(rng);
  LowRankDataset out;
  out.basis = orthonormalize_columns(g).left_cols(rank);
  out.spectrum = spec.spectrum;
  out.mean = spec.mean.empty() ? Vector(n, 0.0) : spec.mean;

  Vector scale(rank);
  for (std::size_t i = 0; i < rank; ++i) scale[i] = std::sqrt(spec.spectrum[i]);

  out.samples = DenseMatrix(spec.count, n);
  Vector e(rank);
  for (std::size_t m = 0; m < spec.count; ++m) {
    for (std::size_t i = 0; i < rank; ++i) e[i] = scale[i] * normal(rng);
    auto row = out.samples.row(m);
    for (std::size_t r = 0; r < n; ++r) {
      double s = out.mean[r];
      for (std::size_t i = 0; i < rank; ++i) s += out.basis(r, i) * e[i];
      row[r] = s;
    }
  }
  return out;
}

Vector render_toy_shape(std::size_t size, ToyShape shape, const ToyFactors& f) {
  constexpr int kSub = 4;
  Vector img(size * size, 0.0);
  const double cy = 0.5 * static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      int inside = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = static_cast<double>(x) + (sx + 0.5) / kSub;
          const double py = static_cast<double>(y) + (sy + 0.5) / kSub;
          const double dx = px - f.x_position;
          const double dy = py - cy;
          const bool hit = shape == ToyShape::disc ? dx * dx + dy * dy <= f.radius * f.radius
                                                   : std::abs(dx) <= f.radius && std::abs(dy) <= f.radius;
          inside += hit ? 1 : 0;
        }
      }
      img[y * size + x] = f.brightness * static_cast<double>(inside) / (kSub * kSub);
    }
  }
  return img;
}

ToyShapesDataset gen_toy_shapes(const ToyShapesSpec& spec) {
  if (spec.image_size < 8) reject("gen_toy_shapes: image size must be at least 8");
  if (spec.count == 0) reject("gen_toy_shapes: count must be positive");
  const double size = static_cast<double>(spec.image_size);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> x_dist(0.3 * size, 0.7 * size);
  std::uniform_real_distribution<double> r_dist(0.15 * size, 0.3 * size);
  std::uniform_real_distribution<double> b_dist(0.3, 1.0);

  ToyShapesDataset out{ImageBatch(spec.count, 1, spec.image_size, spec.image_size), DenseMatrix(spec.count, 3)};
  for (std::size_t i = 0; i < spec.count; ++i) {
    ToyFactors f;
    f.x_position = x_dist(rng);
    f.radius = r_dist(rng);
    f.brightness = b_dist(rng);
    const Vector img = render_toy_shape(spec.image_size, spec.shape, f);
    std::copy(img.begin(), img.end(), out.images.sample(i).begin());
    out.factors(i, 0) = f.x_position;
    out.factors(i, 1) = f.radius;
    out.factors(i, 2) = f.brightness;
  }
  return out;
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::vector<unsigned char>& bytes, std::size_t& pos, const std::string& path) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty()) reject(InputErrorKind::malformed_header, "read_pgm: truncated header in " + path);
  return tok;
}

std::size_t parse_count(const std::string& tok, const std::string& path) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    reject(InputErrorKind::malformed_header, "read_pgm: bad header field '" + tok + "' in " + path);
  }
  return std::stoull(tok);
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) reject(InputErrorKind::missing_path, "read_pgm: cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  std::size_t pos = 0;
  if (next_token(bytes, pos, name) != "P5") reject(InputErrorKind::malformed_header, "read_pgm: not a P5 file: " + name);
  GrayImage img;
  img.width = parse_count(next_token(bytes, pos, name), name);
  img.height = parse_count(next_token(bytes, pos, name), name);
  const std::size_t maxval = parse_count(next_token(bytes, pos, name), name);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535) {
    reject(InputErrorKind::malformed_header, "read_pgm: invalid dimensions or maxval in " + name);
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    reject(InputErrorKind::malformed_header, "read_pgm: missing raster separator in " + name);
  }
  ++pos;

  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  const std::size_t n = img.width * img.height;
  if (bytes.size() - pos < n * bytes_per) reject(InputErrorKind::truncated, "read_pgm: raster truncated in " + name);
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t v = bytes[pos + i * bytes_per];
    if (bytes_per == 2) v = (v << 8) | bytes[pos + i * bytes_per + 1];
    img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    reject(InputErrorKind::dimension_mismatch, "write_pgm: pixel count does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) reject(InputErrorKind::io_failure, "write_pgm: cannot open " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> raster(image.pixels.size());
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    raster[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) reject(InputErrorKind::io_failure, "write_pgm: write failed for " + path.string());
}

ImageBatch load_pgm_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    reject(InputErrorKind::missing_path, "load_pgm_dir: no such directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  if (files.empty()) reject(InputErrorKind::missing_path, "load_pgm_dir: no .pgm files in " + dir.string());
  std::sort(files.begin(), files.end());

  std::vector<GrayImage> images;
  images.reserve(files.size());
  for (const auto& f : files) {
    images.push_back(read_pgm(f));
    if (images.back().width != images.front().width || images.back().height != images.front().height) {
      reject(InputErrorKind::mixed_dimensions, "load_pgm_dir: " + f.string() + " differs in size from " +
                                                   files.front().string());
    }
  }
  ImageBatch batch(images.size(), 1, images.front().height, images.front().width);
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i].pixels.begin(), images[i].pixels.end(), batch.sample(i).begin());
  }
  return batch;
}

}  // namespace opca
