#include "brushrecon/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

namespace brushrecon {

ImageIoError::ImageIoError(const std::filesystem::path& path, const std::string& reason)
    : Error(path.string() + ": " + reason), path_(path) {}

Rect intersect(const Rect& a, const Rect& b) {
  Rect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
         std::min(a.y1, b.y1)};
  if (r.empty()) return {r.x0, r.y0, r.x0, r.y0};
  return r;
}

Canvas::Canvas(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error("canvas dimensions must be positive, got " + std::to_string(width) + "x" +
                std::to_string(height));
  }
  data_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data_[3 * i] = fill.r;
    data_[3 * i + 1] = fill.g;
    data_[3 * i + 2] = fill.b;
  }
}

ScalarField::ScalarField(int width, int height, double fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(width) * height, fill) {}

LabelMap::LabelMap(int width, int height, std::vector<int> raw_ids)
    : width_(width), height_(height) {
  if (raw_ids.size() != static_cast<std::size_t>(width) * height) {
    throw Error("label map size does not match its dimensions");
  }
  std::map<int, int> remap;
  for (int id : raw_ids) {
    if (id < 0) throw Error("label ids must be non-negative");
    remap.emplace(id, 0);
  }
  int next = 0;
  for (auto& [raw, dense] : remap) dense = next++;
  region_count_ = next;
  labels_.reserve(raw_ids.size());
  for (int id : raw_ids) labels_.push_back(remap[id]);
}

LabelMap LabelMap::crop(const Rect& r) const {
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(r.width()) * r.height());
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) ids.push_back(at(x, y));
  return LabelMap(r.width(), r.height(), std::move(ids));
}

double GradientField::magnitude(int x, int y) const {
  const std::size_t i = static_cast<std::size_t>(y) * width + x;
  return std::hypot(gx[i], gy[i]);
}

double GradientField::orientation(int x, int y) const {
  const std::size_t i = static_cast<std::size_t>(y) * width + x;
  if (gx[i] == 0.0 && gy[i] == 0.0) return 0.0;
  double theta = std::atan2(gy[i], gx[i]);
  if (theta < 0.0) theta += M_PI;
  if (theta >= M_PI) theta -= M_PI;
  return theta;
}

// ---------------------------------------------------------------------------
// Netpbm IO

namespace {

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_positive(const std::string& tok, const std::filesystem::path& path, const char* field) {
  if (tok.empty()) throw ImageIoError(path, std::string("corrupt header: missing ") + field);
  int v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') {
      throw ImageIoError(path, std::string("corrupt header: bad ") + field + " '" + tok + "'");
    }
    v = v * 10 + (c - '0');
    if (v > 1 << 20) throw ImageIoError(path, std::string("corrupt header: ") + field + " too large");
  }
  if (v <= 0) throw ImageIoError(path, std::string("corrupt header: ") + field + " must be positive");
  return v;
}

PnmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  PnmHeader h;
  h.magic = next_token(in);
  if (h.magic != "P6" && h.magic != "P5") {
    throw ImageIoError(path, "unsupported format (expected binary PPM P6 or PGM P5), magic '" +
                                 h.magic + "'");
  }
  h.width = parse_positive(next_token(in), path, "width");
  h.height = parse_positive(next_token(in), path, "height");
  h.maxval = parse_positive(next_token(in), path, "maxval");
  if (h.maxval != 255) {
    throw ImageIoError(path, "unsupported maxval " + std::to_string(h.maxval) + " (only 255)");
  }
  return h;
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t bytes,
                                        const std::filesystem::path& path) {
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw ImageIoError(path, "truncated payload: expected " + std::to_string(bytes) +
                                 " bytes, got " + std::to_string(in.gcount()));
  }
  return buf;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ImageIoError(path, "file does not exist");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError(path, "cannot open for reading");
  return in;
}

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageIoError(path, "cannot open for writing");
  out << header;
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw ImageIoError(path, "write failed");
}

}  // namespace

unsigned char quantize_channel(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);
  return static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
}

Canvas load_image(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P6") throw ImageIoError(path, "expected a colour PPM (P6), found " + h.magic);
  const auto payload = read_payload(in, static_cast<std::size_t>(h.width) * h.height * 3, path);
  Canvas canvas(h.width, h.height);
  auto data = canvas.data();
  for (std::size_t i = 0; i < payload.size(); ++i) data[i] = payload[i] / 255.0;
  return canvas;
}

void save_image(const Canvas& canvas, const std::filesystem::path& path) {
  std::vector<unsigned char> payload(canvas.data().size());
  std::transform(canvas.data().begin(), canvas.data().end(), payload.begin(), quantize_channel);
  write_bytes(path,
              "P6\n" + std::to_string(canvas.width()) + " " + std::to_string(canvas.height()) +
                  "\n255\n",
              payload);
}

LabelMap load_label_map(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5") throw ImageIoError(path, "expected a label PGM (P5), found " + h.magic);
  const auto payload = read_payload(in, static_cast<std::size_t>(h.width) * h.height, path);
  return LabelMap(h.width, h.height, std::vector<int>(payload.begin(), payload.end()));
}

void save_label_map(const LabelMap& labels, const std::filesystem::path& path) {
  if (labels.region_count() > 256) throw ImageIoError(path, "more than 256 regions");
  std::vector<unsigned char> payload(labels.labels().begin(), labels.labels().end());
  write_bytes(path,
              "P5\n" + std::to_string(labels.width()) + " " + std::to_string(labels.height()) +
                  "\n255\n",
              payload);
}

// ---------------------------------------------------------------------------

double luminance(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

ScalarField luminance(const Canvas& canvas) {
  ScalarField out(canvas.width(), canvas.height());
  for (int y = 0; y < canvas.height(); ++y)
    for (int x = 0; x < canvas.width(); ++x) out.at(x, y) = luminance(canvas.pixel(x, y));
  return out;
}

GradientField sobel_gradients(const Canvas& canvas) {
  const int w = canvas.width();
  const int h = canvas.height();
  const ScalarField lum = luminance(canvas);
  GradientField g{w, h, std::vector<double>(lum.values().size()),
                  std::vector<double>(lum.values().size())};
  auto L = [&](int x, int y) {
    return lum.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (L(x + 1, y - 1) + 2.0 * L(x + 1, y) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2.0 * L(x - 1, y) + L(x - 1, y + 1));
      const double gy = (L(x - 1, y + 1) + 2.0 * L(x, y + 1) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2.0 * L(x, y - 1) + L(x + 1, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.gx[i] = gx;
      g.gy[i] = gy;
    }
  }
  return g;
}

void require_same_size(const Canvas& a, const Canvas& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(std::string(what) + ": dimension mismatch " + std::to_string(a.width()) + "x" +
                std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                std::to_string(b.height()));
  }
}

ScalarField error_map(const Canvas& render, const Canvas& target) {
  require_same_size(render, target, "error_map");
  ScalarField out(render.width(), render.height());
  const auto r = render.data();
  const auto t = target.data();
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::abs(r[3 * i] - t[3 * i]) + std::abs(r[3 * i + 1] - t[3 * i + 1]) +
           std::abs(r[3 * i + 2] - t[3 * i + 2]);
  }
  return out;
}

std::vector<Rect> partition_grid(int width, int height, int n) {
  if (n < 1) throw Error("partition_grid: n must be >= 1");
  if (n > std::min(width, height)) {
    throw Error("partition_grid: n=" + std::to_string(n) + " exceeds min(width, height)=" +
                std::to_string(std::min(width, height)));
  }
  const int cw = width / n;
  const int ch = height / n;
  std::vector<Rect> cells;
  cells.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      cells.push_back({i * cw, j * ch, i == n - 1 ? width : (i + 1) * cw,
                       j == n - 1 ? height : (j + 1) * ch});
    }
  }
  return cells;
}

Canvas crop(const Canvas& canvas, const Rect& r) {
  if (r.empty()) return Canvas();
  Canvas out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) out.set_pixel(x, y, canvas.pixel(r.x0 + x, r.y0 + y));
  return out;
}

void paste(Canvas& canvas, const Canvas& patch, const Rect& r) {
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) canvas.set_pixel(r.x0 + x, r.y0 + y, patch.pixel(x, y));
}

double mean_abs_diff(const Canvas& a, const Canvas& b) {
  require_same_size(a, b, "mean_abs_diff");
  double sum = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) sum += std::abs(da[i] - db[i]);
  return sum / static_cast<double>(da.size());
}

double max_abs_diff(const Canvas& a, const Canvas& b) {
  require_same_size(a, b, "max_abs_diff");
  double m = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

double psnr(const Canvas& a, const Canvas& b) {
  require_same_size(a, b, "psnr");
  double sq = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) sq += (da[i] - db[i]) * (da[i] - db[i]);
  const double mse = sq / static_cast<double>(da.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace brushrecon
