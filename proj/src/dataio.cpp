#include "ncpd/dataio.hpp"

#include "ncpd/errors.hpp"
#include "ncpd/rng.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ncpd {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

class PgmReader {
 public:
  explicit PgmReader(const std::string& bytes) : s_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long integer(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
    if (ec != std::errc() || ptr == s_.data() + pos_) {
      throw ParseError(std::string("PGM: expected ") + what + " at byte " + std::to_string(start),
                       start);
    }
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    if (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '#') {
      throw ParseError(std::string("PGM: malformed ") + what + " at byte " + std::to_string(start),
                       start);
    }
    return value;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }
  std::size_t size() const noexcept { return s_.size(); }
  unsigned char byte(std::size_t i) const noexcept { return static_cast<unsigned char>(s_[i]); }
  bool at_end() const noexcept { return pos_ >= s_.size(); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

ImageBuffer parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw ParseError("PGM: missing P2/P5 magic at byte 0", 0);
  }
  const bool binary = bytes[1] == '5';
  PgmReader in(bytes);
  in.advance(2);
  const std::size_t dims_at = in.pos();
  const long width = in.integer("width");
  const long height = in.integer("height");
  if (width < 1 || height < 1) throw ParseError("PGM: dimensions must be positive", dims_at);
  const std::size_t maxval_at = in.pos();
  const long maxval = in.integer("maxval");
  if (maxval < 1 || maxval > 65535) {
    throw ParseError("PGM: maxval must lie in [1, 65535]", maxval_at);
  }

  ImageBuffer img;
  img.height = height;
  img.width = width;
  const Index count = static_cast<Index>(height) * width;
  img.pixels.resize(count);
  const double scale = static_cast<double>(maxval);

  if (binary) {
    if (in.at_end()) throw ParseError("PGM: truncated header", in.pos());
    in.advance(1);  // single whitespace byte after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(count) * bpp;
    if (in.size() - in.pos() < need) {
      throw ParseError("PGM: payload truncated; expected " + std::to_string(need) + " bytes",
                       in.size());
    }
    std::size_t p = in.pos();
    for (Index i = 0; i < count; ++i) {
      long v = in.byte(p++);
      if (bpp == 2) v = (v << 8) | in.byte(p++);
      if (v > maxval) throw ParseError("PGM: sample exceeds maxval", p - bpp);
      img.pixels[i] = static_cast<double>(v) / scale;
    }
  } else {
    for (Index i = 0; i < count; ++i) {
      in.skip_space_and_comments();
      if (in.at_end()) throw ParseError("PGM: payload truncated", in.pos());
      const std::size_t at = in.pos();
      const long v = in.integer("sample");
      if (v < 0 || v > maxval) throw ParseError("PGM: sample outside [0, maxval]", at);
      img.pixels[i] = static_cast<double>(v) / scale;
    }
  }
  return img;
}

ImageBuffer read_pgm(const std::string& path) { return parse_pgm(read_file(path)); }

std::string format_pgm(const ImageBuffer& image) {
  if (image.height < 1 || image.width < 1 || image.pixels.size() != image.height * image.width) {
    throw ShapeError("write_pgm: image dimensions do not match the pixel count");
  }
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(image.pixels.size()));
  for (Index i = 0; i < image.pixels.size(); ++i) {
    const double p = std::clamp(image.pixels[i], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(p * 255.0 + 0.5))));
  }
  return out;
}

void write_pgm(const std::string& path, const ImageBuffer& image) {
  write_file(path, format_pgm(image));
}

Matrix SparseDataset::to_dense() const {
  Matrix m = Matrix::Zero(N(), n);
  for (Index i = 0; i < N(); ++i) {
    const SparseRow& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < r.indices.size(); ++j) m(i, r.indices[j]) = r.values[j];
  }
  return m;
}

Vector SparseDataset::label_vector() const {
  Vector v(N());
  for (Index i = 0; i < N(); ++i) v[i] = labels[static_cast<std::size_t>(i)];
  return v;
}

namespace {

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

}  // namespace

SparseDataset parse_libsvm_text(const std::string& text, std::optional<Index> n_hint) {
  if (n_hint && *n_hint < 1) throw ParameterError("parse_libsvm: n_hint must be positive");
  SparseDataset data;
  Index max_index = 0;
  std::size_t line_no = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token) || token.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw ParseError("LIBSVM line " + std::to_string(line_no) + ": " + why, line_no);
    };
    double label = 0.0;
    if (!parse_double(token, label)) fail("bad label '" + token + "'");
    SparseRow row;
    Index last = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) fail("expected idx:val, got '" + token + "'");
      long idx = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + colon, idx);
      if (ec != std::errc() || ptr != token.data() + colon || idx < 1) {
        fail("bad feature index in '" + token + "'");
      }
      double value = 0.0;
      if (!parse_double(std::string_view(token).substr(colon + 1), value)) {
        fail("bad feature value in '" + token + "'");
      }
      if (idx <= last) fail("feature indices must be strictly increasing");
      if (n_hint && idx > *n_hint) fail("feature index exceeds n = " + std::to_string(*n_hint));
      last = idx;
      row.indices.push_back(idx - 1);
      row.values.push_back(value);
    }
    max_index = std::max(max_index, last);
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  data.n = n_hint ? *n_hint : max_index;
  const std::set<double> classes(data.labels.begin(), data.labels.end());
  if (classes.size() == 2) {
    const double low = *classes.begin();
    for (double& l : data.labels) l = l == low ? -1.0 : 1.0;
  }
  return data;
}

SparseDataset parse_libsvm(const std::string& path, std::optional<Index> n_hint) {
  return parse_libsvm_text(read_file(path), n_hint);
}

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_libsvm(const SparseDataset& data) {
  std::string out;
  for (Index i = 0; i < data.N(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    out += format_real(data.labels[u]);
    const SparseRow& r = data.rows[u];
    for (std::size_t j = 0; j < r.indices.size(); ++j) {
      out += ' ' + std::to_string(r.indices[j] + 1) + ':' + format_real(r.values[j]);
    }
    out += '\n';
  }
  return out;
}

void write_libsvm(const std::string& path, const SparseDataset& data) {
  write_file(path, format_libsvm(data));
}

ImageBuffer add_gaussian_noise(const ImageBuffer& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("noise: sigma must be >= 0");
  ImageBuffer out = image;
  if (sigma == 0.0) return out;
  CounterRng rng(seed, kNoiseStream);
  for (Index i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = std::clamp(out.pixels[i] + sigma * rng.normal(), 0.0, 1.0);
  }
  return out;
}

namespace {

std::string comment_line(const std::string& comment) {
  return comment.empty() ? std::string() : "# " + comment + "\n";
}

}  // namespace

std::string format_trace_csv(const std::vector<TraceRecord>& records, const std::string& comment) {
  std::string out = comment_line(comment) + kTraceHeader + "\n";
  for (const TraceRecord& r : records) {
    out += std::to_string(r.iter);
    for (double v : {r.elapsed_s, r.objective, r.lagrangian, r.lyapunov, r.dx_norm, r.dy_norm,
                     r.kkt_x, r.kkt_y}) {
      out += ',' + format_real(v);
    }
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records,
                     const std::string& comment) {
  write_file(path, format_trace_csv(records, comment));
}

std::string format_aggregate_csv(const std::vector<AggregateRecord>& records,
                                 const std::string& comment) {
  std::string out = comment_line(comment) + kAggregateHeader + "\n";
  for (const AggregateRecord& r : records) {
    out += std::to_string(r.iter) + ',' + std::to_string(r.comp_evals);
    for (double v : {r.mean_objective, r.mean_lagrangian_s, r.mean_lyapunov_s, r.mean_dx, r.mean_dy}) {
      out += ',' + format_real(v);
    }
    out += ',' + std::to_string(r.seeds_ok) + '\n';
  }
  return out;
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRecord>& records,
                         const std::string& comment) {
  write_file(path, format_aggregate_csv(records, comment));
}

}  // namespace ncpd
