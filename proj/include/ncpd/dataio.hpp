#pragma once

#include "ncpd/linops.hpp"
#include "ncpd/solver.hpp"
#include "ncpd/sppdg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ncpd {

/// Grayscale image, row-major, pixels in [0, 1].
struct ImageBuffer {
  Index height = 0;
  Index width = 0;
  Vector pixels;
};

/// Reads P2 or P5 (maxval <= 65535) and scales by maxval.
/// Malformed input throws ParseError with the byte offset of the problem.
ImageBuffer read_pgm(const std::string& path);
ImageBuffer parse_pgm(const std::string& bytes);

/// Writes binary P5 with maxval 255, rounding half up after clamping to [0, 1].
void write_pgm(const std::string& path, const ImageBuffer& image);
std::string format_pgm(const ImageBuffer& image);

struct SparseRow {
  std::vector<Index> indices;  ///< 0-based, strictly increasing
  std::vector<double> values;
};

struct SparseDataset {
  Index n = 0;
  std::vector<SparseRow> rows;
  std::vector<double> labels;

  Index N() const noexcept { return static_cast<Index>(rows.size()); }
  Matrix to_dense() const;  ///< N x n
  Vector label_vector() const;
};

/// `label idx:val ...` lines with 1-based indices. n is the largest index seen,
/// or n_hint when given (an index beyond n_hint is an error). Two distinct
/// labels are mapped to -1 (smaller) and +1. Errors carry the line number.
SparseDataset parse_libsvm(const std::string& path, std::optional<Index> n_hint = std::nullopt);
SparseDataset parse_libsvm_text(const std::string& text, std::optional<Index> n_hint = std::nullopt);

void write_libsvm(const std::string& path, const SparseDataset& data);
std::string format_libsvm(const SparseDataset& data);

/// Pixel-wise x + sigma * N(0, 1), clamped to [0, 1]. The n-th pixel uses the
/// n-th normal of CounterRng(seed, kNoiseStream).
inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
ImageBuffer add_gaussian_noise(const ImageBuffer& image, double sigma, std::uint64_t seed);

/// %.17g; parses back to the identical double.
std::string format_real(double value);

inline constexpr const char* kTraceHeader =
    "iter,elapsed_s,objective,lagrangian,lyapunov,dx_norm,dy_norm,kkt_x,kkt_y";
inline constexpr const char* kAggregateHeader =
    "iter,comp_evals,mean_objective,mean_lagrangian_s,mean_lyapunov_s,mean_dx,mean_dy,seeds_ok";

/// Optional `comment` is written first as a `# ...` line. LF line endings.
std::string format_trace_csv(const std::vector<TraceRecord>& records, const std::string& comment = {});
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records,
                     const std::string& comment = {});
std::string format_aggregate_csv(const std::vector<AggregateRecord>& records,
                                 const std::string& comment = {});
void write_aggregate_csv(const std::string& path, const std::vector<AggregateRecord>& records,
                         const std::string& comment = {});

/// Whole-file helpers; throw IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace ncpd
