#ifndef OCCA_DATA_IO_HPP_
#define OCCA_DATA_IO_HPP_

// Centering, the synthetic two-view generator, CSV matrices and JSON reports.
// Matrices are stored features x samples, one matrix row per CSV line.

#include <cstdint>
#include <string>
#include <utility>

#include "json.hpp"
#include "occa/linalg.hpp"

namespace occa {

/// S - (1/q) (S 1) 1^T.
Matrix center(const Matrix& s);

struct SyntheticSpec {
  Eigen::Index m = 0;  // rows of S_X
  Eigen::Index n = 0;  // rows of S_Y
  Eigen::Index q = 0;  // samples
  double lambda = 2e-4;
  std::uint64_t seed = 0;
};

struct LatentDims {
  Eigen::Index dz = 0;
  Eigen::Index dw = 0;
};

/// dz = ceil(max(m, n) / 2), dw = ceil(2 max(m, n) / 5).
LatentDims latent_dims(Eigen::Index m, Eigen::Index n);

/// S_X = P_X Z + Q_X W + lambda E_X and S_Y = P_Y Z + Q_Y W + lambda E_Y with
/// i.i.d. standard normal factors. Each factor has its own mt19937_64 stream
/// seeded by seed_seq{seed low word, seed high word, index}, index running
/// over Z, W, P_X, Q_X, P_Y, Q_Y, E_X, E_Y; entries are drawn row by row.
/// The outputs are not centered.
std::pair<Matrix, Matrix> gen_synthetic(const SyntheticSpec& spec);

struct CsvOptions {
  bool header = false;  // skip the first line
};

/// Throws IoError when the file cannot be read and ParseError on ragged rows,
/// non-numeric tokens or an empty file. Blank lines are ignored.
Matrix load_matrix(const std::string& path, const CsvOptions& options = {});
Matrix parse_matrix(const std::string& text, const CsvOptions& options = {});

/// %.17g per entry, so load_matrix(save_matrix(M)) is bit-exact.
void save_matrix(const Matrix& m, const std::string& path);
std::string format_matrix(const Matrix& m);

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const Matrix& m);

/// Pretty-printed, newline-terminated. Throws IoError.
void save_json(const nlohmann::json& report, const std::string& path);

}  // namespace occa

#endif  // OCCA_DATA_IO_HPP_
