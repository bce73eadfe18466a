#include "occa/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "occa/errors.hpp"

namespace occa {

Matrix center(const Matrix& s) {
  if (s.cols() < 1) throw ContractViolation("center: need q >= 1");
  return s.colwise() - s.rowwise().mean();
}

LatentDims latent_dims(Eigen::Index m, Eigen::Index n) {
  const Eigen::Index big = std::max(m, n);
  return {(big + 1) / 2, (2 * big + 4) / 5};
}

namespace {

Matrix normal_factor(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, unsigned index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), index};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

}  // namespace

std::pair<Matrix, Matrix> gen_synthetic(const SyntheticSpec& spec) {
  if (spec.m < 1 || spec.n < 1 || spec.q < 1) throw ContractViolation("gen_synthetic: need m, n, q >= 1");
  if (!(spec.lambda >= 0.0)) throw ContractViolation("gen_synthetic: need lambda >= 0");
  const LatentDims dims = latent_dims(spec.m, spec.n);
  const Matrix z = normal_factor(dims.dz, spec.q, spec.seed, 0);
  const Matrix w = normal_factor(dims.dw, spec.q, spec.seed, 1);
  const Matrix px = normal_factor(spec.m, dims.dz, spec.seed, 2);
  const Matrix qx = normal_factor(spec.m, dims.dw, spec.seed, 3);
  const Matrix py = normal_factor(spec.n, dims.dz, spec.seed, 4);
  const Matrix qy = normal_factor(spec.n, dims.dw, spec.seed, 5);
  Matrix sx = px * z + qx * w;
  Matrix sy = py * z + qy * w;
  if (spec.lambda > 0.0) {
    sx += spec.lambda * normal_factor(spec.m, spec.q, spec.seed, 6);
    sy += spec.lambda * normal_factor(spec.n, spec.q, spec.seed, 7);
  }
  return {std::move(sx), std::move(sy)};
}

namespace {

Matrix parse_csv(const std::string& text, const CsvOptions& options, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool skipped = !options.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!skipped) {
      skipped = true;
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      std::size_t b = start;
      std::size_t e = end;
      while (b < e && (line[b] == ' ' || line[b] == '\t')) ++b;
      while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t')) --e;
      const char* first = line.data() + b;
      const char* last = line.data() + e;
      if (b < e && *first == '+') ++first;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (b == e || ec != std::errc() || ptr != last) {
        throw ParseError(source + "non-numeric token '" + line.substr(b, e - b) + "'", line_no, static_cast<int>(b + 1));
      }
      row.push_back(value);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(source + "ragged row: expected " + std::to_string(rows.front().size()) + " fields, got " +
                           std::to_string(row.size()),
                       line_no, 0);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source + "empty matrix file", std::max(line_no, 1), 0);

  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = rows[i][j];
  return out;
}

}  // namespace

Matrix parse_matrix(const std::string& text, const CsvOptions& options) { return parse_csv(text, options, ""); }

Matrix load_matrix(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return parse_csv(buffer.str(), options, path + ": ");
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_matrix(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << format_matrix(m);
  out.close();
  if (!out) throw IoError("error while writing '" + path + "'");
}

nlohmann::json to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_json(const nlohmann::json& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << report.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("error while writing '" + path + "'");
}

}  // namespace occa
