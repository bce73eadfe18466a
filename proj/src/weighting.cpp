#include "occa/weighting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "occa/errors.hpp"

namespace occa {

WeightSpec WeightSpec::parse(const std::string& text) {
  if (text == "uniform") return {WeightScheme::kUniform, 0};
  if (text == "tree") return {WeightScheme::kTree, 0};
  if (text.rfind("top:", 0) == 0) {
    const std::string digits = text.substr(4);
    int p = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
    if (!digits.empty() && digits[0] != '-' && ec == std::errc() && end == digits.data() + digits.size()) {
      return {WeightScheme::kTopP, p};
    }
  }
  throw ContractViolation("weights must be uniform, tree or top:<p>, got '" + text + "'");
}

std::string WeightSpec::to_string() const {
  switch (scheme) {
    case WeightScheme::kUniform:
      return "uniform";
    case WeightScheme::kTree:
      return "tree";
    case WeightScheme::kTopP:
      return "top:" + std::to_string(p);
    case WeightScheme::kCustom:
      return "custom";
  }
  return "unknown";
}

std::vector<WeightEdge> WeightMatrix::nonzero_pairs() const {
  std::vector<WeightEdge> out;
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = i + 1; j < size; ++j)
      if (rho(i, j) > 0.0) out.push_back({i, j, rho(i, j)});
  return out;
}

double pairwise_rho_hat(const Matrix& si, const Matrix& sj) {
  if (si.cols() != sj.cols()) throw ContractViolation("pairwise_rho_hat: views must share q");
  const double ti = si.squaredNorm();
  const double tj = sj.squaredNorm();
  if (!(ti > 0.0) || !(tj > 0.0)) throw DegenerateView("pairwise_rho_hat: a view has zero variance");
  const Matrix cij = si * sj.transpose();
  const double nuclear = Eigen::BDCSVD<Matrix>(cij).singularValues().sum();
  return nuclear / std::sqrt(ti * tj);
}

Matrix rho_hat_matrix(const std::vector<Matrix>& views) {
  const auto l = static_cast<Eigen::Index>(views.size());
  Matrix out = Matrix::Zero(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = i + 1; j < l; ++j) {
      try {
        out(i, j) = out(j, i) = pairwise_rho_hat(views[i], views[j]);
      } catch (const DegenerateView&) {
        const Eigen::Index bad = views[i].squaredNorm() > 0.0 ? j : i;
        throw DegenerateView("view " + std::to_string(bad + 1) + " has zero variance", static_cast<int>(bad + 1));
      }
    }
  }
  return out;
}

namespace {

std::vector<WeightEdge> all_pairs(const Matrix& rho_hat) {
  std::vector<WeightEdge> edges;
  for (Eigen::Index i = 0; i < rho_hat.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rho_hat.rows(); ++j) edges.push_back({i, j, rho_hat(i, j)});
  return edges;
}

// Union-find with path halving.
struct DisjointSets {
  explicit DisjointSets(Eigen::Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  }
  Eigen::Index find(Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(Eigen::Index a, Eigen::Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
  std::vector<Eigen::Index> parent;
};

}  // namespace

WeightSelection select_weights(const Matrix& rho_hat, const WeightSpec& spec) {
  const Eigen::Index l = rho_hat.rows();
  if (l < 2 || rho_hat.cols() != l) throw ContractViolation("select_weights: need a square matrix with l >= 2");
  const Eigen::Index pairs = l * (l - 1) / 2;
  WeightSelection out{l, spec, {}};
  std::vector<WeightEdge> edges = all_pairs(rho_hat);

  switch (spec.scheme) {
    case WeightScheme::kUniform:
      for (auto& e : edges) e.value = 1.0;
      out.edges = std::move(edges);
      break;
    case WeightScheme::kTree: {
      std::sort(edges.begin(), edges.end(), [](const WeightEdge& a, const WeightEdge& b) {
        return std::make_tuple(1.0 - a.value, a.i, a.j) < std::make_tuple(1.0 - b.value, b.i, b.j);
      });
      DisjointSets sets(l);
      for (const auto& e : edges) {
        if (sets.unite(e.i, e.j)) out.edges.push_back(e);
      }
      break;
    }
    case WeightScheme::kTopP: {
      if (spec.p < 1 || spec.p > pairs) {
        throw ContractViolation("top-p weighting needs 1 <= p <= " + std::to_string(pairs) + ", got " +
                                std::to_string(spec.p));
      }
      std::stable_sort(edges.begin(), edges.end(),
                       [](const WeightEdge& a, const WeightEdge& b) { return a.value > b.value; });
      edges.resize(static_cast<std::size_t>(spec.p));
      out.edges = std::move(edges);
      break;
    }
    case WeightScheme::kCustom:
      throw ContractViolation("select_weights: custom weights are built with custom_weights");
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [](const WeightEdge& a, const WeightEdge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  return out;
}

WeightMatrix softmax_normalize(const WeightSelection& selection, const Matrix& rho_hat, double bandwidth) {
  if (selection.edges.empty()) throw ContractViolation("softmax_normalize: empty selection");
  if (!std::isfinite(bandwidth)) throw ContractViolation("softmax_normalize: bandwidth must be finite");
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : selection.edges) top = std::max(top, bandwidth * e.value);
  double total = 0.0;
  std::vector<double> expo;
  expo.reserve(selection.edges.size());
  for (const auto& e : selection.edges) {
    expo.push_back(std::exp(bandwidth * e.value - top));
    total += expo.back();
  }
  WeightMatrix out{selection.size, rho_hat, Matrix::Zero(selection.size, selection.size), selection.spec};
  for (std::size_t t = 0; t < expo.size(); ++t) {
    const auto& e = selection.edges[t];
    out.rho(e.i, e.j) = out.rho(e.j, e.i) = expo[t] / total;
  }
  return out;
}

WeightMatrix make_weights(const std::vector<Matrix>& views, const WeightSpec& spec, double bandwidth) {
  const Matrix rho_hat = rho_hat_matrix(views);
  return softmax_normalize(select_weights(rho_hat, spec), rho_hat, bandwidth);
}

WeightMatrix custom_weights(const Matrix& rho, const Matrix& rho_hat) {
  const Eigen::Index l = rho.rows();
  if (l < 2 || rho.cols() != l) throw ContractViolation("custom_weights: need a square matrix with l >= 2");
  if (max_abs(rho - rho.transpose()) > 0.0 || rho.minCoeff() < 0.0 || max_abs(Matrix(rho.diagonal())) > 0.0) {
    throw ContractViolation("custom_weights: rho must be symmetric, nonnegative, zero on the diagonal");
  }
  const double total = rho.sum() / 2.0;
  if (!(total > 0.0)) throw ContractViolation("custom_weights: no positive weight");
  return WeightMatrix{l, rho_hat, rho / total, WeightSpec{WeightScheme::kCustom, 0}};
}

}  // namespace occa
