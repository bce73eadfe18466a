#ifndef OCCA_WEIGHTING_HPP_
#define OCCA_WEIGHTING_HPP_

// Pairwise view weights rho_ij for the multiset objective.
//
// rho_hat_ij = ||S_i S_j^T||_* / sqrt(tr(S_i S_i^T) tr(S_j S_j^T)) lies in
// [0, 1]. A scheme selects a set of unordered pairs (all of them, a maximum
// spanning tree of rho_hat, or the p largest) and a soft-max with a bandwidth
// turns the selected values into weights summing to 1 over unordered pairs.
// The multiset objective sums over ordered pairs, so each selected pair enters
// it twice with the same weight.

#include <string>
#include <vector>

#include "occa/linalg.hpp"

namespace occa {

enum class WeightScheme { kUniform, kTree, kTopP, kCustom };

struct WeightSpec {
  WeightScheme scheme = WeightScheme::kUniform;
  int p = 0;  // top-p only

  /// "uniform", "tree" or "top:<p>". Throws ContractViolation otherwise.
  static WeightSpec parse(const std::string& text);
  std::string to_string() const;
};

/// Unordered pair i < j with its pre-softmax value.
struct WeightEdge {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double value = 0.0;
};

struct WeightSelection {
  Eigen::Index size = 0;
  WeightSpec spec;
  std::vector<WeightEdge> edges;
};

struct WeightMatrix {
  Eigen::Index size = 0;
  Matrix rho_hat;  // symmetric, zero diagonal
  Matrix rho;      // symmetric, zero diagonal, unordered-pair sum 1
  WeightSpec spec;

  /// Unordered pairs with rho > 0.
  std::vector<WeightEdge> nonzero_pairs() const;
};

double pairwise_rho_hat(const Matrix& si, const Matrix& sj);

/// Symmetric matrix of pairwise_rho_hat with zero diagonal.
Matrix rho_hat_matrix(const std::vector<Matrix>& views);

/// Uniform: every pair with value 1. Tree: maximum spanning tree of rho_hat
/// (minimum spanning tree under 1 - rho_hat, Kruskal with (weight, i, j)
/// tie-breaking), edges keep rho_hat. Top-p: the p largest rho_hat.
WeightSelection select_weights(const Matrix& rho_hat, const WeightSpec& spec);

/// rho_ij = exp(bw v_ij) / sum over selected exp(bw v). Unselected pairs stay 0.
WeightMatrix softmax_normalize(const WeightSelection& selection, const Matrix& rho_hat, double bandwidth = 20.0);

/// rho_hat_matrix + select_weights + softmax_normalize.
WeightMatrix make_weights(const std::vector<Matrix>& views, const WeightSpec& spec, double bandwidth = 20.0);

/// Caller-provided weights: symmetric, nonnegative, zero diagonal, at least
/// one positive entry; rescaled to sum 1 over unordered pairs.
WeightMatrix custom_weights(const Matrix& rho, const Matrix& rho_hat);

}  // namespace occa

#endif  // OCCA_WEIGHTING_HPP_
