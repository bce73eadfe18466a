#ifndef OCCA_TESTS_ORACLES_HPP_
#define OCCA_TESTS_ORACLES_HPP_

// Reference computations that share no code with the library solvers: a
// cyclic Jacobi eigensolver, Cholesky solves, Gram-Schmidt, multi-start
// Riemannian gradient ascent and brute-force spanning trees.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SymEig {
  Vector values;  // ascending
  Matrix vectors;
};

inline SymEig jacobi_eig(Matrix a) {
  const Eigen::Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index r = 0; r < n; ++r) {
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double apr = a(p, r);
          const double aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymEig out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

/// Singular values, descending, from the eigenvalues of the smaller Gram matrix.
inline Vector singular_values(const Matrix& m) {
  const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  Vector w = jacobi_eig(gram).values;
  Vector out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) out(i) = std::sqrt(std::max(0.0, w(w.size() - 1 - i)));
  return out;
}

inline int numerical_rank(const Matrix& m, double rel) {
  const Vector s = singular_values(m);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

/// x with a x = b for symmetric positive definite a.
inline Vector cholesky_solve(const Matrix& a, const Vector& b) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = a(j, j);
    for (Eigen::Index p = 0; p < j; ++p) s -= l(j, p) * l(j, p);
    l(j, j) = std::sqrt(s);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double t = a(i, j);
      for (Eigen::Index p = 0; p < j; ++p) t -= l(i, p) * l(j, p);
      l(i, j) = t / l(j, j);
    }
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = b(i);
    for (Eigen::Index p = 0; p < i; ++p) t -= l(i, p) * y(p);
    y(i) = t / l(i, i);
  }
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double t = y(i);
    for (Eigen::Index p = i + 1; p < n; ++p) t -= l(p, i) * x(p);
    x(i) = t / l(i, i);
  }
  return x;
}

/// Modified Gram-Schmidt, applied twice.
inline Matrix gram_schmidt(Matrix m) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index p = 0; p < j; ++p) m.col(j) -= m.col(p).dot(m.col(j)) * m.col(p);
      m.col(j) /= m.col(j).norm();
    }
  }
  return m;
}

inline Matrix random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

inline Matrix random_stiefel(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  return gram_schmidt(random_normal(n, k, rng));
}

/// Random SPD matrix with condition number roughly `cond`.
inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng, double cond = 50.0) {
  const Matrix q = gram_schmidt(random_normal(n, n, rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = std::pow(cond, u(rng));
  return q * d.asDiagonal() * q.transpose();
}

inline double eta(const Matrix& g, const Matrix& a, const Matrix& d) {
  const double t = (g.transpose() * d).trace();
  return t * t / (g.transpose() * a * g).trace();
}

inline Matrix tangent_projection(const Matrix& g, const Matrix& z) {
  const Matrix gz = g.transpose() * z;
  return z - g * (0.5 * (gz + gz.transpose()));
}

/// Projected (Riemannian) gradient ascent on a product of Stiefel manifolds
/// with Gram-Schmidt retraction and Armijo backtracking.
struct AscentProblem {
  std::function<double(const std::vector<Matrix>&)> value;
  std::function<std::vector<Matrix>(const std::vector<Matrix>&)> euclidean_gradient;
};

inline double ascend(const AscentProblem& p, std::vector<Matrix> x, int max_steps = 5000, double tol = 1e-11) {
  double fx = p.value(x);
  double step = 1.0;
  for (int it = 0; it < max_steps; ++it) {
    std::vector<Matrix> g = p.euclidean_gradient(x);
    double gnorm2 = 0.0;
    for (std::size_t b = 0; b < x.size(); ++b) {
      g[b] = tangent_projection(x[b], g[b]);
      gnorm2 += g[b].squaredNorm();
    }
    if (std::sqrt(gnorm2) <= tol * std::max(1.0, std::abs(fx))) break;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<Matrix> trial(x.size());
      for (std::size_t b = 0; b < x.size(); ++b) trial[b] = gram_schmidt(x[b] + step * g[b]);
      const double ft = p.value(trial);
      if (ft >= fx + 1e-4 * step * gnorm2) {
        x = std::move(trial);
        fx = ft;
        moved = true;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return fx;
}

/// Best eta over `starts` random starting points.
inline double best_eta(const Matrix& a, const Matrix& d, int starts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AscentProblem p;
  p.value = [&](const std::vector<Matrix>& x) { return eta(x[0], a, d); };
  p.euclidean_gradient = [&](const std::vector<Matrix>& x) {
    const double t = (x[0].transpose() * d).trace();
    const double phi = (x[0].transpose() * a * x[0]).trace();
    return std::vector<Matrix>{(2.0 * t / phi) * d - (2.0 * t * t / (phi * phi)) * (a * x[0])};
  };
  double best = -1.0;
  for (int s = 0; s < starts; ++s) best = std::max(best, ascend(p, {random_stiefel(d.rows(), d.cols(), rng)}));
  return best;
}

/// F(X, Y) = tr(X^T C Y)^2 / (tr(X^T A X) tr(Y^T B Y)).
inline double two_view_F(const Matrix& x, const Matrix& y, const Matrix& a, const Matrix& b, const Matrix& c) {
  const double t = (x.transpose() * c * y).trace();
  return t * t / ((x.transpose() * a * x).trace() * (y.transpose() * b * y).trace());
}

inline double best_F(const Matrix& a, const Matrix& b, const Matrix& c, Eigen::Index k, int starts,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AscentProblem p;
  p.value = [&](const std::vector<Matrix>& x) { return two_view_F(x[0], x[1], a, b, c); };
  p.euclidean_gradient = [&](const std::vector<Matrix>& x) {
    const double t = (x[0].transpose() * c * x[1]).trace();
    const double ta = (x[0].transpose() * a * x[0]).trace();
    const double tb = (x[1].transpose() * b * x[1]).trace();
    const double f = t * t / (ta * tb);
    return std::vector<Matrix>{(2.0 * t / (ta * tb)) * (c * x[1]) - (2.0 * f / ta) * (a * x[0]),
                               (2.0 * t / (ta * tb)) * (c.transpose() * x[0]) - (2.0 * f / tb) * (b * x[1])};
  };
  double best = -1.0;
  for (int s = 0; s < starts; ++s) {
    best = std::max(best, ascend(p, {random_stiefel(a.rows(), k, rng), random_stiefel(b.rows(), k, rng)}));
  }
  return best;
}

/// Sum of sines of the principal angles, from the cosines.
inline double subspace_distance(const Matrix& g1, const Matrix& g2) {
  const Vector c = singular_values(gram_schmidt(g1).transpose() * gram_schmidt(g2));
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) s += std::sqrt(std::max(0.0, 1.0 - std::min(1.0, c(i) * c(i))));
  return s;
}

struct Edge {
  int i;
  int j;
};

/// Every spanning tree of the complete graph on `l` vertices, by subset enumeration.
inline std::vector<std::vector<Edge>> spanning_trees(int l) {
  std::vector<Edge> edges;
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) edges.push_back({i, j});
  std::vector<std::vector<Edge>> trees;
  const int e = static_cast<int>(edges.size());
  for (std::uint32_t mask = 0; mask < (1u << e); ++mask) {
    if (__builtin_popcount(mask) != l - 1) continue;
    std::vector<int> comp(static_cast<std::size_t>(l));
    for (int v = 0; v < l; ++v) comp[v] = v;
    bool acyclic = true;
    std::vector<Edge> tree;
    for (int t = 0; t < e && acyclic; ++t) {
      if (!(mask & (1u << t))) continue;
      const int ci = comp[edges[t].i];
      const int cj = comp[edges[t].j];
      if (ci == cj) {
        acyclic = false;
        break;
      }
      for (int v = 0; v < l; ++v)
        if (comp[v] == cj) comp[v] = ci;
      tree.push_back(edges[t]);
    }
    if (acyclic) trees.push_back(tree);
  }
  return trees;
}

}  // namespace oracle

#endif  // OCCA_TESTS_ORACLES_HPP_
