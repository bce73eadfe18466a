#ifndef OCCA_TESTS_FIXTURES_HPP_
#define OCCA_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "occa/data_io.hpp"
#include "occa/linalg.hpp"
#include "occa/scf.hpp"
#include "oracles.hpp"

namespace fixtures {

using occa::Matrix;

// The 5x2 example with two local maximizers. A(0,4) is printed as +1 next to
// A(4,0) = -1; the symmetric choice -1 is the one that reproduces both
// reported objective values.
inline Matrix example_a() {
  Matrix a(5, 5);
  a << 4, 0, -5, -5, -1,  //
      0, 2, 1, -1, 1,     //
      -5, 1, 9, 5, 1,     //
      -5, -1, 5, 18, 4,   //
      -1, 1, 1, 4, 2;
  return a;
}

inline Matrix example_d() {
  Matrix d(5, 2);
  d << -1, 1, 0, 0, 0, 2, 0, 0, 1, 0;
  return d;
}

// Global maximizer, eta ~ 10.16.
inline Matrix example_g_star() {
  Matrix g(5, 2);
  g << -0.358041496119094, 0.770164268103322,  //
      -0.453284095949462, -0.326431512218038,  //
      -0.091335437376569, 0.497561512998402,   //
      -0.269574025133855, 0.008593213179154,   //
      0.765066989399257, 0.229451880441015;
  return g;
}

// Local, non-global maximizer, eta ~ 2.303.
inline Matrix example_g_plus() {
  Matrix g(5, 2);
  g << -0.506648923972689, 0.664385053189626,  //
      0.619602876311725, 0.312889763321350,    //
      -0.337893503149209, 0.384494340924914,   //
      0.103073503143856, 0.210902556071053,    //
      -0.484358314662567, -0.518050876600301;
  return g;
}

inline Matrix round_to(const Matrix& m, int digits) {
  const double scale = std::pow(10.0, digits);
  return m.unaryExpr([scale](double v) { return std::round(v * scale) / scale; });
}

struct RandomSubproblem {
  occa::SubproblemSpec spec;
  occa::StiefelPoint start;
};

inline RandomSubproblem random_subproblem(std::uint64_t seed, Eigen::Index n, Eigen::Index k, double cond = 50.0) {
  std::mt19937_64 rng(seed);
  Matrix a = oracle::random_spd(n, rng, cond);
  Matrix d = oracle::random_normal(n, k, rng);
  Matrix g = oracle::random_stiefel(n, k, rng);
  return {occa::SubproblemSpec(std::move(a), std::move(d)), occa::StiefelPoint(g)};
}

/// Centered random views sharing q samples, with a common latent factor so
/// the views are correlated.
inline std::vector<Matrix> random_views(std::uint64_t seed, const std::vector<Eigen::Index>& rows, Eigen::Index q,
                                        double noise = 0.5) {
  std::mt19937_64 rng(seed);
  const Matrix latent = oracle::random_normal(3, q, rng);
  std::vector<Matrix> views;
  for (Eigen::Index r : rows) {
    Matrix s = oracle::random_normal(r, 3, rng) * latent + noise * oracle::random_normal(r, q, rng);
    views.push_back(occa::center(s));
  }
  return views;
}

}  // namespace fixtures

#endif  // OCCA_TESTS_FIXTURES_HPP_
