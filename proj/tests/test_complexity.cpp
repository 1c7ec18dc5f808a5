#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include <Eigen/SVD>

#include "ckn/complexity.hpp"
#include "ckn/error.hpp"

using namespace ckn;

namespace {

FilterBank random_bank(std::mt19937_64& rng, std::size_t p_out, std::size_t p_in, std::size_t e,
                       double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  FilterBank b{p_out, p_in, e, std::vector<double>(p_out * p_in * e)};
  for (auto& v : b.data) v = normal(rng);
  return b;
}

CnnWeights random_weights(std::mt19937_64& rng, std::vector<std::size_t> channels,
                          std::vector<std::size_t> patches, std::size_t grid, double scale = 1.0) {
  CnnWeights w;
  for (std::size_t k = 0; k < patches.size(); ++k)
    w.layers.push_back(random_bank(rng, channels[k + 1], channels[k], patches[k], scale));
  w.p_n = channels.back();
  w.n_grid = grid;
  std::normal_distribution<double> normal(0.0, scale);
  w.final_weights.resize(w.p_n * grid);
  for (auto& v : w.final_weights) v = normal(rng);
  return w;
}

double dense_operator_norm(const FilterBank& b) {
  Eigen::MatrixXd m(b.p_out, b.e * b.p_in);
  for (std::size_t i = 0; i < b.p_out; ++i)
    for (std::size_t v = 0; v < b.e; ++v)
      for (std::size_t j = 0; j < b.p_in; ++j) m(i, v * b.p_in + j) = b.at(i, j, v) / std::sqrt(double(b.e));
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace

TEST_CASE("c_sigma_sq closed forms") {
  const auto e1 = DotProductKernel::exponential(1.0);
  for (double l2 : {0.0, 0.3, 1.0, 2.5}) {
    CHECK(c_sigma_sq(ActivationSpec::identity(), e1, l2).value == doctest::Approx(std::exp(1.0) * l2));
    const auto km = c_sigma_sq(ActivationSpec::kappa_match(e1), e1, l2);
    // exp(l2 - 1) beyond 1: the series continues kappa past the clamped interval
    const double want = std::exp(l2 - 1.0);
    CHECK(std::abs(km.value + km.tail_bound - want) <= 1e-10 * want);
  }
  const auto ip = DotProductKernel::inverse_polynomial();
  const auto v = c_sigma_sq(ActivationSpec::kappa_match(ip), ip, 0.5);
  CHECK(std::abs(v.value - 1.0 / 1.5) <= v.tail_bound + 1e-12);
  CHECK(c_sigma_sq(ActivationSpec::square(), e1, 0.0).value == 0.0);
  CHECK(c_sigma_sq(ActivationSpec::square(), ip, 2.0).value == doctest::Approx(8.0 * 4.0));
}

TEST_CASE("c_sigma_sq error cases") {
  try {
    c_sigma_sq(ActivationSpec::square(), DotProductKernel::linear(), 1.0);
    FAIL("expected invalid_argument");
  } catch (const Error& e) {
    CHECK(e.code() == "invalid_argument");
  }
  try {
    c_sigma_sq(ActivationSpec::kappa_match(DotProductKernel::inverse_polynomial()),
               DotProductKernel::inverse_polynomial(), 2.0);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == "divergence");
  }
  CHECK_THROWS_AS(c_sigma_sq(ActivationSpec::identity(), DotProductKernel::linear(), -1.0), Error);
}

TEST_CASE("c_sigma_sq is nondecreasing") {
  const auto k = DotProductKernel::exponential(1.0);
  for (const auto& act : {ActivationSpec::identity(), ActivationSpec::exp_like(),
                          ActivationSpec::kappa_match(k), srelu_fit(k)}) {
    double prev = -1.0;
    for (double l2 = 0.0; l2 <= 3.0; l2 += 0.25) {
      const auto v = c_sigma_sq(act, k, l2);
      CHECK(v.value >= prev);
      prev = v.value;
    }
  }
}

TEST_CASE("activation parsing and smoothed relu") {
  const auto k = DotProductKernel::vovk3();
  CHECK(parse_activation("identity", k).kind == ActivationKind::identity);
  const auto c = parse_activation("custom:0,1,0.5", k);
  CHECK(c.coefficient(2) == 0.5);
  CHECK(c.support() == std::optional<std::size_t>(2));
  CHECK(!ActivationSpec::exp_like().support().has_value());
  CHECK_THROWS_AS(parse_activation("tanh", k), Error);
  // vovk3 has b_j = 0 for j > 2, so the fit only uses u^0, u^1, u^2.
  const auto s = srelu_fit(k);
  for (std::size_t j = 3; j < 10; ++j) CHECK(s.coefficient(j) == 0.0);
  const auto s8 = srelu_fit(DotProductKernel::exponential());
  double at_half = 0.0;
  for (std::size_t j = 0; j < 9; ++j) at_half += s8.coefficient(j) * std::pow(0.5, double(j));
  CHECK(at_half == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("filter norms") {
  FilterBank b{1, 2, 2, {1, 2, 3, 4}};  // w^{00} = (1, 2), w^{01} = (3, 4)
  CHECK(filter_pair_sq_norm(b, 0, 0) == doctest::Approx(2.5));
  CHECK(filter_sq_norm(b, 0) == doctest::Approx(15.0));
  CHECK(mixed_frobenius_sq(b) == doctest::Approx(15.0));
  // slices W(0) = [1 3], W(1) = [2 4]
  CHECK(mixed_spectral_sq(b) == doctest::Approx((10.0 + 20.0) / 2.0));
}

TEST_CASE("operator spectral norm") {
  std::mt19937_64 rng(1);
  const auto one = random_bank(rng, 5, 4, 1);
  Eigen::MatrixXd m(5, 4);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = one.at(i, j, 0);
  CHECK(operator_spectral_norm(one) == doctest::Approx(Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0)).epsilon(1e-10));

  // Identity replicated over e offsets: (1/sqrt(e)) [I .. I] has norm 1.
  FilterBank rep{3, 3, 4, std::vector<double>(36, 0.0)};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t v = 0; v < 4; ++v) rep.at(i, i, v) = 1.0;
  CHECK(operator_spectral_norm(rep) == doctest::Approx(1.0).epsilon(1e-10));

  // Rank one: a b^T with b spread over offsets.
  FilterBank r1{3, 2, 2, std::vector<double>(12)};
  const double a[3] = {1, -2, 2}, bv[4] = {0.5, 1, -1, 2};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t v = 0; v < 2; ++v)
      for (std::size_t j = 0; j < 2; ++j) r1.at(i, j, v) = a[i] * bv[v * 2 + j];
  const double bnorm = std::sqrt(0.25 + 1 + 1 + 4);
  CHECK(operator_spectral_norm(r1) == doctest::Approx(3.0 * bnorm / std::sqrt(2.0)).epsilon(1e-10));

  for (int t = 0; t < 5; ++t) {
    const auto b = random_bank(rng, 8, 4, 3);
    CHECK(std::abs(operator_spectral_norm(b) - dense_operator_norm(b)) <= 1e-8);
  }
  FilterBank zero{2, 2, 2, std::vector<double>(8, 0.0)};
  CHECK(operator_spectral_norm(zero) == 0.0);
}

TEST_CASE("operator norm is at most the mixed spectral norm") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto b = random_bank(rng, 4, 3, 5);
    CHECK(operator_spectral_norm(b) <= std::sqrt(mixed_spectral_sq(b)) + 1e-10);
  }
}

TEST_CASE("rkhs norm bounds") {
  const auto lin = DotProductKernel::linear();
  const auto id = ActivationSpec::identity();
  CnnWeights one{{FilterBank{1, 1, 1, {3.0}}}, 1, 2, {1.0, 2.0}};
  CHECK(prop4_bound(one, id, lin) == doctest::Approx(std::sqrt(5.0 * 9.0)));
  CHECK(prop5_bound(one, id, lin) == doctest::Approx(prop4_bound(one, id, lin)));

  // Two scalar layers: prop5 = prop4.
  const auto e1 = DotProductKernel::exponential(1.0);
  const auto km = ActivationSpec::kappa_match(e1);
  CnnWeights scal{{FilterBank{1, 1, 1, {0.7}}, FilterBank{1, 1, 1, {-1.1}}}, 1, 3, {0.2, 0.4, -0.1}};
  CHECK(prop5_bound(scal, km, e1) == doctest::Approx(prop4_bound(scal, km, e1)).epsilon(1e-12));

  std::mt19937_64 rng(3);
  auto w = random_weights(rng, {2, 3, 4}, {3, 2}, 5);
  // zero weights: bound^2 = p_n sum ||w_{n+1}^i||^2 C(0)
  auto zw = w;
  for (auto& l : zw.layers) std::fill(l.data.begin(), l.data.end(), 0.0);
  const double c0 = c_sigma_sq(km, e1, 0.0).value;
  CHECK(prop4_bound(zw, km, e1) == doctest::Approx(std::sqrt(4.0 * final_sq_norm(w) * c0)));

  // Monotone under scaling any single layer up.
  const auto small = random_weights(rng, {2, 3, 4}, {3, 2}, 5, 0.3);
  for (std::size_t l = 0; l < 2; ++l) {
    auto big = small;
    for (auto& v : big.layers[l].data) v *= 1.7;
    CHECK(prop4_bound(big, km, e1) >= prop4_bound(small, km, e1));
    CHECK(prop5_bound(big, km, e1) >= prop5_bound(small, km, e1));
  }

  // Linear kernel and identity: |w_{n+1}| |W_2|_2 |W_1|_F.
  const auto lw = random_weights(rng, {2, 3, 4}, {3, 2}, 5);
  const double want = std::sqrt(final_sq_norm(lw) * mixed_spectral_sq(lw.layers[1]) *
                                mixed_frobenius_sq(lw.layers[0]));
  CHECK(std::abs(prop5_bound(lw, id, lin) - want) <= 1e-10 * want);
}

TEST_CASE("stability prefactor") {
  CnnWeights unit{{FilterBank{1, 1, 1, {1.0}}, FilterBank{1, 1, 1, {-1.0}}}, 1, 1, {1.0}};
  CHECK(generic_stability_factor(unit, 1.0) == doctest::Approx(1.0));
  CHECK(generic_stability_factor(unit, 2.0) == doctest::Approx(4.0));
  std::mt19937_64 rng(4);
  auto w = random_weights(rng, {2, 3, 2}, {3, 3}, 4);
  const double base = generic_stability_factor(w, 1.0);
  CHECK(base == doctest::Approx(std::sqrt(final_sq_norm(w)) * operator_spectral_norm(w.layers[0]) *
                                operator_spectral_norm(w.layers[1])));
  for (auto& v : w.layers[1].data) v *= 2.0;
  CHECK(generic_stability_factor(w, 1.0) == doctest::Approx(2.0 * base));
}

TEST_CASE("rademacher and margin bound") {
  CHECK(rademacher_margin_bound(1.0, std::vector<double>(100, 1.0), 1.0, 0.5, 0.0).rademacher == doctest::Approx(0.1));
  CHECK(rademacher_margin_bound(0.0, std::vector<double>(10, 3.0), 1.0, 0.5, 0.0).rademacher == 0.0);
  const double r1 = rademacher_margin_bound(2.0, std::vector<double>(25, 4.0), 1.0, 0.5, 0.0).rademacher;
  const double r4 = rademacher_margin_bound(2.0, std::vector<double>(100, 4.0), 1.0, 0.5, 0.0).rademacher;
  CHECK(r4 == doctest::Approx(r1 / 2.0));
  const auto m = rademacher_margin_bound(1.0, std::vector<double>(50, 2.0), 0.5, 0.1, 0.05);
  CHECK(m.margin_bound == doctest::Approx(0.05 + 2.0 * m.rademacher / 0.5 + std::sqrt(std::log(10.0) / 100.0)));
  CHECK_THROWS_AS(rademacher_margin_bound(1.0, {}, 1.0, 0.5, 0.0), Error);
  CHECK_THROWS_AS(rademacher_margin_bound(1.0, {1.0}, 0.0, 0.5, 0.0), Error);
}

TEST_CASE("weights files") {
  std::mt19937_64 rng(5);
  const auto w = random_weights(rng, {1, 2, 3}, {2, 3}, 4);
  const std::string path = "test_complexity_weights.bin";
  save_weights(w, path);
  const auto back = load_weights(path);
  REQUIRE(back.layers.size() == 2);
  CHECK(back.layers[1].data == w.layers[1].data);
  CHECK(back.final_weights == w.final_weights);
  std::remove(path.c_str());

  const auto j = parse_weights_json(
      R"({"layers":[{"p_out":1,"p_in":1,"e":2,"data":[1,2]}],"final":{"p_n":1,"n_grid":1,"data":[3]}})");
  CHECK(j.layers[0].e == 2);
  CHECK_THROWS_AS(parse_weights_json(
                      R"({"layers":[{"p_out":2,"p_in":1,"e":2,"data":[1,2]}],"final":{"p_n":2,"n_grid":1,"data":[3,4]}})"),
                  Error);
  CHECK_THROWS_AS(parse_weights_json("{"), Error);
}
