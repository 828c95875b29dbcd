#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "marginlab/margin_stats.hpp"
#include "marginlab/rng.hpp"

using namespace marginlab;

namespace {
Eigen::VectorXd randv(Index n, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}
}  // namespace

TEST_CASE("margin is y * (w.phi + b)") {
  LinearHead head{Eigen::Vector2d(1, 0), 0.0};
  Eigen::Vector2d phi(2, 3);
  CHECK(margin(head, phi, +1) == 2.0);
  CHECK(margin(head, phi, -1) == -2.0);

  Rng rng(101);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd w = randv(7, rng), x = randv(7, rng);
    double b = uniform(rng, -1, 1);
    int y = uniform01(rng) < 0.5 ? -1 : 1;
    double dot = 0;  // explicit dot-product oracle
    for (Index i = 0; i < 7; ++i) dot += w[i] * x[i];
    CHECK(margin({w, b}, x, y) == doctest::Approx(y * (dot + b)).epsilon(1e-14));
  }

  CHECK_THROWS_AS(margin({Eigen::Vector2d(1, 0), 0.0}, Eigen::Vector3d(1, 2, 3), 1),
                  ShapeError);
}

TEST_CASE("margin_mean basics and scaling linearity") {
  Eigen::Vector3d g(1, 2, 3);
  CHECK(margin_mean(g) == 2.0);
  Eigen::VectorXd single(1);
  single << 7.5;
  CHECK(margin_mean(single) == 7.5);

  // power-of-two scaling is exact in IEEE arithmetic
  Rng rng(103);
  Eigen::VectorXd v = randv(9, rng);
  for (double beta : {2.0, 8.0, 1024.0})
    CHECK(margin_mean((beta * v).eval()) == beta * margin_mean(v));

  CHECK_THROWS_AS(margin_mean(Eigen::VectorXd(0)), std::invalid_argument);
}

TEST_CASE("margin_variance uses the population 1/m form") {
  CHECK(margin_variance(Eigen::Vector3d(1, 1, 1)) == 0.0);
  CHECK(margin_variance(Eigen::Vector2d(1, -1)) == 1.0);
  CHECK(margin_variance(Eigen::Vector3d(2, 4, 6)) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));

  Rng rng(107);
  Eigen::VectorXd v = randv(11, rng);
  double c = uniform(rng, -5, 5);
  CHECK(margin_variance((v.array() + c).matrix().eval()) ==
        doctest::Approx(margin_variance(v)).epsilon(1e-12));
}

TEST_CASE("normalize_margins divides by the guarded max-abs") {
  Eigen::VectorXd got = normalize_margins(Eigen::Vector3d(2, -4, 1));
  CHECK(got[0] == 0.5);
  CHECK(got[1] == -1.0);
  CHECK(got[2] == 0.25);

  Eigen::VectorXd zeros = normalize_margins(Eigen::Vector3d(0, 0, 0));
  for (Index i = 0; i < 3; ++i) CHECK(zeros[i] == 0.0);
}

TEST_CASE("normalization is scale invariant") {
  Rng rng(109);
  for (int t = 0; t < 30; ++t) {
    Eigen::VectorXd v = randv(8, rng);
    Eigen::VectorXd base = normalize_margins(v);

    // exactly invariant under power-of-two scalings
    for (double beta : {0.5, 2.0, 1024.0}) {
      Eigen::VectorXd scaled = normalize_margins((beta * v).eval());
      for (Index i = 0; i < v.size(); ++i) CHECK(scaled[i] == base[i]);
    }
    // within a few ulps for arbitrary positive scalings
    for (double beta : {3.0, 10.0, 777.77}) {
      Eigen::VectorXd scaled = normalize_margins((beta * v).eval());
      for (Index i = 0; i < v.size(); ++i)
        CHECK(std::abs(scaled[i] - base[i]) <= 1e-15);
    }
    CHECK(nmv((2.0 * v).eval()) == nmv(v));
  }
}

TEST_CASE("normalized margins live in [-1, 1] and touch 1 when nonzero") {
  Rng rng(113);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd v = randv(1 + static_cast<Index>(bounded(rng, 12)), rng);
    MarginBatch b = margin_batch(v);
    CHECK(b.gamma_bar.minCoeff() >= -1.0);
    CHECK(b.gamma_bar.maxCoeff() <= 1.0);
    CHECK(b.sigma >= 0.0);
    CHECK(b.sigma_bar >= 0.0);
    if (b.max_abs > kNormGuard) CHECK(b.gamma_bar.array().abs().maxCoeff() == 1.0);
  }
}

TEST_CASE("nmv basics, composition oracle, and the <= 1 bound") {
  CHECK(nmv(Eigen::Vector3d(5, 5, 5)) == 0.0);
  CHECK(nmv(Eigen::Vector2d(1, -1)) == 1.0);

  Rng rng(127);
  for (int t = 0; t < 40; ++t) {
    Eigen::VectorXd v = randv(1 + static_cast<Index>(bounded(rng, 20)), rng);
    // independent composition oracle: plain loops over the definition
    Eigen::VectorXd bar = normalize_margins(v);
    double mu_bar = 0;
    for (Index i = 0; i < bar.size(); ++i) mu_bar += bar[i];
    mu_bar /= static_cast<double>(bar.size());
    double want = 0;
    for (Index i = 0; i < bar.size(); ++i) want += (bar[i] - mu_bar) * (bar[i] - mu_bar);
    want /= static_cast<double>(bar.size());
    CHECK(nmv(v) == doctest::Approx(want).epsilon(1e-13));
    CHECK(nmv(v) <= 1.0);
  }
}

TEST_CASE("classification_error counts the boundary as an error") {
  CHECK(classification_error(Eigen::Vector3d(1, 2, 3)) == 0.0);
  CHECK(classification_error(Eigen::Vector2d(-1, 1)) == 0.5);
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK(classification_error(zero) == 1.0);
}

TEST_CASE("scaling by beta > 0 changes the mean but not the error") {
  Rng rng(131);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd v = randv(9, rng);
    for (double beta : {0.25, 2.0, 16.0}) {
      CHECK(classification_error((beta * v).eval()) == classification_error(v));
      CHECK(margin_mean((beta * v).eval()) == beta * margin_mean(v));
    }
  }
}

TEST_CASE("multiclass_test_error with argmax tie to the lowest index") {
  Tensor logits = Tensor::from({3, 3}, {9, 0, 0, 0, 9, 0, 0, 0, 9});
  CHECK(multiclass_test_error(logits, {0, 1, 2}) == 0.0);

  Tensor flat = Tensor::ones({2, 4});
  CHECK(multiclass_test_error(flat, {1, 2}) == 1.0);  // ties resolve to class 0
  CHECK(multiclass_test_error(flat, {0, 0}) == 0.0);

  Rng rng(137);
  Tensor r({20, 5});
  for (Index i = 0; i < r.size(); ++i) r[i] = uniform(rng, -1, 1);
  std::vector<int> labels(20);
  for (auto& l : labels) l = static_cast<int>(bounded(rng, 5));
  // loop oracle
  int errs = 0;
  for (Index i = 0; i < 20; ++i) {
    Index best = 0;
    for (Index j = 1; j < 5; ++j)
      if (r(i, j) > r(i, best)) best = j;
    errs += best != labels[static_cast<std::size_t>(i)];
  }
  CHECK(multiclass_test_error(r, labels) == doctest::Approx(errs / 20.0));

  CHECK_THROWS_AS(multiclass_test_error(flat, {0, 1, 2}), ShapeError);
}
