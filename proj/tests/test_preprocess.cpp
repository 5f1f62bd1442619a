#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "nrc/preprocess.hpp"
#include "support/test_utils.hpp"

using namespace nrc;

TEST_CASE("column normalization") {
  DenseMatrix x(2, 2);
  x(0, 0) = 3.0;
  x(1, 0) = 4.0;
  x(0, 1) = 0.6;
  x(1, 1) = 0.8;

  const auto n = l2_normalize_columns(x);
  CHECK(n(0, 0) == doctest::Approx(0.6));
  CHECK(n(1, 0) == doctest::Approx(0.8));
  CHECK(n(0, 1) == 0.6);  // already unit norm, bitwise unchanged
  CHECK(n(1, 1) == 0.8);

  DenseMatrix z(2, 1);
  CHECK_THROWS_AS(l2_normalize_columns(z), ZeroNormSample);
}

TEST_CASE("pca on a line through the origin") {
  // points along [1,1]/sqrt(2), mean subtracted internally
  DenseMatrix x(2, 5);
  const double ts[5] = {-2.0, -1.0, 0.0, 1.0, 2.0};
  for (std::size_t j = 0; j < 5; ++j) {
    x(0, j) = ts[j];
    x(1, j) = ts[j];
  }
  const auto model = pca_fit(x, 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(model.components(0, 0)) == doctest::Approx(inv_sqrt2));
  CHECK(std::abs(model.components(1, 0)) == doctest::Approx(inv_sqrt2));
  CHECK(model.components(0, 0) > 0.0);  // deterministic sign

  // all variance on the single component
  double total = 0.0;
  for (std::size_t j = 0; j < 5; ++j) total += 2.0 * ts[j] * ts[j];
  CHECK(model.explained_variance[0] == doctest::Approx(total / 4.0));

  const auto t = pca_transform(model, x);
  CHECK(t.rows() == 1);
  for (std::size_t j = 0; j < 5; ++j)
    CHECK(t(0, j) == doctest::Approx(ts[j] * std::sqrt(2.0)));
}

TEST_CASE("pca with d = D reconstructs the data") {
  testutil::Rng rng(81);
  const auto x = testutil::random_matrix(rng, 4, 30);
  const auto model = pca_fit(x, 4);
  const auto t = pca_transform(model, x);

  // reconstruct: mean + components * t
  for (std::size_t j = 0; j < x.cols(); ++j) {
    Vector rec = model.mean;
    for (std::size_t k = 0; k < 4; ++k)
      axpy(t(k, j), model.components.col(k), rec);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(rec[i] == doctest::Approx(x(i, j)).epsilon(1e-8));
  }
}

TEST_CASE("pca components are orthonormal and variances match projections") {
  testutil::Rng rng(82);
  const auto x = testutil::random_matrix(rng, 6, 40);
  const auto model = pca_fit(x, 3);

  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      const double want = a == b ? 1.0 : 0.0;
      CHECK(dot(model.components.col(a), model.components.col(b)) ==
            doctest::Approx(want).epsilon(1e-10));
    }

  CHECK(model.explained_variance[0] >= model.explained_variance[1]);
  CHECK(model.explained_variance[1] >= model.explained_variance[2]);

  const auto t = pca_transform(model, x);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t j = 0; j < t.cols(); ++j) mean += t(k, j);
    mean /= static_cast<double>(t.cols());
    double ss = 0.0;
    for (std::size_t j = 0; j < t.cols(); ++j) ss += (t(k, j) - mean) * (t(k, j) - mean);
    CHECK(ss / static_cast<double>(t.cols() - 1) ==
          doctest::Approx(model.explained_variance[k]).epsilon(1e-8));
  }
}

TEST_CASE("gram-trick path (N < D) agrees with the covariance path") {
  testutil::Rng rng(83);
  DenseMatrix x = testutil::random_matrix(rng, 30, 12);  // N < D
  const auto model = pca_fit(x, 4);

  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      const double want = a == b ? 1.0 : 0.0;
      CHECK(dot(model.components.col(a), model.components.col(b)) ==
            doctest::Approx(want).epsilon(1e-10));
    }

  const auto t = pca_transform(model, x);
  for (std::size_t k = 0; k < 4; ++k) {
    double ss = 0.0;
    for (std::size_t j = 0; j < t.cols(); ++j) ss += t(k, j) * t(k, j);
    CHECK(ss / static_cast<double>(t.cols() - 1) ==
          doctest::Approx(model.explained_variance[k]).epsilon(1e-8));
  }
}

TEST_CASE("isotropic cloud gives near-equal top variances") {
  testutil::Rng rng(84);
  const auto x = testutil::random_matrix(rng, 3, 5000);
  const auto model = pca_fit(x, 2);
  const double ratio = model.explained_variance[0] / model.explained_variance[1];
  CHECK(ratio >= 1.0);
  CHECK(ratio <= 1.1);
}

TEST_CASE("pca transform is affine") {
  testutil::Rng rng(85);
  const auto data = testutil::random_matrix(rng, 5, 20);
  const auto model = pca_fit(data, 3);

  const Vector a = testutil::random_vector(rng, 5);
  const Vector b = testutil::random_vector(rng, 5);
  const double alpha = 0.3;

  DenseMatrix probe(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    probe(i, 0) = a[i];
    probe(i, 1) = b[i];
    probe(i, 2) = alpha * a[i] + (1.0 - alpha) * b[i];
  }
  const auto t = pca_transform(model, probe);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(t(k, 2) == doctest::Approx(alpha * t(k, 0) + (1.0 - alpha) * t(k, 1)).epsilon(1e-10));
}

TEST_CASE("transform of the training mean is zero") {
  testutil::Rng rng(86);
  const auto x = testutil::random_matrix(rng, 4, 15);
  const auto model = pca_fit(x, 2);
  DenseMatrix mean_col(4, 1);
  for (std::size_t i = 0; i < 4; ++i) mean_col(i, 0) = model.mean[i];
  const auto t = pca_transform(model, mean_col);
  CHECK(std::abs(t(0, 0)) <= 1e-12);
  CHECK(std::abs(t(1, 0)) <= 1e-12);
}

TEST_CASE("pca dimension checks") {
  testutil::Rng rng(87);
  const auto x = testutil::random_matrix(rng, 4, 10);
  CHECK_THROWS_AS(pca_fit(x, 0), BadDimension);
  CHECK_THROWS_AS(pca_fit(x, 5), BadDimension);
  DenseMatrix q(3, 7);
  CHECK_THROWS_AS(pca_transform(pca_fit(x, 2), q), DimensionMismatch);
}

TEST_CASE("pca model round-trips through the binary file") {
  testutil::Rng rng(88);
  const auto x = testutil::random_matrix(rng, 5, 12);
  const auto model = pca_fit(x, 3);

  const std::string path = "pca_roundtrip.nrcp";
  save_pca(path, model);
  const auto back = load_pca(path);
  std::remove(path.c_str());

  CHECK(back.mean == model.mean);
  CHECK(back.components.data() == model.components.data());
  CHECK(back.explained_variance == model.explained_variance);
}

TEST_CASE("pipeline order: projection happens before normalization") {
  // a column whose projection is far from unit norm: normalizing after the
  // projection must give a unit column in the projected space
  testutil::Rng rng(89);
  const auto x = testutil::random_matrix(rng, 6, 20);
  const auto model = pca_fit(x, 2);
  const auto projected = pca_transform(model, x);
  const auto normalized = l2_normalize_columns(projected);
  for (std::size_t j = 0; j < normalized.cols(); ++j)
    CHECK(norm2(normalized.col(j)) == doctest::Approx(1.0).epsilon(1e-12));
}
