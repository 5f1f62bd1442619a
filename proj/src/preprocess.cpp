#include "nrc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "nrc/binio.hpp"

namespace nrc {

DenseMatrix l2_normalize_columns(const DenseMatrix& x) {
  DenseMatrix out = x;
  for (std::size_t j = 0; j < out.cols(); ++j) {
    auto col = out.col(j);
    const double n = norm2(col);
    if (n < 1e-12)
      throw ZeroNormSample("column " + std::to_string(j) + " has (near-)zero norm");
    const double inv = 1.0 / n;
    for (double& v : col) v *= inv;
  }
  return out;
}

namespace detail {

void jacobi_eigh(DenseMatrix a, Vector& eigenvalues, DenseMatrix& eigenvectors) {
  const std::size_t n = a.rows();
  DenseMatrix v = DenseMatrix::identity(n);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t p = 0; p < q; ++p) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
  };
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, linf_norm(a.col(j)));
  const double stop = std::max(scale, 1.0) * 1e-15 * static_cast<double>(n);

  for (int sweep = 0; sweep < 64 && off_norm() > stop; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  eigenvalues.resize(n);
  eigenvectors = DenseMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    eigenvalues[k] = a(order[k], order[k]);
    auto dst = eigenvectors.col(k);
    const auto src = v.col(order[k]);
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace detail

namespace {

void fix_sign(std::span<double> component) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < component.size(); ++i) {
    const double m = std::abs(component[i]);
    if (m > best) {
      best = m;
      arg = i;
    }
  }
  if (component[arg] < 0.0)
    for (double& v : component) v = -v;
}

// Deterministic orthonormal completion for directions beyond the data rank:
// Gram-Schmidt of the standard basis against the columns already in place.
void complete_basis(DenseMatrix& components, std::size_t filled) {
  const std::size_t d = components.rows();
  std::size_t next_axis = 0;
  for (std::size_t k = filled; k < components.cols(); ++k) {
    for (; next_axis < d; ++next_axis) {
      Vector cand(d, 0.0);
      cand[next_axis] = 1.0;
      for (std::size_t j = 0; j < k; ++j)
        axpy(-dot(components.col(j), cand), components.col(j), cand);
      const double n = norm2(cand);
      if (n > 1e-8) {
        auto dst = components.col(k);
        for (std::size_t i = 0; i < d; ++i) dst[i] = cand[i] / n;
        fix_sign(dst);
        ++next_axis;
        break;
      }
    }
  }
}

}  // namespace

PcaModel pca_fit(const DenseMatrix& x, std::size_t d) {
  if (x.empty()) throw DimensionMismatch("pca_fit: empty matrix");
  const std::size_t dim = x.rows();
  const std::size_t n = x.cols();
  if (d < 1 || d > std::min(dim, n))
    throw BadDimension("pca_fit: d must be in [1, min(D, N)]");

  PcaModel model;
  model.mean.assign(dim, 0.0);
  for (std::size_t j = 0; j < n; ++j) axpy(1.0, x.col(j), model.mean);
  for (double& m : model.mean) m /= static_cast<double>(n);

  DenseMatrix centered = x;
  for (std::size_t j = 0; j < n; ++j) axpy(-1.0, model.mean, centered.col(j));

  const double var_div = n > 1 ? static_cast<double>(n - 1) : 1.0;
  model.components = DenseMatrix(dim, d);
  model.explained_variance.assign(d, 0.0);

  Vector evals;
  DenseMatrix evecs;
  std::size_t filled = 0;

  if (n < dim) {
    // Gram trick: eigenvectors of Xc^T Xc lift to covariance eigenvectors
    detail::jacobi_eigh(gram(centered), evals, evecs);
    const double rank_tol = (evals.empty() ? 0.0 : std::max(evals[0], 0.0)) * 1e-12;
    for (std::size_t k = 0; k < d; ++k) {
      if (evals[k] <= rank_tol) break;
      Vector u = matvec(centered, Vector(evecs.col(k).begin(), evecs.col(k).end()));
      const double inv = 1.0 / std::sqrt(evals[k]);
      auto dst = model.components.col(k);
      for (std::size_t i = 0; i < dim; ++i) dst[i] = u[i] * inv;
      fix_sign(dst);
      model.explained_variance[k] = evals[k] / var_div;
      ++filled;
    }
  } else {
    DenseMatrix cov(dim, dim);
    for (std::size_t j = 0; j < n; ++j) {
      const auto col = centered.col(j);
      for (std::size_t b = 0; b < dim; ++b)
        for (std::size_t a = 0; a <= b; ++a) cov(a, b) += col[a] * col[b];
    }
    for (std::size_t b = 0; b < dim; ++b)
      for (std::size_t a = 0; a < b; ++a) cov(b, a) = cov(a, b);

    detail::jacobi_eigh(cov, evals, evecs);
    const double rank_tol = (evals.empty() ? 0.0 : std::max(evals[0], 0.0)) * 1e-12;
    for (std::size_t k = 0; k < d; ++k) {
      if (evals[k] <= rank_tol) break;
      auto dst = model.components.col(k);
      const auto src = evecs.col(k);
      std::copy(src.begin(), src.end(), dst.begin());
      fix_sign(dst);
      model.explained_variance[k] = std::max(evals[k], 0.0) / var_div;
      ++filled;
    }
  }

  if (filled < d) complete_basis(model.components, filled);
  return model;
}

DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x) {
  const std::size_t dim = model.mean.size();
  if (x.rows() != dim) throw DimensionMismatch("pca_transform: row count != model dimension");
  const std::size_t d = model.components.cols();

  Vector comp_dot_mean(d);
  for (std::size_t k = 0; k < d; ++k)
    comp_dot_mean[k] = dot(model.components.col(k), model.mean);

  DenseMatrix out(d, x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto dst = out.col(j);
    const auto src = x.col(j);
    for (std::size_t k = 0; k < d; ++k)
      dst[k] = dot(model.components.col(k), src) - comp_dot_mean[k];
  }
  return out;
}

namespace {
constexpr char kPcaMagic[4] = {'N', 'R', 'C', 'P'};
constexpr std::uint32_t kPcaVersion = 1;
}  // namespace

namespace detail {

void write_pca_block(std::ostream& os, const PcaModel& model) {
  write_u32(os, static_cast<std::uint32_t>(model.mean.size()));
  write_u32(os, static_cast<std::uint32_t>(model.components.cols()));
  write_f64s(os, model.mean);
  write_f64s(os, model.components.data());
  write_f64s(os, model.explained_variance);
}

PcaModel read_pca_block(std::istream& is) {
  PcaModel model;
  const std::uint32_t dim = read_u32(is);
  const std::uint32_t d = read_u32(is);
  model.mean.resize(dim);
  read_f64s(is, model.mean);
  model.components = DenseMatrix(dim, d);
  read_f64s(is, model.components.data());
  model.explained_variance.resize(d);
  read_f64s(is, model.explained_variance);
  return model;
}

}  // namespace detail

void save_pca(const std::string& path, const PcaModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kPcaMagic, 4);
  detail::write_u32(os, kPcaVersion);
  detail::write_pca_block(os, model);
  if (!os) throw IoError("write failed for '" + path + "'");
}

PcaModel load_pca(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kPcaMagic))
    throw IoError("'" + path + "' is not a pca model file");
  if (detail::read_u32(is) != kPcaVersion) throw IoError("unsupported pca model version");
  return detail::read_pca_block(is);
}

}  // namespace nrc
