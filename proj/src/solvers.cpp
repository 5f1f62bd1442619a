#include "nrc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace nrc {

std::string coder_name(CoderKind kind) {
  switch (kind) {
    case CoderKind::Nnls: return "nnls";
    case CoderKind::Ridge: return "ridge";
    case CoderKind::Lasso: return "lasso";
  }
  return "unknown";
}

CoderKind coder_from_name(const std::string& name) {
  if (name == "nnls") return CoderKind::Nnls;
  if (name == "ridge") return CoderKind::Ridge;
  if (name == "lasso") return CoderKind::Lasso;
  throw InvalidConfig("unknown coder '" + name + "' (expected nnls, ridge, or lasso)");
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.rho > 0.0)) throw InvalidConfig("solver config: rho must be > 0");
  if (cfg.max_iters < 1) throw InvalidConfig("solver config: max_iters must be >= 1");
  if (!(cfg.tol > 0.0)) throw InvalidConfig("solver config: tol must be > 0");
  if (cfg.lambda < 0.0) throw InvalidConfig("solver config: lambda must be >= 0");
}

DictionaryFactorization DictionaryFactorization::build(const DenseMatrix& x, double ridge,
                                                       std::optional<FactorPath> force) {
  if (x.empty()) throw DimensionMismatch("factorization: empty dictionary");
  if (ridge < 0.0) throw InvalidConfig("factorization: ridge must be nonnegative");

  const std::size_t d = x.rows();
  const std::size_t n = x.cols();
  FactorPath path = force.value_or((n <= d || ridge <= 0.0) ? FactorPath::Direct
                                                            : FactorPath::Woodbury);
  if (path == FactorPath::Woodbury && ridge <= 0.0)
    throw InvalidConfig("factorization: woodbury path needs ridge > 0");

  DictionaryFactorization f;
  f.path_ = path;
  f.n_ = n;
  f.ridge_ = ridge;
  if (path == FactorPath::Direct) {
    f.factor_ = spd_factor(gram(x), ridge);
  } else {
    // capacitance I + X X^T / ridge, built exactly symmetric
    DenseMatrix cap(d, d);
    for (std::size_t j = 0; j < n; ++j) {
      const auto col = x.col(j);
      for (std::size_t b = 0; b < d; ++b)
        for (std::size_t a = 0; a <= b; ++a) cap(a, b) += col[a] * col[b];
    }
    const double inv_r = 1.0 / ridge;
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t a = 0; a < b; ++a) {
        cap(a, b) *= inv_r;
        cap(b, a) = cap(a, b);
      }
      cap(b, b) = 1.0 + cap(b, b) * inv_r;
    }
    f.factor_ = spd_factor(cap, 0.0);
    f.dictionary_ = x;
  }
  return f;
}

Vector DictionaryFactorization::apply(const Vector& v) const {
  if (v.size() != n_) throw DimensionMismatch("factorization apply: length mismatch");
  if (path_ == FactorPath::Direct) return factor_.solve(v);
  const double inv_r = 1.0 / ridge_;
  Vector xv = matvec(dictionary_, v);
  Vector s = factor_.solve(xv);
  Vector u = matvec(dictionary_, s, /*transposed=*/true);
  Vector out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = inv_r * v[i] - inv_r * inv_r * u[i];
  return out;
}

DictionaryFactorization build_factorization(const DenseMatrix& x, double rho) {
  if (!(rho > 0.0)) throw InvalidConfig("build_factorization: rho must be > 0");
  return DictionaryFactorization::build(x, rho / 2.0);
}

Vector admm_c_update(const DictionaryFactorization& fact, const Vector& xty,
                     const Vector& z, const Vector& delta, double rho) {
  const std::size_t n = fact.dimension();
  if (xty.size() != n || z.size() != n || delta.size() != n)
    throw DimensionMismatch("admm_c_update: vector length mismatch");
  Vector rhs(n);
  const double half_rho = rho / 2.0;
  for (std::size_t i = 0; i < n; ++i) rhs[i] = xty[i] + half_rho * z[i] + 0.5 * delta[i];
  return fact.apply(rhs);
}

Vector admm_z_update(const Vector& c, const Vector& delta, double rho) {
  if (c.size() != delta.size()) throw DimensionMismatch("admm_z_update: length mismatch");
  Vector z(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) z[i] = std::max(0.0, c[i] - delta[i] / rho);
  return z;
}

Vector admm_dual_update(const Vector& delta, const Vector& z, const Vector& c, double rho) {
  if (delta.size() != z.size() || z.size() != c.size())
    throw DimensionMismatch("admm_dual_update: length mismatch");
  Vector out(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) out[i] = delta[i] + rho * (z[i] - c[i]);
  return out;
}

namespace {

// Shared ADMM driver. The two coders differ only in the z proximal step.
template <typename ZStep>
CodingResult admm_iterate(const DictionaryFactorization& fact, const Vector& xty,
                          const SolverConfig& cfg, ZStep&& z_step, AdmmState* final_state) {
  const std::size_t n = fact.dimension();
  AdmmState st;
  st.c.assign(n, 0.0);
  st.z.assign(n, 0.0);
  st.delta.assign(n, 0.0);

  CodingResult res;
  res.history.reserve(std::min<std::size_t>(cfg.max_iters, 1024));

  for (std::size_t t = 0; t < cfg.max_iters; ++t) {
    Vector c_next = admm_c_update(fact, xty, st.z, st.delta, cfg.rho);
    Vector z_next = z_step(c_next, st.delta);
    st.delta = admm_dual_update(st.delta, z_next, c_next, cfg.rho);

    ConvergenceTriple tr;
    tr.gap = linf_diff(c_next, z_next);
    tr.dc = linf_diff(c_next, st.c);
    tr.dz = linf_diff(z_next, st.z);
    res.history.push_back(tr);

    st.c = std::move(c_next);
    st.z = std::move(z_next);
    st.iter = t + 1;

    if (tr.gap <= cfg.tol && tr.dc <= cfg.tol && tr.dz <= cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.iterations = st.iter;
  res.coefficients = st.z;
  if (final_state) *final_state = std::move(st);
  return res;
}

void check_factor_matches(const DictionaryFactorization& fact, double expected_ridge) {
  const double r = fact.ridge();
  if (std::abs(r - expected_ridge) > 1e-12 * std::max(1.0, std::abs(expected_ridge)))
    throw InvalidConfig("prefactored solve: factorization ridge does not match config");
}

bool is_zero(const Vector& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

void check_problem(const DenseMatrix& x, const Vector& y) {
  if (x.empty()) throw DimensionMismatch("coder: empty dictionary");
  if (y.size() != x.rows()) throw DimensionMismatch("coder: len(y) != rows(X)");
  if (!all_finite(x.data()) || !all_finite(y))
    throw InvalidConfig("coder: non-finite entries in the problem data");
}

CodingResult zero_result(std::size_t n) {
  CodingResult res;
  res.coefficients.assign(n, 0.0);
  res.converged = true;
  return res;
}

}  // namespace

CodingResult nnls_admm(const DictionaryFactorization& fact, const Vector& xty,
                       const SolverConfig& cfg, AdmmState* final_state) {
  validate(cfg);
  check_factor_matches(fact, cfg.rho / 2.0);
  return admm_iterate(
      fact, xty, cfg,
      [&](const Vector& c, const Vector& delta) { return admm_z_update(c, delta, cfg.rho); },
      final_state);
}

CodingResult nnls_admm(const DenseMatrix& x, const Vector& y, const SolverConfig& cfg) {
  validate(cfg);
  check_problem(x, y);
  if (is_zero(y)) return zero_result(x.cols());
  const DictionaryFactorization fact = build_factorization(x, cfg.rho);
  return nnls_admm(fact, matvec(x, y, /*transposed=*/true), cfg);
}

CodingResult lasso_admm(const DictionaryFactorization& fact, const Vector& xty,
                        const SolverConfig& cfg, AdmmState* final_state) {
  validate(cfg);
  if (!(cfg.lambda > 0.0)) throw InvalidConfig("lasso: lambda must be > 0");
  check_factor_matches(fact, cfg.rho / 2.0);
  const double kappa = cfg.lambda / cfg.rho;
  return admm_iterate(
      fact, xty, cfg,
      [&](const Vector& c, const Vector& delta) {
        Vector u(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) u[i] = c[i] - delta[i] / cfg.rho;
        return soft_threshold(u, kappa);
      },
      final_state);
}

CodingResult lasso_admm(const DenseMatrix& x, const Vector& y, const SolverConfig& cfg) {
  validate(cfg);
  if (!(cfg.lambda > 0.0)) throw InvalidConfig("lasso: lambda must be > 0");
  check_problem(x, y);
  if (is_zero(y)) return zero_result(x.cols());
  const DictionaryFactorization fact = build_factorization(x, cfg.rho);
  return lasso_admm(fact, matvec(x, y, /*transposed=*/true), cfg);
}

Vector ridge_code(const DenseMatrix& x, const Vector& y, double lambda) {
  check_problem(x, y);
  if (lambda < 0.0) throw InvalidConfig("ridge: lambda must be >= 0");
  const DictionaryFactorization fact = DictionaryFactorization::build(x, lambda);
  return fact.apply(matvec(x, y, /*transposed=*/true));
}

Vector soft_threshold(const Vector& v, double kappa) {
  if (kappa < 0.0) throw InvalidConfig("soft_threshold: kappa must be >= 0");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]) - kappa;
    out[i] = mag > 0.0 ? (v[i] > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

namespace {

// lexicographic order on ascending support index lists
bool support_less(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

Vector nnls_oracle(const DenseMatrix& x, const Vector& y) {
  check_problem(x, y);
  const std::size_t n = x.cols();
  if (n > 20) throw TooManyColumns("nnls_oracle: enumeration limited to 20 columns");

  Vector best(n, 0.0);
  double best_residual = norm2(y);  // empty support
  std::vector<std::size_t> best_support;

  std::vector<std::size_t> support;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    support.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (1u << j)) support.push_back(j);

    // unconstrained LS restricted to the support
    DenseMatrix xs(x.rows(), support.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
      const auto src = x.col(support[k]);
      std::copy(src.begin(), src.end(), xs.col(k).begin());
    }
    Vector cs;
    try {
      cs = solve_spd(spd_factor(gram(xs), 0.0), matvec(xs, y, /*transposed=*/true));
    } catch (const NotPositiveDefinite&) {
      continue;  // dependent columns; any minimizer here is reachable on a subset
    }
    if (std::any_of(cs.begin(), cs.end(), [](double v) { return v < 0.0; })) continue;

    Vector r = matvec(xs, cs);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    const double residual = norm2(r);

    const bool better =
        residual < best_residual ||
        (residual == best_residual &&
         (support.size() < best_support.size() ||
          (support.size() == best_support.size() && support_less(support, best_support))));
    if (better) {
      best_residual = residual;
      best_support = support;
      std::fill(best.begin(), best.end(), 0.0);
      for (std::size_t k = 0; k < support.size(); ++k) best[support[k]] = cs[k];
    }
  }
  return best;
}

}  // namespace nrc
