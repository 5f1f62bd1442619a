#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nrc/linalg.hpp"

namespace nrc {

enum class CoderKind { Nnls, Ridge, Lasso };

std::string coder_name(CoderKind kind);
CoderKind coder_from_name(const std::string& name);

struct SolverConfig {
  double rho = 1.0;            // ADMM penalty
  std::size_t max_iters = 5;   // iteration cap; 5 is the classification default
  double tol = 1e-6;           // convergence tolerance on the max-entry checks
  double lambda = 0.0;         // ridge / l1 weight, ignored by the NNLS coder
};

void validate(const SolverConfig& cfg);  // throws InvalidConfig

// per-iteration convergence telemetry, all max-absolute-entry quantities
struct ConvergenceTriple {
  double gap;  // max|c - z|
  double dc;   // max|c_new - c_old|
  double dz;   // max|z_new - z_old|
};

struct CodingResult {
  Vector coefficients;  // NNLS and lasso report z (z >= 0 for NNLS); ridge reports c
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<ConvergenceTriple> history;
};

struct AdmmState {
  Vector c, z, delta;
  std::size_t iter = 0;
};

enum class FactorPath { Direct, Woodbury };

/// Pre-stored operator applying (X^T X + r I)^{-1} to a vector.
///
/// Direct path: Cholesky of the N x N system. Woodbury path (used when
/// N > D): keeps the D x D factor of (I + X X^T / r) plus a copy of X and
/// applies (1/r) v - (1/r)^2 X^T (I + X X^T / r)^{-1} X v. Immutable after
/// build; safe to share across concurrent per-query solves.
class DictionaryFactorization {
 public:
  static DictionaryFactorization build(const DenseMatrix& x, double ridge,
                                       std::optional<FactorPath> force = {});

  FactorPath path() const { return path_; }
  std::size_t dimension() const { return n_; }
  double ridge() const { return ridge_; }

  Vector apply(const Vector& v) const;

 private:
  FactorPath path_ = FactorPath::Direct;
  std::size_t n_ = 0;
  double ridge_ = 0.0;
  SpdFactor factor_;        // N x N system (direct) or D x D capacitance (woodbury)
  DenseMatrix dictionary_;  // kept only on the woodbury path
};

/// Factorization backing the ADMM c-step: ridge amount is rho/2.
/// Direct path when N <= D, Woodbury path when N > D.
DictionaryFactorization build_factorization(const DenseMatrix& x, double rho);

/// c-step: (X^T X + (rho/2) I)^{-1} (X^T y + (rho/2) z + (1/2) delta).
Vector admm_c_update(const DictionaryFactorization& fact, const Vector& xty,
                     const Vector& z, const Vector& delta, double rho);

/// z-step: max(0, c - delta/rho) elementwise.
Vector admm_z_update(const Vector& c, const Vector& delta, double rho);

/// multiplier step: delta + rho (z - c).
Vector admm_dual_update(const Vector& delta, const Vector& z, const Vector& c,
                        double rho);

/// Nonnegative least squares min ||y - Xc||^2 s.t. c >= 0, solved by ADMM
/// from zero initialization. Stops when max|c-z|, max|dc|, max|dz| are all
/// <= cfg.tol in the same iteration, or after cfg.max_iters iterations.
CodingResult nnls_admm(const DenseMatrix& x, const Vector& y,
                       const SolverConfig& cfg);
CodingResult nnls_admm(const DictionaryFactorization& fact, const Vector& xty,
                       const SolverConfig& cfg, AdmmState* final_state = nullptr);

/// Exact NNLS by support enumeration, for testing. Every subset of columns is
/// solved unconstrained; feasible candidates (all coefficients >= 0) compete
/// on residual, ties broken by smaller support then lexicographic support.
/// Requires x.cols() <= 20.
Vector nnls_oracle(const DenseMatrix& x, const Vector& y);

/// Closed-form ridge coding c = (X^T X + lambda I)^{-1} X^T y.
Vector ridge_code(const DenseMatrix& x, const Vector& y, double lambda);

/// Elementwise sign(v) * max(|v| - kappa, 0).
Vector soft_threshold(const Vector& v, double kappa);

/// l1-regularized coding min ||y - Xc||^2 + lambda ||z||_1 s.t. c = z, via
/// the same ADMM splitting with a soft-threshold z-step (threshold lambda/rho).
/// Requires cfg.lambda > 0.
CodingResult lasso_admm(const DenseMatrix& x, const Vector& y,
                        const SolverConfig& cfg);
CodingResult lasso_admm(const DictionaryFactorization& fact, const Vector& xty,
                        const SolverConfig& cfg, AdmmState* final_state = nullptr);

}  // namespace nrc
