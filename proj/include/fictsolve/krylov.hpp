#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fictsolve/sparse.hpp"

namespace fictsolve {

class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t size() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
};

class MatrixOperator final : public LinearOperator {
 public:
  explicit MatrixOperator(const CsrMatrix& m) : m_(m) {}
  std::size_t size() const override { return m_.rows(); }
  void apply(std::span<const double> x, std::span<double> y) const override { m_.multiply(x, y); }

 private:
  const CsrMatrix& m_;
};

class FunctionOperator final : public LinearOperator {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionOperator(std::size_t n, Fn f) : n_(n), f_(std::move(f)) {}
  std::size_t size() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const override { f_(x, y); }

 private:
  std::size_t n_;
  Fn f_;
};

/// z = P^{-1} r. May be variable (inner iterations) for FGMRES.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual std::size_t size() const = 0;
  virtual void apply(std::span<const double> r, std::span<double> z) = 0;
  /// Inner iteration counts of the most recent apply, one entry per inner block solve.
  virtual std::vector<int> last_inner_iterations() const { return {}; }
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  explicit IdentityPreconditioner(std::size_t n) : n_(n) {}
  std::size_t size() const override { return n_; }
  void apply(std::span<const double> r, std::span<double> z) override;

 private:
  std::size_t n_;
};

class FunctionPreconditioner final : public Preconditioner {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionPreconditioner(std::size_t n, Fn f) : n_(n), f_(std::move(f)) {}
  std::size_t size() const override { return n_; }
  void apply(std::span<const double> r, std::span<double> z) override { f_(r, z); }

 private:
  std::size_t n_;
  Fn f_;
};

enum class KrylovMethod { cg, minres, fgmres };

struct SolverConfig {
  KrylovMethod method = KrylovMethod::fgmres;
  int restart = 30;
  double abs_tol = 1e-10;
  // stop when ||r|| <= max(abs_tol, rel_tol * ||b||); 0 means purely absolute
  double rel_tol = 0.0;
  int max_iters = 1000;
};

struct SolveReport {
  int outer_iterations = 0;
  // first-block (A) inner count per preconditioner application
  std::vector<int> inner_iterations_per_outer;
  // every block's inner counts per application
  std::vector<std::vector<int>> inner_iterations_by_block;
  std::vector<double> residual_history;
  // FGMRES: index into residual_history where each restart cycle starts
  std::vector<std::size_t> cycle_starts;
  bool converged = false;
  double final_residual = 0.0;
  double wall_time = 0.0;

  double average_inner() const;
};

/// Called with the search direction of each CG iteration.
using CgObserver = std::function<void(int, std::span<const double>)>;

/// All solvers overwrite x with the iterate started from the zero vector.
SolveReport cg(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
               const SolverConfig& cfg, const CgObserver& observer = {});
SolveReport minres(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
                   const SolverConfig& cfg);
SolveReport fgmres(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
                   const SolverConfig& cfg);
SolveReport solve(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
                  const SolverConfig& cfg);

KrylovMethod parse_method(const std::string& s);
std::string to_string(KrylovMethod m);

}  // namespace fictsolve
