#pragma once

#include <memory>
#include <string>

#include "fictsolve/factor.hpp"
#include "fictsolve/krylov.hpp"
#include "fictsolve/multigrid.hpp"
#include "fictsolve/sparse.hpp"

namespace fictsolve {

/// W = M_lambda^2 (two dense M_lambda solves) or diag(M_lambda)^2.
enum class WPolicy { exact, diag };
/// Q = M_p: sparse Cholesky, CG preconditioned by the lumped mass, or diag(M_p).
enum class QPolicy { exact, lumped, diag };
/// A-block: inner CG to a relative tolerance, exact (sparse Cholesky), or one IC(0) solve.
enum class APolicy { inner_cg, exact, ic0_apply };
/// gmg: geometric V-cycle, needs ALConfig::prolongations for the (1,1) block.
enum class InnerPreconditioner { ic0, sgs, gmg };
/// How the Stokes (1,1) block carries the B-augmentation.
enum class StokesAugmentation { graddiv, explicit_bqb };
enum class PrecondKind { al, al_diag, bfbt, none };

struct ALConfig {
  double gamma = 10.0;
  double delta = 10.0;
  WPolicy w_policy = WPolicy::exact;
  QPolicy q_policy = QPolicy::exact;
  APolicy a_policy = APolicy::inner_cg;
  InnerPreconditioner inner_pc = InnerPreconditioner::ic0;
  double inner_tol = 1e-2;
  int inner_max_iters = 2000;
  std::shared_ptr<const std::vector<CsrMatrix>> prolongations;
};

enum class SystemKind { poisson, stokes };

/// Saddle-point system [A_aug B^T C^T; B 0 0; C 0 0] (B absent for Poisson).
struct BlockSystem {
  SystemKind kind = SystemKind::poisson;
  CsrMatrix a;      // original (1,1) block; A_GD(gamma) for the grad-div Stokes form
  CsrMatrix b;      // m x n, Stokes only
  CsrMatrix c;      // l x n
  CsrMatrix a_aug;  // augmented (1,1) block
  CsrMatrix m_p;
  CsrMatrix m_lambda;
  Vector f, g;      // original right-hand side blocks
  Vector f_aug;     // f + gamma C^T W^{-1} g (Poisson) / f + delta C^T W^{-1} g (Stokes)
  double gamma = 0.0;
  double delta = 0.0;
  WPolicy w_policy = WPolicy::exact;
  StokesAugmentation augmentation = StokesAugmentation::graddiv;

  std::size_t n() const { return a.rows(); }
  std::size_t m() const { return kind == SystemKind::stokes ? b.rows() : 0; }
  std::size_t l() const { return c.rows(); }
  std::size_t size() const { return n() + m() + l(); }

  Vector rhs(bool augmented = true) const;
  void apply(std::span<const double> x, std::span<double> y, bool augmented = true) const;
  /// Row-major dense copy of the full operator.
  std::vector<double> dense(bool augmented = true) const;
};

class SaddleOperator final : public LinearOperator {
 public:
  explicit SaddleOperator(const BlockSystem& sys, bool augmented = true) : sys_(sys), aug_(augmented) {}
  std::size_t size() const override { return sys_.size(); }
  void apply(std::span<const double> x, std::span<double> y) const override { sys_.apply(x, y, aug_); }

 private:
  const BlockSystem& sys_;
  bool aug_;
};

/// C^T W^{-1} C for the chosen W policy (exact: dense M_lambda^{-2} middle factor).
CsrMatrix augmentation_term(const CsrMatrix& c, const CsrMatrix& m_lambda, WPolicy w);
/// W^{-1} v
Vector apply_w_inverse(const CsrMatrix& m_lambda, WPolicy w, std::span<const double> v);

/// A_gamma = A + gamma C^T W^{-1} C; gamma = 0 returns the original system.
BlockSystem build_augmented_poisson(const CsrMatrix& a, const CsrMatrix& c, const CsrMatrix& m_lambda,
                                    const Vector& f, const Vector& g, WPolicy w, double gamma);

/// graddiv form: a must already be A_GD(gamma); the (1,1) block becomes a + delta C^T W^{-1} C.
/// explicit_bqb: a is plain A; the block becomes A + gamma B^T M_p^{-1} B + delta C^T W^{-1} C
/// (dense-ish, for spectra only).
BlockSystem build_augmented_stokes(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c,
                                   const CsrMatrix& m_p, const CsrMatrix& m_lambda, const Vector& f,
                                   const Vector& g, WPolicy w, double gamma, double delta,
                                   StokesAugmentation form);

/// Solver for the (1,1) block according to the A policy.
class ABlockSolver {
 public:
  ABlockSolver(const CsrMatrix& a, const ALConfig& cfg);
  // returns the inner iteration count (0 for direct policies)
  int solve(std::span<const double> r, std::span<double> z) const;

 private:
  const CsrMatrix& a_;
  ALConfig cfg_;
  std::shared_ptr<IncompleteCholesky> ic_;
  std::shared_ptr<SymmetricGaussSeidel> sgs_;
  std::shared_ptr<SparseCholesky> chol_;
  std::shared_ptr<Multigrid> mg_;
};

/// Block upper-triangular AL preconditioner (Poisson 2x2 or Stokes 3x3).
class ALPreconditioner final : public Preconditioner {
 public:
  ALPreconditioner(const BlockSystem& sys, const ALConfig& cfg);
  std::size_t size() const override { return sys_.size(); }
  void apply(std::span<const double> r, std::span<double> z) override;
  std::vector<int> last_inner_iterations() const override { return last_; }

 private:
  friend class ALDiagPreconditioner;
  int solve_q(std::span<const double> r, std::span<double> z) const;
  void solve_w(std::span<const double> r, std::span<double> z) const;

  const BlockSystem& sys_;
  ALConfig cfg_;
  ABlockSolver ablock_;
  DenseLu m_lambda_lu_;
  std::shared_ptr<SparseCholesky> m_p_chol_;
  Vector m_p_diag_, m_p_lumped_, m_lambda_diag_;
  std::vector<int> last_;
  Vector work_;
};

/// blockdiag(A_aug, Q/gamma, W/delta)^{-1}: SPD, for MINRES.
class ALDiagPreconditioner final : public Preconditioner {
 public:
  ALDiagPreconditioner(const BlockSystem& sys, const ALConfig& cfg);
  std::size_t size() const override { return inner_.size(); }
  void apply(std::span<const double> r, std::span<double> z) override;
  std::vector<int> last_inner_iterations() const override { return inner_.last_; }

 private:
  ALPreconditioner inner_;
};

/// [A C^T; 0 -S]^{-1} with S^{-1} = (CC^T)^{-1} C A C^T (CC^T)^{-1}.
class BfbtPreconditioner final : public Preconditioner {
 public:
  BfbtPreconditioner(const BlockSystem& sys, const ALConfig& cfg);
  std::size_t size() const override { return sys_.size(); }
  void apply(std::span<const double> r, std::span<double> z) override;
  std::vector<int> last_inner_iterations() const override { return last_; }

 private:
  const BlockSystem& sys_;
  ABlockSolver ablock_;
  DenseLu cct_;
  std::vector<int> last_;
};

std::unique_ptr<Preconditioner> make_preconditioner(const BlockSystem& sys, PrecondKind kind, const ALConfig& cfg);

/// One-shot applications (build the preconditioner, apply once).
Vector al_apply_poisson(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r);
Vector al_apply_stokes(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r);
Vector al_apply_diag_spd(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r);
Vector bfbt_apply(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r);

WPolicy parse_w_policy(const std::string& s);
QPolicy parse_q_policy(const std::string& s);
PrecondKind parse_precond(const std::string& s);
InnerPreconditioner parse_inner_pc(const std::string& s);
std::string to_string(WPolicy p);
std::string to_string(QPolicy p);
std::string to_string(PrecondKind p);
std::string to_string(InnerPreconditioner p);

}  // namespace fictsolve
