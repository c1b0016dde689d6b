#pragma once

#include <string>
#include <vector>

#include "relaybf/numerics.hpp"

namespace relaybf::conic {

enum class ScalarSign { Free, NonNegative };
enum class Sense { Equal, LessEqual, GreaterEqual };
enum class Status { Optimal, Infeasible, NumericalFailure };

const char* to_string(Status s);

/// Handle of a Hermitian PSD block variable.
struct BlockVar {
  int index = -1;
};

/// Handle of a real scalar variable.
struct ScalarVar {
  int index = -1;
};

/// Real affine functional  sum_j re tr(C_j X_j) + sum_i a_i s_i + constant.
/// Block coefficients are hermitized when the problem is assembled.
class AffineExpr {
 public:
  struct BlockTerm {
    int block;
    CMatrix coeff;
  };
  struct ScalarTerm {
    int scalar;
    double coeff;
  };

  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}

  AffineExpr& add(BlockVar b, const CMatrix& coeff);
  AffineExpr& add(ScalarVar s, double coeff);
  AffineExpr& add_constant(double c);

  const std::vector<BlockTerm>& block_terms() const { return blocks_; }
  const std::vector<ScalarTerm>& scalar_terms() const { return scalars_; }
  double constant() const { return constant_; }

  double evaluate(const std::vector<CMatrix>& blocks, const std::vector<double>& scalars) const;

 private:
  std::vector<BlockTerm> blocks_;
  std::vector<ScalarTerm> scalars_;
  double constant_ = 0.0;
};

struct Constraint {
  AffineExpr expr;
  Sense sense = Sense::Equal;
  double rhs = 0.0;
};

/// weight * expr^2, weight >= 0.
struct QuadraticTerm {
  double weight = 0.0;
  AffineExpr expr;
};

/// Minimize  linear objective + sum of weighted squared affine expressions
/// over Hermitian PSD blocks and real scalars, subject to affine
/// equalities/inequalities.
class ConicProblem {
 public:
  BlockVar add_psd_block(std::string name, int dim);
  ScalarVar add_scalar(std::string name, ScalarSign sign = ScalarSign::Free);

  /// Adds `expr` to the linear objective.
  void add_objective(const AffineExpr& expr);
  void add_quadratic(double weight, AffineExpr expr);
  void add_constraint(AffineExpr expr, Sense sense, double rhs);

  int num_blocks() const { return static_cast<int>(block_dims_.size()); }
  int num_scalars() const { return static_cast<int>(scalar_signs_.size()); }
  int block_dim(int b) const { return block_dims_.at(b); }
  const std::string& block_name(int b) const { return block_names_.at(b); }
  const std::string& scalar_name(int s) const { return scalar_names_.at(s); }
  ScalarSign scalar_sign(int s) const { return scalar_signs_.at(s); }
  const AffineExpr& objective() const { return objective_; }
  const std::vector<QuadraticTerm>& quadratic_terms() const { return quadratics_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  int count_constraints(Sense sense) const;

  /// Objective value at a candidate point.
  double evaluate_objective(const std::vector<CMatrix>& blocks, const std::vector<double>& scalars) const;
  /// Largest absolute violation of constraints and scalar sign restrictions.
  double max_violation(const std::vector<CMatrix>& blocks, const std::vector<double>& scalars) const;

  /// Throws std::invalid_argument when a term references an undeclared
  /// variable, a coefficient has the wrong shape, or a weight is negative.
  void validate() const;

 private:
  void check_expr(const AffineExpr& e) const;

  std::vector<int> block_dims_;
  std::vector<std::string> block_names_;
  std::vector<ScalarSign> scalar_signs_;
  std::vector<std::string> scalar_names_;
  AffineExpr objective_;
  std::vector<QuadraticTerm> quadratics_;
  std::vector<Constraint> constraints_;
};

struct SolverOptions {
  double tol = 1e-7;
  int max_iterations = 200;
  /// When the iteration stalls or hits the cap, the best iterate seen is
  /// still reported optimal if its worst residual is within this bound.
  double acceptable_tol = 1e-6;
  /// Prints one residual line per iteration to stderr.
  bool verbose = false;
};

struct ConicSolution {
  Status status = Status::NumericalFailure;
  std::vector<HermitianMatrix> blocks;
  std::vector<double> scalars;
  /// One multiplier per user constraint (sign convention of the Lagrangian
  /// objective - y * (expr - rhs)); empty unless optimal.
  std::vector<double> constraint_duals;
  double objective = 0.0;
  double dual_objective = 0.0;
  double max_violation = 0.0;
  double duality_gap = 0.0;
  double min_block_eigenvalue = 0.0;
  int iterations = 0;
  std::string diagnostics;

  bool optimal() const { return status == Status::Optimal; }
};

/// Primal-dual interior point (HKM direction, Mehrotra predictor-corrector).
ConicSolution solve(const ConicProblem& p, const SolverOptions& opts = {});

inline ConicSolution solve(const ConicProblem& p, double tol) {
  SolverOptions o;
  o.tol = tol;
  return solve(p, o);
}

/// True iff `solve` reports the problem infeasible at tolerance 1e-6.
bool infeasibility_probe(const ConicProblem& p);

}  // namespace relaybf::conic
