#include "relaybf/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

namespace relaybf::conic {

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "optimal";
    case Status::Infeasible:
      return "infeasible";
    case Status::NumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// AffineExpr / ConicProblem
// ---------------------------------------------------------------------------

AffineExpr& AffineExpr::add(BlockVar b, const CMatrix& coeff) {
  blocks_.push_back({b.index, coeff});
  return *this;
}

AffineExpr& AffineExpr::add(ScalarVar s, double coeff) {
  scalars_.push_back({s.index, coeff});
  return *this;
}

AffineExpr& AffineExpr::add_constant(double c) {
  constant_ += c;
  return *this;
}

double AffineExpr::evaluate(const std::vector<CMatrix>& blocks, const std::vector<double>& scalars) const {
  double v = constant_;
  for (const auto& t : blocks_) {
    v += real_trace_product(t.coeff, blocks.at(t.block));
  }
  for (const auto& t : scalars_) {
    v += t.coeff * scalars.at(t.scalar);
  }
  return v;
}

BlockVar ConicProblem::add_psd_block(std::string name, int dim) {
  if (dim < 1) {
    throw std::invalid_argument("add_psd_block: dimension must be >= 1");
  }
  block_dims_.push_back(dim);
  block_names_.push_back(std::move(name));
  return BlockVar{num_blocks() - 1};
}

ScalarVar ConicProblem::add_scalar(std::string name, ScalarSign sign) {
  scalar_signs_.push_back(sign);
  scalar_names_.push_back(std::move(name));
  return ScalarVar{num_scalars() - 1};
}

void ConicProblem::add_objective(const AffineExpr& expr) {
  for (const auto& t : expr.block_terms()) {
    objective_.add(BlockVar{t.block}, t.coeff);
  }
  for (const auto& t : expr.scalar_terms()) {
    objective_.add(ScalarVar{t.scalar}, t.coeff);
  }
  objective_.add_constant(expr.constant());
}

void ConicProblem::add_quadratic(double weight, AffineExpr expr) {
  quadratics_.push_back({weight, std::move(expr)});
}

void ConicProblem::add_constraint(AffineExpr expr, Sense sense, double rhs) {
  constraints_.push_back({std::move(expr), sense, rhs});
}

int ConicProblem::count_constraints(Sense sense) const {
  return static_cast<int>(
      std::count_if(constraints_.begin(), constraints_.end(), [&](const Constraint& c) { return c.sense == sense; }));
}

void ConicProblem::check_expr(const AffineExpr& e) const {
  for (const auto& t : e.block_terms()) {
    if (t.block < 0 || t.block >= num_blocks()) {
      throw std::invalid_argument("affine expression references undeclared block " + std::to_string(t.block));
    }
    const int n = block_dims_[t.block];
    if (t.coeff.rows() != n || t.coeff.cols() != n) {
      throw std::invalid_argument("coefficient shape does not match block '" + block_names_[t.block] + "'");
    }
    if (!t.coeff.allFinite()) {
      throw std::invalid_argument("non-finite coefficient on block '" + block_names_[t.block] + "'");
    }
  }
  for (const auto& t : e.scalar_terms()) {
    if (t.scalar < 0 || t.scalar >= num_scalars()) {
      throw std::invalid_argument("affine expression references undeclared scalar " + std::to_string(t.scalar));
    }
    if (!std::isfinite(t.coeff)) {
      throw std::invalid_argument("non-finite coefficient on scalar '" + scalar_names_[t.scalar] + "'");
    }
  }
  if (!std::isfinite(e.constant())) {
    throw std::invalid_argument("non-finite constant in affine expression");
  }
}

void ConicProblem::validate() const {
  check_expr(objective_);
  for (const auto& q : quadratics_) {
    if (!(q.weight >= 0.0) || !std::isfinite(q.weight)) {
      throw std::invalid_argument("quadratic weight must be finite and >= 0");
    }
    check_expr(q.expr);
  }
  for (const auto& c : constraints_) {
    check_expr(c.expr);
    if (!std::isfinite(c.rhs)) {
      throw std::invalid_argument("non-finite constraint right-hand side");
    }
  }
}

double ConicProblem::evaluate_objective(const std::vector<CMatrix>& blocks, const std::vector<double>& scalars) const {
  double v = objective_.evaluate(blocks, scalars);
  for (const auto& q : quadratics_) {
    const double e = q.expr.evaluate(blocks, scalars);
    v += q.weight * e * e;
  }
  return v;
}

double ConicProblem::max_violation(const std::vector<CMatrix>& blocks, const std::vector<double>& scalars) const {
  double worst = 0.0;
  for (const auto& c : constraints_) {
    const double lhs = c.expr.evaluate(blocks, scalars);
    double v = 0.0;
    switch (c.sense) {
      case Sense::Equal:
        v = std::abs(lhs - c.rhs);
        break;
      case Sense::LessEqual:
        v = std::max(0.0, lhs - c.rhs);
        break;
      case Sense::GreaterEqual:
        v = std::max(0.0, c.rhs - lhs);
        break;
    }
    worst = std::max(worst, v);
  }
  for (int s = 0; s < num_scalars(); ++s) {
    if (scalar_signs_[s] == ScalarSign::NonNegative) {
      worst = std::max(worst, -scalars.at(s));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Standard form:  min <C,X> + co'xo + cf'xf
//                 s.t. A(X) + Ao xo + Af xf = b,  X_j PSD, xo >= 0
// ---------------------------------------------------------------------------

namespace {

struct Row {
  std::vector<std::pair<int, CMatrix>> blocks;  // merged per block, Hermitian
};

struct StandardForm {
  std::vector<int> dims;
  int n_orth = 0;
  int n_free = 0;
  std::vector<Row> rows;
  RMatrix Ao;  // m x n_orth
  RMatrix Af;  // m x n_free
  RVector b;
  std::vector<CMatrix> C;
  RVector co;
  RVector cf;
  // map from user scalar -> (is_free, index)
  std::vector<std::pair<bool, int>> scalar_map;
  // user constraint -> standard row
  std::vector<int> constraint_row;
};

void add_block_term(Row& row, int block, const CMatrix& coeff) {
  for (auto& [j, a] : row.blocks) {
    if (j == block) {
      a += coeff;
      return;
    }
  }
  row.blocks.emplace_back(block, coeff);
}

int new_orth(StandardForm& sf) { return sf.n_orth++; }

StandardForm build_standard_form(const ConicProblem& p) {
  StandardForm sf;
  sf.dims.reserve(p.num_blocks() + p.quadratic_terms().size());
  for (int j = 0; j < p.num_blocks(); ++j) {
    sf.dims.push_back(p.block_dim(j));
  }
  for (int s = 0; s < p.num_scalars(); ++s) {
    if (p.scalar_sign(s) == ScalarSign::NonNegative) {
      sf.scalar_map.emplace_back(false, sf.n_orth++);
    } else {
      sf.scalar_map.emplace_back(true, sf.n_free++);
    }
  }

  struct PendingRow {
    Row row;
    std::vector<std::pair<int, double>> orth;
    std::vector<std::pair<int, double>> free;
    double b = 0.0;
  };
  std::vector<PendingRow> pending;

  auto fill_from_expr = [&](PendingRow& pr, const AffineExpr& e, double scale) {
    for (const auto& t : e.block_terms()) {
      add_block_term(pr.row, t.block, scale * hermitize(t.coeff));
    }
    for (const auto& t : e.scalar_terms()) {
      const auto [is_free, idx] = sf.scalar_map[t.scalar];
      (is_free ? pr.free : pr.orth).emplace_back(idx, scale * t.coeff);
    }
  };

  for (const auto& c : p.constraints()) {
    PendingRow pr;
    fill_from_expr(pr, c.expr, 1.0);
    pr.b = c.rhs - c.expr.constant();
    if (c.sense == Sense::LessEqual) {
      pr.orth.emplace_back(new_orth(sf), 1.0);
    } else if (c.sense == Sense::GreaterEqual) {
      pr.orth.emplace_back(new_orth(sf), -1.0);
    }
    sf.constraint_row.push_back(static_cast<int>(pending.size()));
    pending.push_back(std::move(pr));
  }

  // Objective (linear part).
  sf.C.resize(sf.dims.size());
  std::vector<std::pair<int, double>> obj_orth;
  std::vector<std::pair<int, double>> obj_free;
  for (const auto& t : p.objective().block_terms()) {
    CMatrix h = hermitize(t.coeff);
    if (sf.C[t.block].size() == 0) {
      sf.C[t.block] = h;
    } else {
      sf.C[t.block] += h;
    }
  }
  for (const auto& t : p.objective().scalar_terms()) {
    const auto [is_free, idx] = sf.scalar_map[t.scalar];
    (is_free ? obj_free : obj_orth).emplace_back(idx, t.coeff);
  }

  // Each weight*(e)^2 becomes a 2x2 block Q = [[s, g], [g*, 1]] with
  // Re g = sqrt(weight) * e and objective s.
  for (const auto& q : p.quadratic_terms()) {
    const int blk = static_cast<int>(sf.dims.size());
    sf.dims.push_back(2);
    CMatrix c11 = CMatrix::Zero(2, 2);
    c11(0, 0) = 1.0;
    sf.C.push_back(c11);

    PendingRow unit;
    CMatrix e22 = CMatrix::Zero(2, 2);
    e22(1, 1) = 1.0;
    add_block_term(unit.row, blk, e22);
    unit.b = 1.0;
    pending.push_back(std::move(unit));

    const double sw = std::sqrt(q.weight);
    PendingRow link;
    CMatrix off = CMatrix::Zero(2, 2);
    off(0, 1) = 0.5;
    off(1, 0) = 0.5;
    add_block_term(link.row, blk, off);
    fill_from_expr(link, q.expr, -sw);
    link.b = sw * q.expr.constant();
    pending.push_back(std::move(link));
  }

  for (size_t j = 0; j < sf.C.size(); ++j) {
    if (sf.C[j].size() == 0) {
      sf.C[j] = CMatrix::Zero(sf.dims[j], sf.dims[j]);
    }
  }

  const int m = static_cast<int>(pending.size());
  sf.rows.resize(m);
  sf.Ao = RMatrix::Zero(m, sf.n_orth);
  sf.Af = RMatrix::Zero(m, sf.n_free);
  sf.b = RVector::Zero(m);
  for (int i = 0; i < m; ++i) {
    sf.rows[i] = std::move(pending[i].row);
    for (auto [idx, v] : pending[i].orth) sf.Ao(i, idx) += v;
    for (auto [idx, v] : pending[i].free) sf.Af(i, idx) += v;
    sf.b(i) = pending[i].b;
  }
  sf.co = RVector::Zero(sf.n_orth);
  sf.cf = RVector::Zero(sf.n_free);
  for (auto [idx, v] : obj_orth) sf.co(idx) += v;
  for (auto [idx, v] : obj_free) sf.cf(idx) += v;
  return sf;
}

/// Real coordinates of the linear functional of row i, used for rank checks.
RMatrix functional_matrix(const StandardForm& sf) {
  std::vector<Eigen::Index> offset(sf.dims.size() + 1, 0);
  for (size_t j = 0; j < sf.dims.size(); ++j) {
    offset[j + 1] = offset[j] + 2 * static_cast<Eigen::Index>(sf.dims[j]) * sf.dims[j];
  }
  const Eigen::Index nb = offset.back();
  const Eigen::Index m = static_cast<Eigen::Index>(sf.rows.size());
  RMatrix F = RMatrix::Zero(m, nb + sf.n_orth + sf.n_free);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (const auto& [j, a] : sf.rows[i].blocks) {
      const Eigen::Index n2 = a.size();
      for (Eigen::Index e = 0; e < n2; ++e) {
        F(i, offset[j] + e) = a.data()[e].real();
        F(i, offset[j] + n2 + e) = a.data()[e].imag();
      }
    }
    F.block(i, nb, 1, sf.n_orth) = sf.Ao.row(i);
    F.block(i, nb + sf.n_orth, 1, sf.n_free) = sf.Af.row(i);
  }
  return F;
}

/// Step to the boundary of the PSD cone: max alpha with X + alpha dX PSD.
double max_step_psd(const Eigen::LLT<CMatrix>& llt_x, const CMatrix& dx) {
  const CMatrix L = llt_x.matrixL();
  CMatrix w = L.triangularView<Eigen::Lower>().solve(dx);
  w = L.triangularView<Eigen::Lower>().solve(w.adjoint().eval()).adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(w), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step_orth(const RVector& x, const RVector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

class InteriorPoint {
 public:
  InteriorPoint(const StandardForm& sf, const SolverOptions& opts) : sf_(sf), opts_(opts) {
    m_ = static_cast<int>(sf.rows.size());
    nb_ = static_cast<int>(sf.dims.size());
    rows_of_block_.resize(nb_);
    for (int i = 0; i < m_; ++i) {
      for (size_t t = 0; t < sf.rows[i].blocks.size(); ++t) {
        rows_of_block_[sf.rows[i].blocks[t].first].push_back({i, static_cast<int>(t)});
      }
    }
  }

  struct Result {
    Status status = Status::NumericalFailure;
    std::vector<CMatrix> X;
    RVector xo, xf, y;
    double pobj = 0.0, dobj = 0.0;
    int iterations = 0;
    std::string diagnostics;
  };

  Result run();

 private:
  struct RowRef {
    int row;
    int term;
  };

  const CMatrix& coeff(const RowRef& r) const { return sf_.rows[r.row].blocks[r.term].second; }

  // A(X)_i = sum_j <A_ij, X_j>
  RVector apply_A(const std::vector<CMatrix>& X, const RVector& xo, const RVector& xf) const {
    RVector out = RVector::Zero(m_);
    for (int j = 0; j < nb_; ++j) {
      for (const auto& r : rows_of_block_[j]) out(r.row) += real_trace_product(coeff(r), X[j]);
    }
    if (sf_.n_orth > 0) out += sf_.Ao * xo;
    if (sf_.n_free > 0) out += sf_.Af * xf;
    return out;
  }

  CMatrix apply_At_block(int j, const RVector& y) const {
    CMatrix out = CMatrix::Zero(sf_.dims[j], sf_.dims[j]);
    for (const auto& r : rows_of_block_[j]) out += y(r.row) * coeff(r);
    return out;
  }

  double inner(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) const {
    double s = 0.0;
    for (int j = 0; j < nb_; ++j) s += real_trace_product(a[j], b[j]);
    return s;
  }

  bool primal_infeasibility_certificate(const RVector& y) const;

  const StandardForm& sf_;
  SolverOptions opts_;
  int m_ = 0;
  int nb_ = 0;
  std::vector<std::vector<RowRef>> rows_of_block_;
};

bool InteriorPoint::primal_infeasibility_certificate(const RVector& y) const {
  const double by = sf_.b.dot(y);
  if (!(by > 0.0)) return false;
  const RVector yh = y / by;
  const double eps = 1e-8;
  for (int j = 0; j < nb_; ++j) {
    CMatrix w = -apply_At_block(j, yh);
    if (min_eigenvalue(w) < -eps) return false;
  }
  if (sf_.n_orth > 0) {
    const RVector wo = -(sf_.Ao.transpose() * yh);
    if (wo.minCoeff() < -eps) return false;
  }
  if (sf_.n_free > 0) {
    const RVector wf = sf_.Af.transpose() * yh;
    if (wf.cwiseAbs().maxCoeff() > eps) return false;
  }
  return true;
}

InteriorPoint::Result InteriorPoint::run() {
  Result res;
  const int no = sf_.n_orth;
  const int nf = sf_.n_free;

  double nu = no;
  for (int d : sf_.dims) nu += d;

  std::vector<CMatrix> X(nb_), Z(nb_);
  for (int j = 0; j < nb_; ++j) {
    const double n = sf_.dims[j];
    const double xi = std::max(10.0, n);
    const double eta = std::max({10.0, std::sqrt(n), sf_.C[j].norm()});
    X[j] = xi * CMatrix::Identity(sf_.dims[j], sf_.dims[j]);
    Z[j] = eta * CMatrix::Identity(sf_.dims[j], sf_.dims[j]);
  }
  RVector xo = RVector::Constant(no, 10.0);
  RVector zo = RVector::Constant(no, std::max(10.0, no > 0 ? sf_.co.cwiseAbs().maxCoeff() : 0.0));
  RVector xf = RVector::Zero(nf);
  RVector y = RVector::Zero(m_);

  const double bnorm = sf_.b.norm();
  double cnorm = sf_.co.squaredNorm() + sf_.cf.squaredNorm();
  for (const auto& c : sf_.C) cnorm += c.squaredNorm();
  cnorm = std::sqrt(cnorm);

  std::vector<CMatrix> Zinv(nb_), Rd(nb_), dX(nb_), dZ(nb_), dXa(nb_), dZa(nb_), Rc(nb_);
  std::vector<Eigen::LLT<CMatrix>> llt_x(nb_), llt_z(nb_);

  struct {
    double worst = std::numeric_limits<double>::infinity();
    int it = 0;
    Result res;
  } best;
  // Falls back to the best iterate when it meets the relaxed tolerance.
  auto finish_inaccurate = [&](Result r) {
    if (best.worst <= std::max(opts_.tol, opts_.acceptable_tol)) {
      Result b = best.res;
      b.status = Status::Optimal;
      b.iterations = r.iterations;
      b.diagnostics = "reduced accuracy (" + r.diagnostics + "; residual " + std::to_string(best.worst) +
                      " at iteration " + std::to_string(best.it) + ")";
      return b;
    }
    return r;
  };

  int stall = 0;
  for (int it = 0; it <= opts_.max_iterations; ++it) {
    res.iterations = it;
    for (int j = 0; j < nb_; ++j) {
      llt_x[j].compute(X[j]);
      llt_z[j].compute(Z[j]);
      if (llt_x[j].info() != Eigen::Success || llt_z[j].info() != Eigen::Success) {
        res.status = Status::NumericalFailure;
        res.diagnostics = "iterate left the PSD cone at iteration " + std::to_string(it);
        res.X = X, res.xo = xo, res.xf = xf, res.y = y;
        return finish_inaccurate(res);
      }
      Zinv[j] = llt_z[j].solve(CMatrix::Identity(sf_.dims[j], sf_.dims[j]));
    }

    // Residuals.
    const RVector rp = sf_.b - apply_A(X, xo, xf);
    double rd_norm2 = 0.0;
    for (int j = 0; j < nb_; ++j) {
      Rd[j] = sf_.C[j] - apply_At_block(j, y) - Z[j];
      rd_norm2 += Rd[j].squaredNorm();
    }
    const RVector rdo = no > 0 ? RVector(sf_.co - sf_.Ao.transpose() * y - zo) : RVector();
    const RVector rf = nf > 0 ? RVector(sf_.cf - sf_.Af.transpose() * y) : RVector();
    if (no > 0) rd_norm2 += rdo.squaredNorm();
    if (nf > 0) rd_norm2 += rf.squaredNorm();

    const double pobj = inner(sf_.C, X) + (no > 0 ? sf_.co.dot(xo) : 0.0) + (nf > 0 ? sf_.cf.dot(xf) : 0.0);
    const double dobj = sf_.b.dot(y);
    const double xz = inner(X, Z) + (no > 0 ? xo.dot(zo) : 0.0);
    const double mu = xz / nu;

    const double pinf = rp.norm() / (1.0 + bnorm);
    const double dinf = std::sqrt(rd_norm2) / (1.0 + cnorm);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    res.pobj = pobj;
    res.dobj = dobj;
    const double worst = std::max({pinf, dinf, gap});
    if (worst < best.worst) {
      best.worst = worst;
      best.it = it;
      best.res.X = X, best.res.xo = xo, best.res.xf = xf, best.res.y = y;
      best.res.pobj = pobj;
      best.res.dobj = dobj;
    }
    if (opts_.verbose) {
      std::fprintf(stderr, "%3d pobj %+.6e dobj %+.6e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", it, pobj, dobj, pinf,
                   dinf, gap, mu);
    }

    if (pinf <= opts_.tol && dinf <= opts_.tol && gap <= opts_.tol) {
      res.status = Status::Optimal;
      res.X = X, res.xo = xo, res.xf = xf, res.y = y;
      return res;
    }
    if (primal_infeasibility_certificate(y) && dobj > 1e3 * (1.0 + std::abs(pobj))) {
      res.status = Status::Infeasible;
      res.diagnostics = "dual ray certifies primal infeasibility";
      return res;
    }
    if (pinf <= opts_.tol && pobj < -1e10 * (1.0 + bnorm)) {
      res.status = Status::NumericalFailure;
      res.diagnostics = "primal objective unbounded below";
      res.X = X, res.xo = xo, res.xf = xf, res.y = y;
      return res;
    }
    if (it == opts_.max_iterations) break;

    // Schur complement M_ik = sum_j re tr(A_ij X_j A_kj Z_j^-1) + Ao diag(xo/zo) Ao'.
    RMatrix M = RMatrix::Zero(m_, m_);
    for (int j = 0; j < nb_; ++j) {
      const auto& refs = rows_of_block_[j];
      std::vector<CMatrix> G(refs.size());
      for (size_t a = 0; a < refs.size(); ++a) G[a] = X[j] * coeff(refs[a]) * Zinv[j];
      for (size_t a = 0; a < refs.size(); ++a) {
        for (size_t c = a; c < refs.size(); ++c) {
          const double v = real_trace_product(coeff(refs[a]), G[c]);
          M(refs[a].row, refs[c].row) += v;
          if (c != a) M(refs[c].row, refs[a].row) += v;
        }
      }
    }
    RVector xo_zo;
    if (no > 0) {
      xo_zo = xo.cwiseQuotient(zo);
      M += sf_.Ao * xo_zo.asDiagonal() * sf_.Ao.transpose();
    }
    M = 0.5 * (M + M.transpose()).eval();

    RMatrix K = RMatrix::Zero(m_ + nf, m_ + nf);
    K.topLeftCorner(m_, m_) = M;
    if (nf > 0) {
      K.topRightCorner(m_, nf) = sf_.Af;
      K.bottomLeftCorner(nf, m_) = sf_.Af.transpose();
    }
    // Tiny diagonal regularization keeps the factorization defined when M is
    // near singular late in the run.
    const double reg = 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    K.topLeftCorner(m_, m_).diagonal().array() += reg;
    Eigen::FullPivLU<RMatrix> lu(K);

    // Solves the Newton system for a given complementarity right-hand side.
    auto direction = [&](const std::vector<CMatrix>& rc, const RVector& rco, RVector& dy, RVector& dxf,
                         std::vector<CMatrix>& dXo, std::vector<CMatrix>& dZo, RVector& dxo, RVector& dzo) {
      std::vector<CMatrix> H(nb_);
      for (int j = 0; j < nb_; ++j) H[j] = (rc[j] - X[j] * Rd[j]) * Zinv[j];
      RVector ho;
      if (no > 0) ho = (rco - xo.cwiseProduct(rdo)).cwiseQuotient(zo);
      RVector rhs(m_ + nf);
      RVector ah = RVector::Zero(m_);
      for (int j = 0; j < nb_; ++j) {
        for (const auto& r : rows_of_block_[j]) ah(r.row) += real_trace_product(coeff(r), H[j]);
      }
      if (no > 0) ah += sf_.Ao * ho;
      rhs.head(m_) = rp - ah;
      if (nf > 0) rhs.tail(nf) = rf;
      const RVector sol = lu.solve(rhs);
      dy = sol.head(m_);
      dxf = nf > 0 ? RVector(sol.tail(nf)) : RVector();
      for (int j = 0; j < nb_; ++j) {
        dZo[j] = Rd[j] - apply_At_block(j, dy);
        dXo[j] = hermitize((rc[j] - X[j] * dZo[j]) * Zinv[j]);
      }
      if (no > 0) {
        dzo = rdo - sf_.Ao.transpose() * dy;
        dxo = (rco - xo.cwiseProduct(dzo)).cwiseQuotient(zo);
      }
    };

    auto step_lengths = [&](const std::vector<CMatrix>& dx, const std::vector<CMatrix>& dz, const RVector& dxo,
                            const RVector& dzo, double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = std::numeric_limits<double>::infinity();
      for (int j = 0; j < nb_; ++j) {
        ap = std::min(ap, max_step_psd(llt_x[j], dx[j]));
        ad = std::min(ad, max_step_psd(llt_z[j], dz[j]));
      }
      if (no > 0) {
        ap = std::min(ap, max_step_orth(xo, dxo));
        ad = std::min(ad, max_step_orth(zo, dzo));
      }
    };

    // Predictor.
    for (int j = 0; j < nb_; ++j) Rc[j] = -X[j] * Z[j];
    RVector rco = no > 0 ? RVector(-xo.cwiseProduct(zo)) : RVector();
    RVector dy, dxf, dxo, dzo;
    std::vector<CMatrix> dXp(nb_), dZp(nb_);
    direction(Rc, rco, dy, dxf, dXp, dZp, dxo, dzo);
    double ap = 0.0, ad = 0.0;
    step_lengths(dXp, dZp, dxo, dzo, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double xz_aff = 0.0;
    for (int j = 0; j < nb_; ++j) xz_aff += real_trace_product(X[j] + ap * dXp[j], Z[j] + ad * dZp[j]);
    if (no > 0) xz_aff += (xo + ap * dxo).dot(zo + ad * dzo);
    const double mu_aff = std::max(0.0, xz_aff / nu);
    double sigma = std::pow(mu_aff / mu, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    for (int j = 0; j < nb_; ++j) {
      Rc[j] = sigma * mu * CMatrix::Identity(sf_.dims[j], sf_.dims[j]) - X[j] * Z[j] - dXp[j] * dZp[j];
    }
    if (no > 0) rco = RVector::Constant(no, sigma * mu) - xo.cwiseProduct(zo) - dxo.cwiseProduct(dzo);
    RVector dyc, dxfc, dxoc, dzoc;
    direction(Rc, rco, dyc, dxfc, dX, dZ, dxoc, dzoc);
    step_lengths(dX, dZ, dxoc, dzoc, ap, ad);
    const double gamma = 0.95;
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);

    if (ap < 1e-10 && ad < 1e-10) {
      if (++stall >= 3) {
        res.diagnostics = "step length stalled";
        break;
      }
    } else {
      stall = 0;
    }

    // The eigenvalue-based step can still land on a numerically singular
    // iterate when X or Z is badly conditioned; back off until both factor.
    std::vector<CMatrix> Xn(nb_), Zn(nb_);
    bool factored = false;
    for (int tries = 0; tries < 30 && !factored; ++tries) {
      factored = true;
      for (int j = 0; j < nb_ && factored; ++j) {
        Xn[j] = hermitize(X[j] + ap * dX[j]);
        Zn[j] = hermitize(Z[j] + ad * dZ[j]);
        factored = Eigen::LLT<CMatrix>(Xn[j]).info() == Eigen::Success &&
                   Eigen::LLT<CMatrix>(Zn[j]).info() == Eigen::Success;
      }
      if (!factored) {
        ap *= 0.7;
        ad *= 0.7;
      }
    }
    if (!factored) {
      res.diagnostics = "no step keeps the iterate positive definite at iteration " + std::to_string(it);
      break;
    }
    X.swap(Xn);
    Z.swap(Zn);
    if (no > 0) {
      xo += ap * dxoc;
      zo += ad * dzoc;
    }
    if (nf > 0) xf += ap * dxfc;
    y += ad * dyc;
  }

  res.status = Status::NumericalFailure;
  if (res.diagnostics.empty()) {
    res.diagnostics = "iteration cap of " + std::to_string(opts_.max_iterations) + " reached";
  }
  res.X = X, res.xo = xo, res.xf = xf, res.y = y;
  return finish_inaccurate(res);
}

}  // namespace

ConicSolution solve(const ConicProblem& p, const SolverOptions& opts) {
  p.validate();
  ConicSolution out;
  StandardForm sf = build_standard_form(p);
  const int m_all = static_cast<int>(sf.rows.size());

  // Free scalars that appear in no constraint: fixed at 0 unless their cost
  // makes the problem unbounded.
  for (int f = 0; f < sf.n_free; ++f) {
    if (m_all == 0 || sf.Af.col(f).cwiseAbs().maxCoeff() == 0.0) {
      if (sf.cf(f) != 0.0) {
        out.status = Status::NumericalFailure;
        out.diagnostics = "free scalar with nonzero cost appears in no constraint: unbounded";
        return out;
      }
    }
  }

  // Linear dependence among rows: drop redundant rows, flag inconsistent ones.
  std::vector<int> keep;
  if (m_all > 0) {
    const RMatrix F = functional_matrix(sf);
    RMatrix Fb(F.rows(), F.cols() + 1);
    Fb << F, sf.b;
    const double thr = 1e-11;
    Eigen::ColPivHouseholderQR<RMatrix> qr(F.transpose());
    qr.setThreshold(thr);
    Eigen::ColPivHouseholderQR<RMatrix> qrb(Fb.transpose());
    qrb.setThreshold(thr);
    const auto rank = qr.rank();
    if (qrb.rank() > rank) {
      out.status = Status::Infeasible;
      out.diagnostics = "linear constraints are inconsistent";
      return out;
    }
    for (Eigen::Index i = 0; i < rank; ++i) keep.push_back(static_cast<int>(qr.colsPermutation().indices()(i)));
    std::sort(keep.begin(), keep.end());
  }

  StandardForm red;
  red.dims = sf.dims;
  red.n_orth = sf.n_orth;
  red.n_free = sf.n_free;
  red.C = sf.C;
  red.co = sf.co;
  red.cf = sf.cf;
  const int m = static_cast<int>(keep.size());
  red.rows.resize(m);
  red.Ao = RMatrix::Zero(m, sf.n_orth);
  red.Af = RMatrix::Zero(m, sf.n_free);
  red.b = RVector::Zero(m);
  std::vector<double> row_scale(m, 1.0);
  for (int r = 0; r < m; ++r) {
    const int i = keep[r];
    double s2 = sf.Ao.row(i).squaredNorm() + sf.Af.row(i).squaredNorm();
    for (const auto& [j, a] : sf.rows[i].blocks) s2 += a.squaredNorm();
    const double s = s2 > 0.0 ? std::sqrt(s2) : 1.0;
    row_scale[r] = s;
    red.rows[r] = sf.rows[i];
    for (auto& [j, a] : red.rows[r].blocks) a /= s;
    red.Ao.row(r) = sf.Ao.row(i) / s;
    red.Af.row(r) = sf.Af.row(i) / s;
    red.b(r) = sf.b(i) / s;
  }
  // Scale data so that |b| and |C| are O(1).
  const double b_scale = std::max(1.0, m > 0 ? red.b.cwiseAbs().maxCoeff() : 0.0);
  double c_max = std::max(red.co.size() ? red.co.cwiseAbs().maxCoeff() : 0.0,
                          red.cf.size() ? red.cf.cwiseAbs().maxCoeff() : 0.0);
  for (const auto& c : red.C) c_max = std::max(c_max, c.cwiseAbs().maxCoeff());
  const double c_scale = std::max(1.0, c_max);
  red.b /= b_scale;
  for (auto& c : red.C) c /= c_scale;
  red.co /= c_scale;
  red.cf /= c_scale;

  InteriorPoint ipm(red, opts);
  auto r = ipm.run();
  out.iterations = r.iterations;
  out.diagnostics = r.diagnostics;
  out.status = r.status;
  if (r.status == Status::Infeasible) {
    return out;
  }

  const int nb_user = p.num_blocks();
  out.blocks.resize(nb_user);
  double min_eig = std::numeric_limits<double>::infinity();
  for (int j = 0; j < nb_user; ++j) {
    out.blocks[j] = b_scale * r.X[j];
    min_eig = std::min(min_eig, min_eigenvalue(out.blocks[j]));
  }
  out.min_block_eigenvalue = nb_user > 0 ? min_eig : 0.0;
  out.scalars.resize(p.num_scalars());
  for (int s = 0; s < p.num_scalars(); ++s) {
    const auto [is_free, idx] = sf.scalar_map[s];
    out.scalars[s] = b_scale * (is_free ? r.xf(idx) : r.xo(idx));
  }
  out.objective = p.evaluate_objective(out.blocks, out.scalars);
  out.max_violation = p.max_violation(out.blocks, out.scalars);
  const double scale = b_scale * c_scale;
  // Constant terms of the objective cancel in the gap.
  out.duality_gap = std::abs(r.pobj - r.dobj) * scale;
  out.dual_objective = out.objective - (r.pobj - r.dobj) * scale;

  std::vector<double> full_y(m_all, 0.0);
  for (int k = 0; k < m; ++k) full_y[keep[k]] = r.y(k) * c_scale / row_scale[k];
  out.constraint_duals.resize(p.constraints().size());
  for (size_t c = 0; c < p.constraints().size(); ++c) {
    out.constraint_duals[c] = full_y[sf.constraint_row[c]];
  }

  if (out.status == Status::Optimal) {
    std::ostringstream os;
    os << "optimal after " << r.iterations << " iterations";
    out.diagnostics = os.str();
  }
  return out;
}

bool infeasibility_probe(const ConicProblem& p) {
  SolverOptions o;
  o.tol = 1e-6;
  return solve(p, o).status == Status::Infeasible;
}

}  // namespace relaybf::conic
