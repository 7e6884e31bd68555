// SPDX-License-Identifier: Apache-2.0

#include "isac/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace isac::solver {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Variable layout.
//
// Scalars take one real slot. A Hermitian dim x dim block takes dim^2 slots:
// the dim diagonal entries, then (re, im) per upper-triangle entry in row
// order. A reduced complex vector of length r takes 2r slots (re, im pairs).
// ---------------------------------------------------------------------------

struct Layout {
  std::vector<int> scalar_off;
  std::vector<int> matrix_off;
  std::vector<int> vector_off;
  int total = 0;

  explicit Layout(const SubproblemSpec& spec) {
    for (const auto& s : spec.scalars) {
      (void)s;
      scalar_off.push_back(total);
      total += 1;
    }
    for (const auto& m : spec.matrices) {
      matrix_off.push_back(total);
      total += m.dim * m.dim;
    }
    for (const auto& v : spec.vectors) {
      vector_off.push_back(total);
      total += 2 * static_cast<int>(v.basis.cols());
    }
  }
};

Eigen::VectorXd flatten(const SubproblemSpec& spec, const Layout& lay,
                        const Point& p) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(lay.total);
  for (std::size_t s = 0; s < spec.scalars.size(); ++s) {
    x(lay.scalar_off[s]) = p.scalars[s];
  }
  for (std::size_t m = 0; m < spec.matrices.size(); ++m) {
    const int d = spec.matrices[m].dim;
    const auto& Q = p.matrices[m];
    int off = lay.matrix_off[m];
    for (int i = 0; i < d; ++i) x(off + i) = std::real(Q(i, i));
    int pos = off + d;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        x(pos++) = std::real(Q(i, j));
        x(pos++) = std::imag(Q(i, j));
      }
    }
  }
  for (std::size_t v = 0; v < spec.vectors.size(); ++v) {
    const int r = static_cast<int>(spec.vectors[v].basis.cols());
    for (int j = 0; j < r; ++j) {
      x(lay.vector_off[v] + 2 * j) = std::real(p.vectors[v](j));
      x(lay.vector_off[v] + 2 * j + 1) = std::imag(p.vectors[v](j));
    }
  }
  return x;
}

Point unflatten(const SubproblemSpec& spec, const Layout& lay,
                const Eigen::VectorXd& x) {
  Point p;
  p.scalars.resize(spec.scalars.size());
  for (std::size_t s = 0; s < spec.scalars.size(); ++s) {
    p.scalars[s] = x(lay.scalar_off[s]);
  }
  p.matrices.resize(spec.matrices.size());
  for (std::size_t m = 0; m < spec.matrices.size(); ++m) {
    const int d = spec.matrices[m].dim;
    Eigen::MatrixXcd Q(d, d);
    const int off = lay.matrix_off[m];
    for (int i = 0; i < d; ++i) Q(i, i) = x(off + i);
    int pos = off + d;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        const std::complex<double> z(x(pos), x(pos + 1));
        pos += 2;
        Q(i, j) = z;
        Q(j, i) = std::conj(z);
      }
    }
    p.matrices[m] = Q;
  }
  p.vectors.resize(spec.vectors.size());
  for (std::size_t v = 0; v < spec.vectors.size(); ++v) {
    const int r = static_cast<int>(spec.vectors[v].basis.cols());
    Eigen::VectorXcd vec(r);
    for (int j = 0; j < r; ++j) {
      vec(j) = {x(lay.vector_off[v] + 2 * j), x(lay.vector_off[v] + 2 * j + 1)};
    }
    p.vectors[v] = vec;
  }
  return p;
}

// Dense compiled form of an AffineExpr: value = grad . x + constant.
struct CompiledAffine {
  Eigen::VectorXd grad;
  double constant = 0.0;

  double value(const Eigen::VectorXd& x) const { return grad.dot(x) + constant; }
};

CompiledAffine compile_affine(const SubproblemSpec& spec, const Layout& lay,
                              const AffineExpr& e) {
  CompiledAffine c;
  c.constant = e.constant;
  c.grad = Eigen::VectorXd::Zero(lay.total);
  for (const auto& [id, coeff] : e.scalars) c.grad(lay.scalar_off[id]) += coeff;
  for (const auto& [id, A] : e.matrices) {
    const int d = spec.matrices[id].dim;
    if (A.rows() != d || A.cols() != d) throw std::invalid_argument("affine matrix weight dimension mismatch");
    const int off = lay.matrix_off[id];
    for (int i = 0; i < d; ++i) c.grad(off + i) += std::real(A(i, i));
    int pos = off + d;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        c.grad(pos++) += 2.0 * std::real(A(i, j));
        c.grad(pos++) += 2.0 * std::imag(A(i, j));
      }
    }
  }
  for (const auto& [id, coeff] : e.vectors) {
    const auto& basis = spec.vectors[id].basis;
    if (coeff.size() != basis.rows()) throw std::invalid_argument("affine vector weight dimension mismatch");
    const Eigen::VectorXcd reduced = basis.adjoint() * coeff;
    const int off = lay.vector_off[id];
    for (int j = 0; j < reduced.size(); ++j) {
      c.grad(off + 2 * j) += std::real(reduced(j));
      c.grad(off + 2 * j + 1) += std::imag(reduced(j));
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Schur blocks.
//
// S(x) = [[Q, w], [w^H, 1]] is Hermitian of size p = dim + 1. The PSD
// constraint is the real symmetric embedding T = [[Re S, -Im S], [Im S, Re S]]
// of size 2p; since the embedding is a *-homomorphism, log det T = 2 log det S
// and every trace identity transfers, so all barrier quantities are computed
// in the complex space.
// ---------------------------------------------------------------------------

struct SparseHerm {
  // Entries (row, col, value) of a Hermitian derivative dS/dparam.
  std::vector<std::tuple<int, int, std::complex<double>>> entries;
};

struct CompiledBlock {
  int matrix = -1;
  int vector = -1;
  int dim = 0;  // p = dim + 1 including the unit corner
  std::vector<std::pair<int, SparseHerm>> params;  // global index -> dS
};

CompiledBlock compile_block(const SubproblemSpec& spec, const Layout& lay,
                            const SchurBlock& blk) {
  CompiledBlock cb;
  cb.matrix = blk.matrix;
  cb.vector = blk.vector;
  const int d = spec.matrices[blk.matrix].dim;
  cb.dim = d;
  const int moff = lay.matrix_off[blk.matrix];
  for (int i = 0; i < d; ++i) {
    SparseHerm s;
    s.entries.emplace_back(i, i, 1.0);
    cb.params.emplace_back(moff + i, std::move(s));
  }
  int pos = moff + d;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      SparseHerm re;
      re.entries.emplace_back(i, j, 1.0);
      re.entries.emplace_back(j, i, 1.0);
      cb.params.emplace_back(pos++, std::move(re));
      SparseHerm im;
      im.entries.emplace_back(i, j, std::complex<double>(0.0, 1.0));
      im.entries.emplace_back(j, i, std::complex<double>(0.0, -1.0));
      cb.params.emplace_back(pos++, std::move(im));
    }
  }
  if (blk.vector >= 0) {
    const auto& basis = spec.vectors[blk.vector].basis;
    if (basis.rows() != d) throw std::invalid_argument("Schur block vector dimension mismatch");
    const int voff = lay.vector_off[blk.vector];
    for (int j = 0; j < basis.cols(); ++j) {
      SparseHerm re, im;
      for (int m = 0; m < d; ++m) {
        const std::complex<double> b = basis(m, j);
        if (b == std::complex<double>(0.0, 0.0)) continue;
        re.entries.emplace_back(m, d, b);
        re.entries.emplace_back(d, m, std::conj(b));
        const std::complex<double> jb = std::complex<double>(0.0, 1.0) * b;
        im.entries.emplace_back(m, d, jb);
        im.entries.emplace_back(d, m, std::conj(jb));
      }
      cb.params.emplace_back(voff + 2 * j, std::move(re));
      cb.params.emplace_back(voff + 2 * j + 1, std::move(im));
    }
  }
  return cb;
}

Eigen::MatrixXcd assemble_block(const SubproblemSpec& spec, const CompiledBlock& cb,
                                const Point& p) {
  const int d = cb.dim;
  Eigen::MatrixXcd S(d + 1, d + 1);
  S.topLeftCorner(d, d) = p.matrices[cb.matrix];
  Eigen::VectorXcd w = Eigen::VectorXcd::Zero(d);
  if (cb.vector >= 0) w = spec.vectors[cb.vector].basis * p.vectors[cb.vector];
  S.block(0, d, d, 1) = w;
  S.block(d, 0, 1, d) = w.adjoint();
  S(d, d) = 1.0;
  return S;
}

// log det of the Hermitian block via LLT; -inf when not positive definite.
double block_logdet(const Eigen::MatrixXcd& S) {
  Eigen::LLT<Eigen::MatrixXcd> llt(S);
  if (llt.info() != Eigen::Success) return -kInf;
  double ld = 0.0;
  const auto& L = llt.matrixLLT();
  for (int i = 0; i < S.rows(); ++i) {
    const double piv = std::real(L(i, i));
    if (!(piv > 0.0)) return -kInf;
    ld += std::log(piv);
  }
  return 2.0 * ld;
}

// ---------------------------------------------------------------------------
// Compiled problem: everything solve(), kkt_residual() and the feasibility
// helpers need, precomputed once per spec.
// ---------------------------------------------------------------------------

struct Compiled {
  Layout lay;
  std::vector<CompiledAffine> ineqs;
  std::vector<CompiledAffine> cone_affines;
  std::vector<int> cone_scalar_idx;  // flattened index of the squared scalar
  std::vector<CompiledBlock> blocks;
  std::vector<std::pair<int, double>> bounds;  // (flat index, lower)
  CompiledAffine obj_linear;
  double barrier_count = 0.0;

  explicit Compiled(const SubproblemSpec& spec) : lay(spec) {
    obj_linear = compile_affine(spec, lay, spec.objective.linear);
    for (const auto& e : spec.inequalities) ineqs.push_back(compile_affine(spec, lay, e));
    for (const auto& c : spec.cones) {
      cone_affines.push_back(compile_affine(spec, lay, c.value));
      cone_scalar_idx.push_back(lay.scalar_off[c.scalar]);
    }
    for (const auto& b : spec.schur_blocks) blocks.push_back(compile_block(spec, lay, b));
    for (std::size_t s = 0; s < spec.scalars.size(); ++s) {
      if (std::isfinite(spec.scalars[s].lower)) {
        bounds.emplace_back(lay.scalar_off[s], spec.scalars[s].lower);
      }
    }
    barrier_count = static_cast<double>(ineqs.size()) +
                    static_cast<double>(bounds.size()) +
                    2.0 * static_cast<double>(cone_affines.size());
    for (const auto& b : blocks) barrier_count += 2.0 * (b.dim + 1);
  }
};

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};

ObjectiveEval eval_objective_flat(const SubproblemSpec& spec, const Compiled& c,
                                  const Eigen::VectorXd& x, bool with_grad) {
  ObjectiveEval out;
  if (with_grad) out.grad = Eigen::VectorXd::Zero(c.lay.total);
  const auto& obj = spec.objective;
  out.value += c.obj_linear.value(x);
  if (with_grad) out.grad += c.obj_linear.grad;
  if (obj.log_weight != 0.0) {
    for (int id : obj.log_scalars) {
      const double r = x(c.lay.scalar_off[id]);
      out.value += obj.log_weight * std::log2(1.0 + r);
      if (with_grad) out.grad(c.lay.scalar_off[id]) += obj.log_weight / ((1.0 + r) * kLn2);
    }
  }
  if (obj.inv_weight != 0.0) {
    for (const auto& group : obj.inv_groups) {
      double sum = 0.0;
      for (int id : group) sum += x(c.lay.scalar_off[id]);
      out.value -= obj.inv_weight / sum;
      if (with_grad) {
        const double g = obj.inv_weight / (sum * sum);
        for (int id : group) out.grad(c.lay.scalar_off[id]) += g;
      }
    }
  }
  return out;
}

// Hessian contribution of the objective times factor t (in place).
void add_objective_hessian(const SubproblemSpec& spec, const Compiled& c,
                           const Eigen::VectorXd& x, double t, Eigen::MatrixXd& H) {
  const auto& obj = spec.objective;
  if (obj.log_weight != 0.0) {
    for (int id : obj.log_scalars) {
      const int ix = c.lay.scalar_off[id];
      const double r = x(ix);
      H(ix, ix) -= t * obj.log_weight / ((1.0 + r) * (1.0 + r) * kLn2);
    }
  }
  if (obj.inv_weight != 0.0) {
    for (const auto& group : obj.inv_groups) {
      double sum = 0.0;
      for (int id : group) sum += x(c.lay.scalar_off[id]);
      const double h = -2.0 * t * obj.inv_weight / (sum * sum * sum);
      for (int a : group) {
        for (int b : group) H(c.lay.scalar_off[a], c.lay.scalar_off[b]) += h;
      }
    }
  }
}

// Barrier-augmented merit t*f + sum log(slacks); -inf outside the interior.
double eval_merit(const SubproblemSpec& spec, const Compiled& c,
                  const Eigen::VectorXd& x, double t, const Point& p) {
  double phi = t * eval_objective_flat(spec, c, x, false).value;
  for (const auto& e : c.ineqs) {
    const double s = e.value(x);
    if (!(s > 0.0)) return -kInf;
    phi += std::log(s);
  }
  for (const auto& [idx, lower] : c.bounds) {
    const double s = x(idx) - lower;
    if (!(s > 0.0)) return -kInf;
    phi += std::log(s);
  }
  for (std::size_t q = 0; q < c.cone_affines.size(); ++q) {
    const double g = x(c.cone_scalar_idx[q]);
    const double s = c.cone_affines[q].value(x) - g * g;
    if (!(s > 0.0)) return -kInf;
    phi += std::log(s);
  }
  for (const auto& b : c.blocks) {
    const double ld = block_logdet(assemble_block(spec, b, p));
    if (ld == -kInf) return -kInf;
    phi += ld;
  }
  return phi;
}

}  // namespace

int SubproblemSpec::num_real_vars() const { return Layout(*this).total; }

Eigen::VectorXcd Point::ambient(const SubproblemSpec& spec, int vec_id) const {
  return spec.vectors[vec_id].basis * vectors[vec_id];
}

Point zero_point(const SubproblemSpec& spec) {
  Point p;
  p.scalars.assign(spec.scalars.size(), 0.0);
  for (const auto& m : spec.matrices) {
    p.matrices.push_back(Eigen::MatrixXcd::Zero(m.dim, m.dim));
  }
  for (const auto& v : spec.vectors) {
    p.vectors.push_back(Eigen::VectorXcd::Zero(v.basis.cols()));
  }
  return p;
}

double eval_affine(const SubproblemSpec& spec, const AffineExpr& e, const Point& p) {
  double val = e.constant;
  for (const auto& [id, coeff] : e.scalars) val += coeff * p.scalars[id];
  for (const auto& [id, A] : e.matrices) {
    val += std::real((A * p.matrices[id]).trace());
  }
  for (const auto& [id, coeff] : e.vectors) {
    val += std::real(coeff.dot(p.ambient(spec, id)));
  }
  return val;
}

double eval_objective(const SubproblemSpec& spec, const Point& p) {
  const auto& obj = spec.objective;
  double value = eval_affine(spec, obj.linear, p);
  for (int id : obj.log_scalars) value += obj.log_weight * std::log2(1.0 + p.scalars[id]);
  for (const auto& group : obj.inv_groups) {
    if (obj.inv_weight == 0.0) break;
    double sum = 0.0;
    for (int id : group) sum += p.scalars[id];
    value -= obj.inv_weight / sum;
  }
  return value;
}

double feasibility_margin(const SubproblemSpec& spec, const Point& p) {
  double margin = kInf;
  for (const auto& e : spec.inequalities) margin = std::min(margin, eval_affine(spec, e, p));
  for (std::size_t s = 0; s < spec.scalars.size(); ++s) {
    if (std::isfinite(spec.scalars[s].lower)) {
      margin = std::min(margin, p.scalars[s] - spec.scalars[s].lower);
    }
  }
  for (const auto& cone : spec.cones) {
    const double g = p.scalars[cone.scalar];
    margin = std::min(margin, eval_affine(spec, cone.value, p) - g * g);
  }
  for (const auto& blk : spec.schur_blocks) {
    const int d = spec.matrices[blk.matrix].dim;
    Eigen::MatrixXcd S(d + 1, d + 1);
    S.topLeftCorner(d, d) = p.matrices[blk.matrix];
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(d);
    if (blk.vector >= 0) w = p.ambient(spec, blk.vector);
    S.block(0, d, d, 1) = w;
    S.block(d, 0, 1, d) = w.adjoint();
    S(d, d) = 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S, Eigen::EigenvaluesOnly);
    margin = std::min(margin, es.eigenvalues().minCoeff());
  }
  return margin;
}

SubproblemSolution solve(const SubproblemSpec& spec, const Point& start,
                         const SolveOptions& options) {
  const Compiled c(spec);
  const int n = c.lay.total;
  Eigen::VectorXd x = flatten(spec, c.lay, start);
  Point px = unflatten(spec, c.lay, x);

  SubproblemSolution sol;
  if (eval_merit(spec, c, x, 1.0, px) == -kInf) {
    sol.status = SolveStatus::infeasible_start;
    sol.point = px;
    sol.objective = -kInf;
    return sol;
  }

  double t = 1.0;
  int stage = 0;
  int iters = 0;
  bool hit_cap = false;

  Eigen::VectorXd grad(n);
  Eigen::MatrixXd H(n, n);

  while (true) {
    // Inner Newton loop: center the barrier merit at the current t.
    while (true) {
      if (iters >= options.max_newton) {
        hit_cap = true;
        break;
      }
      const ObjectiveEval obj = eval_objective_flat(spec, c, x, true);
      grad = t * obj.grad;
      H.setZero();
      add_objective_hessian(spec, c, x, t, H);

      for (const auto& e : c.ineqs) {
        const double s = e.value(x);
        grad.noalias() += e.grad / s;
        H.noalias() -= (e.grad * e.grad.transpose()) / (s * s);
      }
      for (const auto& [idx, lower] : c.bounds) {
        const double s = x(idx) - lower;
        grad(idx) += 1.0 / s;
        H(idx, idx) -= 1.0 / (s * s);
      }
      for (std::size_t q = 0; q < c.cone_affines.size(); ++q) {
        const int gi = c.cone_scalar_idx[q];
        const double g = x(gi);
        const double s = c.cone_affines[q].value(x) - g * g;
        Eigen::VectorXd ds = c.cone_affines[q].grad;
        ds(gi) -= 2.0 * g;
        grad.noalias() += ds / s;
        H.noalias() -= (ds * ds.transpose()) / (s * s);
        H(gi, gi) -= 2.0 / s;
      }
      for (const auto& b : c.blocks) {
        const Eigen::MatrixXcd S = assemble_block(spec, b, px);
        Eigen::LLT<Eigen::MatrixXcd> llt(S);
        const Eigen::MatrixXcd Sinv =
            llt.solve(Eigen::MatrixXcd::Identity(S.rows(), S.cols()));
        const int np = static_cast<int>(b.params.size());
        // U_p = S^-1 dS_p built from the sparse derivative entries.
        std::vector<Eigen::MatrixXcd> U(np);
        for (int pi = 0; pi < np; ++pi) {
          Eigen::MatrixXcd& Up = U[pi];
          Up.setZero(S.rows(), S.cols());
          double tr = 0.0;
          for (const auto& [r, cc, v] : b.params[pi].second.entries) {
            Up.col(cc) += v * Sinv.col(r);
            tr += std::real(v * Sinv(cc, r));
          }
          grad(b.params[pi].first) += 2.0 * tr;
        }
        for (int pi = 0; pi < np; ++pi) {
          const int gi = b.params[pi].first;
          for (int pj = pi; pj < np; ++pj) {
            const int gj = b.params[pj].first;
            const double hij =
                -2.0 * std::real((U[pi].transpose().cwiseProduct(U[pj])).sum());
            H(gi, gj) += hij;
            if (gj != gi) H(gj, gi) += hij;
          }
        }
      }

      // Ascent direction from the (negative-definite) Hessian.
      Eigen::MatrixXd negH = -H;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(negH);
      double ridge = 1e-12;
      while (ldlt.info() != Eigen::Success && ridge < 1.0) {
        negH = -H + ridge * Eigen::MatrixXd::Identity(n, n);
        ldlt.compute(negH);
        ridge *= 100.0;
      }
      const Eigen::VectorXd dx = ldlt.solve(grad);
      const double decrement = grad.dot(dx);
      if (!(decrement > 2.0 * options.newton_tol)) break;

      const double phi0 = eval_merit(spec, c, x, t, px);
      double step = 1.0;
      bool accepted = false;
      bool fp_limit = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Eigen::VectorXd xn = x + step * dx;
        const Point pn = unflatten(spec, c.lay, xn);
        const double phin = eval_merit(spec, c, xn, t, pn);
        if (phin >= phi0 + 0.01 * step * decrement) {
          fp_limit = phin - phi0 <= 1e-13 * (1.0 + std::abs(phi0));
          x = xn;
          px = pn;
          ++iters;
          if (options.record_merit) sol.merit_trace.emplace_back(stage, phin);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      // Either Armijo failed outright or progress is below floating-point
      // resolution: the stage is centered as far as doubles allow.
      if (!accepted || fp_limit) break;
    }
    if (hit_cap) break;
    if (c.barrier_count / t < options.tol) break;
    t *= options.barrier_mult;
    ++stage;
  }

  sol.point = px;
  sol.objective = eval_objective(spec, sol.point);
  sol.iterations = iters;
  // At barrier parameter t every constraint carries multiplier 1/(t*slack);
  // constraints with slack beyond 1e8/t contribute less than ~1e-6 to the
  // stationarity norm, so the activity cut for the certificate widens to
  // cover the weakly-active band instead of the fixed 1e-6 default.
  sol.kkt_residual = kkt_residual(spec, sol.point, std::max(1e-6, 1e8 / t));
  sol.status = hit_cap ? SolveStatus::max_iter : SolveStatus::optimal;
  return sol;
}

double kkt_residual(const SubproblemSpec& spec, const Point& p,
                    double activity_tol) {
  const Compiled c(spec);
  const int n = c.lay.total;
  const Eigen::VectorXd x = flatten(spec, c.lay, p);
  const Eigen::VectorXd grad_f = eval_objective_flat(spec, c, x, true).grad;

  std::vector<Eigen::VectorXd> active_grads;
  std::vector<double> active_slacks;
  std::vector<bool> sign_constrained;
  double worst_violation = 0.0;

  auto consider = [&](double slack, const Eigen::VectorXd& g, bool signed_mult) {
    worst_violation = std::max(worst_violation, -slack);
    if (slack <= activity_tol) {
      active_grads.push_back(g);
      active_slacks.push_back(slack);
      sign_constrained.push_back(signed_mult);
    }
  };

  for (const auto& e : c.ineqs) consider(e.value(x), e.grad, true);
  for (const auto& [idx, lower] : c.bounds) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g(idx) = 1.0;
    consider(x(idx) - lower, g, true);
  }
  for (std::size_t q = 0; q < c.cone_affines.size(); ++q) {
    const int gi = c.cone_scalar_idx[q];
    Eigen::VectorXd g = c.cone_affines[q].grad;
    g(gi) -= 2.0 * x(gi);
    consider(c.cone_affines[q].value(x) - x(gi) * x(gi), g, true);
  }
  for (const auto& b : c.blocks) {
    const Eigen::MatrixXcd S = assemble_block(spec, b, p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
    worst_violation = std::max(worst_violation, -es.eigenvalues().minCoeff());
    // The block's dual is a PSD matrix supported on the near-null eigenspace:
    // parametrize it over eigenvector pairs so cross terms are representable.
    std::vector<Eigen::VectorXcd> null_vecs;
    for (int e = 0; e < es.eigenvalues().size(); ++e) {
      if (es.eigenvalues()(e) <= activity_tol) {
        null_vecs.push_back(es.eigenvectors().col(e));
      }
    }
    auto pair_value = [&](const Eigen::VectorXcd& va, const Eigen::VectorXcd& vb,
                          const SparseHerm& ds) {
      std::complex<double> z = 0.0;
      for (const auto& [r, cc, dv] : ds.entries) {
        z += std::conj(vb(r)) * dv * va(cc);
      }
      return z;  // vb^H dS va
    };
    for (std::size_t a = 0; a < null_vecs.size(); ++a) {
      for (std::size_t bb = a; bb < null_vecs.size(); ++bb) {
        Eigen::VectorXd g_re = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd g_im = Eigen::VectorXd::Zero(n);
        for (const auto& [gi, ds] : b.params) {
          const std::complex<double> z = pair_value(null_vecs[a], null_vecs[bb], ds);
          g_re(gi) = 2.0 * std::real(z);
          g_im(gi) = -2.0 * std::imag(z);
        }
        const std::complex<double> slack_z =
            null_vecs[bb].dot(S * null_vecs[a]);
        consider(std::abs(slack_z), g_re, a == bb);
        if (a != bb) consider(std::abs(slack_z), g_im, false);
      }
    }
  }

  double stationarity;
  double complementarity = 0.0;
  if (active_grads.empty()) {
    stationarity = grad_f.lpNorm<Eigen::Infinity>();
  } else {
    Eigen::MatrixXd A(n, static_cast<int>(active_grads.size()));
    for (std::size_t i = 0; i < active_grads.size(); ++i) {
      A.col(static_cast<int>(i)) = active_grads[i];
    }
    // Stationarity grad_f + A lambda = 0; least squares, then the
    // sign-constrained multipliers (inequalities, diagonal dual entries)
    // are clamped nonnegative.
    Eigen::VectorXd lambda = A.colPivHouseholderQr().solve(-grad_f);
    for (int i = 0; i < lambda.size(); ++i) {
      if (sign_constrained[static_cast<std::size_t>(i)] && lambda(i) < 0.0) {
        lambda(i) = 0.0;
      }
    }
    stationarity = (grad_f + A * lambda).lpNorm<Eigen::Infinity>();
    for (int i = 0; i < lambda.size(); ++i) {
      complementarity = std::max(complementarity,
                                 std::abs(lambda(i) * active_slacks[i]));
    }
  }
  return std::max({stationarity, complementarity, worst_violation});
}

namespace {

// Scalar windows in declaration order, a few passes for coupled chains
// (cone g before linear d). Midpoint placement keeps the point strictly
// interior whenever the window has any width at all. Returns false when a
// window closes.
bool assign_scalar_windows(const SubproblemSpec& spec, Point& p, double) {
  for (int pass = 0; pass < 4; ++pass) {
    for (std::size_t s = 0; s < spec.scalars.size(); ++s) {
      double lo = std::isfinite(spec.scalars[s].lower)
                      ? spec.scalars[s].lower
                      : -1e30;
      double hi = 1e30;
      for (const auto& e : spec.inequalities) {
        double coeff = 0.0;
        for (const auto& [id, a] : e.scalars) {
          if (id == static_cast<int>(s)) coeff += a;
        }
        if (coeff == 0.0) continue;
        const double rest = eval_affine(spec, e, p) - coeff * p.scalars[s];
        if (coeff > 0.0) {
          lo = std::max(lo, -rest / coeff);
        } else {
          hi = std::min(hi, rest / -coeff);
        }
      }
      for (const auto& cone : spec.cones) {
        if (cone.scalar == static_cast<int>(s)) {
          const double f = eval_affine(spec, cone.value, p);
          if (!(f > 0.0)) return false;
          const double bound = std::sqrt(f) * 0.99;
          lo = std::max(lo, -bound);
          hi = std::min(hi, bound);
        } else {
          double coeff = 0.0;
          for (const auto& [id, a] : cone.value.scalars) {
            if (id == static_cast<int>(s)) coeff += a;
          }
          if (coeff == 0.0) continue;
          const double g = p.scalars[cone.scalar];
          const double rest =
              eval_affine(spec, cone.value, p) - coeff * p.scalars[s] - g * g;
          if (coeff > 0.0) {
            lo = std::max(lo, -rest / coeff);
          } else {
            hi = std::min(hi, rest / -coeff);
          }
        }
      }
      const double mid = hi < 1e29 ? lo + 0.5 * (hi - lo) : lo + 1.0;
      if (!(mid > lo && (hi >= 1e29 || mid < hi))) return false;
      p.scalars[s] = mid;
    }
  }
  return true;
}

}  // namespace

Point strictly_feasible_start(const SubproblemSpec& spec, Rng& rng) {
  const double pad = 1e-9;

  if (spec.interior_hint) {
    Point p = *spec.interior_hint;
    p.scalars.assign(spec.scalars.size(), 0.0);
    for (std::size_t s = 0; s < spec.scalars.size(); ++s) {
      if (std::isfinite(spec.scalars[s].lower)) {
        p.scalars[s] = spec.scalars[s].lower + pad;
      }
    }
    if (assign_scalar_windows(spec, p, pad) &&
        feasibility_margin(spec, p) > 0.0) {
      return p;
    }
  }

  // Beam directions that give the rate-style constraints positive linear
  // terms: each vector aligned with the sum of its inequality coefficients.
  std::vector<Eigen::VectorXcd> beam_dir(spec.vectors.size());
  for (std::size_t v = 0; v < spec.vectors.size(); ++v) {
    beam_dir[v] = Eigen::VectorXcd::Zero(spec.vectors[v].basis.cols());
  }
  for (const auto& e : spec.inequalities) {
    for (const auto& [id, coeff] : e.vectors) {
      beam_dir[id] += spec.vectors[id].basis.adjoint() * coeff;
    }
  }
  for (std::size_t v = 0; v < spec.vectors.size(); ++v) {
    if (beam_dir[v].norm() < 1e-30) {
      for (int j = 0; j < beam_dir[v].size(); ++j) {
        beam_dir[v](j) = rng.next_cgaussian();
      }
    }
    if (beam_dir[v].size() > 0) beam_dir[v].normalize();
  }
  // Each vector's covariance partner (from its Schur block).
  std::vector<int> beam_matrix(spec.vectors.size(), -1);
  for (const auto& b : spec.schur_blocks) {
    if (b.vector >= 0) beam_matrix[b.vector] = b.matrix;
  }

  for (int attempt = 0; attempt < 20; ++attempt) {
    // Sweep the beam magnitude across attempts; small covariance floor.
    const double kappa = 0.05 + 0.9 * ((attempt * 7) % 20) / 20.0;
    const double q_small = attempt < 10 ? 0.02 : 0.002;
    Point p = zero_point(spec);
    for (std::size_t v = 0; v < spec.vectors.size(); ++v) {
      p.vectors[v] = kappa * beam_dir[v];
    }
    auto rebuild_matrices = [&] {
      for (std::size_t m = 0; m < spec.matrices.size(); ++m) {
        const int d = spec.matrices[m].dim;
        p.matrices[m] = (q_small / d) * Eigen::MatrixXcd::Identity(d, d);
      }
      for (std::size_t v = 0; v < spec.vectors.size(); ++v) {
        if (beam_matrix[v] < 0) continue;
        const Eigen::VectorXcd w = p.ambient(spec, static_cast<int>(v));
        p.matrices[beam_matrix[v]] += 1.2 * w * w.adjoint();
      }
    };
    rebuild_matrices();
    // Shrink globally until every vector-free inequality (power style) holds.
    for (int shrink = 0; shrink < 8; ++shrink) {
      bool violated = false;
      for (const auto& e : spec.inequalities) {
        if (!e.scalars.empty() || !e.vectors.empty()) continue;
        if (eval_affine(spec, e, p) <= pad) violated = true;
      }
      if (!violated) break;
      for (auto& v : p.vectors) v *= 0.6;
      rebuild_matrices();
    }
    for (std::size_t s = 0; s < spec.scalars.size(); ++s) {
      p.scalars[s] = std::isfinite(spec.scalars[s].lower)
                         ? spec.scalars[s].lower + pad
                         : 0.0;
    }
    if (!assign_scalar_windows(spec, p, pad)) continue;
    if (feasibility_margin(spec, p) > 0.0) return p;
  }
  throw std::runtime_error("strictly_feasible_start: no interior point found (spec construction bug)");
}

std::string to_json_string(const SubproblemSpec& spec) {
  const Compiled c(spec);
  nlohmann::json j;
  j["num_real_vars"] = c.lay.total;
  j["scalars"] = nlohmann::json::array();
  for (const auto& s : spec.scalars) {
    j["scalars"].push_back({{"name", s.name}, {"lower", s.lower}});
  }
  j["matrices"] = nlohmann::json::array();
  for (const auto& m : spec.matrices) {
    j["matrices"].push_back({{"name", m.name}, {"dim", m.dim}});
  }
  j["vectors"] = nlohmann::json::array();
  for (const auto& v : spec.vectors) {
    nlohmann::json basis_re = nlohmann::json::array();
    nlohmann::json basis_im = nlohmann::json::array();
    for (int r = 0; r < v.basis.rows(); ++r) {
      for (int cc = 0; cc < v.basis.cols(); ++cc) {
        basis_re.push_back(std::real(v.basis(r, cc)));
        basis_im.push_back(std::imag(v.basis(r, cc)));
      }
    }
    j["vectors"].push_back({{"name", v.name},
                            {"ambient", v.ambient},
                            {"reduced", v.basis.cols()},
                            {"basis_re", basis_re},
                            {"basis_im", basis_im}});
  }
  auto dump_affine = [](const CompiledAffine& a) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < a.grad.size(); ++i) row.push_back(a.grad(i));
    return nlohmann::json{{"constant", a.constant}, {"gradient", row}};
  };
  j["inequalities"] = nlohmann::json::array();
  for (const auto& e : c.ineqs) j["inequalities"].push_back(dump_affine(e));
  j["cones"] = nlohmann::json::array();
  for (std::size_t q = 0; q < c.cone_affines.size(); ++q) {
    auto entry = dump_affine(c.cone_affines[q]);
    entry["scalar_index"] = c.cone_scalar_idx[q];
    j["cones"].push_back(entry);
  }
  j["schur_blocks"] = nlohmann::json::array();
  for (const auto& b : spec.schur_blocks) {
    j["schur_blocks"].push_back(
        {{"matrix", b.matrix}, {"vector", b.vector}, {"name", b.name}});
  }
  j["objective"] = {{"linear", dump_affine(compile_affine(spec, c.lay, spec.objective.linear))},
                    {"log_weight", spec.objective.log_weight},
                    {"log_scalars", spec.objective.log_scalars},
                    {"inv_weight", spec.objective.inv_weight},
                    {"inv_groups", spec.objective.inv_groups}};
  return j.dump(2);
}

}  // namespace isac::solver
