#include "cycloroute/lowrank/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::lowrank {

namespace {

// Householder reduction of symmetric v to tridiagonal form. On return d holds
// the diagonal, e the subdiagonal in e[1..n-1], and v the accumulated
// orthogonal transformation.
void tridiagonalize(Eigen::MatrixXd& v, Eigen::VectorXd& d, Eigen::VectorXd& e) {
  const Eigen::Index n = v.rows();
  d.resize(n);
  e.setZero(n);
  for (Eigen::Index j = 0; j < n; ++j) d(j) = v(n - 1, j);

  for (Eigen::Index i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) scale += std::abs(d(k));
    if (scale == 0.0) {
      e(i) = d(i - 1);
      for (Eigen::Index j = 0; j < i; ++j) {
        d(j) = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (Eigen::Index k = 0; k < i; ++k) {
        d(k) /= scale;
        h += d(k) * d(k);
      }
      double f = d(i - 1);
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e(i) = scale * g;
      h -= f * g;
      d(i - 1) = f - g;
      for (Eigen::Index j = 0; j < i; ++j) e(j) = 0.0;

      for (Eigen::Index j = 0; j < i; ++j) {
        f = d(j);
        v(j, i) = f;
        g = e(j) + v(j, j) * f;
        for (Eigen::Index k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d(k);
          e(k) += v(k, j) * f;
        }
        e(j) = g;
      }
      f = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        e(j) /= h;
        f += e(j) * d(j);
      }
      const double hh = f / (h + h);
      for (Eigen::Index j = 0; j < i; ++j) e(j) -= hh * d(j);
      for (Eigen::Index j = 0; j < i; ++j) {
        f = d(j);
        g = e(j);
        for (Eigen::Index k = j; k <= i - 1; ++k) v(k, j) -= (f * e(k) + g * d(k));
        d(j) = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d(i) = h;
  }

  for (Eigen::Index i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d(i + 1);
    if (h != 0.0) {
      for (Eigen::Index k = 0; k <= i; ++k) d(k) = v(k, i + 1) / h;
      for (Eigen::Index j = 0; j <= i; ++j) {
        double g = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (Eigen::Index k = 0; k <= i; ++k) v(k, j) -= g * d(k);
      }
    }
    for (Eigen::Index k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j) = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e(0) = 0.0;
}

// Implicit-shift QL on the tridiagonal (d, e), accumulating into v.
void tridiagonal_ql(Eigen::MatrixXd& v, Eigen::VectorXd& d, Eigen::VectorXd& e,
                    std::size_t max_iterations) {
  const Eigen::Index n = v.rows();
  for (Eigen::Index i = 1; i < n; ++i) e(i - 1) = e(i);
  e(n - 1) = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  std::size_t iterations = 0;

  for (Eigen::Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d(l)) + std::abs(e(l)));
    Eigen::Index m = l;
    while (m < n) {
      if (std::abs(e(m)) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      do {
        if (++iterations > max_iterations) {
          throw Error(ErrorCode::ConvergenceFailure,
                      "symmetric eigensolver exceeded " + std::to_string(max_iterations) +
                          " QL iterations");
        }
        double g = d(l);
        double p = (d(l + 1) - g) / (2.0 * e(l));
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d(l) = e(l) / (p + r);
        d(l + 1) = e(l) * (p + r);
        const double dl1 = d(l + 1);
        double h = g - d(l);
        for (Eigen::Index i = l + 2; i < n; ++i) d(i) -= h;
        f += h;

        p = d(m);
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e(l + 1);
        double s = 0.0, s2 = 0.0;
        for (Eigen::Index i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e(i);
          h = c * p;
          r = std::hypot(p, e(i));
          e(i + 1) = s * r;
          s = e(i) / r;
          c = p / r;
          p = c * d(i) - s * g;
          d(i + 1) = h + s * (c * g + s * d(i));
          for (Eigen::Index k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e(l) / dl1;
        e(l) = s * p;
        d(l) = c * p;
      } while (std::abs(e(l)) > eps * tst1);
    }
    d(l) += f;
    e(l) = 0.0;
  }
}

void fix_signs(Eigen::MatrixXd& u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0) u.col(j) *= -1.0;
  }
}

// Two passes of modified Gram-Schmidt; columns with no remaining energy are
// replaced by the first standard basis vector that is not yet spanned.
void orthonormalize(Eigen::MatrixXd& u) {
  const Eigen::Index m = u.rows();
  Eigen::Index next_unit = 0;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) u.col(j) -= u.col(i).dot(u.col(j)) * u.col(i);
    }
    double norm = u.col(j).norm();
    while (norm < 1e-8 && next_unit < m) {
      u.col(j) = Eigen::VectorXd::Unit(m, next_unit++);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < j; ++i) u.col(j) -= u.col(i).dot(u.col(j)) * u.col(i);
      }
      norm = u.col(j).norm();
    }
    u.col(j) /= norm;
  }
}

}  // namespace

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a, double tolerance,
                               std::optional<std::size_t> max_iterations) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "symmetric_eigen needs a nonempty square matrix");
  }
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = 0.5 * (a + a.transpose());
  Eigen::VectorXd d, e;
  tridiagonalize(v, d, e);
  tridiagonal_ql(v, d, e, max_iterations.value_or(10 * static_cast<std::size_t>(n)));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return d(x) > d(y); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = d(order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
  }

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double residual =
      (a * out.vectors - out.vectors * out.values.asDiagonal()).cwiseAbs().maxCoeff() / scale;
  if (!(residual <= tolerance)) {
    throw Error(ErrorCode::ConvergenceFailure,
                "eigen residual " + std::to_string(residual) + " exceeds tolerance");
  }
  return out;
}

double SpatialBasis::orthonormality_error() const {
  const Eigen::MatrixXd gram = u_bar.transpose() * u_bar;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

TruncatedSvd truncated_svd(const Eigen::MatrixXd& w, std::size_t k, const SvdOptions& options) {
  const auto m = static_cast<std::size_t>(w.rows());
  const auto n = static_cast<std::size_t>(w.cols());
  const std::size_t r = std::min(m, n);
  if (k < 1 || k > r) {
    throw Error(ErrorCode::InvalidArgument,
                "rank k=" + std::to_string(k) + " outside 1.." + std::to_string(r));
  }
  if (!w.allFinite()) throw Error(ErrorCode::InvalidArgument, "SVD input must be fully observed");

  const auto ki = static_cast<Eigen::Index>(k);
  TruncatedSvd out;
  out.basis.trained_on.m = m;
  out.basis.trained_on.n = n;
  out.basis.singular_values.resize(r);

  if (m <= n) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(w.rows(), w.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(w);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    SymmetricEigen eig = symmetric_eigen(gram, options.tolerance);
    for (std::size_t i = 0; i < r; ++i) {
      out.basis.singular_values[i] = std::sqrt(std::max(0.0, eig.values(static_cast<Eigen::Index>(i))));
    }
    out.basis.u_bar = eig.vectors.leftCols(ki);
  } else {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(w.cols(), w.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    SymmetricEigen eig = symmetric_eigen(gram, options.tolerance);
    for (std::size_t i = 0; i < r; ++i) {
      out.basis.singular_values[i] = std::sqrt(std::max(0.0, eig.values(static_cast<Eigen::Index>(i))));
    }
    out.basis.u_bar = w * eig.vectors.leftCols(ki);
    orthonormalize(out.basis.u_bar);
  }
  fix_signs(out.basis.u_bar);

  if (options.want_right_factors) {
    Eigen::MatrixXd xi = w.transpose() * out.basis.u_bar;
    for (std::size_t i = 0; i < k; ++i) {
      const double s = out.basis.singular_values[i];
      const auto col = static_cast<Eigen::Index>(i);
      if (s > 0.0) {
        xi.col(col) /= s;
      } else {
        xi.col(col).setZero();
      }
    }
    out.right_factors = std::move(xi);
  }
  return out;
}

TruncatedSvd truncated_svd(const TrafficMatrix& matrix, std::size_t k, const SvdOptions& options) {
  if (!matrix.fully_observed()) {
    throw Error(ErrorCode::InvalidArgument, "SVD input must be fully observed");
  }
  TruncatedSvd out = truncated_svd(matrix.values(), k, options);
  out.basis.trained_on.start_epoch = matrix.grid().start_epoch();
  out.basis.trained_on.end_epoch = static_cast<std::int64_t>(matrix.grid().end());
  return out;
}

Eigen::MatrixXd reconstruct(const TruncatedSvd& svd) {
  if (!svd.right_factors) {
    throw Error(ErrorCode::InvalidArgument, "reconstruction needs right singular vectors");
  }
  const std::size_t k = svd.basis.k();
  Eigen::VectorXd sigma(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) sigma(static_cast<Eigen::Index>(i)) = svd.basis.singular_values[i];
  return svd.basis.u_bar * sigma.asDiagonal() * svd.right_factors->transpose();
}

}  // namespace cycloroute::lowrank
