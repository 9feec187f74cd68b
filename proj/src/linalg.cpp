#include "lsqopt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsqopt/errors.hpp"

namespace lsqopt {

DenseMatrix gram(const DenseMatrix& a) {
  const std::size_t d = a.cols();
  DenseMatrix g(d, d);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      const double aik = row[k];
      if (aik == 0.0) continue;
      for (std::size_t l = k; l < d; ++l) g(k, l) += aik * row[l];
    }
  }
  // mirror the computed upper triangle; result is exactly symmetric
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t l = k + 1; l < d; ++l) g(l, k) = g(k, l);
  }
  return g;
}

namespace {

double off_diagonal_mass_sq(const DenseMatrix& g) {
  double s = 0.0;
  for (std::size_t p = 0; p < g.rows(); ++p) {
    for (std::size_t q = p + 1; q < g.cols(); ++q) s += 2.0 * g(p, q) * g(p, q);
  }
  return s;
}

double fro_norm_sq_of(const DenseMatrix& g) {
  double s = 0.0;
  for (double v : g.data()) s += v * v;
  return s;
}

}  // namespace

std::vector<double> jacobi_eigenvalues(const DenseMatrix& g_in, double tol) {
  if (g_in.rows() != g_in.cols()) throw config_error("jacobi_eigenvalues: matrix not square");
  const std::size_t d = g_in.rows();
  DenseMatrix g = g_in;
  // rotations below assume exact symmetry
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = p + 1; q < d; ++q) {
      const double s = 0.5 * (g(p, q) + g(q, p));
      g(p, q) = s;
      g(q, p) = s;
    }
  }

  const double fro = std::sqrt(fro_norm_sq_of(g));
  if (fro == 0.0) {
    return std::vector<double>(d, 0.0);
  }
  const double threshold_sq = (tol * fro) * (tol * fro);

  constexpr int kMaxSweeps = 50;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_mass_sq(g) <= threshold_sq) {
      std::vector<double> eig(d);
      for (std::size_t i = 0; i < d; ++i) eig[i] = g(i, i);
      return eig;
    }
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double gpq = g(p, q);
        if (gpq == 0.0) continue;
        const double theta = (g(q, q) - g(p, p)) / (2.0 * gpq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        const double gpp = g(p, p);
        const double gqq = g(q, q);
        g(p, p) = gpp - t * gpq;
        g(q, q) = gqq + t * gpq;
        g(p, q) = 0.0;
        g(q, p) = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
          if (r == p || r == q) continue;
          const double grp = g(r, p);
          const double grq = g(r, q);
          g(r, p) = grp - s * (grq + tau * grp);
          g(p, r) = g(r, p);
          g(r, q) = grq + s * (grp - tau * grq);
          g(q, r) = g(r, q);
        }
      }
    }
  }
  throw numerical_error("jacobi_eigenvalues: no convergence after 50 sweeps");
}

std::pair<double, double> sym_eigen_extremes(const DenseMatrix& g, double tol) {
  const auto eig = jacobi_eigenvalues(g, tol);
  const auto [mn, mx] = std::minmax_element(eig.begin(), eig.end());
  return {*mx, *mn};
}

double sym_spectral_norm(const DenseMatrix& g, double tol) {
  const auto [mx, mn] = sym_eigen_extremes(g, tol);
  return std::max(std::abs(mx), std::abs(mn));
}

SpectralSummary spectral_summary(const DenseMatrix& a, double eigen_tol) {
  SpectralSummary s;
  s.row_norms_sq.resize(a.rows());
  double fro_sq = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double r = dot(a.row(i), a.row(i));
    s.row_norms_sq[i] = r;
    fro_sq += r;
  }
  if (fro_sq == 0.0) throw domain_error("spectral_summary: zero matrix");
  s.fro_norm_sq = fro_sq;
  const auto [mx, mn] = sym_eigen_extremes(gram(a), eigen_tol);
  s.lambda_max = mx;
  s.lambda_min = mn;
  s.spectral_norm = std::sqrt(std::max(mx, 0.0));
  return s;
}

DenseMatrix cholesky(const DenseMatrix& g) {
  if (g.rows() != g.cols()) throw config_error("cholesky: matrix not square");
  const std::size_t d = g.rows();
  DenseMatrix l(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = g(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (diag <= 0.0) {
      throw rank_error("cholesky: pivot <= 0 at column " + std::to_string(j) +
                       " (matrix numerically rank deficient)");
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = g(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const DenseMatrix& l, std::span<const double> rhs) {
  const std::size_t d = l.rows();
  if (rhs.size() != d) throw config_error("cholesky_solve: dimension mismatch");
  std::vector<double> y(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (std::size_t ii = d; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < d; ++k) y[ii] -= l(k, ii) * y[k];
    y[ii] /= l(ii, ii);
  }
  return y;
}

std::vector<double> normal_solve(const DenseMatrix& a, std::span<const double> b) {
  if (b.size() != a.rows()) throw config_error("normal_solve: dimension mismatch");
  const auto rhs = mat_transpose_vec(a, b);
  const auto l = cholesky(gram(a));
  auto x = cholesky_solve(l, rhs);

  auto ax = mat_vec(a, x);
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= b[i];
  const auto residual = mat_transpose_vec(a, ax);
  if (norm2(residual) > 1e-8 * norm2(rhs)) {
    throw numerical_error("normal_solve: normal-equations residual check failed");
  }
  return x;
}

}  // namespace lsqopt
