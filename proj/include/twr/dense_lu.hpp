#pragma once

// Fixed-size LU with partial pivoting and an explicit singularity threshold.
// Eigen's PartialPivLU never reports singularity, and the continuation needs
// to know when the bordered KKT matrix degenerates.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace twr {

template <int N>
struct LuResult {
  Eigen::Matrix<double, N, 1> x;
  double det = 0.0;
  /// Smallest |pivot| relative to the max-norm of the input.
  double min_rel_pivot = 0.0;
};

/// Solves A x = b. Returns nullopt if some |pivot| < rel_threshold * max|A_ij|.
template <int N>
std::optional<LuResult<N>> lu_solve(const Eigen::Matrix<double, N, N>& a_in,
                                    const Eigen::Matrix<double, N, 1>& b_in,
                                    double rel_threshold = 1e-12) {
  double a[N][N + 1];
  double scale = 0.0;
  for (int r = 0; r < N; ++r) {
    for (int c = 0; c < N; ++c) {
      a[r][c] = a_in(r, c);
      scale = std::max(scale, std::abs(a[r][c]));
    }
    a[r][N] = b_in(r);
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
  int perm[N];
  for (int r = 0; r < N; ++r) perm[r] = r;
  double min_pivot = std::numeric_limits<double>::infinity();
  double det = 1.0;

  for (int col = 0; col < N; ++col) {
    int best = col;
    double pivot = std::abs(a[perm[col]][col]);
    for (int r = col + 1; r < N; ++r) {
      const double v = std::abs(a[perm[r]][col]);
      if (v > pivot) {
        pivot = v;
        best = r;
      }
    }
    min_pivot = std::min(min_pivot, pivot);
    if (pivot < rel_threshold * scale) return std::nullopt;
    if (best != col) {
      std::swap(perm[col], perm[best]);
      det = -det;
    }
    const double* prow = a[perm[col]];
    det *= prow[col];
    const double inv = 1.0 / prow[col];
    for (int r = col + 1; r < N; ++r) {
      double* row = a[perm[r]];
      const double f = row[col] * inv;
      for (int c = col + 1; c <= N; ++c) row[c] -= f * prow[c];
    }
  }

  Eigen::Matrix<double, N, 1> x;
  for (int r = N - 1; r >= 0; --r) {
    const double* row = a[perm[r]];
    double acc = row[N];
    for (int c = r + 1; c < N; ++c) acc -= row[c] * x(c);
    x(r) = acc / row[r];
  }
  return LuResult<N>{x, det, min_pivot / scale};
}

}  // namespace twr
