#pragma once

// Test-only oracle: dense two-phase simplex (Bland's rule) applied to the
// discrete transport linear program. Deliberately generic and slow; shares no
// code with the library's monotone transport.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

struct LpResult {
  bool feasible = false;
  double value = 0.0;
  std::vector<double> x;
};

// min c^T x  s.t.  A x = b,  x >= 0.
inline LpResult solve_lp(std::vector<std::vector<double>> A, std::vector<double> b, const std::vector<double>& c) {
  constexpr double eps = 1e-12;
  const std::size_t m = A.size();
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (A[i].size() != n) throw std::invalid_argument("solve_lp: ragged constraint matrix");
    if (b[i] < 0) {
      for (double& v : A[i]) v = -v;
      b[i] = -b[i];
    }
  }
  const std::size_t rhs = n + m;
  std::vector<std::vector<double>> T(m + 1, std::vector<double>(rhs + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
    T[i][n + i] = 1.0;
    T[i][rhs] = b[i];
    basis[i] = n + i;
  }

  auto pivot = [&](std::size_t r, std::size_t col) {
    const double p = T[r][col];
    for (double& v : T[r]) v /= p;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == r) continue;
      const double f = T[i][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= rhs; ++j) T[i][j] -= f * T[r][j];
    }
    basis[r] = col;
  };

  // Returns false when unbounded.
  auto run = [&](std::size_t limit) {
    while (true) {
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j)
        if (T[m][j] < -eps) {
          enter = j;
          break;
        }
      if (enter == limit) return true;
      std::size_t leave = m;
      double best = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (T[i][enter] <= eps) continue;
        const double ratio = T[i][rhs] / T[i][enter];
        if (leave == m || ratio < best - eps || (std::abs(ratio - best) <= eps && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m) return false;
      pivot(leave, enter);
    }
  };

  // Phase 1: minimise the sum of artificials.
  for (std::size_t j = 0; j <= rhs; ++j) {
    if (j >= n && j < rhs) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += T[i][j];
    T[m][j] = -s;
  }
  run(rhs);
  LpResult out;
  if (-T[m][rhs] > 1e-9) return out;
  out.feasible = true;

  // Drive zero-valued artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < n) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(T[r][j]) > 1e-9) {
        pivot(r, j);
        break;
      }
  }

  // Phase 2.
  auto cost = [&](std::size_t j) { return j < n ? c[j] : 0.0; };
  for (std::size_t j = 0; j <= rhs; ++j) {
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) z += cost(basis[i]) * T[i][j];
    T[m][j] = (j == rhs ? 0.0 : cost(j)) - z;
  }
  if (!run(n)) throw std::runtime_error("solve_lp: unbounded");
  out.value = -T[m][rhs];
  out.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) out.x[basis[i]] = T[i][rhs];
  return out;
}

// Transport between masses a (at positions pa) and b (at positions pb) with
// squared-distance ground cost.
inline double transport_cost(const std::vector<double>& a, const std::vector<double>& pa, const std::vector<double>& b,
                             const std::vector<double>& pb) {
  const std::size_t M = a.size(), N = b.size();
  std::vector<std::vector<double>> A(M + N, std::vector<double>(M * N, 0.0));
  std::vector<double> rhs(M + N), c(M * N);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      A[i][i * N + j] = 1.0;
      A[M + j][i * N + j] = 1.0;
      const double d = pa[i] - pb[j];
      c[i * N + j] = d * d;
    }
    rhs[i] = a[i];
  }
  for (std::size_t j = 0; j < N; ++j) rhs[M + j] = b[j];
  const auto r = solve_lp(A, rhs, c);
  if (!r.feasible) throw std::runtime_error("transport_cost: infeasible (masses differ)");
  return r.value;
}

}  // namespace oracle
