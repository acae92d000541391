#include "sdad/rainflow.hpp"

#include "sdad/errors.hpp"

#include <cmath>
#include <string>

namespace sdad {

namespace detail {

std::vector<int> find_switching_times(const Eigen::VectorXd& x) {
  const int T = static_cast<int>(x.size()) - 1;
  std::vector<int> s;
  s.reserve(static_cast<size_t>(T) + 1);
  s.push_back(0);
  int carried = 0;
  auto step_dir = [&](int t) {
    const double d = x[t] - x[t - 1];
    const int sg = (d > 0.0) - (d < 0.0);
    if (sg != 0) carried = sg;
    return carried;
  };
  int prev = T >= 1 ? step_dir(1) : 0;
  for (int t = 1; t <= T - 1; ++t) {
    const int next = step_dir(t + 1);
    if (prev != 0 && next == -prev) s.push_back(t);
    prev = next;
  }
  s.push_back(T);
  return s;
}

std::pair<int, int> edge_direction(const Eigen::VectorXd& x, const std::vector<int>& S, int j) {
  // 1-based j: the pair is (S[j], S[j+1]), i.e. S[j-1] and S[j] in 0-based storage.
  const int a = S[static_cast<size_t>(j) - 1];
  const int b = S[static_cast<size_t>(j)];
  return x[b] >= x[a] ? std::make_pair(b, a) : std::make_pair(a, b);
}

CycleDecomposition rainflow_count(const Eigen::VectorXd& x) {
  const int T = static_cast<int>(x.size()) - 1;
  CycleDecomposition dec;
  dec.residual = find_switching_times(x);
  dec.depths = Eigen::VectorXd::Zero(T);
  auto& S = dec.residual;
  int k = 0;

  bool extracted = true;
  while (extracted && static_cast<int>(S.size()) > 3) {
    extracted = false;
    for (int j = 2; j + 2 <= static_cast<int>(S.size()); ++j) {
      const double dm = std::abs(x[S[j - 1]] - x[S[j - 2]]);
      const double dj = std::abs(x[S[j]] - x[S[j - 1]]);
      const double dp = std::abs(x[S[j + 1]] - x[S[j]]);
      if (dm >= dj && dp >= dj) {
        // The surviving neighbors absorb the segment, so the pair's direction
        // must be read off before the nodes are dropped.
        dec.full_cycles.push_back(edge_direction(x, S, j));
        S.erase(S.begin() + (j - 1), S.begin() + (j + 1));
        dec.depths[k] = dj;
        dec.depths[k + 1] = dj;
        k += 2;
        extracted = true;
        break;
      }
    }
  }

  for (int j = 1; j + 1 <= static_cast<int>(S.size()); ++j) {
    dec.depths[k + j - 1] = std::abs(x[S[j]] - x[S[j - 1]]);
  }
  return dec;
}

void rainflow_depths_small(const double* x, int n, double* depths_out, int* scratch) {
  const int T = n - 1;
  for (int i = 0; i < T; ++i) depths_out[i] = 0.0;

  int* S = scratch;
  int m = 0;
  S[m++] = 0;
  int carried = 0;
  int prev = 0;
  if (T >= 1) {
    const double d = x[1] - x[0];
    const int sg = (d > 0.0) - (d < 0.0);
    if (sg != 0) carried = sg;
    prev = carried;
  }
  for (int t = 1; t <= T - 1; ++t) {
    const double d = x[t + 1] - x[t];
    const int sg = (d > 0.0) - (d < 0.0);
    if (sg != 0) carried = sg;
    const int next = carried;
    if (prev != 0 && next == -prev) S[m++] = t;
    prev = next;
  }
  S[m++] = T;

  int k = 0;
  bool extracted = true;
  while (extracted && m > 3) {
    extracted = false;
    for (int j = 2; j + 2 <= m; ++j) {
      const double dm = std::abs(x[S[j - 1]] - x[S[j - 2]]);
      const double dj = std::abs(x[S[j]] - x[S[j - 1]]);
      const double dp = std::abs(x[S[j + 1]] - x[S[j]]);
      if (dm >= dj && dp >= dj) {
        for (int i = j - 1; i + 2 < m; ++i) S[i] = S[i + 2];
        m -= 2;
        depths_out[k] = dj;
        depths_out[k + 1] = dj;
        k += 2;
        extracted = true;
        break;
      }
    }
  }
  for (int j = 1; j < m; ++j) depths_out[k + j - 1] = std::abs(x[S[j]] - x[S[j - 1]]);
}

}  // namespace detail

std::vector<int> find_switching_times(const SocProfile& x) {
  return detail::find_switching_times(x.values());
}

namespace {

void check_index_list(const SocProfile& x, const std::vector<int>& S) {
  const int T = static_cast<int>(x.num_steps());
  int prev = -1;
  for (int t : S) {
    if (t < 0 || t > T) throw IndexError("index " + std::to_string(t) + " outside profile");
    if (t <= prev) throw IndexError("index list not strictly increasing");
    prev = t;
  }
}

}  // namespace

std::array<double, 3> triple_diff(const SocProfile& x, const std::vector<int>& S, int j) {
  check_index_list(x, S);
  const int m = static_cast<int>(S.size());
  if (j < 2 || j > m - 2) {
    throw IndexError("triple position " + std::to_string(j) + " outside [2," +
                     std::to_string(m - 2) + "]");
  }
  const auto& v = x.values();
  return {std::abs(v[S[j - 1]] - v[S[j - 2]]),
          std::abs(v[S[j]] - v[S[j - 1]]),
          std::abs(v[S[j + 1]] - v[S[j]])};
}

std::pair<int, int> edge_direction(const SocProfile& x, const std::vector<int>& S, int j) {
  check_index_list(x, S);
  const int m = static_cast<int>(S.size());
  if (j < 1 || j > m - 1) {
    throw IndexError("edge position " + std::to_string(j) + " outside [1," +
                     std::to_string(m - 1) + "]");
  }
  return detail::edge_direction(x.values(), S, j);
}

CycleDecomposition rainflow_count(const SocProfile& x) {
  return detail::rainflow_count(x.values());
}

}  // namespace sdad
