#include "sdad/cyclegraph.hpp"

#include "sdad/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace sdad {

namespace {
constexpr double kRankTol = 1e-9;

int numeric_rank(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = kRankTol * sv[0];
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++r;
  }
  return r;
}
}  // namespace

IncidenceMatrix::IncidenceMatrix(int num_nodes, int num_cols)
    : num_nodes_(num_nodes), num_cols_(num_cols) {
  if (num_nodes < 2 || num_cols < 1 || num_cols != num_nodes - 1) {
    throw StructuralError("incidence matrix must be (T+1) x T with T >= 1");
  }
}

void IncidenceMatrix::add_edge(int high, int low) {
  if (static_cast<int>(edges_.size()) >= num_cols_) {
    throw StructuralError("more edges than columns");
  }
  if (high < 0 || high >= num_nodes_ || low < 0 || low >= num_nodes_ || high == low) {
    throw StructuralError("edge (" + std::to_string(high) + "," + std::to_string(low) +
                          ") outside node range");
  }
  edges_.emplace_back(high, low);
}

Eigen::MatrixXd IncidenceMatrix::dense() const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(num_nodes_, num_cols_);
  for (size_t i = 0; i < edges_.size(); ++i) {
    M(edges_[i].first, static_cast<Eigen::Index>(i)) = 1.0;
    M(edges_[i].second, static_cast<Eigen::Index>(i)) = -1.0;
  }
  return M;
}

Eigen::VectorXd IncidenceMatrix::transpose_times(const Eigen::VectorXd& x) const {
  if (x.size() != num_nodes_) throw StructuralError("vector length does not match node count");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(num_cols_);
  for (size_t i = 0; i < edges_.size(); ++i) {
    d[static_cast<Eigen::Index>(i)] = x[edges_[i].first] - x[edges_[i].second];
  }
  return d;
}

Eigen::VectorXd IncidenceMatrix::times(const Eigen::VectorXd& v) const {
  if (v.size() != num_cols_) throw StructuralError("vector length does not match column count");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(num_nodes_);
  for (size_t i = 0; i < edges_.size(); ++i) {
    y[edges_[i].first] += v[static_cast<Eigen::Index>(i)];
    y[edges_[i].second] -= v[static_cast<Eigen::Index>(i)];
  }
  return y;
}

Eigen::VectorXd IncidenceMatrix::row_sums() const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(num_nodes_);
  for (const auto& [hi, lo] : edges_) {
    y[hi] += 1.0;
    y[lo] -= 1.0;
  }
  return y;
}

namespace detail {

IncidenceMatrix build_incidence(const Eigen::VectorXd& x, const CycleDecomposition& dec) {
  const int T = static_cast<int>(x.size()) - 1;
  if (dec.depths.size() != T) throw StructuralError("decomposition does not match profile length");
  const auto& S = dec.residual;
  if (S.size() < 2 || S.front() != 0 || S.back() != T) {
    throw StructuralError("residual set must run from 0 to T");
  }
  IncidenceMatrix M(T + 1, T);
  for (const auto& e : dec.full_cycles) {
    M.add_edge(e);
    M.add_edge(e);
  }
  for (int j = 1; j + 1 <= static_cast<int>(S.size()); ++j) {
    M.add_edge(edge_direction(x, S, j));
  }
  return M;
}

}  // namespace detail

IncidenceMatrix build_incidence(const SocProfile& x, const CycleDecomposition& dec) {
  return detail::build_incidence(x.values(), dec);
}

Eigen::VectorXd depths_from_incidence(const IncidenceMatrix& M, const SocProfile& x) {
  if (M.rows() != x.num_nodes()) throw StructuralError("matrix does not match profile length");
  return M.transpose_times(x.values());
}

ChargeDischargeSplit split_charge_discharge(const IncidenceMatrix& M, const SocProfile& x) {
  if (M.rows() != x.num_nodes()) throw StructuralError("matrix does not match profile length");
  const auto& edges = M.edges();
  const auto& v = x.values();

  std::vector<std::pair<int, int>> charge, discharge;
  size_t i = 0;
  while (i < edges.size()) {
    if (i + 1 < edges.size() && edges[i + 1] == edges[i]) {
      // Duplicated column: a full cycle, one half on each side.
      charge.push_back(edges[i]);
      discharge.push_back(edges[i]);
      i += 2;
    } else {
      // Residual half-cycle: charging when the higher-SoC node is later.
      if (edges[i].first > edges[i].second) {
        charge.push_back(edges[i]);
      } else {
        discharge.push_back(edges[i]);
      }
      ++i;
    }
  }

  auto by_depth_desc = [&](const std::pair<int, int>& a, const std::pair<int, int>& b) {
    return (v[a.first] - v[a.second]) > (v[b.first] - v[b.second]);
  };
  std::stable_sort(charge.begin(), charge.end(), by_depth_desc);
  std::stable_sort(discharge.begin(), discharge.end(), by_depth_desc);

  ChargeDischargeSplit out{IncidenceMatrix(M.rows(), M.cols()), IncidenceMatrix(M.rows(), M.cols()),
                           Eigen::VectorXd::Zero(M.cols()), Eigen::VectorXd::Zero(M.cols())};
  for (size_t k = 0; k < charge.size(); ++k) {
    out.charging.add_edge(charge[k]);
    out.charging_depths[static_cast<Eigen::Index>(k)] = v[charge[k].first] - v[charge[k].second];
  }
  for (size_t k = 0; k < discharge.size(); ++k) {
    out.discharging.add_edge(discharge[k]);
    out.discharging_depths[static_cast<Eigen::Index>(k)] =
        v[discharge[k].first] - v[discharge[k].second];
  }
  return out;
}

RankReport rank_analysis(const IncidenceMatrix& M) {
  RankReport rep;
  const Eigen::MatrixXd Md = M.dense();
  rep.rank = numeric_rank(Md);

  const int n = M.rows();
  Eigen::MatrixXd G = Md * Md.transpose();
  // The stacked system's rank is invariant under positive scaling of G; keep
  // the blocks comparable before the SVD.
  const double s = G.cwiseAbs().maxCoeff();
  if (s > 0.0) G /= s;
  Eigen::MatrixXd stacked(n + 2, n);
  stacked.topRows(n) = G;
  stacked.row(n) = Eigen::RowVectorXd::Zero(n);
  stacked.row(n + 1) = Eigen::RowVectorXd::Zero(n);
  stacked(n, n - 1) = 1.0;
  stacked(n + 1, 0) = 1.0;
  rep.stacked_rank = numeric_rank(stacked);

  const int lo = std::min(rep.rank + 1, n);
  const int hi = std::min(rep.rank + 2, n);
  rep.bounds_ok = lo <= rep.stacked_rank && rep.stacked_rank <= hi;
  rep.stacked_is_rank_plus_one = rep.stacked_rank == rep.rank + 1;
  return rep;
}

namespace detail {

double extraction_slack(const Eigen::VectorXd& x) {
  const int T = static_cast<int>(x.size()) - 1;
  double slack = std::numeric_limits<double>::infinity();

  for (int t = 1; t <= T; ++t) slack = std::min(slack, std::abs(x[t] - x[t - 1]));

  std::vector<int> S = find_switching_times(x);
  bool extracted = true;
  while (extracted && static_cast<int>(S.size()) > 3) {
    extracted = false;
    for (int j = 2; j + 2 <= static_cast<int>(S.size()); ++j) {
      const double dm = std::abs(x[S[j - 1]] - x[S[j - 2]]);
      const double dj = std::abs(x[S[j]] - x[S[j - 1]]);
      const double dp = std::abs(x[S[j + 1]] - x[S[j]]);
      slack = std::min({slack, std::abs(dm - dj), std::abs(dp - dj), dj});
      if (dm >= dj && dp >= dj) {
        S.erase(S.begin() + (j - 1), S.begin() + (j + 1));
        extracted = true;
        break;
      }
    }
  }
  for (int j = 1; j + 1 <= static_cast<int>(S.size()); ++j) {
    slack = std::min(slack, std::abs(x[S[j]] - x[S[j - 1]]));
  }
  return slack;
}

}  // namespace detail

double extraction_slack(const SocProfile& x) { return detail::extraction_slack(x.values()); }

bool is_boundary_profile(const SocProfile& x, double tol) {
  return extraction_slack(x) <= tol;
}

void write_incidence_csv(const IncidenceMatrix& M, std::ostream& out) {
  const Eigen::MatrixXd Md = M.dense();
  out << "node";
  for (int c = 0; c < M.cols(); ++c) out << ",e" << c;
  out << '\n';
  for (int r = 0; r < M.rows(); ++r) {
    out << r;
    for (int c = 0; c < M.cols(); ++c) out << ',' << static_cast<int>(Md(r, c));
    out << '\n';
  }
}

void write_incidence_csv(const IncidenceMatrix& M, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IngestError("cannot write " + path.string());
  write_incidence_csv(M, f);
}

}  // namespace sdad
