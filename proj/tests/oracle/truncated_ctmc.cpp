#include "truncated_ctmc.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <stdexcept>
#include <vector>

namespace oracle {

namespace {

// Enumerates all K-vectors with entries summing to at most cap.
void enumerate(int k, int cap, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  int used = 0;
  for (int v : cur) used += v;
  for (int v = 0; v + used <= cap; ++v) {
    cur.push_back(v);
    enumerate(k, cap, cur, out);
    cur.pop_back();
  }
}

}  // namespace

DpsExpectations solve_truncated(const DpsInstance& inst, int cap) {
  const int classes = static_cast<int>(inst.alpha.rows());
  const int dim = static_cast<int>(inst.q.rows());

  std::vector<std::vector<int>> pops;
  std::vector<int> cur;
  enumerate(classes, cap, cur, pops);

  // Mixed-radix index of a population vector (radix cap + 1), then a dense
  // lookup into the enumerated list.
  auto key = [&](const std::vector<int>& m) {
    long r = 0;
    for (int v : m) r = r * (cap + 1) + v;
    return r;
  };
  long keys = 1;
  for (int k = 0; k < classes; ++k) keys *= cap + 1;
  std::vector<int> slot(static_cast<std::size_t>(keys), -1);
  for (std::size_t i = 0; i < pops.size(); ++i) slot[static_cast<std::size_t>(key(pops[i]))] = static_cast<int>(i);

  const int n = static_cast<int>(pops.size()) * dim;
  auto index = [&](int pop, int d) { return pop * dim + d; };

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd out_rate = Eigen::VectorXd::Zero(n);
  auto add = [&](int from, int to, double rate) {
    if (rate <= 0.0) return;
    trip.emplace_back(from, to, rate);
    out_rate(from) += rate;
  };

  for (std::size_t p = 0; p < pops.size(); ++p) {
    const auto& m = pops[p];
    int total = 0;
    double weighted = 0.0;
    for (int k = 0; k < classes; ++k) {
      total += m[static_cast<std::size_t>(k)];
      weighted += inst.g(k) * m[static_cast<std::size_t>(k)];
    }
    for (int d = 0; d < dim; ++d) {
      const int from = index(static_cast<int>(p), d);
      for (int l = 0; l < dim; ++l) {
        if (l != d) add(from, index(static_cast<int>(p), l), inst.q(d, l));
      }
      for (int k = 0; k < classes; ++k) {
        auto next = m;
        if (total < cap) {
          ++next[static_cast<std::size_t>(k)];
          add(from, index(slot[static_cast<std::size_t>(key(next))], d), inst.alpha(k, d) * inst.lambda(d));
          --next[static_cast<std::size_t>(k)];
        }
        if (m[static_cast<std::size_t>(k)] > 0) {
          --next[static_cast<std::size_t>(k)];
          const double rate = inst.mu(k) * inst.c(d) * inst.g(k) * m[static_cast<std::size_t>(k)] / weighted;
          add(from, index(slot[static_cast<std::size_t>(key(next))], d), rate);
        }
      }
    }
  }

  // Balance equations x^T Q = 0, with the first equation replaced by sum x = 1.
  Eigen::SparseMatrix<double> qt(n, n);
  std::vector<Eigen::Triplet<double>> tt;
  tt.reserve(trip.size() + 2 * static_cast<std::size_t>(n));
  for (const auto& t : trip) {
    if (t.col() != 0) tt.emplace_back(t.col(), t.row(), t.value());
  }
  for (int i = 0; i < n; ++i) {
    if (i != 0) tt.emplace_back(i, i, -out_rate(i));
    tt.emplace_back(0, i, 1.0);
  }
  qt.setFromTriplets(tt.begin(), tt.end());
  qt.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(qt);
  if (lu.info() != Eigen::Success) throw std::runtime_error("truncated CTMC: factorization failed");
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw std::runtime_error("truncated CTMC: solve failed");

  DpsExpectations res;
  res.states = n;
  res.m = Eigen::MatrixXd::Zero(classes, dim);
  res.share = Eigen::MatrixXd::Zero(classes, dim);
  res.p0 = Eigen::VectorXd::Zero(dim);
  for (std::size_t p = 0; p < pops.size(); ++p) {
    const auto& m = pops[p];
    int total = 0;
    double weighted = 0.0;
    for (int k = 0; k < classes; ++k) {
      total += m[static_cast<std::size_t>(k)];
      weighted += inst.g(k) * m[static_cast<std::size_t>(k)];
    }
    for (int d = 0; d < dim; ++d) {
      const double prob = x(index(static_cast<int>(p), d));
      if (total == 0) res.p0(d) += prob;
      if (total == cap) res.boundary += prob;
      for (int k = 0; k < classes; ++k) {
        res.m(k, d) += prob * m[static_cast<std::size_t>(k)];
        if (total > 0) res.share(k, d) += prob * inst.g(k) * m[static_cast<std::size_t>(k)] / weighted;
      }
    }
  }
  return res;
}

}  // namespace oracle
