#pragma once

// Finite irreducible CTMC environment: validation, stationary vector, the
// anchored singular solve Q a = b, and path sampling.

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmq/error.hpp"
#include "mmq/types.hpp"

namespace mmq {

template <typename Scalar>
class GeneratorMatrix {
 public:
  /// Wraps `rates` without any checks. Only for inputs already known to be
  /// generators (and for exercising the solver's own rank guard in tests).
  static GeneratorMatrix trusted(Matrix<Scalar> rates) { return GeneratorMatrix(std::move(rates)); }

  Eigen::Index dim() const noexcept { return rates_.rows(); }
  const Matrix<Scalar>& rates() const noexcept { return rates_; }
  Scalar operator()(Eigen::Index from, Eigen::Index to) const { return rates_(from, to); }
  Scalar exit_rate(Eigen::Index state) const { return -rates_(state, state); }

 private:
  explicit GeneratorMatrix(Matrix<Scalar> rates) : rates_(std::move(rates)) {}

  Matrix<Scalar> rates_;
};

template <typename Scalar>
struct StationaryDistribution {
  Vector<Scalar> pi;

  Eigen::Index dim() const noexcept { return pi.size(); }
  Scalar operator[](Eigen::Index d) const { return pi(d); }
};

namespace detail {

// True iff every state reaches every other state along positive off-diagonal
// rates (forward and backward reachability from state 0).
template <typename Scalar>
bool strongly_connected(const Matrix<Scalar>& q) {
  const Eigen::Index n = q.rows();
  auto reach_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        const Scalar rate = transpose ? q(v, u) : q(u, v);
        if (v != u && rate > Scalar(0) && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reach_all(false) && reach_all(true);
}

}  // namespace detail

/// Checks that `rates` is the generator of an irreducible chain. Entries are
/// never repaired: any violation is an error.
template <typename Derived>
GeneratorMatrix<typename Derived::Scalar> validate_generator(const Eigen::MatrixBase<Derived>& rates) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (rates.rows() != rates.cols() || rates.rows() < 1) {
    throw Error(Errc::NotSquare, "generator must be a non-empty square matrix");
  }
  const Eigen::Index n = rates.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar off = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!(rates(i, j) >= Scalar(0))) {
        throw Error(Errc::NegativeOffDiagonal,
                    "negative off-diagonal rate at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      off += rates(i, j);
    }
    // Absolute 1e-12 band, widened proportionally for fast states.
    const Scalar band = Scalar(1e-12) * (Scalar(1) > off ? Scalar(1) : off);
    if (abs(rates(i, i) + off) > band) {
      throw Error(Errc::RowSumNonzero, "row " + std::to_string(i) + " does not sum to zero");
    }
  }
  if (n > 1 && !detail::strongly_connected<Scalar>(rates)) {
    throw Error(Errc::Reducible, "generator is reducible");
  }
  return GeneratorMatrix<Scalar>::trusted(rates);
}

/// Solves pi Q = 0, sum(pi) = 1 as the overdetermined system [Q^T; 1^T] pi = [0; 1].
template <typename Scalar>
StationaryDistribution<Scalar> stationary_distribution(const GeneratorMatrix<Scalar>& q) {
  const Eigen::Index n = q.dim();
  if (n == 1) return {Vector<Scalar>::Ones(1)};

  Eigen::ColPivHouseholderQR<Matrix<Scalar>> rank_probe(q.rates());
  if (rank_probe.rank() < n - 1) {
    throw Error(Errc::SingularBeyondNullspace, "generator has a null space of dimension > 1");
  }

  Matrix<Scalar> system(n + 1, n);
  system.topRows(n) = q.rates().transpose();
  system.row(n).setOnes();
  Vector<Scalar> rhs = Vector<Scalar>::Zero(n + 1);
  rhs(n) = Scalar(1);

  Vector<Scalar> pi = system.colPivHouseholderQr().solve(rhs);
  pi /= pi.sum();
  return {std::move(pi)};
}

/// Returns a with Q a = b and a_0 = 0. b must be orthogonal to pi (that is
/// what makes the singular system consistent).
///
/// Solved as the anchored least-squares system [Q; e_0^T] a = [b; 0], which has
/// full column rank for an irreducible generator, then the residual is checked.
template <typename Scalar, typename Derived>
Vector<Scalar> solve_offset_vector(const GeneratorMatrix<Scalar>& q, const StationaryDistribution<Scalar>& pi,
                                   const Eigen::MatrixBase<Derived>& b) {
  using std::abs;
  const Eigen::Index n = q.dim();
  if (b.size() != n || pi.dim() != n) {
    throw Error(Errc::InvalidArgument, "offset-vector dimensions do not match the generator");
  }
  const Scalar scale = Scalar(1) + b.cwiseAbs().maxCoeff();
  if (abs(pi.pi.dot(b)) > Scalar(1e-9) * scale) {
    throw Error(Errc::RhsNotOrthogonal, "right-hand side is not orthogonal to the stationary vector");
  }
  if (n == 1) return Vector<Scalar>::Zero(1);

  Matrix<Scalar> system = Matrix<Scalar>::Zero(n + 1, n);
  system.topRows(n) = q.rates();
  system(n, 0) = Scalar(1);
  Vector<Scalar> rhs(n + 1);
  rhs.head(n) = b;
  rhs(n) = Scalar(0);

  Vector<Scalar> a = system.colPivHouseholderQr().solve(rhs);
  a(0) = Scalar(0);

  const Scalar rate_scale = Scalar(1) + q.rates().cwiseAbs().maxCoeff();
  const Scalar tol = Scalar(1e-9) * scale * rate_scale;
  if (!((q.rates() * a - b).cwiseAbs().maxCoeff() <= tol)) {
    throw Error(Errc::SolveFailed, "anchored solve of Q a = b left a residual above tolerance");
  }
  return a;
}

/// Piecewise-constant environment trajectory on [0, horizon]. Segment i starts
/// at epochs[i] in states[i] (0-based state indices).
struct EnvPath {
  std::vector<double> epochs;
  std::vector<int> states;
  double horizon = 0.0;

  /// Time spent in each state over [0, horizon].
  VectorXd occupancy(Eigen::Index dim) const;
};

EnvPath sample_environment_path(const GeneratorMatrix<double>& q, int initial_state, double horizon,
                                std::uint64_t seed);

}  // namespace mmq
