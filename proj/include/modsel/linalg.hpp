#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "modsel/errors.hpp"
#include "modsel/types.hpp"

namespace modsel::detail {

// Pivot tolerance for rank decisions, relative to the largest pivot.
inline constexpr double kRankTol = 1e-10;

inline Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& X, std::span<const Index> cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Index>(cols.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = X.col(cols[j]);
  return out;
}

struct DesignQr {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;

  explicit DesignQr(const Eigen::MatrixXd& A) : qr(A.rows(), A.cols()) {
    qr.setThreshold(kRankTol);
    qr.compute(A);
  }

  Index rank() const { return qr.rank(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return qr.solve(b); }

  // Hat-matrix diagonal: rowwise squared norms of the thin Q factor.
  Eigen::VectorXd leverage(Index nrows) const {
    Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(nrows, qr.rank());
    return thin_q.rowwise().squaredNorm();
  }
};

// Full-rank least-squares solve via column-pivoted QR on the design matrix.
inline Eigen::VectorXd qr_solve_full_rank(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                          const std::string& what) {
  DesignQr d(A);
  if (d.rank() < A.cols()) {
    throw RankDeficientError(what + ": design rank " + std::to_string(d.rank()) + " < p = " +
                             std::to_string(A.cols()));
  }
  return d.solve(b);
}

// Solves the p x p normal-equation system G beta = c via column-pivoted QR,
// using the rank of G as the singularity signal. Deleted-row refits and
// incremental window fits all come through here.
inline Eigen::VectorXd solve_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                                  const std::string& what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G.rows(), G.cols());
  qr.setThreshold(kRankTol);
  qr.compute(G);
  if (qr.rank() < G.cols()) {
    throw RankDeficientError(what + ": local normal equations are singular (rank " +
                             std::to_string(qr.rank()) + " < " + std::to_string(G.cols()) + ")");
  }
  return qr.solve(c);
}

// Accumulated normal equations for a row subset of a fixed design; rows can
// be removed (deleted-residual refits) or added/dropped (moving windows).
class GramSystem {
 public:
  GramSystem(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y, double ridge_lambda)
      : Xs_(Xs), y_(y) {
    const Index p = Xs.cols();
    G_full_ = Xs.transpose() * Xs;
    if (ridge_lambda > 0.0) G_full_ += ridge_lambda * Eigen::MatrixXd::Identity(p, p);
    c_full_ = Xs.transpose() * y;
  }

  // beta for the fit that deletes rows [lo, hi).
  Eigen::VectorXd solve_deleting(Index lo, Index hi, const std::string& what) const {
    Eigen::MatrixXd G = G_full_;
    Eigen::VectorXd c = c_full_;
    for (Index r = lo; r < hi; ++r) {
      G.noalias() -= Xs_.row(r).transpose() * Xs_.row(r);
      c.noalias() -= Xs_.row(r).transpose() * y_[r];
    }
    return solve_gram(G, c, what);
  }

  // beta for the fit that deletes an arbitrary row set.
  Eigen::VectorXd solve_deleting(std::span<const Index> rows, const std::string& what) const {
    Eigen::MatrixXd G = G_full_;
    Eigen::VectorXd c = c_full_;
    for (Index r : rows) {
      G.noalias() -= Xs_.row(r).transpose() * Xs_.row(r);
      c.noalias() -= Xs_.row(r).transpose() * y_[r];
    }
    return solve_gram(G, c, what);
  }

  const Eigen::MatrixXd& design() const { return Xs_; }
  const Eigen::VectorXd& response() const { return y_; }

 private:
  Eigen::MatrixXd Xs_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd G_full_;
  Eigen::VectorXd c_full_;
};

}  // namespace modsel::detail
