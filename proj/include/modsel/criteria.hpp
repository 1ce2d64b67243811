#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modsel/errors.hpp"
#include "modsel/types.hpp"

namespace modsel {

// Penalty coefficient lambda_T for the information-criterion family
// log(MSE) + lambda_T p / T.
struct PenaltyKind {
  enum class Kind { Aic, Bic, Hqic, Ric, Fixed, Custom };
  Kind kind = Kind::Aic;
  double hqic_c = 2.01;     // hqic needs c > 2
  double fixed_lambda = 0.0;
  std::function<double(Index T, double pdim)> custom;

  static PenaltyKind make(Kind k) {
    PenaltyKind p;
    p.kind = k;
    return p;
  }
  static PenaltyKind aic() { return make(Kind::Aic); }
  static PenaltyKind bic() { return make(Kind::Bic); }
  static PenaltyKind hqic(double c = 2.01) {
    PenaltyKind p = make(Kind::Hqic);
    p.hqic_c = c;
    return p;
  }
  static PenaltyKind ric() { return make(Kind::Ric); }
  static PenaltyKind fixed(double lambda) {
    PenaltyKind p = make(Kind::Fixed);
    p.fixed_lambda = lambda;
    return p;
  }

  std::string label() const {
    switch (kind) {
      case Kind::Aic: return "aic";
      case Kind::Bic: return "bic";
      case Kind::Hqic: return "hqic";
      case Kind::Ric: return "ric";
      case Kind::Fixed: return "fixed";
      case Kind::Custom: return "custom";
    }
    return "?";
  }

  // Fixed lambda <= 1 leaves the minimax class; legal but worth flagging.
  std::optional<std::string> warning() const {
    if (kind == Kind::Fixed && fixed_lambda <= 1.0) {
      return "fixed penalty lambda <= 1 is outside the minimax class";
    }
    return std::nullopt;
  }
};

inline double penalty_value(const PenaltyKind& p, Index T, double pdim) {
  if (T < 2) throw BadArgsError("penalty_value: T must be >= 2");
  if (pdim < 1) throw BadArgsError("penalty_value: pdim must be >= 1");
  switch (p.kind) {
    case PenaltyKind::Kind::Aic:
      return 2.0;
    case PenaltyKind::Kind::Bic:
      return std::log(static_cast<double>(T));
    case PenaltyKind::Kind::Hqic:
      if (!(p.hqic_c > 2.0)) throw BadArgsError("penalty_value: hqic needs c > 2");
      if (T < 3) throw BadArgsError("penalty_value: hqic needs T >= 3");
      return p.hqic_c * std::log(std::log(static_cast<double>(T)));
    case PenaltyKind::Kind::Ric:
      return 2.0 * std::log(pdim);
    case PenaltyKind::Kind::Fixed:
      return p.fixed_lambda;
    case PenaltyKind::Kind::Custom:
      if (!p.custom) throw BadArgsError("penalty_value: custom penalty not set");
      return p.custom(T, pdim);
  }
  throw BadArgsError("penalty_value: unknown kind");
}

// Score of one candidate under one criterion; total = loss_part + penalty_part.
struct CriterionScore {
  std::string model_id;
  std::string criterion;
  Index pdim = 0;
  double loss_part = 0.0;
  double penalty_part = 0.0;
  double total = 0.0;
};

inline double cv_score(const Eigen::VectorXd& residuals, LossKind loss = LossKind::Squared) {
  if (residuals.size() == 0) throw EmptyError("cv_score: empty residual vector");
  if (!residuals.allFinite()) throw NonFiniteError("cv_score: non-finite residual");
  if (loss == LossKind::Squared) return residuals.squaredNorm() / static_cast<double>(residuals.size());
  return residuals.array().abs().mean();
}

// log(MSE) + lambda_T p / T on full-sample residuals.
inline CriterionScore ic_score(const Eigen::VectorXd& full_sample_residuals, double pdim, Index T,
                               const PenaltyKind& penalty) {
  if (full_sample_residuals.size() != T) {
    throw DimensionMismatchError("ic_score: residual vector must have length T");
  }
  if (!full_sample_residuals.allFinite()) throw NonFiniteError("ic_score: non-finite residual");
  const double mse = full_sample_residuals.squaredNorm() / static_cast<double>(T);
  if (mse <= 1e-300) {
    throw PerfectFitError("ic_score: zero MSE, log-criterion undefined");
  }
  CriterionScore s;
  s.criterion = "ic[" + penalty.label() + "]";
  s.pdim = static_cast<Index>(pdim);
  s.loss_part = std::log(mse);
  s.penalty_part = penalty_value(penalty, T, pdim) * pdim / static_cast<double>(T);
  s.total = s.loss_part + s.penalty_part;
  return s;
}

// Mean forecast loss over the track's evaluation range; divisor T - start.
inline CriterionScore poos_score(const PredictionTrack& track, const Eigen::VectorXd& y,
                                 LossKind loss = LossKind::Squared) {
  const Index T = y.size();
  if (track.start_index < 0 || track.start_index >= T ||
      track.preds.size() != T - track.start_index) {
    throw DimensionMismatchError("poos_score: track does not align with y");
  }
  const Eigen::VectorXd resid = y.tail(T - track.start_index) - track.preds;
  CriterionScore s;
  s.criterion = track.scheme == TrackScheme::Rolling ? "rolling" : "recursive";
  s.loss_part = cv_score(resid, loss);
  s.penalty_part = 0.0;
  s.total = s.loss_part;
  return s;
}

// Argmin of total. Exact ties go to the smaller pdim, then to the earlier
// list position.
inline std::size_t select_index(const std::vector<CriterionScore>& scores) {
  if (scores.empty()) throw EmptyError("select: no scores");
  for (const auto& s : scores) {
    if (s.criterion != scores.front().criterion) {
      throw MixedCriteriaError("select: scores mix criteria '" + scores.front().criterion +
                               "' and '" + s.criterion + "'");
    }
    if (!std::isfinite(s.total)) {
      throw NonFiniteError("select: non-finite total for model '" + s.model_id + "'");
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].total < scores[best].total ||
        (scores[i].total == scores[best].total && scores[i].pdim < scores[best].pdim)) {
      best = i;
    }
  }
  return best;
}

inline std::string select(const std::vector<CriterionScore>& scores) {
  return scores[select_index(scores)].model_id;
}

}  // namespace modsel
