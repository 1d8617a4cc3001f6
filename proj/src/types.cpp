#include "svpl/types.hpp"

#include <algorithm>
#include <cmath>

namespace svpl {

TreatmentSet::TreatmentSet(std::vector<Arm> arms, int num_arms) : arms_(std::move(arms)) {
  std::sort(arms_.begin(), arms_.end());
  arms_.erase(std::unique(arms_.begin(), arms_.end()), arms_.end());
  for (Arm a : arms_) {
    require(a >= 0 && a < num_arms, ErrorCode::InvalidArgument,
            "TreatmentSet: arm index out of range");
  }
}

TreatmentSet TreatmentSet::full(int num_arms) {
  std::vector<Arm> all(static_cast<std::size_t>(num_arms));
  for (int a = 0; a < num_arms; ++a) all[static_cast<std::size_t>(a)] = a;
  return TreatmentSet(std::move(all), num_arms);
}

TreatmentSet TreatmentSet::single(Arm a, int num_arms) {
  return TreatmentSet({a}, num_arms);
}

bool TreatmentSet::contains(Arm a) const {
  return std::binary_search(arms_.begin(), arms_.end(), a);
}

bool TreatmentSet::intersects(const TreatmentSet& other) const {
  auto it = arms_.begin();
  auto jt = other.arms_.begin();
  while (it != arms_.end() && jt != other.arms_.end()) {
    if (*it == *jt) return true;
    (*it < *jt) ? ++it : ++jt;
  }
  return false;
}

int TreatmentSet::intersection_size(const TreatmentSet& other) const {
  int count = 0;
  auto it = arms_.begin();
  auto jt = other.arms_.begin();
  while (it != arms_.end() && jt != other.arms_.end()) {
    if (*it == *jt) {
      ++count;
      ++it;
      ++jt;
    } else if (*it < *jt) {
      ++it;
    } else {
      ++jt;
    }
  }
  return count;
}

Arm TreatmentSet::lowest() const {
  require(!arms_.empty(), ErrorCode::EmptySet, "TreatmentSet::lowest on empty set");
  return arms_.front();
}

Dataset::Dataset(Eigen::MatrixXd X, std::vector<Arm> A, Eigen::VectorXd Y, int num_arms,
                 std::optional<OracleTruth> oracle)
    : X_(std::move(X)), A_(std::move(A)), Y_(std::move(Y)), num_arms_(num_arms),
      oracle_(std::move(oracle)) {
  const auto n = X_.rows();
  require(num_arms_ > 1, ErrorCode::InvalidArgument, "Dataset: need K > 1 arms");
  require(static_cast<Eigen::Index>(A_.size()) == n && Y_.size() == n,
          ErrorCode::LengthMismatch, "Dataset: column lengths differ");
  require(X_.allFinite(), ErrorCode::InvalidArgument, "Dataset: non-finite covariate");
  require(Y_.allFinite(), ErrorCode::InvalidArgument, "Dataset: non-finite outcome");
  for (Arm a : A_) {
    require(a >= 0 && a < num_arms_, ErrorCode::InvalidArgument,
            "Dataset: arm label outside {1,...,K}");
  }
  if (oracle_) {
    require(oracle_->mu.rows() == n && oracle_->mu.cols() == num_arms_,
            ErrorCode::LengthMismatch, "Dataset: oracle mu shape mismatch");
    require(static_cast<Eigen::Index>(oracle_->optimal_sets.size()) == n,
            ErrorCode::LengthMismatch, "Dataset: oracle optimal_sets length mismatch");
    for (const auto& s : oracle_->optimal_sets) {
      require(!s.empty(), ErrorCode::EmptyTruth, "Dataset: empty optimal set");
    }
    if (oracle_->potential_outcomes) {
      require(oracle_->potential_outcomes->rows() == n &&
                  oracle_->potential_outcomes->cols() == num_arms_,
              ErrorCode::LengthMismatch, "Dataset: potential outcomes shape mismatch");
    }
  }
}

const OracleTruth& Dataset::oracle() const {
  require(oracle_.has_value(), ErrorCode::OracleRequired,
          "Dataset: oracle truth not available");
  return *oracle_;
}

FoldSplit split_three_way(const Dataset& ds, double frac_b, double frac_train,
                          double frac_cal, Rng& rng) {
  const int n = ds.rows();
  require(n >= 3, ErrorCode::InvalidArgument, "split_three_way: need n >= 3");
  require(frac_b >= 0.0 && frac_train >= 0.0 && frac_cal >= 0.0,
          ErrorCode::InvalidArgument, "split_three_way: negative fraction");
  const double total = frac_b + frac_train + frac_cal;
  require(total <= 1.0 + 1e-12, ErrorCode::InvalidArgument,
          "split_three_way: fractions sum above 1");

  // Nudge so exact thirds and tenths survive binary round-off.
  const int n_b = static_cast<int>(std::floor(frac_b * n + 1e-9));
  const int n_train = static_cast<int>(std::floor(frac_train * n + 1e-9));
  const int n_used = static_cast<int>(std::floor(total * n + 1e-9));
  const int n_cal = n_used - n_b - n_train;  // remainder lands in the calibration fold

  require(n_b > 0 && n_train > 0 && n_cal > 0, ErrorCode::EmptyFold,
          "split_three_way: a fold would be empty");

  std::vector<int> order = rng.permutation(n);
  FoldSplit split;
  split.idx_b.assign(order.begin(), order.begin() + n_b);
  split.idx_train.assign(order.begin() + n_b, order.begin() + n_b + n_train);
  split.idx_cal.assign(order.begin() + n_b + n_train, order.begin() + n_used);
  return split;
}

TreatmentSet argmax_set(const Eigen::VectorXd& values, double tol) {
  require(values.size() > 0, ErrorCode::InvalidArgument, "argmax_set: empty values");
  require(values.allFinite(), ErrorCode::InvalidArgument, "argmax_set: non-finite value");
  require(tol >= 0.0, ErrorCode::InvalidArgument, "argmax_set: negative tolerance");
  const double best = values.maxCoeff();
  std::vector<Arm> arms;
  for (Eigen::Index a = 0; a < values.size(); ++a) {
    if (values[a] >= best - tol) arms.push_back(static_cast<Arm>(a));
  }
  return TreatmentSet(std::move(arms), static_cast<int>(values.size()));
}

Arm argmax_lowest(const Eigen::VectorXd& values) {
  require(values.size() > 0, ErrorCode::InvalidArgument, "argmax_lowest: empty values");
  Arm best = 0;
  for (Eigen::Index a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = static_cast<Arm>(a);
  }
  return best;
}

}  // namespace svpl
