#include "doctest.h"

#include "svpl/dgp.hpp"
#include "svpl/glb.hpp"

using namespace svpl;

namespace {

// Fixed per-arm bounds, independent of x and level; handy for the
// hand-checked examples.
class FixedBounds final : public BoundedArmRegressor {
 public:
  FixedBounds(Eigen::VectorXd lo, Eigen::VectorXd hi)
      : lo_(std::move(lo)), hi_(std::move(hi)) {
    meta_.method = "fixed";
  }
  double predict(const Eigen::RowVectorXd&, Arm a) const override {
    return 0.5 * (lo_[a] + hi_[a]);
  }
  double lower(const Eigen::RowVectorXd&, Arm a, double) const override { return lo_[a]; }
  double upper(const Eigen::RowVectorXd&, Arm a, double) const override { return hi_[a]; }
  int num_arms() const override { return static_cast<int>(lo_.size()); }
  const RegressorMeta& meta() const override { return meta_; }

 private:
  Eigen::VectorXd lo_, hi_;
  RegressorMeta meta_;
};

std::shared_ptr<FixedBounds> fixed(std::initializer_list<double> lo,
                                   std::initializer_list<double> hi) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(lo.size()));
  Eigen::VectorXd h(static_cast<Eigen::Index>(hi.size()));
  int i = 0;
  for (double v : lo) l[i++] = v;
  i = 0;
  for (double v : hi) h[i++] = v;
  return std::make_shared<FixedBounds>(std::move(l), std::move(h));
}

std::vector<int> all_rows(const Dataset& ds) {
  std::vector<int> idx(static_cast<std::size_t>(ds.rows()));
  for (int i = 0; i < ds.rows(); ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

Eigen::RowVectorXd origin4() {
  Eigen::RowVectorXd x(4);
  x << 0, 0, 0, 0;
  return x;
}

}  // namespace

TEST_CASE("maxmin arm picks the greatest lower bound, ties toward low index") {
  auto strict = fixed({1, 2, 3, 2, 1}, {2, 3, 4, 3, 2});
  CHECK(glb_maxmin(origin4(), *strict, 0.1) == 2);

  auto tied = fixed({1, 1, 1, 1, 1}, {2, 2, 2, 2, 2});
  CHECK(glb_maxmin(origin4(), *tied, 0.1) == 0);

  auto oracle = fixed({4, 4, -1, -1, -1}, {4, 4, -1, -1, -1});
  CHECK(glb_maxmin(origin4(), *oracle, 0.1) == 0);
}

TEST_CASE("glb set keeps arms whose upper bound reaches the benchmark") {
  GlbPolicy policy;
  policy.bounds = fixed({4.5, 4, 0, -1, -1}, {5, 5, 0, 0, 0});
  policy.alpha = 0.1;
  CHECK(glb_set(origin4(), policy).arms() == std::vector<Arm>{0, 1});

  // zero-width oracle bounds reduce to the argmax tie set
  GlbPolicy oracle;
  oracle.bounds = fixed({4, 4, -1, -1, -1}, {4, 4, -1, -1, -1});
  oracle.alpha = 0.1;
  CHECK(glb_set(origin4(), oracle).arms() == std::vector<Arm>{0, 1});

  // uninformative bounds admit every arm
  GlbPolicy wide;
  wide.bounds = fixed({-10, -9, -8, -10, -9}, {10, 10, 10, 10, 10});
  wide.alpha = 0.1;
  CHECK(glb_set(origin4(), wide).size() == 5);
}

TEST_CASE("glb set always contains the benchmark arm") {
  dgp::SyntheticConfig cfg;
  cfg.n = 1500;
  cfg.seed = 61;
  Dataset ds = dgp::generate(cfg);
  auto model = std::shared_ptr<const BoundedArmRegressor>(
      OlsArmRegressor::fit(ds, all_rows(ds), BasisSpec(BasisSpec::Kind::Linear)));

  Rng rng(15);
  for (double alpha : {0.02, 0.1, 0.3, 0.8}) {
    GlbPolicy policy;
    policy.bounds = model;
    policy.alpha = alpha;
    for (int t = 0; t < 50; ++t) {
      Eigen::RowVectorXd x(4);
      for (int j = 0; j < 4; ++j) x[j] = rng.next_gaussian();
      Arm benchmark = glb_maxmin(x, *model, alpha);
      CHECK(glb_set(x, policy).contains(benchmark));
    }
  }
}

TEST_CASE("glb sets grow as alpha shrinks for gaussian bounds") {
  dgp::SyntheticConfig cfg;
  cfg.n = 1200;
  cfg.seed = 62;
  Dataset ds = dgp::generate(cfg);
  auto model = std::shared_ptr<const BoundedArmRegressor>(
      OlsArmRegressor::fit(ds, all_rows(ds), BasisSpec(BasisSpec::Kind::Linear)));

  Rng rng(16);
  const std::vector<double> alphas{0.4, 0.2, 0.1, 0.05, 0.01};
  for (int t = 0; t < 40; ++t) {
    Eigen::RowVectorXd x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.next_gaussian();
    TreatmentSet previous;
    for (double alpha : alphas) {  // shrinking alpha: sets must only grow
      GlbPolicy policy;
      policy.bounds = model;
      policy.alpha = alpha;
      TreatmentSet current = glb_set(x, policy);
      for (Arm a : previous.arms()) CHECK(current.contains(a));
      previous = current;
    }
  }
}

TEST_CASE("glb policy wrapper carries meta and evaluates") {
  GlbPolicy policy;
  policy.bounds = fixed({1, 0, 0, 0, 0}, {2, 0.5, 0.5, 0.5, 0.5});
  policy.alpha = 0.2;
  SetValuedPolicy wrapped = make_glb_policy(policy);
  CHECK(wrapped.meta.method == "glb");
  CHECK(wrapped.meta.alpha == doctest::Approx(0.2));
  CHECK(wrapped.evaluate(origin4()).arms() == std::vector<Arm>{0});
}
