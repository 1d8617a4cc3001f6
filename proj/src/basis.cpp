#include "svpl/basis.hpp"

#include <cmath>

#include "svpl/errors.hpp"

namespace svpl {

BasisSpec BasisSpec::from_name(const std::string& name) {
  if (name == "linear") return BasisSpec(Kind::Linear);
  if (name == "dgp-aware") return BasisSpec(Kind::DgpAware);
  raise(ErrorCode::Config, "unknown basis preset: " + name);
}

std::string BasisSpec::name() const {
  return kind_ == Kind::Linear ? "linear" : "dgp-aware";
}

int BasisSpec::dimension(int num_covariates) const {
  if (kind_ == Kind::Linear) return num_covariates + 1;
  require(num_covariates >= 2, ErrorCode::DimensionMismatch,
          "dgp-aware basis needs at least two covariates");
  return num_covariates + 8;
}

Eigen::RowVectorXd BasisSpec::expand(const Eigen::RowVectorXd& x) const {
  const int d = static_cast<int>(x.size());
  Eigen::RowVectorXd phi(dimension(d));
  phi[0] = 1.0;
  phi.segment(1, d) = x;
  if (kind_ == Kind::Linear) return phi;

  const double e1 = std::exp(x[0]);
  const double e2 = std::exp(x[1]);
  const double ind = x[0] + x[1] >= 0.5 ? 1.0 : 0.0;
  int j = d + 1;
  phi[j++] = e1;
  phi[j++] = e2;
  phi[j++] = x[1] * x[1];
  phi[j++] = ind;
  phi[j++] = ind * e1;
  phi[j++] = ind * x[1];
  phi[j++] = ind * x[1] * x[1];
  return phi;
}

}  // namespace svpl
