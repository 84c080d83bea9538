#include "dpsgd/param_vector.hpp"

#include <cmath>
#include <string>

#include "dpsgd/error.hpp"

namespace dpsgd {

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) throw NumericFault(std::string(what) + ": non-finite value", k);
  }
}

ParamVector::ParamVector(std::size_t dim) : values_(dim, 0.0) {
  if (dim == 0) throw ConfigError("ParamVector: dimension must be positive");
}

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("ParamVector: dimension must be positive");
  require_finite(values_, "ParamVector");
}

}  // namespace dpsgd
