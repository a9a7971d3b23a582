#pragma once

#include <string>

#include "spdddpm/errors.hpp"

namespace spdddpm {

enum class Metric { affine, frobenius };

Metric parse_metric(const std::string& name);
std::string metric_name(Metric metric);

}  // namespace spdddpm
