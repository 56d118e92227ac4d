#pragma once

#include <functional>
#include <span>

namespace varorder {

/// Log density with gradient: returns log p(x) and writes d log p / d x into
/// grad. A non-finite return marks an invalid point; grad contents are then
/// unspecified and the caller must not use them.
using TargetDensity = std::function<double(std::span<const double>, std::span<double>)>;

}  // namespace varorder
