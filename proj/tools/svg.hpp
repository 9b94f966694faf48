#pragma once

#include <string>
#include <utility>
#include <vector>

#include "torsionlab/geometry.hpp"
#include "torsionlab/stability.hpp"

namespace tlab::svg {

/// Closed boundaries, one stroke colour per curve, in a common frame.
std::string boundaries(const std::vector<std::pair<std::string, StarDomain>>& curves, int samples = 512);

/// log-log scatter of each fit's (x, y) columns with the fitted line.
std::string loglog(const std::vector<StabilityRecord>& records, const std::vector<ExponentFit>& fits);

}  // namespace tlab::svg
