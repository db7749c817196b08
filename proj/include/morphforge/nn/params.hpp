#pragma once

#include <vector>

#include "morphforge/core/archive.hpp"
#include "morphforge/nn/var.hpp"

namespace morphforge::nn {

/// Adds every parameter to the archive under its name.
void store_parameters(const std::vector<NamedParam>& params, Archive& archive);

/// Overwrites parameter values in place; StructuralError on a missing key or
/// shape mismatch.
void restore_parameters(const std::vector<NamedParam>& params,
                        const Archive& archive);

}  // namespace morphforge::nn
