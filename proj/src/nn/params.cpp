#include "morphforge/nn/params.hpp"

#include "morphforge/core/error.hpp"

namespace morphforge::nn {

void store_parameters(const std::vector<NamedParam>& params, Archive& archive) {
  for (const auto& p : params) {
    if (!archive.entries.emplace(p.name, p.var.value()).second) {
      throw StructuralError("duplicate parameter name " + p.name);
    }
  }
}

void restore_parameters(const std::vector<NamedParam>& params,
                        const Archive& archive) {
  for (const auto& p : params) {
    const auto it = archive.entries.find(p.name);
    if (it == archive.entries.end()) {
      throw StructuralError("checkpoint has no entry " + p.name);
    }
    if (!it->second.same_shape(p.var.value())) {
      throw StructuralError("checkpoint entry " + p.name + " has shape " +
                            it->second.shape_string() + ", expected " +
                            p.var.value().shape_string());
    }
    Var v = p.var;
    v.mutable_value() = it->second;
  }
}

}  // namespace morphforge::nn
