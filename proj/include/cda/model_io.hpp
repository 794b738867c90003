#pragma once
#include <string>

#include "cda/models.hpp"

namespace cda {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON document of a fitted model; see docs/model_format.md.
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

}  // namespace cda
