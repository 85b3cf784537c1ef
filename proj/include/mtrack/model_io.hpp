#pragma once

#include "mtrack/learners.hpp"

#include <string>
#include <string_view>

namespace mtrack {

inline constexpr int kModelFormatVersion = 1;

// JSON dump of a fitted model. Floating values are written as hexadecimal
// floating literals so a reloaded model predicts bit-identically.
std::string export_model(const FittedModel& model);

// Throws ValidationError on malformed input or an unsupported version.
FittedModel import_model(std::string_view text);

} // namespace mtrack
