#pragma once

#include "delayrecon/core.hpp"

#include <doctest.h>

#include <string>
#include <vector>

namespace testing {

// Collects warnings for the lifetime of the guard.
struct CaptureWarnings {
    std::vector<std::string> messages;
    delayrecon::WarningSink previous;
    CaptureWarnings() {
        previous = delayrecon::set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
    }
    ~CaptureWarnings() { delayrecon::set_warning_sink(previous); }
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

}  // namespace testing
