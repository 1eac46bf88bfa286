#pragma once

#include <stdexcept>
#include <string>

namespace qsa {

// Definition-file or option syntax problems. CLI exit code 2.
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// A configured cap was exceeded (state dimension, search nodes, candidate
// spaces). Distinct from a definitive negative answer. CLI exit code 3.
struct budget_error : std::runtime_error {
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Two routes that must agree disagreed, or a mandatory verification of a
// constructed object failed. CLI exit code 4.
struct inconsistency_error : std::runtime_error {
    explicit inconsistency_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical tolerance for "perfect" equality of operators. All desk-scale
// instances have entries built from small rationals and square roots, so
// double precision leaves ample headroom below this.
inline constexpr double default_tolerance = 1e-9;

// Hard ceiling on any materialized basis dimension; overridable through the
// QSA_MAX_DIM environment variable.
int max_state_dimension();

}  // namespace qsa
