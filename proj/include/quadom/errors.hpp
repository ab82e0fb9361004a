#pragma once

#include <stdexcept>
#include <string>

namespace quadom {

// Base class for everything thrown by the library. The CLI maps subclasses to
// process exit codes; tests match on the concrete types.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// A SystemParams field violates its invariant. Message names the offending field.
struct invalid_parameter : error {
    explicit invalid_parameter(const std::string& field, const std::string& why)
        : error("invalid parameter '" + field + "': " + why), field(field) {}
    std::string field;
};

// Configuration file problems (unknown key, unparsable value, missing file).
struct config_error : error {
    using error::error;
};

// Steady-state solver could not produce a physical root.
struct no_physical_root : error {
    using error::error;
};
struct degenerate_coupling : error {
    using error::error;
};
struct no_convergence : error {
    using error::error;
};
struct infeasible_branch : error {
    using error::error;
};

// Mean-field integration guards.
struct step_size_error : error {
    using error::error;
};
struct divergence_error : error {
    using error::error;
};

// Linear-algebra layer.
struct eigensolver_error : error {
    using error::error;
};
struct singular_matrix_error : error {
    using error::error;
};

// Fock-space verification exceeded its configured memory budget.
struct memory_budget_error : error {
    using error::error;
};

} // namespace quadom
