#ifndef PMLMC_ERRORS_HPP
#define PMLMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pmlmc {

// Invalid user input: bad config key, infeasible tolerance, malformed file.
// The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown: singular system, non-convergence, rejected realization
// that could not be redrawn. The CLI maps this to exit code 3.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw config_error(msg);
}

inline void require_numeric(bool cond, const std::string& msg) {
    if (!cond) throw numerical_error(msg);
}

} // namespace pmlmc

#endif
