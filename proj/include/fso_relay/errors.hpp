#ifndef FSO_RELAY_ERRORS_HPP
#define FSO_RELAY_ERRORS_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace fso_relay {

/// Raised when an input violates a documented constraint. `field()` names the
/// offending parameter so configuration errors can be reported precisely.
class validation_error : public std::invalid_argument {
public:
    validation_error(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Relay geometry that cannot be realized (distances not summing to d_sd,
/// an empty placement grid, ...).
class geometry_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A full-CSI gain whose denominator vanished.
class degenerate_input_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

inline void require_finite(double v, const char* field) {
    if (!std::isfinite(v)) throw validation_error(field, "must be finite");
}

inline void require_positive(double v, const char* field) {
    require_finite(v, field);
    if (!(v > 0.0)) throw validation_error(field, "must be strictly positive");
}

inline void require_non_negative(double v, const char* field) {
    require_finite(v, field);
    if (v < 0.0) throw validation_error(field, "must be non-negative");
}

} // namespace detail
} // namespace fso_relay

#endif
