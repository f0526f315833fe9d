#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace glassyqpe {

/// Requested value lies outside what a distribution family can attain.
class RangeError : public std::out_of_range {
public:
    RangeError(const std::string &what_for, double lower, double upper)
        : std::out_of_range(describe(what_for, lower, upper)), lower_(lower), upper_(upper) {}

    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }

private:
    static std::string describe(const std::string &what_for, double lower, double upper) {
        std::ostringstream os;
        os.precision(6);
        os << what_for << " (attainable range [" << lower << ", " << upper << "])";
        return os.str();
    }

    double lower_;
    double upper_;
};

class GridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A root search could not find two grid points on opposite sides of the target.
class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace glassyqpe
