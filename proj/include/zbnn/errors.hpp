#ifndef ZBNN_ERRORS_HPP
#define ZBNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace zbnn {

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidConfig : std::runtime_error {
    explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidAxis : std::runtime_error {
    explicit InvalidAxis(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidLabel : std::runtime_error {
    explicit InvalidLabel(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateWitness : std::runtime_error {
    explicit DegenerateWitness(const std::string& what) : std::runtime_error(what) {}
};

struct InapplicableNetwork : std::runtime_error {
    explicit InapplicableNetwork(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct ResourceLimit : std::runtime_error {
    explicit ResourceLimit(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace zbnn

#endif  // ZBNN_ERRORS_HPP
