#ifndef HGNN_ERRORS_HPP
#define HGNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hgnn {

// Base class for all toolkit errors. The CLI maps the concrete types to
// exit codes (validation 2, numeric 3, I/O 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace hgnn

#endif
