#ifndef ECM_ERRORS_H_
#define ECM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ecm {

// All library failures derive from Error so callers can catch one type and
// still branch on the category (the CLI maps categories to exit codes).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external input: unreadable files, bad JSON/CSV, wrong schema.
class InputError : public Error {
 public:
  using Error::Error;
};

// A value is outside the domain an operation accepts.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A requested key (e.g. class id) does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Precision is 0/0 at the requested threshold.
class UndefinedPrecisionError : public Error {
 public:
  using Error::Error;
};

// An iterative method failed or produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A size guard was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecm

#endif  // ECM_ERRORS_H_
