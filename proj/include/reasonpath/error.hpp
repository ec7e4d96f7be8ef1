#pragma once

#include <stdexcept>
#include <string>

namespace reasonpath {

// Exception categories. The CLI maps each category to an exit code.
enum class ErrorKind {
  config,      // bad parameters or configuration
  data,        // malformed, inconsistent, or missing input data
  transport,   // network failures after retries
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define REASONPATH_DEFINE_ERROR(Name, Kind)                               \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

REASONPATH_DEFINE_ERROR(IngestError, data)
REASONPATH_DEFINE_ERROR(DuplicateError, data)
REASONPATH_DEFINE_ERROR(LabelError, data)
REASONPATH_DEFINE_ERROR(LookupError, data)
REASONPATH_DEFINE_ERROR(SchemaError, data)
REASONPATH_DEFINE_ERROR(ValidationError, data)
REASONPATH_DEFINE_ERROR(FitError, data)
REASONPATH_DEFINE_ERROR(IoError, data)
REASONPATH_DEFINE_ERROR(DomainError, config)
REASONPATH_DEFINE_ERROR(ConfigError, config)
REASONPATH_DEFINE_ERROR(TransportError, transport)
REASONPATH_DEFINE_ERROR(ProtocolError, transport)

#undef REASONPATH_DEFINE_ERROR

}  // namespace reasonpath
