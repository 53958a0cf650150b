#ifndef LRSCONFLATE_ERRORS_H_
#define LRSCONFLATE_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrsconflate {

enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  kMalformedInput,
  kMissingField,
  kDuplicateSequence,
  kUnclassifiableName,
  kDegenerateRoute,
  kEmptyNetwork,
  kNoMatchableInput,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every error raised by the library carries one of the codes above so callers
// (the pipeline, the CLI) can map it to an outcome or an exit status.
class ConflationError : public std::runtime_error {
 public:
  ConflationError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lrsconflate

#endif  // LRSCONFLATE_ERRORS_H_
