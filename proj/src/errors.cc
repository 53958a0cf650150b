#include "lrsconflate/errors.h"

namespace lrsconflate {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kIoError:
      return "IoError";
    case ErrorCode::kMalformedInput:
      return "MalformedInput";
    case ErrorCode::kMissingField:
      return "MissingField";
    case ErrorCode::kDuplicateSequence:
      return "DuplicateSequence";
    case ErrorCode::kUnclassifiableName:
      return "UnclassifiableName";
    case ErrorCode::kDegenerateRoute:
      return "DegenerateRoute";
    case ErrorCode::kEmptyNetwork:
      return "EmptyNetwork";
    case ErrorCode::kNoMatchableInput:
      return "NoMatchableInput";
  }
  return "Unknown";
}

}  // namespace lrsconflate
