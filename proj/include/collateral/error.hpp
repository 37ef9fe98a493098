#pragma once

#include <stdexcept>
#include <string>

namespace collateral {

/// Failure families. Codes let callers branch without matching message text;
/// the CLI maps every code except kInternal to exit status 2.
enum class ErrorCode {
    kInvalidArgument,      // bad parameter or violated call precondition
    kValidation,           // input data breaks a structural invariant
    kParse,                // malformed input file
    kExtentMismatch,       // reference/hypothesis extents differ
    kMissingTier,          // requested TextGrid tier not present
    kUnmappedLabel,        // text has no entry in the label map
    kUnsupportedChannels,  // WAV with channel count != 1
    kUnsupportedFormat,    // WAV that is not 16-bit integer PCM
    kTruncatedFile,        // file ends inside a declared chunk or payload
    kIo,                   // filesystem read/write failure
    kInternal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace collateral
