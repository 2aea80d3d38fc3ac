#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace negscope {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  kParse,
  kValidation,
  kShape,
  kState,
  kNumeric,
};

// Base exception for everything thrown by the core. The C API maps the code
// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed input file. line is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& msg)
      : Error(ErrorCode::kParse, format(path, line, msg)),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& path, std::size_t line,
                            const std::string& msg) {
    std::string out = path.empty() ? std::string("<input>") : path;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + msg;
  }

  std::string path_;
  std::size_t line_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace negscope
