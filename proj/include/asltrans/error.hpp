#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace asltrans {

// Base for every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& path)
      : Error("cannot read or write '" + path + "'"), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Malformed input text. `line` is 1-based, 0 when the input is not a file.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(format(source, line, what)), source_(std::move(source)), line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line, const std::string& what) {
    std::string msg = source;
    if (line > 0) msg += ":" + std::to_string(line);
    if (!msg.empty()) msg += ": ";
    return msg + what;
  }

  std::string source_;
  std::size_t line_;
};

// Input is well formed but cannot be used (empty corpus, split too small, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// An explicit computation refused to run because it would be too large.
class SizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace asltrans
