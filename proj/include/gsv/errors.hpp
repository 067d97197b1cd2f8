#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsv {

/// Base for every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& path, const std::string& what = "cannot open file")
      : Error(what + ": " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed input. `row` is 1-based over the file's lines (header is row 1), 0 if not row-specific.
class FormatError : public Error {
 public:
  FormatError(const std::string& file, std::size_t row, const std::string& what)
      : Error(describe(file, row, what)), file_(file), row_(row) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t row() const noexcept { return row_; }

 private:
  static std::string describe(const std::string& file, std::size_t row, const std::string& what) {
    std::string out = file;
    if (row > 0) out += ":" + std::to_string(row);
    return out + ": " + what;
  }
  std::string file_;
  std::size_t row_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A raw model response that maps to no label (or to more than one).
class NoMatchError : public Error {
 public:
  explicit NoMatchError(std::string raw)
      : Error("answer does not match the answer space: \"" + raw + "\""), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Transport failure that survived every retry, or a non-retryable backend rejection.
class BackendError : public Error {
 public:
  using Error::Error;
};

class EmptyCellError : public Error {
 public:
  using Error::Error;
};

class SettingError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsv
