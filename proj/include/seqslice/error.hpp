#pragma once

#include <stdexcept>
#include <string>

namespace seqslice {

/// Base for every error raised by the library. `user_error()` separates bad
/// input (criterion, file contents, flags) from internal failures; the CLI maps
/// the former to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, bool user_error = false)
      : std::runtime_error(what), user_error_(user_error) {}
  bool user_error() const noexcept { return user_error_; }

 private:
  bool user_error_;
};

#define SEQSLICE_DEFINE_ERROR(Name, is_user)                      \
  class Name : public ::seqslice::Error {                         \
   public:                                                        \
    explicit Name(const std::string& what) : Error(what, is_user) {} \
  }

}  // namespace seqslice
