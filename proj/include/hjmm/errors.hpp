#pragma once

#include <stdexcept>
#include <string>

namespace hjmm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// non-finite samples or a curve living on the wrong grid
struct InvalidCurve : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

// argument outside an admissible interval (cumulant strip, negative shift, ...)
struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& msg, int line = 0, std::string key = {})
      : Error(format(msg, line, key)), line(line), key(std::move(key)) {}
  int line;
  std::string key;

 private:
  static std::string format(const std::string& msg, int line, const std::string& key) {
    std::string s = "config";
    if (line > 0) s += " line " + std::to_string(line);
    if (!key.empty()) s += " [" + key + "]";
    return s + ": " + msg;
  }
};

// Monte Carlo statistic requested on too few paths
struct UnderpoweredError : Error {
  using Error::Error;
};

struct PathAbort : Error {
  using Error::Error;
};

// realization requested for a model that failed certification
struct NotCertified : Error {
  using Error::Error;
};

struct Unsupported : Error {
  using Error::Error;
};

}  // namespace hjmm
