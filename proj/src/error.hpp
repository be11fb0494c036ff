#pragma once

#include <stdexcept>
#include <string>

namespace ps {

/// Base class for all library errors; `code()` maps onto the CLI exit status.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg, int code) : std::runtime_error(msg), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg, 2) {}
};

class GeometryError : public Error {
public:
    explicit GeometryError(const std::string& msg) : Error(msg, 3) {}
};

class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg, 4) {}
};

void log_warning(const std::string& msg);
void set_quiet(bool quiet);

}  // namespace ps
