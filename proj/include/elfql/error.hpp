#pragma once

#include <stdexcept>
#include <string>

namespace elfql {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input does not start with the ELF magic bytes.
class NotElfError : public Error {
public:
    explicit NotElfError(const std::string &what) : Error(what) {}
};

/// Structurally invalid ELF content. `reason()` is a short description of the
/// first violation found.
class MalformedError : public Error {
public:
    explicit MalformedError(std::string reason)
        : Error("malformed ELF: " + reason), reason_(std::move(reason)) {}

    const std::string &reason() const noexcept { return reason_; }

private:
    std::string reason_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class SqlError : public Error {
public:
    using Error::Error;
};

class WriteRejected : public SqlError {
public:
    using SqlError::SqlError;
};

class RegistrationFailure : public Error {
public:
    using Error::Error;
};

class ExportAborted : public Error {
public:
    using Error::Error;
};

class UnknownPath : public Error {
public:
    explicit UnknownPath(const std::string &path) : Error("path not registered: " + path) {}
};

} // namespace elfql
