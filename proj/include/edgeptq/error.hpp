#pragma once

#include <stdexcept>
#include <string>

namespace edgeptq {

enum class ErrorKind {
    Config,
    Format,
    Data,
    Io,
    Shape,
    Conditioning,
    UndefinedStatistic,
};

/// Base class for every error raised by the toolkit. The kind maps 1:1 onto
/// the status codes of the C API.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

class ConditioningError : public Error {
public:
    explicit ConditioningError(const std::string& what) : Error(ErrorKind::Conditioning, what) {}
};

class UndefinedStatisticError : public Error {
public:
    explicit UndefinedStatisticError(const std::string& what)
        : Error(ErrorKind::UndefinedStatistic, what) {}
};

}  // namespace edgeptq
