#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace peacelens {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Corpus / config input that cannot be parsed. line is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DimensionMismatchError : public Error {
public:
    DimensionMismatchError(std::size_t expected, std::size_t actual)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(actual)),
          expected_(expected), actual_(actual) {}
    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

class EmbeddingError : public Error {
public:
    using Error::Error;
};

// Non-2xx (or transport failure, status 0) from a remote provider after retries.
class HttpError : public Error {
public:
    HttpError(int status, std::string body_excerpt)
        : Error("HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status), body_excerpt_(std::move(body_excerpt)) {}
    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

class BatchError : public Error {
public:
    BatchError(std::vector<std::size_t> failed, const std::string& first_message)
        : Error(describe(failed, first_message)), failed_(std::move(failed)) {}
    const std::vector<std::size_t>& failed_indices() const noexcept { return failed_; }

private:
    static std::string describe(const std::vector<std::size_t>& failed, const std::string& first) {
        std::string s = "embedding batch failed for indices {";
        for (std::size_t i = 0; i < failed.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(failed[i]);
        }
        return s + "}: " + first;
    }
    std::vector<std::size_t> failed_;
};

// Collection file errors. Each failure mode has its own type.
class StoreFormatError : public Error {
public:
    using Error::Error;
};
class BadMagicError : public StoreFormatError {
public:
    BadMagicError() : StoreFormatError("bad magic") {}
};
class VersionMismatchError : public StoreFormatError {
public:
    explicit VersionMismatchError(unsigned version)
        : StoreFormatError("version mismatch: file version " + std::to_string(version)) {}
};
class TruncatedFileError : public StoreFormatError {
public:
    TruncatedFileError() : StoreFormatError("truncated file") {}
};
class CorruptHeaderError : public StoreFormatError {
public:
    explicit CorruptHeaderError(const std::string& what) : StoreFormatError("corrupt header: " + what) {}
};

class DegenerateRangeError : public Error {
public:
    DegenerateRangeError() : Error("degenerate range") {}
};

// Wraps a failure inside one pipeline stage, prefixing the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace peacelens
