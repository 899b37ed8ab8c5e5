#pragma once

#include <stdexcept>
#include <string>

namespace bft {

// Base class for everything thrown by the library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Structural misuse: mismatched frames, unknown variables, bad domains.
class frame_error : public error {
public:
    explicit frame_error(const std::string& what) : error(what) {}
};

// Violated value invariants or operation preconditions.
class validation_error : public error {
public:
    explicit validation_error(const std::string& what) : error(what) {}
};

// Total conflict / annihilation: a combination or process left nothing.
// Kept separate so callers can tell "impossible evidence" from bad input.
class conflict_error : public error {
public:
    explicit conflict_error(const std::string& what) : error(what) {}
};

// Exact operation requested beyond the configured size cap.
class cap_error : public error {
public:
    explicit cap_error(const std::string& what) : error(what) {}
};

// Text format problems; carries a 1-based line number when known.
class parse_error : public error {
public:
    parse_error(std::size_t line, const std::string& what)
        : error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    explicit parse_error(const std::string& what) : parse_error(0, what) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class io_error : public error {
public:
    explicit io_error(const std::string& what) : error(what) {}
};

} // namespace bft
