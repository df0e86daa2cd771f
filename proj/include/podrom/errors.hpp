#pragma once

#include <stdexcept>
#include <string>

namespace podrom
{

/// Invalid input: bad configuration, violated precondition, malformed file.
class ValidationError : public std::invalid_argument
{
public:
  explicit ValidationError(const std::string &what)
    : std::invalid_argument(what)
  {}
};

/// A numerical stage failed at run time (singular system, divergence, ...).
class SolverError : public std::runtime_error
{
public:
  explicit SolverError(const std::string &what)
    : std::runtime_error(what)
  {}
};

} // namespace podrom
