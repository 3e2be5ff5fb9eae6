#pragma once

#include <stdexcept>
#include <string>

namespace ifs_sync {

//! Two points or maps live on different manifolds.
class ManifoldMismatch : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! A parameter lies outside its admissible range.
class DomainError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! A numerical procedure failed (singular cocycle, no convergence, ...).
class ComputationError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace ifs_sync
