#pragma once

#include <stdexcept>
#include <string>

namespace fsig {

// Input data lies outside the lattice support [0,p)^n (or cannot be
// recentred into it).
class SupportError : public std::runtime_error {
 public:
  explicit SupportError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file contents or byte encodings.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// An estimator cannot produce a meaningful result from the given sample
// (degenerate likelihood, zero variance, under-populated bins, ...).
class DegenerateStatistics : public std::runtime_error {
 public:
  explicit DegenerateStatistics(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fsig
