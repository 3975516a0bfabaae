#pragma once

#include <stdexcept>
#include <string>

namespace sci {

// Malformed or inconsistent data: bad file headers, dimension mismatches
// between files, truncated payloads.  CLI maps this to exit code 2.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Parameters outside a result's hypotheses (e.g. a bound that needs a
// positive smallest eigenvalue).  CLI maps this to exit code 3.
class not_applicable : public std::runtime_error {
 public:
  explicit not_applicable(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sci
