#pragma once

#include <stdexcept>
#include <string>

namespace lsqopt {

// Invalid sizes, incompatible options, bad flag combinations.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Inputs outside an operation's domain (zero matrix, zero row, d < 2, ...).
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Breakdown inside a numerical routine (non-convergence, non-finite values).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Cholesky pivot <= 0: the normal equations are numerically rank deficient.
class rank_error : public numerical_error {
 public:
  explicit rank_error(const std::string& what) : numerical_error(what) {}
};

// Iterate blew past the divergence guard.
class divergence_error : public numerical_error {
 public:
  explicit divergence_error(const std::string& what) : numerical_error(what) {}
};

// Malformed CSV / config-file input.
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// Too many failed trials in a battery.
class experiment_error : public std::runtime_error {
 public:
  explicit experiment_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lsqopt
