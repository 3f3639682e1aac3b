#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qfrac {

// Eigensolver or propagator violated its accuracy contract.
class NumericalError : public std::runtime_error {
  public:
    NumericalError(const std::string& what, double worst_residual)
        : std::runtime_error(what), worst_residual_(worst_residual) {}

    double worst_residual() const noexcept { return worst_residual_; }

  private:
    double worst_residual_;
};

// Invalid experiment configuration; carries the offending field path.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

// Refusal to run a dense decomposition beyond the site budget.
class ResourceGuardError : public std::runtime_error {
  public:
    ResourceGuardError(std::size_t sites, std::size_t limit)
        : std::runtime_error("lattice has " + std::to_string(sites) +
                             " sites, exceeding the dense-solver budget of " +
                             std::to_string(limit) +
                             "; reduce the generation or side length"),
          sites_(sites) {}

    std::size_t sites() const noexcept { return sites_; }

  private:
    std::size_t sites_;
};

}  // namespace qfrac
