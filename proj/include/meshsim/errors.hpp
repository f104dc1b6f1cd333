#pragma once

#include <stdexcept>
#include <string>

namespace meshsim {

/// Coarse error class, used by the CLI to choose an exit status.
enum class ErrorKind {
  Config,      // bad or inconsistent configuration (exit 2)
  Domain,      // input outside a model's validity domain (exit 3)
  Divergence,  // numerical blow-up during training (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define MESHSIM_DEFINE_ERROR(Name, Kind)                                         \
  class Name : public Error {                                                    \
   public:                                                                       \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}     \
  };

// propagation
MESHSIM_DEFINE_ERROR(DomainError, Domain)
MESHSIM_DEFINE_ERROR(NonPositiveInput, Domain)
MESHSIM_DEFINE_ERROR(OrderError, Domain)
// mesh
MESHSIM_DEFINE_ERROR(PlacementInfeasible, Domain)
MESHSIM_DEFINE_ERROR(CoLocated, Domain)
MESHSIM_DEFINE_ERROR(KOutOfRange, Domain)
MESHSIM_DEFINE_ERROR(ContractViolation, Domain)
// powerctl
MESHSIM_DEFINE_ERROR(InvalidAction, Domain)
MESHSIM_DEFINE_ERROR(TooLarge, Domain)
MESHSIM_DEFINE_ERROR(DivergenceDetected, Divergence)
// forecast
MESHSIM_DEFINE_ERROR(InsufficientData, Domain)
MESHSIM_DEFINE_ERROR(WindowMismatch, Domain)
// traffic
MESHSIM_DEFINE_ERROR(InvalidScenario, Domain)
// sustain
MESHSIM_DEFINE_ERROR(ZeroDenominator, Domain)
MESHSIM_DEFINE_ERROR(IncompleteLedger, Domain)
// engine
MESHSIM_DEFINE_ERROR(ConfigMismatch, Config)
MESHSIM_DEFINE_ERROR(UntrainedPolicy, Config)
MESHSIM_DEFINE_ERROR(CoverageUnmet, Domain)
// cli / io
MESHSIM_DEFINE_ERROR(ConfigError, Config)
MESHSIM_DEFINE_ERROR(FormatError, Config)

#undef MESHSIM_DEFINE_ERROR

}  // namespace meshsim
